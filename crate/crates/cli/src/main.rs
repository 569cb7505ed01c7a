//! `perclab` command-line tool.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perclab::manifest::RunManifest;

pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAP: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "perclab", version, about = "Terminal-partition laws of small random graphs, with exact certificates")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: <out>.manifest.json, or stderr when printing to stdout).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Partition distribution of a bond, site or hyperedge model.
    Dist {
        model: PathBuf,
        #[arg(long, default_value = "exact", value_parser = ["exact", "mc"])]
        mode: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Rewrite a model as a site or hyperedge model that simulates it.
    Transform {
        model: PathBuf,
        #[arg(long, value_parser = ["site", "hyper"])]
        to: String,
        /// Also compare both distributions exactly.
        #[arg(long)]
        verify: bool,
    },
    /// Check swap schedules, the key observation and the final inequality on a graph.
    SwapVerify {
        model: PathBuf,
        /// Schedules to check (default: all built-ins).
        #[arg(long = "schedule")]
        schedules: Vec<String>,
        /// Include the joint law table.
        #[arg(long)]
        table: bool,
    },
    /// Enumerate feasible 8-tuples and write the bitset.
    TupleEnum {
        /// Fixed coordinates, e.g. "J1=a|b|c,J3=ab|c".
        #[arg(long)]
        slice: Option<String>,
        #[arg(long)]
        bits: PathBuf,
    },
    /// Grid scan of the marginal LP.
    LpScan {
        /// Bitset from a full tuple-enum run (enumerated on the fly if absent).
        #[arg(long)]
        bits: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        grid: u32,
        /// Write every infeasible point and its certificate here.
        #[arg(long)]
        certs: Option<PathBuf>,
        /// Skip the symmetric-slice thresholds.
        #[arg(long)]
        no_threshold: bool,
    },
    /// Solve or verify the marginal LP at one distribution, or re-check a stored scan.
    Certify {
        #[arg(long)]
        bits: Option<PathBuf>,
        /// Distribution JSON (as written by `dist`).
        #[arg(long)]
        rho: Option<PathBuf>,
        /// Distribution inline: abc, ab|c, ac|b, a|bc, a|b|c.
        #[arg(long, conflicts_with = "rho")]
        rho_values: Option<String>,
        /// Certificate to verify instead of solving.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Scan file from `lp-scan --certs` to re-check.
        #[arg(long, conflicts_with_all = ["rho", "rho_values", "certificate"])]
        scan: Option<PathBuf>,
        /// Where to store a certificate when the LP is infeasible.
        #[arg(long)]
        save_certificate: Option<PathBuf>,
    },
    /// Maximize min(P(abc), P(a|b|c)) over a parametric family.
    Optimize {
        /// Built-in family name or a family JSON file.
        family: String,
        #[command(flatten)]
        search: Search,
    },
    /// Constrained maximization probing a conjecture.
    Probe {
        family: String,
        #[arg(long, default_value = "abc-minus-product")]
        functional: String,
        /// Constrained event, a partition name or an event expression.
        #[arg(long, default_value = "ab|c")]
        constraint: String,
        #[arg(long = "delta", default_values_t = [0.01])]
        deltas: Vec<f64>,
        #[command(flatten)]
        search: Search,
    },
    /// Run the inequality suite on a model, a distribution, or random graphs.
    Check {
        model: Option<PathBuf>,
        #[arg(long, conflicts_with = "model")]
        rho: Option<PathBuf>,
        /// Number of random graphs.
        #[arg(long, conflicts_with_all = ["model", "rho"])]
        random: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Terminal count for random graphs.
        #[arg(long, default_value_t = 3)]
        terminals: usize,
    },
    /// Rerun the job a manifest describes and compare outputs.
    Replay { manifest: PathBuf },
}

#[derive(clap::Args, Debug, Clone)]
pub struct Search {
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Evaluations per start.
    #[arg(long, default_value_t = 4000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<perclab::Error>() {
        Some(perclab::Error::CapExceeded { .. }) => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

fn emit(cli: &Cli, args: Vec<String>, run: commands::Run) -> anyhow::Result<()> {
    let text = commands::render(&run.json);
    let workers = cli.workers.unwrap_or_else(perclab::par::default_workers);
    let mut m = RunManifest::new(commands::name(&cli.cmd), args, run.seed, workers);
    for p in &run.inputs {
        m.add_input(p)?;
    }
    for (p, bytes) in &run.side {
        std::fs::write(p, bytes)?;
        m.add_side_output(p, bytes);
    }
    m.set_output(text.as_bytes());
    match &cli.out {
        Some(p) => std::fs::write(p, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    let manifest_path = cli.manifest.clone().or_else(|| cli.out.as_ref().map(|p| PathBuf::from(format!("{}.manifest.json", p.display()))));
    match manifest_path {
        Some(p) => std::fs::write(p, m.to_json_string())?,
        None => eprint!("{}", m.to_json_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = commands::run(&cli).and_then(|run| {
        let violation = run.violation;
        emit(&cli, args, run).map(|_| violation)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(perclab::Error::CapExceeded { .. }) = e.downcast_ref::<perclab::Error>() {
                eprintln!("hint: set {}=N to raise the exact-enumeration cap", perclab::engine::CAP_ENV);
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
