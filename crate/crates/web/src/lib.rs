//! Browser bindings: exact partition laws, the inequality suite, and family
//! objectives. Every call takes and returns JSON text.

use perclab::alpha3::{self, ParamFamily};
use perclab::dist::PartitionDistribution;
use perclab::engine::{self, EngineOptions};
use perclab::inequalities;
use perclab::rational::{self, Rational};
use perclab::Model;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Exact enumeration in the browser stays small.
pub const WEB_CAP: usize = 16;

fn opts() -> EngineOptions {
    EngineOptions::exact().with_cap(WEB_CAP)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn distribution_json(model: &str) -> Result<String, String> {
    let m = Model::from_json_str(model).map_err(err)?;
    let d = engine::distribution(&m, &opts()).map_err(err)?;
    let mut v = d.to_json();
    if d.k() == 3 {
        v["inequalities"] = inequalities::evaluate_inequalities(&d).map_err(err)?.to_json();
    }
    Ok(v.to_string())
}

/// `values` is five comma-separated probabilities in the order abc, ab|c, ac|b, a|bc, a|b|c.
pub fn check_json(values: &str) -> Result<String, String> {
    let v: Vec<Rational> = values.split(',').map(|s| rational::parse(s.trim())).collect::<Result<_, _>>().map_err(err)?;
    let probs: [Rational; 5] = v.try_into().map_err(|v: Vec<Rational>| format!("need 5 values, got {}", v.len()))?;
    let d = PartitionDistribution::j3(probs).map_err(err)?;
    let rep = inequalities::evaluate_inequalities(&d).map_err(err)?;
    Ok(json!({"rho": d.to_json(), "report": rep.to_json()}).to_string())
}

pub fn objective_json(family: &str, theta: &str) -> Result<String, String> {
    let f = ParamFamily::builtin(family).map_err(err)?;
    let t: Vec<f64> = theta.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))).collect::<Result<_, _>>()?;
    let o = alpha3::objective(&f, &t, &opts()).map_err(err)?;
    Ok(json!({"family": f.to_json(), "objective": o.to_json()}).to_string())
}

#[wasm_bindgen]
pub fn distribution(model: &str) -> Result<String, JsError> {
    distribution_json(model).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn check(values: &str) -> Result<String, JsError> {
    check_json(values).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn objective(family: &str, theta: &str) -> Result<String, JsError> {
    objective_json(family, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn families() -> String {
    json!(alpha3::BUILTIN_FAMILIES).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_law() {
        let m = r#"{"vertices":["a","b","c"],"terminals":["a","b","c"],
          "edges":[{"u":"a","v":"b","p":"1/2"},{"u":"a","v":"c","p":"1/2"},{"u":"b","v":"c","p":"1/2"}]}"#;
        let v: serde_json::Value = serde_json::from_str(&distribution_json(m).unwrap()).unwrap();
        assert_eq!(v["probs"][0], "1/2");
        assert_eq!(v["inequalities"]["all_satisfied"], true);
        assert!(distribution_json("{").is_err());
    }

    #[test]
    fn check_values() {
        let v: serde_json::Value = serde_json::from_str(&check_json("1/2,0,0,0,1/2").unwrap()).unwrap();
        assert_eq!(v["report"]["all_satisfied"], false);
        assert!(check_json("1/2,1/2").is_err());
        assert!(check_json("1/2,1/2,1/2,0,0").is_err());
    }

    #[test]
    fn family_value() {
        let v: serde_json::Value = serde_json::from_str(&objective_json("triangle", "0.3473").unwrap()).unwrap();
        let x = v["objective"]["value_float"].as_f64().unwrap();
        assert!((x - 0.278).abs() < 1e-3, "{x}");
        assert!(objective_json("nope", "0.5").is_err());
    }
}
