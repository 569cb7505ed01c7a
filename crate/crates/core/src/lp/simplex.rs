//! Phase-one revised simplex in exact rational arithmetic.
//!
//! Solves `A q = b, q >= 0` for a 0/1 matrix whose columns are given as row
//! lists. Artificial variables start in the basis; once one leaves it never
//! re-enters. Pricing is Bland's rule (lowest eligible index, lowest basic
//! index on ratio ties), so the method cannot cycle.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

pub(crate) enum Phase1 {
    /// Basic solution: `(column, value)` for every positive structural variable.
    Feasible(Vec<(usize, Rational)>),
    /// Duals `y` with `y . A_j <= 0` for all columns and `y . b > 0`.
    Infeasible(Vec<Rational>),
}

pub(crate) fn phase1(rows: usize, cols: &[Vec<usize>], b: &[Rational]) -> Phase1 {
    let m = rows;
    let n = cols.len();
    assert_eq!(b.len(), m);
    assert!(b.iter().all(|x| !x.is_negative()));
    // Basis position i holds variable basis[i]; ids >= n are artificials.
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut is_basic = vec![false; n];
    let mut binv: Vec<Vec<Rational>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let mut xb: Vec<Rational> = b.to_vec();
    loop {
        // Phase-one duals: sum of B^-1 rows whose basic variable is artificial.
        let mut y = vec![Rational::zero(); m];
        for (i, &v) in basis.iter().enumerate() {
            if v >= n {
                for (yk, bk) in y.iter_mut().zip(&binv[i]) {
                    *yk += bk;
                }
            }
        }
        let entering = (0..n).find(|&j| {
            if is_basic[j] {
                return false;
            }
            let dot: Rational = cols[j].iter().map(|&r| &y[r]).sum();
            dot.is_positive()
        });
        let Some(q) = entering else {
            let objective: Rational = basis.iter().zip(&xb).filter(|(&v, _)| v >= n).map(|(_, x)| x).sum();
            let out = if objective.is_zero() {
                let mut w: Vec<(usize, Rational)> =
                    basis.iter().zip(&xb).filter(|(&v, x)| v < n && !x.is_zero()).map(|(&v, x)| (v, x.clone())).collect();
                w.sort_by_key(|(v, _)| *v);
                Phase1::Feasible(w)
            } else {
                Phase1::Infeasible(y)
            };
            return out;
        };
        let alpha: Vec<Rational> = (0..m).map(|i| cols[q].iter().map(|&r| &binv[i][r]).sum()).collect();
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !alpha[i].is_positive() {
                continue;
            }
            let ratio = &xb[i] / &alpha[i];
            let better = match &leave {
                None => true,
                Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (r, _) = leave.expect("phase one is bounded");
        let pivot = alpha[r].clone();
        let prow: Vec<Rational> = binv[r].iter().map(|x| x / &pivot).collect();
        let px = &xb[r] / &pivot;
        for i in 0..m {
            if i == r || alpha[i].is_zero() {
                continue;
            }
            let f = &alpha[i];
            for (x, p) in binv[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= f * p;
                }
            }
            xb[i] -= f * &px;
        }
        binv[r] = prow;
        xb[r] = px;
        if basis[r] < n {
            is_basic[basis[r]] = false;
        }
        basis[r] = q;
        is_basic[q] = true;
    }
}
