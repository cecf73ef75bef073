//! Independent re-derivation of lower bounds from certificates.
//!
//! Admissibility is recomputed by a Gray-code walk over sign patterns
//! (or column sums for `p = 1`), and the function is evaluated through its
//! difference-of-joins form whenever that fits the rewrite budget.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::HFunc;
use crate::spaces::{lp_norm, Space};
use crate::terms::DiffOfJoins;

/// Largest tuple (or cube dimension for `p = ∞`) the Gray-code walk accepts.
pub const VERIFY_CAP: usize = 24;
const VERIFY_BUDGET: usize = 4_096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub admissibility: f64,
    /// `Σ_k |f(x_k*)|`.
    pub value: f64,
    /// `value / max(1, admissibility)`.
    pub lower: f64,
    pub claimed: f64,
    /// `|lower − claimed| ≤ 1e-9·max(1, |claimed|)`.
    pub agrees: bool,
    pub evaluation: &'static str,
}

/// `sup_{‖x‖_p ≤ 1} Σ_k |⟨x_k*, x⟩|`.
pub fn admissibility(rows: &[Vec<f64>], space: Space) -> Result<f64> {
    let n = space.dim();
    if rows.is_empty() {
        return Err(Error::EmptyTuple);
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: r.len() });
    }
    if space.p().is_one() {
        return Ok((0..n).map(|a| rows.iter().map(|r| r[a].abs()).sum::<f64>()).fold(0.0, f64::max));
    }
    if space.p().is_infinite() && n < rows.len() {
        if n > VERIFY_CAP {
            return Err(Error::TupleTooLong { len: n, cap: VERIFY_CAP });
        }
        let mut x = vec![1.0; n];
        let mut best = rows.iter().map(|r| r.iter().sum::<f64>().abs()).sum::<f64>();
        for k in 1..1usize << n.saturating_sub(1) {
            let bit = k.trailing_zeros() as usize;
            x[bit] = -x[bit];
            let v: f64 = rows.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
            best = best.max(v);
        }
        return Ok(best);
    }
    let m = rows.len();
    if m > VERIFY_CAP {
        return Err(Error::TupleTooLong { len: m, cap: VERIFY_CAP });
    }
    let q = space.q();
    let mut combo: Vec<f64> = (0..n).map(|a| rows.iter().map(|r| r[a]).sum()).collect();
    let mut signs = vec![1.0; m];
    let mut best = lp_norm(&combo, q);
    for k in 1..1usize << m.saturating_sub(1) {
        let bit = k.trailing_zeros() as usize;
        signs[bit] = -signs[bit];
        for (c, x) in combo.iter_mut().zip(&rows[bit]) {
            *c += 2.0 * signs[bit] * x;
        }
        best = best.max(lp_norm(&combo, q));
    }
    Ok(best)
}

pub fn verify_certificate(f: &HFunc, space: Space, rows: &[Vec<f64>], claimed: f64) -> Result<Verification> {
    f.validate(space)?;
    let adm = admissibility(rows, space)?;
    let canonical = f.as_term(space).ok().and_then(|t| DiffOfJoins::from_term(&t, VERIFY_BUDGET).ok());
    let (value, evaluation) = match &canonical {
        Some(d) => (rows.iter().map(|r| d.eval_coords(r).abs()).sum::<f64>(), "canonical"),
        None => (rows.iter().map(|r| f.eval_coords(r).abs()).sum::<f64>(), "direct"),
    };
    let lower = value / adm.max(1.0);
    let agrees = (lower - claimed).abs() <= 1e-9 * claimed.abs().max(1.0);
    Ok(Verification { admissibility: adm, value, lower, claimed, agrees, evaluation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{search_lower, SearchConfig};
    use crate::sample;
    use crate::spaces::{self, Functional};

    #[test]
    fn agrees_with_primary_admissibility() {
        let mut rng = sample::rng(9);
        for space in [Space::l1(3), Space::l2(3), Space::linf(2), Space::linf(4)] {
            for m in 1..6 {
                let fs: Vec<Functional> = (0..m).map(|_| sample::gaussian_functional(&mut rng, space)).collect();
                let rows: Vec<Vec<f64>> = fs.iter().map(|f| f.coords().to_vec()).collect();
                let a = admissibility(&rows, space).unwrap();
                let b = spaces::admissibility(&fs).unwrap();
                assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{space} {a} {b}");
            }
        }
    }

    #[test]
    fn search_certificates_verify() {
        let mut rng = sample::rng(3);
        for space in [Space::l1(3), Space::l2(2)] {
            let t = sample::random_positive_term(&mut rng, space, 2);
            let f = HFunc::Term(t);
            let est = search_lower(&f, space, &SearchConfig::new(space).restarts(2)).unwrap();
            let v = verify_certificate(&f, space, &est.certificate.coords(), est.lower).unwrap();
            assert!(v.agrees, "{v:?}");
            assert_eq!(v.evaluation, "canonical");
        }
    }

    #[test]
    fn inadmissible_rows_are_scaled() {
        let s = Space::l1(2);
        let f = HFunc::GPhi(vec![1.0, 1.0]);
        let v = verify_certificate(&f, s, &[vec![1.0, 0.0], vec![1.0, 1.0]], 2.0).unwrap();
        assert_eq!(v.admissibility, 2.0);
        assert_eq!(v.lower, 1.5);
        assert!(!v.agrees);
    }
}
