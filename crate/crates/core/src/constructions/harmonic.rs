//! Over `ℓ1`: the harmonic function with unbounded norm, and a function of
//! norm at most one kept at distance `≥ 1/4` from the lattice generated by
//! the first coordinates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{lower_bound, HFunc};
use crate::spaces::{DualTuple, Functional, Space};
use crate::terms::Term;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub n: usize,
    pub lower: f64,
    /// `Σ_{k ≤ N} 1/k` as a reduced fraction.
    pub expected: String,
    pub expected_f64: f64,
    #[serde(serialize_with = "super::tuple_coords")]
    pub certificate: DualTuple,
}

pub fn harmonic_number(n: usize) -> BigRational {
    (1..=n).fold(BigRational::zero(), |acc, k| acc + BigRational::new(BigInt::from(1), BigInt::from(k)))
}

/// `f(x*) = max_{a ≤ N} |x*_a|/a` on the certificate `{e₁*, …, e_N*}`.
pub fn harmonic_certificate(n: usize) -> Result<HarmonicReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let space = Space::l1(n);
    let certificate = DualTuple::new((0..n).map(|a| space.unit_functional(a)).collect())?;
    let lower = lower_bound(&HFunc::Harmonic(n), &certificate)?;
    let exact = harmonic_number(n);
    let expected_f64 = exact.to_f64().unwrap_or(f64::NAN);
    Ok(HarmonicReport { n, lower, expected: exact.to_string(), expected_f64, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonmemberReport {
    pub n: usize,
    pub bound: f64,
    /// `½ Σ_{k ≤ n} 1/(n+k)`.
    pub guaranteed: f64,
    pub sum_x: f64,
    pub sum_y: f64,
    pub max_cancellation_error: f64,
    #[serde(serialize_with = "super::tuple_coords")]
    pub xs: DualTuple,
    #[serde(serialize_with = "super::tuple_coords")]
    pub ys: DualTuple,
}

/// Lifts `g` to `ℓ1^{2n}`, checking that only the first `n` coordinates occur.
fn lift(g: &Term, n: usize) -> Result<Term> {
    let space = g.check_space()?;
    if !space.p().is_one() {
        return Err(Error::InvalidParameter(format!("g must live over l1, got {space}")));
    }
    let big = Space::l1(2 * n);
    if space.dim() == n {
        return Ok(g.map_gens(&|v| {
            let mut c = v.coords().to_vec();
            c.resize(2 * n, 0.0);
            big.vector(c).expect("dimension")
        }));
    }
    if space.dim() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, got: space.dim() });
    }
    if let Some(v) = g.generators().iter().find(|v| v.coords()[n..].iter().any(|&x| x != 0.0)) {
        return Err(Error::InvalidParameter(format!("g uses a coordinate beyond the first {n}: {:?}", v.coords())));
    }
    Ok(g.clone())
}

/// `f = minsup(2n)` against `g` on the tuples `x_k* = e₁*/n + e_{n+k}*` and
/// `y_k* = e₁*/n`; their first `n` coordinates agree, so `g` cancels.
pub fn nonmember_distance(n: usize, g: &Term) -> Result<NonmemberReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let g = lift(g, n)?;
    let space = Space::l1(2 * n);
    let f = HFunc::MinSup(2 * n);
    let make = |spike: Option<usize>| -> Functional {
        let mut c = vec![0.0; 2 * n];
        c[0] = 1.0 / n as f64;
        if let Some(a) = spike {
            c[a] = 1.0;
        }
        space.functional(c).expect("dimension")
    };
    let xs: Vec<Functional> = (0..n).map(|k| make(Some(n + k))).collect();
    let ys: Vec<Functional> = (0..n).map(|_| make(None)).collect();
    let mut cancel: f64 = 0.0;
    let (mut sum_x, mut sum_y) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (gx, gy) = (g.eval_coords(x.coords()), g.eval_coords(y.coords()));
        cancel = cancel.max((gx - gy).abs());
        sum_x += (f.eval_coords(x.coords()) - gx).abs();
        sum_y += (f.eval_coords(y.coords()) - gy).abs();
    }
    if cancel > 1e-12 {
        return Err(Error::Invariant(format!("g differs on the paired functionals by {cancel}")));
    }
    let guaranteed = 0.5 * (1..=n).map(|k| 1.0 / (n + k) as f64).sum::<f64>();
    let bound = sum_x.max(sum_y);
    if bound < guaranteed - 1e-12 {
        return Err(Error::Invariant(format!("distance bound {bound} below {guaranteed}")));
    }
    Ok(NonmemberReport {
        n,
        bound,
        guaranteed,
        sum_x,
        sum_y,
        max_cancellation_error: cancel,
        xs: DualTuple::new(xs)?,
        ys: DualTuple::new(ys)?,
    })
}
