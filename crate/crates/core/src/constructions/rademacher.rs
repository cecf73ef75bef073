//! `ℓ1(Γ)` inside `FBL[ℓp(Γ)]`, `1 < p ≤ 2`, through Rademacher functions:
//! `T_A e_γ = r_γ` for `γ ∈ A`, `ξ_A* = ∫ T̂_A(·)`, and
//! `2‖Σ a_γ|δ_{e_γ}|‖ ≥ Σ|a_γ|`.
//!
//! Coordinates are 0-based: `e_γ` with `γ < Γ` is paired with `r_{γ+1}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homext::{extend, LinOp};
use crate::norm::{lower_bound, search_lower, upper_bound_term, HFunc, SearchConfig};
use crate::sample;
use crate::spaces::{lp_norm, DualTuple, Exponent, Functional, Space, DEFAULT_SIGN_CAP};
use crate::terms::Term;

use super::dyadic::DyadicGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherReport {
    pub gamma: usize,
    pub a_set: Vec<usize>,
    /// `⟨ξ_A*, |δ_{e_γ}|⟩` for every `γ`.
    pub pairings: Vec<f64>,
    /// Pairings are exactly `1` on `A` and `0` off it.
    pub dichotomy: bool,
    /// Largest sampled `‖T_A x‖₁ / ‖x‖_p`.
    pub op_norm_sampled: f64,
    pub coefficients: Vec<f64>,
    pub xi_plus: f64,
    pub xi_minus: f64,
    /// `(ξ_{B₊}* − ξ_{B₋}*)(Σ a_γ|δ_{e_γ}|) / 2`.
    pub certified: f64,
    /// `Σ|a_γ| / 2`.
    pub expected: f64,
    /// Lower bound from the explicit Rademacher sign tuple on the heavier side,
    /// when that tuple fits under the sign cap.
    pub tuple_lower: Option<f64>,
    #[serde(serialize_with = "option_coords")]
    pub tuple: Option<DualTuple>,
    pub search_lower: f64,
    pub upper: f64,
    /// `certified ≤ upper` and `search_lower ≤ upper`.
    pub consistent: bool,
    /// `search_lower ≥ certified`.
    pub search_reaches: bool,
}

fn option_coords<S: serde::Serializer>(t: &Option<DualTuple>, s: S) -> std::result::Result<S::Ok, S::Error> {
    t.as_ref().map(|t| t.coords()).serialize(s)
}

/// `T_A : ℓp^Γ → L1` on the grid.
pub fn rademacher_operator(space: Space, grid: DyadicGrid, a_set: &[usize]) -> Result<LinOp> {
    let gamma = space.dim();
    if gamma as u32 > grid.resolution() {
        return Err(Error::InvalidParameter(format!("Γ = {gamma} exceeds the grid resolution {}", grid.resolution())));
    }
    if let Some(&g) = a_set.iter().find(|&&g| g >= gamma) {
        return Err(Error::InvalidParameter(format!("index {g} outside 0..{gamma}")));
    }
    let w = grid.weight();
    let mut matrix = vec![vec![0.0; gamma]; grid.cells()];
    for &g in a_set {
        let r = grid.rademacher(g as u32 + 1)?;
        for (row, v) in matrix.iter_mut().zip(r) {
            row[g] = w * v;
        }
    }
    LinOp::new(matrix, space, grid.space())
}

/// `Σ a_γ |δ_{e_γ}|`.
pub fn abs_sum(space: Space, a: &[f64]) -> Result<Term> {
    if a.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: a.len() });
    }
    let parts = a.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(g, c)| Term::scale(*c, Term::abs(Term::Gen(space.unit_vector(g)))));
    Ok(Term::sum_all(parts).unwrap_or_else(|| Term::zero(space)))
}

/// `ξ_A*(t) = ∫ T̂_A t dμ`.
pub fn xi(op: &LinOp, t: &Term) -> Result<f64> {
    Ok(extend(op, t)?.value.iter().sum())
}

/// `{2^{1−|A|} s : s ∈ {±1}^A, s_first = +1}` over `space`.
fn sign_tuple(space: Space, a_set: &[usize]) -> Option<Result<DualTuple>> {
    let m = a_set.len();
    if m == 0 || 1usize << (m - 1) > DEFAULT_SIGN_CAP {
        return None;
    }
    let scale = 1.0 / (1u64 << (m - 1)) as f64;
    let fs: Vec<Functional> = (0..1usize << (m - 1))
        .map(|mask| {
            let mut c = vec![0.0; space.dim()];
            for (i, &g) in a_set.iter().enumerate() {
                c[g] = if i > 0 && (mask >> (i - 1)) & 1 == 1 { -scale } else { scale };
            }
            space.functional(c).expect("dimension")
        })
        .collect();
    Some(DualTuple::new(fs))
}

pub fn rademacher_embedding(
    gamma: usize,
    p: Exponent,
    grid: DyadicGrid,
    a_set: &[usize],
    a: &[f64],
    cfg: &SearchConfig,
) -> Result<RademacherReport> {
    if p.is_one() || p.to_f64() > 2.0 {
        return Err(Error::InvalidParameter(format!("p must lie in (1, 2], got {p}")));
    }
    if a_set.len() > gamma {
        return Err(Error::InvalidParameter(format!("|A| = {} exceeds Γ = {gamma}", a_set.len())));
    }
    let space = Space::new(gamma, p)?;
    let t_a = rademacher_operator(space, grid, a_set)?;
    let pairings: Vec<f64> =
        (0..gamma).map(|g| xi(&t_a, &Term::abs(Term::Gen(space.unit_vector(g))))).collect::<Result<_>>()?;
    let dichotomy = pairings.iter().enumerate().all(|(g, &v)| v == if a_set.contains(&g) { 1.0 } else { 0.0 });

    let mut rng = sample::rng(cfg.seed);
    let full: Vec<usize> = (0..gamma).collect();
    let t_full = rademacher_operator(space, grid, &full)?;
    let mut op_norm_sampled: f64 = 0.0;
    for _ in 0..500 {
        let x = if rng.random_bool(0.5) { sample::sphere_point(&mut rng, gamma, p) } else { sample::gaussian(&mut rng, gamma) };
        let r = lp_norm(&x, p);
        if r > 0.0 {
            op_norm_sampled = op_norm_sampled.max(lp_norm(&t_full.apply_coords(&x), Exponent::one()) / r);
        }
    }

    let f = abs_sum(space, a)?;
    let plus: Vec<usize> = (0..gamma).filter(|&g| a[g] > 0.0).collect();
    let minus: Vec<usize> = (0..gamma).filter(|&g| a[g] < 0.0).collect();
    let xi_plus = xi(&rademacher_operator(space, grid, &plus)?, &f)?;
    let xi_minus = xi(&rademacher_operator(space, grid, &minus)?, &f)?;
    let certified = (xi_plus - xi_minus) / 2.0;
    let expected = a.iter().map(|c| c.abs()).sum::<f64>() / 2.0;

    let heavy = if xi_plus >= -xi_minus { &plus } else { &minus };
    let tuple = sign_tuple(space, heavy).transpose()?;
    let tuple_lower = tuple.as_ref().map(|t| lower_bound(&HFunc::Term(f.clone()), t)).transpose()?;

    let est = search_lower(&HFunc::Term(f.clone()), space, cfg)?;
    let upper = upper_bound_term(&f);
    let tol = 1e-9 * upper.max(1.0);
    let consistent = certified <= upper + tol && est.lower <= upper + tol;
    let search_reaches = est.lower >= certified - tol;
    Ok(RademacherReport {
        gamma,
        a_set: a_set.to_vec(),
        pairings,
        dichotomy,
        op_norm_sampled,
        coefficients: a.to_vec(),
        xi_plus,
        xi_minus,
        certified,
        expected,
        tuple_lower,
        tuple,
        search_lower: est.lower,
        upper,
        consistent,
        search_reaches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn p(n: i64, d: i64) -> Exponent {
        Exponent::new(Rational64::new(n, d)).unwrap()
    }

    #[test]
    fn pairings_dichotomy() {
        let grid = DyadicGrid::new(5).unwrap();
        let s = Space::l2(4);
        let cfg = SearchConfig::new(s).restarts(1).evals(1_000);
        let r = rademacher_embedding(4, Exponent::two(), grid, &[0, 2], &[1.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(r.pairings, vec![1.0, 0.0, 1.0, 0.0]);
        assert!(r.dichotomy);
        assert!(r.op_norm_sampled <= 1.0 + 1e-12);
        assert!(rademacher_embedding(6, Exponent::two(), grid, &[0], &[1.0; 6], &cfg).is_err());
        assert!(rademacher_embedding(2, Exponent::one(), grid, &[0], &[1.0; 2], &cfg).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let grid = DyadicGrid::new(4).unwrap();
        let s = Space::l2(4);
        let cfg = SearchConfig::new(s);
        let r = rademacher_embedding(4, Exponent::two(), grid, &[], &[1.0, -2.0, 3.0, -4.0], &cfg).unwrap();
        assert_eq!(r.certified, 5.0);
        assert_eq!(r.expected, 5.0);
        assert!(r.consistent && r.search_reaches);
        let t = r.tuple.as_ref().unwrap();
        assert!(t.admissibility() <= 1.0 + 1e-12);
        assert!(r.tuple_lower.unwrap() >= 5.0 - 1e-12);
        let r = rademacher_embedding(4, p(3, 2), grid, &[], &[1.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(r.certified, 0.5);
        assert!((r.search_lower - 1.0).abs() < 1e-9);
    }
}
