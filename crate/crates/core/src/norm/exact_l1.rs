//! `‖f‖ = min { Σφ_a : φ ≥ 0, φ·|x*| ≥ f(x*) }` over `ℓ1ⁿ`, solved by
//! cutting planes. The primal packing LP over the working points gives an
//! admissible certificate; exact separation over each orthant of the dual
//! cube gives the matching upper bound.

use rand::Rng;
use serde::Serialize;

use super::search::cube_ascent;
use super::HFunc;
use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::par;
use crate::sample;
use crate::spaces::{normalize, DualTuple, Space};
use crate::terms::{DiffOfJoins, DEFAULT_JOIN_BUDGET};

/// Optimal packing `max Σ c_k λ_k` s.t. `Σ_k rows[a][k] λ_k ≤ 1`, `λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    pub value: f64,
    pub lambda: Vec<f64>,
    /// Row prices, `≥ 0`, with `Σ duals = value`.
    pub duals: Vec<f64>,
}

pub fn packing_lp(c: &[f64], rows: &[Vec<f64>]) -> Result<Packing> {
    let mut lp = LinearProgram::maximize(c.to_vec());
    for r in rows {
        if r.len() != c.len() {
            return Err(Error::Shape(format!("packing row of width {} for {} columns", r.len(), c.len())));
        }
        lp.le(r.clone(), 1.0);
    }
    let sol = lp.solve()?;
    Ok(Packing {
        value: sol.objective,
        lambda: sol.x.into_iter().map(|v| v.max(0.0)).collect(),
        duals: sol.duals.into_iter().map(|v| v.max(0.0)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactL1Config {
    /// Points per edge of the initial surface grid.
    pub grid: usize,
    pub tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for ExactL1Config {
    fn default() -> Self {
        ExactL1Config { grid: 4, tol: 1e-9, max_rounds: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactL1 {
    /// LP value; equals `lower` and is attained by `certificate`.
    pub value: f64,
    pub lower: f64,
    /// `Σφ + n·max_violation`: `g_{φ + viol}` dominates `f` everywhere.
    pub upper: f64,
    pub phi: Vec<f64>,
    #[serde(serialize_with = "tuple_coords")]
    pub certificate: DualTuple,
    pub rounds: usize,
    pub max_violation: f64,
    /// Whether the violation came from exact orthant LPs rather than search.
    pub exact_separation: bool,
}

fn tuple_coords<S: serde::Serializer>(t: &DualTuple, s: S) -> std::result::Result<S::Ok, S::Error> {
    t.coords().serialize(s)
}

/// Largest dimension accepted.
pub const MAX_DIM: usize = 10;
/// Orthant-LP work per round above which separation falls back to search.
const EXACT_SEPARATION_BUDGET: usize = 40_000;
const MAX_INITIAL_POINTS: usize = 2000;
const POINTS_PER_ROUND: usize = 8;

pub fn exact_norm_l1(f: &HFunc, space: Space, cfg: &ExactL1Config) -> Result<ExactL1> {
    f.validate(space)?;
    if !space.p().is_one() {
        return Err(Error::InvalidParameter(format!("exact norm needs an l1 space, got {space}")));
    }
    let n = space.dim();
    if n > MAX_DIM {
        return Err(Error::InvalidParameter(format!("exact norm supports dimension at most {MAX_DIM}, got {n}")));
    }
    let mut rng = sample::rng(cfg.seed);
    let mut points = initial_points(f, space, cfg.grid, &mut rng);
    check_positive(f, &points)?;
    for _ in 0..200 {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        check_positive(f, std::slice::from_ref(&u))?;
    }
    let doj = f
        .as_term(space)
        .ok()
        .and_then(|t| DiffOfJoins::from_term(&t, DEFAULT_JOIN_BUDGET).ok())
        .filter(|d| {
            let (p, m) = d.width();
            (1usize << n) * p * (m + n) <= EXACT_SEPARATION_BUDGET
        });
    let separator = match &doj {
        Some(d) => Separator::Exact(OrthantLps::new(d)),
        None => Separator::Search,
    };

    let mut rounds = 0;
    loop {
        rounds += 1;
        let c: Vec<f64> = points.iter().map(|u| f.eval_coords(u)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|a| points.iter().map(|u| u[a].abs()).collect()).collect();
        let packing = packing_lp(&c, &rows)?;
        let mut phi = packing.duals.clone();
        let found = separator.violations(f, &phi, &points, cfg.seed ^ rounds as u64);
        let mut max_violation = found.first().map_or(0.0, |v| v.0).max(0.0);
        if max_violation <= cfg.tol || rounds >= cfg.max_rounds {
            if let Some(b) = balanced_phi(&points, &c, &phi, packing.value) {
                let v = separator.violations(f, &b, &points, cfg.seed ^ rounds as u64).first().map_or(0.0, |v| v.0).max(0.0);
                if v <= max_violation.max(cfg.tol) {
                    phi = b;
                    max_violation = v;
                }
            }
            let tuple: Vec<_> = packing
                .lambda
                .iter()
                .zip(&points)
                .filter(|(l, _)| **l > 0.0)
                .map(|(l, u)| space.functional(u.iter().map(|x| l * x).collect()))
                .collect::<Result<_>>()?;
            let certificate = if tuple.is_empty() {
                DualTuple::new(vec![space.unit_functional(0)])?
            } else {
                let t = DualTuple::new(tuple)?;
                if t.admissibility() > 1.0 { normalize(t.into_functionals())? } else { t }
            };
            let lower = super::certificate_value(f, &certificate);
            let upper = phi.iter().sum::<f64>() + n as f64 * max_violation;
            return Ok(ExactL1 {
                value: packing.value,
                lower,
                upper: upper.max(lower),
                phi,
                certificate,
                rounds,
                max_violation,
                exact_separation: matches!(separator, Separator::Exact(_)),
            });
        }
        let before = points.len();
        for (v, u) in found.into_iter().take(POINTS_PER_ROUND) {
            if v > cfg.tol && !points.contains(&u) {
                check_positive(f, std::slice::from_ref(&u))?;
                points.push(u);
            }
        }
        if points.len() == before {
            return Err(Error::Invariant("cutting plane made no progress".into()));
        }
    }
}

/// Among the optimal `φ`, one minimizing `max_a φ_a` against the points
/// tight at `phi`. Optimal duals are often degenerate; this picks the
/// balanced one.
fn balanced_phi(points: &[Vec<f64>], c: &[f64], phi: &[f64], value: f64) -> Option<Vec<f64>> {
    let n = phi.len();
    let slack = |k: usize| phi.iter().zip(&points[k]).map(|(p, x)| p * x.abs()).sum::<f64>() - c[k];
    let tight: Vec<usize> = (0..points.len()).filter(|&k| slack(k) <= 1e-7 * (1.0 + value)).collect();
    if tight.len() > 600 {
        return None;
    }
    let mut obj = vec![0.0; n + 1];
    obj[n] = -1.0;
    let mut lp = LinearProgram::maximize(obj);
    for k in tight {
        let mut r: Vec<f64> = points[k].iter().map(|x| x.abs()).collect();
        r.push(0.0);
        lp.ge(r, c[k]);
    }
    let mut total = vec![1.0; n];
    total.push(0.0);
    lp.le(total, value);
    for a in 0..n {
        let mut r = vec![0.0; n + 1];
        r[a] = 1.0;
        r[n] = -1.0;
        lp.le(r, 0.0);
    }
    let sol = lp.solve().ok()?;
    Some(sol.x[..n].iter().map(|v| v.max(0.0)).collect())
}

fn check_positive(f: &HFunc, points: &[Vec<f64>]) -> Result<()> {
    for u in points {
        let v = f.eval_coords(u);
        if v < -1e-12 {
            return Err(Error::NotPositive { value: v, at: u.clone() });
        }
    }
    Ok(())
}

/// Cube vertices, signed unit vectors, hints, and a grid on the faces of
/// the dual cube; random face points when the grid is too large.
fn initial_points(f: &HFunc, space: Space, grid: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = space.dim();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let push = |u: Vec<f64>, pts: &mut Vec<Vec<f64>>| {
        let m = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m > 0.0 {
            let u: Vec<f64> = u.iter().map(|x| x / m).collect();
            if !pts.contains(&u) {
                pts.push(u);
            }
        }
    };
    for a in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[a] = s;
            push(e, &mut pts);
        }
    }
    for mask in 0..1usize << n {
        push((0..n).map(|j| if mask >> j & 1 == 0 { 1.0 } else { -1.0 }).collect(), &mut pts);
    }
    for h in f.hints(space) {
        push(h.iter().map(|x| -x).collect(), &mut pts);
        push(h, &mut pts);
    }
    let g = grid.max(1);
    let levels: Vec<f64> = (0..=g).map(|i| -1.0 + 2.0 * i as f64 / g as f64).collect();
    let face = (levels.len() as f64).powi(n as i32 - 1) * 2.0 * n as f64;
    if face <= MAX_INITIAL_POINTS as f64 {
        for a in 0..n {
            for s in [1.0, -1.0] {
                let others = n - 1;
                let total = levels.len().pow(others as u32);
                for mut idx in 0..total {
                    let mut u = vec![0.0; n];
                    for (b, slot) in u.iter_mut().enumerate() {
                        if b == a {
                            *slot = s;
                        } else {
                            *slot = levels[idx % levels.len()];
                            idx /= levels.len();
                        }
                    }
                    push(u, &mut pts);
                }
            }
        }
    } else {
        while pts.len() < MAX_INITIAL_POINTS {
            let a = rng.random_range(0..n);
            let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            u[a] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            push(u, &mut pts);
        }
    }
    pts
}

enum Separator {
    Exact(OrthantLps),
    Search,
}

/// Plus and minus forms as coefficient vectors on dual coordinates.
struct OrthantLps {
    pluses: Vec<Vec<f64>>,
    minuses: Vec<Vec<f64>>,
}

impl OrthantLps {
    fn new(d: &DiffOfJoins) -> Self {
        OrthantLps {
            pluses: d.pluses().iter().map(|l| d.form_vector(l)).collect(),
            minuses: d.minuses().iter().map(|l| d.form_vector(l)).collect(),
        }
    }

    /// `max_{y ∈ [0,1]ⁿ} P(s∘y) − max_j M_j(s∘y) − φ·y`, as an LP in
    /// `(y, t⁺, t⁻)` with `t = t⁺ − t⁻ ≥ M_j(s∘y)`.
    fn solve(&self, s: &[f64], plus: &[f64], phi: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = s.len();
        let mut obj: Vec<f64> = (0..n).map(|a| s[a] * plus[a] - phi[a]).collect();
        obj.push(-1.0);
        obj.push(1.0);
        let mut lp = LinearProgram::maximize(obj);
        for a in 0..n {
            let mut r = vec![0.0; n + 2];
            r[a] = 1.0;
            lp.le(r, 1.0);
        }
        for m in &self.minuses {
            let mut r: Vec<f64> = (0..n).map(|a| s[a] * m[a]).collect();
            r.push(-1.0);
            r.push(1.0);
            lp.le(r, 0.0);
        }
        let sol = lp.solve().ok()?;
        let u: Vec<f64> = (0..n).map(|a| s[a] * sol.x[a].clamp(0.0, 1.0)).collect();
        Some((sol.objective, u))
    }
}

impl Separator {
    /// Violating points sorted by decreasing `f(u) − φ·|u|`.
    fn violations(&self, f: &HFunc, phi: &[f64], points: &[Vec<f64>], seed: u64) -> Vec<(f64, Vec<f64>)> {
        let n = phi.len();
        let gap = |u: &[f64]| f.eval_coords(u) - phi.iter().zip(u).map(|(p, x)| p * x.abs()).sum::<f64>();
        let mut found: Vec<(f64, Vec<f64>)> = match self {
            Separator::Exact(lps) => {
                let jobs = (1usize << n) * lps.pluses.len();
                par::map_collect(jobs, |job| {
                    let mask = job / lps.pluses.len();
                    let s: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 0 { 1.0 } else { -1.0 }).collect();
                    let (_, u) = lps.solve(&s, &lps.pluses[job % lps.pluses.len()], phi)?;
                    Some((gap(&u), u))
                })
                .into_iter()
                .flatten()
                .collect()
            }
            Separator::Search => cube_ascent(&gap, n, points, seed),
        };
        found.retain(|(v, _)| v.is_finite());
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        found.dedup_by(|a, b| a.1 == b.1);
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{gen, Term};

    fn e(s: Space, a: usize) -> Term {
        Term::abs(Term::Gen(s.unit_vector(a)))
    }

    #[test]
    fn packing_duality() {
        let p = packing_lp(&[1.0, 1.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((p.value - 2.0).abs() < 1e-12);
        assert!((p.duals.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn join_and_meet_of_coordinates() {
        let s = Space::l1(2);
        let cfg = ExactL1Config::default();
        let j = exact_norm_l1(&HFunc::Term(Term::join(e(s, 0), e(s, 1))), s, &cfg).unwrap();
        assert!((j.value - 2.0).abs() < 1e-9 && (j.upper - 2.0).abs() < 1e-9);
        assert!((j.phi[0] - 1.0).abs() < 1e-9 && (j.phi[1] - 1.0).abs() < 1e-9);
        let m = exact_norm_l1(&HFunc::Term(Term::meet(e(s, 0), e(s, 1))), s, &cfg).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9 && (m.upper - 1.0).abs() < 1e-9);
        assert!((m.phi[0] - 0.5).abs() < 1e-9 && (m.phi[1] - 0.5).abs() < 1e-9);
        assert!(m.exact_separation);
    }

    #[test]
    fn gphi_recovers_phi() {
        let s = Space::l1(3);
        let r = exact_norm_l1(&HFunc::GPhi(vec![0.5, 2.0, 1.0]), s, &ExactL1Config::default()).unwrap();
        assert!((r.value - 3.5).abs() < 1e-9);
        for (a, b) in r.phi.iter().zip([0.5, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_negative_and_non_l1() {
        let s = Space::l1(2);
        let f = HFunc::Term(gen(s, &[1.0, 0.0]).unwrap());
        assert!(matches!(exact_norm_l1(&f, s, &ExactL1Config::default()), Err(Error::NotPositive { .. })));
        let s2 = Space::l2(2);
        let g = HFunc::Term(Term::abs(gen(s2, &[1.0, 0.0]).unwrap()));
        assert!(exact_norm_l1(&g, s2, &ExactL1Config::default()).is_err());
    }

    #[test]
    fn random_positive_terms_are_bracketed() {
        let mut rng = sample::rng(11);
        for n in 2..=4 {
            let s = Space::l1(n);
            for _ in 0..4 {
                let f = HFunc::Term(sample::random_positive_term(&mut rng, s, 3));
                let r = exact_norm_l1(&f, s, &ExactL1Config::default()).unwrap();
                assert!(r.lower <= r.upper + 1e-9);
                assert!(r.upper - r.lower <= 1e-6, "{f}: {} {}", r.lower, r.upper);
                assert!(r.certificate.admissibility() <= 1.0 + 1e-9);
            }
        }
    }
}
