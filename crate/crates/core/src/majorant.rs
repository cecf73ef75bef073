//! Discrete probability measures on the unit ball, the functions
//! `f_μ(x*) = ∫ |x*(x)| dμ(x)`, and majorants `f ≤ L·f_μ` by cutting planes.

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::norm::{packing_lp, pattern_ascent, search_lower, HFunc, SearchConfig};
use crate::par;
use crate::sample::{self, child_seed};
use crate::spaces::{
    admissibility_rows, dot, lp_norm, norming_coords, DualTuple, Exponent, Functional, Space, Vector, DEFAULT_SIGN_CAP,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    space: Space,
    atoms: Vec<Vector>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::InvalidParameter("measure without atoms".into()))?;
        let space = first.space();
        if atoms.len() != weights.len() {
            return Err(Error::Shape(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        for a in &atoms {
            space.check_same(&a.space())?;
            let r = lp_norm(a.coords(), space.p());
            if r > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!("atom of norm {r} outside the unit ball")));
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Negative("measure weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { space, atoms, weights })
    }

    /// `k` atoms drawn from the unit ball with random weights.
    pub fn random(rng: &mut impl Rng, space: Space, k: usize) -> Result<Self> {
        let atoms: Vec<Vector> =
            (0..k).map(|_| space.vector(sample::ball_point(rng, space.dim(), space.p()))).collect::<Result<_>>()?;
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        if k > 0 {
            let head: f64 = weights[..k - 1].iter().sum();
            weights[k - 1] = (1.0 - head).max(0.0);
        }
        Self::new(atoms, weights)
    }

    pub fn point_mass(x: Vector) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn uniform(atoms: Vec<Vector>) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let n = atoms.len();
        let mut weights = vec![w; n];
        // Absorb rounding so the weights sum to one.
        if n > 0 {
            weights[n - 1] = 1.0 - w * (n - 1) as f64;
        }
        Self::new(atoms, weights)
    }

    pub fn from_json(value: serde_json::Value, space: Space) -> Result<Self> {
        let m: MeasureJson = serde_json::from_value(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let atoms = m.atoms.into_iter().map(|a| space.vector(a)).collect::<Result<Vec<_>>>()?;
        Self::new(atoms, m.weights)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn atoms(&self) -> &[Vector] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval_coords(&self, x: &[f64]) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * dot(x, a.coords()).abs()).sum()
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson { atoms: self.atoms.iter().map(|a| a.coords().to_vec()).collect(), weights: self.weights.clone() }
            .serialize(s)
    }
}

pub fn f_mu_eval(mu: &DiscreteMeasure, x: &Functional) -> Result<f64> {
    mu.space.check_same(&x.space())?;
    Ok(mu.eval_coords(x.coords()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub lower: f64,
    #[serde(serialize_with = "tuple_coords")]
    pub certificate: DualTuple,
}

fn tuple_coords<S: Serializer>(t: &DualTuple, s: S) -> std::result::Result<S::Ok, S::Error> {
    t.coords().serialize(s)
}

/// Searches for a tuple beating `‖f_μ‖ ≤ 1`; a hit is an invariant failure.
pub fn verify_fmu_contraction(mu: &DiscreteMeasure, cfg: &SearchConfig) -> Result<ContractionReport> {
    let f = HFunc::FMu(mu.clone());
    let est = search_lower(&f, mu.space, cfg)?;
    if est.lower > 1.0 + 1e-6 {
        return Err(Error::Invariant(format!("f_mu norm lower bound {} exceeds 1", est.lower)));
    }
    Ok(ContractionReport { lower: est.lower, certificate: est.certificate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantConfig {
    /// Points per edge of the grid whose normalized points seed the atoms.
    pub grid: usize,
    pub tol: f64,
    pub max_rounds: usize,
    /// Random dual-sphere points in the initial working set.
    pub samples: usize,
    pub seed: u64,
}

impl Default for MajorantConfig {
    fn default() -> Self {
        MajorantConfig { grid: 4, tol: 1e-4, max_rounds: 60, samples: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Majorant {
    pub measure: DiscreteMeasure,
    /// Constant with `f ≤ constant·f_μ`; at least the supplied bound.
    pub constant: f64,
    /// Certified lower bound on `‖f‖` from the packing LP's tuple.
    pub lower: f64,
    /// `max (f − constant·f_μ)` on the dual sphere found by the final separation.
    pub max_violation: f64,
    pub rounds: usize,
}

/// Largest dimension accepted by [`find_majorant`].
pub const MAJORANT_MAX_DIM: usize = 4;
const GRID_ATOM_CAP: usize = 400;
const SEPARATION_SAMPLES: usize = 20_000;

/// Probability `μ` on `B_E` and constant `L ≥ bound` with `f ≤ L·f_μ` on the
/// dual sphere up to `tol`. The packing LP over atoms gives the cheapest `L`
/// for the working functionals; its support tuple's ball witness becomes a
/// new atom each round, and violators from a seeded ascent become new
/// working functionals. `bound = None` takes the search lower bound.
pub fn find_majorant(f: &HFunc, space: Space, bound: Option<f64>, cfg: &MajorantConfig) -> Result<Majorant> {
    f.validate(space)?;
    let n = space.dim();
    if n > MAJORANT_MAX_DIM {
        return Err(Error::InvalidParameter(format!("majorant supports dimension at most {MAJORANT_MAX_DIM}, got {n}")));
    }
    let q = space.q();
    let mut rng = sample::rng(cfg.seed);
    let mut duals = initial_functionals(f, space, cfg.samples, &mut rng);
    for x in &duals {
        let v = f.eval_coords(x);
        if v < -1e-12 {
            return Err(Error::NotPositive { value: v, at: x.clone() });
        }
    }
    let mut atoms = initial_atoms(f, space, cfg.grid);
    let bound = match bound {
        Some(b) if b.is_finite() && b >= 0.0 => b,
        Some(b) => return Err(Error::InvalidParameter(format!("invalid norm bound {b}"))),
        None => search_lower(f, space, &SearchConfig::new(space).seed(cfg.seed).restarts(4))?.lower,
    };
    let mut lower: f64 = 0.0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let c: Vec<f64> = duals.iter().map(|x| f.eval_coords(x)).collect();
        let rows: Vec<Vec<f64>> = atoms.iter().map(|a| duals.iter().map(|x| dot(x, a).abs()).collect()).collect();
        let packing = packing_lp(&c, &rows)?;
        let total: f64 = packing.duals.iter().sum();
        let constant = bound.max(total);
        let support: Vec<Vec<f64>> = packing
            .lambda
            .iter()
            .zip(&duals)
            .filter(|(l, _)| **l > 1e-14)
            .map(|(l, x)| x.iter().map(|v| l * v).collect())
            .collect();
        let mut witness = None;
        if !support.is_empty() {
            let refs: Vec<&[f64]> = support.iter().map(|r| r.as_slice()).collect();
            if let Ok(w) = admissibility_rows(&refs, space, DEFAULT_SIGN_CAP) {
                if w.value > 0.0 {
                    let tuple_value: f64 = support.iter().map(|r| f.eval_coords(r)).sum();
                    lower = lower.max(tuple_value / w.value);
                    witness = Some(w.point);
                }
            }
        }
        let measure = measure_from(space, &atoms, &packing.duals, total)?;
        let gap = |x: &[f64]| {
            let r = lp_norm(x, q);
            if r == 0.0 {
                return f64::NEG_INFINITY;
            }
            (f.eval_coords(x) - constant * measure.eval_coords(x)) / r
        };
        let found = sphere_violations(&gap, n, &duals, child(cfg.seed, rounds));
        let max_violation = found.first().map_or(0.0, |v| v.0).max(0.0);
        if max_violation <= cfg.tol {
            return Ok(Majorant { measure, constant, lower, max_violation, rounds });
        }
        if rounds >= cfg.max_rounds {
            let at = found.into_iter().next().map(|v| v.1).unwrap_or_default();
            return Err(Error::MajorantInfeasible { violation: max_violation, at });
        }
        let mut progressed = false;
        if let Some(w) = witness {
            if !atoms.contains(&w) {
                atoms.push(w);
                progressed = true;
            }
        }
        for (v, x) in found.into_iter().take(4) {
            if v <= cfg.tol {
                break;
            }
            let fx = f.eval_coords(&x);
            if fx < -1e-12 {
                return Err(Error::NotPositive { value: fx, at: x });
            }
            let a = norming_coords(&x, space.p());
            if !atoms.contains(&a) {
                atoms.push(a);
            }
            if !duals.contains(&x) {
                duals.push(x);
                progressed = true;
            }
        }
        if !progressed {
            return Err(Error::MajorantInfeasible { violation: max_violation, at: Vec::new() });
        }
    }
}

fn child(seed: u64, round: usize) -> u64 {
    sample::child_seed(seed, round as u64)
}

fn measure_from(space: Space, atoms: &[Vec<f64>], v: &[f64], total: f64) -> Result<DiscreteMeasure> {
    let vecs = |idx: &[usize]| idx.iter().map(|&i| space.vector(atoms[i].clone())).collect::<Result<Vec<_>>>();
    if total <= 0.0 {
        let all: Vec<usize> = (0..atoms.len()).collect();
        return DiscreteMeasure::uniform(vecs(&all)?);
    }
    let idx: Vec<usize> = (0..atoms.len()).filter(|&i| v[i] > 0.0).collect();
    let mut weights: Vec<f64> = idx.iter().map(|&i| v[i] / total).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    let heaviest = (0..weights.len()).fold(0, |b, i| if weights[i] > weights[b] { i } else { b });
    weights[heaviest] += drift;
    DiscreteMeasure::new(vecs(&idx)?, weights)
}

/// Unit-sphere points of `E`: signed coordinates, normalized sign vectors,
/// normalized generators of `f`, and normalized points of a face grid.
fn initial_atoms(f: &HFunc, space: Space, grid: usize) -> Vec<Vec<f64>> {
    let n = space.dim();
    let p = space.p();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |x: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        let r = lp_norm(&x, p);
        if r > 0.0 {
            let x: Vec<f64> = x.into_iter().map(|v| v / r).collect();
            if lp_norm(&x, p) <= 1.0 + 1e-12 && !out.contains(&x) {
                out.push(x);
            }
        }
    };
    for g in generators(f) {
        push(g, &mut out);
    }
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        push(e, &mut out);
    }
    let levels: Vec<f64> = (0..=grid.max(1)).map(|i| -1.0 + 2.0 * i as f64 / grid.max(1) as f64).collect();
    let total = levels.len().pow(n as u32);
    for mut idx in 0..total {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v = levels[idx % levels.len()];
                idx /= levels.len();
                v
            })
            .collect();
        // Antipodal atoms are redundant: keep the first nonzero coordinate positive.
        if x.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0) && x.iter().any(|v| v.abs() == 1.0) {
            push(x, &mut out);
        }
        if out.len() >= GRID_ATOM_CAP {
            break;
        }
    }
    out
}

fn generators(f: &HFunc) -> Vec<Vec<f64>> {
    match f {
        HFunc::Term(t) => t.generators().into_iter().map(|v| v.into_coords()).collect(),
        HFunc::FMu(mu) => mu.atoms().iter().map(|v| v.coords().to_vec()).collect(),
        HFunc::Max(fs) | HFunc::Min(fs) => fs.iter().flat_map(generators).collect(),
        _ => Vec::new(),
    }
}

fn initial_functionals(f: &HFunc, space: Space, samples: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = space.dim();
    let q = space.q();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |x: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        let r = lp_norm(&x, q);
        if r > 0.0 {
            let x: Vec<f64> = x.into_iter().map(|v| v / r).collect();
            if !out.contains(&x) {
                out.push(x);
            }
        }
    };
    for h in f.hints(space) {
        push(h, &mut out);
    }
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        push(e, &mut out);
    }
    for mask in 0..1usize << n.saturating_sub(1) {
        push((0..n).map(|j| if j > 0 && mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect(), &mut out);
    }
    for _ in 0..samples {
        push(sample::sphere_point(rng, n, q), &mut out);
    }
    out
}

/// Multi-start pattern ascent of a homogeneous `gap`; returns local maxima
/// sorted by decreasing value.
fn sphere_violations(
    gap: &(impl Fn(&[f64]) -> f64 + Sync),
    n: usize,
    working: &[Vec<f64>],
    seed: u64,
) -> Vec<(f64, Vec<f64>)> {
    let mut starts: Vec<(f64, Vec<f64>)> = working.iter().map(|x| (gap(x), x.clone())).collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    starts.truncate(16);
    let mut rng = sample::rng(seed);
    let mut fresh: Vec<(f64, Vec<f64>)> = (0..SEPARATION_SAMPLES)
        .map(|_| {
            let x = sample::gaussian(&mut rng, n);
            (gap(&x), x)
        })
        .collect();
    fresh.sort_by(|a, b| b.0.total_cmp(&a.0));
    starts.extend(fresh.into_iter().take(32));
    let mut found = par::map_collect(starts.len(), |k| {
        let (v, x) = &starts[k];
        let step = 0.25 * lp_norm(x, Exponent::two()).max(1e-6);
        pattern_ascent(gap, x.clone(), *v, step, None, child_seed(seed, k as u64))
    });
    for item in found.iter_mut() {
        let r = lp_norm(&item.1, Exponent::two());
        if r > 0.0 {
            item.1.iter_mut().for_each(|v| *v /= r);
        }
    }
    found.retain(|(v, _)| v.is_finite());
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{gen, Term};

    fn half_half() -> DiscreteMeasure {
        let s = Space::l1(2);
        DiscreteMeasure::new(vec![s.unit_vector(0), s.unit_vector(1)], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn f_mu_examples() {
        let s = Space::l1(2);
        let mu = half_half();
        assert_eq!(f_mu_eval(&mu, &s.functional(vec![1.0, 1.0]).unwrap()).unwrap(), 1.0);
        assert_eq!(f_mu_eval(&mu, &s.functional(vec![1.0, -3.0]).unwrap()).unwrap(), 2.0);
        let x0 = s.vector(vec![0.25, -0.75]).unwrap();
        let pm = DiscreteMeasure::point_mass(x0.clone()).unwrap();
        let x = s.functional(vec![2.0, 1.0]).unwrap();
        assert_eq!(f_mu_eval(&pm, &x).unwrap(), Term::abs(Term::Gen(x0)).eval(&x).unwrap());
    }

    #[test]
    fn measure_validation_and_json() {
        let s = Space::l2(2);
        assert!(DiscreteMeasure::new(vec![s.vector(vec![1.0, 1.0]).unwrap()], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![s.unit_vector(0)], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(vec![s.unit_vector(0), s.unit_vector(1)], vec![1.5, -0.5]).is_err());
        let mu = half_half();
        let v = serde_json::to_value(&mu).unwrap();
        assert_eq!(v, serde_json::json!({"atoms": [[1.0, 0.0], [0.0, 1.0]], "weights": [0.5, 0.5]}));
        assert_eq!(DiscreteMeasure::from_json(v, Space::l1(2)).unwrap(), mu);
    }

    #[test]
    fn contraction_examples() {
        let s = Space::l1(2);
        let cfg = SearchConfig::new(s);
        let r = verify_fmu_contraction(&half_half(), &cfg).unwrap();
        assert!((r.lower - 1.0).abs() < 1e-9);
        let pm = DiscreteMeasure::point_mass(s.unit_vector(1)).unwrap();
        assert!((verify_fmu_contraction(&pm, &cfg).unwrap().lower - 1.0).abs() < 1e-12);
        let zero = DiscreteMeasure::point_mass(s.zero_vector()).unwrap();
        assert_eq!(verify_fmu_contraction(&zero, &cfg).unwrap().lower, 0.0);
    }

    #[test]
    fn majorant_examples() {
        let s = Space::l1(2);
        let cfg = MajorantConfig::default();
        let x0 = s.vector(vec![0.5, -0.5]).unwrap();
        let m = find_majorant(&HFunc::Term(Term::abs(Term::Gen(x0))), s, Some(1.0), &cfg).unwrap();
        assert!(m.max_violation <= 1e-9);
        assert_eq!(m.constant, 1.0);
        let meet = Term::meet(Term::abs(gen(s, &[1.0, 0.0]).unwrap()), Term::abs(gen(s, &[0.0, 1.0]).unwrap()));
        let m = find_majorant(&HFunc::Term(meet), s, Some(1.0), &cfg).unwrap();
        assert!(m.max_violation <= cfg.tol);
        assert!((m.constant - 1.0).abs() < 1e-9);
        let zero = find_majorant(&HFunc::Term(Term::zero(s)), s, Some(0.0), &cfg).unwrap();
        assert!(zero.measure.atoms().len() > 1);
    }

    #[test]
    fn majorant_on_l2() {
        let s = Space::l2(3);
        let mut rng = sample::rng(4);
        let f = HFunc::Term(sample::random_positive_term(&mut rng, s, 2));
        let m = find_majorant(&f, s, None, &MajorantConfig::default()).unwrap();
        assert!(m.lower <= m.constant + 1e-9);
        for _ in 0..500 {
            let x = sample::sphere_point(&mut rng, 3, s.q());
            assert!(f.eval_coords(&x) <= m.constant * m.measure.eval_coords(&x) + 1e-4);
        }
    }
}
