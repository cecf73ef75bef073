//! The norm of `FBL[E]`: lower bounds from admissible tuples, sound upper
//! bounds, the sup norm, and an exact LP scheme over `ℓ1ⁿ`.

mod exact_l1;
mod search;

pub use exact_l1::{exact_norm_l1, packing_lp, ExactL1, ExactL1Config, Packing};
pub use search::{default_m_max, pattern_ascent, search_lower, SearchConfig};

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::majorant::DiscreteMeasure;
use crate::par;
use crate::sample;
use crate::spaces::{lp_norm, norming_functional, DualTuple, Functional, Space};
use crate::terms::{parse, print, Term};

/// A positively homogeneous function on `E*`.
#[derive(Debug, Clone, PartialEq)]
pub enum HFunc {
    Term(Term),
    /// `x* ↦ |Σ_a φ_a |x*_a||`.
    GPhi(Vec<f64>),
    /// `x* ↦ Σ_i w_i |x*(u_i)|`.
    FMu(DiscreteMeasure),
    /// `x* ↦ max_{a ≤ N} |x*_a| / a`.
    Harmonic(usize),
    /// `x* ↦ min(|x*_1|, max_{2 ≤ a ≤ dim} |x*_a| / a)`.
    MinSup(usize),
    /// `f_n` on the dyadic grid with `2^resolution` cells.
    Dyadic { n: u32, resolution: u32 },
    Max(Vec<HFunc>),
    Min(Vec<HFunc>),
}

impl HFunc {
    /// Dimension this function is defined on, if fixed by its parameters.
    pub fn dim(&self) -> Option<usize> {
        match self {
            HFunc::Term(t) => Some(t.space().dim()),
            HFunc::GPhi(phi) => Some(phi.len()),
            HFunc::FMu(mu) => Some(mu.space().dim()),
            HFunc::Harmonic(n) | HFunc::MinSup(n) => Some(*n),
            HFunc::Dyadic { resolution, .. } => Some(1usize << resolution),
            HFunc::Max(fs) | HFunc::Min(fs) => fs.iter().find_map(|f| f.dim()),
        }
    }

    /// Checks that the function can be evaluated on `space*`.
    pub fn validate(&self, space: Space) -> Result<()> {
        match self {
            HFunc::Term(t) => t.check_space()?.check_same(&space),
            HFunc::FMu(mu) => mu.space().check_same(&space),
            HFunc::Dyadic { n, resolution } if n > resolution => {
                Err(Error::InvalidParameter(format!("f_{n} needs resolution at least {n}, got {resolution}")))
            }
            HFunc::MinSup(d) if *d < 2 => Err(Error::InvalidParameter("minsup needs dimension at least 2".into())),
            HFunc::Max(fs) | HFunc::Min(fs) => {
                if fs.is_empty() {
                    return Err(Error::InvalidParameter("empty max/min".into()));
                }
                fs.iter().try_for_each(|f| f.validate(space))
            }
            _ => match self.dim() {
                Some(d) if d != space.dim() => Err(Error::DimensionMismatch { expected: space.dim(), got: d }),
                _ => Ok(()),
            },
        }
    }

    pub fn eval(&self, f: &Functional) -> Result<f64> {
        self.validate(f.space())?;
        Ok(self.eval_coords(f.coords()))
    }

    /// Evaluation on raw coordinates; dimensions are the caller's concern.
    pub fn eval_coords(&self, x: &[f64]) -> f64 {
        match self {
            HFunc::Term(t) => t.eval_coords(x),
            HFunc::GPhi(phi) => g_phi_coords(phi, x),
            HFunc::FMu(mu) => mu.eval_coords(x),
            HFunc::Harmonic(n) => x.iter().take(*n).enumerate().map(|(a, v)| v.abs() / (a + 1) as f64).fold(0.0, f64::max),
            HFunc::MinSup(_) => {
                let tail = x.iter().enumerate().skip(1).map(|(a, v)| v.abs() / (a + 1) as f64).fold(0.0, f64::max);
                x[0].abs().min(tail)
            }
            HFunc::Dyadic { n, resolution } => dyadic_coords(*n, *resolution, x),
            HFunc::Max(fs) => fs.iter().map(|f| f.eval_coords(x)).fold(f64::NEG_INFINITY, f64::max),
            HFunc::Min(fs) => fs.iter().map(|f| f.eval_coords(x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// The same function written as a lattice term over `space`.
    pub fn as_term(&self, space: Space) -> Result<Term> {
        self.validate(space)?;
        let e = |a: usize| Term::Gen(space.unit_vector(a));
        let abs_e = |a: usize| Term::abs(e(a));
        Ok(match self {
            HFunc::Term(t) => t.clone(),
            HFunc::GPhi(phi) => {
                let parts = phi.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(a, c)| Term::scale(*c, abs_e(a)));
                match Term::sum_all(parts) {
                    None => Term::zero(space),
                    Some(t) if phi.iter().all(|&c| c >= 0.0) => t,
                    Some(t) => Term::abs(t),
                }
            }
            HFunc::FMu(mu) => {
                let parts = mu.atoms().iter().zip(mu.weights()).filter(|(_, w)| **w > 0.0);
                Term::sum_all(parts.map(|(u, w)| Term::scale(*w, Term::abs(Term::Gen(u.clone())))))
                    .unwrap_or_else(|| Term::zero(space))
            }
            HFunc::Harmonic(n) => {
                Term::join_all((0..*n).map(|a| Term::scale(1.0 / (a + 1) as f64, abs_e(a)))).expect("n >= 1")
            }
            HFunc::MinSup(d) => {
                let tail = Term::join_all((1..*d).map(|a| Term::scale(1.0 / (a + 1) as f64, abs_e(a)))).expect("d >= 2");
                Term::meet(abs_e(0), tail)
            }
            HFunc::Dyadic { n, resolution } => {
                let cells = 1usize << resolution;
                let block = cells >> n;
                let w = 1.0 / cells as f64;
                Term::sum_all((0..1usize << n).map(|j| {
                    let v: Vec<f64> = (0..cells).map(|c| if c / block == j { w } else { 0.0 }).collect();
                    Term::abs(Term::Gen(space.vector(v).expect("dimension")))
                }))
                .expect("nonempty")
            }
            HFunc::Max(fs) => Term::join_all(fs.iter().map(|f| f.as_term(space)).collect::<Result<Vec<_>>>()?)
                .expect("nonempty"),
            HFunc::Min(fs) => Term::meet_all(fs.iter().map(|f| f.as_term(space)).collect::<Result<Vec<_>>>()?)
                .expect("nonempty"),
        })
    }

    /// Functionals worth trying first when searching for certificates.
    pub(crate) fn hints(&self, space: Space) -> Vec<Vec<f64>> {
        match self {
            HFunc::Term(t) => t.generators().iter().filter(|v| !v.is_zero()).map(|v| norming_functional(v).into_coords()).collect(),
            HFunc::FMu(mu) => mu.atoms().iter().filter(|v| !v.is_zero()).map(|v| norming_functional(v).into_coords()).collect(),
            HFunc::Max(fs) | HFunc::Min(fs) => fs.iter().flat_map(|f| f.hints(space)).collect(),
            HFunc::Dyadic { .. } => vec![vec![1.0; space.dim()]],
            _ => Vec::new(),
        }
    }
}

/// Parses a closed-form tag (`gphi:[..]`, `fmu:{..}`, `harmonic:N`,
/// `minsup:N`, `dyadic:n:N`) or, failing that, a lattice term.
pub fn parse_hfunc(text: &str, space: Space) -> Result<HFunc> {
    let text = text.trim();
    let bad = |msg: String| Error::Syntax { pos: 0, msg };
    let int = |s: &str| -> Result<usize> { s.trim().parse().map_err(|_| bad(format!("expected an integer, got `{s}`"))) };
    let f = if let Some(rest) = text.strip_prefix("gphi:") {
        HFunc::GPhi(serde_json::from_str(rest).map_err(|e| bad(format!("gphi: {e}")))?)
    } else if let Some(rest) = text.strip_prefix("fmu:") {
        let v: serde_json::Value = serde_json::from_str(rest).map_err(|e| bad(format!("fmu: {e}")))?;
        HFunc::FMu(DiscreteMeasure::from_json(v, space)?)
    } else if let Some(rest) = text.strip_prefix("harmonic:") {
        HFunc::Harmonic(int(rest)?)
    } else if let Some(rest) = text.strip_prefix("minsup:") {
        HFunc::MinSup(int(rest)?)
    } else if let Some(rest) = text.strip_prefix("dyadic:") {
        let (n, r) = rest.split_once(':').ok_or_else(|| bad("expected dyadic:n:N".into()))?;
        HFunc::Dyadic { n: int(n)? as u32, resolution: int(r)? as u32 }
    } else {
        HFunc::Term(parse(text, space)?)
    };
    f.validate(space)?;
    Ok(f)
}

impl fmt::Display for HFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            HFunc::Term(t) => write!(f, "{}", print(t)),
            HFunc::GPhi(phi) => write!(f, "gphi:[{}]", list(phi)),
            HFunc::FMu(mu) => write!(f, "fmu:{}", serde_json::to_string(mu).map_err(|_| fmt::Error)?),
            HFunc::Harmonic(n) => write!(f, "harmonic:{n}"),
            HFunc::MinSup(n) => write!(f, "minsup:{n}"),
            HFunc::Dyadic { n, resolution } => write!(f, "dyadic:{n}:{resolution}"),
            HFunc::Max(fs) | HFunc::Min(fs) => {
                let name = if matches!(self, HFunc::Max(_)) { "max" } else { "min" };
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                write!(f, "{name}({})", parts.join("; "))
            }
        }
    }
}

impl Serialize for HFunc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl From<Term> for HFunc {
    fn from(t: Term) -> Self {
        HFunc::Term(t)
    }
}

pub(crate) fn g_phi_coords(phi: &[f64], x: &[f64]) -> f64 {
    phi.iter().zip(x).map(|(p, v)| p * v.abs()).sum::<f64>().abs()
}

fn dyadic_coords(n: u32, resolution: u32, x: &[f64]) -> f64 {
    let block = 1usize << (resolution - n);
    let w = 1.0 / (1u64 << resolution) as f64;
    x.chunks(block).map(|c| (c.iter().sum::<f64>() * w).abs()).sum()
}

/// Certified lower bound with its certificate and an upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub lower: f64,
    /// `f64::INFINITY` when no sound finite bound is known.
    pub upper: f64,
    pub certificate: DualTuple,
    pub seed: u64,
    pub iterations: u64,
}

impl Serialize for NormEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("NormEstimate", 6)?;
        st.serialize_field("lower", &self.lower)?;
        if self.upper.is_finite() {
            st.serialize_field("upper", &self.upper)?;
        } else {
            st.serialize_field("upper", "inf")?;
        }
        st.serialize_field("certificate", &self.certificate.coords())?;
        st.serialize_field("admissibility", &self.certificate.admissibility())?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.end()
    }
}

/// `Σ_k |f(x_k*)|` for an admissible tuple.
pub fn lower_bound(f: &HFunc, tuple: &DualTuple) -> Result<f64> {
    f.validate(tuple.space())?;
    if tuple.functionals().iter().all(|x| x.is_zero()) {
        return Err(Error::DegenerateTuple);
    }
    if tuple.admissibility() > 1.0 + 1e-9 {
        return Err(Error::Inadmissible(tuple.admissibility()));
    }
    Ok(tuple.functionals().iter().map(|x| f.eval_coords(x.coords()).abs()).sum())
}

/// Sound upper bound on `‖t‖` from `‖δ_x‖ = ‖x‖` and the lattice-norm
/// inequalities. Lattice-free subterms get the exact norm of their value.
pub fn upper_bound_term(t: &Term) -> f64 {
    if let Some(v) = t.linear_value() {
        return lp_norm(&v, t.space().p());
    }
    if let Some(a) = t.as_abs() {
        return upper_bound_term(a);
    }
    match t {
        Term::Gen(v) => lp_norm(v.coords(), v.space().p()),
        Term::Scale(c, s) => c.abs() * upper_bound_term(s),
        Term::Neg(s) => upper_bound_term(s),
        Term::Sum(a, b) | Term::Join(a, b) | Term::Meet(a, b) => upper_bound_term(a) + upper_bound_term(b),
    }
}

/// Sound upper bound for any [`HFunc`] over `space`; closed forms are
/// dominated by explicit sums of `|δ_x|`.
pub fn upper_bound(f: &HFunc, space: Space) -> f64 {
    let unit = |a: usize| lp_norm(space.unit_vector(a).coords(), space.p());
    match f {
        HFunc::Term(t) => upper_bound_term(t),
        HFunc::GPhi(phi) => phi.iter().enumerate().map(|(a, c)| c.abs() * unit(a)).sum(),
        HFunc::FMu(mu) => mu.atoms().iter().zip(mu.weights()).map(|(u, w)| w * lp_norm(u.coords(), space.p())).sum(),
        HFunc::Harmonic(n) => (0..*n).map(|a| unit(a) / (a + 1) as f64).sum(),
        HFunc::MinSup(_) => unit(0),
        HFunc::Dyadic { n, resolution } => {
            let cells = 1usize << resolution;
            let block = cells >> n;
            let v = vec![1.0 / cells as f64; block];
            (1usize << n) as f64 * lp_norm(&v, space.p())
        }
        HFunc::Max(fs) | HFunc::Min(fs) => fs.iter().map(|g| upper_bound(g, space)).sum(),
    }
}

/// Largest dimension for which `sup_norm` enumerates all cube vertices.
pub const SUP_VERTEX_CAP: usize = 20;

/// Lower estimate of `sup_{‖x*‖ ≤ 1} |f(x*)|` from seeded samples, hints,
/// unit functionals, and for `p = 1` every vertex of the dual cube.
pub fn sup_norm(f: &HFunc, space: Space, samples: usize, seed: u64) -> Result<f64> {
    f.validate(space)?;
    let n = space.dim();
    let q = space.q();
    let ratio = |x: &[f64]| {
        let r = lp_norm(x, q);
        if r == 0.0 {
            0.0
        } else {
            f.eval_coords(x).abs() / r
        }
    };
    let mut best: f64 = 0.0;
    for a in 0..n {
        let mut e = vec![0.0; n];
        e[a] = 1.0;
        best = best.max(ratio(&e));
        e[a] = -1.0;
        best = best.max(ratio(&e));
    }
    for h in f.hints(space) {
        best = best.max(ratio(&h));
        best = best.max(ratio(&h.iter().map(|x| -x).collect::<Vec<_>>()));
    }
    if space.p().is_one() && n <= SUP_VERTEX_CAP {
        let vertex = |mask: usize| -> Vec<f64> { (0..n).map(|j| if mask >> j & 1 == 0 { 1.0 } else { -1.0 }).collect() };
        best = best.max(par::max_by_index(1 << n, |mask| ratio(&vertex(mask))).1);
    }
    let mut rng = sample::rng(seed);
    for _ in 0..samples {
        best = best.max(ratio(&sample::sphere_point(&mut rng, n, q)));
    }
    Ok(best)
}

/// Value `Σ_k|f(x_k*)|` recomputed from scratch on a certificate.
pub fn certificate_value(f: &HFunc, tuple: &DualTuple) -> f64 {
    tuple.functionals().iter().map(|x| f.eval_coords(x.coords()).abs()).sum()
}
