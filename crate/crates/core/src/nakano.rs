//! Over `ℓ1ⁿ`: the functions `g_φ(x*) = |φ(|x*|)|`, finite directed
//! families and their pointwise suprema, necessary conditions for
//! maximality, and the bound `‖sup F‖ = min Σφ` behind the strong Nakano
//! property.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{
    certificate_value, exact_norm_l1, g_phi_coords, lower_bound, search_lower, sup_norm, ExactL1Config, HFunc,
    SearchConfig,
};
use crate::par;
use crate::sample;
use crate::spaces::{DualTuple, Functional, Space};

pub fn g_phi_eval(phi: &[f64], x: &Functional) -> Result<f64> {
    if phi.len() != x.space().dim() {
        return Err(Error::DimensionMismatch { expected: x.space().dim(), got: phi.len() });
    }
    Ok(g_phi_coords(phi, x.coords()))
}

/// `‖g_φ‖ = Σ_a |φ_a|`.
pub fn g_phi_norm(phi: &[f64]) -> f64 {
    phi.iter().map(|c| c.abs()).sum()
}

/// `{e_a* : φ_a ≠ 0}` over `ℓ1ⁿ`, attaining [`g_phi_norm`].
pub fn g_phi_certificate(phi: &[f64]) -> Result<DualTuple> {
    let space = Space::l1(phi.len());
    let mut fs: Vec<Functional> = (0..phi.len()).filter(|&a| phi[a] != 0.0).map(|a| space.unit_functional(a)).collect();
    if fs.is_empty() {
        fs.push(space.unit_functional(0));
    }
    DualTuple::new(fs)
}

/// Largest number of generating members: the closure has `2^k − 1` elements.
pub const MAX_FAMILY_BASES: usize = 12;

/// The join-closure of finitely many functions: member `mask` is the
/// pointwise max of the bases selected by `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedFamily {
    space: Space,
    bases: Vec<HFunc>,
}

impl DirectedFamily {
    pub fn new(space: Space) -> Self {
        DirectedFamily { space, bases: Vec::new() }
    }

    pub fn from_bases(space: Space, bases: Vec<HFunc>) -> Result<Self> {
        let mut fam = Self::new(space);
        for b in bases {
            fam.insert(b)?;
        }
        Ok(fam)
    }

    /// Adds a member; the closure under pairwise max grows accordingly.
    pub fn insert(&mut self, f: HFunc) -> Result<()> {
        f.validate(self.space)?;
        if !self.space.p().is_one() {
            return Err(Error::InvalidParameter(format!("directed families live over l1, got {}", self.space)));
        }
        if self.bases.len() >= MAX_FAMILY_BASES {
            return Err(Error::InvalidParameter(format!("at most {MAX_FAMILY_BASES} generating members")));
        }
        self.bases.push(f);
        Ok(())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn bases(&self) -> &[HFunc] {
        &self.bases
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Number of members of the closure.
    pub fn len(&self) -> usize {
        (1usize << self.bases.len()) - 1
    }

    /// Member `k` (`0 ≤ k < len()`), the max over the bases in mask `k + 1`.
    pub fn member(&self, k: usize) -> HFunc {
        let mask = k + 1;
        let mut parts: Vec<HFunc> = (0..self.bases.len()).filter(|b| mask >> b & 1 == 1).map(|b| self.bases[b].clone()).collect();
        if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            HFunc::Max(parts)
        }
    }

    /// Index of the member equal to the pointwise max of members `i` and `j`.
    pub fn join_index(&self, i: usize, j: usize) -> usize {
        ((i + 1) | (j + 1)) - 1
    }

    pub fn members(&self) -> Vec<HFunc> {
        (0..self.len()).map(|k| self.member(k)).collect()
    }
}

/// The pointwise max of a nonempty family, itself its largest member.
pub fn directed_sup(family: &DirectedFamily) -> Result<HFunc> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    Ok(family.member(family.len() - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupReport {
    pub sup: HFunc,
    pub member_norms: Vec<f64>,
    pub sup_norm: f64,
    #[serde(serialize_with = "tuple_coords")]
    pub certificate: DualTuple,
}

fn tuple_coords<S: serde::Serializer>(t: &DualTuple, s: S) -> std::result::Result<S::Ok, S::Error> {
    t.coords().serialize(s)
}

/// Norm lower bounds of every member and of the supremum. Every member
/// certificate is also scored on the supremum: for positive members
/// `f ≤ sup` pointwise, so the supremum's bound dominates all of them.
pub fn directed_sup_report(family: &DirectedFamily, cfg: &SearchConfig) -> Result<SupReport> {
    let sup = directed_sup(family)?;
    let space = family.space();
    let members = family.members();
    let ests = par::map_collect(members.len(), |k| search_lower(&members[k], space, cfg));
    let ests = ests.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best: Option<(f64, DualTuple)> = None;
    for e in &ests {
        let v = certificate_value(&sup, &e.certificate);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, e.certificate.clone()));
        }
    }
    let (sup_norm, certificate) = best.expect("nonempty family");
    Ok(SupReport { sup, member_norms: ests.iter().map(|e| e.lower).collect(), sup_norm, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalityReport {
    /// `|x*| ≤ |y*| ⇒ f(x*) ≤ f(y*)` on every sampled pair.
    pub monotone: bool,
    /// `Σ f(x_k*) ≤ f(Σ x_k*)` on sampled nonnegative families.
    pub superadditive: bool,
    /// `‖f‖ = ‖f‖_∞` within `1e-4`.
    pub norm_equals_sup: bool,
    pub norm: f64,
    pub sup: f64,
}

/// Tests the three necessary conditions for `f` to be maximal among
/// positive elements of its norm. Passing does not prove maximality.
pub fn maximality_check(f: &HFunc, space: Space, samples: usize, seed: u64) -> Result<MaximalityReport> {
    f.validate(space)?;
    if !space.p().is_one() {
        return Err(Error::InvalidParameter(format!("maximality is tested over l1, got {space}")));
    }
    let n = space.dim();
    let mut rng = sample::rng(seed);
    let tol = |a: f64, b: f64| 1e-9 * (1.0 + a.abs().max(b.abs()));
    let mut monotone = true;
    let mut superadditive = true;
    for _ in 0..samples {
        let y = sample::gaussian(&mut rng, n);
        let x: Vec<f64> = y
            .iter()
            .map(|v| {
                let t: f64 = rng.random();
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                s * t * v
            })
            .collect();
        let (fx, fy) = (f.eval_coords(&x), f.eval_coords(&y));
        if fx < -1e-12 || fy < -1e-12 {
            return Err(Error::NotPositive { value: fx.min(fy), at: if fx < fy { x } else { y } });
        }
        if fx > fy + tol(fx, fy) {
            monotone = false;
        }
        let k = rng.random_range(2..=4);
        let parts: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let total: Vec<f64> = (0..n).map(|a| parts.iter().map(|p| p[a]).sum()).collect();
        let lhs: f64 = parts.iter().map(|p| f.eval_coords(p)).sum();
        let rhs = f.eval_coords(&total);
        if lhs > rhs + tol(lhs, rhs) {
            superadditive = false;
        }
    }
    let sup = sup_norm(f, space, samples, seed)?;
    let norm = match exact_norm_l1(f, space, &ExactL1Config { seed, ..Default::default() }) {
        Ok(r) => r.value,
        Err(Error::NotPositive { value, at }) => return Err(Error::NotPositive { value, at }),
        Err(_) => search_lower(f, space, &SearchConfig::new(space).seed(seed))?.lower,
    };
    let norm_equals_sup = (norm - sup).abs() <= 1e-4 * norm.abs().max(1.0);
    Ok(MaximalityReport { monotone, superadditive, norm_equals_sup, norm, sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NakanoBound {
    /// `g_φ` dominates the supremum of the family.
    pub phi: Vec<f64>,
    /// `Σφ_a`.
    pub value: f64,
    /// Sound upper bound on `‖sup F‖` from exact separation.
    pub upper: f64,
    /// Largest certified member norm.
    pub max_member_norm: f64,
    pub member_norms: Vec<f64>,
    /// `value` matches `max_member_norm` within `1e-4`.
    pub agrees: bool,
}

/// `y₀ = g_φ` with `φ` minimizing `Σφ` over `g_φ ≥ sup F`, and `‖y₀‖`
/// compared with the member norms.
pub fn strong_nakano_bound(family: &DirectedFamily, cfg: &ExactL1Config) -> Result<NakanoBound> {
    let h = directed_sup(family)?;
    let space = family.space();
    let top = exact_norm_l1(&h, space, cfg)?;
    let members = family.members();
    let norms = par::map_collect(members.len(), |k| {
        let r = exact_norm_l1(&members[k], space, cfg)?;
        lower_bound(&members[k], &r.certificate)
    });
    let member_norms = norms.into_iter().collect::<Result<Vec<_>>>()?;
    let max_member_norm = member_norms.iter().copied().fold(0.0, f64::max);
    let value: f64 = top.phi.iter().sum();
    let agrees = (value - max_member_norm).abs() <= 1e-4 * value.abs().max(1.0);
    Ok(NakanoBound { phi: top.phi, value, upper: top.upper, max_member_norm, member_norms, agrees })
}
