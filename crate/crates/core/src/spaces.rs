//! Finite-dimensional `ℓp` spaces, their duals, and tuple admissibility.
//!
//! A [`Space`] is `ℓp(n)` with `p` stored exactly (a rational or `∞`).
//! Vectors live in the space, functionals in its dual, which carries the
//! conjugate exponent. The admissibility of a finite tuple of functionals
//! is the supremum over the unit ball of `x ↦ Σ_k |x_k*(x)|`; it is computed
//! exactly by enumerating sign patterns, since
//! `Σ_k |⟨x_k*, x⟩| = max_σ ⟨Σ_k σ_k x_k*, x⟩` and the inner maximum
//! commutes with the supremum over the ball.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::par;

/// Default cap on the tuple length for sign-pattern enumeration.
pub const DEFAULT_SIGN_CAP: usize = 20;

/// Low bits walked in Gray-code order inside one enumeration chunk. Each
/// chunk restarts from a freshly summed base vector.
const GRAY_CHUNK_BITS: usize = 6;

/// Norm exponent: a rational `p ≥ 1` or `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational64),
    Infinity,
}

impl Exponent {
    pub fn one() -> Self {
        Exponent::Finite(Rational64::one())
    }

    pub fn two() -> Self {
        Exponent::Finite(Rational64::from_integer(2))
    }

    pub fn new(p: Rational64) -> Result<Self> {
        if p < Rational64::one() {
            return Err(Error::InvalidSpace(format!("exponent {p} < 1")));
        }
        Ok(Exponent::Finite(p))
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::one(),
            Exponent::Finite(p) if p.is_one() => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - Rational64::one())),
        }
    }

    pub fn is_one(self) -> bool {
        matches!(self, Exponent::Finite(p) if p.is_one())
    }

    pub fn is_two(self) -> bool {
        self == Exponent::two()
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Infinity => f64::INFINITY,
            Exponent::Finite(p) => p.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(p) if p.is_integer() => write!(f, "{}", p.numer()),
            Exponent::Finite(p) => {
                let decimal = format!("{}", self.to_f64());
                match parse_rational(&decimal) {
                    Some(r) if r == *p => write!(f, "{decimal}"),
                    _ => write!(f, "{}/{}", p.numer(), p.denom()),
                }
            }
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "Inf" | "INF" | "∞" | "infinity") {
            return Ok(Exponent::Infinity);
        }
        let p = parse_rational(s).ok_or_else(|| Error::InvalidSpace(format!("bad exponent `{s}`")))?;
        Exponent::new(p)
    }
}

/// Parses `"3"`, `"1.5"` or `"3/2"` into an exact rational.
fn parse_rational(s: &str) -> Option<Rational64> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    match s.split_once('.') {
        None => s.parse::<i64>().ok().map(Rational64::from_integer),
        Some((int, frac)) => {
            if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
            let scale = 10i64.checked_pow(frac.len() as u32)?;
            let frac: i64 = frac.parse().ok()?;
            let numer = int.checked_mul(scale)?.checked_add(if int < 0 { -frac } else { frac })?;
            Some(Rational64::new(numer, scale))
        }
    }
}

/// The space `ℓp(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Space {
    dim: usize,
    p: Exponent,
}

impl Space {
    pub fn new(dim: usize, p: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        Ok(Space { dim, p })
    }

    /// `ℓ1(n)`.
    pub fn l1(dim: usize) -> Self {
        Space::new(dim, Exponent::one()).expect("dim >= 1")
    }

    /// `ℓ2(n)`.
    pub fn l2(dim: usize) -> Self {
        Space::new(dim, Exponent::two()).expect("dim >= 1")
    }

    /// `ℓ∞(n)`.
    pub fn linf(dim: usize) -> Self {
        Space::new(dim, Exponent::Infinity).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn q(&self) -> Exponent {
        self.p.dual()
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        Vector::new(*self, coords)
    }

    pub fn functional(&self, coords: Vec<f64>) -> Result<Functional> {
        Functional::new(*self, coords)
    }

    pub fn zero_vector(&self) -> Vector {
        Vector { space: *self, coords: vec![0.0; self.dim] }
    }

    pub fn unit_vector(&self, a: usize) -> Vector {
        let mut coords = vec![0.0; self.dim];
        coords[a] = 1.0;
        Vector { space: *self, coords }
    }

    pub fn unit_functional(&self, a: usize) -> Functional {
        let mut coords = vec![0.0; self.dim];
        coords[a] = 1.0;
        Functional { space: *self, coords }
    }

    pub(crate) fn check_same(&self, other: &Space) -> Result<()> {
        if self == other {
            Ok(())
        } else if self.dim != other.dim {
            Err(Error::DimensionMismatch { expected: self.dim, got: other.dim })
        } else {
            Err(Error::SpaceMismatch { left: self.to_string(), right: other.to_string() })
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.p, self.dim)
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, n) = s
            .trim()
            .rsplit_once(':')
            .ok_or_else(|| Error::InvalidSpace(format!("expected `p:n`, got `{s}`")))?;
        let dim: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpace(format!("bad dimension `{n}`")))?;
        Space::new(dim, p.parse()?)
    }
}

impl Serialize for Space {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    space: Space,
    coords: Vec<f64>,
}

/// A point of the dual space; its norm uses the conjugate exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    space: Space,
    coords: Vec<f64>,
}

macro_rules! coord_type {
    ($name:ident) => {
        impl $name {
            pub fn new(space: Space, coords: Vec<f64>) -> Result<Self> {
                if coords.len() != space.dim() {
                    return Err(Error::DimensionMismatch { expected: space.dim(), got: coords.len() });
                }
                Ok($name { space, coords })
            }

            pub fn space(&self) -> Space {
                self.space
            }

            pub fn coords(&self) -> &[f64] {
                &self.coords
            }

            pub fn into_coords(self) -> Vec<f64> {
                self.coords
            }

            pub fn scale(&self, c: f64) -> Self {
                $name { space: self.space, coords: self.coords.iter().map(|x| c * x).collect() }
            }

            pub fn is_zero(&self) -> bool {
                self.coords.iter().all(|&x| x == 0.0)
            }

            pub(crate) fn from_parts(space: Space, coords: Vec<f64>) -> Self {
                debug_assert_eq!(coords.len(), space.dim());
                $name { space, coords }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                self.coords.serialize(serializer)
            }
        }
    };
}

coord_type!(Vector);
coord_type!(Functional);

/// `ℓp` norm of raw coordinates.
pub fn lp_norm(coords: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => coords.iter().fold(0.0, |m, x| m.max(x.abs())),
        p if p.is_one() => coords.iter().map(|x| x.abs()).sum(),
        p if p.is_two() => {
            let scale = coords.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 || !scale.is_finite() {
                return scale;
            }
            scale * coords.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
        }
        p => {
            let pf = p.to_f64();
            let scale = coords.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 || !scale.is_finite() {
                return scale;
            }
            scale * coords.iter().map(|x| (x.abs() / scale).powf(pf)).sum::<f64>().powf(1.0 / pf)
        }
    }
}

/// Norm of `v` in `space`.
pub fn norm(space: &Space, v: &Vector) -> Result<f64> {
    space.check_same(&v.space)?;
    Ok(lp_norm(&v.coords, space.p()))
}

/// Dual norm of `f`, i.e. its `ℓq` norm.
pub fn dual_norm(space: &Space, f: &Functional) -> Result<f64> {
    space.check_same(&f.space)?;
    Ok(lp_norm(&f.coords, space.q()))
}

/// The duality pairing `⟨f, v⟩`.
pub fn pair(f: &Functional, v: &Vector) -> Result<f64> {
    f.space.check_same(&v.space)?;
    Ok(dot(&f.coords, &v.coords))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinates `y` with `‖y‖_r = 1` (when `x ≠ 0`) and `⟨x, y⟩ = ‖x‖_s`,
/// where `r` is the conjugate of `s`.
pub(crate) fn norming_coords(x: &[f64], s: Exponent) -> Vec<f64> {
    let n = lp_norm(x, s);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    match s {
        Exponent::Infinity => {
            let (a, _) = x
                .iter()
                .enumerate()
                .fold((0, -1.0), |(ia, m), (i, v)| if v.abs() > m { (i, v.abs()) } else { (ia, m) });
            let mut y = vec![0.0; x.len()];
            y[a] = x[a].signum();
            y
        }
        s if s.is_one() => x.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect(),
        s => {
            let sf = s.to_f64();
            x.iter()
                .map(|&v| v.signum() * (v.abs() / n).powf(sf - 1.0))
                .map(|v| if v.is_nan() { 0.0 } else { v })
                .collect()
        }
    }
}

/// A norm-one functional attaining `‖v‖` on `v`.
pub fn norming_functional(v: &Vector) -> Functional {
    Functional { space: v.space, coords: norming_coords(&v.coords, v.space.p()) }
}

/// A unit vector at which `f` attains its dual norm.
pub fn norming_vector(f: &Functional) -> Vector {
    Vector { space: f.space, coords: norming_coords(&f.coords, f.space.q()) }
}

/// Result of an admissibility computation with its maximizing sign pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityWitness {
    pub value: f64,
    /// `σ_k` such that `value = ‖Σ_k σ_k x_k*‖_q`.
    pub signs: Vec<f64>,
    /// A point of the unit ball attaining the supremum.
    pub point: Vec<f64>,
}

fn check_tuple(tuple: &[Functional]) -> Result<Space> {
    let first = tuple.first().ok_or(Error::EmptyTuple)?;
    for f in &tuple[1..] {
        first.space.check_same(&f.space)?;
    }
    Ok(first.space)
}

/// `sup_{x ∈ B_E} Σ_k |x_k*(x)|`, exact, with the default cap.
pub fn admissibility(tuple: &[Functional]) -> Result<f64> {
    admissibility_capped(tuple, DEFAULT_SIGN_CAP)
}

/// [`admissibility`] with an explicit sign-pattern cap.
pub fn admissibility_capped(tuple: &[Functional], cap: usize) -> Result<f64> {
    admissibility_witness(tuple, cap).map(|w| w.value)
}

/// Admissibility together with the sign pattern and ball point achieving it.
///
/// For `p = 1` the closed form `max_a Σ_k |x_k*(a)|` is used and no cap
/// applies. For `p = ∞` the cheaper of the two exact enumerations (sign
/// patterns of the tuple, or vertices of the cube) is taken.
pub fn admissibility_witness(tuple: &[Functional], cap: usize) -> Result<AdmissibilityWitness> {
    let space = check_tuple(tuple)?;
    let rows: Vec<&[f64]> = tuple.iter().map(|f| f.coords()).collect();
    admissibility_rows(&rows, space, cap).map_err(|len| Error::TupleTooLong { len, cap })
}

/// Core of [`admissibility_witness`] on raw rows. Errors carry the
/// enumeration length that exceeded the cap.
pub(crate) fn admissibility_rows(
    rows: &[&[f64]],
    space: Space,
    cap: usize,
) -> std::result::Result<AdmissibilityWitness, usize> {
    let m = rows.len();
    let n = space.dim();
    if space.p().is_one() {
        let mut best = (0usize, -1.0f64);
        for a in 0..n {
            let s: f64 = rows.iter().map(|r| r[a].abs()).sum();
            if s > best.1 {
                best = (a, s);
            }
        }
        let a = best.0;
        let signs = rows.iter().map(|r| if r[a] < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut point = vec![0.0; n];
        point[a] = 1.0;
        return Ok(AdmissibilityWitness { value: best.1, signs, point });
    }
    if space.p().is_infinite() && n < m {
        if n > cap {
            return Err(n);
        }
        return Ok(cube_vertex_admissibility(rows, n));
    }
    if m > cap {
        return Err(m);
    }
    let (value, signs) = max_signed_sum_norm(rows, n, space.q());
    let combo: Vec<f64> = (0..n).map(|a| rows.iter().zip(&signs).map(|(r, s)| s * r[a]).sum()).collect();
    let point = norming_coords(&combo, space.q());
    Ok(AdmissibilityWitness { value, signs, point })
}

/// `max_{s ∈ {±1}^n} Σ_k |⟨x_k*, s⟩|`: the `p = ∞` ball is the cube and the
/// convex objective peaks at a vertex.
fn cube_vertex_admissibility(rows: &[&[f64]], n: usize) -> AdmissibilityWitness {
    let total = 1usize << n.saturating_sub(1);
    let eval = |mask: usize| -> f64 {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(a, v)| if a > 0 && (mask >> (a - 1)) & 1 == 1 { -v } else { *v })
                    .sum::<f64>()
                    .abs()
            })
            .sum()
    };
    let (mask, value) = par::max_by_index(total, eval);
    let point: Vec<f64> = (0..n).map(|a| if a > 0 && (mask >> (a - 1)) & 1 == 1 { -1.0 } else { 1.0 }).collect();
    let signs = rows
        .iter()
        .map(|r| if dot(r, &point) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    AdmissibilityWitness { value, signs, point }
}

/// `max_σ ‖Σ_k σ_k r_k‖_q` over `σ ∈ {±1}^m` with `σ_0 = +1`.
fn max_signed_sum_norm(rows: &[&[f64]], n: usize, q: Exponent) -> (f64, Vec<f64>) {
    let m = rows.len();
    let free = m - 1;
    let low = free.min(GRAY_CHUNK_BITS);
    let chunks = 1usize << (free - low);
    let chunk_best = |h: usize| -> (f64, usize) {
        // Signs: bit i of the pattern (for row i+1) set means σ = -1.
        let base_mask = h << low;
        let mut sum = vec![0.0; n];
        for (k, r) in rows.iter().enumerate() {
            let neg = k > 0 && (base_mask >> (k - 1)) & 1 == 1;
            for a in 0..n {
                sum[a] += if neg { -r[a] } else { r[a] };
            }
        }
        let mut best = (lp_norm(&sum, q), base_mask);
        let mut mask = base_mask;
        for g in 1..(1usize << low) {
            let bit = g.trailing_zeros() as usize;
            let row = rows[bit + 1];
            let was_neg = (mask >> bit) & 1 == 1;
            // Flip σ_{bit+1}: +1 → -1 subtracts 2r, -1 → +1 adds 2r.
            let c = if was_neg { 2.0 } else { -2.0 };
            for a in 0..n {
                sum[a] += c * row[a];
            }
            mask ^= 1 << bit;
            let v = lp_norm(&sum, q);
            if v > best.0 {
                best = (v, mask);
            }
        }
        best
    };
    let (_, (value, mask)) = par::max_by_index_with(chunks, chunk_best, |b| b.0);
    let signs = (0..m)
        .map(|k| if k > 0 && (mask >> (k - 1)) & 1 == 1 { -1.0 } else { 1.0 })
        .collect();
    (value, signs)
}

/// A nonempty tuple of functionals on one space with its cached
/// admissibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualTuple {
    functionals: Vec<Functional>,
    admissibility: f64,
}

impl DualTuple {
    pub fn new(functionals: Vec<Functional>) -> Result<Self> {
        Self::with_cap(functionals, DEFAULT_SIGN_CAP)
    }

    pub fn with_cap(functionals: Vec<Functional>, cap: usize) -> Result<Self> {
        let admissibility = admissibility_capped(&functionals, cap)?;
        Ok(DualTuple { functionals, admissibility })
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.functionals
    }

    pub fn admissibility(&self) -> f64 {
        self.admissibility
    }

    pub fn space(&self) -> Space {
        self.functionals[0].space()
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn coords(&self) -> Vec<Vec<f64>> {
        self.functionals.iter().map(|f| f.coords().to_vec()).collect()
    }

    pub fn into_functionals(self) -> Vec<Functional> {
        self.functionals
    }
}

/// Scales a tuple so that its admissibility is one.
pub fn normalize(tuple: Vec<Functional>) -> Result<DualTuple> {
    normalize_capped(tuple, DEFAULT_SIGN_CAP)
}

pub fn normalize_capped(tuple: Vec<Functional>, cap: usize) -> Result<DualTuple> {
    let a = admissibility_capped(&tuple, cap)?;
    if a == 0.0 {
        return Err(Error::DegenerateTuple);
    }
    if a == 1.0 {
        return DualTuple::with_cap(tuple, cap);
    }
    let scaled = tuple.into_iter().map(|f| f.scale(1.0 / a)).collect();
    DualTuple::with_cap(scaled, cap)
}
