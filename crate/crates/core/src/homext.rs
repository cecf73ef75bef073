//! Operators `T: E → ℝᵏ`, their lattice-homomorphism extensions `T̂`, operator
//! norms, certificate pullback and the Riesz–Kantorovich formula.
//!
//! The codomain is `ℝᵏ` with the coordinatewise order and an `ℓr` norm.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::par;
use crate::sample;
use crate::spaces::{admissibility_capped, dot, lp_norm, norming_coords, DualTuple, Functional, Space, Vector};
use crate::terms::{DiffOfJoins, Term, DEFAULT_JOIN_BUDGET};

/// Largest domain dimension for exact vertex enumeration on `ℓ∞` domains.
pub const VERTEX_CAP: usize = 20;

/// A `k × n` matrix from `domain` (dimension `n`) to `codomain` (dimension `k`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinOp {
    matrix: Vec<Vec<f64>>,
    domain: Space,
    codomain: Space,
}

/// Two-sided bound on `‖T‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpNorm {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

/// How [`extend`] computed its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    Canonical,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extension {
    pub value: Vec<f64>,
    pub via: Via,
}

impl LinOp {
    pub fn new(matrix: Vec<Vec<f64>>, domain: Space, codomain: Space) -> Result<Self> {
        if matrix.len() != codomain.dim() {
            return Err(Error::Shape(format!("{} rows for codomain {codomain}", matrix.len())));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != domain.dim()) {
            return Err(Error::Shape(format!("row of length {} for domain {domain}", row.len())));
        }
        if matrix.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Shape("matrix entries must be finite".into()));
        }
        Ok(LinOp { matrix, domain, codomain })
    }

    pub fn identity(space: Space) -> Self {
        let n = space.dim();
        let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        LinOp { matrix, domain: space, codomain: space }
    }

    pub fn domain(&self) -> Space {
        self.domain
    }

    pub fn codomain(&self) -> Space {
        self.codomain
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn scaled(&self, c: f64) -> LinOp {
        let matrix = self.matrix.iter().map(|r| r.iter().map(|x| c * x).collect()).collect();
        LinOp { matrix, ..*self }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|&x| x == 0.0)
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        self.domain.check_same(&v.space())?;
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &Vector) -> Vector {
        Vector::from_parts(self.codomain, self.apply_coords(v.coords()))
    }

    pub fn apply_coords(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|r| dot(r, x)).collect()
    }

    /// `T*y` for a functional `y` on the codomain.
    pub fn adjoint_apply(&self, y: &Functional) -> Result<Functional> {
        self.codomain.check_same(&y.space())?;
        Ok(Functional::from_parts(self.domain, self.adjoint_coords(y.coords())))
    }

    pub fn adjoint_coords(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.dim()];
        for (row, &w) in self.matrix.iter().zip(y) {
            if w != 0.0 {
                for (o, x) in out.iter_mut().zip(row) {
                    *o += w * x;
                }
            }
        }
        out
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.iter().map(|r| r[j]).collect()
    }

    fn image_norm(&self, x: &[f64]) -> f64 {
        lp_norm(&self.apply_coords(x), self.codomain.p())
    }

    /// `‖T‖_{1→r}`: largest column norm.
    fn norm_from_l1(&self) -> f64 {
        (0..self.domain.dim()).map(|j| lp_norm(&self.column(j), self.codomain.p())).fold(0.0, f64::max)
    }

    /// `‖T‖_{∞→r}` by enumerating cube vertices with first sign `+1`.
    fn norm_from_linf(&self) -> Option<(f64, Vec<f64>)> {
        let n = self.domain.dim();
        if n > VERTEX_CAP {
            return None;
        }
        let vertex = |mask: usize| -> Vec<f64> {
            (0..n).map(|j| if j == 0 || mask >> (j - 1) & 1 == 0 { 1.0 } else { -1.0 }).collect()
        };
        let (best, value) = par::max_by_index(1 << (n - 1), |mask| self.image_norm(&vertex(mask)));
        Some((value, vertex(best)))
    }

    /// Largest singular value and a right singular vector.
    fn spectral(&self) -> (f64, Vec<f64>) {
        let (k, n) = (self.codomain.dim(), self.domain.dim());
        let m = nalgebra::DMatrix::from_fn(k, n, |i, j| self.matrix[i][j]);
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (i, s) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bs), (i, &s)| if s > bs { (i, s) } else { (bi, bs) });
        (s.max(0.0), v_t.row(i).iter().copied().collect())
    }

    /// Interval containing `‖T‖`. Exact (up to rounding) for `ℓ1` and `ℓ∞`
    /// domains and for `ℓ2 → ℓ2`.
    pub fn op_norm(&self) -> OpNorm {
        self.op_norm_seeded(0)
    }

    pub fn op_norm_seeded(&self, seed: u64) -> OpNorm {
        let p = self.domain.p();
        let r = self.codomain.p();
        if self.is_zero() {
            return OpNorm { lower: 0.0, upper: 0.0, exact: true };
        }
        if p.is_one() {
            let v = self.norm_from_l1();
            return OpNorm { lower: v, upper: v, exact: true };
        }
        let linf = self.norm_from_linf();
        if p.is_infinite() {
            if let Some((v, _)) = linf {
                return OpNorm { lower: v, upper: v, exact: true };
            }
        }
        let (sigma, v) = self.spectral();
        if p.is_two() && r.is_two() {
            let lower = self.image_norm(&v) / lp_norm(&v, p);
            let upper = sigma * (1.0 + 1e-12);
            return OpNorm { lower: lower.min(upper), upper, exact: true };
        }
        let (n, k) = (self.domain.dim() as f64, self.codomain.dim() as f64);
        let inv_p = 1.0 / p.to_f64();
        let inv_r = 1.0 / r.to_f64();
        let mut upper = f64::INFINITY;
        if let Some((v, _)) = &linf {
            upper = upper.min(*v);
        }
        upper = upper.min(n.powf(1.0 - inv_p) * self.norm_from_l1());
        let rows: Vec<f64> = self.matrix.iter().map(|row| lp_norm(row, p.dual())).collect();
        upper = upper.min(lp_norm(&rows, r));
        let c_dom = n.powf(0.5 - inv_p).max(1.0);
        let c_cod = k.powf(inv_r - 0.5).max(1.0);
        upper = upper.min(c_dom * sigma * c_cod * (1.0 + 1e-12));
        let upper = upper * (1.0 + 1e-12);
        let lower = self.sampled_lower(seed, &v).min(upper);
        OpNorm { lower, upper, exact: upper - lower <= 1e-9 * upper.max(1.0) }
    }

    /// `max ‖Tx‖/‖x‖` over columns, the singular direction and random starts,
    /// each refined by the nonlinear power method `x ← J_p*(T* J_r(Tx))`.
    fn sampled_lower(&self, seed: u64, singular: &[f64]) -> f64 {
        let n = self.domain.dim();
        let p = self.domain.p();
        let mut starts: Vec<Vec<f64>> = (0..n).map(|j| Space::l1(n).unit_vector(j).into_coords()).collect();
        starts.push(singular.to_vec());
        let mut rng = sample::rng(seed);
        for _ in 0..16 {
            starts.push(sample::sphere_point(&mut rng, n, p));
        }
        let ratio = |x: &[f64]| {
            let d = lp_norm(x, p);
            if d == 0.0 {
                0.0
            } else {
                self.image_norm(x) / d
            }
        };
        par::map_collect(starts.len(), |i| {
            let mut x = starts[i].clone();
            let mut best = ratio(&x);
            for _ in 0..50 {
                let y = norming_coords(&self.apply_coords(&x), self.codomain.p());
                let z = self.adjoint_coords(&y);
                let next = norming_coords(&z, p.dual());
                let value = ratio(&next);
                if value <= best * (1.0 + 1e-14) {
                    break;
                }
                best = value;
                x = next;
            }
            best
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `T̂(t)`: the image of `t` under the lattice homomorphism extending `T`.
///
/// Uses the difference-of-joins form when it fits in `budget`, and direct
/// coordinatewise evaluation otherwise.
pub fn extend(op: &LinOp, t: &Term) -> Result<Extension> {
    extend_with_budget(op, t, DEFAULT_JOIN_BUDGET)
}

pub fn extend_with_budget(op: &LinOp, t: &Term, budget: usize) -> Result<Extension> {
    let space = t.check_space()?;
    op.domain.check_same(&space)?;
    match DiffOfJoins::from_term(t, budget) {
        Ok(doj) => Ok(Extension { value: extend_canonical(op, &doj), via: Via::Canonical }),
        Err(Error::RewriteBudget { .. }) => Ok(Extension { value: extend_direct(op, t), via: Via::Direct }),
        Err(e) => Err(e),
    }
}

/// `⋁_i T(f_i) − ⋁_j T(g_j)` in `ℝᵏ`.
pub fn extend_canonical(op: &LinOp, doj: &DiffOfJoins) -> Vec<f64> {
    let images: Vec<Vec<f64>> = doj.generators().iter().map(|g| op.apply_coords(g.coords())).collect();
    let k = op.codomain.dim();
    let join = |forms: &[crate::terms::LinearForm]| -> Vec<f64> {
        let mut best = vec![f64::NEG_INFINITY; k];
        for form in forms {
            let mut y = vec![0.0; k];
            for (c, img) in form.coeffs.iter().zip(&images) {
                if *c != 0.0 {
                    for (o, x) in y.iter_mut().zip(img) {
                        *o += c * x;
                    }
                }
            }
            for (b, v) in best.iter_mut().zip(y) {
                *b = b.max(v);
            }
        }
        best
    };
    let (plus, minus) = (join(doj.pluses()), join(doj.minuses()));
    plus.into_iter().zip(minus).map(|(a, b)| a - b).collect()
}

/// Evaluates the term in `ℝᵏ` with `δ_x ↦ Tx` and coordinatewise lattice operations.
pub fn extend_direct(op: &LinOp, t: &Term) -> Vec<f64> {
    t.eval_lattice(&|v| op.apply_coords(v.coords()))
}

/// Lower bound `‖T̂t‖ / ‖T‖` on `‖t‖` together with the pulled-back
/// certificate, when one fits under the sign cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomBound {
    pub value: f64,
    pub image: Vec<f64>,
    pub op_norm: OpNorm,
    pub certificate: Option<DualTuple>,
}

pub fn hom_lower_bound(t: &Term, op: &LinOp) -> Result<f64> {
    hom_lower_bound_certified(t, op, crate::spaces::DEFAULT_SIGN_CAP).map(|b| b.value)
}

/// [`hom_lower_bound`] plus the tuple `T*(y_a e_a*)/‖T‖`, where `y` norms
/// `|T̂t|` in the codomain dual. On that tuple `Σ_a |t(x_a*)|` equals the
/// bound; parallel functionals are merged first.
pub fn hom_lower_bound_certified(t: &Term, op: &LinOp, cap: usize) -> Result<HomBound> {
    let norm = op.op_norm();
    if norm.upper <= 0.0 {
        return Err(Error::ZeroOperator);
    }
    let image = extend(op, t)?.value;
    let value = lp_norm(&image, op.codomain.p()) / norm.upper;
    let abs: Vec<f64> = image.iter().map(|x| x.abs()).collect();
    let y = norming_coords(&abs, op.codomain.p());
    let k = op.codomain.dim();
    let pieces: Vec<Functional> = (0..k)
        .filter(|&a| y[a] > 0.0)
        .map(|a| {
            let mut c = vec![0.0; k];
            c[a] = y[a];
            Functional::from_parts(op.codomain, c)
        })
        .collect();
    let certificate = if pieces.is_empty() {
        None
    } else {
        let merged = merge_parallel(pieces.iter().map(|p| op.adjoint_coords(p.coords())).collect());
        if merged.len() <= cap || op.domain.p().is_one() {
            let fs = merged.into_iter().map(|c| {
                Functional::from_parts(op.domain, c.into_iter().map(|x| x / norm.upper).collect())
            });
            let fs: Vec<Functional> = fs.collect();
            Some(DualTuple::with_cap(fs, cap)?)
        } else {
            None
        }
    };
    Ok(HomBound { value, image, op_norm: norm, certificate })
}

/// Sums functionals that are positive multiples of one another; both the
/// admissibility and `Σ_k |f(x_k*)|` are unchanged by this for positively
/// homogeneous `f`. Zero functionals are dropped.
pub fn merge_parallel(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        if row.iter().all(|&x| x == 0.0) {
            continue;
        }
        match out.iter_mut().find(|o| positively_parallel(o, &row)) {
            Some(o) => o.iter_mut().zip(&row).for_each(|(a, b)| *a += b),
            None => out.push(row),
        }
    }
    out
}

fn positively_parallel(a: &[f64], b: &[f64]) -> bool {
    let Some(i) = a.iter().position(|&x| x != 0.0) else { return false };
    if b[i] == 0.0 || b[i].signum() != a[i].signum() {
        return false;
    }
    let r = b[i] / a[i];
    a.iter().zip(b).all(|(x, y)| y == &(r * x) || (y - r * x).abs() <= 1e-15 * y.abs().max(1.0))
}

/// `{T*(y_k*) / ‖T‖_upper}` for positive functionals `y_k*` on the codomain
/// with `‖Σ y_k*‖ ≤ 1`. The result is checked to be admissible.
pub fn pullback_tuple(op: &LinOp, ys: &[Functional]) -> Result<DualTuple> {
    pullback_tuple_capped(op, ys, crate::spaces::DEFAULT_SIGN_CAP)
}

pub fn pullback_tuple_capped(op: &LinOp, ys: &[Functional], cap: usize) -> Result<DualTuple> {
    if ys.is_empty() {
        return Err(Error::EmptyTuple);
    }
    let k = op.codomain.dim();
    let mut total = vec![0.0; k];
    for y in ys {
        op.codomain.check_same(&y.space())?;
        if let Some(a) = y.coords().iter().position(|&x| x < 0.0) {
            return Err(Error::Negative(format!("codomain functional has coordinate {} < 0 at {a}", y.coords()[a])));
        }
        total.iter_mut().zip(y.coords()).for_each(|(t, x)| *t += x);
    }
    let mass = lp_norm(&total, op.codomain.q());
    if mass > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("dual norm of the sum is {mass} > 1")));
    }
    let norm = op.op_norm();
    if norm.upper <= 0.0 {
        return Err(Error::ZeroOperator);
    }
    let fs: Vec<Functional> = ys
        .iter()
        .map(|y| {
            let c = op.adjoint_coords(y.coords()).into_iter().map(|x| x / norm.upper).collect();
            Functional::from_parts(op.domain, c)
        })
        .collect();
    let a = admissibility_capped(&fs, cap)?;
    if a > 1.0 + 1e-9 {
        return Err(Error::Invariant(format!("pulled-back tuple has admissibility {a}")));
    }
    DualTuple::with_cap(fs, cap)
}

/// Both evaluations of `sup{Σ_k y_k*(u_k) : y_k* ≥ 0, Σ_k y_k* = y*}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszKantorovich {
    pub closed_form: f64,
    pub lp: f64,
}

/// Riesz–Kantorovich value `y*(⋁_k u_k)`, computed in closed form and as an
/// LP over positive decompositions; the two must agree to `1e-9`.
pub fn riesz_kantorovich(y: &[f64], us: &[Vec<f64>]) -> Result<RieszKantorovich> {
    if us.is_empty() {
        return Err(Error::InvalidParameter("no lattice vectors".into()));
    }
    let k = y.len();
    if let Some(u) = us.iter().find(|u| u.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: u.len() });
    }
    if let Some(a) = y.iter().position(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Negative(format!("y* has coordinate {} at {a}", y[a])));
    }
    let closed_form: f64 =
        (0..k).map(|a| y[a] * us.iter().map(|u| u[a]).fold(f64::NEG_INFINITY, f64::max)).sum();
    let m = us.len();
    // Variable (j, a) is the a-th coordinate of y_j*.
    let obj: Vec<f64> = (0..m).flat_map(|j| us[j].iter().copied()).collect();
    let mut problem = LinearProgram::maximize(obj);
    for a in 0..k {
        let mut row = vec![0.0; m * k];
        for j in 0..m {
            row[j * k + a] = 1.0;
        }
        problem.eq(row, y[a]);
    }
    let lp = problem.solve()?.objective;
    let scale = closed_form.abs().max(1.0);
    if (lp - closed_form).abs() > 1e-9 * scale {
        return Err(Error::Invariant(format!("Riesz-Kantorovich mismatch: closed form {closed_form}, LP {lp}")));
    }
    Ok(RieszKantorovich { closed_form, lp })
}

/// Random operator with Gaussian entries.
pub fn random_op(rng: &mut impl Rng, domain: Space, codomain: Space) -> LinOp {
    let matrix = (0..codomain.dim()).map(|_| sample::gaussian(rng, domain.dim())).collect();
    LinOp { matrix, domain, codomain }
}
