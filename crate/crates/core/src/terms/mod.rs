//! Free vector lattice terms over generator vectors.
//!
//! A [`Term`] is an expression built from generators `δ_v` with linear and
//! lattice operations. It denotes the positively homogeneous function
//! `x* ↦ eval(x*)` on the dual, where `δ_v(x*) = x*(v)` and joins/meets are
//! pointwise max/min.

mod canonical;
mod parse;

pub use canonical::{DiffOfJoins, LinearForm, DEFAULT_JOIN_BUDGET};
pub use parse::{parse, print};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::homext::LinOp;
use crate::spaces::{dot, Functional, Space, Vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Gen(Vector),
    Scale(f64, Box<Term>),
    Sum(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Join(Box<Term>, Box<Term>),
    Meet(Box<Term>, Box<Term>),
}

impl Term {
    pub fn gen(v: Vector) -> Term {
        Term::Gen(v)
    }

    /// The zero element, as the generator of the zero vector.
    pub fn zero(space: Space) -> Term {
        Term::Gen(space.zero_vector())
    }

    pub fn scale(c: f64, t: Term) -> Term {
        Term::Scale(c, Box::new(t))
    }

    pub fn sum(a: Term, b: Term) -> Term {
        Term::Sum(Box::new(a), Box::new(b))
    }

    pub fn diff(a: Term, b: Term) -> Term {
        Term::sum(a, Term::neg(b))
    }

    pub fn neg(t: Term) -> Term {
        Term::Neg(Box::new(t))
    }

    pub fn join(a: Term, b: Term) -> Term {
        Term::Join(Box::new(a), Box::new(b))
    }

    pub fn meet(a: Term, b: Term) -> Term {
        Term::Meet(Box::new(a), Box::new(b))
    }

    /// `|t| = t ∨ (-t)`.
    pub fn abs(t: Term) -> Term {
        Term::join(t.clone(), Term::neg(t))
    }

    /// `t⁺ = t ∨ 0`.
    pub fn pos(t: Term) -> Term {
        let space = t.space();
        Term::join(t, Term::zero(space))
    }

    /// Left-nested join of a nonempty list.
    pub fn join_all(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::join)
    }

    /// Left-nested meet of a nonempty list.
    pub fn meet_all(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::meet)
    }

    /// Left-nested sum of a nonempty list.
    pub fn sum_all(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::sum)
    }

    /// If this node is `a ∨ (-a)`, returns `a`.
    pub fn as_abs(&self) -> Option<&Term> {
        match self {
            Term::Join(a, b) => match b.as_ref() {
                Term::Neg(inner) if inner.as_ref() == a.as_ref() => Some(a),
                _ => None,
            },
            _ => None,
        }
    }

    /// The space of the first generator. Terms always contain one.
    pub fn space(&self) -> Space {
        match self {
            Term::Gen(v) => v.space(),
            Term::Scale(_, t) | Term::Neg(t) => t.space(),
            Term::Sum(a, _) | Term::Join(a, _) | Term::Meet(a, _) => a.space(),
        }
    }

    /// Checks that every generator lives in one space and returns it.
    pub fn check_space(&self) -> Result<Space> {
        let space = self.space();
        let mut err = None;
        self.visit_gens(&mut |v| {
            if err.is_none() {
                if let Err(e) = space.check_same(&v.space()) {
                    err = Some(e);
                }
            }
        });
        match err {
            None => Ok(space),
            Some(e) => Err(e),
        }
    }

    pub fn visit_gens(&self, f: &mut impl FnMut(&Vector)) {
        match self {
            Term::Gen(v) => f(v),
            Term::Scale(_, t) | Term::Neg(t) => t.visit_gens(f),
            Term::Sum(a, b) | Term::Join(a, b) | Term::Meet(a, b) => {
                a.visit_gens(f);
                b.visit_gens(f);
            }
        }
    }

    /// Distinct generator vectors, by exact coordinate equality, in order of
    /// first appearance.
    pub fn generators(&self) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::new();
        self.visit_gens(&mut |v| {
            if !out.iter().any(|w| w.coords() == v.coords()) {
                out.push(v.clone());
            }
        });
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Gen(_) => 1,
            Term::Scale(_, t) | Term::Neg(t) => 1 + t.size(),
            Term::Sum(a, b) | Term::Join(a, b) | Term::Meet(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Gen(_) => 0,
            Term::Scale(_, t) | Term::Neg(t) => 1 + t.depth(),
            Term::Sum(a, b) | Term::Join(a, b) | Term::Meet(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// True if no join or meet occurs.
    pub fn is_linear(&self) -> bool {
        match self {
            Term::Gen(_) => true,
            Term::Scale(_, t) | Term::Neg(t) => t.is_linear(),
            Term::Sum(a, b) => a.is_linear() && b.is_linear(),
            Term::Join(..) | Term::Meet(..) => false,
        }
    }

    /// For a lattice-free term, the vector `Σ c_l v_l` it equals.
    pub fn linear_value(&self) -> Option<Vec<f64>> {
        match self {
            Term::Gen(v) => Some(v.coords().to_vec()),
            Term::Scale(c, t) => t.linear_value().map(|v| v.into_iter().map(|x| c * x).collect()),
            Term::Neg(t) => t.linear_value().map(|v| v.into_iter().map(|x| -x).collect()),
            Term::Sum(a, b) => {
                let (a, b) = (a.linear_value()?, b.linear_value()?);
                Some(a.iter().zip(&b).map(|(x, y)| x + y).collect())
            }
            Term::Join(..) | Term::Meet(..) => None,
        }
    }

    /// Evaluates at `f`, checking spaces first.
    pub fn eval(&self, f: &Functional) -> Result<f64> {
        let space = self.check_space()?;
        space.check_same(&f.space())?;
        Ok(self.eval_coords(f.coords()))
    }

    /// Evaluation on raw dual coordinates; the caller guarantees dimensions.
    pub fn eval_coords(&self, f: &[f64]) -> f64 {
        match self {
            Term::Gen(v) => dot(f, v.coords()),
            Term::Scale(c, t) => c * t.eval_coords(f),
            Term::Sum(a, b) => a.eval_coords(f) + b.eval_coords(f),
            Term::Neg(t) => -t.eval_coords(f),
            Term::Join(a, b) => a.eval_coords(f).max(b.eval_coords(f)),
            Term::Meet(a, b) => a.eval_coords(f).min(b.eval_coords(f)),
        }
    }

    /// Evaluates the term in `ℝᵏ` with coordinatewise lattice operations,
    /// sending each generator `v` to `image(v)`.
    pub fn eval_lattice(&self, image: &impl Fn(&Vector) -> Vec<f64>) -> Vec<f64> {
        match self {
            Term::Gen(v) => image(v),
            Term::Scale(c, t) => t.eval_lattice(image).into_iter().map(|x| c * x).collect(),
            Term::Neg(t) => t.eval_lattice(image).into_iter().map(|x| -x).collect(),
            Term::Sum(a, b) => zip_with(a.eval_lattice(image), b.eval_lattice(image), |x, y| x + y),
            Term::Join(a, b) => zip_with(a.eval_lattice(image), b.eval_lattice(image), f64::max),
            Term::Meet(a, b) => zip_with(a.eval_lattice(image), b.eval_lattice(image), f64::min),
        }
    }

    /// Replaces every generator `δ_v` by `δ_{Tv}`.
    pub fn substitute(&self, op: &LinOp) -> Result<Term> {
        let space = self.check_space()?;
        op.domain().check_same(&space).map_err(|_| {
            Error::Shape(format!("operator domain {} does not match term space {space}", op.domain()))
        })?;
        Ok(self.map_gens(&|v| op.apply_unchecked(v)))
    }

    pub(crate) fn map_gens(&self, f: &impl Fn(&Vector) -> Vector) -> Term {
        match self {
            Term::Gen(v) => Term::Gen(f(v)),
            Term::Scale(c, t) => Term::scale(*c, t.map_gens(f)),
            Term::Neg(t) => Term::neg(t.map_gens(f)),
            Term::Sum(a, b) => Term::sum(a.map_gens(f), b.map_gens(f)),
            Term::Join(a, b) => Term::join(a.map_gens(f), b.map_gens(f)),
            Term::Meet(a, b) => Term::meet(a.map_gens(f), b.map_gens(f)),
        }
    }

    /// Canonical difference-of-joins form under the default budget.
    pub fn to_diff_of_joins(&self) -> Result<DiffOfJoins> {
        DiffOfJoins::from_term(self, DEFAULT_JOIN_BUDGET)
    }
}

fn zip_with(a: Vec<f64>, b: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Generator `δ_v` for a raw coordinate list.
pub fn gen(space: Space, coords: &[f64]) -> Result<Term> {
    Ok(Term::Gen(space.vector(coords.to_vec())?))
}
