//! Difference-of-joins normal form `⋁_i f_i − ⋁_j g_j` with `f_i, g_j`
//! linear combinations of the generators.

use std::collections::HashSet;

use serde::Serialize;

use super::Term;
use crate::error::{Error, Result};
use crate::spaces::{dot, Functional, Space, Vector};

/// Default cap on linear forms per side.
pub const DEFAULT_JOIN_BUDGET: usize = 4096;

/// Coefficients over the generator list of the owning [`DiffOfJoins`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearForm {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffOfJoins {
    space: Space,
    generators: Vec<Vector>,
    pluses: Vec<LinearForm>,
    minuses: Vec<LinearForm>,
}

/// Deduplicating collection of forms with a width cap.
struct FormSet {
    seen: HashSet<Vec<u64>>,
    forms: Vec<Vec<f64>>,
    budget: usize,
}

impl FormSet {
    fn new(budget: usize) -> Self {
        FormSet { seen: HashSet::new(), forms: Vec::new(), budget }
    }

    fn insert(&mut self, mut form: Vec<f64>) -> Result<()> {
        for c in form.iter_mut() {
            if *c == 0.0 {
                *c = 0.0;
            }
        }
        let key: Vec<u64> = form.iter().map(|c| c.to_bits()).collect();
        if self.seen.insert(key) {
            self.forms.push(form);
            if self.forms.len() > self.budget {
                return Err(Error::RewriteBudget { width: self.forms.len(), budget: self.budget });
            }
        }
        Ok(())
    }

    fn pairwise_sums(a: &[Vec<f64>], b: &[Vec<f64>], into: &mut FormSet) -> Result<()> {
        for x in a {
            for y in b {
                into.insert(x.iter().zip(y).map(|(u, v)| u + v).collect())?;
            }
        }
        Ok(())
    }
}

type Sides = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// `⋁A − m` with a single minus form `m` becomes `⋁(A − m) − 0`.
fn shift((plus, minus): Sides) -> Sides {
    if minus.len() != 1 || minus[0].iter().all(|&c| c == 0.0) {
        return (plus, minus);
    }
    let m = &minus[0];
    let mut set = FormSet::new(usize::MAX);
    for p in &plus {
        set.insert(p.iter().zip(m).map(|(a, b)| a - b).collect()).expect("unbounded");
    }
    (set.forms, vec![vec![0.0; m.len()]])
}

impl DiffOfJoins {
    /// Rewrites `t`; fails once either side would exceed `budget` forms.
    pub fn from_term(t: &Term, budget: usize) -> Result<Self> {
        let space = t.check_space()?;
        let generators = t.generators();
        let index = |v: &Vector| generators.iter().position(|g| g.coords() == v.coords()).expect("generator");
        let n = generators.len();
        let (pluses, minuses) = shift(Self::rewrite(t, n, &index, budget)?);
        let wrap = |forms: Vec<Vec<f64>>| forms.into_iter().map(|coeffs| LinearForm { coeffs }).collect();
        Ok(DiffOfJoins { space, generators, pluses: wrap(pluses), minuses: wrap(minuses) })
    }

    fn rewrite(t: &Term, n: usize, index: &impl Fn(&Vector) -> usize, budget: usize) -> Result<Sides> {
        let zero = vec![0.0; n];
        let dedup = |forms: Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
            let mut set = FormSet::new(budget);
            for f in forms {
                set.insert(f)?;
            }
            Ok(set.forms)
        };
        match t {
            Term::Gen(v) => {
                let mut e = zero.clone();
                e[index(v)] = 1.0;
                Ok((vec![e], vec![zero]))
            }
            Term::Neg(inner) => {
                let (p, m) = Self::rewrite(inner, n, index, budget)?;
                Ok((m, p))
            }
            Term::Scale(c, inner) => {
                let (p, m) = Self::rewrite(inner, n, index, budget)?;
                let c = *c;
                let scale = |forms: Vec<Vec<f64>>, k: f64| -> Result<Vec<Vec<f64>>> {
                    dedup(forms.into_iter().map(|f| f.into_iter().map(|x| k * x).collect()).collect())
                };
                if c >= 0.0 {
                    Ok((scale(p, c)?, scale(m, c)?))
                } else {
                    Ok((scale(m, -c)?, scale(p, -c)?))
                }
            }
            Term::Sum(a, b) => {
                let (pa, ma) = Self::rewrite(a, n, index, budget)?;
                let (pb, mb) = Self::rewrite(b, n, index, budget)?;
                let mut plus = FormSet::new(budget);
                FormSet::pairwise_sums(&pa, &pb, &mut plus)?;
                let mut minus = FormSet::new(budget);
                FormSet::pairwise_sums(&ma, &mb, &mut minus)?;
                Ok((plus.forms, minus.forms))
            }
            Term::Join(a, b) => {
                let (pa, ma) = Self::rewrite(a, n, index, budget)?;
                let (pb, mb) = Self::rewrite(b, n, index, budget)?;
                Ok(shift(Self::join_sides(pa, ma, pb, mb, budget)?))
            }
            Term::Meet(a, b) => {
                // a ∧ b = −((−a) ∨ (−b)).
                let (pa, ma) = Self::rewrite(a, n, index, budget)?;
                let (pb, mb) = Self::rewrite(b, n, index, budget)?;
                let (p, m) = Self::join_sides(ma, pa, mb, pb, budget)?;
                Ok(shift((m, p)))
            }
        }
    }

    /// `(⋁A − ⋁B) ∨ (⋁C − ⋁D) = ⋁(A+D ∪ C+B) − ⋁(B+D)`.
    fn join_sides(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
        budget: usize,
    ) -> Result<Sides> {
        let mut plus = FormSet::new(budget);
        FormSet::pairwise_sums(&a, &d, &mut plus)?;
        FormSet::pairwise_sums(&c, &b, &mut plus)?;
        let mut minus = FormSet::new(budget);
        FormSet::pairwise_sums(&b, &d, &mut minus)?;
        Ok((plus.forms, minus.forms))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn pluses(&self) -> &[LinearForm] {
        &self.pluses
    }

    pub fn minuses(&self) -> &[LinearForm] {
        &self.minuses
    }

    /// The point `Σ_l c_l v_l` of `E` represented by a form.
    pub fn form_vector(&self, form: &LinearForm) -> Vec<f64> {
        let mut out = vec![0.0; self.space.dim()];
        for (c, g) in form.coeffs.iter().zip(&self.generators) {
            if *c != 0.0 {
                for (o, x) in out.iter_mut().zip(g.coords()) {
                    *o += c * x;
                }
            }
        }
        out
    }

    pub fn eval(&self, f: &Functional) -> Result<f64> {
        self.space.check_same(&f.space())?;
        Ok(self.eval_coords(f.coords()))
    }

    pub fn eval_coords(&self, f: &[f64]) -> f64 {
        let g: Vec<f64> = self.generators.iter().map(|v| dot(f, v.coords())).collect();
        let best = |forms: &[LinearForm]| forms.iter().map(|l| dot(&l.coeffs, &g)).fold(f64::NEG_INFINITY, f64::max);
        best(&self.pluses) - best(&self.minuses)
    }

    pub fn width(&self) -> (usize, usize) {
        (self.pluses.len(), self.minuses.len())
    }
}
