//! Dense two-phase simplex, Dantzig pricing with Bland's rule against cycling.
//!
//! Problems are stated as: maximize `cᵀx` subject to rows
//! `aᵢᵀx (≤ | ≥ | =) bᵢ` and `x ≥ 0`. Sizes here are small (tens of
//! variables, a few hundred rows), so a full tableau is fine.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;
/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    max_pivots: usize,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual price of every constraint, in input order. For a maximization
    /// these satisfy `y ≥ 0` on `≤` rows and `y ≤ 0` on `≥` rows.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    /// Maximize `objective · x`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        LinearProgram { n_vars: objective.len(), objective, constraints: Vec::new(), max_pivots: 100_000 }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars, "constraint width");
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Le, rhs)
    }

    pub fn ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add(coeffs, Relation::Eq, rhs)
    }

    pub fn with_pivot_limit(mut self, limit: usize) -> Self {
        self.max_pivots = limit;
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

/// Tableau layout: columns `[structural | slack/surplus | artificial | rhs]`,
/// one row per constraint, objective kept separately.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_slack: usize,
    n_art: usize,
    /// For each constraint: its slack column (if any), artificial column (if
    /// any), and whether the row was negated to make `rhs ≥ 0`.
    row_info: Vec<(Option<usize>, Option<usize>, bool)>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n_struct + self.n_slack + self.n_art
    }

    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.constraints.len();
        let n = lp.n_vars;
        // Normalize each row to rhs >= 0.
        let normalized: Vec<(Vec<f64>, Relation, f64, bool)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs, true)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs, false)
                }
            })
            .collect();
        let n_slack = normalized.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = normalized.iter().filter(|r| r.1 != Relation::Le).count();
        let width = n + n_slack + n_art;
        let mut rows = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0; m];
        let mut row_info = Vec::with_capacity(m);
        let (mut s, mut a) = (n, n + n_slack);
        for (i, (coeffs, rel, rhs, negated)) in normalized.into_iter().enumerate() {
            rows[i][..n].copy_from_slice(&coeffs);
            rows[i][width] = rhs;
            let (mut slack, mut art) = (None, None);
            match rel {
                Relation::Le => {
                    rows[i][s] = 1.0;
                    basis[i] = s;
                    slack = Some(s);
                    s += 1;
                }
                Relation::Ge => {
                    rows[i][s] = -1.0;
                    slack = Some(s);
                    s += 1;
                    rows[i][a] = 1.0;
                    basis[i] = a;
                    art = Some(a);
                    a += 1;
                }
                Relation::Eq => {
                    rows[i][a] = 1.0;
                    basis[i] = a;
                    art = Some(a);
                    a += 1;
                }
            }
            row_info.push((slack, art, negated));
        }
        Tableau { rows, basis, n_struct: n, n_slack, n_art, row_info }
    }

    /// Reduced-cost row for objective `cost` (over all columns) with the
    /// current basis; entry `width` holds the objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut z = vec![0.0; w + 1];
        for (j, zj) in z.iter_mut().enumerate().take(w) {
            *zj = -cost[j];
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (zj, rij) in z.iter_mut().zip(&self.rows[i]) {
                    *zj += cb * rij;
                }
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, c: usize, z: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = z[c];
        if f != 0.0 {
            for (v, pv) in z.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            z[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Simplex on the given cost; columns `>= allowed` never enter. Dantzig
    /// pricing, falling back to Bland's rule after a run of degenerate pivots.
    fn optimize(&mut self, cost: &[f64], allowed: usize, budget: &mut usize) -> Result<Vec<f64>> {
        let w = self.width();
        let mut z = self.reduced_costs(cost);
        let mut stalled = 0usize;
        loop {
            let entering = if stalled < DEGENERATE_RUN {
                (0..allowed).filter(|&j| z[j] < -LP_TOL).min_by(|&a, &b| z[a].total_cmp(&z[b]))
            } else {
                (0..allowed).find(|&j| z[j] < -LP_TOL)
            };
            let Some(c) = entering else { return Ok(z) };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > LP_TOL {
                    let ratio = row[w] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - LP_TOL
                                || ((ratio - lr).abs() <= LP_TOL && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Err(Error::LpUnbounded) };
            if *budget == 0 {
                return Err(Error::LpIterationLimit);
            }
            *budget -= 1;
            let before = z[w];
            self.pivot(r, c, &mut z);
            if (z[w] - before).abs() <= LP_TOL {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let w = self.width();
        let mut budget = lp.max_pivots;
        if self.n_art > 0 {
            // Phase 1: maximize -Σ artificials.
            let mut cost = vec![0.0; w];
            for c in cost.iter_mut().skip(self.n_struct + self.n_slack) {
                *c = -1.0;
            }
            let z = self.optimize(&cost, w, &mut budget)?;
            if z[w] < -LP_TOL * (1.0 + self.rows.len() as f64) {
                return Err(Error::LpInfeasible);
            }
            // Drive artificial variables out of the basis where possible.
            let first_art = self.n_struct + self.n_slack;
            for r in 0..self.rows.len() {
                if self.basis[r] >= first_art {
                    if let Some(c) = (0..first_art).find(|&j| self.rows[r][j].abs() > LP_TOL) {
                        let mut dummy = vec![0.0; w + 1];
                        self.pivot(r, c, &mut dummy);
                    }
                }
            }
        }
        let mut cost = vec![0.0; w];
        cost[..self.n_struct].copy_from_slice(&lp.objective);
        let allowed = self.n_struct + self.n_slack;
        let z = self.optimize(&cost, allowed, &mut budget)?;

        let mut x = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rows[i][w];
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        // y_i = c_B B^{-1} e_i, read off the column that started as e_i.
        let duals = self
            .row_info
            .iter()
            .map(|&(slack, art, negated)| {
                let y = match (slack, art) {
                    (Some(s), None) => z[s],
                    (_, Some(a)) => z[a] - cost[a],
                    (None, None) => 0.0,
                };
                if negated {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution { x, objective, duals, pivots: lp.max_pivots - budget })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.le(vec![1.0, 0.0], 4.0).le(vec![0.0, 2.0], 12.0).le(vec![3.0, 2.0], 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        // Duals (0, 1.5, 1): strong duality b·y = 36.
        let by: f64 = [4.0, 12.0, 18.0].iter().zip(&s.duals).map(|(b, y)| b * y).sum();
        assert!((by - 36.0).abs() < 1e-9);
        assert!((s.duals[1] - 1.5).abs() < 1e-9 && (s.duals[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ge_and_eq_rows_with_duals() {
        // min x + y (max -x - y), x + 2y >= 4, x - y = 1 -> x = 2, y = 1.
        let mut lp = LinearProgram::maximize(vec![-1.0, -1.0]);
        lp.ge(vec![1.0, 2.0], 4.0).eq(vec![1.0, -1.0], 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 3.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
        let by = 4.0 * s.duals[0] + 1.0 * s.duals[1];
        assert!((by - s.objective).abs() < 1e-9, "{:?}", s.duals);
    }

    #[test]
    fn negative_rhs_rows() {
        // max x, -x >= -3  (x <= 3).
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.ge(vec![-1.0], -3.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!((-3.0 * s.duals[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.le(vec![1.0], 1.0).ge(vec![1.0], 2.0);
        assert_eq!(lp.solve().unwrap_err(), Error::LpInfeasible);
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.le(vec![-1.0, 1.0], 1.0);
        assert_eq!(lp.solve().unwrap_err(), Error::LpUnbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example under the largest-coefficient rule.
        let mut lp = LinearProgram::maximize(vec![10.0, -57.0, -9.0, -24.0]);
        lp.le(vec![0.5, -5.5, -2.5, 9.0], 0.0)
            .le(vec![0.5, -1.5, -0.5, 1.0], 0.0)
            .le(vec![1.0, 0.0, 0.0, 0.0], 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }
}
