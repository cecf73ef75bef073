//! Step functions on the dyadic grid of `[0, 1]`, the block-sum functions
//! `f_n`, and the mechanics by which their truncations fail to reach `g`.
//!
//! `L1` at resolution `N` is `ℓ1^{2^N}` after scaling cell values by the
//! cell weight `2^{-N}`; dual elements are the cell values `h ∈ L∞` themselves.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{certificate_value, search_lower, upper_bound, HFunc, SearchConfig};
use crate::sample;
use crate::spaces::{DualTuple, Space, Vector};
use crate::terms::Term;

pub const MAX_RESOLUTION: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicGrid {
    resolution: u32,
}

impl DyadicGrid {
    pub fn new(resolution: u32) -> Result<Self> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::InvalidParameter(format!("resolution at most {MAX_RESOLUTION}, got {resolution}")));
        }
        Ok(DyadicGrid { resolution })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cells(&self) -> usize {
        1 << self.resolution
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn space(&self) -> Space {
        Space::l1(self.cells())
    }

    /// The element of `E` with cell values `v`.
    pub fn embed(&self, v: &[f64]) -> Result<Vector> {
        let w = self.weight();
        self.space().vector(v.iter().map(|x| x * w).collect())
    }

    /// `r_j`, `1 ≤ j ≤ N`: `±1` on blocks of `2^{N−j}` cells, starting with `+1`.
    pub fn rademacher(&self, j: u32) -> Result<Vec<f64>> {
        if j == 0 || j > self.resolution {
            return Err(Error::InvalidParameter(format!("r_{j} needs 1 <= j <= {}", self.resolution)));
        }
        let shift = self.resolution - j;
        Ok((0..self.cells()).map(|c| if (c >> shift) & 1 == 0 { 1.0 } else { -1.0 }).collect())
    }

    pub fn integral(&self, h: &[f64]) -> f64 {
        h.iter().sum::<f64>() * self.weight()
    }

    pub fn l1_norm(&self, h: &[f64]) -> f64 {
        h.iter().map(|x| x.abs()).sum::<f64>() * self.weight()
    }

    /// `∫ h·k dμ`.
    pub fn inner(&self, h: &[f64], k: &[f64]) -> f64 {
        h.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() * self.weight()
    }

    /// A step function with values in `2^{-8}ℤ ∩ [−4, 4]`; sums of these are exact.
    pub fn random_step(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.cells()).map(|_| rng.random_range(-1024i32..=1024) as f64 / 256.0).collect()
    }
}

/// `f_n(h) = Σ_j |∫_{I_{n,j}} h dμ|`.
pub fn dyadic_fn(grid: DyadicGrid, n: u32) -> Result<HFunc> {
    if n > grid.resolution() {
        return Err(Error::InvalidParameter(format!("f_{n} needs n <= {}", grid.resolution())));
    }
    Ok(HFunc::Dyadic { n, resolution: grid.resolution() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCheck {
    pub n: u32,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatouReport {
    pub resolution: u32,
    pub g_scale: f64,
    pub samples: usize,
    /// `f_n ≤ f_{n+1}` on every sample.
    pub monotone: bool,
    /// `f_N(h) = ‖h‖₁` on every sample.
    pub finest_is_l1: bool,
    /// `|f_n(h) − f_n(h')| ≤ ‖h − h'‖₁` on every pair.
    pub lipschitz: bool,
    /// `‖f_n‖` from the `𝟙` certificate and the sound upper bound.
    pub norms: Vec<NormCheck>,
    pub norms_are_one: bool,
    /// `g(h_j) = g(h)`, `∫|h_j| ≥ K − ‖h‖₁` and `sup_n f̃_n(h_j) = g(h_j)`.
    pub k_mechanics: bool,
    pub sup_tilde_lower: f64,
    pub g_lower: f64,
    pub gap: bool,
}

impl FatouReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.finest_is_l1 && self.lipschitz && self.norms_are_one && self.k_mechanics && self.gap
    }
}

/// `g = g_scale·|δ_𝟙|` as a function on the grid dual.
pub fn fatou_target(grid: DyadicGrid, g_scale: f64) -> Result<HFunc> {
    let one = grid.embed(&vec![1.0; grid.cells()])?;
    Ok(HFunc::Term(Term::scale(g_scale, Term::abs(Term::Gen(one)))))
}

pub fn fatou_suite(grid: DyadicGrid, g_scale: f64, samples: usize, seed: u64) -> Result<FatouReport> {
    let big_n = grid.resolution();
    if big_n < 3 {
        return Err(Error::InvalidParameter(format!("the suite needs resolution at least 3, got {big_n}")));
    }
    if g_scale <= 1.0 || !g_scale.is_finite() {
        return Err(Error::InvalidParameter(format!("g_scale must exceed 1, got {g_scale}")));
    }
    let space = grid.space();
    let fs: Vec<HFunc> = (1..=big_n).map(|n| dyadic_fn(grid, n)).collect::<Result<_>>()?;
    let g = fatou_target(grid, g_scale)?;
    let tilde: Vec<HFunc> = fs.iter().map(|f| HFunc::Min(vec![g.clone(), f.clone()])).collect();
    let mut rng = sample::rng(seed);

    let (mut monotone, mut finest_is_l1, mut lipschitz, mut k_mechanics) = (true, true, true, true);
    for _ in 0..samples {
        let h = grid.random_step(&mut rng);
        let vals: Vec<f64> = fs.iter().map(|f| f.eval_coords(&h)).collect();
        monotone &= vals.windows(2).all(|w| w[0] <= w[1]);
        finest_is_l1 &= vals[vals.len() - 1] == grid.l1_norm(&h);

        let h2 = grid.random_step(&mut rng);
        let diff: Vec<f64> = h.iter().zip(&h2).map(|(a, b)| a - b).collect();
        let dist = grid.l1_norm(&diff);
        lipschitz &= fs.iter().all(|f| (f.eval_coords(&h) - f.eval_coords(&h2)).abs() <= dist);

        let j = rng.random_range(1..=big_n);
        let r = grid.rademacher(j)?;
        let sup_h = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let k = g_scale * sup_h + grid.l1_norm(&h) + 1.0;
        let hj: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + k * b).collect();
        let g_hj = g.eval_coords(&hj);
        let sup_tilde = tilde.iter().map(|f| f.eval_coords(&hj)).fold(f64::NEG_INFINITY, f64::max);
        k_mechanics &= g_hj == g.eval_coords(&h) && grid.l1_norm(&hj) >= k - grid.l1_norm(&h) && sup_tilde == g_hj;
    }

    let ones = DualTuple::new(vec![space.functional(vec![1.0; grid.cells()])?])?;
    let norms: Vec<NormCheck> =
        fs.iter().zip(1..).map(|(f, n)| NormCheck { n, lower: certificate_value(f, &ones), upper: upper_bound(f, space) }).collect();
    let norms_are_one = norms.iter().all(|c| (c.lower - 1.0).abs() <= 1e-12 && (c.upper - 1.0).abs() <= 1e-12);

    let cfg = SearchConfig::new(space).seed(seed).m_max(4).restarts(1).evals(2_000);
    let mut sup_tilde_lower: f64 = 0.0;
    for f in &tilde {
        sup_tilde_lower = sup_tilde_lower.max(search_lower(f, space, &cfg)?.lower);
    }
    let g_lower = search_lower(&g, space, &cfg)?.lower;
    let gap = sup_tilde_lower <= 1.0 + 1e-6 && g_lower >= g_scale - 1e-6;
    Ok(FatouReport {
        resolution: big_n,
        g_scale,
        samples,
        monotone,
        finest_is_l1,
        lipschitz,
        norms,
        norms_are_one,
        k_mechanics,
        sup_tilde_lower,
        g_lower,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_examples() {
        let grid = DyadicGrid::new(3).unwrap();
        let one = vec![1.0; 8];
        for n in 0..=3 {
            assert_eq!(dyadic_fn(grid, n).unwrap().eval_coords(&one), 1.0);
        }
        let r2 = grid.rademacher(2).unwrap();
        assert_eq!(r2, vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        assert_eq!(dyadic_fn(grid, 1).unwrap().eval_coords(&r2), 0.0);
        assert_eq!(dyadic_fn(grid, 2).unwrap().eval_coords(&r2), 1.0);
        let r1 = grid.rademacher(1).unwrap();
        assert_eq!(dyadic_fn(grid, 1).unwrap().eval_coords(&r1), 1.0);
        assert_eq!(grid.l1_norm(&r1), 1.0);
        assert!(dyadic_fn(grid, 4).is_err());
        assert!(grid.rademacher(0).is_err() && grid.rademacher(4).is_err());
    }

    #[test]
    fn rademacher_orthonormal() {
        let grid = DyadicGrid::new(6).unwrap();
        for i in 1..=6 {
            let ri = grid.rademacher(i).unwrap();
            assert_eq!(grid.integral(&ri), 0.0);
            for j in 1..=6 {
                let rj = grid.rademacher(j).unwrap();
                assert_eq!(grid.inner(&ri, &rj), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(grid.weight() * grid.cells() as f64, 1.0);
    }

    #[test]
    fn k_mechanics_example() {
        let grid = DyadicGrid::new(5).unwrap();
        let g = fatou_target(grid, 1.5).unwrap();
        let h = grid.rademacher(1).unwrap();
        let k = 1.5 * 1.0 + grid.l1_norm(&h) + 1.0;
        let r3 = grid.rademacher(3).unwrap();
        let hj: Vec<f64> = h.iter().zip(&r3).map(|(a, b)| a + k * b).collect();
        assert_eq!(g.eval_coords(&hj), 0.0);
        assert_eq!(g.eval_coords(&h), 0.0);
        let one = vec![1.0; 32];
        let t = HFunc::Min(vec![g, dyadic_fn(grid, 2).unwrap()]);
        assert_eq!(t.eval_coords(&one), 1.0);
    }

    #[test]
    fn suite_at_resolution_five() {
        let r = fatou_suite(DyadicGrid::new(5).unwrap(), 1.5, 300, 7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!((r.sup_tilde_lower - 1.0).abs() < 1e-9);
        assert!((r.g_lower - 1.5).abs() < 1e-9);
        assert!(fatou_suite(DyadicGrid::new(2).unwrap(), 1.5, 10, 0).is_err());
    }
}
