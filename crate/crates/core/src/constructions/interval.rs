//! Spread of an order interval `[f, g]`: the elements `z_s = (δ_{u_s} ∨ f) ∧ g`
//! and pairwise lower bounds on `‖z_s − z_t‖`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::{search_lower, HFunc, SearchConfig};
use crate::par;
use crate::sample;
use crate::spaces::{Space, Vector};
use crate::terms::Term;

pub const ORDER_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadReport {
    pub space: String,
    /// `bounds[s][t]`: certified lower bound on `‖z_s − z_t‖`; zero on the diagonal.
    pub bounds: Vec<Vec<f64>>,
    /// Smallest off-diagonal entry.
    pub min_off_diagonal: Option<f64>,
}

pub fn interval_element(f: &Term, g: &Term, u: &Vector) -> Term {
    Term::meet(Term::join(Term::Gen(u.clone()), f.clone()), g.clone())
}

pub fn interval_spread(f: &Term, g: &Term, us: &[Vector], cfg: &SearchConfig) -> Result<SpreadReport> {
    let space: Space = f.check_space()?;
    if g.check_space()? != space {
        return Err(Error::SpaceMismatch { left: space.to_string(), right: g.space().to_string() });
    }
    if let Some(u) = us.iter().find(|u| u.space() != space) {
        return Err(Error::SpaceMismatch { left: space.to_string(), right: u.space().to_string() });
    }
    let mut rng = sample::rng(cfg.seed);
    for _ in 0..ORDER_SAMPLES {
        let x = sample::gaussian(&mut rng, space.dim());
        let (fx, gx) = (f.eval_coords(&x), g.eval_coords(&x));
        if fx > gx + 1e-9 * (1.0 + fx.abs().max(gx.abs())) {
            return Err(Error::InvalidParameter(format!("f exceeds g at {x:?}: {fx} > {gx}")));
        }
    }
    let zs: Vec<Term> = us.iter().map(|u| interval_element(f, g, u)).collect();
    let k = zs.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|s| (s + 1..k).map(move |t| (s, t))).collect();
    let vals = par::map_collect(pairs.len(), |i| {
        let (s, t) = pairs[i];
        search_lower(&HFunc::Term(Term::diff(zs[s].clone(), zs[t].clone())), space, cfg).map(|e| e.lower)
    });
    let mut bounds = vec![vec![0.0; k]; k];
    for (&(s, t), v) in pairs.iter().zip(vals) {
        let v = v?;
        bounds[s][t] = v;
        bounds[t][s] = v;
    }
    let min_off_diagonal = pairs.iter().map(|&(s, t)| bounds[s][t]).reduce(f64::min);
    Ok(SpreadReport { space: space.to_string(), bounds, min_off_diagonal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_examples() {
        let s = Space::l1(3);
        let cfg = SearchConfig::new(s).restarts(1).evals(1_000);
        let g = Term::abs(Term::Gen(s.unit_vector(0)));
        let us = vec![s.unit_vector(1), s.unit_vector(2)];
        let r = interval_spread(&Term::zero(s), &g, &us, &cfg).unwrap();
        assert!(r.bounds[0][1] >= 1.0 - 1e-12);
        let z2 = interval_element(&Term::zero(s), &g, &us[0]);
        let z3 = interval_element(&Term::zero(s), &g, &us[1]);
        assert_eq!(z2.eval_coords(&[1.0, 1.0, 0.0]), 1.0);
        assert_eq!(z3.eval_coords(&[1.0, 1.0, 0.0]), 0.0);

        let dup = vec![s.unit_vector(1), s.unit_vector(1)];
        let r = interval_spread(&Term::zero(s), &g, &dup, &cfg).unwrap();
        assert_eq!(r.bounds[0][1], 0.0);

        let r = interval_spread(&g, &g, &us, &cfg).unwrap();
        assert_eq!(r.min_off_diagonal, Some(0.0));

        assert!(interval_spread(&g, &Term::zero(s), &us, &cfg).is_err());
    }
}
