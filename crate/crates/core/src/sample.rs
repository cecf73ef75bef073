//! Seeded random inputs: sphere points, functionals and random terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spaces::{lp_norm, Exponent, Functional, Space, Vector};
use crate::terms::Term;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for stream `k` of `seed` (splitmix64 finalizer).
pub fn child_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A point of the unit sphere of `ℓp^n` (normalized Gaussian direction).
pub fn sphere_point(rng: &mut impl Rng, n: usize, p: Exponent) -> Vec<f64> {
    loop {
        let g = gaussian(rng, n);
        let r = lp_norm(&g, p);
        if r > 1e-12 {
            return g.into_iter().map(|x| x / r).collect();
        }
    }
}

/// A point of the unit ball of `ℓp^n`, radius uniform in `[0, 1]`.
pub fn ball_point(rng: &mut impl Rng, n: usize, p: Exponent) -> Vec<f64> {
    let r: f64 = rng.random();
    sphere_point(rng, n, p).into_iter().map(|x| r * x).collect()
}

/// A functional of dual norm one.
pub fn unit_functional(rng: &mut impl Rng, space: Space) -> Functional {
    space.functional(sphere_point(rng, space.dim(), space.q())).expect("dimension")
}

/// A functional with independent Gaussian coordinates.
pub fn gaussian_functional(rng: &mut impl Rng, space: Space) -> Functional {
    space.functional(gaussian(rng, space.dim())).expect("dimension")
}

pub fn gaussian_vector(rng: &mut impl Rng, space: Space) -> Vector {
    space.vector(gaussian(rng, space.dim())).expect("dimension")
}

/// A vector with small integer coordinates, not all zero.
pub fn integer_vector(rng: &mut impl Rng, space: Space, max: i32) -> Vector {
    loop {
        let c: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-max..=max) as f64).collect();
        if c.iter().any(|&x| x != 0.0) {
            return space.vector(c).expect("dimension");
        }
    }
}

/// A random term of depth at most `depth` with integer generators.
pub fn random_term(rng: &mut impl Rng, space: Space, depth: usize) -> Term {
    if depth == 0 || rng.random_bool(0.25) {
        return Term::Gen(integer_vector(rng, space, 3));
    }
    let sub = |rng: &mut _| random_term(rng, space, depth - 1);
    match rng.random_range(0..6) {
        0 => {
            let c = rng.random_range(-4..=4) as f64 * 0.5;
            Term::scale(c, sub(rng))
        }
        1 => Term::sum(sub(rng), sub(rng)),
        2 => Term::neg(sub(rng)),
        3 => Term::join(sub(rng), sub(rng)),
        4 => Term::meet(sub(rng), sub(rng)),
        _ => Term::abs(sub(rng)),
    }
}

/// A random term that is nonnegative on the whole dual, built from
/// `|δ_v|` leaves with sums, positive scalings, joins and meets.
pub fn random_positive_term(rng: &mut impl Rng, space: Space, depth: usize) -> Term {
    if depth == 0 || rng.random_bool(0.25) {
        return Term::abs(Term::Gen(integer_vector(rng, space, 2)));
    }
    let sub = |rng: &mut _| random_positive_term(rng, space, depth - 1);
    match rng.random_range(0..4) {
        0 => {
            let c = rng.random_range(1..=4) as f64 * 0.5;
            Term::scale(c, sub(rng))
        }
        1 => Term::sum(sub(rng), sub(rng)),
        2 => Term::join(sub(rng), sub(rng)),
        _ => Term::meet(sub(rng), sub(rng)),
    }
}
