use proptest::prelude::*;

use fbl_core::constructions::{abs_sum, dyadic_fn, harmonic_number, rademacher_operator, xi, DyadicGrid};
use fbl_core::homext::{extend, random_op, riesz_kantorovich};
use fbl_core::majorant::{f_mu_eval, DiscreteMeasure};
use fbl_core::nakano::{directed_sup, g_phi_certificate, g_phi_norm, DirectedFamily};
use fbl_core::norm::{lower_bound, search_lower, upper_bound, HFunc, SearchConfig};
use fbl_core::sample;
use fbl_core::spaces::{admissibility, normalize, Exponent, Functional, Space};
use fbl_core::terms::{parse, print, DiffOfJoins, DEFAULT_JOIN_BUDGET};
use fbl_core::verify::verify_certificate;

fn space_strategy() -> impl Strategy<Value = Space> {
    let p = prop_oneof![Just("1"), Just("2"), Just("inf"), Just("3/2"), Just("3")];
    (1usize..=4, p).prop_map(|(n, p)| Space::new(n, p.parse::<Exponent>().unwrap()).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admissibility_ignores_signs_and_order(space in space_strategy(), m in 1usize..6, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let fs: Vec<Functional> = (0..m).map(|_| sample::gaussian_functional(&mut rng, space)).collect();
        let base = admissibility(&fs).unwrap();
        let mut flipped: Vec<Functional> = fs.iter().enumerate().map(|(k, f)| if k % 2 == 0 { f.scale(-1.0) } else { f.clone() }).collect();
        flipped.reverse();
        prop_assert!(close(base, admissibility(&flipped).unwrap(), 1e-9));
        let scaled: Vec<Functional> = fs.iter().map(|f| f.scale(2.5)).collect();
        prop_assert!(close(2.5 * base, admissibility(&scaled).unwrap(), 1e-9));
        prop_assert!(normalize(fs).unwrap().admissibility() <= 1.0 + 1e-9);
    }

    #[test]
    fn canonical_form_matches_tree(space in space_strategy(), seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_term(&mut rng, space, 3);
        let d = DiffOfJoins::from_term(&t, DEFAULT_JOIN_BUDGET).unwrap();
        for _ in 0..20 {
            let x = sample::gaussian_functional(&mut rng, space);
            prop_assert!(close(t.eval(&x).unwrap(), d.eval(&x).unwrap(), 1e-9));
        }
    }

    #[test]
    fn terms_are_positively_homogeneous(space in space_strategy(), seed in any::<u64>(), c in 0.01f64..50.0) {
        let mut rng = sample::rng(seed);
        let t = sample::random_term(&mut rng, space, 3);
        let x = sample::gaussian_functional(&mut rng, space);
        prop_assert!(close(c * t.eval(&x).unwrap(), t.eval(&x.scale(c)).unwrap(), 1e-9));
    }

    #[test]
    fn print_then_parse_is_identity(space in space_strategy(), seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_term(&mut rng, space, 3);
        let back = parse(&print(&t), space).unwrap();
        prop_assert_eq!(print(&back), print(&t));
        let x = sample::gaussian_functional(&mut rng, space);
        prop_assert!(close(t.eval(&x).unwrap(), back.eval(&x).unwrap(), 1e-9));
    }

    #[test]
    fn extension_is_evaluation_on_adjoint_rows(space in space_strategy(), k in 1usize..4, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let codomain = Space::new(k, space.p()).unwrap();
        let op = random_op(&mut rng, space, codomain);
        let t = sample::random_term(&mut rng, space, 3);
        let image = extend(&op, &t).unwrap();
        for (value, row) in image.value.iter().zip(op.matrix()) {
            prop_assert!(close(*value, t.eval_coords(row), 1e-9));
        }
    }

    #[test]
    fn riesz_kantorovich_closed_form_matches_lp(n in 1usize..5, m in 1usize..5, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let y: Vec<f64> = sample::gaussian(&mut rng, n).into_iter().map(f64::abs).collect();
        let us: Vec<Vec<f64>> = (0..m).map(|_| sample::gaussian(&mut rng, n)).collect();
        let rk = riesz_kantorovich(&y, &us).unwrap();
        prop_assert!(close(rk.closed_form, rk.lp, 1e-9));
    }

    #[test]
    fn f_mu_is_homogeneous_and_sublinear(space in space_strategy(), k in 1usize..5, seed in any::<u64>(), c in 0.01f64..20.0) {
        let mut rng = sample::rng(seed);
        let mu = DiscreteMeasure::random(&mut rng, space, k).unwrap();
        let total: f64 = mu.weights().iter().sum();
        prop_assert!(close(total, 1.0, 1e-12));
        let x = sample::gaussian_functional(&mut rng, space);
        let y = sample::gaussian_functional(&mut rng, space);
        let fx = f_mu_eval(&mu, &x).unwrap();
        prop_assert!(close(c * fx, f_mu_eval(&mu, &x.scale(c)).unwrap(), 1e-9));
        let sum = space.functional(x.coords().iter().zip(y.coords()).map(|(a, b)| a + b).collect()).unwrap();
        prop_assert!(f_mu_eval(&mu, &sum).unwrap() <= fx + f_mu_eval(&mu, &y).unwrap() + 1e-9);
    }

    #[test]
    fn g_phi_certificate_is_tight(n in 1usize..7, seed in any::<u64>()) {
        let phi = sample::gaussian(&mut sample::rng(seed), n);
        let cert = g_phi_certificate(&phi).unwrap();
        prop_assert!(cert.admissibility() <= 1.0 + 1e-12);
        let lower = lower_bound(&HFunc::GPhi(phi.clone()), &cert).unwrap();
        prop_assert!(close(lower, g_phi_norm(&phi), 1e-9));
        prop_assert!(close(upper_bound(&HFunc::GPhi(phi.clone()), Space::l1(n)), g_phi_norm(&phi), 1e-9));
    }

    #[test]
    fn directed_sup_dominates_members(n in 1usize..4, k in 1usize..4, seed in any::<u64>()) {
        let space = Space::l1(n);
        let mut rng = sample::rng(seed);
        let bases: Vec<HFunc> = (0..k).map(|_| HFunc::Term(sample::random_positive_term(&mut rng, space, 2))).collect();
        let family = DirectedFamily::from_bases(space, bases).unwrap();
        prop_assert_eq!(family.len(), (1 << k) - 1);
        let sup = directed_sup(&family).unwrap();
        for _ in 0..10 {
            let x = sample::gaussian_functional(&mut rng, space);
            let s = sup.eval(&x).unwrap();
            for member in family.members() {
                prop_assert!(member.eval(&x).unwrap() <= s + 1e-12);
            }
        }
    }

    #[test]
    fn dyadic_functions_increase_with_resolution(resolution in 1u32..6, seed in any::<u64>()) {
        let grid = DyadicGrid::new(resolution).unwrap();
        let mut rng = sample::rng(seed);
        let h = grid.random_step(&mut rng);
        let x = grid.space().functional(h.clone()).unwrap();
        let values: Vec<f64> = (0..=resolution).map(|n| dyadic_fn(grid, n).unwrap().eval(&x).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!(close(values[resolution as usize], grid.l1_norm(&h), 1e-12));
    }

    #[test]
    fn search_never_exceeds_upper_bound(space in space_strategy(), seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let f = HFunc::Term(sample::random_term(&mut rng, space, 2));
        let est = search_lower(&f, space, &SearchConfig::new(space).restarts(1).evals(300).seed(seed)).unwrap();
        prop_assert!(est.lower <= est.upper * (1.0 + 1e-9) + 1e-12);
        prop_assert!(est.certificate.admissibility() <= 1.0 + 1e-9);
        if est.certificate.len() <= 20 {
            let v = verify_certificate(&f, space, &est.certificate.coords(), est.lower).unwrap();
            prop_assert!(v.agrees, "{:?}", v);
        }
    }
}

#[test]
fn rademacher_functions_are_orthonormal() {
    let grid = DyadicGrid::new(6).unwrap();
    let rs: Vec<Vec<f64>> = (1..=6).map(|j| grid.rademacher(j).unwrap()).collect();
    for (i, a) in rs.iter().enumerate() {
        for (j, b) in rs.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((grid.inner(a, b) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn xi_pairs_to_the_indicator_of_a() {
    let grid = DyadicGrid::new(5).unwrap();
    let space = Space::new(4, "3/2".parse().unwrap()).unwrap();
    let op = rademacher_operator(space, grid, &[0, 2]).unwrap();
    for g in 0..4 {
        let mut a = vec![0.0; 4];
        a[g] = 1.0;
        let v = xi(&op, &abs_sum(space, &a).unwrap()).unwrap();
        let expected = if g == 0 || g == 2 { 1.0 } else { 0.0 };
        assert!((v - expected).abs() < 1e-12, "γ = {g}: {v}");
    }
}

#[test]
fn harmonic_numbers_are_exact() {
    assert_eq!(harmonic_number(1).to_string(), "1");
    assert_eq!(harmonic_number(3).to_string(), "11/6");
    assert_eq!(harmonic_number(10).to_string(), "7381/2520");
}
