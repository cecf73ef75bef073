//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::process::Command;
use std::time::Instant;

use fbl_core::constructions::{
    dyadic_fn, fatou_suite, harmonic_certificate, harmonic_number, nonmember_distance, rademacher_embedding, DyadicGrid,
};
use fbl_core::homext::{hom_lower_bound, pullback_tuple, random_op, riesz_kantorovich};
use fbl_core::majorant::{find_majorant, verify_fmu_contraction, DiscreteMeasure, MajorantConfig};
use fbl_core::nakano::{directed_sup, g_phi_norm, strong_nakano_bound, DirectedFamily};
use fbl_core::norm::{exact_norm_l1, search_lower, upper_bound_term, ExactL1Config, HFunc, SearchConfig};
use fbl_core::sample::{self, child_seed};
use fbl_core::spaces::{lp_norm, norm, Exponent, Functional, Space};
use fbl_core::terms::{DiffOfJoins, Term, DEFAULT_JOIN_BUDGET};
use fbl_core::verify::{self, verify_certificate};
use fbl_core::Error;
use rand::Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exps() -> [Exponent; 4] {
    ["1", "1.5", "2", "inf"].map(|p| p.parse().unwrap())
}

fn c1_isometry() -> Outcome {
    let mut rng = sample::rng(1);
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let p = exps()[i as usize % 4];
        let n = rng.random_range(2..=6);
        let s = Space::new(n, p).unwrap();
        let x = sample::gaussian_vector(&mut rng, s);
        let t = Term::Gen(x.clone());
        let nx = norm(&s, &x).unwrap();
        let est = search_lower(&HFunc::Term(t.clone()), s, &SearchConfig::new(s).seed(i)).map_err(|e| e.to_string())?;
        worst = worst.max((est.lower - nx).abs());
        ensure((est.lower - nx).abs() <= 1e-6, || format!("search {} vs ‖x‖ {nx} over {s}", est.lower))?;
        ensure(upper_bound_term(&t) == nx, || format!("upper {} vs ‖x‖ {nx}", upper_bound_term(&t)))?;
    }
    Ok(format!("100 generators, max |lower - ‖x‖| = {worst:.1e}"))
}

fn c2_l1_exactness() -> Outcome {
    let mut rng = sample::rng(2);
    let (mut worst, mut worst_viol) = (0.0f64, f64::NEG_INFINITY);
    for i in 0..50u64 {
        let n = rng.random_range(2..=4);
        let s = Space::l1(n);
        let f = HFunc::Term(sample::random_positive_term(&mut rng, s, 3));
        let ex = exact_norm_l1(&f, s, &ExactL1Config { seed: i, ..Default::default() }).map_err(|e| e.to_string())?;
        let se = search_lower(&f, s, &SearchConfig::new(s).seed(i)).map_err(|e| e.to_string())?;
        let d = (ex.value - se.lower).abs();
        worst = worst.max(d);
        ensure(d <= 1e-4, || format!("exact {} vs search {} for {f}", ex.value, se.lower))?;
        let g = HFunc::GPhi(ex.phi.clone());
        let mut r = sample::rng(child_seed(i, 2));
        for _ in 0..10_000 {
            let x = sample::sphere_point(&mut r, n, Exponent::Infinity);
            let v = f.eval_coords(&x) - g.eval_coords(&x);
            worst_viol = worst_viol.max(v);
        }
        ensure(worst_viol <= 1e-4, || format!("g_φ misses f by {worst_viol} for {f}"))?;
    }
    Ok(format!("50 terms, max |exact - search| = {worst:.1e}, max (f - g_φ) = {worst_viol:.1e}"))
}

fn c3_gphi() -> Outcome {
    let mut rng = sample::rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let n = rng.random_range(1..=6);
        let phi = sample::gaussian(&mut rng, n);
        let s = Space::l1(n);
        let est = search_lower(&HFunc::GPhi(phi.clone()), s, &SearchConfig::new(s).seed(i)).map_err(|e| e.to_string())?;
        let d = (est.lower - g_phi_norm(&phi)).abs();
        worst = worst.max(d);
        ensure(d <= 1e-6, || format!("search {} vs Σ|φ| {} for {phi:?}", est.lower, g_phi_norm(&phi)))?;
    }
    Ok(format!("100 functionals, max |lower - Σ|φ|| = {worst:.1e}"))
}

fn c4_harmonic() -> Outcome {
    let mut prev = 0.0;
    for n in 1..=20 {
        let r = harmonic_certificate(n).map_err(|e| e.to_string())?;
        ensure(r.expected == harmonic_number(n).to_string(), || "rational mismatch".into())?;
        ensure((r.lower - r.expected_f64).abs() <= 1e-12, || format!("N = {n}: {} vs {}", r.lower, r.expected))?;
        ensure(r.lower > prev, || format!("not increasing at N = {n}"))?;
        ensure(r.certificate.admissibility() <= 1.0 + 1e-12, || "inadmissible certificate".into())?;
        prev = r.lower;
    }
    let r4 = harmonic_certificate(4).unwrap();
    let r8 = harmonic_certificate(8).unwrap();
    ensure(r4.expected == "25/12" && r8.expected == "761/280", || "exact values".into())?;
    Ok(format!("N = 1..20 exact; N = 4 -> {}, N = 8 -> {}", r4.expected, r8.expected))
}

fn c5_nonmember() -> Outcome {
    let mut rng = sample::rng(5);
    let mut smallest = f64::INFINITY;
    for n in 2..=4 {
        for _ in 0..25 {
            let g = sample::random_term(&mut rng, Space::l1(n), 3);
            let r = nonmember_distance(n, &g).map_err(|e| e.to_string())?;
            smallest = smallest.min(r.bound);
            ensure(r.max_cancellation_error <= 1e-12, || format!("cancellation error {}", r.max_cancellation_error))?;
            ensure(r.bound >= r.guaranteed - 1e-12 && r.guaranteed >= 0.25, || format!("bound {} for n = {n}", r.bound))?;
        }
    }
    Ok(format!("75 terms, smallest bound {smallest:.4} >= 1/4"))
}

fn c6_riesz_kantorovich() -> Outcome {
    let mut rng = sample::rng(6);
    for _ in 0..200 {
        let k = rng.random_range(1..=5);
        let m = rng.random_range(1..=4);
        let y: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 3.0).collect();
        let us: Vec<Vec<f64>> = (0..m).map(|_| sample::gaussian(&mut rng, k)).collect();
        let r = riesz_kantorovich(&y, &us).map_err(|e| e.to_string())?;
        ensure((r.lp - r.closed_form).abs() <= 1e-9 * r.closed_form.abs().max(1.0), || format!("{r:?}"))?;
    }
    Ok("200 instances agree to 1e-9".into())
}

fn c7_domination() -> Outcome {
    let mut rng = sample::rng(7);
    let (mut accepted, mut worst_adm) = (0, 0.0f64);
    for _ in 0..100 {
        let p = exps()[rng.random_range(0..4)];
        let q = exps()[rng.random_range(0..4)];
        let dom = Space::new(rng.random_range(2..=4), p).unwrap();
        let cod = Space::new(rng.random_range(1..=4), q).unwrap();
        let op = random_op(&mut rng, dom, cod);
        let t = sample::random_term(&mut rng, dom, 3);
        match hom_lower_bound(&t, &op) {
            Ok(b) => ensure(b <= upper_bound_term(&t) + 1e-9, || format!("hom bound {b} > upper {}", upper_bound_term(&t)))?,
            Err(Error::ZeroOperator) => {}
            Err(e) => return Err(e.to_string()),
        }
        let m = rng.random_range(1..=4);
        let raw: Vec<Vec<f64>> = (0..m).map(|_| (0..cod.dim()).map(|_| rng.random::<f64>()).collect()).collect();
        let total: Vec<f64> = (0..cod.dim()).map(|a| raw.iter().map(|r| r[a]).sum()).collect();
        let mass = lp_norm(&total, cod.q());
        let ys: Vec<Functional> = raw.iter().map(|r| cod.functional(r.iter().map(|x| x / mass).collect()).unwrap()).collect();
        match pullback_tuple(&op, &ys) {
            Ok(tuple) => {
                accepted += 1;
                let a = verify::admissibility(&tuple.coords(), dom).map_err(|e| e.to_string())?;
                worst_adm = worst_adm.max(a);
                ensure(a <= 1.0 + 1e-9, || format!("pullback admissibility {a}"))?;
            }
            Err(Error::ZeroOperator | Error::TupleTooLong { .. }) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("100 pairs dominated; {accepted} pullbacks, max admissibility {worst_adm:.6}"))
}

fn c8_fmu() -> Outcome {
    let mut rng = sample::rng(8);
    let mut worst_contraction: f64 = 0.0;
    for i in 0..50u64 {
        let p = [Exponent::one(), Exponent::two(), Exponent::Infinity][i as usize % 3];
        let s = Space::new(rng.random_range(1..=4), p).unwrap();
        let k = rng.random_range(1..=5);
        let mu = DiscreteMeasure::random(&mut rng, s, k).map_err(|e| e.to_string())?;
        let cfg = SearchConfig::new(s).seed(i).restarts(2).evals(2_000);
        let r = verify_fmu_contraction(&mu, &cfg).map_err(|e| e.to_string())?;
        worst_contraction = worst_contraction.max(r.lower);
        ensure(r.lower <= 1.0 + 1e-6, || format!("‖f_μ‖ lower {} over {s}", r.lower))?;
    }
    let s = Space::l2(3);
    let mut worst_residual = f64::NEG_INFINITY;
    for i in 0..20u64 {
        let f = HFunc::Term(sample::random_positive_term(&mut rng, s, 2));
        let m = find_majorant(&f, s, None, &MajorantConfig { seed: i, ..Default::default() }).map_err(|e| e.to_string())?;
        let mut r = sample::rng(child_seed(i, 8));
        for _ in 0..10_000 {
            let x = sample::gaussian(&mut r, 3);
            let v = (f.eval_coords(&x) - m.constant * m.measure.eval_coords(&x)) / lp_norm(&x, s.q());
            worst_residual = worst_residual.max(v);
        }
        ensure(worst_residual <= 1e-4, || format!("majorant residual {worst_residual} for {f}"))?;
    }
    Ok(format!("50 measures, max ‖f_μ‖ lower {worst_contraction:.6}; 20 majorants, max residual {worst_residual:.1e}"))
}

fn c9_nakano() -> Outcome {
    let mut rng = sample::rng(9);
    let (mut worst_gap, mut worst_dom) = (0.0f64, f64::NEG_INFINITY);
    for i in 0..50u64 {
        let n = rng.random_range(2..=4);
        let s = Space::l1(n);
        let k = rng.random_range(1..=3);
        let bases = (0..k).map(|_| HFunc::Term(sample::random_positive_term(&mut rng, s, 3))).collect();
        let fam = DirectedFamily::from_bases(s, bases).map_err(|e| e.to_string())?;
        let b = strong_nakano_bound(&fam, &ExactL1Config { seed: i, ..Default::default() }).map_err(|e| e.to_string())?;
        let gap = (b.value - b.max_member_norm).abs();
        worst_gap = worst_gap.max(gap);
        ensure(gap <= 1e-4, || format!("Σφ = {} vs max member norm {}", b.value, b.max_member_norm))?;
        let h = directed_sup(&fam).unwrap();
        let g = HFunc::GPhi(b.phi.clone());
        let mut r = sample::rng(child_seed(i, 9));
        for _ in 0..10_000 {
            let x = sample::sphere_point(&mut r, n, Exponent::Infinity);
            worst_dom = worst_dom.max(h.eval_coords(&x) - g.eval_coords(&x));
        }
        ensure(worst_dom <= 1e-4, || format!("g_φ below the supremum by {worst_dom}"))?;
    }
    Ok(format!("50 families, max |Σφ - max‖f‖| = {worst_gap:.1e}, max (sup - g_φ) = {worst_dom:.1e}"))
}

fn c10_fatou() -> Outcome {
    let grid = DyadicGrid::new(5).unwrap();
    let r = fatou_suite(grid, 1.5, 1000, 10).map_err(|e| e.to_string())?;
    ensure(r.monotone && r.finest_is_l1, || "monotonicity".into())?;
    ensure(r.lipschitz, || "Lipschitz bound".into())?;
    ensure(r.norms_are_one, || format!("norms {:?}", r.norms))?;
    ensure(r.k_mechanics, || "K mechanics".into())?;
    ensure(r.gap, || format!("gap {} vs {}", r.sup_tilde_lower, r.g_lower))?;
    let one = vec![vec![1.0; grid.cells()]];
    for n in 1..=5 {
        let f = dyadic_fn(grid, n).unwrap();
        let v = verify_certificate(&f, grid.space(), &one, 1.0).map_err(|e| e.to_string())?;
        ensure(v.agrees && v.admissibility == 1.0, || format!("certificate for f_{n}: {v:?}"))?;
    }
    Ok(format!("1000 step functions; sup_n ‖f̃_n‖ >= {} <= 1, ‖g‖ >= {}", r.sup_tilde_lower, r.g_lower))
}

fn c11_rademacher() -> Outcome {
    let mut rng = sample::rng(11);
    let grid = DyadicGrid::new(6).unwrap();
    let mut reaches = 0;
    for i in 0..50u64 {
        let gamma = rng.random_range(1..=6);
        let p: Exponent = if i % 2 == 0 { "1.5".parse().unwrap() } else { Exponent::two() };
        let a: Vec<f64> = loop {
            let a: Vec<f64> = (0..gamma).map(|_| rng.random_range(-5i32..=5) as f64).collect();
            if a.iter().any(|&x| x != 0.0) {
                break a;
            }
        };
        let a_set: Vec<usize> = (0..gamma).filter(|_| rng.random_bool(0.5)).collect();
        let s = Space::new(gamma, p).unwrap();
        let cfg = SearchConfig::new(s).seed(i).restarts(2).evals(2_000);
        let r = rademacher_embedding(gamma, p, grid, &a_set, &a, &cfg).map_err(|e| e.to_string())?;
        ensure(r.dichotomy && r.pairings.iter().all(|&v| v == 0.0 || v == 1.0), || format!("pairings {:?}", r.pairings))?;
        ensure(r.op_norm_sampled <= 1.0 + 1e-12, || format!("sampled ‖T‖ = {}", r.op_norm_sampled))?;
        ensure(r.certified >= r.expected, || format!("certified {} < {}", r.certified, r.expected))?;
        ensure(r.consistent, || format!("search {} or certified {} above upper {}", r.search_lower, r.certified, r.upper))?;
        if let (Some(t), Some(v)) = (&r.tuple, r.tuple_lower) {
            let f = HFunc::Term(fbl_core::constructions::abs_sum(s, &a).unwrap());
            let ver = verify_certificate(&f, s, &t.coords(), v).map_err(|e| e.to_string())?;
            ensure(ver.agrees && ver.lower >= r.expected - 1e-12, || format!("sign tuple {ver:?}"))?;
        }
        reaches += r.search_reaches as usize;
    }
    Ok(format!("50 vectors certified >= Σ|a|/2 exactly; search reaches the bound in {reaches}/50"))
}

fn c12_canonical() -> Outcome {
    let mut rng = sample::rng(12);
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let s = Space::new(rng.random_range(1..=4), exps()[i % 4]).unwrap();
        let t = sample::random_term(&mut rng, s, 4);
        let x = sample::gaussian(&mut rng, s.dim());
        match DiffOfJoins::from_term(&t, DEFAULT_JOIN_BUDGET) {
            Ok(d) => {
                let (a, b) = (t.eval_coords(&x), d.eval_coords(&x));
                let rel = (a - b).abs() / a.abs().max(1.0);
                worst = worst.max(rel);
                ensure(rel <= 1e-9, || format!("AST {a} vs canonical {b}"))?;
            }
            Err(Error::RewriteBudget { .. }) => skipped += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    ensure(skipped == 0, || format!("{skipped} terms exceeded the rewrite budget"))?;
    Ok(format!("1000 pairs, max relative difference {worst:.1e}"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fbl")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn c13_determinism() -> Outcome {
    let runs: Vec<Vec<&str>> = vec![
        vec!["norm", "--space", "2:3", "(|d([1,2,0])| /\\ |d([0,1,-1])|) + |d([1,0,1])|", "--seed", "5"],
        vec!["norm", "--space", "1:3", "--exact-l1", "|d([1,-1,0])| \\/ |d([0,1,2])|", "--seed", "2"],
        vec!["norm", "--space", "inf:2", "fmu:{\"atoms\":[[1,0.5],[0,-1]],\"weights\":[0.25,0.75]}", "--seed", "1"],
        vec!["nakano", "--space", "1:2", "[\"|d([1,0])|\", \"|d([1,1])| /\\\\ |d([0,1])|\"]", "--seed", "3"],
        vec!["example", "harmonic", "--N", "6"],
        vec!["example", "rademacher", "--gamma", "4", "--p", "2", "--A", "1,3", "--a", "[1,-2,3,-4]"],
        vec!["extend", "--space", "2:2", "|d([1,0])| \\/ d([0,1])", "--matrix", "[[1,1],[0,2]]", "--codomain", "1:2"],
    ];
    let mut verified = 0;
    for args in &runs {
        let mut with_verify = args.clone();
        with_verify.push("--verify");
        let a = run_cli(&with_verify)?;
        let mut single = with_verify.clone();
        single.extend(["--threads", "1"]);
        let b = run_cli(&with_verify)?;
        let c = run_cli(&single)?;
        ensure(a == b && a == c, || format!("{args:?} not reproducible"))?;
        let json: Value = serde_json::from_str(&a).map_err(|e| e.to_string())?;
        if let Some(v) = json.get("verification") {
            ensure(v["agrees"] == Value::Bool(true), || format!("{args:?}: verification {v}"))?;
            verified += 1;
        }
    }
    ensure(verified == runs.len(), || format!("only {verified}/{} reports carried a verification", runs.len()))?;
    Ok(format!("{} commands byte-identical across reruns and thread counts; all re-verified", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("isometry on generators", c1_isometry),
        ("l1 exactness", c2_l1_exactness),
        ("g_phi norms", c3_gphi),
        ("harmonic certificates", c4_harmonic),
        ("non-membership distance", c5_nonmember),
        ("Riesz-Kantorovich", c6_riesz_kantorovich),
        ("extension domination", c7_domination),
        ("f_mu contraction and majorants", c8_fmu),
        ("strong Nakano bound", c9_nakano),
        ("dyadic / Fatou suite", c10_fatou),
        ("Rademacher embedding", c11_rademacher),
        ("canonical form", c12_canonical),
        ("determinism and verification", c13_determinism),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let start = Instant::now();
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", k + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {failures} failing, {:.1}s total", start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
