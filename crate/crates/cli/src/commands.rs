use fbl_core::constructions::{
    fatou_suite, harmonic_certificate, interval_spread, nonmember_distance, rademacher_embedding, DyadicGrid,
};
use fbl_core::homext::{extend, hom_lower_bound_certified, riesz_kantorovich, LinOp};
use fbl_core::majorant::{find_majorant, MajorantConfig};
use fbl_core::nakano::{directed_sup_report, maximality_check, strong_nakano_bound, DirectedFamily};
use fbl_core::norm::{exact_norm_l1, parse_hfunc, search_lower, ExactL1Config, HFunc, SearchConfig};
use fbl_core::sample;
use fbl_core::spaces::{lp_norm, Exponent, Space, DEFAULT_SIGN_CAP};
use fbl_core::terms::parse;
use fbl_core::verify::verify_certificate;
use fbl_core::Error;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::{Command, Example, RunConfig};

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invariant(_) | Error::MajorantInfeasible { .. } | Error::LpInfeasible | Error::LpUnbounded
            | Error::LpIterationLimit => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

pub struct Report {
    pub json: Value,
    /// Set when a requested check did not hold; the report is still emitted.
    pub failed: Option<String>,
}

type Out = Result<Report, Failure>;

fn ok(json: Value) -> Out {
    Ok(Report { json, failed: None })
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn from_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::usage(format!("{what}: {e}")))
}

fn space(run: &RunConfig) -> Result<Space, Failure> {
    let tag = run.space.as_deref().ok_or_else(|| Failure::usage("--space p:n is required"))?;
    Ok(tag.parse()?)
}

fn search_config(run: &RunConfig, space: Space) -> SearchConfig {
    let mut cfg = SearchConfig::new(space).seed(run.seed);
    if let Some(m) = run.mmax {
        cfg = cfg.m_max(m as usize);
    }
    if let Some(r) = run.restarts {
        cfg = cfg.restarts(r as usize);
    }
    if let Some(e) = run.evals {
        cfg = cfg.evals(e as usize);
    }
    cfg
}

/// Attaches a `verification` entry and flags disagreement.
fn verified(mut report: Report, run: &RunConfig, f: &HFunc, space: Space, rows: &[Vec<f64>], claimed: f64) -> Out {
    if !run.verify {
        return Ok(report);
    }
    let v = verify_certificate(f, space, rows, claimed)?;
    if !v.agrees {
        report.failed = Some(format!("verified lower bound {} differs from {claimed}", v.lower));
    }
    report.json["verification"] = to_value(&v);
    Ok(report)
}

pub fn dispatch(command: Command, run: &RunConfig) -> Out {
    match command {
        Command::Eval { expr, at } => {
            let s = space(run)?;
            let f = parse_hfunc(&expr, s)?;
            let x = s.functional(from_json("--at", &at)?)?;
            ok(json!({ "expr": f.to_string(), "space": s, "at": x.coords(), "value": f.eval(&x)? }))
        }
        Command::Norm { expr } => norm(&expr, run),
        Command::Extend { expr, matrix, codomain } => {
            let s = space(run)?;
            let t = parse(&expr, s)?;
            let codomain: Space = codomain.parse()?;
            let op = LinOp::new(from_json("--matrix", &matrix)?, s, codomain)?;
            let image = extend(&op, &t)?;
            let bound = hom_lower_bound_certified(&t, &op, DEFAULT_SIGN_CAP)?;
            let json = json!({
                "expr": fbl_core::terms::print(&t),
                "space": s,
                "codomain": codomain,
                "image": image.value,
                "via": image.via,
                "hom_lower_bound": bound.value,
                "op_norm": bound.op_norm,
                "certificate": bound.certificate.as_ref().map(|c| c.coords()),
                "admissibility": bound.certificate.as_ref().map(|c| c.admissibility()),
            });
            match &bound.certificate {
                Some(c) => verified(Report { json, failed: None }, run, &HFunc::Term(t), s, &c.coords(), bound.value),
                None => ok(json),
            }
        }
        Command::Rk { y, us } => {
            let y: Vec<f64> = from_json("--y", &y)?;
            let us: Vec<Vec<f64>> = from_json("--us", &us)?;
            let r = riesz_kantorovich(&y, &us)?;
            let agree = (r.lp - r.closed_form).abs() <= 1e-9 * r.closed_form.abs().max(1.0);
            let report = Report { json: json!({ "y": y, "us": us, "closed_form": r.closed_form, "lp": r.lp, "agree": agree }), failed: None };
            Ok(if agree { report } else { Report { failed: Some("LP and closed form differ".into()), ..report } })
        }
        Command::Majorant { expr, bound, grid } => {
            let s = space(run)?;
            let f = parse_hfunc(&expr, s)?;
            let cfg = MajorantConfig { grid, tol: run.tol.unwrap_or(1e-4), seed: run.seed, ..Default::default() };
            let m = find_majorant(&f, s, bound, &cfg)?;
            let mut report = Report { json: json!({ "expr": f.to_string(), "space": s, "majorant": to_value(&m) }), failed: None };
            if run.verify {
                let residual = majorant_residual(&f, s, &m, run.seed);
                if residual > cfg.tol {
                    report.failed = Some(format!("majorant residual {residual} exceeds {}", cfg.tol));
                }
                report.json["verification"] = json!({ "samples": RESIDUAL_SAMPLES, "residual": residual });
            }
            Ok(report)
        }
        Command::Nakano { family, maximality, samples } => nakano(family, maximality, samples, run),
        Command::Example(e) => example(e, run),
    }
}

fn norm(expr: &str, run: &RunConfig) -> Out {
    let s = space(run)?;
    let f = parse_hfunc(expr, s)?;
    if run.exact_l1 {
        let mut cfg = ExactL1Config { seed: run.seed, ..Default::default() };
        if let Some(t) = run.tol {
            cfg.tol = t;
        }
        let r = exact_norm_l1(&f, s, &cfg)?;
        let mut json = to_value(&r);
        json["expr"] = json!(f.to_string());
        json["space"] = json!(s);
        json["method"] = json!("exact_l1");
        json["admissibility"] = json!(r.certificate.admissibility());
        let rows = r.certificate.coords();
        return verified(Report { json, failed: None }, run, &f, s, &rows, r.lower);
    }
    let est = search_lower(&f, s, &search_config(run, s))?;
    let mut json = to_value(&est);
    json["expr"] = json!(f.to_string());
    json["space"] = json!(s);
    json["method"] = json!("search");
    json["gap"] = if est.upper.is_finite() { json!(est.upper - est.lower) } else { json!("inf") };
    let rows = est.certificate.coords();
    verified(Report { json, failed: None }, run, &f, s, &rows, est.lower)
}

const RESIDUAL_SAMPLES: usize = 10_000;

/// `max (f(x*) − L·f_μ(x*)) / ‖x*‖` over fresh Gaussian functionals.
fn majorant_residual(f: &HFunc, s: Space, m: &fbl_core::majorant::Majorant, seed: u64) -> f64 {
    let mut rng = sample::rng(sample::child_seed(seed, 0xfeed));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..RESIDUAL_SAMPLES {
        let x = sample::gaussian(&mut rng, s.dim());
        let r = lp_norm(&x, s.q());
        worst = worst.max((f.eval_coords(&x) - m.constant * m.measure.eval_coords(&x)) / r);
    }
    worst
}

fn nakano(family: Option<String>, maximality: Option<String>, samples: usize, run: &RunConfig) -> Out {
    let s = space(run)?;
    if let Some(expr) = maximality {
        let f = parse_hfunc(&expr, s)?;
        let r = maximality_check(&f, s, samples, run.seed)?;
        return ok(json!({ "expr": f.to_string(), "space": s, "maximality": to_value(&r) }));
    }
    let family = family.ok_or_else(|| Failure::usage("nakano needs a family or --maximality"))?;
    let members: Vec<String> = from_json("family", &family)?;
    let bases = members.iter().map(|m| parse_hfunc(m, s)).collect::<Result<Vec<_>, _>>()?;
    let fam = DirectedFamily::from_bases(s, bases)?;
    let mut cfg = ExactL1Config { seed: run.seed, ..Default::default() };
    if let Some(t) = run.tol {
        cfg.tol = t;
    }
    let bound = strong_nakano_bound(&fam, &cfg)?;
    let sup = directed_sup_report(&fam, &search_config(run, s))?;
    let json = json!({
        "space": s,
        "members": fam.members().iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "strong_nakano": to_value(&bound),
        "sup": to_value(&sup),
    });
    let mut report = Report { json, failed: None };
    if !bound.agrees {
        report.failed = Some(format!("Σφ = {} but the largest member norm is {}", bound.value, bound.max_member_norm));
    }
    let failed = report.failed.take();
    let mut report = verified(report, run, &sup.sup, s, &sup.certificate.coords(), sup.sup_norm)?;
    report.failed = report.failed.or(failed);
    Ok(report)
}

fn check(report: &mut Report, ok: bool, what: &str) {
    if !ok && report.failed.is_none() {
        report.failed = Some(what.to_string());
    }
}

fn example(e: Example, run: &RunConfig) -> Out {
    match e {
        Example::Harmonic { n } => {
            let r = harmonic_certificate(n)?;
            let mut report = Report { json: to_value(&r), failed: None };
            check(&mut report, (r.lower - r.expected_f64).abs() <= 1e-12, "harmonic bound differs from the exact sum");
            let rows = r.certificate.coords();
            let mut report = verified(report, run, &HFunc::Harmonic(n), Space::l1(n), &rows, r.lower)?;
            report.json["growth"] = json!((1..=n).map(|k| fbl_core::constructions::harmonic_number(k).to_string()).collect::<Vec<_>>());
            Ok(report)
        }
        Example::Distance { n, g } => {
            let g = parse(&g, Space::l1(n))?;
            let r = nonmember_distance(n, &g)?;
            ok(to_value(&r))
        }
        Example::Fatou { grid, gscale, samples } => {
            let r = fatou_suite(DyadicGrid::new(grid)?, gscale, samples, run.seed)?;
            let mut report = Report { json: to_value(&r), failed: None };
            check(&mut report, r.passed(), "Fatou suite check failed");
            Ok(report)
        }
        Example::Rademacher { gamma, p, a_set, grid, coefficients } => {
            let p: Exponent = p.parse()?;
            let a_set: Vec<usize> = a_set
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(Failure::usage(format!("bad index `{s}` in --A (1-based)"))),
                })
                .collect::<Result<_, _>>()?;
            let a: Vec<f64> = match coefficients {
                Some(t) => from_json("--a", &t)?,
                None => vec![1.0; gamma],
            };
            let s = Space::new(gamma, p)?;
            let r = rademacher_embedding(gamma, p, DyadicGrid::new(grid)?, &a_set, &a, &search_config(run, s))?;
            let mut json = to_value(&r);
            json["a_set"] = json!(a_set.iter().map(|k| k + 1).collect::<Vec<_>>());
            let mut report = Report { json, failed: None };
            check(&mut report, r.dichotomy && r.consistent && r.certified >= r.expected, "Rademacher check failed");
            if let (Some(t), Some(v)) = (&r.tuple, r.tuple_lower) {
                let f = HFunc::Term(fbl_core::constructions::abs_sum(s, &a)?);
                let rows = t.coords();
                let failed = report.failed.take();
                report = verified(report, run, &f, s, &rows, v)?;
                report.failed = report.failed.or(failed);
            }
            Ok(report)
        }
        Example::Interval { f, g, us } => {
            let s = space(run)?;
            let (f, g) = (parse(&f, s)?, parse(&g, s)?);
            let us: Vec<Vec<f64>> = from_json("--us", &us)?;
            let us = us.into_iter().map(|u| s.vector(u)).collect::<Result<Vec<_>, _>>()?;
            let r = interval_spread(&f, &g, &us, &search_config(run, s))?;
            ok(to_value(&r))
        }
    }
}
