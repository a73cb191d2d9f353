//! Subcommand implementations: each builds a serializable report plus a text rendering.

use std::fmt::Write as _;

use anyhow::anyhow;
use num_complex::Complex64;
use num_rational::Rational64;
use serde::Serialize;
use serde_json::Value;
use vw3d_core::bethe::{self, closed_forms, limits, BetheError, BetheParams, SValue, SweepReport};
use vw3d_core::brst::{self, BrstError, CheckOptions, ClosureReport};
use vw3d_core::floer::{self, superspace, FloerError, HfManifold};
use vw3d_core::kahler::{self, KahlerError};
use vw3d_core::series::{ExactComplex, PuiseuxSeries, Var};

use crate::{AsymptoticsArgs, BrstArgs, EllipticArgs, FloerArgs, Regime, SweepArgs, VerlindeArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_RESIDUAL: u8 = 4;

/// Relative tolerance of the genus-0 comparison with the closed form.
pub const GENUS0_REL_TOL: f64 = 1e-8;

pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub code: u8,
}

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: e.into() }
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_NUMERICAL, error: e.into() }
}

fn bethe_err(e: BetheError) -> Failure {
    match e {
        BetheError::BadParameter(_) => usage(e),
        _ => numerical(e),
    }
}

fn limit_err(e: limits::LimitError) -> Failure {
    match e {
        limits::LimitError::UnknownManifold(_) => usage(e),
        _ => numerical(e),
    }
}

fn kahler_err(e: KahlerError) -> Failure {
    match e {
        KahlerError::BadN { .. } | KahlerError::BadOrder(_) | KahlerError::UnsupportedTopology(_) => usage(e),
        _ => numerical(e),
    }
}

fn floer_err(e: FloerError) -> Failure {
    match e {
        FloerError::Division(_) | FloerError::Series(_) => numerical(e),
        _ => usage(e),
    }
}

fn brst_err(e: BrstError) -> Failure {
    match e {
        BrstError::RuleMissing { .. } => numerical(e),
        _ => usage(e),
    }
}

fn outcome<T: Serialize>(report: &T, text: String) -> Result<Outcome, Failure> {
    let json = serde_json::to_value(report).map_err(numerical)?;
    Ok(Outcome { json, text, code: 0 })
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.12} {} {:.12}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
}

fn series_block(s: &PuiseuxSeries) -> String {
    s.to_text().lines().map(|l| format!("  {l}\n")).collect()
}

fn coeff(s: &PuiseuxSeries, v: Var, k: i64) -> ExactComplex {
    s.coeff(&[(v, Rational64::from_integer(k))])
}

// ---- verlinde ----

#[derive(Serialize)]
struct VerlindePoint {
    genus: u32,
    params: BetheParams,
    roots: Vec<Complex64>,
    admissible: Vec<SValue>,
    value: Complex64,
}

#[derive(Serialize)]
struct SeriesReport {
    manifold: String,
    order: i64,
    series: PuiseuxSeries,
}

pub fn verlinde(a: &VerlindeArgs, order: i64, tol: f64) -> Result<Outcome, Failure> {
    if let Some(regime) = a.limit {
        let r = match regime {
            Regime::R0 => limits::Regime::R0,
            Regime::R2 => limits::Regime::R2,
        };
        let rep = limits::limit_specialize(a.g, r, order).map_err(limit_err)?;
        let mut text = format!("limit {regime:?}, genus {}\nnormalization: {}\n", a.g, rep.normalization);
        for el in &rep.elements {
            let _ = writeln!(text, "{} ({} orbits): {}", el.class.label(), el.orbits, el.expr);
        }
        text.push_str("series:\n");
        text.push_str(&series_block(&rep.series));
        return outcome(&rep, text);
    }
    if a.series {
        let m: limits::Manifold = match &a.manifold {
            Some(s) => s.parse().map_err(limit_err)?,
            None => limits::Manifold::SigmaG(a.g),
        };
        let series = limits::grdim_closed_form(m, order).map_err(limit_err)?;
        let rep = SeriesReport { manifold: format!("{m:?}"), order, series };
        let text = format!("grdim {} through order {order}:\n{}", rep.manifold, series_block(&rep.series));
        return outcome(&rep, text);
    }
    let (Some(x), Some(y), Some(t)) = (a.x, a.y, a.t) else {
        return Err(usage(anyhow!("point mode needs --x, --y and --t (or use --series / --limit)")));
    };
    let params = BetheParams::new(x, y, t).map_err(bethe_err)?;
    let pt = bethe::solve_point(&params, tol).map_err(bethe_err)?;
    let value = bethe::verlinde_sum(a.g, &params, tol).map_err(bethe_err)?;
    let rep = VerlindePoint { genus: a.g, params, roots: pt.roots.all, admissible: pt.s_values, value };
    let mut text = format!("(x, y, t) = ({x}, {y}, {t})\nroots ({}):\n", rep.roots.len());
    for z in &rep.roots {
        let _ = writeln!(text, "  {}", fmt_c(*z));
    }
    text.push_str("admissible roots, S^2 and class:\n");
    for s in &rep.admissible {
        let _ = writeln!(text, "  z = {}  S^2 = {}  {}", fmt_c(s.z), fmt_c(s.s_squared), s.class.label());
    }
    let _ = writeln!(text, "sum S^(2-2g), g = {}: {}", a.g, fmt_c(value));
    outcome(&rep, text)
}

// ---- sweep ----

#[derive(Serialize)]
struct VerlindeCheck {
    params: BetheParams,
    genus1: Option<Complex64>,
    genus1_error: f64,
    genus0: Option<Complex64>,
    closed_form: f64,
    genus0_rel_error: f64,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepCliReport {
    seed: u64,
    diagonal: bool,
    /// Root and class invariants per point; omitted on the diagonal slice.
    roots: Option<SweepReport>,
    verlinde: Vec<VerlindeCheck>,
    max_genus1_error: f64,
    max_genus0_rel_error: f64,
    all_ok: bool,
}

fn verlinde_check(params: BetheParams, diagonal: bool, tol: f64) -> VerlindeCheck {
    let closed = if diagonal {
        closed_forms::s2s1().eval_real(&[(Var::X, params.x), (Var::T, params.t)])
    } else {
        closed_forms::s2s1_xyt().eval_real(&params.point())
    };
    let mut c = VerlindeCheck {
        params,
        genus1: None,
        genus1_error: f64::NAN,
        genus0: None,
        closed_form: f64::NAN,
        genus0_rel_error: f64::NAN,
        error: None,
    };
    let run = || -> Result<(Complex64, Complex64, Complex64), String> {
        let g1 = bethe::verlinde_sum(1, &params, tol).map_err(|e| e.to_string())?;
        let g0 = bethe::verlinde_sum(0, &params, tol).map_err(|e| e.to_string())?;
        let cf = closed.clone().map_err(|e| e.to_string())?;
        Ok((g1, g0, cf))
    };
    match run() {
        Ok((g1, g0, cf)) => {
            c.genus1 = Some(g1);
            c.genus1_error = (g1 - 10.0).norm();
            c.genus0 = Some(g0);
            c.closed_form = cf.re;
            c.genus0_rel_error = (g0 - cf).norm() / cf.norm();
        }
        Err(e) => c.error = Some(e),
    }
    c
}

/// Per-point checks fanned out over worker threads, collected in input order.
fn verlinde_checks(points: &[BetheParams], diagonal: bool, tol: f64) -> Vec<VerlindeCheck> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(points.len().max(1));
    let chunk = points.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|ps| s.spawn(move || ps.iter().map(|p| verlinde_check(*p, diagonal, tol)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn sweep(a: &SweepArgs, tol: f64) -> Result<Outcome, Failure> {
    if a.n == 0 {
        return Err(usage(anyhow!("--n must be positive")));
    }
    let mut points = bethe::random_points(a.n, a.seed, 0.05, 0.95);
    if a.diagonal {
        for p in &mut points {
            p.y = p.x;
        }
    }
    let roots = (!a.diagonal).then(|| bethe::sweep(a.n, a.seed, tol));
    let verlinde = verlinde_checks(&points, a.diagonal, tol);
    let max = |f: fn(&VerlindeCheck) -> f64| {
        verlinde.iter().map(f).fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) })
    };
    let max_genus1_error = max(|c| c.genus1_error);
    let max_genus0_rel_error = max(|c| c.genus0_rel_error);
    let all_ok =
        roots.as_ref().map_or(true, |r| r.all_ok) && max_genus1_error < 1e-9 && max_genus0_rel_error < GENUS0_REL_TOL;
    let rep = SweepCliReport {
        seed: a.seed,
        diagonal: a.diagonal,
        roots,
        verlinde,
        max_genus1_error,
        max_genus0_rel_error,
        all_ok,
    };
    let mut text = format!("{} points, seed {}{}\n", a.n, a.seed, if a.diagonal { ", slice y = x" } else { "" });
    if let Some(r) = &rep.roots {
        let bad = r.points.iter().filter(|p| p.error.is_some()).count();
        let pair = r.points.iter().map(|p| p.max_pairing_residual).fold(0.0, f64::max);
        let class = r.points.iter().map(|p| p.max_class_rel_error).fold(0.0, f64::max);
        let _ = writeln!(
            text,
            "roots: {} points with 12 roots, +-1 and 10 admissible in classes (2, 4, 4); {bad} failures\n  max Weyl pairing residual {pair:.3e}, max class relative error {class:.3e}",
            r.points.len() - bad
        );
    }
    let _ = writeln!(text, "genus 1: max |sum - 10| = {:.3e}", rep.max_genus1_error);
    let _ = writeln!(text, "genus 0: max relative error against the closed form = {:.3e}", rep.max_genus0_rel_error);
    let _ = writeln!(text, "all ok: {}", rep.all_ok);
    let mut out = outcome(&rep, text)?;
    if !rep.all_ok {
        out.code = EXIT_NUMERICAL;
    }
    Ok(out)
}

// ---- asymptotics ----

#[derive(Serialize)]
struct AsymptoticsCliReport {
    #[serde(flatten)]
    report: limits::AsymptoticsReport,
    within_one_percent: bool,
}

pub fn asymptotics(a: &AsymptoticsArgs) -> Result<Outcome, Failure> {
    if a.eps.is_empty() || a.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(usage(anyhow!("--eps needs positive finite step sizes")));
    }
    let report = limits::asymptotics_check(a.g, a.a, a.b, &a.eps).map_err(limit_err)?;
    let rep = AsymptoticsCliReport { within_one_percent: report.deviation < 0.01, report };
    let mut text = format!("genus {}, (x, t) = (1 + {} eps, 1 + {} eps)\n", a.g, a.a, a.b);
    for p in &rep.report.points {
        let _ = writeln!(
            text,
            "  eps {:.0e}: value {:.6e}, reference {:.6e}, ratio {:.6}",
            p.eps, p.value, p.reference, p.ratio
        );
    }
    let _ = writeln!(
        text,
        "deviation at smallest eps: {:.6} (within 1%: {})",
        rep.report.deviation, rep.within_one_percent
    );
    outcome(&rep, text)
}

// ---- q-series ----

#[derive(Serialize)]
struct GReport {
    order: i64,
    coefficients: Vec<ExactComplex>,
    series: PuiseuxSeries,
}

pub fn gseries(order: i64) -> Result<Outcome, Failure> {
    let series = kahler::g_series(order).map_err(kahler_err)?;
    let coefficients: Vec<ExactComplex> = (-1..=order).map(|k| coeff(&series, Var::Q, k)).collect();
    let list: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
    let text = format!("G(q) = 1/eta(q)^24 coefficients from q^-1: {}\n", list.join(", "));
    outcome(&GReport { order, coefficients, series }, text)
}

#[derive(Serialize)]
struct EllipticReport {
    n: i64,
    order: i64,
    topology: kahler::KahlerTopology,
    z_vw: PuiseuxSeries,
    closed_form: PuiseuxSeries,
    /// Whether the SW-sum evaluation equals the closed form through the order.
    matches_closed_form: bool,
}

pub fn elliptic(a: &EllipticArgs, order: i64) -> Result<Outcome, Failure> {
    if a.gluing {
        let rep = kahler::gluing_check(a.n, order).map_err(kahler_err)?;
        let first = rep.first_differing_exponent.map_or("none".to_string(), |e| e.to_string());
        let text = format!(
            "E({}) against the gluing prediction through q^{order}\nequal: {}\nfirst differing exponent: {first}\nZ(E({})):\n{}prediction:\n{}",
            a.n,
            rep.equal,
            a.n,
            series_block(&rep.lhs),
            series_block(&rep.rhs)
        );
        return outcome(&rep, text);
    }
    let topology = kahler::sw_data_en(a.n).map_err(kahler_err)?;
    let closed_form = kahler::en_closed_form(a.n, order).map_err(kahler_err)?;
    let z_vw = kahler::z_vw_kahler(&topology, order).map_err(kahler_err)?;
    let matches_closed_form = z_vw.sub(&closed_form).is_zero();
    let text = format!(
        "Z_VW(E({})) through q^{order}:\n{}matches closed form: {matches_closed_form}\n",
        a.n,
        series_block(&z_vw)
    );
    let rep = EllipticReport { n: a.n, order, topology, z_vw, closed_form, matches_closed_form };
    let mut out = outcome(&rep, text)?;
    if !rep.matches_closed_form {
        out.code = EXIT_NUMERICAL;
    }
    Ok(out)
}

// ---- floer ----

fn parse_hf(spec: &str, h: Option<i64>) -> Result<HfManifold, Failure> {
    let bad = || usage(FloerError::UnknownManifold(spec.into()));
    if spec == "S2xS1" {
        return Ok(HfManifold::S2xS1);
    }
    if let Some(p) = spec.strip_prefix("L(").and_then(|r| r.strip_suffix(",1)")) {
        return p.parse().map(HfManifold::Lens).map_err(|_| bad());
    }
    if let Some(g) = spec.strip_prefix("Sigma").and_then(|r| r.strip_suffix("xS1")) {
        let g = g.parse().map_err(|_| bad())?;
        let h = h.ok_or_else(|| usage(anyhow!("{spec} needs a spin-c label --h")))?;
        return Ok(HfManifold::SigmaGxS1 { g, h });
    }
    Err(bad())
}

/// Parse a monomial such as `x*t^2` or `1`.
fn parse_weight(s: &str) -> Result<superspace::Weight, Failure> {
    let mut w = Vec::new();
    for f in s.split('*').map(str::trim).filter(|f| *f != "1") {
        let (name, exp) = f.split_once('^').unwrap_or((f, "1"));
        let v = match name {
            "x" => Var::X,
            "y" => Var::Y,
            "t" => Var::T,
            _ => return Err(usage(anyhow!("unknown variable {name:?} in weight {s:?}"))),
        };
        let e: i64 = exp.parse().map_err(|_| usage(anyhow!("bad exponent in weight {s:?}")))?;
        w.push((v, e));
    }
    Ok(superspace::Weight(w))
}

#[derive(Serialize)]
struct RankRow {
    g: u32,
    h: i64,
    rank: Option<u64>,
    brute_force: u64,
    equal: bool,
}

#[derive(Serialize)]
struct RanksReport {
    rows: Vec<RankRow>,
    all_equal: bool,
}

#[derive(Serialize)]
struct HnRow {
    g: u32,
    exact_division: bool,
    poincare: PuiseuxSeries,
}

#[derive(Serialize)]
struct MolienReport {
    order: i64,
    coefficients: Vec<ExactComplex>,
    /// Whether the series agrees with 1/(1 - t^2) through the order.
    matches_geometric: bool,
    series: PuiseuxSeries,
}

#[derive(Serialize)]
struct BrieskornReport {
    datum: floer::brieskorn::BrieskornDatum,
    conjecture: Option<floer::brieskorn::ConjectureReport>,
}

pub fn floer(a: &FloerArgs, order: i64) -> Result<Outcome, Failure> {
    if let Some(spec) = &a.hf {
        let rep = floer::hf_plus(parse_hf(spec, a.h)?, order).map_err(floer_err)?;
        let mut text = format!("HF+({}) through t^{order}\n", rep.manifold);
        for s in &rep.summands {
            let len = s.tower.length.map_or("infinite".to_string(), |l| l.to_string());
            let _ = writeln!(text, "  {} x tower from degree {}, length {len}", s.multiplicity, s.tower.bottom);
        }
        if rep.relative_grading {
            text.push_str("  (gradings are relative)\n");
        }
        text.push_str(&series_block(&rep.series));
        return outcome(&rep, text);
    }
    if let Some(gmax) = a.ranks {
        let mut rows = Vec::new();
        for g in 1..=gmax {
            for h in (-(g as i64) + 1..g as i64).filter(|h| *h != 0) {
                let rank = floer::hf_plus(HfManifold::SigmaGxS1 { g, h }, order).map_err(floer_err)?.rank;
                let brute_force = floer::hf_rank_brute_force(g, h).map_err(floer_err)?;
                rows.push(RankRow { g, h, rank, brute_force, equal: rank == Some(brute_force) });
            }
        }
        let all_equal = rows.iter().all(|r| r.equal);
        let mut text = String::from("g   h   rank  brute force\n");
        for r in &rows {
            let _ = writeln!(
                text,
                "{:<3} {:<3} {:<5} {}",
                r.g,
                r.h,
                r.rank.map_or("-".into(), |k| k.to_string()),
                r.brute_force
            );
        }
        let _ = writeln!(text, "all equal: {all_equal}");
        let mut out = outcome(&RanksReport { rows, all_equal }, text)?;
        if !all_equal {
            out.code = EXIT_NUMERICAL;
        }
        return Ok(out);
    }
    if let Some(gs) = &a.hn {
        let mut rows = Vec::new();
        let mut text = String::new();
        for &g in gs {
            let poincare = floer::hn_series(g).map_err(floer_err)?;
            let _ = write!(text, "g = {g}:\n{}", series_block(&poincare));
            rows.push(HnRow { g, exact_division: true, poincare });
        }
        return outcome(&rows, text);
    }
    if a.molien {
        let n = usize::try_from(order).map_err(|_| usage(anyhow!("--order must be nonnegative")))?;
        let series = floer::molien_su2_adjoint(n);
        let coefficients: Vec<ExactComplex> = (0..=order).map(|k| coeff(&series, Var::T, k)).collect();
        let matches_geometric =
            coefficients.iter().enumerate().all(|(k, c)| *c == ExactComplex::from_int(if k % 2 == 0 { 1 } else { 0 }));
        let list: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
        let text =
            format!("Molien series through t^{order}: {}\nequals 1/(1 - t^2): {matches_geometric}\n", list.join(","));
        return outcome(&MolienReport { order, coefficients, matches_geometric, series }, text);
    }
    if let Some(g) = a.superspace {
        let w = parse_weight(a.second_odd.as_deref().unwrap_or("1"))?;
        let rep = superspace::abelian_character(g, w, order).map_err(floer_err)?;
        let mut text = format!("genus {g}: even dimension {}, odd dimension {}\n", rep.even_dim, rep.odd_dim);
        for f in &rep.factors {
            let _ = writeln!(text, "  {} x{} ({:?})", f.label, f.multiplicity, f.kind);
        }
        text.push_str("character:\n");
        text.push_str(&series_block(&rep.character));
        return outcome(&rep, text);
    }
    if let Some(name) = &a.brieskorn {
        let datum = floer::brieskorn::brieskorn(name).map_err(floer_err)?;
        let conjecture = match floer::brieskorn::conjecture_series(name, order) {
            Ok(c) => Some(c),
            Err(FloerError::NoConjecture(_)) => None,
            Err(e) => return Err(floer_err(e)),
        };
        let mut text = format!("{}\n  instanton Floer ranks (degree: rank): {:?}\n", datum.name, datum.instanton_ranks);
        let _ = writeln!(text, "  flat connections: {:?}", datum.flat_connection_counts);
        match &conjecture {
            Some(c) => {
                text.push_str("  conjectural graded dimension:\n");
                text.push_str(&series_block(&c.series));
            }
            None => text.push_str("  no conjectural series: HP rank unknown\n"),
        }
        return outcome(&BrieskornReport { datum, conjecture }, text);
    }
    Err(usage(anyhow!("choose one of --hf, --ranks, --hn, --molien, --superspace, --brieskorn")))
}

// ---- brst ----

fn closure_text(r: &ClosureReport, text: &mut String) {
    let conv = &r.convention;
    let _ = writeln!(
        text,
        "check {} ({}): {} states, seed {}, {} components",
        r.check, r.operators, r.states, r.seed, r.components_checked
    );
    let _ = writeln!(text, "  gauge parameter: {} (sign {})", r.gauge_parameter, conv.gauge_sign);
    if conv.searched {
        let _ = writeln!(
            text,
            "  sign search tried {} conventions; flipped rule lines {:?}",
            conv.tried, conv.flipped_rules
        );
    }
    let _ = writeln!(text, "  max residual: {}  closed: {}", r.max_residual, r.closed);
    for f in &r.failing {
        let _ = writeln!(text, "  nonzero on {} (max {:.3e}); rule lines {:?}", f.component, f.max_abs, f.rule_lines);
    }
    if !r.missing_rules.is_empty() {
        let _ = writeln!(text, "  missing rules: {}", r.missing_rules.join(", "));
    }
}

pub fn brst(a: &BrstArgs) -> Result<Outcome, Failure> {
    if a.states == 0 {
        return Err(usage(anyhow!("--states must be positive")));
    }
    let table = brst::load_table(&a.table).map_err(brst_err)?;
    let opts = CheckOptions { seed: a.seed, states: a.states, calibrate: !a.no_calibrate };
    let (json, text, closed) = if let Some(coeffs) = &a.twistor {
        if coeffs.len() != 4 {
            return Err(usage(anyhow!("--twistor takes four coefficients s1,s2,r1,r2")));
        }
        let c = coeffs
            .iter()
            .map(|s| {
                ExactComplex::from_strings(s.trim(), "0").map_err(|e| usage(anyhow!("bad coefficient {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cands: Vec<&str> = a.candidates.iter().map(String::as_str).collect();
        let rep =
            brst::twistor_check(&table, [c[0].clone(), c[1].clone()], [c[2].clone(), c[3].clone()], &cands, &opts)
                .map_err(brst_err)?;
        let mut text = format!("table {}\n", table.name);
        closure_text(&rep, &mut text);
        (serde_json::to_value(&rep).map_err(numerical)?, text, rep.closed)
    } else {
        let rep = brst::run_table(&table, a.check.as_deref(), &opts).map_err(brst_err)?;
        let mut text = format!(
            "table {} ({}): {} components, {} rule lines\n",
            rep.table,
            if rep.abelian { "abelian" } else { "nonabelian" },
            rep.components,
            rep.rules
        );
        for c in &rep.checks {
            closure_text(c, &mut text);
        }
        let closed = rep.all_closed();
        (serde_json::to_value(&rep).map_err(numerical)?, text, closed)
    };
    let code = if a.strict && !closed { EXIT_RESIDUAL } else { 0 };
    Ok(Outcome { json, text, code })
}
