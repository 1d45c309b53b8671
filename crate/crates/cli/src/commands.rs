//! One function per subcommand.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sigmak_core::blowup::{bubble_energy, check_spacing_law, decompose_bubbles, DecomposeOptions, SpacingOptions};
use sigmak_core::constants::{classify_regime, degree_of};
use sigmak_core::geometry::write_csv;
use sigmak_core::identities::{
    beta_integral, beta_integral_quadrature, kazdan_warner_residual, mass_residual, mbc_residual, pohozaev_bar_residual,
    pohozaev_residual, ResidualReport,
};
use sigmak_core::ode::{integrate, StandardBubble, Trajectory};
use sigmak_core::solvers::noncompact::{continuation_in_t, solve_noncompact_bvp, NoncompactOptions};
use sigmak_core::solvers::{defect_scan, find_global_solution, nonexistence_scan, ShootOptions};
use sigmak_core::special::gamma;

use crate::artifacts::Artifacts;
use crate::config::{Grid, RunConfig};

/// What a command reports back to main.
pub struct Outcome {
    /// Failed in-run assertions; empty means exit 0.
    pub failures: Vec<String>,
    /// Printed to stdout.
    pub summary: Value,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        Self { failures: Vec::new(), summary }
    }

    fn assert(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Errors from the numerical core, as opposed to config problems.
#[derive(Debug)]
pub struct NumericalError(pub anyhow::Error);

impl std::fmt::Display for NumericalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for NumericalError {}

fn num<T>(r: sigmak_core::Result<T>) -> Result<T> {
    r.map_err(|e| NumericalError(e.into()).into())
}

fn shoot_options(cfg: &RunConfig) -> ShootOptions {
    let mut o = ShootOptions::default();
    if let Some(t) = cfg.tol {
        o.tol = t;
    }
    if let Some(t) = cfg.check_tol {
        o.check_tol = t;
    }
    o
}

fn report_row(art: &Artifacts, r: &ResidualReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    v["relative"] = json!(r.relative());
    art.stamp(v)
}

pub fn verify_identities(cfg: &RunConfig, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
    let pp = cfg.params;
    let k = cfg.model_or_round()?;
    let tol = cfg.tol.unwrap_or(1e-10);
    let check = cfg.check_tol.unwrap_or(10.0 * tol);
    let (t1, t2) = cfg.t_window.unwrap_or((-20.0, 0.0));
    let lam = cfg.lambda.unwrap_or(1.0);
    let start = num(StandardBubble::new(&pp, lam, k.k_south()))?.jet(t1 - 5.0).state;
    let prof = num(integrate(&pp, &k, start, t2, tol))?;
    let mut reports = vec![
        num(pohozaev_residual(&prof, &pp, &k, t1, t2))?,
        num(pohozaev_bar_residual(&prof, &pp, t1, t2))?,
        num(mass_residual(&prof, &pp, t1, t2))?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.random_windows.unwrap_or(0) {
        let a: f64 = rng.gen_range(t1..t2);
        let b: f64 = rng.gen_range(a..=t2);
        let c: f64 = rng.gen_range(-1.0..1.0);
        reports.push(num(pohozaev_residual(&prof, &pp, &k, a, b))?);
        reports.push(num(mbc_residual(&prof, &pp, a, b, -1.0, c))?);
    }
    if k.is_constant() {
        reports.push(num(kazdan_warner_residual(&prof, &pp, &k))?);
    }
    let rows: Vec<Value> = reports.iter().map(|r| report_row(art, r)).collect();
    for r in &rows {
        println!("{}", serde_json::to_string(r)?);
    }
    art.json_lines("identities.jsonl", &rows)?;
    let worst = reports.iter().map(|r| r.relative()).fold(0.0, f64::max);
    let mut out = Outcome::new(json!({ "reports": reports.len(), "worst_relative": worst, "threshold": check }));
    for r in &reports {
        out.assert(r.relative() < check, || format!("{} residual {:e} over {check:e}", r.identity, r.relative()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SolveLog<'a> {
    lambda: f64,
    bracket: (f64, f64),
    iterations: usize,
    t_cut: f64,
    checks: &'a sigmak_core::solvers::SolutionChecks,
    pohozaev_relative: f64,
    kazdan_warner_relative: f64,
    scanned: bool,
}

pub fn solve(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let pp = cfg.params;
    let k = cfg.model()?;
    let o = shoot_options(cfg);
    let (bracket, scanned) = match cfg.bracket {
        Some(b) => (b, false),
        None if k.is_constant() => ((0.5, 2.0), false),
        None => {
            let grid = cfg.lambda_grid.unwrap_or(Grid { lo: 0.05, hi: 20.0, count: 30 }).points()?;
            let scan = num(defect_scan(&pp, &k, &grid, &o, cfg.exec()))?;
            write_defects(art, "defect.csv", &scan)?;
            let i = *scan.sign_changes.first().ok_or_else(|| {
                NumericalError(anyhow::anyhow!("far-field defect keeps one sign over the lambda grid"))
            })?;
            ((scan.points[i].lambda, scan.points[i + 1].lambda), true)
        }
    };
    let g = num(find_global_solution(&pp, &k, bracket, &o))?;
    art.csv("solution.csv", |w| g.profile.write_csv(w))?;
    let log = SolveLog {
        lambda: g.shot.lambda,
        bracket: g.bracket,
        iterations: g.iterations,
        t_cut: g.t_cut,
        checks: &g.checks,
        pohozaev_relative: g.checks.pohozaev.relative(),
        kazdan_warner_relative: g.checks.kazdan_warner.relative(),
        scanned,
    };
    art.json("solve.json", &log)?;
    let mut out = Outcome::new(json!({
        "lambda": g.shot.lambda,
        "ode_residual": g.checks.ode_residual,
        "pohozaev": log.pohozaev_relative,
        "kazdan_warner": log.kazdan_warner_relative,
    }));
    out.assert(g.checks.passed, || format!("solution checks failed at tolerance {:e}", o.check_tol));
    Ok(out)
}

pub fn classify(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let poles = cfg.require(cfg.poles, "poles")?;
    let degree = degree_of(&cfg.params, &poles);
    let regime = classify_regime(&cfg.params, &poles);
    let body = json!({ "poles": poles, "degree_of": degree, "classify_regime": regime, "citation": regime.provenance });
    art.json("classify.json", &body)?;
    let mut out = Outcome::new(art.stamp(body));
    out.assert(regime.degree != Some(-1) || regime.existence == sigmak_core::constants::Existence::Guaranteed, || {
        "degree -1 without guaranteed existence".into()
    });
    Ok(out)
}

pub fn bubble_analyze(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let pp = cfg.params;
    let eps = cfg.eps.unwrap_or(1e-3);
    let beta = cfg.beta.unwrap_or(2.0);
    let t = cfg.require(cfg.t_half, "T")?;
    let sol = num(solve_noncompact_bvp(&pp, eps, beta, t, &NoncompactOptions::default()))?;
    let k0 = pp.round_value();
    let ladder = num(decompose_bubbles(&sol.profile, &pp, k0, &DecomposeOptions::default()))?;
    let spacing = num(check_spacing_law(&ladder, &pp, beta, &SpacingOptions::default())).ok();
    let energy = num(bubble_energy(&sol.profile, &pp, cfg.radius.unwrap_or(1.0), k0))?;
    art.json("ladder.json", &json!({ "T": t, "eps": eps, "beta": beta, "ladder": ladder, "spacing": spacing, "energy": energy }))?;
    art.csv("bubbles.csv", |w| ladder.write_csv(w))?;
    art.csv("profile.csv", |w| sol.profile.write_csv(w))?;
    let mut out = Outcome::new(json!({
        "n_bubbles": ladder.n_bubbles,
        "centers": ladder.centers(),
        "quanta": energy.quanta,
        "spacing_ok": spacing.as_ref().map(|s| s.ratio_ok && s.count_ok),
    }));
    out.assert(ladder.alternates(), || "critical points do not alternate".into());
    Ok(out)
}

pub fn noncompact(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let pp = cfg.params;
    let eps = cfg.eps.unwrap_or(1e-3);
    let beta = cfg.beta.unwrap_or(2.0);
    let range = cfg.t_range.unwrap_or((1.0, 40.0));
    let samples = cfg.samples.unwrap_or(391);
    let check = cfg.check_tol.unwrap_or(1e-6);
    let rep = num(continuation_in_t(&pp, eps, beta, range, samples, cfg.exec(), &NoncompactOptions::default()))?;
    art.csv("continuation.csv", |w| {
        let rows: Vec<Vec<f64>> =
            rep.samples.iter().map(|s| vec![s.t_shift, s.xidot0, s.m as f64, s.tangential as f64]).collect();
        write_csv(w, &["T", "xidot0", "m", "tangential"], &rows)
    })?;
    let mut sols = Vec::new();
    for (i, s) in rep.solutions.iter().enumerate() {
        let even = num(s.solution.even_extension())?;
        art.csv(&format!("even_solution_{i}.csv"), |w| even.write_csv(w))?;
        sols.push(json!({
            "T": s.solution.t_shift,
            "xidot0": s.solution.xidot0,
            "ode_residual": s.ode_residual,
            "m": s.solution.m,
            "eta_norm": s.solution.eta.norm,
            "newton": s.solution.newton,
        }));
    }
    let body = json!({
        "eps": eps,
        "beta": beta,
        "t_range": range,
        "samples": rep.samples.len(),
        "m_first": rep.m_first(),
        "m_last": rep.m_last(),
        "m_drops": rep.m_drops,
        "failures": rep.failures,
        "solutions": sols,
    });
    art.json("noncompact.json", &body)?;
    let mut out = Outcome::new(json!({ "solutions": rep.solutions.len(), "m_first": rep.m_first(), "m_last": rep.m_last() }));
    for s in &rep.solutions {
        out.assert(s.ode_residual < check, || format!("T* = {}: residual {:e}", s.solution.t_shift, s.ode_residual));
    }
    Ok(out)
}

fn write_defects(art: &mut Artifacts, name: &str, scan: &sigmak_core::solvers::ScanReport) -> Result<()> {
    art.csv(name, |w| {
        let rows: Vec<Vec<f64>> =
            scan.points.iter().map(|p| vec![p.lambda, p.far_field_defect, p.scaled_defect, p.t_reached]).collect();
        write_csv(w, &["lambda", "far_field_defect", "scaled_defect", "t_reached"], &rows)
    })?;
    Ok(())
}

pub fn nonexist_scan(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let pp = cfg.params;
    let t = cfg.require(cfg.t_half, "T")?;
    let eps = match cfg.eps {
        Some(e) => e,
        None => cfg.eps_scale.unwrap_or(1e-12) * (-(pp.nf() + 2.0 * pp.kf()) * t).exp(),
    };
    let b1 = cfg.require(cfg.beta1, "beta1")?;
    let b2 = cfg.require(cfg.beta2, "beta2")?;
    let grid = cfg.lambda_grid.unwrap_or(Grid { lo: 1e-4, hi: 1e4, count: 60 }).points()?;
    let scan = num(nonexistence_scan(&pp, eps, t, b1, b2, &grid, &shoot_options(cfg), cfg.exec()))?;
    write_defects(art, "defect.csv", &scan)?;
    art.json("nonexist.json", &json!({ "eps": eps, "T": t, "beta1": b1, "beta2": b2, "report": scan }))?;
    Ok(Outcome::new(json!({
        "single_signed": scan.single_signed,
        "points": scan.points.len(),
        "guard_violations": scan.guard_violations.len(),
        "verdict": scan.verdict,
    })))
}

pub fn dump_curvature(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let k = cfg.model()?;
    let (lo, hi) = cfg.t_window.unwrap_or((-20.0, 20.0));
    let m = cfg.samples.unwrap_or(401).max(2);
    let ts: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let rows = k.sample(&ts);
    let path = art.csv("curvature.csv", |w| write_csv(w, &["t", "K", "Kdot"], &rows))?;
    Ok(Outcome::new(json!({ "rows": rows.len(), "path": path })))
}

pub fn appendix_check(cfg: &RunConfig, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = cfg.random_pairs.unwrap_or(50);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let a: f64 = rng.gen_range(0.6..8.0);
        let b: f64 = rng.gen_range(0.05..(2.0 * a - 0.05));
        let closed = num(beta_integral(a, b))?;
        let q = num(beta_integral_quadrature(a, b))?;
        let rel = ((q.value - closed) / closed).abs();
        worst = worst.max(rel);
        rows.push(json!({ "a": a, "b": b, "closed_form": closed, "quadrature": q.value, "rel_err": rel }));
    }
    let n = cfg.params.nf();
    let mut corollaries = Vec::new();
    for beta in [-0.5 * n, 0.0, 2.0, 0.5 * n] {
        let direct = gamma(0.5 * (n - beta)) * gamma(0.5 * (n + beta)) / (2.0 * gamma(n));
        let v = num(beta_integral(n, n + beta))?;
        corollaries.push(json!({ "beta": beta, "value": v, "gamma_form": direct, "rel_err": (v / direct - 1.0).abs() }));
    }
    let v = num(beta_integral(0.5 * (n + 2.0), n))?;
    corollaries.push(json!({ "case": "1/n", "value": v, "expected": 1.0 / n, "rel_err": (v * n - 1.0).abs() }));
    let cor_worst = corollaries.iter().filter_map(|c| c["rel_err"].as_f64()).fold(0.0, f64::max);
    art.json("appendix.json", &json!({ "comparisons": rows, "corollaries": corollaries, "max_rel_err": worst }))?;
    let mut out = Outcome::new(json!({ "pairs": count, "max_rel_err": worst, "corollary_max_rel_err": cor_worst }));
    out.assert(worst < 1e-10, || format!("beta integral relative error {worst:e}"));
    out.assert(cor_worst < 1e-12, || format!("corollary relative error {cor_worst:e}"));
    Ok(out)
}

/// Shared by `main` for the exit-3 diagnostic.
pub fn is_numerical(e: &anyhow::Error) -> bool {
    e.downcast_ref::<NumericalError>().is_some()
}
