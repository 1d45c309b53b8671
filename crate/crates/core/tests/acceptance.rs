//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmak_core::blowup::*;
use sigmak_core::curvature::{make_flat_pole_k, make_noncompact_k, Blend, CurvatureModel};
use sigmak_core::identities::*;
use sigmak_core::ode::{fk_from_parts, integrate, jet_fk, DegenerateProfile, StandardBubble, Trajectory};
use sigmak_core::par::ExecMode;
use sigmak_core::solvers::noncompact::{continuation_in_t, solve_noncompact_bvp, EvenSolution, NoncompactOptions};
use sigmak_core::solvers::{defect_scan, find_global_solution, log_grid, nonexistence_scan, ShootOptions};
use sigmak_core::special::gamma;
use sigmak_core::ProblemParams;

type Check = Result<String, String>;

const DIMS: [(u32, u32); 4] = [(5, 2), (7, 2), (7, 3), (9, 2)];
const EPS: f64 = 1e-3;
const BETA: f64 = 2.0;

fn p(n: u32, k: u32) -> ProblemParams {
    ProblemParams::new(n, k).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn sech2(x: f64) -> f64 {
    let c = 1.0 / x.cosh();
    c * c
}

struct Runner {
    failed: Vec<u32>,
}

impl Runner {
    fn run(&mut self, id: u32, budget: Duration, f: impl FnOnce() -> Check) {
        let t0 = Instant::now();
        let out = f();
        let dt = t0.elapsed();
        let in_time = dt <= budget;
        let (ok, detail) = match out {
            Ok(d) => (in_time, d),
            Err(e) => (false, e),
        };
        let timing = format!("{:.2} s of {} s", dt.as_secs_f64(), budget.as_secs());
        let slow = if in_time { "" } else { " [over budget]" };
        println!("criterion {id:>2}: {} ({timing}){slow} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

/// Operator values on the closed-form solutions.
fn criterion_1() -> Check {
    let mut worst = [0.0f64; 3];
    for (n, k) in DIMS {
        let pp = p(n, k);
        let kf = pp.kf();
        let c1 = pp.round_value();
        let g = pp.gamma();
        for lam in [0.1, 1.0, 10.0] {
            for k0 in [0.5, 1.0, 3.0] {
                let b = StandardBubble::new(&pp, lam, k0).unwrap();
                for i in 0..=400 {
                    let t = -20.0 + 0.1 * i as f64;
                    let x = t + f64::ln(lam);
                    // the unit bubble is ln cosh shifted down by ln(c1) / 2k
                    let xi = ln_cosh(x) + (k0 / c1).ln() / (2.0 * kf);
                    let fk = fk_from_parts(&pp, xi, -2.0 * ln_cosh(x), sech2(x));
                    worst[0] = worst[0].max((fk / k0 - 1.0).abs());
                    worst[0] = worst[0].max((jet_fk(&pp, &b.jet(t)) / k0 - 1.0).abs());
                    ensure((b.xi(t) - xi).abs() < 1e-12 * (1.0 + xi.abs()), format!("bubble formula at t = {t}"))?;
                }
            }
            for i in 0..=400 {
                let t = -20.0 + 0.1 * i as f64;
                let fk = fk_from_parts(&pp, ln_cosh(t), -2.0 * ln_cosh(t), sech2(t));
                worst[1] = worst[1].max((fk / c1 - 1.0).abs());
            }
            let (a, bb) = (lam, 1.0 / lam);
            let d = DegenerateProfile::new(&pp, a, bb).unwrap();
            for i in 0..=400 {
                let t = -20.0 + 0.1 * i as f64;
                // xi = -(1/g) ln(a e^{-g t} + b e^{g t}), so xidot = -tanh(z), z = g t + ln(b/a)/2
                let z = g * t + 0.5 * (bb / a).ln();
                let xi = -(ln_cosh(z) + std::f64::consts::LN_2 + 0.5 * (a * bb).ln()) / g;
                let fk = fk_from_parts(&pp, xi, -2.0 * ln_cosh(z), -g * sech2(z));
                worst[2] = worst[2].max(fk.abs()).max(jet_fk(&pp, &d.jet(t)).abs());
                ensure((d.xi(t) - xi).abs() < 1e-10 * (1.0 + xi.abs()), format!("degenerate formula at t = {t}"))?;
            }
        }
    }
    let msg = format!("bubble {:.1e}, ln cosh {:.1e}, degenerate {:.1e}", worst[0], worst[1], worst[2]);
    ensure(worst.iter().all(|&w| w < 1e-11), msg.clone())?;
    Ok(msg)
}

/// Pohozaev and mass identities on exact and integrated solutions.
fn criterion_2() -> Check {
    let mut exact_worst = 0.0f64;
    for (n, k) in DIMS {
        let pp = p(n, k);
        for lam in [0.1, 1.0, 10.0] {
            let b = StandardBubble::new(&pp, lam, 1.0).unwrap();
            let one = CurvatureModel::constant(1.0).unwrap();
            for r in [
                pohozaev_residual(&b, &pp, &one, -15.0, 5.0).unwrap(),
                pohozaev_bar_residual(&b, &pp, -15.0, 5.0).unwrap(),
                mass_residual(&b, &pp, -15.0, 5.0).unwrap(),
            ] {
                exact_worst = exact_worst.max(r.relative());
            }
        }
    }
    ensure(exact_worst < 1e-8, format!("exact-solution residual {exact_worst:e}"))?;
    let pp = p(7, 2);
    let k = make_flat_pole_k(&pp, 1.0, 0.5, 3.0, 1.2, 0.4, 3.0, Blend::default()).unwrap();
    let init = StandardBubble::new(&pp, 1.0, k.k_south()).unwrap().jet(-25.0).state;
    let mut rows = Vec::new();
    for tol in [1e-6, 1e-8, 1e-10] {
        let prof = integrate(&pp, &k, init, 0.0, tol).map_err(|e| e.to_string())?;
        let r = [
            pohozaev_residual(&prof, &pp, &k, -20.0, 0.0).unwrap().relative(),
            pohozaev_bar_residual(&prof, &pp, -20.0, 0.0).unwrap().relative(),
            mass_residual(&prof, &pp, -20.0, 0.0).unwrap().relative(),
        ];
        let worst = r.iter().copied().fold(0.0, f64::max);
        ensure(worst < 10.0 * tol, format!("residual {worst:e} at tol {tol:e}"))?;
        rows.push(r);
    }
    // linear scaling: the residual follows the tolerance down unless already at roundoff
    for i in 0..3 {
        let (a, b, c) = (rows[0][i], rows[1][i], rows[2][i]);
        ensure(
            (c <= b || c < 1e-12) && (b <= a || b < 1e-12) && (c < 1e-3 * a || c < 1e-12),
            format!("identity {i} does not scale: {a:e} {b:e} {c:e}"),
        )?;
    }
    Ok(format!("exact {exact_worst:.1e}; integrated at 1e-10: {:.1e}", rows[2].iter().copied().fold(0.0, f64::max)))
}

/// Beta integral closed form against quadrature.
fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a: f64 = rng.gen_range(0.6..8.0);
        let b: f64 = rng.gen_range(0.05..(2.0 * a - 0.05));
        let exact = beta_integral(a, b).map_err(|e| e.to_string())?;
        let q = beta_integral_quadrature(a, b).map_err(|e| e.to_string())?;
        worst = worst.max(((q.value - exact) / exact).abs());
    }
    ensure(worst < 1e-10, format!("worst relative error {worst:e}"))?;
    let mut cor = 0.0f64;
    for n in [3u32, 5, 7, 9] {
        let nf = n as f64;
        for beta in [-0.9 * nf, -1.0, 0.0, 2.0, 0.5 * nf, 0.9 * nf] {
            let direct = gamma(0.5 * (nf - beta)) * gamma(0.5 * (nf + beta)) / (2.0 * gamma(nf));
            cor = cor.max((beta_integral(nf, nf + beta).unwrap() / direct - 1.0).abs());
        }
        cor = cor.max((beta_integral(0.5 * (nf + 2.0), nf).unwrap() * nf - 1.0).abs());
    }
    ensure(cor < 1e-13, format!("corollary values off by {cor:e}"))?;
    Ok(format!("50 random pairs, worst {worst:.1e}; corollaries {cor:.1e}"))
}

/// Continuation in T for the noncompact model.
fn criterion_4(found: &mut Vec<EvenSolution>) -> Check {
    let pp = p(9, 2);
    let rep = continuation_in_t(&pp, EPS, BETA, (1.0, 40.0), 391, ExecMode::Parallel, &NoncompactOptions::default())
        .map_err(|e| e.to_string())?;
    let good: Vec<&EvenSolution> =
        rep.solutions.iter().filter(|s| s.solution.xidot0.abs() < 1e-9 && s.ode_residual < 1e-6).collect();
    let (m1, m40) = (rep.m_first().unwrap_or(0), rep.m_last().unwrap_or(0));
    let ts: Vec<String> = good.iter().map(|s| format!("{:.5}", s.solution.t_shift)).collect();
    let msg = format!(
        "{} even solutions at T* = [{}], m(1) = {m1}, m(40) = {m40}, {} failed samples",
        good.len(),
        ts.join(", "),
        rep.failures.len()
    );
    found.extend(rep.solutions.iter().cloned());
    ensure(good.len() >= 2, msg.clone())?;
    ensure(m40 > m1, msg.clone())?;
    Ok(msg)
}

fn tower(t: f64) -> Result<sigmak_core::solvers::NoncompactSolution, String> {
    solve_noncompact_bvp(&p(9, 2), EPS, BETA, t, &NoncompactOptions::default()).map_err(|e| e.to_string())
}

/// Center ratios and bubble counts.
fn criterion_5(sweep: &[EvenSolution]) -> Check {
    let pp = p(9, 2);
    let dopt = DecomposeOptions::default();
    let mut lines = Vec::new();
    ensure(!sweep.is_empty(), "no solutions from the continuation")?;
    for s in sweep {
        let ladder = decompose_bubbles(&s.solution.profile, &pp, pp.round_value(), &dopt).map_err(|e| e.to_string())?;
        let np = predicted_bubble_count(&pp, BETA, ladder.ln_lambda).unwrap_or(0);
        ensure(
            np.abs_diff(ladder.n_bubbles) <= 1,
            format!("T* = {}: N = {} vs {np}", s.solution.t_shift, ladder.n_bubbles),
        )?;
        lines.push(format!("T*={:.2}: N={}/{np}", s.solution.t_shift, ladder.n_bubbles));
    }
    for t in [150.0, 175.0, 200.0] {
        let sol = tower(t)?;
        let ladder = decompose_bubbles(&sol.profile, &pp, pp.round_value(), &dopt).map_err(|e| e.to_string())?;
        let rep = check_spacing_law(&ladder, &pp, BETA, &SpacingOptions::default()).map_err(|e| e.to_string())?;
        ensure(
            rep.ratio_ok && rep.count_ok,
            format!("T = {t}: ratios {:?} {:?}, N = {} vs {:?}", rep.deep_center_ratios, rep.spacing_ratios, rep.n_observed, rep.n_predicted),
        )?;
        lines.push(format!(
            "T={t}: dev {:.3}, N={}/{}",
            rep.max_deviation,
            rep.n_observed,
            rep.n_predicted.unwrap_or(0)
        ));
    }
    Ok(lines.join("; "))
}

/// Single-bubble invariance, K0 scaling, per-bubble quanta and growth.
fn criterion_6() -> Check {
    let pp = p(9, 2);
    let k0 = pp.round_value();
    let e1 = single_bubble_energy(&pp, k0).map_err(|e| e.to_string())?;
    let mut spread = 0.0f64;
    for lam in [1e-2, 1.0, 1e2, 1e6] {
        // the ball must contain the whole bubble, so both tails are far from its center
        let b = StandardBubble::new(&pp, lam, k0).unwrap().with_window(-60.0, 60.0);
        let rep = bubble_energy(&b, &pp, 40f64.exp(), k0).map_err(|e| e.to_string())?;
        spread = spread.max((rep.energy / e1 - 1.0).abs());
    }
    ensure(spread < 1e-8, format!("single-bubble energy varies by {spread:e}"))?;
    let e4 = single_bubble_energy(&pp, 4.0 * k0).unwrap();
    let scale = (e4 / e1 / 4f64.powf(-pp.nf() / (2.0 * pp.kf())) - 1.0).abs();
    ensure(scale < 1e-8, format!("K0 scaling off by {scale:e}"))?;
    let ts = [30.0, 60.0, 100.0, 150.0, 200.0];
    let sols = ts.iter().map(|&t| tower(t)).collect::<Result<Vec<_>, _>>()?;
    let reps = sols
        .iter()
        .map(|s| bubble_energy(&s.profile, &pp, 1.0, k0).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b) = (&reps[2], &reps[4]);
    let added = b.bubble_count as f64 - a.bubble_count as f64;
    ensure(added >= 1.0, format!("no bubble added between T = 100 and 200 ({} vs {})", a.bubble_count, b.bubble_count))?;
    let per = (b.energy - a.energy) / added / e1;
    ensure((per - 1.0).abs() < 0.25, format!("energy per added bubble {per:.3} quanta"))?;
    let family: Vec<(f64, &_)> = ts.iter().zip(&sols).map(|(&t, s)| (t.exp(), &s.profile)).collect();
    let g = energy_growth_diag(&family, &pp, BETA, 1.0, k0, ExecMode::Parallel).map_err(|e| e.to_string())?;
    ensure(g.slope > 0.0, format!("regression slope {}", g.slope))?;
    Ok(format!(
        "spread {spread:.1e}, K0 scaling {scale:.1e}, {per:.3} quanta per added bubble, slope {:.3}",
        g.slope
    ))
}

fn criterion_7() -> Check {
    let (total, bad) = common::table_agreement(&[(5, 2), (7, 2), (7, 3), (9, 2), (11, 3)]);
    ensure(bad.is_empty(), format!("{} of {total} cells disagree: {}", bad.len(), bad.first().cloned().unwrap_or_default()))?;
    Ok(format!("{total} cells (with pole swaps) agree"))
}

fn criterion_8() -> Check {
    let pairs = common::balance_pairs(8);
    let mismatch = pairs.iter().filter(|(r, c)| (r.abs() < 1e-10) != ((c - 1.0).abs() < 1e-10)).count();
    let zeros = pairs.iter().filter(|(r, _)| r.abs() < 1e-10).count();
    ensure(mismatch == 0, format!("{mismatch} pairs disagree"))?;
    ensure(zeros > 0 && zeros < pairs.len(), "pairs do not cover both sides")?;
    Ok(format!("{} pairs, {zeros} balanced, no disagreement", pairs.len()))
}

/// Kazdan-Warner on constructed solutions and against monotone K.
fn criterion_9(sweep: &[EvenSolution]) -> Check {
    let mut worst = 0.0f64;
    let pp = p(7, 2);
    let o = ShootOptions::default();
    for (a1, a2, kpi, br) in [(1.0, 1.0, 1.2, (0.55, 0.7)), (0.5, 2.0, 1.5, (0.6, 0.8))] {
        let k = make_flat_pole_k(&pp, 1.0, a1, 3.0, kpi, a2, 3.0, Blend::default()).unwrap();
        let g = find_global_solution(&pp, &k, br, &o).map_err(|e| e.to_string())?;
        worst = worst.max(g.checks.kazdan_warner.relative());
    }
    let round = CurvatureModel::constant(pp.round_value()).unwrap();
    let g = find_global_solution(&pp, &round, (0.5, 2.0), &o).map_err(|e| e.to_string())?;
    worst = worst.max(g.checks.kazdan_warner.relative());
    let p92 = p(9, 2);
    let model = make_noncompact_k(&p92, EPS, BETA).unwrap();
    for s in sweep {
        let even = s.solution.even_extension().map_err(|e| e.to_string())?;
        let r = kazdan_warner_residual(&even, &p92, &model).map_err(|e| e.to_string())?;
        worst = worst.max(r.relative());
    }
    ensure(worst < 1e-6, format!("KW residual {worst:e} on a constructed solution"))?;
    let mut weakest = f64::INFINITY;
    for (a1, kpi, a2) in [(0.3, 2.0, -0.3), (-0.3, 0.5, 0.3)] {
        let mono = make_flat_pole_k(&pp, 1.0, a1, 2.0, kpi, a2, 2.0, Blend::default()).unwrap();
        for lam in [0.3, 1.0, 3.0] {
            let b = StandardBubble::new(&pp, lam, pp.round_value()).unwrap();
            let r = kazdan_warner_residual(&b, &pp, &mono).map_err(|e| e.to_string())?;
            weakest = weakest.min(r.relative());
        }
    }
    ensure(weakest > 1e-3, format!("monotone K gives relative KW value {weakest:e}"))?;
    Ok(format!("constructed solutions {worst:.1e}; monotone K at least {weakest:.3}"))
}

/// Non-existence scan and a solvable flat-pole case.
fn criterion_10() -> Check {
    let pp = p(7, 2);
    let t = 20.0;
    let eps = 1e-12 * (-(pp.nf() + 2.0 * pp.kf()) * t).exp();
    let o = ShootOptions::default();
    let scan = nonexistence_scan(&pp, eps, t, 3.0, 3.0, &log_grid(1e-4, 1e4, 60), &o, ExecMode::Parallel)
        .map_err(|e| e.to_string())?;
    ensure(scan.single_signed, format!("non-existence defect changes sign at {:?}", scan.sign_changes))?;
    let k = make_flat_pole_k(&pp, 1.0, 1.0, 3.0, 1.2, 1.0, 3.0, Blend::default()).unwrap();
    let fp = defect_scan(&pp, &k, &log_grid(0.05, 20.0, 30), &o, ExecMode::Parallel).map_err(|e| e.to_string())?;
    let i = *fp.sign_changes.first().ok_or("flat-pole defect has no sign change")?;
    let br = (fp.points[i].lambda, fp.points[i + 1].lambda);
    let g = find_global_solution(&pp, &k, br, &o).map_err(|e| e.to_string())?;
    let c = &g.checks;
    let msg = format!(
        "scan single-signed over {} points; lambda = {:.5}, ODE {:.1e}, Pohozaev {:.1e}, KW {:.1e}",
        scan.points.len(),
        g.shot.lambda,
        c.ode_residual,
        c.pohozaev.relative(),
        c.kazdan_warner.relative()
    );
    ensure(c.ode_residual < 1e-6 && c.pohozaev.relative() < 1e-6 && c.kazdan_warner.relative() < 1e-6, msg.clone())?;
    Ok(msg)
}

fn main() {
    let secs = Duration::from_secs;
    let mut r = Runner { failed: Vec::new() };
    let mut sweep = Vec::new();
    r.run(1, secs(1), criterion_1);
    r.run(2, secs(10), criterion_2);
    r.run(3, secs(5), criterion_3);
    r.run(4, secs(300), || criterion_4(&mut sweep));
    r.run(5, secs(120), || criterion_5(&sweep));
    r.run(6, secs(120), criterion_6);
    r.run(7, secs(1), criterion_7);
    r.run(8, secs(1), criterion_8);
    r.run(9, secs(10), || criterion_9(&sweep));
    r.run(10, secs(180), criterion_10);
    if !r.failed.is_empty() {
        println!("failed criteria: {:?}", r.failed);
        std::process::exit(1);
    }
}
