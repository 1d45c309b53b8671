//! Shooting across the cylinder from the south-pole bubble.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::identities::{kazdan_warner_residual, pohozaev_residual, ResidualReport};
use crate::ode::{integrate_full, scaled_pohozaev, CylProfile, EventKind, IntegratorOptions, StandardBubble, Termination, Trajectory};
use crate::params::ProblemParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootOptions {
    /// Integrator tolerance.
    pub tol: f64,
    /// Start time; defaults to deep in the bubble tail where K is flat.
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// Distance kept between the start and the bubble center.
    pub margin: f64,
    /// Threshold for the residual checks on a converged solution.
    pub check_tol: f64,
    pub max_bisections: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: 1e-10, t_start: None, t_end: None, margin: 30.0, check_tol: 1e-6, max_bisections: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct ShootResult {
    pub lambda: f64,
    pub profile: CylProfile,
    /// H at the far end; zero in the limit of a global solution.
    pub far_field_defect: f64,
    /// D / K = e^{n xi} H / K at the far end; carries the same sign as H.
    pub scaled_defect: f64,
    pub termination: Termination,
    pub t_reached: f64,
}

/// Where |K - K(-inf)| has dropped to roundoff relative to K(-inf), searching leftward.
pub fn flat_start(k: &CurvatureModel) -> f64 {
    let ks = k.k_south();
    let mut t = -1.0;
    while t > -400.0 {
        let (kv, kd) = k.eval(t);
        if (kv - ks).abs() <= 1e-15 * ks && kd.abs() <= 1e-15 * ks {
            return t;
        }
        t -= 1.0;
    }
    t
}

pub fn flat_end(k: &CurvatureModel) -> f64 {
    let kn = k.k_north();
    let mut t = 1.0;
    while t < 400.0 {
        let (kv, kd) = k.eval(t);
        if (kv - kn).abs() <= 1e-15 * kn && kd.abs() <= 1e-15 * kn {
            return t;
        }
        t += 1.0;
    }
    t
}

fn span_for(k: &CurvatureModel, lambda: f64, o: &ShootOptions) -> (f64, f64) {
    let center = -lambda.ln();
    let t0 = o.t_start.unwrap_or_else(|| (center - o.margin).min(flat_start(k)));
    let t1 = o.t_end.unwrap_or_else(|| flat_end(k).max(center + o.margin).max(-t0));
    (t0, t1)
}

/// Integrate from the standard bubble with parameter lambda and K(-inf), deep in its tail.
pub fn shoot(params: &ProblemParams, k: &CurvatureModel, lambda: f64, o: &ShootOptions) -> Result<ShootResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let (t0, t1) = span_for(k, lambda, o);
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty shooting interval [{t0}, {t1}]")));
    }
    let bubble = StandardBubble::new(params, lambda, k.k_south())?;
    let j = bubble.jet(t0);
    let d0 = scaled_pohozaev(params, k.k(t0), &j.state);
    let opts = IntegratorOptions::with_tol(o.tol);
    let profile = integrate_full(params, k, t0, [j.state.xi, j.state.y, d0], t1, &opts)?;
    let t_reached = profile.span().1;
    let s = profile.final_state();
    let d = profile.defect(t_reached);
    let kv = k.k(t_reached);
    let n = params.nf();
    Ok(ShootResult {
        lambda,
        far_field_defect: d * (-n * s.xi).exp(),
        scaled_defect: d / kv,
        termination: profile.termination(),
        t_reached,
        profile,
    })
}

/// Residual checks on a candidate global solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionChecks {
    pub ode_residual: f64,
    pub pohozaev: ResidualReport,
    pub kazdan_warner: ResidualReport,
    pub passed: bool,
}

pub fn check_solution(
    params: &ProblemParams,
    k: &CurvatureModel,
    profile: &CylProfile,
    tol: f64,
) -> Result<SolutionChecks> {
    let (lo, hi) = profile.span();
    let ode_residual = profile.collocation_residual(k);
    let pohozaev = pohozaev_residual(profile, params, k, lo, hi)?;
    let kazdan_warner = kazdan_warner_residual(profile, params, k)?;
    let passed = ode_residual < tol && pohozaev.relative() < tol && kazdan_warner.relative() < tol;
    Ok(SolutionChecks { ode_residual, pohozaev, kazdan_warner, passed })
}

#[derive(Clone, Debug)]
pub struct GlobalSolution {
    pub shot: ShootResult,
    /// The trajectory cut where it is closest to the north bubble, before it departs.
    pub profile: CylProfile,
    pub t_cut: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub checks: SolutionChecks,
}

fn defect_sign(r: &ShootResult) -> f64 {
    if r.scaled_defect == 0.0 {
        0.0
    } else {
        r.scaled_defect.signum()
    }
}

/// First grid time where two shots separate.
fn departure(a: &CylProfile, b: &CylProfile) -> f64 {
    let hi = a.span().1.min(b.span().1);
    for t in a.grid() {
        if t > hi {
            return hi;
        }
        let (x, y) = (a.state(t).xi, b.state(t).xi);
        if (x - y).abs() > 1e-6 * (1.0 + x.abs()) {
            return t;
        }
    }
    hi
}

fn cut_point(k: &CurvatureModel, p: &CylProfile, t_dep: f64) -> f64 {
    let lo = p.span().0;
    let from = p
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::CriticalPoint && e.t < t_dep && e.xiddot > 0.0)
        .map(|e| e.t)
        .last()
        .unwrap_or(0.5 * (lo + t_dep));
    p.grid()
        .into_iter()
        .filter(|&t| t >= from && t <= t_dep)
        .min_by(|&a, &b| {
            let fa = p.defect(a).abs() / k.k(a);
            let fb = p.defect(b).abs() / k.k(b);
            fa.total_cmp(&fb)
        })
        .unwrap_or(t_dep)
}

/// Bisection on ln lambda for a sign change of the far-field defect.
pub fn find_global_solution(
    params: &ProblemParams,
    k: &CurvatureModel,
    bracket: (f64, f64),
    o: &ShootOptions,
) -> Result<GlobalSolution> {
    let (mut a, mut b) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(a > 0.0) {
        return Err(Error::Domain(format!("bracket ({a}, {b}) must be positive")));
    }
    if k.is_constant() {
        // every bubble is a solution
        let lam = (a * b).sqrt();
        let shot = shoot(params, k, lam, o)?;
        let profile = shot.profile.clone();
        let checks = check_solution(params, k, &profile, o.check_tol)?;
        let t_cut = profile.span().1;
        return Ok(GlobalSolution { shot, profile, t_cut, bracket: (a, b), iterations: 0, checks });
    }
    let mut ra = shoot(params, k, a, o)?;
    let mut rb = shoot(params, k, b, o)?;
    let (sa, sb) = (defect_sign(&ra), defect_sign(&rb));
    if sa * sb > 0.0 {
        return Err(Error::NoSignChange(format!(
            "far-field defect has sign {sa} at both lambda = {a:e} and {b:e}"
        )));
    }
    let mut iterations = 0;
    let mut mid = if sa == 0.0 { ra.clone() } else { rb.clone() };
    if sa != 0.0 && sb != 0.0 {
        while iterations < o.max_bisections && (b / a).ln() > 1e-14 {
            iterations += 1;
            let m = (a * b).sqrt();
            let rm = shoot(params, k, m, o)?;
            let sm = defect_sign(&rm);
            if sm == 0.0 {
                mid = rm;
                break;
            }
            if sm == defect_sign(&ra) {
                a = m;
                ra = rm.clone();
            } else {
                b = m;
                rb = rm.clone();
            }
            mid = rm;
        }
    }
    let t_dep = departure(&ra.profile, &rb.profile);
    let t_cut = cut_point(k, &mid.profile, t_dep);
    let profile = mid.profile.truncate(f64::NEG_INFINITY, t_cut)?;
    let checks = check_solution(params, k, &profile, o.check_tol)?;
    Ok(GlobalSolution { t_cut, profile, shot: mid, bracket: (a, b), iterations, checks })
}
