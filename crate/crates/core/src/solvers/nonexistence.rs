//! Defect scans over the shooting parameter.

use serde::{Deserialize, Serialize};

use crate::curvature::{make_nonexistence_k, CurvatureModel};
use crate::error::{Error, Result};
use crate::ode::Termination;
use crate::par::{par_map, ExecMode};
use crate::params::ProblemParams;
use crate::solvers::shooting::{shoot, ShootOptions};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub far_field_defect: f64,
    pub scaled_defect: f64,
    pub termination: Termination,
    pub t_reached: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    /// Indices i with a sign change between points i and i + 1.
    pub sign_changes: Vec<usize>,
    pub single_signed: bool,
    /// Adjacent pairs whose scaled defects still differ by more than the guard ratio after refinement.
    pub guard_violations: Vec<usize>,
    pub refinements: usize,
    /// eps e^{(n+2k) T} for the non-existence model, when applicable.
    pub growth: Option<f64>,
    pub verdict: String,
}

/// Relative jump allowed between neighbouring scaled defects.
pub const GUARD_RATIO: f64 = 0.5;
const MAX_REFINE: usize = 3;

fn jump(a: &ScanPoint, b: &ScanPoint) -> f64 {
    let m = a.scaled_defect.abs().max(b.scaled_defect.abs());
    if m == 0.0 {
        0.0
    } else {
        (a.scaled_defect - b.scaled_defect).abs() / m
    }
}

fn run(params: &ProblemParams, k: &CurvatureModel, lambdas: &[f64], o: &ShootOptions, mode: ExecMode) -> Result<Vec<ScanPoint>> {
    par_map(mode, lambdas, |&l| {
        shoot(params, k, l, o).map(|r| ScanPoint {
            lambda: l,
            far_field_defect: r.far_field_defect,
            scaled_defect: r.scaled_defect,
            termination: r.termination,
            t_reached: r.t_reached,
        })
    })
    .into_iter()
    .collect()
}

/// Shoot over a lambda grid, refining geometrically where neighbouring defects jump.
pub fn defect_scan(
    params: &ProblemParams,
    k: &CurvatureModel,
    lambdas: &[f64],
    o: &ShootOptions,
    mode: ExecMode,
) -> Result<ScanReport> {
    if lambdas.len() < 2 || lambdas.windows(2).any(|w| !(w[1] > w[0]) || !(w[0] > 0.0)) {
        return Err(Error::Domain("lambda grid must be positive and increasing with at least two points".into()));
    }
    let mut pts = run(params, k, lambdas, o, mode)?;
    let mut refinements = 0;
    for _ in 0..MAX_REFINE {
        let mids: Vec<f64> = pts
            .windows(2)
            .filter(|w| jump(&w[0], &w[1]) > GUARD_RATIO)
            .map(|w| (w[0].lambda * w[1].lambda).sqrt())
            .collect();
        if mids.is_empty() {
            break;
        }
        refinements += 1;
        pts.extend(run(params, k, &mids, o, mode)?);
        pts.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    }
    let sign_changes: Vec<usize> = (0..pts.len() - 1)
        .filter(|&i| pts[i].scaled_defect.signum() != pts[i + 1].scaled_defect.signum())
        .collect();
    let guard_violations: Vec<usize> =
        (0..pts.len() - 1).filter(|&i| jump(&pts[i], &pts[i + 1]) > GUARD_RATIO).collect();
    let single_signed = sign_changes.is_empty();
    let verdict = if single_signed {
        "no sign change detected: consistent with non-existence (not a proof)".to_string()
    } else {
        format!("{} sign change(s): candidate solutions bracketed", sign_changes.len())
    };
    Ok(ScanReport { points: pts, sign_changes, single_signed, guard_violations, refinements, growth: None, verdict })
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp()).collect()
}

/// Scan the non-existence model K_{eps,T}.
#[allow(clippy::too_many_arguments)]
pub fn nonexistence_scan(
    params: &ProblemParams,
    eps: f64,
    t_half: f64,
    beta1: f64,
    beta2: f64,
    lambdas: &[f64],
    o: &ShootOptions,
    mode: ExecMode,
) -> Result<ScanReport> {
    let k = make_nonexistence_k(params, eps, t_half, beta1, beta2)?;
    let mut rep = defect_scan(params, &k, lambdas, o, mode)?;
    rep.growth = Some(eps * ((params.nf() + 2.0 * params.kf()) * t_half).exp());
    Ok(rep)
}
