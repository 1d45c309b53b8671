//! Monitored quantities along trajectories: the Pohozaev quantities H-bar and H,
//! the mass m, and the two-parameter family m_{b,c}.

use serde::{Deserialize, Serialize};

use super::{CylState, Trajectory};
use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::params::ProblemParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionalKind {
    Hbar,
    H,
    M,
    Mbc { b: f64, c: f64 },
}

/// ln of (2^{1-k}/n) binom(n, k) (1 - xidot)^{-k(b+c)} (1 + xidot)^{-k(b-c)} e^{(n-2k)(b xi + c t)}.
pub fn ln_mbc(params: &ProblemParams, b: f64, c: f64, state: &CylState) -> f64 {
    let k = params.kf();
    let pre = (1.0 - k) * std::f64::consts::LN_2 + params.binom_nk().ln() - params.nf().ln();
    pre - k * (b + c) * state.ln_one_minus() - k * (b - c) * state.ln_one_plus()
        + params.gap() * (b * state.xi + c * state.t)
}

/// Value of a functional at a state given K(t).
pub fn functional_value(kind: FunctionalKind, params: &ProblemParams, k_value: f64, state: &CylState) -> Result<f64> {
    if !state.y.is_finite() {
        return Err(Error::Cone(state.xidot.abs()));
    }
    let n = params.nf();
    let k = params.kf();
    let lead = || params.round_value() * (2.0 * k * state.xi + k * state.ln_gap()).exp();
    Ok(match kind {
        FunctionalKind::Hbar => (-n * state.xi).exp() * (lead() - 1.0),
        FunctionalKind::H => (-n * state.xi).exp() * (lead() - k_value),
        FunctionalKind::M => {
            let ln = (1.0 - k) * std::f64::consts::LN_2 + params.binom_nk().ln() - n.ln()
                + k * state.ln_one_plus()
                + 0.5 * params.gap() * (state.t - state.xi);
            ln.exp()
        }
        FunctionalKind::Mbc { b, c } => ln_mbc(params, b, c, state).exp(),
    })
}

pub fn eval_functional(
    kind: FunctionalKind,
    params: &ProblemParams,
    k: &CurvatureModel,
    state: &CylState,
) -> Result<f64> {
    functional_value(kind, params, k.k(state.t), state)
}

/// Sampled values of one functional along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub kind: FunctionalKind,
    pub samples: Vec<(f64, f64)>,
}

impl FunctionalSeries {
    pub fn sample<T: Trajectory + ?Sized>(
        kind: FunctionalKind,
        params: &ProblemParams,
        k: &CurvatureModel,
        traj: &T,
        ts: &[f64],
    ) -> Result<Self> {
        let samples = ts
            .iter()
            .map(|&t| {
                let v = eval_functional(kind, params, k, &traj.jet(t).state)?;
                if !v.is_finite() {
                    return Err(Error::Numerical(format!("{kind:?} not finite at t = {t}")));
                }
                Ok((t, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, samples })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max)
    }
}
