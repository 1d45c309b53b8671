//! The cylindrical operator F_k, its inversion, and trajectories.
//!
//! Internally trajectories are carried in (xi, y, D) with y = artanh(xidot) the
//! rapidity and D = e^{n xi} H the scaled Pohozaev quantity. In these variables
//! the equation F_k[xi] = K reads
//!
//!   xi' = tanh y,   y' = (n/2k) K / (K + D) - (n-2k)/2k,   D' = n tanh(y) D - K'.

pub mod closed_form;
pub mod functionals;
pub mod integrator;
pub mod profile;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::{ln_cosh, softplus};

pub use closed_form::{DegenerateProfile, StandardBubble};
pub use functionals::{eval_functional, FunctionalKind, FunctionalSeries};
pub use integrator::{integrate, integrate_full, IntegratorOptions};
pub use profile::{CylProfile, Event, EventKind, Termination};

/// A point on a cylindrical trajectory. `y` is the rapidity artanh(xidot); it is kept
/// alongside xidot because 1 - xidot^2 underflows long before y becomes large.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylState {
    pub t: f64,
    pub xi: f64,
    pub xidot: f64,
    pub y: f64,
}

impl CylState {
    pub fn new(t: f64, xi: f64, xidot: f64) -> Result<Self> {
        if !(xidot.abs() < 1.0) {
            return Err(Error::Cone(xidot.abs()));
        }
        if !t.is_finite() || !xi.is_finite() {
            return Err(Error::Numerical(format!("non-finite state t = {t}, xi = {xi}")));
        }
        Ok(Self { t, xi, xidot, y: xidot.atanh() })
    }

    pub fn from_rapidity(t: f64, xi: f64, y: f64) -> Self {
        Self { t, xi, xidot: y.tanh(), y }
    }

    /// ln(1 - xidot^2)
    pub fn ln_gap(&self) -> f64 {
        if self.y.is_infinite() {
            f64::NEG_INFINITY
        } else {
            -2.0 * ln_cosh(self.y)
        }
    }

    /// 1 - xidot^2
    pub fn gap(&self) -> f64 {
        self.ln_gap().exp()
    }

    /// ln(1 + xidot)
    pub fn ln_one_plus(&self) -> f64 {
        LN_2 - softplus(-2.0 * self.y)
    }

    /// ln(1 - xidot)
    pub fn ln_one_minus(&self) -> f64 {
        LN_2 - softplus(2.0 * self.y)
    }
}

/// State plus second-order data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylJet {
    pub state: CylState,
    pub xiddot: f64,
    /// dy/dt
    pub ydot: f64,
}

/// Anything that can report (xi, xidot, xiddot) on a t-interval.
pub trait Trajectory: Sync {
    fn span(&self) -> (f64, f64);
    fn jet(&self, t: f64) -> CylJet;
    /// Increasing sample nodes covering the span, fine enough that sign changes of
    /// xidot between consecutive nodes are isolated.
    fn nodes(&self) -> Vec<f64>;
}

/// F_k from (xi, ln(1 - xidot^2), xiddot).
pub fn fk_from_parts(params: &ProblemParams, xi: f64, ln_gap: f64, xiddot: f64) -> f64 {
    let k = params.kf();
    if ln_gap == f64::NEG_INFINITY {
        return 0.0;
    }
    let lead = (2.0 * k * xi + (k - 1.0) * ln_gap).exp();
    lead * (xiddot + params.gamma() * ln_gap.exp()) / params.inverse_prefactor()
}

/// 2^{1-k} binom(n-1, k-1) e^{2k xi} (1 - xidot^2)^{k-1} (xiddot + (n-2k)/2k (1 - xidot^2)).
pub fn eval_fk(params: &ProblemParams, xi: f64, xidot: f64, xiddot: f64) -> Result<f64> {
    if !(xidot.abs() < 1.0) {
        return Err(Error::Cone(xidot.abs()));
    }
    Ok(fk_from_parts(params, xi, (-xidot * xidot).ln_1p(), xiddot))
}

/// F_k evaluated on a jet, using the rapidity for the cone factor.
pub fn jet_fk(params: &ProblemParams, jet: &CylJet) -> f64 {
    fk_from_parts(params, jet.state.xi, jet.state.ln_gap(), jet.xiddot)
}

/// Second derivative solving F_k[xi] = K at the given state.
pub fn ode_rhs(params: &ProblemParams, k_value: f64, state: &CylState) -> Result<f64> {
    if !state.y.is_finite() {
        return Err(Error::Cone(state.xidot.abs()));
    }
    if !(k_value > 0.0) {
        return Err(Error::Domain(format!("K = {k_value} must be positive")));
    }
    let k = params.kf();
    let lg = state.ln_gap();
    let drive = params.inverse_prefactor() * k_value * (-2.0 * k * state.xi - k * lg).exp();
    Ok(lg.exp() * (drive - params.gamma()))
}

/// c1 e^{2k xi} (1 - xidot^2)^k with c1 = 2^{-k} binom(n, k); equals K + D on solutions.
pub fn leading_term(params: &ProblemParams, state: &CylState) -> f64 {
    let k = params.kf();
    params.round_value() * (2.0 * k * state.xi + k * state.ln_gap()).exp()
}

/// D = e^{n xi} H.
pub fn scaled_pohozaev(params: &ProblemParams, k_value: f64, state: &CylState) -> f64 {
    leading_term(params, state) - k_value
}

/// Right-hand side of the (xi, y, D) system; `None` outside the cone (K + D <= 0).
#[inline]
pub fn system_rhs(params: &ProblemParams, k_value: f64, k_dot: f64, s: &[f64; 3]) -> Option<[f64; 3]> {
    let denom = k_value + s[2];
    if !(denom > 0.0) || !s[1].is_finite() {
        return None;
    }
    let th = s[1].tanh();
    let ratio = params.nf() / (2.0 * params.kf());
    Some([th, ratio * k_value / denom - params.gamma(), params.nf() * th * s[2] - k_dot])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, k: u32) -> ProblemParams {
        ProblemParams::new(n, k).unwrap()
    }

    #[test]
    fn fk_hand_values() {
        assert!((eval_fk(&p(5, 2), 0.0, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(eval_fk(&p(5, 2), 0.0, 1.0, 0.0).is_err());
        let t = 0.7f64;
        let v = eval_fk(&p(5, 2), t.cosh().ln(), t.tanh(), 1.0 / t.cosh().powi(2)).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn rhs_hand_value() {
        let s = CylState::new(0.0, 0.0, 0.0).unwrap();
        assert!((ode_rhs(&p(9, 2), 1.0, &s).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn system_matches_rhs() {
        let pp = p(7, 2);
        let s = CylState::new(0.3, -0.4, 0.6).unwrap();
        let kv = 1.3;
        let d = scaled_pohozaev(&pp, kv, &s);
        let f = system_rhs(&pp, kv, 0.0, &[s.xi, s.y, d]).unwrap();
        let xdd = ode_rhs(&pp, kv, &s).unwrap();
        assert!((f[1] * s.gap() - xdd).abs() < 1e-13);
    }

    #[test]
    fn critical_point_sign() {
        // at xidot = 0, xiddot < 0 iff e^{-2k xi} K < binom(n-1,k-1)(n-2k)/(2^k k)
        let pp = p(7, 3);
        let thr = pp.binom_n1k1() * pp.gap() / (2f64.powi(3) * 3.0);
        for &xi in &[-1.0, 0.0, 0.5, 2.0] {
            for &kv in &[0.1, 1.0, 10.0] {
                let s = CylState::new(0.0, xi, 0.0).unwrap();
                let below = (-6.0 * xi as f64).exp() * kv < thr;
                assert_eq!(ode_rhs(&pp, kv, &s).unwrap() < 0.0, below);
            }
        }
    }
}
