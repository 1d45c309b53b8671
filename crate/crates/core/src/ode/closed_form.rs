//! Explicit solutions: the standard bubble, the degenerate family with F_k = 0, and
//! smooth glued profiles used as synthetic test trajectories.

use std::f64::consts::LN_2;

use super::{CylJet, CylState, Trajectory};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::{ln_cosh, sech};

const DEFAULT_WINDOW: (f64, f64) = (-40.0, 40.0);
const NODE_SPACING: f64 = 0.05;

fn uniform_nodes((lo, hi): (f64, f64)) -> Vec<f64> {
    let n = (((hi - lo) / NODE_SPACING).ceil() as usize).max(1);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// t -> Xi(t + ln lambda) + ln(K0)/2k, the solution of F_k = K0 with H = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardBubble {
    pub lambda: f64,
    pub k0: f64,
    shift: f64,
    offset: f64,
    window: (f64, f64),
}

impl StandardBubble {
    pub fn new(params: &ProblemParams, lambda: f64, k0: f64) -> Result<Self> {
        if !(lambda > 0.0 && k0 > 0.0) {
            return Err(Error::Domain(format!("bubble needs lambda > 0 and K0 > 0, got {lambda}, {k0}")));
        }
        let k2 = 2.0 * params.kf();
        let offset = 0.5 * LN_2 - params.binom_nk().ln() / k2 + k0.ln() / k2;
        Ok(Self { lambda, k0, shift: lambda.ln(), offset, window: DEFAULT_WINDOW })
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    /// Xi itself: -ln(e^t / (1 + e^{2t})) - ln(2^{1/2} binom(n,k)^{1/2k}).
    pub fn xi_unit(params: &ProblemParams, t: f64) -> f64 {
        let k2 = 2.0 * params.kf();
        ln_cosh(t) + 0.5 * LN_2 - params.binom_nk().ln() / k2
    }

    pub fn xi(&self, t: f64) -> f64 {
        ln_cosh(t + self.shift) + self.offset
    }

    /// Location of the minimum.
    pub fn center(&self) -> f64 {
        -self.shift
    }

    pub fn min_value(&self) -> f64 {
        self.offset
    }
}

impl Trajectory for StandardBubble {
    fn span(&self) -> (f64, f64) {
        self.window
    }

    fn jet(&self, t: f64) -> CylJet {
        let y = t + self.shift;
        let s = sech(y);
        CylJet { state: CylState::from_rapidity(t, self.xi(t), y), xiddot: s * s, ydot: 1.0 }
    }

    fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.window)
    }
}

/// -(2k/(n-2k)) ln(a e^{-g t} + b e^{g t}) with g = (n-2k)/2k; solves F_k = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegenerateProfile {
    pub a: f64,
    pub b: f64,
    g: f64,
    window: (f64, f64),
}

impl DegenerateProfile {
    pub fn new(params: &ProblemParams, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0) || a + b == 0.0 {
            return Err(Error::Domain(format!("degenerate profile needs a, b >= 0 not both zero, got {a}, {b}")));
        }
        Ok(Self { a, b, g: params.gamma(), window: DEFAULT_WINDOW })
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    fn parts(&self, t: f64) -> (f64, f64) {
        (self.a * (-self.g * t).exp(), self.b * (self.g * t).exp())
    }

    pub fn xi(&self, t: f64) -> f64 {
        // log-sum-exp form
        let la = if self.a > 0.0 { self.a.ln() - self.g * t } else { f64::NEG_INFINITY };
        let lb = if self.b > 0.0 { self.b.ln() + self.g * t } else { f64::NEG_INFINITY };
        let m = la.max(lb);
        let lse = m + ((la - m).exp() + (lb - m).exp()).ln();
        -lse / self.g
    }

    pub fn xidot(&self, t: f64) -> f64 {
        let (ea, eb) = self.parts(t);
        (ea - eb) / (ea + eb)
    }

    pub fn xiddot(&self, t: f64) -> f64 {
        let (ea, eb) = self.parts(t);
        let s = ea + eb;
        -4.0 * self.g * (ea / s) * (eb / s)
    }
}

impl Trajectory for DegenerateProfile {
    fn span(&self) -> (f64, f64) {
        self.window
    }

    fn jet(&self, t: f64) -> CylJet {
        let y = if self.a == 0.0 {
            f64::NEG_INFINITY
        } else if self.b == 0.0 {
            f64::INFINITY
        } else {
            0.5 * (self.a / self.b).ln() - self.g * t
        };
        let state = CylState { t, xi: self.xi(t), xidot: self.xidot(t), y };
        let ydot = if y.is_finite() { -self.g } else { 0.0 };
        CylJet { state, xiddot: self.xiddot(t), ydot }
    }

    fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.window)
    }
}

/// A building block for [`SoftMinProfile`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Bubble(StandardBubble),
    /// slope * t + intercept with |slope| < 1
    Line { slope: f64, intercept: f64 },
}

impl Piece {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Piece::Bubble(b) => {
                let j = b.jet(t);
                (j.state.xi, j.state.xidot, j.xiddot)
            }
            Piece::Line { slope, intercept } => (slope * t + intercept, *slope, 0.0),
        }
    }
}

/// Smooth minimum -(1/alpha) ln sum exp(-alpha f_i) of bubbles and lines, a cheap
/// stand-in for multi-bubble geometry. It is not a solution of any F_k = K.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMinProfile {
    pieces: Vec<Piece>,
    alpha: f64,
    window: (f64, f64),
}

impl SoftMinProfile {
    pub fn new(pieces: Vec<Piece>, alpha: f64, window: (f64, f64)) -> Result<Self> {
        if pieces.is_empty() || !(alpha > 0.0) {
            return Err(Error::Domain("soft-min needs pieces and alpha > 0".into()));
        }
        for p in &pieces {
            if let Piece::Line { slope, .. } = p {
                if slope.abs() >= 1.0 {
                    return Err(Error::Cone(slope.abs()));
                }
            }
        }
        Ok(Self { pieces, alpha, window })
    }
}

impl Trajectory for SoftMinProfile {
    fn span(&self) -> (f64, f64) {
        self.window
    }

    fn jet(&self, t: f64) -> CylJet {
        let vals: Vec<(f64, f64, f64)> = self.pieces.iter().map(|p| p.eval(t)).collect();
        let fmin = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let ws: Vec<f64> = vals.iter().map(|v| (-self.alpha * (v.0 - fmin)).exp()).collect();
        let z: f64 = ws.iter().sum();
        let xi = fmin - z.ln() / self.alpha;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut d1sq = 0.0;
        for (w, v) in ws.iter().zip(&vals) {
            let p = w / z;
            d1 += p * v.1;
            d2 += p * v.2;
            d1sq += p * v.1 * v.1;
        }
        let xiddot = d2 - self.alpha * (d1sq - d1 * d1);
        let state = CylState::from_rapidity(t, xi, d1.atanh());
        let gap = state.gap();
        CylJet { state, xiddot, ydot: xiddot / gap }
    }

    fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.window)
    }
}
