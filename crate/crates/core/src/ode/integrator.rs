//! Dormand-Prince 5(4) with dense output and event location on the (xi, y, D) system.

use serde::{Deserialize, Serialize};

use super::profile::{CylProfile, Event, EventKind, IntegratorStats, Segment, Termination};
use super::{scaled_pohozaev, system_rhs, CylState};
use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::roots::brent;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Stop with a cone-boundary event once dy/dt exceeds this (K + D has nearly vanished).
    pub rate_max: f64,
    /// Stop with a cone-boundary event once |y| exceeds this (|xidot| within e^{-2 y_max} of 1).
    pub rapidity_max: f64,
    /// Stop with a blow-down event once xi drops below this.
    pub xi_floor: f64,
    /// Locate xidot = 0 crossings.
    pub detect_critical: bool,
    pub root_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: 0.5,
            max_steps: 2_000_000,
            rate_max: 1e4,
            rapidity_max: 600.0,
            xi_floor: -50.0,
            detect_critical: true,
            root_tol: 1e-12,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// Integrate F_k[xi] = K from a (t, xi, xidot) state; D is initialized from the state.
pub fn integrate(
    params: &ProblemParams,
    k: &CurvatureModel,
    init: CylState,
    t_end: f64,
    tol: f64,
) -> Result<CylProfile> {
    let d0 = scaled_pohozaev(params, k.k(init.t), &init);
    integrate_full(params, k, init.t, [init.xi, init.y, d0], t_end, &IntegratorOptions::with_tol(tol))
}

struct Rhs<'a> {
    params: &'a ProblemParams,
    k: &'a CurvatureModel,
    evals: usize,
}

impl Rhs<'_> {
    fn call(&mut self, t: f64, s: &[f64; 3]) -> Option<[f64; 3]> {
        self.evals += 1;
        let (kv, kd) = self.k.eval(t);
        system_rhs(self.params, kv, kd, s)
    }
}

fn axpy(y: &[f64; 3], h: f64, terms: &[(f64, &[f64; 3])]) -> [f64; 3] {
    let mut out = *y;
    for i in 0..3 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

struct Step {
    y1: [f64; 3],
    k7: [f64; 3],
    err: f64,
    seg: Segment,
}

fn dp_step(rhs: &mut Rhs, t: f64, y: &[f64; 3], k1: &[f64; 3], h: f64, o: &IntegratorOptions) -> Option<Step> {
    let k2 = rhs.call(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = rhs.call(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs.call(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs.call(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs.call(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs.call(t + h, &y1)?;
    let mut acc = 0.0;
    let mut rc = [[0.0; 5]; 3];
    // xi and y enter the residual F_k - K through e^{2k(xi - ln cosh y)}, so their errors are weighted by 2k
    let weight = [2.0 * rhs.params.kf(), 2.0 * rhs.params.kf(), 1.0];
    for i in 0..3 {
        let e = weight[i] * h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = o.atol + o.rtol * y[i].abs().max(y1[i].abs());
        acc += (e / sc).powi(2);
        let d = y1[i] - y[i];
        let r2 = h * k1[i] - d;
        let r3 = d - h * k7[i] - r2;
        let r4 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        rc[i] = [y[i], d, r2, r3, r4];
    }
    let err = (acc / 3.0).sqrt();
    if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Step { y1, k7, err, seg: Segment { t0: t, h, rc } })
}

/// Integrate the (xi, y, D) system from `t0` to `t_end` (either direction).
pub fn integrate_full(
    params: &ProblemParams,
    k: &CurvatureModel,
    t0: f64,
    y0: [f64; 3],
    t_end: f64,
    o: &IntegratorOptions,
) -> Result<CylProfile> {
    if t_end == t0 {
        return Err(Error::Domain("t_end equals the initial time".into()));
    }
    let dir = (t_end - t0).signum();
    let mut rhs = Rhs { params, k, evals: 0 };
    let mut k1 = rhs
        .call(t0, &y0)
        .ok_or_else(|| Error::Cone(y0[1].tanh().abs()))?;
    let span = (t_end - t0).abs();
    // keep h n inside the real stability interval so a decaying D stays decaying
    let h_max = o.h_max.min(2.0 / params.nf());
    let mut h = dir * o.h_init.unwrap_or(1e-2).min(span).min(h_max);
    let mut t = t0;
    let mut y = y0;
    let mut segs = Vec::new();
    let mut events = Vec::new();
    let mut stats = IntegratorStats::default();
    let mut termination = Termination::Reached;
    let mut last_rejected = false;
    let mut cone_trouble = false;
    while (t_end - t) * dir > 0.0 {
        if stats.accepted >= o.max_steps {
            return Err(Error::Numerical(format!("step budget exhausted at t = {t}")));
        }
        let h_floor = 1e-13 * (1.0 + t.abs());
        if h.abs() < h_floor {
            if cone_trouble {
                events.push(cone_event(params, k, t, &y));
                termination = Termination::ConeBoundary;
                break;
            }
            return Err(Error::StepCollapse { t, h });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let step = match dp_step(&mut rhs, t, &y, &k1, h, o) {
            Some(s) => s,
            None => {
                stats.rejected += 1;
                cone_trouble = true;
                last_rejected = true;
                h *= 0.25;
                continue;
            }
        };
        if step.err > 1.0 {
            stats.rejected += 1;
            let fac = (0.9 * step.err.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
            continue;
        }
        cone_trouble = false;
        let t1 = if (t + h - t_end) * dir >= 0.0 { t_end } else { t + h };
        stats.accepted += 1;
        if o.detect_critical {
            locate_critical(params, k, &step.seg, &mut events, o.root_tol)?;
        }
        segs.push(step.seg);
        t = t1;
        y = step.y1;
        k1 = step.k7;
        if k1[1] > o.rate_max || y[1].abs() > o.rapidity_max {
            events.push(cone_event(params, k, t, &y));
            termination = Termination::ConeBoundary;
            break;
        }
        if y[0] < o.xi_floor {
            events.push(Event { kind: EventKind::BlowDown, t, xi: y[0], xidot: y[1].tanh(), xiddot: k1[1] / y[1].cosh().powi(2) });
            termination = Termination::BlowDown;
            break;
        }
        let mut fac = (0.9 * step.err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = dir * (h.abs() * fac).min(h_max);
    }
    stats.rhs_evals = rhs.evals;
    if segs.is_empty() {
        return Err(Error::Cone(y0[1].tanh().abs()));
    }
    Ok(CylProfile::from_parts(*params, segs, events, stats, termination, t0))
}

fn cone_event(params: &ProblemParams, k: &CurvatureModel, t: f64, y: &[f64; 3]) -> Event {
    let (kv, kd) = k.eval(t);
    let ydot = system_rhs(params, kv, kd, y).map_or(f64::INFINITY, |f| f[1]);
    Event {
        kind: EventKind::ConeBoundary,
        t,
        xi: y[0],
        xidot: y[1].tanh(),
        xiddot: ydot / y[1].cosh().powi(2),
    }
}

/// Roots of y (equivalently xidot) inside one accepted cell.
fn locate_critical(
    params: &ProblemParams,
    k: &CurvatureModel,
    seg: &Segment,
    events: &mut Vec<Event>,
    tol: f64,
) -> Result<()> {
    let ys: Vec<(f64, f64)> = (0..=4)
        .map(|j| {
            let t = if j == 4 { seg.t0 + seg.h } else { seg.t0 + 0.25 * j as f64 * seg.h };
            (t, seg.eval(t).0[1])
        })
        .collect();
    for w in ys.windows(2) {
        let ((ta, ya), (tb, yb)) = (w[0], w[1]);
        let root = if yb == 0.0 {
            Some(tb)
        } else if ya * yb < 0.0 {
            Some(brent(|t| seg.eval(t).0[1], ta, tb, tol)?)
        } else {
            None
        };
        if let Some(tr) = root {
            let (v, _) = seg.eval(tr);
            let (kv, kd) = k.eval(tr);
            // at xidot = 0 the gap is 1, so xiddot = dy/dt from the system
            let xdd = system_rhs(params, kv, kd, &v).map_or(f64::NAN, |f| f[1]);
            events.push(Event { kind: EventKind::CriticalPoint, t: tr, xi: v[0], xidot: v[1].tanh(), xiddot: xdd });
        }
    }
    Ok(())
}
