//! Dense trajectories in (xi, y, D) with an event log.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{jet_fk, leading_term, CylJet, CylState, Trajectory};
use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::geometry::write_csv;
use crate::params::ProblemParams;

/// One interpolation cell: value(theta) = r0 + theta (r1 + (1-theta) (r2 + theta (r3 + (1-theta) r4)))
/// with theta = (t - t0) / h. `h` is negative for backward steps.
#[derive(Clone, Debug)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    pub rc: [[f64; 5]; 3],
}

impl Segment {
    /// Cubic Hermite cell from endpoint values and derivatives.
    pub fn hermite(t0: f64, t1: f64, y0: [f64; 3], f0: [f64; 3], y1: [f64; 3], f1: [f64; 3]) -> Self {
        let h = t1 - t0;
        let mut rc = [[0.0; 5]; 3];
        for i in 0..3 {
            let d = y1[i] - y0[i];
            let r2 = h * f0[i] - d;
            rc[i] = [y0[i], d, r2, d - h * f1[i] - r2, 0.0];
        }
        Self { t0, h, rc }
    }

    pub fn lo(&self) -> f64 {
        self.t0.min(self.t0 + self.h)
    }

    pub fn hi(&self) -> f64 {
        self.t0.max(self.t0 + self.h)
    }

    /// (values, t-derivatives) at t.
    pub fn eval(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut v = [0.0; 3];
        let mut d = [0.0; 3];
        for i in 0..3 {
            let [r0, r1, r2, r3, r4] = self.rc[i];
            let q = r3 + s1 * r4;
            let r = r2 + s * q;
            let u = r1 + s1 * r;
            v[i] = r0 + s * u;
            let dq = -r4;
            let dr = q + s * dq;
            let du = -r + s1 * dr;
            d[i] = (u + s * du) / self.h;
        }
        (v, d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    CriticalPoint,
    ConeBoundary,
    BlowDown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub xi: f64,
    pub xidot: f64,
    pub xiddot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Reached,
    ConeBoundary,
    BlowDown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// A trajectory of F_k[xi] = K with dense output.
#[derive(Clone, Debug)]
pub struct CylProfile {
    params: ProblemParams,
    segments: Vec<Segment>,
    events: Vec<Event>,
    stats: IntegratorStats,
    termination: Termination,
    /// t of the initial condition
    origin: f64,
}

impl CylProfile {
    pub(crate) fn from_parts(
        params: ProblemParams,
        mut segments: Vec<Segment>,
        mut events: Vec<Event>,
        stats: IntegratorStats,
        termination: Termination,
        origin: f64,
    ) -> Self {
        segments.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self { params, segments, events, stats, termination, origin }
    }

    /// Piecewise cubic Hermite profile through samples (t, [xi, y, D], d/dt [xi, y, D]).
    pub fn from_samples(params: ProblemParams, samples: &[(f64, [f64; 3], [f64; 3])]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Numerical("need at least two samples".into()));
        }
        let mut segs = Vec::with_capacity(samples.len() - 1);
        for w in samples.windows(2) {
            let (t0, y0, f0) = w[0];
            let (t1, y1, f1) = w[1];
            if !(t1 > t0) {
                return Err(Error::Numerical("sample times must increase".into()));
            }
            segs.push(Segment::hermite(t0, t1, y0, f0, y1, f1));
        }
        Ok(Self::from_parts(params, segs, Vec::new(), IntegratorStats::default(), Termination::Reached, samples[0].0))
    }

    /// Join profiles whose spans abut; events and stats are merged.
    pub fn concat(parts: Vec<CylProfile>) -> Result<Self> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::Numerical("nothing to concatenate".into()))?;
        for p in it {
            let gap = (p.span().0 - out.span().1).abs().min((out.span().0 - p.span().1).abs());
            if gap > 1e-9 * (1.0 + out.span().1.abs()) {
                return Err(Error::Numerical(format!("profiles do not abut (gap {gap:e})")));
            }
            out.segments.extend(p.segments);
            out.events.extend(p.events);
            out.stats.accepted += p.stats.accepted;
            out.stats.rejected += p.stats.rejected;
            out.stats.rhs_evals += p.stats.rhs_evals;
            if p.termination != Termination::Reached {
                out.termination = p.termination;
            }
        }
        let Self { params, segments, events, stats, termination, origin } = out;
        Ok(Self::from_parts(params, segments, events, stats, termination, origin))
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn set_events(&mut self, mut events: Vec<Event>) {
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        self.events = events;
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn locate(&self, t: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.hi() < t);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// ([xi, y, D], d/dt) at t; t is clamped into the span.
    pub fn raw(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let (lo, hi) = self.span();
        let t = t.clamp(lo, hi);
        self.locate(t).eval(t)
    }

    pub fn state(&self, t: f64) -> CylState {
        let (v, _) = self.raw(t);
        CylState::from_rapidity(t, v[0], v[1])
    }

    /// Scaled Pohozaev quantity D = e^{n xi} H carried by the integrator.
    pub fn defect(&self, t: f64) -> f64 {
        self.raw(t).0[2]
    }

    /// Increasing cell boundaries.
    pub fn grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.segments.iter().map(|s| s.lo()).collect();
        g.push(self.span().1);
        g
    }

    pub fn states(&self) -> Vec<CylState> {
        self.grid().into_iter().map(|t| self.state(t)).collect()
    }

    /// State at the far end of the integration (the end away from the origin).
    pub fn final_state(&self) -> CylState {
        let (lo, hi) = self.span();
        if (self.origin - lo).abs() <= (self.origin - hi).abs() {
            self.state(hi)
        } else {
            self.state(lo)
        }
    }

    /// Largest |F_k[xi] - K| / (K + |D|) at the cell boundaries, where the interpolant
    /// reproduces the integrator's own derivative. The scale is the size of the leading
    /// sigma_k term.
    pub fn collocation_residual(&self, k: &CurvatureModel) -> f64 {
        self.residual_at(k, &[0.0, 1.0])
    }

    /// Same measure at cell midpoints, with F_k taken from the derivative of the dense
    /// interpolant (one order lower than the step).
    pub fn dense_residual(&self, k: &CurvatureModel) -> f64 {
        self.residual_at(k, &[0.5])
    }

    fn residual_at(&self, k: &CurvatureModel, thetas: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for seg in &self.segments {
            for &th in thetas {
                let t = seg.t0 + th * seg.h;
                let (v, d) = seg.eval(t);
                let state = CylState::from_rapidity(t, v[0], v[1]);
                let jet = CylJet { state, xiddot: d[1] * state.gap(), ydot: d[1] };
                let kv = k.k(t);
                let scale = leading_term(&self.params, &state).max(kv);
                worst = worst.max((jet_fk(&self.params, &jet) - kv).abs() / scale);
            }
        }
        worst
    }

    /// Mismatch between the carried D and the value recomputed from (xi, y); the
    /// integrator does not enforce this constraint, so it measures drift.
    pub fn constraint_drift(&self, k: &CurvatureModel) -> f64 {
        self.grid()
            .into_iter()
            .map(|t| {
                let s = self.state(t);
                let kv = k.k(t);
                let d = self.defect(t);
                (leading_term(&self.params, &s) - kv - d).abs() / (kv + d.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Keep the cells lying inside [lo, hi]; events outside are dropped.
    pub fn truncate(&self, lo: f64, hi: f64) -> Result<Self> {
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let segs: Vec<Segment> =
            self.segments.iter().filter(|s| s.lo() >= lo - slack && s.hi() <= hi + slack).cloned().collect();
        if segs.is_empty() {
            return Err(Error::Domain(format!("no cells inside [{lo}, {hi}]")));
        }
        let (a, b) = (segs[0].lo(), segs[segs.len() - 1].hi());
        let events = self.events.iter().filter(|e| e.t >= a && e.t <= b).copied().collect();
        let origin = self.origin.clamp(a, b);
        Ok(Self::from_parts(self.params, segs, events, self.stats, self.termination, origin))
    }

    /// Rows t, xi, xidot on the cell grid.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let rows: Vec<Vec<f64>> = self.states().into_iter().map(|s| vec![s.t, s.xi, s.xidot]).collect();
        write_csv(w, &["t", "xi", "xidot"], &rows)
    }

    pub fn events_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.events).unwrap_or_default()
    }

    /// The reflected trajectory t -> -t, xi(t) -> xi(-t). Solves F_k = K(-t).
    pub fn reflect(&self) -> Self {
        let mut segs: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| {
                let mut rc = s.rc;
                // y(-t) changes sign; D is even along a reflected trajectory
                for c in rc[1].iter_mut() {
                    *c = -*c;
                }
                Segment { t0: -s.t0, h: -s.h, rc }
            })
            .collect();
        segs.reverse();
        let events = self
            .events
            .iter()
            .map(|e| Event { t: -e.t, xidot: -e.xidot, ..*e })
            .collect();
        Self::from_parts(self.params, segs, events, self.stats, self.termination, -self.origin)
    }
}

impl Trajectory for CylProfile {
    fn span(&self) -> (f64, f64) {
        let lo = self.segments.first().map_or(0.0, |s| s.lo());
        let hi = self.segments.last().map_or(0.0, |s| s.hi());
        (lo, hi)
    }

    fn jet(&self, t: f64) -> CylJet {
        let (v, d) = self.raw(t);
        let state = CylState::from_rapidity(t, v[0], v[1]);
        CylJet { state, xiddot: d[1] * state.gap(), ydot: d[1] }
    }

    fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.segments.len() + 1);
        for s in &self.segments {
            for j in 0..4 {
                out.push(s.lo() + 0.25 * j as f64 * (s.hi() - s.lo()));
            }
        }
        out.push(self.span().1);
        out
    }
}
