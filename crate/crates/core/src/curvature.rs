//! Prescribed curvature families, evaluated in the cylindrical chart with exact derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{t_to_pi_minus_theta, t_to_theta, theta_to_t};
use crate::params::ProblemParams;
use crate::quadrature::{gk15, integrate, QuadOptions};
use crate::special::sech;

/// C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x).
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let g = 1.0 / x - 1.0 / (1.0 - x);
        if g > 0.0 {
            let e = (-g).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + g.exp())
        }
    }
}

pub fn smooth_step_dot(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let s = smooth_step(x);
    s * (1.0 - s) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)))
}

/// Bound on the pole remainder: (|R| + theta |R'|) / theta^beta <= phi(theta) for theta <= theta_max.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Remainder {
    /// R vanishes identically near the pole.
    Zero { theta_max: f64 },
    /// phi(theta) = coeff * theta^excess.
    Power { coeff: f64, excess: f64, theta_max: f64 },
}

impl Remainder {
    pub fn bound(&self, theta: f64) -> f64 {
        match *self {
            Remainder::Zero { theta_max } => {
                if theta <= theta_max {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Remainder::Power { coeff, excess, theta_max } => {
                if theta <= theta_max {
                    coeff * theta.powf(excess)
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// K(pole) + a * dist^beta + R near one pole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleFlatness {
    pub a: f64,
    pub beta: f64,
    pub k_pole: f64,
    pub remainder: Remainder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blend {
    pub cut_north: f64,
    pub cut_south: f64,
}

impl Default for Blend {
    fn default() -> Self {
        Self { cut_north: PI / 3.0, cut_south: 2.0 * PI / 3.0 }
    }
}

fn default_true() -> bool {
    true
}

/// JSON-serializable description of a curvature model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurvatureSpec {
    Constant {
        value: f64,
    },
    FlatPole {
        k0: f64,
        a1: f64,
        beta1: f64,
        kpi: f64,
        a2: f64,
        beta2: f64,
        #[serde(default)]
        blend: Option<Blend>,
    },
    Nonexistence {
        eps: f64,
        #[serde(rename = "T")]
        t_half: f64,
        beta1: f64,
        beta2: f64,
        #[serde(default)]
        warn_threshold: Option<f64>,
    },
    Noncompact {
        eps: f64,
        beta: f64,
        #[serde(default)]
        eps0: Option<f64>,
        #[serde(default = "default_true")]
        enforce: bool,
    },
    Perturbation {
        base: Box<CurvatureSpec>,
        gamma: f64,
        m: u32,
        offset: f64,
    },
}

pub const DEFAULT_EPS0: f64 = 1e-3;
const DEFAULT_WARN: f64 = 1e-3;

/// One unit transition band of the non-existence model, parameterized by s in [0, 1]:
/// K = eps at s = 0 and K = 1 - exp(-beta (s - 1)) / 2 for s >= 1.
#[derive(Clone, Debug)]
struct Band {
    beta: f64,
    width: f64,
    c: f64,
    cum: Vec<f64>,
}

const BAND_CELLS: usize = 64;

impl Band {
    fn new(beta: f64, eps: f64) -> Result<Self> {
        if !(eps < 0.5) {
            return Err(Error::Curvature(format!("eps = {eps} leaves no room for a monotone band")));
        }
        let width = (0.5 / beta).min(0.25);
        let mut b = Band { beta, width, c: 0.0, cum: Vec::new() };
        let opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-14, max_panels: 2000 };
        let i1 = integrate(|s| b.fill(s), 0.0, 1.0, opts)?.value;
        let i2 = integrate(|s| b.tail(s), 0.0, 1.0, opts)?.value;
        let c = (0.5 - eps - i2) / i1;
        if c < 0.0 {
            return Err(Error::Curvature(format!("band for beta = {beta} cannot be monotone (c = {c})")));
        }
        b.c = c;
        let mut cum = vec![0.0; BAND_CELLS + 1];
        for j in 0..BAND_CELLS {
            let lo = j as f64 / BAND_CELLS as f64;
            let hi = (j + 1) as f64 / BAND_CELLS as f64;
            cum[j + 1] = cum[j] + integrate(|s| b.g(s), lo, hi, opts)?.value;
        }
        b.cum = cum;
        Ok(b)
    }

    fn late(&self, s: f64) -> f64 {
        smooth_step((s - (1.0 - self.width)) / self.width)
    }

    fn late_dot(&self, s: f64) -> f64 {
        smooth_step_dot((s - (1.0 - self.width)) / self.width) / self.width
    }

    fn outer_slope(&self, s: f64) -> f64 {
        0.5 * self.beta * (-self.beta * (s - 1.0)).exp()
    }

    fn fill(&self, s: f64) -> f64 {
        (1.0 - self.late(s)) * smooth_step(2.0 * s)
    }

    fn tail(&self, s: f64) -> f64 {
        self.late(s) * self.outer_slope(s)
    }

    /// dK/ds on the band.
    fn g(&self, s: f64) -> f64 {
        self.c * self.fill(s) + self.tail(s)
    }

    #[cfg(test)]
    fn g_dot(&self, s: f64) -> f64 {
        let l = self.late(s);
        let ld = self.late_dot(s);
        let st = smooth_step(2.0 * s);
        let std = 2.0 * smooth_step_dot(2.0 * s);
        let op = self.outer_slope(s);
        self.c * (-ld * st + (1.0 - l) * std) + ld * op - self.beta * l * op
    }

    /// K - eps on the band.
    fn rise(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let j = ((s * BAND_CELLS as f64) as usize).min(BAND_CELLS - 1);
        let lo = j as f64 / BAND_CELLS as f64;
        if s == lo {
            return self.cum[j];
        }
        let _ = self.late_dot(s);
        self.cum[j] + gk15(&mut |x| self.g(x), lo, s).value
    }
}

#[derive(Clone, Debug)]
struct FlatPoleEval {
    k0: f64,
    a1: f64,
    beta1: f64,
    kpi: f64,
    a2: f64,
    beta2: f64,
    blend: Blend,
}

impl FlatPoleEval {
    /// (K, dK/dtheta) given theta and pi - theta.
    fn eval_theta(&self, theta: f64, psi: f64) -> (f64, f64) {
        let north = || {
            let p = (self.beta1 * theta.ln()).exp();
            (self.k0 + self.a1 * p, self.a1 * self.beta1 * p / theta)
        };
        let south = || {
            let p = (self.beta2 * psi.ln()).exp();
            (self.kpi + self.a2 * p, -self.a2 * self.beta2 * p / psi)
        };
        let Blend { cut_north, cut_south } = self.blend;
        if theta <= cut_north {
            north()
        } else if theta >= cut_south {
            south()
        } else {
            let w = cut_south - cut_north;
            let x = (theta - cut_north) / w;
            let s = smooth_step(x);
            let sd = smooth_step_dot(x) / w;
            let (kn, dn) = north();
            let (ks, ds) = south();
            ((1.0 - s) * kn + s * ks, (1.0 - s) * dn + s * ds + sd * (ks - kn))
        }
    }
}

#[derive(Clone, Debug)]
struct NonexistEval {
    eps: f64,
    t_half: f64,
    beta1: f64,
    beta2: f64,
    north_band: Band,
    south_band: Band,
}

impl NonexistEval {
    fn eval(&self, t: f64) -> (f64, f64) {
        let tt = self.t_half;
        if t >= tt + 1.0 {
            let e = (-self.beta1 * (t - tt - 1.0)).exp();
            (1.0 - 0.5 * e, 0.5 * self.beta1 * e)
        } else if t > tt {
            let s = t - tt;
            (self.eps + self.north_band.rise(s), self.north_band.g(s))
        } else if t >= -tt {
            (self.eps, 0.0)
        } else if t > -tt - 1.0 {
            let s = -tt - t;
            (self.eps + self.south_band.rise(s), -self.south_band.g(s))
        } else {
            let e = (self.beta2 * (t + tt + 1.0)).exp();
            (1.0 - 0.5 * e, -0.5 * self.beta2 * e)
        }
    }
}

#[derive(Clone, Debug)]
struct NoncompactEval {
    base: f64,
    eps: f64,
    beta: f64,
}

impl NoncompactEval {
    /// (J, dJ/dt) with J = -exp(-beta |t| S(|t|)).
    fn j(&self, t: f64) -> (f64, f64) {
        let x = t.abs();
        let s = smooth_step(x);
        let f = x * s;
        let fp = s + x * smooth_step_dot(x);
        let e = (-self.beta * f).exp();
        (-e, t.signum() * self.beta * fp * e)
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let (j, jd) = self.j(t);
        (self.base + self.eps * j, self.eps * jd)
    }
}

#[derive(Clone, Debug)]
enum Eval {
    Constant(f64),
    FlatPole(FlatPoleEval),
    Nonexistence(Box<NonexistEval>),
    Noncompact(NoncompactEval),
    Perturbation { base: Box<CurvatureModel>, gamma: f64, m: u32, offset: f64 },
}

/// An evaluable prescribed curvature with pole metadata.
#[derive(Clone, Debug)]
pub struct CurvatureModel {
    spec: CurvatureSpec,
    eval: Eval,
    north: Option<PoleFlatness>,
    south: Option<PoleFlatness>,
    floor: f64,
    notes: Vec<String>,
}

fn check_beta(beta: f64, params: &ProblemParams, what: &str) -> Result<()> {
    if !(beta >= 2.0 && beta < params.nf()) {
        return Err(Error::Curvature(format!("{what} = {beta} outside [2, n)")));
    }
    Ok(())
}

/// Remainder of K(pole) + a (2 tan(theta/2))^beta relative to a theta^beta.
fn tangent_remainder(a: f64, beta: f64, theta_max: f64) -> Remainder {
    Remainder::Power { coeff: 1.2 * a.abs() * beta * (beta + 3.0) / 12.0, excess: 2.0, theta_max }
}

impl CurvatureModel {
    pub fn build(params: &ProblemParams, spec: &CurvatureSpec) -> Result<Self> {
        match spec {
            CurvatureSpec::Constant { value } => Self::constant(*value),
            CurvatureSpec::FlatPole { k0, a1, beta1, kpi, a2, beta2, blend } => {
                make_flat_pole_k(params, *k0, *a1, *beta1, *kpi, *a2, *beta2, blend.unwrap_or_default())
            }
            CurvatureSpec::Nonexistence { eps, t_half, beta1, beta2, warn_threshold } => {
                make_nonexistence_k_with(params, *eps, *t_half, *beta1, *beta2, warn_threshold.unwrap_or(DEFAULT_WARN))
            }
            CurvatureSpec::Noncompact { eps, beta, eps0, enforce } => {
                make_noncompact_k_with(params, *eps, *beta, eps0.unwrap_or(DEFAULT_EPS0), *enforce)
            }
            CurvatureSpec::Perturbation { base, gamma, m, offset } => {
                let base = Self::build(params, base)?;
                make_perturbation_k(params, base, *gamma, *m, *offset)
            }
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) {
            return Err(Error::Curvature(format!("constant curvature {value} must be positive")));
        }
        Ok(Self {
            spec: CurvatureSpec::Constant { value },
            eval: Eval::Constant(value),
            north: None,
            south: None,
            floor: value,
            notes: Vec::new(),
        })
    }

    pub fn spec(&self) -> &CurvatureSpec {
        &self.spec
    }

    pub fn north(&self) -> Option<&PoleFlatness> {
        self.north.as_ref()
    }

    pub fn south(&self) -> Option<&PoleFlatness> {
        self.south.as_ref()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Metadata flags attached during construction.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.eval, Eval::Constant(_))
    }

    /// (K, dK/dt) in the cylindrical chart.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match &self.eval {
            Eval::Constant(c) => (*c, 0.0),
            Eval::FlatPole(fp) => {
                let (k, dk) = fp.eval_theta(t_to_theta(t), t_to_pi_minus_theta(t));
                (k, -sech(t) * dk)
            }
            Eval::Nonexistence(ne) => ne.eval(t),
            Eval::Noncompact(nc) => nc.eval(t),
            Eval::Perturbation { base, gamma, m, offset } => {
                let (k, kd) = base.eval(t);
                let th = t.tanh();
                let m2 = 2 * *m as i32;
                let sh = sech(t);
                (
                    k + offset + gamma * th.powi(m2),
                    kd + gamma * m2 as f64 * th.powi(m2 - 1) * sh * sh,
                )
            }
        }
    }

    pub fn k(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn k_dot(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// K as a function of the polar angle.
    pub fn k_theta(&self, theta: f64) -> Result<f64> {
        Ok(self.k(theta_to_t(theta)?))
    }

    /// dK/dtheta.
    pub fn k_theta_prime(&self, theta: f64) -> Result<f64> {
        let t = theta_to_t(theta)?;
        Ok(-self.k_dot(t) / theta.sin())
    }

    pub fn k_euc(&self, r: f64) -> f64 {
        self.k(r.ln())
    }

    /// dK_Euc/dr.
    pub fn k_euc_prime(&self, r: f64) -> f64 {
        self.k_dot(r.ln()) / r
    }

    /// K at the south pole (t -> -infinity).
    pub fn k_south(&self) -> f64 {
        match &self.south {
            Some(p) => p.k_pole,
            None => self.k(-1e3),
        }
    }

    /// K at the north pole (t -> +infinity).
    pub fn k_north(&self) -> f64 {
        match &self.north {
            Some(p) => p.k_pole,
            None => self.k(1e3),
        }
    }

    /// Largest relative mismatch between the analytic derivative and a Richardson-extrapolated
    /// five-point central difference on a uniform grid over [-t_max, t_max].
    pub fn derivative_check(&self, t_max: f64, samples: usize) -> f64 {
        let fd = |t: f64, h: f64| {
            (-self.k(t + 2.0 * h) + 8.0 * self.k(t + h) - 8.0 * self.k(t - h) + self.k(t - 2.0 * h)) / (12.0 * h)
        };
        let mut worst = 0.0f64;
        for i in 0..=samples {
            let t = -t_max + 2.0 * t_max * i as f64 / samples as f64;
            let est = (16.0 * fd(t, 1e-3) - fd(t, 2e-3)) / 15.0;
            let (k, an) = self.eval(t);
            worst = worst.max((an - est).abs() / an.abs().max(1e-6 * k.abs().max(1.0)));
        }
        worst
    }

    /// Rows (t, K, Kdot) for the `dump-curvature` artifact.
    pub fn sample(&self, ts: &[f64]) -> Vec<Vec<f64>> {
        ts.iter()
            .map(|&t| {
                let (k, kd) = self.eval(t);
                vec![t, k, kd]
            })
            .collect()
    }
}

fn sampled_floor(model: &CurvatureModel, t_max: f64) -> f64 {
    let n = 4000;
    let mut lo = f64::INFINITY;
    for i in 0..=n {
        let t = -t_max + 2.0 * t_max * i as f64 / n as f64;
        lo = lo.min(model.k(t));
    }
    lo.min(model.k_north()).min(model.k_south())
}

#[allow(clippy::too_many_arguments)]
pub fn make_flat_pole_k(
    params: &ProblemParams,
    k0: f64,
    a1: f64,
    beta1: f64,
    kpi: f64,
    a2: f64,
    beta2: f64,
    blend: Blend,
) -> Result<CurvatureModel> {
    if a1 == 0.0 || a2 == 0.0 {
        return Err(Error::Curvature("pole coefficients must be nonzero".into()));
    }
    check_beta(beta1, params, "beta1")?;
    check_beta(beta2, params, "beta2")?;
    if !(k0 > 0.0 && kpi > 0.0) {
        return Err(Error::Curvature("pole values must be positive".into()));
    }
    if !(0.0 < blend.cut_north && blend.cut_north < blend.cut_south && blend.cut_south < PI) {
        return Err(Error::Curvature(format!("bad blend cuts {blend:?}")));
    }
    let fp = FlatPoleEval { k0, a1, beta1, kpi, a2, beta2, blend };
    let mut model = CurvatureModel {
        spec: CurvatureSpec::FlatPole { k0, a1, beta1, kpi, a2, beta2, blend: Some(blend) },
        eval: Eval::FlatPole(fp.clone()),
        north: Some(PoleFlatness { a: a1, beta: beta1, k_pole: k0, remainder: Remainder::Zero { theta_max: blend.cut_north } }),
        south: Some(PoleFlatness {
            a: a2,
            beta: beta2,
            k_pole: kpi,
            remainder: Remainder::Zero { theta_max: PI - blend.cut_south },
        }),
        floor: 0.0,
        notes: Vec::new(),
    };
    // positivity on a fine theta grid
    let mut lo = k0.min(kpi);
    let m = 20000;
    for i in 1..m {
        let th = PI * i as f64 / m as f64;
        lo = lo.min(fp.eval_theta(th, PI - th).0);
    }
    if !(lo > 0.0) {
        return Err(Error::Curvature(format!("K takes the non-positive value {lo}")));
    }
    model.floor = lo;
    Ok(model)
}

pub fn make_nonexistence_k(params: &ProblemParams, eps: f64, t_half: f64, beta1: f64, beta2: f64) -> Result<CurvatureModel> {
    make_nonexistence_k_with(params, eps, t_half, beta1, beta2, DEFAULT_WARN)
}

pub fn make_nonexistence_k_with(
    params: &ProblemParams,
    eps: f64,
    t_half: f64,
    beta1: f64,
    beta2: f64,
    warn_threshold: f64,
) -> Result<CurvatureModel> {
    check_beta(beta1, params, "beta1")?;
    check_beta(beta2, params, "beta2")?;
    if !(eps > 0.0) {
        return Err(Error::Curvature(format!("eps = {eps} must be positive")));
    }
    if !(t_half >= 1.0) {
        return Err(Error::Curvature(format!("T = {t_half} must be at least 1")));
    }
    let balance = 1.0 / beta1 + 1.0 / beta2;
    if balance < 2.0 / params.gap() - 1e-12 {
        return Err(Error::Curvature(format!(
            "need 1/beta1 + 1/beta2 >= 2/(n-2k), got {balance}"
        )));
    }
    let north_band = Band::new(beta1, eps)?;
    let south_band = Band::new(beta2, eps)?;
    let ne = NonexistEval { eps, t_half, beta1, beta2, north_band, south_band };
    let mut notes = vec!["transition bands use the standardized exp(-1/x) partition of unity".to_string()];
    let growth = eps * ((params.nf() + 2.0 * params.kf()) * t_half).exp();
    if growth > warn_threshold {
        notes.push(format!("eps * exp((n+2k)T) = {growth:e} exceeds the warning threshold {warn_threshold:e}"));
    }
    let mut max_slope = 0.0f64;
    for i in 0..=2000 {
        let s = i as f64 / 2000.0;
        max_slope = max_slope.max(ne.north_band.g(s)).max(ne.south_band.g(s));
    }
    if max_slope > 2.0 {
        notes.push(format!(
            "band slope reaches {max_slope:.4} > 2: the outer branch alone has slope beta/2 at the band edge"
        ));
    }
    let a1 = -0.5 * (beta1 * (t_half + 1.0)).exp() / 2f64.powf(beta1);
    let a2 = -0.5 * (beta2 * (t_half + 1.0)).exp() / 2f64.powf(beta2);
    let th_edge = t_to_theta(t_half + 1.0);
    Ok(CurvatureModel {
        spec: CurvatureSpec::Nonexistence { eps, t_half, beta1, beta2, warn_threshold: Some(warn_threshold) },
        eval: Eval::Nonexistence(Box::new(ne)),
        north: Some(PoleFlatness { a: a1, beta: beta1, k_pole: 1.0, remainder: tangent_remainder(a1, beta1, th_edge) }),
        south: Some(PoleFlatness { a: a2, beta: beta2, k_pole: 1.0, remainder: tangent_remainder(a2, beta2, th_edge) }),
        floor: eps,
        notes,
    })
}

pub fn make_noncompact_k(params: &ProblemParams, eps: f64, beta: f64) -> Result<CurvatureModel> {
    make_noncompact_k_with(params, eps, beta, DEFAULT_EPS0, true)
}

/// `enforce = false` skips the beta < (n-2k)/2 and eps <= eps0 preconditions
/// (the formula itself is defined for any beta >= 2).
pub fn make_noncompact_k_with(
    params: &ProblemParams,
    eps: f64,
    beta: f64,
    eps0: f64,
    enforce: bool,
) -> Result<CurvatureModel> {
    check_beta(beta, params, "beta")?;
    if !(eps >= 0.0) {
        return Err(Error::Curvature(format!("eps = {eps} must be non-negative")));
    }
    let mut notes = Vec::new();
    if beta >= 0.5 * params.gap() {
        if enforce {
            return Err(Error::Curvature(format!("beta = {beta} must be below (n-2k)/2 = {}", 0.5 * params.gap())));
        }
        notes.push("beta at or above (n-2k)/2: outside the non-compact regime".to_string());
    }
    if eps > eps0 {
        if enforce {
            return Err(Error::Curvature(format!("eps = {eps} exceeds eps0 = {eps0}")));
        }
        notes.push(format!("eps above eps0 = {eps0}"));
    }
    let base = params.round_value();
    let nc = NoncompactEval { base, eps, beta };
    let a = -eps / 2f64.powf(beta);
    let edge = t_to_theta(1.0);
    let pole = |_: ()| PoleFlatness { a, beta, k_pole: base, remainder: tangent_remainder(a, beta, edge) };
    let model = CurvatureModel {
        spec: CurvatureSpec::Noncompact { eps, beta, eps0: Some(eps0), enforce },
        eval: Eval::Noncompact(nc),
        north: if eps > 0.0 { Some(pole(())) } else { None },
        south: if eps > 0.0 { Some(pole(())) } else { None },
        floor: base - eps,
        notes,
    };
    if !(model.floor > 0.0) {
        return Err(Error::Curvature("eps too large for positivity".into()));
    }
    Ok(model)
}

/// Leading pole behaviour of C + K_* + gamma cos^{2m}(theta), where cos^{2m} = 1 - m theta^2 + O(theta^4).
fn perturbed_pole(base: Option<&PoleFlatness>, base_k: f64, gamma: f64, m: u32, offset: f64) -> Option<PoleFlatness> {
    let k_pole = base.map_or(base_k, |p| p.k_pole) + offset + gamma;
    let bump = -gamma * m as f64;
    match base {
        None if gamma == 0.0 => None,
        None => Some(PoleFlatness {
            a: bump,
            beta: 2.0,
            k_pole,
            remainder: Remainder::Power { coeff: gamma.abs() * (m * m) as f64, excess: 2.0, theta_max: 0.5 },
        }),
        Some(p) if gamma == 0.0 => Some(PoleFlatness { k_pole, ..*p }),
        Some(p) if p.beta > 2.0 => Some(PoleFlatness {
            a: bump,
            beta: 2.0,
            k_pole,
            remainder: Remainder::Power {
                coeff: 2.0 * p.a.abs() * p.beta + gamma.abs() * (m * m) as f64,
                excess: (p.beta - 2.0).min(2.0),
                theta_max: 0.5,
            },
        }),
        Some(p) => {
            let a = p.a + bump;
            if a == 0.0 {
                return None;
            }
            Some(PoleFlatness { a, beta: 2.0, k_pole, remainder: p.remainder })
        }
    }
}

pub fn make_perturbation_k(
    params: &ProblemParams,
    base: CurvatureModel,
    gamma: f64,
    m: u32,
    offset: f64,
) -> Result<CurvatureModel> {
    let _ = params;
    for p in [base.north(), base.south()].into_iter().flatten() {
        if !(m as f64 > p.beta) {
            return Err(Error::Curvature(format!("m = {m} must exceed the pole exponent {}", p.beta)));
        }
    }
    let north = perturbed_pole(base.north(), base.k_north(), gamma, m, offset);
    let south = perturbed_pole(base.south(), base.k_south(), gamma, m, offset);
    let mut notes = base.notes.clone();
    if gamma != 0.0 {
        notes.push("cos^{2m} contributes a beta = 2 term at both poles".to_string());
    }
    let spec = CurvatureSpec::Perturbation { base: Box::new(base.spec.clone()), gamma, m, offset };
    let mut model = CurvatureModel {
        spec,
        eval: Eval::Perturbation { base: Box::new(base), gamma, m, offset },
        north,
        south,
        floor: 0.0,
        notes,
    };
    let floor = sampled_floor(&model, 40.0);
    if !(floor > 0.0) {
        return Err(Error::Curvature(format!("perturbed curvature reaches {floor}; raise the offset")));
    }
    model.floor = floor;
    Ok(model)
}
