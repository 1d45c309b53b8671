//! Integral identities checked along trajectories: Pohozaev, mass-type, Kazdan-Warner,
//! the balance function of the perturbation argument, the w-form system and the beta
//! integrals.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::ode::functionals::{functional_value, FunctionalKind};
use crate::ode::{jet_fk, CylJet, Trajectory};
use crate::params::ProblemParams;
use crate::quadrature::{integrate, integrate_pieces, integrate_unit_singular, Quad, QuadOptions};
use crate::special::{ln_gamma, sech};

/// lhs - rhs of one identity on [t1, t2].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub quad_error: f64,
    /// Magnitude of the terms entering the identity; `residual / scale` is the relative defect.
    pub scale: f64,
}

impl ResidualReport {
    fn new(identity: &str, t1: f64, t2: f64, lhs: f64, rhs: Quad, scale: f64) -> Self {
        Self {
            identity: identity.to_string(),
            t1,
            t2,
            lhs,
            rhs: rhs.value,
            residual: lhs - rhs.value,
            quad_error: rhs.error.max(f64::MIN_POSITIVE),
            scale: scale.max(f64::MIN_POSITIVE),
        }
    }

    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_panels: 200 }
}

fn check_interval<T: Trajectory + ?Sized>(traj: &T, t1: f64, t2: f64) -> Result<()> {
    let (lo, hi) = traj.span();
    if !(t1 <= t2 && t1 >= lo - 1e-12 && t2 <= hi + 1e-12) {
        return Err(Error::Domain(format!("[{t1}, {t2}] not inside the trajectory span [{lo}, {hi}]")));
    }
    Ok(())
}

/// Integral of f(jet) over [t1, t2], split at the trajectory's nodes.
pub fn integrate_along<T, F>(traj: &T, t1: f64, t2: f64, mut f: F) -> Result<Quad>
where
    T: Trajectory + ?Sized,
    F: FnMut(&CylJet) -> f64,
{
    if t1 == t2 {
        return Ok(Quad { value: 0.0, error: 0.0 });
    }
    let mut breaks = vec![t1];
    breaks.extend(traj.nodes().into_iter().filter(|&t| t > t1 && t < t2));
    breaks.push(t2);
    breaks.dedup();
    integrate_pieces(|t| f(&traj.jet(t)), &breaks, quad_opts())
}

/// Same as [`integrate_along`] but also accumulates the integral of |f| for scaling.
fn integrate_scaled<T, F>(traj: &T, t1: f64, t2: f64, f: F) -> Result<(Quad, f64)>
where
    T: Trajectory + ?Sized,
    F: Fn(&CylJet) -> f64,
{
    let q = integrate_along(traj, t1, t2, &f)?;
    let a = integrate_along(traj, t1, t2, |j| f(j).abs())?;
    Ok((q, a.value))
}

/// Integral of `f` with the integral of a separate magnitude density `g` as scale.
fn integrate_with_scale<T, F, G>(traj: &T, t1: f64, t2: f64, f: F, g: G) -> Result<(Quad, f64)>
where
    T: Trajectory + ?Sized,
    F: Fn(&CylJet) -> f64,
    G: Fn(&CylJet) -> f64,
{
    let q = integrate_along(traj, t1, t2, &f)?;
    let a = integrate_along(traj, t1, t2, g)?;
    Ok((q, a.value))
}

/// H(t2) - H(t1) = int [-n (F_k - K) e^{-n xi} xidot - Kdot e^{-n xi}] dt.
pub fn pohozaev_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k: &CurvatureModel,
    t1: f64,
    t2: f64,
) -> Result<ResidualReport> {
    check_interval(traj, t1, t2)?;
    let n = params.nf();
    let h = |t: f64| functional_value(FunctionalKind::H, params, k.k(t), &traj.jet(t).state);
    let (h1, h2) = (h(t1)?, h(t2)?);
    // H vanishes identically on exact solutions, so scale by the separate terms
    let (q, mag) = integrate_with_scale(
        traj,
        t1,
        t2,
        |j| {
            let s = &j.state;
            let (kv, kd) = k.eval(s.t);
            let w = (-n * s.xi).exp();
            -n * (jet_fk(params, j) - kv) * w * s.xidot - kd * w
        },
        |j| {
            let s = &j.state;
            let (kv, kd) = k.eval(s.t);
            let w = (-n * s.xi).exp();
            n * (jet_fk(params, j).abs() + kv.abs()) * w * s.xidot.abs() + kd.abs() * w
        },
    )?;
    Ok(ResidualReport::new("pohozaev-h", t1, t2, h2 - h1, q, mag + h1.abs() + h2.abs()))
}

/// H-bar(t2) - H-bar(t1) = -n int (F_k - 1) e^{-n xi} xidot dt.
pub fn pohozaev_bar_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    t1: f64,
    t2: f64,
) -> Result<ResidualReport> {
    check_interval(traj, t1, t2)?;
    let n = params.nf();
    let hb = |t: f64| functional_value(FunctionalKind::Hbar, params, 1.0, &traj.jet(t).state);
    let (h1, h2) = (hb(t1)?, hb(t2)?);
    let (q, mag) = integrate_with_scale(
        traj,
        t1,
        t2,
        |j| -n * (jet_fk(params, j) - 1.0) * (-n * j.state.xi).exp() * j.state.xidot,
        |j| n * (jet_fk(params, j).abs() + 1.0) * (-n * j.state.xi).exp() * j.state.xidot.abs(),
    )?;
    Ok(ResidualReport::new("pohozaev-hbar", t1, t2, h2 - h1, q, mag + h1.abs() + h2.abs()))
}

/// Integrand of the mass identity: F_k (1 - xidot)^{-(k-1)} e^{-(n+2k) xi / 2} e^{(n-2k) t / 2}.
fn mass_density(params: &ProblemParams, j: &CylJet) -> f64 {
    let (n, k) = (params.nf(), params.kf());
    let s = &j.state;
    let ln = -(k - 1.0) * s.ln_one_minus() - 0.5 * (n + 2.0 * k) * s.xi + 0.5 * params.gap() * s.t;
    jet_fk(params, j) * ln.exp()
}

/// m(t2) - m(t1) against the integral of the mass density.
pub fn mass_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    t1: f64,
    t2: f64,
) -> Result<ResidualReport> {
    check_interval(traj, t1, t2)?;
    let m = |t: f64| functional_value(FunctionalKind::M, params, 1.0, &traj.jet(t).state);
    let (m1, m2) = (m(t1)?, m(t2)?);
    let (q, mag) = integrate_scaled(traj, t1, t2, |j| mass_density(params, j))?;
    Ok(ResidualReport::new("mass", t1, t2, m2 - m1, q, mag + m1.abs() + m2.abs()))
}

/// m(t) against the integral of the mass density from the left end of the span.
/// The left tail beyond the span is estimated from the decay of the density.
pub fn mass_one_sided<T: Trajectory + ?Sized>(traj: &T, params: &ProblemParams, t: f64) -> Result<ResidualReport> {
    let lo = traj.span().0;
    check_interval(traj, lo, t)?;
    let mt = functional_value(FunctionalKind::M, params, 1.0, &traj.jet(t).state)?;
    let (mut q, mag) = integrate_scaled(traj, lo, t, |j| mass_density(params, j))?;
    // density ~ e^{n t} far out on the bubble side
    q.error += mass_density(params, &traj.jet(lo)).abs() / params.nf();
    Ok(ResidualReport::new("mass-one-sided", lo, t, mt, q, mag + mt.abs()))
}

/// m_{b,c}(t2) - m_{b,c}(t1) against
/// 2 int F_k (1 - xidot)^{-k(b+c+1)} (1 + xidot)^{-k(b-c+1)} (b xidot + c) e^{((n-2k) b - 2k) xi + (n-2k) c t} dt.
pub fn mbc_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    t1: f64,
    t2: f64,
    b: f64,
    c: f64,
) -> Result<ResidualReport> {
    check_interval(traj, t1, t2)?;
    let (k, g) = (params.kf(), params.gap());
    let m = |t: f64| functional_value(FunctionalKind::Mbc { b, c }, params, 1.0, &traj.jet(t).state);
    let (m1, m2) = (m(t1)?, m(t2)?);
    let (q, mag) = integrate_scaled(traj, t1, t2, |j| {
        let s = &j.state;
        let ln = -k * (b + c + 1.0) * s.ln_one_minus() - k * (b - c + 1.0) * s.ln_one_plus()
            + (g * b - 2.0 * k) * s.xi
            + g * c * s.t;
        2.0 * jet_fk(params, j) * (b * s.xidot + c) * ln.exp()
    })?;
    Ok(ResidualReport::new(&format!("mass-bc({b},{c})"), t1, t2, m2 - m1, q, mag + m1.abs() + m2.abs()))
}

/// Gamma(a - b/2) Gamma(b/2) / (2 Gamma(a)) = int_0^inf (1 + r^2)^{-a} r^{b-1} dr.
pub fn beta_integral(a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 2.0 * a) {
        return Err(Error::Domain(format!("beta integral needs 0 < b < 2a, got a = {a}, b = {b}")));
    }
    Ok(0.5 * (ln_gamma(a - 0.5 * b) + ln_gamma(0.5 * b) - ln_gamma(a)).exp())
}

/// The same integral by quadrature, split at r = 1 with r -> 1/r on the outer half.
pub fn beta_integral_quadrature(a: f64, b: f64) -> Result<Quad> {
    if !(b > 0.0 && b < 2.0 * a) {
        return Err(Error::Domain(format!("beta integral needs 0 < b < 2a, got a = {a}, b = {b}")));
    }
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 4000 };
    let inner = integrate_unit_singular(|r| (1.0 + r * r).powf(-a), b, opts)?;
    let outer = integrate_unit_singular(|s| (1.0 + s * s).powf(-a), 2.0 * a - b, opts)?;
    Ok(inner + outer)
}

/// Euclidean data (r, u, u', u'') of a cylindrical jet: u = e^{-(n-2)(xi + t)/2}.
pub fn euclidean_jet(params: &ProblemParams, j: &CylJet) -> (f64, f64, f64, f64) {
    let c = 0.5 * (params.nf() - 2.0);
    let s = &j.state;
    let r = s.t.exp();
    let u = (-c * (s.xi + s.t)).exp();
    let p = 1.0 + s.xidot;
    let du = -c * u * p / r;
    let ddu = c * u / (r * r) * (c * p * p + p - j.xiddot);
    (r, u, du, ddu)
}

/// The Euclidean Pohozaev quantity H_Euc(r, u, u'), evaluated from its display.
pub fn h_euc(params: &ProblemParams, k_euc: f64, r: f64, u: f64, du: f64) -> f64 {
    let (n, k) = (params.nf(), params.kf());
    let q = r * du / u;
    let lead = (-1f64).powi(params.k() as i32) * 2f64.powf(k) / (n - 2.0).powf(2.0 * k)
        * params.binom_nk()
        * r.powf(n - 2.0 * k)
        * u.powf(2.0 * (n - 2.0 * k) / (n - 2.0))
        * (q * (q + n - 2.0)).powf(k);
    lead - k_euc * r.powf(n) * u.powf(2.0 * n / (n - 2.0))
}

/// K'_Euc(s) u(s)^{2n/(n-2)} s^n in the variable tau = ln s (so ds = s dtau).
fn kw_density(params: &ProblemParams, k: &CurvatureModel, j: &CylJet) -> f64 {
    let n = params.nf();
    let (r, u, _, _) = euclidean_jet(params, j);
    k.k_euc_prime(r) * u.powf(2.0 * n / (n - 2.0)) * r.powf(n + 1.0)
}

/// Kazdan-Warner integral int_0^inf K'_Euc u^{2n/(n-2)} s^n ds over the trajectory span;
/// zero for global solutions.
pub fn kazdan_warner_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k: &CurvatureModel,
) -> Result<ResidualReport> {
    let (lo, hi) = traj.span();
    let (mut q, mag) = integrate_scaled(traj, lo, hi, |j| kw_density(params, k, j))?;
    let tail = kw_density(params, k, &traj.jet(lo)).abs() + kw_density(params, k, &traj.jet(hi)).abs();
    q.error += tail;
    // the report convention is lhs - rhs with the integral on the lhs
    let mut rep = ResidualReport::new("kazdan-warner", lo, hi, q.value, Quad { value: 0.0, error: q.error }, mag);
    rep.quad_error = q.error;
    Ok(rep)
}

/// H_Euc(r) from its display against -int_0^r K'_Euc u^{2n/(n-2)} s^n ds.
pub fn h_euc_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k: &CurvatureModel,
    t: f64,
) -> Result<ResidualReport> {
    let lo = traj.span().0;
    check_interval(traj, lo, t)?;
    let j = traj.jet(t);
    let (r, u, du, _) = euclidean_jet(params, &j);
    let lhs = h_euc(params, k.k_euc(r), r, u, du);
    let (q, mag) = integrate_scaled(traj, lo, t, |j| -kw_density(params, k, j))?;
    Ok(ResidualReport::new("h-euc", lo, t, lhs, q, mag + lhs.abs()))
}

/// H_K(s) = n int_{S^n} K(phi_s x) x^{n+1} dv, reduced to
/// n |S^{n-1}| int K(t + ln s) tanh(t) sech^n(t) dt.
pub fn balance_function(params: &ProblemParams, k: &CurvatureModel, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("dilation {s} must be positive")));
    }
    let n = params.nf();
    let shift = s.ln();
    // sech^n < 1e-17 beyond |t| = 40/n + 2
    let cut = 40.0 / n + 4.0;
    let mut breaks = vec![-cut, -1.0, 0.0, 1.0, cut];
    breaks.sort_by(f64::total_cmp);
    let q = integrate_pieces(
        |t| k.k(t + shift) * t.tanh() * sech(t).powf(n),
        &breaks,
        QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_panels: 2000 },
    )?;
    Ok(n * params.sphere_area() * q.value)
}

/// Diagnostics of the w = u^{(n-2k)/(k(n-2))} form of the equation at one radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WFormReport {
    pub r: f64,
    pub w: f64,
    pub dw: f64,
    pub e: f64,
    pub rho: f64,
    /// w'' + (n-k)/k w'/r = -n(n-2k)/(2k^2 binom) K w^{(n+2k)/(n-2k)} E^{1-k}
    pub ode: ResidualReport,
    /// E^k binom / K + rho = 1
    pub energy: ResidualReport,
}

pub fn w_form_residual<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k: &CurvatureModel,
    t: f64,
) -> Result<WFormReport> {
    let lo = traj.span().0;
    check_interval(traj, lo, t)?;
    let (n, kk) = (params.nf(), params.kf());
    let g = params.gap();
    let alpha = params.gamma();
    let j = traj.jet(t);
    let s = &j.state;
    let r = s.t.exp();
    let w = (-alpha * (s.xi + s.t)).exp();
    let p = 1.0 + s.xidot;
    let dw = -alpha * w * p / r;
    let ddw = -alpha * w / (r * r) * (-alpha * p * p + j.xiddot - p);
    let e = 2.0 * kk / g * w.powf(-2.0 * n / g) * (-w * dw / r - kk / g * dw * dw);
    if !(e > 0.0) {
        return Err(Error::Cone(s.xidot.abs()));
    }
    let kv = k.k_euc(r);
    let lhs = ddw + (n - kk) / kk * dw / r;
    let rhs = -n * g / (2.0 * kk * kk * params.binom_nk()) * kv * w.powf((n + 2.0 * kk) / g) * e.powf(1.0 - kk);
    let ode = ResidualReport::new(
        "w-form-ode",
        t,
        t,
        lhs,
        Quad { value: rhs, error: 0.0 },
        ddw.abs() + ((n - kk) / kk * dw / r).abs() + rhs.abs(),
    );
    // rho(r) = K^{-1} r^{-n} w^{-2nk/(n-2k)} int_0^r K'_Euc s^n w^{2nk/(n-2k)} ds; here s^n w^{2nk/(n-2k)} = e^{-n xi}
    let q = integrate_along(traj, lo, t, |j| k.k_dot(j.state.t) * (-n * j.state.xi).exp())?;
    let pref = r.powf(-n) * w.powf(-2.0 * n * kk / g) / kv;
    let rho = pref * q.value;
    let ek = e.powf(kk) * params.binom_nk() / kv;
    let energy = ResidualReport::new(
        "w-form-energy",
        lo,
        t,
        ek + rho,
        Quad { value: 1.0, error: pref * q.error },
        1.0 + rho.abs(),
    );
    Ok(WFormReport { r, w, dw, e, rho, ode, energy })
}

/// Integral of e^{-n xi} over [lo, 0] of a trajectory times |S^{n-1}|: the energy on B_1.
pub fn energy_on_unit_ball<T: Trajectory + ?Sized>(traj: &T, params: &ProblemParams, t_top: f64) -> Result<Quad> {
    let lo = traj.span().0;
    check_interval(traj, lo, t_top)?;
    let n = params.nf();
    let mut q = integrate_along(traj, lo, t_top, |j| (-n * j.state.xi).exp())?;
    q.error += (-n * traj.jet(lo).state.xi).exp() / n;
    let area = params.sphere_area();
    Ok(Quad { value: area * q.value, error: area * q.error })
}

/// Plain adaptive quadrature of a closed-form integrand, exposed for oracles.
pub fn quad<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Quad> {
    integrate(f, a, b, QuadOptions::default())
}
