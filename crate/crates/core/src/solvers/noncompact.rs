//! Even solutions for the non-compact model K = c_1 + eps J: a weighted-space Newton
//! solve for the bubble end, an ODE continuation to the equator and a sweep in the
//! bubble position T.

use serde::{Deserialize, Serialize};

use crate::curvature::{make_noncompact_k, CurvatureModel};
use crate::error::{Error, Result};
use crate::ode::{integrate_full, system_rhs, CylProfile, EventKind, IntegratorOptions, Trajectory};
use crate::par::{par_map, ExecMode};
use crate::params::ProblemParams;
use crate::quadrature::{gk15, integrate, QuadOptions};
use crate::roots::brent;
use crate::special::sech;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoncompactOptions {
    /// Grid spacing of the Newton solve.
    pub h: f64,
    /// Left end of the truncated half-line; defaults to -min(30, 600/n).
    pub s_min: Option<f64>,
    /// Lower limit c in the second fundamental solution.
    pub c: f64,
    pub newton_rtol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Integrator tolerance for the continuation to the equator.
    pub tol: f64,
}

impl Default for NoncompactOptions {
    fn default() -> Self {
        Self { h: 0.0025, s_min: None, c: -1.0, newton_rtol: 1e-12, max_iter: 60, max_halvings: 8, tol: 1e-11 }
    }
}

/// Cumulative integral on a uniform grid, fourth order (cubic through four nodes per cell).
fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let m = f.len();
    let mut out = vec![0.0; m];
    if m < 4 {
        for i in 1..m {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    for i in 0..m - 1 {
        let cell = if i == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if i == m - 2 {
            f[m - 4] - 5.0 * f[m - 3] + 19.0 * f[m - 2] + 9.0 * f[m - 1]
        } else {
            -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        };
        out[i + 1] = out[i] + h / 24.0 * cell;
    }
    out
}

/// (cosh^n s - 1) / sinh^2 s, with its limit n/2 at 0.
fn g_integrand(n: f64, s: f64) -> f64 {
    if s.abs() < 1e-6 {
        return 0.5 * n + s * s * n * (3.0 * n - 2.0) / 24.0;
    }
    let half = (0.5 * s).sinh();
    let lc = (2.0 * half * half).ln_1p();
    (n * lc).exp_m1() / s.sinh().powi(2)
}

/// (cosh^n s - 1) / (sinh s cosh s), zero at 0.
fn g_tanh(n: f64, s: f64) -> f64 {
    g_integrand(n, s) * s.tanh()
}

/// Green representation for L[phi] = phi'' - (n-2) tanh(s) phi' + n sech^2(s) phi on [s_min, 0],
/// built from phi_1 = tanh s and phi_2 = tanh s * int_c^s cosh^n / sinh^2.
#[derive(Clone, Debug)]
pub struct GreenSolver {
    n: f64,
    pub s: Vec<f64>,
    pub h: f64,
    pub phi1: Vec<f64>,
    pub dphi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub dphi2: Vec<f64>,
    inv_w: Vec<f64>,
}

impl GreenSolver {
    pub fn new(params: &ProblemParams, s_min: f64, h: f64, c: f64) -> Result<Self> {
        if !(s_min < c && c < 0.0 && h > 0.0) {
            return Err(Error::Domain(format!("need s_min < c < 0 and h > 0 (s_min = {s_min}, c = {c}, h = {h})")));
        }
        let n = params.nf();
        let m = (-s_min / h).round() as usize;
        let h = -s_min / m as f64;
        let s: Vec<f64> = (0..=m).map(|i| s_min + i as f64 * h).collect();
        // G(s) = int_c^s g, accumulated outward from the node nearest c so no large
        // cumulative values are subtracted
        let mut g = |x: f64| g_integrand(n, x);
        let jc = ((c - s_min) / h).round() as usize;
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-15, max_panels: 4000 };
        let mut big_g = vec![0.0; m + 1];
        big_g[jc] = integrate(&mut g, c, s[jc], opts)?.value;
        for i in (0..jc).rev() {
            big_g[i] = big_g[i + 1] - gk15(&mut g, s[i], s[i + 1]).value;
        }
        for i in jc..m {
            big_g[i + 1] = big_g[i] + gk15(&mut g, s[i], s[i + 1]).value;
        }
        let coth_c = 1.0 / c.tanh();
        let mut phi1 = Vec::with_capacity(m + 1);
        let mut dphi1 = Vec::with_capacity(m + 1);
        let mut phi2 = Vec::with_capacity(m + 1);
        let mut dphi2 = Vec::with_capacity(m + 1);
        let mut inv_w = Vec::with_capacity(m + 1);
        for (i, &x) in s.iter().enumerate() {
            let th = x.tanh();
            let se2 = sech(x).powi(2);
            phi1.push(th);
            dphi1.push(se2);
            phi2.push(th * (coth_c + big_g[i]) - 1.0);
            dphi2.push(se2 * (coth_c + big_g[i]) + g_tanh(n, x));
            inv_w.push(sech(x).powf(n - 2.0));
        }
        Ok(Self { n, s, h, phi1, dphi1, phi2, dphi2, inv_w })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// L[phi] from given phi, phi', phi'' at node i.
    pub fn apply(&self, i: usize, phi: f64, dphi: f64, ddphi: f64) -> f64 {
        let x = self.s[i];
        ddphi - (self.n - 2.0) * x.tanh() * dphi + self.n * sech(x).powi(2) * phi
    }

    /// The decaying solution of L[phi] = zeta with phi = phi' = 0 at s_min: (phi, phi', phi'').
    pub fn solve(&self, zeta: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let f1: Vec<f64> = (0..self.len()).map(|i| zeta[i] * self.phi1[i] * self.inv_w[i]).collect();
        let f2: Vec<f64> = (0..self.len()).map(|i| zeta[i] * self.phi2[i] * self.inv_w[i]).collect();
        let i1 = cumulative(&f1, self.h);
        let i2 = cumulative(&f2, self.h);
        let mut p = Vec::with_capacity(self.len());
        let mut dp = Vec::with_capacity(self.len());
        let mut ddp = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let v = -self.phi1[i] * i2[i] + self.phi2[i] * i1[i];
            let dv = -self.dphi1[i] * i2[i] + self.dphi2[i] * i1[i];
            let x = self.s[i];
            let ddv = zeta[i] + (self.n - 2.0) * x.tanh() * dv - self.n * sech(x).powi(2) * v;
            p.push(v);
            dp.push(dv);
            ddp.push(ddv);
        }
        (p, dp, ddp)
    }
}

/// eta on the truncated half-line with its weighted norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedFunction {
    pub beta: f64,
    pub s: Vec<f64>,
    pub eta: Vec<f64>,
    pub deta: Vec<f64>,
    pub ddeta: Vec<f64>,
    /// sup e^{-(2+beta) s} (|eta| + |eta'| + |eta''|)
    pub norm: f64,
}

impl WeightedFunction {
    fn new(beta: f64, s: Vec<f64>, eta: Vec<f64>, deta: Vec<f64>, ddeta: Vec<f64>) -> Self {
        let norm = weighted_norm(beta, &s, &[&eta, &deta, &ddeta]);
        Self { beta, s, eta, deta, ddeta, norm }
    }
}

fn weighted_norm(beta: f64, s: &[f64], parts: &[&[f64]]) -> f64 {
    (0..s.len())
        .map(|i| (-(2.0 + beta) * s[i]).exp() * parts.iter().map(|p| p[i].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A[eta] = 2^{k-1} binom(n-1,k-1)^{-1} sech^2 (F_k[ln cosh + eta] - c_1), arranged so small
/// eta loses no relative precision.
pub fn operator_a(params: &ProblemParams, s: f64, eta: f64, deta: f64, ddeta: f64) -> f64 {
    let (n, k) = (params.nf(), params.kf());
    let g = params.gap();
    let (ch, sh) = (s.cosh(), s.sinh());
    let a = -2.0 * ch * sh * deta - ch * ch * deta * deta;
    let b = ch * ch * ddeta - g / k * ch * sh * deta - 0.5 * g / k * ch * ch * deta * deta;
    let ln_e = 2.0 * k * eta + (k - 1.0) * a.ln_1p();
    sech(s).powi(2) * (0.5 * n / k * ln_e.exp_m1() + ln_e.exp() * b)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NewtonLog {
    pub iterations: usize,
    pub halvings: usize,
    /// Weighted sup norm of rhs - A[eta] after each iteration.
    pub residuals: Vec<f64>,
    pub rhs_norm: f64,
}

#[derive(Clone, Debug)]
pub struct NoncompactSolution {
    pub eps: f64,
    pub beta: f64,
    pub t_shift: f64,
    pub eta: WeightedFunction,
    pub newton: NewtonLog,
    /// Solution on (-inf, 0] in the original variable t (bubble near t = -T).
    pub profile: CylProfile,
    pub xidot0: f64,
    /// Largest relative |F_k - K| over the Newton part and the integrated part.
    pub ode_residual: f64,
    /// Number of zeros of xidot on (-inf, 0].
    pub m: usize,
    /// Zeros with |xi''| below 1e-8.
    pub tangential: usize,
}

impl NoncompactSolution {
    /// The even extension to the whole line, by reflection through t = 0.
    pub fn even_extension(&self) -> Result<CylProfile> {
        CylProfile::concat(vec![self.profile.clone(), self.profile.reflect()])
    }
}

fn default_s_min(params: &ProblemParams) -> f64 {
    -(30.0f64).min(600.0 / params.nf())
}

/// Solve F_k = c_1 + eps J on (-inf, 0] with xi - ln cosh(t + T) in the weighted space.
pub fn solve_noncompact_bvp(
    params: &ProblemParams,
    eps: f64,
    beta: f64,
    t_shift: f64,
    o: &NoncompactOptions,
) -> Result<NoncompactSolution> {
    let model = make_noncompact_k(params, eps, beta)?;
    let green = GreenSolver::new(params, o.s_min.unwrap_or_else(|| default_s_min(params)), o.h, o.c)?;
    solve_with(params, &model, &green, eps, beta, t_shift, o)
}

fn solve_with(
    params: &ProblemParams,
    model: &CurvatureModel,
    green: &GreenSolver,
    eps: f64,
    beta: f64,
    t_shift: f64,
    o: &NoncompactOptions,
) -> Result<NoncompactSolution> {
    if !(t_shift >= 1.0) {
        return Err(Error::Domain(format!("T = {t_shift} must be at least 1")));
    }
    let a_const = params.inverse_prefactor();
    let amp = eps * (-beta * t_shift).exp();
    let s = &green.s;
    let m = s.len();
    let rhs: Vec<f64> = s.iter().map(|&x| -a_const * amp * sech(x).powi(2) * (beta * x).exp()).collect();
    let rhs_norm = weighted_norm(beta, s, &[&rhs]);
    let mut eta = vec![0.0; m];
    let mut deta = vec![0.0; m];
    let mut ddeta = vec![0.0; m];
    let residual = |e: &[f64], de: &[f64], dde: &[f64]| -> Vec<f64> {
        (0..m).map(|i| rhs[i] - operator_a(params, s[i], e[i], de[i], dde[i])).collect()
    };
    let mut r = residual(&eta, &deta, &ddeta);
    let mut rn = weighted_norm(beta, s, &[&r]);
    let mut log = NewtonLog { rhs_norm, residuals: vec![rn], ..Default::default() };
    let target = o.newton_rtol * rhs_norm;
    while rn > target && rn > 0.0 {
        if log.iterations >= o.max_iter {
            return Err(Error::Divergence(format!("no convergence after {} iterations (residual {rn:e})", o.max_iter)));
        }
        log.iterations += 1;
        let (d, dd, ddd) = green.solve(&r);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=o.max_halvings {
            let e: Vec<f64> = (0..m).map(|i| eta[i] + step * d[i]).collect();
            let de: Vec<f64> = (0..m).map(|i| deta[i] + step * dd[i]).collect();
            let dde: Vec<f64> = (0..m).map(|i| ddeta[i] + step * ddd[i]).collect();
            let rr = residual(&e, &de, &dde);
            let rrn = weighted_norm(beta, s, &[&rr]);
            if rrn < rn {
                (eta, deta, ddeta, r, rn) = (e, de, dde, rr, rrn);
                accepted = true;
                break;
            }
            step *= 0.5;
            log.halvings += 1;
        }
        log.residuals.push(rn);
        if !accepted {
            // the chord step stalls at the roundoff floor of the quadrature
            if rn <= 1e3 * target {
                break;
            }
            return Err(Error::Divergence(format!(
                "residual did not decrease after {} halvings (residual {rn:e}, eps too large?)",
                o.max_halvings
            )));
        }
    }
    let weighted = WeightedFunction::new(beta, s.clone(), eta, deta, ddeta);
    if !weighted.norm.is_finite() {
        return Err(Error::Divergence("weighted norm blew up".into()));
    }
    let (left, newton_residual) = left_profile(params, model, &weighted, t_shift)?;
    let opts = IntegratorOptions::with_tol(o.tol);
    let (x0, _) = left.raw(-t_shift);
    let forward = integrate_full(params, model, -t_shift, x0, 0.0, &opts)?;
    if forward.span().1 < -1e-12 {
        return Err(Error::Numerical(format!(
            "continuation stopped at t = {} ({:?})",
            forward.span().1,
            forward.termination()
        )));
    }
    let y_end = forward.raw(0.0).0[1];
    let xidot0 = y_end.tanh();
    let ode_residual = newton_residual.max(forward.collocation_residual(model));
    let crit: Vec<_> = forward.events().iter().filter(|e| e.kind == EventKind::CriticalPoint).copied().collect();
    // the bubble minimum sits within |eta'(0)| of the junction; count it once
    let join_band = 1e-6;
    let mut m_count = 1 + crit.iter().filter(|e| e.t > -t_shift + join_band).count();
    if y_end == 0.0 && !crit.iter().any(|e| e.t.abs() < 1e-12) {
        m_count += 1;
    }
    let tangential = crit.iter().filter(|e| e.xiddot.abs() < 1e-8).count();
    let profile = CylProfile::concat(vec![left, forward])?;
    Ok(NoncompactSolution {
        eps,
        beta,
        t_shift,
        eta: weighted,
        newton: log,
        profile,
        xidot0,
        ode_residual,
        m: m_count,
        tangential,
    })
}

/// Hermite profile of xi = ln cosh(s) + eta(s), s = t + T, on [s_min, 0], with D from the
/// Pohozaev integral. Also returns the largest relative |F_k - K| at the nodes.
fn left_profile(
    params: &ProblemParams,
    model: &CurvatureModel,
    w: &WeightedFunction,
    t_shift: f64,
) -> Result<(CylProfile, f64)> {
    let n = params.nf();
    let a_const = params.inverse_prefactor();
    let m = w.s.len();
    let h = w.s[1] - w.s[0];
    let mut xi = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    let mut dy = Vec::with_capacity(m);
    let mut worst = 0.0f64;
    for i in 0..m {
        let x = w.s[i];
        let (th, se2) = (x.tanh(), sech(x).powi(2));
        let (e, de, dde) = (w.eta[i], w.deta[i], w.ddeta[i]);
        xi.push(crate::special::ln_cosh(x) + e);
        // artanh(tanh x + de) = x + artanh(de / (sech^2 x - tanh x de))
        let yi = x + (de / (se2 - th * de)).atanh();
        let gap = se2 - 2.0 * th * de - de * de;
        y.push(yi);
        dy.push((se2 + dde) / gap);
        let t = x - t_shift;
        let kv = model.k(t);
        let a_val = operator_a(params, x, e, de, dde);
        // F_k - c_1 = A / (prefactor sech^2)
        let fk_minus_k = a_val / (a_const * se2) - (kv - params.round_value());
        worst = worst.max(fk_minus_k.abs() / kv);
    }
    // D = -e^{n xi} int_{-inf}^t Kdot e^{-n xi}, the tail below s_min taken as geometric
    let dens: Vec<f64> = (0..m).map(|i| model.k_dot(w.s[i] - t_shift) * (-n * xi[i]).exp()).collect();
    let cum = cumulative(&dens, h);
    let tail = dens[0] / (n + w.beta);
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let t = w.s[i] - t_shift;
        let d = -(n * xi[i]).exp() * (cum[i] + tail);
        let (kv, kd) = model.eval(t);
        let state = [xi[i], y[i], d];
        let f = system_rhs(params, kv, kd, &state).ok_or(Error::Cone(y[i].tanh().abs()))?;
        samples.push((t, state, [y[i].tanh(), dy[i], f[2]]));
    }
    Ok((CylProfile::from_samples(*params, &samples)?, worst))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationSample {
    pub t_shift: f64,
    pub xidot0: f64,
    pub m: usize,
    pub tangential: usize,
}

#[derive(Clone, Debug)]
pub struct EvenSolution {
    pub solution: NoncompactSolution,
    pub ode_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ContinuationReport {
    pub samples: Vec<ContinuationSample>,
    pub solutions: Vec<EvenSolution>,
    /// Places where m(T) dropped by more than one between grid points.
    pub m_drops: Vec<f64>,
    pub failures: Vec<(f64, String)>,
}

impl ContinuationReport {
    pub fn m_first(&self) -> Option<usize> {
        self.samples.first().map(|s| s.m)
    }

    pub fn m_last(&self) -> Option<usize> {
        self.samples.last().map(|s| s.m)
    }
}

/// Sweep T over a uniform grid, bracket zeros of xidot(0; T) and refine each with Brent.
pub fn continuation_in_t(
    params: &ProblemParams,
    eps: f64,
    beta: f64,
    t_range: (f64, f64),
    samples: usize,
    mode: ExecMode,
    o: &NoncompactOptions,
) -> Result<ContinuationReport> {
    let (t_lo, t_hi) = t_range;
    if !(t_lo >= 1.0 && t_hi > t_lo && samples >= 2) {
        return Err(Error::Domain(format!("bad T range ({t_lo}, {t_hi}) with {samples} samples")));
    }
    let model = make_noncompact_k(params, eps, beta)?;
    let green = GreenSolver::new(params, o.s_min.unwrap_or_else(|| default_s_min(params)), o.h, o.c)?;
    let grid: Vec<f64> = (0..samples).map(|i| t_lo + (t_hi - t_lo) * i as f64 / (samples - 1) as f64).collect();
    let runs = par_map(mode, &grid, |&t| solve_with(params, &model, &green, eps, beta, t, o));
    let mut pts = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in grid.iter().zip(runs) {
        match r {
            Ok(sol) => pts.push(ContinuationSample {
                t_shift: *t,
                xidot0: sol.xidot0,
                m: sol.m,
                tangential: sol.tangential,
            }),
            Err(e) => failures.push((*t, e.to_string())),
        }
    }
    let mut brackets = Vec::new();
    let mut m_drops = Vec::new();
    for w in pts.windows(2) {
        if w[0].xidot0 == 0.0 {
            brackets.push((w[0].t_shift, w[0].t_shift));
        } else if w[0].xidot0 * w[1].xidot0 < 0.0 {
            brackets.push((w[0].t_shift, w[1].t_shift));
        }
        if w[1].m + 1 < w[0].m {
            m_drops.push(w[1].t_shift);
        }
    }
    let refined = par_map(mode, &brackets, |&(a, b)| -> Result<EvenSolution> {
        let t_star = if a == b {
            a
        } else {
            brent(
                |t| solve_with(params, &model, &green, eps, beta, t, o).map_or(f64::NAN, |s| s.xidot0),
                a,
                b,
                1e-13,
            )?
        };
        let solution = solve_with(params, &model, &green, eps, beta, t_star, o)?;
        let even = solution.even_extension()?;
        let ode_residual = solution.ode_residual.max(even.collocation_residual(&model));
        Ok(EvenSolution { solution, ode_residual })
    });
    let mut solutions = Vec::new();
    for (br, r) in brackets.iter().zip(refined) {
        match r {
            Ok(s) => solutions.push(s),
            Err(e) => failures.push((br.0, e.to_string())),
        }
    }
    if solutions.is_empty() && failures.is_empty() && brackets.is_empty() {
        return Err(Error::NoSignChange(format!("xidot(0; T) keeps one sign on [{t_lo}, {t_hi}]")));
    }
    Ok(ContinuationReport { samples: pts, solutions, m_drops, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p92() -> ProblemParams {
        ProblemParams::new(9, 2).unwrap()
    }

    #[test]
    fn cumulative_is_fourth_order() {
        let err = |m: usize| {
            let h = 3.0 / m as f64;
            let f: Vec<f64> = (0..=m).map(|i| (i as f64 * h).exp()).collect();
            (cumulative(&f, h)[m] - (3f64.exp() - 1.0)).abs()
        };
        let ratio = err(150) / err(300);
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn tanh_is_homogeneous() {
        let g = GreenSolver::new(&p92(), -20.0, 0.01, -1.0).unwrap();
        for i in 0..g.len() {
            let x = g.s[i];
            let th = x.tanh();
            let s2 = sech(x).powi(2);
            assert!(g.apply(i, th, s2, -2.0 * th * s2).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_eps_gives_zero_eta() {
        let sol = solve_noncompact_bvp(&p92(), 0.0, 2.0, 3.0, &NoncompactOptions::default()).unwrap();
        assert_eq!(sol.eta.norm, 0.0);
        assert_eq!(sol.newton.iterations, 0);
        let xi = sol.profile.state(-1.0).xi;
        assert!((xi - crate::special::ln_cosh(2.0)).abs() < 1e-9);
    }
}
