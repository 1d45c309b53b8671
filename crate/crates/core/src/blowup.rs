//! Bubble towers: critical-point ladders, bubble fits, spacing laws and energies.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureModel;
use crate::error::{Error, Result};
use crate::identities::{energy_on_unit_ball, integrate_along, quad};
use crate::ode::{ode_rhs, CylProfile, StandardBubble, Trajectory};
use crate::par::{par_map, ExecMode};
use crate::params::ProblemParams;
use crate::roots::brent;
use crate::special::ln_cosh;

/// |xi''| below this marks a tangential zero of xidot.
pub const TANGENTIAL_TOL: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t: f64,
    pub xi: f64,
    pub xiddot: f64,
    pub kind: CriticalKind,
    pub tangential: bool,
}

/// Tower regime of a flatness order beta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerRegime {
    /// beta < (n-2k)/2
    Tower,
    /// beta = (n-2k)/2
    Borderline,
    /// beta > (n-2k)/2
    SingleBubble,
}

pub fn tower_regime(params: &ProblemParams, beta: f64) -> TowerRegime {
    let half = 0.5 * params.gap();
    if (beta - half).abs() <= 1e-12 * half {
        TowerRegime::Borderline
    } else if beta < half {
        TowerRegime::Tower
    } else {
        TowerRegime::SingleBubble
    }
}

fn zeros_of_xidot<T: Trajectory + ?Sized>(traj: &T) -> Result<Vec<f64>> {
    let nodes = traj.nodes();
    let y = |t: f64| traj.jet(t).state.y;
    let mut out: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in &nodes {
        let yt = y(t);
        if yt == 0.0 {
            if out.last().map_or(true, |&l| (t - l).abs() > ROOT_TOL) {
                out.push(t);
            }
        } else if let Some((tp, yp)) = prev {
            if yp != 0.0 && yp.signum() != yt.signum() {
                out.push(brent(y, tp, t, ROOT_TOL)?);
            }
        }
        prev = Some((t, yt));
    }
    Ok(out)
}

fn classify(t: f64, xi: f64, xiddot: f64, neighbour_slope: f64) -> CriticalPoint {
    let kind = if xiddot > 0.0 || (xiddot == 0.0 && neighbour_slope > 0.0) {
        CriticalKind::Min
    } else {
        CriticalKind::Max
    };
    CriticalPoint { t, xi, xiddot, kind, tangential: xiddot.abs() < TANGENTIAL_TOL }
}

fn after_slope<T: Trajectory + ?Sized>(traj: &T, t: f64) -> f64 {
    let hi = traj.span().1;
    traj.jet((t + 1e-4).min(hi)).state.xidot
}

/// Zeros of xidot in increasing t, classified by the trajectory's own xi''.
pub fn find_critical_points<T: Trajectory + ?Sized>(traj: &T) -> Result<Vec<CriticalPoint>> {
    Ok(zeros_of_xidot(traj)?
        .into_iter()
        .map(|t| {
            let j = traj.jet(t);
            classify(t, j.state.xi, j.xiddot, after_slope(traj, t))
        })
        .collect())
}

/// As [`find_critical_points`], with xi'' taken from the ODE right-hand side.
pub fn find_critical_points_ode(profile: &CylProfile, model: &CurvatureModel) -> Result<Vec<CriticalPoint>> {
    let params = *profile.params();
    zeros_of_xidot(profile)?
        .into_iter()
        .map(|t| {
            let s = profile.jet(t).state;
            let xdd = ode_rhs(&params, model.k(t), &s)?;
            Ok(classify(t, s.xi, xdd, after_slope(profile, t)))
        })
        .collect()
}

/// True when the kinds alternate along t.
pub fn kinds_alternate(criticals: &[CriticalPoint]) -> bool {
    criticals.windows(2).all(|w| w[0].kind != w[1].kind)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    /// half-width of the fitting window in t
    pub half_width: f64,
    pub samples: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { half_width: 5.0, samples: 1001 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleFit {
    pub center: f64,
    pub xi_center: f64,
    /// sup |xi - bubble| over the window
    pub misfit: f64,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleLadder {
    /// exp(-t_1), t_1 the deepest center
    pub lambda: f64,
    pub ln_lambda: f64,
    pub k0: f64,
    pub criticals: Vec<CriticalPoint>,
    pub bubbles: Vec<BubbleFit>,
    /// consecutive center differences
    pub spacings: Vec<f64>,
    /// t_{2l+3} / t_{2l+1}
    pub ratios: Vec<f64>,
    pub n_bubbles: usize,
}

impl BubbleLadder {
    pub fn centers(&self) -> Vec<f64> {
        self.bubbles.iter().map(|b| b.center).collect()
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.criticals.iter().filter(|c| c.kind == CriticalKind::Max).map(|c| c.t).collect()
    }

    pub fn alternates(&self) -> bool {
        kinds_alternate(&self.criticals)
    }

    /// Fails if a bubble with |center| >= depth misses its fit by more than `bound`.
    pub fn check_misfit(&self, bound: f64, depth: f64) -> Result<()> {
        for b in &self.bubbles {
            if b.center.abs() >= depth && b.misfit > bound {
                return Err(Error::Numerical(format!(
                    "bubble at t = {} misfits by {:e} (bound {bound:e})",
                    b.center, b.misfit
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,center,xi_center,misfit,window_lo,window_hi")?;
        for (i, b) in self.bubbles.iter().enumerate() {
            writeln!(
                w,
                "{i},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                b.center, b.xi_center, b.misfit, b.window.0, b.window.1
            )?;
        }
        Ok(())
    }
}

/// Fits Xi(t - t_c) + ln(K0)/2k at each min-type critical point.
pub fn decompose_bubbles<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k0: f64,
    o: &DecomposeOptions,
) -> Result<BubbleLadder> {
    let criticals = find_critical_points(traj)?;
    ladder_from_criticals(traj, params, k0, criticals, o)
}

pub fn ladder_from_criticals<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    k0: f64,
    criticals: Vec<CriticalPoint>,
    o: &DecomposeOptions,
) -> Result<BubbleLadder> {
    let unit = StandardBubble::new(params, 1.0, k0)?;
    let (lo, hi) = traj.span();
    let mut bubbles = Vec::new();
    for c in criticals.iter().filter(|c| c.kind == CriticalKind::Min) {
        let w = ((c.t - o.half_width).max(lo), (c.t + o.half_width).min(hi));
        let m = o.samples.max(2);
        let misfit = (0..m)
            .map(|i| {
                let t = w.0 + (w.1 - w.0) * i as f64 / (m - 1) as f64;
                (traj.jet(t).state.xi - unit.xi(t - c.t)).abs()
            })
            .fold(0.0, f64::max);
        bubbles.push(BubbleFit { center: c.t, xi_center: c.xi, misfit, window: w });
    }
    if bubbles.is_empty() {
        return Err(Error::Domain("no min-type critical point, so no bubble to fit".into()));
    }
    let centers: Vec<f64> = bubbles.iter().map(|b| b.center).collect();
    let spacings = centers.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios = centers.windows(2).map(|w| w[1] / w[0]).collect();
    let ln_lambda = -centers[0];
    Ok(BubbleLadder {
        lambda: ln_lambda.exp(),
        ln_lambda,
        k0,
        n_bubbles: bubbles.len(),
        criticals,
        bubbles,
        spacings,
        ratios,
    })
}

/// floor(ln ln lambda / |ln r|) with r = 1 - 2 beta/(n-2k); needs ln lambda > 1 and 0 < r < 1.
pub fn predicted_bubble_count(params: &ProblemParams, beta: f64, ln_lambda: f64) -> Option<usize> {
    let r = params.tower_ratio(beta);
    if !(r > 0.0 && r < 1.0 && ln_lambda > 1.0) {
        return None;
    }
    Some((ln_lambda.ln() / r.ln().abs()).floor() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingOptions {
    pub ratio_tol: f64,
    /// center ratios are compared only when both centers lie at |t| >= depth
    pub depth: f64,
    pub count_band: usize,
}

impl Default for SpacingOptions {
    fn default() -> Self {
        Self { ratio_tol: 0.05, depth: 20.0, count_band: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub regime: TowerRegime,
    pub target_ratio: f64,
    pub center_ratios: Vec<f64>,
    pub deep_center_ratios: Vec<f64>,
    /// (t_{2l+5} - t_{2l+3}) / (t_{2l+3} - t_{2l+1}); additive offsets cancel
    pub spacing_ratios: Vec<f64>,
    pub max_deviation: f64,
    /// (observed, predicted) positions of the max-type points
    pub maxima: Vec<(f64, f64)>,
    pub n_observed: usize,
    pub n_predicted: Option<usize>,
    pub ratio_ok: bool,
    pub count_ok: bool,
    pub note: String,
}

/// Compares the ladder to the geometric spacing law of the tower regime.
pub fn check_spacing_law(
    ladder: &BubbleLadder,
    params: &ProblemParams,
    beta: f64,
    o: &SpacingOptions,
) -> Result<SpacingReport> {
    let regime = tower_regime(params, beta);
    let r = params.tower_ratio(beta);
    let n_obs = ladder.n_bubbles;
    let mut rep = SpacingReport {
        regime,
        target_ratio: r,
        center_ratios: ladder.ratios.clone(),
        deep_center_ratios: Vec::new(),
        spacing_ratios: Vec::new(),
        max_deviation: 0.0,
        maxima: Vec::new(),
        n_observed: n_obs,
        n_predicted: None,
        ratio_ok: true,
        count_ok: true,
        note: String::new(),
    };
    match regime {
        TowerRegime::SingleBubble => {
            rep.n_predicted = Some(1);
            rep.count_ok = n_obs == 1;
            rep.note = "exactly one bubble expected".into();
            return Ok(rep);
        }
        TowerRegime::Borderline => {
            rep.note = "borderline flatness: bubble count is not predicted".into();
            return Ok(rep);
        }
        TowerRegime::Tower => {}
    }
    if n_obs < 2 {
        return Err(Error::Domain(format!("spacing law needs at least two bubbles, found {n_obs}")));
    }
    let c = ladder.centers();
    rep.deep_center_ratios = c
        .windows(2)
        .filter(|w| w[0].abs() >= o.depth && w[1].abs() >= o.depth)
        .map(|w| w[1] / w[0])
        .collect();
    rep.spacing_ratios = c.windows(3).map(|w| (w[2] - w[1]) / (w[1] - w[0])).collect();
    let devs: Vec<f64> =
        rep.deep_center_ratios.iter().chain(&rep.spacing_ratios).map(|x| (x - r).abs()).collect();
    rep.max_deviation = devs.iter().copied().fold(0.0, f64::max);
    rep.ratio_ok = !devs.is_empty() && rep.max_deviation <= o.ratio_tol;
    if devs.is_empty() {
        rep.note = format!("no bubble pair deeper than |t| = {} and fewer than three centers", o.depth);
    }
    let q = 1.0 - beta / params.gap();
    rep.maxima = ladder
        .maxima()
        .into_iter()
        .filter(|&t| t > c[0])
        .enumerate()
        .map(|(l, t)| (t, -q * r.powi(l as i32) * ladder.ln_lambda))
        .collect();
    rep.n_predicted = predicted_bubble_count(params, beta, ladder.ln_lambda);
    rep.count_ok = rep.n_predicted.is_some_and(|np| np.abs_diff(n_obs) <= o.count_band);
    Ok(rep)
}

/// Energy of a standard bubble of height K0 on all of R^n by quadrature:
/// |S^{n-1}| int e^{-n xi} dt. This is the operational C(n,k) K0^{-n/2k}.
pub fn single_bubble_energy(params: &ProblemParams, k0: f64) -> Result<f64> {
    let b = StandardBubble::new(params, 1.0, k0)?;
    let n = params.nf();
    let off = b.min_value();
    let f = |t: f64| (-n * (ln_cosh(t) + off)).exp();
    let cut = 40.0;
    let q = quad(f, -cut, 0.0)?.value + quad(f, 0.0, cut)?.value;
    Ok(params.sphere_area() * q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// |S^{n-1}| int_{-inf}^{ln radius} e^{-n xi} dt
    pub energy: f64,
    pub error: f64,
    /// energy of each cell between consecutive maxima that holds a minimum
    pub per_bubble: Vec<f64>,
    /// energy outside all bubble cells
    pub remainder: f64,
    pub single_bubble: f64,
    pub bubble_count: usize,
    /// energy / single-bubble energy
    pub quanta: f64,
    /// energy / ln ln lambda, when ln lambda > 1
    pub loglog_ratio: Option<f64>,
    /// max |E_i / E_1 - 1|
    pub per_bubble_spread: f64,
}

/// Energy of u^{2n/(n-2)} on the ball of the given radius, split by bubble.
pub fn bubble_energy<T: Trajectory + ?Sized>(
    traj: &T,
    params: &ProblemParams,
    radius: f64,
    k0: f64,
) -> Result<EnergyReport> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    let t_top = radius.ln();
    let (lo, hi) = traj.span();
    if t_top > hi || t_top <= lo {
        return Err(Error::Domain(format!("ln radius = {t_top} outside the span [{lo}, {hi}]")));
    }
    let tail_slope = traj.jet(lo).state.xidot;
    if tail_slope > -0.5 {
        return Err(Error::Numerical(format!(
            "energy tail diverges or is unresolved: xidot = {tail_slope} at t = {lo}"
        )));
    }
    let total = energy_on_unit_ball(traj, params, t_top)?;
    let single = single_bubble_energy(params, k0)?;
    let criticals: Vec<_> = find_critical_points(traj)?.into_iter().filter(|c| c.t < t_top).collect();
    let mut cuts = vec![lo];
    cuts.extend(criticals.iter().filter(|c| c.kind == CriticalKind::Max).map(|c| c.t));
    cuts.push(t_top);
    let area = params.sphere_area();
    let n = params.nf();
    let mut per_bubble = Vec::new();
    let mut in_cells = 0.0;
    for w in cuts.windows(2) {
        let has_min = criticals.iter().any(|c| c.kind == CriticalKind::Min && c.t > w[0] && c.t < w[1]);
        if !has_min {
            continue;
        }
        let mut e = area * integrate_along(traj, w[0], w[1], |j| (-n * j.state.xi).exp())?.value;
        if w[0] == lo {
            e += area * (-n * traj.jet(lo).state.xi).exp() / n;
        }
        in_cells += e;
        per_bubble.push(e);
    }
    let first_min = criticals.iter().find(|c| c.kind == CriticalKind::Min).map(|c| -c.t);
    let loglog_ratio = first_min.filter(|&l| l > 1.0).map(|l| total.value / l.ln());
    let spread = per_bubble.iter().map(|e| (e / single - 1.0).abs()).fold(0.0, f64::max);
    Ok(EnergyReport {
        energy: total.value,
        error: total.error,
        remainder: total.value - in_cells,
        bubble_count: per_bubble.len(),
        per_bubble,
        single_bubble: single,
        quanta: total.value / single,
        loglog_ratio,
        per_bubble_spread: spread,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub regime: TowerRegime,
    pub ln_ln_lambda: Vec<f64>,
    pub energies: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// single-bubble energy / |ln r| in the tower regime
    pub predicted_slope: Option<f64>,
    pub monotone: bool,
    /// (max - min) / max of the energies
    pub relative_spread: f64,
}

/// Regression of energy on ln ln lambda across a family ordered by increasing lambda.
pub fn energy_growth_diag<T: Trajectory + ?Sized>(
    family: &[(f64, &T)],
    params: &ProblemParams,
    beta: f64,
    radius: f64,
    k0: f64,
    mode: ExecMode,
) -> Result<GrowthReport> {
    if family.len() < 3 {
        return Err(Error::Domain(format!("energy growth needs at least 3 members, got {}", family.len())));
    }
    if family.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("family must be ordered by increasing lambda".into()));
    }
    if family[0].0.ln() <= 1.0 {
        return Err(Error::Domain("ln lambda must exceed 1 for ln ln lambda".into()));
    }
    let reports = par_map(mode, family, |(_, traj)| bubble_energy(*traj, params, radius, k0));
    let energies = reports.into_iter().map(|r| r.map(|r| r.energy)).collect::<Result<Vec<f64>>>()?;
    let x: Vec<f64> = family.iter().map(|(l, _)| l.ln().ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, energies.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&energies).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let regime = tower_regime(params, beta);
    let predicted_slope = match regime {
        TowerRegime::Tower => Some(single_bubble_energy(params, k0)? / params.tower_ratio(beta).ln().abs()),
        _ => None,
    };
    let (emin, emax) = energies.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    Ok(GrowthReport {
        regime,
        monotone: energies.windows(2).all(|w| w[1] >= w[0]),
        relative_spread: (emax - emin) / emax,
        slope,
        intercept: my - slope * mx,
        predicted_slope,
        ln_ln_lambda: x,
        energies,
    })
}
