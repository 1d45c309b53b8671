//! Pole constants, the balance product and the compactness/degree classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::ln_gamma;

/// Default half-width of the bands around the borderline sets.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Leading behavior K = k_pole + a * dist^beta at one pole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleData {
    pub a: f64,
    pub beta: f64,
    pub k_pole: f64,
}

impl PoleData {
    pub fn new(a: f64, beta: f64, k_pole: f64) -> Self {
        Self { a, beta, k_pole }
    }
}

/// Open window of flatness orders on which the balance constant is defined.
pub fn balance_window(params: &ProblemParams) -> (f64, f64) {
    let n = params.nf();
    (n * params.gap() / (n + 2.0 * params.kf()), n)
}

fn check_pole(params: &ProblemParams, pole: &PoleData) -> Result<()> {
    let (lo, hi) = balance_window(params);
    if !(pole.a < 0.0) {
        return Err(Error::Domain(format!("balance constant needs a < 0, got {}", pole.a)));
    }
    if !(pole.beta > lo && pole.beta < hi) {
        return Err(Error::Domain(format!("beta = {} outside ({lo}, {hi})", pole.beta)));
    }
    if !(pole.k_pole > 0.0) {
        return Err(Error::Domain(format!("pole curvature {} must be positive", pole.k_pole)));
    }
    Ok(())
}

/// ln Gamma((n-b)/2) + ln Gamma((n+b)/2)
fn ln_gg(n: f64, b: f64) -> f64 {
    ln_gamma(0.5 * (n - b)) + ln_gamma(0.5 * (n + b))
}

/// ln C_{n,k}(beta, a, s).
pub fn ln_c_nk(params: &ProblemParams, pole: &PoleData) -> Result<f64> {
    check_pole(params, pole)?;
    let (n, k) = (params.nf(), params.kf());
    let PoleData { a, beta, k_pole: s } = *pole;
    let bracket = std::f64::consts::LN_2 + ln_gamma(n) + (n - beta) / (2.0 * k) * s.ln()
        - a.abs().ln()
        - beta.ln()
        - ln_gg(n, beta);
    Ok(-std::f64::consts::LN_2 + bracket / beta)
}

/// C_{n,k}(beta, a, s) = (1/2) [2 Gamma(n) s^{(n-beta)/2k} / (|a| beta Gamma((n-beta)/2) Gamma((n+beta)/2))]^{1/beta}.
#[allow(non_snake_case)]
pub fn C_nk(params: &ProblemParams, pole: &PoleData) -> Result<f64> {
    Ok(ln_c_nk(params, pole)?.exp())
}

/// The constants (p, q) of the two-sided matching at a pole.
pub fn pole_constants(params: &ProblemParams, pole: &PoleData) -> Result<(f64, f64)> {
    check_pole(params, pole)?;
    let (n, k) = (params.nf(), params.kf());
    let g = params.gap();
    let ln2 = std::f64::consts::LN_2;
    let lb = params.binom_nk().ln();
    let PoleData { a, beta, k_pole: s } = *pole;
    let p = -(1.0 / g)
        * ((beta + 0.5 * (n + 2.0 * k)) * ln2 + g / (2.0 * k) * lb + ln_gg(n, beta) - ln2 - ln_gamma(n)
            + a.abs().ln()
            + beta.ln()
            - n / (2.0 * k) * s.ln());
    let q = -((n + 2.0 * k) / (2.0 * g) * ln2 + lb / (2.0 * k) - s.ln() / (2.0 * k));
    Ok((p, q))
}

/// ((n-2k)/beta_2) p_2 - q_2 + ((n-2k)/beta_1) p_1 - q_1.
pub fn balance_relation(params: &ProblemParams, north: &PoleData, south: &PoleData) -> Result<f64> {
    let g = params.gap();
    let (p1, q1) = pole_constants(params, north)?;
    let (p2, q2) = pole_constants(params, south)?;
    Ok(g / south.beta * p2 - q2 + g / north.beta * p1 - q1)
}

/// The |a| at the second pole that makes C_(1) C_(2) = 1.
pub fn balancing_coefficient(params: &ProblemParams, first: &PoleData, beta2: f64, k2: f64) -> Result<f64> {
    let target = -ln_c_nk(params, first)?;
    // ln C is affine in ln|a| with slope -1/beta
    let probe = PoleData::new(-1.0, beta2, k2);
    let at_one = ln_c_nk(params, &probe)?;
    Ok(-((at_one - target) * beta2).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compactness {
    Compact,
    CompactIfBalance,
    NoncompactFamilyExists,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Existence {
    Guaranteed,
    DependsOnK,
    ObstructedIfMonotone,
}

/// Where 1/beta_1 + 1/beta_2 sits relative to 2/(n-2k).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatnessBalance {
    Below,
    Equal,
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub compactness: Compactness,
    /// None where the degree is undefined or unknown.
    pub degree: Option<i32>,
    pub existence: Existence,
    pub flatness: Option<FlatnessBalance>,
    /// C_(1) C_(2) when both poles are negatively flat and inside the balance window.
    pub balance_product: Option<f64>,
    /// True when a borderline quantity fell inside the tolerance band.
    pub boundary: bool,
    pub provenance: String,
    pub notes: Vec<String>,
}

impl RegimeVerdict {
    fn new(compactness: Compactness, degree: Option<i32>, existence: Existence, provenance: &str) -> Self {
        Self {
            compactness,
            degree,
            existence,
            flatness: None,
            balance_product: None,
            boundary: false,
            provenance: provenance.to_string(),
            notes: Vec::new(),
        }
    }

    fn unknown(reason: String) -> Self {
        let mut v = Self::new(Compactness::Unknown, None, Existence::DependsOnK, "outside the classified hypotheses");
        v.notes.push(reason);
        v
    }
}

/// Pole data for the classifier: (a, beta, K(pole)) at theta = 0 and theta = pi.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePair {
    pub a1: f64,
    pub a2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub k0: f64,
    pub kpi: f64,
}

impl PolePair {
    pub fn swapped(&self) -> Self {
        Self { a1: self.a2, a2: self.a1, beta1: self.beta2, beta2: self.beta1, k0: self.kpi, kpi: self.k0 }
    }

    pub fn north(&self) -> PoleData {
        PoleData::new(self.a1, self.beta1, self.k0)
    }

    pub fn south(&self) -> PoleData {
        PoleData::new(self.a2, self.beta2, self.kpi)
    }
}

fn flatness(params: &ProblemParams, b1: f64, b2: f64, band: f64) -> FlatnessBalance {
    let d = 1.0 / b1 + 1.0 / b2 - 2.0 / params.gap();
    if d.abs() < band {
        FlatnessBalance::Equal
    } else if d < 0.0 {
        FlatnessBalance::Below
    } else {
        FlatnessBalance::Above
    }
}

fn basic_checks(pp: &PolePair) -> Option<String> {
    if !(pp.a1 != 0.0 && pp.a2 != 0.0 && pp.a1.is_finite() && pp.a2.is_finite()) {
        return Some(format!("pole coefficients must be nonzero, got a1 = {}, a2 = {}", pp.a1, pp.a2));
    }
    if !(pp.k0 > 0.0 && pp.kpi > 0.0) {
        return Some(format!("pole curvatures must be positive, got {} and {}", pp.k0, pp.kpi));
    }
    None
}

/// Verdict for admissible pole data with every beta_i < (n-2k)/2 paired with a_i > 0.
fn table_verdict(params: &ProblemParams, pp: &PolePair, band: f64) -> RegimeVerdict {
    let (a1, a2) = (pp.a1, pp.a2);
    if a1 > 0.0 && a2 > 0.0 {
        return RegimeVerdict::new(Compactness::Compact, Some(-1), Existence::Guaranteed, "both poles positively flat");
    }
    if a1 * a2 < 0.0 {
        let mut v = RegimeVerdict::new(
            Compactness::Compact,
            Some(0),
            Existence::ObstructedIfMonotone,
            "poles flat with opposite signs",
        );
        v.notes.push("no solution when K is strictly monotone (Kazdan-Warner obstruction)".into());
        return v;
    }
    let fl = flatness(params, pp.beta1, pp.beta2, band);
    let mut v = match fl {
        FlatnessBalance::Below => RegimeVerdict::new(
            Compactness::Compact,
            Some(-1),
            Existence::Guaranteed,
            "both poles negatively flat, 1/beta1 + 1/beta2 < 2/(n-2k)",
        ),
        FlatnessBalance::Above => RegimeVerdict::new(
            Compactness::Compact,
            Some(0),
            Existence::DependsOnK,
            "both poles negatively flat, 1/beta1 + 1/beta2 > 2/(n-2k)",
        ),
        FlatnessBalance::Equal => {
            let prod = ln_c_nk(params, &pp.north()).and_then(|l1| Ok(l1 + ln_c_nk(params, &pp.south())?));
            match prod {
                Err(e) => RegimeVerdict::unknown(format!("balance constant undefined: {e}")),
                Ok(lp) => {
                    let c = lp.exp();
                    let mut v = if (c - 1.0).abs() < band {
                        let mut v = RegimeVerdict::new(
                            Compactness::Unknown,
                            None,
                            Existence::DependsOnK,
                            "balanced flatness with C_(1) C_(2) = 1",
                        );
                        v.boundary = true;
                        v.notes.push("compactness open: blow-up families exist for nearby K".into());
                        v
                    } else if c > 1.0 {
                        RegimeVerdict::new(
                            Compactness::CompactIfBalance,
                            Some(-1),
                            Existence::Guaranteed,
                            "balanced flatness with C_(1) C_(2) > 1",
                        )
                    } else {
                        RegimeVerdict::new(
                            Compactness::CompactIfBalance,
                            Some(0),
                            Existence::DependsOnK,
                            "balanced flatness with C_(1) C_(2) < 1",
                        )
                    };
                    v.balance_product = Some(c);
                    v
                }
            }
        }
    };
    if fl == FlatnessBalance::Equal {
        v.notes.push(format!("flatness sum inside the band of width {band:e}"));
    }
    v.flatness = Some(fl);
    v
}

/// The six-case degree table, with the hypotheses of the compactness theorem enforced.
pub fn degree_of(params: &ProblemParams, pp: &PolePair) -> RegimeVerdict {
    degree_of_with_band(params, pp, BOUNDARY_BAND)
}

pub fn degree_of_with_band(params: &ProblemParams, pp: &PolePair, band: f64) -> RegimeVerdict {
    if let Some(r) = basic_checks(pp) {
        return RegimeVerdict::unknown(r);
    }
    let n = params.nf();
    for (i, (a, b)) in [(pp.a1, pp.beta1), (pp.a2, pp.beta2)].into_iter().enumerate() {
        if !(b >= 2.0 && b < n) {
            return RegimeVerdict::unknown(format!("beta{} = {b} outside [2, n)", i + 1));
        }
        if b < 0.5 * params.gap() && a < 0.0 {
            return RegimeVerdict::unknown(format!(
                "beta{} = {b} < (n-2k)/2 requires a{} > 0; solution set need not be compact",
                i + 1,
                i + 1
            ));
        }
    }
    table_verdict(params, pp, band)
}

/// Full table verdict including the sub-(n-2k)/2 noncompact regime.
pub fn classify_regime(params: &ProblemParams, pp: &PolePair) -> RegimeVerdict {
    classify_regime_with_band(params, pp, BOUNDARY_BAND)
}

pub fn classify_regime_with_band(params: &ProblemParams, pp: &PolePair, band: f64) -> RegimeVerdict {
    if let Some(r) = basic_checks(pp) {
        return RegimeVerdict::unknown(r);
    }
    let n = params.nf();
    let half = 0.5 * params.gap();
    if !(pp.beta1 >= 2.0 && pp.beta1 < n && pp.beta2 >= 2.0 && pp.beta2 < n) {
        return RegimeVerdict::unknown(format!("flatness orders ({}, {}) outside [2, n)", pp.beta1, pp.beta2));
    }
    let low = [(pp.a1, pp.beta1), (pp.a2, pp.beta2)].iter().any(|&(a, b)| b < half && a < 0.0);
    if low {
        let mut v = RegimeVerdict::new(
            Compactness::NoncompactFamilyExists,
            None,
            Existence::DependsOnK,
            "negatively flat pole with beta < (n-2k)/2",
        );
        v.notes.push("blow-up families with unbounded energy exist for suitable K (constructed for beta1 = beta2)".into());
        return v;
    }
    table_verdict(params, pp, band)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, k: u32) -> ProblemParams {
        ProblemParams::new(n, k).unwrap()
    }

    #[test]
    fn c_nk_hand_value() {
        // (1/2)(2 * 24 / (Gamma(2) Gamma(3))) = 12
        let c = C_nk(&p(5, 2), &PoleData::new(-1.0, 1.0, 1.0)).unwrap();
        assert!((c - 12.0).abs() < 1e-12, "{c}");
        let c2 = C_nk(&p(5, 2), &PoleData::new(-2.0, 1.0, 1.0)).unwrap();
        assert!((c2 / c - 0.5).abs() < 1e-14);
        assert!(C_nk(&p(5, 2), &PoleData::new(1.0, 1.0, 1.0)).is_err());
        assert!(C_nk(&p(5, 2), &PoleData::new(-1.0, 5.0, 1.0)).is_err());
    }

    #[test]
    fn q_scaling_and_p_finite() {
        let pp = p(7, 2);
        let (_, q1) = pole_constants(&pp, &PoleData::new(-1.0, 3.0, 1.0)).unwrap();
        let (_, q4) = pole_constants(&pp, &PoleData::new(-1.0, 3.0, 4.0)).unwrap();
        assert!((q4 - q1 - 4f64.ln() / 4.0).abs() < 1e-14);
        let (p0, _) = pole_constants(&pp, &PoleData::new(-1.0, 3.0, 1.0)).unwrap();
        assert!(p0.is_finite());
    }

    #[test]
    fn balancing_closes_product() {
        let pp = p(9, 2);
        // 1/b1 + 1/b2 = 2/5
        let first = PoleData::new(-0.7, 4.0, 1.3);
        let b2 = 1.0 / (0.4 - 0.25);
        let a2 = balancing_coefficient(&pp, &first, b2, 0.8).unwrap();
        let second = PoleData::new(a2, b2, 0.8);
        let lp = ln_c_nk(&pp, &first).unwrap() + ln_c_nk(&pp, &second).unwrap();
        assert!(lp.abs() < 1e-13);
        assert!(balance_relation(&pp, &first, &second).unwrap().abs() < 1e-12);
        let v = classify_regime(&pp, &PolePair { a1: -0.7, a2, beta1: 4.0, beta2: b2, k0: 1.3, kpi: 0.8 });
        assert!(v.boundary && v.degree.is_none());
    }

    #[test]
    fn table_cells() {
        let pp = p(7, 2);
        let v = degree_of(&pp, &PolePair { a1: 1.0, a2: 1.0, beta1: 3.0, beta2: 3.0, k0: 1.0, kpi: 1.0 });
        assert_eq!((v.degree, v.existence), (Some(-1), Existence::Guaranteed));
        let v = degree_of(&pp, &PolePair { a1: -1.0, a2: 1.0, beta1: 3.0, beta2: 3.0, k0: 1.0, kpi: 1.0 });
        assert_eq!(v.degree, Some(0));
        let v = classify_regime(&p(9, 2), &PolePair { a1: -1.0, a2: -1.0, beta1: 2.0, beta2: 2.0, k0: 1.0, kpi: 1.0 });
        assert_eq!(v.compactness, Compactness::NoncompactFamilyExists);
        let v = degree_of(&p(9, 2), &PolePair { a1: -1.0, a2: -1.0, beta1: 2.0, beta2: 2.0, k0: 1.0, kpi: 1.0 });
        assert_eq!(v.compactness, Compactness::Unknown);
    }
}
