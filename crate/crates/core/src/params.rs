use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{binomial, gamma};

/// Dimension `n` and order `k` of the sigma_k problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawParams")]
pub struct ProblemParams {
    n: u32,
    k: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    n: u32,
    k: u32,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ProblemParams::new(raw.n, raw.k)
    }
}

impl ProblemParams {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if n < 5 {
            return Err(Error::Params(format!("n = {n} must be at least 5")));
        }
        if k < 2 {
            return Err(Error::Params(format!("k = {k} must be at least 2")));
        }
        if 2 * k >= n {
            return Err(Error::Params(format!("need 2k < n, got n = {n}, k = {k}")));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// binom(n, k)
    pub fn binom_nk(&self) -> f64 {
        binomial(self.n, self.k)
    }

    /// binom(n-1, k-1)
    pub fn binom_n1k1(&self) -> f64 {
        binomial(self.n - 1, self.k - 1)
    }

    /// (n - 2k) / 2k, the damping coefficient in F_k.
    pub fn gamma(&self) -> f64 {
        (self.nf() - 2.0 * self.kf()) / (2.0 * self.kf())
    }

    /// Value of F_k on ln cosh t: 2^{-k} binom(n, k).
    pub fn round_value(&self) -> f64 {
        self.binom_nk() * 2f64.powi(-(self.k as i32))
    }

    /// 2^{k-1} / binom(n-1, k-1): the factor that inverts F_k for the second derivative.
    pub fn inverse_prefactor(&self) -> f64 {
        2f64.powi(self.k as i32 - 1) / self.binom_n1k1()
    }

    /// n - 2k
    pub fn gap(&self) -> f64 {
        self.nf() - 2.0 * self.kf()
    }

    /// Area of the unit (n-1)-sphere.
    pub fn sphere_area(&self) -> f64 {
        let h = 0.5 * self.nf();
        2.0 * std::f64::consts::PI.powf(h) / gamma(h)
    }

    /// Bubble-tower contraction factor 1 - 2 beta / (n - 2k).
    pub fn tower_ratio(&self, beta: f64) -> f64 {
        1.0 - 2.0 * beta / self.gap()
    }
}
