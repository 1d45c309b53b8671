//! Spherical, Euclidean and cylindrical charts and the v / u / xi representations.

use std::f64::consts::{LN_2, PI};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::softplus;

/// Default pole margin for chart conversions.
pub const POLE_MARGIN: f64 = 1e-6;

/// t = ln cot(theta / 2).
pub fn theta_to_t(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, pi)")));
    }
    let h = 0.5 * theta;
    Ok((h.cos() / h.sin()).ln())
}

/// theta = 2 atan(e^{-t}).
pub fn t_to_theta(t: f64) -> f64 {
    2.0 * (-t).exp().atan()
}

/// pi - theta computed without cancellation.
pub fn t_to_pi_minus_theta(t: f64) -> f64 {
    2.0 * t.exp().atan()
}

/// A point expressed in all three charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub theta: f64,
    pub r: f64,
    pub t: f64,
}

impl ChartPoint {
    pub fn from_t(t: f64) -> Self {
        Self { theta: t_to_theta(t), r: t.exp(), t }
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        let t = theta_to_t(theta)?;
        Ok(Self { theta, r: t.exp(), t })
    }

    pub fn from_r(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        Ok(Self::from_t(r.ln()))
    }
}

/// Values of the three representations at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionTriple {
    pub v: f64,
    pub u: f64,
    pub xi: f64,
}

/// Which representation a sampled profile is in.  Samples are (coordinate, value)
/// with coordinate theta / r / t respectively.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// (theta, v)
    Spherical,
    /// (r, u)
    Euclidean,
    /// (t, xi)
    Cylindrical,
}

/// ln(2 / (1 + r^2)) as a function of t = ln r.
fn ln_conformal_ratio(t: f64) -> f64 {
    LN_2 - softplus(2.0 * t)
}

/// (t, ln u) for one sample.
fn to_log_u(chart: Chart, coord: f64, value: f64, params: &ProblemParams, margin: f64) -> Result<(f64, f64)> {
    let half = 0.5 * (params.nf() - 2.0);
    let (t, ln_u) = match chart {
        Chart::Spherical => {
            if !(value > 0.0) {
                return Err(Error::Domain(format!("v = {value} must be positive")));
            }
            let t = theta_to_t(coord)?;
            (t, half * ln_conformal_ratio(t) + value.ln())
        }
        Chart::Euclidean => {
            if !(value > 0.0) {
                return Err(Error::Domain(format!("u = {value} must be positive")));
            }
            let t = ChartPoint::from_r(coord)?.t;
            (t, value.ln())
        }
        Chart::Cylindrical => (coord, -half * (value + coord)),
    };
    let theta = t_to_theta(t);
    if theta < margin || PI - theta < margin {
        return Err(Error::Domain(format!("sample at theta = {theta} inside the pole margin {margin}")));
    }
    Ok((t, ln_u))
}

fn from_log_u(chart: Chart, t: f64, ln_u: f64, params: &ProblemParams) -> (f64, f64) {
    let half = 0.5 * (params.nf() - 2.0);
    match chart {
        Chart::Spherical => (t_to_theta(t), (ln_u - half * ln_conformal_ratio(t)).exp()),
        Chart::Euclidean => (t.exp(), ln_u.exp()),
        Chart::Cylindrical => (t, -ln_u / half - t),
    }
}

/// Pointwise conversion of a sampled profile between charts.
pub fn convert_profile(
    values: &[(f64, f64)],
    source: Chart,
    target: Chart,
    params: &ProblemParams,
) -> Result<Vec<(f64, f64)>> {
    convert_profile_with_margin(values, source, target, params, POLE_MARGIN)
}

pub fn convert_profile_with_margin(
    values: &[(f64, f64)],
    source: Chart,
    target: Chart,
    params: &ProblemParams,
    margin: f64,
) -> Result<Vec<(f64, f64)>> {
    values
        .iter()
        .map(|&(c, v)| {
            let (t, ln_u) = to_log_u(source, c, v, params, margin)?;
            Ok(from_log_u(target, t, ln_u, params))
        })
        .collect()
}

/// The full triple at a cylindrical point.
pub fn triple_from_xi(t: f64, xi: f64, params: &ProblemParams) -> SolutionTriple {
    let half = 0.5 * (params.nf() - 2.0);
    let ln_u = -half * (xi + t);
    SolutionTriple {
        v: (ln_u - half * ln_conformal_ratio(t)).exp(),
        u: ln_u.exp(),
        xi,
    }
}

/// Writes a two or three column CSV with 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a numeric CSV produced by [`write_csv`]; returns header and rows.
pub fn read_csv<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Domain("empty csv".into()))?
        .map_err(|e| Error::Domain(e.to_string()))?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::Domain(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Domain(format!("{s}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Domain(format!("row has {} fields, header {}", row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equator_and_known_angles() {
        assert!(theta_to_t(PI / 2.0).unwrap().abs() < 1e-15);
        assert!((theta_to_t(PI / 3.0).unwrap() - 3f64.sqrt().ln()).abs() < 1e-14);
        assert!((theta_to_t(0.3).unwrap() + theta_to_t(PI - 0.3).unwrap()).abs() < 1e-14);
        assert!(theta_to_t(0.0).is_err());
        assert!(theta_to_t(PI).is_err());
    }

    #[test]
    fn round_sphere_in_euclidean_chart() {
        let p = ProblemParams::new(5, 2).unwrap();
        let sph = vec![(PI / 2.0, 1.0), (1.0, 1.0), (2.5, 1.0)];
        let euc = convert_profile(&sph, Chart::Spherical, Chart::Euclidean, &p).unwrap();
        for (r, u) in euc {
            let exact = (2.0 / (1.0 + r * r)).powf(1.5);
            assert!(((u - exact) / exact).abs() < 1e-13);
        }
        // u(0) = 2^{3/2}: approach r -> 0 within the pole margin
        let tiny = convert_profile(&[(PI - 1e-4, 1.0)], Chart::Spherical, Chart::Euclidean, &p).unwrap();
        assert!((tiny[0].1 - 2f64.powf(1.5)).abs() < 1e-6);
    }

    #[test]
    fn round_sphere_xi_is_ln_cosh() {
        let p = ProblemParams::new(7, 2).unwrap();
        for c in [1.0, 3.0] {
            let sph: Vec<_> = (1..40).map(|i| (i as f64 * PI / 40.0, c)).collect();
            let cyl = convert_profile(&sph, Chart::Spherical, Chart::Cylindrical, &p).unwrap();
            let offsets: Vec<f64> = cyl.iter().map(|&(t, xi)| xi - t.cosh().ln()).collect();
            let expect = -(2.0 / (p.nf() - 2.0)) * f64::ln(c);
            for d in offsets {
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pole_margin_enforced() {
        let p = ProblemParams::new(5, 2).unwrap();
        assert!(convert_profile(&[(1e-8, 1.0)], Chart::Spherical, Chart::Cylindrical, &p).is_err());
        assert!(convert_profile(&[(1.0, -1.0)], Chart::Spherical, Chart::Cylindrical, &p).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-17]];
        let mut buf = Vec::new();
        write_csv(&mut buf, &["t", "xi", "xidot"], &rows).unwrap();
        let (h, back) = read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(h, vec!["t", "xi", "xidot"]);
        assert_eq!(back, rows);
    }
}
