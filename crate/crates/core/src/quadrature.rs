//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral estimate with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quad {
    type Output = Quad;
    fn add(self, o: Quad) -> Quad {
        Quad { value: self.value + o.value, error: self.error + o.error }
    }
}

/// One 15-point Kronrod panel; the error is |K15 - G7|.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Quad { value: kron * h, error: ((kron - gauss) * h).abs() }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 4000 }
    }
}

/// Globally adaptive bisection on the panel with the largest error.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quad> {
    if a == b {
        return Ok(Quad::default());
    }
    let mut panels = vec![(a, b, gk15(&mut f, a, b))];
    loop {
        let total = panels.iter().fold(Quad::default(), |acc, p| acc + p.2);
        if !total.value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.value.abs());
        if total.error <= target {
            return Ok(total);
        }
        if panels.len() >= opts.max_panels {
            // report what we have if the remaining error is roundoff-level
            if total.error <= 1e3 * target {
                return Ok(total);
            }
            return Err(Error::Quadrature(format!(
                "panel budget exhausted on [{a}, {b}]: estimate {} +- {}",
                total.value, total.error
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Ok(total);
        }
        panels.push((lo, mid, gk15(&mut f, lo, mid)));
        panels.push((mid, hi, gk15(&mut f, mid, hi)));
    }
}

/// Adaptive integration over consecutive breakpoints.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<Quad> {
    let mut acc = Quad::default();
    for w in breaks.windows(2) {
        acc = acc + integrate(&mut f, w[0], w[1], opts)?;
    }
    Ok(acc)
}

/// Integral of `f` over (0, 1] where `f(s) = s^(p-1) g(s)` may be singular at 0;
/// uses s = exp(-u) so the integrand decays like exp(-p u).
pub fn integrate_unit_singular<G: FnMut(f64) -> f64>(mut g: G, p: f64, opts: QuadOptions) -> Result<Quad> {
    if p <= 0.0 {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    let u_max = 40.0 / p;
    let h = |u: f64| {
        let s = (-u).exp();
        (-p * u).exp() * g(s)
    };
    let mut h = h;
    // panels grow geometrically so the slow tail is not over-resolved
    let mut breaks = vec![0.0];
    let mut u = 0.5f64.min(u_max);
    while u < u_max {
        breaks.push(u);
        u *= 2.0;
    }
    breaks.push(u_max);
    let mut q = integrate_pieces(&mut h, &breaks, opts)?;
    q.error += h(u_max) / p;
    Ok(q)
}
