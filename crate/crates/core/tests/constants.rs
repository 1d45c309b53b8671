mod common;

use common::{cells, expected, Cell};
use sigmak_core::constants::*;
use sigmak_core::special::gamma;
use sigmak_core::ProblemParams;

fn p(n: u32, k: u32) -> ProblemParams {
    ProblemParams::new(n, k).unwrap()
}

#[test]
fn exhaustive_table_agreement_with_pole_swap() {
    let mut total = 0;
    let mut seen = std::collections::HashSet::new();
    for (n, k) in [(5, 2), (7, 2), (7, 3), (9, 2), (11, 3)] {
        let pp = p(n, k);
        for (pair, cell) in cells(&pp) {
            for q in [pair, pair.swapped()] {
                let v = classify_regime(&pp, &q);
                assert_eq!((v.compactness, v.degree, v.existence), expected(cell), "{n},{k} {q:?} {cell:?}");
                if v.degree == Some(-1) {
                    assert_eq!(v.existence, Existence::Guaranteed);
                }
                let d = degree_of(&pp, &q);
                if cell == Cell::LowNegative {
                    assert_eq!(d.compactness, Compactness::Unknown);
                } else {
                    assert_eq!(d, v);
                }
                total += 1;
            }
            seen.insert(format!("{cell:?}"));
        }
    }
    assert_eq!(seen.len(), 8, "{seen:?}");
    assert!(total > 500);
}

#[test]
fn inadmissible_inputs_are_unknown() {
    let pp = p(7, 2);
    let base = PolePair { a1: 1.0, a2: 1.0, beta1: 3.0, beta2: 3.0, k0: 1.0, kpi: 1.0 };
    for bad in [
        PolePair { beta1: 1.5, ..base },
        PolePair { beta2: 7.0, ..base },
        PolePair { a1: 0.0, ..base },
        PolePair { kpi: -1.0, ..base },
    ] {
        assert_eq!(classify_regime(&pp, &bad).compactness, Compactness::Unknown);
        assert!(degree_of(&pp, &bad).degree.is_none());
    }
}

#[test]
fn c_nk_against_direct_gamma_form() {
    let pp = p(9, 2);
    let (n, k) = (9.0, 2.0);
    for &(a, beta, s) in &[(-1.0, 4.0, 1.0), (-0.3, 5.5, 2.0), (-3.0, 8.5, 0.4)] {
        let inner = 2.0 * gamma(n) * f64::powf(s, (n - beta) / (2.0 * k))
            / (f64::abs(a) * beta * gamma(0.5 * (n - beta)) * gamma(0.5 * (n + beta)));
        let direct = 0.5 * inner.powf(1.0 / beta);
        let c = C_nk(&pp, &PoleData::new(a, beta, s)).unwrap();
        assert!((c / direct - 1.0).abs() < 1e-12, "{c} vs {direct}");
    }
}

#[test]
fn c_nk_is_continuous_in_beta() {
    for (n, k) in [(7, 2), (9, 2), (11, 3)] {
        let pp = p(n, k);
        let (wlo, whi) = balance_window(&pp);
        let inset = 0.05 * (whi - wlo);
        let (lo, hi) = (wlo + inset, whi - inset);
        let m = 4000;
        let h = (hi - lo) / m as f64;
        let vals: Vec<f64> = (0..=m)
            .map(|i| ln_c_nk(&pp, &PoleData::new(-0.9, lo + h * i as f64, 1.3)).unwrap())
            .collect();
        // a smooth function sampled finely has small second differences
        let max_jump = vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        let max_dd = vals.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max);
        assert!(max_jump < 50.0 * h, "{n},{k}: {max_jump}");
        assert!(max_dd < 1e-3, "{n},{k}: {max_dd}");
    }
}

#[test]
fn balance_relation_iff_unit_product() {
    let pairs = common::balance_pairs(11);
    assert_eq!(pairs.len(), 100);
    for &(rel, prod) in &pairs {
        assert_eq!(rel.abs() < 1e-10, (prod - 1.0).abs() < 1e-10, "rel {rel:e}, prod {prod}");
    }
    assert_eq!(pairs.iter().filter(|p| p.0.abs() < 1e-10).count(), 50);
}
