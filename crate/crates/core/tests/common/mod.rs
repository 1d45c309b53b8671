#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmak_core::constants::*;
use sigmak_core::ProblemParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    BothPositive,
    Mixed,
    NegBelow,
    NegAbove,
    NegEqualBig,
    NegEqualSmall,
    NegEqualOne,
    LowNegative,
}

pub fn expected(cell: Cell) -> (Compactness, Option<i32>, Existence) {
    use Compactness::*;
    match cell {
        Cell::BothPositive => (Compact, Some(-1), Existence::Guaranteed),
        Cell::Mixed => (Compact, Some(0), Existence::ObstructedIfMonotone),
        Cell::NegBelow => (Compact, Some(-1), Existence::Guaranteed),
        Cell::NegAbove => (Compact, Some(0), Existence::DependsOnK),
        Cell::NegEqualBig => (CompactIfBalance, Some(-1), Existence::Guaranteed),
        Cell::NegEqualSmall => (CompactIfBalance, Some(0), Existence::DependsOnK),
        Cell::NegEqualOne => (Unknown, None, Existence::DependsOnK),
        Cell::LowNegative => (NoncompactFamilyExists, None, Existence::DependsOnK),
    }
}

/// Hand-built cells: (pair, label).
pub fn cells(pp: &ProblemParams) -> Vec<(PolePair, Cell)> {
    let n = pp.nf();
    let g = pp.gap();
    let half = 0.5 * g;
    let lo = half.max(2.0);
    let mut out = Vec::new();
    let betas: Vec<f64> = (0..6).map(|i| lo + (n - 1e-3 - lo) * i as f64 / 5.0).collect();
    for &b1 in &betas {
        for &b2 in &betas {
            for (a1, a2) in [(0.7, 1.3), (0.7, -1.3), (-0.7, 1.3)] {
                let cell = if a1 > 0.0 && a2 > 0.0 { Cell::BothPositive } else { Cell::Mixed };
                out.push((PolePair { a1, a2, beta1: b1, beta2: b2, k0: 1.1, kpi: 0.9 }, cell));
            }
            let d = 1.0 / b1 + 1.0 / b2 - 2.0 / g;
            if d.abs() > 1e-6 {
                let cell = if d < 0.0 { Cell::NegBelow } else { Cell::NegAbove };
                out.push((PolePair { a1: -0.7, a2: -1.3, beta1: b1, beta2: b2, k0: 1.1, kpi: 0.9 }, cell));
            }
        }
    }
    // the equality line inside the balance window
    let (wlo, _) = balance_window(pp);
    for i in 1..6 {
        let b1 = (wlo.max(lo) + 1e-3) + i as f64 * 0.1;
        let rest = 2.0 / g - 1.0 / b1;
        if rest <= 0.0 {
            continue;
        }
        let b2 = 1.0 / rest;
        if !(b2 > wlo && b2 >= lo && b2 < n) {
            continue;
        }
        let first = PoleData::new(-0.8, b1, 1.2);
        let a2 = balancing_coefficient(pp, &first, b2, 0.7).unwrap();
        // C is decreasing in |a|
        for (scale, cell) in [(1.0, Cell::NegEqualOne), (0.5, Cell::NegEqualBig), (2.0, Cell::NegEqualSmall)] {
            out.push((PolePair { a1: -0.8, a2: a2 * scale, beta1: b1, beta2: b2, k0: 1.2, kpi: 0.7 }, cell));
        }
    }
    if half > 2.0 {
        let b = 0.5 * (2.0 + half);
        out.push((PolePair { a1: -1.0, a2: -1.0, beta1: b, beta2: b, k0: 1.0, kpi: 1.0 }, Cell::LowNegative));
        out.push((PolePair { a1: -1.0, a2: 1.0, beta1: b, beta2: 0.5 * (half + n), k0: 1.0, kpi: 1.0 }, Cell::LowNegative));
    }
    out
}

/// Runs the table oracle over every cell and its pole swap; returns (checked, mismatches).
pub fn table_agreement(dims: &[(u32, u32)]) -> (usize, Vec<String>) {
    let mut total = 0;
    let mut bad = Vec::new();
    for &(n, k) in dims {
        let pp = ProblemParams::new(n, k).unwrap();
        for (pair, cell) in cells(&pp) {
            for q in [pair, pair.swapped()] {
                let v = classify_regime(&pp, &q);
                let got = (v.compactness, v.degree, v.existence);
                if got != expected(cell) || (v.degree == Some(-1) && v.existence != Existence::Guaranteed) {
                    bad.push(format!("({n},{k}) {q:?}: {got:?} vs {cell:?}"));
                }
                total += 1;
            }
        }
    }
    (total, bad)
}

/// 100 pole pairs, half balanced on the equality line: (relation, product) for each.
pub fn balance_pairs(seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..100 {
        let pp = [(7, 2), (9, 2), (11, 3)].map(|(n, k)| ProblemParams::new(n, k).unwrap())[i % 3];
        let g = pp.gap();
        let (lo, hi) = balance_window(&pp);
        // beta1 range keeping the partner on the equality line inside the window
        let line = (1.0 / (2.0 / g - 1.0 / hi), 1.0 / (2.0 / g - 1.0 / lo));
        let b1: f64 = if i % 2 == 0 {
            rng.gen_range((line.0.max(lo) + 0.05)..(line.1.min(hi) - 0.05))
        } else {
            rng.gen_range((lo + 0.05)..(hi - 0.05))
        };
        let k1: f64 = rng.gen_range(0.3..3.0);
        let k2: f64 = rng.gen_range(0.3..3.0);
        let a1: f64 = -rng.gen_range(0.1..5.0);
        let first = PoleData::new(a1, b1, k1);
        let (b2, a2) = if i % 2 == 0 {
            let b2 = 1.0 / (2.0 / g - 1.0 / b1);
            (b2, balancing_coefficient(&pp, &first, b2, k2).unwrap())
        } else {
            (rng.gen_range((lo + 0.05)..(hi - 0.05)), -rng.gen_range(0.1..5.0))
        };
        let second = PoleData::new(a2, b2, k2);
        let rel = balance_relation(&pp, &first, &second).unwrap();
        let prod = C_nk(&pp, &first).unwrap() * C_nk(&pp, &second).unwrap();
        out.push((rel, prod));
    }
    out
}
