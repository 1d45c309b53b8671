use sigmak_core::blowup::*;
use sigmak_core::ode::StandardBubble;
use sigmak_core::par::ExecMode;
use sigmak_core::solvers::noncompact::{solve_noncompact_bvp, NoncompactOptions, NoncompactSolution};
use sigmak_core::ProblemParams;

const EPS: f64 = 1e-3;
const BETA: f64 = 2.0;

fn p92() -> ProblemParams {
    ProblemParams::new(9, 2).unwrap()
}

fn tower(t: f64) -> NoncompactSolution {
    solve_noncompact_bvp(&p92(), EPS, BETA, t, &NoncompactOptions::default()).unwrap()
}

#[test]
fn deep_towers_follow_the_spacing_law() {
    let pp = p92();
    for t in [150.0, 175.0, 200.0] {
        let sol = tower(t);
        let ladder = decompose_bubbles(&sol.profile, &pp, pp.round_value(), &DecomposeOptions::default()).unwrap();
        assert!(ladder.alternates());
        assert!((ladder.ln_lambda - t).abs() < 1e-6, "{} vs {t}", ladder.ln_lambda);
        let rep = check_spacing_law(&ladder, &pp, BETA, &SpacingOptions::default()).unwrap();
        assert_eq!(rep.regime, TowerRegime::Tower);
        assert!((rep.target_ratio - 0.2).abs() < 1e-15);
        assert!(rep.ratio_ok, "T = {t}: {rep:?}");
        assert!(rep.count_ok, "T = {t}: {rep:?}");
        ladder.check_misfit(1e-6, 20.0).unwrap();
    }
}

#[test]
fn misfit_is_smallest_for_the_deepest_bubble() {
    let pp = p92();
    let sol = tower(200.0);
    let ladder = decompose_bubbles(&sol.profile, &pp, pp.round_value(), &DecomposeOptions::default()).unwrap();
    assert!(ladder.n_bubbles >= 3);
    let m: Vec<f64> = ladder.bubbles.iter().map(|b| b.misfit).collect();
    assert!(m[0] < m[m.len() - 1], "{m:?}");
}

#[test]
fn tower_energy_is_additive() {
    let pp = p92();
    let sol = tower(200.0);
    let rep = bubble_energy(&sol.profile, &pp, 1.0, pp.round_value()).unwrap();
    assert_eq!(rep.bubble_count, rep.per_bubble.len());
    let sum: f64 = rep.per_bubble.iter().sum::<f64>() + rep.remainder;
    assert!((sum - rep.energy).abs() < 1e-8 * rep.energy);
    for e in &rep.per_bubble {
        assert!((e / rep.single_bubble - 1.0).abs() < 0.25, "{rep:?}");
    }
    assert!((rep.quanta - rep.bubble_count as f64).abs() < 0.25);
}

#[test]
fn tower_energy_grows_with_depth() {
    let pp = p92();
    let ts = [30.0, 60.0, 100.0, 150.0, 200.0];
    let sols: Vec<_> = ts.iter().map(|&t| tower(t)).collect();
    let family: Vec<(f64, &_)> = ts.iter().zip(&sols).map(|(&t, s)| (t.exp(), &s.profile)).collect();
    let g = energy_growth_diag(&family, &pp, BETA, 1.0, pp.round_value(), ExecMode::Parallel).unwrap();
    assert!(g.monotone, "{g:?}");
    assert!(g.slope > 0.0);
    assert!(g.predicted_slope.unwrap() > 0.0);
}

#[test]
fn single_bubbles_have_bounded_lambda_invariant_energy() {
    let pp = p92();
    let k0 = pp.round_value();
    let lams = [1e2, 1e4, 1e8];
    let bubbles: Vec<_> = lams.iter().map(|&l| StandardBubble::new(&pp, l, k0).unwrap()).collect();
    let family: Vec<(f64, &StandardBubble)> = lams.iter().copied().zip(&bubbles).collect();
    let g = energy_growth_diag(&family, &pp, 4.0, 1e3, k0, ExecMode::Sequential).unwrap();
    assert!(g.relative_spread < 1e-8, "{g:?}");
    assert!(g.slope.abs() < 1e-6);
    let e4 = single_bubble_energy(&pp, 4.0 * k0).unwrap();
    let e1 = single_bubble_energy(&pp, k0).unwrap();
    assert!((e4 / e1 / 4f64.powf(-9.0 / 4.0) - 1.0).abs() < 1e-8);
}

#[test]
fn counts_on_even_solutions_of_the_sweep() {
    // T* near 4.84 and 29.12 from the continuation; one bubble per half at this depth
    let pp = p92();
    for (lo, hi) in [(4.6, 5.1), (28.8, 29.4)] {
        let o = NoncompactOptions::default();
        let xd = |t: f64| solve_noncompact_bvp(&pp, EPS, BETA, t, &o).map_or(f64::NAN, |s| s.xidot0);
        let t_star = sigmak_core::roots::brent(xd, lo, hi, 1e-13).unwrap();
        let sol = tower(t_star);
        let ladder = decompose_bubbles(&sol.profile, &pp, pp.round_value(), &DecomposeOptions::default()).unwrap();
        let np = predicted_bubble_count(&pp, BETA, ladder.ln_lambda).unwrap_or(0);
        assert!(np.abs_diff(ladder.n_bubbles) <= 1, "T* = {t_star}: {} vs {np}", ladder.n_bubbles);
    }
}
