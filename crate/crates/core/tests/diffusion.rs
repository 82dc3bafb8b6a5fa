use proptest::prelude::*;
use qfisher::densities::gaussian;
use qfisher::diffusion::{debruijn_check, DiffusionState};
use qfisher::minimizer::fit_q_gaussian;
use qfisher::zoo::zoo_member;
use qfisher::GridSpec;

const PAIRS: [(f64, f64); 4] = [(1.0, 2.0), (1.5, 2.0), (1.0, 3.0), (2.0, 2.0)];

#[test]
fn mass_is_conserved_over_many_steps() {
    let grid = GridSpec::line(-8.0, 8.0, 256).unwrap();
    for (m, beta) in PAIRS {
        let mut s = DiffusionState::new(gaussian(&grid, &[0.3], &[0.8]).unwrap(), m, beta).unwrap();
        for _ in 0..10_000 {
            s = s.step(0.9 * s.stable_dt()).unwrap();
        }
        assert!((s.density().total_mass() - 1.0).abs() < 1e-6);
        assert!(s.density().values().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn porous_medium_approaches_barenblatt() {
    let grid = GridSpec::line(-4.0, 4.0, 1024).unwrap();
    let init = gaussian(&grid, &[0.0], &[0.05]).unwrap();
    let s = DiffusionState::new(init, 2.0, 2.0).unwrap().advance_to(2.0, 0.9).unwrap();
    // (C - k x²)_+^{1/(m-1)} is the q-Gaussian of index m.
    let fit = fit_q_gaussian(s.density(), 2.0, 2.0, 2.0).unwrap();
    assert!(fit.l1_distance < 2e-2, "{}", fit.l1_distance);
}

#[test]
fn identity_error_shrinks_with_resolution() {
    let err = |n: usize| {
        let grid = GridSpec::line(-8.0, 8.0, n).unwrap();
        let s = DiffusionState::new(gaussian(&grid, &[0.0], &[1.0]).unwrap(), 1.5, 2.0).unwrap();
        let s = s.advance_to(0.05, 0.5).unwrap();
        debruijn_check(&s, 0.5 * s.stable_dt()).unwrap().0.rel_err
    };
    let (a, b) = (err(512), err(1024));
    assert!(b < a, "{a} -> {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn entropy_is_produced(
        member in 0usize..1000,
        pair in prop::sample::select(PAIRS.to_vec()),
    ) {
        let grid = GridSpec::line(-16.0, 16.0, 512).unwrap();
        let s = DiffusionState::new(zoo_member(&grid, member, 4).unwrap(), pair.0, pair.1).unwrap();
        let s = s.advance_to(0.01, 0.5).unwrap();
        let (sample, _) = debruijn_check(&s, 0.5 * s.stable_dt()).unwrap();
        prop_assert!(sample.lhs >= -1e-8 && sample.rhs >= 0.0, "{sample:?}");
    }
}
