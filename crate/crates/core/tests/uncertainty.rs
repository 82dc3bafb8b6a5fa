use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use qfisher::densities::{bimodal, gaussian};
use qfisher::uncertainty::*;
use qfisher::zoo::wave_zoo_member;
use qfisher::GridSpec;

fn line() -> GridSpec {
    fft_grid(1, 2048, 1.0 / 45.0).unwrap()
}

#[test]
fn shift_only_changes_the_phase() {
    let grid = line();
    let spectrum = |mu: f64| {
        let psi = WaveFunction::from_density(&gaussian(&grid, &[mu], &[0.9]).unwrap()).unwrap();
        fourier_transform(&psi).unwrap().density().unwrap()
    };
    assert!(spectrum(0.0).l1_distance(&spectrum(2.3)).unwrap() < 1e-9);
}

#[test]
fn bimodal_is_strict() {
    let grid = line();
    let psi = WaveFunction::from_density(&bimodal(&grid, 2.5).unwrap()).unwrap();
    let r = uncertainty_check(&psi, &UncertaintyParams::new(1.0, 2.0, 2.0, 2.0).unwrap()).unwrap();
    assert!(r.margin > 1e-2 && !r.saturated, "{r:?}");
}

#[test]
fn separable_transform_in_two_dimensions() {
    let grid = fft_grid(2, 192, 0.1).unwrap();
    let psi = WaveFunction::from_density(&gaussian(&grid, &[0.2, -0.3], &[0.8, 1.2]).unwrap()).unwrap();
    let hat = fourier_transform(&psi).unwrap();
    assert_relative_eq!(hat.norm(), 1.0, epsilon = 1e-9);
    let expect = gaussian(hat.grid(), &[0.0, 0.0], &[1.0 / (4.0 * std::f64::consts::PI * 0.8), 1.0 / (4.0 * std::f64::consts::PI * 1.2)]).unwrap();
    assert!(hat.density().unwrap().l1_distance(&expect).unwrap() < 1e-6);
    let r = uncertainty_check(&WaveFunction::from_density(&gaussian(&grid, &[0.0, 0.0], &[1.0, 1.0]).unwrap()).unwrap(), &UncertaintyParams::new(1.0, 2.0, 2.0, 2.0).unwrap()).unwrap();
    assert_relative_eq!(r.rhs, 2.0 / (4.0 * std::f64::consts::PI), epsilon = 1e-15);
    assert!(r.margin >= -1e-6);
}

#[test]
fn wave_functions_must_be_normalized() {
    let grid = line();
    assert!(WaveFunction::new(grid.clone(), vec![Complex64::new(0.5, 0.0); grid.len()]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transform_is_unitary(member in 0usize..10_000) {
        let grid = line();
        let psi = WaveFunction::normalized(grid.clone(), wave_zoo_member(&grid, member, 12).unwrap()).unwrap();
        let hat = fourier_transform(&psi).unwrap();
        prop_assert!((hat.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dilation_leaves_the_product_unchanged(
        member in 0usize..10_000,
        s in 0.7f64..1.4,
        q in prop::sample::select(vec![0.9, 1.0, 1.1]),
        gamma in prop::sample::select(vec![2.0, 3.0]),
    ) {
        let grid = fft_grid(1, 4096, 1.0 / 64.0).unwrap();
        let p = UncertaintyParams::new(q, 2.0, gamma, 2.0).unwrap();
        let values = wave_zoo_member(&grid, member, 13).unwrap();
        // s^{1/2} ψ(s x), sampled by placing the same values on a grid
        // scaled by 1/s.
        let a = uncertainty_check(&WaveFunction::normalized(grid.clone(), values.clone()).unwrap(), &p).unwrap();
        let scaled = fft_grid(1, 4096, 1.0 / (64.0 * s)).unwrap();
        let b = uncertainty_check(&WaveFunction::normalized(scaled, values).unwrap(), &p).unwrap();
        prop_assert!((a.lhs - b.lhs).abs() <= 1e-3 * a.lhs, "{} vs {}", a.lhs, b.lhs);
        prop_assert!(a.margin >= -1e-6);
    }
}
