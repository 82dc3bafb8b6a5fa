use approx::assert_relative_eq;
use proptest::prelude::*;
use qfisher::densities::{escort, make_q_gaussian, moment_about, QGaussianParams};
use qfisher::family::{ParametricFamily, TranslationFamily};
use qfisher::fisher::*;
use qfisher::zoo::{softplus_density, zoo_member, zoo_shape};
use qfisher::GridSpec;

#[test]
fn laplace_score_is_a_sign() {
    let fam = TranslationFamily::laplace(GridSpec::line(-30.0, 30.0, 60_001).unwrap(), 1.0).unwrap();
    let f = fam.density_at(&[0.0]).unwrap();
    let i = generalized_fisher(&fam, &f, &[0.0], 2.0, 2.0).unwrap();
    assert_relative_eq!(i, 1.0, epsilon = 1e-2);
}

#[test]
fn chi2_limit_matches_information_across_families() {
    let grid = GridSpec::line(-12.0, 12.0, 4096).unwrap();
    let families = [
        TranslationFamily::gaussian(grid.clone(), &[1.0]).unwrap(),
        TranslationFamily::smoothed_laplace(grid.clone(), 0.8).unwrap(),
        TranslationFamily::q_gaussian(grid.clone(), QGaussianParams::new(0.8, 2.0, 1.0, 1)).unwrap(),
    ];
    for fam in &families {
        let r = chi2_limit_check(fam, None, &[0.0], 2.0, &[0.2, 0.1, 0.05]).unwrap();
        assert!(r.max_rel_err < 1e-2, "{r:?}");
        // |t|^β symmetry
        let up = chi2_limit_check(fam, None, &[0.0], 2.0, &[0.1, 0.05]).unwrap();
        let down_theta = fam.density_at(&[-0.1]).unwrap();
        let base = fam.density_at(&[0.0]).unwrap();
        let down = qfisher::divergences::chi_beta(&down_theta, &base, 2.0).unwrap().value / 0.01;
        assert_relative_eq!(up.sequences[0][0], down, max_relative = 1e-9);
    }
}

#[test]
fn anisotropic_matrix_is_inverse_variance() {
    let fam = TranslationFamily::gaussian(GridSpec::cube(2, 8.0, 321).unwrap(), &[1.0, 0.5]).unwrap();
    let f = fam.density_at(&[0.0, 0.0]).unwrap();
    let m = fisher_matrix(&fam, &f, &[0.0, 0.0]).unwrap();
    assert_relative_eq!(m.get(0, 0), 1.0, epsilon = 1e-3);
    assert_relative_eq!(m.get(1, 1), 4.0, epsilon = 4e-3);
    assert!(m.get(0, 1).abs() < 1e-9);
}

#[test]
fn data_processing_on_gaussians() {
    let fam = TranslationFamily::gaussian(GridSpec::line(-10.0, 10.0, 2048).unwrap(), &[1.0]).unwrap();
    let f = fam.density_at(&[0.0]).unwrap();
    assert!(fisher_matrix_data_processing(&fam, &f, &[0.0], 4).unwrap().psd_margin >= 0.0);
    let fam = TranslationFamily::gaussian(GridSpec::cube(2, 7.0, 128).unwrap(), &[1.0, 0.7]).unwrap();
    let f = fam.density_at(&[0.0, 0.0]).unwrap();
    assert!(fisher_matrix_data_processing(&fam, &f, &[0.0, 0.0], 2).unwrap().psd_margin >= 0.0);
}

#[test]
fn escort_pair_consistency_across_q() {
    let grid = GridSpec::line(-12.0, 12.0, 4096).unwrap();
    for q in [0.8, 1.0, 1.2, 1.5] {
        let fam = TranslationFamily::smoothed_laplace(grid.clone(), 0.7).unwrap();
        let f = fam.density_at(&[0.0]).unwrap();
        // f and g = escort(f, 1/q) form an escort pair, so f is g's order-q escort.
        let g = escort(&f, 1.0 / q).unwrap();
        let a = generalized_fisher(&fam, &g, &[0.0], 2.0, 2.0).unwrap();
        let b = q_fisher(&g, 2.0, q, 2.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
    }
}

#[test]
fn matrices_are_psd_on_the_zoo() {
    let grid = GridSpec::cube(2, 7.0, 96).unwrap();
    for i in 0..12 {
        let fam = TranslationFamily::new(grid.clone(), zoo_shape(2, i, 31));
        let g = softplus_density(&grid, i as u64, 2.5).unwrap();
        let m = fisher_matrix(&fam, &g, &[0.0, 0.0]).unwrap();
        assert!(m.min_eigenvalue() >= -1e-12, "member {i}: {:?}", m.eigenvalues());
    }
}

fn scale_free_product(g: &qfisher::GridDensity, q: f64, alpha: f64) -> f64 {
    let beta = alpha / (alpha - 1.0);
    let m = moment_about(g, alpha, 2.0, &escort(g, q).unwrap().mean()).unwrap();
    m.powf(beta / alpha) * q_fisher(g, beta, q, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn product_is_dilation_invariant(
        member in 0usize..200,
        s in 0.5f64..2.0,
        q in prop::sample::select(vec![0.8, 1.0, 1.2, 1.5]),
        alpha in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let g = zoo_member(&GridSpec::line(-16.0, 16.0, 4096).unwrap(), member, 9).unwrap();
        let a = scale_free_product(&g, q, alpha);
        let b = scale_free_product(&g.affine_pushforward(s, 0.0).unwrap(), q, alpha);
        prop_assert!((a - b).abs() <= 1e-3 * a, "{a} vs {b}");
    }

    #[test]
    fn q_fisher_of_q_gaussian_is_finite(q in 0.7f64..1.8, alpha in 1.5f64..3.0) {
        let p = QGaussianParams::new(q, alpha, 1.0, 1);
        let g = make_q_gaussian(&p, &p.suggested_grid(2048).unwrap()).unwrap();
        let v = q_fisher(&g, alpha / (alpha - 1.0), q, 2.0).unwrap();
        prop_assert!(v.is_finite() && v > 0.0);
    }
}
