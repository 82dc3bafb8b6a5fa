use qfisher::densities::{gaussian_mixture, make_q_gaussian, smooth_uniform, MixtureComponent, QGaussianParams};
use qfisher::minimizer::{minimize_q_fisher, MinimizationConfig, MinimizationStatus};
use qfisher::{GridDensity, GridSpec};

fn assert_monotone(trace: &[f64]) {
    let worst = trace.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
    // Rescaling to unit mass after each step leaves J unchanged up to a few ulps.
    assert!(worst <= 1e-14, "trace increased by {worst:e}");
}

#[test]
fn uniform_start_relaxes_to_gaussian() {
    let grid = GridSpec::line(-9.0, 9.0, 2048).unwrap();
    let init = smooth_uniform(&grid, 1.5, 0.05).unwrap();
    let r = minimize_q_fisher(&init, &MinimizationConfig::new(1.0, 2.0)).unwrap();
    assert_monotone(&r.trace);
    assert!(r.fit.l1_distance < 1e-2, "{:?} {}", r.status, r.fit.l1_distance);
    assert!(r.product >= 1.0 - 1e-2);
}

#[test]
fn q_gaussian_is_a_fixed_point() {
    let p = QGaussianParams::new(1.3, 2.0, 1.0, 1);
    let grid = GridSpec::line(-3.0, 3.0, 2048).unwrap();
    let init = make_q_gaussian(&p, &grid).unwrap();
    let r = minimize_q_fisher(&init, &MinimizationConfig::new(1.3, 2.0)).unwrap();
    let (first, last) = (r.trace[0], *r.trace.last().unwrap());
    assert!((first - last) / first < 1e-4, "{first} -> {last}");
}

#[test]
fn symmetric_start_stays_symmetric() {
    let grid = GridSpec::line(-6.0, 6.0, 1024).unwrap();
    let comps = |s: f64| MixtureComponent { weight: 1.0, mean: vec![s], sigma: 0.6 };
    let init = gaussian_mixture(&grid, &[comps(-1.2), comps(1.2)]).unwrap();
    let r = minimize_q_fisher(&init, &MinimizationConfig::new(1.5, 2.0)).unwrap();
    assert_monotone(&r.trace);
    let v = r.argmin.values();
    let max = r.argmin.max_value();
    let asym = (0..v.len()).map(|i| (v[i] - v[v.len() - 1 - i]).abs()).fold(0.0, f64::max);
    assert!(asym <= 1e-6 * max, "{asym}");
}

#[test]
fn cannot_beat_the_bound() {
    let grid = GridSpec::line(-6.0, 6.0, 1024).unwrap();
    for (q, alpha) in [(1.2, 2.0), (1.5, 3.0), (1.2, 1.5)] {
        let init = GridDensity::from_fn(grid.clone(), |x| (-(x[0] - 0.4).powi(2)).exp() + 0.5 * (-(x[0] + 1.0).powi(4)).exp()).unwrap();
        let r = minimize_q_fisher(&init, &MinimizationConfig::new(q, alpha)).unwrap();
        assert_monotone(&r.trace);
        assert!(r.product >= 1.0 - 1e-2, "q={q} alpha={alpha}: {}", r.product);
    }
}

#[test]
fn two_dimensional_run() {
    let grid = GridSpec::cube(2, 5.0, 64).unwrap();
    let init = GridDensity::from_fn(grid, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp()).unwrap();
    let r = minimize_q_fisher(&init, &MinimizationConfig::new(1.0, 2.0)).unwrap();
    assert_eq!(r.status, MinimizationStatus::Converged);
    assert!((r.product - 2.0).abs() < 1e-2, "{}", r.product);
}
