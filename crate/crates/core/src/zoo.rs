//! Seeded test densities and wave functions that are not generalized
//! Gaussians: Gaussian mixtures, softplus-transformed smooth random fields
//! and skewed smoothed-Laplace shapes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::family::Shape;
use crate::grid::{GridDensity, GridSpec};

/// Numerically stable `ln(1 + e^v)`.
pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Sum of random cosines `Σ a_k cos(ω_k·x + φ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomField {
    dims: usize,
    terms: Vec<([f64; 3], f64, f64)>,
}

impl RandomField {
    pub fn new(dims: usize, terms: usize, max_freq: f64, rng: &mut impl Rng) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let mut w = [0.0; 3];
                for v in w.iter_mut().take(dims) {
                    *v = rng.random_range(-max_freq..max_freq);
                }
                (w, rng.random_range(0.3..1.0), rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Self { dims, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, a, p)| a * ((0..self.dims).map(|d| w[d] * x[d]).sum::<f64>() + p).cos())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZooKind {
    Mixture,
    SoftplusField,
    SkewedLaplace,
}

impl ZooKind {
    pub fn of(index: usize) -> Self {
        match index % 3 {
            0 => ZooKind::Mixture,
            1 => ZooKind::SoftplusField,
            _ => ZooKind::SkewedLaplace,
        }
    }
}

/// Unnormalized shape of zoo member `index`, centered near the origin and
/// decaying at least like `exp(-|x|/0.5)`.
pub fn zoo_shape(dims: usize, index: usize, seed: u64) -> Shape {
    let mut rng = member_rng(seed, index);
    match ZooKind::of(index) {
        ZooKind::Mixture => {
            let k = rng.random_range(2..=3);
            let comps: Vec<(f64, [f64; 3], f64)> = (0..k)
                .map(|_| {
                    let mut m = [0.0; 3];
                    for v in m.iter_mut().take(dims) {
                        *v = rng.random_range(-3.0..3.0);
                    }
                    (rng.random_range(0.4..1.0), m, rng.random_range(0.4..1.0))
                })
                .collect();
            Arc::new(move |x: &[f64]| {
                comps
                    .iter()
                    .map(|(w, m, s)| {
                        let r2: f64 = x.iter().zip(m).map(|(x, m)| (x - m).powi(2)).sum();
                        w * (-0.5 * r2 / (s * s)).exp() / s.powi(dims as i32)
                    })
                    .sum()
            })
        }
        ZooKind::SoftplusField => {
            let field = RandomField::new(dims, 4, 1.5, &mut rng);
            let amp = rng.random_range(2.0..4.0);
            Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                softplus(amp * field.eval(x)) * (-r2 / (2.0 * 1.5 * 1.5)).exp()
            })
        }
        ZooKind::SkewedLaplace => {
            let scale = rng.random_range(0.3..0.5);
            let skew = rng.random_range(1.0..3.0);
            Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|v| (v / scale).powi(2)).sum();
                (-(1.0 + r2).sqrt()).exp() * (1.2 + (skew * x[0]).tanh())
            })
        }
    }
}

pub fn zoo_member(grid: &GridSpec, index: usize, seed: u64) -> Result<GridDensity> {
    let shape = zoo_shape(grid.dims(), index, seed);
    GridDensity::from_fn(grid.clone(), |x| shape(x))
}

pub fn density_zoo(grid: &GridSpec, count: usize, seed: u64) -> Result<Vec<GridDensity>> {
    (0..count).map(|i| zoo_member(grid, i, seed)).collect()
}

/// Strictly positive random density: normalized softplus of a smooth field
/// under a Gaussian envelope of width `width`.
pub fn softplus_density(grid: &GridSpec, seed: u64, width: f64) -> Result<GridDensity> {
    let mut rng = member_rng(seed, 0);
    let field = RandomField::new(grid.dims(), 5, 1.2, &mut rng);
    GridDensity::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        softplus(2.0 * field.eval(x)) * (-r2 / (2.0 * width * width)).exp()
    })
}

/// Wave function samples for zoo member `index`: modulus `sqrt` of a zoo
/// density, with a smooth random phase on odd members.
pub fn wave_zoo_member(grid: &GridSpec, index: usize, seed: u64) -> Result<Vec<Complex64>> {
    let rho = zoo_member(grid, index, seed)?;
    let mut rng = member_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index);
    let phase = RandomField::new(grid.dims(), 3, 0.8, &mut rng);
    let chirp = if index % 2 == 1 { rng.random_range(0.5..2.0) } else { 0.0 };
    Ok(rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = grid.point(i);
            Complex64::from_polar(v.sqrt(), chirp * phase.eval(&x[..grid.dims()]))
        })
        .collect())
}
