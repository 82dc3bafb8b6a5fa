//! Unitary Fourier transform on uniform grids and the generalized
//! uncertainty relation
//! `(M_{k/2}^{1/2} / M_{kq/2}) E_{k/2}[‖x‖^γ]^{1/γ} E[‖ξ‖^θ]^{1/θ} ≥ n / (2π k q)`
//! for `ρ = |ψ|²`, with `k = β / (β(q-1) + 1)`.
//!
//! The transform uses the kernel `e^{-2πi x·ξ}` (ordinary frequency), so a
//! Gaussian with `|ψ|² = N(0, σ²)` maps to `|ψ̂|² = N(0, 1/(16π²σ²))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cramer_rao::BoundReport;
use crate::densities::{escort, m_q_functional, moment};
use crate::error::{invalid, Result};
use crate::grid::{Axis, GridDensity, GridSpec};

/// Tolerance on `‖ψ‖₂ = 1`.
pub const NORM_TOL: f64 = 1e-9;

/// Spectral mass in the outer tenth of the frequency band above which the
/// transform is considered aliased.
pub const ALIASING_TAIL: f64 = 1e-6;

/// Relative gap under which the uncertainty bound counts as saturated.
pub const UNCERTAINTY_SATURATION: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl WaveFunction {
    /// Wrap samples whose `L²` norm is already one.
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("wave function length does not match the grid"));
        }
        let psi = Self { grid, values };
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("wave function norm is {norm}, expected 1")));
        }
        Ok(psi)
    }

    /// Rescale samples to unit `L²` norm.
    pub fn normalized(grid: GridSpec, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("wave function length does not match the grid"));
        }
        let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        let norm = grid.integrate(&sq).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("wave function has zero or infinite norm"));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { grid, values })
    }

    /// Real nonnegative wave function `sqrt(ρ)`.
    pub fn from_density(rho: &GridDensity) -> Result<Self> {
        let values = rho.values().iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect();
        Self::normalized(rho.grid().clone(), values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate(&sq).sqrt()
    }

    /// `|ψ|²` as a density.
    pub fn density(&self) -> Result<GridDensity> {
        GridDensity::from_values(self.grid.clone(), self.values.iter().map(|v| v.norm_sqr()).collect())
    }

    /// Probability of the outer tenth of every axis.
    pub fn tail_mass(&self) -> f64 {
        let shape = self.grid.shape();
        let w = self.grid.weights();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let idx = self.grid.unravel(i);
            let outer = (0..shape.len()).any(|d| {
                let band = (shape[d] / 10).max(1);
                idx[d] < band || idx[d] >= shape[d] - band
            });
            let m = w[i] * v.norm_sqr();
            total += m;
            if outer {
                tail += m;
            }
        }
        tail / total
    }
}

/// Cube grid whose axes are self-dual under [`frequency_axis`] when
/// `step = 1/sqrt(points)`: `points` nodes spaced `step` from
/// `-points·step/2`.
pub fn fft_grid(dims: usize, points: usize, step: f64) -> Result<GridSpec> {
    let lo = -(points as f64) * step / 2.0;
    let axis = Axis::new(lo, lo + (points - 1) as f64 * step, points)?;
    GridSpec::new(vec![axis; dims])
}

/// Frequency axis conjugate to `axis`: `N` points spaced `1/(N dx)`,
/// running from `-1/(2dx)`.
pub fn frequency_axis(axis: &Axis) -> Result<Axis> {
    let n = axis.points;
    let dxi = 1.0 / (n as f64 * axis.step());
    let lo = -(n as f64 / 2.0).floor() * dxi;
    Axis::new(lo, lo + (n - 1) as f64 * dxi, n)
}

/// `ψ̂(ξ) = ∫ ψ(x) e^{-2πi x·ξ} dx` on the conjugate grid, axis by axis.
/// Logs a warning when the spectrum is not resolved.
pub fn fourier_transform(psi: &WaveFunction) -> Result<WaveFunction> {
    let grid = psi.grid();
    let axes = grid.axes();
    let freq_axes = axes.iter().map(frequency_axis).collect::<Result<Vec<_>>>()?;
    let mut data = psi.values.clone();
    let mut planner = FftPlanner::<f64>::new();
    for (d, (ax, fx)) in axes.iter().zip(&freq_axes).enumerate() {
        let n = ax.points;
        let stride = grid.stride(d);
        let fft = planner.plan_fft_forward(n);
        let x0 = ax.coord(0);
        let xi0 = fx.coord(0);
        // ξ_k = xi0 + k dξ with xi0 dx N = -floor(N/2), so the phase splits
        // into a pre-twiddle in j and a post-twiddle in k.
        let pre: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * xi0 * j as f64 * ax.step()))
            .collect();
        let post: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(ax.step(), -2.0 * PI * x0 * fx.coord(k)))
            .collect();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let total = data.len();
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for j in 0..n {
                    line[j] = data[base + j * stride] * pre[j];
                }
                fft.process(&mut line);
                for k in 0..n {
                    data[base + k * stride] = line[k] * post[k];
                }
            }
        }
    }
    let out = WaveFunction {
        grid: GridSpec::new(freq_axes)?,
        values: data,
    };
    let tail = out.tail_mass();
    if tail > ALIASING_TAIL {
        log::warn!("spectrum not resolved: {tail:e} of the mass sits in the outer frequency band");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyParams {
    pub q: f64,
    pub beta: f64,
    pub gamma_exp: f64,
    pub theta_exp: f64,
}

impl UncertaintyParams {
    pub fn new(q: f64, beta: f64, gamma_exp: f64, theta_exp: f64) -> Result<Self> {
        let p = Self {
            q,
            beta,
            gamma_exp,
            theta_exp,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(invalid(format!("q must be positive, got {}", self.q)));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(invalid(format!("beta must exceed 1, got {}", self.beta)));
        }
        if self.beta * (self.q - 1.0) + 1.0 <= 0.0 {
            return Err(invalid("need beta (q - 1) + 1 > 0"));
        }
        if !(self.gamma_exp >= 2.0 && self.theta_exp >= 2.0) {
            return Err(invalid("moment exponents gamma and theta must be >= 2"));
        }
        Ok(())
    }

    /// `k = β / (β(q-1) + 1)`.
    pub fn k(&self) -> f64 {
        self.beta / (self.beta * (self.q - 1.0) + 1.0)
    }

    /// `λ = n(q-1) + 1`.
    pub fn lambda(&self, dims: usize) -> f64 {
        dims as f64 * (self.q - 1.0) + 1.0
    }

    /// Entropic index of the density `|ψ|²` that saturates the bound at
    /// `β = 2`, `γ = θ = 2`.
    pub fn matched_modulus_index(&self) -> f64 {
        1.0 + (self.q - 1.0) / (2.0 * self.q - 1.0)
    }
}

/// Both sides of the uncertainty relation for `ψ`.
pub fn uncertainty_check(psi: &WaveFunction, p: &UncertaintyParams) -> Result<BoundReport> {
    p.validate()?;
    let n = psi.grid().dims();
    let rho = psi.density()?;
    let k = p.k();
    let ratio = m_q_functional(&rho, k / 2.0)?.sqrt() / m_q_functional(&rho, k * p.q / 2.0)?;
    let x_mom = moment(&escort(&rho, k / 2.0)?, p.gamma_exp, 2.0)?.powf(1.0 / p.gamma_exp);
    let spectrum = fourier_transform(psi)?.density()?;
    let xi_mom = moment(&spectrum, p.theta_exp, 2.0)?.powf(1.0 / p.theta_exp);
    let lhs = ratio * x_mom * xi_mom;
    let rhs = n as f64 / (2.0 * PI * k * p.q);
    let saturated = (lhs - rhs).abs() <= UNCERTAINTY_SATURATION * rhs;
    Ok(BoundReport::new(lhs, rhs, saturated))
}
