//! Parametric families `θ ↦ f(·; θ)` sampled on a fixed grid.

use std::fmt;
use std::sync::Arc;

use crate::densities::{lp_norm, QGaussianParams};
use crate::error::{invalid, Result};
use crate::grid::{GridDensity, GridSpec, MAX_DIMS};

/// Relative finite-difference step in θ for generic families.
pub const THETA_STEP_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// `f(x; θ) = f(x - θ)`, so `∇_θ f = -∇_x f`.
    Translation,
    /// θ-derivatives by symmetric differences.
    Generic,
}

pub trait ParametricFamily: Send + Sync {
    fn grid(&self) -> &GridSpec;

    fn theta_dim(&self) -> usize;

    fn kind(&self) -> FamilyKind;

    /// Normalized density at `theta`.
    fn density_at(&self, theta: &[f64]) -> Result<GridDensity>;

    /// Characteristic magnitude of θ, scales finite-difference steps.
    fn theta_scale(&self) -> f64 {
        1.0
    }

    /// `∂f/∂θ_i` on the grid, one field per component.
    fn theta_gradient(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_theta(self.theta_dim(), theta)?;
        match self.kind() {
            FamilyKind::Translation => {
                let f = self.density_at(theta)?;
                Ok((0..self.theta_dim())
                    .map(|d| f.grid().gradient(f.values(), d).into_iter().map(|v| -v).collect())
                    .collect())
            }
            FamilyKind::Generic => {
                let h = THETA_STEP_REL * self.theta_scale();
                (0..self.theta_dim())
                    .map(|i| {
                        let coarse = symmetric_difference(self, theta, i, h)?;
                        let fine = symmetric_difference(self, theta, i, 0.5 * h)?;
                        Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
                    })
                    .collect()
            }
        }
    }
}

fn check_theta(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return Err(invalid(format!("theta has {} components, family expects {dim}", theta.len())));
    }
    Ok(())
}

fn symmetric_difference<F: ParametricFamily + ?Sized>(fam: &F, theta: &[f64], i: usize, h: f64) -> Result<Vec<f64>> {
    let mut up = theta.to_vec();
    let mut down = theta.to_vec();
    up[i] += h;
    down[i] -= h;
    let fu = fam.density_at(&up)?;
    let fd = fam.density_at(&down)?;
    Ok(fu.values().iter().zip(fd.values()).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

pub type Shape = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Location family built from an unnormalized shape function on `R^n`.
#[derive(Clone)]
pub struct TranslationFamily {
    grid: GridSpec,
    shape: Shape,
}

impl fmt::Debug for TranslationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TranslationFamily").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl TranslationFamily {
    pub fn new(grid: GridSpec, shape: Shape) -> Self {
        Self { grid, shape }
    }

    /// Product Gaussian with per-axis standard deviations.
    pub fn gaussian(grid: GridSpec, sigma: &[f64]) -> Result<Self> {
        if sigma.len() != grid.dims() || sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("gaussian family needs one positive sigma per axis"));
        }
        let sigma = sigma.to_vec();
        Ok(Self::new(
            grid,
            Arc::new(move |x: &[f64]| {
                let e: f64 = x.iter().zip(&sigma).map(|(x, s)| (x / s).powi(2)).sum();
                (-0.5 * e).exp()
            }),
        ))
    }

    /// 1-D Laplace family `exp(-|x - θ| / scale)`.
    pub fn laplace(grid: GridSpec, scale: f64) -> Result<Self> {
        if grid.dims() != 1 || !(scale > 0.0) {
            return Err(invalid("laplace family is 1-D with positive scale"));
        }
        Ok(Self::new(grid, Arc::new(move |x: &[f64]| (-x[0].abs() / scale).exp())))
    }

    /// Smoothed Laplace `exp(-sqrt(1 + (x/scale)²))`.
    pub fn smoothed_laplace(grid: GridSpec, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(invalid("scale must be positive"));
        }
        Ok(Self::new(
            grid,
            Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|v| (v / scale).powi(2)).sum();
                (-(1.0 + r2).sqrt()).exp()
            }),
        ))
    }

    pub fn q_gaussian(grid: GridSpec, params: QGaussianParams) -> Result<Self> {
        params.validate()?;
        if params.dims != grid.dims() {
            return Err(invalid("q-Gaussian dimension differs from grid"));
        }
        Ok(Self::new(grid, Arc::new(move |x: &[f64]| params.profile(lp_norm(x, params.norm_p)))))
    }
}

impl ParametricFamily for TranslationFamily {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn theta_dim(&self) -> usize {
        self.grid.dims()
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::Translation
    }

    fn density_at(&self, theta: &[f64]) -> Result<GridDensity> {
        check_theta(self.theta_dim(), theta)?;
        let n = theta.len();
        GridDensity::from_fn(self.grid.clone(), |x| {
            let mut y = [0.0; MAX_DIMS];
            for d in 0..n {
                y[d] = x[d] - theta[d];
            }
            (self.shape)(&y[..n])
        })
    }
}

pub type Kernel = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Family given by an unnormalized kernel `(x, θ) ↦ f`, differentiated
/// numerically in θ.
#[derive(Clone)]
pub struct GenericFamily {
    grid: GridSpec,
    theta_dim: usize,
    scale: f64,
    kernel: Kernel,
}

impl fmt::Debug for GenericFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericFamily")
            .field("grid", &self.grid)
            .field("theta_dim", &self.theta_dim)
            .finish_non_exhaustive()
    }
}

impl GenericFamily {
    pub fn new(grid: GridSpec, theta_dim: usize, scale: f64, kernel: Kernel) -> Result<Self> {
        if theta_dim == 0 || !(scale > 0.0) {
            return Err(invalid("generic family needs theta_dim > 0 and a positive scale"));
        }
        Ok(Self {
            grid,
            theta_dim,
            scale,
            kernel,
        })
    }
}

impl ParametricFamily for GenericFamily {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::Generic
    }

    fn theta_scale(&self) -> f64 {
        self.scale
    }

    fn density_at(&self, theta: &[f64]) -> Result<GridDensity> {
        check_theta(self.theta_dim, theta)?;
        GridDensity::from_fn(self.grid.clone(), |x| (self.kernel)(x, theta))
    }
}
