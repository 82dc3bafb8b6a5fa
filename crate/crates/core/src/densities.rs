//! Density constructors and functionals: generalized q-Gaussians, escort
//! transforms, moments, `M_q`, Tsallis entropy and coarse-graining.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, GridDensity, GridSpec};

/// Minimum number of nodes per axis inside a compact support.
pub const MIN_SUPPORT_POINTS: usize = 64;

/// Relative level of the integrand on the boundary above which a moment is
/// reported as truncated.
pub const MOMENT_TRUNCATION_REL: f64 = 1e-6;

const Q_ONE_EPS: f64 = 1e-12;

/// `‖x‖_p` for `p ≥ 1`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0].abs(),
        _ if p == 2.0 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        _ if p == 1.0 => x.iter().map(|v| v.abs()).sum(),
        _ => x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// Conjugate exponent `p / (p - 1)` of an L_p norm, `p ∈ (1, ∞)`.
pub fn dual_exponent(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(invalid(format!("norm exponent must lie in (1, inf), got {p}")));
    }
    Ok(p / (p - 1.0))
}

/// Hölder conjugate exponents with `1/alpha + 1/beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPair {
    alpha: f64,
    beta: f64,
}

impl HolderPair {
    /// Build from the moment exponent. `alpha = 1` (sup-norm dual) is rejected.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid(format!("Hölder exponent alpha must be finite and > 1, got {alpha}")));
        }
        Ok(Self {
            alpha,
            beta: alpha / (alpha - 1.0),
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        let pair = Self::from_alpha(dual_exponent(beta)?)?;
        Ok(Self { beta, ..pair })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Parameters of the generalized q-Gaussian
/// `(1 - gamma (q-1) ‖x‖^alpha)_+^{1/(q-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianParams {
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub dims: usize,
    /// Exponent of the norm `‖x‖`; 2 is Euclidean.
    pub norm_p: f64,
}

impl QGaussianParams {
    pub fn new(q: f64, alpha: f64, gamma: f64, dims: usize) -> Self {
        Self {
            q,
            alpha,
            gamma,
            dims,
            norm_p: 2.0,
        }
    }

    pub fn with_norm(mut self, p: f64) -> Self {
        self.norm_p = p;
        self
    }

    /// Smallest admissible entropic index, `max(0, 1 - alpha/n)`.
    pub fn integrability_bound(&self) -> f64 {
        (1.0 - self.alpha / self.dims as f64).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(invalid(format!("q must be positive, got {}", self.q)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(invalid(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.dims == 0 || self.dims > crate::grid::MAX_DIMS {
            return Err(invalid(format!("unsupported dimension {}", self.dims)));
        }
        if !(self.norm_p.is_finite() && self.norm_p >= 1.0) {
            return Err(invalid(format!("norm exponent must be >= 1, got {}", self.norm_p)));
        }
        let bound = self.integrability_bound();
        if self.q <= bound {
            return Err(Error::NonIntegrable {
                q: self.q,
                alpha: self.alpha,
                dims: self.dims,
                bound,
            });
        }
        Ok(())
    }

    /// Unnormalized profile as a function of `r = ‖x‖`.
    pub fn profile(&self, r: f64) -> f64 {
        let z = self.gamma * r.powf(self.alpha);
        let qm1 = self.q - 1.0;
        if qm1.abs() < Q_ONE_EPS {
            return (-z).exp();
        }
        let b = qm1 * z;
        if qm1 > 0.0 && b >= 1.0 {
            return 0.0;
        }
        ((-b).ln_1p() / qm1).exp()
    }

    /// Support radius for `q > 1`, `None` otherwise.
    pub fn support_radius(&self) -> Option<f64> {
        (self.q > 1.0 + Q_ONE_EPS)
            .then(|| (1.0 / (self.gamma * (self.q - 1.0))).powf(1.0 / self.alpha))
    }

    /// Radius where the profile falls to `level` of its peak.
    pub fn radius_at_level(&self, level: f64) -> f64 {
        if let Some(r) = self.support_radius() {
            return r;
        }
        let qm1 = self.q - 1.0;
        let z = if qm1.abs() < Q_ONE_EPS {
            -level.ln()
        } else {
            // (1 + (1-q) z)^{-1/(1-q)} = level
            (level.powf(qm1) - 1.0) / (-qm1)
        };
        (z / self.gamma).powf(1.0 / self.alpha)
    }

    /// A cube grid that contains the support (q > 1, with a 5% margin) or
    /// reaches the 1e-11 relative level (q ≤ 1).
    pub fn suggested_grid(&self, points: usize) -> Result<GridSpec> {
        self.validate()?;
        let half = match self.support_radius() {
            Some(r) => 1.05 * r,
            None => self.radius_at_level(1e-11),
        };
        GridSpec::cube(self.dims, half, points)
    }
}

/// Trapezoid integral of the unnormalized q-Gaussian profile on `grid`.
pub fn q_gaussian_normalizer(p: &QGaussianParams, grid: &GridSpec) -> Result<f64> {
    p.validate()?;
    let vals = grid.map_points(|x| p.profile(lp_norm(x, p.norm_p)));
    Ok(grid.integrate(&vals))
}

/// Normalized generalized q-Gaussian on `grid`.
pub fn make_q_gaussian(p: &QGaussianParams, grid: &GridSpec) -> Result<GridDensity> {
    p.validate()?;
    if grid.dims() != p.dims {
        return Err(Error::GridMismatch(format!(
            "q-Gaussian of dimension {} on a {}-dimensional grid",
            p.dims,
            grid.dims()
        )));
    }
    if let Some(r) = p.support_radius() {
        for (d, axis) in grid.axes().iter().enumerate() {
            let inside = axis.coords().iter().filter(|c| c.abs() <= r).count();
            if inside < MIN_SUPPORT_POINTS {
                return Err(Error::GridTooCoarse {
                    axis: d,
                    inside,
                    required: MIN_SUPPORT_POINTS,
                });
            }
        }
    }
    let density = GridDensity::from_fn(grid.clone(), |x| p.profile(lp_norm(x, p.norm_p)))?;
    if p.support_radius().is_none() {
        density.check_boundary(false)?;
    }
    Ok(density)
}

/// Escort density `g^q / ∫ g^q`.
pub fn escort(g: &GridDensity, q: f64) -> Result<GridDensity> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("escort order must be positive, got {q}")));
    }
    let powered: Vec<f64> = g.values().iter().map(|&v| pow_nonneg(v, q)).collect();
    let integral = g.grid().integrate(&powered);
    if !(integral.is_finite() && integral >= 1e-300) {
        return Err(Error::DegenerateEscort { q, integral });
    }
    Ok(GridDensity::from_normalized(
        g.grid().clone(),
        powered.into_iter().map(|v| v / integral).collect(),
    ))
}

/// `∫ ‖x - center‖_p^alpha g(x) dx`.
pub fn moment_about(g: &GridDensity, alpha: f64, norm_p: f64, center: &[f64]) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid(format!("moment order must be positive, got {alpha}")));
    }
    if !(norm_p.is_finite() && norm_p >= 1.0) {
        return Err(invalid(format!("norm exponent must be >= 1, got {norm_p}")));
    }
    if center.len() != g.dims() {
        return Err(invalid("moment center has the wrong dimension"));
    }
    let grid = g.grid();
    let integrand: Vec<f64> = grid
        .map_points(|x| {
            let mut y = [0.0; crate::grid::MAX_DIMS];
            for d in 0..x.len() {
                y[d] = x[d] - center[d];
            }
            lp_norm(&y[..x.len()], norm_p).powf(alpha)
        })
        .iter()
        .zip(g.values())
        .map(|(r, v)| r * v)
        .collect();
    let max = integrand.iter().copied().fold(0.0, f64::max);
    let edge = (0..integrand.len())
        .filter(|&i| grid.is_boundary(i))
        .map(|i| integrand[i])
        .fold(0.0, f64::max);
    if max > 0.0 && edge > MOMENT_TRUNCATION_REL * max {
        log::warn!(
            "moment of order {alpha} truncated: boundary integrand at {:e} of its maximum",
            edge / max
        );
    }
    Ok(grid.integrate(&integrand))
}

/// `m_alpha[g] = ∫ ‖x‖_p^alpha g(x) dx`.
pub fn moment(g: &GridDensity, alpha: f64, norm_p: f64) -> Result<f64> {
    moment_about(g, alpha, norm_p, &vec![0.0; g.dims()])
}

/// `M_q[g] = ∫ g^q`.
pub fn m_q_functional(g: &GridDensity, q: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("M_q needs q > 0, got {q}")));
    }
    let powered: Vec<f64> = g.values().iter().map(|&v| pow_nonneg(v, q)).collect();
    Ok(g.grid().integrate(&powered))
}

/// Tsallis entropy `(M_q - 1) / (1 - q)`; Shannon entropy `-∫ g ln g` at `q = 1`.
pub fn tsallis_entropy(g: &GridDensity, q: f64) -> Result<f64> {
    if q == 1.0 {
        let integrand: Vec<f64> = g
            .values()
            .iter()
            .map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 })
            .collect();
        return Ok(g.grid().integrate(&integrand));
    }
    Ok((m_q_functional(g, q)? - 1.0) / (1.0 - q))
}

/// Merge blocks of `factor` nodes per axis, preserving the mass of every
/// block. The output integrates to one as a sum identity.
pub fn coarse_grain(g: &GridDensity, factor: usize) -> Result<GridDensity> {
    if factor == 1 {
        return Ok(g.clone());
    }
    let (grid, values) = coarse_grain_field(g.grid(), g.values(), factor)?;
    Ok(GridDensity::from_normalized(grid, values))
}

/// Coarse-grain an arbitrary (possibly signed) node field the same way as
/// [`coarse_grain`]: block masses divided by the coarse trapezoid weights.
pub fn coarse_grain_field(grid: &GridSpec, values: &[f64], factor: usize) -> Result<(GridSpec, Vec<f64>)> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("field length differs from grid".into()));
    }
    let masses: Vec<f64> = grid.weights().iter().zip(values).map(|(w, v)| w * v).collect();
    let (coarse, block) = grid.coarse_grain_masses(&masses, factor)?;
    let w = coarse.weights();
    let vals = block.iter().zip(&w).map(|(m, w)| m / w).collect();
    Ok((coarse, vals))
}

#[inline]
pub(crate) fn pow_nonneg(v: f64, q: f64) -> f64 {
    if v > 0.0 {
        v.powf(q)
    } else {
        0.0
    }
}

// Common test and CLI shapes.

/// Product Gaussian with per-axis mean and standard deviation.
pub fn gaussian(grid: &GridSpec, mean: &[f64], sigma: &[f64]) -> Result<GridDensity> {
    if mean.len() != grid.dims() || sigma.len() != grid.dims() {
        return Err(invalid("gaussian mean/sigma must match the grid dimension"));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("gaussian sigma must be positive"));
    }
    GridDensity::from_fn(grid.clone(), |x| {
        let e: f64 = x
            .iter()
            .zip(mean)
            .zip(sigma)
            .map(|((x, m), s)| ((x - m) / s).powi(2))
            .sum();
        (-0.5 * e).exp()
    })
}

/// Standard normal on a 1-D grid.
pub fn standard_normal(grid: &GridSpec) -> Result<GridDensity> {
    gaussian(grid, &[0.0], &[1.0])
}

/// Laplace density `exp(-‖x - mean‖_1 / scale)`.
pub fn laplace(grid: &GridSpec, mean: &[f64], scale: f64) -> Result<GridDensity> {
    if mean.len() != grid.dims() || !(scale > 0.0) {
        return Err(invalid("laplace needs a matching mean and positive scale"));
    }
    GridDensity::from_fn(grid.clone(), |x| {
        let r: f64 = x.iter().zip(mean).map(|(x, m)| (x - m).abs()).sum();
        (-r / scale).exp()
    })
}

/// Uniform on `[-half, half]^n` with edges smoothed over width `eps`
/// (`eps = 0` gives the hard indicator).
pub fn smooth_uniform(grid: &GridSpec, half: f64, eps: f64) -> Result<GridDensity> {
    GridDensity::from_fn(grid.clone(), |x| {
        x.iter()
            .map(|&c| {
                if eps > 0.0 {
                    0.5 * (1.0 + ((half - c.abs()) / eps).tanh())
                } else if c.abs() <= half {
                    1.0
                } else {
                    0.0
                }
            })
            .product()
    })
}

/// One component of a Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: f64,
}

/// Isotropic Gaussian mixture.
pub fn gaussian_mixture(grid: &GridSpec, components: &[MixtureComponent]) -> Result<GridDensity> {
    let n = grid.dims();
    if components.is_empty() || components.iter().any(|c| c.mean.len() != n || !(c.sigma > 0.0) || !(c.weight > 0.0)) {
        return Err(invalid("mixture components need positive weights/sigmas and matching means"));
    }
    GridDensity::from_fn(grid.clone(), |x| {
        components
            .iter()
            .map(|c| {
                let r2: f64 = x.iter().zip(&c.mean).map(|(x, m)| (x - m).powi(2)).sum();
                c.weight * (-0.5 * r2 / (c.sigma * c.sigma)).exp() / c.sigma.powi(n as i32)
            })
            .sum()
    })
}

/// Symmetric two-bump mixture at `±offset` with unit-width components.
pub fn bimodal(grid: &GridSpec, offset: f64) -> Result<GridDensity> {
    let mut a = vec![0.0; grid.dims()];
    let mut b = vec![0.0; grid.dims()];
    a[0] = -offset;
    b[0] = offset;
    gaussian_mixture(
        grid,
        &[
            MixtureComponent { weight: 0.5, mean: a, sigma: 1.0 },
            MixtureComponent { weight: 0.5, mean: b, sigma: 1.0 },
        ],
    )
}

/// Axis helper for symmetric grids used throughout the tests.
pub fn symmetric_line(half: f64, points: usize) -> Result<GridSpec> {
    GridSpec::new(vec![Axis::symmetric(half, points)?])
}
