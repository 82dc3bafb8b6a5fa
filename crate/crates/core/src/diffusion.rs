//! Explicit finite-volume solver for `∂f/∂t = ∂_x(|∂_x f^m|^{β-2} ∂_x f^m)`
//! in one dimension, and the entropy-production identity
//! `dS_q/dt = (m/q)^{β-1} M_q^β I_{β,q}` with `q = m + 1 - α/β`.
//!
//! Control volumes are the trapezoid weights of the grid (half cells at the
//! ends) with zero flux through the outer faces, so the trapezoid mass is
//! conserved up to rounding.

use serde::{Deserialize, Serialize};

use crate::densities::tsallis_entropy;
use crate::divergences::SUPPORT_REL_TOL;
use crate::error::{invalid, Error, Result};
use crate::fisher::{q_fisher_detailed, EXCLUSION_LAYER};
use crate::grid::GridDensity;

/// Fraction of `dx² / max D_eff` used as the stability bound.
pub const STABILITY_FACTOR: f64 = 0.4;

/// Values below `-NEGATIVE_TOL × max f` after a step signal instability.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    density: GridDensity,
    t: f64,
    m: f64,
    beta: f64,
}

impl DiffusionState {
    pub fn new(density: GridDensity, m: f64, beta: f64) -> Result<Self> {
        if density.dims() != 1 {
            return Err(invalid("the diffusion solver is one-dimensional"));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(invalid(format!("m must be positive, got {m}")));
        }
        // β < 2 makes the diffusivity singular where ∂f^m vanishes, which an
        // explicit scheme cannot step.
        if !(beta.is_finite() && beta >= 2.0) {
            return Err(invalid(format!("the explicit scheme needs beta >= 2, got {beta}")));
        }
        Ok(Self {
            density,
            t: 0.0,
            m,
            beta,
        })
    }

    pub fn density(&self) -> &GridDensity {
        &self.density
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Hölder conjugate of β.
    pub fn alpha(&self) -> f64 {
        self.beta / (self.beta - 1.0)
    }

    /// `q = m + 1 - α/β`.
    pub fn q(&self) -> f64 {
        self.m + 1.0 - self.alpha() / self.beta
    }

    fn faces(&self) -> (f64, Vec<f64>) {
        let dx = self.density.grid().steps()[0];
        let u: Vec<f64> = self.density.values().iter().map(|f| f.powf(self.m)).collect();
        let du = u.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        (dx, du)
    }

    /// `STABILITY_FACTOR · dx² / max D_eff`, with the linearized diffusivity
    /// `D_eff = (β-1)|∂f^m|^{β-2} m f^{m-1}` evaluated on every face.
    pub fn stable_dt(&self) -> f64 {
        let (dx, du) = self.faces();
        let f = self.density.values();
        let mut d_max: f64 = 0.0;
        for (i, d) in du.iter().enumerate() {
            let face = if self.m >= 1.0 { f[i].max(f[i + 1]) } else { f[i].min(f[i + 1]) };
            let grad = if self.beta == 2.0 { 1.0 } else { d.abs().powf(self.beta - 2.0) };
            d_max = d_max.max((self.beta - 1.0) * grad * self.m * face.powf(self.m - 1.0));
        }
        if d_max > 0.0 {
            STABILITY_FACTOR * dx * dx / d_max
        } else {
            f64::INFINITY
        }
    }

    /// One explicit step of length `dt`.
    pub fn step(&self, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be finite and nonnegative, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(self.clone());
        }
        let (_, du) = self.faces();
        let flux: Vec<f64> = du
            .iter()
            .map(|d| if self.beta == 2.0 { *d } else { d.abs().powf(self.beta - 2.0) * d })
            .collect();
        let w = self.density.grid().weights();
        let f = self.density.values();
        let n = f.len();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            next.push(f[i] + dt * (right - left) / w[i]);
        }
        let min = next.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_TOL * self.density.max_value() {
            return Err(Error::UnstableStep { min });
        }
        next.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(Self {
            density: GridDensity::from_normalized(self.density.grid().clone(), next),
            t: self.t + dt,
            m: self.m,
            beta: self.beta,
        })
    }

    /// Advance to `t_end` with steps of `fraction × stable_dt`.
    pub fn advance_to(&self, t_end: f64, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid("step fraction must lie in (0, 1]"));
        }
        let mut s = self.clone();
        while s.t < t_end {
            let dt = (fraction * s.stable_dt()).min(t_end - s.t);
            s = s.step(dt)?;
        }
        Ok(s)
    }

    pub fn entropy(&self) -> Result<f64> {
        tsallis_entropy(&self.density, self.q())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeBruijnSample {
    /// Time at which both sides are compared.
    pub t: f64,
    pub s_q: f64,
    pub m_q: f64,
    pub i_bq: f64,
    /// Centered difference of `S_q`.
    pub lhs: f64,
    /// `(m/q)^{β-1} M_q^β I_{β,q}`.
    pub rhs: f64,
    pub rel_err: f64,
    pub mass: f64,
    /// Mass of the cells left out of `I_{β,q}`.
    pub excluded_mass: f64,
}

/// Compare both sides of the identity at `state.time() + dt`: two steps of
/// length `dt` give the centered difference of `S_q`, the middle state the
/// right side. Returns the sample and the state after the first step.
pub fn debruijn_check(state: &DiffusionState, dt: f64) -> Result<(DeBruijnSample, DiffusionState)> {
    if !(dt > 0.0) {
        return Err(invalid("de Bruijn check needs a positive time step"));
    }
    let mid = state.step(dt)?;
    let end = mid.step(dt)?;
    let q = state.q();
    let lhs = (end.entropy()? - state.entropy()?) / (2.0 * dt);
    let beta = state.beta;
    let qf = q_fisher_detailed(&mid.density, beta, q, 2.0, SUPPORT_REL_TOL, EXCLUSION_LAYER)?;
    let rhs = (state.m / q).powf(beta - 1.0) * qf.m_q.powf(beta) * qf.value;
    let sample = DeBruijnSample {
        t: mid.t,
        s_q: mid.entropy()?,
        m_q: qf.m_q,
        i_bq: qf.value,
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / rhs.abs().max(1e-300),
        mass: mid.density.total_mass(),
        excluded_mass: qf.excluded_mass,
    };
    Ok((sample, mid))
}

/// Run to `t_final`, sampling the identity every `every` (in time) with
/// steps of `fraction × stable_dt`.
pub fn debruijn_series(initial: &DiffusionState, t_final: f64, every: f64, fraction: f64) -> Result<Vec<DeBruijnSample>> {
    if !(every > 0.0 && t_final > 0.0) {
        return Err(invalid("sampling interval and final time must be positive"));
    }
    let mut out = Vec::new();
    let mut state = initial.clone();
    let mut next = every;
    while next <= t_final * (1.0 + 1e-12) {
        state = state.advance_to(next, fraction)?;
        let dt = fraction * state.stable_dt();
        let (sample, _) = debruijn_check(&state, dt)?;
        out.push(sample);
        next += every;
    }
    Ok(out)
}
