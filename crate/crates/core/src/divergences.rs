//! The χ^β divergence, its g-averaged form χ_g^β and the Hölder bound on
//! differences of expectations.
//!
//! On a grid every term `w |f2 - f1|^β / g^{β-1}` only depends on the node
//! masses `w f`, so the discrete divergence is a sum of jointly convex,
//! positively homogeneous terms. Merging nodes can therefore only decrease it,
//! which is what makes the coarse-graining checks exact rather than
//! approximate.

use serde::{Deserialize, Serialize};

use crate::densities::HolderPair;
use crate::error::{invalid, Error, Result};
use crate::grid::GridDensity;

/// Relative level below which a density counts as vanishing.
pub const SUPPORT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// `g = f2`
    Standard,
    /// explicit `g`
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    pub value: f64,
    pub beta: f64,
    pub averaging: Averaging,
}

/// `χ^β(f1, f2) = E_{f2}[|1 - f1/f2|^β]`.
pub fn chi_beta(f1: &GridDensity, f2: &GridDensity, beta: f64) -> Result<DivergenceResult> {
    let value = chi_sum(f1, f2, f2, beta)?;
    Ok(DivergenceResult {
        value,
        beta,
        averaging: Averaging::Standard,
    })
}

/// `χ_g^β(f1, f2) = E_g[|(f2 - f1)/g|^β]`.
pub fn chi_beta_g(f1: &GridDensity, f2: &GridDensity, g: &GridDensity, beta: f64) -> Result<DivergenceResult> {
    let value = chi_sum(f1, f2, g, beta)?;
    Ok(DivergenceResult {
        value,
        beta,
        averaging: Averaging::Modified,
    })
}

fn chi_sum(f1: &GridDensity, f2: &GridDensity, g: &GridDensity, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 1.0) {
        return Err(invalid(format!("beta must be > 1, got {beta}")));
    }
    f1.grid().ensure_same(f2.grid())?;
    f1.grid().ensure_same(g.grid())?;
    // Tails of g are kept however small; only cells where g underflows are
    // masked, and those must not carry any difference.
    let num_tol = SUPPORT_REL_TOL * f1.max_value().max(f2.max_value());
    let weights = g.grid().weights();
    let mut total = 0.0;
    let mut mismatched = 0;
    for (((w, a), b), gv) in weights.iter().zip(f1.values()).zip(f2.values()).zip(g.values()) {
        let diff = (b - a).abs();
        if *gv <= 1e-300 {
            if diff > num_tol {
                mismatched += 1;
            }
            continue;
        }
        if diff > 0.0 {
            total += w * diff.powf(beta) * gv.powf(1.0 - beta);
        }
    }
    if mismatched > 0 {
        return Err(Error::SupportMismatch { cells: mismatched });
    }
    Ok(total)
}

/// Both sides of `|E_{f2}[T] - E_{f1}[T]| ≤ E_g[|T|^α]^{1/α} χ_g^β(f1,f2)^{1/β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Evaluate the Hölder bound for a statistic `t` sampled on the grid.
pub fn holder_statistic_bound(
    t: &[f64],
    f1: &GridDensity,
    f2: &GridDensity,
    g: &GridDensity,
    pair: HolderPair,
) -> Result<HolderBound> {
    if t.len() != g.grid().len() {
        return Err(Error::GridMismatch("statistic length differs from grid".into()));
    }
    let chi = chi_beta_g(f1, f2, g, pair.beta())?.value;
    let lhs = (f2.expect(t) - f1.expect(t)).abs();
    let abs_pow: Vec<f64> = t.iter().map(|v| v.abs().powf(pair.alpha())).collect();
    let rhs = g.expect(&abs_pow).powf(1.0 / pair.alpha()) * chi.powf(1.0 / pair.beta());
    Ok(HolderBound { lhs, rhs })
}
