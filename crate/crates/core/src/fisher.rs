//! Generalized Fisher informations.
//!
//! * [`generalized_fisher`]: `E_g[‖∇_θ f / g‖_p^β]`, the g-averaged form;
//!   with `g = f` and scalar θ it is Vajda's `E_f[|ḟ/f|^β]`.
//! * [`q_fisher`]: the (β,q) information of a single density,
//!   `(q/M_q)^β E_g[g^{β(q-1)} ‖∇ ln g‖_*^β]`.
//! * [`fisher_matrix`]: `E_g[ψ_g ψ_gᵀ]` with the score `ψ_g = ∇_θ f / g`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::densities::{dual_exponent, lp_norm, m_q_functional};
use crate::divergences::{chi_beta_g, SUPPORT_REL_TOL};
use crate::error::{invalid, Error, Result};
use crate::family::ParametricFamily;
use crate::grid::{GridDensity, MAX_DIMS};

/// Score gradients below this fraction of their maximum are tolerated where
/// the averaging density vanishes.
pub const SCORE_SUPPORT_REL_TOL: f64 = 1e-8;

/// Boundary cells dropped next to a vanishing density in [`q_fisher`].
pub const EXCLUSION_LAYER: usize = 2;

/// Cauchy tolerance of the χ^β limit sequence.
pub const LIMIT_CAUCHY_TOL: f64 = 1e-2;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 1.0) {
        return Err(invalid(format!("beta must be > 1, got {beta}")));
    }
    Ok(())
}

/// Cells where `g` is usable as an averaging density; fails when the
/// gradient carries mass where `g` vanishes.
pub(crate) fn score_support(grad: &[Vec<f64>], g: &GridDensity) -> Result<Vec<bool>> {
    let g_tol = (SUPPORT_REL_TOL * g.max_value()).max(1e-300);
    let norms: Vec<f64> = (0..g.values().len())
        .map(|i| grad.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect();
    let grad_tol = SCORE_SUPPORT_REL_TOL * norms.iter().copied().fold(0.0, f64::max);
    let mut bad = 0;
    let valid: Vec<bool> = g
        .values()
        .iter()
        .zip(&norms)
        .map(|(gv, n)| {
            let ok = *gv > g_tol;
            if !ok && *n > grad_tol {
                bad += 1;
            }
            ok
        })
        .collect();
    if bad > 0 {
        return Err(Error::SupportMismatch { cells: bad });
    }
    Ok(valid)
}

fn check_family_grid(fam: &dyn ParametricFamily, g: &GridDensity) -> Result<()> {
    fam.grid().ensure_same(g.grid())
}

/// `E_g[‖v / g‖_p^β]` for a vector field `v` (one slice per component).
pub fn fisher_from_gradient(grad: &[Vec<f64>], g: &GridDensity, beta: f64, norm_p: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(norm_p.is_finite() && norm_p >= 1.0) {
        return Err(invalid(format!("norm exponent must be >= 1, got {norm_p}")));
    }
    let valid = score_support(grad, g)?;
    let w = g.grid().weights();
    let k = grad.len();
    let mut buf = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..g.values().len() {
        if !valid[i] {
            continue;
        }
        for c in 0..k {
            buf[c] = grad[c][i];
        }
        let n = lp_norm(&buf[..k], norm_p);
        if n > 0.0 {
            let gv = g.values()[i];
            total += w[i] * n.powf(beta) * gv.powf(1.0 - beta);
        }
    }
    Ok(total)
}

/// `I_β[f|g; θ] = E_g[‖∇_θ f / g‖_p^β]`.
pub fn generalized_fisher(fam: &dyn ParametricFamily, g: &GridDensity, theta: &[f64], beta: f64, norm_p: f64) -> Result<f64> {
    check_family_grid(fam, g)?;
    let grad = fam.theta_gradient(theta)?;
    fisher_from_gradient(&grad, g, beta, norm_p)
}

/// Per-component informations `E_g[|∂_i f / g|^β]`; their sum is
/// [`generalized_fisher`] with `p = β`.
pub fn generalized_fisher_components(fam: &dyn ParametricFamily, g: &GridDensity, theta: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_family_grid(fam, g)?;
    let grad = fam.theta_gradient(theta)?;
    grad.iter()
        .map(|c| fisher_from_gradient(std::slice::from_ref(c), g, beta, 2.0))
        .collect()
}

/// Generalized score `ψ_g = ∇_θ f / g`; zero (and `valid = false`) where
/// `g` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    pub components: Vec<Vec<f64>>,
    pub valid: Vec<bool>,
}

pub fn score_field(fam: &dyn ParametricFamily, g: &GridDensity, theta: &[f64]) -> Result<ScoreField> {
    check_family_grid(fam, g)?;
    let grad = fam.theta_gradient(theta)?;
    let valid = score_support(&grad, g)?;
    let components = grad
        .iter()
        .map(|c| {
            c.iter()
                .zip(g.values())
                .zip(&valid)
                .map(|((d, gv), ok)| if *ok { d / gv } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(ScoreField { components, valid })
}

/// Outcome of [`chi2_limit_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub steps: Vec<f64>,
    /// `χ_g^β(f_{θ+t e_i}, f_θ) / |t|^β`, one row per θ component.
    pub sequences: Vec<Vec<f64>>,
    /// Polynomial (Neville) extrapolation of each row to `t = 0`.
    pub limits: Vec<f64>,
    /// `E_g[|∂_i f / g|^β]` for comparison.
    pub fisher: Vec<f64>,
    /// Largest relative gap between a limit and the matching information.
    pub max_rel_err: f64,
}

/// Neville extrapolation of `(t_k, y_k)` to `t = 0`; also returns the
/// spread between the two highest-order estimates.
pub fn extrapolate_to_zero(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ys.len();
    let mut p = ys.to_vec();
    let mut spread = 0.0;
    for level in 1..n {
        if level == n - 1 {
            spread = (p[1] - p[0]).abs();
        }
        for i in 0..n - level {
            let (ti, tj) = (ts[i], ts[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    (p[0], spread)
}

/// Check `lim_{t→0} χ_g^β(f_{θ+t}, f_θ)/|t|^β = E_g[|∂f/g|^β]` per component.
/// `g = None` averages with `f_θ`.
pub fn chi2_limit_check(
    fam: &dyn ParametricFamily,
    g: Option<&GridDensity>,
    theta: &[f64],
    beta: f64,
    steps: &[f64],
) -> Result<LimitReport> {
    check_beta(beta)?;
    if steps.len() < 2 || steps.windows(2).any(|w| !(w[1] < w[0])) || steps.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("limit steps must be at least two decreasing positive values"));
    }
    let base = fam.density_at(theta)?;
    let g = g.unwrap_or(&base);
    let mut sequences = Vec::with_capacity(theta.len());
    let mut limits = Vec::with_capacity(theta.len());
    for i in 0..fam.theta_dim() {
        let seq = steps
            .iter()
            .map(|&t| {
                let mut th = theta.to_vec();
                th[i] += t;
                let shifted = fam.density_at(&th)?;
                Ok(chi_beta_g(&shifted, &base, g, beta)?.value / t.powf(beta))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (limit, spread) = extrapolate_to_zero(steps, &seq);
        if spread > LIMIT_CAUCHY_TOL * limit.abs().max(1e-300) {
            return Err(Error::NonConvergent { spread });
        }
        sequences.push(seq);
        limits.push(limit);
    }
    let fisher = generalized_fisher_components(fam, g, theta, beta)?;
    let max_rel_err = limits
        .iter()
        .zip(&fisher)
        .map(|(l, f)| (l - f).abs() / f.abs().max(1e-300))
        .fold(0.0, f64::max);
    Ok(LimitReport {
        steps: steps.to_vec(),
        sequences,
        limits,
        fisher,
        max_rel_err,
    })
}

/// Detailed result of [`q_fisher_detailed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFisher {
    pub value: f64,
    pub m_q: f64,
    /// Mass of the cells left out of the gradient average.
    pub excluded_mass: f64,
}

/// Gradient field of `ln_q g = (g^{q-1} - 1)/(q-1)` (`ln g` at `q = 1`),
/// which equals `g^{q-1} ∇ ln g`, together with the cells where it is used.
pub fn q_log_gradient(g: &GridDensity, q: f64, support_rel_tol: f64, layer: usize) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("q must be positive, got {q}")));
    }
    let grid = g.grid();
    let tol = (support_rel_tol * g.max_value()).max(1e-300);
    let qm1 = q - 1.0;
    let keep: Vec<bool> = g.values().iter().map(|v| *v > tol).collect();
    let field: Vec<f64> = g
        .values()
        .iter()
        .zip(&keep)
        .map(|(&v, &ok)| {
            if !ok {
                // finite only for q > 1; never read inside the mask
                if qm1 > 0.0 {
                    -1.0 / qm1
                } else {
                    0.0
                }
            } else if qm1 == 0.0 {
                v.ln()
            } else {
                (qm1 * v.ln()).exp_m1() / qm1
            }
        })
        .collect();
    let mask = grid.eroded_mask(&keep, layer);
    let grad = (0..grid.dims()).map(|d| grid.gradient(&field, d)).collect();
    Ok((grad, mask))
}

/// `I_{β,q}[g]` with the dual norm of `‖·‖_p`, excluding cells below
/// `support_rel_tol × max g` plus a boundary layer of `layer` cells.
pub fn q_fisher_detailed(g: &GridDensity, beta: f64, q: f64, norm_p: f64, support_rel_tol: f64, layer: usize) -> Result<QFisher> {
    check_beta(beta)?;
    let dual = if g.dims() == 1 { 2.0 } else { dual_exponent(norm_p)? };
    let (grad, mask) = q_log_gradient(g, q, support_rel_tol, layer)?;
    let m_q = m_q_functional(g, q)?;
    let w = g.grid().weights();
    let k = grad.len();
    let mut buf = [0.0; MAX_DIMS];
    let mut total = 0.0;
    let mut excluded = 0.0;
    for i in 0..g.values().len() {
        let gv = g.values()[i];
        if !mask[i] {
            excluded += w[i] * gv;
            continue;
        }
        for c in 0..k {
            buf[c] = grad[c][i];
        }
        let n = lp_norm(&buf[..k], dual);
        total += w[i] * gv * n.powf(beta);
    }
    Ok(QFisher {
        value: (q / m_q).powf(beta) * total,
        m_q,
        excluded_mass: excluded,
    })
}

/// `I_{β,q}[g] = (q/M_q)^β E_g[g^{β(q-1)} ‖∇ ln g‖_*^β]`.
pub fn q_fisher(g: &GridDensity, beta: f64, q: f64, norm_p: f64) -> Result<f64> {
    Ok(q_fisher_detailed(g, beta, q, norm_p, SUPPORT_REL_TOL, EXCLUSION_LAYER)?.value)
}

/// Symmetric `n × n` Fisher information matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl FisherMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(invalid("matrix entries must be n*n"));
        }
        Ok(Self { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let ev = self.eigenvalues();
        let max = ev.last().copied().unwrap_or(0.0);
        if !(ev[0] > 1e-12 * max.max(1e-300)) {
            return Err(Error::SingularFisherMatrix);
        }
        self.to_matrix().try_inverse().ok_or(Error::SingularFisherMatrix)
    }

    pub fn max_abs_diff(&self, other: &FisherMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn matrix_from_masses(da: &[Vec<f64>], gm: &[f64]) -> FisherMatrix {
    let n = da.len();
    let mut entries = vec![0.0; n * n];
    for k in 0..gm.len() {
        if gm[k] <= 0.0 {
            continue;
        }
        for i in 0..n {
            if da[i][k] == 0.0 {
                continue;
            }
            for j in i..n {
                entries[i * n + j] += da[i][k] * da[j][k] / gm[k];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            entries[i * n + j] = entries[j * n + i];
        }
    }
    FisherMatrix { n, entries }
}

/// Score-gradient and averaging masses `w ∂_i f`, `w g`; gradient masses
/// are zeroed where `g` is masked.
fn score_masses(fam: &dyn ParametricFamily, g: &GridDensity, theta: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    check_family_grid(fam, g)?;
    let grad = fam.theta_gradient(theta)?;
    let valid = score_support(&grad, g)?;
    let w = g.grid().weights();
    let da = grad
        .iter()
        .map(|c| {
            c.iter()
                .zip(&w)
                .zip(&valid)
                .map(|((d, w), ok)| if *ok { d * w } else { 0.0 })
                .collect()
        })
        .collect();
    let gm = g.values().iter().zip(&w).map(|(v, w)| v * w).collect();
    Ok((da, gm))
}

/// `I_{2,g}[θ] = E_g[ψ_g ψ_gᵀ]`.
pub fn fisher_matrix(fam: &dyn ParametricFamily, g: &GridDensity, theta: &[f64]) -> Result<FisherMatrix> {
    let (da, gm) = score_masses(fam, g, theta)?;
    Ok(matrix_from_masses(&da, &gm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataProcessingReport {
    pub before: FisherMatrix,
    pub after: FisherMatrix,
    /// Smallest eigenvalue of `before - after`.
    pub psd_margin: f64,
}

/// Compare the Fisher matrix with that of the coarse-grained family
/// `θ ↦ coarse_grain(f_θ)` averaged with `coarse_grain(g)`. Coarse-graining
/// is linear, so the coarse score masses are block sums of the fine ones.
pub fn fisher_matrix_data_processing(
    fam: &dyn ParametricFamily,
    g: &GridDensity,
    theta: &[f64],
    factor: usize,
) -> Result<DataProcessingReport> {
    let (da, gm) = score_masses(fam, g, theta)?;
    let grid = g.grid();
    let before = matrix_from_masses(&da, &gm);
    let (_, coarse_g) = grid.coarse_grain_masses(&gm, factor)?;
    let coarse_da = da
        .iter()
        .map(|c| grid.coarse_grain_masses(c, factor).map(|(_, m)| m))
        .collect::<Result<Vec<_>>>()?;
    let after = matrix_from_masses(&coarse_da, &coarse_g);
    let diff = FisherMatrix {
        n: before.n,
        entries: before.entries.iter().zip(&after.entries).map(|(a, b)| a - b).collect(),
    };
    Ok(DataProcessingReport {
        psd_margin: diff.min_eigenvalue(),
        before,
        after,
    })
}
