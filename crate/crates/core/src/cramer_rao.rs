//! Cramér-Rao type inequalities, evaluated on the grid.
//!
//! Every check pairs an error moment under `g` with a Fisher-type
//! expectation under the same `g`, and compares their product to the
//! derivative side. The derivative side is computed from the same discrete
//! score used for the Fisher side (`η̇ = Σ w (T - h) ∂_θ f`, i.e. the
//! derivative of `E_f[T]` with `h` held fixed), so the discrete Hölder
//! inequality holds exactly and saturated cases sit at rounding level
//! rather than at discretization level.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::densities::{dual_exponent, escort, lp_norm, moment_about, HolderPair};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::family::ParametricFamily;
use crate::fisher::{fisher_from_gradient, q_fisher, score_support, FisherMatrix};
use crate::grid::{GridDensity, MAX_DIMS};
use crate::sampling::sample_nodes;

/// Relative residual of the equality-condition fit below which a bound is
/// reported as saturated.
pub const SATURATION_RESIDUAL: f64 = 1e-2;

/// Relative margin below which the estimator bounds are reported as
/// saturated.
pub const SATURATION_MARGIN: f64 = 1e-6;

/// Relative step for derivatives of the estimand map.
pub const ESTIMAND_STEP_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub saturated: bool,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: f64, saturated: bool) -> Self {
        Self {
            lhs,
            rhs,
            margin: lhs - rhs,
            saturated,
        }
    }

    fn by_margin(lhs: f64, rhs: f64) -> Self {
        let sat = (lhs - rhs).abs() <= SATURATION_MARGIN * rhs.abs().max(1.0);
        Self::new(lhs, rhs, sat)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

/// Which density averages the error moment and the score.
#[derive(Debug, Clone)]
pub enum Averaging {
    /// `g = f_θ`
    Model,
    /// `g = escort(f_θ, 1/q)`, so that `f_θ` is the order-`q` escort of `g`.
    Escort(f64),
    Fixed(GridDensity),
}

impl Averaging {
    pub fn resolve(&self, f: &GridDensity) -> Result<GridDensity> {
        match self {
            Averaging::Model => Ok(f.clone()),
            Averaging::Escort(q) => escort(f, 1.0 / q),
            Averaging::Fixed(g) => {
                g.grid().ensure_same(f.grid())?;
                Ok(g.clone())
            }
        }
    }
}

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Estimator `T(x)` of `h(θ)` for a parametric family, with the averaging
/// density and Hölder pair that enter the bounds.
#[derive(Clone)]
pub struct EstimationProblem {
    pub family: Arc<dyn ParametricFamily>,
    /// Dimension `m` of the estimand.
    pub m: usize,
    pub estimand: VectorMap,
    pub estimator: VectorMap,
    /// `H_ij = ∂θ_j/∂h_i`, row-major `m × n`. Derived by inverting the
    /// numerical Jacobian of `h` when absent (requires `m = n`).
    pub jacobian: Option<VectorMap>,
    pub averaging: Averaging,
    pub pair: HolderPair,
    pub norm_p: f64,
}

impl fmt::Debug for EstimationProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimationProblem")
            .field("m", &self.m)
            .field("averaging", &self.averaging)
            .field("pair", &self.pair)
            .field("norm_p", &self.norm_p)
            .finish_non_exhaustive()
    }
}

impl EstimationProblem {
    /// Quadratic setting with `g = f`.
    pub fn new(family: Arc<dyn ParametricFamily>, m: usize, estimand: VectorMap, estimator: VectorMap) -> Self {
        Self {
            family,
            m,
            estimand,
            estimator,
            jacobian: None,
            averaging: Averaging::Model,
            pair: HolderPair::from_alpha(2.0).expect("2 is a valid exponent"),
            norm_p: 2.0,
        }
    }

    /// `T(x) = x` estimating `h(θ) = θ`.
    pub fn identity(family: Arc<dyn ParametricFamily>) -> Self {
        let n = family.theta_dim();
        let id: VectorMap = Arc::new(|v: &[f64]| v.to_vec());
        let mut p = Self::new(family, n, id.clone(), id);
        p.jacobian = Some(Arc::new(move |_| identity_rows(n)));
        p
    }

    pub fn with_averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_pair(mut self, pair: HolderPair) -> Self {
        self.pair = pair;
        self
    }

    pub fn with_norm(mut self, p: f64) -> Self {
        self.norm_p = p;
        self
    }

    pub fn with_jacobian(mut self, jacobian: VectorMap) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    fn dual(&self) -> Result<f64> {
        if self.m == 1 && self.family.theta_dim() == 1 {
            Ok(2.0)
        } else {
            dual_exponent(self.norm_p)
        }
    }

    /// `H` at `theta` as an `m × n` matrix.
    pub fn jacobian_at(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.family.theta_dim();
        let h = match &self.jacobian {
            Some(j) => DMatrix::from_row_slice(self.m, n, &j(theta)),
            None => {
                if self.m != n {
                    return Err(invalid("an explicit jacobian is required when m != n"));
                }
                let dh = self.estimand_derivative(theta);
                dh.try_inverse().ok_or(Error::JacobianSingular)?
            }
        };
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::JacobianSingular);
        }
        Ok(h)
    }

    /// `∂h_i/∂θ_j` by Richardson-extrapolated symmetric differences.
    fn estimand_derivative(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = theta.len();
        let step = ESTIMAND_STEP_REL * self.family.theta_scale();
        let diff = |j: usize, s: f64| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[j] += s;
            down[j] -= s;
            let (a, b) = ((self.estimand)(&up), (self.estimand)(&down));
            a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * s)).collect::<Vec<_>>()
        };
        let mut d = DMatrix::zeros(self.m, n);
        for j in 0..n {
            let coarse = diff(j, step);
            let fine = diff(j, 0.5 * step);
            for i in 0..self.m {
                d[(i, j)] = (4.0 * fine[i] - coarse[i]) / 3.0;
            }
        }
        d
    }
}

fn identity_rows(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

/// Grid fields shared by the estimator bounds.
struct Evaluated {
    g: GridDensity,
    weights: Vec<f64>,
    /// `T_k(x) - h_k(θ)`, one field per component.
    errors: Vec<Vec<f64>>,
    grad: Vec<Vec<f64>>,
    valid: Vec<bool>,
}

impl Evaluated {
    fn new(prob: &EstimationProblem, theta: &[f64]) -> Result<Self> {
        let fam = &prob.family;
        let f = fam.density_at(theta)?;
        let g = prob.averaging.resolve(&f)?;
        let grad = fam.theta_gradient(theta)?;
        let valid = score_support(&grad, &g)?;
        let h = (prob.estimand)(theta);
        if h.len() != prob.m {
            return Err(invalid(format!("estimand returned {} components, expected {}", h.len(), prob.m)));
        }
        let grid = g.grid();
        let mut errors = vec![vec![0.0; grid.len()]; prob.m];
        for i in 0..grid.len() {
            let x = grid.point(i);
            let t = (prob.estimator)(&x[..grid.dims()]);
            if t.len() != prob.m {
                return Err(invalid("estimator output has the wrong dimension"));
            }
            for k in 0..prob.m {
                errors[k][i] = t[k] - h[k];
            }
        }
        Ok(Self {
            weights: grid.weights(),
            g,
            errors,
            grad,
            valid,
        })
    }

    /// `J_kj = Σ w (T_k - h_k) ∂_j f` over the score support.
    fn eta_dot(&self) -> DMatrix<f64> {
        let (m, n) = (self.errors.len(), self.grad.len());
        let mut j = DMatrix::zeros(m, n);
        for i in 0..self.weights.len() {
            if !self.valid[i] {
                continue;
            }
            for k in 0..m {
                for d in 0..n {
                    j[(k, d)] += self.weights[i] * self.errors[k][i] * self.grad[d][i];
                }
            }
        }
        j
    }

    /// `E_g[‖T - h‖_p^α]`.
    fn error_moment(&self, alpha: f64, p: f64) -> f64 {
        let m = self.errors.len();
        let mut buf = vec![0.0; m];
        let field: Vec<f64> = (0..self.weights.len())
            .map(|i| {
                for k in 0..m {
                    buf[k] = self.errors[k][i];
                }
                lp_norm(&buf, p).powf(alpha)
            })
            .collect();
        self.g.expect(&field)
    }
}

/// Scalar bound `E_g[|T-h|^α]^{1/α} I_β[f|g;θ]^{1/β} ≥ |η̇|`.
pub fn scalar_cr_check(prob: &EstimationProblem, theta: f64) -> Result<BoundReport> {
    if prob.m != 1 || prob.family.theta_dim() != 1 {
        return Err(invalid("scalar check needs a scalar parameter and estimand"));
    }
    let ev = Evaluated::new(prob, &[theta])?;
    let (alpha, beta) = (prob.pair.alpha(), prob.pair.beta());
    let lhs = ev.error_moment(alpha, 2.0).powf(1.0 / alpha)
        * fisher_from_gradient(&ev.grad, &ev.g, beta, 2.0)?.powf(1.0 / beta);
    let rhs = ev.eta_dot()[(0, 0)].abs();
    Ok(BoundReport::by_margin(lhs, rhs))
}

/// Multidimensional bound with dual norms:
/// `E_g[‖T-h‖^α]^{1/α} E_g[‖H ∇_θ f / g‖_*^β]^{1/β} ≥ |tr(η̇ Hᵀ)|`.
/// For an unbiased estimator of `h = θ` the right side is `n`.
pub fn multidim_cr_check(prob: &EstimationProblem, theta: &[f64]) -> Result<BoundReport> {
    let n = prob.family.theta_dim();
    if prob.m > n {
        return Err(invalid("estimand dimension exceeds parameter dimension"));
    }
    let hm = prob.jacobian_at(theta)?;
    let ev = Evaluated::new(prob, theta)?;
    let len = ev.weights.len();
    let mapped: Vec<Vec<f64>> = (0..prob.m)
        .map(|r| (0..len).map(|i| (0..n).map(|c| hm[(r, c)] * ev.grad[c][i]).sum()).collect())
        .collect();
    let (alpha, beta) = (prob.pair.alpha(), prob.pair.beta());
    let lhs = ev.error_moment(alpha, prob.norm_p).powf(1.0 / alpha)
        * fisher_from_gradient(&mapped, &ev.g, beta, prob.dual()?)?.powf(1.0 / beta);
    let rhs = (ev.eta_dot().component_mul(&hm)).sum().abs();
    Ok(BoundReport::by_margin(lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub samples: usize,
    pub empirical: Vec<Vec<f64>>,
    pub bound: Vec<Vec<f64>>,
    /// Smallest eigenvalue of `empirical - bound`.
    pub min_eigenvalue: f64,
    /// Monte Carlo standard error of that eigenvalue's quadratic form.
    pub standard_error: f64,
    /// `min_eigenvalue + 3 standard_error`; nonnegative when the Löwner
    /// bound is consistent with the samples.
    pub psd_margin: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Matrix bound `E_g[(T-h)(T-h)ᵀ] ≥ η̇ I_{2,g}^{-1} η̇ᵀ`, with the left side
/// estimated from `samples` seeded draws of `g`.
pub fn covariance_bound_check(prob: &EstimationProblem, theta: &[f64], samples: usize, seed: u64) -> Result<CovarianceReport> {
    covariance_bound_check_with(prob, theta, samples, seed, Exec::default())
}

pub fn covariance_bound_check_with(
    prob: &EstimationProblem,
    theta: &[f64],
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<CovarianceReport> {
    if (prob.pair.beta() - 2.0).abs() > 1e-12 {
        return Err(invalid("the covariance bound is the quadratic case beta = 2"));
    }
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let ev = Evaluated::new(prob, theta)?;
    let n = ev.grad.len();
    let m = prob.m;
    let mut info = vec![0.0; n * n];
    for i in 0..ev.weights.len() {
        if !ev.valid[i] {
            continue;
        }
        let wg = ev.weights[i] / ev.g.values()[i];
        for a in 0..n {
            for b in 0..n {
                info[a * n + b] += wg * ev.grad[a][i] * ev.grad[b][i];
            }
        }
    }
    let info = FisherMatrix::from_entries(n, info)?.inverse()?;
    let jd = ev.eta_dot();
    let bound = &jd * info * jd.transpose();

    let nodes = sample_nodes(&ev.g, samples, seed, exec)?;
    let mut emp = DMatrix::zeros(m, m);
    for &i in &nodes {
        for a in 0..m {
            for b in 0..m {
                emp[(a, b)] += ev.errors[a][i] * ev.errors[b][i];
            }
        }
    }
    emp /= samples as f64;
    let diff = &emp - &bound;
    let eig = SymmetricEigen::new(diff.clone());
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let v = eig.eigenvectors.column(k);
    let proj: Vec<f64> = nodes
        .iter()
        .map(|&i| (0..m).map(|a| v[a] * ev.errors[a][i]).sum::<f64>().powi(2))
        .collect();
    let mean = proj.iter().sum::<f64>() / samples as f64;
    let var = proj.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let se = (var / samples as f64).sqrt();
    Ok(CovarianceReport {
        samples,
        empirical: rows(&emp),
        bound: rows(&bound),
        min_eigenvalue: lambda,
        standard_error: se,
        psd_margin: lambda + 3.0 * se,
    })
}

/// Least-squares fit of `∇f ≈ -K g ‖x-c‖^{α-1} ∇‖x-c‖`; returns `(K, relative residual)`.
pub fn equality_residual(f: &GridDensity, g: &GridDensity, alpha: f64, norm_p: f64, center: &[f64]) -> Result<(f64, f64)> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let dims = grid.dims();
    let grad: Vec<Vec<f64>> = (0..dims).map(|d| grid.gradient(f.values(), d)).collect();
    let w = grid.weights();
    let (mut fv, mut vv, mut ff) = (0.0, 0.0, 0.0);
    let mut fields = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let mut y = [0.0; MAX_DIMS];
        for d in 0..dims {
            y[d] = x[d] - center[d];
        }
        let r = lp_norm(&y[..dims], norm_p);
        let mut v = [0.0; MAX_DIMS];
        if r > 0.0 {
            for d in 0..dims {
                let dr = y[d].signum() * (y[d].abs() / r).powf(norm_p - 1.0);
                v[d] = g.values()[i] * r.powf(alpha - 1.0) * dr;
            }
        }
        for d in 0..dims {
            fv += w[i] * grad[d][i] * v[d];
            vv += w[i] * v[d] * v[d];
            ff += w[i] * grad[d][i] * grad[d][i];
        }
        fields.push(v);
    }
    if !(vv > 0.0 && ff > 0.0) {
        return Ok((0.0, 1.0));
    }
    let k = -fv / vv;
    let mut res = 0.0;
    for i in 0..grid.len() {
        for d in 0..dims {
            res += w[i] * (grad[d][i] + k * fields[i][d]).powi(2);
        }
    }
    Ok((k, (res / ff).sqrt()))
}

/// Functional bound for any pair of densities:
/// `(∫‖x‖^α g)^{1/α} (∫‖∇f/g‖_*^β g)^{1/β} ≥ n`, with `x` measured from the
/// mean of `f`.
pub fn functional_cr_check(f: &GridDensity, g: &GridDensity, pair: HolderPair, norm_p: f64) -> Result<BoundReport> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let dims = grid.dims();
    let dual = if dims == 1 { 2.0 } else { dual_exponent(norm_p)? };
    let center = f.mean();
    let grad: Vec<Vec<f64>> = (0..dims).map(|d| grid.gradient(f.values(), d)).collect();
    let (alpha, beta) = (pair.alpha(), pair.beta());
    let lhs = moment_about(g, alpha, norm_p, &center)?.powf(1.0 / alpha)
        * fisher_from_gradient(&grad, g, beta, dual)?.powf(1.0 / beta);
    let (_, residual) = equality_residual(f, g, alpha, norm_p, &center)?;
    Ok(BoundReport::new(lhs, dims as f64, residual < SATURATION_RESIDUAL))
}

/// `m_α[g]^{1/α} I_{β,q}[g]^{1/β} ≥ n`; the moment is taken about the
/// mean of the order-`q` escort of `g`, which is where a shifted
/// generalized Gaussian is centered.
pub fn q_cr_check(g: &GridDensity, pair: HolderPair, q: f64, norm_p: f64) -> Result<BoundReport> {
    let f = escort(g, q)?;
    let center = f.mean();
    let (alpha, beta) = (pair.alpha(), pair.beta());
    let lhs = moment_about(g, alpha, norm_p, &center)?.powf(1.0 / alpha)
        * q_fisher(g, beta, q, norm_p)?.powf(1.0 / beta);
    let (_, residual) = equality_residual(&f, g, alpha, norm_p, &center)?;
    Ok(BoundReport::new(lhs, g.dims() as f64, residual < SATURATION_RESIDUAL))
}
