//! Minimization of the dilation-invariant product `m_α[g]^{β/α} I_{β,q}[g]`.
//!
//! The descent runs in the variable `φ = g^s` with `s = q - 1 + 1/β`. In
//! that variable the Fisher functional becomes a plain Dirichlet energy,
//! `I_{β,q}[g] = (q/(s M_q))^β ∫ ‖∇φ‖_*^β`, so the objective is smooth in φ
//! even where the minimizer loses support. Its logarithm is
//!
//! ```text
//! ln J = (β/α) ln A - β ln B + ln E + const,
//! A = Σ w ‖x‖^α φ^{1/s},  B = Σ w φ^{q/s},  E = corner-stencil energy of φ.
//! ```
//!
//! Steps are preconditioned by the `β = 2` stiffness plus a mass term
//! (an H¹ Riesz map), which removes the `1/h²` stiffness of plain gradient
//! descent. Nodes clipped at the positivity floor whose gradient pushes
//! further down are frozen for the step.

use serde::{Deserialize, Serialize};

use crate::cramer_rao::q_cr_check;
use crate::densities::{dual_exponent, lp_norm, make_q_gaussian, moment_about, HolderPair, QGaussianParams};
use crate::error::{invalid, Result};
use crate::grid::{GridDensity, GridSpec, MAX_DIMS};

/// Positivity floor on `g`, relative to its maximum.
pub const FLOOR_REL: f64 = 1e-14;

/// Iterates whose edge-to-peak ratio exceeds this have spread over the
/// whole window. Early preconditioned steps may briefly lift the tails, so
/// the threshold is loose.
pub const LEAK_RATIO: f64 = 0.25;

const ARMIJO: f64 = 1e-4;
const STALL_DECREASE: f64 = 1e-10;
const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizationConfig {
    pub q: f64,
    /// Moment order; β is its Hölder conjugate.
    pub alpha: f64,
    pub norm_p: f64,
    pub max_iters: usize,
    /// Stop once the preconditioned decrement `⟨∇ ln J, d⟩` falls below this.
    pub tolerance: f64,
}

impl MinimizationConfig {
    pub fn new(q: f64, alpha: f64) -> Self {
        Self {
            q,
            alpha,
            norm_p: 2.0,
            max_iters: 5000,
            tolerance: 1e-11,
        }
    }

    fn validate(&self, dims: usize) -> Result<HolderPair> {
        let pair = HolderPair::from_alpha(self.alpha)?;
        QGaussianParams::new(self.q, self.alpha, 1.0, dims).with_norm(self.norm_p).validate()?;
        if !(self.tolerance > 0.0) || self.max_iters == 0 {
            return Err(invalid("minimizer needs a positive tolerance and iteration budget"));
        }
        Ok(pair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizationStatus {
    Converged,
    /// Relative decrease below 1e-10 for 50 consecutive iterations.
    Stalled,
    MaxIters,
    /// The iterate reached the grid edge. On a bounded window the infimum
    /// is the flat density, so the run is stopped instead of followed there.
    BoundaryLeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedQGaussian {
    pub params: QGaussianParams,
    pub center: Vec<f64>,
    pub l1_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizationResult {
    pub argmin: GridDensity,
    /// Discrete objective `J = m_α^{β/α} I_{β,q}` after each accepted step,
    /// starting with the initial value.
    pub trace: Vec<f64>,
    pub status: MinimizationStatus,
    pub iterations: usize,
    /// `m_α^{1/α} I_{β,q}^{1/β}` of the argmin, evaluated independently of
    /// the discrete objective.
    pub product: f64,
    pub fit: FittedQGaussian,
}

/// Discretized objective on a fixed grid.
struct Objective<'a> {
    grid: &'a GridSpec,
    weights: Vec<f64>,
    /// `‖x‖^α` at every node.
    radial: Vec<f64>,
    q: f64,
    alpha: f64,
    beta: f64,
    r: f64,
    dual: f64,
}

struct Eval {
    ln_j: f64,
    energy: f64,
    grad: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn ln_j(&self, phi: &[f64]) -> f64 {
        let (a, b) = self.moments(phi);
        let e = self.energy(phi, None);
        self.combine(a, b, e)
    }

    fn combine(&self, a: f64, b: f64, e: f64) -> f64 {
        self.beta * (self.q * self.r).ln() + self.beta / self.alpha * a.ln() - self.beta * b.ln() + e.ln()
    }

    fn moments(&self, phi: &[f64]) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..phi.len() {
            a += self.weights[i] * self.radial[i] * phi[i].powf(self.r);
            b += self.weights[i] * phi[i].powf(self.r * self.q);
        }
        (a, b)
    }

    /// Corner-stencil energy `Σ_cells vol/2^n Σ_corners ‖v_c‖_*^β`, where
    /// `v_c` collects the forward differences along the cell edges through
    /// corner `c`. Accumulates `∂E/∂φ` into `grad` when given.
    fn energy(&self, phi: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let g = self.grid;
        let n = g.dims();
        let steps = g.steps();
        let shape = g.shape();
        let strides: Vec<usize> = (0..n).map(|d| g.stride(d)).collect();
        let corners = 1usize << n;
        let scale = g.cell_volume() / corners as f64;
        let mut total = 0.0;
        let mut v = [0.0; MAX_DIMS];
        for base in 0..phi.len() {
            let idx = g.unravel(base);
            if (0..n).any(|d| idx[d] + 1 >= shape[d]) {
                continue;
            }
            for c in 0..corners {
                let corner = (0..n).fold(base, |acc, d| acc + ((c >> d) & 1) * strides[d]);
                for d in 0..n {
                    let lo = corner - ((c >> d) & 1) * strides[d];
                    v[d] = (phi[lo + strides[d]] - phi[lo]) / steps[d];
                }
                let norm = lp_norm(&v[..n], self.dual);
                if norm == 0.0 {
                    continue;
                }
                total += scale * norm.powf(self.beta);
                if let Some(gr) = grad.as_deref_mut() {
                    let outer = scale * self.beta * norm.powf(self.beta - self.dual);
                    for d in 0..n {
                        let lo = corner - ((c >> d) & 1) * strides[d];
                        let dv = outer * v[d].abs().powf(self.dual - 2.0) * v[d] / steps[d];
                        gr[lo + strides[d]] += dv;
                        gr[lo] -= dv;
                    }
                }
            }
        }
        total
    }

    fn eval(&self, phi: &[f64]) -> Eval {
        let (a, b) = self.moments(phi);
        let mut grad = vec![0.0; phi.len()];
        let e = self.energy(phi, Some(&mut grad));
        for i in 0..phi.len() {
            let p = phi[i].max(1e-300);
            let da = self.weights[i] * self.radial[i] * self.r * p.powf(self.r - 1.0) / a;
            let db = self.weights[i] * self.r * self.q * p.powf(self.r * self.q - 1.0) / b;
            grad[i] = grad[i] / e + self.beta / self.alpha * da - self.beta * db;
        }
        Eval {
            ln_j: self.combine(a, b, e),
            energy: e,
            grad,
        }
    }
}

/// Stiffness of the `β = 2` corner energy plus `mass / ℓ²`, restricted to
/// free nodes (fixed nodes get an identity row).
struct Preconditioner<'a> {
    grid: &'a GridSpec,
    weights: Vec<f64>,
    /// Coefficient of the edge from node `i` along axis `d`, `edges[d][i]`.
    edges: Vec<Vec<f64>>,
    inv_len2: f64,
}

impl<'a> Preconditioner<'a> {
    fn new(grid: &'a GridSpec, inv_len2: f64) -> Self {
        let n = grid.dims();
        let shape = grid.shape();
        let steps = grid.steps();
        let vol = grid.cell_volume();
        let edges = (0..n)
            .map(|d| {
                (0..grid.len())
                    .map(|i| {
                        // Each edge carries vol/(2^{n-1} h_d²) per adjacent cell.
                        let idx = grid.unravel(i);
                        let cells: f64 = (0..n)
                            .filter(|&e| e != d)
                            .map(|e| if idx[e] > 0 && idx[e] + 1 < shape[e] { 2.0 } else { 1.0 })
                            .product();
                        vol / (steps[d] * steps[d]) * cells / (1usize << (n - 1)) as f64
                    })
                    .collect()
            })
            .collect();
        Self {
            grid,
            weights: grid.weights(),
            edges,
            inv_len2,
        }
    }

    fn edge_coef(&self, i: usize, d: usize) -> f64 {
        self.edges[d][i]
    }

    fn apply(&self, x: &[f64], free: &[bool], out: &mut [f64]) {
        let g = self.grid;
        let shape = g.shape();
        for i in 0..x.len() {
            out[i] = if free[i] { self.inv_len2 * self.weights[i] * x[i] } else { x[i] };
        }
        for d in 0..g.dims() {
            let s = g.stride(d);
            for i in 0..x.len() {
                if (i / s) % shape[d] + 1 >= shape[d] {
                    continue;
                }
                let j = i + s;
                let c = self.edge_coef(i, d);
                let diff = c * (x[j] - x[i]);
                if free[i] {
                    out[i] -= diff;
                }
                if free[j] {
                    out[j] += diff;
                }
            }
        }
    }

    fn solve(&self, rhs: &[f64], free: &[bool]) -> Vec<f64> {
        let b: Vec<f64> = rhs.iter().zip(free).map(|(r, f)| if *f { *r } else { 0.0 }).collect();
        if self.grid.dims() == 1 {
            return self.solve_tridiagonal(&b, free);
        }
        self.solve_cg(&b, free)
    }

    fn solve_tridiagonal(&self, b: &[f64], free: &[bool]) -> Vec<f64> {
        let n = b.len();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if !free[i] {
                diag[i] = 1.0;
                continue;
            }
            diag[i] = self.inv_len2 * self.weights[i];
            if i > 0 {
                let c = self.edge_coef(i - 1, 0);
                diag[i] += c;
                if free[i - 1] {
                    lower[i] = -c;
                }
            }
            if i + 1 < n {
                let c = self.edge_coef(i, 0);
                diag[i] += c;
                if free[i + 1] {
                    upper[i] = -c;
                }
            }
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = upper[0] / diag[0];
        d[0] = b[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - lower[i] * c[i - 1];
            c[i] = upper[i] / m;
            d[i] = (b[i] - lower[i] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    fn solve_cg(&self, b: &[f64], free: &[bool]) -> Vec<f64> {
        let n = b.len();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = if free[i] { self.inv_len2 * self.weights[i] } else { 1.0 };
        }
        for d in 0..self.grid.dims() {
            let s = self.grid.stride(d);
            let pts = self.grid.shape()[d];
            for i in 0..n {
                if (i / s) % pts + 1 >= pts {
                    continue;
                }
                let c = self.edge_coef(i, d);
                if free[i] {
                    diag[i] += c;
                }
                if free[i + s] {
                    diag[i + s] += c;
                }
            }
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let target = 1e-20 * dot(b, b).max(1e-300);
        let mut ap = vec![0.0; n];
        for _ in 0..10 * n {
            if dot(&r, &r) <= target {
                break;
            }
            self.apply(&p, free, &mut ap);
            let step = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }
}

/// `d/dε` of `φ` under `g → e^{-nε} g(e^{-ε} x)` at `ε = 0`.
fn dilation_generator(grid: &GridSpec, phi: &[f64], s: f64) -> Vec<f64> {
    let n = grid.dims();
    let mut out: Vec<f64> = phi.iter().map(|p| -(n as f64) * s * p).collect();
    for d in 0..n {
        let grad = grid.gradient(phi, d);
        for (i, o) in out.iter_mut().enumerate() {
            *o -= grid.point(i)[d] * grad[i];
        }
    }
    out
}

/// Remove from `dir` its weighted projection onto `span(basis)`, on free
/// nodes only.
fn project_out(dir: &mut [f64], basis: &[&[f64]], weights: &[f64], free: &[bool]) {
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        (0..a.len()).filter(|&i| free[i]).map(|i| weights[i] * a[i] * b[i]).sum()
    };
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for b in basis {
        let mut v: Vec<f64> = b.iter().zip(free).map(|(x, f)| if *f { *x } else { 0.0 }).collect();
        for u in &ortho {
            let c = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-300 {
            v.iter_mut().for_each(|x| *x /= norm);
            ortho.push(v);
        }
    }
    for u in &ortho {
        let c = dot(dir, u);
        dir.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
    }
}

fn edge_ratio(grid: &GridSpec, phi: &[f64], r: f64) -> f64 {
    let max = phi.iter().copied().fold(0.0, f64::max);
    let edge = (0..phi.len())
        .filter(|&i| grid.is_boundary(i))
        .map(|i| phi[i])
        .fold(0.0, f64::max);
    (edge / max).powf(r)
}

fn normalize(phi: &mut [f64], weights: &[f64], r: f64) {
    let mass: f64 = phi.iter().zip(weights).map(|(p, w)| w * p.powf(r)).sum();
    let c = mass.powf(-1.0 / r);
    phi.iter_mut().for_each(|p| *p *= c);
}

/// Minimize `m_α^{β/α} I_{β,q}` starting from `init`, on `init`'s grid.
/// Supports one and two dimensions.
pub fn minimize_q_fisher(init: &GridDensity, cfg: &MinimizationConfig) -> Result<MinimizationResult> {
    let grid = init.grid();
    let dims = grid.dims();
    if dims > 2 {
        return Err(invalid("the minimizer supports one and two dimensions"));
    }
    let pair = cfg.validate(dims)?;
    let beta = pair.beta();
    let s = cfg.q - 1.0 + 1.0 / beta;
    let r = 1.0 / s;
    let weights = grid.weights();
    let obj = Objective {
        grid,
        radial: grid.map_points(|x| lp_norm(x, cfg.norm_p).powf(cfg.alpha)),
        weights: weights.clone(),
        q: cfg.q,
        alpha: cfg.alpha,
        beta,
        r,
        dual: if dims == 1 { 2.0 } else { dual_exponent(cfg.norm_p)? },
    };

    let floor_of = |phi: &[f64]| FLOOR_REL.powf(s) * phi.iter().copied().fold(0.0, f64::max);
    let mut phi: Vec<f64> = init.values().iter().map(|g| g.powf(s)).collect();
    let f0 = floor_of(&phi);
    phi.iter_mut().for_each(|p| *p = p.max(f0));
    normalize(&mut phi, &weights, r);

    let variance = init.expect_fn(|x| x.iter().map(|v| v * v).sum::<f64>()) / dims as f64;
    let pre = Preconditioner::new(grid, 1.0 / variance.max(1e-12));

    let mut current = obj.eval(&phi);
    let mut trace = vec![current.ln_j.exp()];
    let mut status = MinimizationStatus::MaxIters;
    let mut slow = 0;
    let mut iterations = 0;
    let mut trial = vec![0.0; phi.len()];
    while iterations < cfg.max_iters {
        let floor = floor_of(&phi);
        let free: Vec<bool> = phi
            .iter()
            .zip(&current.grad)
            .map(|(p, g)| *p > 2.0 * floor || *g < 0.0)
            .collect();
        let mut dir = pre.solve(&current.grad, &free);
        dir.iter_mut().for_each(|d| *d *= 0.5 * current.energy);
        // ln J is invariant under φ → cφ and, in the continuum, under
        // dilations. The discrete energy is not exactly dilation invariant
        // and would otherwise make the iterate creep toward the grid scale.
        let raw = dir.clone();
        let dilation = dilation_generator(grid, &phi, s);
        project_out(&mut dir, &[phi.as_slice(), dilation.as_slice()], &weights, &free);
        let mut decrement: f64 = dir.iter().zip(&current.grad).map(|(d, g)| d * g).sum();
        if decrement <= 0.0 {
            dir = raw;
            project_out(&mut dir, &[phi.as_slice()], &weights, &free);
            decrement = dir.iter().zip(&current.grad).map(|(d, g)| d * g).sum();
        }
        if decrement < cfg.tolerance {
            status = MinimizationStatus::Converged;
            break;
        }
        let mut t = 1.0;
        let accepted = loop {
            for i in 0..phi.len() {
                trial[i] = (phi[i] - t * dir[i]).max(floor);
            }
            let value = obj.ln_j(&trial);
            if value <= current.ln_j - ARMIJO * t * decrement {
                break true;
            }
            t *= 0.5;
            if t < 1e-12 {
                break false;
            }
        };
        iterations += 1;
        if !accepted {
            // Below ~100 tol the Armijo decrease is under the rounding of ln J.
            status = if decrement < 100.0 * cfg.tolerance {
                MinimizationStatus::Converged
            } else {
                MinimizationStatus::Stalled
            };
            break;
        }
        normalize(&mut trial, &weights, r);
        std::mem::swap(&mut phi, &mut trial);
        let next = obj.eval(&phi);
        let rel = (current.ln_j - next.ln_j).abs();
        slow = if rel < STALL_DECREASE { slow + 1 } else { 0 };
        current = next;
        trace.push(current.ln_j.exp());
        if edge_ratio(grid, &phi, r) > LEAK_RATIO {
            status = MinimizationStatus::BoundaryLeak;
            break;
        }
        if slow >= STALL_WINDOW {
            status = MinimizationStatus::Stalled;
            break;
        }
    }

    let argmin = GridDensity::from_values(grid.clone(), phi.iter().map(|p| p.powf(r)).collect())?;
    let product = q_cr_check(&argmin, pair, cfg.q, cfg.norm_p)?.lhs;
    let fit = fit_q_gaussian(&argmin, cfg.q, cfg.alpha, cfg.norm_p)?;
    Ok(MinimizationResult {
        argmin,
        trace,
        status,
        iterations,
        product,
        fit,
    })
}

/// Generalized Gaussian of index `q` with the same `α`-moment as `g`,
/// centered at the mean of `g`'s order-`q` escort, and its L1 distance to `g`.
pub fn fit_q_gaussian(g: &GridDensity, q: f64, alpha: f64, norm_p: f64) -> Result<FittedQGaussian> {
    let dims = g.dims();
    let unit = QGaussianParams::new(q, alpha, 1.0, dims).with_norm(norm_p);
    let reference = make_q_gaussian(&unit, &unit.suggested_grid(if dims == 1 { 8192 } else { 256 })?)?;
    let m_unit = moment_about(&reference, alpha, norm_p, &vec![0.0; dims])?;
    let center = crate::densities::escort(g, q)?.mean();
    let m_g = moment_about(g, alpha, norm_p, &center)?;
    let params = QGaussianParams::new(q, alpha, m_unit / m_g, dims).with_norm(norm_p);
    let fitted = GridDensity::from_fn(g.grid().clone(), |x| {
        let mut y = [0.0; MAX_DIMS];
        for d in 0..dims {
            y[d] = x[d] - center[d];
        }
        params.profile(lp_norm(&y[..dims], norm_p))
    })?;
    Ok(FittedQGaussian {
        params,
        center,
        l1_distance: g.l1_distance(&fitted)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{gaussian_mixture, MixtureComponent};

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let grid = GridSpec::cube(2, 3.0, 9).unwrap();
        let obj = Objective {
            grid: &grid,
            weights: grid.weights(),
            radial: grid.map_points(|x| lp_norm(x, 2.0).powi(2)),
            q: 1.2,
            alpha: 2.0,
            beta: 2.0,
            r: 1.0 / 0.7,
            dual: 2.0,
        };
        let phi: Vec<f64> = grid.map_points(|x| (-(x[0] - 0.3).powi(2) - 0.5 * x[1] * x[1]).exp() + 0.1);
        let e = obj.eval(&phi);
        for i in [10, 40, 41, 70] {
            let mut up = phi.clone();
            let mut down = phi.clone();
            up[i] += 1e-6;
            down[i] -= 1e-6;
            let fd = (obj.ln_j(&up) - obj.ln_j(&down)) / 2e-6;
            assert!((fd - e.grad[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{i}: {fd} vs {}", e.grad[i]);
        }
    }

    #[test]
    fn trace_is_monotone() {
        let grid = GridSpec::line(-6.0, 6.0, 512).unwrap();
        let init = gaussian_mixture(
            &grid,
            &[
                MixtureComponent { weight: 0.6, mean: vec![-1.0], sigma: 0.7 },
                MixtureComponent { weight: 0.4, mean: vec![1.5], sigma: 0.5 },
            ],
        )
        .unwrap();
        let mut cfg = MinimizationConfig::new(1.0, 2.0);
        cfg.max_iters = 200;
        let res = minimize_q_fisher(&init, &cfg).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
