//! Uniform rectangular grids, trapezoid quadrature and grid densities.
//!
//! Every density in the crate is a [`GridDensity`]: nonnegative node values
//! on a uniform grid of 1 to 3 axes, stored row-major (last axis fastest),
//! normalized so that the trapezoid integral equals one.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest supported grid dimension.
pub const MAX_DIMS: usize = 3;

/// Normalization tolerance promised by constructors.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Relative boundary level above which a non-compact density is considered
/// truncated by its grid.
pub const BOUNDARY_REL_LIMIT: f64 = 1e-10;

/// One uniform axis `lo + i * step`, `i = 0..points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(format!("axis bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if points < 3 {
            return Err(invalid(format!("axis needs at least 3 points, got {points}")));
        }
        Ok(Self { lo, hi, points })
    }

    /// Symmetric axis `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.lo + i as f64 * h).collect()
    }

    /// One-dimensional trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.points];
        w[0] = 0.5 * h;
        w[self.points - 1] = 0.5 * h;
        w
    }
}

/// A rectangular grid made of 1 to [`MAX_DIMS`] uniform axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return Err(invalid(format!(
                "grid dimension must be in 1..={MAX_DIMS}, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            Axis::new(a.lo, a.hi, a.points)?;
        }
        Ok(Self { axes })
    }

    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lo, hi, points)?])
    }

    /// The cube `[-half_width, half_width]^dims` with `points` nodes per axis.
    pub fn cube(dims: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::new(vec![Axis::symmetric(half_width, points)?; dims])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::step).collect()
    }

    /// Row-major stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.points).product()
    }

    /// Volume of one interior cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    /// Multi-index of a flat offset.
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIMS] {
        let mut idx = [0; MAX_DIMS];
        for d in (0..self.dims()).rev() {
            let n = self.axes[d].points;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    /// Coordinates of the node at `flat`, written into the first `dims` slots.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIMS] {
        let idx = self.unravel(flat);
        let mut x = [0.0; MAX_DIMS];
        for d in 0..self.dims() {
            x[d] = self.axes[d].coord(idx[d]);
        }
        x
    }

    /// Evaluate `f` at every node.
    pub fn map_points<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Vec<f64> {
        let n = self.dims();
        (0..self.len())
            .map(|i| {
                let x = self.point(i);
                f(&x[..n])
            })
            .collect()
    }

    /// Tensor-product trapezoid weights (one per node, sums to the volume).
    pub fn weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(Axis::weights).collect();
        (0..self.len())
            .map(|i| {
                let idx = self.unravel(i);
                per_axis
                    .iter()
                    .enumerate()
                    .map(|(d, w)| w[idx[d]])
                    .product()
            })
            .collect()
    }

    /// Trapezoid integral of node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(Axis::weights).collect();
        if self.dims() == 1 {
            return values.iter().zip(&per_axis[0]).map(|(v, w)| v * w).sum();
        }
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let idx = self.unravel(i);
                let w: f64 = per_axis
                    .iter()
                    .enumerate()
                    .map(|(d, w)| w[idx[d]])
                    .product();
                v * w
            })
            .sum()
    }

    /// Partial derivative along `axis`: fourth-order central differences in
    /// the interior, second order next to and at the grid edges.
    pub fn gradient(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let s = self.stride(axis);
        let n = self.axes[axis].points;
        let h = self.axes[axis].step();
        let v = values;
        (0..values.len())
            .map(|i| {
                let k = (i / s) % n;
                if k == 0 {
                    (-3.0 * v[i] + 4.0 * v[i + s] - v[i + 2 * s]) / (2.0 * h)
                } else if k == n - 1 {
                    (3.0 * v[i] - 4.0 * v[i - s] + v[i - 2 * s]) / (2.0 * h)
                } else if k == 1 || k == n - 2 {
                    (v[i + s] - v[i - s]) / (2.0 * h)
                } else {
                    (8.0 * (v[i + s] - v[i - s]) - (v[i + 2 * s] - v[i - 2 * s])) / (12.0 * h)
                }
            })
            .collect()
    }

    /// Marks nodes that are at least `layer + 1` cells (along every axis)
    /// away from any node where `keep` is false.
    pub fn eroded_mask(&self, keep: &[bool], layer: usize) -> Vec<bool> {
        let mut mask = keep.to_vec();
        for _ in 0..layer {
            let prev = mask.clone();
            for d in 0..self.dims() {
                let stride = self.stride(d);
                let n = self.axes[d].points;
                for i in 0..prev.len() {
                    if !mask[i] {
                        continue;
                    }
                    let k = (i / stride) % n;
                    if (k > 0 && !prev[i - stride]) || (k + 1 < n && !prev[i + stride]) {
                        mask[i] = false;
                    }
                }
            }
        }
        mask
    }

    /// Whether `flat` lies on the outer face of the grid.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.dims()).any(|d| idx[d] == 0 || idx[d] + 1 == self.axes[d].points)
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Block-aggregate per-node masses by `factor` along every axis.
    ///
    /// Block `j` gathers nodes `j*factor .. (j+1)*factor`; the coarse node
    /// sits at the block's center, so the coarse axis spans
    /// `[lo + (factor-1)h/2, hi - (factor-1)h/2]` with step `factor * h`.
    pub fn coarse_grain_masses(&self, masses: &[f64], factor: usize) -> Result<(GridSpec, Vec<f64>)> {
        if factor == 0 {
            return Err(invalid("coarse-graining factor must be positive"));
        }
        for (d, a) in self.axes.iter().enumerate() {
            if a.points % factor != 0 {
                return Err(Error::IncompatibleFactor {
                    axis: d,
                    factor,
                    points: a.points,
                });
            }
            if a.points / factor < 3 && factor > 1 {
                return Err(invalid(format!(
                    "factor {factor} leaves fewer than 3 points on axis {d}"
                )));
            }
        }
        if factor == 1 {
            return Ok((self.clone(), masses.to_vec()));
        }
        let axes: Vec<Axis> = self
            .axes
            .iter()
            .map(|a| {
                let shift = 0.5 * (factor - 1) as f64 * a.step();
                Axis {
                    lo: a.lo + shift,
                    hi: a.hi - shift,
                    points: a.points / factor,
                }
            })
            .collect();
        let coarse = GridSpec { axes };
        let mut out = vec![0.0; coarse.len()];
        for (i, m) in masses.iter().enumerate() {
            let idx = self.unravel(i);
            let mut flat = 0;
            for d in 0..self.dims() {
                flat = flat * coarse.axes[d].points + idx[d] / factor;
            }
            out[flat] += m;
        }
        Ok((coarse, out))
    }
}

/// Nonnegative density sampled on a [`GridSpec`], normalized by trapezoid
/// quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridDensity {
    /// Build from node values, rescaling so the trapezoid integral is one.
    pub fn from_values(grid: GridSpec, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotNormalizable(format!("value {v} is negative or not finite")));
        }
        let mass = grid.integrate(&values);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NotNormalizable(format!("total mass {mass}")));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, values })
    }

    /// Sample an unnormalized nonnegative function and normalize it.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = grid.map_points(f);
        Self::from_values(grid, values)
    }

    /// Wrap values that are already normalized (mass-conserving updates).
    pub(crate) fn from_normalized(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Per-node masses `w_i f_i`.
    pub fn masses(&self) -> Vec<f64> {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .collect()
    }

    /// Trapezoid expectation of a node field.
    pub fn expect(&self, field: &[f64]) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .zip(field)
            .map(|((w, v), t)| w * v * t)
            .sum()
    }

    /// Expectation of `f(x)` under the density.
    pub fn expect_fn<F: FnMut(&[f64]) -> f64>(&self, f: F) -> f64 {
        let field = self.grid.map_points(f);
        self.expect(&field)
    }

    /// Mean vector.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dims()).map(|d| self.expect_fn(|x| x[d])).collect()
    }

    /// Largest value on the outer faces relative to the maximum.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.max_value();
        let edge = (0..self.values.len())
            .filter(|&i| self.grid.is_boundary(i))
            .map(|i| self.values[i])
            .fold(0.0, f64::max);
        if max > 0.0 {
            edge / max
        } else {
            0.0
        }
    }

    /// Check that the grid does not truncate the density. Logs a warning,
    /// or fails when `strict`.
    pub fn check_boundary(&self, strict: bool) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > BOUNDARY_REL_LIMIT {
            if strict {
                return Err(Error::BoundaryLeak {
                    ratio,
                    limit: BOUNDARY_REL_LIMIT,
                });
            }
            log::warn!("density reaches {ratio:e} of its maximum on the grid boundary");
        }
        Ok(())
    }

    /// L1 distance between two densities on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self.grid.integrate(&diff))
    }

    /// Affine reparameterization `y = scale * x + shift` (all axes), with the
    /// Jacobian applied to the values. Masses are unchanged node by node.
    pub fn affine_pushforward(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0 && shift.is_finite()) {
            return Err(invalid("affine map needs a positive finite scale"));
        }
        let axes = self
            .grid
            .axes
            .iter()
            .map(|a| Axis {
                lo: scale * a.lo + shift,
                hi: scale * a.hi + shift,
                points: a.points,
            })
            .collect();
        let jac = scale.powi(self.dims() as i32);
        Ok(Self {
            grid: GridSpec { axes },
            values: self.values.iter().map(|v| v / jac).collect(),
        })
    }

    pub fn to_file_repr(&self) -> DensityFile {
        DensityFile {
            dims: self.dims(),
            lo: self.grid.axes.iter().map(|a| a.lo).collect(),
            hi: self.grid.axes.iter().map(|a| a.hi).collect(),
            points: self.grid.shape(),
            values: self.values.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file_repr())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DensityFile = serde_json::from_str(text)?;
        file.into_density()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// CSV with one row per node: coordinates `x0..x{n-1}` then `value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.dims();
        let header: Vec<String> = (0..n).map(|d| format!("x{d}")).collect();
        writeln!(out, "{},value", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.point(i);
            let coords: Vec<String> = x[..n].iter().map(|c| format!("{c:.12e}")).collect();
            writeln!(out, "{},{v:.12e}", coords.join(","))?;
        }
        Ok(())
    }
}

/// JSON layout of a [`GridDensity`]: header plus row-major values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub dims: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
    pub values: Vec<f64>,
}

impl DensityFile {
    pub fn into_density(self) -> Result<GridDensity> {
        if self.lo.len() != self.dims || self.hi.len() != self.dims || self.points.len() != self.dims {
            return Err(invalid("density header arrays must have `dims` entries"));
        }
        let axes = (0..self.dims)
            .map(|d| Axis::new(self.lo[d], self.hi[d], self.points[d]))
            .collect::<Result<Vec<_>>>()?;
        GridDensity::from_values(GridSpec::new(axes)?, self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let g = GridSpec::new(vec![Axis::new(-1.0, 2.0, 31).unwrap(), Axis::new(0.0, 1.0, 11).unwrap()]).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert_relative_eq!(total, 3.0, epsilon = 1e-12);
        assert_relative_eq!(g.integrate(&vec![1.0; g.len()]), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn unravel_is_row_major() {
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 3).unwrap(), Axis::new(0.0, 1.0, 4).unwrap()]).unwrap();
        assert_eq!(g.unravel(5), [1, 1, 0]);
        assert_eq!(g.stride(0), 4);
        assert_eq!(g.stride(1), 1);
        assert_relative_eq!(g.point(7)[1], 1.0);
    }

    #[test]
    fn gradient_is_exact_on_quadratics_in_interior() {
        let g = GridSpec::line(-1.0, 1.0, 21).unwrap();
        let v = g.map_points(|x| x[0] * x[0]);
        let d = g.gradient(&v, 0);
        for i in 1..20 {
            assert_relative_eq!(d[i], 2.0 * g.point(i)[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn eroded_mask_removes_layer() {
        let g = GridSpec::line(0.0, 1.0, 10).unwrap();
        let keep: Vec<bool> = (0..10).map(|i| i < 6).collect();
        let m = g.eroded_mask(&keep, 2);
        assert_eq!(m, vec![true, true, true, true, false, false, false, false, false, false]);
    }

    #[test]
    fn rejects_negative_and_empty() {
        let g = GridSpec::line(0.0, 1.0, 5).unwrap();
        assert!(GridDensity::from_values(g.clone(), vec![1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(GridDensity::from_values(g.clone(), vec![0.0; 5]).is_err());
        assert!(GridDensity::from_values(g, vec![1.0; 4]).is_err());
        assert!(GridSpec::new(vec![]).is_err());
        assert!(Axis::new(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn json_roundtrip_keeps_grid_and_values() {
        let g = GridSpec::cube(2, 1.0, 5).unwrap();
        let d = GridDensity::from_fn(g, |x| 1.0 + x[0] * x[0] + 0.5 * x[1]).unwrap();
        let back = GridDensity::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back.grid(), d.grid());
        for (a, b) in back.values().iter().zip(d.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert!(GridDensity::from_json(r#"{"dims":1,"lo":[0],"hi":[1],"points":[3],"values":[1,1,1],"extra":1}"#).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let d = GridDensity::from_fn(GridSpec::line(0.0, 1.0, 4).unwrap(), |_| 1.0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,value");
        assert_eq!(lines.len(), 5);
    }
}
