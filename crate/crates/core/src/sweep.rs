//! Parameter sweeps over the q-Cramér-Rao bound, mapped with an [`Exec`]
//! policy. Rows come back in input order whatever the policy.

use serde::{Deserialize, Serialize};

use crate::cramer_rao::q_cr_check;
use crate::densities::{make_q_gaussian, HolderPair, QGaussianParams};
use crate::error::Result;
use crate::exec::Exec;
use crate::grid::GridSpec;
use crate::zoo::zoo_member;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcrRow {
    pub q: f64,
    pub alpha: f64,
    pub points: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub saturated: bool,
}

/// Product `m_α^{1/α} I_{β,q}^{1/β}` for the unit q-Gaussian of matching
/// `(q, α)` in one dimension, for every cell of `qs × alphas`.
pub fn qcr_saturation_sweep(qs: &[f64], alphas: &[f64], points: usize, exec: Exec) -> Result<Vec<QcrRow>> {
    let cells: Vec<(f64, f64)> = qs.iter().flat_map(|&q| alphas.iter().map(move |&a| (q, a))).collect();
    exec.map(&cells, |&(q, alpha)| {
        let p = QGaussianParams::new(q, alpha, 1.0, 1);
        let g = make_q_gaussian(&p, &p.suggested_grid(points)?)?;
        let r = q_cr_check(&g, HolderPair::from_alpha(alpha)?, q, 2.0)?;
        Ok(QcrRow {
            q,
            alpha,
            points,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            saturated: r.saturated,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZooRow {
    pub member: usize,
    pub q: f64,
    pub alpha: f64,
    pub lhs: f64,
    pub margin: f64,
    pub saturated: bool,
}

/// `q_cr_check` on `count` zoo members for every `(q, α)` cell.
pub fn zoo_qcr_sweep(
    grid: &GridSpec,
    count: usize,
    seed: u64,
    qs: &[f64],
    alphas: &[f64],
    exec: Exec,
) -> Result<Vec<ZooRow>> {
    let per_member = exec.map_range(count, |member| -> Result<Vec<ZooRow>> {
        let g = zoo_member(grid, member, seed)?;
        let mut rows = Vec::with_capacity(qs.len() * alphas.len());
        for &q in qs {
            for &alpha in alphas {
                let r = q_cr_check(&g, HolderPair::from_alpha(alpha)?, q, 2.0)?;
                rows.push(ZooRow {
                    member,
                    q,
                    alpha,
                    lhs: r.lhs,
                    margin: r.margin,
                    saturated: r.saturated,
                });
            }
        }
        Ok(rows)
    });
    let mut out = Vec::new();
    for rows in per_member {
        out.extend(rows?);
    }
    Ok(out)
}
