use clap::{Args, ValueEnum};
use qfisher::cramer_rao::q_cr_check;
use qfisher::densities::{gaussian, gaussian_mixture, make_q_gaussian, smooth_uniform, HolderPair, MixtureComponent, QGaussianParams};
use qfisher::{Exec, GridDensity, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

use super::{boundary, density_from, Experiment};
use crate::config::{one_or_many, Global};
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    /// The q-Gaussian matched to each `(q, α)` cell.
    Qgauss,
    Gauss,
    Uniform,
    /// Seeded three-component Gaussian mixture.
    Mixture,
    File,
}

/// q-Cramér-Rao check `m_α^{1/α} I_{β,q}^{1/β} ≥ 1` over a grid of
/// `(q, α)` cells.
#[derive(Debug, Args, Serialize)]
pub struct QcrFlags {
    /// Entropic indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<Vec<f64>>,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<DensityKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    density_file: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(deserialize_with = "one_or_many")]
    q: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    alpha: Vec<f64>,
    p: f64,
    density: DensityKind,
    density_file: Option<PathBuf>,
    grid_points: usize,
}

fn seeded_mixture(grid: &GridSpec, seed: u64) -> qfisher::Result<GridDensity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<MixtureComponent> = (0..3)
        .map(|_| MixtureComponent {
            weight: rng.random_range(0.2..1.0),
            mean: vec![rng.random_range(-3.0..3.0)],
            sigma: rng.random_range(0.4..1.0),
        })
        .collect();
    gaussian_mixture(grid, &comps)
}

pub struct QcrCheck;

impl Experiment for QcrCheck {
    const NAME: &'static str = "qcr-check";
    type Params = Params;

    fn defaults() -> Value {
        json!({ "q": [1.0], "alpha": [2.0], "p": 2.0, "density": "qgauss", "grid_points": 4096 })
    }

    fn run(p: &Params, global: &Global) -> Result<Report, CliError> {
        if p.q.is_empty() || p.alpha.is_empty() {
            return Err(CliError::Config("q and alpha need at least one value".into()));
        }
        let mut cells: Vec<(f64, f64)> = p.q.iter().flat_map(|&q| p.alpha.iter().map(move |&a| (q, a))).collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        cells.dedup();
        for &(q, alpha) in &cells {
            HolderPair::from_alpha(alpha).map_err(config)?;
            if !(q > 0.0) {
                return Err(CliError::Config(format!("q must be positive, got {q}")));
            }
            if p.density == DensityKind::Qgauss {
                QGaussianParams::new(q, alpha, 1.0, 1).with_norm(p.p).validate().map_err(config)?;
            }
        }
        let line = || GridSpec::line(-12.0, 12.0, p.grid_points).map_err(config);
        let shared = match p.density {
            DensityKind::Qgauss => None,
            DensityKind::Gauss => Some(gaussian(&line()?, &[0.0], &[1.0]).map_err(at("densities"))?),
            DensityKind::Uniform => {
                let grid = GridSpec::line(-3.0, 3.0, p.grid_points).map_err(config)?;
                Some(smooth_uniform(&grid, 1.0, 0.05).map_err(at("densities"))?)
            }
            DensityKind::Mixture => Some(seeded_mixture(&line()?, global.seed).map_err(at("densities"))?),
            DensityKind::File => Some(density_from(p.density_file.as_deref(), "density_file")?),
        };

        let mut report = Report::default();
        if let Some(g) = &shared {
            boundary(&mut report, g, global, "density")?;
        }
        let results = Exec::default().map(&cells, |&(q, alpha)| {
            let pair = HolderPair::from_alpha(alpha)?;
            let r = match &shared {
                Some(g) => q_cr_check(g, pair, q, p.p)?,
                None => {
                    let qp = QGaussianParams::new(q, alpha, 1.0, 1).with_norm(p.p);
                    q_cr_check(&make_q_gaussian(&qp, &qp.suggested_grid(p.grid_points)?)?, pair, q, p.p)?
                }
            };
            Ok((q, alpha, r))
        });

        let mut table = Table::new("qcr", &["q", "alpha", "lhs", "rhs", "margin", "saturated"]);
        let mut min_margin = f64::INFINITY;
        let mut saturated = 0;
        for row in results {
            let (q, alpha, r) = row.map_err(at("cramer_rao"))?;
            min_margin = min_margin.min(r.margin);
            saturated += r.saturated as usize;
            report.require(r.margin >= -BOUND_TOL * r.rhs.abs().max(1.0), || format!("q={q} alpha={alpha}: margin {:e}", r.margin));
            table.push(vec![num(q), num(alpha), num(r.lhs), num(r.rhs), num(r.margin), r.saturated.to_string()]);
        }

        report.set("density", p.density);
        report.set("cells", cells.len());
        report.set("min_margin", min_margin);
        report.set("saturated_cells", saturated);
        report.tolerance("bound", BOUND_TOL);
        report.tolerance("saturation_residual", qfisher::cramer_rao::SATURATION_RESIDUAL);
        report.tables.push(table);
        Ok(report)
    }
}
