use clap::{Args, ValueEnum};
use qfisher::densities::{gaussian, gaussian_mixture, smooth_uniform, HolderPair, MixtureComponent, QGaussianParams};
use qfisher::minimizer::{minimize_q_fisher, MinimizationConfig, MinimizationStatus};
use qfisher::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

use super::{density_from, Experiment};
use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const BOUND_TOL: f64 = 1e-3;
const FIT_TOL: f64 = 2e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Two-component Gaussian mixture.
    Mixture,
    Uniform,
    Gauss,
    File,
}

/// Minimize `m_α^{1/α} I_{β,q}^{1/β}` over densities from a given start.
#[derive(Debug, Args, Serialize)]
pub struct MinimizeFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<InitKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    init_file: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    q: f64,
    alpha: f64,
    init: InitKind,
    init_file: Option<PathBuf>,
    iters: usize,
    points: usize,
}

pub struct Minimize;

impl Experiment for Minimize {
    const NAME: &'static str = "minimize";
    type Params = Params;

    fn defaults() -> Value {
        json!({ "q": 1.5, "alpha": 2.0, "init": "mixture", "iters": 5000, "points": 2048 })
    }

    fn run(p: &Params, global: &Global) -> Result<Report, CliError> {
        HolderPair::from_alpha(p.alpha).map_err(config)?;
        QGaussianParams::new(p.q, p.alpha, 1.0, 1).validate().map_err(config)?;
        if p.iters == 0 {
            return Err(CliError::Config("iters must be positive".into()));
        }
        let init = match p.init {
            InitKind::Mixture => {
                let grid = GridSpec::line(-6.0, 6.0, p.points).map_err(config)?;
                let comps = [
                    MixtureComponent { weight: 0.6, mean: vec![-1.0], sigma: 0.7 },
                    MixtureComponent { weight: 0.4, mean: vec![1.5], sigma: 0.5 },
                ];
                gaussian_mixture(&grid, &comps)
            }
            InitKind::Uniform => smooth_uniform(&GridSpec::line(-9.0, 9.0, p.points).map_err(config)?, 1.5, 0.05),
            InitKind::Gauss => gaussian(&GridSpec::line(-9.0, 9.0, p.points).map_err(config)?, &[0.3], &[1.4]),
            InitKind::File => Ok(density_from(p.init_file.as_deref(), "init_file")?),
        }
        .map_err(at("densities"))?;

        let cfg = MinimizationConfig {
            max_iters: p.iters,
            ..MinimizationConfig::new(p.q, p.alpha)
        };
        let r = minimize_q_fisher(&init, &cfg).map_err(at("minimizer"))?;

        let mut trace = Table::new("minimize_trace", &["iteration", "objective"]);
        for (i, v) in r.trace.iter().enumerate() {
            trace.push(vec![i.to_string(), num(*v)]);
        }
        let mut report = Report::default();
        report.set("status", r.status);
        report.set("iterations", r.iterations);
        report.set("product", r.product);
        report.set("fit", &r.fit);
        report.tolerance("bound", BOUND_TOL);
        report.tolerance("fit_l1", FIT_TOL);
        report.require(r.product >= 1.0 - BOUND_TOL, || format!("product {} is below the bound", r.product));
        if global.strict {
            report.require(r.status == MinimizationStatus::Converged, || format!("minimizer stopped with {:?}", r.status));
            report.require(r.fit.l1_distance < FIT_TOL, || format!("L1 distance to the fitted q-Gaussian is {:e}", r.fit.l1_distance));
        }
        report.tables.push(trace);
        report.densities.push(("minimize_density".into(), r.argmin));
        Ok(report)
    }
}
