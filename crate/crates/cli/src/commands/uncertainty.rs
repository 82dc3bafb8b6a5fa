use clap::{Args, ValueEnum};
use qfisher::densities::{gaussian, make_q_gaussian, QGaussianParams};
use qfisher::uncertainty::{fft_grid, uncertainty_check, UncertaintyParams, WaveFunction};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;

use super::{boundary, density_from, Experiment};
use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiKind {
    Gauss,
    /// Modulus squared is the q-Gaussian that saturates the relation at
    /// β = γ = θ = 2.
    Qgauss,
    /// Real wave function `sqrt(ρ)` of a density file.
    File,
}

/// Uncertainty relation between escort position moments and momentum
/// moments of a wave function.
#[derive(Debug, Args, Serialize)]
pub struct UncertaintyFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<PsiKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_file: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    q: f64,
    beta: f64,
    gamma: f64,
    theta: f64,
    psi: PsiKind,
    psi_file: Option<PathBuf>,
    points: usize,
    step: f64,
}

pub struct Uncertainty;

impl Experiment for Uncertainty {
    const NAME: &'static str = "uncertainty";
    type Params = Params;

    fn defaults() -> Value {
        json!({ "q": 1.0, "beta": 2.0, "gamma": 2.0, "theta": 2.0, "psi": "gauss", "points": 4096, "step": 0.015625 })
    }

    fn run(p: &Params, global: &Global) -> Result<Report, CliError> {
        let up = UncertaintyParams::new(p.q, p.beta, p.gamma, p.theta).map_err(config)?;
        let rho = match p.psi {
            PsiKind::Gauss => gaussian(&fft_grid(1, p.points, p.step).map_err(config)?, &[0.0], &[1.0]).map_err(at("densities"))?,
            PsiKind::Qgauss => {
                let qp = QGaussianParams::new(up.matched_modulus_index(), 2.0, 0.5, 1);
                qp.validate().map_err(config)?;
                make_q_gaussian(&qp, &fft_grid(1, p.points, p.step).map_err(config)?).map_err(at("densities"))?
            }
            PsiKind::File => density_from(p.psi_file.as_deref(), "psi_file")?,
        };
        let mut report = Report::default();
        boundary(&mut report, &rho, global, "|psi|^2")?;
        let psi = WaveFunction::from_density(&rho).map_err(at("uncertainty"))?;
        let r = uncertainty_check(&psi, &up).map_err(at("uncertainty"))?;

        let mut table = Table::new("uncertainty", &["q", "beta", "gamma", "theta", "lhs", "rhs", "margin", "saturated"]);
        table.push(vec![num(p.q), num(p.beta), num(p.gamma), num(p.theta), num(r.lhs), num(r.rhs), num(r.margin), r.saturated.to_string()]);
        report.set("lhs", r.lhs);
        report.set("rhs", r.rhs);
        report.set("margin", r.margin);
        report.set("saturated", r.saturated);
        report.tolerance("bound", BOUND_TOL);
        report.tolerance("saturation", qfisher::uncertainty::UNCERTAINTY_SATURATION);
        report.require(r.margin >= -BOUND_TOL * r.rhs, || format!("uncertainty relation violated by {:e}", -r.margin));
        report.tables.push(table);
        Ok(report)
    }
}
