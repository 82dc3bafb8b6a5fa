use clap::{Args, ValueEnum};
use qfisher::densities::{HolderPair, QGaussianParams};
use qfisher::family::{ParametricFamily, TranslationFamily};
use qfisher::fisher::{chi2_limit_check, fisher_matrix, q_fisher};
use qfisher::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Experiment;
use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const LIMIT_TOL: f64 = 1e-2;
const PSD_TOL: f64 = 1e-12;
const STEPS: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Gauss,
    /// Laplace with the kink smoothed over a unit width.
    Laplace,
    /// q-Gaussian matched to `(q, β)`.
    Qgauss,
}

/// Fisher information of a location family at θ = 0, with the χ^β limit
/// check and the Fisher matrix.
#[derive(Debug, Args, Serialize)]
pub struct FisherFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    /// Norm index for the multidimensional score.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<FamilyName>,
    /// Grid points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    beta: f64,
    q: f64,
    p: f64,
    family: FamilyName,
    grid: usize,
    half_width: f64,
}

pub struct Fisher;

impl Experiment for Fisher {
    const NAME: &'static str = "fisher";
    type Params = Params;

    fn defaults() -> Value {
        json!({ "beta": 2.0, "q": 1.0, "p": 2.0, "family": "gauss", "grid": 4096, "half_width": 12.0 })
    }

    fn run(p: &Params, _global: &Global) -> Result<Report, CliError> {
        let pair = HolderPair::from_beta(p.beta).map_err(config)?;
        if !(p.q > 0.0 && p.p > 1.0) {
            return Err(CliError::Config("need q > 0 and p > 1".into()));
        }
        let grid = GridSpec::line(-p.half_width, p.half_width, p.grid).map_err(config)?;
        let fam = match p.family {
            FamilyName::Gauss => TranslationFamily::gaussian(grid, &[1.0]),
            FamilyName::Laplace => TranslationFamily::smoothed_laplace(grid, 1.0),
            FamilyName::Qgauss => TranslationFamily::q_gaussian(grid, QGaussianParams::new(p.q, pair.alpha(), 1.0, 1).with_norm(p.p)),
        }
        .map_err(config)?;

        let f = fam.density_at(&[0.0]).map_err(at("family"))?;
        let value = q_fisher(&f, p.beta, p.q, p.p).map_err(at("fisher"))?;
        let limit = chi2_limit_check(&fam, None, &[0.0], p.beta, &STEPS).map_err(at("fisher"))?;
        let matrix = fisher_matrix(&fam, &f, &[0.0]).map_err(at("fisher"))?;
        let min_eig = matrix.min_eigenvalue();

        let mut table = Table::new("fisher_limit", &["t", "ratio"]);
        for (t, r) in STEPS.iter().zip(&limit.sequences[0]) {
            table.push(vec![num(*t), num(*r)]);
        }
        let mut report = Report::default();
        report.set("value", value);
        report.set("limit_check", &limit);
        report.set("matrix", matrix.rows());
        report.tolerance("limit_rel", LIMIT_TOL);
        report.tolerance("psd", PSD_TOL);
        report.require(limit.max_rel_err <= LIMIT_TOL, || format!("chi^beta limit misses the information by {:e}", limit.max_rel_err));
        report.require(min_eig >= -PSD_TOL, || format!("Fisher matrix has eigenvalue {min_eig:e}"));
        report.tables.push(table);
        Ok(report)
    }
}
