use clap::Args;
use qfisher::densities::coarse_grain;
use qfisher::divergences::chi_beta_g;
use qfisher::zoo::softplus_density;
use qfisher::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{boundary, Experiment};
use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const MONOTONICITY_TOL: f64 = 1e-9;

/// χ_g^β between two seeded random densities, averaged with a third, and
/// its loss under coarse-graining.
#[derive(Debug, Args, Serialize)]
pub struct DivergenceFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    /// Coarse-graining factors, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    beta: f64,
    points: usize,
    half_width: f64,
    factors: Vec<usize>,
}

pub struct Divergence;

impl Experiment for Divergence {
    const NAME: &'static str = "divergence";
    type Params = Params;

    fn defaults() -> Value {
        json!({ "beta": 2.0, "points": 1024, "half_width": 12.0, "factors": [2, 4, 8] })
    }

    fn run(p: &Params, global: &Global) -> Result<Report, CliError> {
        if !(p.beta > 1.0) {
            return Err(CliError::Config(format!("beta must exceed 1, got {}", p.beta)));
        }
        if p.factors.is_empty() || p.factors.iter().any(|&k| k < 2 || p.points % k != 0) {
            return Err(CliError::Config(format!("factors must be >= 2 and divide points = {}", p.points)));
        }
        let grid = GridSpec::line(-p.half_width, p.half_width, p.points).map_err(config)?;

        let make = |k: u64, width: f64| softplus_density(&grid, global.seed.wrapping_mul(3).wrapping_add(k), width).map_err(at("zoo"));
        let (f1, f2, g) = (make(0, 2.0)?, make(1, 2.5)?, make(2, 3.0)?);
        let mut report = Report::default();
        for (d, name) in [(&f1, "f1"), (&f2, "f2"), (&g, "g")] {
            boundary(&mut report, d, global, name)?;
        }
        let value = chi_beta_g(&f1, &f2, &g, p.beta).map_err(at("divergences"))?.value;

        let mut factors = p.factors.clone();
        factors.sort_unstable();
        factors.dedup();
        let mut table = Table::new("divergence", &["factor", "coarse_value", "margin"]);
        let mut worst = f64::INFINITY;
        for k in factors {
            let cg = |d| coarse_grain(d, k).map_err(at("densities"));
            let coarse = chi_beta_g(&cg(&f1)?, &cg(&f2)?, &cg(&g)?, p.beta).map_err(at("divergences"))?.value;
            worst = worst.min(value - coarse);
            table.push(vec![k.to_string(), num(coarse), num(value - coarse)]);
        }

        report.set("beta", p.beta);
        report.set("value", value);
        report.set("monotonicity_margin", worst);
        report.tolerance("monotonicity", MONOTONICITY_TOL);
        report.require(worst >= -MONOTONICITY_TOL, || format!("coarse-graining increased the divergence by {:e}", -worst));
        report.tables.push(table);
        Ok(report)
    }
}
