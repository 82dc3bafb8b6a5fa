use clap::Args;
use qfisher::densities::gaussian;
use qfisher::diffusion::{debruijn_check, DiffusionState};
use qfisher::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{boundary, Experiment};
use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::{num, Report, Table};

const IDENTITY_TOL: f64 = 2e-2;
const HEAT_TOL: f64 = 1e-2;

/// Entropy production along the generalized diffusion against the
/// Fisher-information side of the de Bruijn identity.
#[derive(Debug, Args, Serialize)]
pub struct DebruijnFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    /// Sampling and snapshot interval.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    snap_every: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    /// Width of the Gaussian initial density.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    /// Time step as a fraction of the stability limit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    m: f64,
    beta: f64,
    t_final: f64,
    points: usize,
    snap_every: f64,
    half_width: f64,
    sigma: f64,
    fraction: f64,
}

pub struct Debruijn;

impl Experiment for Debruijn {
    const NAME: &'static str = "debruijn";
    type Params = Params;

    fn defaults() -> Value {
        json!({
            "m": 1.0, "beta": 2.0, "t_final": 0.3, "points": 2048, "snap_every": 0.05,
            "half_width": 8.0, "sigma": 1.0, "fraction": 0.5
        })
    }

    fn run(p: &Params, global: &Global) -> Result<Report, CliError> {
        if !(p.t_final > 0.0 && p.snap_every > 0.0 && p.snap_every <= p.t_final) {
            return Err(CliError::Config("need 0 < snap_every <= t_final".into()));
        }
        if !(p.fraction > 0.0 && p.fraction <= 1.0) {
            return Err(CliError::Config("fraction must lie in (0, 1]".into()));
        }
        let grid = GridSpec::line(-p.half_width, p.half_width, p.points).map_err(config)?;
        let init = gaussian(&grid, &[0.0], &[p.sigma]).map_err(config)?;
        let mut state = DiffusionState::new(init, p.m, p.beta).map_err(config)?;
        let heat = p.m == 1.0 && p.beta == 2.0;

        let mut report = Report::default();
        let mut table = Table::new("debruijn", &["t", "S_q", "M_q", "I_bq", "lhs", "rhs", "rel_err"]);
        let (mut worst, mut worst_heat) = (0.0f64, 0.0f64);
        let mut k = 1;
        while k as f64 * p.snap_every <= p.t_final * (1.0 + 1e-12) {
            state = state.advance_to(k as f64 * p.snap_every, p.fraction).map_err(at("diffusion"))?;
            let (s, _) = debruijn_check(&state, p.fraction * state.stable_dt()).map_err(at("diffusion"))?;
            worst = worst.max(s.rel_err);
            if heat {
                // Gaussian initial data stays Gaussian with variance σ² + 2t.
                let exact = 1.0 / (p.sigma * p.sigma + 2.0 * s.t);
                worst_heat = worst_heat.max((s.i_bq - exact).abs() / exact);
            }
            table.push([s.t, s.s_q, s.m_q, s.i_bq, s.lhs, s.rhs, s.rel_err].map(num).to_vec());
            boundary(&mut report, state.density(), global, &format!("snapshot at t={}", s.t))?;
            report.densities.push((format!("snapshot_{k:04}"), state.density().clone()));
            k += 1;
        }

        report.set("q", state.q());
        report.set("samples", k - 1);
        report.set("max_rel_err", worst);
        report.tolerance("rel_err", IDENTITY_TOL);
        report.require(worst < IDENTITY_TOL, || format!("identity misses by {worst:e}"));
        if heat {
            report.set("heat_analytic_rel_err", worst_heat);
            report.tolerance("heat_analytic", HEAT_TOL);
            report.require(worst_heat < HEAT_TOL, || format!("heat Fisher information misses 1/sigma^2(t) by {worst_heat:e}"));
        }
        report.tables.push(table);
        Ok(report)
    }
}
