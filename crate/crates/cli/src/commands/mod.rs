mod debruijn;
mod divergence;
mod fisher;
mod minimize;
mod qcr;
mod uncertainty;

pub use debruijn::{Debruijn, DebruijnFlags};
pub use divergence::{Divergence, DivergenceFlags};
pub use fisher::{Fisher, FisherFlags};
pub use minimize::{Minimize, MinimizeFlags};
pub use qcr::{QcrCheck, QcrFlags};
pub use uncertainty::{Uncertainty, UncertaintyFlags};

use std::path::Path;

use qfisher::GridDensity;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::Global;
use crate::error::{at, config, CliError};
use crate::output::Report;

pub trait Experiment {
    const NAME: &'static str;
    type Params: DeserializeOwned + Serialize;

    /// Every key of `Params` with its default value.
    fn defaults() -> Value;

    /// Validate and run. Validation failures must come back as
    /// [`CliError::Config`]; nothing is written by this call.
    fn run(p: &Self::Params, global: &Global) -> Result<Report, CliError>;
}

/// Read a density file given for a `file` source. Failures are
/// configuration errors.
pub(crate) fn density_from(path: Option<&Path>, key: &str) -> Result<GridDensity, CliError> {
    let path = path.ok_or_else(|| CliError::Config(format!("`{key}` is required for a file source")))?;
    GridDensity::read_json(path).map_err(config)
}

/// In strict mode a density that touches the grid edge is a violation;
/// otherwise it is only logged.
pub(crate) fn boundary(report: &mut Report, g: &GridDensity, global: &Global, what: &str) -> Result<(), CliError> {
    match g.check_boundary(global.strict) {
        Ok(()) => Ok(()),
        Err(qfisher::Error::BoundaryLeak { ratio, .. }) => {
            report.violations.push(format!("{what} is truncated by the grid (edge ratio {ratio:e})"));
            Ok(())
        }
        Err(e) => Err(at("grid")(e)),
    }
}
