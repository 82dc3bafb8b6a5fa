use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRASH: i32 = 1;
pub const EXIT_VIOLATED: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed; `module` names the library module.
    #[error("{module}: {source}")]
    Numeric {
        module: &'static str,
        #[source]
        source: qfisher::Error,
    },

    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_CRASH,
        }
    }
}

/// Tag a library error with the module it came from.
pub fn at(module: &'static str) -> impl Fn(qfisher::Error) -> CliError {
    move |source| CliError::Numeric { module, source }
}

/// Library errors raised while validating parameters are configuration
/// errors, not crashes.
pub fn config(e: qfisher::Error) -> CliError {
    CliError::Config(e.to_string())
}
