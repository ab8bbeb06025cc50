//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Expression text does not match the grammar. `column` is 1-based.
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    /// An identifier that is neither a chart coordinate nor a derived symbol.
    #[error("unknown coordinate `{name}` on chart `{chart}`")]
    UnknownCoordinate { name: String, chart: String },

    /// Evaluation left the domain of a subexpression (division by zero,
    /// sqrt of a negative, log of a non-positive, ...).
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },

    /// Point, field or expression does not live on the expected chart.
    #[error("chart mismatch: expected `{expected}`, got `{got}`")]
    ChartMismatch { expected: String, got: String },

    /// The contact condition fails at a point (Reeb/bivector solve residual
    /// above tolerance), e.g. on the excluded zero section of the free
    /// particle phase space.
    #[error("degenerate point on chart `{chart}`: contact solve residual {residual:.3e} exceeds {tolerance:.1e}")]
    Degenerate {
        chart: String,
        residual: f64,
        tolerance: f64,
    },

    /// A stated precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Newton iteration for a boundary value problem did not converge.
    #[error("Newton iteration did not converge after {iterations} iterations (final residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The Newton system is singular: the boundary value problem is
    /// degenerate (conjugate endpoints).
    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    /// Variation and section grids disagree.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Point handed to a section bracket does not satisfy the section
    /// constraint.
    #[error("point is off the section {section}: |constraint residual| = {residual:.3e}")]
    OffSection { section: String, residual: f64 },

    /// A trajectory entered the excluded region of a system.
    #[error("flow entered the excluded region at parameter {at}")]
    ExcludedRegion { at: f64 },

    /// Malformed run configuration or spec file.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for usage/config
    /// problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::UnknownCoordinate { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Precondition(_)
            | Error::ChartMismatch { .. }
            | Error::GridMismatch(_) => 2,
            _ => 3,
        }
    }
}
