use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by state construction, model assembly and simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed validation; carries the parameter name and the
    /// offending value.
    InvalidParameter { name: &'static str, value: f64 },
    /// A requested mode index is out of range for the state.
    ModeOutOfRange { mode: usize, n_modes: usize },
    /// Two mode arguments that must differ were equal.
    SameMode { mode: usize },
    /// A matrix does not satisfy `S Omega S^T = Omega`; carries the
    /// max-norm residual.
    NonSymplectic { residual: f64 },
    /// A covariance matrix violates the uncertainty bound; carries the
    /// minimum eigenvalue of `V + (i/2) Omega`.
    NonPhysical { min_eigenvalue: f64 },
    /// Matrix or vector dimensions are inconsistent.
    DimensionMismatch { expected: usize, got: usize },
    /// An empty mode-selection was supplied where at least one is needed.
    EmptySelection,
    /// A quadrature/integration routine failed to reach its tolerance;
    /// carries the error estimate.
    QuadratureNotConverged { estimate: f64 },
    /// Time-bin refinement failed to reach the requested tolerance;
    /// carries the last `|E(2N) - E(N)|` estimate.
    NotConverged { estimate: f64, n_bins: usize },
    /// A simulation produced a nonphysical intermediate state.
    NonPhysicalStep { step: usize, min_eigenvalue: f64 },
    /// The search space contains no feasible point.
    Infeasible,
    /// A requested grid is too large to evaluate.
    GridTooLarge { points: u64, limit: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            Error::ModeOutOfRange { mode, n_modes } => {
                write!(f, "mode {mode} out of range for {n_modes}-mode state")
            }
            Error::SameMode { mode } => {
                write!(f, "distinct modes required, both arguments are mode {mode}")
            }
            Error::NonSymplectic { residual } => {
                write!(
                    f,
                    "matrix is not symplectic, |S Omega S^T - Omega| = {residual:e}"
                )
            }
            Error::NonPhysical { min_eigenvalue } => {
                write!(
                    f,
                    "covariance is not physical, min eig(V + i/2 Omega) = {min_eigenvalue:e}"
                )
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptySelection => write!(f, "at least one mode must be kept"),
            Error::QuadratureNotConverged { estimate } => {
                write!(f, "quadrature error estimate {estimate:e} above tolerance")
            }
            Error::NotConverged { estimate, n_bins } => {
                write!(
                    f,
                    "time-bin refinement stalled at N = {n_bins} (|dE| = {estimate:e})"
                )
            }
            Error::NonPhysicalStep {
                step,
                min_eigenvalue,
            } => {
                write!(
                    f,
                    "nonphysical covariance at step {step} (min eig = {min_eigenvalue:e})"
                )
            }
            Error::Infeasible => write!(f, "no feasible point in the search space"),
            Error::GridTooLarge { points, limit } => {
                write!(f, "grid of {points} points exceeds the {limit}-point limit")
            }
        }
    }
}

impl core::error::Error for Error {}
