use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The magnetisation law violates a structural requirement (ellipticity, mu >= 1).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported expansion order {0} (supported: {1})")]
    UnsupportedOrder(usize, &'static str),

    #[error("Neumann series for 1/(1+f) diverges: sup|f| = {0} >= 1")]
    Divergence(f64),

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("dispersion relation has no positive maximum: beta0 = {beta0} >= threshold {threshold}")]
    NoPositiveMaximum { beta0: f64, threshold: f64 },

    #[error("right-hand side is not in the range of the linear operator: {0}")]
    NotInRange(String),

    #[error("wavevector ({m}, {n}) with |k| = {kmag} is near-resonant with omega = {omega}")]
    NearResonance { m: i32, n: i32, kmag: f64, omega: f64 },

    #[error("transversality coefficient vanishes numerically ({0:e})")]
    DegenerateTransversality(f64),

    #[error("gamma2 requested for a transcritical branch (gamma1 = {0:e})")]
    WrongBranchType(f64),
}
