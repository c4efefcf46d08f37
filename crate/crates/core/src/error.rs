use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected}x{expected} matrix, got {got}x{got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e} exceeds {tol:.3e})")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("density matrix has eigenvalue {min:.3e} below the positivity tolerance")]
    Positivity { min: f64 },

    #[error("trace {trace:.6} deviates from 1 beyond tolerance")]
    Trace { trace: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("k = l = 0 makes the analytic steady state singular")]
    SingularDenominator,

    #[error("steady state is not unique: singular-value gap {gap:.3e} below {tol:.3e}")]
    DegenerateSteadyState { gap: f64, tol: f64 },

    #[error("steady-state solver produced eigenvalue {min:.3e}; kernel vector is not a state")]
    SolverFailure { min: f64 },

    #[error("integration unstable at t = {t:.4}: min eigenvalue {min:.3e}; reduce dt")]
    IntegrationInstability { t: f64, min: f64 },

    #[error("observable is degenerate (eigenvalue gap {gap:.3e})")]
    DegenerateObservable { gap: f64 },

    #[error("grid is not uniform: spacing varies by {dev:.3e}")]
    NonUniformGrid { dev: f64 },

    #[error("unknown figure id `{0}`; valid ids: {1}")]
    UnknownFigure(String, String),

    #[error("config error: {0}")]
    Config(String),
}
