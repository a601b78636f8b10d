use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown scheme '{0}' (expected robust, eit or ssh)")]
    UnknownScheme(String),

    #[error("SSh coupling absent; Fano alternative requires ΩB = −ν with ηB = 0")]
    SshCouplingAbsent,

    #[error("perturbative formula undefined: {0}")]
    PerturbativeUndefined(&'static str),

    #[error("degenerate null space: {dimension} near-zero pivots at tolerance {tolerance:e}")]
    DegenerateNullSpace { dimension: usize, tolerance: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("integrator step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("null space of L0 does not match |−⟩⟨−|⊗|n⟩⟨n| (defect {defect:e})")]
    NullSpaceMismatch { defect: f64 },

    #[error("population flow is not linear in n (spread {spread:e}); perturbative regime violated")]
    NonlinearFlow { spread: f64 },

    #[error("poor power-law fit: R² = {r2:.4} (slope {slope:.3}) on {points} points")]
    PoorFit { r2: f64, slope: f64, points: usize },

    #[error("no real ΩA: |δe − δ+| = {0} exceeds ν")]
    NoRealOmegaA(f64),

    #[error("⟨e|k⟩ never changes sign on the eigenvalue grid")]
    NoCrossing,

    #[error("Raman detuning at the trap frequency pole |Δ′| = ν")]
    PoleAtTrapFrequency,

    #[error("infinite Lamb-Dicke ratio at {0} rad")]
    InfiniteRatio(f64),

    #[error("state space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("jump probability per step exceeds 0.1 even at dt = {dt:e}")]
    StepRuleViolation { dt: f64 },

    #[error("records do not share a time grid")]
    MismatchedGrids,
}
