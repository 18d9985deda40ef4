use alloc::string::String;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TodaError {
    #[error("winding number undefined: min modulus {min:.3e} below 1e-8 of max modulus {max:.3e}")]
    DegenerateCurve { min: f64, max: f64 },
    #[error("phase increment {0:.6} is not an integer multiple of 2π")]
    UnresolvedWinding(f64),
    #[error("Ein argument |x| = {0:.3} outside the supported disc |x| <= 20")]
    EinOutOfRange(f64),
    #[error("harmonic number requested for p = {0} < -1")]
    HarmonicIndex(i32),
    #[error("invalid Lax symbol: {0}")]
    InvalidLaxSymbol(String),
    #[error("point is not in M1: {0}")]
    NotInM1(String),
    #[error("point is not in M0: {0}")]
    NotInM0(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("|zeta| = {0:.3} outside the deformation disc")]
    ZetaOutOfDisc(f64),
    #[error("Riemann-Hilbert residual {residual:.3e} exceeds {bound:.3e}; enlarge the window")]
    FactorizationResidualTooLarge { residual: f64, bound: f64 },
    #[error("truncation tail {health:.3e} exceeded tolerance at step {step}")]
    TailBlowup { step: usize, health: f64 },
    #[error("evolution left M1 at step {step}: {reason}")]
    LeftManifold { step: usize, reason: String },
    #[error("grid size {0} is not a power of two >= 4")]
    GridSize(usize),
}

pub type Result<T> = core::result::Result<T, TodaError>;
