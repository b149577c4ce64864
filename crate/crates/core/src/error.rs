use thiserror::Error;

/// Failure of a single map evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("point lies on a pole (denominator below tolerance)")]
    PoleHit,
    #[error("intermediate exponential left the representable range")]
    OverflowDomain,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    InvalidParams(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("root search failed on branch {branch}")]
    RootSearchFailed { branch: i64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("not enough usable error pairs to estimate the convergence order")]
    InsufficientData,
    #[error("orbit verdict is not a convergence")]
    NotConverged,
    #[error("real orbit requires NH with real parameters")]
    NotRealNh,
    #[error("real iterate landed on the real pole at step {step}")]
    RealPoleCrossing { step: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsvError {
    #[error("cloud is empty")]
    EmptyCloud,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FatouError {
    #[error("seed orbit is undecided; it has no label")]
    UnlabeledSeed,
    #[error("grid resolution must be at least 2 in each axis")]
    BadResolution,
    #[error("invalid ray parameters: {0}")]
    BadRays(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("certified bound straddles the threshold (sampled {sampled}, certified {certified}, threshold {threshold})")]
    MarginInconclusive {
        sampled: f64,
        certified: f64,
        threshold: f64,
    },
    #[error("orbit verdict fired at step {step}, before n_max/2")]
    OrbitTooShort { step: usize },
    #[error("no postsingular points found near radius {radius}")]
    NoPointsFound { radius: f64 },
    #[error("setup infeasible: {0}")]
    SetupInfeasible(String),
    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Fatou(#[from] FatouError),
    #[error(transparent)]
    Psv(#[from] PsvError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}
