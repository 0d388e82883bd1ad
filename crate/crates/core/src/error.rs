use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("occupation has {got} modes, state has {expected}")]
    ModeMismatch { expected: usize, got: usize },

    #[error("total photon number {total} exceeds cutoff {cutoff}")]
    CutoffExceeded { total: usize, cutoff: usize },

    #[error("mode {mode} out of range for {modes} modes")]
    InvalidMode { mode: usize, modes: usize },

    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),

    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("photon number mismatch: {input} in, {output} out")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("element {0} is not a passive linear-optical element")]
    NonLinearElement(&'static str),

    #[error("loss element present in a pure-state run")]
    LossInPureRun,

    #[error("source mode {0} is not vacuum in the input state")]
    OccupiedSource(usize),

    #[error("invalid herald specification: {0}")]
    InvalidHerald(String),

    #[error("input has more than two photons on the signal mode")]
    TooManyPhotons,

    #[error("nonlinear sign gate not verified: {0}")]
    UnverifiedNs(String),

    #[error("gate constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("unverified gate: {0}")]
    UnverifiedGate(String),

    #[error("no feasible point found: {0}")]
    Infeasible(String),

    #[error("amplitudes are not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
