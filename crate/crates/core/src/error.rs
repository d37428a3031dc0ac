use std::path::PathBuf;

/// Errors raised anywhere in the guidance, control and analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative thrust {0} N is not a feasible command")]
    NegativeThrust(f64),
    #[error("attitude at gimbal lock (roll angle {0} rad)")]
    GimbalLock(f64),
    #[error("inertial speed {0} m/s is below the planar model floor")]
    SingularFlightPath(f64),
    #[error("mixing matrix is singular")]
    SingularMixer,
    #[error("mission is infeasible: {0}")]
    InfeasibleMission(String),
    #[error("planner did not converge: {0}")]
    SolverFailed(Box<crate::planner::SolverFailure>),
    #[error("simulation diverged at t = {time:.3} s (position error {error:.2} m)")]
    Diverged {
        time: f64,
        error: f64,
        log: Box<crate::sim::SimLog>,
    },
    #[error("robust gain condition violated: need min diag(K_DX) > {required:.4}, have {actual:.4}")]
    RobustConditionViolated { required: f64, actual: f64 },
    #[error("regression is degenerate: {0}")]
    DegenerateRegression(String),
    #[error("trajectory does not cover t = {0} s")]
    TrajectoryCoverage(f64),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
