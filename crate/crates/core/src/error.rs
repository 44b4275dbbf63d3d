use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum NskError {
    #[error("mesh {m}x{n} too small: stencils need at least 3 cells per axis")]
    StencilWidth { m: usize, n: usize },

    #[error("density {value:e} at cell ({i}, {j}) violates positivity (floor {floor:e})")]
    Positivity {
        i: usize,
        j: usize,
        value: f64,
        floor: f64,
    },

    #[error("fields live on different meshes ({0}x{1} vs {2}x{3})")]
    MeshMismatch(usize, usize, usize, usize),

    #[error("field has {got} values, mesh expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shift offset {0} outside [-2, 2]")]
    ShiftOutOfRange(isize),

    #[error("{what} requires a positive density, got {value:e}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("Runge-Kutta stage {stage} failed: {source}")]
    Stage {
        stage: u8,
        #[source]
        source: Box<NskError>,
    },

    #[error("at t = {t:.6e}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<NskError>,
    },

    #[error("step budget of {max_steps} exhausted at t = {t:.6e} before t_end")]
    StepBudget { max_steps: usize, t: f64 },

    #[error("discrete energy grew from {previous:.12e} to {current:.12e} at t = {t:.6e}")]
    EnergyGrowth { t: f64, previous: f64, current: f64 },

    #[error("energy rate {rate:.6e} exceeds dissipation bound {bound:.6e} at t = {t:.6e}")]
    DissipationViolated { t: f64, rate: f64, bound: f64 },

    #[error("trajectory too sparse: records {index} and {next} differ by {jump:.3e} in L1 (limit {limit:.3e})", next = index + 1)]
    TrajectoryTooSparse { index: usize, jump: f64, limit: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("level {m}x{n}: {source}")]
    Level {
        m: usize,
        n: usize,
        #[source]
        source: Box<NskError>,
    },
}

impl NskError {
    /// Peels `Stage`, `AtTime` and `Level` wrappers.
    pub fn root(&self) -> &NskError {
        match self {
            NskError::Stage { source, .. }
            | NskError::AtTime { source, .. }
            | NskError::Level { source, .. } => source.root(),
            other => other,
        }
    }

    /// Time stamp carried by an `AtTime` wrapper, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            NskError::AtTime { t, .. } => Some(*t),
            NskError::Stage { source, .. } | NskError::Level { source, .. } => source.time(),
            _ => None,
        }
    }
}

pub type Result<T, E = NskError> = std::result::Result<T, E>;
