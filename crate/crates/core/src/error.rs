use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The (p, q, a) triple is outside every existence clause.
    #[error(
        "(p, q, a) = ({p}, {q}, {a:+}) has no ground-state existence result: a ground state \
         is known for a = +1 with q odd (case I), a = -1 with p odd (case II-1), and \
         a = -1 with p even and q odd (case II-2)"
    )]
    UncoveredCase { p: u32, q: u32, a: i8 },

    #[error("not a stationary solution: relative residual {residual:.3e} exceeds {tol:.3e}")]
    NotStationary { residual: f64, tol: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("iteration diverged at step {iteration} (sup norm {norm:.3e})")]
    Diverged { iteration: usize, norm: f64 },

    #[error("iterate lost its sign at step {iteration} (opposite-sign excursion {excursion:.3e})")]
    SignChange { iteration: usize, excursion: f64 },

    #[error(
        "solution violates the stationary identities: nehari {nehari:.3e}, pohozaev \
         {pohozaev:.3e} (tolerance {tol:.1e}); enlarge or refine the grid"
    )]
    IdentityViolation { nehari: f64, pohozaev: f64, tol: f64 },

    #[error("no sign change of the criterion detected for c up to {c_max:e}")]
    NoCrossing { c_max: f64 },

    #[error("modulation lost: {0}")]
    ModulationLost(String),

    #[error("tail fit rejected: {0}")]
    FitRejected(String),

    #[error("tail window too deep: |profile| = {magnitude:.3e} at |x| = {x}")]
    WindowTooDeep { x: f64, magnitude: f64 },

    #[error("oscillatory quadrature did not converge at x = {x}")]
    Quadrature { x: f64 },

    #[error("at c = {c}: {source}")]
    AtSpeed {
        c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_speed(c: f64, err: Error) -> Self {
        Error::AtSpeed {
            c,
            source: Box::new(err),
        }
    }
}
