use thiserror::Error;

/// Errors raised by the analysis, allocation and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input failed validation before any computation took place.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A closed form produced a value that is not a probability.
    #[error("numerical consistency violated in {context}: value {value} outside [0, 1]")]
    Numerical { context: &'static str, value: f64 },

    /// The primary QoS budget leaves no room for secondary transmission (g = 1).
    #[error("secondary transmission forbidden: primary QoS constraint leaves no power budget (g = 1)")]
    SecondaryForbidden,

    /// An operation was called outside its domain (empty decoding set, no relays, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Exact subset enumeration was requested for too many relays.
    #[error("{relays} relays exceed the exact-enumeration limit of {max}: cost grows as 3^M subset pairs")]
    Capacity { relays: usize, max: usize },

    /// The relay power cap P_r = P_u s_uv (g - 1) / (D_u s_rv) is undefined for a zero primary rate.
    #[error("relay power cap undefined: primary rate R_u = 0 gives an unbounded secondary power budget")]
    UndefinedPowerCap,

    /// A conditional Monte Carlo estimate saw too few conditioning events.
    #[error("insufficient conditioning events: observed {observed}, need at least {required}")]
    InsufficientConditioning { observed: u64, required: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
