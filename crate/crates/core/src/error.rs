//! Error type shared by every analysis module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed user input: bad dimensions, out-of-range parameters,
    /// unparsable system descriptions. The message names the offending field.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The plant matrix A has an eigenvalue with real part >= -1e-10,
    /// so the H-infinity norm of the plant is not defined.
    #[error("plant is not Hurwitz: eigenvalue with Re >= -1e-10")]
    NotHurwitz,

    /// Retarded channel (alpha = 0): the wave block contributes no poles.
    #[error("channel has no poles (alpha = 0, retarded case)")]
    NoChannelPoles,

    /// Evaluation requested at (or too close to) a pole of the wave
    /// transfer function.
    #[error("evaluation at a channel pole: |1 + alpha e^(-2 s tau)| < 1e-14")]
    AtChannelPole,

    /// The crossing-frequency elimination degenerated; the delay family
    /// cannot be analysed by the resultant route.
    #[error("degenerate delay family: {0}")]
    DegenerateFamily(String),

    /// The delay-free characteristic polynomial has a root within 1e-9 of
    /// the imaginary axis, so the tau = 0+ unstable count is ill defined.
    #[error("marginal root of the delay-free characteristic polynomial (|Re| <= 1e-9)")]
    MarginalAtZero,

    /// Neutral channel with c0 = 0 (alpha = 1): no controller stabilizes
    /// the coupled system for small delays, and the analysis gates refuse it.
    #[error("channel is neutral with |alpha| >= 1 (c0 = 0): not stabilizable, analysis refused")]
    NotStabilizable,

    /// The requested SDP backend cannot be constructed.
    #[error("SDP backend unavailable: {0}")]
    SolverUnavailable(String),

    /// A numerical kernel failed to converge or produced unusable output.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
