//! Stability analysis of finite-dimensional LTI plants in feedback with a
//! damped string channel.
//!
//! The plant Xdot = A X + B (u(1,t) + r(t)) is driven by the far end of a
//! unit-length wave equation u_tt = c^2 u_xx whose near end tracks the
//! output, u(0,t) = K X(t), and whose far end is damped,
//! u_x(1,t) = -c0 u_t(1,t). Stability of the closed loop is decided three
//! independent ways: exact delay-crossing analysis of the characteristic
//! quasipolynomial, a frequency-domain small-gain test, and a hierarchy of
//! semidefinite feasibility problems built on Legendre projections of the
//! delayed signal. A time-domain simulator of the equivalent neutral
//! delay-differential equation cross-checks all three.

pub mod ctcr;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod mapper;
pub mod model;
pub mod ndde;
pub mod poly;
pub mod qs;
pub mod smallgain;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{CoupledSystem, LtiPlant, SystemClass, SystemKind, WaveChannel};
pub use poly::Poly;
pub use transfer::{QuasiPolynomial, RationalTf};
