//! Quadratic-separation stability tests.
//!
//! The coupled system is rewritten as a feedback interconnection
//!
//!   Omega(s) = nabla(s) Z(s),    E Z(s) = A Omega(s),
//!
//! between constant matrices (E, A) carrying the plant data and a diagonal
//! frequency-dependent uncertainty nabla(s) collecting the operators
//! s^(-1), e^(-tau s), the neutral kernel delta(s) = (1+alpha)/(1+alpha
//! e^(-2 tau s)), and projections of the distributed wave state onto
//! shifted Legendre polynomials. Well-posedness of the loop over the
//! closed right half plane implies input/output stability, and it is
//! certified by a quadratic separator Theta: a structured matrix that is
//! negative on the graph of nabla for every s with Re s >= 0 and positive
//! on the kernel of [E  -A]. The first condition is proved once and for
//! all from three bounds (|e^(-tau s)| <= 1, delta inside the disk of
//! center gamma and radius |alpha| gamma, and a Bessel inequality for the
//! Legendre coefficient vector delta_N); the second is a finite LMI in the
//! decision variables (P, Q, R, S) solved numerically.
//!
//! Raising the projection order N enlarges the interconnection, shrinks
//! the kernel, and yields a hierarchy of sufficient tests of nondecreasing
//! strength, at the price of a larger LMI. Order 0 recovers the classical
//! test built on Jensen's inequality.
//!
//! Submodules: [`legendre`] holds the polynomial machinery and the kernel
//! coefficient vector delta_N; [`assembly`] builds (E_N, A_N), the kernel
//! basis, and the separator; [`sdp`] defines the solver-agnostic
//! feasibility problem and the bundled conic backend; [`sdpa`] exports
//! problems in the SDPA sparse format for external solvers; [`feasible`]
//! runs the end-to-end test and re-verifies every certificate.

pub mod assembly;
pub mod feasible;
pub mod legendre;
pub mod sdp;
pub mod sdpa;

pub use assembly::{
    assemble_problem, assemble_separator, separator_negativity_check, QsDims, QsProblem,
    SeparatorParams,
};
pub use feasible::{
    build_feasibility_problem, qs_feasible, FeasibilityProblem, QsReport, QsVerdict,
};
pub use legendre::{delta_n, legendre_bundle, neutral_kernel, LegendreBundle};
pub use sdp::{
    backend_from_env, backend_from_name, AffineMatrixConstraint, ClarabelBackend, LinearRow,
    SdpBackend, SdpOutcome, SdpProblem,
};
pub use sdpa::write_sdpa;
