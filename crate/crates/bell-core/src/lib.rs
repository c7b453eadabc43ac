//! Simulation toolkit for Bell-CHSH inequality tests with entanglement
//! between a two-level atom and a coherent cavity field.
//!
//! The crate is organized around two independent computation routes that are
//! cross-checked against each other everywhere:
//!
//! * closed-form correlation functions and decoherence maps on coherent-state
//!   dyads ([`correlators`], [`decoherence`]), and
//! * a dense truncated Fock-space simulator that builds every state and
//!   operator explicitly, including a Runge-Kutta Lindblad integrator
//!   ([`fockspace`]).
//!
//! [`bellopt`] maximizes CHSH Bell functions over measurement settings and
//! solves the associated optimality root equations; [`locality`] solves the
//! timing inequalities needed to close the locality loophole.
//!
//! Conventions used throughout: angular frequencies (`chi`) in rad/s, decay
//! rates (`kappa`, `gamma`) in 1/s with `kappa = 1/(2 T_C)` for a photon
//! storage time `T_C`, and the atomic basis ordered as (|e>, |g>).

pub mod bellopt;
pub mod correlators;
pub mod decoherence;
pub mod fockspace;
pub mod locality;
pub mod qcore;

pub use num_complex::Complex64 as C64;
