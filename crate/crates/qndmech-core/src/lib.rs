//! Gaussian-state engine for a pulsed QND interface between two distant
//! mechanical oscillators coupled through a travelling optical or microwave
//! pulse.
//!
//! The crate is organised around four layers:
//!
//! * [`gaussian`] — means/covariance states, symplectic maps, Gaussian
//!   channels, homodyne conditioning, feedforward and the logarithmic
//!   negativity of two-mode states.
//! * [`protocol`] — closed-form transfer models of the protocol acting on
//!   the four mechanical quadratures `(q1, p1, q2, p2)`: the adiabatic
//!   solution, the full intracavity solution, the counter-rotating
//!   (beyond-RWA) solution, and the approximate entanglement formulas.
//! * [`timebin`] — an independent time-bin discretisation of the travelling
//!   pulse used as a numerical oracle for every analytic model.
//! * [`optimize`] — derivative-free maximisation of the entanglement under
//!   a ceiling on the optomechanical coupling rate.
//!
//! Conventions, used consistently everywhere:
//!
//! * quadratures are ordered `(q, p)` per mode and interleaved,
//!   `q1, p1, q2, p2, ...`; optical `X` is the q-type and `Y` the p-type
//!   quadrature;
//! * `[q, p] = i` and each vacuum quadrature variance is `1/2`, so the
//!   logarithmic negativity `max(0, -ln 2nu_-)` vanishes on vacuum;
//! * squeezing is the amplitude factor `S` (`X -> S X`), reported on user
//!   surfaces in decibels as `20 log10 S`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod gaussian;
pub mod linalg;
pub mod optimize;
pub mod protocol;
pub mod timebin;

mod error;
mod math;

pub use error::{Error, Result};
pub use gaussian::{GaussianChannel, GaussianState, Quadrature, SymplecticMap};
pub use protocol::{BathMode, ModelKind, ProtocolParams, SimResult, TransferModel};
pub use timebin::{Integrator, SimConfig};
