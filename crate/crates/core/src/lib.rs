//! Thermodynamic formalism for Walters potentials on the full two-shift.
//!
//! The crate is organized around the weight sequence `eta_n` ([`seq`]),
//! from which the potential, its eigendata and the Jacobian ([`potential`])
//! follow in closed form. [`renorm`] and [`cantor`] build fixed points of
//! the two renormalization operators, [`decay`] runs the renewal recursions
//! for the correlation of the indicator of `[0]`, and [`oracle`] is an
//! independent run-length Markov chain used to check all of it.

pub mod cantor;
pub mod certified;
pub mod decay;
pub mod error;
pub mod oracle;
pub mod potential;
pub mod renorm;
pub mod seq;
pub mod summation;

pub use certified::Certified;
pub use error::{Error, Result};
pub use seq::{DecayTarget, DominatingBound, EtaSequence, Family, WaltersCoefficients};
