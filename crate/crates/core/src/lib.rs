//! Exact and sampled kinematics of a particle hopping on a random discrete space.
//!
//! Model A places the particle on the sites of `M` independent lattice random walks,
//! Model B on `M` Wiener processes observed through a finite partition. The crate
//! builds exact joint laws by enumeration, conditions them on a single space
//! configuration, measures the resulting Bayes defect, checks entropic uncertainty
//! bounds and realizes the conditioned laws as non-commuting operators on a finite
//! Hilbert space. Two small side modules cover point-set distances and a Gaussian
//! "ruler" measurement model.

// `!(x > y)` doubles as a NaN rejection; index loops mirror the matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod par;
pub mod particle;
pub mod prob;
pub mod quadrature;
pub mod removal;
pub mod ruler;
pub mod space;

pub use error::{Error, Result};
pub use prob::{entropy, FiniteDistribution, JointLaw, RngSeed, TransitionKernel};
