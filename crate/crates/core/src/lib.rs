//! State estimation and subspace data attacks on power-grid measurements.
//!
//! The crate is organised the way the data flows:
//!
//! * [`grid`] holds a network case, its AC real-power measurement function
//!   and DC measurement matrix, and seeded measurement sampling.
//! * [`estimation`] is the fusion center: WLS estimation, the J-test and
//!   largest-normalized-residue bad-data removal.
//! * [`observability`] answers rank and graph questions about sensor sets.
//! * [`attack`] is the adversary: subspace estimation from measurement data,
//!   unobservable attacks and data-framing attacks.

pub mod attack;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod linalg;
pub mod observability;

pub use error::{Error, Result};
