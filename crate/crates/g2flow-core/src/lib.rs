//! Numerical exterior calculus and ODE flows for G₂-structures of
//! cohomogeneity one under SU(3), Sp(2) and G₂.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature only
//! enables `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;

pub mod boundary;
pub mod cohom1;
pub mod exterior;
pub mod flows;
pub mod g2core;
pub mod linalg;
pub mod numeric;
pub mod orbits;
pub mod profile;

pub use exterior::{KForm, MetricTensor, Orientation};
pub use orbits::{ModelId, OrbitModel};
pub use profile::{Profile, Radii};
