//! Numerical core for recovering stationary Lorentzian metrics from
//! boundary time separations: metric families, null geodesic flow,
//! boundary data, straightening, the pseudolinearization identity, Fourier
//! reconstruction and the Riemannian specialization.
//!
//! `no_std` with `alloc`; enable the `std` feature for `std::error::Error`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boundary;
pub mod error;
pub mod families;
pub mod flow;
pub mod fourier;
pub mod identity;
pub mod lattice;
pub mod linalg;
pub mod metric;
pub mod riemannian;
pub mod scalar;
pub mod straighten;
pub mod sum;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
