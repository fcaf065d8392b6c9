//! Exact moment recurrences, Poisson–Charlier de-Poissonization and
//! Laplace–Mellin asymptotic constants for random digital search trees.
//!
//! Builds without `std` (with `alloc`); the `std` feature only switches the
//! crate attribute so that downstream binaries can use the default.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod depoisson;
pub mod exppoly;
pub mod moments;
pub mod partial;
pub mod qseries;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod special;
pub mod trees;
