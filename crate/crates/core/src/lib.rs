//! GIT heights of zero-cycles and hyperplane arrangements over Q.
//!
//! A zero-cycle is a [`Configuration`] of vectors with positive rational
//! multiplicities. The crate decides its Chow (semi)stability exactly,
//! decomposes semistable cycles into bases, and bounds its height place by
//! place: numerically at infinity, exactly or by search at the primes.

#![no_std]

extern crate alloc;

pub mod arch;
pub mod chow;
pub mod config;
pub mod decompose;
pub mod duality;
pub mod error;
pub mod height;
pub mod linalg;
pub mod nonarch;
pub mod section;
pub mod stability;

pub use config::{Configuration, Point};
pub use error::{Error, Result};
pub use linalg::{Rational, RationalMatrix, RationalVector};
pub use stability::{check_stability, StabilityStatus, StabilityVerdict, SubspaceWitness};
