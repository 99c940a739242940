#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod classical;
pub mod error;
pub mod harness;
pub mod observables;
pub mod params;
pub mod sde;
pub mod validation;

pub use error::{OpoError, Result};
