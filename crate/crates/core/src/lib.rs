//! Synthesis, simulation and verification of the explicit family of
//! nonlinear matching control laws for the ball-and-beam.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod controller;
pub mod error;
pub mod family;
pub mod ode;
pub mod plant;
pub mod poly;
pub mod quad;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use family::{FamilySpec, GeneratorSpec, GeometryAt};
pub use plant::{Metric2, PlantParams, State};
pub use poly::Poly;
