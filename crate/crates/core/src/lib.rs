//! Bond-associated correspondence peridynamics with phase-field (PFPD) and
//! critical-stretch damage, explicit dynamics and benchmark scenarios.

pub mod damage;
pub mod discretization;
pub mod error;
pub mod kernels;
pub mod kinematics;
pub mod material;
pub mod normalization;
pub mod quadrature;
pub mod scenarios;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
