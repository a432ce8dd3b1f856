//! Pseudo-spectral simulator and verification lab for the inertial
//! Ericksen-Leslie system.

pub mod diagnostics;
pub mod dynamics;
pub mod formats;
pub mod harness;
pub mod integrator;
pub mod spectral;
pub mod verification;
