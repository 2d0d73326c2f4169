//! Exact and semiclassical spectra of two-level many-body models with
//! excited-state quantum phase transitions.

pub mod analysis;
pub mod eigen;
pub mod models;
pub mod semiclassics;
