//! Hydraulic-head surfaces from scattered wells.
//!
//! Sparse observations are turned into a gradually varied surface on a grid,
//! refined by Taylor-expansion smoothing, and advanced in time with a
//! five-point discretisation of the groundwater flow equation.

pub mod cli;
pub mod domain;
pub mod error;
pub mod export;
pub mod field;
pub mod flow;
pub mod gvf;
pub mod ingest;
pub mod smoothing;

pub use error::{Error, Result};
