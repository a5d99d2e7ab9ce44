//! Performance-engineering toolkit around the Himeno point-Jacobi benchmark.
//!
//! Two halves, sharing one set of domain types:
//!
//! * [`himeno`] is a functional, deterministic single-precision implementation
//!   of the benchmark itself. It is the numerical ground truth and the source
//!   of the flop/byte counts used by the performance model.
//! * [`model`], [`sim`], [`guidance`] and [`scenarios`] describe an FPGA-style
//!   dataflow kernel (stages, bounded streams, memory ports, HBM channels),
//!   simulate it cycle by cycle with backpressure, check the simulation
//!   against a closed-form bottleneck oracle, and run profiler-style guidance
//!   rules over the results.

pub mod error;
pub mod guidance;
pub mod himeno;
pub mod model;
pub mod profile;
pub mod scenarios;
pub mod sim;

pub use error::{Error, Result};
