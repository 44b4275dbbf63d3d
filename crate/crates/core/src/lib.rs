//! Structure-preserving finite-volume solver for the isothermal
//! Navier-Stokes-Korteweg system on the periodic unit square.
//!
//! The core is generic over the floating-point type; the aliases below fix
//! it to `f64` or `f32`.

pub mod consistency;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod model;
pub mod operators;
pub mod real;
pub mod scheme;
pub mod timeloop;

pub use error::{NskError, Result};
pub use real::Real;

pub type Mesh64 = mesh::Mesh<f64>;
pub type GridField64 = mesh::GridField<f64>;
pub type State64 = mesh::State<f64>;
pub type FluidParams64 = model::FluidParams<f64>;
pub type SchemeRhs64 = scheme::SchemeRhs<f64>;
pub type TimeControls64 = timeloop::TimeControls<f64>;
pub type Trajectory64 = timeloop::Trajectory<f64>;
pub type DiagnosticsRow64 = diagnostics::DiagnosticsRow<f64>;
pub type TestFunction64 = consistency::TestFunction<f64>;
pub type ConvergenceReport64 = consistency::ConvergenceReport<f64>;

pub type Mesh32 = mesh::Mesh<f32>;
pub type GridField32 = mesh::GridField<f32>;
pub type State32 = mesh::State<f32>;
pub type FluidParams32 = model::FluidParams<f32>;
pub type TimeControls32 = timeloop::TimeControls<f32>;
