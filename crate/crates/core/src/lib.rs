//! Deterministic simulation engine for composing with autonomous
//! multi-time-scale dynamical systems.
//!
//! The crate integrates slow-fast and switched ODEs at audio rate with
//! fixed-step RK4, ships a catalog of concrete systems (detuned oscillator
//! pairs and a coupled oscillator network with stepped pitches), runs
//! feature-extractor feedback loops and statistical feedback, and provides
//! the numerical analyses: rotation numbers, staircase sweeps, Poincaré
//! sections, spectral slopes and equilibrium detection.

pub mod analysis;
pub mod error;
pub mod features;
pub mod fefs;
pub mod integrator;
pub mod state;
pub mod statfb;
pub mod system;
pub mod systems;

pub use error::{CoreError, Result};
pub use integrator::{
    classify_manifold_point, integrate, locate_switching, rk4_step, sliding_step, Event,
    EventKind, ManifoldClass, Stepper, Trajectory,
};
pub use state::{Layout, ScaleClass, StateVector, VarSpec};
pub use system::{Region, SystemDefinition};
