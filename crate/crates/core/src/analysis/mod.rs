//! Offline and streaming analyses of rendered trajectories.

pub mod equilibrium;
pub mod poincare;
pub mod quadrature;
pub mod rotation;
pub mod spectrum;

pub use equilibrium::{equilibrium_detect, EquilibriumSensor, StreamingEquilibrium};
pub use poincare::{poincare_section, CrossDirection, SectionSpec};
pub use quadrature::theta_average_oracle;
pub use rotation::{
    rotation_number, staircase_sweep, RotationNumber, StaircaseConfig, StaircasePoint,
};
pub use spectrum::{spectral_slope, welch_psd};
