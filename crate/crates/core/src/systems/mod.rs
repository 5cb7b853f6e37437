//! Catalog of concrete autonomous systems with named parameterizations.

pub mod autodetune;
pub mod demo;
pub mod megaphone;

pub use autodetune::{
    AutoDetuneParams, ExtendedAutoDetuneParams, Schedule, DELTA_INDEX,
};
pub use demo::AutonomizeStyle;
pub use megaphone::MegaphoneParams;

/// String ids accepted in configuration files.
pub const SYSTEM_IDS: &[&str] = &["autodetune", "autodetune_ext", "megaphone", "demo_forced"];
