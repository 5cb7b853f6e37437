//! Autonomous reformulations of the driven demo system x' = -x + sin t.
//!
//! The forcing term can be absorbed either by adding a clock variable with
//! unit rate, or by embedding a harmonic oscillator whose first coordinate
//! reproduces sin t from the initial condition (0, 1).

use crate::state::{var, Layout, ScaleClass};
use crate::system::SystemDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutonomizeStyle {
    TimeVariable,
    HarmonicEmbed,
}

impl AutonomizeStyle {
    pub fn parse(id: &str) -> Option<Self> {
        match id {
            "time_variable" => Some(AutonomizeStyle::TimeVariable),
            "harmonic_embed" => Some(AutonomizeStyle::HarmonicEmbed),
            _ => None,
        }
    }
}

pub fn autonomize(style: AutonomizeStyle) -> SystemDefinition {
    match style {
        AutonomizeStyle::TimeVariable => {
            let layout = Layout::new(vec![
                var("x", "1", ScaleClass::Fast),
                var("clock", "s", ScaleClass::Slow),
            ]);
            SystemDefinition::smooth("demo_forced", layout, |s, out| {
                out[0] = -s[0] + s[1].sin();
                out[1] = 1.0;
            })
            .with_initial(vec![0.0, 0.0])
        }
        AutonomizeStyle::HarmonicEmbed => {
            let layout = Layout::new(vec![
                var("x", "1", ScaleClass::Fast),
                var("s", "1", ScaleClass::Fast),
                var("c", "1", ScaleClass::Fast),
            ]);
            SystemDefinition::smooth("demo_forced", layout, |s, out| {
                out[0] = -s[0] + s[1];
                out[1] = s[2];
                out[2] = -s[1];
            })
            .with_initial(vec![0.0, 0.0, 1.0])
        }
    }
}
