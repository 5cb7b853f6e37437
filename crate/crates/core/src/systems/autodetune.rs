//! Two phase oscillators whose mutual detuning is driven by the amplitude
//! of their summed output.
//!
//! State layout is `[theta1, theta2, delta]` with
//!
//! ```text
//! theta1' = omega + delta
//! theta2' = omega - delta
//! delta'  = c * |sin(theta1) + sin(theta2)| - delta
//! ```
//!
//! The detuning is kept nonnegative by clamping after every step; the
//! equations alone do not structurally prevent a negative excursion at
//! extreme drive.

use crate::error::{CoreError, Result};
use crate::state::{var, Layout, ScaleClass};
use crate::system::SystemDefinition;

pub const DELTA_INDEX: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoDetuneParams {
    /// Base angular frequency in rad/s.
    pub omega: f64,
    /// Drive gain; zero severs the feedback and the detuning decays.
    pub c: f64,
}

impl Default for AutoDetuneParams {
    fn default() -> Self {
        AutoDetuneParams { omega: 1.0, c: 0.2 }
    }
}

impl AutoDetuneParams {
    pub fn validate(&self) -> Result<()> {
        if self.c < 0.0 {
            return Err(CoreError::invalid("autodetune: c must be >= 0"));
        }
        Ok(())
    }
}

pub fn deriv(s: &[f64], p: &AutoDetuneParams, out: &mut [f64]) {
    let drive = (s[0].sin() + s[1].sin()).abs();
    out[0] = p.omega + s[2];
    out[1] = p.omega - s[2];
    out[2] = p.c * drive - s[2];
}

pub fn layout() -> std::sync::Arc<Layout> {
    Layout::new(vec![
        var("theta1", "rad", ScaleClass::Fast),
        var("theta2", "rad", ScaleClass::Fast),
        var("delta", "rad/s", ScaleClass::Slow),
    ])
}

/// Phases are left unwrapped so rotation numbers can be read off directly.
pub fn system(p: AutoDetuneParams) -> Result<SystemDefinition> {
    p.validate()?;
    let sys = SystemDefinition::smooth("autodetune", layout(), move |s, out| deriv(s, &p, out))
        .with_post_step(|s| s[DELTA_INDEX] = s[DELTA_INDEX].max(0.0))
        .with_bias_port(DELTA_INDEX)
        .with_initial(vec![0.0, 0.0, 0.0]);
    Ok(sys)
}

/// Piecewise-constant lookup table from time to value.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    points: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            points: vec![(0.0, value)],
        }
    }

    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::invalid("schedule must have at least one point"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CoreError::invalid("schedule times must be strictly increasing"));
        }
        Ok(Schedule { points })
    }

    /// Value of the most recent point at or before `t`; the first value
    /// applies before the first point.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.points[0].1;
        for &(pt, pv) in &self.points {
            if pt <= t {
                v = pv;
            } else {
                break;
            }
        }
        v
    }

    pub fn is_constant(&self) -> bool {
        self.points.len() == 1
            || self.points.iter().all(|&(_, v)| v == self.points[0].1)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Auto-detuning with phase dividers and scheduled parameters. Dividing
/// the phase arguments by `K >> 1` turns audio-rate phases into much
/// slower drive signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedAutoDetuneParams {
    pub k1: f64,
    pub k2: f64,
    pub omega_t: Schedule,
    pub c_t: Schedule,
}

impl Default for ExtendedAutoDetuneParams {
    fn default() -> Self {
        ExtendedAutoDetuneParams {
            k1: 1000.0,
            k2: 1000.0,
            omega_t: Schedule::constant(1.0),
            c_t: Schedule::constant(0.2),
        }
    }
}

impl ExtendedAutoDetuneParams {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < 1.0 || self.k2 < 1.0 {
            return Err(CoreError::invalid("autodetune_ext: K1 and K2 must be >= 1"));
        }
        Ok(())
    }

    pub fn is_autonomous(&self) -> bool {
        self.omega_t.is_constant() && self.c_t.is_constant()
    }
}

/// Derivative of the 3-variable extended system at explicit time `t`.
pub fn extended_deriv(s: &[f64], p: &ExtendedAutoDetuneParams, t: f64, out: &mut [f64]) {
    let omega = p.omega_t.value_at(t);
    let c = p.c_t.value_at(t);
    let drive = ((s[0] / p.k1).sin() + (s[1] / p.k2).sin()).abs();
    out[0] = omega + s[2];
    out[1] = omega - s[2];
    out[2] = c * drive - s[2];
}

/// The extended system embedded as an autonomous system with a clock
/// variable; schedules read the clock rather than external time.
pub fn extended_system(p: ExtendedAutoDetuneParams) -> Result<SystemDefinition> {
    p.validate()?;
    let layout = Layout::new(vec![
        var("theta1", "rad", ScaleClass::Fast),
        var("theta2", "rad", ScaleClass::Fast),
        var("delta", "rad/s", ScaleClass::Slow),
        var("clock", "s", ScaleClass::Slow),
    ]);
    let sys = SystemDefinition::smooth("autodetune_ext", layout, move |s, out| {
        extended_deriv(&s[..3], &p, s[3], &mut out[..3]);
        out[3] = 1.0;
    })
    .with_post_step(|s| s[DELTA_INDEX] = s[DELTA_INDEX].max(0.0))
    .with_bias_port(DELTA_INDEX)
    .with_initial(vec![0.0, 0.0, 0.0, 0.0]);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::integrate;

    #[test]
    fn deriv_at_zero_phases() {
        let p = AutoDetuneParams { omega: 1.0, c: 0.3 };
        let mut out = [0.0; 3];
        deriv(&[0.0, 0.0, 0.0], &p, &mut out);
        assert_eq!(out, [1.0, 1.0, 0.0]);
    }

    #[test]
    fn deriv_direct_substitution() {
        let p = AutoDetuneParams { omega: 1.0, c: 0.5 };
        let mut out = [0.0; 3];
        let half_pi = std::f64::consts::FRAC_PI_2;
        deriv(&[half_pi, half_pi, 0.1], &p, &mut out);
        assert!((out[0] - 1.1).abs() < 1e-15);
        assert!((out[1] - 0.9).abs() < 1e-15);
        assert!((out[2] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_drive_decays_exponentially() {
        // With c = 0 the detuning obeys delta' = -delta exactly.
        let sys = system(AutoDetuneParams { omega: 1.0, c: 0.0 }).unwrap();
        let s0 = sys.state(vec![0.0, 0.0, 0.5]);
        let traj = integrate(&sys, &s0, 5.0, 0.001, 100).unwrap();
        for i in 0..traj.len() {
            let t = traj.t_at(i);
            let expected = 0.5 * (-t).exp();
            assert!(
                (traj.sample(i)[2] - expected).abs() < 1e-10,
                "delta at t={t} deviates from exact decay"
            );
        }
    }

    #[test]
    fn equal_phases_stay_equal_without_drive() {
        let sys = system(AutoDetuneParams { omega: 2.0, c: 0.0 }).unwrap();
        let s0 = sys.state(vec![0.7, 0.7, 0.0]);
        let traj = integrate(&sys, &s0, 3.0, 0.001, 50).unwrap();
        for i in 0..traj.len() {
            let s = traj.sample(i);
            assert_eq!(s[0], s[1]);
        }
    }

    #[test]
    fn delta_stays_nonnegative() {
        let sys = system(AutoDetuneParams { omega: 1.0, c: 3.0 }).unwrap();
        let s0 = sys.state(vec![0.3, 1.9, 0.0]);
        let traj = integrate(&sys, &s0, 20.0, 0.001, 10).unwrap();
        assert!(traj.var(DELTA_INDEX).all(|d| d >= 0.0));
    }

    #[test]
    fn negative_c_rejected() {
        assert!(system(AutoDetuneParams { omega: 1.0, c: -0.1 }).is_err());
    }

    #[test]
    fn schedule_lookup_is_piecewise_constant() {
        let sch = Schedule::new(vec![(0.0, 1.0), (2.0, 5.0)]).unwrap();
        assert_eq!(sch.value_at(-1.0), 1.0);
        assert_eq!(sch.value_at(0.0), 1.0);
        assert_eq!(sch.value_at(1.999), 1.0);
        assert_eq!(sch.value_at(2.0), 5.0);
        assert_eq!(sch.value_at(100.0), 5.0);
        assert!(!sch.is_constant());
        assert!(Schedule::constant(3.0).is_constant());
    }

    #[test]
    fn extended_with_unit_dividers_matches_base() {
        let base = AutoDetuneParams { omega: 1.3, c: 0.4 };
        let ext = ExtendedAutoDetuneParams {
            k1: 1.0,
            k2: 1.0,
            omega_t: Schedule::constant(1.3),
            c_t: Schedule::constant(0.4),
        };
        let s = [0.6, -0.2, 0.15];
        let mut out_base = [0.0; 3];
        let mut out_ext = [0.0; 3];
        deriv(&s, &base, &mut out_base);
        extended_deriv(&s, &ext, 7.0, &mut out_ext);
        assert_eq!(out_base, out_ext);
    }

    #[test]
    fn extended_deriv_with_quarter_period_phases() {
        let ext = ExtendedAutoDetuneParams {
            k1: 8.0,
            k2: 16.0,
            omega_t: Schedule::constant(1.0),
            c_t: Schedule::constant(0.5),
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        let s = [half_pi * 8.0, half_pi * 16.0, 0.0];
        let mut out = [0.0; 3];
        extended_deriv(&s, &ext, 0.0, &mut out);
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert!((out[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_division_slows_the_drive_envelope() {
        // The beat of |sin(theta1/K) + sin(theta2/K)| scales as 1/K, so the
        // dominant cycle of delta should be about 1000x longer for K = 1000.
        let omega = 100.0;
        let measure_cycle = |k: f64, duration: f64, dt: f64| -> f64 {
            let p = ExtendedAutoDetuneParams {
                k1: k,
                k2: k,
                omega_t: Schedule::constant(omega),
                c_t: Schedule::constant(0.5),
            };
            let sys = extended_system(p).unwrap();
            let s0 = sys.state(vec![0.0, 0.0, 0.0, 0.0]);
            let traj = integrate(&sys, &s0, duration, dt, 1).unwrap();
            let delta: Vec<f64> = traj.var(DELTA_INDEX).collect();
            let burn = delta.len() / 4;
            let tail = &delta[burn..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            // Count mean crossings of the detuning envelope: one cycle is
            // two crossings.
            let mut crossings = 0usize;
            for w in tail.windows(2) {
                if (w[0] - mean).signum() != (w[1] - mean).signum() {
                    crossings += 1;
                }
            }
            let span = (tail.len() - 1) as f64 * traj.dt;
            2.0 * span / crossings.max(1) as f64
        };
        let fast = measure_cycle(1.0, 2.0, 1e-4);
        let slow = measure_cycle(1000.0, 400.0, 1e-2);
        let ratio = slow / fast;
        assert!(
            (300.0..3000.0).contains(&ratio),
            "expected ~1000x slower drive cycle, measured ratio {ratio:.1}"
        );
    }
}
