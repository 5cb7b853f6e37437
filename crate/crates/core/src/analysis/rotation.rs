//! Rotation numbers of phase pairs and parameter sweeps over the
//! auto-detuning drive gain.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::integrator::{Stepper, Trajectory};
use crate::systems::autodetune::{self, AutoDetuneParams};

/// Rotation number estimates for one trajectory.
///
/// `ratio` is the phase-growth ratio over the analysed span, which is
/// origin-independent. `literal` is the time average of the pointwise
/// phase quotient theta1/theta2; it converges to the same value for
/// linear phase growth but depends on the phase origins, so it is
/// reported alongside rather than instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationNumber {
    pub ratio: f64,
    pub literal: f64,
}

/// Estimate the rotation number from two unwrapped phase columns,
/// discarding everything before `t_burn`.
pub fn rotation_number(
    traj: &Trajectory,
    phase1: usize,
    phase2: usize,
    t_burn: f64,
) -> Result<RotationNumber> {
    if traj.len() < 2 {
        return Err(CoreError::TooShort {
            need: 2,
            got: traj.len(),
        });
    }
    let start = traj.index_at_time(t_burn);
    let end = traj.len() - 1;
    if end <= start {
        return Err(CoreError::TooShort {
            need: start + 2,
            got: traj.len(),
        });
    }
    let th1_start = traj.sample(start)[phase1];
    let th2_start = traj.sample(start)[phase2];
    let th1_end = traj.sample(end)[phase1];
    let th2_end = traj.sample(end)[phase2];
    let denom = th2_end - th2_start;
    if denom <= 0.0 {
        return Err(CoreError::NonMonotonePhase);
    }
    let ratio = (th1_end - th1_start) / denom;

    // Trapezoid average of the pointwise quotient.
    let mut sum = 0.0;
    let mut prev_q = traj.sample(start)[phase1] / traj.sample(start)[phase2];
    for i in start + 1..=end {
        let q = traj.sample(i)[phase1] / traj.sample(i)[phase2];
        sum += 0.5 * (q + prev_q);
        prev_q = q;
    }
    let literal = sum / (end - start) as f64;

    Ok(RotationNumber { ratio, literal })
}

/// One point of the detune-average staircase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircasePoint {
    pub c: f64,
    pub delta_avg: f64,
    pub rotation: f64,
}

/// Sweep configuration; the defaults reproduce the staircase structure at
/// desk scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub steps: usize,
    pub omega: f64,
    pub duration: f64,
    pub dt: f64,
    /// Fraction of the run discarded before averaging.
    pub burn_frac: f64,
    pub initial: [f64; 3],
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        StaircaseConfig {
            c_min: 0.0,
            c_max: 1.0,
            steps: 512,
            omega: 1.0,
            duration: 500.0,
            dt: 1e-3,
            burn_frac: 0.25,
            initial: [0.0, 0.0, 0.0],
        }
    }
}

impl StaircaseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(CoreError::invalid("sweep: steps must be at least 2"));
        }
        if !(self.c_min <= self.c_max) {
            return Err(CoreError::invalid("sweep: c_min must not exceed c_max"));
        }
        if self.duration <= 0.0 || self.dt <= 0.0 {
            return Err(CoreError::invalid("sweep: duration and dt must be positive"));
        }
        if !(0.0..1.0).contains(&self.burn_frac) {
            return Err(CoreError::invalid("sweep: burn fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn c_values(&self) -> Vec<f64> {
        let span = self.c_max - self.c_min;
        (0..self.steps)
            .map(|i| self.c_min + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Integrate one sweep point, streaming the post-burn detune average and
/// the phase growth instead of storing the trajectory.
fn sweep_point(cfg: &StaircaseConfig, c: f64) -> Result<StaircasePoint> {
    let sys = autodetune::system(AutoDetuneParams { omega: cfg.omega, c })?;
    let n_steps = (cfg.duration / cfg.dt).round() as usize;
    let burn_steps = (n_steps as f64 * cfg.burn_frac).round() as usize;
    let mut stepper = Stepper::new(&sys, cfg.initial.to_vec(), 0.0, cfg.dt)?;
    let mut delta_sum = 0.0;
    let mut averaged = 0usize;
    let mut phases_at_burn = (0.0, 0.0);
    for step in 1..=n_steps {
        stepper.step().map_err(|e| {
            CoreError::invalid(format!("sweep point c = {c}: {e}"))
        })?;
        if step == burn_steps {
            let s = stepper.state();
            phases_at_burn = (s[0], s[1]);
        }
        if step > burn_steps {
            delta_sum += stepper.state()[2];
            averaged += 1;
        }
    }
    let s = stepper.state();
    let denom = s[1] - phases_at_burn.1;
    if denom <= 0.0 {
        return Err(CoreError::NonMonotonePhase);
    }
    let rotation = (s[0] - phases_at_burn.0) / denom;
    Ok(StaircasePoint {
        c,
        delta_avg: delta_sum / averaged.max(1) as f64,
        rotation,
    })
}

/// Sweep the drive gain; every point integrates independently from the
/// same initial state, so parallel and serial execution produce identical
/// results.
pub fn staircase_sweep(cfg: &StaircaseConfig, parallel: bool) -> Result<Vec<StaircasePoint>> {
    cfg.validate()?;
    let cs = cfg.c_values();
    if parallel {
        cs.par_iter().map(|c| sweep_point(cfg, *c)).collect()
    } else {
        cs.iter().map(|c| sweep_point(cfg, *c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{var, Layout, ScaleClass};
    use std::sync::Arc;

    fn phase_traj(rate1: f64, rate2: f64, n: usize, dt: f64) -> Trajectory {
        let layout = Layout::new(vec![
            var("theta1", "rad", ScaleClass::Fast),
            var("theta2", "rad", ScaleClass::Fast),
        ]);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![rate1 * i as f64 * dt, rate2 * i as f64 * dt])
            .collect();
        Trajectory::from_samples(0.0, dt, layout, &samples)
    }

    #[test]
    fn identical_oscillators_have_unit_rotation() {
        let traj = phase_traj(1.0, 1.0, 1000, 0.01);
        let r = rotation_number(&traj, 0, 1, 2.0).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        assert!((r.literal - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_detune_gives_frequency_ratio() {
        // Omega = 1, delta = 0.2: rates 1.2 and 0.8, so R = 1.5.
        let traj = phase_traj(1.2, 0.8, 5000, 0.01);
        let r = rotation_number(&traj, 0, 1, 10.0).unwrap();
        assert!((r.ratio - 1.5).abs() < 1e-12);
        // The literal quotient of linearly growing phases is constant.
        assert!((r.literal - 1.5).abs() < 1e-9);
    }

    #[test]
    fn non_increasing_reference_phase_faults() {
        let traj = phase_traj(1.0, -0.5, 100, 0.01);
        assert!(matches!(
            rotation_number(&traj, 0, 1, 0.1),
            Err(CoreError::NonMonotonePhase)
        ));
    }

    #[test]
    fn rotation_is_invariant_under_time_rescaling() {
        let a = phase_traj(1.3, 0.9, 2000, 0.01);
        let b = phase_traj(2.6, 1.8, 2000, 0.005); // same orbit, twice the speed
        let ra = rotation_number(&a, 0, 1, 1.0).unwrap();
        let rb = rotation_number(&b, 0, 1, 0.5).unwrap();
        assert!((ra.ratio - rb.ratio).abs() < 1e-12);
    }

    #[test]
    fn locked_gain_keeps_unit_rotation() {
        // Inside the lock region the oscillators sync and R = 1.
        let cfg = StaircaseConfig {
            steps: 2,
            c_min: 0.2,
            c_max: 0.2001,
            duration: 300.0,
            ..StaircaseConfig::default()
        };
        let pts = staircase_sweep(&cfg, false).unwrap();
        for p in pts {
            assert!((p.rotation - 1.0).abs() < 1e-3, "R = {} at c = {}", p.rotation, p.c);
        }
    }

    #[test]
    fn zero_gain_has_zero_average_detune() {
        let cfg = StaircaseConfig {
            steps: 2,
            c_min: 0.0,
            c_max: 0.1,
            duration: 100.0,
            ..StaircaseConfig::default()
        };
        let pts = staircase_sweep(&cfg, false).unwrap();
        assert!(pts[0].delta_avg.abs() < 1e-9);
        assert!((pts[0].rotation - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parallel_and_serial_sweeps_agree_exactly() {
        let cfg = StaircaseConfig {
            steps: 8,
            duration: 20.0,
            dt: 1e-3,
            ..StaircaseConfig::default()
        };
        let serial = staircase_sweep(&cfg, false).unwrap();
        let parallel = staircase_sweep(&cfg, true).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn trajectory_from_samples_roundtrip() {
        let layout = Layout::new(vec![var("x", "1", ScaleClass::Fast)]);
        let traj = Trajectory::from_samples(
            1.0,
            0.5,
            Arc::clone(&layout),
            &[vec![0.0], vec![1.0], vec![4.0]],
        );
        assert_eq!(traj.len(), 3);
        assert_eq!(traj.t_at(2), 2.0);
        assert_eq!(traj.column("x").unwrap(), vec![0.0, 1.0, 4.0]);
    }
}
