//! Equilibrium detection on slow variables: a render can be stopped as
//! soon as nothing slow moves any more.

use std::collections::VecDeque;

use crate::integrator::Trajectory;

/// Sensor settings: fires when every monitored variable's peak-to-peak
/// range over the trailing window drops below `threshold` times that
/// variable's globally observed range.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSensor {
    /// Window length in seconds.
    pub window: f64,
    /// Relative range bound, > 0.
    pub threshold: f64,
    /// State indices to monitor.
    pub monitored: Vec<usize>,
}

impl EquilibriumSensor {
    pub fn new(window: f64, threshold: f64, monitored: Vec<usize>) -> Self {
        assert!(window > 0.0, "window must be positive");
        assert!(threshold > 0.0, "threshold must be positive");
        assert!(!monitored.is_empty(), "sensor needs at least one variable");
        EquilibriumSensor {
            window,
            threshold,
            monitored,
        }
    }
}

/// Rolling extrema over a fixed sample window plus global extrema.
#[derive(Debug, Clone)]
struct VarMonitor {
    // Monotonic deques of (index, value).
    maxq: VecDeque<(u64, f64)>,
    minq: VecDeque<(u64, f64)>,
    global_min: f64,
    global_max: f64,
}

impl VarMonitor {
    fn new() -> Self {
        VarMonitor {
            maxq: VecDeque::new(),
            minq: VecDeque::new(),
            global_min: f64::MAX,
            global_max: f64::MIN,
        }
    }

    fn push(&mut self, idx: u64, v: f64, window: u64) {
        self.global_min = self.global_min.min(v);
        self.global_max = self.global_max.max(v);
        while self.maxq.back().is_some_and(|&(_, b)| b <= v) {
            self.maxq.pop_back();
        }
        self.maxq.push_back((idx, v));
        while self.minq.back().is_some_and(|&(_, b)| b >= v) {
            self.minq.pop_back();
        }
        self.minq.push_back((idx, v));
        let cutoff = idx + 1 - window.min(idx + 1);
        while self.maxq.front().is_some_and(|&(i, _)| i < cutoff) {
            self.maxq.pop_front();
        }
        while self.minq.front().is_some_and(|&(i, _)| i < cutoff) {
            self.minq.pop_front();
        }
    }

    fn windowed_range(&self) -> f64 {
        self.maxq.front().map_or(0.0, |&(_, v)| v)
            - self.minq.front().map_or(0.0, |&(_, v)| v)
    }

    fn global_range(&self) -> f64 {
        self.global_max - self.global_min
    }
}

/// Streaming detector; feed one state per sample and it reports the fire
/// time once.
pub struct StreamingEquilibrium {
    sensor: EquilibriumSensor,
    sample_dt: f64,
    window_samples: u64,
    monitors: Vec<VarMonitor>,
    count: u64,
    fired: Option<f64>,
}

impl StreamingEquilibrium {
    pub fn new(sensor: EquilibriumSensor, sample_dt: f64) -> Self {
        assert!(sample_dt > 0.0);
        let window_samples = (sensor.window / sample_dt).round().max(1.0) as u64;
        let monitors = sensor.monitored.iter().map(|_| VarMonitor::new()).collect();
        StreamingEquilibrium {
            sensor,
            sample_dt,
            window_samples,
            monitors,
            count: 0,
            fired: None,
        }
    }

    pub fn fired(&self) -> Option<f64> {
        self.fired
    }

    /// Push the full state at the next sample instant; returns the fire
    /// time the first time the quiet condition holds over a full window.
    pub fn push(&mut self, state: &[f64]) -> Option<f64> {
        if self.fired.is_some() {
            return None;
        }
        let idx = self.count;
        self.count += 1;
        for (m, &var) in self.monitors.iter_mut().zip(&self.sensor.monitored) {
            m.push(idx, state[var], self.window_samples);
        }
        if self.count < self.window_samples {
            return None;
        }
        let quiet = self.monitors.iter().all(|m| {
            m.windowed_range() <= self.sensor.threshold * m.global_range()
        });
        if quiet {
            let t = idx as f64 * self.sample_dt;
            self.fired = Some(t);
            return Some(t);
        }
        None
    }
}

/// Offline detection over a stored trajectory; `None` when the sensor
/// never fires.
pub fn equilibrium_detect(traj: &Trajectory, sensor: &EquilibriumSensor) -> Option<f64> {
    let mut stream = StreamingEquilibrium::new(sensor.clone(), traj.dt);
    for i in 0..traj.len() {
        if let Some(t) = stream.push(traj.sample(i)) {
            return Some(traj.t0 + t);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{var, Layout, ScaleClass};

    fn traj_of(values: Vec<f64>, dt: f64) -> Trajectory {
        let layout = Layout::new(vec![var("s", "1", ScaleClass::Slow)]);
        let samples: Vec<Vec<f64>> = values.into_iter().map(|v| vec![v]).collect();
        Trajectory::from_samples(0.0, dt, layout, &samples)
    }

    #[test]
    fn constant_input_fires_once_the_window_fills() {
        let traj = traj_of(vec![2.5; 100], 0.1);
        let sensor = EquilibriumSensor::new(1.0, 0.01, vec![0]);
        let t = equilibrium_detect(&traj, &sensor).unwrap();
        // Window is 10 samples; the detector fires on the 10th (index 9).
        assert!((t - 0.9).abs() < 1e-12);
    }

    #[test]
    fn persistent_oscillation_never_fires() {
        let values: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.7).sin()).collect();
        let traj = traj_of(values, 0.1);
        let sensor = EquilibriumSensor::new(5.0, 0.05, vec![0]);
        assert_eq!(equilibrium_detect(&traj, &sensor), None);
    }

    #[test]
    fn decaying_oscillation_fires_after_the_transient() {
        let values: Vec<f64> = (0..5000)
            .map(|i| {
                let t = i as f64 * 0.01;
                (-t).exp() * (20.0 * t).sin()
            })
            .collect();
        let traj = traj_of(values, 0.01);
        let sensor = EquilibriumSensor::new(0.5, 0.01, vec![0]);
        let t = equilibrium_detect(&traj, &sensor).unwrap();
        assert!(t > 1.0, "fired inside the transient at t = {t}");
    }

    #[test]
    fn larger_threshold_never_fires_later() {
        let values: Vec<f64> = (0..5000)
            .map(|i| {
                let t = i as f64 * 0.01;
                (-0.5 * t).exp() * (7.0 * t).sin()
            })
            .collect();
        let traj = traj_of(values, 0.01);
        let mut last_fire = f64::MAX;
        for threshold in [0.001, 0.01, 0.1, 0.5] {
            let sensor = EquilibriumSensor::new(0.5, threshold, vec![0]);
            let t = equilibrium_detect(&traj, &sensor).unwrap_or(f64::MAX);
            assert!(
                t <= last_fire,
                "threshold {threshold} fired at {t}, later than a smaller threshold"
            );
            last_fire = t;
        }
    }

    #[test]
    fn all_monitored_variables_must_be_quiet() {
        let layout = Layout::new(vec![
            var("a", "1", ScaleClass::Slow),
            var("b", "1", ScaleClass::Slow),
        ]);
        let samples: Vec<Vec<f64>> = (0..1000)
            .map(|i| vec![1.0, (i as f64 * 0.5).sin()])
            .collect();
        let traj = Trajectory::from_samples(0.0, 0.1, layout, &samples);
        let quiet_only = EquilibriumSensor::new(2.0, 0.01, vec![0]);
        assert!(equilibrium_detect(&traj, &quiet_only).is_some());
        let both = EquilibriumSensor::new(2.0, 0.01, vec![0, 1]);
        assert_eq!(equilibrium_detect(&traj, &both), None);
    }
}
