//! Poincaré sections of sampled trajectories.

use crate::integrator::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDirection {
    Up,
    Down,
    Both,
}

impl CrossDirection {
    pub fn parse(id: &str) -> Option<Self> {
        match id {
            "up" => Some(CrossDirection::Up),
            "down" => Some(CrossDirection::Down),
            "both" => Some(CrossDirection::Both),
            _ => None,
        }
    }
}

/// Section through one state variable.
///
/// With `wrap` set, crossings of `level` are detected modulo the wrap
/// period, which sections unwrapped phases on e.g. theta mod 2pi = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionSpec {
    pub index: usize,
    pub level: f64,
    pub direction: CrossDirection,
    pub wrap: Option<f64>,
}

/// Points of the section: the remaining coordinates, linearly interpolated
/// at each directed crossing. An orbit that never crosses yields an empty
/// set.
pub fn poincare_section(traj: &Trajectory, spec: &SectionSpec) -> Vec<Vec<f64>> {
    let mut points = Vec::new();
    if traj.len() < 2 {
        return points;
    }
    let dim = traj.dim();
    assert!(spec.index < dim, "section variable out of range");
    for i in 1..traj.len() {
        let prev = traj.sample(i - 1);
        let next = traj.sample(i);
        let crossing = match spec.wrap {
            None => plain_crossing(prev[spec.index], next[spec.index], spec),
            Some(period) => wrapped_crossing(prev[spec.index], next[spec.index], period, spec),
        };
        if let Some(frac) = crossing {
            let point: Vec<f64> = (0..dim)
                .filter(|k| *k != spec.index)
                .map(|k| prev[k] + frac * (next[k] - prev[k]))
                .collect();
            points.push(point);
        }
    }
    points
}

/// Interpolation fraction of a transversal crossing of `level`, if the
/// directed crossing happens inside this sample pair.
fn plain_crossing(a: f64, b: f64, spec: &SectionSpec) -> Option<f64> {
    let fa = a - spec.level;
    let fb = b - spec.level;
    let crosses = match spec.direction {
        CrossDirection::Up => fa < 0.0 && fb >= 0.0,
        CrossDirection::Down => fa > 0.0 && fb <= 0.0,
        CrossDirection::Both => (fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0),
    };
    if !crosses || fa == fb {
        return None;
    }
    Some(fa / (fa - fb))
}

/// Crossing detection modulo `period`: the level is crossed upward when
/// the wrapped offset jumps backward, downward when it jumps forward.
fn wrapped_crossing(a: f64, b: f64, period: f64, spec: &SectionSpec) -> Option<f64> {
    let wa = (a - spec.level).rem_euclid(period);
    let wb = (b - spec.level).rem_euclid(period);
    let rising = wb < wa && (wa - wb) > 0.5 * period;
    let falling = wb > wa && (wb - wa) > 0.5 * period;
    let (crosses, frac) = if rising {
        // Passed the level going up: remaining distance over total motion.
        ((period - wa) / (period - wa + wb), true)
    } else if falling {
        (wa / (wa + period - wb), true)
    } else {
        (0.0, false)
    };
    if !frac {
        return None;
    }
    let dir_ok = match spec.direction {
        CrossDirection::Up => rising,
        CrossDirection::Down => falling,
        CrossDirection::Both => true,
    };
    if dir_ok {
        Some(crosses)
    } else {
        None
    }
}
