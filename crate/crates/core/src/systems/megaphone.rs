//! Network of Kuramoto-coupled detuned oscillator pairs whose pitches are
//! set by amplitude-envelope order comparisons.
//!
//! State layout is `[theta_1..theta_N, phi_1..phi_N, delta_1..delta_N,
//! a_1..a_N, psi_1..psi_N]`. Per oscillator i with partner j = i + offset
//! (mod N):
//!
//! ```text
//! theta_i' = w_i + delta_i - kappa * sin(theta_i - phi_j)
//! phi_i'   = w_i - delta_i - kappa * sin(phi_i - theta_j)
//! delta_i' = c_i * |u_i + v_i| - delta_i
//! a_i'     = tau * (u_i^2 + v_i^2 - gamma1 * a_i + gamma2 * a_j)
//! psi_i'   = a_i - k * psi_i
//! ```
//!
//! with `u_i = cos(psi_i) sin(theta_i / M_u)`, `v_i = cos(psi_i)
//! sin(phi_i / M_v)`, and pitches `w_i` produced by a stepped comparison
//! function of the envelope differences, so each `w_i` always lies in the
//! finite set of subset sums of the `beta` coefficients.

use crate::error::{CoreError, Result};
use crate::state::{var, Layout, ScaleClass};
use crate::system::SystemDefinition;
use crate::integrator::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct MegaphoneParams {
    /// Oscillator count.
    pub n: usize,
    /// Kuramoto coupling strength.
    pub kappa: f64,
    /// Per-oscillator detune drive gains.
    pub c: Vec<f64>,
    /// Phase dividers feeding the slow drive signals.
    pub m_u: f64,
    pub m_v: f64,
    /// Strictly decreasing positive pitch coefficients.
    pub beta: Vec<f64>,
    /// Envelope follower rate, 1/s.
    pub tau: f64,
    /// Envelope self-leak and cross-injection gains.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Leak rate of the slowest variables, 1/s.
    pub k: f64,
    /// Partner index offset for coupling and envelope injection.
    pub coupling_offset: usize,
}

impl Default for MegaphoneParams {
    fn default() -> Self {
        // Pitch steps land in roughly [100, 400] rad/s: subset sums of
        // beta are {0, 400/3, 800/3, 400}.
        MegaphoneParams {
            n: 13,
            kappa: 0.1,
            c: vec![0.5; 13],
            m_u: 40.0,
            m_v: 40.0,
            beta: vec![800.0 / 3.0, 400.0 / 3.0],
            tau: 0.2,
            gamma1: 1.0,
            gamma2: 0.05,
            k: 0.02,
            coupling_offset: 3,
        }
    }
}

impl MegaphoneParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push("n must be >= 2".to_string());
        }
        if self.c.len() != self.n {
            problems.push(format!("c must have n = {} entries, got {}", self.n, self.c.len()));
        }
        if self.m_u < 1.0 || self.m_v < 1.0 {
            problems.push("m_u and m_v must be >= 1".to_string());
        }
        if self.beta.is_empty() {
            problems.push("beta must not be empty".to_string());
        }
        if self.beta.iter().any(|b| *b <= 0.0) {
            problems.push("beta entries must be positive".to_string());
        }
        if self.beta.windows(2).any(|w| w[1] >= w[0]) {
            problems.push("beta must be strictly decreasing".to_string());
        }
        if self.n >= 2 && self.beta.len() >= self.n {
            problems.push("beta must have fewer entries than n".to_string());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            problems.push("tau must lie in (0, 1)".to_string());
        }
        if self.k <= 0.0 {
            problems.push("k must be positive".to_string());
        }
        if self.n >= 2 && (self.coupling_offset == 0 || self.coupling_offset % self.n == 0) {
            problems.push("coupling_offset must not be a multiple of n".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CoreError::invalid(format!("megaphone: {}", problems.join("; "))))
        }
    }
}

/// Stepped pitch function: per entry i, the sum of `beta[j-1]` over every
/// offset j with `values[i] > values[(i+j) % n]` (strict comparison, so
/// ties contribute nothing and overtaking is the triggering event).
pub fn g_pitch(values: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            beta.iter()
                .enumerate()
                .map(|(jm1, b)| {
                    let other = values[(i + jm1 + 1) % n];
                    if values[i] > other {
                        *b
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

#[inline]
fn env_diff_abs(a: &[f64], i: usize) -> f64 {
    let n = a.len();
    (a[i] - a[(i + 1) % n]).abs()
}

#[inline]
fn omega_at(a: &[f64], i: usize, beta: &[f64]) -> f64 {
    let n = a.len();
    let di = env_diff_abs(a, i);
    let mut w = 0.0;
    for (jm1, b) in beta.iter().enumerate() {
        if di > env_diff_abs(a, (i + jm1 + 1) % n) {
            w += *b;
        }
    }
    w
}

/// Pitches derived from the envelopes: the comparison function applied to
/// the absolute envelope differences `|a_i - a_{i+1}|`.
pub fn omega_from_envelopes(a: &[f64], beta: &[f64]) -> Vec<f64> {
    (0..a.len()).map(|i| omega_at(a, i, beta)).collect()
}

pub fn deriv(s: &[f64], p: &MegaphoneParams, out: &mut [f64]) {
    let n = p.n;
    let (th, rest) = s.split_at(n);
    let (ph, rest) = rest.split_at(n);
    let (de, rest) = rest.split_at(n);
    let (a, ps) = rest.split_at(n);
    for i in 0..n {
        let j = (i + p.coupling_offset) % n;
        let alpha = ps[i].cos();
        let u = alpha * (th[i] / p.m_u).sin();
        let v = alpha * (ph[i] / p.m_v).sin();
        let w = omega_at(a, i, &p.beta);
        out[i] = w + de[i] - p.kappa * (th[i] - ph[j]).sin();
        out[n + i] = w - de[i] - p.kappa * (ph[i] - th[j]).sin();
        out[2 * n + i] = p.c[i] * (u + v).abs() - de[i];
        out[3 * n + i] = p.tau * (u * u + v * v - p.gamma1 * a[i] + p.gamma2 * a[j]);
        out[4 * n + i] = a[i] - p.k * ps[i];
    }
}

pub fn layout(n: usize) -> std::sync::Arc<Layout> {
    let mut vars = Vec::with_capacity(5 * n);
    for i in 1..=n {
        vars.push(var(format!("theta{i}"), "rad", ScaleClass::Fast));
    }
    for i in 1..=n {
        vars.push(var(format!("phi{i}"), "rad", ScaleClass::Fast));
    }
    for i in 1..=n {
        // The detunings track the audio-rate beats, not the slow envelopes.
        vars.push(var(format!("delta{i}"), "rad/s", ScaleClass::Fast));
    }
    for i in 1..=n {
        vars.push(var(format!("a{i}"), "amp^2", ScaleClass::Slow));
    }
    for i in 1..=n {
        vars.push(var(format!("psi{i}"), "1", ScaleClass::Slower));
    }
    Layout::new(vars)
}

/// Deterministic non-symmetric start: spread phases, distinct envelope
/// seeds, mid-ramp slow variables. A symmetric start would sit on the
/// stepped pitch function's tie case forever.
pub fn default_initial(p: &MegaphoneParams) -> Vec<f64> {
    let n = p.n;
    let mut s = vec![0.0; 5 * n];
    let tau_circle = 2.0 * std::f64::consts::PI;
    for i in 0..n {
        let fi = i as f64;
        s[i] = p.m_u * tau_circle * (fi + 0.37) / n as f64;
        s[n + i] = p.m_v * tau_circle * 0.5 * (fi + 0.11) / n as f64;
        s[2 * n + i] = 0.0;
        s[3 * n + i] = 0.02 + 0.004 * fi;
        s[4 * n + i] = 0.3 + 0.05 * fi;
    }
    s
}

pub fn system(p: MegaphoneParams) -> Result<SystemDefinition> {
    p.validate()?;
    let n = p.n;
    let initial = default_initial(&p);
    let sys = SystemDefinition::smooth("megaphone", layout(n), move |s, out| deriv(s, &p, out))
        .with_post_step(move |s| {
            for d in &mut s[2 * n..3 * n] {
                *d = d.max(0.0);
            }
        })
        .with_initial(initial);
    Ok(sys)
}

/// Pitch vector per stored sample, recomputed from the envelope block.
pub fn omega_trace(p: &MegaphoneParams, traj: &Trajectory) -> Vec<Vec<f64>> {
    let n = p.n;
    (0..traj.len())
        .map(|i| {
            let s = traj.sample(i);
            omega_from_envelopes(&s[3 * n..4 * n], &p.beta)
        })
        .collect()
}
