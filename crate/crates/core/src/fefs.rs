//! Feature-extractor feedback loops: a signal generator, a streaming
//! extractor analysing its output, and a mapping from the extracted
//! feature back to the synthesis parameter.
//!
//! One step applies the four updates synchronously, each reading the
//! previous step's values:
//!
//! ```text
//! x'     = output(theta)
//! theta' = advance(theta, pi)
//! pi'    = mapping(phi)
//! phi'   = extract(x, ..., x[-L+1])
//! ```
//!
//! The filtered map collapses generator and mapping into one map
//! `x' = f(x, y)` whose parameter `y` is a running mean of a nonlinearity
//! of the output, which makes `y` a slow variable by construction.

use std::sync::Arc;

use log::warn;

use crate::error::{CoreError, Result};
use crate::features::{EnvelopeFollower, RunningMean, ZcrAdaptive, ZcrFixed};

/// Signal generator families available to the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// x = sin(theta), theta advances by pi radians per sample.
    Sine,
    /// Phase-distorted sine x = sin(theta + shape * sin(2 theta)).
    PdSine { shape: f64 },
    /// Logistic map on [0, 1] with growth rate pi, output rescaled to
    /// [-1, 1].
    Logistic,
    /// Emits the parameter directly (theta holds the previous pi).
    Identity,
}

impl GeneratorKind {
    pub fn parse(id: &str, shape: f64) -> Option<Self> {
        match id {
            "sine" => Some(GeneratorKind::Sine),
            "pd_sine" => Some(GeneratorKind::PdSine { shape }),
            "logistic" => Some(GeneratorKind::Logistic),
            "identity" => Some(GeneratorKind::Identity),
            _ => None,
        }
    }

    fn output(&self, theta: f64) -> f64 {
        match self {
            GeneratorKind::Sine => theta.sin(),
            GeneratorKind::PdSine { shape } => (theta + shape * (2.0 * theta).sin()).sin(),
            GeneratorKind::Logistic => 2.0 * theta - 1.0,
            GeneratorKind::Identity => theta,
        }
    }

    fn advance(&self, theta: f64, pi: f64) -> f64 {
        match self {
            GeneratorKind::Sine | GeneratorKind::PdSine { .. } => {
                (theta + pi).rem_euclid(2.0 * std::f64::consts::PI)
            }
            GeneratorKind::Logistic => {
                let r = pi.clamp(0.0, 4.0);
                r * theta * (1.0 - theta)
            }
            GeneratorKind::Identity => pi,
        }
    }
}

/// Extractor selection with its effective length parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractorSpec {
    ZcrFixed { window: usize },
    ZcrAdaptive { crossings: usize },
    Envelope { tau: f64 },
    Mean { window: usize },
}

impl ExtractorSpec {
    pub fn parse(id: &str, length: usize) -> Option<Self> {
        match id {
            "zcr_fixed" => Some(ExtractorSpec::ZcrFixed { window: length }),
            "zcr_adaptive" => Some(ExtractorSpec::ZcrAdaptive { crossings: length }),
            "envelope" => Some(ExtractorSpec::Envelope {
                tau: 1.0 / length.max(1) as f64,
            }),
            "mean" => Some(ExtractorSpec::Mean { window: length }),
            _ => None,
        }
    }

    fn build(&self) -> Extractor {
        match *self {
            ExtractorSpec::ZcrFixed { window } => Extractor::ZcrFixed(ZcrFixed::new(window)),
            ExtractorSpec::ZcrAdaptive { crossings } => {
                Extractor::ZcrAdaptive(ZcrAdaptive::new(crossings))
            }
            ExtractorSpec::Envelope { tau } => Extractor::Envelope(EnvelopeFollower::new(tau)),
            ExtractorSpec::Mean { window } => Extractor::Mean(RunningMean::zero_filled(window)),
        }
    }
}

enum Extractor {
    ZcrFixed(ZcrFixed),
    ZcrAdaptive(ZcrAdaptive),
    Envelope(EnvelopeFollower),
    Mean(RunningMean),
}

impl Extractor {
    fn push(&mut self, x: f64) -> f64 {
        match self {
            Extractor::ZcrFixed(z) => z.push(x),
            // The adaptive extractor holds its last emission between
            // tallies.
            Extractor::ZcrAdaptive(z) => {
                z.push(x);
                z.current().unwrap_or(0.0)
            }
            Extractor::Envelope(e) => e.push(x),
            Extractor::Mean(m) => m.push(x),
        }
    }
}

/// Mapping shapes from feature value to synthesis parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MappingKind {
    Linear,
    Cubic,
    Sigmoid,
}

impl MappingKind {
    pub fn parse(id: &str) -> Option<Self> {
        match id {
            "linear" => Some(MappingKind::Linear),
            "cubic" => Some(MappingKind::Cubic),
            "sigmoid" => Some(MappingKind::Sigmoid),
            _ => None,
        }
    }
}

/// Feature-to-parameter mapping with a single nonlinearity knob.
///
/// The feature is first normalized by the input center and scale, shaped,
/// then scaled into the declared output bounds. Outputs beyond the bounds
/// clamp; clamps are counted and reported once.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub kind: MappingKind,
    pub nonlinearity: f64,
    pub in_center: f64,
    pub in_scale: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl Mapping {
    pub fn new(
        kind: MappingKind,
        nonlinearity: f64,
        in_center: f64,
        in_scale: f64,
        out_min: f64,
        out_max: f64,
    ) -> Result<Self> {
        if in_scale == 0.0 {
            return Err(CoreError::invalid("mapping: in_scale must be nonzero"));
        }
        if out_min > out_max {
            return Err(CoreError::invalid("mapping: out_min must not exceed out_max"));
        }
        if nonlinearity < 0.0 {
            return Err(CoreError::invalid("mapping: nonlinearity must be >= 0"));
        }
        Ok(Mapping {
            kind,
            nonlinearity,
            in_center,
            in_scale,
            out_min,
            out_max,
        })
    }

    /// Mapping that forwards the feature unchanged (wide bounds).
    pub fn identity() -> Self {
        Mapping {
            kind: MappingKind::Linear,
            nonlinearity: 0.0,
            in_center: 0.0,
            in_scale: 1.0,
            out_min: -1e12,
            out_max: 1e12,
        }
    }

    /// Mapping that ignores the feature: severed feedback.
    pub fn constant(value: f64) -> Self {
        Mapping {
            kind: MappingKind::Linear,
            nonlinearity: 0.0,
            in_center: 0.0,
            in_scale: 1.0,
            out_min: value,
            out_max: value,
        }
    }

    fn shape(&self, z: f64) -> f64 {
        let nl = self.nonlinearity;
        match self.kind {
            MappingKind::Linear => z,
            MappingKind::Cubic => (z + nl * z * z * z) / (1.0 + nl),
            MappingKind::Sigmoid => {
                if nl < 1e-9 {
                    z
                } else {
                    (nl * z).tanh() / nl.tanh()
                }
            }
        }
    }

    /// Returns the mapped parameter and whether it had to be clamped.
    pub fn apply(&self, phi: f64) -> (f64, bool) {
        let z = (phi - self.in_center) / self.in_scale;
        let center = 0.5 * (self.out_min + self.out_max);
        let half = 0.5 * (self.out_max - self.out_min);
        let raw = center + half * self.shape(z);
        let clamped = raw < self.out_min || raw > self.out_max;
        (raw.clamp(self.out_min, self.out_max), clamped)
    }
}

/// Full loop configuration.
pub struct FefsConfig {
    pub generator: GeneratorKind,
    pub extractor: ExtractorSpec,
    pub mapping: Mapping,
    pub theta0: f64,
    pub pi0: f64,
}

/// Running loop state.
pub struct Fefs {
    generator: GeneratorKind,
    extractor: Extractor,
    mapping: Mapping,
    theta: f64,
    pi: f64,
    phi: f64,
    x: f64,
    clamp_count: u64,
}

impl Fefs {
    pub fn new(cfg: FefsConfig) -> Self {
        Fefs {
            generator: cfg.generator,
            extractor: cfg.extractor.build(),
            mapping: cfg.mapping,
            theta: cfg.theta0,
            pi: cfg.pi0,
            phi: 0.0,
            x: 0.0,
            clamp_count: 0,
        }
    }

    /// Construct from the string ids accepted in configuration.
    pub fn from_ids(
        generator: &str,
        extractor: &str,
        length: usize,
        mapping: Mapping,
        theta0: f64,
        pi0: f64,
    ) -> Result<Self> {
        let generator = GeneratorKind::parse(generator, 0.0)
            .ok_or_else(|| CoreError::invalid(format!("unknown generator '{generator}'")))?;
        let extractor = ExtractorSpec::parse(extractor, length)
            .ok_or_else(|| CoreError::invalid(format!("unknown extractor '{extractor}'")))?;
        Ok(Fefs::new(FefsConfig {
            generator,
            extractor,
            mapping,
            theta0,
            pi0,
        }))
    }

    /// One synchronous update of all four loop variables; returns the new
    /// audio sample.
    pub fn step(&mut self) -> f64 {
        let x_next = self.generator.output(self.theta);
        let theta_next = self.generator.advance(self.theta, self.pi);
        let (pi_next, clamped) = self.mapping.apply(self.phi);
        if clamped {
            if self.clamp_count == 0 {
                warn!("mapping output left its declared bounds; clamping (logged once)");
            }
            self.clamp_count += 1;
        }
        let phi_next = self.extractor.push(self.x);
        self.x = x_next;
        self.theta = theta_next;
        self.pi = pi_next;
        self.phi = phi_next;
        x_next
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }
}

/// The sine + fixed-window zcr demo loop: the zcr of the output maps back
/// to the phase increment through a steep decreasing sigmoid. Short
/// windows hunt indefinitely, long windows settle.
pub fn sine_zcr_demo(window: usize, nonlinearity: f64) -> Fefs {
    let mapping = Mapping {
        kind: MappingKind::Sigmoid,
        nonlinearity,
        in_center: 0.1,
        // Negative scale makes the mapping decreasing in the feature.
        in_scale: -0.08,
        out_min: DEMO_PI_MIN,
        out_max: DEMO_PI_MAX,
    };
    Fefs::new(FefsConfig {
        generator: GeneratorKind::Sine,
        extractor: ExtractorSpec::ZcrFixed { window },
        mapping,
        theta0: 0.0,
        pi0: 0.3,
    })
}

/// Parameter range of the demo loop, rad/sample.
pub const DEMO_PI_MIN: f64 = 0.05;
pub const DEMO_PI_MAX: f64 = 1.0;

/// Filtered-map state: x' = f(x, y) with y the running mean of g(x) over
/// the last `window` samples, seeded with zeros.
pub struct FilteredMap {
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    g_min: f64,
    g_max: f64,
    window: RunningMean,
    x: f64,
    y: f64,
}

impl FilteredMap {
    pub fn new(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_min: f64,
        g_max: f64,
        window: usize,
        x0: f64,
    ) -> Result<Self> {
        if g_min > g_max {
            return Err(CoreError::invalid("filtered map: g_min must not exceed g_max"));
        }
        // The window starts zero-filled, so zero must belong to the
        // declared range for the slow-variable bound to hold from step 0.
        if g_min > 0.0 || g_max < 0.0 {
            return Err(CoreError::invalid(
                "filtered map: declared range of g must contain 0 (zero-seeded window)",
            ));
        }
        Ok(FilteredMap {
            f: Arc::new(f),
            g: Arc::new(g),
            g_min,
            g_max,
            window: RunningMean::zero_filled(window.max(1)),
            x: x0,
            y: 0.0,
        })
    }

    /// One map iteration; returns the new x.
    pub fn step(&mut self) -> f64 {
        let gx = (self.g)(self.x);
        self.y = self.window.push(gx);
        self.x = (self.f)(self.x, self.y);
        self.x
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Declared range of the nonlinearity; the running mean can move by at
    /// most this much divided by the window length per step.
    pub fn g_range(&self) -> f64 {
        self.g_max - self.g_min
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }
}
