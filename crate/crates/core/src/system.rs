//! Right-hand-side definitions of autonomous systems, optionally switched
//! between regions of state space.

use std::sync::Arc;

use crate::state::{Layout, StateVector};

/// Derivative map writing dx/dt for a state slice.
pub type DerivFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Signed region indicator: nonnegative inside the region, negative outside.
pub type IndicatorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// In-place projection applied after every accepted step.
pub type ProjectFn = Arc<dyn Fn(&mut [f64]) + Send + Sync>;

/// One region of a switched system: where its indicator is nonnegative the
/// region's derivative governs the flow.
pub struct Region {
    pub indicator: IndicatorFn,
    pub deriv: DerivFn,
}

impl Region {
    pub fn new(
        indicator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Region {
            indicator: Arc::new(indicator),
            deriv: Arc::new(deriv),
        }
    }
}

/// Immutable right-hand-side specification.
///
/// Region indicators, when present, must partition the sampled state space:
/// exactly one indicator is nonnegative at any state, up to `switching_tol`.
pub struct SystemDefinition {
    pub name: String,
    pub dimension: usize,
    pub layout: Arc<Layout>,
    pub deriv: DerivFn,
    pub regions: Option<Vec<Region>>,
    pub switching_tol: f64,
    pub post_step: Option<ProjectFn>,
    /// Derivative slot accepting an additive statistical-feedback bias.
    pub bias_port: Option<usize>,
    pub default_initial: Vec<f64>,
}

pub const DEFAULT_SWITCHING_TOL: f64 = 1e-9;

impl SystemDefinition {
    /// A system with a single smooth vector field.
    pub fn smooth(
        name: impl Into<String>,
        layout: Arc<Layout>,
        deriv: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        let dimension = layout.len();
        SystemDefinition {
            name: name.into(),
            dimension,
            layout,
            deriv: Arc::new(deriv),
            regions: None,
            switching_tol: DEFAULT_SWITCHING_TOL,
            post_step: None,
            bias_port: None,
            default_initial: vec![0.0; dimension],
        }
    }

    /// A switched system; the overall derivative dispatches on the active
    /// region (largest indicator).
    pub fn switched(name: impl Into<String>, layout: Arc<Layout>, regions: Vec<Region>) -> Self {
        assert!(regions.len() >= 2, "switched system needs at least 2 regions");
        let dimension = layout.len();
        let dispatch: Vec<(IndicatorFn, DerivFn)> = regions
            .iter()
            .map(|r| (Arc::clone(&r.indicator), Arc::clone(&r.deriv)))
            .collect();
        let deriv: DerivFn = Arc::new(move |s: &[f64], out: &mut [f64]| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (i, (ind, _)) in dispatch.iter().enumerate() {
                let v = ind(s);
                if v > best_val {
                    best_val = v;
                    best = i;
                }
            }
            (dispatch[best].1)(s, out);
        });
        SystemDefinition {
            name: name.into(),
            dimension,
            layout,
            deriv,
            regions: Some(regions),
            switching_tol: DEFAULT_SWITCHING_TOL,
            post_step: None,
            bias_port: None,
            default_initial: vec![0.0; dimension],
        }
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Self {
        assert_eq!(initial.len(), self.dimension);
        self.default_initial = initial;
        self
    }

    pub fn with_post_step(
        mut self,
        project: impl Fn(&mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.post_step = Some(Arc::new(project));
        self
    }

    pub fn with_bias_port(mut self, index: usize) -> Self {
        assert!(index < self.dimension);
        self.bias_port = Some(index);
        self
    }

    pub fn with_switching_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0);
        self.switching_tol = tol;
        self
    }

    pub fn state(&self, values: Vec<f64>) -> StateVector {
        StateVector::new(values, Arc::clone(&self.layout))
    }

    pub fn initial_state(&self) -> StateVector {
        self.state(self.default_initial.clone())
    }

    /// Index of the region whose indicator is largest at `s`, when regions
    /// exist. Ties resolve to the lowest index.
    pub fn active_region(&self, s: &[f64]) -> Option<usize> {
        let regions = self.regions.as_ref()?;
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, r) in regions.iter().enumerate() {
            let v = (r.indicator)(s);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        Some(best)
    }

    /// Evaluate the derivative: the active region's field for switched
    /// systems, the single field otherwise.
    pub fn eval(&self, s: &[f64], out: &mut [f64]) {
        (self.deriv)(s, out);
    }

    /// Evaluate a specific region's field.
    pub fn eval_region(&self, region: usize, s: &[f64], out: &mut [f64]) {
        match &self.regions {
            Some(regions) => (regions[region].deriv)(s, out),
            None => (self.deriv)(s, out),
        }
    }

    pub fn indicator(&self, region: usize, s: &[f64]) -> f64 {
        let regions = self.regions.as_ref().expect("system has no regions");
        (regions[region].indicator)(s)
    }
}
