//! State vectors with named layouts and time-scale annotations.

use std::ops::Index;
use std::sync::Arc;

/// Characteristic time-scale of one state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleClass {
    Fast,
    Slow,
    Slower,
}

/// Name, unit and time-scale class of a single state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec {
    pub name: String,
    pub unit: String,
    pub scale: ScaleClass,
}

/// Shorthand constructor used by the system catalog.
pub fn var(name: impl Into<String>, unit: impl Into<String>, scale: ScaleClass) -> VarSpec {
    VarSpec {
        name: name.into(),
        unit: unit.into(),
        scale,
    }
}

/// Ordered description of every entry of a state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    vars: Vec<VarSpec>,
}

impl Layout {
    pub fn new(vars: Vec<VarSpec>) -> Arc<Self> {
        Arc::new(Layout { vars })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn name(&self, index: usize) -> &str {
        &self.vars[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Indices of every variable whose scale class is in `scales`.
    pub fn indices_with_scale(&self, scales: &[ScaleClass]) -> Vec<usize> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| scales.contains(&v.scale))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A point in state space paired with its layout.
///
/// Values and layout always have equal length; every accepted integration
/// step keeps all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl StateVector {
    pub fn new(values: Vec<f64>, layout: Arc<Layout>) -> Self {
        assert_eq!(
            values.len(),
            layout.len(),
            "state vector length must match layout"
        );
        StateVector { values, layout }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.layout.index_of(name).map(|i| self.values[i])
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

impl Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_lookup_by_name() {
        let layout = Layout::new(vec![
            var("theta1", "rad", ScaleClass::Fast),
            var("delta", "rad/s", ScaleClass::Slow),
        ]);
        assert_eq!(layout.index_of("delta"), Some(1));
        assert_eq!(layout.index_of("missing"), None);
        assert_eq!(layout.indices_with_scale(&[ScaleClass::Slow]), vec![1]);
    }

    #[test]
    fn state_access_by_name() {
        let layout = Layout::new(vec![
            var("x", "1", ScaleClass::Fast),
            var("y", "1", ScaleClass::Slow),
        ]);
        let s = StateVector::new(vec![1.5, -2.0], layout);
        assert_eq!(s.get("y"), Some(-2.0));
        assert_eq!(s[0], 1.5);
        assert!(s.first_non_finite().is_none());
    }

    #[test]
    #[should_panic(expected = "state vector length")]
    fn mismatched_layout_rejected() {
        let layout = Layout::new(vec![var("x", "1", ScaleClass::Fast)]);
        let _ = StateVector::new(vec![0.0, 0.0], layout);
    }
}
