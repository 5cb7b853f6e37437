//! Statistical feedback: weighted selection with forbidden repetition
//! (a stochastic reference) and its deterministic histogram-bias
//! generalization for continuous systems.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

/// Weighted random selection where the chosen entry's weight resets to
/// zero and every other weight grows, which makes direct repetition
/// impossible and close repetition unlikely.
///
/// Randomness comes from a seeded ChaCha8 stream advanced once per pick;
/// the uniform variate is the top 53 bits of one 64-bit draw.
#[derive(Debug, Clone)]
pub struct TenneyState {
    weights: Vec<f64>,
    increment: f64,
    rng: ChaCha8Rng,
}

impl TenneyState {
    pub fn new(n: usize, increment: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::invalid("tenney: need at least 2 entries"));
        }
        if increment <= 0.0 {
            return Err(CoreError::invalid("tenney: increment must be positive"));
        }
        Ok(TenneyState {
            weights: vec![1.0; n],
            increment,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Pick with a caller-supplied uniform variate in [0, 1): the target
    /// is `u` times the weight sum, and the first index whose cumulative
    /// weight exceeds it wins.
    pub fn pick_with(&mut self, u: f64) -> Result<usize> {
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return Err(CoreError::ZeroWeights);
        }
        let target = u * total;
        let mut cum = 0.0;
        let mut chosen = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            cum += w;
            if cum > target {
                chosen = i;
                break;
            }
        }
        for (i, w) in self.weights.iter_mut().enumerate() {
            if i == chosen {
                *w = 0.0;
            } else {
                *w += self.increment;
            }
        }
        Ok(chosen)
    }

    pub fn pick(&mut self) -> Result<usize> {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.pick_with(u)
    }
}

/// Named goal distribution presets over `bins` bins, each normalized to
/// sum to 1.
pub fn goal_uniform(bins: usize) -> Vec<f64> {
    vec![1.0 / bins as f64; bins]
}

pub fn goal_triangular(bins: usize) -> Vec<f64> {
    let mid = (bins as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..bins)
        .map(|b| 1.0 + mid - (b as f64 - mid).abs())
        .collect();
    normalize(raw)
}

pub fn goal_ushaped(bins: usize) -> Vec<f64> {
    let mid = (bins as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..bins)
        .map(|b| 1.0 + (b as f64 - mid).abs())
        .collect();
    normalize(raw)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Binned occupancy of a monitored variable with exponential forgetting,
/// a goal distribution, and a bounded drift bias steering the system
/// toward under-represented bins.
#[derive(Debug, Clone)]
pub struct HistogramFeedback {
    bins: usize,
    v_min: f64,
    v_max: f64,
    counts: Vec<f64>,
    total: f64,
    goal: Vec<f64>,
    /// Bias gain; the emitted bias never exceeds this in magnitude.
    pub eta: f64,
    /// Forgetting factor in (0, 1]; 1 keeps a cumulative histogram.
    pub rho: f64,
}

impl HistogramFeedback {
    pub fn new(bins: usize, range: (f64, f64), goal: Vec<f64>, eta: f64, rho: f64) -> Result<Self> {
        if bins == 0 {
            return Err(CoreError::invalid("histogram: bins must be positive"));
        }
        if !(range.0 < range.1) {
            return Err(CoreError::invalid("histogram: range must be non-empty"));
        }
        if goal.len() != bins {
            return Err(CoreError::invalid("histogram: goal length must equal bins"));
        }
        let goal_sum: f64 = goal.iter().sum();
        if (goal_sum - 1.0).abs() > 1e-9 || goal.iter().any(|g| *g < 0.0) {
            return Err(CoreError::invalid("histogram: goal must be a distribution"));
        }
        if eta < 0.0 {
            return Err(CoreError::invalid("histogram: eta must be >= 0"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(CoreError::invalid("histogram: rho must lie in (0, 1]"));
        }
        Ok(HistogramFeedback {
            bins,
            v_min: range.0,
            v_max: range.1,
            counts: vec![0.0; bins],
            total: 0.0,
            goal,
            eta,
            rho,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Bin index of a value; out-of-range values clamp to the edge bins.
    pub fn bin_of(&self, v: f64) -> usize {
        let span = self.v_max - self.v_min;
        let frac = (v - self.v_min) / span;
        let b = (frac * self.bins as f64).floor();
        (b.max(0.0) as usize).min(self.bins - 1)
    }

    pub fn center(&self, bin: usize) -> f64 {
        let width = (self.v_max - self.v_min) / self.bins as f64;
        self.v_min + (bin as f64 + 0.5) * width
    }

    /// Fade all counts by the forgetting factor, then record one value.
    pub fn record(&mut self, v: f64) {
        if self.rho < 1.0 {
            for c in &mut self.counts {
                *c *= self.rho;
            }
            self.total *= self.rho;
        }
        let bin = self.bin_of(v);
        self.counts[bin] += 1.0;
        self.total += 1.0;
    }

    /// Drift bias toward the most deficient bin: with per-bin deficiency
    /// `d_b = goal_b - occupancy_b`, the target is the argmax (ties to the
    /// lowest index) and the bias is `eta * sign(center(target) - v) *
    /// |d_target|`. Added by the host system to the monitored variable's
    /// derivative.
    pub fn bias(&self, v_current: f64) -> Result<f64> {
        if self.total <= 0.0 {
            return Err(CoreError::EmptyHistogram);
        }
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for b in 0..self.bins {
            let d = self.goal[b] - self.counts[b] / self.total;
            if d > best_d {
                best_d = d;
                best = b;
            }
        }
        if best_d <= 0.0 {
            // Occupancy matches (or exceeds) the goal everywhere.
            return Ok(0.0);
        }
        let direction = (self.center(best) - v_current).signum();
        Ok(self.eta * direction * best_d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pick_follows_the_cumulative_rule() {
        let mut t = TenneyState::new(4, 1.0, 0).unwrap();
        // u * total = 1.2 falls in the second bin of [1, 1, 1, 1].
        assert_eq!(t.pick_with(0.3).unwrap(), 1);
        assert_eq!(t.weights(), &[2.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn immediate_repetition_is_impossible() {
        let mut t = TenneyState::new(6, 1.0, 99).unwrap();
        let mut prev = t.pick().unwrap();
        for _ in 0..2000 {
            let next = t.pick().unwrap();
            assert_ne!(next, prev);
            prev = next;
        }
    }

    #[test]
    fn lag_two_repetition_is_rarer_than_iid_uniform() {
        let n = 12;
        let mut t = TenneyState::new(n, 1.0, 20260810).unwrap();
        let mut picks = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            picks.push(t.pick().unwrap());
        }
        let lag1 = picks.windows(2).filter(|w| w[0] == w[1]).count();
        let lag2 = picks.windows(3).filter(|w| w[0] == w[2]).count();
        assert_eq!(lag1, 0);
        let lag2_rate = lag2 as f64 / (picks.len() - 2) as f64;
        assert!(lag2_rate < 1.0 / n as f64, "lag-2 rate {lag2_rate}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = TenneyState::new(8, 1.0, 7).unwrap();
        let mut b = TenneyState::new(8, 1.0, 7).unwrap();
        for _ in 0..500 {
            assert_eq!(a.pick().unwrap(), b.pick().unwrap());
        }
    }

    proptest! {
        #[test]
        fn after_every_pick_exactly_one_zero(us in proptest::collection::vec(0.0f64..1.0, 1..60)) {
            let mut t = TenneyState::new(5, 1.0, 0).unwrap();
            for u in us {
                t.pick_with(u).unwrap();
                let zeros = t.weights().iter().filter(|w| **w == 0.0).count();
                prop_assert_eq!(zeros, 1);
                prop_assert!(t.weights().iter().all(|w| *w == 0.0 || *w >= 1.0));
            }
        }
    }

    fn empty_hist(bins: usize) -> HistogramFeedback {
        HistogramFeedback::new(bins, (0.0, 1.0), goal_uniform(bins), 0.5, 1.0).unwrap()
    }

    #[test]
    fn record_into_the_right_bin() {
        let mut h = empty_hist(8);
        h.record(h.center(3));
        let mut expected = vec![0.0; 8];
        expected[3] = 1.0;
        assert_eq!(h.counts(), expected.as_slice());
    }

    #[test]
    fn cumulative_counts_without_forgetting() {
        let mut h = empty_hist(4);
        for _ in 0..10 {
            h.record(0.01);
        }
        assert_eq!(h.counts()[0], 10.0);
    }

    #[test]
    fn forgetting_saturates_at_geometric_limit() {
        let rho = 0.999;
        let mut h = HistogramFeedback::new(4, (0.0, 1.0), goal_uniform(4), 0.5, rho).unwrap();
        for _ in 0..40_000 {
            h.record(0.01);
        }
        let limit = 1.0 / (1.0 - rho);
        assert!((h.counts()[0] - limit).abs() < 1e-6 * limit);
    }

    #[test]
    fn out_of_range_values_clamp_to_edge_bins() {
        let mut h = empty_hist(4);
        h.record(-10.0);
        h.record(10.0);
        assert_eq!(h.counts()[0], 1.0);
        assert_eq!(h.counts()[3], 1.0);
    }

    #[test]
    fn satisfied_goal_gives_zero_bias() {
        let mut h = empty_hist(4);
        for b in 0..4 {
            h.record(h.center(b));
        }
        assert_eq!(h.bias(0.5).unwrap(), 0.0);
    }

    #[test]
    fn bias_points_away_from_the_overfull_bin() {
        let mut h = empty_hist(8);
        for _ in 0..50 {
            h.record(0.01);
        }
        let bias = h.bias(0.01).unwrap();
        assert!(bias > 0.0, "bias {bias} should point toward higher bins");
    }

    #[test]
    fn empty_histogram_refuses_to_bias() {
        let h = empty_hist(4);
        assert!(matches!(h.bias(0.5), Err(CoreError::EmptyHistogram)));
    }

    proptest! {
        #[test]
        fn bias_is_bounded_by_eta(
            values in proptest::collection::vec(-0.5f64..1.5, 1..200),
            probe in -0.5f64..1.5
        ) {
            let eta = 0.37;
            let mut h = HistogramFeedback::new(6, (0.0, 1.0), goal_uniform(6), eta, 0.999).unwrap();
            for v in values {
                h.record(v);
            }
            let bias = h.bias(probe).unwrap();
            prop_assert!(bias.abs() <= eta + 1e-15);
        }
    }

    /// Quantized 1-D test map with an optional histogram bias injected
    /// before quantization; used to observe cycle lengths.
    fn quantized_orbit(bias: Option<&mut HistogramFeedback>, steps: usize) -> Vec<i64> {
        let grid = 64.0;
        let mut x = 0.3f64;
        let mut orbit = Vec::with_capacity(steps);
        let mut h = bias;
        for _ in 0..steps {
            let mut next = 3.2 * x * (1.0 - x);
            if let Some(h) = h.as_deref_mut() {
                h.record(x);
                next += h.bias(x).unwrap_or(0.0);
            }
            x = (next * grid).round() / grid;
            x = x.clamp(0.0, 1.0);
            orbit.push((x * grid).round() as i64);
        }
        orbit
    }

    fn least_period(tail: &[i64]) -> usize {
        'outer: for p in 1..=tail.len() / 2 {
            for i in 0..tail.len() - p {
                if tail[i] != tail[i + p] {
                    continue 'outer;
                }
            }
            return p;
        }
        tail.len()
    }

    #[test]
    fn histogram_bias_lengthens_the_demo_cycle() {
        let unbiased = quantized_orbit(None, 4000);
        let p_unbiased = least_period(&unbiased[2000..]);
        let mut h =
            HistogramFeedback::new(16, (0.0, 1.0), goal_uniform(16), 0.15, 0.995).unwrap();
        let biased = quantized_orbit(Some(&mut h), 4000);
        let p_biased = least_period(&biased[2000..]);
        assert!(
            p_biased >= p_unbiased,
            "biased period {p_biased} shorter than unbiased {p_unbiased}"
        );
    }
}
