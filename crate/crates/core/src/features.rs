//! Streaming time-domain feature extractors producing slow control signals.
//!
//! Everything here runs per sample. Block transforms are deliberately
//! absent: a block processor imposes its own update pace on a feedback
//! loop, which quickly dominates what you hear.

use std::collections::VecDeque;

/// Sign bookkeeping shared by the zero-crossing extractors. A sample at
/// exactly zero inherits the sign of the previous nonzero sample, so a
/// grazing touch of zero never double-counts.
#[derive(Debug, Clone, Copy, Default)]
struct SignTracker {
    last: i8,
}

impl SignTracker {
    /// Returns true when `x` completes a strict sign change.
    fn push(&mut self, x: f64) -> bool {
        let sign = if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            self.last
        };
        let crossed = self.last != 0 && sign != 0 && sign != self.last;
        self.last = sign;
        crossed
    }
}

/// Zero-crossing rate over a fixed window of the last `L` samples.
///
/// Output is crossings / L, in [0, (L-1)/L]. During the first L samples
/// the window is still warming up and the extractor reports 0.
#[derive(Debug, Clone)]
pub struct ZcrFixed {
    window: VecDeque<bool>,
    len: usize,
    crossings: usize,
    seen: usize,
    sign: SignTracker,
}

impl ZcrFixed {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "window length must be positive");
        ZcrFixed {
            window: VecDeque::with_capacity(len),
            len,
            crossings: 0,
            seen: 0,
            sign: SignTracker::default(),
        }
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn push(&mut self, x: f64) -> f64 {
        let crossed = self.sign.push(x);
        self.seen += 1;
        // Window of L samples holds L-1 consecutive pairs.
        if self.seen > 1 {
            self.window.push_back(crossed);
            if crossed {
                self.crossings += 1;
            }
            if self.window.len() > self.len - 1 {
                if self.window.pop_front() == Some(true) {
                    self.crossings -= 1;
                }
            }
        }
        self.rate()
    }

    pub fn rate(&self) -> f64 {
        if self.seen < self.len {
            0.0
        } else {
            self.crossings as f64 / self.len as f64
        }
    }
}

/// Zero-crossing rate that tallies a fixed number of crossings and divides
/// by the samples elapsed, adapting its effective window to the signal:
/// lower frequencies get longer windows.
///
/// Counters reset after each emission.
#[derive(Debug, Clone)]
pub struct ZcrAdaptive {
    target: usize,
    elapsed: u64,
    crossings: usize,
    sign: SignTracker,
    last_rate: Option<f64>,
}

impl ZcrAdaptive {
    pub fn new(target: usize) -> Self {
        assert!(target >= 1, "crossing target must be positive");
        ZcrAdaptive {
            target,
            elapsed: 0,
            crossings: 0,
            sign: SignTracker::default(),
            last_rate: None,
        }
    }

    /// Returns `Some(rate)` on the sample that completes the tally,
    /// `None` while pending.
    pub fn push(&mut self, x: f64) -> Option<f64> {
        self.elapsed += 1;
        if self.sign.push(x) {
            self.crossings += 1;
            if self.crossings >= self.target {
                let rate = self.target as f64 / self.elapsed as f64;
                self.elapsed = 0;
                self.crossings = 0;
                self.last_rate = Some(rate);
                return Some(rate);
            }
        }
        None
    }

    /// Most recent emitted rate; acts as a sample-and-hold between
    /// emissions.
    pub fn current(&self) -> Option<f64> {
        self.last_rate
    }
}

/// First-order envelope follower A += tau * (u^2 - A), one update per
/// sample with a per-sample rate constant.
#[derive(Debug, Clone)]
pub struct EnvelopeFollower {
    a: f64,
    tau: f64,
}

impl EnvelopeFollower {
    pub fn new(tau: f64) -> Self {
        assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
        EnvelopeFollower { a: 0.0, tau }
    }

    pub fn with_initial(tau: f64, a0: f64) -> Self {
        assert!(a0 >= 0.0);
        let mut e = EnvelopeFollower::new(tau);
        e.a = a0;
        e
    }

    pub fn push(&mut self, u: f64) -> f64 {
        self.a += self.tau * (u * u - self.a);
        self.a
    }

    pub fn value(&self) -> f64 {
        self.a
    }
}

/// Arithmetic mean of the most recent `L` values.
///
/// `new` warms up over the first L samples (mean of what has arrived);
/// `zero_filled` starts from a window of zeros so the mean is always over
/// exactly L entries.
#[derive(Debug, Clone)]
pub struct RunningMean {
    buf: Vec<f64>,
    pos: usize,
    filled: usize,
    sum: f64,
}

impl RunningMean {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "window length must be positive");
        RunningMean {
            buf: vec![0.0; len],
            pos: 0,
            filled: 0,
            sum: 0.0,
        }
    }

    pub fn zero_filled(len: usize) -> Self {
        let mut m = RunningMean::new(len);
        m.filled = len;
        m
    }

    pub fn push(&mut self, x: f64) -> f64 {
        self.sum += x - self.buf[self.pos];
        self.buf[self.pos] = x;
        self.pos = (self.pos + 1) % self.buf.len();
        if self.filled < self.buf.len() {
            self.filled += 1;
        }
        self.mean()
    }

    pub fn mean(&self) -> f64 {
        if self.filled == 0 {
            0.0
        } else {
            self.sum / self.filled as f64
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filled == 0
    }
}
