//! Fixed-step RK4 integration with event location on switching manifolds
//! and sliding-mode continuation.
//!
//! The step size is fixed so that renders stay sample-accurate and
//! bit-reproducible; switching events are located after the fact by
//! bisection on the step fraction. One event is handled per step, the
//! earliest bracketed root on a multi-crossing step.

use std::sync::Arc;

use log::warn;

use crate::error::{CoreError, Result};
use crate::state::{Layout, StateVector};
use crate::system::SystemDefinition;

/// Event kinds recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Crossing,
    SlidingStart,
    SlidingEnd,
    Equilibrium,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Crossing => "crossing",
            EventKind::SlidingStart => "sliding_start",
            EventKind::SlidingEnd => "sliding_end",
            EventKind::Equilibrium => "equilibrium",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Uniformly sampled trajectory with flat storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    /// Spacing between stored samples (integration dt times decimation).
    pub dt: f64,
    pub layout: Arc<Layout>,
    dim: usize,
    data: Vec<f64>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, layout: Arc<Layout>) -> Self {
        let dim = layout.len();
        Trajectory {
            t0,
            dt,
            layout,
            dim,
            data: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn from_samples(t0: f64, dt: f64, layout: Arc<Layout>, samples: &[Vec<f64>]) -> Self {
        let mut traj = Trajectory::new(t0, dt, layout);
        for s in samples {
            traj.push(s);
        }
        traj
    }

    pub fn push(&mut self, sample: &[f64]) {
        assert_eq!(sample.len(), self.dim);
        self.data.extend_from_slice(sample);
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn t_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Index of the first sample at or after time `t`.
    pub fn index_at_time(&self, t: f64) -> usize {
        if t <= self.t0 {
            return 0;
        }
        let i = ((t - self.t0) / self.dt).ceil() as usize;
        i.min(self.len().saturating_sub(1))
    }

    pub fn var(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(index < self.dim);
        self.data.iter().skip(index).step_by(self.dim).copied()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.layout.index_of(name)?;
        Some(self.var(idx).collect())
    }
}

/// Local behaviour of the flow at a point on a switching manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldClass {
    Crossing,
    Repelling,
    Sliding,
}

const BISECTION_MAX_ITERS: usize = 60;
const LOCATE_SUBDIVISIONS: usize = 8;
const FD_EPS: f64 = 1e-6;

struct Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }
}

/// Classical RK4 update with a caller-supplied field.
fn rk4_into<F: FnMut(&[f64], &mut [f64])>(
    mut f: F,
    s: &[f64],
    dt: f64,
    sc: &mut Scratch,
    out: &mut [f64],
) {
    let n = s.len();
    f(s, &mut sc.k1);
    for i in 0..n {
        sc.stage[i] = s[i] + 0.5 * dt * sc.k1[i];
    }
    f(&sc.stage, &mut sc.k2);
    for i in 0..n {
        sc.stage[i] = s[i] + 0.5 * dt * sc.k2[i];
    }
    f(&sc.stage, &mut sc.k3);
    for i in 0..n {
        sc.stage[i] = s[i] + dt * sc.k3[i];
    }
    f(&sc.stage, &mut sc.k4);
    for i in 0..n {
        out[i] = s[i] + dt / 6.0 * (sc.k1[i] + 2.0 * sc.k2[i] + 2.0 * sc.k3[i] + sc.k4[i]);
    }
}

/// Signed gap between a pair of region indicators: negative on the `from`
/// side, positive on the `to` side, zero on their mutual boundary.
fn boundary_gap(sys: &SystemDefinition, from: usize, to: usize, s: &[f64]) -> f64 {
    0.5 * (sys.indicator(to, s) - sys.indicator(from, s))
}

/// Unit normal of the from/to boundary, oriented from `from` into `to`,
/// obtained by central finite differences of the indicator gap.
fn manifold_normal(
    sys: &SystemDefinition,
    from: usize,
    to: usize,
    s: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let n = s.len();
    let mut grad = vec![0.0; n];
    let mut probe = s.to_vec();
    for k in 0..n {
        let h = FD_EPS * (1.0 + s[k].abs());
        probe[k] = s[k] + h;
        let plus = boundary_gap(sys, from, to, &probe);
        probe[k] = s[k] - h;
        let minus = boundary_gap(sys, from, to, &probe);
        probe[k] = s[k];
        grad[k] = (plus - minus) / (2.0 * h);
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Err(CoreError::DegenerateNormal { t });
    }
    for g in &mut grad {
        *g /= norm;
    }
    Ok(grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normal components of the two fields at a manifold point and the class
/// they imply. `a` belongs to the `from` side, `b` to the `to` side.
fn classify_pair(
    sys: &SystemDefinition,
    from: usize,
    to: usize,
    s: &[f64],
    t: f64,
) -> Result<(ManifoldClass, f64, f64, Vec<f64>)> {
    let normal = manifold_normal(sys, from, to, s, t)?;
    let mut f = vec![0.0; s.len()];
    sys.eval_region(from, s, &mut f);
    let a = dot(&f, &normal);
    sys.eval_region(to, s, &mut f);
    let b = dot(&f, &normal);
    let tol = sys.switching_tol;
    if a.abs() <= tol || b.abs() <= tol {
        warn!(
            "tangency (grazing) at t = {t}: normal components a = {a:.3e}, b = {b:.3e}; \
             treating as crossing"
        );
        return Ok((ManifoldClass::Crossing, a, b, normal));
    }
    let class = if a < 0.0 && b > 0.0 {
        ManifoldClass::Repelling
    } else if a > 0.0 && b < 0.0 {
        ManifoldClass::Sliding
    } else {
        ManifoldClass::Crossing
    };
    Ok((class, a, b, normal))
}

/// Streaming fixed-step integrator over one system.
///
/// Owns its scratch buffers; every step is deterministic given the same
/// system, state and dt.
pub struct Stepper<'a> {
    sys: &'a SystemDefinition,
    state: Vec<f64>,
    next: Vec<f64>,
    t0: f64,
    dt: f64,
    steps: u64,
    region: Option<usize>,
    sliding_pair: Option<(usize, usize)>,
    scratch: Scratch,
    events: Vec<Event>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a SystemDefinition, s0: Vec<f64>, t0: f64, dt: f64) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(CoreError::BadStep(dt));
        }
        assert_eq!(s0.len(), sys.dimension, "initial state dimension mismatch");
        if let Some(index) = s0.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                index,
                name: sys.layout.name(index).to_string(),
                t: t0,
            });
        }
        let region = sys.active_region(&s0);
        let dim = sys.dimension;
        Ok(Stepper {
            sys,
            state: s0,
            next: vec![0.0; dim],
            t0,
            dt,
            steps: 0,
            region,
            sliding_pair: None,
            scratch: Scratch::new(dim),
            events: Vec::new(),
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn t(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Advance by one full dt, handling at most one switching event.
    pub fn step(&mut self) -> Result<()> {
        let t = self.t();
        if self.sliding_pair.is_some() {
            self.step_sliding(t)?;
        } else if self.sys.regions.is_some() {
            self.step_switched(t)?;
        } else {
            let sys = self.sys;
            rk4_into(
                |s, out| sys.eval(s, out),
                &self.state,
                self.dt,
                &mut self.scratch,
                &mut self.next,
            );
            std::mem::swap(&mut self.state, &mut self.next);
        }
        if let Some(project) = &self.sys.post_step {
            project(&mut self.state);
        }
        if let Some(index) = self.state.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                index,
                name: self.sys.layout.name(index).to_string(),
                t: t + self.dt,
            });
        }
        self.steps += 1;
        Ok(())
    }

    fn rk4_region(&mut self, region: Option<usize>, s: &[f64], dt: f64, out: &mut [f64]) {
        let sys = self.sys;
        match region {
            Some(r) => rk4_into(
                |x, o| sys.eval_region(r, x, o),
                s,
                dt,
                &mut self.scratch,
                out,
            ),
            None => rk4_into(|x, o| sys.eval(x, o), s, dt, &mut self.scratch, out),
        }
    }

    fn step_switched(&mut self, t: f64) -> Result<()> {
        let from = self
            .region
            .expect("switched stepper always tracks a region");
        let state = std::mem::take(&mut self.state);
        let mut next = std::mem::take(&mut self.next);
        self.rk4_region(Some(from), &state, self.dt, &mut next);
        let to = self.sys.active_region(&next).unwrap();
        if to == from {
            self.state = next;
            self.next = state;
            return Ok(());
        }

        let (alpha, s_cross) = self.locate_fraction(from, to, &state, t)?;
        let t_cross = t + alpha * self.dt;
        let (class, _a, _b, _n) = classify_pair(self.sys, from, to, &s_cross, t_cross)?;
        let resume = match class {
            ManifoldClass::Crossing => {
                self.events.push(Event {
                    t: t_cross,
                    kind: EventKind::Crossing,
                });
                Some(to)
            }
            ManifoldClass::Repelling => {
                // No unique continuation from a repelling manifold; stay with
                // the side the trajectory came from.
                warn!("repelling manifold point at t = {t_cross}; continuing in previous region");
                self.events.push(Event {
                    t: t_cross,
                    kind: EventKind::Crossing,
                });
                Some(from)
            }
            ManifoldClass::Sliding => {
                self.events.push(Event {
                    t: t_cross,
                    kind: EventKind::SlidingStart,
                });
                self.sliding_pair = Some((from, to));
                None
            }
        };

        let rem = (1.0 - alpha) * self.dt;
        if rem <= 0.0 {
            self.state = s_cross;
            self.next = state;
            if let Some(r) = resume {
                self.region = Some(r);
            }
            return Ok(());
        }
        match resume {
            Some(r) => {
                self.rk4_region(Some(r), &s_cross, rem, &mut next);
                self.region = self.sys.active_region(&next);
                self.state = next;
                self.next = state;
            }
            None => {
                let pair = self.sliding_pair.unwrap();
                self.slide_into(pair, &s_cross, rem, t_cross, &mut next)?;
                self.state = next;
                self.next = state;
            }
        }
        Ok(())
    }

    fn step_sliding(&mut self, t: f64) -> Result<()> {
        let (r1, r2) = self.sliding_pair.unwrap();
        let normal = manifold_normal(self.sys, r1, r2, &self.state, t)?;
        let mut f = vec![0.0; self.state.len()];
        self.sys.eval_region(r1, &self.state, &mut f);
        let a = dot(&f, &normal);
        self.sys.eval_region(r2, &self.state, &mut f);
        let b = dot(&f, &normal);
        let lambda = sliding_lambda(a, b);
        let exits = match lambda {
            Some(l) => !(0.0..=1.0).contains(&l),
            // Equal normal components: if the fields agree the flow is
            // tangential either way, otherwise the combination is undefined.
            None => false,
        };
        if exits {
            self.events.push(Event {
                t,
                kind: EventKind::SlidingEnd,
            });
            self.sliding_pair = None;
            self.region = Some(if a < 0.0 { r1 } else { r2 });
            return self.step_switched(t);
        }
        let state = std::mem::take(&mut self.state);
        let mut next = std::mem::take(&mut self.next);
        let pair = (r1, r2);
        self.slide_into(pair, &state, self.dt, t, &mut next)?;
        self.state = next;
        self.next = state;
        Ok(())
    }

    /// One RK4 step along the Filippov combination of the two fields,
    /// recomputing the combination at every stage point.
    fn slide_into(
        &mut self,
        (r1, r2): (usize, usize),
        s: &[f64],
        dt: f64,
        t: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let sys = self.sys;
        let dim = s.len();
        let mut f1 = vec![0.0; dim];
        let mut f2 = vec![0.0; dim];
        let mut fault: Option<CoreError> = None;
        rk4_into(
            |x, o| {
                if fault.is_some() {
                    o.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                sys.eval_region(r1, x, &mut f1);
                sys.eval_region(r2, x, &mut f2);
                let normal = match manifold_normal(sys, r1, r2, x, t) {
                    Ok(n) => n,
                    Err(e) => {
                        fault = Some(e);
                        o.iter_mut().for_each(|v| *v = 0.0);
                        return;
                    }
                };
                let a = dot(&f1, &normal);
                let b = dot(&f2, &normal);
                match sliding_lambda(a, b) {
                    Some(l) => {
                        // Stage points may poke slightly off the manifold;
                        // clamping keeps the combination convex there.
                        let l = l.clamp(0.0, 1.0);
                        for i in 0..dim {
                            o[i] = l * f1[i] + (1.0 - l) * f2[i];
                        }
                    }
                    None => {
                        let agree = f1
                            .iter()
                            .zip(&f2)
                            .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())));
                        if agree {
                            o.copy_from_slice(&f1);
                        } else {
                            fault = Some(CoreError::SlidingDegenerate { t });
                            o.iter_mut().for_each(|v| *v = 0.0);
                        }
                    }
                }
            },
            s,
            dt,
            &mut self.scratch,
            out,
        );
        match fault {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Earliest step fraction at which the from/to boundary is met,
    /// by subdivision scan plus bisection on the step fraction.
    fn locate_fraction(
        &mut self,
        from: usize,
        to: usize,
        s_before: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let tol = self.sys.switching_tol;
        let g0 = boundary_gap(self.sys, from, to, s_before);
        if g0.abs() <= tol {
            return Ok((0.0, s_before.to_vec()));
        }
        let mut probe = vec![0.0; s_before.len()];
        let eval_gap = |this: &mut Self, alpha: f64, probe: &mut Vec<f64>| -> f64 {
            this.rk4_region(Some(from), s_before, alpha * this.dt, probe);
            boundary_gap(this.sys, from, to, probe)
        };

        // Scan for the earliest bracket; more than one sign change on the
        // step means multiple crossings were skipped over.
        let mut lo = 0.0;
        let mut g_lo = g0;
        let mut hi = 1.0;
        let mut bracket = None;
        let mut sign_changes = 0;
        let mut prev_alpha = 0.0;
        let mut prev_g = g0;
        for k in 1..=LOCATE_SUBDIVISIONS {
            let alpha = k as f64 / LOCATE_SUBDIVISIONS as f64;
            let g = eval_gap(self, alpha, &mut probe);
            if prev_g.signum() != g.signum() {
                sign_changes += 1;
                if bracket.is_none() {
                    bracket = Some((prev_alpha, prev_g, alpha));
                }
            }
            prev_alpha = alpha;
            prev_g = g;
        }
        if sign_changes > 1 {
            warn!(
                "indicator changes sign {sign_changes} times over the step at t = {t}; \
                 using earliest bracketed root"
            );
        }
        match bracket {
            Some((a, g, b)) => {
                lo = a;
                g_lo = g;
                hi = b;
            }
            None => {
                if g0.signum() == prev_g.signum() {
                    return Err(CoreError::NoCrossing { t });
                }
            }
        }

        let mut mid = 0.5 * (lo + hi);
        for _ in 0..BISECTION_MAX_ITERS {
            mid = 0.5 * (lo + hi);
            let g_mid = eval_gap(self, mid, &mut probe);
            if g_mid.abs() <= tol {
                break;
            }
            if g_mid.signum() == g_lo.signum() {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
        }
        self.rk4_region(Some(from), s_before, mid * self.dt, &mut probe);
        Ok((mid, probe))
    }
}

fn sliding_lambda(a: f64, b: f64) -> Option<f64> {
    let denom = b - a;
    if denom.abs() < 1e-14 * (1.0 + a.abs().max(b.abs())) {
        None
    } else {
        Some(b / denom)
    }
}

/// One classical 4th-order Runge-Kutta update.
pub fn rk4_step(sys: &SystemDefinition, s: &StateVector, dt: f64) -> Result<StateVector> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(CoreError::BadStep(dt));
    }
    if let Some(index) = s.first_non_finite() {
        return Err(CoreError::NonFinite {
            index,
            name: sys.layout.name(index).to_string(),
            t: 0.0,
        });
    }
    let mut sc = Scratch::new(s.len());
    let mut deriv = vec![0.0; s.len()];
    sys.eval(s.values(), &mut deriv);
    if let Some(index) = deriv.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            index,
            name: sys.layout.name(index).to_string(),
            t: 0.0,
        });
    }
    let mut out = vec![0.0; s.len()];
    rk4_into(
        |x, o| sys.eval(x, o),
        s.values(),
        dt,
        &mut sc,
        &mut out,
    );
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            index,
            name: sys.layout.name(index).to_string(),
            t: dt,
        });
    }
    Ok(sys.state(out))
}

/// Integrate for `duration` with step `dt`, storing every `decimate`-th
/// sample. Region changes are routed through event location; no-region
/// systems never emit events.
pub fn integrate(
    sys: &SystemDefinition,
    s0: &StateVector,
    duration: f64,
    dt: f64,
    decimate: usize,
) -> Result<Trajectory> {
    assert!(duration > 0.0, "duration must be positive");
    assert!(decimate >= 1, "decimate must be at least 1");
    if dt <= 0.0 || !dt.is_finite() {
        return Err(CoreError::BadStep(dt));
    }
    let n_steps = (duration / dt).round() as usize;
    let mut stepper = Stepper::new(sys, s0.values().to_vec(), 0.0, dt)?;
    let mut traj = Trajectory::new(0.0, dt * decimate as f64, Arc::clone(&sys.layout));
    traj.push(s0.values());
    for step in 1..=n_steps {
        stepper.step()?;
        if step % decimate == 0 {
            traj.push(stepper.state());
        }
    }
    traj.events = stepper.take_events();
    Ok(traj)
}

/// Locate the switching time and state between two sampled states that
/// straddle a manifold. Returns immediately when `s_before` already lies
/// on the manifold (within tolerance).
pub fn locate_switching(
    sys: &SystemDefinition,
    s_before: &StateVector,
    s_after: &StateVector,
    t: f64,
    dt: f64,
) -> Result<(f64, StateVector)> {
    if sys.regions.is_none() {
        return Err(CoreError::NoRegions);
    }
    let from = sys.active_region(s_before.values()).unwrap();
    let to = sys.active_region(s_after.values()).unwrap();
    if from == to {
        return Err(CoreError::NoCrossing { t });
    }
    let mut stepper = Stepper::new(sys, s_before.values().to_vec(), t, dt)?;
    let (alpha, s_cross) = stepper.locate_fraction(from, to, s_before.values(), t)?;
    Ok((t + alpha * dt, sys.state(s_cross)))
}

/// Classify the local flow at a point on (or within tolerance of) a
/// switching manifold. The boundary pair is taken as the two regions with
/// the largest indicators; the side with the larger indicator plays the
/// role of the departure region for the normal's orientation.
pub fn classify_manifold_point(
    sys: &SystemDefinition,
    s_on_manifold: &StateVector,
) -> Result<ManifoldClass> {
    let (from, to) = top_pair(sys, s_on_manifold.values())?;
    let (class, _, _, _) = classify_pair(sys, from, to, s_on_manifold.values(), 0.0)?;
    Ok(class)
}

/// Advance a sliding state by dt along the Filippov convex combination
/// `lambda*f1 + (1-lambda)*f2` with `lambda` chosen so the combined field
/// has zero normal component.
pub fn sliding_step(sys: &SystemDefinition, s: &StateVector, dt: f64) -> Result<StateVector> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(CoreError::BadStep(dt));
    }
    let pair = top_pair(sys, s.values())?;
    let mut stepper = Stepper::new(sys, s.values().to_vec(), 0.0, dt)?;
    let mut out = vec![0.0; s.len()];
    stepper.slide_into(pair, s.values(), dt, 0.0, &mut out)?;
    Ok(sys.state(out))
}

/// The two regions with the largest indicators at `s`; ties resolve to the
/// lower region index.
fn top_pair(sys: &SystemDefinition, s: &[f64]) -> Result<(usize, usize)> {
    let regions = sys.regions.as_ref().ok_or(CoreError::NoRegions)?;
    let mut order: Vec<(usize, f64)> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r.indicator)(s)))
        .collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    Ok((order[0].0, order[1].0))
}
