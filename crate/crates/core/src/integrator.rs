//! Backward integration of the state/costate system from an end point.
//!
//! The coupled system `(θ, λ)` is integrated in reversed time `τ = −t` with
//! the Hamiltonian-minimising control. Within a step the control branch is
//! frozen; it is re-selected at step boundaries and at located events.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Result};
use crate::model::{
    active_multiplier, dynamics, dynamics_jacobian, extreme_control, g_tilde, hamiltonian, minimize_hamiltonian,
    mixed_constraint, mixed_constraint_gradient, saturation_control, Adjoint, ControlMode, Direction,
    PendulumParams, ReducedState,
};
use crate::ode::{dopri5_step, initial_step, next_step_factor, DriverOptions, Step, Tolerance};
use crate::tangency::{EndpointKind, TangencyPoint};

/// Rectangular analysis window, `θ1` relative to the source period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub theta1_min: f64,
    pub theta1_max: f64,
    pub theta2_max: f64,
}

impl Window {
    pub fn for_params(p: &PendulumParams) -> Self {
        Self { theta1_min: -TAU - 1.0, theta1_max: TAU + 1.0, theta2_max: 3.0 * p.critical_speed() }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn margin(&self, s: ReducedState, shift: f64) -> f64 {
        let x = s.theta1 - shift;
        (x - self.theta1_min).min(self.theta1_max - x).min(self.theta2_max - s.theta2.abs())
    }

    pub fn is_valid(&self) -> bool {
        self.theta1_min < self.theta1_max && self.theta2_max > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tol: Tolerance,
    /// Longest backward time, in seconds.
    pub max_time: f64,
    pub window: Window,
    pub h_max: f64,
    /// Largest distance between consecutive samples in the `(θ1, θ2)` plane.
    pub sample_spacing: f64,
    /// Bisection tolerance for events, in time.
    pub event_tol: f64,
    /// Initial backward offset along the free-fall arc at non-smooth points.
    pub nonsmooth_offset: f64,
}

impl IntegratorOptions {
    pub fn for_params(p: &PendulumParams) -> Self {
        Self {
            tol: Tolerance::default(),
            max_time: 30.0,
            window: Window::for_params(p),
            h_max: 0.05,
            sample_spacing: 0.01,
            event_tol: 1e-10,
            nonsmooth_offset: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    HorizonReached,
    LeftWindow,
    StoppedAtIntersection,
    ReachedG0Again,
    AdjointVanished,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::HorizonReached => "horizon",
            Termination::LeftWindow => "left-window",
            Termination::StoppedAtIntersection => "stopping-point",
            Termination::ReachedG0Again => "reached-g0",
            Termination::AdjointVanished => "adjoint-vanished",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// `sinθ1 = 0`.
    SinZero,
    /// `λ2 cosθ1 = 0` with a change of bang direction.
    Switch,
    /// Bang to constrained arc, in backward time.
    ConstraintEntry,
    /// Constrained arc to bang, in backward time.
    ConstraintExit,
    G0Contact,
    WindowExit,
    Horizon,
    StoppingPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcEvent {
    pub t: f64,
    pub kind: EventKind,
    pub state: ReducedState,
    pub mode_before: ControlMode,
    pub mode_after: ControlMode,
}

/// One point of a barrier arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSample {
    /// Original time, `0` at the end point and negative before it.
    pub t: f64,
    pub state: ReducedState,
    pub adjoint: Adjoint,
    pub control: f64,
    pub multiplier: f64,
    pub hamiltonian: f64,
    /// Branch used on the segment from this sample to the next (earlier) one.
    pub mode: ControlMode,
    /// Terminal sample of a non-smooth end point, where the adjoint is a
    /// one-sided limit and the multiplier is unbounded.
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierArc {
    pub source: TangencyPoint,
    /// Ordered by decreasing `t`.
    pub samples: Vec<ArcSample>,
    pub events: Vec<ArcEvent>,
    pub termination: Termination,
}

impl BarrierArc {
    pub fn label(&self) -> String {
        self.source.label()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Earliest time reached, `≤ 0`.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| -s.t)
    }

    /// Copy moved by `n` periods in `θ1`.
    pub fn translated(&self, n: i32) -> Self {
        let d = TAU * n as f64;
        let mut out = self.clone();
        out.source = self.source.translated(n);
        for s in &mut out.samples {
            s.state.theta1 += d;
        }
        for e in &mut out.events {
            e.state.theta1 += d;
        }
        out
    }

    /// Samples that carry regular data.
    pub fn regular_samples(&self) -> impl Iterator<Item = &ArcSample> {
        self.samples.iter().filter(|s| !s.singular)
    }

    pub fn polyline(&self) -> Vec<ReducedState> {
        self.samples.iter().map(|s| s.state).collect()
    }
}

/// Frozen control branch of one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Branch {
    pub dir: Direction,
    pub constrained: bool,
}

impl Branch {
    pub fn mode(self) -> ControlMode {
        match (self.constrained, self.dir) {
            (true, _) => ControlMode::Constrained,
            (false, Direction::Plus) => ControlMode::BangPlus,
            (false, Direction::Minus) => ControlMode::BangMinus,
        }
    }

    /// Branch used on a segment recorded with `mode`.
    pub fn from_sample(s: &ArcSample) -> Self {
        match s.mode {
            ControlMode::BangPlus => Branch { dir: Direction::Plus, constrained: false },
            ControlMode::BangMinus => Branch { dir: Direction::Minus, constrained: false },
            ControlMode::Constrained => {
                let dir = if s.state.theta1.sin() > 0.0 { Direction::Plus } else { Direction::Minus };
                Branch { dir, constrained: true }
            }
            ControlMode::Tie => Branch { dir: Direction::from_sign(s.control).unwrap_or(Direction::Plus), constrained: false },
        }
    }

    pub fn control(self, p: &PendulumParams, s: ReducedState) -> f64 {
        if self.constrained {
            saturation_control(p, s)
        } else {
            self.dir.sign()
        }
    }

    pub fn multiplier(self, p: &PendulumParams, s: ReducedState, a: Adjoint) -> f64 {
        if self.constrained {
            let (sin1, cos1) = s.theta1.sin_cos();
            active_multiplier(p, sin1, cos1, a.lambda2)
        } else {
            0.0
        }
    }
}

/// Costate right-hand side `λ̇ = −(∂f/∂θ)ᵀ λ − μ ∂h/∂θ` in original time.
pub fn adjoint_rhs(p: &PendulumParams, s: ReducedState, a: Adjoint, u: f64, mu: f64) -> [f64; 2] {
    let j = dynamics_jacobian(p, s, u);
    let dh = mixed_constraint_gradient(p, s, u);
    [
        -(j[0][0] * a.lambda1 + j[1][0] * a.lambda2) - mu * dh[0],
        -(j[0][1] * a.lambda1 + j[1][1] * a.lambda2) - mu * dh[1],
    ]
}

/// Reversed-time right-hand side of the coupled system on a fixed branch.
fn coupled_rhs(p: &PendulumParams, b: Branch, y: &[f64; 4]) -> [f64; 4] {
    let s = ReducedState::new(y[0], y[1]);
    let a = Adjoint::new(y[2], y[3]);
    let u = b.control(p, s);
    let mu = b.multiplier(p, s, a);
    let f = dynamics(p, s, u);
    let da = adjoint_rhs(p, s, a, u, mu);
    [-f[0], -f[1], -da[0], -da[1]]
}

fn split(y: &[f64; 4]) -> (ReducedState, Adjoint) {
    (ReducedState::new(y[0], y[1]), Adjoint::new(y[2], y[3]))
}

fn select_branch(p: &PendulumParams, y: &[f64; 4], prev: Option<Direction>) -> Result<Branch> {
    let (s, a) = split(y);
    let m = minimize_hamiltonian(p, s, a, prev)?;
    Ok(Branch { dir: m.direction, constrained: m.saturated })
}

fn make_sample(p: &PendulumParams, t: f64, y: &[f64; 4], b: Branch, norm: f64) -> ArcSample {
    let (s, a) = split(y);
    let a = a.scaled(norm / a.norm());
    let u = b.control(p, s);
    ArcSample {
        t,
        state: s,
        adjoint: a,
        control: u,
        multiplier: b.multiplier(p, s, a),
        hamiltonian: hamiltonian(p, s, a, u),
        mode: b.mode(),
        singular: false,
    }
}

/// Start of a non-smooth arc: the exact slack-cable solution a short time
/// `δ` before reaching `(2kπ, ±√(g/l))`, with the adjoint direction that
/// makes the Hamiltonian vanish.
///
/// With zero tension the bob falls freely, so `cosθ1 = 1 − g t²/(2l)` near
/// the point. The offset is halved until the saturation control is small.
fn nonsmooth_start(p: &PendulumParams, tp: &TangencyPoint, delta0: f64) -> (f64, [f64; 4]) {
    let w = p.critical_speed();
    let sign = tp.state.theta2.signum();
    let base = tp.state.theta1;
    let mut delta = delta0;
    loop {
        let q = delta * (p.gravity / (4.0 * p.length)).sqrt();
        let s = ReducedState::new(base - sign * 2.0 * q.asin(), sign * w / (1.0 - q * q).sqrt());
        let u = saturation_control(p, s);
        if u.abs() < 0.5 || delta < 1e-8 {
            let lambda2 = tp.final_adjoint.lambda2.signum();
            let f = dynamics(p, s, u);
            let a = Adjoint::new(-lambda2 * f[1] / f[0], lambda2);
            let a = a.scaled(tp.final_adjoint.norm() / a.norm());
            return (delta, [s.theta1, s.theta2, a.lambda1, a.lambda2]);
        }
        delta *= 0.5;
    }
}

struct EventFns {
    sin1: f64,
    switching: f64,
    constraint: f64,
    envelope: f64,
    window: f64,
}

impl EventFns {
    fn eval(p: &PendulumParams, b: Branch, y: &[f64; 4], window: &Window, shift: f64) -> Self {
        let (s, a) = split(y);
        Self {
            sin1: s.theta1.sin(),
            switching: a.lambda2 * s.theta1.cos(),
            constraint: mixed_constraint(p, s, b.dir.sign()),
            envelope: g_tilde(p, s),
            window: window.margin(s, shift),
        }
    }

    fn get(&self, k: usize) -> f64 {
        match k {
            SIN => self.sin1,
            SWITCH => self.switching,
            CONSTRAINT => self.constraint,
            ENVELOPE => self.envelope,
            _ => self.window,
        }
    }
}

const SIN: usize = 0;
const SWITCH: usize = 1;
const CONSTRAINT: usize = 2;
const ENVELOPE: usize = 3;
const WINDOW: usize = 4;

fn crossed(k: usize, reference: f64, value: f64, armed: bool) -> bool {
    match k {
        ENVELOPE => armed && value > 0.0,
        WINDOW => value < 0.0,
        _ => reference != 0.0 && value != 0.0 && reference.signum() != value.signum(),
    }
}

/// Integrates one barrier arc backwards from `tp`.
pub fn integrate_arc(p: &PendulumParams, tp: &TangencyPoint, opts: &IntegratorOptions) -> Result<BarrierArc> {
    let shift = TAU * tp.period_index as f64;
    let norm = tp.final_adjoint.norm();
    let mut samples = Vec::new();
    let mut events = Vec::new();

    let (mut tau, mut y, mut branch) = match tp.kind {
        EndpointKind::Smooth => {
            let y = [tp.state.theta1, tp.state.theta2, tp.final_adjoint.lambda1, tp.final_adjoint.lambda2];
            let prev = Direction::from_sign(tp.final_control_set.lo + tp.final_control_set.hi);
            let b = select_branch(p, &y, prev)?;
            samples.push(make_sample(p, 0.0, &y, b, norm));
            (0.0, y, b)
        }
        EndpointKind::NonSmooth => {
            let (delta, y) = nonsmooth_start(p, tp, opts.nonsmooth_offset);
            samples.push(ArcSample {
                t: 0.0,
                state: tp.state,
                adjoint: tp.final_adjoint,
                control: 0.0,
                multiplier: 0.0,
                hamiltonian: hamiltonian(p, tp.state, tp.final_adjoint, 0.0),
                mode: ControlMode::Constrained,
                singular: true,
            });
            let b = select_branch(p, &y, None)?;
            samples.push(make_sample(p, -delta, &y, b, norm));
            (delta, y, b)
        }
    };

    let rhs = |b: Branch| move |_: f64, y: &[f64; 4]| coupled_rhs(p, b, y);
    let mut armed = g_tilde(p, split(&y).0) < -1e-9;
    let mut f0 = coupled_rhs(p, branch, &y);
    let mut h = initial_step(&y, &f0, opts.tol, opts.h_max).max(1e-6);
    let mut step_count = 0usize;
    let termination;

    loop {
        step_count += 1;
        if step_count > 2_000_000 {
            return Err(BarrierError::StepFailure { t: -tau, step: h });
        }
        let remaining = opts.max_time - tau;
        if remaining <= 1e-14 {
            events.push(ArcEvent {
                t: -tau,
                kind: EventKind::Horizon,
                state: split(&y).0,
                mode_before: branch.mode(),
                mode_after: branch.mode(),
            });
            termination = Termination::HorizonReached;
            break;
        }
        h = h.min(opts.h_max).min(remaining);
        let f = rhs(branch);
        let step = dopri5_step(&f, tau, &y, &f0, h, opts.tol);
        if !step.accepted() {
            h *= next_step_factor(step.error).min(0.9);
            if h < 1e-14 * tau.max(1.0) {
                return Err(BarrierError::StepFailure { t: -tau, step: h });
            }
            continue;
        }

        let start = EventFns::eval(p, branch, &y, &opts.window, shift);
        let chord = (step.y1[0] - y[0]).hypot(step.y1[1] - y[1]);
        let n = ((chord / opts.sample_spacing).ceil() as usize).clamp(1, 10_000);

        // Find the first dense sub-interval with a sign change.
        let mut hit: Option<(usize, f64, f64)> = None;
        let mut prev_theta = 0.0;
        let mut local_armed = armed;
        for j in 1..=n {
            let theta = j as f64 / n as f64;
            let yj = if j == n { step.y1 } else { step.interpolate(theta) };
            let ev = EventFns::eval(p, branch, &yj, &opts.window, shift);
            let mut first: Option<(usize, f64)> = None;
            for k in 0..5 {
                if crossed(k, start.get(k), ev.get(k), local_armed) {
                    let (lo, hi) = locate(p, branch, &step, k, start.get(k), prev_theta, theta, opts, shift);
                    // terminal contacts stop on the admissible side
                    let th = if k == ENVELOPE { lo } else { hi };
                    if first.is_none_or(|(_, t)| th < t) {
                        first = Some((k, th));
                    }
                }
            }
            if let Some((k, th)) = first {
                hit = Some((k, th, prev_theta));
                break;
            }
            if ev.envelope < -1e-9 {
                local_armed = true;
            }
            prev_theta = theta;
        }

        let (theta_end, event_kind) = match hit {
            Some((k, th, _)) => (th, Some(k)),
            None => (1.0, None),
        };

        // Emit interior samples of the accepted portion on the old branch.
        let n_emit = ((n as f64 * theta_end).ceil() as usize).max(1);
        for j in 1..n_emit {
            let theta = theta_end * j as f64 / n_emit as f64;
            let yj = step.interpolate(theta);
            let g = g_tilde(p, split(&yj).0);
            if g < -1e-9 {
                armed = true;
            }
            samples.push(make_sample(p, -(tau + theta * step.h), &yj, branch, norm));
        }

        // Advance to the end of the accepted portion.
        // Events continue from the bisected dense-output point so the
        // re-selected branch sees the post-crossing sign.
        let (new_tau, mut new_y) = if event_kind.is_some() {
            (tau + theta_end * step.h, step.interpolate(theta_end))
        } else {
            (step.t1(), step.y1)
        };
        let scale = norm / new_y[2].hypot(new_y[3]);
        if !scale.is_finite() || new_y[2].hypot(new_y[3]) < 1e-12 * norm.max(1.0) {
            return Err(BarrierError::AdjointVanished { t: -new_tau });
        }
        new_y[2] *= scale;
        new_y[3] *= scale;
        if g_tilde(p, split(&new_y).0) < -1e-9 {
            armed = true;
        }
        tau = new_tau;
        y = new_y;

        match event_kind {
            Some(ENVELOPE) => {
                samples.push(make_sample(p, -tau, &y, branch, norm));
                events.push(ArcEvent {
                    t: -tau,
                    kind: EventKind::G0Contact,
                    state: split(&y).0,
                    mode_before: branch.mode(),
                    mode_after: branch.mode(),
                });
                termination = Termination::ReachedG0Again;
                break;
            }
            Some(WINDOW) => {
                samples.push(make_sample(p, -tau, &y, branch, norm));
                events.push(ArcEvent {
                    t: -tau,
                    kind: EventKind::WindowExit,
                    state: split(&y).0,
                    mode_before: branch.mode(),
                    mode_after: branch.mode(),
                });
                termination = Termination::LeftWindow;
                break;
            }
            _ => {}
        }

        let new_branch = match select_branch(p, &y, Some(branch.dir)) {
            Ok(b) => b,
            Err(BarrierError::EmptyControlSet { .. }) => {
                samples.push(make_sample(p, -tau, &y, branch, norm));
                events.push(ArcEvent {
                    t: -tau,
                    kind: EventKind::G0Contact,
                    state: split(&y).0,
                    mode_before: branch.mode(),
                    mode_after: branch.mode(),
                });
                termination = Termination::ReachedG0Again;
                break;
            }
            Err(e) => return Err(e),
        };
        samples.push(make_sample(p, -tau, &y, new_branch, norm));
        let kind = if new_branch.dir != branch.dir {
            Some(EventKind::Switch)
        } else if new_branch.constrained && !branch.constrained {
            Some(EventKind::ConstraintEntry)
        } else if !new_branch.constrained && branch.constrained {
            Some(EventKind::ConstraintExit)
        } else if event_kind == Some(SIN) {
            Some(EventKind::SinZero)
        } else {
            None
        };
        if let Some(kind) = kind {
            events.push(ArcEvent {
                t: -tau,
                kind,
                state: split(&y).0,
                mode_before: branch.mode(),
                mode_after: new_branch.mode(),
            });
        }
        branch = new_branch;
        f0 = coupled_rhs(p, branch, &y);
        h = if event_kind.is_some() { h.max(1e-6) } else { h * next_step_factor(step.error) };
    }

    Ok(BarrierArc { source: *tp, samples, events, termination })
}

/// Bisects event `k` inside `[lo, hi]` (fractions of the step) on the dense
/// output and returns the bracketing fractions; `hi` is past the crossing.
#[allow(clippy::too_many_arguments)]
fn locate(
    p: &PendulumParams,
    b: Branch,
    step: &Step<4>,
    k: usize,
    reference: f64,
    mut lo: f64,
    mut hi: f64,
    opts: &IntegratorOptions,
    shift: f64,
) -> (f64, f64) {
    let frac_tol = opts.event_tol / step.h.abs().max(1e-300);
    while (hi - lo) > frac_tol {
        let mid = 0.5 * (lo + hi);
        let v = EventFns::eval(p, b, &step.interpolate(mid), &opts.window, shift).get(k);
        if crossed(k, reference, v, true) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Integrates all end points, in parallel.
pub fn integrate_all(p: &PendulumParams, points: &[TangencyPoint], opts: &IntegratorOptions) -> Result<Vec<BarrierArc>> {
    use rayon::prelude::*;
    points.par_iter().map(|tp| integrate_arc(p, tp, opts)).collect()
}

/// `max |H(t) − H(t0)|` over the regular samples.
pub fn hamiltonian_drift(arc: &BarrierArc) -> f64 {
    let mut it = arc.regular_samples();
    let Some(first) = it.next() else { return 0.0 };
    it.fold(0.0, |m, s| m.max((s.hamiltonian - first.hamiltonian).abs()))
}

fn branch_integrate(
    p: &PendulumParams,
    b: Branch,
    tau0: f64,
    y0: [f64; 4],
    tau1: f64,
    tol: Tolerance,
) -> Result<[f64; 4]> {
    if tau1 <= tau0 {
        return Ok(y0);
    }
    let opts = DriverOptions { tol, h_max: 0.01, h_min: 1e-15 };
    crate::ode::integrate(|_, y: &[f64; 4]| coupled_rhs(p, b, y), tau0, y0, tau1, opts, |_| true).map(|r| r.1)
}

/// State and adjoint at time `t` on `arc`, re-integrated from the nearest
/// later sample with tight tolerance. `None` outside the arc's time span.
pub fn state_at(p: &PendulumParams, arc: &BarrierArc, t: f64) -> Option<(ReducedState, Adjoint)> {
    let i = segment_index(arc, t)?;
    let s = &arc.samples[i];
    if s.singular {
        let n = &arc.samples[i + 1];
        return (t == s.t).then_some((s.state, s.adjoint)).or(Some((n.state, n.adjoint)));
    }
    let y0 = [s.state.theta1, s.state.theta2, s.adjoint.lambda1, s.adjoint.lambda2];
    let tol = Tolerance { abs: 1e-13, rel: 1e-12 };
    let y = branch_integrate(p, Branch::from_sample(s), -s.t, y0, -t, tol).ok()?;
    Some(split(&y))
}

/// Sample at time `t` on the segment containing it, using that segment's
/// branch and the arc's adjoint normalisation.
pub fn sample_at(p: &PendulumParams, arc: &BarrierArc, t: f64) -> Option<ArcSample> {
    let i = segment_index(arc, t)?;
    let (s, a) = state_at(p, arc, t)?;
    let b = Branch::from_sample(&arc.samples[i]);
    let y = [s.theta1, s.theta2, a.lambda1, a.lambda2];
    Some(make_sample(p, t, &y, b, arc.source.final_adjoint.norm()))
}

/// Index `i` with `t_{i+1} ≤ t ≤ t_i`.
pub fn segment_index(arc: &BarrierArc, t: f64) -> Option<usize> {
    let n = arc.samples.len();
    if n < 2 || t > arc.samples[0].t || t < arc.samples[n - 1].t {
        return None;
    }
    let pos = arc.samples.partition_point(|s| s.t > t);
    Some(pos.saturating_sub(1).min(n - 2))
}

/// Control and vectogram `f(θ, u)` used on the segment containing `t`.
pub fn vectogram_at(p: &PendulumParams, arc: &BarrierArc, t: f64, s: ReducedState) -> Option<[f64; 2]> {
    let i = segment_index(arc, t)?;
    let b = Branch::from_sample(&arc.samples[i]);
    Some(dynamics(p, s, b.control(p, s)))
}

/// Replays the recorded control schedule forwards from the earliest sample
/// and returns the states at every regular sample time, latest first.
///
/// Constrained segments use the recorded control as a function of time,
/// interpolated linearly between samples, instead of the state feedback.
pub fn replay(p: &PendulumParams, arc: &BarrierArc, tol: Tolerance) -> Result<Vec<ReducedState>> {
    let regular: Vec<&ArcSample> = arc.regular_samples().collect();
    let Some(last) = regular.last() else { return Ok(Vec::new()) };
    let mut out = vec![last.state; regular.len()];
    let mut x = [last.state.theta1, last.state.theta2];
    for i in (0..regular.len().saturating_sub(1)).rev() {
        let b = Branch::from_sample(regular[i]);
        let (t0, t1) = (regular[i + 1].t, regular[i].t);
        let (u0, u1) = (b.control(p, regular[i + 1].state), b.control(p, regular[i].state));
        let f = |t: f64, y: &[f64; 2]| {
            let s = ReducedState::new(y[0], y[1]);
            let u = if b.constrained { u0 + (u1 - u0) * (t - t0) / (t1 - t0) } else { b.control(p, s) };
            dynamics(p, s, u)
        };
        let opts = DriverOptions { tol, h_max: 0.01, h_min: 1e-15 };
        x = crate::ode::integrate(f, t0, x, t1, opts, |_| true)?.1;
        out[i] = ReducedState::new(x[0], x[1]);
    }
    Ok(out)
}

/// Control on `branch` evaluated at `s`, for callers outside the integrator.
pub fn branch_control(p: &PendulumParams, mode: ControlMode, s: ReducedState) -> f64 {
    match mode {
        ControlMode::BangPlus => 1.0,
        ControlMode::BangMinus => -1.0,
        ControlMode::Constrained => saturation_control(p, s),
        ControlMode::Tie => extreme_control(p, s, Direction::Plus).0,
    }
}
