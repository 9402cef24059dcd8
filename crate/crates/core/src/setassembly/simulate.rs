//! Forward simulation under open-loop and feedback policies.

use crate::error::Result;
use crate::integrator::{BarrierArc, Branch};
use crate::model::{control_set, dynamics, PendulumParams, ReducedState};
use crate::ode::{dopri5_step, initial_step, next_step_factor, Tolerance};

/// A control law `u(t, θ)`; outputs are clipped into `U(θ)` by the simulator.
pub trait ControlPolicy: Send + Sync {
    fn control(&self, t: f64, s: ReducedState) -> f64;

    /// Times at which the law is discontinuous in `t`.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn label(&self) -> String;
}

/// Piecewise constant `±1` with the given switch times.
#[derive(Debug, Clone, PartialEq)]
pub struct BangBang {
    pub initial: f64,
    pub switches: Vec<f64>,
}

impl ControlPolicy for BangBang {
    fn control(&self, t: f64, _s: ReducedState) -> f64 {
        let n = self.switches.iter().filter(|&&ts| t >= ts).count();
        if n % 2 == 0 { self.initial } else { -self.initial }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.switches.clone()
    }

    fn label(&self) -> String {
        let sw: Vec<String> = self.switches.iter().map(|t| format!("{t}")).collect();
        format!("bang({:+},[{}])", self.initial, sw.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ControlPolicy for Constant {
    fn control(&self, _t: f64, _s: ReducedState) -> f64 {
        self.0
    }

    fn label(&self) -> String {
        format!("const({})", self.0)
    }
}

/// `u = −sign(sinθ1)`, the control with the largest cable tension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxTension;

impl ControlPolicy for MaxTension {
    fn control(&self, _t: f64, s: ReducedState) -> f64 {
        let sn = s.theta1.sin();
        if sn > 0.0 {
            -1.0
        } else if sn < 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn label(&self) -> String {
        "max-tension".to_string()
    }
}

/// `u = clamp(gain θ2 cosθ1)`, pumping or draining swing energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyFeedback {
    pub gain: f64,
}

impl ControlPolicy for EnergyFeedback {
    fn control(&self, _t: f64, s: ReducedState) -> f64 {
        (self.gain * s.theta2 * s.theta1.cos()).clamp(-1.0, 1.0)
    }

    fn label(&self) -> String {
        format!("energy({})", self.gain)
    }
}

/// Replays the recorded control of a barrier arc forwards from sample
/// `start`; `t = 0` corresponds to that sample. Constrained segments follow
/// the recorded control in time rather than the state feedback.
#[derive(Debug, Clone)]
pub struct ArcReplay {
    params: PendulumParams,
    /// Forward start time, branch, and recorded controls at both ends.
    pieces: Vec<(f64, f64, Branch, f64, f64)>,
    label: String,
}

impl ArcReplay {
    pub fn new(p: &PendulumParams, arc: &BarrierArc, start: usize) -> Self {
        let t0 = arc.samples[start].t;
        let regular: Vec<_> = arc.samples[..=start].iter().filter(|s| !s.singular).collect();
        let mut pieces = Vec::new();
        for i in (1..regular.len()).rev() {
            let (late, early) = (regular[i - 1], regular[i]);
            let b = Branch::from_sample(late);
            pieces.push((early.t - t0, late.t - t0, b, b.control(p, early.state), b.control(p, late.state)));
        }
        Self { params: *p, pieces, label: format!("replay({}@{start})", arc.label()) }
    }

    /// Forward time at which the replayed arc ends.
    pub fn duration(&self) -> f64 {
        self.pieces.last().map_or(0.0, |pc| pc.1)
    }
}

impl ControlPolicy for ArcReplay {
    fn control(&self, t: f64, s: ReducedState) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        let i = self.pieces.partition_point(|pc| pc.0 <= t).saturating_sub(1);
        let (a, b, br, u0, u1) = self.pieces[i];
        if br.constrained {
            let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
            u0 + (u1 - u0) * w
        } else {
            br.control(&self.params, s)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|pc| pc.0).collect()
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub tol: Tolerance,
    pub h_max: f64,
    /// Record the trajectory at this many points per step (0: do not record).
    pub record_per_step: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { tol: Tolerance { abs: 1e-9, rel: 1e-8 }, h_max: 0.05, record_per_step: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub final_time: f64,
    pub final_state: ReducedState,
    /// First detected time with `U(θ)` empty.
    pub violation_time: Option<f64>,
    pub trajectory: Vec<(f64, ReducedState)>,
}

impl SimulationResult {
    pub fn survived(&self) -> bool {
        self.violation_time.is_none()
    }
}

/// Integrates `θ̇ = f(θ, clip(u))` forwards from `s0` until `t_max` or the
/// first time the admissible control set is empty.
pub fn forward_simulate(
    p: &PendulumParams,
    s0: ReducedState,
    policy: &dyn ControlPolicy,
    t_max: f64,
    opts: &SimulationOptions,
) -> Result<SimulationResult> {
    let mut trajectory = Vec::new();
    if opts.record_per_step > 0 {
        trajectory.push((0.0, s0));
    }
    if control_set(p, s0).is_empty() {
        return Ok(SimulationResult { final_time: 0.0, final_state: s0, violation_time: Some(0.0), trajectory });
    }
    let mut stops: Vec<f64> = policy.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t_max).collect();
    stops.sort_by(f64::total_cmp);
    stops.push(t_max);

    let mut t = 0.0;
    let mut y = [s0.theta1, s0.theta2];
    let mut h = f64::NAN;
    for stop in stops {
        // evaluate the policy strictly inside each piece
        let piece_mid = |tt: f64| if tt >= stop { stop - 1e-12 } else { tt };
        let f = |tt: f64, y: &[f64; 2]| {
            let s = ReducedState::new(y[0], y[1]);
            let u = policy.control(piece_mid(tt), s);
            let set = control_set(p, s);
            let u = set.clamp(u).unwrap_or(u);
            dynamics(p, s, u)
        };
        let mut fy = f(t, &y);
        if h.is_nan() {
            h = initial_step(&y, &fy, opts.tol, opts.h_max);
        }
        while t < stop {
            h = h.min(stop - t).min(opts.h_max);
            let step = dopri5_step(&f, t, &y, &fy, h, opts.tol);
            if !step.accepted() {
                h *= next_step_factor(step.error).min(0.9);
                if h < 1e-14 * t.max(1.0) {
                    return Err(crate::BarrierError::StepFailure { t, step: h });
                }
                continue;
            }
            let probes = opts.record_per_step.max(4);
            for j in 1..=probes {
                let th = j as f64 / probes as f64;
                let x = step.interpolate(th);
                let s = ReducedState::new(x[0], x[1]);
                let tt = step.t0 + th * step.h;
                if opts.record_per_step > 0 {
                    trajectory.push((tt, s));
                }
                if control_set(p, s).is_empty() {
                    return Ok(SimulationResult { final_time: tt, final_state: s, violation_time: Some(tt), trajectory });
                }
            }
            t = if step.t1() >= stop { stop } else { step.t1() };
            y = step.y1;
            fy = step.f1;
            h *= next_step_factor(step.error);
        }
    }
    Ok(SimulationResult { final_time: t, final_state: ReducedState::new(y[0], y[1]), violation_time: None, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bang_bang_switches() {
        let b = BangBang { initial: 1.0, switches: vec![0.5, 1.0] };
        let s = ReducedState::new(0.0, 0.0);
        assert_eq!(b.control(0.0, s), 1.0);
        assert_eq!(b.control(0.7, s), -1.0);
        assert_eq!(b.control(1.5, s), 1.0);
    }

    #[test]
    fn hanging_rest_survives() {
        let p = PendulumParams::light_cart();
        let r = forward_simulate(&p, ReducedState::new(std::f64::consts::PI, 0.0), &Constant(0.0), 10.0, &Default::default()).unwrap();
        assert!(r.survived());
        assert!((r.final_state.theta1 - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn upright_rest_violates_at_once() {
        let p = PendulumParams::light_cart();
        let r = forward_simulate(&p, ReducedState::new(0.0, 0.0), &Constant(0.0), 10.0, &Default::default()).unwrap();
        assert_eq!(r.violation_time, Some(0.0));
    }

    #[test]
    fn fast_spin_survives() {
        let p = PendulumParams::heavy_cart();
        let s0 = ReducedState::new(0.0, 2.0 * p.critical_speed());
        let r = forward_simulate(&p, s0, &Constant(0.0), 10.0, &Default::default()).unwrap();
        assert!(r.survived());
        assert!(r.final_state.theta1 > 10.0);
    }
}
