//! Pendulum on a cart with a non-rigid cable.
//!
//! The cable stays taut while its tension is nonnegative, which is equivalent
//! to the mixed state/control constraint
//!
//! ```text
//! h(θ, u) = u sinθ1 + M g cosθ1 − M l θ2² ≤ 0,   |u| ≤ 1.
//! ```
//!
//! Only the angular subsystem `(θ1, θ2)` enters the barrier construction; the
//! cart coordinates are kept for I/O and forward simulation.

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Result};

/// Physical constants of one pendulum instance (SI units, `|u| ≤ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Cart mass `M` (kg).
    #[serde(rename = "M")]
    pub cart_mass: f64,
    /// Pendulum mass `m` (kg).
    #[serde(rename = "m")]
    pub bob_mass: f64,
    /// Cable length `l` (m).
    #[serde(rename = "l")]
    pub length: f64,
    /// Gravitational acceleration `g` (m/s²).
    #[serde(rename = "g")]
    pub gravity: f64,
}

impl PendulumParams {
    pub fn new(cart_mass: f64, bob_mass: f64, length: f64, gravity: f64) -> Result<Self> {
        let p = Self { cart_mass, bob_mass, length, gravity };
        p.validate()?;
        Ok(p)
    }

    /// Heavy cart (`M = 0.5`): the admissible set splits into disjoint parts.
    pub fn heavy_cart() -> Self {
        Self { cart_mass: 0.5, bob_mass: 0.1, length: 1.0, gravity: 10.0 }
    }

    /// Light cart (`M = 0.1`): barrier arcs intersect at stopping points.
    pub fn light_cart() -> Self {
        Self { cart_mass: 0.1, bob_mass: 0.1, length: 1.0, gravity: 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("M", self.cart_mass),
            ("m", self.bob_mass),
            ("l", self.length),
            ("g", self.gravity),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(BarrierError::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `M g`, the constant that fixes the smooth tangency angles.
    #[inline]
    pub fn mg(&self) -> f64 {
        self.cart_mass * self.gravity
    }

    /// `√(g/l)`, the angular speed of the non-smooth tangency points.
    #[inline]
    pub fn critical_speed(&self) -> f64 {
        (self.gravity / self.length).sqrt()
    }

    /// `l (M + m sin²θ1)`, strictly positive.
    #[inline]
    fn inertia(&self, sin1: f64) -> f64 {
        self.length * (self.cart_mass + self.bob_mass * sin1 * sin1)
    }

    /// Scale-aware tolerance deciding whether the mixed constraint is active.
    #[inline]
    pub fn activation_tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.mg())
    }

    /// Tolerance under which `g̃` is treated as zero when building control sets.
    #[inline]
    pub(crate) fn envelope_tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.mg())
    }
}

/// Phase point `(θ1, θ2)` of the angular subsystem. `θ1` is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub theta1: f64,
    pub theta2: f64,
}

impl ReducedState {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite()
    }

    /// Point reflection `θ → −θ`, which maps trajectories under `u` to
    /// trajectories under `−u`.
    pub fn mirrored(&self) -> Self {
        Self::new(-self.theta1, -self.theta2)
    }

    pub fn shifted(&self, dtheta1: f64) -> Self {
        Self::new(self.theta1 + dtheta1, self.theta2)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.theta1 - other.theta1).hypot(self.theta2 - other.theta2)
    }
}

/// Full state `(θ1, θ2, x1, x2)` including the cart.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub theta1: f64,
    pub theta2: f64,
    pub x1: f64,
    pub x2: f64,
}

impl FullState {
    pub fn reduced(&self) -> ReducedState {
        ReducedState::new(self.theta1, self.theta2)
    }

    pub fn from_reduced(s: ReducedState, x1: f64, x2: f64) -> Self {
        Self { theta1: s.theta1, theta2: s.theta2, x1, x2 }
    }
}

/// Costate `(λ1, λ2)`; the cart components vanish identically on barriers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Adjoint {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Adjoint {
    pub const fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn norm(&self) -> f64 {
        self.lambda1.hypot(self.lambda2)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(k * self.lambda1, k * self.lambda2)
    }

    pub fn dot(&self, v: [f64; 2]) -> f64 {
        self.lambda1 * v[0] + self.lambda2 * v[1]
    }
}

/// State-dependent control set `U(θ) = {u ∈ [−1, 1] : h(θ, u) ≤ 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInterval {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl ControlInterval {
    pub const FULL: Self = Self { lo: -1.0, hi: 1.0, empty: false };
    pub const EMPTY: Self = Self { lo: f64::NAN, hi: f64::NAN, empty: true };

    pub fn point(u: f64) -> Self {
        Self { lo: u, hi: u, empty: false }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_degenerate(&self) -> bool {
        !self.empty && self.lo == self.hi
    }

    pub fn contains(&self, u: f64, tol: f64) -> bool {
        !self.empty && u >= self.lo - tol && u <= self.hi + tol
    }

    /// Projects `u` onto the interval. Returns `None` when empty.
    pub fn clamp(&self, u: f64) -> Option<f64> {
        (!self.empty).then(|| u.clamp(self.lo, self.hi))
    }
}

/// Sign of the bang control a branch pushes towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn from_sign(x: f64) -> Option<Self> {
        if x > 0.0 {
            Some(Direction::Plus)
        } else if x < 0.0 {
            Some(Direction::Minus)
        } else {
            None
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }
}

/// Which branch of the Hamiltonian-minimising law produced a control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlMode {
    BangPlus,
    BangMinus,
    /// Mixed constraint active, `u = (M l θ2² − M g cosθ1)/sinθ1`.
    Constrained,
    /// `λ2 cosθ1 = 0`; every admissible control gives the same Hamiltonian.
    Tie,
}

impl ControlMode {
    pub fn label(self) -> &'static str {
        match self {
            ControlMode::BangPlus => "bang+",
            ControlMode::BangMinus => "bang-",
            ControlMode::Constrained => "constrained",
            ControlMode::Tie => "tie",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bang+" => Some(ControlMode::BangPlus),
            "bang-" => Some(ControlMode::BangMinus),
            "constrained" => Some(ControlMode::Constrained),
            "tie" => Some(ControlMode::Tie),
            _ => None,
        }
    }
}

/// Right-hand side of the angular dynamics.
pub fn dynamics(p: &PendulumParams, s: ReducedState, u: f64) -> [f64; 2] {
    let (sin1, cos1) = s.theta1.sin_cos();
    [s.theta2, angular_acceleration(p, sin1, cos1, s.theta2, u)]
}

#[inline]
fn angular_acceleration(p: &PendulumParams, sin1: f64, cos1: f64, theta2: f64, u: f64) -> f64 {
    let (big_m, m, l, g) = (p.cart_mass, p.bob_mass, p.length, p.gravity);
    let num = -u * cos1 + (big_m + m) * g * sin1 - m * l * theta2 * theta2 * cos1 * sin1;
    num / p.inertia(sin1)
}

/// Full four-dimensional dynamics including the cart.
pub fn full_dynamics(p: &PendulumParams, q: FullState, u: f64) -> [f64; 4] {
    let (sin1, cos1) = q.theta1.sin_cos();
    let (m, l, g) = (p.bob_mass, p.length, p.gravity);
    let cart_acc = (u + m * l * q.theta2 * q.theta2 * sin1 - m * g * cos1 * sin1)
        / (p.cart_mass + m * sin1 * sin1);
    [q.theta2, angular_acceleration(p, sin1, cos1, q.theta2, u), q.x2, cart_acc]
}

/// Jacobian `∂f/∂θ` at fixed `u`, row-major.
pub fn dynamics_jacobian(p: &PendulumParams, s: ReducedState, u: f64) -> [[f64; 2]; 2] {
    let (big_m, m, l, g) = (p.cart_mass, p.bob_mass, p.length, p.gravity);
    let (sin1, cos1) = s.theta1.sin_cos();
    let w2 = s.theta2 * s.theta2;
    let num = -u * cos1 + (big_m + m) * g * sin1 - m * l * w2 * cos1 * sin1;
    let den = p.inertia(sin1);
    let dnum = u * sin1 + (big_m + m) * g * cos1 - m * l * w2 * (cos1 * cos1 - sin1 * sin1);
    let dden = 2.0 * l * m * sin1 * cos1;
    let d_theta1 = (dnum * den - num * dden) / (den * den);
    let d_theta2 = -2.0 * m * l * s.theta2 * cos1 * sin1 / den;
    [[0.0, 1.0], [d_theta1, d_theta2]]
}

/// Mixed constraint `h(θ, u)`; the cable is taut iff `h ≤ 0`.
pub fn mixed_constraint(p: &PendulumParams, s: ReducedState, u: f64) -> f64 {
    let (sin1, cos1) = s.theta1.sin_cos();
    u * sin1 + p.mg() * cos1 - p.cart_mass * p.length * s.theta2 * s.theta2
}

/// `∂h/∂θ` at fixed `u`.
pub fn mixed_constraint_gradient(p: &PendulumParams, s: ReducedState, u: f64) -> [f64; 2] {
    let (sin1, cos1) = s.theta1.sin_cos();
    [u * cos1 - p.mg() * sin1, -2.0 * p.cart_mass * p.length * s.theta2]
}

/// Constraint envelope `g̃(θ) = min_{|u|≤1} h(θ, u)`. `G0 = {g̃ = 0}`.
pub fn g_tilde(p: &PendulumParams, s: ReducedState) -> f64 {
    let (sin1, cos1) = s.theta1.sin_cos();
    -sin1.abs() + p.mg() * cos1 - p.cart_mass * p.length * s.theta2 * s.theta2
}

/// Gradient of the smooth branch of `g̃` on the side where `sign(sinθ1) = side`.
///
/// Away from `sinθ1 = 0` this is the gradient of `g̃` itself; at the kinks it
/// gives the one-sided limit.
pub fn g_tilde_branch_gradient(p: &PendulumParams, s: ReducedState, side: Direction) -> [f64; 2] {
    let (sin1, cos1) = s.theta1.sin_cos();
    [
        -side.sign() * cos1 - p.mg() * sin1,
        -2.0 * p.cart_mass * p.length * s.theta2,
    ]
}

/// Control value that makes the mixed constraint active,
/// `(M l θ2² − M g cosθ1)/sinθ1`. Infinite or NaN at `sinθ1 = 0`.
pub fn saturation_control(p: &PendulumParams, s: ReducedState) -> f64 {
    let (sin1, cos1) = s.theta1.sin_cos();
    (p.cart_mass * p.length * s.theta2 * s.theta2 - p.mg() * cos1) / sin1
}

/// `U(θ)`: three cases on the sign of `sinθ1`, empty outside `G`.
pub fn control_set(p: &PendulumParams, s: ReducedState) -> ControlInterval {
    if g_tilde(p, s) > p.envelope_tolerance() {
        return ControlInterval::EMPTY;
    }
    let sin1 = s.theta1.sin();
    if sin1 == 0.0 {
        return ControlInterval::FULL;
    }
    let bound = saturation_control(p, s);
    let (lo, hi) = if sin1 > 0.0 { (-1.0, bound.min(1.0)) } else { (bound.max(-1.0), 1.0) };
    if lo > hi {
        // only reachable within the envelope tolerance of G0
        let u = if sin1 > 0.0 { -1.0 } else { 1.0 };
        return ControlInterval::point(u);
    }
    ControlInterval { lo, hi, empty: false }
}

/// Cable tension, regular at `cosθ1 = 0`: `T = −m h / (M + m sin²θ1)`.
pub fn tension(p: &PendulumParams, s: ReducedState, u: f64) -> f64 {
    let sin1 = s.theta1.sin();
    -p.bob_mass * mixed_constraint(p, s, u) / (p.cart_mass + p.bob_mass * sin1 * sin1)
}

/// Tension from the vertical force balance on the bob,
/// `T = −m (z̈ + g)/cosθ1` with `z̈ = −l(θ2² cosθ1 + θ̇2 sinθ1)`.
/// Singular at `cosθ1 = 0`; used to cross-check [`tension`].
pub fn tension_from_force_balance(p: &PendulumParams, s: ReducedState, u: f64) -> f64 {
    let (sin1, cos1) = s.theta1.sin_cos();
    let acc = dynamics(p, s, u)[1];
    let z_dd = -p.length * (s.theta2 * s.theta2 * cos1 + acc * sin1);
    -p.bob_mass * (z_dd + p.gravity) / cos1
}

/// Hamiltonian `λᵀ f(θ, u)`.
pub fn hamiltonian(p: &PendulumParams, s: ReducedState, a: Adjoint, u: f64) -> f64 {
    a.dot(dynamics(p, s, u))
}

/// Result of minimising the Hamiltonian over `U(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMinimum {
    pub control: f64,
    pub value: f64,
    pub mode: ControlMode,
    /// Bang direction of the branch that fired (the previous one on ties).
    pub direction: Direction,
    /// True when the control sits on the mixed-constraint bound.
    pub saturated: bool,
}

/// Minimises `λᵀ f(θ, u)` over `U(θ)`.
///
/// `H` is affine in `u` with slope `−λ2 cosθ1 / (l(M + m sin²θ1))`, so the
/// minimum sits on the upper end of `U(θ)` when `λ2 cosθ1 > 0` and the lower
/// end when `λ2 cosθ1 < 0`. On a tie the branch of `previous` is kept; without
/// one the control closest to zero is returned.
pub fn minimize_hamiltonian(
    p: &PendulumParams,
    s: ReducedState,
    a: Adjoint,
    previous: Option<Direction>,
) -> Result<HamiltonianMinimum> {
    let g = g_tilde(p, s);
    if g > p.envelope_tolerance() {
        return Err(BarrierError::EmptyControlSet { theta1: s.theta1, theta2: s.theta2, g_tilde: g });
    }
    let switching = a.lambda2 * s.theta1.cos();
    let (control, mode, direction, saturated) = match Direction::from_sign(switching) {
        Some(dir) => {
            let (u, saturated) = extreme_control(p, s, dir);
            let mode = if saturated {
                ControlMode::Constrained
            } else if dir == Direction::Plus {
                ControlMode::BangPlus
            } else {
                ControlMode::BangMinus
            };
            (u, mode, dir, saturated)
        }
        None => match previous {
            Some(dir) => {
                let (u, saturated) = extreme_control(p, s, dir);
                (u, ControlMode::Tie, dir, saturated)
            }
            None => {
                let set = control_set(p, s);
                let u = set.clamp(0.0).unwrap_or(0.0);
                (u, ControlMode::Tie, Direction::Plus, false)
            }
        },
    };
    Ok(HamiltonianMinimum { control, value: hamiltonian(p, s, a, control), mode, direction, saturated })
}

/// End of `U(θ)` in direction `dir`, and whether it is the constraint bound.
pub(crate) fn extreme_control(p: &PendulumParams, s: ReducedState, dir: Direction) -> (f64, bool) {
    let sin1 = s.theta1.sin();
    match dir {
        Direction::Plus if sin1 > 0.0 => {
            let v = saturation_control(p, s);
            if v < 1.0 { (v, true) } else { (1.0, false) }
        }
        Direction::Minus if sin1 < 0.0 => {
            let v = saturation_control(p, s);
            if v > -1.0 { (v, true) } else { (-1.0, false) }
        }
        _ => (dir.sign(), false),
    }
}

/// Multiplier of the mixed constraint, from `∂H/∂u + μ ∂h/∂u = 0` when the
/// constraint is active and zero otherwise.
pub fn multiplier(p: &PendulumParams, s: ReducedState, a: Adjoint, u: f64) -> Result<f64> {
    let h = mixed_constraint(p, s, u);
    if h.abs() > p.activation_tolerance() {
        return Ok(0.0);
    }
    let (sin1, cos1) = s.theta1.sin_cos();
    if sin1 == 0.0 {
        return Err(BarrierError::SingularMultiplier { theta1: s.theta1 });
    }
    let mu = active_multiplier(p, sin1, cos1, a.lambda2);
    if mu < 0.0 {
        log::warn!("negative multiplier {mu:.3e} at ({}, {})", s.theta1, s.theta2);
    }
    Ok(mu)
}

#[inline]
pub(crate) fn active_multiplier(p: &PendulumParams, sin1: f64, cos1: f64, lambda2: f64) -> f64 {
    lambda2 * cos1 / (sin1 * p.inertia(sin1))
}

/// Minimal interface for a two-dimensional system with one mixed constraint
/// affine in a scalar control bounded by `|u| ≤ 1`.
pub trait ConstrainedSystem: Sync {
    fn rhs(&self, s: ReducedState, u: f64) -> [f64; 2];
    fn constraint(&self, s: ReducedState, u: f64) -> f64;
    fn envelope(&self, s: ReducedState) -> f64;
    fn admissible_controls(&self, s: ReducedState) -> ControlInterval;
}

impl ConstrainedSystem for PendulumParams {
    fn rhs(&self, s: ReducedState, u: f64) -> [f64; 2] {
        dynamics(self, s, u)
    }

    fn constraint(&self, s: ReducedState, u: f64) -> f64 {
        mixed_constraint(self, s, u)
    }

    fn envelope(&self, s: ReducedState) -> f64 {
        g_tilde(self, s)
    }

    fn admissible_controls(&self, s: ReducedState) -> ControlInterval {
        control_set(self, s)
    }
}
