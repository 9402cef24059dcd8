//! Barrier end points on `G0`.
//!
//! Two families exist. At `(±arctan(Mg) + 2kπ, 0)` the envelope `g̃` is smooth
//! and the terminal adjoint is its gradient. At `(2kπ, ±√(g/l))` the term
//! `−|sinθ1|` has a kink; barrier arcs can only arrive there from one side and
//! the terminal adjoint is the one-sided gradient.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Result};
use crate::model::{
    dynamics, g_tilde, g_tilde_branch_gradient, Adjoint, ControlInterval, Direction, PendulumParams,
    ReducedState,
};

/// Tolerance on `g̃ = 0` for returned points.
pub const ON_G0_TOL: f64 = 1e-10;
/// Bound on the tangency residual.
pub const TANGENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointKind {
    Smooth,
    NonSmooth,
}

/// Side of `θ1 = 2kπ` a trajectory approaches a non-smooth point from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ApproachSide {
    /// `θ1 < 2kπ`.
    Below,
    /// `θ1 > 2kπ`.
    Above,
}

impl ApproachSide {
    fn sin_sign(self) -> Direction {
        match self {
            ApproachSide::Below => Direction::Minus,
            ApproachSide::Above => Direction::Plus,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ApproachSide::Below => ApproachSide::Above,
            ApproachSide::Above => ApproachSide::Below,
        }
    }
}

/// A terminal point of barrier arcs together with its terminal data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyPoint {
    pub state: ReducedState,
    pub kind: EndpointKind,
    pub final_adjoint: Adjoint,
    /// `U` at the point; for non-smooth points the one-sided limit.
    #[serde(with = "interval_serde")]
    pub final_control_set: ControlInterval,
    pub period_index: i32,
    pub approach_side: Option<ApproachSide>,
}

impl TangencyPoint {
    /// Short identifier such as `smooth-:0` or `nonsmooth+:-1`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            EndpointKind::Smooth => "smooth",
            EndpointKind::NonSmooth => "nonsmooth",
        };
        let sign = match self.kind {
            EndpointKind::Smooth => self.state.theta1 - TAU * self.period_index as f64,
            EndpointKind::NonSmooth => self.state.theta2,
        };
        format!("{kind}{}:{}", if sign >= 0.0 { '+' } else { '-' }, self.period_index)
    }

    /// The same point moved by `n` periods.
    pub fn translated(&self, n: i32) -> Self {
        Self {
            state: self.state.shifted(TAU * n as f64),
            period_index: self.period_index + n,
            ..*self
        }
    }
}

mod interval_serde {
    use super::ControlInterval;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        lo: Option<f64>,
        hi: Option<f64>,
    }

    pub fn serialize<S: Serializer>(v: &ControlInterval, s: S) -> Result<S::Ok, S::Error> {
        let r = if v.empty { Repr { lo: None, hi: None } } else { Repr { lo: Some(v.lo), hi: Some(v.hi) } };
        r.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ControlInterval, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(match (r.lo, r.hi) {
            (Some(lo), Some(hi)) => ControlInterval { lo, hi, empty: false },
            _ => ControlInterval::EMPTY,
        })
    }
}

/// Default period indices.
pub const DEFAULT_K_RANGE: [i32; 3] = [-1, 0, 1];

/// `(±arctan(Mg) + 2kπ, 0)` with the gradient of `g̃` as terminal adjoint.
pub fn smooth_endpoints(p: &PendulumParams, k_range: &[i32]) -> Vec<TangencyPoint> {
    let a = p.mg().atan();
    let mut out = Vec::with_capacity(2 * k_range.len());
    for &k in k_range {
        let shift = TAU * k as f64;
        for (theta, side, u) in [(-a, Direction::Minus, 1.0), (a, Direction::Plus, -1.0)] {
            let state = ReducedState::new(theta + shift, 0.0);
            let grad = g_tilde_branch_gradient(p, ReducedState::new(theta, 0.0), side);
            out.push(TangencyPoint {
                state,
                kind: EndpointKind::Smooth,
                final_adjoint: Adjoint::new(grad[0], grad[1]),
                final_control_set: ControlInterval::point(u),
                period_index: k,
                approach_side: None,
            });
        }
    }
    out
}

/// `(2kπ, ±√(g/l))` with one-sided terminal adjoints.
///
/// The upper point is approached from `θ1 < 2kπ`. The lower point is its image
/// under `(θ, u) → (−θ, −u)`, which maps barrier data `λ → −λ`; the mirrored
/// adjoint is checked against the one-sided tangency inequality before use.
pub fn nonsmooth_endpoints(p: &PendulumParams, k_range: &[i32]) -> Result<Vec<TangencyPoint>> {
    let w = p.critical_speed();
    let upper = ReducedState::new(0.0, w);
    let grad = g_tilde_branch_gradient(p, upper, Direction::Minus);
    let upper_adjoint = Adjoint::new(grad[0], grad[1]);
    let upper_set = one_sided_control_set(ApproachSide::Below);

    let mirror = TangencyPoint {
        state: upper.mirrored(),
        kind: EndpointKind::NonSmooth,
        final_adjoint: upper_adjoint.scaled(-1.0),
        final_control_set: mirror_interval(upper_set),
        period_index: 0,
        approach_side: Some(ApproachSide::Above),
    };
    let residual = verify_tangentiality(p, &mirror);
    if residual < -TANGENCY_TOL {
        return Err(BarrierError::SymmetryValidationFailed {
            theta1: mirror.state.theta1,
            theta2: mirror.state.theta2,
            residual,
        });
    }

    let base = [
        TangencyPoint {
            state: upper,
            kind: EndpointKind::NonSmooth,
            final_adjoint: upper_adjoint,
            final_control_set: upper_set,
            period_index: 0,
            approach_side: Some(ApproachSide::Below),
        },
        mirror,
    ];
    Ok(k_range.iter().flat_map(|&k| base.map(|tp| tp.translated(k))).collect())
}

/// All end points for `k_range`, smooth ones first.
pub fn all_endpoints(p: &PendulumParams, k_range: &[i32]) -> Result<Vec<TangencyPoint>> {
    let mut v = smooth_endpoints(p, k_range);
    v.extend(nonsmooth_endpoints(p, k_range)?);
    Ok(v)
}

fn mirror_interval(u: ControlInterval) -> ControlInterval {
    ControlInterval { lo: -u.hi, hi: -u.lo, empty: u.empty }
}

/// Limit of `U` at a non-smooth point along the arc that reaches it.
///
/// That arc has `h = 0` and its saturation value tends to `0`, giving
/// `[0, 1]` from below and `[−1, 0]` from above.
pub fn one_sided_control_set(side: ApproachSide) -> ControlInterval {
    match side {
        ApproachSide::Below => ControlInterval { lo: 0.0, hi: 1.0, empty: false },
        ApproachSide::Above => ControlInterval { lo: -1.0, hi: 0.0, empty: false },
    }
}

/// `min_{u ∈ U} λ · f(θ, u)`; affine in `u`, so the minimum is at an end.
fn min_directional(p: &PendulumParams, s: ReducedState, grad: [f64; 2], set: ControlInterval) -> f64 {
    let eval = |u: f64| {
        let f = dynamics(p, s, u);
        grad[0] * f[0] + grad[1] * f[1]
    };
    eval(set.lo).min(eval(set.hi))
}

/// Tangency residual of an end point.
///
/// Smooth points return `|min_{u ∈ U} Dg̃ · f|`, which must be `≤ 1e-8`.
/// Non-smooth points return the signed one-sided minimum, which must be
/// `≥ −1e-8`.
pub fn verify_tangentiality(p: &PendulumParams, tp: &TangencyPoint) -> f64 {
    let grad = [tp.final_adjoint.lambda1, tp.final_adjoint.lambda2];
    let v = min_directional(p, tp.state, grad, tp.final_control_set);
    match tp.kind {
        EndpointKind::Smooth => v.abs(),
        EndpointKind::NonSmooth => v,
    }
}

/// Whether the residual of `tp` passes its test.
pub fn tangentiality_holds(p: &PendulumParams, tp: &TangencyPoint) -> bool {
    let r = verify_tangentiality(p, tp);
    match tp.kind {
        EndpointKind::Smooth => r <= TANGENCY_TOL,
        EndpointKind::NonSmooth => r >= -TANGENCY_TOL,
    }
}

/// One-sided tangency value at a non-smooth point for an arbitrary approach
/// side, using that side's gradient and control-set limit.
pub fn nonsmooth_condition(p: &PendulumParams, state: ReducedState, side: ApproachSide) -> f64 {
    let grad = g_tilde_branch_gradient(p, state, side.sin_sign());
    min_directional(p, state, grad, one_sided_control_set(side))
}

/// Outcome of the scan for extra smooth end points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousRootReport {
    pub interval: (f64, f64),
    pub grid_step: f64,
    pub samples: usize,
    pub min_residual: f64,
    pub max_residual: f64,
    pub factored_root: f64,
    pub log: String,
}

/// Tangency residual along `G0` for `θ1 ∈ [−arctan(Mg), 0)` with `θ2 ≠ 0`
/// divided out and `θ2²` eliminated through `g̃ = 0` on the `sinθ1 < 0`
/// branch, i.e. `M l θ2² = M g cosθ1 + sinθ1`.
pub fn smooth_tangency_residual(p: &PendulumParams, theta1: f64) -> f64 {
    let (big_m, m, l, g) = (p.cart_mass, p.bob_mass, p.length, p.gravity);
    let (s, c) = theta1.sin_cos();
    let w2 = (big_m * g * c + s) / (big_m * l);
    (c - big_m * g * s) + 2.0 * big_m * (c - (big_m + m) * g * s + m * l * w2 * c * s) / (big_m + m * s * s)
}

/// Scans [`smooth_tangency_residual`] on a `1e-4` grid and fails on any sign
/// change or zero inside the interval.
pub fn reject_spurious_roots(p: &PendulumParams) -> Result<SpuriousRootReport> {
    const STEP: f64 = 1e-4;
    let a = p.mg().atan();
    let factored_root = (1.0 / p.mg()).atan();
    let n = (a / STEP).ceil() as usize;
    let mut min_r = f64::INFINITY;
    let mut max_r = f64::NEG_INFINITY;
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let theta = -a + i as f64 * STEP;
        if theta >= 0.0 {
            break;
        }
        let r = smooth_tangency_residual(p, theta);
        min_r = min_r.min(r);
        max_r = max_r.max(r);
        if r == 0.0 || prev.is_some_and(|q| q.signum() != r.signum()) {
            return Err(BarrierError::SpuriousRootFound { theta1: theta });
        }
        prev = Some(r);
    }
    let mut log = String::new();
    let _ = writeln!(log, "scan theta1 in [{:.9}, 0) step {STEP:e}: {n} samples", -a);
    let _ = writeln!(log, "residual range [{min_r:.6e}, {max_r:.6e}], no sign change");
    let _ = writeln!(log, "factored root arctan(1/(M g)) = {factored_root:.9} lies outside the interval");
    Ok(SpuriousRootReport {
        interval: (-a, 0.0),
        grid_step: STEP,
        samples: n,
        min_residual: min_r,
        max_residual: max_r,
        factored_root,
        log,
    })
}

/// Checks the point invariants of an end point: on `G0` and tangent.
pub fn validate_endpoint(p: &PendulumParams, tp: &TangencyPoint) -> bool {
    g_tilde(p, tp.state).abs() <= ON_G0_TOL && tangentiality_holds(p, tp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn smooth_points_light_cart() {
        let p = PendulumParams::light_cart();
        let pts = smooth_endpoints(&p, &[0]);
        assert_eq!(pts.len(), 2);
        assert_relative_eq!(pts[0].state.theta1, -FRAC_PI_4, epsilon = 1e-15);
        assert_relative_eq!(pts[1].state.theta1, FRAC_PI_4, epsilon = 1e-15);
        assert!(pts.iter().all(|t| t.state.theta2 == 0.0 && t.final_adjoint.lambda2 == 0.0));
        assert_relative_eq!(pts[0].final_adjoint.lambda1, SQRT_2, epsilon = 1e-12);
        assert_eq!(pts[0].final_control_set, ControlInterval::point(1.0));
        assert_eq!(pts[1].final_control_set, ControlInterval::point(-1.0));
        for t in &pts {
            assert!(validate_endpoint(&p, t));
            assert!(verify_tangentiality(&p, t) <= 1e-10);
        }
    }

    #[test]
    fn smooth_points_heavy_cart() {
        let p = PendulumParams::heavy_cart();
        let pts = smooth_endpoints(&p, &[0]);
        assert_relative_eq!(pts[1].state.theta1, 1.373401, epsilon = 1e-6);
        assert_relative_eq!(pts[0].state.theta1, -1.373401, epsilon = 1e-6);
    }

    #[test]
    fn nonsmooth_points_light_cart() {
        let p = PendulumParams::light_cart();
        let pts = nonsmooth_endpoints(&p, &[0]).unwrap();
        assert_eq!(pts.len(), 2);
        let up = pts[0];
        assert_relative_eq!(up.state.theta2, 3.162278, epsilon = 1e-6);
        assert_relative_eq!(up.final_adjoint.lambda1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(up.final_adjoint.lambda2, -0.632456, epsilon = 1e-6);
        assert!(g_tilde(&p, up.state).abs() < 1e-14);
        let down = pts[1];
        assert_relative_eq!(down.state.theta2, -3.162278, epsilon = 1e-6);
        assert_eq!(down.approach_side, Some(ApproachSide::Above));
        for t in &pts {
            assert!(validate_endpoint(&p, t));
        }
    }

    #[test]
    fn approach_from_the_other_side_is_rejected() {
        let p = PendulumParams::light_cart();
        let up = ReducedState::new(0.0, p.critical_speed());
        assert!(nonsmooth_condition(&p, up, ApproachSide::Below) >= 0.0);
        assert!(nonsmooth_condition(&p, up, ApproachSide::Above) < 0.0);
        let down = up.mirrored();
        assert!(nonsmooth_condition(&p, down, ApproachSide::Above) >= 0.0);
        assert!(nonsmooth_condition(&p, down, ApproachSide::Below) < 0.0);
    }

    #[test]
    fn one_sided_set_is_the_limit_of_u_along_the_approach() {
        let p = PendulumParams::light_cart();
        let w = p.critical_speed();
        for eps in [1e-3, 1e-5, 1e-7] {
            let below = crate::model::control_set(&p, ReducedState::new(-eps, w));
            assert!((below.lo - 0.0).abs() < 1e-2 && below.hi == 1.0, "{below:?}");
            let above = crate::model::control_set(&p, ReducedState::new(eps, -w));
            assert!(above.lo == -1.0 && above.hi.abs() < 1e-2);
        }
    }

    #[test]
    fn endpoints_are_periodic() {
        let p = PendulumParams::light_cart();
        let pts = all_endpoints(&p, &[0, 1]).unwrap();
        let (k0, k1): (Vec<&TangencyPoint>, Vec<&TangencyPoint>) = pts.iter().partition(|t| t.period_index == 0);
        for (a, b) in k0.iter().zip(&k1) {
            assert_relative_eq!(b.state.theta1 - a.state.theta1, TAU, epsilon = 1e-12);
            assert_eq!(a.state.theta2, b.state.theta2);
            assert_eq!(a.final_adjoint, b.final_adjoint);
        }
    }

    #[test]
    fn spurious_root_scan() {
        let p = PendulumParams::light_cart();
        let r = reject_spurious_roots(&p).unwrap();
        assert_relative_eq!(r.factored_root, FRAC_PI_4, epsilon = 1e-15);
        assert!(r.min_residual > 0.0);
        let p = PendulumParams::heavy_cart();
        let r = reject_spurious_roots(&p).unwrap();
        assert_relative_eq!(r.factored_root, 0.197396, epsilon = 1e-6);
    }

    #[test]
    fn residual_vanishes_at_the_factored_root() {
        for p in [PendulumParams::light_cart(), PendulumParams::heavy_cart()] {
            let r = smooth_tangency_residual(&p, (1.0 / p.mg()).atan() - TAU);
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn labels() {
        let p = PendulumParams::light_cart();
        let pts = all_endpoints(&p, &[-1]).unwrap();
        let labels: Vec<_> = pts.iter().map(|t| t.label()).collect();
        assert_eq!(labels, ["smooth-:-1", "smooth+:-1", "nonsmooth+:-1", "nonsmooth-:-1"]);
    }
}
