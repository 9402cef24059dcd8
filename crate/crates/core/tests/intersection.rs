use cablebarrier::integrator::{integrate_all, state_at, IntegratorOptions};
use cablebarrier::intersection::{find_stopping_points, segment_intersection, truncate_at_stopping_points, ON_ARC_TOL};
use cablebarrier::tangency::all_endpoints;
use cablebarrier::{BarrierArc, EndpointKind, PendulumParams, Termination, Tolerance};

fn arcs(p: &PendulumParams, opts: &IntegratorOptions) -> Vec<BarrierArc> {
    integrate_all(p, &all_endpoints(p, &[0]).unwrap(), opts).unwrap()
}

#[test]
fn heavy_cart_has_no_transversal_crossings() {
    let p = PendulumParams::heavy_cart();
    let a = arcs(&p, &IntegratorOptions::for_params(&p));
    let sps = find_stopping_points(&p, &a, 2);
    assert!(sps.iter().all(|s| !s.transversal), "{sps:?}");
    assert!(a.iter().all(|arc| arc.termination == Termination::ReachedG0Again));
}

#[test]
fn light_cart_smooth_and_nonsmooth_arcs_cross() {
    let p = PendulumParams::light_cart();
    let a = arcs(&p, &IntegratorOptions::for_params(&p));
    let sps: Vec<_> = find_stopping_points(&p, &a, 2).into_iter().filter(|s| s.transversal).collect();
    assert_eq!(sps.len(), 2);
    for sp in &sps {
        let kinds = [a[sp.arc_a].source.kind, a[sp.arc_b].source.kind];
        assert!(kinds.contains(&EndpointKind::Smooth) && kinds.contains(&EndpointKind::NonSmooth));
        assert!(sp.determinant > 1e-2);
        assert!((sp.location.theta1.abs() - 2.1497).abs() < 1e-3, "{:?}", sp.location);
        assert!((sp.location.theta2.abs() - 5.9041).abs() < 1e-3, "{:?}", sp.location);
        assert!(sp.location.theta1 * sp.location.theta2 < 0.0);
    }
}

#[test]
fn stopping_point_lies_on_both_arcs() {
    let p = PendulumParams::light_cart();
    let a = arcs(&p, &IntegratorOptions::for_params(&p));
    for sp in find_stopping_points(&p, &a, 2).into_iter().filter(|s| s.transversal) {
        let (xa, _) = state_at(&p, &a[sp.arc_a], sp.t_a).unwrap();
        let (xb, _) = state_at(&p, &a[sp.arc_b], sp.t_b).unwrap();
        let xb = xb.shifted(std::f64::consts::TAU * sp.shift_b as f64);
        assert!(xa.distance(&sp.location) < ON_ARC_TOL, "{xa:?} {:?}", sp.location);
        assert!(xb.distance(&sp.location) < ON_ARC_TOL, "{xb:?} {:?}", sp.location);
    }
}

#[test]
fn identical_arcs_do_not_cross() {
    let p = PendulumParams::light_cart();
    let a = arcs(&p, &IntegratorOptions::for_params(&p));
    let twin = vec![a[0].clone(), a[0].clone()];
    let sps = find_stopping_points(&p, &twin, 0);
    assert!(sps.iter().all(|s| !s.transversal), "{sps:?}");
}

#[test]
fn truncation_is_idempotent_and_ends_meet() {
    let p = PendulumParams::light_cart();
    let a = arcs(&p, &IntegratorOptions::for_params(&p));
    let sps = find_stopping_points(&p, &a, 2);
    let once = truncate_at_stopping_points(&p, &a, &sps);
    let stopped: Vec<_> = once.iter().filter(|x| x.termination == Termination::StoppedAtIntersection).collect();
    assert_eq!(stopped.len(), 4);
    for sp in sps.iter().filter(|s| s.transversal) {
        let ea = once[sp.arc_a].samples.last().unwrap().state;
        let eb = once[sp.arc_b].samples.last().unwrap().state.shifted(std::f64::consts::TAU * sp.shift_b as f64);
        assert!(ea.distance(&eb) < 1e-8, "{ea:?} {eb:?}");
    }
    let twice = truncate_at_stopping_points(&p, &once, &sps);
    assert_eq!(once, twice);
    // remaining hits are only the shared end points
    for sp in find_stopping_points(&p, &once, 2).into_iter().filter(|s| s.transversal) {
        let la = once[sp.arc_a].samples.last().unwrap().t;
        let lb = once[sp.arc_b].samples.last().unwrap().t;
        assert!((sp.t_a - la).abs() < 1e-8 && (sp.t_b - lb).abs() < 1e-8, "{sp:?}");
    }
}

#[test]
fn stopping_point_is_stable_under_tolerance_halving() {
    let p = PendulumParams::light_cart();
    let base = IntegratorOptions::for_params(&p);
    let mut fine = base;
    fine.tol = Tolerance { abs: base.tol.abs / 2.0, rel: base.tol.rel / 2.0 };
    let loc = |o: &IntegratorOptions| {
        let a = arcs(&p, o);
        let mut v: Vec<_> = find_stopping_points(&p, &a, 2).into_iter().filter(|s| s.transversal).map(|s| s.location).collect();
        v.sort_by(|x, y| x.theta1.total_cmp(&y.theta1));
        v
    };
    let (a, b) = (loc(&base), loc(&fine));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!(x.distance(y) < 1e-5, "{x:?} {y:?}");
    }
}

#[test]
fn segment_intersection_parameters() {
    let (s, t) = segment_intersection([0.0, 0.0], [2.0, 0.0], [1.0, -1.0], [1.0, 3.0]).unwrap();
    assert!((s - 0.5).abs() < 1e-15 && (t - 0.25).abs() < 1e-15);
    assert!(segment_intersection([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]).is_none());
    assert!(segment_intersection([0.0, 0.0], [1.0, 0.0], [2.0, -1.0], [2.0, 1.0]).is_none());
}
