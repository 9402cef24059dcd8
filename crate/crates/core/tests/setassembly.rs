#![allow(clippy::approx_constant)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use cablebarrier::setassembly::oracle::{oracle_policies, surviving_policy, OracleConfig};
use cablebarrier::setassembly::simulate::{forward_simulate, ArcReplay, Constant, SimulationOptions};
use cablebarrier::setassembly::{assemble, check_stitching, g0_segments, CurveKind};
use cablebarrier::{
    pipeline, AdmissibleSetModel, BarrierError, Construction, MembershipTag, PendulumParams, ReducedState, Resolution,
    RunConfig, Termination,
};

fn heavy() -> &'static Construction {
    static C: OnceLock<Construction> = OnceLock::new();
    C.get_or_init(|| pipeline::run(&RunConfig { params: PendulumParams::heavy_cart(), ..Default::default() }).unwrap())
}

fn light() -> &'static Construction {
    static C: OnceLock<Construction> = OnceLock::new();
    C.get_or_init(|| pipeline::run(&RunConfig { params: PendulumParams::light_cart(), ..Default::default() }).unwrap())
}

#[test]
fn query_examples() {
    let m = &light().model;
    assert_eq!(m.membership(ReducedState::new(0.0, 0.0)).unwrap().tag, MembershipTag::OutsideG);
    assert_eq!(m.membership(ReducedState::new(3.14159, 0.0)).unwrap().tag, MembershipTag::Interior);
    let arc = &light().arcs[0];
    for s in arc.samples.iter().step_by(37) {
        let v = m.membership(s.state).unwrap();
        assert_eq!(v.tag, MembershipTag::Boundary, "{:?} {v:?}", s.state);
    }
    match m.membership(ReducedState::new(0.0, 100.0)) {
        Err(BarrierError::WindowExceeded { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn pockets_beside_the_lens_are_inadmissible() {
    let m = &light().model;
    // between the smooth arc, the non-smooth arc and the lens
    assert_eq!(m.membership(ReducedState::new(-1.0, 3.0)).unwrap().tag, MembershipTag::Inadmissible);
    assert_eq!(m.membership(ReducedState::new(1.0, -3.0)).unwrap().tag, MembershipTag::Inadmissible);
    let h = &heavy().model;
    assert_eq!(h.membership(ReducedState::new(-2.0, 5.0)).unwrap().tag, MembershipTag::Inadmissible);
    assert_eq!(h.membership(ReducedState::new(PI - 1e-3, 0.0)).unwrap().tag, MembershipTag::Interior);
}

#[test]
fn heavy_cart_components() {
    let m = &heavy().model;
    assert_eq!(m.components.len(), 3);
    assert_eq!(m.bounded_components(), 1);
    let hanging = m.component_of(ReducedState::new(PI - 0.01, 0.0)).unwrap();
    assert!(m.components[hanging].bounded);
    let spin_up = m.component_of(ReducedState::new(0.0, 8.0)).unwrap();
    let spin_down = m.component_of(ReducedState::new(0.0, -8.0)).unwrap();
    assert!(!m.components[spin_up].bounded && !m.components[spin_down].bounded);
    assert_ne!(spin_up, spin_down);
}

#[test]
fn no_policy_leaves_the_bounded_component_for_another() {
    let m = &heavy().model;
    let p = heavy().config.params;
    let bounded = m.components.iter().position(|c| c.bounded).unwrap();
    let opts = SimulationOptions { record_per_step: 4, ..Default::default() };
    for s0 in [(PI, 0.0), (PI - 0.8, 1.0), (-PI + 0.5, -1.5), (2.0, 2.0)] {
        let s0 = ReducedState::new(s0.0, s0.1);
        assert_eq!(m.component_of(s0), Some(bounded), "{s0:?}");
        for pol in oracle_policies(&OracleConfig::default()) {
            let r = forward_simulate(&p, s0, pol.as_ref(), 10.0, &opts).unwrap();
            for (t, s) in r.trajectory {
                if let Some(c) = m.component_of(s) {
                    assert_eq!(c, bounded, "{} reached component {c} at t={t} {s:?}", pol.label());
                }
            }
        }
    }
}

#[test]
fn json_round_trip_rebuilds_the_same_model() {
    for c in [heavy(), light()] {
        let json = c.model.to_json();
        let back = AdmissibleSetModel::from_json(&json).unwrap();
        assert_eq!(back.to_document(), c.model.to_document());
        assert_eq!(back.to_json(), json);
        for k in 0..200 {
            let s = ReducedState::new(-PI + 0.0314 * k as f64, -8.0 + 0.08 * k as f64);
            assert_eq!(back.membership(s).unwrap(), c.model.membership(s).unwrap());
        }
    }
}

#[test]
fn json_document_shape() {
    let v: serde_json::Value = serde_json::from_str(&light().model.to_json()).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["params"]["M"], 0.1);
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.iter().filter(|c| c["kind"] == "G0").count(), 4);
    assert_eq!(curves.iter().filter(|c| c["kind"] == "Barrier").count(), 4);
    assert!(curves[0]["points"][0].as_array().unwrap().len() == 2);
    assert!(v["components"][0]["bounded"].is_boolean());
    assert!(AdmissibleSetModel::from_json("{\"version\": 99}").is_err());
}

#[test]
fn boundary_curves_include_g0_pieces() {
    let m = &heavy().model;
    let g0: Vec<_> = m.curves.iter().filter(|c| c.kind == CurveKind::G0).collect();
    assert_eq!(g0, g0_segments(&m.params, 400).iter().collect::<Vec<_>>());
    assert_eq!(m.barrier_curves().count(), 4);
}

#[test]
fn stitch_gap_is_reported() {
    let c = light();
    let mut arcs = c.arcs.clone();
    let k = arcs.iter().position(|a| a.termination == Termination::StoppedAtIntersection).unwrap();
    arcs[k].samples.last_mut().unwrap().state.theta2 += 1e-3;
    match check_stitching(&c.config.params, &arcs) {
        Err(BarrierError::StitchGap { gap, .. }) => assert!(gap > 5e-4),
        other => panic!("{other:?}"),
    }
    assert!(assemble(&c.config.params, &arcs, 9.0, Resolution { nx: 64, ny: 64 }).is_err());
}

#[test]
fn replayed_barrier_control_tracks_the_arc() {
    for c in [heavy(), light()] {
        let p = c.config.params;
        for arc in &c.arcs {
            let start = arc.len() - 1;
            let pol = ArcReplay::new(&p, arc, start);
            let opts = SimulationOptions { tol: cablebarrier::Tolerance { abs: 1e-12, rel: 1e-12 }, ..Default::default() };
            for idx in (1..arc.len()).step_by(arc.len() / 10) {
                let s = &arc.samples[idx];
                let dt = s.t - arc.samples[start].t;
                if dt <= 0.0 {
                    continue;
                }
                let r = forward_simulate(&p, arc.samples[start].state, &pol, dt, &opts).unwrap();
                let d = r.final_state.distance(&s.state);
                assert!(d < 1e-4, "{} at t={} off by {d}", arc.label(), s.t);
            }
        }
    }
}

#[test]
fn simulation_examples() {
    let p = PendulumParams::light_cart();
    let opts = SimulationOptions::default();
    assert!(forward_simulate(&p, ReducedState::new(PI, 0.0), &Constant(0.0), 10.0, &opts).unwrap().survived());
    let r = forward_simulate(&p, ReducedState::new(0.0, 1.0), &Constant(0.0), 10.0, &opts).unwrap();
    assert_eq!(r.violation_time, Some(0.0));
    let pols = oracle_policies(&OracleConfig::default());
    assert_eq!(surviving_policy(&p, ReducedState::new(0.1, 0.0), &pols, 10.0).unwrap(), None);
    assert!(surviving_policy(&p, ReducedState::new(PI, 0.5), &pols, 10.0).unwrap().is_some());
}

#[test]
fn degenerate_model_flags() {
    let p = PendulumParams::heavy_cart();
    let m = assemble(&p, &[], 9.0, Resolution { nx: 90, ny: 120 }).unwrap();
    assert!(m.degenerate);
    assert!(!heavy().model.degenerate);
}
