//! Simulation-based cross-checks of an assembled model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::simulate::{forward_simulate, BangBang, Constant, ControlPolicy, EnergyFeedback, MaxTension, SimulationOptions};
use super::{AdmissibleSetModel, MembershipTag};
use crate::error::Result;
use crate::integrator::BarrierArc;
use crate::model::{PendulumParams, ReducedState};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grid points per axis over the period cell and the `θ2` window.
    pub grid: usize,
    pub t_max: f64,
    /// Disagreements closer than this many grid steps to the boundary are tolerated.
    pub band_steps: f64,
    /// Candidate switch times of the open-loop policies.
    pub switch_times: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid: 60, t_max: 10.0, band_steps: 2.0, switch_times: vec![0.1, 0.2, 0.4, 0.8, 1.6] }
    }
}

/// Feedback laws first, then bang-bang laws with at most two switches.
pub fn oracle_policies(cfg: &OracleConfig) -> Vec<Box<dyn ControlPolicy>> {
    let mut out: Vec<Box<dyn ControlPolicy>> = vec![
        Box::new(Constant(0.0)),
        Box::new(MaxTension),
        Box::new(EnergyFeedback { gain: 1.0 }),
        Box::new(EnergyFeedback { gain: -1.0 }),
        Box::new(EnergyFeedback { gain: 5.0 }),
        Box::new(EnergyFeedback { gain: -5.0 }),
    ];
    let ts = &cfg.switch_times;
    for initial in [1.0, -1.0] {
        out.push(Box::new(BangBang { initial, switches: vec![] }));
        for (i, &a) in ts.iter().enumerate() {
            out.push(Box::new(BangBang { initial, switches: vec![a] }));
            for &b in &ts[i + 1..] {
                out.push(Box::new(BangBang { initial, switches: vec![a, b] }));
            }
        }
    }
    out
}

/// Index of the first policy that keeps the cable taut for `t_max`.
pub fn surviving_policy(
    p: &PendulumParams,
    s: ReducedState,
    policies: &[Box<dyn ControlPolicy>],
    t_max: f64,
) -> Result<Option<usize>> {
    let opts = SimulationOptions::default();
    for (k, pol) in policies.iter().enumerate() {
        if forward_simulate(p, s, pol.as_ref(), t_max, &opts)?.survived() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub state: ReducedState,
    pub verdict: MembershipTag,
    pub distance: f64,
    pub oracle_admissible: bool,
    pub policy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub points: Vec<OraclePoint>,
    pub band: f64,
    /// Oracle-admissible points classified inadmissible outside the band.
    pub disagreements: Vec<OraclePoint>,
    /// Computed-admissible points where every sampled policy failed.
    pub unconfirmed: usize,
    pub agree: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compares the model against policy simulation on a uniform grid.
pub fn membership_oracle(p: &PendulumParams, model: &AdmissibleSetModel, cfg: &OracleConfig) -> Result<OracleReport> {
    let n = cfg.grid;
    let ymax = model.theta2_max;
    let d1 = TAU / n as f64;
    let d2 = 2.0 * ymax / n as f64;
    let band = cfg.band_steps * d1.max(d2);
    let policies = oracle_policies(cfg);
    let states: Vec<ReducedState> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            ReducedState::new(-PI + (i as f64 + 0.5) * d1, -ymax + (j as f64 + 0.5) * d2)
        })
        .collect();
    let points: Vec<OraclePoint> = states
        .par_iter()
        .map(|&s| {
            let v = model.membership(s)?;
            let k = surviving_policy(p, s, &policies, cfg.t_max)?;
            Ok(OraclePoint {
                state: s,
                verdict: v.tag,
                distance: v.distance_estimate,
                oracle_admissible: k.is_some(),
                policy: k.map(|k| policies[k].label()),
            })
        })
        .collect::<Result<_>>()?;
    let mut disagreements = Vec::new();
    let mut unconfirmed = 0;
    let mut agree = 0;
    for pt in &points {
        match (pt.oracle_admissible, pt.verdict.is_admissible()) {
            (true, false) if pt.distance > band => disagreements.push(pt.clone()),
            (false, true) => unconfirmed += 1,
            (a, b) if a == b => agree += 1,
            _ => {}
        }
    }
    Ok(OracleReport { points, band, disagreements, unconfirmed, agree })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiPermeabilityViolation {
    pub start: ReducedState,
    pub policy: String,
    pub time: f64,
    pub state: ReducedState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiPermeabilityReport {
    pub points: usize,
    pub trajectories: usize,
    pub violations: Vec<SemiPermeabilityViolation>,
}

impl SemiPermeabilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random open-loop and feedback policies drawn from `rng`.
pub fn random_policies(rng: &mut ChaCha8Rng, n: usize, horizon: f64) -> Vec<Box<dyn ControlPolicy>> {
    (0..n)
        .map(|k| -> Box<dyn ControlPolicy> {
            match k % 4 {
                0 | 1 => {
                    let nsw = rng.gen_range(0..=3);
                    let mut sw: Vec<f64> = (0..nsw).map(|_| rng.gen_range(0.0..horizon)).collect();
                    sw.sort_by(f64::total_cmp);
                    Box::new(BangBang { initial: if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, switches: sw })
                }
                2 => Box::new(Constant(rng.gen_range(-1.0..=1.0))),
                _ => Box::new(EnergyFeedback { gain: rng.gen_range(-5.0..5.0) }),
            }
        })
        .collect()
}

/// Starts trajectories `offset` outside barrier points, along the adjoint,
/// and reports any that reach the computed interior before the cable goes
/// slack.
pub fn semipermeability_check(
    p: &PendulumParams,
    model: &AdmissibleSetModel,
    arcs: &[BarrierArc],
    n_points: usize,
    n_policies: usize,
    offset: f64,
    t_max: f64,
    seed: u64,
) -> Result<SemiPermeabilityReport> {
    let starts = boundary_points(arcs, n_points, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(ReducedState, Vec<Box<dyn ControlPolicy>>)> =
        starts.iter().map(|&(s, n)| (ReducedState::new(s.theta1 + offset * n[0], s.theta2 + offset * n[1]), random_policies(&mut rng, n_policies, 3.0))).collect();
    let opts = SimulationOptions { record_per_step: 8, ..Default::default() };
    let violations: Vec<Vec<SemiPermeabilityViolation>> = jobs
        .par_iter()
        .map(|(s0, pols)| {
            let mut out = Vec::new();
            for pol in pols {
                let r = forward_simulate(p, *s0, pol.as_ref(), t_max, &opts)?;
                for &(t, s) in &r.trajectory {
                    match model.membership(s) {
                        Ok(v) if v.tag == MembershipTag::Interior => {
                            out.push(SemiPermeabilityViolation { start: *s0, policy: pol.label(), time: t, state: s });
                            break;
                        }
                        Ok(_) => {}
                        Err(_) => break,
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(SemiPermeabilityReport {
        points: starts.len(),
        trajectories: starts.len() * n_policies,
        violations: violations.into_iter().flatten().collect(),
    })
}

/// `n` regular barrier samples spread evenly by arc length, skipping `margin`
/// at both ends of every arc; each with its unit adjoint.
pub fn boundary_points(arcs: &[BarrierArc], n: usize, margin: f64) -> Vec<(ReducedState, [f64; 2])> {
    let mut pool = Vec::new();
    for arc in arcs {
        let regular: Vec<_> = arc.regular_samples().collect();
        let mut cum = vec![0.0];
        for w in regular.windows(2) {
            cum.push(cum.last().unwrap() + w[0].state.distance(&w[1].state));
        }
        let total = *cum.last().unwrap_or(&0.0);
        for (s, &c) in regular.iter().zip(&cum) {
            let an = s.adjoint.norm();
            if c >= margin && total - c >= margin && an > 0.0 {
                pool.push((s.state, [s.adjoint.lambda1 / an, s.adjoint.lambda2 / an]));
            }
        }
    }
    if pool.is_empty() || n == 0 {
        return Vec::new();
    }
    let n = n.min(pool.len());
    (0..n).map(|k| pool[(k * pool.len()) / n]).collect()
}
