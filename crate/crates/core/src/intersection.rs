//! Stopping points: transversal intersections of backward arcs.
//!
//! Once two barrier arcs cross, their prolongations further back in time run
//! through the interior of the admissible set and are discarded. Arcs are
//! compared with each other and with their own `2π` translates.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::integrator::{sample_at, state_at, vectogram_at, ArcEvent, BarrierArc, EventKind, Termination};
use crate::model::{PendulumParams, ReducedState};

/// Normalised-determinant threshold below which a crossing is tangential.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;
/// Maximum distance between the refined point and either arc.
pub const ON_ARC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingPoint {
    /// Location in the period of `arc_a`.
    pub location: ReducedState,
    pub arc_a: usize,
    pub arc_b: usize,
    /// `arc_b` is taken translated by `2π · shift_b`.
    pub shift_b: i32,
    pub t_a: f64,
    pub t_b: f64,
    pub transversal: bool,
    /// `|f_a × f_b| / (|f_a| |f_b|)` at the location.
    pub determinant: f64,
}

#[derive(Debug, Clone, Copy)]
struct BBox {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl BBox {
    fn of(points: &[ReducedState]) -> Self {
        let mut b = BBox { lo: [f64::INFINITY; 2], hi: [f64::NEG_INFINITY; 2] };
        for s in points {
            b.lo[0] = b.lo[0].min(s.theta1);
            b.lo[1] = b.lo[1].min(s.theta2);
            b.hi[0] = b.hi[0].max(s.theta1);
            b.hi[1] = b.hi[1].max(s.theta2);
        }
        b
    }

    fn shifted(&self, d: f64) -> Self {
        BBox { lo: [self.lo[0] + d, self.lo[1]], hi: [self.hi[0] + d, self.hi[1]] }
    }

    fn overlaps(&self, o: &BBox) -> bool {
        self.lo[0] <= o.hi[0] && o.lo[0] <= self.hi[0] && self.lo[1] <= o.hi[1] && o.lo[1] <= self.hi[1]
    }
}

const CHUNK: usize = 32;

struct Indexed<'a> {
    arc: &'a BarrierArc,
    pts: Vec<ReducedState>,
    chunks: Vec<(usize, BBox)>,
}

impl<'a> Indexed<'a> {
    fn new(arc: &'a BarrierArc) -> Self {
        let pts = arc.polyline();
        let mut chunks = Vec::new();
        let nseg = pts.len().saturating_sub(1);
        let mut i = 0;
        while i < nseg {
            let j = (i + CHUNK).min(nseg);
            chunks.push((i, BBox::of(&pts[i..=j])));
            i = j;
        }
        Self { arc, pts, chunks }
    }
}

/// Proper intersection of segments `[a0, a1]` and `[b0, b1]`, returning the
/// parameters along each, or `None` for disjoint or parallel segments.
pub fn segment_intersection(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> Option<(f64, f64)> {
    let r = [a1[0] - a0[0], a1[1] - a0[1]];
    let s = [b1[0] - b0[0], b1[1] - b0[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    let scale = r[0].hypot(r[1]) * s[0].hypot(s[1]);
    if scale == 0.0 || denom.abs() <= 1e-14 * scale {
        return None;
    }
    let q = [b0[0] - a0[0], b0[1] - a0[1]];
    let ta = (q[0] * s[1] - q[1] * s[0]) / denom;
    let tb = (q[0] * r[1] - q[1] * r[0]) / denom;
    ((0.0..=1.0).contains(&ta) && (0.0..=1.0).contains(&tb)).then_some((ta, tb))
}

/// Raw polyline crossings of `a` with `b` translated by `shift`, as sample
/// times on each arc.
fn polyline_hits(a: &Indexed, b: &Indexed, shift: f64, same: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(ia, ref ba) in &a.chunks {
        for &(ib, ref bb) in &b.chunks {
            if !ba.overlaps(&bb.shifted(shift)) {
                continue;
            }
            let ea = (ia + CHUNK).min(a.pts.len() - 1);
            let eb = (ib + CHUNK).min(b.pts.len() - 1);
            for i in ia..ea {
                for j in ib..eb {
                    if same && i.abs_diff(j) <= 1 {
                        continue;
                    }
                    let p0 = [a.pts[i].theta1, a.pts[i].theta2];
                    let p1 = [a.pts[i + 1].theta1, a.pts[i + 1].theta2];
                    let q0 = [b.pts[j].theta1 + shift, b.pts[j].theta2];
                    let q1 = [b.pts[j + 1].theta1 + shift, b.pts[j + 1].theta2];
                    if let Some((u, v)) = segment_intersection(p0, p1, q0, q1) {
                        let sa = &a.arc.samples;
                        let sb = &b.arc.samples;
                        let ta = sa[i].t + u * (sa[i + 1].t - sa[i].t);
                        let tb = sb[j].t + v * (sb[j + 1].t - sb[j].t);
                        out.push((ta, tb));
                    }
                }
            }
        }
    }
    out
}

/// Newton iteration on `x_a(t_a) = x_b(t_b) + (shift, 0)` using re-integrated
/// states. Returns refined times and the common point.
fn refine(p: &PendulumParams, a: &BarrierArc, b: &BarrierArc, shift: f64, mut ta: f64, mut tb: f64) -> Option<(f64, f64, ReducedState)> {
    let clamp = |arc: &BarrierArc, t: f64| t.clamp(arc.samples.last().unwrap().t, arc.samples[0].t);
    for _ in 0..30 {
        let xa = state_at(p, a, ta)?.0;
        let xb = state_at(p, b, tb)?.0.shifted(shift);
        let r = [xa.theta1 - xb.theta1, xa.theta2 - xb.theta2];
        if r[0].hypot(r[1]) < 1e-12 {
            return Some((ta, tb, xa));
        }
        let fa = vectogram_at(p, a, ta, xa)?;
        let fb = vectogram_at(p, b, tb, xb.shifted(-shift))?;
        // [fa, −fb] (dta, dtb) = −r
        let det = -fa[0] * fb[1] + fa[1] * fb[0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dta = (-r[0] * -fb[1] - -r[1] * -fb[0]) / det;
        let dtb = (fa[0] * -r[1] - fa[1] * -r[0]) / det;
        ta = clamp(a, ta + dta);
        tb = clamp(b, tb + dtb);
    }
    let xa = state_at(p, a, ta)?.0;
    let xb = state_at(p, b, tb)?.0.shifted(shift);
    (xa.distance(&xb) < ON_ARC_TOL).then_some((ta, tb, xa))
}

fn transversality(p: &PendulumParams, a: &BarrierArc, b: &BarrierArc, ta: f64, tb: f64, x: ReducedState, shift: f64) -> f64 {
    let (Some(fa), Some(fb)) = (vectogram_at(p, a, ta, x), vectogram_at(p, b, tb, x.shifted(-shift))) else {
        return 0.0;
    };
    let n = fa[0].hypot(fa[1]) * fb[0].hypot(fb[1]);
    if n == 0.0 {
        return 0.0;
    }
    (fa[0] * fb[1] - fa[1] * fb[0]).abs() / n
}

/// Finds stopping points among `arcs` and their translates by `2πn`,
/// `|n| ≤ max_shift`.
///
/// Candidates are taken in order of how far back in time they lie on the
/// later of the two arcs; a crossing counts only if both arcs are still alive
/// there, so each pair keeps its crossing of largest time. Tangential
/// crossings are returned with `transversal = false` and never cut an arc.
pub fn find_stopping_points(p: &PendulumParams, arcs: &[BarrierArc], max_shift: i32) -> Vec<StoppingPoint> {
    use rayon::prelude::*;
    let indexed: Vec<Indexed> = arcs.iter().filter(|a| a.len() >= 2).map(Indexed::new).collect();
    let ids: Vec<usize> = arcs.iter().enumerate().filter(|(_, a)| a.len() >= 2).map(|(i, _)| i).collect();

    let mut pairs = Vec::new();
    for ia in 0..indexed.len() {
        for ib in ia..indexed.len() {
            for n in -max_shift..=max_shift {
                if ia == ib && n <= 0 {
                    continue;
                }
                pairs.push((ia, ib, n));
            }
        }
    }

    let mut candidates: Vec<StoppingPoint> = pairs
        .par_iter()
        .flat_map_iter(|&(ia, ib, n)| {
            let (a, b) = (&indexed[ia], &indexed[ib]);
            let shift = TAU * n as f64;
            let hits = polyline_hits(a, b, shift, ia == ib && n == 0);
            let mut found: Vec<StoppingPoint> = Vec::new();
            for (ta, tb) in hits {
                let Some((ta, tb, x)) = refine(p, a.arc, b.arc, shift, ta, tb) else {
                    log::warn!("stopping point refinement failed for arcs {} / {}", a.arc.label(), b.arc.label());
                    continue;
                };
                if found.iter().any(|s| (s.t_a - ta).abs() < 1e-9 && (s.t_b - tb).abs() < 1e-9) {
                    continue;
                }
                let det = transversality(p, a.arc, b.arc, ta, tb, x, shift);
                found.push(StoppingPoint {
                    location: x,
                    arc_a: ids[ia],
                    arc_b: ids[ib],
                    shift_b: n,
                    t_a: ta,
                    t_b: tb,
                    transversal: det > TRANSVERSALITY_TOL,
                    determinant: det,
                });
            }
            found
        })
        .collect();

    candidates.sort_by(|x, y| {
        let kx = (-x.t_a).max(-x.t_b);
        let ky = (-y.t_a).max(-y.t_b);
        kx.total_cmp(&ky).then(x.arc_a.cmp(&y.arc_a)).then(x.arc_b.cmp(&y.arc_b)).then(x.shift_b.cmp(&y.shift_b))
    });

    let mut cut = vec![f64::NEG_INFINITY; arcs.len()];
    let mut out = Vec::new();
    for c in candidates {
        if !c.transversal {
            log::info!(
                "tangential crossing at ({:.6}, {:.6}) between arcs {} and {} ignored (det {:.3e})",
                c.location.theta1,
                c.location.theta2,
                arcs[c.arc_a].label(),
                arcs[c.arc_b].label(),
                c.determinant
            );
            continue;
        }
        if c.t_a < cut[c.arc_a] || c.t_b < cut[c.arc_b] {
            continue;
        }
        if c.arc_a == c.arc_b {
            cut[c.arc_a] = cut[c.arc_a].max(c.t_a.max(c.t_b));
        } else {
            cut[c.arc_a] = cut[c.arc_a].max(c.t_a);
            cut[c.arc_b] = cut[c.arc_b].max(c.t_b);
        }
        out.push(c);
    }
    out
}

/// Latest stopping time on each arc.
fn stop_times(arcs: &[BarrierArc], sps: &[StoppingPoint]) -> Vec<Option<f64>> {
    let mut stop: Vec<Option<f64>> = vec![None; arcs.len()];
    for sp in sps.iter().filter(|s| s.transversal) {
        for (i, t) in [(sp.arc_a, sp.t_a), (sp.arc_b, sp.t_b)] {
            stop[i] = Some(stop[i].map_or(t, |s: f64| s.max(t)));
        }
    }
    stop
}

/// Cuts every arc at its earliest stopping point (largest time), appends the
/// exact stopping sample and marks the arc as stopped.
pub fn truncate_at_stopping_points(p: &PendulumParams, arcs: &[BarrierArc], sps: &[StoppingPoint]) -> Vec<BarrierArc> {
    let stops = stop_times(arcs, sps);
    arcs.iter()
        .zip(stops)
        .map(|(arc, stop)| match stop {
            Some(ts) => truncate_arc(p, arc, ts),
            None => arc.clone(),
        })
        .collect()
}

fn truncate_arc(p: &PendulumParams, arc: &BarrierArc, ts: f64) -> BarrierArc {
    let mut out = arc.clone();
    let already = arc.termination == Termination::StoppedAtIntersection
        && arc.samples.last().is_some_and(|s| (s.t - ts).abs() < 1e-12);
    if already {
        return out;
    }
    let last = sample_at(p, arc, ts);
    out.samples.retain(|s| s.t > ts);
    out.events.retain(|e| e.t > ts);
    if let Some(mut s) = last {
        s.t = ts;
        if let Some(prev) = out.samples.last() {
            s.mode = prev.mode;
        }
        out.events.push(ArcEvent { t: ts, kind: EventKind::StoppingPoint, state: s.state, mode_before: s.mode, mode_after: s.mode });
        out.samples.push(s);
    }
    out.termination = Termination::StoppedAtIntersection;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments() {
        assert_eq!(segment_intersection([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]), Some((0.5, 0.5)));
        assert_eq!(segment_intersection([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]), None);
        assert_eq!(segment_intersection([0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [2.0, 0.0]), None);
        assert_eq!(segment_intersection([0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, -1.0]), None);
    }

    #[test]
    fn bbox_overlap() {
        let a = BBox { lo: [0.0, 0.0], hi: [1.0, 1.0] };
        assert!(a.overlaps(&a.shifted(0.5)));
        assert!(!a.overlaps(&a.shifted(2.0)));
    }
}
