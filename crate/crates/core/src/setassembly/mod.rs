//! Admissible-set assembly and membership queries.
//!
//! The boundary within one period is made of the truncated barrier arcs and
//! the four `G0` segments between consecutive end points. Regions are found
//! by a flood fill of the period cell `θ1 ∈ [−π, π)` with the boundary curves
//! rasterised as walls, and each region is classified by which side of the
//! nearby barrier segments it lies on. Barrier adjoints point away from the
//! admissible set.

pub mod oracle;
pub mod simulate;

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Result};
use crate::integrator::{BarrierArc, Termination};
use crate::model::{g_tilde, PendulumParams, ReducedState};

/// Version tag of the JSON document.
pub const MODEL_VERSION: u32 = 1;
/// Distance under which a query point is reported as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Envelope value above which a point is in the free-fall region.
pub const OUTSIDE_G_TOL: f64 = 1e-8;
/// Largest allowed gap where boundary curves meet.
pub const STITCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    Barrier,
    G0,
}

/// Oriented boundary polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: CurveKind,
    pub label: String,
    pub points: Vec<ReducedState>,
    /// Unit normals towards the inadmissible side; barrier curves only.
    pub normals: Vec<[f64; 2]>,
    /// The last point is a free end (window or horizon exit).
    pub open_end: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub bounded: bool,
    pub cells: usize,
    /// Area in the `(θ1, θ2)` plane, clipped to the window.
    pub area: f64,
    /// A cell centre inside the component.
    pub representative: ReducedState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MembershipTag {
    Interior,
    Boundary,
    Inadmissible,
    OutsideG,
}

impl MembershipTag {
    pub fn label(self) -> &'static str {
        match self {
            MembershipTag::Interior => "Interior",
            MembershipTag::Boundary => "Boundary",
            MembershipTag::Inadmissible => "Inadmissible",
            MembershipTag::OutsideG => "OutsideG",
        }
    }

    /// Interior or boundary.
    pub fn is_admissible(self) -> bool {
        matches!(self, MembershipTag::Interior | MembershipTag::Boundary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub tag: MembershipTag,
    /// Distance to the nearest boundary curve.
    pub distance_estimate: f64,
}

/// Grid resolution of the period cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { nx: 720, ny: 960 }
    }
}

/// One period of the admissible set.
#[derive(Debug, Clone)]
pub struct AdmissibleSetModel {
    pub params: PendulumParams,
    pub theta2_max: f64,
    pub curves: Vec<BoundaryCurve>,
    pub components: Vec<Component>,
    pub degenerate: bool,
    pub resolution: Resolution,
    grid: Grid,
}

/// Serialised form of [`AdmissibleSetModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub params: PendulumParams,
    pub period: f64,
    pub theta2_max: f64,
    pub resolution: Resolution,
    pub degenerate: bool,
    pub curves: Vec<CurveDocument>,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub kind: CurveKind,
    pub label: String,
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub normals: Vec<[f64; 2]>,
    #[serde(default)]
    pub open_end: bool,
}

const WALL: u32 = u32::MAX;
const OUTSIDE: u32 = u32::MAX - 1;
const MIN_COMPONENT_CELLS: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: [f64; 2],
    b: [f64; 2],
    /// Orientation towards the inadmissible side; zero for `G0` pieces.
    normal: [f64; 2],
    barrier: bool,
    /// Segment ends at a free end of its polyline.
    end_b: bool,
}

impl Segment {
    fn closest(&self, x: [f64; 2]) -> ([f64; 2], f64) {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 == 0.0 { 0.0 } else { (((x[0] - self.a[0]) * d[0] + (x[1] - self.a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
        ([self.a[0] + t * d[0], self.a[1] + t * d[1]], t)
    }
}

/// Bucket index over segments of the period cell and its neighbourhood.
#[derive(Debug, Clone)]
struct SegmentIndex {
    segs: Vec<Segment>,
    origin: [f64; 2],
    size: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentIndex {
    fn new(segs: Vec<Segment>, theta2_max: f64) -> Self {
        let size = 0.05;
        let origin = [-PI - 1.0, -theta2_max - 1.0];
        let nx = ((TAU + 2.0) / size).ceil() as usize;
        let ny = ((2.0 * theta2_max + 2.0) / size).ceil() as usize;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, s) in segs.iter().enumerate() {
            let (i0, j0) = Self::cell_of(origin, size, nx, ny, [s.a[0].min(s.b[0]), s.a[1].min(s.b[1])]);
            let (i1, j1) = Self::cell_of(origin, size, nx, ny, [s.a[0].max(s.b[0]), s.a[1].max(s.b[1])]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        Self { segs, origin, size, nx, ny, buckets }
    }

    fn cell_of(origin: [f64; 2], size: f64, nx: usize, ny: usize, x: [f64; 2]) -> (usize, usize) {
        let i = ((x[0] - origin[0]) / size).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((x[1] - origin[1]) / size).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    /// Nearest segment satisfying `filter`, searched out to `max_dist`.
    fn nearest(&self, x: [f64; 2], max_dist: f64, filter: impl Fn(&Segment) -> bool) -> Option<(usize, f64)> {
        let (ci, cj) = Self::cell_of(self.origin, self.size, self.nx, self.ny, x);
        let max_ring = (max_dist / self.size).ceil() as usize + 1;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=max_ring {
            if let Some((_, d)) = best {
                if d < (r as f64 - 1.0) * self.size {
                    break;
                }
            }
            let (i0, i1) = (ci.saturating_sub(r), (ci + r).min(self.nx - 1));
            let (j0, j1) = (cj.saturating_sub(r), (cj + r).min(self.ny - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if i != i0 && i != i1 && j != j0 && j != j1 {
                        continue;
                    }
                    for &k in &self.buckets[j * self.nx + i] {
                        let s = &self.segs[k as usize];
                        if !filter(s) {
                            continue;
                        }
                        let (c, _) = s.closest(x);
                        let d = (x[0] - c[0]).hypot(x[1] - c[1]);
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((k as usize, d));
                        }
                    }
                }
            }
        }
        best.filter(|&(_, d)| d <= max_dist)
    }
}

#[derive(Debug, Clone)]
struct Grid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    theta2_max: f64,
    cells: Vec<u32>,
    /// Per region: admissible?
    admissible: Vec<bool>,
    /// Per region: index into the component list.
    component: Vec<Option<usize>>,
    index: SegmentIndex,
}

impl Grid {
    fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [-PI + (i as f64 + 0.5) * self.dx, -self.theta2_max + (j as f64 + 0.5) * self.dy]
    }

    fn locate(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let fi = ((x[0] + PI) / self.dx).floor();
        let fj = ((x[1] + self.theta2_max) / self.dy).floor();
        if fj < 0.0 || fj >= self.ny as f64 {
            return None;
        }
        let i = (fi as i64).rem_euclid(self.nx as i64) as usize;
        Some((i, fj as usize))
    }

    fn mark_segment(&mut self, a: [f64; 2], b: [f64; 2]) {
        let len = ((b[0] - a[0]) / self.dx).hypot((b[1] - a[1]) / self.dy);
        let n = (len * 4.0).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            if x[0] < -PI - self.dx || x[0] > PI + self.dx {
                continue;
            }
            if let Some((i, j)) = self.locate(x) {
                let c = &mut self.cells[j * self.nx + i];
                if *c != OUTSIDE {
                    *c = WALL;
                }
            }
        }
    }
}

/// Reduces `θ1` into `[−π, π)`.
pub fn wrap_angle(theta1: f64) -> f64 {
    let x = (theta1 + PI).rem_euclid(TAU) - PI;
    if x >= PI { x - TAU } else { x }
}

/// The four `G0` pieces between consecutive end points of period 0, each
/// sampled with `n` points clustered at the vertical-tangent end.
pub fn g0_segments(p: &PendulumParams, n: usize) -> Vec<BoundaryCurve> {
    let a = p.mg().atan();
    let ml = p.cart_mass * p.length;
    let speed = |theta1: f64| ((p.mg() * theta1.cos() - theta1.sin().abs()).max(0.0) / ml).sqrt();
    let piece = |left: bool, upper: bool| -> Vec<ReducedState> {
        (0..n)
            .map(|j| {
                let phi = j as f64 / (n - 1) as f64;
                // tip at ±a where the speed has a square-root profile
                let x = a * (1.0 - phi * phi);
                let theta1 = if left { -x } else { x };
                let w = if j == n - 1 {
                    p.critical_speed()
                } else if j == 0 {
                    0.0
                } else {
                    speed(theta1)
                };
                let theta2 = if upper { w } else { -w };
                ReducedState::new(if j == n - 1 { 0.0 } else { theta1 }, theta2)
            })
            .collect()
    };
    let mk = |label: &str, mut pts: Vec<ReducedState>, reverse: bool| {
        if reverse {
            pts.reverse();
        }
        BoundaryCurve { kind: CurveKind::G0, label: label.to_string(), points: pts, normals: Vec::new(), open_end: false }
    };
    vec![
        mk("g0-upper-left", piece(true, true), false),
        mk("g0-upper-right", piece(false, true), true),
        mk("g0-lower-right", piece(false, false), false),
        mk("g0-lower-left", piece(true, false), true),
    ]
}

fn barrier_curve(arc: &BarrierArc) -> BoundaryCurve {
    let normals = arc
        .samples
        .iter()
        .map(|s| {
            let n = s.adjoint.norm();
            if n > 0.0 { [s.adjoint.lambda1 / n, s.adjoint.lambda2 / n] } else { [0.0, 0.0] }
        })
        .collect();
    let open_end = matches!(arc.termination, Termination::LeftWindow | Termination::HorizonReached);
    BoundaryCurve { kind: CurveKind::Barrier, label: arc.label(), points: arc.polyline(), normals, open_end }
}

/// Checks that curve ends meet: arc starts on `G0`, stopped ends on a
/// partner arc end, and `G0` landings on `G0`.
pub fn check_stitching(p: &PendulumParams, arcs: &[BarrierArc]) -> Result<()> {
    let grad_norm = |s: ReducedState| {
        let (sn, c) = s.theta1.sin_cos();
        let d1 = -sn.signum() * c - p.mg() * sn;
        let d2 = -2.0 * p.cart_mass * p.length * s.theta2;
        d1.hypot(d2).max(1e-12)
    };
    for (i, arc) in arcs.iter().enumerate() {
        let (Some(first), Some(last)) = (arc.samples.first(), arc.samples.last()) else { continue };
        let gap = first.state.distance(&arc.source.state);
        if gap > STITCH_TOL {
            return Err(BarrierError::StitchGap { from: i, to: i, gap });
        }
        match arc.termination {
            Termination::ReachedG0Again => {
                let gap = g_tilde(p, last.state).abs() / grad_norm(last.state);
                if gap > STITCH_TOL {
                    return Err(BarrierError::StitchGap { from: i, to: i, gap });
                }
            }
            Termination::StoppedAtIntersection => {
                let mut best = (f64::INFINITY, i);
                for (j, other) in arcs.iter().enumerate() {
                    let Some(o) = other.samples.last() else { continue };
                    if j == i && other.termination != Termination::StoppedAtIntersection {
                        continue;
                    }
                    for n in -2..=2 {
                        if j == i && n == 0 {
                            continue;
                        }
                        let d = last.state.distance(&o.state.shifted(TAU * n as f64));
                        if d < best.0 {
                            best = (d, j);
                        }
                    }
                    // a stop may also lie inside an arc through a shared point
                    for s in &other.samples {
                        for n in -2..=2 {
                            if j == i && n == 0 {
                                continue;
                            }
                            let d = last.state.distance(&s.state.shifted(TAU * n as f64));
                            if d < best.0 {
                                best = (d, j);
                            }
                        }
                    }
                }
                if best.0 > STITCH_TOL {
                    return Err(BarrierError::StitchGap { from: i, to: best.1, gap: best.0 });
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Assembles one period of the admissible set from truncated base arcs
/// (period index 0).
pub fn assemble(p: &PendulumParams, arcs: &[BarrierArc], theta2_max: f64, resolution: Resolution) -> Result<AdmissibleSetModel> {
    p.validate()?;
    check_stitching(p, arcs)?;
    let mut curves: Vec<BoundaryCurve> = arcs.iter().filter(|a| a.len() >= 2).map(barrier_curve).collect();
    curves.extend(g0_segments(p, 400));
    let degenerate = arcs.iter().all(|a| a.len() < 2);
    Ok(build(*p, theta2_max, curves, degenerate, resolution))
}

fn build(params: PendulumParams, theta2_max: f64, curves: Vec<BoundaryCurve>, degenerate: bool, resolution: Resolution) -> AdmissibleSetModel {
    let segs = collect_segments(&curves);
    let index = SegmentIndex::new(segs, theta2_max);
    let (nx, ny) = (resolution.nx, resolution.ny);
    let mut grid = Grid {
        nx,
        ny,
        dx: TAU / nx as f64,
        dy: 2.0 * theta2_max / ny as f64,
        theta2_max,
        cells: vec![0; nx * ny],
        admissible: Vec::new(),
        component: Vec::new(),
        index,
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.center(i, j);
            if g_tilde(&params, ReducedState::new(c[0], c[1])) > 0.0 {
                grid.cells[j * nx + i] = OUTSIDE;
            }
        }
    }
    let walls: Vec<([f64; 2], [f64; 2])> = grid.index.segs.iter().map(|s| (s.a, s.b)).collect();
    for (a, b) in walls {
        grid.mark_segment(a, b);
    }

    // Flood fill free cells, wrapping in θ1.
    let mut region = vec![u32::MAX; nx * ny];
    let mut sizes: Vec<usize> = Vec::new();
    let mut touches_edge: Vec<bool> = Vec::new();
    let mut rep: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        if grid.cells[start] != 0 || region[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        sizes.push(0);
        touches_edge.push(false);
        rep.push((start % nx, start / nx));
        region[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % nx, k / nx);
            sizes[id as usize] += 1;
            if j == 0 || j == ny - 1 {
                touches_edge[id as usize] = true;
            }
            let mut nbrs = [usize::MAX; 4];
            nbrs[0] = j * nx + (i + 1) % nx;
            nbrs[1] = j * nx + (i + nx - 1) % nx;
            if j + 1 < ny {
                nbrs[2] = (j + 1) * nx + i;
            }
            if j > 0 {
                nbrs[3] = (j - 1) * nx + i;
            }
            for q in nbrs {
                if q != usize::MAX && grid.cells[q] == 0 && region[q] == u32::MAX {
                    region[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }
    let nregions = sizes.len();

    // Side votes from free cells near barrier segments.
    let mut votes = vec![0i64; nregions];
    let reach = 4.0 * grid.dx.hypot(grid.dy);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let r = region[k];
            if r == u32::MAX {
                continue;
            }
            let c = grid.center(i, j);
            if let Some(side) = side_test(&grid.index, c, reach) {
                votes[r as usize] += side;
            }
        }
    }
    let admissible: Vec<bool> = votes.iter().map(|&v| v <= 0).collect();
    for k in 0..nx * ny {
        if region[k] != u32::MAX {
            grid.cells[k] = region[k];
        }
    }
    grid.admissible = admissible.clone();

    // representative: the middle cell of each region in scan order
    let mut seen = vec![0usize; nregions];
    for k in 0..nx * ny {
        let r = region[k];
        if r == u32::MAX {
            continue;
        }
        let r = r as usize;
        if seen[r] == sizes[r] / 2 {
            rep[r] = (k % nx, k / nx);
        }
        seen[r] += 1;
    }
    let cell_area = grid.dx * grid.dy;
    let mut components = Vec::new();
    grid.component = vec![None; nregions];
    for r in 0..nregions {
        if !admissible[r] {
            continue;
        }
        if sizes[r] < MIN_COMPONENT_CELLS {
            log::info!("admissible grid fragment of {} cells not counted as a component", sizes[r]);
            continue;
        }
        let (i, j) = rep[r];
        let c = grid.center(i, j);
        grid.component[r] = Some(components.len());
        components.push(Component {
            id: components.len(),
            bounded: !touches_edge[r],
            cells: sizes[r],
            area: sizes[r] as f64 * cell_area,
            representative: ReducedState::new(c[0], c[1]),
        });
    }

    AdmissibleSetModel { params, theta2_max, curves, components, degenerate, resolution, grid }
}

/// `+1` on the inadmissible side of the nearest barrier segment, `−1` on the
/// admissible side, `None` when no barrier is near or the nearest point is an
/// open end of a barrier curve.
fn side_test(index: &SegmentIndex, x: [f64; 2], reach: f64) -> Option<i64> {
    let (k, _) = index.nearest(x, reach, |s| s.barrier)?;
    let s = &index.segs[k];
    let (c, t) = s.closest(x);
    if t == 1.0 && s.end_b {
        return None;
    }
    let d = (x[0] - c[0]) * s.normal[0] + (x[1] - c[1]) * s.normal[1];
    if d > 0.0 {
        Some(1)
    } else if d < 0.0 {
        Some(-1)
    } else {
        None
    }
}

fn collect_segments(curves: &[BoundaryCurve]) -> Vec<Segment> {
    let mut segs = Vec::new();
    for c in curves {
        let n = c.points.len();
        let barrier = c.kind == CurveKind::Barrier;
        for k in 0..n.saturating_sub(1) {
            let a = [c.points[k].theta1, c.points[k].theta2];
            let b = [c.points[k + 1].theta1, c.points[k + 1].theta2];
            let normal = if barrier {
                // segment normal oriented by the sample adjoints
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = t[0].hypot(t[1]);
                let mut nrm = if len > 0.0 { [-t[1] / len, t[0] / len] } else { [0.0, 0.0] };
                let lam = [c.normals[k][0] + c.normals[k + 1][0], c.normals[k][1] + c.normals[k + 1][1]];
                if nrm[0] * lam[0] + nrm[1] * lam[1] < 0.0 {
                    nrm = [-nrm[0], -nrm[1]];
                }
                nrm
            } else {
                [0.0, 0.0]
            };
            let end_b = c.open_end && k + 2 == n;
            for shift in -2..=2 {
                let d = TAU * shift as f64;
                let (sa, sb) = ([a[0] + d, a[1]], [b[0] + d, b[1]]);
                if sa[0].max(sb[0]) < -PI - 1.0 || sa[0].min(sb[0]) > PI + 1.0 {
                    continue;
                }
                segs.push(Segment { a: sa, b: sb, normal, barrier, end_b });
            }
        }
    }
    segs
}

impl AdmissibleSetModel {
    /// Classifies `s`; `θ1` is reduced modulo `2π` first.
    pub fn membership(&self, s: ReducedState) -> Result<MembershipVerdict> {
        if !s.is_finite() || s.theta2.abs() > self.theta2_max {
            return Err(BarrierError::WindowExceeded { theta2: s.theta2, limit: self.theta2_max });
        }
        let x = [wrap_angle(s.theta1), s.theta2];
        let reduced = ReducedState::new(x[0], x[1]);
        let distance = self.distance_to_boundary(x);
        let g = g_tilde(&self.params, reduced);
        if g > OUTSIDE_G_TOL {
            return Ok(MembershipVerdict { tag: MembershipTag::OutsideG, distance_estimate: distance });
        }
        if distance <= BOUNDARY_TOL || self.on_g0_segment(reduced, g) {
            return Ok(MembershipVerdict { tag: MembershipTag::Boundary, distance_estimate: distance });
        }
        let admissible = self.region_admissible(x);
        let tag = if admissible { MembershipTag::Interior } else { MembershipTag::Inadmissible };
        Ok(MembershipVerdict { tag, distance_estimate: distance })
    }

    fn on_g0_segment(&self, s: ReducedState, g: f64) -> bool {
        let a = self.params.mg().atan();
        if s.theta1.abs() > a + 1e-12 {
            return false;
        }
        let (sn, c) = s.theta1.sin_cos();
        let d1 = -sn.signum() * c - self.params.mg() * sn;
        let d2 = -2.0 * self.params.cart_mass * self.params.length * s.theta2;
        g.abs() / d1.hypot(d2).max(1e-12) <= BOUNDARY_TOL
    }

    /// Component whose grid cells contain `s`; `None` on walls, outside the
    /// window and in inadmissible regions.
    pub fn component_of(&self, s: ReducedState) -> Option<usize> {
        let g = &self.grid;
        let (i, j) = g.locate([wrap_angle(s.theta1), s.theta2])?;
        let c = g.cells[j * g.nx + i];
        if c == WALL || c == OUTSIDE {
            return None;
        }
        g.component[c as usize]
    }

    fn region_admissible(&self, x: [f64; 2]) -> bool {
        let g = &self.grid;
        let Some((i, j)) = g.locate(x) else { return false };
        let c = g.cells[j * g.nx + i];
        if c != WALL && c != OUTSIDE {
            return g.admissible[c as usize];
        }
        let reach = 6.0 * g.dx.hypot(g.dy);
        if let Some(side) = side_test(&g.index, x, reach) {
            return side < 0;
        }
        // only G0 or a free end nearby: nearest free cell inside G
        let mut best: Option<(f64, u32)> = None;
        for r in 1..=8i64 {
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let jj = j as i64 + dj;
                    if jj < 0 || jj >= g.ny as i64 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(g.nx as i64) as usize;
                    let c = g.cells[jj as usize * g.nx + ii];
                    if c == WALL || c == OUTSIDE {
                        continue;
                    }
                    let ctr = g.center(ii, jj as usize);
                    let mut dxv = (ctr[0] - x[0]).abs();
                    dxv = dxv.min(TAU - dxv);
                    let d = dxv.hypot(ctr[1] - x[1]);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, c));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.is_some_and(|(_, c)| g.admissible[c as usize])
    }

    /// Distance from `x` (already reduced) to the nearest boundary segment.
    fn distance_to_boundary(&self, x: [f64; 2]) -> f64 {
        match self.grid.index.nearest(x, 0.5, |_| true) {
            Some((_, d)) => d,
            None => {
                let mut best = f64::INFINITY;
                for s in &self.grid.index.segs {
                    let (c, _) = s.closest(x);
                    best = best.min((x[0] - c[0]).hypot(x[1] - c[1]));
                }
                best
            }
        }
    }

    pub fn bounded_components(&self) -> usize {
        self.components.iter().filter(|c| c.bounded).count()
    }

    pub fn barrier_curves(&self) -> impl Iterator<Item = &BoundaryCurve> {
        self.curves.iter().filter(|c| c.kind == CurveKind::Barrier)
    }

    /// Grid-cell size `(dθ1, dθ2)`.
    pub fn cell_size(&self) -> (f64, f64) {
        (self.grid.dx, self.grid.dy)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            version: MODEL_VERSION,
            params: self.params,
            period: TAU,
            theta2_max: self.theta2_max,
            resolution: self.resolution,
            degenerate: self.degenerate,
            curves: self
                .curves
                .iter()
                .map(|c| CurveDocument {
                    kind: c.kind,
                    label: c.label.clone(),
                    points: c.points.iter().map(|s| [s.theta1, s.theta2]).collect(),
                    normals: c.normals.clone(),
                    open_end: c.open_end,
                })
                .collect(),
            components: self.components.clone(),
        }
    }

    /// Rebuilds a model from its document; the grid is recomputed.
    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if doc.version != MODEL_VERSION {
            return Err(BarrierError::InvalidParams(format!("unsupported model version {}", doc.version)));
        }
        doc.params.validate()?;
        let curves = doc
            .curves
            .iter()
            .map(|c| BoundaryCurve {
                kind: c.kind,
                label: c.label.clone(),
                points: c.points.iter().map(|p| ReducedState::new(p[0], p[1])).collect(),
                normals: c.normals.clone(),
                open_end: c.open_end,
            })
            .collect();
        Ok(build(doc.params, doc.theta2_max, curves, doc.degenerate, doc.resolution))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(s).map_err(|e| BarrierError::InvalidParams(format!("model document: {e}")))?;
        Self::from_document(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(TAU + 0.5) - 0.5).abs() < 1e-12);
        assert!((wrap_angle(PI) + PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) + PI).abs() < 1e-12);
        for k in -5..5 {
            let x = 0.3 + TAU * k as f64;
            assert!((wrap_angle(x) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn g0_segments_lie_on_g0_and_join() {
        let p = PendulumParams::light_cart();
        let segs = g0_segments(&p, 200);
        assert_eq!(segs.len(), 4);
        for s in &segs {
            for pt in &s.points {
                assert!(g_tilde(&p, *pt).abs() < 1e-12, "{pt:?}");
            }
        }
        for k in 0..4 {
            let end = segs[k].points.last().unwrap();
            let start = segs[(k + 1) % 4].points[0];
            assert!(end.distance(&start) < 1e-12, "{end:?} {start:?}");
        }
    }

    #[test]
    fn degenerate_model_is_g_minus_lens() {
        let p = PendulumParams::light_cart();
        let m = assemble(&p, &[], 3.0 * p.critical_speed(), Resolution { nx: 180, ny: 240 }).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.components.len(), 1);
        assert!(!m.components[0].bounded);
        assert_eq!(m.membership(ReducedState::new(0.0, 0.0)).unwrap().tag, MembershipTag::OutsideG);
        assert_eq!(m.membership(ReducedState::new(PI, 0.0)).unwrap().tag, MembershipTag::Interior);
        assert_eq!(m.membership(ReducedState::new(0.0, p.critical_speed())).unwrap().tag, MembershipTag::Boundary);
        assert!(m.membership(ReducedState::new(0.0, 100.0)).is_err());
    }
}
