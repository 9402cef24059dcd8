//! End-to-end construction: end points, arcs, stopping points, assembly.

use std::f64::consts::TAU;

use crate::config::RunConfig;
use crate::error::Result;
use crate::integrator::{integrate_all, BarrierArc};
use crate::intersection::{find_stopping_points, truncate_at_stopping_points, StoppingPoint};
use crate::setassembly::{assemble, AdmissibleSetModel};
use crate::tangency::{all_endpoints, reject_spurious_roots, SpuriousRootReport, TangencyPoint};

/// Largest period offset between arcs checked for intersections.
pub const MAX_SHIFT: i32 = 2;

#[derive(Debug, Clone)]
pub struct Construction {
    pub config: RunConfig,
    pub spurious: SpuriousRootReport,
    /// End points of period 0.
    pub endpoints: Vec<TangencyPoint>,
    /// Period-0 arcs before truncation.
    pub raw_arcs: Vec<BarrierArc>,
    /// Period-0 stopping points, indices into `raw_arcs`.
    pub stopping_points: Vec<StoppingPoint>,
    /// Period-0 arcs after truncation.
    pub arcs: Vec<BarrierArc>,
    pub model: AdmissibleSetModel,
}

impl Construction {
    /// End points translated over the configured period range.
    pub fn endpoints_in_range(&self) -> Vec<TangencyPoint> {
        self.config.k_range().into_iter().flat_map(|k| self.endpoints.iter().map(move |tp| tp.translated(k))).collect()
    }

    /// Truncated arcs translated over the configured period range.
    pub fn arcs_in_range(&self) -> Vec<BarrierArc> {
        self.config.k_range().into_iter().flat_map(|k| self.arcs.iter().map(move |a| a.translated(k))).collect()
    }

    /// Stopping points translated over the configured period range.
    pub fn stopping_points_in_range(&self) -> Vec<(i32, StoppingPoint)> {
        let mut out = Vec::new();
        for k in self.config.k_range() {
            for sp in &self.stopping_points {
                let mut s = *sp;
                s.location = s.location.shifted(TAU * k as f64);
                out.push((k, s));
            }
        }
        out
    }

    pub fn arc_labels(&self) -> Vec<String> {
        self.raw_arcs.iter().map(BarrierArc::label).collect()
    }
}

/// End points and spurious-root scan only.
pub fn endpoints(cfg: &RunConfig) -> Result<(SpuriousRootReport, Vec<TangencyPoint>)> {
    cfg.validate()?;
    let report = reject_spurious_roots(&cfg.params)?;
    Ok((report, all_endpoints(&cfg.params, &[0])?))
}

/// Arcs of period 0, their stopping points and the truncated arcs.
pub fn barrier(cfg: &RunConfig) -> Result<(SpuriousRootReport, Vec<TangencyPoint>, Vec<BarrierArc>, Vec<StoppingPoint>, Vec<BarrierArc>)> {
    let (report, eps) = endpoints(cfg)?;
    let p = &cfg.params;
    let raw = integrate_all(p, &eps, &cfg.integrator_options())?;
    let sps = find_stopping_points(p, &raw, MAX_SHIFT);
    let arcs = truncate_at_stopping_points(p, &raw, &sps);
    Ok((report, eps, raw, sps, arcs))
}

/// Runs the whole construction.
pub fn run(cfg: &RunConfig) -> Result<Construction> {
    let (spurious, endpoints, raw_arcs, stopping_points, arcs) = barrier(cfg)?;
    let model = assemble(&cfg.params, &arcs, cfg.window().theta2_max, cfg.resolution)?;
    log::info!(
        "assembled {} components ({} bounded) from {} arcs and {} stopping points",
        model.components.len(),
        model.bounded_components(),
        arcs.len(),
        stopping_points.len()
    );
    Ok(Construction { config: cfg.clone(), spurious, endpoints, raw_arcs, stopping_points, arcs, model })
}
