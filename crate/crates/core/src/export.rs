//! CSV and JSON writers.

use std::fmt::Write as _;

use crate::error::{BarrierError, Result};
use crate::integrator::BarrierArc;
use crate::intersection::StoppingPoint;
use crate::model::{g_tilde, Adjoint, ControlMode, PendulumParams, ReducedState};
use crate::tangency::{validate_endpoint, verify_tangentiality, EndpointKind, TangencyPoint};

pub const ARC_HEADER: &str = "t,theta1,theta2,lambda1,lambda2,u,mu,H,mode";
pub const ENDPOINT_HEADER: &str = "label,kind,theta1,theta2,lambda1,lambda2,u_lo,u_hi,period,g_tilde,tangency_residual,valid";
pub const STOPPING_HEADER: &str = "theta1,theta2,arc_a,arc_b,shift_b,t_a,t_b,determinant";

/// Float with 17 significant digits; parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn arc_csv(arc: &BarrierArc) -> String {
    let mut out = String::with_capacity(arc.len() * 200);
    out.push_str(ARC_HEADER);
    out.push('\n');
    for s in &arc.samples {
        let fields = [s.t, s.state.theta1, s.state.theta2, s.adjoint.lambda1, s.adjoint.lambda2, s.control, s.multiplier, s.hamiltonian];
        for f in fields {
            out.push_str(&fmt_f64(f));
            out.push(',');
        }
        out.push_str(s.mode.label());
        out.push('\n');
    }
    out
}

/// One row of an arc CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcRow {
    pub t: f64,
    pub state: ReducedState,
    pub adjoint: Adjoint,
    pub control: f64,
    pub multiplier: f64,
    pub hamiltonian: f64,
    pub mode: ControlMode,
}

pub fn parse_arc_csv(text: &str) -> Result<Vec<ArcRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(ARC_HEADER) {
        return Err(BarrierError::InvalidParams("arc csv: bad header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 9 {
                return Err(BarrierError::InvalidParams(format!("arc csv: {} columns", cols.len())));
            }
            let mut v = [0.0; 8];
            for (k, c) in cols[..8].iter().enumerate() {
                v[k] = c.parse().map_err(|_| BarrierError::InvalidParams(format!("arc csv: bad number {c:?}")))?;
            }
            let mode = ControlMode::parse(cols[8]).ok_or_else(|| BarrierError::InvalidParams(format!("arc csv: bad mode {:?}", cols[8])))?;
            Ok(ArcRow {
                t: v[0],
                state: ReducedState::new(v[1], v[2]),
                adjoint: Adjoint::new(v[3], v[4]),
                control: v[5],
                multiplier: v[6],
                hamiltonian: v[7],
                mode,
            })
        })
        .collect()
}

/// End points with their `G0` and tangency residuals.
pub fn endpoints_csv(p: &PendulumParams, points: &[TangencyPoint]) -> String {
    let mut out = String::from(ENDPOINT_HEADER);
    out.push('\n');
    for tp in points {
        let kind = match tp.kind {
            EndpointKind::Smooth => "smooth",
            EndpointKind::NonSmooth => "nonsmooth",
        };
        let (lo, hi) = if tp.final_control_set.is_empty() { (f64::NAN, f64::NAN) } else { (tp.final_control_set.lo, tp.final_control_set.hi) };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            tp.label(),
            kind,
            fmt_f64(tp.state.theta1),
            fmt_f64(tp.state.theta2),
            fmt_f64(tp.final_adjoint.lambda1),
            fmt_f64(tp.final_adjoint.lambda2),
            fmt_f64(lo),
            fmt_f64(hi),
            tp.period_index,
            fmt_f64(g_tilde(p, tp.state)),
            fmt_f64(verify_tangentiality(p, tp)),
            validate_endpoint(p, tp)
        );
    }
    out
}

/// Stopping points with arc indices replaced by labels.
pub fn stopping_points_csv(sps: &[StoppingPoint], labels: &[String]) -> String {
    let mut out = String::from(STOPPING_HEADER);
    out.push('\n');
    for sp in sps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(sp.location.theta1),
            fmt_f64(sp.location.theta2),
            labels.get(sp.arc_a).map_or("?", String::as_str),
            labels.get(sp.arc_b).map_or("?", String::as_str),
            sp.shift_b,
            fmt_f64(sp.t_a),
            fmt_f64(sp.t_b),
            fmt_f64(sp.determinant)
        );
    }
    out
}

/// File-name-safe form of an arc label.
pub fn file_stem(label: &str) -> String {
    label.replace('+', "p").replace('-', "m").replace(':', "_k")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, f64::MIN_POSITIVE, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn stems() {
        assert_eq!(file_stem("nonsmooth+:-1"), "nonsmoothp_km1");
        assert_eq!(file_stem("smooth-:0"), "smoothm_k0");
    }
}
