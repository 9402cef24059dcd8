//! Direct SVG emission of the barrier picture.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use cablebarrier::setassembly::g0_segments;
use cablebarrier::{Construction, EndpointKind, EventKind, MembershipTag, ReducedState};

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 60.0;
const SHADE_PER_PERIOD: usize = 160;

struct Frame {
    x0: f64,
    x1: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, theta1: f64) -> f64 {
        MARGIN + (theta1 - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, theta2: f64) -> f64 {
        HEIGHT - MARGIN - (theta2 + self.ymax) / (2.0 * self.ymax) * (HEIGHT - 2.0 * MARGIN)
    }

    fn contains(&self, s: ReducedState) -> bool {
        s.theta1 >= self.x0 && s.theta1 <= self.x1 && s.theta2.abs() <= self.ymax
    }
}

fn polyline(out: &mut String, f: &Frame, pts: &[ReducedState], class: &str) {
    let mut run: Vec<String> = Vec::new();
    let flush = |out: &mut String, run: &mut Vec<String>| {
        if run.len() >= 2 {
            let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, run.join(" "));
        }
        run.clear();
    };
    for s in pts {
        if f.contains(*s) {
            run.push(format!("{:.2},{:.2}", f.x(s.theta1), f.y(s.theta2)));
        } else {
            flush(out, &mut run);
        }
    }
    flush(out, &mut run);
}

fn shade(out: &mut String, f: &Frame, c: &Construction) {
    let model = &c.model;
    let n = SHADE_PER_PERIOD;
    let rows = (n as f64 * (2.0 * f.ymax) / TAU * 0.5).ceil() as usize;
    let dx = TAU / n as f64;
    let dy = 2.0 * f.ymax / rows as f64;
    // class per cell of one period: 0 none, 1 bounded, 2 unbounded, 3 free fall
    let mut grid = vec![0u8; n * rows];
    for j in 0..rows {
        for i in 0..n {
            let s = ReducedState::new(-PI + (i as f64 + 0.5) * dx, -f.ymax + (j as f64 + 0.5) * dy);
            let v = model.membership(s).map(|v| v.tag).unwrap_or(MembershipTag::Inadmissible);
            grid[j * n + i] = match v {
                MembershipTag::OutsideG => 3,
                MembershipTag::Inadmissible => 0,
                _ => match model.component_of(s) {
                    Some(k) if model.components[k].bounded => 1,
                    Some(_) => 2,
                    None => 0,
                },
            };
        }
    }
    let classes = ["", "bounded", "unbounded", "freefall"];
    for k in c.config.k_range() {
        let off = TAU * k as f64;
        for j in 0..rows {
            let mut i = 0;
            while i < n {
                let cls = grid[j * n + i];
                let mut e = i + 1;
                while e < n && grid[j * n + e] == cls {
                    e += 1;
                }
                if cls != 0 {
                    let xa = f.x(off - PI + i as f64 * dx);
                    let xb = f.x(off - PI + e as f64 * dx);
                    let ya = f.y(-f.ymax + (j + 1) as f64 * dy);
                    let yb = f.y(-f.ymax + j as f64 * dy);
                    let _ = writeln!(
                        out,
                        r#"<rect class="{}" x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}"/>"#,
                        classes[cls as usize],
                        xb - xa,
                        yb - ya
                    );
                }
                i = e;
            }
        }
    }
}

fn axes(out: &mut String, f: &Frame) {
    let (l, r) = (MARGIN, WIDTH - MARGIN);
    let (t, b) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<rect class="frame" x="{l}" y="{t}" width="{}" height="{}"/>"#, r - l, b - t);
    let first = (f.x0 / (PI / 2.0)).ceil() as i64;
    let last = (f.x1 / (PI / 2.0)).floor() as i64;
    for q in first..=last {
        let x = f.x(q as f64 * PI / 2.0);
        let _ = writeln!(out, r#"<line class="tick" x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text class="label" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 20.0, half_pi_label(q));
    }
    let step = (f.ymax / 4.0).ceil().max(1.0);
    let mut v = -(f.ymax / step).floor() * step;
    while v <= f.ymax + 1e-9 {
        let y = f.y(v);
        let _ = writeln!(out, r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text class="label" x="{:.2}" y="{:.2}" text-anchor="end">{v}</text>"#, l - 8.0, y + 4.0);
        v += step;
    }
    let _ = writeln!(out, r#"<text class="axis" x="{:.2}" y="{:.2}" text-anchor="middle">θ₁ (rad)</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        out,
        r#"<text class="axis" x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">θ₂ (rad/s)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

fn half_pi_label(q: i64) -> String {
    match q {
        0 => "0".into(),
        1 => "π/2".into(),
        -1 => "−π/2".into(),
        _ if q % 2 == 0 => {
            let k = q / 2;
            match k {
                1 => "π".into(),
                -1 => "−π".into(),
                _ if k < 0 => format!("−{}π", -k),
                _ => format!("{k}π"),
            }
        }
        _ if q < 0 => format!("−{}π/2", -q),
        _ => format!("{q}π/2"),
    }
}

fn cross(out: &mut String, f: &Frame, s: ReducedState) {
    let (x, y) = (f.x(s.theta1), f.y(s.theta2));
    let _ = writeln!(
        out,
        r#"<path class="switch" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}"/>"#,
        x - 5.0,
        y - 5.0,
        x + 5.0,
        y + 5.0,
        x - 5.0,
        y + 5.0,
        x + 5.0,
        y - 5.0
    );
}

fn plus(out: &mut String, f: &Frame, s: ReducedState) {
    let (x, y) = (f.x(s.theta1), f.y(s.theta2));
    let _ = writeln!(
        out,
        r#"<path class="exit" d="M{:.2},{y:.2}L{:.2},{y:.2}M{x:.2},{:.2}L{x:.2},{:.2}"/>"#,
        x - 6.0,
        x + 6.0,
        y - 6.0,
        y + 6.0
    );
}

fn legend(out: &mut String) {
    let x = WIDTH - MARGIN - 230.0;
    let y = MARGIN + 10.0;
    let _ = writeln!(out, r#"<rect class="legendbox" x="{x}" y="{y}" width="220" height="132"/>"#);
    let rows: [(&str, &str); 7] = [
        ("bounded", "admissible, bounded"),
        ("unbounded", "admissible, unbounded"),
        ("freefall", "free fall (outside G)"),
        ("smooth", "arc from smooth end point"),
        ("nonsmooth", "arc from non-smooth end point"),
        ("switch", "× control switch"),
        ("exit", "+ constrained to bang"),
    ];
    for (k, (cls, text)) in rows.iter().enumerate() {
        let yy = y + 16.0 + 17.0 * k as f64;
        if k < 3 {
            let _ = writeln!(out, r#"<rect class="{cls}" x="{}" y="{}" width="14" height="10"/>"#, x + 8.0, yy - 9.0);
        } else {
            let _ = writeln!(out, r#"<line class="{cls}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#, x + 8.0, yy - 4.0, x + 22.0, yy - 4.0);
        }
        let _ = writeln!(out, r#"<text class="label" x="{}" y="{yy}">{text}</text>"#, x + 30.0);
    }
}

/// Renders the construction over its configured period range.
pub fn render(c: &Construction) -> String {
    let ks = c.config.k_range();
    let (kmin, kmax) = (*ks.first().unwrap_or(&0), *ks.last().unwrap_or(&0));
    let f = Frame { x0: TAU * kmin as f64 - PI, x1: TAU * kmax as f64 + PI, ymax: c.model.theta2_max };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    out.push_str(concat!(
        "<style>\n",
        ".frame{fill:none;stroke:#000;stroke-width:1}\n",
        ".tick{stroke:#000;stroke-width:1}\n",
        ".label{font:11px sans-serif}\n",
        ".axis{font:14px sans-serif}\n",
        ".bounded{fill:#9ecae1;stroke:none}\n",
        ".unbounded{fill:#fdd49e;stroke:none}\n",
        ".freefall{fill:#d9d9d9;stroke:none}\n",
        ".g0{fill:none;stroke:#000;stroke-width:1.5}\n",
        ".smooth{fill:none;stroke:#08519c;stroke-width:1.5}\n",
        ".nonsmooth{fill:none;stroke:#a50f15;stroke-width:1.5}\n",
        ".switch{fill:none;stroke:#000;stroke-width:1.5}\n",
        ".exit{fill:none;stroke:#006d2c;stroke-width:2}\n",
        ".stop{fill:#ffd700;stroke:#000;stroke-width:1}\n",
        ".endpoint{fill:#000}\n",
        ".legendbox{fill:#fff;stroke:#000;stroke-width:0.5;opacity:0.9}\n",
        "</style>\n"
    ));
    let _ = writeln!(
        out,
        r#"<text class="axis" x="{:.1}" y="30" text-anchor="middle">M={} m={} l={} g={}</text>"#,
        WIDTH / 2.0,
        c.config.params.cart_mass,
        c.config.params.bob_mass,
        c.config.params.length,
        c.config.params.gravity
    );
    out.push_str("<g id=\"shading\">\n");
    shade(&mut out, &f, c);
    out.push_str("</g>\n<g id=\"g0\">\n");
    let lens = g0_segments(&c.config.params, 200);
    for k in &ks {
        for seg in &lens {
            let pts: Vec<ReducedState> = seg.points.iter().map(|s| s.shifted(TAU * *k as f64)).collect();
            polyline(&mut out, &f, &pts, "g0");
        }
    }
    out.push_str("</g>\n<g id=\"arcs\">\n");
    let arcs = c.arcs_in_range();
    for arc in &arcs {
        let class = match arc.source.kind {
            EndpointKind::Smooth => "smooth",
            EndpointKind::NonSmooth => "nonsmooth",
        };
        polyline(&mut out, &f, &arc.polyline(), class);
    }
    out.push_str("</g>\n<g id=\"markers\">\n");
    for arc in &arcs {
        for e in &arc.events {
            if !f.contains(e.state) {
                continue;
            }
            match e.kind {
                EventKind::Switch => cross(&mut out, &f, e.state),
                EventKind::ConstraintExit => plus(&mut out, &f, e.state),
                _ => {}
            }
        }
    }
    for tp in c.endpoints_in_range() {
        if f.contains(tp.state) {
            let _ = writeln!(out, r#"<circle class="endpoint" cx="{:.2}" cy="{:.2}" r="3"/>"#, f.x(tp.state.theta1), f.y(tp.state.theta2));
        }
    }
    for (_, sp) in c.stopping_points_in_range() {
        if sp.transversal && f.contains(sp.location) {
            let _ = writeln!(out, r#"<circle class="stop" cx="{:.2}" cy="{:.2}" r="5"/>"#, f.x(sp.location.theta1), f.y(sp.location.theta2));
        }
    }
    out.push_str("</g>\n");
    axes(&mut out, &f);
    legend(&mut out);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_labels() {
        assert_eq!(half_pi_label(0), "0");
        assert_eq!(half_pi_label(2), "π");
        assert_eq!(half_pi_label(-3), "−3π/2");
        assert_eq!(half_pi_label(4), "2π");
        assert_eq!(half_pi_label(-4), "−2π");
    }
}
