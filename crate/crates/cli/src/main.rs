//! `cablebarrier`: builds and queries the admissible set of the pendulum on a
//! cart with a slack-capable cable.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cablebarrier::export::{arc_csv, endpoints_csv, file_stem, fmt_f64, stopping_points_csv};
use cablebarrier::pipeline;
use cablebarrier::setassembly::oracle::{membership_oracle, semipermeability_check, OracleConfig};
use cablebarrier::tangency::validate_endpoint;
use cablebarrier::{AdmissibleSetModel, BarrierError, Construction, ReducedState, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cablebarrier", version, allow_negative_numbers = true, about = "Barrier and admissible set of a pendulum on a cart with a non-rigid cable")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Cart mass.
    #[arg(long = "M", global = true, value_name = "KG")]
    cart_mass: Option<f64>,
    /// Pendulum mass.
    #[arg(long = "m", global = true, value_name = "KG")]
    bob_mass: Option<f64>,
    /// Cable length.
    #[arg(long = "l", global = true, value_name = "M")]
    length: Option<f64>,
    /// Gravitational acceleration.
    #[arg(long = "g", global = true, value_name = "M/S2")]
    gravity: Option<f64>,
    #[arg(long = "tol-abs", global = true)]
    tol_abs: Option<f64>,
    #[arg(long = "tol-rel", global = true)]
    tol_rel: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    /// Seed of the randomised checks.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Tangency points on G0 with terminal adjoints and residuals.
    Endpoints,
    /// Full construction: arcs, stopping points, admissible set, plot.
    Barrier,
    /// Intersections of barrier arcs.
    StoppingPoints,
    /// Classifies one state.
    Query {
        #[arg(allow_negative_numbers = true)]
        theta1: f64,
        #[arg(allow_negative_numbers = true)]
        theta2: f64,
        /// Use a saved model instead of rebuilding it.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Cross-checks the set against policy simulation.
    Oracle,
    /// Writes the SVG picture only.
    Plot,
}

enum Failure {
    Config(String),
    Core(&'static str, BarrierError),
    Verification(String),
    Disagreement(String),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(_, e) => match e {
                BarrierError::InvalidParams(_) | BarrierError::WindowExceeded { .. } => 2,
                BarrierError::OracleDisagreement { .. } => 4,
                _ => 3,
            },
            Failure::Verification(_) => 3,
            Failure::Disagreement(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config: {m}"),
            Failure::Core(stage, e) => format!("{stage}: {}: {e}", module_of(e)),
            Failure::Verification(m) => format!("verification failed: {m}"),
            Failure::Disagreement(m) => format!("oracle: {m}"),
            Failure::Io(e) => format!("{e:#}"),
        }
    }
}

fn module_of(e: &BarrierError) -> &'static str {
    match e {
        BarrierError::InvalidParams(_) | BarrierError::EmptyControlSet { .. } | BarrierError::SingularMultiplier { .. } => "model",
        BarrierError::SymmetryValidationFailed { .. } | BarrierError::SpuriousRootFound { .. } => "tangency",
        BarrierError::StepFailure { .. } | BarrierError::AdjointVanished { .. } => "integrator",
        BarrierError::StitchGap { .. } | BarrierError::WindowExceeded { .. } => "setassembly",
        BarrierError::OracleDisagreement { .. } => "oracle",
    }
}

fn core<T>(stage: &'static str, r: cablebarrier::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Core(stage, e))
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = c.cart_mass {
        cfg.params.cart_mass = v;
    }
    if let Some(v) = c.bob_mass {
        cfg.params.bob_mass = v;
    }
    if let Some(v) = c.length {
        cfg.params.length = v;
    }
    if let Some(v) = c.gravity {
        cfg.params.gravity = v;
    }
    if let Some(v) = c.tol_abs {
        cfg.tol.abs = v;
    }
    if let Some(v) = c.tol_rel {
        cfg.tol.rel = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn build(cfg: &RunConfig) -> Result<Construction, Failure> {
    core("barrier", pipeline::run(cfg))
}

fn cmd_endpoints(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (report, eps) = core("endpoints", pipeline::endpoints(cfg))?;
    let in_range: Vec<_> = cfg.k_range().into_iter().flat_map(|k| eps.iter().map(move |tp| tp.translated(k))).collect();
    let csv = endpoints_csv(&cfg.params, &in_range);
    write(out, "endpoints.csv", &csv)?;
    print!("{}", report.log);
    print!("{csv}");
    let bad: Vec<String> = in_range.iter().filter(|tp| !validate_endpoint(&cfg.params, tp)).map(|tp| tp.label()).collect();
    if !bad.is_empty() {
        return Err(Failure::Verification(format!("end points off G0 or not tangent: {}", bad.join(", "))));
    }
    Ok(())
}

fn write_construction(c: &Construction, out: &Path) -> Result<(), Failure> {
    write(out, "run.cfg", &c.config.render())?;
    write(out, "endpoints.csv", &endpoints_csv(&c.config.params, &c.endpoints_in_range()))?;
    for arc in c.arcs_in_range() {
        write(out, &format!("arcs/{}.csv", file_stem(&arc.label())), &arc_csv(&arc))?;
    }
    write(out, "stopping_points.csv", &stopping_points_csv(&c.stopping_points, &c.arc_labels()))?;
    write(out, "model.json", &c.model.to_json())?;
    write(out, "barrier.svg", &svg::render(c))?;
    Ok(())
}

fn cmd_barrier(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let c = build(cfg)?;
    write_construction(&c, out)?;
    for arc in &c.arcs {
        let end = arc.samples.last().map(|s| s.state).unwrap_or(arc.source.state);
        println!(
            "arc {:<14} {:>5} samples  t0={:<10} end=({:.6}, {:.6})  {}",
            arc.label(),
            arc.len(),
            format!("{:.6}", -arc.duration()),
            end.theta1,
            end.theta2,
            arc.termination.label()
        );
    }
    let transversal = c.stopping_points.iter().filter(|s| s.transversal).count();
    println!("stopping points per period: {transversal}");
    for comp in &c.model.components {
        println!(
            "component {}: {} area={:.4} near ({:.4}, {:.4})",
            comp.id,
            if comp.bounded { "bounded" } else { "unbounded" },
            comp.area,
            comp.representative.theta1,
            comp.representative.theta2
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_stopping_points(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (_, _, raw, sps, _) = core("stopping-points", pipeline::barrier(cfg))?;
    let labels: Vec<String> = raw.iter().map(|a| a.label()).collect();
    write(out, "stopping_points.csv", &stopping_points_csv(&sps, &labels))?;
    for sp in sps.iter().filter(|s| s.transversal) {
        for k in cfg.k_range() {
            let loc = sp.location.shifted(std::f64::consts::TAU * k as f64);
            println!(
                "({}, {})  {} x {}[{:+}]  det={:.3e}",
                fmt_f64(loc.theta1),
                fmt_f64(loc.theta2),
                labels[sp.arc_a],
                labels[sp.arc_b],
                sp.shift_b,
                sp.determinant
            );
        }
    }
    Ok(())
}

fn cmd_query(cfg: &RunConfig, theta1: f64, theta2: f64, model: Option<&Path>) -> Result<(), Failure> {
    let m = match model {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            core("query", AdmissibleSetModel::from_json(&text))?
        }
        None => build(cfg)?.model,
    };
    let s = ReducedState::new(theta1, theta2);
    let v = core("query", m.membership(s))?;
    let component = m.component_of(s).map_or("-".to_string(), |k| k.to_string());
    println!("{} distance={:.6e} component={component}", v.tag.label(), v.distance_estimate);
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let c = build(cfg)?;
    let ocfg = OracleConfig { grid: cfg.oracle_grid, t_max: cfg.oracle_t_max, ..OracleConfig::default() };
    let report = core("oracle", membership_oracle(&cfg.params, &c.model, &ocfg))?;
    let mut csv = String::from("theta1,theta2,verdict,distance,oracle_admissible,policy\n");
    for pt in &report.points {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(pt.state.theta1),
            fmt_f64(pt.state.theta2),
            pt.verdict.label(),
            fmt_f64(pt.distance),
            pt.oracle_admissible,
            pt.policy.as_deref().unwrap_or("")
        ));
    }
    write(out, "oracle.csv", &csv)?;
    let semi = core("oracle", semipermeability_check(&cfg.params, &c.model, &c.arcs, 50, 20, 1e-3, 5.0, cfg.seed))?;
    println!(
        "grid {}x{}: {} agree, {} admissible but unconfirmed, {} disagreements (band {:.3})",
        ocfg.grid,
        ocfg.grid,
        report.agree,
        report.unconfirmed,
        report.disagreements.len(),
        report.band
    );
    println!("semi-permeability: {} trajectories, {} re-entries", semi.trajectories, semi.violations.len());
    if let Some(d) = report.disagreements.first() {
        let e = BarrierError::OracleDisagreement { count: report.disagreements.len(), theta1: d.state.theta1, theta2: d.state.theta2 };
        return Err(Failure::Disagreement(e.to_string()));
    }
    if let Some(v) = semi.violations.first() {
        return Err(Failure::Disagreement(format!(
            "{} trajectories re-entered the interior, first from ({}, {}) under {}",
            semi.violations.len(),
            v.start.theta1,
            v.start.theta2,
            v.policy
        )));
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let c = build(cfg)?;
    let path = write(out, "barrier.svg", &svg::render(&c))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.common)?;
    let out = cli.common.out.as_path();
    match cli.cmd {
        Cmd::Endpoints => cmd_endpoints(&cfg, out),
        Cmd::Barrier => cmd_barrier(&cfg, out),
        Cmd::StoppingPoints => cmd_stopping_points(&cfg, out),
        Cmd::Query { theta1, theta2, model } => cmd_query(&cfg, theta1, theta2, model.as_deref()),
        Cmd::Oracle => cmd_oracle(&cfg, out),
        Cmd::Plot => cmd_plot(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
