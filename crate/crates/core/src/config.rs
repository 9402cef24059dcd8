//! Run configuration as a flat `key=value` file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BarrierError, Result};
use crate::integrator::{IntegratorOptions, Window};
use crate::model::PendulumParams;
use crate::ode::Tolerance;
use crate::setassembly::Resolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: PendulumParams,
    pub tol: Tolerance,
    /// Longest backward integration time, seconds.
    pub max_time: f64,
    pub h_max: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub resolution: Resolution,
    pub oracle_grid: usize,
    pub oracle_t_max: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PendulumParams::heavy_cart(),
            tol: Tolerance::default(),
            max_time: 30.0,
            h_max: 0.05,
            k_min: -1,
            k_max: 1,
            resolution: Resolution::default(),
            oracle_grid: 60,
            oracle_t_max: 10.0,
            seed: 0,
        }
    }
}

const KEYS: [&str; 15] = [
    "M", "m", "l", "g", "tol_abs", "tol_rel", "max_time", "h_max", "k_min", "k_max", "grid_nx", "grid_ny", "oracle_grid", "oracle_t_max", "seed",
];

fn bad(msg: String) -> BarrierError {
    BarrierError::InvalidParams(msg)
}

impl RunConfig {
    pub fn k_range(&self) -> Vec<i32> {
        (self.k_min..=self.k_max).collect()
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        let mut o = IntegratorOptions::for_params(&self.params);
        o.tol = self.tol;
        o.max_time = self.max_time;
        o.h_max = self.h_max;
        o
    }

    pub fn window(&self) -> Window {
        Window::for_params(&self.params)
    }

    /// Checks everything that does not need integration.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let pos = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(bad(format!("{name} must be positive and finite, got {v}"))) };
        pos("tol_abs", self.tol.abs)?;
        pos("tol_rel", self.tol.rel)?;
        pos("max_time", self.max_time)?;
        pos("h_max", self.h_max)?;
        pos("oracle_t_max", self.oracle_t_max)?;
        if self.k_min > self.k_max {
            return Err(bad(format!("k_min {} exceeds k_max {}", self.k_min, self.k_max)));
        }
        if self.resolution.nx < 8 || self.resolution.ny < 8 {
            return Err(bad("grid resolution must be at least 8 per axis".into()));
        }
        if self.oracle_grid == 0 {
            return Err(bad("oracle_grid must be positive".into()));
        }
        Ok(())
    }

    /// Sets one key; unknown keys and malformed values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || value.trim().parse::<f64>().map_err(|_| bad(format!("{key}: not a number: {value:?}")));
        let i = || value.trim().parse::<i32>().map_err(|_| bad(format!("{key}: not an integer: {value:?}")));
        let u = || value.trim().parse::<u64>().map_err(|_| bad(format!("{key}: not a non-negative integer: {value:?}")));
        match key {
            "M" => self.params.cart_mass = f()?,
            "m" => self.params.bob_mass = f()?,
            "l" => self.params.length = f()?,
            "g" => self.params.gravity = f()?,
            "tol_abs" => self.tol.abs = f()?,
            "tol_rel" => self.tol.rel = f()?,
            "max_time" => self.max_time = f()?,
            "h_max" => self.h_max = f()?,
            "k_min" => self.k_min = i()?,
            "k_max" => self.k_max = i()?,
            "grid_nx" => self.resolution.nx = u()? as usize,
            "grid_ny" => self.resolution.ny = u()? as usize,
            "oracle_grid" => self.oracle_grid = u()? as usize,
            "oracle_t_max" => self.oracle_t_max = f()?,
            "seed" => self.seed = u()?,
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.get(key));
        }
        out
    }

    fn get(&self, key: &str) -> String {
        match key {
            "M" => self.params.cart_mass.to_string(),
            "m" => self.params.bob_mass.to_string(),
            "l" => self.params.length.to_string(),
            "g" => self.params.gravity.to_string(),
            "tol_abs" => self.tol.abs.to_string(),
            "tol_rel" => self.tol.rel.to_string(),
            "max_time" => self.max_time.to_string(),
            "h_max" => self.h_max.to_string(),
            "k_min" => self.k_min.to_string(),
            "k_max" => self.k_max.to_string(),
            "grid_nx" => self.resolution.nx.to_string(),
            "grid_ny" => self.resolution.ny.to_string(),
            "oracle_grid" => self.oracle_grid.to_string(),
            "oracle_t_max" => self.oracle_t_max.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("unknown key"),
        }
    }
}
