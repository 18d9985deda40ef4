//! Point configurations and the loader shared by all commands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toda_core::circle_spectral::{LaurentSeries, LoopField};
use toda_core::lax_manifold::{LaxPoint, LoopLaxPoint};
use toda_core::C64;

use crate::error::{CliError, CliResult};
use crate::snapshot::Snapshot;

pub const DEFAULT_X_MODES: usize = 64;
const MAX_N_MODES: usize = 4096;

/// One Laurent coefficient `c_k = re + i·im`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub k: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Lambda,
    Lambdabar,
}

/// Adds `(re + i·im) e^{imx}` to the coefficient `c_k` of the target symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub m: i32,
    pub k: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default)]
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub n_modes: usize,
    #[serde(default = "default_x_modes")]
    pub x_modes: usize,
    /// Coefficients of `λ`; the leading `z` is implied when `k = 1` is absent.
    pub lambda: Vec<Term>,
    pub lambdabar: Vec<Term>,
    #[serde(default)]
    pub x_modulation: Vec<Modulation>,
    /// Seed for random directions in the checks.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Hamiltonians whose drift `evolve` reports, as `"α̂,p"`.
    #[serde(default)]
    pub conserved: Option<Vec<String>>,
}

fn default_x_modes() -> usize {
    DEFAULT_X_MODES
}

/// A loaded point with the optional settings carried by its file.
#[derive(Clone, Debug)]
pub struct LoadedPoint {
    pub point: LoopLaxPoint,
    pub seed: Option<u64>,
    pub conserved: Option<Vec<String>>,
}

impl LoadedPoint {
    /// The slice at `x = 0`, used by the suites on `M0`.
    pub fn base(&self) -> LaxPoint {
        self.point.slice(0)
    }
}

fn c(t: &Term) -> C64 {
    C64::new(t.re, t.im)
}

impl PointConfig {
    fn check(&self) -> CliResult<()> {
        let n = self.n_modes;
        if !(4..=MAX_N_MODES).contains(&n) {
            return Err(CliError::Config(format!("n_modes = {n} outside [4, {MAX_N_MODES}]")));
        }
        let nn = n as i32;
        let in_band = |k: i32, what: &str| {
            if (-nn..=nn).contains(&k) {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what} mode k = {k} outside [-{n}, {n}]")))
            }
        };
        for t in &self.lambda {
            in_band(t.k, "lambda")?;
            if t.k >= 2 && c(t) != C64::new(0.0, 0.0) {
                return Err(CliError::Config(format!("lambda has a mode k = {} >= 2", t.k)));
            }
        }
        for t in &self.lambdabar {
            in_band(t.k, "lambdabar")?;
            if t.k < -1 && c(t) != C64::new(0.0, 0.0) {
                return Err(CliError::Config(format!("lambdabar has a mode k = {} < -1", t.k)));
            }
        }
        let half = (self.x_modes / 2) as i32;
        for md in &self.x_modulation {
            in_band(md.k, "x_modulation")?;
            if !(-half < md.m && md.m < half) {
                return Err(CliError::Config(format!("x_modulation m = {} not resolved by x_modes = {}", md.m, self.x_modes)));
            }
            let ok = match md.target {
                Target::Lambda => md.k <= 0,
                Target::Lambdabar => md.k >= -1,
            };
            if !ok {
                return Err(CliError::Config(format!("x_modulation of {:?} at k = {} breaks the symbol's form", md.target, md.k)));
            }
        }
        Ok(())
    }

    pub fn to_loop_point(&self) -> CliResult<LoopLaxPoint> {
        self.check()?;
        let n = self.n_modes;
        let mut lambda: Vec<(i32, C64)> = self.lambda.iter().map(|t| (t.k, c(t))).collect();
        if !self.lambda.iter().any(|t| t.k == 1) {
            lambda.push((1, C64::new(1.0, 0.0)));
        }
        let lambdabar: Vec<(i32, C64)> = self.lambdabar.iter().map(|t| (t.k, c(t))).collect();
        let slice = |x: f64, base: &[(i32, C64)], target: Target| {
            let mut terms = base.to_vec();
            for md in self.x_modulation.iter().filter(|md| md.target == target) {
                terms.push((md.k, C64::new(md.re, md.im) * C64::from_polar(1.0, f64::from(md.m) * x)));
            }
            LaurentSeries::from_terms(n, &terms)
        };
        let l = LoopField::from_fn(self.x_modes, |x| slice(x, &lambda, Target::Lambda))?;
        let b = LoopField::from_fn(self.x_modes, |x| slice(x, &lambdabar, Target::Lambdabar))?;
        Ok(LoopLaxPoint::new(l, b)?)
    }
}

/// Reads a point configuration or an `evolve` snapshot.
pub fn load(path: &Path) -> CliResult<LoadedPoint> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::parse(path, &e))?;
    if value.get("format").and_then(|f| f.as_str()) == Some(Snapshot::FORMAT) {
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| CliError::parse(path, &e))?;
        return Ok(LoadedPoint { point: snap.to_loop_point()?, seed: None, conserved: snap.conserved_indices() });
    }
    let cfg: PointConfig = serde_json::from_str(&text).map_err(|e| CliError::parse(path, &e))?;
    Ok(LoadedPoint { point: cfg.to_loop_point()?, seed: cfg.seed, conserved: cfg.conserved.clone() })
}
