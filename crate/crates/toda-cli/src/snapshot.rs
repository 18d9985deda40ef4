//! `evolve`: time integration and the snapshot file it writes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toda_core::circle_spectral::{LaurentSeries, LoopField};
use toda_core::lax_manifold::LoopLaxPoint;
use toda_core::toda_hierarchy::{evolve_with, EvolveOptions, HierarchyIndex, LoopContext};
use toda_core::C64;

use crate::config::LoadedPoint;
use crate::error::{CliError, CliResult};

/// Hamiltonians tracked when the input names none.
pub const DEFAULT_CONSERVED: &[&str] = &["u,0", "u,1", "v,0", "v,1", "-1,0", "-1,1", "0,0", "0,1", "1,0", "-2,1"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub index: String,
    pub initial: [f64; 2],
    #[serde(rename = "final")]
    pub last: [f64; 2],
    pub drift: f64,
}

/// Final point of a run: per x-node, the coefficients `c_{-N}..c_N` as
/// `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub format: String,
    pub n_modes: usize,
    pub x_modes: usize,
    pub flow: String,
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
    pub halvings: u32,
    pub structure_drift: f64,
    pub max_tail: f64,
    pub drift: Vec<DriftEntry>,
    pub lambda: Vec<Vec<[f64; 2]>>,
    pub lambdabar: Vec<Vec<[f64; 2]>>,
}

fn rows(f: &LoopField) -> Vec<Vec<[f64; 2]>> {
    f.slices().iter().map(|s| s.coeffs().iter().map(|c| [c.re, c.im]).collect()).collect()
}

fn field(rows: &[Vec<[f64; 2]>], n: usize, x_modes: usize, name: &str) -> CliResult<LoopField> {
    if rows.len() != x_modes {
        return Err(CliError::Config(format!("{name}: {} rows for x_modes = {x_modes}", rows.len())));
    }
    let slices = rows
        .iter()
        .map(|r| {
            if r.len() != 2 * n + 1 {
                return Err(CliError::Config(format!("{name}: row of {} coefficients for n_modes = {n}", r.len())));
            }
            Ok(LaurentSeries::from_coeffs(n, r.iter().map(|&[re, im]| C64::new(re, im)).collect()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LoopField::from_slices(slices)?)
}

impl Snapshot {
    pub const FORMAT: &'static str = "toda-snapshot";

    pub fn to_loop_point(&self) -> CliResult<LoopLaxPoint> {
        if self.n_modes < 4 {
            return Err(CliError::Config(format!("n_modes = {} < 4", self.n_modes)));
        }
        let l = field(&self.lambda, self.n_modes, self.x_modes, "lambda")?;
        let b = field(&self.lambdabar, self.n_modes, self.x_modes, "lambdabar")?;
        Ok(LoopLaxPoint::new(l, b)?)
    }

    pub fn conserved_indices(&self) -> Option<Vec<String>> {
        Some(self.drift.iter().map(|d| d.index.clone()).collect())
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().map(|d| d.drift).fold(0.0, f64::max)
    }
}

pub fn parse_index(s: &str) -> CliResult<HierarchyIndex> {
    s.parse().map_err(|e| CliError::Argument(format!("flow index {s:?}: {e}")))
}

fn hamiltonians(lp: &LoopLaxPoint, idx: &[HierarchyIndex]) -> CliResult<Vec<C64>> {
    let ctx = LoopContext::new(lp);
    Ok(idx.iter().map(|&i| ctx.hamiltonian(i)).collect::<Result<_, _>>()?)
}

pub fn run_evolve(input: &LoadedPoint, flow: &str, time: f64, dt: f64) -> CliResult<Snapshot> {
    let idx = parse_index(flow)?;
    if !(dt > 0.0 && dt.is_finite()) || !time.is_finite() {
        return Err(CliError::Argument(format!("need finite time and dt > 0, got time = {time}, dt = {dt}")));
    }
    let names: Vec<String> = match &input.conserved {
        Some(v) => v.clone(),
        None => DEFAULT_CONSERVED.iter().map(|s| s.to_string()).collect(),
    };
    let conserved = names.iter().map(|s| parse_index(s)).collect::<CliResult<Vec<_>>>()?;
    let lp = &input.point;
    lp.require_m1()?;
    let before = hamiltonians(lp, &conserved)?;
    let run = evolve_with(&[(idx, time)], lp, dt, &EvolveOptions::default())?;
    let after = hamiltonians(&run.point, &conserved)?;
    let drift = names
        .iter()
        .zip(before.iter().zip(&after))
        .map(|(name, (a, b))| DriftEntry {
            index: name.clone(),
            initial: [a.re, a.im],
            last: [b.re, b.im],
            drift: (b - a).norm(),
        })
        .collect();
    Ok(Snapshot {
        format: Snapshot::FORMAT.to_string(),
        n_modes: run.point.n_modes(),
        x_modes: run.point.x_modes(),
        flow: idx.to_string(),
        time,
        dt,
        steps: run.steps,
        halvings: run.halvings,
        structure_drift: run.structure_drift,
        max_tail: run.max_tail,
        drift,
        lambda: rows(run.point.lambda()),
        lambdabar: rows(run.point.lambdabar()),
    })
}

pub fn write(snap: &Snapshot, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(snap).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
