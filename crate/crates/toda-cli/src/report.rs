//! Check reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use toda_core::lax_manifold::Membership;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub indices: Vec<String>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: f64,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, indices: Vec<String>, residual: f64, tolerance: f64, runtime_ms: f64) -> Self {
        CheckRecord { name: name.into(), indices, residual, tolerance, pass: residual.is_finite() && residual < tolerance, runtime_ms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    /// Quantities measured alongside the checks, not compared to a bound.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, f64>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(suite: &str, seed: u64, records: Vec<CheckRecord>, info: BTreeMap<String, f64>) -> Self {
        let pass = !records.is_empty() && records.iter().all(|r| r.pass);
        CheckReport { suite: suite.to_string(), seed, records, info, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub winding_lambda: Option<i32>,
    pub winding_lambdabar: Option<i32>,
    pub winding_w: Option<i32>,
    pub lambdabar_residue: f64,
    pub w_prime_ratio: f64,
    pub gamma_separation: f64,
    pub self_intersecting: bool,
    pub tail_health: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceMembership {
    pub x_node: usize,
    pub in_m1: bool,
    pub in_m0: bool,
    pub diagnostics: DiagnosticsReport,
}

/// Output of `validate`: membership of every x-slice and the conjunction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_modes: usize,
    pub x_modes: usize,
    #[serde(rename = "in_M1")]
    pub in_m1: bool,
    #[serde(rename = "in_M0")]
    pub in_m0: bool,
    pub slices: Vec<SliceMembership>,
}

impl ValidationReport {
    pub fn new(n_modes: usize, memberships: Vec<Membership>) -> Self {
        let slices: Vec<SliceMembership> = memberships
            .into_iter()
            .enumerate()
            .map(|(j, m)| {
                let d = m.diagnostics;
                SliceMembership {
                    x_node: j,
                    in_m1: m.in_m1,
                    in_m0: m.in_m0,
                    diagnostics: DiagnosticsReport {
                        winding_lambda: d.winding_lambda,
                        winding_lambdabar: d.winding_lambdabar,
                        winding_w: d.winding_w,
                        lambdabar_residue: d.lambdabar_residue,
                        w_prime_ratio: d.w_prime_ratio,
                        gamma_separation: d.gamma_separation,
                        self_intersecting: d.self_intersecting,
                        tail_health: d.tail_health,
                        notes: d.notes,
                    },
                }
            })
            .collect();
        ValidationReport {
            n_modes,
            x_modes: slices.len(),
            in_m1: slices.iter().all(|s| s.in_m1),
            in_m0: slices.iter().all(|s| s.in_m0),
            slices,
        }
    }
}
