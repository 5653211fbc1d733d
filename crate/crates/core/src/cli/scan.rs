//! Parameter scans: mean velocity over a force grid, or the depinning force
//! over the rationals of a Farey level. Grid points run in parallel, rows
//! come back in grid order, and a failing point is recorded in its row
//! instead of aborting the scan.

use std::fmt::Write as _;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::svg::write_xy_svg;
use super::{Artifact, VerbOutput};
use crate::config::{gcd, PeriodicConfiguration};
use crate::error::{Error, Result};
use crate::flow::{classify, depinning_force, DepinningMethod, FlowSettings, VelocityVerdict};
use crate::model::{GeneratingFunction, TiltedEnergy};

/// Largest number of grid points accepted.
const MAX_POINTS: usize = 100_000;

/// What the scan varies.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    /// Mean velocity of type `(p, q)` against the force.
    Force,
    /// `F_d(p/q)` for every reduced `p/q ∈ [0, 1]` with `q ≤ level`.
    Omega,
}

/// Grid description for the `scan` verb.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value = "force")]
    pub variable: ScanVariable,
    #[arg(long, default_value_t = 0)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub f_max: f64,
    #[arg(long, default_value_t = 0.02)]
    pub f_step: f64,
    /// Largest denominator of the rotation-number grid.
    #[arg(long, default_value_t = 4)]
    pub level: usize,
    /// Force tolerance of each depinning computation.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// One grid point of a scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub p: i64,
    pub q: usize,
    pub force: Option<f64>,
    /// Mean velocity (force scans) or `F_d` (rotation-number scans).
    pub value: Option<f64>,
    /// `ok`, `undetermined` or `failed`.
    pub status: String,
    pub error: Option<String>,
}

impl ScanRow {
    fn omega(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Force values `f_min + i f_step` up to `f_max`.
pub fn force_grid(a: &ScanArgs) -> Result<Vec<f64>> {
    if !(a.f_step > 0.0) || !(a.f_max >= a.f_min) || !a.f_min.is_finite() || !a.f_max.is_finite() {
        return Err(Error::Config(format!(
            "empty force grid: f_min = {}, f_max = {}, f_step = {}",
            a.f_min, a.f_max, a.f_step
        )));
    }
    let n = ((a.f_max - a.f_min) / a.f_step + 1e-9).floor() + 1.0;
    if n > MAX_POINTS as f64 {
        return Err(Error::Config(format!("force grid of {n} points exceeds {MAX_POINTS}")));
    }
    Ok((0..n as usize).map(|i| a.f_min + i as f64 * a.f_step).collect())
}

/// Reduced `p/q ∈ [0, 1]` with `1 ≤ q ≤ level`, increasing.
pub fn farey_grid(level: usize) -> Result<Vec<(i64, usize)>> {
    if level == 0 {
        return Err(Error::Config("empty rotation-number grid: level must be at least 1".into()));
    }
    if level > 64 {
        return Err(Error::Config(format!("Farey level {level} exceeds 64")));
    }
    let mut out: Vec<(i64, usize)> = Vec::new();
    for q in 1..=level {
        for p in 0..=q as i64 {
            if gcd(p, q as i64) == 1 {
                out.push((p, q));
            }
        }
    }
    out.sort_by(|a, b| (a.0 * b.1 as i64).cmp(&(b.0 * a.1 as i64)));
    Ok(out)
}

fn velocity_row(index: usize, a: &ScanArgs, h: &GeneratingFunction, force: f64) -> ScanRow {
    let base = ScanRow { index, p: a.p, q: a.q, force: Some(force), value: None, status: String::new(), error: None };
    let e = match TiltedEnergy::new(h.clone(), force) {
        Ok(e) => e,
        Err(err) => return ScanRow { status: "failed".into(), error: Some(err.to_string()), ..base },
    };
    match classify(&PeriodicConfiguration::uniform(a.p, a.q, 0.05), &e, &FlowSettings::default()) {
        VelocityVerdict::Undetermined { t, .. } => {
            ScanRow { status: "undetermined".into(), error: Some(format!("unresolved at t = {t:.3e}")), ..base }
        }
        v => ScanRow { status: "ok".into(), value: v.velocity(), ..base },
    }
}

fn depinning_row(index: usize, p: i64, q: usize, a: &ScanArgs, h: &GeneratingFunction) -> ScanRow {
    let base = ScanRow { index, p, q, force: None, value: None, status: String::new(), error: None };
    match depinning_force(p, q, h, DepinningMethod::Continuation, a.tol) {
        Ok(r) => ScanRow { status: "ok".into(), value: Some(r.f_d), ..base },
        Err(err) => ScanRow { status: "failed".into(), error: Some(err.to_string()), ..base },
    }
}

/// Evaluates every grid point in parallel.
pub fn scan_rows(a: &ScanArgs, h: &GeneratingFunction) -> Result<Vec<ScanRow>> {
    Ok(match a.variable {
        ScanVariable::Force => {
            let grid = force_grid(a)?;
            grid.par_iter().enumerate().map(|(i, &f)| velocity_row(i, a, h, f)).collect()
        }
        ScanVariable::Omega => {
            let grid = farey_grid(a.level)?;
            grid.par_iter().enumerate().map(|(i, &(p, q))| depinning_row(i, p, q, a, h)).collect()
        }
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn run_scan(a: &ScanArgs, h: &GeneratingFunction) -> Result<VerbOutput> {
    let rows = scan_rows(a, h)?;
    let mut csv = String::from("index,p,q,omega,force,value,status\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", r.index, r.p, r.q, r.omega(), cell(r.force), cell(r.value), r.status);
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let x = match a.variable {
                ScanVariable::Force => r.force?,
                ScanVariable::Omega => r.omega(),
            };
            Some((x, r.value?))
        })
        .collect();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let title = match a.variable {
        ScanVariable::Force => "mean velocity against force",
        ScanVariable::Omega => "F_d against rotation number",
    };
    Ok(VerbOutput {
        summary: format!("{} grid points, {failed} not resolved", rows.len()),
        result: json!({ "variable": a.variable, "rows": rows }),
        artifacts: vec![Artifact::csv("scan.csv", csv), Artifact::svg("scan.svg", write_xy_svg(title, &[points]))],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn farey_grid_is_sorted_and_reduced() {
        let g = farey_grid(4).unwrap();
        let expect = [(0, 1), (1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (1, 1)];
        assert_eq!(g, expect.iter().map(|&(p, q)| (p, q as usize)).collect::<Vec<_>>());
    }

    #[test]
    fn empty_grids_are_config_errors() {
        let mut a = ScanArgs::default();
        a.f_step = 0.0;
        assert_eq!(force_grid(&a).unwrap_err().exit_code(), 2);
        a.f_step = 0.1;
        a.f_max = -1.0;
        assert_eq!(force_grid(&a).unwrap_err().exit_code(), 2);
        assert_eq!(farey_grid(0).unwrap_err().exit_code(), 2);
        let a = ScanArgs { f_min: 0.0, f_max: 0.3, f_step: 0.1, ..ScanArgs::default() };
        assert_eq!(force_grid(&a).unwrap().len(), 4);
    }
}
