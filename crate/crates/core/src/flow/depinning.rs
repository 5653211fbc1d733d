//! Depinning force `F_d(p/q)`: the largest tilt at which type-`(p,q)`
//! equilibria exist, by bisection on flow verdicts or by continuation of the
//! equilibrium branch to its fold.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{gcd, PeriodicConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, sup_norm, symmetric_eigen};
use crate::model::{GeneratingFunction, TiltedEnergy};

use super::classify::{classify, VelocityVerdict};
use super::equilibrium::{find_equilibrium, hessian_periodic, Equilibrium};
use super::{energy, relax, rhs_periodic_into, FlowSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepinningMethod {
    Bisection,
    Continuation,
    #[serde(alias = "cross-validated")]
    CrossValidated,
}

impl std::str::FromStr for DepinningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bisection" => Ok(Self::Bisection),
            "continuation" => Ok(Self::Continuation),
            "cross_validated" | "cross-validated" => Ok(Self::CrossValidated),
            other => Err(Error::InvalidParameter(format!(
                "method must be bisection, continuation or cross-validated, got {other:?}"
            ))),
        }
    }
}

/// Controls for `depinning_force_with`.
#[derive(Clone, Debug)]
pub struct DepinningOptions {
    pub method: DepinningMethod,
    pub tol_f: f64,
    pub flow: FlowSettings,
}

impl DepinningOptions {
    pub fn new(method: DepinningMethod, tol_f: f64) -> Self {
        Self {
            method,
            tol_f,
            flow: FlowSettings::default(),
        }
    }
}

/// Bracket and estimate of `F_d(p/q)`.
#[derive(Clone, Debug, Serialize)]
pub struct DepinningResult {
    pub p: i64,
    pub q: usize,
    #[serde(rename = "F_lo")]
    pub f_lo: f64,
    #[serde(rename = "F_hi")]
    pub f_hi: f64,
    #[serde(rename = "F_d")]
    pub f_d: f64,
    pub method: DepinningMethod,
    /// Equilibrium at the fold of the branch (continuation modes).
    pub fold_state: Option<PeriodicConfiguration>,
    pub bisection_estimate: Option<f64>,
    pub continuation_estimate: Option<f64>,
    /// False when an undetermined verdict stopped the bisection early; the
    /// bracket is then the remaining uncertainty interval.
    pub converged: bool,
    pub notes: Vec<String>,
}

/// `F_d(p/q)` with default flow settings.
pub fn depinning_force(
    p: i64,
    q: usize,
    h: &GeneratingFunction,
    method: DepinningMethod,
    tol_f: f64,
) -> Result<DepinningResult> {
    depinning_force_with(p, q, h, &DepinningOptions::new(method, tol_f))
}

pub fn depinning_force_with(p: i64, q: usize, h: &GeneratingFunction, opts: &DepinningOptions) -> Result<DepinningResult> {
    if !(opts.tol_f > 0.0) {
        return Err(Error::InvalidParameter(format!("tol_F = {} must be positive", opts.tol_f)));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    opts.flow.validate()?;
    let minima = stable_equilibria(p, q, h, &opts.flow)?;
    match opts.method {
        DepinningMethod::Bisection => bisection(p, q, h, &minima, opts),
        DepinningMethod::Continuation => continuation(p, q, h, &minima, opts),
        DepinningMethod::CrossValidated => {
            let cont = continuation(p, q, h, &minima, opts)?;
            let bis = bisection(p, q, h, &minima, opts)?;
            let diff = (cont.f_d - bis.f_d).abs();
            if diff > 5.0 * opts.tol_f {
                return Err(Error::Consistency(format!(
                    "bisection F_d = {} and continuation F_d = {} differ by {diff:.3e} > 5 tol",
                    bis.f_d, cont.f_d
                )));
            }
            let mut notes = bis.notes;
            notes.extend(cont.notes);
            Ok(DepinningResult {
                p,
                q,
                f_lo: bis.f_lo.min(cont.f_d),
                f_hi: bis.f_hi.max(cont.f_d),
                f_d: cont.f_d,
                method: DepinningMethod::CrossValidated,
                fold_state: cont.fold_state,
                bisection_estimate: bis.bisection_estimate,
                continuation_estimate: cont.continuation_estimate,
                converged: bis.converged,
                notes,
            })
        }
    }
}

/// Distinct local minima of `W_{p,q}` at `F = 0` up to lattice translation,
/// found by relaxing eight uniformly offset starts. Degenerate critical
/// points with no negative direction are kept when nothing else is found.
pub fn stable_equilibria(p: i64, q: usize, h: &GeneratingFunction, flow: &FlowSettings) -> Result<Vec<Equilibrium>> {
    let e = TiltedEnergy::untilted(h.clone());
    let mut found: Vec<Equilibrium> = Vec::new();
    let mut degenerate: Vec<Equilibrium> = Vec::new();
    for i in 0..8 {
        let start = PeriodicConfiguration::uniform(p, q, 0.05 + i as f64 / 8.0);
        let (relaxed, _) = relax(&start, &e, flow, 1e-7, flow.t_max)?;
        let Ok(eq) = find_equilibrium(&relaxed, &e) else { continue };
        if eq.spectrum.morse_index != 0 {
            continue;
        }
        let bucket = if eq.spectrum.degenerate { &mut degenerate } else { &mut found };
        if bucket.iter().all(|o| o.config.orbit_distance(&eq.config) > 1e-7) {
            bucket.push(eq);
        }
    }
    if found.is_empty() {
        found = degenerate;
    }
    if found.is_empty() {
        return Err(Error::NoSolution(format!("no stable type ({p},{q}) equilibrium at F = 0")));
    }
    found.sort_by(|a, b| energy(&a.config, &e).total_cmp(&energy(&b.config, &e)));
    Ok(found)
}

fn bisection(
    p: i64,
    q: usize,
    h: &GeneratingFunction,
    minima: &[Equilibrium],
    opts: &DepinningOptions,
) -> Result<DepinningResult> {
    let mut notes = Vec::new();
    if gcd(p, q as i64) != 1 {
        notes.push(format!("type ({p},{q}) is not reduced"));
    }
    let base = TiltedEnergy::untilted(h.clone());
    let mut warm = minima[0].config.clone();
    let mut converged = true;

    // Classifies at `f`, quadrupling the time budget on undetermined runs.
    let verdict_at = |f: f64, start: &PeriodicConfiguration| -> VelocityVerdict {
        let e = base.with_force(f);
        let mut settings = opts.flow.clone();
        let mut v = classify(start, &e, &settings);
        let mut tries = 0;
        while matches!(v, VelocityVerdict::Undetermined { .. }) && tries < opts.flow.escalations {
            settings.t_max *= 4.0;
            v = classify(start, &e, &settings);
            tries += 1;
        }
        v
    };

    let mut lo = 0.0;
    let mut hi = f64::NAN;
    let mut f = (8.0 * opts.tol_f).max(1e-3);
    for _ in 0..60 {
        match verdict_at(f, &warm) {
            VelocityVerdict::Pinned(eq) => {
                lo = f;
                warm = eq.config;
                f *= 2.0;
            }
            VelocityVerdict::Sliding(_) => {
                hi = f;
                break;
            }
            VelocityVerdict::Undetermined { .. } => {
                return Err(Error::Undetermined(format!(
                    "classification undetermined at F = {f} while searching for a sliding force"
                )));
            }
        }
    }
    if hi.is_nan() {
        return Err(Error::BracketExhausted(format!("no sliding verdict up to F = {f}")));
    }
    // The smallest probe may already slide; check F = 0 pins.
    if lo == 0.0 && verdict_at(0.0, &warm).is_sliding() {
        hi = 0.0;
    }
    while hi - lo >= opts.tol_f {
        let mid = 0.5 * (lo + hi);
        match verdict_at(mid, &warm) {
            VelocityVerdict::Pinned(eq) => {
                lo = mid;
                warm = eq.config;
            }
            VelocityVerdict::Sliding(_) => hi = mid,
            VelocityVerdict::Undetermined { t, max_velocity, .. } => {
                notes.push(format!(
                    "undetermined at F = {mid} (t = {t:.3e}, max |ẋ| = {max_velocity:.3e}); bracket left open"
                ));
                converged = false;
                break;
            }
        }
    }
    let f_d = 0.5 * (lo + hi);
    Ok(DepinningResult {
        p,
        q,
        f_lo: lo,
        f_hi: hi,
        f_d,
        method: DepinningMethod::Bisection,
        fold_state: None,
        bisection_estimate: Some(f_d),
        continuation_estimate: None,
        converged,
        notes,
    })
}

fn continuation(
    p: i64,
    q: usize,
    h: &GeneratingFunction,
    minima: &[Equilibrium],
    opts: &DepinningOptions,
) -> Result<DepinningResult> {
    let mut best: Option<(f64, PeriodicConfiguration)> = None;
    let mut notes = Vec::new();
    for m in minima {
        let (f, x, note) = continue_to_fold(&m.config, h)?;
        notes.extend(note);
        if best.as_ref().map_or(true, |(bf, _)| f > *bf) {
            best = Some((f, x));
        }
    }
    let (f_d, fold) = best.expect("at least one minimum");
    let _ = opts;
    Ok(DepinningResult {
        p,
        q,
        f_lo: f_d,
        f_hi: f_d,
        f_d,
        method: DepinningMethod::Continuation,
        fold_state: Some(fold),
        bisection_estimate: None,
        continuation_estimate: Some(f_d),
        converged: true,
        notes,
    })
}

/// Branch point `z = (x, F)` with unit tangent.
struct BranchPoint {
    x: Vec<f64>,
    f: f64,
    tangent: Vec<f64>,
    lambda: f64,
}

/// Pseudo-arclength continuation of the equilibrium branch through `x0`
/// (an equilibrium at `F = 0`) until the smallest Hessian eigenvalue changes
/// sign; the crossing is then located by Illinois false position in the
/// arclength parameter.
fn continue_to_fold(x0: &PeriodicConfiguration, h: &GeneratingFunction) -> Result<(f64, PeriodicConfiguration, Option<String>)> {
    let q = x0.q();
    let p = x0.p();
    let e = TiltedEnergy::untilted(h.clone());
    let config = |x: &[f64]| x0.with_values(x.to_vec()).expect("length q");
    let min_eig = |x: &[f64]| symmetric_eigen(&hessian_periodic(&config(x), h)).0[0];
    let norm = |x: &[f64]| {
        let (v, _) = symmetric_eigen(&hessian_periodic(&config(x), h));
        v.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    };

    let lambda0 = min_eig(x0.values());
    if lambda0 <= 1e-8 * norm(x0.values()).max(1e-300) {
        // No restoring force: the branch is already at its fold.
        return Ok((0.0, x0.clone(), Some("degenerate minimum at F = 0; F_d = 0".into())));
    }

    let bordered = |x: &[f64], t: &[f64]| -> DMatrix<f64> {
        let hess = hessian_periodic(&config(x), h);
        let mut m = DMatrix::zeros(q + 1, q + 1);
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] = -hess[(i, j)];
            }
            m[(i, q)] = 1.0;
        }
        for j in 0..=q {
            m[(q, j)] = t[j];
        }
        m
    };
    let tangent_at = |x: &[f64], reference: &[f64]| -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; q + 1];
        rhs[q] = 1.0;
        let t = solve_dense(&bordered(x, reference), &rhs)
            .ok_or_else(|| Error::Newton("singular bordered system for the tangent".into()))?;
        let n = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if t.iter().zip(reference).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        Ok(t.iter().map(|v| sign * v / n).collect())
    };
    let residual = |x: &[f64], f: f64, out: &mut [f64]| {
        rhs_periodic_into(&e.with_force(f), p, x, out);
    };
    // Newton on G(z) = 0 with the arclength plane t·(z - z_pred) = 0.
    let correct = |pred: &[f64], t: &[f64]| -> Option<(Vec<f64>, f64)> {
        let mut z = pred.to_vec();
        let mut g = vec![0.0; q];
        for _ in 0..20 {
            residual(&z[..q], z[q], &mut g);
            let plane: f64 = z.iter().zip(pred).zip(t).map(|((a, b), c)| (a - b) * c).sum();
            let res = sup_norm(&g).max(plane.abs());
            if res < 1e-13 {
                return Some((z[..q].to_vec(), z[q]));
            }
            let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            rhs.push(-plane);
            let dz = solve_dense(&bordered(&z[..q], t), &rhs)?;
            for (a, d) in z.iter_mut().zip(&dz) {
                *a += d;
            }
            if sup_norm(&dz) < 1e-15 * (1.0 + sup_norm(&z)) {
                residual(&z[..q], z[q], &mut g);
                return (sup_norm(&g) < 1e-11).then(|| (z[..q].to_vec(), z[q]));
            }
        }
        None
    };

    let mut reference = vec![0.0; q + 1];
    reference[q] = 1.0;
    let mut cur = BranchPoint {
        x: x0.values().to_vec(),
        f: 0.0,
        tangent: tangent_at(x0.values(), &reference)?,
        lambda: lambda0,
    };
    let mut ds = 0.01;
    let ds_max = 0.05;
    for _ in 0..100_000 {
        let z: Vec<f64> = cur.x.iter().copied().chain([cur.f]).collect();
        let pred: Vec<f64> = z.iter().zip(&cur.tangent).map(|(a, t)| a + ds * t).collect();
        let Some((x, f)) = correct(&pred, &cur.tangent) else {
            ds *= 0.5;
            if ds < 1e-12 {
                return Err(Error::Newton("continuation step size underflow".into()));
            }
            continue;
        };
        let lambda = min_eig(&x);
        if lambda <= 0.0 {
            return locate_fold(&cur, ds, lambda, &correct, &min_eig, &config, &tangent_at);
        }
        let tangent = tangent_at(&x, &cur.tangent)?;
        cur = BranchPoint { x, f, tangent, lambda };
        ds = (ds * 1.5).min(ds_max);
        if !cur.f.is_finite() || cur.f.abs() > 1e6 {
            return Err(Error::NoSolution("continuation left any reasonable force range".into()));
        }
    }
    Err(Error::NoSolution("no fold found along the equilibrium branch".into()))
}

#[allow(clippy::type_complexity)]
fn locate_fold(
    cur: &BranchPoint,
    ds: f64,
    lambda_end: f64,
    correct: &dyn Fn(&[f64], &[f64]) -> Option<(Vec<f64>, f64)>,
    min_eig: &dyn Fn(&[f64]) -> f64,
    config: &dyn Fn(&[f64]) -> PeriodicConfiguration,
    tangent_at: &dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
) -> Result<(f64, PeriodicConfiguration, Option<String>)> {
    let z: Vec<f64> = cur.x.iter().copied().chain([cur.f]).collect();
    let at = |s: f64| -> Option<(Vec<f64>, f64, f64)> {
        let pred: Vec<f64> = z.iter().zip(&cur.tangent).map(|(a, t)| a + s * t).collect();
        let (x, f) = correct(&pred, &cur.tangent)?;
        let l = min_eig(&x);
        Some((x, f, l))
    };
    let (mut a, mut la) = (0.0, cur.lambda);
    let (mut b, mut lb) = (ds, lambda_end);
    let mut best = at(b).ok_or_else(|| Error::Newton("fold corrector failed".into()))?;
    let mut side = 0;
    for _ in 0..200 {
        let s = (a * lb - b * la) / (lb - la);
        let s = if s.is_finite() && s > a && s < b { s } else { 0.5 * (a + b) };
        let Some(point) = at(s) else { break };
        let ls = point.2;
        best = point;
        if ls.abs() < 1e-14 || (b - a) < 1e-15 {
            break;
        }
        if ls > 0.0 {
            a = s;
            la = ls;
            if side == -1 {
                lb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            lb = ls;
            if side == 1 {
                la *= 0.5;
            }
            side = 1;
        }
    }
    let (x, f, _) = best;
    let tangent = tangent_at(&x, &cur.tangent).ok();
    let note = tangent.and_then(|t| {
        let tf = t[t.len() - 1];
        (tf.abs() > 1e-3).then(|| format!("eigenvalue crossing at F = {f} is not a fold (dF/ds = {tf:.3e})"))
    });
    Ok((f, config(&x), note))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};
    use std::f64::consts::PI;

    fn fk(k: f64) -> GeneratingFunction {
        make_builtin(&BuiltinSpec::StandardFk { k }).unwrap()
    }

    #[test]
    fn continuation_hits_analytic_fold() {
        for k in [0.5, 1.0, 2.0] {
            let r = depinning_force(0, 1, &fk(k), DepinningMethod::Continuation, 1e-6).unwrap();
            assert!((r.f_d - k / (2.0 * PI)).abs() < 1e-9, "k={k}: {}", r.f_d);
        }
    }

    #[test]
    fn bisection_brackets_analytic_value() {
        let r = depinning_force(0, 1, &fk(1.0), DepinningMethod::Bisection, 1e-4).unwrap();
        let exact = 1.0 / (2.0 * PI);
        assert!(r.f_lo <= exact && exact <= r.f_hi, "{r:?}");
        assert!(r.f_hi - r.f_lo < 1e-4);
    }

    #[test]
    fn integer_spacing_does_not_matter() {
        for p in [1, 2] {
            let r = depinning_force(p, 1, &fk(1.3), DepinningMethod::Continuation, 1e-6).unwrap();
            assert!((r.f_d - 1.3 / (2.0 * PI)).abs() < 1e-9);
        }
    }

    #[test]
    fn free_chain_has_no_pinning() {
        for (p, q) in [(0, 1), (1, 2), (2, 5)] {
            let r = depinning_force(p, q, &fk(0.0), DepinningMethod::CrossValidated, 1e-4).unwrap();
            assert!(r.f_d.abs() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(depinning_force(0, 1, &fk(1.0), DepinningMethod::Bisection, 0.0).is_err());
    }
}
