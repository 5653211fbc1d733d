//! The tilted gradient flow `ẋ_n = -h2(x_{n-1}, x_n) - h1(x_n, x_{n+1}) + F`:
//! integration, equilibria, pinned/sliding classification, depinning forces
//! and hull functions of sliding states.

pub(crate) mod classify;
mod depinning;
mod equilibrium;
pub(crate) mod integrator;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::model::TiltedEnergy;
use integrator::Stepper;

pub use classify::{classify, extract_hull, HullTable, Sliding, VelocityVerdict};
pub use depinning::{
    depinning_force, depinning_force_with, stable_equilibria, DepinningMethod, DepinningOptions,
    DepinningResult,
};
pub use equilibrium::{
    find_equilibrium, find_equilibrium_window, find_equilibrium_with, hessian_periodic,
    hessian_spectrum_periodic, window_hessian, Equilibrium, HessianSpectrum, NewtonOptions,
    WindowEquilibrium, DEGENERACY_TOL,
};

/// Step control and decision thresholds for flow computations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSettings {
    /// Initial time step.
    pub dt0: f64,
    /// Absolute local error tolerance per site and step.
    pub tol: f64,
    /// Largest time step.
    pub dt_max: f64,
    /// Time budget for one classification.
    pub t_max: f64,
    /// Velocity threshold below which a state counts as at rest.
    pub eq_tol: f64,
    /// Sup-norm threshold for the sliding recurrence.
    pub recur_tol: f64,
    /// How many times an undetermined classification may quadruple `t_max`.
    pub escalations: u32,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            dt0: 0.05,
            tol: 1e-10,
            dt_max: 10.0,
            t_max: 1e4,
            eq_tol: 1e-9,
            recur_tol: 1e-6,
            escalations: 3,
        }
    }
}

impl FlowSettings {
    /// Defaults with the time budget scaled as `1e4 / k` for coupling `k`.
    pub fn for_coupling(k: f64) -> Self {
        Self {
            t_max: 1e4 / k.max(1e-2),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt0, self.tol, self.dt_max, self.t_max, self.eq_tol, self.recur_tol];
        if positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("flow settings must be positive and finite: {self:?}")))
        }
    }
}

/// Velocity of every site of a periodic configuration.
pub fn rhs(x: &PeriodicConfiguration, e: &TiltedEnergy) -> Vec<f64> {
    let mut out = vec![0.0; x.q()];
    rhs_periodic_into(e, x.p(), x.values(), &mut out);
    out
}

/// Velocity of every stored site of a window; the neighbours outside the
/// window are clamped to the asymptotes.
pub fn rhs_window(w: &WindowConfiguration, e: &TiltedEnergy) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    rhs_window_into(e, w, w.values(), &mut out);
    out
}

/// `W_{p,q} = Σ_{n=0}^{q-1} h_F(x_n, x_{n+1})`.
pub fn energy(x: &PeriodicConfiguration, e: &TiltedEnergy) -> f64 {
    (0..x.q() as i64).map(|n| e.eval(x.at(n), x.at(n + 1)).h).sum()
}

pub(crate) fn rhs_periodic_into(e: &TiltedEnergy, p: i64, x: &[f64], out: &mut [f64]) {
    let q = x.len();
    // Bond b joins sites b and b+1; bond q-1 wraps to x_0 + p.
    let mut prev = e.eval(x[q - 1] - p as f64, x[0]);
    for n in 0..q {
        let next_x = if n + 1 < q { x[n + 1] } else { x[0] + p as f64 };
        let bond = e.eval(x[n], next_x);
        out[n] = -prev.h2 - bond.h1;
        prev = bond;
    }
}

pub(crate) fn rhs_window_into(e: &TiltedEnergy, w: &WindowConfiguration, x: &[f64], out: &mut [f64]) {
    let len = x.len();
    let l = w.l();
    let mut prev = e.eval(w.left_asym_at(l - 1), x[0]);
    for i in 0..len {
        let next_x = if i + 1 < len { x[i + 1] } else { w.right_asym_at(l + len as i64) };
        let bond = e.eval(x[i], next_x);
        out[i] = -prev.h2 - bond.h1;
        prev = bond;
    }
}

pub(crate) fn check_band_periodic(e: &TiltedEnergy, p: i64, x: &[f64]) -> Result<()> {
    let (lo, hi) = e.h.band();
    let q = x.len();
    for n in 0..q {
        let next = if n + 1 < q { x[n + 1] } else { x[0] + p as f64 };
        let d = next - x[n];
        if d < lo as f64 || d > hi as f64 || !d.is_finite() {
            return Err(Error::BandEscape { site: n as i64, spacing: d, lo, hi });
        }
    }
    Ok(())
}

pub(crate) fn check_band_window(e: &TiltedEnergy, w: &WindowConfiguration, x: &[f64]) -> Result<()> {
    let (lo, hi) = e.h.band();
    let l = w.l();
    let at = |n: i64| -> f64 {
        if n < l {
            w.left_asym_at(n)
        } else if n >= l + x.len() as i64 {
            w.right_asym_at(n)
        } else {
            x[(n - l) as usize]
        }
    };
    for n in (l - 1)..(l + x.len() as i64) {
        let d = at(n + 1) - at(n);
        if d < lo as f64 || d > hi as f64 || !d.is_finite() {
            return Err(Error::BandEscape { site: n, spacing: d, lo, hi });
        }
    }
    Ok(())
}

/// Samples of a periodic-state trajectory at the accepted steps.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub p: i64,
    pub q: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_config(&self) -> PeriodicConfiguration {
        PeriodicConfiguration::new(self.p, self.q, self.states.last().cloned().unwrap_or_default())
            .expect("trajectory states have length q")
    }

    pub fn config_at(&self, i: usize) -> PeriodicConfiguration {
        PeriodicConfiguration::new(self.p, self.q, self.states[i].clone()).expect("length q")
    }

    /// CSV with header `t,n,x`, one row per site and sample.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,n,x\n");
        for (t, x) in self.times.iter().zip(&self.states) {
            for (n, v) in x.iter().enumerate() {
                writeln!(s, "{t:.17e},{n},{v:.17e}").expect("write to string");
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Integrates a periodic state to `t_end`, sampling every accepted step and
/// ending exactly at `t_end`.
pub fn integrate(
    x0: &PeriodicConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    t_end: f64,
) -> Result<Trajectory> {
    settings.validate()?;
    if !(t_end >= 0.0) || t_end > settings.t_max {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must lie in [0, t_max = {}]",
            settings.t_max
        )));
    }
    let p = x0.p();
    check_band_periodic(e, p, x0.values())?;
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out),
        x0.values().to_vec(),
        settings.dt0,
        settings.tol,
        settings.dt_max,
    );
    let mut traj = Trajectory {
        p,
        q: x0.q(),
        times: vec![0.0],
        states: vec![x0.values().to_vec()],
    };
    while stepper.t < t_end {
        stepper.step()?;
        if stepper.t >= t_end {
            let last = stepper.exact_at(t_end);
            check_band_periodic(e, p, &last)?;
            traj.times.push(t_end);
            traj.states.push(last);
            break;
        }
        check_band_periodic(e, p, &stepper.x)?;
        traj.times.push(stepper.t);
        traj.states.push(stepper.x.clone());
    }
    Ok(traj)
}

/// Window trajectory with the asymptote-clamped boundary rule.
#[derive(Clone, Debug)]
pub struct WindowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<WindowConfiguration>,
}

/// Integrates a window to `t_end`, sampling every accepted step.
pub fn integrate_window(
    w0: &WindowConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    t_end: f64,
) -> Result<WindowTrajectory> {
    settings.validate()?;
    check_band_window(e, w0, w0.values())?;
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_window_into(e, w0, x, out),
        w0.values().to_vec(),
        settings.dt0,
        settings.tol,
        settings.dt_max,
    );
    let mut traj = WindowTrajectory {
        times: vec![0.0],
        states: vec![w0.clone()],
    };
    while stepper.t < t_end {
        stepper.step()?;
        let (t, x) = if stepper.t >= t_end {
            (t_end, stepper.exact_at(t_end))
        } else {
            (stepper.t, stepper.x.clone())
        };
        check_band_window(e, w0, &x)?;
        traj.times.push(t);
        traj.states.push(w0.with_values(x)?);
        if t >= t_end {
            break;
        }
    }
    Ok(traj)
}

/// Runs the flow until the largest velocity drops below `vtol` or `t_limit`
/// elapses; returns the final state and its largest velocity.
pub fn relax(
    x0: &PeriodicConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    vtol: f64,
    t_limit: f64,
) -> Result<(PeriodicConfiguration, f64)> {
    let p = x0.p();
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out),
        x0.values().to_vec(),
        settings.dt0,
        settings.tol.max(1e-9),
        settings.dt_max,
    );
    let mut vmax = crate::linalg::sup_norm(&stepper.fx);
    while vmax >= vtol && stepper.t < t_limit {
        stepper.step()?;
        check_band_periodic(e, p, &stepper.x)?;
        vmax = crate::linalg::sup_norm(&stepper.fx);
    }
    Ok((x0.with_values(stepper.x.clone())?, vmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let half = PeriodicConfiguration::uniform(0, 1, 0.5);
        assert!(rhs(&half, &fk(1.0, 0.0))[0].abs() < 1e-15);
        let top = PeriodicConfiguration::uniform(0, 1, 0.0);
        assert_eq!(rhs(&top, &fk(1.0, 0.0))[0], 0.0);
        let free = PeriodicConfiguration::new(0, 3, vec![0.1, 0.1, 0.1]).unwrap();
        for v in rhs(&free, &fk(0.0, 0.27)) {
            assert_eq!(v, 0.27);
        }
    }

    #[test]
    fn rhs_matches_energy_gradient() {
        let e = fk(0.8, 0.1);
        let x = PeriodicConfiguration::new(2, 3, vec![0.1, 0.77, 1.2]).unwrap();
        let v = rhs(&x, &e);
        let s = 1e-6;
        for i in 0..3 {
            let mut a = x.values().to_vec();
            let mut b = a.clone();
            a[i] += s;
            b[i] -= s;
            let ga = energy(&x.with_values(a).unwrap(), &e);
            let gb = energy(&x.with_values(b).unwrap(), &e);
            assert!((v[i] + (ga - gb) / (2.0 * s)).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_decreases_along_flow() {
        let e = fk(1.0, 0.0);
        let x0 = PeriodicConfiguration::new(1, 3, vec![0.05, 0.41, 0.58]).unwrap();
        let traj = integrate(&x0, &e, &FlowSettings::default(), 400.0).unwrap();
        let energies: Vec<f64> = (0..traj.times.len()).map(|i| energy(&traj.config_at(i), &e)).collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let v = rhs(&traj.final_config(), &e);
        assert!(crate::linalg::sup_norm(&v) < 1e-6);
        assert_eq!(*traj.times.last().unwrap(), 400.0);
    }

    #[test]
    fn band_escape_is_reported() {
        let h = make_builtin(&BuiltinSpec::StandardFk { k: 0.0 })
            .unwrap()
            .with_band((0, 1))
            .unwrap();
        let e = TiltedEnergy::new(h, 0.0).unwrap();
        let bad = PeriodicConfiguration::new(0, 2, vec![0.0, 2.0]).unwrap();
        assert!(matches!(
            integrate(&bad, &e, &FlowSettings::default(), 1.0),
            Err(Error::BandEscape { .. })
        ));
    }

    #[test]
    fn window_rhs_uses_clamped_neighbours() {
        let e = fk(1.0, 0.0);
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.5);
        let w = WindowConfiguration::from_fn(0, 2, lo, hi, |_| 0.5).unwrap();
        let v = rhs_window(&w, &e);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        // Last site is pulled up by the clamped right neighbour at 1.5.
        assert!((v[2] - 1.0).abs() < 1e-15);
    }
}
