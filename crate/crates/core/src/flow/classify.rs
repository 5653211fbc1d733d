//! Long-time classification of periodic states into pinned and sliding, and
//! hull-function tables of sliding states.

use serde::Serialize;

use crate::config::PeriodicConfiguration;
use crate::linalg::sup_norm;
use crate::model::TiltedEnergy;

use super::equilibrium::{find_equilibrium, Equilibrium};
use super::integrator::Stepper;
use super::{check_band_periodic, rhs_periodic_into, FlowSettings};

/// A time-periodic sliding solution `x(t0 + T) = x(t0) + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct Sliding {
    pub p: i64,
    pub q: usize,
    /// Period `T`.
    pub period: f64,
    /// Average velocity `1 / T`.
    pub velocity: f64,
    /// Time at which the recurrence was measured.
    pub t0: f64,
    /// `‖x(t0 + T) - x(t0) - 1‖∞`.
    pub recurrence_error: f64,
    /// Samples `(t - t0, x(t))` uniformly over one period, endpoints included.
    pub samples: Vec<(f64, Vec<f64>)>,
}

/// Outcome of a classification run.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum VelocityVerdict {
    Pinned(Equilibrium),
    Sliding(Sliding),
    Undetermined {
        t: f64,
        max_velocity: f64,
        displacement: f64,
        last_recurrence_error: Option<f64>,
    },
}

impl VelocityVerdict {
    pub fn is_pinned(&self) -> bool {
        matches!(self, Self::Pinned(_))
    }

    pub fn is_sliding(&self) -> bool {
        matches!(self, Self::Sliding(_))
    }

    /// Average velocity: zero when pinned, `1/T` when sliding.
    pub fn velocity(&self) -> Option<f64> {
        match self {
            Self::Pinned(_) => Some(0.0),
            Self::Sliding(s) => Some(s.velocity),
            Self::Undetermined { .. } => None,
        }
    }
}

/// A recurrence defect below `recur_tol` is accepted once the transient has
/// died out: either it is far below the threshold or it stopped shrinking
/// from one period to the next.
pub(crate) fn converged_recurrence(err: f64, previous: Option<f64>, recur_tol: f64) -> bool {
    err < recur_tol && (err < 1e-2 * recur_tol || previous.is_some_and(|p| err > 0.5 * p))
}

const HULL_SAMPLES: usize = 64;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Integrates until the state comes to rest (pinned, refined by Newton) or
/// the mean position advances by one with `x(t + T) = x(t) + 1` (sliding).
///
/// Sliding is detected at successive crossings of the mean position through
/// levels spaced by one; the crossing states are located to integration
/// accuracy, so consecutive crossings give `T` and the recurrence error.
pub fn classify(x0: &PeriodicConfiguration, e: &TiltedEnergy, settings: &FlowSettings) -> VelocityVerdict {
    match classify_inner(x0, e, settings) {
        Ok(v) => v,
        Err(_) => VelocityVerdict::Undetermined {
            t: f64::NAN,
            max_velocity: f64::NAN,
            displacement: f64::NAN,
            last_recurrence_error: None,
        },
    }
}

fn classify_inner(
    x0: &PeriodicConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
) -> crate::Result<VelocityVerdict> {
    settings.validate()?;
    let p = x0.p();
    let rhs = |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out);
    let mut stepper = Stepper::new(rhs, x0.values().to_vec(), settings.dt0, settings.tol, settings.dt_max);
    let m0 = mean(x0.values());
    let mut next_level = m0 + 0.5;
    let mut last_crossing: Option<(f64, Vec<f64>)> = None;
    let mut last_recurrence = None;
    let mut next_newton = 0.0;
    let mut vmax = sup_norm(&stepper.fx);
    let try_newton = |x: &[f64]| -> Option<Equilibrium> {
        let start = x0.with_values(x.to_vec()).ok()?;
        let eq = find_equilibrium(&start, e).ok()?;
        (eq.config.distance(&start) < 0.25 && sup_norm(&super::rhs(&eq.config, e)) < settings.eq_tol)
            .then_some(eq)
    };
    if vmax < settings.eq_tol {
        if let Some(eq) = try_newton(&stepper.x) {
            return Ok(VelocityVerdict::Pinned(eq));
        }
    }
    while stepper.t < settings.t_max {
        // Keep the mean advance per step well below one level.
        stepper.set_dt_max(settings.dt_max.min(0.2 / vmax.max(1e-300)));
        stepper.step()?;
        check_band_periodic(e, p, &stepper.x)?;
        vmax = sup_norm(&stepper.fx);

        let m_prev = mean(&stepper.x_prev);
        let m_now = mean(&stepper.x);
        if m_prev < next_level && m_now >= next_level {
            let (tc, xc) = stepper.locate_level(mean, next_level);
            if let Some((tp, xp)) = &last_crossing {
                let err = xc
                    .iter()
                    .zip(xp)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b - 1.0).abs()));
                let settled = converged_recurrence(err, last_recurrence, settings.recur_tol);
                last_recurrence = Some(err);
                if settled {
                    let period = tc - tp;
                    let samples = sample_period(x0, e, settings, xp, period)?;
                    return Ok(VelocityVerdict::Sliding(Sliding {
                        p,
                        q: x0.q(),
                        period,
                        velocity: 1.0 / period,
                        t0: *tp,
                        recurrence_error: err,
                        samples,
                    }));
                }
            }
            last_crossing = Some((tc, xc));
            next_level += 1.0;
        } else if m_now < next_level - 2.0 {
            // Receding states are never sliding in the positive direction.
            next_level -= 1.0;
            last_crossing = None;
        }

        let at_rest = vmax < settings.eq_tol;
        if at_rest || (vmax < 1e-4 && stepper.t >= next_newton) {
            if let Some(eq) = try_newton(&stepper.x) {
                return Ok(VelocityVerdict::Pinned(eq));
            }
            next_newton = stepper.t + stepper.t.max(1.0);
        }
    }
    Ok(VelocityVerdict::Undetermined {
        t: stepper.t,
        max_velocity: vmax,
        displacement: mean(&stepper.x) - m0,
        last_recurrence_error: last_recurrence,
    })
}

fn sample_period(
    x0: &PeriodicConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    start: &[f64],
    period: f64,
) -> crate::Result<Vec<(f64, Vec<f64>)>> {
    let p = x0.p();
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out),
        start.to_vec(),
        settings.dt0,
        settings.tol,
        settings.dt_max.min(period / HULL_SAMPLES as f64),
    );
    let mut out = vec![(0.0, start.to_vec())];
    for i in 1..=HULL_SAMPLES {
        let target = period * i as f64 / HULL_SAMPLES as f64;
        while stepper.t < target {
            stepper.step()?;
        }
        out.push((target, stepper.exact_at(target)));
    }
    Ok(out)
}

/// Sampled dynamical hull function `x_n(t) = X(nω + vt + α0)`.
#[derive(Clone, Debug, Serialize)]
pub struct HullTable {
    /// `(α mod 1, X(α))` sorted by phase.
    pub rows: Vec<(f64, f64)>,
    /// Largest decrease between consecutive sorted values; at most a few
    /// `recur_tol` for a monotone hull.
    pub max_decrease: f64,
    /// `|X(α + 1) - X(α) - 1|` estimated from the sample at phase zero and
    /// the sample completing one period.
    pub wrap_error: f64,
    pub monotone: bool,
}

/// Builds the hull table of a sliding state with `ω = p / q`: the sample of
/// site `n` at time `t` sits at phase `nω + vt`, and its value is shifted by
/// the integer part of the phase so that `X(α + 1) = X(α) + 1`.
pub fn extract_hull(sliding: &Sliding, recur_tol: f64) -> HullTable {
    let omega = sliding.p as f64 / sliding.q as f64;
    let mut rows = Vec::new();
    let last = sliding.samples.len() - 1;
    for (t, x) in &sliding.samples[..last] {
        for (n, value) in x.iter().enumerate() {
            let phase = n as f64 * omega + sliding.velocity * t;
            let shift = phase.floor();
            rows.push((phase - shift, value - shift));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let max_decrease = rows.windows(2).fold(0.0_f64, |m, w| m.max(w[0].1 - w[1].1));
    let (_, first) = &sliding.samples[0];
    let (_, end) = &sliding.samples[last];
    let wrap_error = (end[0] - first[0] - 1.0).abs();
    HullTable {
        monotone: max_decrease <= 10.0 * recur_tol,
        rows,
        max_decrease,
        wrap_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    #[test]
    fn below_threshold_is_pinned() {
        let v = classify(&PeriodicConfiguration::uniform(0, 1, 0.3), &fk(1.0, 0.1), &FlowSettings::default());
        assert!(v.is_pinned(), "{v:?}");
    }

    #[test]
    fn above_threshold_slides() {
        let v = classify(&PeriodicConfiguration::uniform(0, 1, 0.3), &fk(1.0, 0.2), &FlowSettings::default());
        let VelocityVerdict::Sliding(s) = v else { panic!("{v:?}") };
        assert!(s.velocity > 0.0 && s.recurrence_error < 1e-6);
        // The single-site flow ẋ = F - a sin 2πx has period 1 / sqrt(F² - a²).
        let (k, f) = (1.0_f64, 0.2_f64);
        let a = k / (2.0 * std::f64::consts::PI);
        let t_exact = 1.0 / (f * f - a * a).sqrt();
        assert!((s.period - t_exact).abs() < 1e-6 * t_exact, "{} vs {}", s.period, t_exact);
    }

    #[test]
    fn free_chain_slides_at_force() {
        let x0 = PeriodicConfiguration::new(1, 3, vec![0.0, 0.3, 0.7]).unwrap();
        let v = classify(&x0, &fk(0.0, 0.37), &FlowSettings::default());
        let VelocityVerdict::Sliding(s) = v else { panic!("{v:?}") };
        assert!((s.velocity - 0.37).abs() < 1e-9);
    }

    #[test]
    fn free_chain_hull_is_linear() {
        let x0 = PeriodicConfiguration::new(1, 2, vec![0.1, 0.6]).unwrap();
        let VelocityVerdict::Sliding(s) = classify(&x0, &fk(0.0, 0.2), &FlowSettings::default()) else {
            panic!()
        };
        let hull = extract_hull(&s, 1e-6);
        assert!(hull.monotone && hull.wrap_error < 1e-5);
        let offset = hull.rows[0].1 - hull.rows[0].0;
        for (a, x) in &hull.rows {
            assert!((x - a - offset).abs() < 1e-6, "{a} {x}");
        }
    }

    #[test]
    fn standard_hull_is_monotone() {
        let VelocityVerdict::Sliding(s) =
            classify(&PeriodicConfiguration::uniform(0, 1, 0.5), &fk(1.0, 0.3), &FlowSettings::default())
        else {
            panic!()
        };
        let hull = extract_hull(&s, 1e-6);
        assert!(hull.monotone, "{}", hull.max_decrease);
        assert!(hull.wrap_error < 1e-5);
    }
}
