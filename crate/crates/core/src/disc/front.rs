//! Periodically sliding discommensurations on a co-moving window.

use serde::Serialize;

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::Result;
use crate::flow::integrator::Stepper;
use crate::flow::classify::converged_recurrence;
use crate::flow::{check_band_window, rhs_window_into, FlowSettings};
use crate::linalg::sup_norm;
use crate::model::TiltedEnergy;

use super::heteroclinic::tanh_guess;
use super::{check_gap, DiscKind};

/// A front with `x(t0 + T) = T_{shift} x(t0)` on the window.
#[derive(Clone, Debug, Serialize)]
pub struct SlidingFront {
    pub kind: DiscKind,
    pub period: f64,
    /// `-1/T` when the profile moves toward lower site indices, `+1/T`
    /// otherwise.
    pub velocity: f64,
    /// `(q0, p0)` with `x(t + T) = T_{q0 p0} x(t)`.
    pub shift: (i64, i64),
    /// Sup-norm recurrence defect on the window interior.
    pub recurrence_error: f64,
    /// Time of the first of the two crossings used for the recurrence.
    pub t0: f64,
    /// Window states over one period, times measured from `t0`.
    pub snapshots: Vec<(f64, WindowConfiguration)>,
    pub half_width: i64,
}

/// Outcome of a front search.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FrontVerdict {
    Sliding(SlidingFront),
    Undetermined {
        t: f64,
        /// Net interface displacement in sites (positive toward lower indices).
        displacement: f64,
        max_velocity: f64,
        /// The window came to rest.
        pinned: bool,
        last_recurrence_error: Option<f64>,
    },
}

impl FrontVerdict {
    pub fn sliding(&self) -> Option<&SlidingFront> {
        match self {
            Self::Sliding(s) => Some(s),
            Self::Undetermined { .. } => None,
        }
    }
}

const SNAPSHOTS: usize = 32;

/// Sliding front between `xm ≪ xp` on a window of half-width `24 q`.
pub fn find_sliding_disc(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    kind: DiscKind,
    e: &TiltedEnergy,
    settings: &FlowSettings,
) -> Result<FrontVerdict> {
    find_sliding_disc_with(xm, xp, kind, e, settings, 24 * xm.q() as i64)
}

/// Integrates a front with asymptote-clamped ends. Whenever the interface
/// drifts `q` sites from the window centre the content is relabelled by
/// `T_{q p}^{±1}`, which leaves both asymptotes unchanged. The lab-frame
/// interface position is tracked through the normalised mass of the
/// profile; successive crossings of levels spaced by `q` give `T`, and the
/// two crossing states, aligned by the relabel count, give the recurrence
/// defect.
pub fn find_sliding_disc_with(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    kind: DiscKind,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    half_width: i64,
) -> Result<FrontVerdict> {
    check_gap(xm, xp)?;
    settings.validate()?;
    match kind {
        DiscKind::Advancing => advancing(xm, xp, e, settings, half_width, DiscKind::Advancing),
        DiscKind::Retreating => {
            let v = advancing(&xm.reflect(), &xp.reflect(), &e.reversed(), settings, half_width, DiscKind::Retreating)?;
            Ok(match v {
                FrontVerdict::Sliding(s) => FrontVerdict::Sliding(SlidingFront {
                    velocity: -s.velocity,
                    shift: (-s.shift.0, s.shift.1),
                    snapshots: s.snapshots.into_iter().map(|(t, w)| (t, w.reflect())).collect(),
                    ..s
                }),
                FrontVerdict::Undetermined {
                    t,
                    displacement,
                    max_velocity,
                    pinned,
                    last_recurrence_error,
                } => FrontVerdict::Undetermined {
                    t,
                    displacement: -displacement,
                    max_velocity,
                    pinned,
                    last_recurrence_error,
                },
            })
        }
    }
}

struct Crossing {
    t: f64,
    x: Vec<f64>,
    net: i64,
}

fn advancing(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    half_width: i64,
    kind: DiscKind,
) -> Result<FrontVerdict> {
    let q = xm.q() as i64;
    let p = xm.p();
    let qf = q as f64;
    let frame = tanh_guess(xm, xp, half_width, 0.0)?;
    let l = frame.l();
    let len = frame.len();
    let lower: Vec<f64> = (0..len as i64).map(|i| xm.at(l + i)).collect();
    let gap: Vec<f64> = (0..len as i64).map(|i| xp.at(l + i) - xm.at(l + i)).collect();
    let mass = |x: &[f64]| -> f64 { x.iter().zip(&lower).zip(&gap).map(|((v, a), g)| (v - a) / g).sum() };

    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_window_into(e, &frame, x, out),
        frame.values().to_vec(),
        settings.dt0,
        settings.tol,
        settings.dt_max,
    );
    let mut net: i64 = 0;
    let m0 = mass(&stepper.x);
    let mut up = m0 + 0.5 * qf;
    let mut down = m0 - 0.5 * qf;
    let mut dir: i64 = 0;
    let mut last: Option<Crossing> = None;
    let mut last_err = None;
    let mut vmax = sup_norm(&stepper.fx);

    while stepper.t < settings.t_max {
        stepper.set_dt_max(settings.dt_max.min(0.2 / vmax.max(1e-300)));
        stepper.step()?;
        check_band_window(e, &frame, &stepper.x)?;
        vmax = sup_norm(&stepper.fx);
        if vmax < settings.eq_tol {
            return Ok(FrontVerdict::Undetermined {
                t: stepper.t,
                displacement: mass(&stepper.x) + qf * net as f64 - m0,
                max_velocity: vmax,
                pinned: true,
                last_recurrence_error: last_err,
            });
        }

        let shift = qf * net as f64;
        let m_prev = mass(&stepper.x_prev) + shift;
        let m_now = mass(&stepper.x) + shift;
        let crossed = if dir >= 0 && m_prev < up && m_now >= up {
            Some((1, up))
        } else if dir <= 0 && m_prev > down && m_now <= down {
            Some((-1, down))
        } else {
            None
        };
        if let Some((d, level)) = crossed {
            let (t, x) = stepper.locate_level(|x| mass(x) + shift, level);
            let here = Crossing { t, x, net };
            if let Some(prev) = &last {
                let k = here.net - prev.net - d;
                let aligned = frame.with_values(prev.x.clone())?.relabel(k * q, k * p);
                let skip = (k.unsigned_abs() as usize) * q as usize + 1;
                let err = here
                    .x
                    .iter()
                    .zip(aligned.values())
                    .skip(skip)
                    .take(len.saturating_sub(2 * skip))
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                let settled = converged_recurrence(err, last_err, settings.recur_tol);
                last_err = Some(err);
                if settled {
                    let period = here.t - prev.t;
                    let snapshots = sample_front(&frame, e, settings, &prev.x, period)?;
                    return Ok(FrontVerdict::Sliding(SlidingFront {
                        kind,
                        period,
                        velocity: -(d as f64) / period,
                        shift: (-d * q, -d * p),
                        recurrence_error: err,
                        t0: prev.t,
                        snapshots,
                        half_width,
                    }));
                }
            }
            last = Some(here);
            dir = d;
            if d > 0 {
                up += qf;
            } else {
                down -= qf;
            }
        }

        // Re-centre the interface in the window.
        let center = frame.r() as f64 + 0.5 - mass(&stepper.x);
        let k = if center < -qf {
            1
        } else if center > qf {
            -1
        } else {
            0
        };
        if k != 0 {
            let moved = frame.with_values(stepper.x.clone())?.relabel(k * q, k * p);
            net += k;
            let t = stepper.t;
            stepper.reset(t, moved.values().to_vec());
        }
    }
    Ok(FrontVerdict::Undetermined {
        t: stepper.t,
        displacement: mass(&stepper.x) + qf * net as f64 - m0,
        max_velocity: vmax,
        pinned: false,
        last_recurrence_error: last_err,
    })
}

fn sample_front(
    frame: &WindowConfiguration,
    e: &TiltedEnergy,
    settings: &FlowSettings,
    start: &[f64],
    period: f64,
) -> Result<Vec<(f64, WindowConfiguration)>> {
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_window_into(e, frame, x, out),
        start.to_vec(),
        settings.dt0,
        settings.tol,
        settings.dt_max.min(period / SNAPSHOTS as f64),
    );
    let mut out = vec![(0.0, frame.with_values(start.to_vec())?)];
    for i in 1..=SNAPSHOTS {
        let target = period * i as f64 / SNAPSHOTS as f64;
        while stepper.t < target {
            stepper.step()?;
        }
        out.push((target, frame.with_values(stepper.exact_at(target))?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::find_equilibrium;
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    fn minimum(e: &TiltedEnergy) -> PeriodicConfiguration {
        find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.45), e).unwrap().config
    }

    #[test]
    fn driven_kink_slides_toward_lower_indices() {
        let e = fk(1.0, 0.08);
        let lo = minimum(&e);
        let hi = lo.shifted(1.0);
        let v = find_sliding_disc(&lo, &hi, DiscKind::Advancing, &e, &FlowSettings::default()).unwrap();
        let s = v.sliding().unwrap_or_else(|| panic!("{v:?}"));
        assert!(s.period > 0.0 && (s.velocity + 1.0 / s.period).abs() < 1e-15);
        assert!(s.recurrence_error < 1e-6);
        assert_eq!(s.shift, (-1, 0));
    }

    #[test]
    fn retreating_front_moves_the_other_way() {
        let e = fk(1.0, 0.08);
        let lo = minimum(&e);
        let hi = lo.shifted(1.0);
        let v = find_sliding_disc(&lo, &hi, DiscKind::Retreating, &e, &FlowSettings::default()).unwrap();
        let s = v.sliding().unwrap_or_else(|| panic!("{v:?}"));
        assert!(s.velocity > 0.0 && s.recurrence_error < 1e-6);
        assert_eq!(s.shift, (1, 0));
    }

    #[test]
    fn untilted_kink_is_pinned() {
        let e = fk(1.0, 0.0);
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = lo.shifted(1.0);
        let v = find_sliding_disc(&lo, &hi, DiscKind::Advancing, &e, &FlowSettings::default()).unwrap();
        match v {
            FrontVerdict::Undetermined { pinned, displacement, .. } => {
                assert!(pinned);
                assert!(displacement.abs() < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
