//! δ-gluing of configurations and the mediant periodic states built from a
//! discommensuration.

use serde::Serialize;

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::flow::rhs_window;
use crate::linalg::sup_norm;
use crate::model::TiltedEnergy;

use super::heteroclinic::{interface_center, HeteroclinicSolution};

/// One piece of a gluing plan.
#[derive(Clone, Debug, Serialize)]
pub enum Piece {
    Periodic(PeriodicConfiguration),
    Window(WindowConfiguration),
}

impl Piece {
    fn at(&self, n: i64) -> f64 {
        match self {
            Piece::Periodic(x) => x.at(n),
            Piece::Window(w) => w.at(n),
        }
    }

    /// Left asymptote and its integer lift.
    fn left(&self) -> (PeriodicConfiguration, i64) {
        match self {
            Piece::Periodic(x) => (x.clone(), 0),
            Piece::Window(w) => (w.left_asym().clone(), w.shifts().0),
        }
    }

    fn right(&self) -> (PeriodicConfiguration, i64) {
        match self {
            Piece::Periodic(x) => (x.clone(), 0),
            Piece::Window(w) => (w.right_asym().clone(), w.shifts().1),
        }
    }
}

/// Pieces joined at cut sites: piece `i` supplies the sites
/// `cuts[i-1] < n ≤ cuts[i]` of the window `range`.
#[derive(Clone, Debug, Serialize)]
pub struct GluingPlan {
    pub pieces: Vec<Piece>,
    pub cuts: Vec<i64>,
    pub range: (i64, i64),
    /// Largest accepted mismatch at a cut.
    pub delta: f64,
}

/// Glued window with junction diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct GlueReport {
    pub window: WindowConfiguration,
    /// Measured mismatch `max |y_n - z_n|` over `n ∈ {n0, n0+1}` at all cuts.
    pub delta: f64,
    /// Largest `|ẋ|` at the junction sites.
    pub junction_velocity: f64,
    /// Largest `|ẋ|` of the pieces themselves at the junction sites.
    pub piece_velocity: f64,
    /// Mixed-derivative scale `max |h12|` on the junction bonds.
    pub coupling: f64,
    /// `junction_velocity ≤ coupling · delta + piece_velocity`.
    pub bound_holds: bool,
}

/// Concatenates the pieces and measures the junction defect.
pub fn glue(plan: &GluingPlan, e: &TiltedEnergy) -> Result<GlueReport> {
    let k = plan.pieces.len();
    if k == 0 || plan.cuts.len() + 1 != k {
        return Err(Error::InvalidParameter(format!(
            "{k} pieces need {} cuts, got {}",
            k.saturating_sub(1),
            plan.cuts.len()
        )));
    }
    if plan.cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("cuts must be strictly increasing".into()));
    }
    let (l, r) = plan.range;
    if plan.cuts.iter().any(|c| *c < l || *c >= r) {
        return Err(Error::InvalidParameter("cuts must lie inside the window".into()));
    }
    let piece_of = |n: i64| plan.cuts.iter().take_while(|c| n > **c).count();
    let values: Vec<f64> = (l..=r).map(|n| plan.pieces[piece_of(n)].at(n)).collect();
    let (left, left_shift) = plan.pieces[0].left();
    let (right, right_shift) = plan.pieces[k - 1].right();
    let window = WindowConfiguration::new(l, values, left, right, left_shift, right_shift)?;

    let mut delta: f64 = 0.0;
    for (i, &c) in plan.cuts.iter().enumerate() {
        let (y, z) = (&plan.pieces[i], &plan.pieces[i + 1]);
        for n in [c, c + 1] {
            delta = delta.max((y.at(n) - z.at(n)).abs());
        }
    }
    if delta > plan.delta {
        return Err(Error::InvalidParameter(format!(
            "cut mismatch {delta:.3e} exceeds the requested δ = {:.3e}",
            plan.delta
        )));
    }

    let v = rhs_window(&window, e);
    let mut junction_velocity: f64 = 0.0;
    let mut piece_velocity: f64 = 0.0;
    let mut coupling: f64 = 0.0;
    for (i, &c) in plan.cuts.iter().enumerate() {
        for (n, piece) in [(c, &plan.pieces[i]), (c + 1, &plan.pieces[i + 1])] {
            if (l..=r).contains(&n) {
                junction_velocity = junction_velocity.max(v[(n - l) as usize].abs());
                piece_velocity = piece_velocity.max(site_velocity(piece, n, e).abs());
            }
        }
        for n in [c - 1, c, c + 1] {
            for (a, b) in [
                (window.at(n), window.at(n + 1)),
                (plan.pieces[i].at(n), plan.pieces[i].at(n + 1)),
                (plan.pieces[i + 1].at(n), plan.pieces[i + 1].at(n + 1)),
                (plan.pieces[i].at(n), plan.pieces[i + 1].at(n + 1)),
                (plan.pieces[i + 1].at(n), plan.pieces[i].at(n + 1)),
            ] {
                coupling = coupling.max(e.h.eval(a, b).h12.abs());
            }
        }
    }
    Ok(GlueReport {
        bound_holds: junction_velocity <= coupling * delta + piece_velocity + 1e-14,
        window,
        delta,
        junction_velocity,
        piece_velocity,
        coupling,
    })
}

fn site_velocity(piece: &Piece, n: i64, e: &TiltedEnergy) -> f64 {
    let a = e.eval(piece.at(n - 1), piece.at(n));
    let b = e.eval(piece.at(n), piece.at(n + 1));
    -a.h2 - b.h1
}

/// Periodic state assembled from a discommensuration.
#[derive(Clone, Debug, Serialize)]
pub struct MediantConfig {
    pub config: PeriodicConfiguration,
    /// Largest `|ẋ_j|` of the assembled state.
    pub max_velocity: f64,
    /// Largest tail mismatch at the segment joins.
    pub delta: f64,
}

/// The type `(n p + p', n q + q')` state made of one segment of `n q + q'`
/// sites of `z` centred on its interface, continued periodically. `z` must
/// connect `y` to `T_{q' p'} y`.
pub fn build_mediant_config(
    y: &PeriodicConfiguration,
    z: &HeteroclinicSolution,
    p_prime: i64,
    q_prime: i64,
    n: usize,
    e: &TiltedEnergy,
) -> Result<MediantConfig> {
    build_mediant_config_multi(y, z, p_prime, q_prime, &[n], e)
}

/// Several segments of lengths `n_i q + q'`, giving type
/// `(Σ n_i p + m p', Σ n_i q + m q')` for `m` segments.
pub fn build_mediant_config_multi(
    y: &PeriodicConfiguration,
    z: &HeteroclinicSolution,
    p_prime: i64,
    q_prime: i64,
    ns: &[usize],
    e: &TiltedEnergy,
) -> Result<MediantConfig> {
    let (p, q) = (y.p(), y.q() as i64);
    if ns.is_empty() || q_prime < 1 {
        return Err(Error::InvalidParameter("need at least one segment and q' ≥ 1".into()));
    }
    let upper = y.translate(q_prime, p_prime);
    let w = &z.window;
    let tol = 1e-9;
    let far = w.r() + 1;
    if (w.left_asym_at(w.l() - 1) - y.at(w.l() - 1)).abs() > tol || (w.right_asym_at(far) - upper.at(far)).abs() > tol {
        return Err(Error::InvalidParameter(
            "discommensuration must connect y to T_{q' p'} y".into(),
        ));
    }
    let c = interface_center(w, y, &upper).round() as i64;
    let base = c - ((ns[0] as i64 * q + q_prime) / 2);
    let mut starts = Vec::with_capacity(ns.len());
    for &ni in ns {
        let len = ni as i64 * q + q_prime;
        let ideal = c - len / 2;
        starts.push(base + q * ((ideal - base) as f64 / q as f64).round() as i64);
    }
    starts.push(base);
    let mut values = Vec::new();
    let mut offset = 0.0;
    let mut delta: f64 = 0.0;
    for (i, &ni) in ns.iter().enumerate() {
        let len = ni as i64 * q + q_prime;
        let j0 = starts[i];
        for t in 0..len {
            values.push(w.at(j0 + t) + offset);
        }
        // Continuity at the next start: tail of this segment against the
        // lower tail of the next one.
        let end_value = w.at(j0 + len) + offset;
        let next_j = starts[i + 1];
        let shift_sites = next_j - j0;
        let next_offset = offset + (ni as i64 * p + p_prime) as f64 - ((shift_sites / q) * p) as f64;
        delta = delta.max((end_value - (w.at(next_j) + next_offset)).abs());
        offset = next_offset;
    }
    let big_p: i64 = ns.iter().map(|&ni| ni as i64 * p + p_prime).sum();
    let big_q = values.len();
    let config = PeriodicConfiguration::new(big_p, big_q, values)?;
    let v = crate::flow::rhs(&config, e);
    Ok(MediantConfig {
        max_velocity: sup_norm(&v),
        config,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{find_equilibrium_disc, DiscKind};
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64) -> TiltedEnergy {
        TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap())
    }

    fn kink() -> (PeriodicConfiguration, HeteroclinicSolution) {
        let y = PeriodicConfiguration::uniform(0, 1, 0.5);
        let z = find_equilibrium_disc(&y, &y.shifted(1.0), DiscKind::Advancing, &fk(1.0), 20).unwrap();
        (y, z)
    }

    #[test]
    fn self_gluing_has_no_defect() {
        let y = PeriodicConfiguration::new(1, 2, vec![0.1, 0.55]).unwrap();
        let plan = GluingPlan {
            pieces: vec![Piece::Periodic(y.clone()), Piece::Periodic(y.clone())],
            cuts: vec![3],
            range: (-5, 10),
            delta: 1e-12,
        };
        let report = glue(&plan, &fk(1.0)).unwrap();
        assert_eq!(report.delta, 0.0);
        assert!((report.junction_velocity - report.piece_velocity).abs() < 1e-14);
    }

    #[test]
    fn three_piece_gluing_is_bounded() {
        let (y, z) = kink();
        let plan = GluingPlan {
            pieces: vec![
                Piece::Periodic(y.clone()),
                Piece::Window(z.window.clone()),
                Piece::Periodic(y.shifted(1.0)),
            ],
            cuts: vec![-6, 6],
            range: (-12, 12),
            delta: 1e-2,
        };
        let report = glue(&plan, &fk(1.0)).unwrap();
        assert!(report.bound_holds, "{report:?}");
        assert!(report.delta > 0.0 && report.delta < 1e-2);
        let tight = GluingPlan { delta: 1e-9, ..plan };
        assert!(glue(&tight, &fk(1.0)).is_err());
    }

    #[test]
    fn mediant_seed_is_nearly_an_equilibrium() {
        let (y, z) = kink();
        let mut last = f64::INFINITY;
        for n in [4, 6, 8, 10] {
            let m = build_mediant_config(&y, &z, 1, 1, n, &fk(1.0)).unwrap();
            assert_eq!((m.config.p(), m.config.q()), (1, n + 1));
            assert!(m.max_velocity < last);
            last = m.max_velocity;
        }
        assert!(last < 1e-2, "{last}");
    }

    #[test]
    fn repeated_segments_give_multiple_mediants() {
        let (y, z) = kink();
        let m = build_mediant_config_multi(&y, &z, 1, 1, &[10, 10, 10], &fk(1.0)).unwrap();
        assert_eq!((m.config.p(), m.config.q()), (3, 33));
        assert!(m.max_velocity < 2e-2, "{}", m.max_velocity);
        assert!(m.config.is_birkhoff(None).birkhoff);
    }
}
