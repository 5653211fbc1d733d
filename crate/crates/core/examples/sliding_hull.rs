//! Velocity verdict above the depinning force and the hull function of the
//! resulting sliding state.

use anyhow::Result;
use depinn::config::PeriodicConfiguration;
use depinn::flow::{classify, extract_hull, FlowSettings, VelocityVerdict};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let h = make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?;
    let settings = FlowSettings::default();
    for force in [0.01, 0.2] {
        let e = TiltedEnergy::new(h.clone(), force)?;
        match classify(&PeriodicConfiguration::uniform(1, 2, 0.05), &e, &settings) {
            VelocityVerdict::Pinned(eq) => println!("F = {force}: pinned, residual {:.2e}", eq.residual),
            VelocityVerdict::Sliding(s) => {
                let hull = extract_hull(&s, settings.recur_tol);
                println!(
                    "F = {force}: sliding, v = {:.10}, T = {:.6}, recurrence {:.2e}",
                    s.velocity, s.period, s.recurrence_error
                );
                println!(
                    "  hull: {} samples, max decrease {:.2e}, wrap error {:.2e}",
                    hull.rows.len(),
                    hull.max_decrease,
                    hull.wrap_error
                );
                for (alpha, x) in hull.rows.iter().step_by(hull.rows.len() / 8 + 1) {
                    println!("  X({alpha:.4}) = {x:.6}");
                }
            }
            VelocityVerdict::Undetermined { t, .. } => println!("F = {force}: undetermined at t = {t:.3e}"),
        }
    }
    Ok(())
}
