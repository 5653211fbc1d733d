//! Parallel scans: mean velocity of type `(1, 2)` against the tilt, and the
//! depinning force over the Farey grid of rotation numbers.

use anyhow::Result;
use depinn::cli::{scan_rows, ScanArgs, ScanVariable};
use depinn::model::{make_builtin, BuiltinSpec};

fn main() -> Result<()> {
    let h = make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?;
    let force = ScanArgs { p: 1, q: 2, f_min: 0.0, f_max: 0.3, f_step: 0.03, ..ScanArgs::default() };
    println!("F,v,status");
    for r in scan_rows(&force, &h)? {
        println!("{:.2},{},{}", r.force.unwrap_or(f64::NAN), r.value.map_or("-".into(), |v| format!("{v:.8}")), r.status);
    }
    let omega = ScanArgs { variable: ScanVariable::Omega, level: 5, ..ScanArgs::default() };
    println!("p/q,F_d");
    for r in scan_rows(&omega, &h)? {
        println!("{}/{},{}", r.p, r.q, r.value.map_or("-".into(), |v| format!("{v:.8}")));
    }
    Ok(())
}
