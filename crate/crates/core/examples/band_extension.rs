//! Extending the Mañé generating function beyond a spacing band so that the
//! twist condition holds everywhere, and comparing both along a profile.

use anyhow::Result;
use depinn::model::{make_builtin, modify_band, verify_properties, BuiltinSpec};

fn main() -> Result<()> {
    let h = make_builtin(&BuiltinSpec::mane_default())?;
    let ext = modify_band(&h, -1, 2)?;
    let (before, after) = (verify_properties(&h, 2000), verify_properties(&ext, 2000));
    println!("original: valid {}, min(-h12) {:.4}, c {:.4}", before.is_valid(), before.min_neg_h12, before.c);
    println!("extended: valid {}, min(-h12) {:.4}, c {:.4}", after.is_valid(), after.min_neg_h12, after.c);
    println!("spacing,h,h_extended,-h12,-h12_extended");
    let x = 0.3;
    for i in 0..=12 {
        let d = -3.0 + 0.5 * i as f64;
        let (a, b) = (h.eval(x, x + d), ext.eval(x, x + d));
        println!("{d:.1},{:.8},{:.8},{:.6},{:.6}", a.h, b.h, -a.h12, -b.h12);
    }
    Ok(())
}
