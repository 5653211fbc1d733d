//! Configuration spaces: type-`(p, q)` periodic states, finite windows with
//! declared asymptotic states, the translations `T_{q p}`, the componentwise
//! partial order, width, Birkhoff tests and Aubry-diagram export.

mod aubry;
mod periodic;
mod symbol;
mod window;

use serde::Serialize;

pub use aubry::{aubry_rows, write_aubry_csv, write_aubry_svg};
pub use periodic::{BirkhoffCheck, PeriodicConfiguration};
pub use symbol::RotationSymbol;
pub use window::WindowConfiguration;

/// Anything that assigns a position to every integer site.
pub trait Sites {
    /// Position of site `n`.
    fn site(&self, n: i64) -> f64;

    /// Inclusive range of explicitly stored sites.
    fn stored_range(&self) -> (i64, i64);

    /// Inclusive range used when exporting an Aubry diagram.
    fn display_range(&self) -> (i64, i64) {
        self.stored_range()
    }
}

/// Result of a componentwise comparison of two configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Equal,
    /// `x_n < y_n` at every compared site.
    StrictlyLess,
    /// `x_n <= y_n` everywhere, with equality somewhere and strict somewhere.
    Less,
    StrictlyGreater,
    Greater,
    Incomparable,
}

impl Comparison {
    pub fn is_comparable(self) -> bool {
        self != Comparison::Incomparable
    }
}

/// Componentwise comparison over the union of both stored ranges extended by
/// `horizon` sites on each side.
pub fn compare<A: Sites + ?Sized, B: Sites + ?Sized>(x: &A, y: &B, horizon: usize) -> Comparison {
    let (a0, a1) = x.stored_range();
    let (b0, b1) = y.stored_range();
    let h = horizon as i64;
    compare_on(x, y, a0.min(b0) - h, a1.max(b1) + h, 0.0)
}

/// Componentwise comparison on sites `lo..=hi`; differences within `tol`
/// count as equal.
pub fn compare_on<A: Sites + ?Sized, B: Sites + ?Sized>(
    x: &A,
    y: &B,
    lo: i64,
    hi: i64,
    tol: f64,
) -> Comparison {
    let (mut less, mut greater, mut equal) = (false, false, false);
    for n in lo..=hi {
        let d = x.site(n) - y.site(n);
        if d < -tol {
            less = true;
        } else if d > tol {
            greater = true;
        } else {
            equal = true;
        }
        if less && greater {
            return Comparison::Incomparable;
        }
    }
    match (less, greater, equal) {
        (false, false, _) => Comparison::Equal,
        (true, false, false) => Comparison::StrictlyLess,
        (true, false, true) => Comparison::Less,
        (false, true, false) => Comparison::StrictlyGreater,
        (false, true, true) => Comparison::Greater,
        _ => Comparison::Incomparable,
    }
}

/// Sup-norm distance on sites `lo..=hi`.
pub fn sup_distance<A: Sites + ?Sized, B: Sites + ?Sized>(x: &A, y: &B, lo: i64, hi: i64) -> f64 {
    (lo..=hi)
        .map(|n| (x.site(n) - y.site(n)).abs())
        .fold(0.0, f64::max)
}

/// Greatest common divisor of two integers (nonnegative result).
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
