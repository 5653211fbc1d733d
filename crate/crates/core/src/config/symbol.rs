use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mean spacing, with each rational split into `p/q-`, `p/q`, `p/q+`.
///
/// Order: by value, with ties broken `p/q- < p/q < p/q+`; a real equal to
/// `p/q` ties with the plain rational.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum RotationSymbol {
    Rational { p: i64, q: i64 },
    RationalPlus { p: i64, q: i64 },
    RationalMinus { p: i64, q: i64 },
    Real(f64),
}

impl RotationSymbol {
    pub fn real(omega: f64) -> Result<Self> {
        if omega.is_finite() {
            Ok(RotationSymbol::Real(omega))
        } else {
            Err(Error::InvalidParameter(format!("rotation number must be finite, got {omega}")))
        }
    }

    pub fn rational(p: i64, q: i64) -> Result<Self> {
        check_q(q)?;
        Ok(RotationSymbol::Rational { p, q })
    }

    pub fn plus(p: i64, q: i64) -> Result<Self> {
        check_q(q)?;
        Ok(RotationSymbol::RationalPlus { p, q })
    }

    pub fn minus(p: i64, q: i64) -> Result<Self> {
        check_q(q)?;
        Ok(RotationSymbol::RationalMinus { p, q })
    }

    pub fn value(&self) -> f64 {
        match *self {
            RotationSymbol::Rational { p, q }
            | RotationSymbol::RationalPlus { p, q }
            | RotationSymbol::RationalMinus { p, q } => p as f64 / q as f64,
            RotationSymbol::Real(w) => w,
        }
    }

    fn side(&self) -> i8 {
        match self {
            RotationSymbol::RationalMinus { .. } => -1,
            RotationSymbol::RationalPlus { .. } => 1,
            _ => 0,
        }
    }

    fn fraction(&self) -> Option<(i64, i64)> {
        match *self {
            RotationSymbol::Rational { p, q }
            | RotationSymbol::RationalPlus { p, q }
            | RotationSymbol::RationalMinus { p, q } => Some((p, q)),
            RotationSymbol::Real(_) => None,
        }
    }
}

fn check_q(q: i64) -> Result<()> {
    if q > 0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("denominator must be positive, got {q}")))
    }
}

impl PartialEq for RotationSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RotationSymbol {}

impl PartialOrd for RotationSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RotationSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_value = match (self.fraction(), other.fraction()) {
            (Some((a, b)), Some((c, d))) => (a as i128 * d as i128).cmp(&(c as i128 * b as i128)),
            _ => self.value().total_cmp(&other.value()),
        };
        by_value.then(self.side().cmp(&other.side()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn blown_up_rational_order() {
        let lo = RotationSymbol::real(0.49).unwrap();
        let m = RotationSymbol::minus(1, 2).unwrap();
        let e = RotationSymbol::rational(2, 4).unwrap();
        let p = RotationSymbol::plus(1, 2).unwrap();
        let hi = RotationSymbol::real(0.51).unwrap();
        assert!(lo < m && m < e && e < p && p < hi);
        assert_eq!(e, RotationSymbol::real(0.5).unwrap());
        assert!(RotationSymbol::real(f64::NAN).is_err());
    }

    fn arb_symbol() -> impl Strategy<Value = RotationSymbol> {
        prop_oneof![
            (-6i64..7, 1i64..7).prop_map(|(p, q)| RotationSymbol::Rational { p, q }),
            (-6i64..7, 1i64..7).prop_map(|(p, q)| RotationSymbol::RationalPlus { p, q }),
            (-6i64..7, 1i64..7).prop_map(|(p, q)| RotationSymbol::RationalMinus { p, q }),
            (-6.0f64..6.0).prop_map(RotationSymbol::Real),
        ]
    }

    proptest! {
        #[test]
        fn total_order_is_transitive(a in arb_symbol(), b in arb_symbol(), c in arb_symbol()) {
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        }
    }
}
