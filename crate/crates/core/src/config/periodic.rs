use serde::{Deserialize, Serialize};

use super::{compare_on, gcd, Comparison, Sites};
use crate::error::{Error, Result};

/// A type-`(p, q)` state `x_{n+q} = x_n + p`, stored as sites `0..q`.
///
/// A non-reduced representation `(kp, kq)` is allowed; see
/// [`is_reduced`](Self::is_reduced).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicConfiguration {
    p: i64,
    q: usize,
    x: Vec<f64>,
}

/// Outcome of [`PeriodicConfiguration::is_birkhoff`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BirkhoffCheck {
    pub birkhoff: bool,
    /// A translate `T_{m n}` that is incomparable with the configuration.
    pub witness: Option<(i64, i64)>,
}

impl PeriodicConfiguration {
    pub fn new(p: i64, q: usize, x: Vec<f64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("period q must be positive".into()));
        }
        if x.len() != q {
            return Err(Error::InvalidParameter(format!(
                "type ({p},{q}) needs {q} positions, got {}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("positions must be finite".into()));
        }
        Ok(Self { p, q, x })
    }

    /// The rigid rotation `x_n = n p/q + offset`.
    pub fn uniform(p: i64, q: usize, offset: f64) -> Self {
        let x = (0..q)
            .map(|n| n as f64 * p as f64 / q as f64 + offset)
            .collect();
        Self { p, q, x }
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn into_values(self) -> Vec<f64> {
        self.x
    }

    /// Same type with new stored positions.
    pub fn with_values(&self, x: Vec<f64>) -> Result<Self> {
        Self::new(self.p, self.q, x)
    }

    /// Position of site `n` using the wrap rule.
    #[inline]
    pub fn at(&self, n: i64) -> f64 {
        let q = self.q as i64;
        let r = n.rem_euclid(q);
        let k = (n - r) / q;
        self.x[r as usize] + (k * self.p) as f64
    }

    pub fn is_reduced(&self) -> bool {
        gcd(self.p, self.q as i64) == 1
    }

    pub fn mean_spacing(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `(T_{q0 p0} x)_n = x_{n - q0} + p0`.
    pub fn translate(&self, q0: i64, p0: i64) -> Self {
        let x = (0..self.q as i64)
            .map(|n| self.at(n - q0) + p0 as f64)
            .collect();
        Self {
            p: self.p,
            q: self.q,
            x,
        }
    }

    /// Adds a constant to every position (not a lattice translation unless
    /// the constant is an integer).
    pub fn shifted(&self, d: f64) -> Self {
        Self {
            p: self.p,
            q: self.q,
            x: self.x.iter().map(|v| v + d).collect(),
        }
    }

    /// Index reflection `y_n = x_{-n}`, of type `(-p, q)`.
    pub fn reflect(&self) -> Self {
        let x = (0..self.q as i64).map(|n| self.at(-n)).collect();
        Self {
            p: -self.p,
            q: self.q,
            x,
        }
    }

    /// Sup-norm distance between stored positions of two same-type states.
    pub fn distance(&self, other: &Self) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest sup-distance from `other` to a lattice translate
    /// `T_{j k} self`; zero exactly when the two states lie on the same
    /// translation orbit.
    pub fn orbit_distance(&self, other: &Self) -> f64 {
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        (0..self.q as i64)
            .map(|j| {
                let moved = self.translate(j, 0);
                let k = (mean(&other.x) - mean(&moved.x)).round();
                moved.shifted(k).distance(other)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `sup_m (ceil(max_k(x_k - x_{k-m})) - floor(min_k(x_k - x_{k-m})))`.
    ///
    /// The differences are periodic in `k` with period `q`, and shifting `m`
    /// by `q` adds `p` to both bounds, so `m` ranges over `1..=q`.
    pub fn width(&self) -> u64 {
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-12 {
                r
            } else {
                v
            }
        };
        let q = self.q as i64;
        let mut w = 0i64;
        for m in 1..=q {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..q {
                let d = snap(self.at(k) - self.at(k - m));
                lo = lo.min(d);
                hi = hi.max(d);
            }
            w = w.max(hi.ceil() as i64 - lo.floor() as i64);
        }
        w as u64
    }

    /// Checks that every translate `T_{m n}` with `|m| <= mh`, `|n| <= nh`
    /// is comparable with `x`. The default horizon is `(3q, 3|p| + 3)`.
    pub fn is_birkhoff(&self, horizon: Option<(i64, i64)>) -> BirkhoffCheck {
        let q = self.q as i64;
        let (mh, nh) = horizon.unwrap_or((3 * q, 3 * self.p.abs() + 3));
        for m in -mh..=mh {
            for n in -nh..=nh {
                let t = self.translate(m, n);
                if compare_on(&t, self, 0, q - 1, 1e-12) == Comparison::Incomparable {
                    return BirkhoffCheck {
                        birkhoff: false,
                        witness: Some((m, n)),
                    };
                }
            }
        }
        BirkhoffCheck {
            birkhoff: true,
            witness: None,
        }
    }
}

impl Sites for PeriodicConfiguration {
    fn site(&self, n: i64) -> f64 {
        self.at(n)
    }

    fn stored_range(&self) -> (i64, i64) {
        (0, self.q as i64 - 1)
    }

    fn display_range(&self) -> (i64, i64) {
        (0, 3 * self.q as i64 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::compare;
    use proptest::prelude::*;

    #[test]
    fn wrap_rule() {
        let x = PeriodicConfiguration::new(1, 2, vec![0.1, 0.6]).unwrap();
        assert_eq!(x.at(2), 1.1);
        assert_eq!(x.at(-1), -0.4);
        assert_eq!(x.at(-2), -0.9);
        assert!(PeriodicConfiguration::new(1, 2, vec![0.1]).is_err());
    }

    #[test]
    fn translation_by_own_type_is_identity() {
        let x = PeriodicConfiguration::new(2, 3, vec![0.1, 0.8, 1.3]).unwrap();
        assert!(x.translate(3, 2).distance(&x) < 1e-15);
        let up = x.translate(0, 1);
        for n in -5..5 {
            assert!((up.at(n) - x.at(n) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn comparisons() {
        let x = PeriodicConfiguration::new(0, 2, vec![0.1, 0.3]).unwrap();
        assert_eq!(compare(&x, &x.translate(0, 1), 0), Comparison::StrictlyLess);
        assert_eq!(compare(&x, &x, 0), Comparison::Equal);
        let y = PeriodicConfiguration::new(0, 2, vec![0.2, 0.2]).unwrap();
        assert_eq!(compare(&x, &y, 0), Comparison::Incomparable);
        let z = PeriodicConfiguration::new(0, 2, vec![0.1, 0.4]).unwrap();
        assert_eq!(compare(&x, &z, 0), Comparison::Less);
    }

    #[test]
    fn width_examples() {
        assert_eq!(PeriodicConfiguration::uniform(1, 2, 0.0).width(), 1);
        assert_eq!(PeriodicConfiguration::uniform(0, 1, 0.3).width(), 0);
        let bent = PeriodicConfiguration::new(1, 2, vec![0.0, 1.5]).unwrap();
        assert!(bent.width() >= 2);
    }

    #[test]
    fn birkhoff_examples() {
        let rot = PeriodicConfiguration::uniform(2, 5, 0.13);
        assert!(rot.is_birkhoff(None).birkhoff);
        let bent = PeriodicConfiguration::new(1, 2, vec![0.0, 1.5]).unwrap();
        let check = bent.is_birkhoff(None);
        assert!(!check.birkhoff);
        let (m, n) = check.witness.unwrap();
        assert_eq!(
            compare_on(&bent.translate(m, n), &bent, 0, 1, 0.0),
            Comparison::Incomparable
        );
    }

    #[test]
    fn reflection_round_trip() {
        let x = PeriodicConfiguration::new(2, 3, vec![0.1, 0.8, 1.3]).unwrap();
        let r = x.reflect();
        assert_eq!(r.p(), -2);
        for n in -6..6 {
            assert_eq!(r.at(n), x.at(-n));
        }
        assert_eq!(r.reflect(), x);
    }

    fn arb_config() -> impl Strategy<Value = PeriodicConfiguration> {
        (1usize..5, -3i64..4).prop_flat_map(|(q, p)| {
            proptest::collection::vec(-0.45f64..0.45, q).prop_map(move |noise| {
                let x = noise
                    .iter()
                    .enumerate()
                    .map(|(n, e)| n as f64 * p as f64 / q as f64 + e)
                    .collect();
                PeriodicConfiguration::new(p, q, x).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn translations_form_a_group(x in arb_config(), a in -4i64..5, b in -4i64..5, c in -4i64..5, d in -4i64..5) {
            let lhs = x.translate(a, b).translate(c, d);
            let rhs = x.translate(a + c, b + d);
            prop_assert!(lhs.distance(&rhs) < 1e-12);
        }

        #[test]
        fn diagonal_translate_is_strictly_above(x in arb_config()) {
            prop_assert_eq!(compare(&x, &x.translate(0, 1), 0), Comparison::StrictlyLess);
        }

        #[test]
        fn birkhoff_implies_width_at_most_one(x in arb_config()) {
            if x.is_birkhoff(None).birkhoff {
                prop_assert!(x.width() <= 1);
            }
        }
    }
}
