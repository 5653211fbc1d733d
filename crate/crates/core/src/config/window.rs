use serde::{Deserialize, Serialize};

use super::{PeriodicConfiguration, Sites};
use crate::error::{Error, Result};

/// Positions on sites `l..=r` with declared asymptotic states.
///
/// Outside the window a site takes the value of its asymptote: the left
/// asymptote lifted by `left_shift` for `n < l`, the right one lifted by
/// `right_shift` for `n > r`. The shifts are integer diagonal lifts
/// `T_{0 1}^k`, which lets a window connect a state to a translate of
/// itself without re-indexing the stored asymptote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfiguration {
    l: i64,
    values: Vec<f64>,
    left_asym: PeriodicConfiguration,
    right_asym: PeriodicConfiguration,
    left_shift: i64,
    right_shift: i64,
}

impl WindowConfiguration {
    pub fn new(
        l: i64,
        values: Vec<f64>,
        left_asym: PeriodicConfiguration,
        right_asym: PeriodicConfiguration,
        left_shift: i64,
        right_shift: i64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("window must hold at least one site".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("window positions must be finite".into()));
        }
        Ok(Self {
            l,
            values,
            left_asym,
            right_asym,
            left_shift,
            right_shift,
        })
    }

    /// Window on `l..=r` filled by `f(n)`.
    pub fn from_fn<F: Fn(i64) -> f64>(
        l: i64,
        r: i64,
        left_asym: PeriodicConfiguration,
        right_asym: PeriodicConfiguration,
        f: F,
    ) -> Result<Self> {
        if r < l {
            return Err(Error::InvalidParameter(format!("empty window {l}..={r}")));
        }
        Self::new(l, (l..=r).map(f).collect(), left_asym, right_asym, 0, 0)
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    pub fn r(&self) -> i64 {
        self.l + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn left_asym(&self) -> &PeriodicConfiguration {
        &self.left_asym
    }

    pub fn right_asym(&self) -> &PeriodicConfiguration {
        &self.right_asym
    }

    pub fn shifts(&self) -> (i64, i64) {
        (self.left_shift, self.right_shift)
    }

    /// Same window and asymptotes with new stored values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidParameter("window length mismatch".into()));
        }
        let mut w = self.clone();
        w.values = values;
        Ok(w)
    }

    /// Left asymptote value at site `n`, including its lift.
    pub fn left_asym_at(&self, n: i64) -> f64 {
        self.left_asym.at(n) + self.left_shift as f64
    }

    /// Right asymptote value at site `n`, including its lift.
    pub fn right_asym_at(&self, n: i64) -> f64 {
        self.right_asym.at(n) + self.right_shift as f64
    }

    /// Position at `n`, clamped to the asymptotes outside the window.
    #[inline]
    pub fn at(&self, n: i64) -> f64 {
        if n < self.l {
            self.left_asym_at(n)
        } else if n > self.r() {
            self.right_asym_at(n)
        } else {
            self.values[(n - self.l) as usize]
        }
    }

    /// `(|x_l - left_l|, |x_r - right_r|)`.
    pub fn boundary_residuals(&self) -> (f64, f64) {
        let (l, r) = (self.l, self.r());
        (
            (self.at(l) - self.left_asym_at(l)).abs(),
            (self.at(r) - self.right_asym_at(r)).abs(),
        )
    }

    /// `(T_{q0 p0} x)_n = x_{n-q0} + p0`: the window moves by `q0` sites.
    pub fn translate(&self, q0: i64, p0: i64) -> Self {
        Self {
            l: self.l + q0,
            values: self.values.iter().map(|v| v + p0 as f64).collect(),
            left_asym: self.left_asym.translate(q0, p0),
            right_asym: self.right_asym.translate(q0, p0),
            left_shift: self.left_shift,
            right_shift: self.right_shift,
        }
    }

    /// Index reflection `y_n = x_{-n}`: the window becomes `-r..=-l` and the
    /// asymptotes swap sides.
    pub fn reflect(&self) -> Self {
        Self {
            l: -self.r(),
            values: self.values.iter().rev().copied().collect(),
            left_asym: self.right_asym.reflect(),
            right_asym: self.left_asym.reflect(),
            left_shift: self.right_shift,
            right_shift: self.left_shift,
        }
    }

    /// Common mean spacing of the two asymptotes.
    pub fn mean_spacing(&self) -> Result<f64> {
        let (a, b) = (&self.left_asym, &self.right_asym);
        if a.p() as i128 * b.q() as i128 != b.p() as i128 * a.q() as i128 {
            return Err(Error::InconsistentWindow(format!(
                "asymptotes have types ({},{}) and ({},{})",
                a.p(),
                a.q(),
                b.p(),
                b.q()
            )));
        }
        Ok(a.mean_spacing())
    }

    /// Content translated by `T_{q0 p0}` while keeping the same window
    /// bounds; sites entering from outside take the clamped values.
    pub fn relabel(&self, q0: i64, p0: i64) -> Self {
        let moved = self.translate(q0, p0);
        let values = (self.l..=self.r()).map(|n| moved.at(n)).collect();
        Self {
            l: self.l,
            values,
            left_asym: self.left_asym.clone(),
            right_asym: self.right_asym.clone(),
            left_shift: self.left_shift,
            right_shift: self.right_shift,
        }
    }
}

impl Sites for WindowConfiguration {
    fn site(&self, n: i64) -> f64 {
        self.at(n)
    }

    fn stored_range(&self) -> (i64, i64) {
        (self.l, self.r())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_swaps_sides() {
        let w = kink();
        let r = w.reflect();
        for n in -9..9 {
            assert_eq!(r.at(n), w.at(-n));
        }
        assert_eq!(r.reflect(), w);
    }

    fn kink() -> WindowConfiguration {
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.5);
        WindowConfiguration::from_fn(-5, 5, lo, hi, |n| 1.0 + 0.5 * (n as f64 / 2.0).tanh()).unwrap()
    }

    #[test]
    fn clamped_outside() {
        let w = kink();
        assert_eq!(w.at(-100), 0.5);
        assert_eq!(w.at(100), 1.5);
        assert_eq!(w.r(), 5);
        let (a, b) = w.boundary_residuals();
        assert!(a > 0.0 && a < 0.01 && b > 0.0 && b < 0.01);
    }

    #[test]
    fn translation_composition() {
        let w = kink();
        let a = w.translate(1, 0).translate(1, 0);
        let b = w.translate(2, 0);
        assert_eq!(a, b);
        assert_eq!(b.l(), -3);
        assert_eq!(b.at(0), w.at(-2));
    }

    #[test]
    fn mean_spacing_of_windows() {
        let w = kink();
        assert_eq!(w.mean_spacing().unwrap(), 0.0);
        let bad = WindowConfiguration::new(
            0,
            vec![0.0, 1.0],
            PeriodicConfiguration::uniform(0, 1, 0.0),
            PeriodicConfiguration::uniform(1, 2, 0.0),
            0,
            0,
        )
        .unwrap();
        assert!(matches!(bad.mean_spacing(), Err(Error::InconsistentWindow(_))));
    }

    #[test]
    fn relabel_keeps_bounds() {
        let w = kink();
        let moved = w.relabel(1, 0);
        assert_eq!(moved.l(), w.l());
        assert_eq!(moved.at(0), w.at(-1));
        assert_eq!(moved.at(-5), 0.5);
    }
}
