//! Nearest-neighbour generating functions `h(x, x')`, their tilted energies,
//! a catalog of builtin chains and the band modification that extends a
//! generating function with bounded second derivatives.

mod band;
mod catalog;
mod quadrature;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use band::modify_band;
pub use catalog::{make_builtin, BuiltinSpec, ManeKernel, ManeShape, BUILTIN_BAND};

/// Values of `h` and its first and second partial derivatives at one point.
///
/// Index 1 refers to the first argument `x`, index 2 to the second `x'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Derivs {
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl Derivs {
    pub fn is_finite(&self) -> bool {
        [self.h, self.h1, self.h2, self.h11, self.h12, self.h22]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Bundle of `(x, x') -> h(x', x)` given the bundle of `h` at `(x', x)`.
    pub fn swapped(self) -> Derivs {
        Derivs {
            h: self.h,
            h1: self.h2,
            h2: self.h1,
            h11: self.h22,
            h12: self.h12,
            h22: self.h11,
        }
    }
}

/// Evaluation kernel behind a [`GeneratingFunction`].
pub trait Kernel: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64, xp: f64) -> Derivs;

    /// Short human-readable description.
    fn label(&self) -> String;

    /// True when the derivatives are obtained by finite differences.
    fn finite_difference(&self) -> bool {
        false
    }
}

/// A periodic nearest-neighbour energy with negative mixed derivative.
///
/// Cloning is cheap; the kernel is shared.
#[derive(Clone)]
pub struct GeneratingFunction {
    kernel: Arc<dyn Kernel>,
    c: f64,
    band: (i64, i64),
}

impl fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratingFunction")
            .field("kernel", &self.kernel.label())
            .field("c", &self.c)
            .field("band", &self.band)
            .finish()
    }
}

impl GeneratingFunction {
    /// Wraps a kernel. `c` is the claimed lower bound for `-h12` on the band
    /// `M <= x' - x <= N`.
    pub fn new(kernel: Arc<dyn Kernel>, c: f64, band: (i64, i64)) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mixed-derivative bound c must be positive, got {c}"
            )));
        }
        if band.0 >= band.1 {
            return Err(Error::InvalidParameter(format!(
                "band must satisfy M < N, got ({}, {})",
                band.0, band.1
            )));
        }
        Ok(Self { kernel, c, band })
    }

    /// A user energy given only by its values; derivatives come from central
    /// differences with step `1e-5` and are flagged in property reports.
    pub fn from_fn<F>(label: &str, c: f64, band: (i64, i64), h: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let kernel = FnKernel {
            label: label.to_string(),
            h: Arc::new(h),
        };
        Self::new(Arc::new(kernel), c, band)
    }

    #[inline]
    pub fn eval(&self, x: f64, xp: f64) -> Derivs {
        self.kernel.eval(x, xp)
    }

    /// Like [`eval`](Self::eval) but rejects non-finite output.
    pub fn try_eval(&self, x: f64, xp: f64) -> Result<Derivs> {
        let d = self.kernel.eval(x, xp);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFinite { x, xp })
        }
    }

    #[inline]
    pub fn value(&self, x: f64, xp: f64) -> f64 {
        self.kernel.eval(x, xp).h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn band(&self) -> (i64, i64) {
        self.band
    }

    pub fn label(&self) -> String {
        self.kernel.label()
    }

    pub fn finite_difference(&self) -> bool {
        self.kernel.finite_difference()
    }

    /// Same kernel with a different spacing band.
    pub fn with_band(&self, band: (i64, i64)) -> Result<Self> {
        Self::new(self.kernel.clone(), self.c, band)
    }

    /// The reversed energy `h~(x, x') = h(x', x)`, which exchanges the roles
    /// of advancing and retreating states. The band becomes `(-N, -M)`.
    pub fn reversed(&self) -> Self {
        Self {
            kernel: Arc::new(Reversed {
                inner: self.kernel.clone(),
            }),
            c: self.c,
            band: (-self.band.1, -self.band.0),
        }
    }

    /// Largest `|h12|` seen on a deterministic sample of the band.
    pub fn mixed_derivative_scale(&self, samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        let (lo, hi) = (self.band.0 as f64, self.band.1 as f64);
        let (lo, hi) = (lo.max(-4.0), hi.min(4.0));
        let mut scale: f64 = 0.0;
        for _ in 0..samples.max(1) {
            let x: f64 = rng.gen_range(0.0..1.0);
            let d: f64 = rng.gen_range(lo..=hi);
            scale = scale.max(self.eval(x, x + d).h12.abs());
        }
        scale
    }
}

#[derive(Debug)]
struct Reversed {
    inner: Arc<dyn Kernel>,
}

impl Kernel for Reversed {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        self.inner.eval(xp, x).swapped()
    }

    fn label(&self) -> String {
        format!("reversed({})", self.inner.label())
    }

    fn finite_difference(&self) -> bool {
        self.inner.finite_difference()
    }
}

/// Central-difference step used for value-only user energies.
const FD_STEP: f64 = 1e-5;

struct FnKernel {
    label: String,
    h: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for FnKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel").field("label", &self.label).finish()
    }
}

impl Kernel for FnKernel {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        let h = &self.h;
        let s = FD_STEP;
        let c = h(x, xp);
        let xm = h(x - s, xp);
        let xpl = h(x + s, xp);
        let ym = h(x, xp - s);
        let ypl = h(x, xp + s);
        let pp = h(x + s, xp + s);
        let pm = h(x + s, xp - s);
        let mp = h(x - s, xp + s);
        let mm = h(x - s, xp - s);
        Derivs {
            h: c,
            h1: (xpl - xm) / (2.0 * s),
            h2: (ypl - ym) / (2.0 * s),
            h11: (xpl - 2.0 * c + xm) / (s * s),
            h22: (ypl - 2.0 * c + ym) / (s * s),
            h12: (pp - pm - mp + mm) / (4.0 * s * s),
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn finite_difference(&self) -> bool {
        true
    }
}

/// A generating function together with a constant tilt `F`:
/// `h_F(x, x') = h(x, x') - F x`.
#[derive(Clone, Debug)]
pub struct TiltedEnergy {
    pub h: GeneratingFunction,
    pub force: f64,
}

impl TiltedEnergy {
    pub fn new(h: GeneratingFunction, force: f64) -> Result<Self> {
        if !(force >= 0.0) || !force.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tilt must be finite and nonnegative, got {force}"
            )));
        }
        Ok(Self { h, force })
    }

    /// Untilted energy.
    pub fn untilted(h: GeneratingFunction) -> Self {
        Self { h, force: 0.0 }
    }

    pub fn with_force(&self, force: f64) -> Self {
        Self {
            h: self.h.clone(),
            force,
        }
    }

    /// Derivative bundle of `h_F`.
    #[inline]
    pub fn eval(&self, x: f64, xp: f64) -> Derivs {
        let mut d = self.h.eval(x, xp);
        d.h -= self.force * x;
        d.h1 -= self.force;
        d
    }

    /// Same tilt applied to the reversed generating function.
    pub fn reversed(&self) -> Self {
        Self {
            h: self.h.reversed(),
            force: self.force,
        }
    }
}

/// Outcome of [`verify_properties`].
#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub samples: usize,
    /// `max |h(x+1, x'+1) - h(x, x')|`.
    pub max_periodicity_violation: f64,
    /// `min(-h12)` over the sampled band.
    pub min_neg_h12: f64,
    /// Claimed bound `c` of the generating function.
    pub c: f64,
    /// Analytic first derivatives against central differences of `h`.
    pub max_first_derivative_error: f64,
    /// Analytic second derivatives against central differences of the first.
    pub max_second_derivative_error: f64,
    pub non_finite: usize,
    pub finite_difference_derivatives: bool,
}

impl PropertyReport {
    /// Periodicity holds to `1e-10`, the twist bound holds and every sample
    /// is finite. Derivative errors are reported, not judged.
    pub fn is_valid(&self) -> bool {
        // Difference-quotient mixed derivatives carry ~1e-6 rounding noise.
        let slack = if self.finite_difference_derivatives { 1e-4 } else { 1e-9 };
        self.non_finite == 0
            && self.max_periodicity_violation < 1e-10
            && self.min_neg_h12 >= self.c * (1.0 - slack)
    }
}

/// Samples `h` on the band with a fixed seed and reports periodicity, twist
/// bound and derivative consistency.
pub fn verify_properties(h: &GeneratingFunction, samples: usize) -> PropertyReport {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let (lo, hi) = (h.band.0 as f64, h.band.1 as f64);
    let (lo, hi) = (lo.max(-16.0), hi.min(16.0));
    let mut rep = PropertyReport {
        samples,
        max_periodicity_violation: 0.0,
        min_neg_h12: f64::INFINITY,
        c: h.c,
        max_first_derivative_error: 0.0,
        max_second_derivative_error: 0.0,
        non_finite: 0,
        finite_difference_derivatives: h.finite_difference(),
    };
    let s1 = 1e-6;
    let s2 = 1e-4;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let d: f64 = rng.gen_range(lo..=hi);
        let xp = x + d;
        let b = h.eval(x, xp);
        if !b.is_finite() {
            rep.non_finite += 1;
            continue;
        }
        let shifted = h.eval(x + 1.0, xp + 1.0);
        rep.max_periodicity_violation = rep.max_periodicity_violation.max((shifted.h - b.h).abs());
        rep.min_neg_h12 = rep.min_neg_h12.min(-b.h12);

        let fd1 = (h.value(x + s1, xp) - h.value(x - s1, xp)) / (2.0 * s1);
        let fd2 = (h.value(x, xp + s1) - h.value(x, xp - s1)) / (2.0 * s1);
        let e1 = (fd1 - b.h1).abs().max((fd2 - b.h2).abs());
        rep.max_first_derivative_error = rep.max_first_derivative_error.max(e1);

        let (ax, bx) = (h.eval(x + s2, xp), h.eval(x - s2, xp));
        let (ay, by) = (h.eval(x, xp + s2), h.eval(x, xp - s2));
        let fd11 = (ax.h1 - bx.h1) / (2.0 * s2);
        let fd12 = (ay.h1 - by.h1) / (2.0 * s2);
        let fd22 = (ay.h2 - by.h2) / (2.0 * s2);
        let e2 = (fd11 - b.h11)
            .abs()
            .max((fd12 - b.h12).abs())
            .max((fd22 - b.h22).abs());
        rep.max_second_derivative_error = rep.max_second_derivative_error.max(e2);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fk(k: f64) -> GeneratingFunction {
        make_builtin(&BuiltinSpec::StandardFk { k }).unwrap()
    }

    #[test]
    fn standard_fk_values() {
        let h = fk(1.0);
        let v = h.value(0.0, 0.5);
        assert!((v - (0.125 + 1.0 / (4.0 * PI * PI))).abs() < 1e-15);
        let d = h.eval(0.0, 0.3);
        assert!((d.h1 + 0.3).abs() < 1e-15);
        assert!((d.h2 - 0.3).abs() < 1e-15);
        for &(x, xp) in &[(0.1, 0.7), (-2.3, 4.1), (0.5, 0.5)] {
            assert_eq!(h.eval(x, xp).h12, -1.0);
        }
    }

    #[test]
    fn tilt_identity() {
        let e = TiltedEnergy::new(fk(0.7), 0.13).unwrap();
        for &(x, xp) in &[(0.1, 0.7), (-2.3, 4.1), (0.25, 0.9)] {
            let a = e.eval(x + 1.0, xp + 1.0).h;
            let b = e.eval(x, xp).h;
            assert!((a - b + 0.13).abs() < 1e-12);
            let base = e.h.value(x, xp);
            assert!((b - (base - 0.13 * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_force_rejected() {
        assert!(TiltedEnergy::new(fk(1.0), -0.1).is_err());
    }

    #[test]
    fn reversal_swaps_arguments() {
        let h = make_builtin(&BuiltinSpec::DoubleWell { k: 0.3, b: 2.0 }).unwrap();
        let r = h.reversed();
        let (x, xp) = (0.21, 0.87);
        let a = h.eval(xp, x);
        let b = r.eval(x, xp);
        assert_eq!(a.h, b.h);
        assert_eq!(a.h1, b.h2);
        assert_eq!(a.h11, b.h22);
        assert_eq!(r.band(), (-h.band().1, -h.band().0));
    }

    #[test]
    fn report_flags_broken_periodicity() {
        let broken = GeneratingFunction::from_fn("period-2 defect", 1.0, (-2, 3), |x, xp| {
            0.5 * (xp - x) * (xp - x) + 0.05 * (PI * x).cos()
        })
        .unwrap();
        let rep = verify_properties(&broken, 200);
        assert!(rep.finite_difference_derivatives);
        assert!(rep.max_periodicity_violation > 1e-3);
        assert!(!rep.is_valid());
    }

    #[test]
    fn finite_difference_kernel_is_close() {
        let user = GeneratingFunction::from_fn("fk by value", 1.0, (-2, 3), |x, xp| {
            0.5 * (xp - x) * (xp - x) + (2.0 * PI * x).cos() / (4.0 * PI * PI)
        })
        .unwrap();
        let exact = fk(1.0);
        let (a, b) = (user.eval(0.3, 0.8), exact.eval(0.3, 0.8));
        assert!((a.h1 - b.h1).abs() < 1e-8);
        assert!((a.h12 - b.h12).abs() < 1e-4);
        assert!(verify_properties(&user, 100).is_valid());
    }
}
