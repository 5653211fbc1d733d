//! Extension of a generating function outside a spacing band `M <= x'-x <= N`
//! with bounded second derivatives.
//!
//! Beyond the seam `x' - x = N`, write `u = x`, `w = x' - N` and use the
//! seam data `g(t) = h(t, t+N)`, `k(t) = h2 - h1` and `j(t) = -h12` evaluated
//! at `(t, t+N)`. The extension
//!
//! `h~(x, x') = [g(u) + g(w) + ∫_u^w k + Q(u, w)] / 2`,
//! `Q = 4 ∫ j(s) min(s - u, w - s) ds`,
//!
//! is the wave-equation solution with Cauchy data on the seam and source
//! `-j`, so `h~12(x, x') = -j((u + w)/2)` and value and first derivatives
//! agree with `h` on the seam. The `M` side is identical with `w < u`.

use std::sync::Arc;

use super::quadrature::integrate_many;
use super::{Derivs, GeneratingFunction, Kernel};
use crate::error::{Error, Result};

const PANEL: f64 = 1.0 / 16.0;

#[derive(Debug)]
struct BandModified {
    inner: Arc<dyn Kernel>,
    m: i64,
    n: i64,
}

impl Kernel for BandModified {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        let d = xp - x;
        let (m, n) = (self.m as f64, self.n as f64);
        if d >= m && d <= n {
            return self.inner.eval(x, xp);
        }
        let seam = if d > n { n } else { m };
        let at = |t: f64| self.inner.eval(t, t + seam);
        let u = x;
        let w = xp - seam;
        let mid = 0.5 * (u + w);
        let (bu, bw) = (at(u), at(w));
        let jm = -at(mid).h12;

        // One pass per half gives the k-integral, the weighted j-integral
        // of Q and the plain j-integral.
        let parts = |s: f64, weight: f64| {
            let b = at(s);
            [b.h2 - b.h1, -b.h12 * weight, -b.h12]
        };
        let [k_left, q_left, j_left] = integrate_many(|s| parts(s, s - u), u, mid, PANEL);
        let [k_right, q_right, j_right] = integrate_many(|s| parts(s, w - s), mid, w, PANEL);
        let k_int = k_left + k_right;
        let q = 4.0 * (q_left + q_right);

        let g1 = |b: &Derivs| b.h1 + b.h2;
        let g2 = |b: &Derivs| b.h11 + 2.0 * b.h12 + b.h22;
        let k0 = |b: &Derivs| b.h2 - b.h1;
        let k1 = |b: &Derivs| b.h22 - b.h11;

        Derivs {
            h: 0.5 * (bu.h + bw.h + k_int + q),
            h1: 0.5 * (g1(&bu) - k0(&bu) - 4.0 * j_left),
            h2: 0.5 * (g1(&bw) + k0(&bw) + 4.0 * j_right),
            h11: 0.5 * (g2(&bu) - k1(&bu) - 4.0 * bu.h12 - 2.0 * jm),
            h12: -jm,
            h22: 0.5 * (g2(&bw) + k1(&bw) - 4.0 * bw.h12 - 2.0 * jm),
        }
    }

    fn label(&self) -> String {
        format!("band_modified({}, M={}, N={})", self.inner.label(), self.m, self.n)
    }

    fn finite_difference(&self) -> bool {
        self.inner.finite_difference()
    }
}

/// Replaces `h` outside `M <= x'-x <= N` by the extension described in the
/// module docs. The result satisfies the twist bound of `h` everywhere, so its
/// band is unbounded in practice.
pub fn modify_band(h: &GeneratingFunction, m: i64, n: i64) -> Result<GeneratingFunction> {
    if m >= n {
        return Err(Error::InvalidParameter(format!(
            "modify_band needs M < N, got ({m}, {n})"
        )));
    }
    let kernel = BandModified {
        inner: h.kernel.clone(),
        m,
        n,
    };
    let wide = (i32::MIN as i64, i32::MAX as i64);
    GeneratingFunction::new(Arc::new(kernel), h.c(), wide)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    fn check_fd(h: &GeneratingFunction, x: f64, xp: f64, tol: f64) {
        let s = 1e-5;
        let d = h.eval(x, xp);
        let fd1 = (h.value(x + s, xp) - h.value(x - s, xp)) / (2.0 * s);
        let fd2 = (h.value(x, xp + s) - h.value(x, xp - s)) / (2.0 * s);
        assert!((fd1 - d.h1).abs() < tol, "h1 at ({x},{xp}): {fd1} vs {}", d.h1);
        assert!((fd2 - d.h2).abs() < tol, "h2 at ({x},{xp}): {fd2} vs {}", d.h2);
        let (a, b) = (h.eval(x, xp + s), h.eval(x, xp - s));
        let fd12 = (a.h1 - b.h1) / (2.0 * s);
        let fd22 = (a.h2 - b.h2) / (2.0 * s);
        let (a, b) = (h.eval(x + s, xp), h.eval(x - s, xp));
        let fd11 = (a.h1 - b.h1) / (2.0 * s);
        assert!((fd12 - d.h12).abs() < tol, "h12 at ({x},{xp})");
        assert!((fd11 - d.h11).abs() < tol, "h11 at ({x},{xp})");
        assert!((fd22 - d.h22).abs() < tol, "h22 at ({x},{xp})");
    }

    /// Smooth energy with non-constant mixed derivative.
    fn coupled() -> GeneratingFunction {
        use std::f64::consts::PI;
        let eps = 0.01;
        let kernel = move |x: f64, xp: f64| {
            let (sx, cx) = (2.0 * PI * x).sin_cos();
            let (sy, cy) = (2.0 * PI * xp).sin_cos();
            let tp = 2.0 * PI;
            let d = xp - x;
            Derivs {
                h: 0.5 * d * d + eps * cx * cy,
                h1: -d - eps * tp * sx * cy,
                h2: d - eps * tp * cx * sy,
                h11: 1.0 - eps * tp * tp * cx * cy,
                h12: -1.0 + eps * tp * tp * sx * sy,
                h22: 1.0 - eps * tp * tp * cx * cy,
            }
        };
        struct K<F>(F);
        impl<F: Fn(f64, f64) -> Derivs + Send + Sync> Kernel for K<F> {
            fn eval(&self, x: f64, xp: f64) -> Derivs {
                (self.0)(x, xp)
            }
            fn label(&self) -> String {
                "coupled".into()
            }
        }
        impl<F> std::fmt::Debug for K<F> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("K")
            }
        }
        GeneratingFunction::new(Arc::new(K(kernel)), 0.5, (-1, 2)).unwrap()
    }

    #[test]
    fn identity_on_band_and_smooth_outside() {
        let h = coupled();
        let t = modify_band(&h, 0, 1).unwrap();
        for &(x, xp) in &[(0.1, 0.4), (0.3, 1.3), (0.7, 0.7)] {
            assert_eq!(h.eval(x, xp), t.eval(x, xp));
        }
        for &(x, xp) in &[(0.1, 1.6), (0.37, 3.2), (0.2, -0.4), (-0.3, -2.9)] {
            check_fd(&t, x, xp, 1e-6);
        }
    }

    #[test]
    fn mixed_derivative_is_midpoint_source() {
        let h = coupled();
        let t = modify_band(&h, 0, 1).unwrap();
        let (x, xp) = (0.23, 2.71);
        let mid = 0.5 * (x + xp - 1.0);
        let j = -h.eval(mid, mid + 1.0).h12;
        assert!((t.eval(x, xp).h12 + j).abs() < 1e-14);
    }

    #[test]
    fn constant_coupling_extension_is_exact() {
        // With h12 constant the wave-equation extension reproduces h itself.
        let h = make_builtin(&BuiltinSpec::StandardFk { k: 0.8 }).unwrap();
        let t = modify_band(&h, -1, 1).unwrap();
        for &(x, xp) in &[(0.1, 2.6), (0.45, -1.9), (-0.2, 4.3)] {
            let (a, b) = (h.eval(x, xp), t.eval(x, xp));
            assert!((a.h - b.h).abs() < 1e-12, "{a:?} {b:?}");
            assert!((a.h1 - b.h1).abs() < 1e-12);
            assert!((a.h2 - b.h2).abs() < 1e-12);
            assert!((a.h11 - b.h11).abs() < 1e-12);
            assert!((a.h22 - b.h22).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_band() {
        let h = make_builtin(&BuiltinSpec::StandardFk { k: 0.8 }).unwrap();
        assert!(modify_band(&h, 1, 1).is_err());
    }
}
