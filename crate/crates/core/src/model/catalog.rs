//! Builtin generating functions: the standard Frenkel-Kontorova chain, a
//! double-well chain, a bistable trigonometric chain and a Mañé-type energy
//! `h = (x' - g(x))^2 / 2` built from a circle-map lift `g`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Derivs, GeneratingFunction, Kernel};
use crate::error::{Error, Result};

/// Spacing band given to every builtin. All builtins satisfy the twist bound
/// globally, so the band only limits how far flows may stretch a chain.
pub const BUILTIN_BAND: (i64, i64) = (-8, 8);

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI: f64 = 4.0 * PI;

/// Parameter block selecting a builtin chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinSpec {
    /// `h = (x'-x)^2/2 + k cos(2 pi x) / (4 pi^2)`.
    StandardFk { k: f64 },
    /// `h = k (x'-x)^2/2 + V(x)` with
    /// `V = -cos(2 pi x)/(4 pi^2) + b cos(4 pi x)/(16 pi^2)`, `b > 1`.
    DoubleWell { k: f64, b: f64 },
    /// `h = k (x'-x)^2/2 + V(x)` with
    /// `V = c1 cos(2 pi x) + c2 cos(4 pi x) + s1 sin(2 pi x)`.
    Bistable {
        k: f64,
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
        #[serde(default)]
        s1: f64,
    },
    /// `h = (x' - g(x))^2/2` with `g = x + f(x)` the piecewise lift of
    /// [`ManeShape`].
    Mane {
        #[serde(default = "default_a1")]
        a1: f64,
        #[serde(default = "default_a2")]
        a2: f64,
        #[serde(default = "default_b1")]
        b1: f64,
        #[serde(default = "default_b2")]
        b2: f64,
    },
}

fn default_c1() -> f64 {
    0.01
}
fn default_c2() -> f64 {
    -0.02
}
fn default_a1() -> f64 {
    0.25
}
fn default_a2() -> f64 {
    0.75
}
fn default_b1() -> f64 {
    0.09375
}
fn default_b2() -> f64 {
    -0.09375
}

impl BuiltinSpec {
    /// Mañé variant with the default shape.
    pub fn mane_default() -> Self {
        BuiltinSpec::Mane {
            a1: default_a1(),
            a2: default_a2(),
            b1: default_b1(),
            b2: default_b2(),
        }
    }

    /// The lift shape of a Mañé variant.
    pub fn mane_shape(&self) -> Option<ManeShape> {
        match *self {
            BuiltinSpec::Mane { a1, a2, b1, b2 } => Some(ManeShape { a1, a2, b1, b2 }),
            _ => None,
        }
    }
}

/// Builds the generating function for a builtin spec after validating its
/// parameters.
pub fn make_builtin(spec: &BuiltinSpec) -> Result<GeneratingFunction> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    match *spec {
        BuiltinSpec::StandardFk { k } => {
            if !(k >= 0.0) || !k.is_finite() {
                return bad(format!("standard_fk: k must be finite and >= 0, got {k}"));
            }
            GeneratingFunction::new(Arc::new(StandardFk { k }), 1.0, BUILTIN_BAND)
        }
        BuiltinSpec::DoubleWell { k, b } => {
            if !(k > 0.0) || !k.is_finite() {
                return bad(format!("double_well: k must be positive, got {k}"));
            }
            if !(b > 1.0) || !b.is_finite() {
                return bad(format!("double_well: b must exceed 1, got {b}"));
            }
            let kernel = OnSite {
                k,
                potential: Potential::DoubleWell { b },
            };
            GeneratingFunction::new(Arc::new(kernel), k, BUILTIN_BAND)
        }
        BuiltinSpec::Bistable { k, c1, c2, s1 } => {
            if !(k > 0.0) || !k.is_finite() {
                return bad(format!("bistable: k must be positive, got {k}"));
            }
            if ![c1, c2, s1].iter().all(|v| v.is_finite()) {
                return bad("bistable: well parameters must be finite".into());
            }
            let kernel = OnSite {
                k,
                potential: Potential::Trig { c1, c2, s1 },
            };
            GeneratingFunction::new(Arc::new(kernel), k, BUILTIN_BAND)
        }
        BuiltinSpec::Mane { a1, a2, b1, b2 } => {
            let shape = ManeShape { a1, a2, b1, b2 };
            shape.validate()?;
            let label = format!("mane(a1={a1}, a2={a2}, b1={b1}, b2={b2})");
            ManeKernel::generating_function(&label, 0.5, move |x| shape.lift(x))
        }
    }
}

#[derive(Debug)]
struct StandardFk {
    k: f64,
}

impl Kernel for StandardFk {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        let d = xp - x;
        let (s, c) = (TWO_PI * x).sin_cos();
        let k = self.k;
        Derivs {
            h: 0.5 * d * d + k * c / (4.0 * PI * PI),
            h1: -d - k * s / TWO_PI,
            h2: d,
            h11: 1.0 - k * c,
            h12: -1.0,
            h22: 1.0,
        }
    }

    fn label(&self) -> String {
        format!("standard_fk(k={})", self.k)
    }
}

#[derive(Clone, Copy, Debug)]
enum Potential {
    DoubleWell { b: f64 },
    Trig { c1: f64, c2: f64, s1: f64 },
}

impl Potential {
    /// `(V, V', V'')` at `x`.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (s2, c2) = (TWO_PI * x).sin_cos();
        let (s4, c4) = (FOUR_PI * x).sin_cos();
        match *self {
            Potential::DoubleWell { b } => {
                let v = -c2 / (4.0 * PI * PI) + b * c4 / (16.0 * PI * PI);
                let dv = s2 / TWO_PI - b * s4 / FOUR_PI;
                let ddv = c2 - b * c4;
                (v, dv, ddv)
            }
            Potential::Trig { c1, c2: a2, s1 } => {
                let v = c1 * c2 + a2 * c4 + s1 * s2;
                let dv = -TWO_PI * c1 * s2 - FOUR_PI * a2 * s4 + TWO_PI * s1 * c2;
                let ddv = -TWO_PI * TWO_PI * (c1 * c2 + s1 * s2) - FOUR_PI * FOUR_PI * a2 * c4;
                (v, dv, ddv)
            }
        }
    }
}

/// `h = k (x'-x)^2/2 + V(x)`.
#[derive(Debug)]
struct OnSite {
    k: f64,
    potential: Potential,
}

impl Kernel for OnSite {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        let d = xp - x;
        let k = self.k;
        let (v, dv, ddv) = self.potential.eval(x);
        Derivs {
            h: 0.5 * k * d * d + v,
            h1: -k * d + dv,
            h2: k * d,
            h11: k + ddv,
            h12: -k,
            h22: k,
        }
    }

    fn label(&self) -> String {
        match self.potential {
            Potential::DoubleWell { b } => format!("double_well(k={}, b={b})", self.k),
            Potential::Trig { c1, c2, s1 } => {
                format!("bistable(k={}, c1={c1}, c2={c2}, s1={s1})", self.k)
            }
        }
    }
}

/// `(g, g', g'')` of a circle-map lift with `g(x+1) = g(x) + 1`.
pub type Lift = dyn Fn(f64) -> (f64, f64, f64) + Send + Sync;

/// Mañé-type energy `h = (x' - g(x))^2 / 2`. Its twist map sends `(x, 0)` to
/// `(g(x), 0)`, so the line `y = 0` is invariant and carries the dynamics of
/// `g`.
pub struct ManeKernel {
    label: String,
    lift: Arc<Lift>,
}

impl fmt::Debug for ManeKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManeKernel").field("label", &self.label).finish()
    }
}

impl ManeKernel {
    /// Generating function from a lift returning `(g, g', g'')`. The caller
    /// supplies `c <= min g'`.
    pub fn generating_function<G>(label: &str, c: f64, lift: G) -> Result<GeneratingFunction>
    where
        G: Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    {
        let kernel = ManeKernel {
            label: label.to_string(),
            lift: Arc::new(lift),
        };
        GeneratingFunction::new(Arc::new(kernel), c, BUILTIN_BAND)
    }
}

impl Kernel for ManeKernel {
    fn eval(&self, x: f64, xp: f64) -> Derivs {
        let (g, g1, g2) = (self.lift)(x);
        let r = xp - g;
        Derivs {
            h: 0.5 * r * r,
            h1: -r * g1,
            h2: r,
            h11: g1 * g1 - r * g2,
            h12: -g1,
            h22: 1.0,
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Piecewise C¹ displacement `f` with `g = x + f`:
/// `f = -x/2` on `[0, a1/2]`, `f = -(x-1)/2` on `[(1+a2)/2, 1]`, and cubic
/// Hermite pieces reaching `f(a1) = -b1`, `f(a2) = -b2` with zero slope there.
/// The fixed points of `g` in a period are `0` and the zero of `f` inside
/// `(a1, a2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManeShape {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Cubic Hermite interpolant on `[x0, x1]`: value, first and second derivative.
fn hermite(x: f64, x0: f64, y0: f64, m0: f64, x1: f64, y1: f64, m1: f64) -> (f64, f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1;
    let dv = ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (3.0 * t2 - 2.0 * t) * m1;
    let ddv = ((12.0 * t - 6.0) * y0 + (-12.0 * t + 6.0) * y1) / (h * h)
        + ((6.0 * t - 4.0) * m0 + (6.0 * t - 2.0) * m1) / h;
    (v, dv, ddv)
}

impl ManeShape {
    fn validate(&self) -> Result<()> {
        let ManeShape { a1, a2, b1, b2 } = *self;
        if ![a1, a2, b1, b2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("mane: parameters must be finite".into()));
        }
        if !(0.0 < a1 && a1 < a2 && a2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mane: need 0 < a1 < a2 < 1, got a1={a1}, a2={a2}"
            )));
        }
        if !(b1 > 0.0 && b2 < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mane: need b1 > 0 > b2 so that g has an interior fixed point, got b1={b1}, b2={b2}"
            )));
        }
        let min_slope = self.min_g_prime(4000);
        if min_slope < 0.5 - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mane: non-monotone g, min g' = {min_slope} < 1/2"
            )));
        }
        Ok(())
    }

    /// `(f, f', f'')` at `x`.
    pub fn displacement(&self, x: f64) -> (f64, f64, f64) {
        let ManeShape { a1, a2, b1, b2 } = *self;
        let u = x - x.floor();
        let left = 0.5 * a1;
        let right = 0.5 * (1.0 + a2);
        if u <= left {
            (-0.5 * u, -0.5, 0.0)
        } else if u <= a1 {
            hermite(u, left, -0.5 * left, -0.5, a1, -b1, 0.0)
        } else if u <= a2 {
            hermite(u, a1, -b1, 0.0, a2, -b2, 0.0)
        } else if u <= right {
            hermite(u, a2, -b2, 0.0, right, -0.5 * (right - 1.0), -0.5)
        } else {
            (-0.5 * (u - 1.0), -0.5, 0.0)
        }
    }

    /// `(g, g', g'')` with `g = x + f(x)`.
    pub fn lift(&self, x: f64) -> (f64, f64, f64) {
        let (f, f1, f2) = self.displacement(x);
        (x + f, 1.0 + f1, f2)
    }

    fn min_g_prime(&self, n: usize) -> f64 {
        (0..=n)
            .map(|i| self.lift(i as f64 / n as f64 * 0.999_999_999).1)
            .fold(f64::INFINITY, f64::min)
    }

    /// The interior fixed point of `g`, the zero of `f` in `(a1, a2)`.
    pub fn interior_fixed_point(&self) -> f64 {
        let (mut lo, mut hi) = (self.a1, self.a2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.displacement(mid).0 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Wells of a tilted bistable potential at the force that levels them.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BistableLevelling {
    /// Tilt at which `V(b) - F b = V(a+1) - F (a+1)`.
    pub force: f64,
    /// Lower well in `[0, 1)`.
    pub a: f64,
    /// Upper well in `(a, a+1)`.
    pub b: f64,
}

impl BuiltinSpec {
    /// For a bistable spec, the tilt that levels the two wells `b` and `a+1`
    /// of `V(x) - F x`, with `a < b` the two local minima in one period.
    pub fn bistable_levelling(&self) -> Result<BistableLevelling> {
        let BuiltinSpec::Bistable { c1, c2, s1, .. } = *self else {
            return Err(Error::InvalidParameter("levelling needs a bistable spec".into()));
        };
        let pot = Potential::Trig { c1, c2, s1 };
        // Minima of V - F x near a start point, by Newton on V' = F.
        let well = |start: f64, f: f64| -> Option<f64> {
            let mut x = start;
            for _ in 0..100 {
                let (_, d1, d2) = pot.eval(x);
                if d2 <= 0.0 {
                    return None;
                }
                let step = (d1 - f) / d2;
                x -= step.clamp(-0.05, 0.05);
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d1, d2) = pot.eval(x);
            ((d1 - f).abs() < 1e-12 && d2 > 0.0).then_some(x)
        };
        // Locate the untilted minima on a grid.
        let n = 2000;
        let mut minima = Vec::new();
        for i in 0..n {
            let x = i as f64 / n as f64;
            let (v0, _, _) = pot.eval(x - 1.0 / n as f64);
            let (v1, _, _) = pot.eval(x);
            let (v2, _, _) = pot.eval(x + 1.0 / n as f64);
            if v1 < v0 && v1 <= v2 {
                if let Some(m) = well(x, 0.0) {
                    minima.push(m - m.floor());
                }
            }
        }
        minima.sort_by(f64::total_cmp);
        minima.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if minima.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "bistable: expected two wells per period, found {}",
                minima.len()
            )));
        }
        let (a0, b0) = (minima[0], minima[1]);
        let gap = |f: f64| -> Option<(f64, f64, f64)> {
            let a = well(a0, f)?;
            let b = well(b0, f)?;
            let g = (pot.eval(b).0 - f * b) - (pot.eval(a + 1.0).0 - f * (a + 1.0));
            Some((g, a, b))
        };
        // The gap grows with F at rate (a + 1 - b); march to a sign change,
        // then bisect. Levelling with F >= 0 needs b to be the deeper well.
        if gap(0.0).ok_or_else(|| Error::NoSolution("bistable wells vanish".into()))?.0 >= 0.0 {
            return Err(Error::NoSolution(
                "bistable: the upper well b must be deeper than a at F = 0".into(),
            ));
        }
        let (mut lo, mut step) = (0.0, 1e-3);
        let mut hi = loop {
            let cand = lo + step;
            let (g, _, _) = gap(cand).ok_or_else(|| {
                Error::NoSolution("bistable wells disappear before they level".into())
            })?;
            if g > 0.0 {
                break cand;
            }
            lo = cand;
            step *= 1.5;
            if lo > 10.0 {
                return Err(Error::NoSolution("bistable wells never level".into()));
            }
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (g, _, _) = gap(mid).ok_or_else(|| Error::NoSolution("well lost".into()))?;
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        let force = 0.5 * (lo + hi);
        let (_, a, b) = gap(force).ok_or_else(|| Error::NoSolution("well lost".into()))?;
        Ok(BistableLevelling { force, a, b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{verify_properties, TiltedEnergy};

    #[test]
    fn double_well_minima_at_c() {
        // cos(2 pi c) = 1/b with b = 2 gives c = 1/6.
        let pot = Potential::DoubleWell { b: 2.0 };
        let c = 1.0 / 6.0;
        for x in [c, -c] {
            let (_, dv, ddv) = pot.eval(x);
            assert!(dv.abs() < 1e-15);
            assert!(ddv > 0.0);
        }
    }

    #[test]
    fn double_well_diagonal_gradient_is_potential_slope() {
        let h = make_builtin(&BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 }).unwrap();
        for &x in &[0.07, 0.31, -0.44] {
            let d = h.eval(x, x);
            // V'(x) from the closed form, differentiated by hand.
            let dv = (2.0 * PI * x).sin() / (2.0 * PI) - 2.0 * (4.0 * PI * x).sin() / (4.0 * PI);
            assert!((d.h1 + d.h2 - dv).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(make_builtin(&BuiltinSpec::DoubleWell { k: 0.03, b: 1.0 }).is_err());
        assert!(make_builtin(&BuiltinSpec::StandardFk { k: -1.0 }).is_err());
        let steep = BuiltinSpec::Mane {
            a1: 0.25,
            a2: 0.3,
            b1: 0.2,
            b2: -0.2,
        };
        assert!(matches!(make_builtin(&steep), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn mane_shape_is_c1_and_periodic() {
        let s = BuiltinSpec::mane_default().mane_shape().unwrap();
        for &x in &[s.a1 / 2.0, s.a1, s.a2, 0.5 * (1.0 + s.a2)] {
            let l = s.displacement(x - 1e-12);
            let r = s.displacement(x + 1e-12);
            assert!((l.0 - r.0).abs() < 1e-10);
            assert!((l.1 - r.1).abs() < 1e-10);
        }
        let (f0, _, _) = s.displacement(0.0);
        let (f1, _, _) = s.displacement(1.0 - 1e-15);
        assert!(f0.abs() < 1e-12 && f1.abs() < 1e-12);
        let b = s.interior_fixed_point();
        assert!((b - 0.5).abs() < 1e-12);
        assert!(s.min_g_prime(10_000) >= 0.5 - 1e-12);
    }

    #[test]
    fn mane_fixed_points_are_map_fixed_points() {
        let spec = BuiltinSpec::mane_default();
        let h = make_builtin(&spec).unwrap();
        let b = spec.mane_shape().unwrap().interior_fixed_point();
        for x in [0.0, b] {
            // y' = x' - g(x) vanishes for x' = g(x) = x, and y = -h1 = g'(x)(x' - g(x)).
            let d = h.eval(x, x);
            assert!(d.h1.abs() < 1e-15 && d.h2.abs() < 1e-15);
        }
        let rep = verify_properties(&h, 1000);
        assert!(rep.is_valid());
        assert!(rep.min_neg_h12 >= 0.5);
        assert!(rep.max_first_derivative_error < 1e-6);
    }

    #[test]
    fn catalog_derivatives_match_differences() {
        let specs = [
            BuiltinSpec::StandardFk { k: 1.0 },
            BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 },
            BuiltinSpec::Bistable {
                k: 10.0,
                c1: 0.01,
                c2: -0.02,
                s1: 0.003,
            },
        ];
        for spec in &specs {
            let h = make_builtin(spec).unwrap();
            let rep = verify_properties(&h, 1000);
            assert!(rep.is_valid(), "{spec:?}: {rep:?}");
            assert!(rep.max_periodicity_violation < 1e-12);
            assert!(rep.max_first_derivative_error < 1e-6, "{spec:?}: {rep:?}");
            assert!(rep.max_second_derivative_error < 1e-5, "{spec:?}: {rep:?}");
        }
    }

    #[test]
    fn bistable_levelling_levels_the_wells() {
        let spec = BuiltinSpec::Bistable {
            k: 10.0,
            c1: 0.01,
            c2: -0.02,
            s1: 0.0,
        };
        let lev = spec.bistable_levelling().unwrap();
        let v = |x: f64| 0.01 * (2.0 * PI * x).cos() - 0.02 * (4.0 * PI * x).cos();
        let f = lev.force;
        let gap = (v(lev.b) - f * lev.b) - (v(lev.a + 1.0) - f * (lev.a + 1.0));
        assert!(gap.abs() < 1e-13);
        assert!(lev.a < lev.b && lev.b < lev.a + 1.0);
        let h = make_builtin(&spec).unwrap();
        let e = TiltedEnergy::new(h, f).unwrap();
        for x in [lev.a, lev.b] {
            let d = e.eval(x, x);
            assert!((d.h1 + d.h2).abs() < 1e-12);
        }
    }
}
