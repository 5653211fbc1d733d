//! Newton solvers for equilibria of periodic states and windows, and the
//! Hessian of the periodic action.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, solve_tridiagonal, sup_norm, symmetric_eigen};
use crate::model::{GeneratingFunction, TiltedEnergy};

use super::{rhs_periodic_into, rhs_window_into};

/// Relative size `|λ| / ‖D²W‖` below which a Hessian counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Eigenvalues of `D²W_{p,q}` and derived summaries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianSpectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Number of negative eigenvalues.
    pub morse_index: usize,
    /// Largest eigenvalue magnitude.
    pub norm: f64,
    /// Smallest eigenvalue magnitude is below `DEGENERACY_TOL · norm`.
    pub degenerate: bool,
}

impl HessianSpectrum {
    fn from_eigenvalues(eigenvalues: Vec<f64>) -> Self {
        let norm = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let smallest = eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let degenerate = smallest <= DEGENERACY_TOL * norm.max(f64::MIN_POSITIVE) || norm == 0.0;
        let morse_index = eigenvalues
            .iter()
            .filter(|v| **v < 0.0 && v.abs() > DEGENERACY_TOL * norm)
            .count();
        Self {
            eigenvalues,
            morse_index,
            norm,
            degenerate,
        }
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Hessian of `W_{p,q}` on the `q` stored sites. Each bond `(n, n+1)` adds
/// `h11` to `(n, n)`, `h22` to `(n+1, n+1)` and `h12` to both mixed entries,
/// with indices taken mod `q`; for `q = 1` this gives `h11 + h22 + 2 h12`.
pub fn hessian_periodic(x: &PeriodicConfiguration, h: &GeneratingFunction) -> DMatrix<f64> {
    let q = x.q();
    let mut m = DMatrix::zeros(q, q);
    for n in 0..q {
        let d = h.eval(x.at(n as i64), x.at(n as i64 + 1));
        let j = (n + 1) % q;
        m[(n, n)] += d.h11;
        m[(j, j)] += d.h22;
        m[(n, j)] += d.h12;
        m[(j, n)] += d.h12;
    }
    m
}

/// Full spectrum of `D²W_{p,q}`; the tilt does not change second derivatives.
pub fn hessian_spectrum_periodic(x: &PeriodicConfiguration, e: &TiltedEnergy) -> HessianSpectrum {
    let (values, _) = symmetric_eigen(&hessian_periodic(x, &e.h));
    HessianSpectrum::from_eigenvalues(values)
}

/// Tridiagonal Hessian `(sub, diag, sup)` of the window action with the
/// outside sites held at their asymptotes.
pub fn window_hessian(w: &WindowConfiguration, e: &TiltedEnergy, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let len = x.len();
    let l = w.l();
    let at = |i: i64| -> f64 {
        if i < 0 {
            w.left_asym_at(l + i)
        } else if i as usize >= len {
            w.right_asym_at(l + i)
        } else {
            x[i as usize]
        }
    };
    let mut diag = vec![0.0; len];
    let mut off = vec![0.0; len.saturating_sub(1)];
    for i in -1..len as i64 {
        let d = e.h.eval(at(i), at(i + 1));
        if i >= 0 {
            diag[i as usize] += d.h11;
        }
        if ((i + 1) as usize) < len {
            diag[(i + 1) as usize] += d.h22;
        }
        if i >= 0 && ((i + 1) as usize) < len {
            off[i as usize] = d.h12;
        }
    }
    (off.clone(), diag, off)
}

/// Newton iteration controls.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Residual sup-norm at which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest sup-norm of a single step.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            max_step: 0.25,
        }
    }
}

/// A converged periodic equilibrium.
#[derive(Clone, Debug, Serialize)]
pub struct Equilibrium {
    pub config: PeriodicConfiguration,
    /// Sup-norm of the equilibrium residual.
    pub residual: f64,
    pub iterations: usize,
    pub spectrum: HessianSpectrum,
}

/// Newton's method for `h2(x_{n-1},x_n) + h1(x_n,x_{n+1}) = F` with the
/// default options.
pub fn find_equilibrium(x0: &PeriodicConfiguration, e: &TiltedEnergy) -> Result<Equilibrium> {
    find_equilibrium_with(x0, e, &NewtonOptions::default())
}

/// Damped Newton with a regularised least-squares fallback when the Hessian
/// is singular.
pub fn find_equilibrium_with(
    x0: &PeriodicConfiguration,
    e: &TiltedEnergy,
    opts: &NewtonOptions,
) -> Result<Equilibrium> {
    let p = x0.p();
    let q = x0.q();
    let mut x = x0.values().to_vec();
    let mut r = vec![0.0; q];
    let residual = |x: &[f64], r: &mut [f64]| {
        rhs_periodic_into(e, p, x, r);
        sup_norm(r)
    };
    let mut res = residual(&x, &mut r);
    let mut iterations = 0;
    while res >= opts.tol {
        if iterations >= opts.max_iter || !res.is_finite() {
            return Err(Error::Newton(format!(
                "periodic equilibrium: residual {res:.3e} after {iterations} iterations"
            )));
        }
        iterations += 1;
        let config = x0.with_values(x.clone())?;
        let hess = hessian_periodic(&config, &e.h);
        let delta = solve_dense(&hess, &r).unwrap_or_else(|| regularised_solve(&hess, &r));
        match line_search(&x, &delta, res, opts.max_step, &mut |y, out| residual(y, out)) {
            Some((y, ry, res_y)) => {
                x = y;
                r = ry;
                res = res_y;
            }
            None if res < 1e3 * opts.tol => break,
            None => {
                return Err(Error::Newton(format!(
                    "periodic equilibrium: line search stalled at residual {res:.3e}"
                )))
            }
        }
    }
    let config = x0.with_values(x)?;
    let spectrum = hessian_spectrum_periodic(&config, e);
    Ok(Equilibrium {
        config,
        residual: res,
        iterations,
        spectrum,
    })
}

/// `(HᵀH + μ I) δ = Hᵀ r` with a small relative `μ`.
fn regularised_solve(h: &DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    let n = h.nrows();
    let ht = h.transpose();
    let scale = h.norm().max(1e-300);
    let normal = &ht * h + DMatrix::identity(n, n) * (1e-10 * scale * scale);
    let rhs = &ht * nalgebra::DVector::from_column_slice(r);
    solve_dense(&normal, rhs.as_slice()).unwrap_or_else(|| vec![0.0; n])
}

/// Backtracking on the residual sup-norm along a clamped Newton direction.
/// Because `ẋ = -∇W`, the Newton step solving `H δ = ẋ` moves toward the
/// zero of the velocity.
fn line_search(
    x: &[f64],
    delta: &[f64],
    res: f64,
    max_step: f64,
    residual: &mut dyn FnMut(&[f64], &mut [f64]) -> f64,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let size = sup_norm(delta);
    if !size.is_finite() || size == 0.0 {
        return None;
    }
    let mut lambda = if size > max_step { max_step / size } else { 1.0 };
    let mut r = vec![0.0; x.len()];
    for _ in 0..30 {
        let y: Vec<f64> = x.iter().zip(delta).map(|(a, d)| a + lambda * d).collect();
        let res_y = residual(&y, &mut r);
        if res_y < res {
            return Some((y, r, res_y));
        }
        lambda *= 0.5;
    }
    None
}

/// A converged window equilibrium.
#[derive(Clone, Debug)]
pub struct WindowEquilibrium {
    pub window: WindowConfiguration,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton's method on the window residual with the outside sites clamped to
/// the asymptotes; each step is one pivoted tridiagonal solve.
pub fn find_equilibrium_window(
    w0: &WindowConfiguration,
    e: &TiltedEnergy,
    opts: &NewtonOptions,
) -> Result<WindowEquilibrium> {
    let len = w0.len();
    let mut x = w0.values().to_vec();
    let mut r = vec![0.0; len];
    let residual = |x: &[f64], r: &mut [f64]| {
        rhs_window_into(e, w0, x, r);
        sup_norm(r)
    };
    let mut res = residual(&x, &mut r);
    let mut iterations = 0;
    while res >= opts.tol {
        if iterations >= opts.max_iter || !res.is_finite() {
            return Err(Error::Newton(format!(
                "window equilibrium: residual {res:.3e} after {iterations} iterations"
            )));
        }
        iterations += 1;
        let (sub, diag, sup) = window_hessian(w0, e, &x);
        let delta = solve_tridiagonal(&sub, &diag, &sup, &r).ok_or_else(|| {
            Error::Newton(format!("window equilibrium: singular Hessian at residual {res:.3e}"))
        })?;
        match line_search(&x, &delta, res, opts.max_step, &mut |y, out| residual(y, out)) {
            Some((y, ry, res_y)) => {
                x = y;
                r = ry;
                res = res_y;
            }
            None if res < 1e3 * opts.tol => break,
            None => {
                return Err(Error::Newton(format!(
                    "window equilibrium: line search stalled at residual {res:.3e}"
                )))
            }
        }
    }
    Ok(WindowEquilibrium {
        window: w0.with_values(x)?,
        residual: res,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};
    use std::f64::consts::PI;

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    #[test]
    fn minimum_of_standard_chain() {
        let eq = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.4), &fk(1.0, 0.0)).unwrap();
        assert!((eq.config.values()[0] - 0.5).abs() < 1e-12);
        assert!(eq.residual < 1e-12);
        assert_eq!(eq.spectrum.morse_index, 0);
    }

    #[test]
    fn tilted_equilibrium_solves_closed_form() {
        let (k, f) = (1.0, 0.1);
        let eq = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.45), &fk(k, f)).unwrap();
        let x = eq.config.values()[0];
        assert!(((2.0 * PI * x).sin() + 2.0 * PI * f / k).abs() < 1e-10);
        // Stable branch: positive curvature -k cos 2πx > 0.
        assert!(-(2.0 * PI * x).cos() > 0.0);
    }

    #[test]
    fn type_one_one_equilibrium() {
        let x0 = PeriodicConfiguration::new(3, 3, vec![0.45, 1.55, 2.5]).unwrap();
        let eq = find_equilibrium(&x0, &fk(2.0, 0.0)).unwrap();
        for (n, v) in eq.config.values().iter().enumerate() {
            assert!((v - (n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn single_site_eigenvalues() {
        let e = fk(0.7, 0.0);
        let top = hessian_spectrum_periodic(&PeriodicConfiguration::uniform(0, 1, 0.0), &e);
        let bottom = hessian_spectrum_periodic(&PeriodicConfiguration::uniform(0, 1, 0.5), &e);
        assert!((top.eigenvalues[0] + 0.7).abs() < 1e-12);
        assert!((bottom.eigenvalues[0] - 0.7).abs() < 1e-12);
        assert_eq!(top.morse_index, 1);
    }

    #[test]
    fn two_site_off_diagonal_sums_both_bonds() {
        let x = PeriodicConfiguration::new(1, 2, vec![0.1, 0.6]).unwrap();
        let m = hessian_periodic(&x, &fk(0.3, 0.0).h);
        assert!((m[(0, 1)] + 2.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn window_kink_converges() {
        let e = fk(1.0, 0.0);
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.5);
        let w = WindowConfiguration::from_fn(-15, 15, lo, hi, |n| 1.0 + 0.5 * (n as f64 / 2.0).tanh()).unwrap();
        let sol = find_equilibrium_window(&w, &e, &NewtonOptions::default()).unwrap();
        assert!(sol.residual < 1e-12);
        let v = sol.window.values();
        assert!(v.windows(2).all(|p| p[1] > p[0]));
    }
}
