//! Adaptive Dormand-Prince 5(4) stepper with per-site absolute error control
//! and fresh-step evaluation inside the last step.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Explicit adaptive stepper for an autonomous system `ẋ = f(x)`.
pub struct Stepper<F: FnMut(&[f64], &mut [f64])> {
    f: F,
    pub t: f64,
    pub x: Vec<f64>,
    /// `f(x)` at the current state.
    pub fx: Vec<f64>,
    pub t_prev: f64,
    pub x_prev: Vec<f64>,
    pub fx_prev: Vec<f64>,
    dt: f64,
    tol: f64,
    dt_max: f64,
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    trial: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<F: FnMut(&[f64], &mut [f64])> Stepper<F> {
    pub fn new(mut f: F, x0: Vec<f64>, dt0: f64, tol: f64, dt_max: f64) -> Self {
        let n = x0.len();
        let mut fx = vec![0.0; n];
        f(&x0, &mut fx);
        Self {
            f,
            t: 0.0,
            x_prev: x0.clone(),
            fx_prev: fx.clone(),
            x: x0,
            fx,
            t_prev: 0.0,
            dt: dt0,
            tol,
            dt_max,
            k: vec![vec![0.0; n]; 7],
            stage: vec![0.0; n],
            trial: vec![0.0; n],
            accepted: 0,
            rejected: 0,
        }
    }

    /// One Dormand-Prince step of size `h` from `(x, fx)`. Writes the fifth
    /// order solution to `out` and returns the sup-norm of the embedded
    /// error estimate. `k[6]` holds `f(out)` afterwards.
    fn raw_step(&mut self, x: &[f64], fx: &[f64], h: f64, out: &mut Vec<f64>) -> f64 {
        let n = x.len();
        self.k[0].copy_from_slice(fx);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += a * self.k[j][i];
                    }
                }
                self.stage[i] = x[i] + h * acc;
            }
            (self.f)(&self.stage, &mut self.k[s]);
            if s == 6 {
                out.copy_from_slice(&self.stage);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, c) in E.iter().enumerate() {
                e += c * self.k[j][i];
            }
            err = err.max((h * e).abs());
        }
        err
    }

    /// Takes one accepted step, shrinking the step size as needed.
    pub fn step(&mut self) -> Result<()> {
        loop {
            let h = self.dt;
            if h < 1e-14 * (1.0 + self.t.abs()) {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let x = std::mem::take(&mut self.x);
            let fx = std::mem::take(&mut self.fx);
            let mut trial = std::mem::take(&mut self.trial);
            let err = self.raw_step(&x, &fx, h, &mut trial);
            let ratio = err / self.tol;
            if ratio <= 1.0 && trial.iter().all(|v| v.is_finite()) {
                self.t_prev = self.t;
                self.x_prev.copy_from_slice(&x);
                self.fx_prev.copy_from_slice(&fx);
                self.t += h;
                self.x = trial;
                self.fx = self.k[6].clone();
                self.trial = x;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                self.dt = (h * grow).min(self.dt_max);
                self.accepted += 1;
                return Ok(());
            }
            self.x = x;
            self.fx = fx;
            self.trial = trial;
            self.rejected += 1;
            let shrink = if ratio.is_finite() { (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.dt = h * shrink;
        }
    }

    /// Fifth-order state at `t` in `[t_prev, t]` obtained by a fresh single
    /// step from the previous accepted state. The step is no longer than an
    /// accepted one, so its local error is within tolerance.
    pub fn exact_at(&mut self, t: f64) -> Vec<f64> {
        let h = t - self.t_prev;
        if h <= 0.0 {
            return self.x_prev.clone();
        }
        let x = self.x_prev.clone();
        let fx = self.fx_prev.clone();
        let mut out = vec![0.0; x.len()];
        self.raw_step(&x, &fx, h, &mut out);
        out
    }

    /// Changes the step ceiling; the current suggestion is clipped to it.
    pub fn set_dt_max(&mut self, dt_max: f64) {
        self.dt_max = dt_max;
        self.dt = self.dt.min(dt_max);
    }

    /// Time and state inside the last step at which `g` equals `level`,
    /// assuming `g(x_prev)` and `g(x)` straddle it. Uses Illinois false
    /// position on fresh single steps from the previous accepted state.
    pub fn locate_level<G: Fn(&[f64]) -> f64>(&mut self, g: G, level: f64) -> (f64, Vec<f64>) {
        let (mut a, mut b) = (self.t_prev, self.t);
        let mut fa = g(&self.x_prev) - level;
        let mut fb = g(&self.x) - level;
        let mut best = (b, self.x.clone());
        let mut side = 0;
        for _ in 0..100 {
            let c = if (fb - fa).abs() > 0.0 { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
            let c = c.clamp(a.min(b), a.max(b));
            let xc = self.exact_at(c);
            let fc = g(&xc) - level;
            best = (c, xc);
            if fc.abs() < 1e-14 * (1.0 + level.abs()) || (b - a).abs() < 1e-14 * (1.0 + b.abs()) {
                break;
            }
            if (fc > 0.0) == (fb > 0.0) {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
        best
    }

    /// Restarts from a new state keeping the step controller.
    pub fn reset(&mut self, t: f64, x: Vec<f64>) {
        (self.f)(&x, &mut self.fx);
        self.t = t;
        self.t_prev = t;
        self.x_prev.copy_from_slice(&x);
        self.fx_prev.copy_from_slice(&self.fx);
        self.x = x;
    }
}
