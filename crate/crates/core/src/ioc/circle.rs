//! Ordered circles assembled from gradient descents out of index-1 saddles,
//! and their verification.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EquilibriumCatalog, DEDUP_TOL};
use crate::config::PeriodicConfiguration;
use crate::error::{Error, Result};
use crate::flow::integrator::Stepper;
use crate::flow::{
    classify, find_equilibrium, hessian_periodic, rhs, rhs_periodic_into, FlowSettings, VelocityVerdict,
};
use crate::linalg::{sup_norm, symmetric_eigen};
use crate::model::TiltedEnergy;

/// How a circle sample was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleSource {
    /// Descent curves between saddles and minima.
    Descents,
    /// One period of a sliding state.
    Sliding,
    /// Supplied directly.
    Given,
}

/// A closed ordered family sampled on an increasing grid `s ∈ [0, 1 + margin]`
/// with `config(s + 1) = config(s) + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct OrderedCircleSample {
    pub p: i64,
    pub q: usize,
    pub s: Vec<f64>,
    /// Stored positions `x_0..x_{q-1}` per grid point.
    pub configs: Vec<Vec<f64>>,
    pub source: CircleSource,
    /// Index-1 saddles the circle passes through, in order.
    pub saddles: Vec<PeriodicConfiguration>,
    /// Minima the circle passes through; saddle `i` lies between minima
    /// `i` and `i + 1`.
    pub minima: Vec<PeriodicConfiguration>,
}

impl OrderedCircleSample {
    pub fn new(p: i64, q: usize, s: Vec<f64>, configs: Vec<Vec<f64>>) -> Result<Self> {
        if s.len() != configs.len() || s.len() < 5 {
            return Err(Error::InvalidParameter("circle sample needs at least 5 matching grid points".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("circle grid must be strictly increasing".into()));
        }
        if configs.iter().any(|c| c.len() != q) {
            return Err(Error::InvalidParameter(format!("every config must hold {q} positions")));
        }
        Ok(Self { p, q, s, configs, source: CircleSource::Given, saddles: Vec::new(), minima: Vec::new() })
    }

    /// Samples `f(s)` on `n` uniform points of `[0, 1]` and appends the
    /// periodic extension up to `1 + margin`.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(p: i64, q: usize, n: usize, margin: f64, f: F) -> Result<Self> {
        let s: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let configs: Vec<Vec<f64>> = s.iter().map(|&t| f(t)).collect();
        let (s, configs) = extend_periodic(s, configs, margin);
        Self::new(p, q, s, configs)
    }

    pub fn config(&self, i: usize) -> Result<PeriodicConfiguration> {
        PeriodicConfiguration::new(self.p, self.q, self.configs[i].clone())
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Number of grid points in the base period `s < 1`.
    fn base_len(&self) -> usize {
        self.s.iter().take_while(|&&t| t < 1.0 - 1e-12).count()
    }

    /// Largest sup-distance from a config of one sample to the nearest
    /// config (or unit diagonal shift of one) of the other, symmetrised.
    pub fn hausdorff(&self, other: &Self) -> f64 {
        let one_way = |a: &Self, b: &Self| {
            // Both samples are ordered, so `x_0` increases along the shifted
            // copies and bounds the sup-distance from below.
            let pool: Vec<Vec<f64>> = [-1.0, 0.0, 1.0]
                .iter()
                .flat_map(|d| b.configs[..b.base_len()].iter().map(move |y| y.iter().map(|v| v + d).collect()))
                .collect();
            let mut pool = pool;
            pool.sort_by(|u, v| u[0].total_cmp(&v[0]));
            a.configs[..a.base_len()]
                .iter()
                .map(|x| {
                    let i = pool.partition_point(|y| y[0] < x[0]);
                    let mut best = f64::INFINITY;
                    for y in pool[i..].iter() {
                        if y[0] - x[0] >= best {
                            break;
                        }
                        best = best.min(sup_dist_shift(x, y, 0.0));
                    }
                    for y in pool[..i].iter().rev() {
                        if x[0] - y[0] >= best {
                            break;
                        }
                        best = best.min(sup_dist_shift(x, y, 0.0));
                    }
                    best
                })
                .fold(0.0, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }

    /// CSV with header `s,x_0,...,x_{q-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s");
        for n in 0..self.q {
            let _ = write!(out, ",x_{n}");
        }
        out.push('\n');
        for (s, c) in self.s.iter().zip(&self.configs) {
            let _ = write!(out, "{s:.12e}");
            for v in c {
                let _ = write!(out, ",{v:.15e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn sup_dist_shift(x: &[f64], y: &[f64], d: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b - d).abs()).fold(0.0, f64::max)
}

/// Appends `(s + 1, x + 1)` for the grid points with `s ≤ margin`, after
/// the point `(1, x(0) + 1)`.
fn extend_periodic(mut s: Vec<f64>, mut configs: Vec<Vec<f64>>, margin: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let base = s.len();
    for i in 0..base {
        if s[i] > margin + 1e-12 {
            break;
        }
        s.push(s[i] + 1.0);
        configs.push(configs[i].iter().map(|v| v + 1.0).collect());
    }
    (s, configs)
}

/// Controls for circle construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IocOptions {
    /// Largest Euclidean distance between consecutive samples.
    pub max_chord: f64,
    /// Length of the periodic extension beyond `s = 1`.
    pub margin: f64,
    /// Offset from a saddle along its unstable eigenvector.
    pub descent_offset: f64,
    /// Local error tolerance of the descent integration.
    pub tol: f64,
    /// Cap on the number of circles returned.
    pub max_circles: usize,
    /// Hausdorff distance below which two circles are merged.
    pub distinct_tol: f64,
}

impl Default for IocOptions {
    fn default() -> Self {
        Self {
            max_chord: 2e-3,
            margin: 0.1,
            descent_offset: 1e-6,
            tol: 1e-12,
            max_circles: 16,
            distinct_tol: 1e-4,
        }
    }
}

/// Descent out of a saddle in both directions of its unstable eigenvector.
#[derive(Clone, Debug)]
struct SaddleLink {
    saddle: PeriodicConfiguration,
    /// Saddle to lower minimum.
    down: Vec<Vec<f64>>,
    /// Saddle to upper minimum.
    up: Vec<Vec<f64>>,
}

impl SaddleLink {
    fn lo(&self) -> &[f64] {
        self.down.last().unwrap()
    }
}

/// Integrates the flow from `start` until it settles, recording points no
/// further apart than `max_chord`, and polishes the end by Newton.
fn descend(start: &[f64], p: i64, e: &TiltedEnergy, opts: &IocOptions) -> Result<Vec<Vec<f64>>> {
    let q = start.len();
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out),
        start.to_vec(),
        0.01,
        opts.tol,
        1.0,
    );
    let mut pts = vec![start.to_vec()];
    let mut steps = 0usize;
    while sup_norm(&stepper.fx) > 1e-11 {
        stepper.step()?;
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::NoSolution("descent did not settle".into()));
        }
        crate::flow::check_band_periodic(e, p, &stepper.x)?;
        let chord = dist(&stepper.x, pts.last().unwrap());
        let m = (chord / opts.max_chord).ceil() as usize;
        let (t0, t1) = (stepper.t_prev, stepper.t);
        for j in 1..m {
            let t = t0 + (t1 - t0) * j as f64 / m as f64;
            pts.push(stepper.exact_at(t));
        }
        pts.push(stepper.x.clone());
    }
    let end = find_equilibrium(&PeriodicConfiguration::new(p, q, stepper.x.clone())?, e)?;
    if end.spectrum.morse_index != 0 {
        return Err(Error::NoSolution(format!(
            "descent ended at an equilibrium of index {}",
            end.spectrum.morse_index
        )));
    }
    if dist(end.config.values(), pts.last().unwrap()) > 1e-14 {
        pts.push(end.config.values().to_vec());
    } else {
        *pts.last_mut().unwrap() = end.config.values().to_vec();
    }
    Ok(pts)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn link_for(saddle: &PeriodicConfiguration, e: &TiltedEnergy, opts: &IocOptions) -> Result<SaddleLink> {
    let (_, vecs) = symmetric_eigen(&hessian_periodic(saddle, &e.h));
    let mut v: Vec<f64> = vecs.column(0).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    let x = saddle.values();
    let shifted = |sign: f64| -> Vec<f64> {
        x.iter().zip(&v).map(|(a, b)| a + sign * opts.descent_offset * b).collect()
    };
    let mut up = descend(&shifted(1.0), saddle.p(), e, opts)?;
    let mut down = descend(&shifted(-1.0), saddle.p(), e, opts)?;
    up.insert(0, x.to_vec());
    down.insert(0, x.to_vec());
    Ok(SaddleLink { saddle: saddle.clone(), down, up })
}

fn translate_points(points: &[Vec<f64>], p: i64, j: i64, k: i64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            PeriodicConfiguration::new(p, x.len(), x.clone())
                .map(|c| c.translate(j, k).into_values())
                .unwrap_or_else(|_| x.clone())
        })
        .collect()
}

/// Translation `(j, k)` carrying `from` onto `to`, if any.
fn matching_translation(from: &[f64], to: &[f64], p: i64) -> Option<(i64, i64)> {
    let q = from.len();
    let c = PeriodicConfiguration::new(p, q, from.to_vec()).ok()?;
    (0..q as i64).find_map(|j| {
        let moved = c.translate(j, 0);
        let k = (mean(to) - mean(moved.values())).round() as i64;
        let moved = moved.translate(0, k);
        (sup_dist_shift(moved.values(), to, 0.0) < 1e2 * DEDUP_TOL).then_some((j, k))
    })
}

/// Builds ordered circles from the index-1 saddles of the catalog; when the
/// catalog holds no minimum, falls back to one period of the sliding state.
pub fn build_ioc(catalog: &EquilibriumCatalog, e: &TiltedEnergy) -> Result<Vec<OrderedCircleSample>> {
    build_ioc_with(catalog, e, &IocOptions::default())
}

pub fn build_ioc_with(
    catalog: &EquilibriumCatalog,
    e: &TiltedEnergy,
    opts: &IocOptions,
) -> Result<Vec<OrderedCircleSample>> {
    let (p, q) = (catalog.p, catalog.q);
    let minima: Vec<&PeriodicConfiguration> = catalog.minima().map(|c| &c.config).collect();
    if minima.is_empty() {
        return sliding_circle(p, q, e, opts).map(|c| vec![c]);
    }
    let saddles: Vec<PeriodicConfiguration> = catalog.with_index(1).map(|c| c.config.clone()).collect();
    if saddles.is_empty() {
        return Err(Error::NoSolution("catalog has minima but no index-1 saddle".into()));
    }
    let links: Vec<SaddleLink> = saddles
        .par_iter()
        .map(|s| link_for(s, e, opts))
        .collect::<Result<Vec<_>>>()?;

    // Depth-first search over saddle choices from each minimum until the
    // chain reaches the diagonal shift of its start.
    let mut circles: Vec<OrderedCircleSample> = Vec::new();
    let mut budget = 20_000usize;
    let mut seen = std::collections::HashSet::new();
    for m0 in &minima {
        let start = m0.values().to_vec();
        let goal: Vec<f64> = start.iter().map(|v| v + 1.0).collect();
        let mut stack: Vec<(Vec<f64>, Vec<(usize, i64, i64)>)> = vec![(start.clone(), Vec::new())];
        while let Some((cur, path)) = stack.pop() {
            if budget == 0 || circles.len() >= opts.max_circles {
                break;
            }
            budget -= 1;
            if sup_dist_shift(&cur, &goal, 0.0) < 1e2 * DEDUP_TOL {
                let key = saddle_key(&links, &path, 0);
                // The circle must contain its index shift, otherwise the
                // union of its translates is not ordered.
                if key != saddle_key(&links, &path, 1) || !seen.insert(key) {
                    continue;
                }
                let sample = assemble(p, q, &links, &path, opts)?;
                if !circles.iter().any(|c| c.hausdorff(&sample) < opts.distinct_tol) {
                    circles.push(sample);
                }
                continue;
            }
            if mean(&cur) > mean(&goal) + 1e-9 || path.len() > 4 * q * (links.len() + 1) {
                continue;
            }
            for (li, link) in links.iter().enumerate() {
                if let Some((j, k)) = matching_translation(link.lo(), &cur, p) {
                    let hi = translate_points(&link.up[link.up.len() - 1..], p, j, k).remove(0);
                    let mut next = path.clone();
                    next.push((li, j, k));
                    stack.push((hi, next));
                }
            }
        }
    }
    if circles.is_empty() {
        return Err(Error::NoSolution("no chain of saddle descents closes up".into()));
    }
    Ok(circles)
}

/// Saddles of a closing chain, translated by `T_{index_shift, 0}`, taken
/// modulo the diagonal shift, rounded and sorted, so chains through the
/// same saddles share a key.
fn saddle_key(links: &[SaddleLink], path: &[(usize, i64, i64)], index_shift: i64) -> Vec<Vec<i64>> {
    let mut key: Vec<Vec<i64>> = path
        .iter()
        .map(|&(li, j, k)| {
            let s = super::normalise(&links[li].saddle.translate(j + index_shift, k));
            s.values().iter().map(|v| (v * 1e6).round() as i64).collect()
        })
        .collect();
    key.sort();
    key.dedup();
    key
}

fn assemble(
    p: i64,
    q: usize,
    links: &[SaddleLink],
    path: &[(usize, i64, i64)],
    opts: &IocOptions,
) -> Result<OrderedCircleSample> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut saddles = Vec::new();
    let mut minima = Vec::new();
    for &(li, j, k) in path {
        let link = &links[li];
        let lo = PeriodicConfiguration::new(p, q, link.lo().to_vec())?.translate(j, k);
        if minima.is_empty() {
            minima.push(lo);
        }
        minima.push(PeriodicConfiguration::new(p, q, link.up.last().unwrap().clone())?.translate(j, k));
        let mut down = translate_points(&link.down, p, j, k);
        down.reverse();
        let up = translate_points(&link.up, p, j, k);
        for x in down.into_iter().chain(up.into_iter().skip(1)) {
            if pts.last().map_or(true, |last| dist(last, &x) > 1e-15) {
                pts.push(x);
            }
        }
        saddles.push(link.saddle.translate(j, k));
    }
    let mut s = vec![0.0];
    for w in pts.windows(2) {
        s.push(s.last().unwrap() + dist(&w[0], &w[1]));
    }
    let total = *s.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::NoSolution("degenerate circle of zero length".into()));
    }
    s.iter_mut().for_each(|v| *v /= total);
    // The last point is the diagonal shift of the first; the extension
    // re-creates it.
    s.pop();
    pts.pop();
    let (s, configs) = extend_periodic(s, pts, opts.margin);
    let mut sample = OrderedCircleSample::new(p, q, s, configs)?;
    sample.source = CircleSource::Descents;
    sample.saddles = saddles;
    sample.minima = minima;
    Ok(sample)
}

/// One period of the sliding state reached from the uniform configuration.
fn sliding_circle(p: i64, q: usize, e: &TiltedEnergy, opts: &IocOptions) -> Result<OrderedCircleSample> {
    let settings = FlowSettings::default();
    let x0 = PeriodicConfiguration::uniform(p, q, 0.0);
    let VelocityVerdict::Sliding(sl) = classify(&x0, e, &settings) else {
        return Err(Error::NoSolution("no equilibria and no sliding state: cannot build a circle".into()));
    };
    let start = sl.samples[0].1.clone();
    let mut stepper = Stepper::new(
        |x: &[f64], out: &mut [f64]| rhs_periodic_into(e, p, x, out),
        start.clone(),
        0.01,
        opts.tol,
        sl.period / 64.0,
    );
    let mut s = vec![0.0];
    let mut configs = vec![start.clone()];
    loop {
        stepper.step()?;
        if stepper.t >= sl.period {
            break;
        }
        let chord = dist(&stepper.x, configs.last().unwrap());
        let m = (chord / opts.max_chord).ceil() as usize;
        let (t0, t1) = (stepper.t_prev, stepper.t);
        for j in 1..=m {
            let t = t0 + (t1 - t0) * j as f64 / m as f64;
            s.push(t / sl.period);
            configs.push(if j == m { stepper.x.clone() } else { stepper.exact_at(t) });
        }
    }
    // Drop samples too close to the closing point s = 1.
    while s.last().is_some_and(|v| *v > 1.0 - 1e-9) {
        s.pop();
        configs.pop();
    }
    // Close exactly: the recurrence maps the start to itself plus one.
    let (s, configs) = extend_periodic(s, configs, opts.margin);
    let mut sample = OrderedCircleSample::new(p, q, s, configs)?;
    sample.source = CircleSource::Sliding;
    Ok(sample)
}

/// Outcome of [`verify_ioc`].
#[derive(Clone, Debug, Serialize)]
pub struct IocReport {
    /// Smallest componentwise increase between consecutive samples.
    pub min_order_gap: f64,
    pub ordered: bool,
    /// Largest `|x(s) - x(s - 1) - 1|` over the extension.
    pub periodicity_error: f64,
    /// Largest sup-norm of the flow component normal to the curve.
    pub tangency_max: f64,
    /// Largest mismatch of `x_{-1}` and `x_2` rebuilt from the graph of
    /// `x_0 ↦ x_1`; absent for `q = 1`.
    pub reconstruction_error: Option<f64>,
    /// Samples where the flow is componentwise positive, negative, or
    /// below `1e-12` in sup-norm.
    pub flow_up: usize,
    pub flow_down: usize,
    pub flow_rest: usize,
    pub passes: bool,
}

/// Tolerance on the normal flow component for a passing report.
pub const TANGENCY_TOL: f64 = 1e-6;

/// Monotone piecewise cubic interpolant (Fritsch-Carlson).
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Self { x, y, d }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|v| *v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * self.y[i]
            + (u3 - 2.0 * u2 + u) * h * self.d[i]
            + (-2.0 * u3 + 3.0 * u2) * self.y[i + 1]
            + (u3 - u2) * h * self.d[i + 1]
    }

    /// `t` with `eval(t) = v` for increasing data, by bisection.
    fn invert(&self, v: f64) -> f64 {
        let (mut a, mut b) = (self.x[0], *self.x.last().unwrap());
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.eval(m) < v {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Derivative at node `i` of the degree-4 interpolant through the five
/// nearest nodes.
fn five_point_derivative(s: &[f64], y: &[f64], i: usize) -> f64 {
    let n = s.len();
    let lo = i.saturating_sub(2).min(n.saturating_sub(5));
    let idx: Vec<usize> = (lo..(lo + 5).min(n)).collect();
    let t = s[i];
    let mut total = 0.0;
    for &k in &idx {
        // d/dt of the Lagrange basis polynomial for node k at t.
        let mut dl = 0.0;
        for &m in &idx {
            if m == k {
                continue;
            }
            let mut term = 1.0 / (s[k] - s[m]);
            for &r in &idx {
                if r != k && r != m {
                    term *= (t - s[r]) / (s[k] - s[r]);
                }
            }
            dl += term;
        }
        total += dl * y[k];
    }
    total
}

/// Checks ordering, diagonal periodicity, flow tangency and the
/// reconstruction of neighbouring sites from the `(x_0, x_1)` graph.
pub fn verify_ioc(sample: &OrderedCircleSample, e: &TiltedEnergy) -> Result<IocReport> {
    let (p, q) = (sample.p, sample.q);
    let n = sample.len();
    let min_order_gap = sample
        .configs
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    let comps: Vec<Pchip> = (0..q)
        .map(|c| Pchip::new(sample.s.clone(), sample.configs.iter().map(|x| x[c]).collect()))
        .collect();
    let mut periodicity_error: f64 = 0.0;
    for i in 0..n {
        let s = sample.s[i];
        if s >= 1.0 && s - 1.0 >= sample.s[0] {
            for (c, interp) in comps.iter().enumerate() {
                periodicity_error = periodicity_error.max((sample.configs[i][c] - interp.eval(s - 1.0) - 1.0).abs());
            }
        }
    }
    let mut tangency_max: f64 = 0.0;
    let (mut flow_up, mut flow_down, mut flow_rest) = (0, 0, 0);
    for i in 0..n {
        let x = sample.config(i)?;
        let v = rhs(&x, e);
        let d: Vec<f64> = (0..q)
            .map(|c| five_point_derivative(&sample.s, &sample.configs.iter().map(|x| x[c]).collect::<Vec<_>>(), i))
            .collect();
        let norm = d.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            let dot: f64 = v.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / norm;
            let normal = v
                .iter()
                .zip(&d)
                .map(|(a, b)| (a - dot * b / norm).abs())
                .fold(0.0, f64::max);
            tangency_max = tangency_max.max(normal);
        }
        if sup_norm(&v) < 1e-12 {
            flow_rest += 1;
        } else if v.iter().all(|a| *a > 0.0) {
            flow_up += 1;
        } else if v.iter().all(|a| *a < 0.0) {
            flow_down += 1;
        }
    }
    let reconstruction_error = (q >= 2).then(|| {
        // Over one period x_0 runs from x_0(0) to x_0(0) + 1.
        let locate = |c: usize, value: f64| -> (f64, f64) {
            let m = (value - sample.configs[0][c]).floor();
            (comps[c].invert(value - m), m)
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            if sample.s[i] >= 1.0 {
                break;
            }
            let x = &sample.configs[i];
            let stored = PeriodicConfiguration::new(p, q, x.clone()).expect("valid sample");
            let (s1, m1) = locate(0, x[1]);
            let x2 = comps[1].eval(s1) + m1;
            let (s0, m0) = locate(1, x[0]);
            let xm1 = comps[0].eval(s0) + m0;
            worst = worst.max((x2 - stored.at(2)).abs()).max((xm1 - stored.at(-1)).abs());
        }
        worst
    });
    let ordered = min_order_gap > 0.0;
    let passes = ordered
        && periodicity_error < 1e-8
        && tangency_max < TANGENCY_TOL
        && reconstruction_error.map_or(true, |r| r < 1e-6);
    Ok(IocReport {
        min_order_gap,
        ordered,
        periodicity_error,
        tangency_max,
        reconstruction_error,
        flow_up,
        flow_down,
        flow_rest,
        passes,
    })
}
