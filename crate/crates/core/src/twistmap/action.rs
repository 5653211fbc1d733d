//! Intersections of manifold arcs and the identity between the area of a
//! lobe and the action difference of the two intersection orbits.

use std::collections::HashMap;

use serde::Serialize;

use super::{apply, inverse, CylinderPoint, ManifoldArc};
use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::flow::{find_equilibrium_window, NewtonOptions};
use crate::model::TiltedEnergy;

/// A transverse crossing of two arcs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Intersection {
    /// Parameter on the first arc.
    pub u_a: f64,
    /// Parameter on the second arc.
    pub u_b: f64,
    pub point: CylinderPoint,
    /// Distance between the two arc points at the refined parameters.
    pub residual: f64,
    /// Arclength along the first arc (from the polyline).
    pub s_a: f64,
}

/// Crossing test on all segment pairs (bucketed on a grid), then Newton on
/// `(u_a, u_b)` for `a(u_a) = b(u_b)`. Results are sorted along `a`.
pub fn find_intersections(a: &ManifoldArc, b: &ManifoldArc) -> Result<Vec<Intersection>> {
    let seg_len = |arc: &ManifoldArc| {
        arc.points.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max)
    };
    let cell = seg_len(a).max(seg_len(b)).max(1e-12);
    let key = |z: CylinderPoint| ((z.x / cell).floor() as i64, (z.p / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for j in 0..b.points.len().saturating_sub(1) {
        let (k0, k1) = (key(b.points[j]), key(b.points[j + 1]));
        for cx in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for cp in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                grid.entry((cx, cp)).or_default().push(j);
            }
        }
    }
    let mut found: Vec<Intersection> = Vec::new();
    for i in 0..a.points.len().saturating_sub(1) {
        let (p0, p1) = (a.points[i], a.points[i + 1]);
        let (k0, k1) = (key(p0), key(p1));
        let mut candidates: Vec<usize> = Vec::new();
        for cx in k0.0.min(k1.0)..=k0.0.max(k1.0) {
            for cp in k0.1.min(k1.1)..=k0.1.max(k1.1) {
                if let Some(list) = grid.get(&(cx, cp)) {
                    candidates.extend(list);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for j in candidates {
            let (q0, q1) = (b.points[j], b.points[j + 1]);
            let Some((t, s)) = segment_crossing(p0, p1, q0, q1) else { continue };
            let ua = a.params[i] + t * (a.params[i + 1] - a.params[i]);
            let ub = b.params[j] + s * (b.params[j + 1] - b.params[j]);
            let (ua, ub, point, residual) = refine(a, b, ua, ub)?;
            if residual > 1e-8 {
                continue;
            }
            if found.iter().any(|f| f.point.dist(point) < 1e-8) {
                continue;
            }
            let s_a = a.arclength[i] + t * (a.arclength[i + 1] - a.arclength[i]);
            found.push(Intersection { u_a: ua, u_b: ub, point, residual, s_a });
        }
    }
    found.sort_by(|x, y| x.u_a.total_cmp(&y.u_a));
    Ok(found)
}

/// Parameters `(t, s)` in `[0, 1)` where two segments cross, if they do.
fn segment_crossing(
    p0: CylinderPoint,
    p1: CylinderPoint,
    q0: CylinderPoint,
    q1: CylinderPoint,
) -> Option<(f64, f64)> {
    let r = (p1.x - p0.x, p1.p - p0.p);
    let d = (q1.x - q0.x, q1.p - q0.p);
    let denom = r.0 * d.1 - r.1 * d.0;
    if denom == 0.0 {
        return None;
    }
    let w = (q0.x - p0.x, q0.p - p0.p);
    let t = (w.0 * d.1 - w.1 * d.0) / denom;
    let s = (w.0 * r.1 - w.1 * r.0) / denom;
    ((0.0..1.0).contains(&t) && (0.0..1.0).contains(&s)).then_some((t, s))
}

/// Newton on `a(u_a) - b(u_b) = 0` with difference-quotient Jacobians.
fn refine(a: &ManifoldArc, b: &ManifoldArc, mut ua: f64, mut ub: f64) -> Result<(f64, f64, CylinderPoint, f64)> {
    let mut za = a.eval(ua)?;
    let mut zb = b.eval(ub)?;
    let mut res = za.dist(zb);
    for _ in 0..40 {
        if res < 1e-14 {
            break;
        }
        let ha = 1e-6 * (1.0 + ua.abs()).min(1.0).max(1e-3);
        let hb = 1e-6 * (1.0 + ub.abs()).min(1.0).max(1e-3);
        let da = diff(a, ua, ha)?;
        let db = diff(b, ub, hb)?;
        // [da, -db] (dua, dub) = zb - za
        let det = da.0 * (-db.1) - da.1 * (-db.0);
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let rx = zb.x - za.x;
        let rp = zb.p - za.p;
        let dua = (rx * (-db.1) - rp * (-db.0)) / det;
        let dub = (da.0 * rp - da.1 * rx) / det;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let (na, nb) = (ua + lambda * dua, ub + lambda * dub);
            if na < 0.0 || nb < 0.0 {
                lambda *= 0.5;
                continue;
            }
            let (ya, yb) = (a.eval(na)?, b.eval(nb)?);
            let r = ya.dist(yb);
            if r < res {
                ua = na;
                ub = nb;
                za = ya;
                zb = yb;
                res = r;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let mid = CylinderPoint::new(0.5 * (za.x + zb.x), 0.5 * (za.p + zb.p));
    Ok((ua, ub, mid, res))
}

fn diff(arc: &ManifoldArc, u: f64, h: f64) -> Result<(f64, f64)> {
    let lo = (u - h).max(0.0);
    let hi = u + h;
    let (z0, z1) = (arc.eval(lo)?, arc.eval(hi)?);
    Ok(((z1.x - z0.x) / (hi - lo), (z1.p - z0.p) / (hi - lo)))
}

/// `∫ p dx` along an arc between two of its points, with piecewise cubic
/// interpolation in chord length and four-point Gauss-Legendre per piece.
fn line_integral(arc: &ManifoldArc, from: (f64, CylinderPoint), to: (f64, CylinderPoint)) -> f64 {
    let (sign, lo, hi) = if from.0 <= to.0 { (1.0, from, to) } else { (-1.0, to, from) };
    let min_gap = 1e-4 * arc.points.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max);
    let mut nodes = vec![lo.1];
    for (u, z) in arc.params.iter().zip(&arc.points) {
        if *u > lo.0 && *u < hi.0 && z.dist(lo.1) > min_gap && z.dist(hi.1) > min_gap {
            nodes.push(*z);
        }
    }
    nodes.push(hi.1);
    sign * polyline_p_dx(&nodes)
}

/// `∫ p dx` over the smooth curve through `nodes`.
pub(crate) fn polyline_p_dx(nodes: &[CylinderPoint]) -> f64 {
    let n = nodes.len();
    if n < 2 {
        return 0.0;
    }
    if n < 4 {
        return nodes.windows(2).map(|w| 0.5 * (w[0].p + w[1].p) * (w[1].x - w[0].x)).sum();
    }
    let mut t = vec![0.0; n];
    for i in 1..n {
        t[i] = t[i - 1] + nodes[i].dist(nodes[i - 1]);
    }
    const GX: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const GW: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut total = 0.0;
    for i in 0..n - 1 {
        let s = i.saturating_sub(1).min(n - 4);
        let idx = [s, s + 1, s + 2, s + 3];
        let (a, b) = (t[i], t[i + 1]);
        for (gx, gw) in GX.iter().zip(&GW) {
            let tt = 0.5 * (a + b) + 0.5 * (b - a) * gx;
            let (mut p, mut dx) = (0.0, 0.0);
            for (m, &k) in idx.iter().enumerate() {
                // Lagrange basis and its derivative at tt.
                let mut l = 1.0;
                let mut dl = 0.0;
                for (mm, &kk) in idx.iter().enumerate() {
                    if mm == m {
                        continue;
                    }
                    let denom = t[k] - t[kk];
                    let mut term = 1.0 / denom;
                    for (m3, &k3) in idx.iter().enumerate() {
                        if m3 != m && m3 != mm {
                            term *= (tt - t[k3]) / (t[k] - t[k3]);
                        }
                    }
                    dl += term;
                    l *= (tt - t[kk]) / denom;
                }
                p += l * nodes[k].p;
                dx += dl * nodes[k].x;
            }
            total += 0.5 * (b - a) * gw * p * dx;
        }
    }
    total
}

/// Area of the lobe bounded by the two arcs between two intersections, and
/// the action difference of the orbits through them.
#[derive(Clone, Debug, Serialize)]
pub struct ActionArea {
    /// `∫_U p dx - ∫_S p dx`, both from the first point to the second.
    pub area: f64,
    /// `Σ_n [h_F(y_n, y_{n+1}) - h_F(x_n, x_{n+1})]` with `x`, `y` the orbits
    /// through the first and second point, indexed so both sit at site 0.
    pub delta_w: f64,
    /// Largest summand at the window ends.
    pub tail: f64,
    /// Window equilibria of the two orbits.
    pub orbits: [WindowConfiguration; 2],
}

/// Lattice translate of `c` whose site `n` is closest to `value`, with the
/// distance.
fn nearest_translate(c: &PeriodicConfiguration, n: i64, value: f64) -> (PeriodicConfiguration, f64) {
    let mut best = (c.clone(), f64::INFINITY);
    for j in 0..c.q() as i64 {
        let moved = c.translate(j, 0);
        let m = (value - moved.at(n)).round();
        let cand = moved.translate(0, m as i64);
        let d = (cand.at(n) - value).abs();
        if d < best.1 {
            best = (cand, d);
        }
    }
    best
}

/// The orbit through `z` as a window equilibrium, assuming it is backward
/// asymptotic to a translate of `left` and forward asymptotic to a translate
/// of `right`. Backward and forward iterates supply the guess; Newton on the
/// window with clamped ends polishes it.
pub fn homoclinic_window(
    z: CylinderPoint,
    e: &TiltedEnergy,
    left: &PeriodicConfiguration,
    right: &PeriodicConfiguration,
) -> Result<WindowConfiguration> {
    const MAX_ITER: usize = 400;
    const PAD: i64 = 60;
    // Iterates are kept up to their closest approach to the asymptotic
    // orbit; beyond it rounding drives them away again.
    let track = |forward: bool, target: &PeriodicConfiguration| -> Result<(Vec<f64>, f64)> {
        let mut out = Vec::new();
        let (mut best, mut best_len) = (f64::INFINITY, 0);
        let mut y = z;
        for i in 1..=MAX_ITER {
            y = if forward { apply(e, y)? } else { inverse(e, y)? };
            out.push(y.x);
            let n = if forward { i as i64 } else { -(i as i64) };
            let (_, d) = nearest_translate(target, n, y.x);
            if d < best {
                best = d;
                best_len = out.len();
            }
            if d < 1e-14 || d > 1e3 * best.max(1e-12) {
                break;
            }
        }
        out.truncate(best_len);
        Ok((out, best))
    };
    let (back, dl) = track(false, left)?;
    let (fwd, dr) = track(true, right)?;
    if dl > 1e-3 || dr > 1e-3 {
        return Err(Error::NoSolution(format!(
            "orbit through ({:.6}, {:.6}) does not approach the given asymptotes (gaps {dl:.2e}, {dr:.2e})",
            z.x, z.p
        )));
    }
    let l_data = -(back.len() as i64);
    let r_data = fwd.len() as i64;
    let (lasym, _) = nearest_translate(left, l_data, *back.last().unwrap_or(&z.x));
    let (rasym, _) = nearest_translate(right, r_data, *fwd.last().unwrap_or(&z.x));
    let (l, r) = (l_data - PAD, r_data + PAD);
    let mut values: Vec<f64> = (l..l_data).map(|n| lasym.at(n)).collect();
    values.extend(back.iter().rev());
    values.push(z.x);
    values.extend(&fwd);
    values.extend((r_data + 1..=r).map(|n| rasym.at(n)));
    let w0 = WindowConfiguration::new(l, values, lasym, rasym, 0, 0)?;
    let opts = NewtonOptions { tol: 1e-13, ..NewtonOptions::default() };
    let eq = find_equilibrium_window(&w0, e, &opts)?;
    let moved = (eq.window.at(0) - z.x).abs();
    if moved > 1e-6 {
        return Err(Error::Consistency(format!(
            "polished orbit moved by {moved:.2e} at the intersection site"
        )));
    }
    Ok(eq.window)
}

/// Lobe area between the unstable arc `u` and the stable arc `s` from
/// intersection `a` to intersection `b`, and the action difference of the
/// orbits through them.
pub fn action_area(
    u: &ManifoldArc,
    s: &ManifoldArc,
    a: &Intersection,
    b: &Intersection,
    left: &PeriodicConfiguration,
    right: &PeriodicConfiguration,
) -> Result<ActionArea> {
    if !u.branch.is_unstable() || s.branch.is_unstable() {
        return Err(Error::InvalidParameter("action_area takes an unstable arc and a stable arc".into()));
    }
    let e = u.energy();
    let wa = homoclinic_window(a.point, e, left, right)?;
    let wb = homoclinic_window(b.point, e, left, right)?;
    if a.point.dist(b.point) < 1e-12 {
        return Ok(ActionArea { area: 0.0, delta_w: 0.0, tail: 0.0, orbits: [wa, wb] });
    }
    let area = line_integral(u, (a.u_a, a.point), (b.u_a, b.point))
        - line_integral(s, (a.u_b, a.point), (b.u_b, b.point));
    let lo = wa.l().min(wb.l()) - 1;
    let hi = wa.r().max(wb.r()) + 1;
    for n in [lo - 1, hi + 1] {
        if (wa.at(n) - wb.at(n)).abs() > 1e-10 {
            return Err(Error::Consistency(format!(
                "intersection orbits approach different translates at site {n}"
            )));
        }
    }
    let terms: Vec<f64> = (lo..=hi)
        .map(|n| e.eval(wb.at(n), wb.at(n + 1)).h - e.eval(wa.at(n), wa.at(n + 1)).h)
        .collect();
    let delta_w = terms.iter().sum();
    let k = terms.len();
    let tail = terms[..3.min(k)]
        .iter()
        .chain(&terms[k.saturating_sub(3)..])
        .map(|t| t.abs())
        .fold(0.0, f64::max);
    Ok(ActionArea { area, delta_w, tail, orbits: [wa, wb] })
}
