//! Farey neighbours, mediant sequences and the one-sided depinning limits
//! `F_d(p/q±)` estimated along mediant sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::gcd;
use crate::error::{Error, Result};
use crate::flow::{depinning_force_with, DepinningMethod, DepinningOptions};
use crate::model::GeneratingFunction;

/// Which side of `p/q` a limit is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Self::Plus),
            "minus" | "-" => Ok(Self::Minus),
            other => Err(Error::InvalidParameter(format!("side must be plus or minus, got {other:?}"))),
        }
    }
}

/// Minimal-denominator Farey neighbours of a reduced rational `p/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FareyPair {
    pub p: i64,
    pub q: i64,
    /// `(p', q')` with `p' q - p q' = 1`, so `p'/q' > p/q`.
    pub upper: (i64, i64),
    /// `(p', q')` with `p q' - p' q = 1`, so `p'/q' < p/q`.
    pub lower: (i64, i64),
}

impl FareyPair {
    pub fn neighbour(&self, side: Side) -> (i64, i64) {
        match side {
            Side::Plus => self.upper,
            Side::Minus => self.lower,
        }
    }
}

/// Modular inverse of `a` modulo `m > 0` by the extended Euclidean algorithm.
fn mod_inverse(a: i64, m: i64) -> i64 {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1_i64, 0_i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    s0.rem_euclid(m)
}

pub fn farey_neighbours(p: i64, q: i64) -> Result<FareyPair> {
    if q < 1 || gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!("{p}/{q} is not a reduced rational with q ≥ 1")));
    }
    let inv = mod_inverse(p, q);
    // Upper: p q' ≡ -1 (mod q) with 1 ≤ q' ≤ q.
    let qu = {
        let r = (q - inv).rem_euclid(q);
        if r == 0 { q } else { r }
    };
    let pu = (1 + p * qu) / q;
    // Lower: p q' ≡ 1 (mod q).
    let ql = if inv == 0 { q } else { inv };
    let pl = (p * ql - 1).div_euclid(q);
    Ok(FareyPair {
        p,
        q,
        upper: (pu, qu),
        lower: (pl, ql),
    })
}

/// `(n p + p') / (n q + q')` for `n = 1..=n_max` with the side's neighbour.
pub fn mediant_sequence(p: i64, q: i64, side: Side, n_max: usize) -> Result<Vec<(i64, i64)>> {
    let pair = farey_neighbours(p, q)?;
    mediant_sequence_with(p, q, pair.neighbour(side), n_max)
}

/// Mediant sequence for an explicitly chosen Farey neighbour.
pub fn mediant_sequence_with(p: i64, q: i64, neighbour: (i64, i64), n_max: usize) -> Result<Vec<(i64, i64)>> {
    let (pn, qn) = neighbour;
    if (pn * q - p * qn).abs() != 1 || qn < 1 {
        return Err(Error::InvalidParameter(format!("{pn}/{qn} is not a Farey neighbour of {p}/{q}")));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    Ok((1..=n_max as i64).map(|n| (n * p + pn, n * q + qn)).collect())
}

/// One depinning force along a mediant sequence.
#[derive(Clone, Debug, Serialize)]
pub struct LimitSample {
    #[serde(rename = "P")]
    pub p: i64,
    #[serde(rename = "Q")]
    pub q: i64,
    #[serde(rename = "F_d")]
    pub f_d: f64,
}

/// Estimate of `F_d(p/q±)`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitEstimate {
    pub side: Side,
    pub p: i64,
    pub q: i64,
    pub samples: Vec<LimitSample>,
    /// Aitken extrapolant of the last three samples.
    pub estimate: f64,
    /// Last raw sample.
    pub raw_last: f64,
    /// `|F_d(s_n) - F_d(s_{n-1})|` along the sequence.
    pub increments: Vec<f64>,
    /// `F_d(p/q)` for the bound check.
    pub center: f64,
    /// `-tol_F ≤ estimate ≤ F_d(p/q) + tol_F`.
    pub bound_holds: bool,
}

impl LimitEstimate {
    /// Last increment is below a quarter of the third-last one.
    pub fn cauchy_tail(&self) -> bool {
        let n = self.increments.len();
        n >= 3 && self.increments[n - 1] < 0.25 * self.increments[n - 3]
    }
}

/// Aitken Δ² extrapolation of three successive values.
pub fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let denom = x2 - 2.0 * x1 + x0;
    if denom.abs() <= 1e-15 * (x0.abs() + x1.abs() + x2.abs()).max(1e-300) {
        x2
    } else {
        x2 - (x2 - x1).powi(2) / denom
    }
}

/// `F_d` along the mediant sequence of the given side, computed in
/// parallel by continuation, then extrapolated.
pub fn fd_limit(p: i64, q: i64, side: Side, h: &GeneratingFunction, n_max: usize, tol_f: f64) -> Result<LimitEstimate> {
    let pair = farey_neighbours(p, q)?;
    fd_limit_with(p, q, side, pair.neighbour(side), h, n_max, &DepinningOptions::new(DepinningMethod::Continuation, tol_f))
}

/// `fd_limit` with an explicit neighbour and depinning options.
pub fn fd_limit_with(
    p: i64,
    q: i64,
    side: Side,
    neighbour: (i64, i64),
    h: &GeneratingFunction,
    n_max: usize,
    opts: &DepinningOptions,
) -> Result<LimitEstimate> {
    if n_max < 3 {
        return Err(Error::InvalidParameter("n_max must be at least 3".into()));
    }
    let seq = mediant_sequence_with(p, q, neighbour, n_max)?;
    let mut jobs: Vec<(i64, i64)> = seq.clone();
    jobs.push((p, q));
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(pp, qq)| depinning_force_with(pp, qq as usize, h, opts).map(|r| r.f_d))
        .collect();
    let mut values = Vec::with_capacity(jobs.len());
    for ((pp, qq), r) in jobs.iter().zip(results) {
        values.push(r.map_err(|e| Error::Undetermined(format!("F_d({pp}/{qq}) failed: {e}")))?);
    }
    let center = values.pop().expect("center value");
    let samples: Vec<LimitSample> = seq
        .iter()
        .zip(&values)
        .map(|(&(pp, qq), &f)| LimitSample { p: pp, q: qq, f_d: f })
        .collect();
    let increments: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let n = values.len();
    let estimate = aitken(values[n - 3], values[n - 2], values[n - 1]);
    let tol = opts.tol_f;
    Ok(LimitEstimate {
        side,
        p,
        q,
        samples,
        estimate,
        raw_last: values[n - 1],
        increments,
        center,
        bound_holds: estimate >= -tol && estimate <= center + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neighbours_of_small_rationals() {
        let a = farey_neighbours(0, 1).unwrap();
        assert_eq!((a.upper, a.lower), ((1, 1), (-1, 1)));
        let b = farey_neighbours(1, 2).unwrap();
        assert_eq!((b.upper, b.lower), ((1, 1), (0, 1)));
        let c = farey_neighbours(2, 5).unwrap();
        assert_eq!((c.upper, c.lower), ((1, 2), (1, 3)));
        assert!(farey_neighbours(2, 4).is_err());
    }

    #[test]
    fn mediants() {
        assert_eq!(mediant_sequence(0, 1, Side::Plus, 3).unwrap(), vec![(1, 2), (1, 3), (1, 4)]);
        assert_eq!(mediant_sequence(1, 2, Side::Plus, 3).unwrap(), vec![(2, 3), (3, 5), (4, 7)]);
        assert_eq!(mediant_sequence(1, 2, Side::Minus, 3).unwrap(), vec![(1, 3), (2, 5), (3, 7)]);
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences() {
        let f = |n: i32| 2.0 + 0.3 * 0.4_f64.powi(n);
        assert!((aitken(f(3), f(4), f(5)) - 2.0).abs() < 1e-14);
    }

    /// Brute-force minimal-denominator neighbours.
    fn brute(p: i64, q: i64) -> ((i64, i64), (i64, i64)) {
        let mut upper = None;
        let mut lower = None;
        for qq in 1..=q {
            for pp in (p * qq / q - 2)..=(p * qq / q + 2) {
                if upper.is_none() && pp * q - p * qq == 1 {
                    upper = Some((pp, qq));
                }
                if lower.is_none() && p * qq - pp * q == 1 {
                    lower = Some((pp, qq));
                }
            }
        }
        (upper.unwrap(), lower.unwrap())
    }

    proptest! {
        #[test]
        fn neighbours_match_brute_force(q in 1_i64..40, p in -60_i64..60) {
            prop_assume!(gcd(p, q) == 1);
            let pair = farey_neighbours(p, q).unwrap();
            prop_assert_eq!((pair.upper, pair.lower), brute(p, q));
        }

        #[test]
        fn mediant_gap_is_exact(q in 1_i64..20, p in -20_i64..20, n_max in 1_usize..12) {
            prop_assume!(gcd(p, q) == 1);
            let pair = farey_neighbours(p, q).unwrap();
            let (_, qu) = pair.upper;
            let seq = mediant_sequence(p, q, Side::Plus, n_max).unwrap();
            for (i, (pp, qq)) in seq.iter().enumerate() {
                let n = i as i64 + 1;
                // P/Q - p/q = 1 / (q (n q + q')) exactly in integers.
                prop_assert_eq!(pp * q - p * qq, 1);
                prop_assert_eq!(*qq, n * q + qu);
                prop_assert_eq!(gcd(*pp, *qq), 1);
            }
            for w in seq.windows(2) {
                prop_assert!(w[1].0 * w[0].1 < w[0].0 * w[1].1);
            }
        }
    }
}
