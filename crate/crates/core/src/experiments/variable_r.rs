//! Counting `k`-term arithmetic progressions `P` in `[1,N]` whose image under `floor(n^alpha)`
//! lies in `P_{k,d}`, with `r` free.
//!
//! Each such `P` is `{n, n+r, ..., n+(k-1)r}` for exactly one pair `(n, r)` with `r >= 1` and
//! `n + (k-1)r <= N`, so pairs are counted.

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use super::{ser_rat, to_u64, FloorTable, CHUNK};
use crate::error::{arg, Result};
use crate::exactmath::{binomial, factorial, falling_factorial, rat, rat_int, rational_to_f64, Rational};
use crate::functions::FunctionSpec;
use crate::polytope::{volume_exact, HalfSpace, Polytope};
use crate::progressions::ProgressionQuery;

/// `{y : 0 <= y_0 <= 1, 0 <= sum_i C(j,i) y_i <= 1 - x for j = 1..k-1}`, for any `x` in `[0,1)`.
fn c_minus(k: u32, d: u32, x: &Rational) -> Result<Polytope> {
    let dim = d as usize + 1;
    let mut hs = Vec::new();
    let mut e0 = vec![Rational::from_integer(0.into()); dim];
    e0[0] = Rational::one();
    hs.push(HalfSpace::new(e0.clone(), rat(0, 1))?);
    hs.push(HalfSpace::new(e0.iter().map(|v| -v).collect(), rat(-1, 1))?);
    for j in 1..k as u64 {
        let row: Vec<Rational> = (0..dim as u64).map(|i| rat_int(binomial(j, i))).collect();
        hs.push(HalfSpace::new(row.clone(), rat(0, 1))?);
        hs.push(HalfSpace::new(row.iter().map(|v| -v).collect(), x - Rational::one())?);
    }
    Polytope::custom(dim, hs)
}

/// `C_{k,d} = sup_{0<x<1} mu(C^-_{k,d+1}(x)) x^(1/(d+1))`, located on the grid `i/100` and
/// refined with step `1/1000` around the best point. Returns the value and the maximiser.
pub fn c_kd(k: u32, d: u32) -> Result<(f64, Rational)> {
    if k < d + 2 {
        return arg(format!("need k >= d + 2 = {}", d + 2));
    }
    let score = |x: &Rational| -> Result<f64> {
        let v = volume_exact(&c_minus(k, d, x)?)?.volume;
        Ok(rational_to_f64(&v) * rational_to_f64(x).powf(1.0 / (d as f64 + 1.0)))
    };
    let mut best = (f64::NEG_INFINITY, 0i64);
    for i in 1..100 {
        let s = score(&rat(i, 100))?;
        if s > best.0 {
            best = (s, i);
        }
    }
    let mut fine = (best.0, rat(best.1, 100));
    for i in (best.1 * 10 - 9).max(1)..(best.1 * 10 + 10).min(1000) {
        let x = rat(i, 1000);
        let s = score(&x)?;
        if s > fine.0 {
            fine = (s, x);
        }
    }
    Ok(fine)
}

fn tail_factor(alpha: f64, d: u32) -> f64 {
    1.0 / (2.0 - alpha / (d as f64 + 1.0))
}

/// Lower constant `C_{k,d} ((d+1)!/(alpha)_{d+1})^(1/(d+1)) / (2 - alpha/(d+1))`.
pub fn a_tilde(alpha: &Rational, k: u32, d: u32) -> Result<f64> {
    let (c, _) = c_kd(k, d)?;
    let ratio = rat_int(factorial(d as u64 + 1)) / falling_factorial(alpha, d as u64 + 1);
    Ok(c * rational_to_f64(&ratio).powf(1.0 / (d as f64 + 1.0)) * tail_factor(rational_to_f64(alpha), d))
}

/// Upper constant `(2^d / ((alpha)_{d+1} (k-d-1)))^(1/(d+1)) / (2 - alpha/(d+1))`.
pub fn b_tilde(alpha: &Rational, k: u32, d: u32) -> Result<f64> {
    if k < d + 2 {
        return arg(format!("need k >= d + 2 = {}", d + 2));
    }
    let inner = rat_int(num_bigint::BigInt::from(2).pow(d)) / (falling_factorial(alpha, d as u64 + 1) * rat_int(k - d - 1));
    Ok(rational_to_f64(&inner).powf(1.0 / (d as f64 + 1.0)) * tail_factor(rational_to_f64(alpha), d))
}

/// `R(x) = (2^d c(1/2) / (k-d-1))^(1/(d+1)) f^(d+1)(x)^(-1/(d+1))` with `c(1/2) = 2^(d+1-alpha)`:
/// for large `n`, a progression starting at `n` with step `r` needs `r < R(n)`.
pub fn prune_cutoff(alpha: &Rational, k: u32, d: u32, x: f64) -> f64 {
    let (a, df) = (rational_to_f64(alpha), d as f64);
    let c = 2f64.powf(df) * 2f64.powf(df + 1.0 - a) / (k - d - 1) as f64;
    let fd = rational_to_f64(&falling_factorial(alpha, d as u64 + 1)) * x.powf(a - df - 1.0);
    (c / fd).powf(1.0 / (df + 1.0))
}

/// Smallest `n` with `(k-1) R(m) < m` for every `m >= n`; pruning is used from there on.
pub fn prune_start(alpha: &Rational, k: u32, d: u32) -> u64 {
    let ok = |n: u64| (k as f64 - 1.0) * prune_cutoff(alpha, k, d, n as f64) * (1.0 + 1e-9) < n as f64;
    // R(m)/m decreases, so the condition is monotone in m
    let (mut lo, mut hi) = (1u64, 2u64);
    while !ok(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            return hi;
        }
    }
    if ok(lo) {
        return lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariableRReport {
    #[serde(serialize_with = "ser_rat")]
    pub alpha: Rational,
    pub k: u32,
    pub d: u32,
    #[serde(rename = "N_grid")]
    pub n_grid: Vec<u64>,
    /// Number of pairs `(n, r)` with `n + (k-1)r <= N` whose floors lie in `P_{k,d}`.
    pub pair_counts: Vec<u64>,
    /// `count / N^(2 - alpha/(d+1))`
    pub normalized: Vec<f64>,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_kd: f64,
    #[serde(serialize_with = "ser_rat")]
    pub c_kd_argmax: Rational,
    pub pruned: bool,
    /// First `n` at which the step cutoff was applied.
    pub prune_start: u64,
}

pub fn count_variable_r(alpha: &Rational, k: u32, grid: &[u64], prune: bool) -> Result<VariableRReport> {
    let f = FunctionSpec::power(alpha.clone())?;
    let q = ProgressionQuery::new(f, k, 1)?;
    let d = q.d;
    super::check_grid(grid, k as u64)?;
    let nmax = *grid.last().unwrap();
    let table = FloorTable::build(&q.f, 1, nmax)?;
    let start = prune_start(alpha, k, d);
    let km1 = k as u64 - 1;
    let chunks: Vec<(u64, u64)> = (1..=nmax).step_by(CHUNK as usize / 8).map(|a| (a, (a + CHUNK / 8).min(nmax + 1))).collect();
    let buckets: Vec<Vec<u64>> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut bucket = vec![0u64; grid.len()];
            for n in a..b {
                let mut rmax = (nmax - n) / km1;
                if prune && n >= start {
                    rmax = rmax.min(to_u64((prune_cutoff(alpha, k, d, n as f64) * (1.0 + 1e-9)).ceil()) + 1);
                }
                for r in 1..=rmax {
                    if table.hit(n, r, k, d) {
                        let end = n + km1 * r;
                        bucket[grid.partition_point(|&g| g < end)] += 1;
                    }
                }
            }
            bucket
        })
        .collect();
    let mut pair_counts = vec![0u64; grid.len()];
    for b in &buckets {
        for (p, v) in pair_counts.iter_mut().zip(b) {
            *p += v;
        }
    }
    for i in 1..pair_counts.len() {
        pair_counts[i] += pair_counts[i - 1];
    }
    let expo = 2.0 - rational_to_f64(alpha) / (d as f64 + 1.0);
    let normalized = grid.iter().zip(&pair_counts).map(|(&n, &c)| c as f64 / (n as f64).powf(expo)).collect();
    let (c, argmax) = c_kd(k, d)?;
    Ok(VariableRReport {
        alpha: alpha.clone(),
        k,
        d,
        n_grid: grid.to_vec(),
        pair_counts,
        normalized,
        a_tilde: a_tilde(alpha, k, d)?,
        b_tilde: b_tilde(alpha, k, d)?,
        c_kd: c,
        c_kd_argmax: argmax,
        pruned: prune,
        prune_start: start,
    })
}
