//! `L(x)`: how far past `x` one must look for the start of a progression.

use serde::Serialize;

use super::{ser_opt_rat, to_u64, FloorTable};
use crate::error::{arg, Error, Result};
use crate::exactmath::{rat_int, rational_to_f64, Rational};
use crate::functions::FunctionSpec;
use crate::progressions::ProgressionQuery;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapScan {
    pub lo: u64,
    pub hi: u64,
    /// `max L(x) / x^(2-alpha)` over every `x` in `[lo, hi]`, and where it is attained.
    pub max_ratio: f64,
    pub argmax: u64,
    pub censored: u64,
    /// For `k = 3`: share of `x` in `[lo, hi]` with `L(x) <= x^(1-alpha/2) log x`.
    pub dense_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    #[serde(serialize_with = "super::ser_rat")]
    pub alpha: Rational,
    pub k: u32,
    pub r: u64,
    pub x_grid: Vec<u64>,
    /// `L(x)`, or `None` when the scan passed its cap without a hit.
    #[serde(rename = "L_values")]
    pub l_values: Vec<Option<u64>>,
    pub censored: Vec<bool>,
    /// `L(x) / x^(2-alpha)`
    pub ratios: Vec<Option<f64>>,
    /// For `k = 3`: `L(x) / x^(1-alpha/2)`.
    pub ratios_k3: Option<Vec<Option<f64>>>,
    /// `(k-3) / (alpha (alpha-1) r (k-1))` for `k >= 4`.
    #[serde(serialize_with = "ser_opt_rat")]
    pub appendix_lower: Option<Rational>,
    pub scan: Option<GapScan>,
}

/// Scan cap for `L(x)`: `10 (k-1)^2 r x^(2-alpha) + 1000`.
pub fn scan_cap(alpha: f64, k: u32, r: u64, x: u64) -> u64 {
    let km1 = (k - 1) as f64;
    to_u64(10.0 * km1 * km1 * r as f64 * (x as f64).powf(2.0 - alpha)).saturating_add(1000)
}

/// `L(x)` for every `x` in `x_grid`; with `full_scan`, also the largest ratio over every
/// integer between the smallest and largest grid point.
pub fn gap_lengths(alpha: &Rational, k: u32, r: u64, x_grid: &[u64], full_scan: bool) -> Result<GapReport> {
    let a = rational_to_f64(alpha);
    if !(1.0 < a && a < 2.0) {
        return arg("alpha must lie in (1, 2)");
    }
    let q = ProgressionQuery::new(FunctionSpec::power(alpha.clone())?, k, r)?;
    super::check_grid(x_grid, 1)?;
    let (lo, hi) = (x_grid[0], *x_grid.last().unwrap());
    let last = hi.checked_add(scan_cap(a, k, r, hi)).ok_or_else(|| Error::Overflow("x + scan cap".into()))?;
    let table = FloorTable::build(&q.f, lo, super::last_arg(last, k, r)?)?;
    // next[i]: first hit at or after lo + i
    let mut next = vec![u64::MAX; (last - lo + 2) as usize];
    for n in (lo..=last).rev() {
        let i = (n - lo) as usize;
        next[i] = if table.hit(n, r, k, q.d) { n } else { next[i + 1] };
    }
    let gap = |x: u64| -> Option<u64> {
        let nx = next[(x - lo) as usize];
        (nx != u64::MAX && nx - x <= scan_cap(a, k, r, x)).then(|| nx - x)
    };
    let l_values: Vec<Option<u64>> = x_grid.iter().map(|&x| gap(x)).collect();
    let censored = l_values.iter().map(Option::is_none).collect();
    let ratios = x_grid.iter().zip(&l_values).map(|(&x, l)| l.map(|l| l as f64 / (x as f64).powf(2.0 - a))).collect();
    let ratios_k3 = (k == 3)
        .then(|| x_grid.iter().zip(&l_values).map(|(&x, l)| l.map(|l| l as f64 / (x as f64).powf(1.0 - a / 2.0))).collect());
    let appendix_lower = (k >= 4).then(|| rat_int(k - 3) / (alpha * (alpha - Rational::from_integer(1.into())) * rat_int(r) * rat_int(k - 1)));
    let scan = full_scan.then(|| {
        let (mut max_ratio, mut argmax, mut cens, mut dense) = (0.0f64, lo, 0u64, 0u64);
        for x in lo..=hi {
            match gap(x) {
                Some(l) => {
                    let ratio = l as f64 / (x as f64).powf(2.0 - a);
                    if ratio > max_ratio {
                        max_ratio = ratio;
                        argmax = x;
                    }
                    if (l as f64) <= (x as f64).powf(1.0 - a / 2.0) * (x as f64).ln() {
                        dense += 1;
                    }
                }
                None => cens += 1,
            }
        }
        GapScan {
            lo,
            hi,
            max_ratio,
            argmax,
            censored: cens,
            dense_fraction: (k == 3).then(|| dense as f64 / (hi - lo + 1) as f64),
        }
    });
    Ok(GapReport { alpha: alpha.clone(), k, r, x_grid: x_grid.to_vec(), l_values, censored, ratios, ratios_k3, appendix_lower, scan })
}
