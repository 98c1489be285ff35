//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::ToPrimitive;

/// Sup over boxes `[a1,b1) x [a2,b2)` by enumerating every critical box: each lower end is
/// 0, a point coordinate, or just above one; each upper end is 1, a point coordinate, or just
/// above one. Points must number at most 64.
pub fn naive_discrepancy(pts: &[(f64, f64)]) -> f64 {
    assert!(pts.len() <= 64);
    let l = pts.len() as f64;
    let axis = |coord: &dyn Fn(&(f64, f64)) -> f64| -> Vec<(f64, u64)> {
        // (length, membership mask) of every critical interval
        let mut lows = vec![(0.0, false)];
        let mut highs = vec![(1.0, false)];
        for p in pts {
            let v = coord(p);
            lows.push((v, false));
            lows.push((v, true));
            highs.push((v, false));
            highs.push((v, true));
        }
        let mut out = vec![];
        for &(a, a_after) in &lows {
            for &(b, b_incl) in &highs {
                if b < a {
                    continue;
                }
                let mut mask = 0u64;
                for (i, p) in pts.iter().enumerate() {
                    let x = coord(p);
                    let lo_ok = if a_after { x > a } else { x >= a };
                    let hi_ok = if b_incl { x <= b } else { x < b };
                    if lo_ok && hi_ok {
                        mask |= 1 << i;
                    }
                }
                out.push((b - a, mask));
            }
        }
        out
    };
    let xs = axis(&|p| p.0);
    let ys = axis(&|p| p.1);
    let mut best: f64 = 0.0;
    for &(wx, mx) in &xs {
        for &(wy, my) in &ys {
            best = best.max(((mx & my).count_ones() as f64 / l - wx * wy).abs());
        }
    }
    best
}

/// `floor(n^(p/q))` by integer roots.
pub fn power_floor(n: u64, p: u32, q: u32) -> i128 {
    BigInt::from(n).pow(p).nth_root(q).to_i128().unwrap()
}

/// Whether the floors at `n, n+r, ..., n+(k-1)r` have constant first differences and increase.
pub fn is_ap_start(fl: &dyn Fn(u64) -> i128, n: u64, r: u64, k: u32) -> bool {
    let v: Vec<i128> = (0..k as u64).map(|j| fl(n + j * r)).collect();
    let d = v[1] - v[0];
    d > 0 && v.windows(2).all(|w| w[1] - w[0] == d)
}
