mod common;

use common::{is_ap_start, power_floor};
use psprog_core::exactmath::{rat, rational_to_f64, Rational};
use psprog_core::experiments::{
    a_tilde, alpha_sweep, b_tilde, c_kd, count_variable_r, density_fixed_r, density_short_interval, gap_lengths,
    limit_density, parse_alpha_grid, short_interval_bound, xlogx_band_limits,
};
use psprog_core::functions::FunctionSpec;
use psprog_core::progressions::{brute_force_test, ProgressionQuery};

fn query(alpha: Rational, k: u32, r: u64) -> ProgressionQuery {
    ProgressionQuery::new(FunctionSpec::power(alpha).unwrap(), k, r).unwrap()
}

#[test]
fn fixed_r_counts_match_oracle() {
    let fl = |n: u64| power_floor(n, 3, 2);
    for (k, r) in [(3u32, 1u64), (4, 1), (3, 2)] {
        let grid = [100u64, 1000, 10_000, 30_000];
        let rep = density_fixed_r(&query(rat(3, 2), k, r), &grid, false).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            let want = (1..=n).filter(|&m| is_ap_start(&fl, m, r, k)).count() as u64;
            assert_eq!(rep.counts[i], want, "k={k} r={r} N={n}");
        }
        assert!(rep.counts.windows(2).all(|w| w[0] <= w[1]));
        assert!(rep.densities.iter().all(|d| *d >= rat(0, 1) && *d <= rat(1, 1)));
        assert_eq!(rep.target, rat(1, k as i64 - 1));
        assert_eq!(rep.bound_f.as_ref().map(Vec::len), Some(grid.len()));
    }
}

#[test]
fn acceleration_is_a_pure_optimisation() {
    for (alpha, k) in [(rat(3, 2), 3u32), (rat(3, 2), 4), (rat(5, 2), 4), (rat(7, 5), 3)] {
        let q = query(alpha, k, 1);
        let grid = [1000u64, 20_000, 40_000];
        let plain = density_fixed_r(&q, &grid, false).unwrap();
        let fast = density_fixed_r(&q, &grid, true).unwrap();
        assert_eq!(plain.counts, fast.counts);
    }
}

#[test]
fn short_interval_windows() {
    let q = query(rat(3, 2), 3, 1);
    let n = 20_000u64;
    // L = N: two consecutive fixed-r windows
    let s = density_short_interval(&q, n, n, false).unwrap();
    let d = density_fixed_r(&q, &[n - 1, 2 * n - 1], false).unwrap();
    assert_eq!(s.count, d.counts[1] - d.counts[0]);
    // additivity
    for l in [1u64, 17, 500, 4096] {
        let a = density_short_interval(&q, n, l, false).unwrap().count;
        let b = density_short_interval(&q, n + l, l, false).unwrap().count;
        let c = density_short_interval(&q, n, 2 * l, false).unwrap().count;
        assert_eq!(a + b, c);
    }
    let big = density_short_interval(&q, 1_000_000, 10_000, false).unwrap();
    assert!((rational_to_f64(&big.density) - 0.5).abs() < 0.05, "{}", rational_to_f64(&big.density));
    assert!(density_short_interval(&q, n, 0, false).is_err());
}

#[test]
fn short_interval_case_selection() {
    let n = 1_000_000u64;
    assert_eq!(short_interval_bound(&rat(6, 5), n, 10_000).unwrap().case, 1);
    assert_eq!(short_interval_bound(&rat(7, 5), n, 10_000).unwrap().case, 2);
    assert_eq!(short_interval_bound(&rat(8, 5), n, n).unwrap().case, 3);
}

/// `mu(C^-_{3,2}(x)) = 3s^2/4 - max(s - 1/2, 0)^2` with `s = 1 - x`, worked out by hand.
fn cminus_area_k3(x: f64) -> f64 {
    let s = 1.0 - x;
    0.75 * s * s - (s - 0.5).max(0.0).powi(2)
}

#[test]
fn variable_r_constants() {
    // one-dimensional maximisation of the closed form on a fine grid
    let best = (1..100_000).map(|i| i as f64 / 100_000.0).map(|x| cminus_area_k3(x) * x.sqrt()).fold(0.0, f64::max);
    let (c, argmax) = c_kd(3, 1).unwrap();
    assert!((c - best).abs() < 1e-4 * best, "{c} vs {best}");
    assert!((cminus_area_k3(rational_to_f64(&argmax)) * rational_to_f64(&argmax).sqrt() - c).abs() < 1e-12);
    let a = a_tilde(&rat(3, 2), 3, 1).unwrap();
    assert!((a - best * (2.0f64 / 0.75).sqrt() / 1.25).abs() < 1e-4);
    // (2 / ((3/2)(1/2) * 1))^(1/2) / (2 - 3/4)
    let b = b_tilde(&rat(3, 2), 3, 1).unwrap();
    assert!((b - (2.0f64 / 0.75).sqrt() / 1.25).abs() < 1e-12);
    assert!(a < b);
}

#[test]
fn pruned_count_matches_double_loop() {
    let fl = |n: u64| power_floor(n, 3, 2);
    let grid: Vec<u64> = (1..=20).map(|i| i * 100).collect();
    let pruned = count_variable_r(&rat(3, 2), 3, &grid, true).unwrap();
    let full = count_variable_r(&rat(3, 2), 3, &grid, false).unwrap();
    assert_eq!(pruned.pair_counts, full.pair_counts);
    for (i, &n) in grid.iter().enumerate().step_by(5) {
        let mut want = 0u64;
        for m in 1..=n {
            for r in 1..=(n - m) / 2 {
                if is_ap_start(&fl, m, r, 3) {
                    want += 1;
                }
            }
        }
        assert_eq!(full.pair_counts[i], want, "N={n}");
    }
    for (alpha, k) in [(rat(3, 2), 4u32), (rat(7, 5), 3), (rat(5, 2), 4)] {
        let g = [500u64, 1000, 2000];
        assert_eq!(count_variable_r(&alpha, k, &g, true).unwrap().pair_counts, count_variable_r(&alpha, k, &g, false).unwrap().pair_counts);
    }
}

#[test]
fn gap_witnesses_verify() {
    let alpha = rat(3, 2);
    for k in [3u32, 4] {
        let q = query(alpha.clone(), k, 1);
        let grid: Vec<u64> = vec![1000, 1500, 2200, 3300, 5000, 7700, 12_000];
        let rep = gap_lengths(&alpha, k, 1, &grid, false).unwrap();
        for (&x, l) in grid.iter().zip(&rep.l_values) {
            let l = l.expect("not censored at this scale");
            assert!(brute_force_test(&q, x + l).unwrap());
            for m in x..x + l {
                assert!(!brute_force_test(&q, m).unwrap());
            }
        }
        if k == 4 {
            assert_eq!(rep.appendix_lower, Some(rat(4, 9)));
        } else {
            assert!(rep.ratios_k3.is_some());
        }
    }
}

#[test]
fn alpha_grid_parsing() {
    let g = parse_alpha_grid("1+i/1000,i=1..999").unwrap();
    assert_eq!(g.len(), 999);
    assert_eq!(g[0], rat(1001, 1000));
    assert_eq!(g[998], rat(1999, 1000));
    assert_eq!(parse_alpha_grid("3/2, 1.6").unwrap(), vec![rat(3, 2), rat(8, 5)]);
    assert!(parse_alpha_grid("1+i/1000,i=0..999").is_err());
    assert!(parse_alpha_grid("1+i/1000,i=1..1000").is_err());
    assert!(parse_alpha_grid("1.6,3/2").is_err());
}

#[test]
fn sweep_matches_oracle() {
    let grid = parse_alpha_grid("1+i/20,i=1..19").unwrap();
    let n = 300u64;
    let rep = alpha_sweep(3, 1, n, &grid).unwrap();
    for (a, d) in grid.iter().zip(&rep.densities) {
        let (p, q) = (a.numer().try_into().unwrap(), a.denom().try_into().unwrap());
        let fl = |m: u64| power_floor(m, p, q);
        let c = (1..=n).filter(|&m| is_ap_start(&fl, m, 1, 3)).count();
        assert_eq!(*d, rat(c as i64, n as i64), "alpha = {a}");
    }
    // just above 1 the floors are almost always consecutive integers
    let edge = alpha_sweep(3, 1, 1000, &[rat(1001, 1000)]).unwrap();
    assert!(rational_to_f64(&edge.densities[0]) > 0.9);
}

#[test]
fn xlogx_band_formula() {
    let e = std::f64::consts::E;
    let b = xlogx_band_limits(3, 1).unwrap();
    assert!((b.lower.midpoint_f64() - 1.0 / (2.0 * (e - 1.0))).abs() < 1e-15);
    assert!((b.upper.midpoint_f64() - e / (2.0 * (e - 1.0))).abs() < 1e-15);
    let mut prev = f64::INFINITY;
    for r in 1..=20u64 {
        let b = xlogx_band_limits(3, r).unwrap();
        let dist = (b.lower.midpoint_f64() - 0.5).abs().max((b.upper.midpoint_f64() - 0.5).abs());
        assert!(dist < prev);
        prev = dist;
    }
    assert!(prev < 0.02);
}

#[test]
fn limit_densities() {
    assert_eq!(limit_density(3, 1).unwrap(), rat(1, 2));
    assert_eq!(limit_density(4, 1).unwrap(), rat(1, 3));
}
