mod common;

use common::naive_discrepancy;
use psprog_core::discrepancy::{
    derivative_test_bounds, etk_bound, etk_bounds, extreme_discrepancy, isotropic_bound, orbit, theory_bound, Mode,
    PointSet2D, C_ETK, EXACT_SIZE_CAP,
};
use psprog_core::exactmath::rat;
use psprog_core::functions::FunctionSpec;
use psprog_core::Error;
use rand::{Rng, SeedableRng};

fn exact(pts: Vec<(f64, f64)>) -> f64 {
    extreme_discrepancy(&PointSet2D::from_points(pts).unwrap(), Mode::Exact).unwrap().value
}

#[test]
fn single_point() {
    // The box [1/2, 1/2 + t)^2 holds the point and has volume t^2 -> 0, so D = 1.
    assert!((exact(vec![(0.5, 0.5)]) - 1.0).abs() < 1e-12);
    assert!((naive_discrepancy(&[(0.5, 0.5)]) - 1.0).abs() < 1e-12);
}

#[test]
fn diagonal_grid() {
    for l in [4usize, 8, 16, 32] {
        let pts: Vec<(f64, f64)> = (0..l).map(|i| (i as f64 / l as f64, i as f64 / l as f64)).collect();
        let d = exact(pts.clone());
        assert!((d - naive_discrepancy(&pts)).abs() < 1e-12);
        assert!(d >= 0.25, "L={l}: {d}");
    }
}

#[test]
fn exact_matches_naive_on_random_sets() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let pts: Vec<(f64, f64)> = (0..16).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
        let (a, b) = (exact(pts.clone()), naive_discrepancy(&pts));
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    // coordinates on a coarse lattice, so ties are common
    for _ in 0..50 {
        let n = rng.gen_range(1..=20);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0..5) as f64 / 5.0, rng.gen_range(0..5) as f64 / 5.0)).collect();
        let (a, b) = (exact(pts.clone()), naive_discrepancy(&pts));
        assert!((a - b).abs() < 1e-12, "{pts:?}: {a} vs {b}");
    }
}

#[test]
fn exact_mode_size_cap() {
    let pts: Vec<(f64, f64)> = (0..EXACT_SIZE_CAP + 1).map(|i| ((i as f64 * 0.618).fract(), (i as f64 * 0.414).fract())).collect();
    let ps = PointSet2D::from_points(pts).unwrap();
    assert!(matches!(extreme_discrepancy(&ps, Mode::Exact), Err(Error::SizeCap(_))));
    let g = extreme_discrepancy(&ps, Mode::Grid(256)).unwrap();
    assert_eq!(g.error_radius, 4.0 / 256.0);
}

#[test]
fn orbit_examples() {
    let f = FunctionSpec::power(rat(3, 2)).unwrap();
    let ps = orbit(&f, 1, 100, 100, 64).unwrap();
    assert_eq!(ps.len(), 100);
    for (i, &(x, y)) in ps.points.iter().enumerate() {
        let n = (100 + i) as f64;
        assert!((0.0..1.0).contains(&x) && (0.0..1.0).contains(&y));
        let (fx, fy) = (n.powf(1.5).fract(), (1.5 * n.sqrt()).fract());
        assert!((x - fx).abs() < 1e-9 && (y - fy).abs() < 1e-9, "n={n}");
    }
    // 4^(3/2) = 8 and 1.5 * 4^(1/2) = 3 are integers
    assert_eq!(orbit(&f, 1, 4, 1, 64).unwrap().points, vec![(0.0, 0.0)]);
    assert_eq!(orbit(&f, 1, 7, 1, 64).unwrap().len(), 1);
}

#[test]
fn etk_single_point() {
    let ps = PointSet2D::from_points(vec![(0.3, 0.7)]).unwrap();
    // 1/H + the 8 unit-modulus terms with |h|_inf = 1, all with u(h) = 1
    assert!((etk_bound(&ps, 1).unwrap().value - 9.0).abs() < 1e-12);
}

#[test]
fn etk_sandwich_on_orbits() {
    let hs: Vec<u32> = (1..=6).map(|i| 1 << i).collect();
    for alpha in [rat(3, 2), rat(6, 5), rat(9, 5)] {
        let f = FunctionSpec::power(alpha).unwrap();
        for (n, l) in [(100u64, 64u64), (1000, 256), (5000, 512)] {
            let ps = orbit(&f, 1, n, l, 64).unwrap();
            let d = extreme_discrepancy(&ps, Mode::Exact).unwrap().value;
            let best = etk_bounds(&ps, &hs).unwrap().iter().map(|e| e.value + e.error_bound).fold(f64::INFINITY, f64::min);
            assert!(d <= C_ETK * best, "{f} N={n} L={l}: {d} > {C_ETK} * {best}");
        }
    }
}

#[test]
fn isotropic_examples() {
    assert!((isotropic_bound(0.25, 2).unwrap() - (8.0 * 2f64.sqrt() + 1.0) * 0.5).abs() < 1e-12);
    assert_eq!(isotropic_bound(0.0, 2).unwrap(), 0.0);
    assert!((isotropic_bound(0.3, 1).unwrap() - 1.5).abs() < 1e-12);
    assert!(isotropic_bound(1.5, 2).is_err());
}

#[test]
fn theory_bound_cases() {
    let n = 1u64 << 20;
    let cases = |a, l| theory_bound(&a, 1, n, l).unwrap().cases.iter().map(|c| c.0).collect::<Vec<_>>();
    assert_eq!(cases(rat(19, 10), n), vec![1]);
    assert_eq!(cases(rat(13, 10), n), vec![1, 2]);
    assert_eq!(cases(rat(8, 5), n), vec![1, 3]);
    let t = theory_bound(&rat(13, 10), 1, n, n).unwrap();
    assert_eq!(t.value, t.cases.iter().map(|c| c.1).fold(f64::INFINITY, f64::min));
}

#[test]
fn derivative_tests() {
    let a = rat(3, 2);
    // h0 = 0: g' = h1 r f'' lies in (0, 1), so the first-derivative test applies
    let rep = derivative_test_bounds(&a, 1, 0, 1, 10_000, 1000).unwrap();
    let first = &rep.checks[0];
    assert!(first.lambda.is_some() && first.fitted_multiplier.is_some());
    // h0 != 0: |g''| is of order |h0| N^(alpha-2)
    for h0 in [1i64, 3, -2] {
        let n = 100_000u64;
        let rep = derivative_test_bounds(&a, 1, h0, 1, n, 5000).unwrap();
        let lam2 = rep.checks[1].lambda.expect("second-derivative window");
        let scale = h0.unsigned_abs() as f64 * (n as f64).powf(-0.5);
        assert!(lam2 / scale > 0.1 && lam2 / scale < 10.0);
    }
    // an interval where g' crosses an integer: reported, not a crash
    let rep = derivative_test_bounds(&a, 1, 1, 0, 10_000, 1000).unwrap();
    assert!(rep.checks[0].lambda.is_none());
    assert!(rep.checks[0].note.contains("hypothesis fails"));
    assert!(derivative_test_bounds(&a, 1, 0, 0, 100, 10).is_err());
}

#[test]
fn fitted_multipliers_over_corpus() {
    let a = rat(3, 2);
    let mut worst = [0f64; 3];
    for (h0, h1) in [(1i64, 0i64), (0, 1), (1, 1), (2, -1), (3, 2)] {
        for (n, l) in [(10_000u64, 1000u64), (100_000, 5000)] {
            let rep = derivative_test_bounds(&a, 1, h0, h1, n, l).unwrap();
            for (w, c) in worst.iter_mut().zip(&rep.checks) {
                if let (Some(m), Some(b)) = (c.fitted_multiplier, c.bound) {
                    assert!(rep.sum_abs <= m * b * (1.0 + 1e-12));
                    *w = w.max(m);
                }
            }
        }
    }
    println!("largest fitted multipliers (first, second, third derivative): {worst:?}");
}
