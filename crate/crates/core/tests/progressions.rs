use num_traits::Zero;
use psprog_core::exactmath::{rat, rat_int, Rational};
use psprog_core::functions::FunctionSpec;
use psprog_core::progressions::{
    brute_force_test, criterion_classify, diff, floors, is_in_pkd, taylor_vector, ProgressionQuery, Verdict,
};

fn q(alpha: Rational, k: u32, r: u64) -> ProgressionQuery {
    ProgressionQuery::new(FunctionSpec::power(alpha).unwrap(), k, r).unwrap()
}

/// Degree <= d interpolation through the first d+1 terms, checked on the rest.
fn lagrange_oracle(seq: &[i128], d: usize) -> bool {
    if seq.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    let xs: Vec<i64> = (0..=d as i64).collect();
    let eval = |t: i64| -> Rational {
        let mut s = Rational::zero();
        for (i, &xi) in xs.iter().enumerate() {
            let mut term = rat_int(seq[i]);
            for &xj in xs.iter().filter(|&&xj| xj != xi) {
                term *= rat(t - xj, xi - xj);
            }
            s += term;
        }
        s
    };
    (0..seq.len()).all(|t| eval(t as i64) == rat_int(seq[t]))
}

#[test]
fn diff_examples() {
    assert_eq!(diff(&[2, 5, 8], 1, 1).unwrap(), vec![3, 3]);
    assert_eq!(diff(&[1, 1, 1, 1], 1, 2).unwrap(), vec![0, 0]);
    assert_eq!(diff(&[0, 1, 4, 9], 1, 2).unwrap(), vec![2, 2]);
}

#[test]
fn membership_examples() {
    let m = is_in_pkd(&[2, 5, 8], 1).unwrap();
    assert!(m.in_pkd);
    assert_eq!(m.newton_coeffs, Some(vec![2, 3]));
    assert!(!is_in_pkd(&[1, 2, 5], 1).unwrap().in_pkd);
    assert!(!is_in_pkd(&[5, 3, 1], 1).unwrap().in_pkd);
}

#[test]
fn membership_matches_interpolation_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3000 {
        let d = rng.gen_range(1..=3usize);
        let k = rng.gen_range(d + 2..=d + 5);
        let seq: Vec<i128> = if rng.gen_bool(0.5) {
            let c: Vec<i128> = (0..=d).map(|_| rng.gen_range(-3..6)).collect();
            (0..k as i128).map(|j| c.iter().enumerate().map(|(i, ci)| ci * j.pow(i as u32)).sum()).collect()
        } else {
            (0..k).map(|_| rng.gen_range(-20..20)).collect()
        };
        let m = is_in_pkd(&seq, d as u32).unwrap();
        assert_eq!(m.in_pkd, lagrange_oracle(&seq, d), "{seq:?} d={d}");
        if let Some(c) = m.newton_coeffs {
            // Newton form sum_i c_i C(j,i) reproduces every term
            for (j, &v) in seq.iter().enumerate() {
                let s: i128 = c.iter().enumerate().map(|(i, ci)| ci * psprog_core::exactmath::binomial(j as u64, i as u64).try_into().unwrap_or(0i128)).sum();
                assert_eq!(s, v);
            }
        }
    }
}

#[test]
fn brute_force_examples() {
    let q3 = q(rat(3, 2), 3, 1);
    assert!(brute_force_test(&q3, 2).unwrap());
    assert!(!brute_force_test(&q3, 1).unwrap());
    // floors at 2..5 are 2, 5, 8, 11
    let q4 = q(rat(3, 2), 4, 1);
    assert_eq!(floors(&q4, 2).unwrap(), vec![2, 5, 8, 11]);
    assert!(brute_force_test(&q4, 2).unwrap());
}

#[test]
fn query_validation() {
    let f = FunctionSpec::power(rat(5, 2)).unwrap();
    assert!(ProgressionQuery::new(f.clone(), 3, 1).is_err());
    assert!(ProgressionQuery::new(f.clone(), 4, 0).is_err());
    assert!(ProgressionQuery::new(f, 4, 1).is_ok());
}

#[test]
fn taylor_vector_examples() {
    let f = FunctionSpec::power(rat(3, 2)).unwrap();
    for r in [1u64, 3] {
        let t = taylor_vector(&q(rat(3, 2), 3, r), 1000, 128).unwrap();
        assert!((t.a[0].midpoint_f64() - 1000f64.powf(1.5)).abs() < 1e-6);
        let fp = f.eval(1, 1000, 128).unwrap().midpoint_f64();
        assert!((t.a[1].midpoint_f64() - r as f64 * fp).abs() < 1e-9);
    }
    // d = 2, r = 1: f(n+j) ~ a_0 + j a_1 + C(j,2) a_2, so a_1 = f' + f''/2 and a_2 = f''
    let g = FunctionSpec::power(rat(5, 2)).unwrap();
    let n = 500u64;
    let t = taylor_vector(&q(rat(5, 2), 4, 1), n, 128).unwrap();
    let d1 = g.eval(1, n, 128).unwrap().midpoint_f64();
    let d2 = g.eval(2, n, 128).unwrap().midpoint_f64();
    assert!((t.a[1].midpoint_f64() - (d1 + d2 / 2.0)).abs() < 1e-6);
    assert!((t.a[2].midpoint_f64() - d2).abs() < 1e-9);
    // the interpolation error at j = 1, 2 is bounded by eps
    let eps = t.eps.midpoint_f64();
    for j in 1..=2u64 {
        let exact = ((n + j) as f64).powf(2.5);
        let approx = t.a[0].midpoint_f64() + j as f64 * t.a[1].midpoint_f64() + (j * (j - 1) / 2) as f64 * t.a[2].midpoint_f64();
        assert!(exact - approx > 0.0 && exact - approx <= eps + 1e-6, "j={j}");
    }
}

#[test]
fn criterion_agrees_with_brute_force() {
    for (alpha, k) in [(rat(3, 2), 3u32), (rat(3, 2), 4), (rat(5, 2), 4)] {
        let query = q(alpha, k, 1);
        let mut decided = 0;
        for n in 20_000..25_000u64 {
            let o = criterion_classify(&query, n).unwrap();
            let bf = brute_force_test(&query, n).unwrap();
            match o.verdict {
                Verdict::CertainlyIn => {
                    assert!(bf, "n={n}");
                    let s = o.shift.expect("accepting shift");
                    if k == 3 {
                        assert!(s == vec![0] || s == vec![-1], "shift {s:?}");
                    }
                    decided += 1;
                }
                Verdict::CertainlyOut => {
                    assert!(!bf, "n={n}");
                    decided += 1;
                }
                Verdict::Uncertain => {}
            }
        }
        assert!(decided > 4000);
    }
}
