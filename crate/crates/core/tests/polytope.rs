use num_traits::{One, Signed, Zero};
use psprog_core::exactmath::{binomial, rat, rat_int, rational_to_f64, Rational};
use psprog_core::polytope::{
    build_c, lower_bound, vertices, volume_exact, volume_monte_carlo, HalfSpace, Polytope, Variant,
};

/// Vertices by brute force: solve every `dim`-subset of faces and keep the feasible solutions.
fn vertex_oracle(p: &Polytope) -> Vec<Vec<Rational>> {
    let m = p.halfspaces.len();
    let dim = p.dim;
    let mut out: Vec<Vec<Rational>> = vec![];
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let mut a: Vec<Vec<Rational>> =
            idx.iter().map(|&i| { let mut r = p.halfspaces[i].normal.clone(); r.push(p.halfspaces[i].offset.clone()); r }).collect();
        // Gauss-Jordan
        let mut ok = true;
        for c in 0..dim {
            let Some(piv) = (c..dim).find(|&r| !a[r][c].is_zero()) else { ok = false; break };
            a.swap(c, piv);
            let pv = a[c][c].clone();
            for v in a[c].iter_mut() {
                *v /= pv.clone();
            }
            for r in 0..dim {
                if r != c && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    for j in 0..=dim {
                        let t = &a[c][j] * &f;
                        a[r][j] -= t;
                    }
                }
            }
        }
        if ok {
            let y: Vec<Rational> = (0..dim).map(|r| a[r][dim].clone()).collect();
            if p.contains(&y) && !out.contains(&y) {
                out.push(y);
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - dim {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sorted(mut v: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    v.sort();
    v
}

#[test]
fn c32_faces_and_vertices() {
    let p = build_c(3, 1, Variant::C, None).unwrap();
    let cases = [((0, 1), (0, 1), true), ((1, 1), (0, 1), true), ((0, 1), (1, 2), true), ((1, 1), (-1, 2), true), ((1, 2), (1, 2), false)];
    for ((a0, a1), (b0, b1), inside) in cases {
        assert_eq!(p.contains(&[rat(a0, a1), rat(b0, b1)]), inside, "({a0}/{a1}, {b0}/{b1})");
    }
    let v = sorted(vertices(&p).unwrap());
    assert_eq!(v, sorted(vertex_oracle(&p)));
    assert_eq!(v.len(), 4);
}

#[test]
fn vertices_match_subset_enumeration() {
    for d in 1..=3u32 {
        for k in d + 2..=d + 4 {
            for variant in [Variant::C, Variant::Cprime] {
                let p = build_c(k, d, variant, None).unwrap();
                assert_eq!(sorted(vertices(&p).unwrap()), sorted(vertex_oracle(&p)), "k={k} d={d} {variant:?}");
            }
        }
    }
}

#[test]
fn simple_bodies() {
    let e = |i: usize, dim: usize, s: i64| -> Vec<Rational> { (0..dim).map(|j| if j == i { rat(s, 1) } else { Rational::zero() }).collect() };
    let cube = |dim: usize| {
        let mut hs = vec![];
        for i in 0..dim {
            hs.push(HalfSpace::new(e(i, dim, 1), Rational::zero()).unwrap());
            hs.push(HalfSpace::new(e(i, dim, -1), -Rational::one()).unwrap());
        }
        Polytope::custom(dim, hs).unwrap()
    };
    assert_eq!(vertices(&cube(2)).unwrap().len(), 4);
    assert_eq!(volume_exact(&cube(3)).unwrap().volume, Rational::one());
    // y0 >= 1 and y0 <= 0
    let empty = Polytope::custom(1, vec![HalfSpace::new(vec![rat(1, 1)], rat(1, 1)).unwrap(), HalfSpace::new(vec![rat(-1, 1)], Rational::zero()).unwrap()]).unwrap();
    assert!(vertices(&empty).unwrap().is_empty());
    assert_eq!(volume_exact(&empty).unwrap().volume, Rational::zero());
    // a flat slab 0 <= y0 <= 0 inside the unit square
    let mut hs = vec![HalfSpace::new(vec![rat(1, 1), rat(0, 1)], Rational::zero()).unwrap(), HalfSpace::new(vec![rat(-1, 1), rat(0, 1)], Rational::zero()).unwrap()];
    hs.push(HalfSpace::new(vec![rat(0, 1), rat(1, 1)], Rational::zero()).unwrap());
    hs.push(HalfSpace::new(vec![rat(0, 1), rat(-1, 1)], -Rational::one()).unwrap());
    let slab = Polytope::custom(2, hs).unwrap();
    assert_eq!(volume_exact(&slab).unwrap().volume, Rational::zero());
    assert_eq!(volume_monte_carlo(&slab, 10_000, 3).unwrap().estimate, 0.0);
}

#[test]
fn known_volumes() {
    for k in 3..=10u32 {
        assert_eq!(volume_exact(&build_c(k, 1, Variant::C, None).unwrap()).unwrap().volume, rat(1, k as i64 - 1));
    }
    for d in 1..=3u32 {
        for k in d + 2..=d + 6 {
            let prod: Rational = (1..=d as u64).map(|i| rat_int(binomial(k as u64 - 1, i))).product();
            let v = volume_exact(&build_c(k, d, Variant::Cprime, None).unwrap()).unwrap().volume;
            assert_eq!(v, Rational::one() / &prod);
            assert_eq!(lower_bound(k, d), Rational::one() / prod);
        }
    }
    assert_eq!(lower_bound(3, 1), rat(1, 2));
    assert_eq!(lower_bound(4, 2), rat(1, 9));
    assert_eq!(lower_bound(5, 1), rat(1, 4));
}

#[test]
fn cprime_is_inside_c() {
    for d in 1..=3u32 {
        for k in d + 2..=d + 6 {
            let c = build_c(k, d, Variant::C, None).unwrap();
            for v in vertices(&build_c(k, d, Variant::Cprime, None).unwrap()).unwrap() {
                assert!(c.contains(&v));
            }
        }
    }
}

#[test]
fn eps_variants_bracket_c() {
    for (k, d) in [(3u32, 1u32), (4, 1), (4, 2), (5, 2), (5, 3)] {
        let c = volume_exact(&build_c(k, d, Variant::C, None).unwrap()).unwrap().volume;
        let mut prev: Option<(Rational, Rational)> = None;
        for e in [rat(1, 4), rat(1, 8), rat(1, 16)] {
            let lo = volume_exact(&build_c(k, d, Variant::Cminus, Some(&e)).unwrap()).unwrap().volume;
            let hi = volume_exact(&build_c(k, d, Variant::Cplus, Some(&e)).unwrap()).unwrap().volume;
            assert!(lo <= c && c <= hi);
            let one_minus = Rational::one() - &e;
            let pow: Rational = (0..=d).map(|_| one_minus.clone()).product();
            assert!(lo >= pow * lower_bound(k, d));
            if let Some((plo, phi)) = &prev {
                assert!((&c - &lo).abs() <= (&c - plo).abs() && (&hi - &c).abs() <= (phi - &c).abs());
            }
            prev = Some((lo, hi));
        }
    }
}

#[test]
fn monte_carlo_agrees() {
    for (k, d) in [(3u32, 1u32), (4, 2), (5, 3)] {
        let p = build_c(k, d, Variant::C, None).unwrap();
        let exact = rational_to_f64(&volume_exact(&p).unwrap().volume);
        let mc = volume_monte_carlo(&p, 1 << 20, 11).unwrap();
        assert!((mc.estimate - exact).abs() <= 4.0 * mc.std_error, "{k} {d}: {mc:?} vs {exact}");
        assert_eq!(mc, volume_monte_carlo(&p, 1 << 20, 11).unwrap());
    }
}
