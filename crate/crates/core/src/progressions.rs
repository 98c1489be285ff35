//! Membership in `P_{k,d}`, the Taylor coefficient vector and the polytope criterion.
//!
//! Writing `f(n + rj) = sum_i C(j,i) a_i(n) + R_j` with `0 < R_j <= eps`, the floors
//! `floor(f(n + rj))`, `j < k`, have constant `d`-th differences exactly when some integer
//! shift `s` makes `z = ({a_i} + s_i)_i` satisfy `0 <= sum_i C(j,i) z_i + R_j < 1` for all
//! `j`. Membership of `z` in `{0 <= . < 1 - eps}` is therefore sufficient and membership in
//! `{-eps <= . < 1}` necessary.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::exactmath::fixed::{Ctx, Fx};
use crate::exactmath::{
    binomial, factorial, floor_rat, rat, rat_int, stirling2, CertifiedReal, Rational,
};
use crate::functions::FunctionSpec;
use crate::polytope::{bounding_box, build_c, Variant};

/// Which progressions `(floor(f(n + rj)))_{j<k}` to test for membership in `P_{k,d}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProgressionQuery {
    pub f: FunctionSpec,
    pub k: u32,
    pub d: u32,
    pub r: u64,
}

impl ProgressionQuery {
    /// Query with `d` taken from `f`.
    pub fn new(f: FunctionSpec, k: u32, r: u64) -> Result<ProgressionQuery> {
        let d = f.d;
        if k < d + 2 {
            return arg(format!("need k >= d + 2 = {}, got k = {k}", d + 2));
        }
        if k > 64 {
            return Err(Error::SizeCap(format!("k = {k} exceeds 64")));
        }
        if r == 0 {
            return arg("r must be positive");
        }
        Ok(ProgressionQuery { f, k, d, r })
    }

    fn check_n(&self, n: u64) -> Result<()> {
        if n < self.f.n0 {
            return Err(Error::BelowAsymptoticRegime { n, reason: format!("below the domain start n0 = {}", self.f.n0) });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MembershipResult {
    pub in_pkd: bool,
    /// Newton coefficients `Delta^i a(0)` for `i = 0..=d` when `in_pkd`.
    pub newton_coeffs: Option<Vec<i128>>,
}

/// Apply `Delta_r` `order` times, where `Delta_r a(n) = a(n + r) - a(n)`.
pub fn diff(seq: &[i128], r_step: usize, order: usize) -> Result<Vec<i128>> {
    if r_step == 0 || order == 0 {
        return arg("step and order must be positive");
    }
    if seq.len() <= r_step * order {
        return arg(format!("sequence of length {} too short for step {r_step} and order {order}", seq.len()));
    }
    let mut v = seq.to_vec();
    for _ in 0..order {
        v = v
            .iter()
            .zip(&v[r_step..])
            .map(|(a, b)| b.checked_sub(*a).ok_or_else(|| Error::Overflow("difference overflows i128".into())))
            .collect::<Result<_>>()?;
    }
    Ok(v)
}

/// Whether `seq` is strictly increasing with constant `d`-th differences.
pub fn is_in_pkd(seq: &[i128], d: u32) -> Result<MembershipResult> {
    let k = seq.len();
    if d < 1 || k < d as usize + 2 {
        return arg(format!("sequence length {k} must be at least d + 2 = {}", d + 2));
    }
    let increasing = seq.windows(2).all(|w| w[0] < w[1]);
    let dd = diff(seq, 1, d as usize)?;
    if !increasing || dd.iter().any(|x| *x != dd[0]) {
        return Ok(MembershipResult { in_pkd: false, newton_coeffs: None });
    }
    let mut coeffs = vec![seq[0]];
    for i in 1..=d as usize {
        coeffs.push(diff(seq, 1, i)?[0]);
    }
    Ok(MembershipResult { in_pkd: true, newton_coeffs: Some(coeffs) })
}

/// The `k` exact floors `floor(f(n + rj))`.
pub fn floors(q: &ProgressionQuery, n: u64) -> Result<Vec<i128>> {
    (0..q.k as u64)
        .map(|j| {
            let x = q.r.checked_mul(j).and_then(|t| t.checked_add(n)).ok_or_else(|| Error::Overflow("n + rj".into()))?;
            q.f.floor_f(x)
        })
        .collect()
}

pub fn brute_force_test(q: &ProgressionQuery, n: u64) -> Result<bool> {
    q.check_n(n)?;
    Ok(is_in_pkd(&floors(q, n)?, q.d)?.in_pkd)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaylorVector {
    pub n: u64,
    /// `a_0(n), ..., a_d(n)`
    pub a: Vec<CertifiedReal>,
    /// Enclosure of `(r(k-1))^(d+1) / (d+1)! * f^(d+1)(n)`, which bounds every remainder `R_j`.
    pub eps: CertifiedReal,
    #[serde(skip)]
    fx: FxVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct FxVector {
    w: u32,
    a: Vec<Fx>,
    eps: Fx,
}

/// `A[l][i] = r^l / l! * S(l,i) * i!`, so that `a_i = sum_l A[l][i] f^(l)(n)`.
fn taylor_matrix(d: u32, r: u64) -> Result<Vec<Vec<Rational>>> {
    let m = d as usize + 1;
    let mut a = vec![vec![Rational::zero(); m]; m];
    for l in 0..m {
        let rl = rat_int(BigInt::from(r).pow(l as u32)) / rat_int(factorial(l as u64));
        for i in 0..=l {
            a[l][i] = &rl * rat_int(stirling2(l, i)? * factorial(i as u64));
        }
    }
    Ok(a)
}

pub fn taylor_vector(q: &ProgressionQuery, n: u64, bits: u32) -> Result<TaylorVector> {
    q.check_n(n)?;
    let d = q.d as usize;
    let derivs = q.f.derivatives(n, q.d + 1, bits)?;
    let w = derivs.iter().map(|c| (-c.lower.exponent).max(0) as u32).max().unwrap_or(bits);
    let c = Ctx::new(w);
    let mat = taylor_matrix(q.d, q.r)?;
    let exact = exact_derivatives(q, n);
    let dfx: Vec<Fx> = derivs.iter().map(|v| v.to_fx(w)).collect();
    let a: Vec<Fx> = (0..=d)
        .map(|i| match &exact {
            Some(ex) => {
                let v: Rational = (i..=d).map(|l| &mat[l][i] * &ex[l]).sum();
                c.ratio(v.numer(), v.denom())
            }
            None => (i..=d).fold(Fx::point(BigInt::zero()), |acc, l| {
                c.add(&acc, &c.mul_ratio(&dfx[l], mat[l][i].numer(), mat[l][i].denom()))
            }),
        })
        .collect();
    let coef = rat_int(BigInt::from(q.r * (q.k as u64 - 1)).pow(q.d + 1)) / rat_int(factorial(q.d as u64 + 1));
    let eps = c.mul_ratio(&dfx[d + 1], coef.numer(), coef.denom());
    Ok(TaylorVector {
        n,
        a: a.iter().map(|x| CertifiedReal::from_fx(x, w, bits)).collect(),
        eps: CertifiedReal::from_fx(&eps, w, bits),
        fx: FxVector { w, a, eps },
    })
}

/// Exact derivatives `f^(l)(n)`, `l <= d`, when `f(n)` is an integer power.
fn exact_derivatives(q: &ProgressionQuery, n: u64) -> Option<Vec<Rational>> {
    let alpha = q.f.alpha()?;
    let v = rat_int(q.f.exact_integer_check(n)?);
    let mut out = Vec::new();
    let mut ff = Rational::one();
    let mut xi = Rational::one();
    for l in 0..=q.d as u64 {
        out.push(&ff * &v / &xi);
        ff *= alpha - rat_int(l);
        xi *= rat_int(n);
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertainlyIn,
    CertainlyOut,
    Uncertain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub verdict: Verdict,
    /// `(s_1, ..., s_d)` of the accepting shift.
    pub shift: Option<Vec<i64>>,
    /// Upper bound on `eps` actually used in the comparisons.
    #[serde(serialize_with = "ser_rat")]
    pub eps_used: Rational,
    pub bits: u32,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::exactmath::fmt_rational(r))
}

/// Integer ranges for `s_1..s_d` from the exact bounding box of the symmetric `C+(1/2)`,
/// which contains every candidate point `z` once `eps < 1/2`.
pub fn shift_box(k: u32, d: u32) -> Result<Vec<(i64, i64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Vec<(i64, i64)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().unwrap().get(&(k, d)) {
        return Ok(b.clone());
    }
    let mut p = build_c(k, d, Variant::C, None)?;
    // every face with j >= 1 moves out by 1/2: -1/2 <= sum < 3/2
    for h in p.halfspaces.iter_mut().skip(2) {
        h.offset -= rat(1, 2);
    }
    let (lo, hi) = bounding_box(&p)?.ok_or_else(|| Error::Invariant("C+(1/2) is empty".into()))?;
    let to_i = |r: BigInt| r.to_i64().ok_or_else(|| Error::Overflow("shift bound".into()));
    let b: Vec<(i64, i64)> = (1..=d as usize)
        .map(|i| Ok((to_i(floor_rat(&lo[i]))?, to_i(floor_rat(&hi[i]))?)))
        .collect::<Result<_>>()?;
    cache.lock().unwrap().insert((k, d), b.clone());
    Ok(b)
}

/// Classify `n` with the criterion: `CertainlyIn` and `CertainlyOut` are always correct.
pub fn criterion_classify(q: &ProgressionQuery, n: u64) -> Result<CriterionOutcome> {
    let mut bits = 128;
    let mut last = None;
    for _ in 0..3 {
        let tv = taylor_vector(q, n, bits)?;
        let (out, straddles) = classify_vector(q, &tv)?;
        if out.verdict != Verdict::Uncertain || !straddles {
            return Ok(out);
        }
        last = Some(out);
        bits *= 2;
    }
    Ok(last.unwrap())
}

/// Verdict for one Taylor vector and whether any undecided comparison straddled a face.
fn classify_vector(q: &ProgressionQuery, tv: &TaylorVector) -> Result<(CriterionOutcome, bool)> {
    let FxVector { w, a, eps } = &tv.fx;
    let c = Ctx::new(*w);
    let one = c.one();
    let eps_hi = eps.hi.clone();
    let eps_used = Rational::new(eps_hi.clone(), BigInt::one() << *w);
    if eps_used >= rat(1, 2) {
        return Err(Error::BelowAsymptoticRegime { n: tv.n, reason: format!("eps = {:.4} >= 1/2", crate::exactmath::rational_to_f64(&eps_used)) });
    }
    let mut frac = Vec::with_capacity(a.len());
    let mut straddles = false;
    for x in a {
        let fl = &x.lo >> *w;
        if fl != (&x.hi >> *w) {
            let out = CriterionOutcome { verdict: Verdict::Uncertain, shift: None, eps_used, bits: tv.a[0].precision_bits };
            return Ok((out, true));
        }
        let base = &fl << *w;
        frac.push(Fx { lo: &x.lo - &base, hi: &x.hi - &base });
    }
    let sbox = shift_box(q.k, q.d)?;
    let one_minus_eps = &one - &eps_hi;
    let neg_eps = -&eps_hi;
    let binoms: Vec<Vec<BigInt>> = (1..q.k as u64).map(|j| (0..=q.d as u64).map(|i| binomial(j, i)).collect()).collect();
    let mut accepted: Option<Vec<i64>> = None;
    let mut all_out = true;
    let mut s = sbox.iter().map(|b| b.0).collect::<Vec<i64>>();
    loop {
        let z: Vec<Fx> = frac
            .iter()
            .enumerate()
            .map(|(i, f)| if i == 0 { f.clone() } else { c.add(f, &c.small(s[i - 1])) })
            .collect();
        let mut inside = true;
        let mut outside = false;
        for row in &binoms {
            let mut lo = BigInt::zero();
            let mut hi = BigInt::zero();
            for (b, zi) in row.iter().zip(&z) {
                if !b.is_zero() {
                    lo += b * &zi.lo;
                    hi += b * &zi.hi;
                }
            }
            let in_j = !lo.is_negative() && hi < one_minus_eps;
            let out_j = hi < neg_eps || lo >= one;
            inside &= in_j;
            outside |= out_j;
            if !in_j && !out_j {
                let crosses = |t: &BigInt| lo < *t && *t <= hi;
                straddles |= crosses(&BigInt::zero()) || crosses(&one_minus_eps) || crosses(&neg_eps) || crosses(&one);
            }
        }
        if inside {
            if accepted.is_some() {
                return Err(Error::Invariant(format!("two accepting shifts at n = {}", tv.n)));
            }
            accepted = Some(s.clone());
        }
        all_out &= outside;
        // next shift in the box, odometer order
        let mut i = 0;
        loop {
            if i == s.len() {
                let verdict = match (&accepted, all_out) {
                    (Some(_), _) => Verdict::CertainlyIn,
                    (None, true) => Verdict::CertainlyOut,
                    _ => Verdict::Uncertain,
                };
                let out = CriterionOutcome { verdict, shift: accepted, eps_used, bits: tv.a[0].precision_bits };
                return Ok((out, straddles));
            }
            if s[i] < sbox[i].1 {
                s[i] += 1;
                break;
            }
            s[i] = sbox[i].0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(alpha: (i64, i64), k: u32, r: u64) -> ProgressionQuery {
        ProgressionQuery::new(FunctionSpec::power(rat(alpha.0, alpha.1)).unwrap(), k, r).unwrap()
    }

    #[test]
    fn differences() {
        assert_eq!(diff(&[2, 5, 8], 1, 1).unwrap(), vec![3, 3]);
        assert_eq!(diff(&[1, 1, 1, 1], 1, 2).unwrap(), vec![0, 0]);
        assert_eq!(diff(&[0, 1, 4, 9], 1, 2).unwrap(), vec![2, 2]);
        assert_eq!(diff(&[0, 1, 4, 9, 16], 2, 1).unwrap(), vec![4, 8, 12]);
        assert!(diff(&[1, 2], 1, 2).is_err());
    }

    #[test]
    fn membership() {
        assert_eq!(is_in_pkd(&[2, 5, 8], 1).unwrap(), MembershipResult { in_pkd: true, newton_coeffs: Some(vec![2, 3]) });
        assert!(!is_in_pkd(&[1, 2, 5], 1).unwrap().in_pkd);
        assert!(!is_in_pkd(&[5, 3, 1], 1).unwrap().in_pkd);
        assert!(is_in_pkd(&[1, 2], 1).is_err());
    }

    #[test]
    fn brute_force_small_cases() {
        assert!(brute_force_test(&q((3, 2), 3, 1), 2).unwrap());
        assert!(!brute_force_test(&q((3, 2), 3, 1), 1).unwrap());
        // floors at 2..5 are 2, 5, 8, 11: three equal differences
        assert_eq!(floors(&q((3, 2), 4, 1), 2).unwrap(), vec![2, 5, 8, 11]);
        assert!(brute_force_test(&q((3, 2), 4, 1), 2).unwrap());
    }

    #[test]
    fn shift_boxes() {
        assert_eq!(shift_box(3, 1).unwrap(), vec![(-1, 0)]);
        assert_eq!(shift_box(4, 1).unwrap(), vec![(-1, 0)]);
    }

    #[test]
    fn taylor_vectors() {
        let tv = taylor_vector(&q((3, 2), 3, 3), 10, 100).unwrap();
        let f1 = 1.5 * 10f64.sqrt() * 3.0;
        assert!((tv.a[1].midpoint_f64() - f1).abs() < 1e-12);
        let tv = taylor_vector(&q((5, 2), 4, 1), 7, 100).unwrap();
        let (f1, f2) = (2.5 * 7f64.powf(1.5), 3.75 * 7f64.sqrt());
        assert!((tv.a[1].midpoint_f64() - (f1 + f2 / 2.0)).abs() < 1e-10);
        assert!((tv.a[2].midpoint_f64() - f2).abs() < 1e-10);
    }
}
