//! Truncated Taylor series with interval coefficients.
//!
//! A jet `[c_0, ..., c_m]` stands for `sum c_i t^i`; the i-th derivative of the
//! underlying function at the expansion point is `i! * c_i`.

use num_bigint::BigInt;

use crate::exactmath::fixed::{Ctx, Fx};

pub(crate) type Jet = Vec<Fx>;

pub(crate) fn variable(c: &Ctx, x: Fx, m: usize) -> Jet {
    let mut j = vec![Fx::point(BigInt::from(0)); m + 1];
    j[0] = x;
    if m >= 1 {
        j[1] = Fx::point(c.one());
    }
    j
}

pub(crate) fn mul(c: &Ctx, a: &Jet, b: &Jet) -> Jet {
    let m = a.len();
    (0..m)
        .map(|k| {
            let mut s = c.mul(&a[0], &b[k]);
            for i in 1..=k {
                s = c.add(&s, &c.mul(&a[i], &b[k - i]));
            }
            s
        })
        .collect()
}

pub(crate) fn scale(c: &Ctx, a: &Jet, p: &BigInt, q: &BigInt) -> Jet {
    a.iter().map(|x| c.mul_ratio(x, p, q)).collect()
}

/// `ln(a)`; `None` unless the constant term is positive.
pub(crate) fn ln(c: &Ctx, a: &Jet) -> Option<Jet> {
    let m = a.len();
    let mut out = vec![c.ln(&a[0])?];
    for k in 1..m {
        let mut s = a[k].clone();
        for i in 1..k {
            let t = c.mul_int(&c.mul(&out[i], &a[k - i]), &BigInt::from(i));
            s = c.sub(&s, &c.div_int(&t, &BigInt::from(k)));
        }
        out.push(c.div(&s, &a[0])?);
    }
    Some(out)
}

pub(crate) fn exp(c: &Ctx, a: &Jet) -> Jet {
    let m = a.len();
    let mut out = vec![c.exp(&a[0])];
    for k in 1..m {
        let mut s = c.mul_int(&c.mul(&a[1], &out[k - 1]), &BigInt::from(1));
        for i in 2..=k {
            s = c.add(&s, &c.mul_int(&c.mul(&a[i], &out[k - i]), &BigInt::from(i)));
        }
        out.push(c.div_int(&s, &BigInt::from(k)));
    }
    out
}

/// `a^(p/q)` for a jet with positive constant term.
pub(crate) fn pow(c: &Ctx, a: &Jet, p: &BigInt, q: &BigInt) -> Option<Jet> {
    Some(exp(c, &scale(c, &ln(c, a)?, p, q)))
}
