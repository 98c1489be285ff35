//! Fixed-point interval kernels behind the certified evaluators.
//!
//! An [`Fx`] is the closed interval `[lo, hi] * 2^-w` for a scale `w` carried by
//! the [`Ctx`] that produced it. Every operation rounds outward, so the true
//! value of an expression is always inside the interval computed for it.

use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Fx {
    pub lo: BigInt,
    pub hi: BigInt,
}

impl Fx {
    pub fn point(v: BigInt) -> Fx {
        Fx { lo: v.clone(), hi: v }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn magnitude(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    #[allow(dead_code)]
    pub fn width(&self) -> BigInt {
        &self.hi - &self.lo
    }
}

/// `a >> s` with rounding toward minus infinity.
pub(crate) fn shr_floor(a: &BigInt, s: u32) -> BigInt {
    a >> s
}

/// `a >> s` with rounding toward plus infinity.
pub(crate) fn shr_ceil(a: &BigInt, s: u32) -> BigInt {
    -((-a) >> s)
}

pub(crate) fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

pub(crate) fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Approximate value of `v * 2^-w`; used only to pick reduction parameters.
pub(crate) fn to_f64(v: &BigInt, w: u32) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(62);
    let top = (v >> shift).to_f64().unwrap_or(0.0);
    top * 2f64.powi(shift as i32 - w as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Ctx {
    pub w: u32,
}

impl Ctx {
    pub fn new(w: u32) -> Ctx {
        Ctx { w }
    }

    pub fn one(&self) -> BigInt {
        BigInt::one() << self.w
    }

    pub fn int(&self, n: &BigInt) -> Fx {
        Fx::point(n << self.w)
    }

    pub fn small(&self, n: i64) -> Fx {
        self.int(&BigInt::from(n))
    }

    /// Enclosure of `p / q`.
    pub fn ratio(&self, p: &BigInt, q: &BigInt) -> Fx {
        let (p, q) = if q.is_negative() { (-p, -q) } else { (p.clone(), q.clone()) };
        let num = p << self.w;
        Fx { lo: div_floor(&num, &q), hi: div_ceil(&num, &q) }
    }

    /// Re-express an interval given at scale `from` at this context's scale.
    pub fn rescale(&self, a: &Fx, from: u32) -> Fx {
        if from == self.w {
            a.clone()
        } else if from < self.w {
            let s = self.w - from;
            Fx { lo: &a.lo << s, hi: &a.hi << s }
        } else {
            let s = from - self.w;
            Fx { lo: shr_floor(&a.lo, s), hi: shr_ceil(&a.hi, s) }
        }
    }

    pub fn add(&self, a: &Fx, b: &Fx) -> Fx {
        Fx { lo: &a.lo + &b.lo, hi: &a.hi + &b.hi }
    }

    pub fn sub(&self, a: &Fx, b: &Fx) -> Fx {
        Fx { lo: &a.lo - &b.hi, hi: &a.hi - &b.lo }
    }

    #[allow(dead_code)]
    pub fn neg(&self, a: &Fx) -> Fx {
        Fx { lo: -&a.hi, hi: -&a.lo }
    }

    /// Widen by `u` units of `2^-w` on both sides.
    pub fn widen(&self, a: &Fx, u: &BigInt) -> Fx {
        Fx { lo: &a.lo - u, hi: &a.hi + u }
    }

    pub fn mul(&self, a: &Fx, b: &Fx) -> Fx {
        let w = self.w;
        if !a.lo.is_negative() && !b.lo.is_negative() {
            return Fx { lo: shr_floor(&(&a.lo * &b.lo), w), hi: shr_ceil(&(&a.hi * &b.hi), w) };
        }
        let ps = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
        let mn = ps.iter().min().unwrap();
        let mx = ps.iter().max().unwrap();
        Fx { lo: shr_floor(mn, w), hi: shr_ceil(mx, w) }
    }

    pub fn sqr(&self, a: &Fx) -> Fx {
        let w = self.w;
        if !a.lo.is_negative() {
            Fx { lo: shr_floor(&(&a.lo * &a.lo), w), hi: shr_ceil(&(&a.hi * &a.hi), w) }
        } else if !a.hi.is_positive() {
            Fx { lo: shr_floor(&(&a.hi * &a.hi), w), hi: shr_ceil(&(&a.lo * &a.lo), w) }
        } else {
            let m = a.magnitude();
            Fx { lo: BigInt::zero(), hi: shr_ceil(&(&m * &m), w) }
        }
    }

    pub fn mul_int(&self, a: &Fx, n: &BigInt) -> Fx {
        if n.is_negative() {
            Fx { lo: &a.hi * n, hi: &a.lo * n }
        } else {
            Fx { lo: &a.lo * n, hi: &a.hi * n }
        }
    }

    pub fn div_int(&self, a: &Fx, n: &BigInt) -> Fx {
        if n.is_negative() {
            let m = -n;
            Fx { lo: div_floor(&(-&a.hi), &m), hi: div_ceil(&(-&a.lo), &m) }
        } else {
            Fx { lo: div_floor(&a.lo, n), hi: div_ceil(&a.hi, n) }
        }
    }

    /// `a * p / q` with a single outward rounding.
    pub fn mul_ratio(&self, a: &Fx, p: &BigInt, q: &BigInt) -> Fx {
        self.div_int(&self.mul_int(a, p), q)
    }

    /// Multiply by `2^k`.
    pub fn ldexp(&self, a: &Fx, k: i64) -> Fx {
        if k >= 0 {
            Fx { lo: &a.lo << k as u32, hi: &a.hi << k as u32 }
        } else {
            let s = (-k) as u32;
            Fx { lo: shr_floor(&a.lo, s), hi: shr_ceil(&a.hi, s) }
        }
    }

    /// `a / b`; `None` when `b` contains zero.
    pub fn div(&self, a: &Fx, b: &Fx) -> Option<Fx> {
        if !b.lo.is_positive() && !b.hi.is_negative() {
            return None;
        }
        let w = self.w;
        let nums = [&a.lo << w, &a.hi << w];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for x in &nums {
            for y in [&b.lo, &b.hi] {
                let (xn, yn) = if y.is_negative() { (-x, -y) } else { (x.clone(), y.clone()) };
                let f = div_floor(&xn, &yn);
                let c = div_ceil(&xn, &yn);
                lo = Some(match lo {
                    Some(l) if l <= f => l,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(h) if h >= c => h,
                    _ => c,
                });
            }
        }
        Some(Fx { lo: lo.unwrap(), hi: hi.unwrap() })
    }

    /// Enclosure of `ln(a)`; `None` unless `a > 0`.
    pub fn ln(&self, a: &Fx) -> Option<Fx> {
        if !a.lo.is_positive() {
            return None;
        }
        let lo = self.ln_point(&a.lo);
        if a.is_point() {
            return Some(lo);
        }
        let hi = self.ln_point(&a.hi);
        Some(Fx { lo: lo.lo, hi: hi.hi })
    }

    fn ln_point(&self, m: &BigInt) -> Fx {
        let big = Ctx::new(self.w + 16);
        let ww = big.w as i64;
        let b = m.bits() as i64;
        let e = b - 1 - self.w as i64;
        // m * 2^-w = 2^e * y with y in [1, 2)
        let s = ww - (b - 1);
        let y = if s >= 0 {
            Fx::point(m << s as u32)
        } else {
            Fx { lo: shr_floor(m, (-s) as u32), hi: shr_ceil(m, (-s) as u32) }
        };
        let j = ((&y.lo - big.one()) >> (big.w - 5)).to_i64().unwrap_or(0).clamp(0, 31);
        let y1 = big.mul_ratio(&y, &BigInt::from(32), &BigInt::from(32 + j));
        let one = Fx::point(big.one());
        let z = big.div(&big.sub(&y1, &one), &big.add(&y1, &one)).expect("y' + 1 > 0");
        let s = atanh_series(&big, &z);
        let t = tables(big.w);
        let tw = t.w;
        let ln2 = big.rescale(&t.ln2, tw);
        let lnt = big.rescale(&t.ln_steps[j as usize], tw);
        let mut r = big.add(&big.mul_int(&s, &BigInt::from(2)), &lnt);
        r = big.add(&r, &big.mul_int(&ln2, &BigInt::from(e)));
        self.rescale(&r, big.w)
    }

    /// Enclosure of `exp(a)`.
    pub fn exp(&self, a: &Fx) -> Fx {
        let big = Ctx::new(self.w + 40);
        let approx = to_f64(&a.lo, self.w);
        let k = (approx / std::f64::consts::LN_2).round();
        let k = if k.is_finite() { k as i64 } else { 0 };
        let t = tables(big.w);
        let ln2 = big.rescale(&t.ln2, t.w);
        let a1 = big.rescale(a, self.w);
        let s = big.sub(&a1, &big.mul_int(&ln2, &BigInt::from(k)));
        let r = big.ldexp(&s, -8);
        let mut sum = Fx::point(big.one());
        let mut term = Fx::point(big.one());
        let mut i: i64 = 1;
        loop {
            term = big.div_int(&big.mul(&term, &r), &BigInt::from(i));
            sum = big.add(&sum, &term);
            if term.magnitude() <= BigInt::one() || i > 4 * big.w as i64 {
                break;
            }
            i += 1;
        }
        // |r| < 1/2 so the tail is at most twice the last term
        sum = big.widen(&sum, &BigInt::from(3));
        for _ in 0..8 {
            sum = big.sqr(&sum);
        }
        let out = big.ldexp(&sum, k);
        self.rescale(&out, big.w)
    }

    /// Enclosure of `x^(p/q)` for an interval `x > 0`.
    pub fn pow_ratio(&self, x: &Fx, p: &BigInt, q: &BigInt) -> Option<Fx> {
        let l = self.ln(x)?;
        Some(self.exp(&self.mul_ratio(&l, p, q)))
    }
}

/// `atanh(z)` for `|z| <= 1/3`, with the truncation error folded in.
fn atanh_series(c: &Ctx, z: &Fx) -> Fx {
    let z2 = c.sqr(z);
    let mut s = z.clone();
    let mut t = z.clone();
    let mut i: i64 = 1;
    loop {
        t = c.mul(&t, &z2);
        s = c.add(&s, &c.div_int(&t, &BigInt::from(2 * i + 1)));
        if t.magnitude() <= BigInt::one() || i > 4 * c.w as i64 {
            break;
        }
        i += 1;
    }
    // remaining terms sum to less than |t| since z^2 <= 1/9
    c.widen(&s, &BigInt::from(2))
}

struct LnTables {
    w: u32,
    ln2: Fx,
    /// ln(1 + j/32) for j = 0..32
    ln_steps: Vec<Fx>,
}

static TABLES: RwLock<Option<Arc<LnTables>>> = RwLock::new(None);

fn tables(w: u32) -> Arc<LnTables> {
    if let Some(t) = TABLES.read().unwrap().as_ref() {
        if t.w >= w {
            return t.clone();
        }
    }
    let tw = (w + 64).next_multiple_of(256);
    let c = Ctx::new(tw);
    let two = BigInt::from(2);
    let ln2 = c.mul_int(&atanh_series(&c, &c.ratio(&BigInt::one(), &BigInt::from(3))), &two);
    let ln_steps = (0..32)
        .map(|j| {
            let z = c.ratio(&BigInt::from(j), &BigInt::from(64 + j));
            c.mul_int(&atanh_series(&c, &z), &two)
        })
        .collect();
    let t = Arc::new(LnTables { w: tw, ln2, ln_steps });
    let mut guard = TABLES.write().unwrap();
    match guard.as_ref() {
        Some(old) if old.w >= tw => old.clone(),
        _ => {
            *guard = Some(t.clone());
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(c: &Ctx, a: &Fx) -> (f64, f64) {
        (to_f64(&a.lo, c.w), to_f64(&a.hi, c.w))
    }

    #[test]
    fn shifts_round_outward() {
        let a = BigInt::from(-5);
        assert_eq!(shr_floor(&a, 1), BigInt::from(-3));
        assert_eq!(shr_ceil(&a, 1), BigInt::from(-2));
        assert_eq!(shr_floor(&BigInt::from(5), 1), BigInt::from(2));
        assert_eq!(shr_ceil(&BigInt::from(5), 1), BigInt::from(3));
        assert_eq!(div_ceil(&BigInt::from(-7), &BigInt::from(2)), BigInt::from(-3));
    }

    #[test]
    fn ln_matches_f64() {
        let c = Ctx::new(128);
        for n in [1i64, 2, 3, 10, 1000, 123_456_789, 1 << 40] {
            let r = c.ln(&c.small(n)).unwrap();
            let (lo, hi) = val(&c, &r);
            let t = (n as f64).ln();
            assert!(lo <= t + 1e-15 && t - 1e-15 <= hi, "ln {n}: [{lo}, {hi}] vs {t}");
            assert!(r.width() < BigInt::from(1u64 << 24));
        }
        let half = c.ratio(&BigInt::from(1), &BigInt::from(2));
        let (lo, _) = val(&c, &c.ln(&half).unwrap());
        assert!((lo + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn exp_matches_f64_and_inverts_ln() {
        let c = Ctx::new(160);
        for x in [-20i64, -1, 0, 1, 5, 30] {
            let r = c.exp(&c.small(x));
            let (lo, hi) = val(&c, &r);
            let t = (x as f64).exp();
            assert!(lo <= t * (1.0 + 1e-14) && t * (1.0 - 1e-14) <= hi, "exp {x}");
        }
        let n = BigInt::from(987_654_321u64);
        let back = c.exp(&c.ln(&c.int(&n)).unwrap());
        let target = &n << c.w;
        assert!(back.lo <= target && target <= back.hi);
        assert!(back.width() < (BigInt::one() << 100));
    }

    #[test]
    fn division_encloses() {
        let c = Ctx::new(64);
        let a = c.ratio(&BigInt::from(-1), &BigInt::from(3));
        let b = c.ratio(&BigInt::from(7), &BigInt::from(5));
        let q = c.div(&a, &b).unwrap();
        let (lo, hi) = val(&c, &q);
        let t = -5.0 / 21.0;
        assert!(lo <= t && t <= hi);
        assert!(c.div(&a, &Fx { lo: BigInt::from(-1), hi: BigInt::from(1) }).is_none());
    }
}
