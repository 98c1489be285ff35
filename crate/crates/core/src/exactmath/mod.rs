//! Exact rationals, combinatorial tables and certified real enclosures.

pub(crate) mod fixed;

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{arg, Error, Result};
use fixed::{Ctx, Fx};

/// Arbitrary precision rational number, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Render a rational as `p/q` (or `p` when integral).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `p/q`, an integer, or a finite decimal such as `1.5` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Argument(format!("bad rational {s:?}")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Argument(format!("bad rational {s:?}")))?;
        if q.is_zero() {
            return arg(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return arg(format!("bad decimal {s:?}"));
        }
        let n: BigInt = digits.parse().unwrap();
        let r = Rational::new(n, BigInt::from(10u32).pow(fp.len() as u32));
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| Error::Argument(format!("bad number {s:?}")))?;
    Ok(Rational::from_integer(n))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn floor_rat(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

const STIRLING_MAX: usize = 64;

fn stirling_table() -> &'static Vec<Vec<BigInt>> {
    static T: OnceLock<Vec<Vec<BigInt>>> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = vec![vec![BigInt::zero(); STIRLING_MAX + 1]; STIRLING_MAX + 1];
        t[0][0] = BigInt::one();
        for l in 1..=STIRLING_MAX {
            for i in 1..=l {
                t[l][i] = BigInt::from(i) * &t[l - 1][i] + &t[l - 1][i - 1];
            }
        }
        t
    })
}

/// Stirling number of the second kind `S(l, i)`, for `l <= 64`.
pub fn stirling2(l: usize, i: usize) -> Result<BigInt> {
    if l > STIRLING_MAX {
        return arg(format!("stirling2 supports l <= {STIRLING_MAX}, got {l}"));
    }
    if i > l {
        return Ok(BigInt::zero());
    }
    Ok(stirling_table()[l][i].clone())
}

/// Binomial coefficient, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Falling factorial `(a)_i = a (a-1) ... (a-i+1)`.
pub fn falling_factorial(a: &Rational, i: u64) -> Rational {
    let mut acc = Rational::one();
    for t in 0..i {
        acc *= a - rat_int(t);
    }
    acc
}

/// The number `mantissa * 2^exponent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub mantissa: BigInt,
    pub exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Dyadic {
        Dyadic { mantissa, exponent }
    }

    pub fn to_rational(&self) -> Rational {
        let m = Rational::from_integer(self.mantissa.clone());
        if self.exponent >= 0 {
            m * Rational::from_integer(BigInt::one() << self.exponent as u32)
        } else {
            m / Rational::from_integer(BigInt::one() << (-self.exponent) as u32)
        }
    }

    pub fn to_f64(&self) -> f64 {
        fixed::to_f64(&self.mantissa, 0) * 2f64.powi(self.exponent.clamp(-2000, 2000) as i32)
    }

    pub fn floor(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << self.exponent as u32
        } else {
            fixed::shr_floor(&self.mantissa, (-self.exponent) as u32)
        }
    }

    /// Mantissa re-expressed at exponent `-w`, rounded down or up.
    fn at_scale(&self, w: u32, up: bool) -> BigInt {
        let shift = self.exponent + w as i64;
        if shift >= 0 {
            &self.mantissa << shift as u32
        } else if up {
            fixed::shr_ceil(&self.mantissa, (-shift) as u32)
        } else {
            fixed::shr_floor(&self.mantissa, (-shift) as u32)
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u32;
        let b = &other.mantissa << (other.exponent - e) as u32;
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e}", self.to_f64())
    }
}

/// Closed interval `[lower, upper]` known to contain a real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedReal {
    pub lower: Dyadic,
    pub upper: Dyadic,
    pub precision_bits: u32,
}

impl Serialize for CertifiedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CertifiedReal", 3)?;
        st.serialize_field("lower", &self.lower.to_f64())?;
        st.serialize_field("upper", &self.upper.to_f64())?;
        st.serialize_field("precision_bits", &self.precision_bits)?;
        st.end()
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

impl CertifiedReal {
    pub(crate) fn from_fx(a: &Fx, w: u32, precision_bits: u32) -> CertifiedReal {
        CertifiedReal {
            lower: Dyadic::new(a.lo.clone(), -(w as i64)),
            upper: Dyadic::new(a.hi.clone(), -(w as i64)),
            precision_bits,
        }
    }

    /// Outward-rounded copy at scale `w`.
    pub(crate) fn to_fx(&self, w: u32) -> Fx {
        Fx { lo: self.lower.at_scale(w, false), hi: self.upper.at_scale(w, true) }
    }

    fn scale_for(&self, other: Option<&CertifiedReal>) -> u32 {
        let mut e = self.lower.exponent.min(self.upper.exponent);
        if let Some(o) = other {
            e = e.min(o.lower.exponent).min(o.upper.exponent);
        }
        (-e).max(0) as u32
    }

    pub fn exact_integer(n: &BigInt) -> CertifiedReal {
        let d = Dyadic::new(n.clone(), 0);
        CertifiedReal { lower: d.clone(), upper: d, precision_bits: u32::MAX }
    }

    /// Enclosure of a rational with width at most `2^-bits`.
    pub fn from_rational(r: &Rational, bits: u32) -> CertifiedReal {
        let c = Ctx::new(bits);
        CertifiedReal::from_fx(&c.ratio(r.numer(), r.denom()), bits, bits)
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lower.to_rational() <= *r && *r <= self.upper.to_rational()
    }

    pub fn lower_rational(&self) -> Rational {
        self.lower.to_rational()
    }

    pub fn upper_rational(&self) -> Rational {
        self.upper.to_rational()
    }

    pub fn width(&self) -> Rational {
        self.upper_rational() - self.lower_rational()
    }

    pub fn midpoint_f64(&self) -> f64 {
        0.5 * (self.lower.to_f64() + self.upper.to_f64())
    }

    /// `Some(m)` when every point of the enclosure has floor `m`.
    pub fn floor_if_determined(&self) -> Option<BigInt> {
        let a = self.lower.floor();
        let b = self.upper.floor();
        (a == b).then_some(a)
    }

    pub fn add(&self, o: &CertifiedReal) -> CertifiedReal {
        let w = self.scale_for(Some(o));
        let c = Ctx::new(w);
        let r = c.add(&self.to_fx(w), &o.to_fx(w));
        CertifiedReal::from_fx(&r, w, self.precision_bits.min(o.precision_bits))
    }

    pub fn sub(&self, o: &CertifiedReal) -> CertifiedReal {
        let w = self.scale_for(Some(o));
        let c = Ctx::new(w);
        let r = c.sub(&self.to_fx(w), &o.to_fx(w));
        CertifiedReal::from_fx(&r, w, self.precision_bits.min(o.precision_bits))
    }

    /// Exact translation by an integer.
    pub fn add_integer(&self, n: &BigInt) -> CertifiedReal {
        self.add(&CertifiedReal::exact_integer(n))
    }

    /// Product with a rational, rounded outward at scale `2^-(bits + 16)`.
    pub fn mul_rational(&self, r: &Rational, bits: u32) -> CertifiedReal {
        let w = self.scale_for(None).max(bits + 16);
        let c = Ctx::new(w);
        let v = c.mul_ratio(&self.to_fx(w), r.numer(), r.denom());
        CertifiedReal::from_fx(&v, w, self.precision_bits)
    }

    pub fn mul(&self, o: &CertifiedReal) -> CertifiedReal {
        let w = self.scale_for(Some(o));
        let c = Ctx::new(w);
        let v = c.mul(&self.to_fx(w), &o.to_fx(w));
        CertifiedReal::from_fx(&v, w, self.precision_bits.min(o.precision_bits))
    }

    /// Intersection of two enclosures of the same number; `None` if disjoint.
    /// Smallest enclosure containing both.
    pub fn hull(&self, o: &CertifiedReal) -> CertifiedReal {
        CertifiedReal {
            lower: self.lower.clone().min(o.lower.clone()),
            upper: self.upper.clone().max(o.upper.clone()),
            precision_bits: self.precision_bits.min(o.precision_bits),
        }
    }

    pub fn intersect(&self, o: &CertifiedReal) -> Option<CertifiedReal> {
        let lower = self.lower.clone().max(o.lower.clone());
        let upper = self.upper.clone().min(o.upper.clone());
        (lower <= upper).then(|| CertifiedReal {
            lower,
            upper,
            precision_bits: self.precision_bits.max(o.precision_bits),
        })
    }
}

/// Working precisions tried in turn by the certified evaluators: 128, 256, ... up to `max_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionSchedule {
    pub start_bits: u32,
    pub max_bits: u32,
    /// Optional cap on the number of refinements after the first attempt.
    pub budget: Option<u32>,
}

impl Default for PrecisionSchedule {
    fn default() -> Self {
        PrecisionSchedule { start_bits: 128, max_bits: 16384, budget: None }
    }
}

impl PrecisionSchedule {
    pub fn with_budget(budget: u32) -> Self {
        PrecisionSchedule { budget: Some(budget), ..Default::default() }
    }

    pub fn steps(&self) -> Vec<u32> {
        let mut v = Vec::new();
        let mut b = self.start_bits.max(1);
        while b <= self.max_bits {
            v.push(b);
            if let Some(n) = self.budget {
                if v.len() as u32 > n {
                    break;
                }
            }
            b = b.saturating_mul(2);
        }
        v
    }
}

/// Certified `floor(x)`.
///
/// `refine(bits)` must return an enclosure of `x` whose width shrinks as `bits`
/// grows. Successive enclosures are intersected, so they nest. If `exact` is
/// given it is the exact integer value of `x` and is returned directly.
pub fn certify_floor<F>(mut refine: F, schedule: &PrecisionSchedule, exact: Option<&BigInt>) -> Result<BigInt>
where
    F: FnMut(u32) -> Result<CertifiedReal>,
{
    if let Some(m) = exact {
        return Ok(m.clone());
    }
    let mut current: Option<CertifiedReal> = None;
    let mut last_bits = 0;
    for bits in schedule.steps() {
        let e = refine(bits)?;
        let e = match &current {
            None => e,
            Some(prev) => prev
                .intersect(&e)
                .ok_or_else(|| Error::Invariant(format!("enclosures {prev} and {e} are disjoint")))?,
        };
        if let Some(m) = e.floor_if_determined() {
            return Ok(m);
        }
        current = Some(e);
        last_bits = bits;
    }
    Err(Error::UnresolvedFloor {
        enclosure: current.map(|c| c.to_string()).unwrap_or_default(),
        bits: last_bits,
    })
}

/// Integer `q`-th root when `n` is a perfect `q`-th power.
pub fn exact_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(q);
    (num_traits::pow(r.clone(), q as usize) == *n).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_small_values() {
        assert_eq!(stirling2(4, 2).unwrap(), BigInt::from(7));
        assert_eq!(stirling2(5, 3).unwrap(), BigInt::from(25));
        assert_eq!(stirling2(0, 0).unwrap(), BigInt::one());
        assert_eq!(stirling2(3, 0).unwrap(), BigInt::zero());
        assert!(stirling2(65, 1).is_err());
    }

    #[test]
    fn binomial_and_falling() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(2, 5), BigInt::zero());
        assert_eq!(falling_factorial(&rat(3, 2), 2), rat(3, 4));
        assert_eq!(factorial(5), BigInt::from(120));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(fmt_rational(&rat(6, 4)), "3/2");
    }

    #[test]
    fn floor_of_rational_enclosures() {
        let sched = PrecisionSchedule::default();
        let x = rat(-7, 3);
        let m = certify_floor(|b| Ok(CertifiedReal::from_rational(&x, b)), &sched, None).unwrap();
        assert_eq!(m, BigInt::from(-3));
        // an integer enclosed by non-degenerate intervals never resolves
        let y = rat(5, 1);
        let sched = PrecisionSchedule::with_budget(2);
        let bad = |b: u32| {
            let c = CertifiedReal::from_rational(&y, b);
            Ok(CertifiedReal {
                lower: Dyadic::new(c.lower.mantissa - 1, c.lower.exponent),
                ..c
            })
        };
        assert!(matches!(certify_floor(bad, &sched, None), Err(Error::UnresolvedFloor { .. })));
        assert_eq!(certify_floor(bad, &sched, Some(&BigInt::from(5))).unwrap(), BigInt::from(5));
    }

    #[test]
    fn dyadic_order_and_roots() {
        assert!(Dyadic::new(BigInt::from(3), -1) < Dyadic::new(BigInt::from(2), 0));
        assert_eq!(Dyadic::new(BigInt::from(-3), -1).floor(), BigInt::from(-2));
        assert_eq!(exact_root(&BigInt::from(1_000_000), 2), Some(BigInt::from(1000)));
        assert_eq!(exact_root(&BigInt::from(999_999), 2), None);
    }
}
