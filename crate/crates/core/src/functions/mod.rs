//! The catalog of admissible functions `f` and certified evaluation of their derivatives.

mod jet;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::exactmath::fixed::{Ctx, Fx};
use crate::exactmath::{
    certify_floor, exact_root, falling_factorial, fmt_rational, parse_rational, rat_int, rational_to_f64,
    CertifiedReal, PrecisionSchedule, Rational,
};

/// Functions supported by the experiments.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    /// `x^alpha`
    Power(Rational),
    /// `x (log x)^beta`
    XLogPow(Rational),
    /// `x^2 / (log x)^gamma`
    X2OverLogPow(Rational),
    /// `x^2 / (log log x)^gamma`
    X2OverLogLogPow(Rational),
    /// `x log x`, whose derivative is not equidistributed modulo one
    XLogX,
}

/// A catalog function with its target degree `d` and the start `n0` of its safe domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub n0: u64,
    pub d: u32,
}

/// Largest argument on which the sign conditions of the log-bearing kinds are certified.
pub const CERTIFIED_RANGE_END: u64 = 1 << 40;

impl FunctionSpec {
    /// `x^alpha` with `d = floor(alpha)`; `alpha` must exceed 1 and not be an integer.
    pub fn power(alpha: Rational) -> Result<FunctionSpec> {
        if alpha <= rat_int(1) || alpha.is_integer() {
            return arg(format!("power exponent must be a non-integer > 1, got {}", fmt_rational(&alpha)));
        }
        let d = alpha.floor().to_integer().to_u32().filter(|&d| d <= 32);
        let d = d.ok_or_else(|| Error::Argument("power exponent too large".into()))?;
        Ok(FunctionSpec { kind: FunctionKind::Power(alpha), n0: 1, d })
    }

    pub fn new(kind: FunctionKind) -> Result<FunctionSpec> {
        match &kind {
            FunctionKind::Power(a) => FunctionSpec::power(a.clone()),
            FunctionKind::XLogPow(b) if *b <= rat_int(1) => arg("xlog exponent must exceed 1"),
            FunctionKind::X2OverLogPow(g) | FunctionKind::X2OverLogLogPow(g) if !g.is_positive() => {
                arg("x2log/x2loglog exponent must be positive")
            }
            _ => {
                let mut f = FunctionSpec { kind, n0: 1, d: 1 };
                let floor = match f.kind {
                    FunctionKind::XLogPow(_) | FunctionKind::XLogX => 16,
                    _ => 3,
                };
                f.n0 = floor.max(f.scan_safe_start(floor)?);
                Ok(f)
            }
        }
    }

    /// Parse `pow:3/2`, `xlog:2`, `x2log:1`, `x2loglog:1` or `xlogx`.
    pub fn parse(s: &str) -> Result<FunctionSpec> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(parse_rational(p)?)),
            None => (s, None),
        };
        let need = |p: Option<Rational>| p.ok_or_else(|| Error::Argument(format!("{name} needs a parameter")));
        let kind = match name {
            "pow" => FunctionKind::Power(need(param)?),
            "xlog" => FunctionKind::XLogPow(need(param)?),
            "x2log" => FunctionKind::X2OverLogPow(need(param)?),
            "x2loglog" => FunctionKind::X2OverLogLogPow(need(param)?),
            "xlogx" if param.is_none() => FunctionKind::XLogX,
            _ => return arg(format!("unknown function {s:?}")),
        };
        FunctionSpec::new(kind)
    }

    pub fn alpha(&self) -> Option<&Rational> {
        match &self.kind {
            FunctionKind::Power(a) => Some(a),
            _ => None,
        }
    }

    /// Whether `(h0 f(n) + h1 r f'(n))` is known to be equidistributed; false only for `x log x`.
    pub fn equidistributed(&self) -> bool {
        !matches!(self.kind, FunctionKind::XLogX)
    }

    /// Evaluate `f^(order)(x)` with width at most about `2^-bits`.
    pub fn eval(&self, order: u32, x: u64, bits: u32) -> Result<CertifiedReal> {
        if order > self.d + 1 {
            return arg(format!("order {order} exceeds d + 1 = {}", self.d + 1));
        }
        Ok(self.derivatives(x, order, bits)?.swap_remove(order as usize))
    }

    /// Enclosures of `f(x), f'(x), ..., f^(max_order)(x)`.
    pub fn derivatives(&self, x: u64, max_order: u32, bits: u32) -> Result<Vec<CertifiedReal>> {
        if x == 0 || x < self.n0.min(2) {
            return arg(format!("x = {x} is outside the domain"));
        }
        let m = max_order as usize;
        match &self.kind {
            FunctionKind::Power(a) => {
                let xb = BigInt::from(x);
                let mag = (rational_to_f64(a) * (x as f64).log2()).ceil().max(0.0) as u32;
                let w = bits + 48 + mag;
                let c = Ctx::new(w);
                let p = match self.exact_integer_check(x) {
                    Some(v) => c.int(&v),
                    None => c.pow_ratio(&c.int(&xb), a.numer(), a.denom()).expect("x > 0"),
                };
                let mut out = Vec::with_capacity(m + 1);
                let mut xi = BigInt::one();
                for i in 0..=m {
                    let ff = falling_factorial(a, i as u64);
                    let v = c.mul_ratio(&p, ff.numer(), &(ff.denom() * &xi));
                    out.push(CertifiedReal::from_fx(&v, w, bits));
                    xi *= &xb;
                }
                Ok(out)
            }
            _ => {
                let w = bits + 64 + 2 * 64u32.saturating_sub(x.leading_zeros());
                let c = Ctx::new(w);
                let jet = self.jet(&c, c.small(x as i64), m)?;
                let mut fact = BigInt::one();
                Ok(jet
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if i > 0 {
                            fact *= BigInt::from(i);
                        }
                        CertifiedReal::from_fx(&c.mul_int(v, &fact), w, bits)
                    })
                    .collect())
            }
        }
    }

    fn jet(&self, c: &Ctx, x: Fx, m: usize) -> Result<jet::Jet> {
        let dom = || Error::Argument("argument outside the domain of f".into());
        let xj = jet::variable(c, x, m);
        let l = jet::ln(c, &xj).ok_or_else(dom)?;
        let x2 = || jet::mul(c, &xj, &xj);
        Ok(match &self.kind {
            FunctionKind::XLogX => jet::mul(c, &xj, &l),
            FunctionKind::XLogPow(b) => jet::mul(c, &xj, &jet::pow(c, &l, b.numer(), b.denom()).ok_or_else(dom)?),
            FunctionKind::X2OverLogPow(g) => {
                jet::mul(c, &x2(), &jet::pow(c, &l, &-g.numer(), g.denom()).ok_or_else(dom)?)
            }
            FunctionKind::X2OverLogLogPow(g) => {
                let ll = jet::ln(c, &l).ok_or_else(dom)?;
                jet::mul(c, &x2(), &jet::pow(c, &ll, &-g.numer(), g.denom()).ok_or_else(dom)?)
            }
            FunctionKind::Power(a) => jet::pow(c, &xj, a.numer(), a.denom()).ok_or_else(dom)?,
        })
    }

    /// First integer from which `f' >= 1`, `f'' > 0` and `f'''< 0` hold on every
    /// block of a covering of `[start, CERTIFIED_RANGE_END]`, using interval jets.
    fn scan_safe_start(&self, start: u64) -> Result<u64> {
        let mut a = start;
        let mut safe = start;
        while a < CERTIFIED_RANGE_END {
            let b = a + (a / 32).max(1);
            // third-order coefficients scale like b^-2 and pass through products with b^2
            let c = Ctx::new(64 + 5 * (64 - b.leading_zeros()));
            let ok = self.signs_hold(&c, c.small(a as i64).lo, c.small(b as i64).hi, 8);
            if !ok {
                safe = b + 1;
            }
            a = b;
        }
        if safe > CERTIFIED_RANGE_END / 2 {
            return Err(Error::BelowAsymptoticRegime {
                n: safe,
                reason: "no safe domain start found in the certified range".into(),
            });
        }
        Ok(safe)
    }

    /// Sign conditions on the real interval `[lo, hi] * 2^-w`, bisecting up to `depth` times.
    fn signs_hold(&self, c: &Ctx, lo: BigInt, hi: BigInt, depth: u32) -> bool {
        let ok = match self.jet(c, Fx { lo: lo.clone(), hi: hi.clone() }, 3) {
            Ok(j) => j[1].lo >= c.one() && j[2].lo.is_positive() && j[3].hi.is_negative(),
            Err(_) => false,
        };
        if ok || depth == 0 {
            return ok;
        }
        let mid: BigInt = (&lo + &hi) >> 1;
        self.signs_hold(c, lo, mid.clone(), depth - 1) && self.signs_hold(c, mid, hi, depth - 1)
    }

    /// `f(x)` as an exact integer when it is one.
    ///
    /// For `x^(p/q)` in lowest terms this happens exactly when `x` is a perfect
    /// `q`-th power. For the log-bearing kinds the value at an integer `x >= 2`
    /// is taken to be irrational.
    pub fn exact_integer_check(&self, x: u64) -> Option<BigInt> {
        match &self.kind {
            FunctionKind::Power(a) => {
                let q = a.denom().to_u32()?;
                let p = a.numer().to_usize()?;
                exact_root(&BigInt::from(x), q).map(|t| num_traits::pow(t, p))
            }
            FunctionKind::XLogPow(_) | FunctionKind::XLogX if x == 1 => Some(BigInt::zero()),
            _ => None,
        }
    }

    /// `f(x)` in double precision, from at most four library calls.
    fn approx(&self, x: u64) -> f64 {
        let x = x as f64;
        let lnx = x.ln();
        let real = |r: &Rational| rational_to_f64(r);
        match &self.kind {
            FunctionKind::Power(a) => x.powf(real(a)),
            FunctionKind::XLogPow(b) => x * lnx.powf(real(b)),
            FunctionKind::X2OverLogPow(g) => x * x / lnx.powf(real(g)),
            FunctionKind::X2OverLogLogPow(g) => x * x / lnx.ln().powf(real(g)),
            FunctionKind::XLogX => x * lnx,
        }
    }

    /// `floor(f(x))` from [`Self::approx`] when the value sits well clear of an integer.
    ///
    /// Each library call is accurate to a few ulps and values are kept below 2^50 (so every
    /// exponent passed to `exp` is below 35), which leaves the relative error several hundred
    /// times under 2^-40. Anything closer to
    /// an integer than that is left to the certified path.
    fn floor_fast(&self, x: u64) -> Option<i128> {
        let y = self.approx(x);
        if !(y.is_finite() && y > 0.0 && y < (1u64 << 50) as f64) {
            return None;
        }
        let m = y.floor();
        let gap = (y - m).min(m + 1.0 - y);
        (gap > y * 2f64.powi(-40) + 1e-300).then_some(m as i128)
    }

    /// Exact `floor(f(x))`.
    pub fn floor_f(&self, x: u64) -> Result<i128> {
        if let Some(v) = self.floor_fast(x) {
            return Ok(v);
        }
        if let Some(v) = self.exact_integer_check(x) {
            return to_i128(&v);
        }
        if let Some(v) = self.power_floor_u128(x) {
            return Ok(v as i128);
        }
        let m = certify_floor(|bits| self.eval(0, x, bits), &PrecisionSchedule::default(), None)?;
        to_i128(&m)
    }

    /// `floor(x^(p/q))` checked with integer arithmetic, when everything fits in `u128`.
    fn power_floor_u128(&self, x: u64) -> Option<u128> {
        let a = self.alpha()?;
        let p = a.numer().to_u32()?;
        let q = a.denom().to_u32()?;
        let xp = (x as u128).checked_pow(p)?;
        let guess = (x as f64).powf(rational_to_f64(a)).floor();
        if !(guess < 1e37) {
            return None;
        }
        let g = guess as u128;
        for m in [g, g.saturating_sub(1), g + 1] {
            let lo = m.checked_pow(q)?;
            let hi = (m + 1).checked_pow(q)?;
            if lo <= xp && xp < hi {
                return Some(m);
            }
        }
        None
    }

    /// `r f'(x)` as an exact rational when it is one (only for powers at perfect `q`-th powers).
    pub fn exact_scaled_derivative(&self, x: u64, r: u64) -> Option<Rational> {
        let a = self.alpha()?;
        let v = self.exact_integer_check(x)?;
        Some(a * Rational::from_integer(v) * rat_int(r) / rat_int(x))
    }

    pub fn regularity(&self) -> RegularityData {
        RegularityData { f: self.clone(), dprime_positive_from: self.n0 }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

fn to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128().ok_or_else(|| Error::Overflow(format!("floor value {v} exceeds i128")))
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FunctionKind::Power(a) => write!(f, "pow:{}", fmt_rational(a)),
            FunctionKind::XLogPow(b) => write!(f, "xlog:{}", fmt_rational(b)),
            FunctionKind::X2OverLogPow(g) => write!(f, "x2log:{}", fmt_rational(g)),
            FunctionKind::X2OverLogLogPow(g) => write!(f, "x2loglog:{}", fmt_rational(g)),
            FunctionKind::XLogX => write!(f, "xlogx"),
        }
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Regularity constants: `f^(d+1)(delta x) <= c(delta) f^(d+1)(x)`.
#[derive(Clone, Debug)]
pub struct RegularityData {
    f: FunctionSpec,
    /// From here on `f^(d+1)` is positive and decreasing.
    pub dprime_positive_from: u64,
}

/// Value of the constant `c(delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct CDelta {
    pub value: CertifiedReal,
    /// `false` when the value is a sampled estimate rather than a certified bound.
    pub certified: bool,
}

impl RegularityData {
    /// `c(delta)` for `0 < delta < 1`. Exactly `delta^(alpha-d-1)` for powers; for the
    /// log-bearing kinds a sampled supremum over `[n0, 10^12]` inflated by 5%.
    pub fn c_of_delta(&self, delta: &Rational) -> Result<CDelta> {
        if !delta.is_positive() || *delta >= rat_int(1) {
            return arg("delta must lie in (0, 1)");
        }
        let d = self.f.d as i64;
        if let Some(a) = self.f.alpha() {
            let e = a - rat_int(d + 1);
            let c = Ctx::new(128);
            let v = c
                .pow_ratio(&c.ratio(delta.numer(), delta.denom()), e.numer(), e.denom())
                .expect("delta > 0");
            return Ok(CDelta { value: CertifiedReal::from_fx(&v, 128, 96), certified: true });
        }
        let dl = rational_to_f64(delta);
        let mut sup = 0f64;
        let mut x = (self.f.n0 as f64 / dl).ceil().max(self.f.n0 as f64);
        while x < 1e12 {
            let hi = self.f.eval(self.f.d + 1, (x * dl).floor().max(self.f.n0 as f64) as u64, 64)?;
            let lo = self.f.eval(self.f.d + 1, x as u64, 64)?;
            sup = sup.max(hi.upper.to_f64() / lo.lower.to_f64());
            x *= 1.5;
        }
        let v = Rational::from_float(sup * 1.05).unwrap_or_else(|| rat_int(1));
        Ok(CDelta { value: CertifiedReal::from_rational(&v, 64), certified: false })
    }
}
