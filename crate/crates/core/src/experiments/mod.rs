//! Runnable experiments: fixed-r and short-interval densities, variable-r counts, gap
//! lengths, the `x log x` band and the density sweep over `alpha`.
//!
//! Work is split into fixed chunks and reduced in order, so results do not depend on the
//! number of threads.

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::exactmath::fixed::Ctx;
use crate::exactmath::{parse_rational, rat, rat_int, rational_to_f64, CertifiedReal, Rational};
use crate::functions::{FunctionKind, FunctionSpec};
use crate::polytope::{build_c, volume_exact, Variant};
use crate::progressions::{brute_force_test, criterion_classify, ProgressionQuery, Verdict};

mod gaps;
mod variable_r;

pub use gaps::{gap_lengths, GapReport};
pub use variable_r::{a_tilde, b_tilde, c_kd, count_variable_r, prune_cutoff, prune_start, VariableRReport};

pub(crate) const CHUNK: u64 = 1 << 14;

mod rat_str {
    use crate::exactmath::{fmt_rational, Rational};
    use serde::Serializer;

    pub fn one<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn many<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(fmt_rational))
    }

    pub fn opt<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&fmt_rational(r)),
            None => s.serialize_none(),
        }
    }
}
pub(crate) use rat_str::{many as ser_rats, one as ser_rat, opt as ser_opt_rat};

/// Largest range of arguments held in memory at once (2 GiB of floors).
pub const MAX_RANGE: u64 = 1 << 27;

/// `n + (k-1) r`, the last argument a progression starting at `n` reads.
pub(crate) fn last_arg(n: u64, k: u32, r: u64) -> Result<u64> {
    (k as u64 - 1).checked_mul(r).and_then(|s| s.checked_add(n)).ok_or_else(|| Error::Overflow(format!("{n} + ({k}-1)*{r}")))
}

fn check_range(start: u64, end: u64) -> Result<()> {
    if end - start >= MAX_RANGE {
        return Err(Error::SizeCap(format!("range [{start}, {end}] exceeds {MAX_RANGE} arguments")));
    }
    Ok(())
}

/// Exact floors `floor(f(x))` for `x` in `[start, end]`.
#[derive(Clone, Debug)]
pub(crate) struct FloorTable {
    start: u64,
    vals: Vec<i128>,
}

impl FloorTable {
    pub(crate) fn build(f: &FunctionSpec, start: u64, end: u64) -> Result<FloorTable> {
        if end < start {
            return Ok(FloorTable { start, vals: vec![] });
        }
        check_range(start, end)?;
        let chunks: Vec<(u64, u64)> =
            (start..=end).step_by(CHUNK as usize).map(|a| (a, a.saturating_add(CHUNK - 1).min(end))).collect();
        let parts: Vec<Vec<i128>> =
            chunks.par_iter().map(|&(a, b)| (a..=b).map(|x| f.floor_f(x)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        Ok(FloorTable { start, vals: parts.concat() })
    }

    /// Whether `(floor(f(n + rj)))_{j<k}` lies in `P_{k,d}`; all arguments must be in the table.
    pub(crate) fn hit(&self, n: u64, r: u64, k: u32, d: u32) -> bool {
        let mut buf = [0i128; 64];
        let k = k as usize;
        let base = (n - self.start) as usize;
        for (j, b) in buf[..k].iter_mut().enumerate() {
            *b = self.vals[base + j * r as usize];
        }
        if buf[..k].windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut len = k;
        for _ in 0..d {
            for j in 0..len - 1 {
                buf[j] = buf[j + 1] - buf[j];
            }
            len -= 1;
        }
        buf[1..len].iter().all(|&v| v == buf[0])
    }
}

/// Whether each `n` in `[lo, hi)` starts a progression in `P_{k,d}`.
///
/// With `accelerate`, the polytope criterion decides first and brute force only runs on
/// uncertain verdicts or where the criterion does not apply; the result is the same.
pub(crate) fn hits(q: &ProgressionQuery, lo: u64, hi: u64, accelerate: bool) -> Result<Vec<bool>> {
    if lo < q.f.n0 {
        return Err(Error::BelowAsymptoticRegime { n: lo, reason: format!("range must start at n0 = {} or later", q.f.n0) });
    }
    if hi <= lo {
        return Ok(vec![]);
    }
    check_range(lo, hi - 1)?;
    if accelerate {
        let chunks: Vec<(u64, u64)> = (lo..hi).step_by(CHUNK as usize).map(|a| (a, a.saturating_add(CHUNK).min(hi))).collect();
        let parts: Vec<Vec<bool>> = chunks
            .par_iter()
            .map(|&(a, b)| {
                (a..b)
                    .map(|n| match criterion_classify(q, n) {
                        Ok(o) if o.verdict == Verdict::CertainlyIn => Ok(true),
                        Ok(o) if o.verdict == Verdict::CertainlyOut => Ok(false),
                        Ok(_) | Err(Error::BelowAsymptoticRegime { .. }) => brute_force_test(q, n),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        return Ok(parts.concat());
    }
    let table = FloorTable::build(&q.f, lo, last_arg(hi - 1, q.k, q.r)?)?;
    Ok((lo..hi).map(|n| table.hit(n, q.r, q.k, q.d)).collect())
}

/// `mu(C_{k,d+1})`, the limiting density.
pub fn limit_density(k: u32, d: u32) -> Result<Rational> {
    Ok(volume_exact(&build_c(k, d, Variant::C, None)?)?.volume)
}

/// Shape of the rate of convergence of the fixed-r density for `x^alpha`, `alpha` in `(1,2)`.
pub fn rate_f(alpha: &Rational, x: f64) -> Option<f64> {
    let a = rational_to_f64(alpha);
    if *alpha <= Rational::one() || *alpha >= rat(2, 1) {
        return None;
    }
    Some(if *alpha < rat(5, 4) {
        x.powf((1.0 - a) / 2.0)
    } else if *alpha < rat(11, 6) {
        x.powf((a - 3.0) / 14.0) * x.ln().sqrt()
    } else {
        x.powf((a - 2.0) / 6.0) * x.ln().sqrt()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    pub f: FunctionSpec,
    pub k: u32,
    pub d: u32,
    pub r: u64,
    /// Counting starts here (the domain start of `f`).
    pub n0: u64,
    pub grid: Vec<u64>,
    /// `#{n in [n0, N] : (floor(f(n + rj)))_j in P_{k,d}}` per grid point.
    pub counts: Vec<u64>,
    /// `count / (N - n0 + 1)`
    #[serde(serialize_with = "ser_rats")]
    pub densities: Vec<Rational>,
    /// `mu(C_{k,d+1})`; only the limit when `f` is equidistributed.
    #[serde(serialize_with = "ser_rat")]
    pub target: Rational,
    pub equidistributed: bool,
    /// Rate shape `F(N)` (powers with `alpha` in `(1,2)` only).
    pub bound_f: Option<Vec<f64>>,
    pub accelerated: bool,
}

fn check_grid(grid: &[u64], min: u64) -> Result<()> {
    if grid.is_empty() {
        return arg("grid must be nonempty");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return arg("grid must be strictly increasing");
    }
    if grid[0] < min {
        return arg(format!("grid values must be at least {min}"));
    }
    Ok(())
}

pub fn density_fixed_r(q: &ProgressionQuery, grid: &[u64], accelerate: bool) -> Result<DensityReport> {
    check_grid(grid, q.f.n0)?;
    let n0 = q.f.n0;
    let nmax = *grid.last().unwrap();
    let h = hits(q, n0, nmax + 1, accelerate)?;
    let mut counts = Vec::with_capacity(grid.len());
    let (mut c, mut pos) = (0u64, n0);
    for &n in grid {
        c += h[(pos - n0) as usize..=(n - n0) as usize].iter().filter(|&&b| b).count() as u64;
        pos = n + 1;
        counts.push(c);
    }
    let densities = grid.iter().zip(&counts).map(|(&n, &c)| rat_int(c) / rat_int(n - n0 + 1)).collect();
    let bound_f = q.f.alpha().filter(|_| q.d == 1).and_then(|a| grid.iter().map(|&n| rate_f(a, n as f64)).collect());
    Ok(DensityReport {
        f: q.f.clone(),
        k: q.k,
        d: q.d,
        r: q.r,
        n0,
        grid: grid.to_vec(),
        counts,
        densities,
        target: limit_density(q.k, q.d)?,
        equidistributed: q.f.equidistributed(),
        bound_f,
        accelerated: accelerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortBound {
    pub case: u8,
    pub value: f64,
    pub cases: Vec<(u8, f64)>,
}

/// Shape of the short-interval error bound for `x^alpha`, minimised over the applicable cases:
/// case 1 `N^((a-2)/6) (log N)^(1/2) + N^((2-a)/2) / L^(1/2)` for `a` in `(1,2)`;
/// case 2 `N^((a-3)/14) (log N)^(1/2) + N^((2-a)/2) / L^(1/2)` for `a` in `(1,3/2)`;
/// case 3 `(N^((a-3)/14) + N^((3-a)/6) / L^(1/2)) (log N)^(1/2)` for `a` in `[3/2,11/6)`.
pub fn short_interval_bound(alpha: &Rational, n: u64, l: u64) -> Result<ShortBound> {
    if *alpha <= Rational::one() || *alpha >= rat(2, 1) {
        return arg("alpha must lie in (1, 2)");
    }
    if l == 0 || n < 2 {
        return arg("need L >= 1 and N >= 2");
    }
    let a = rational_to_f64(alpha);
    let (nf, lf) = (n as f64, l as f64);
    let sl = nf.ln().sqrt();
    let mut cases = vec![(1, nf.powf((a - 2.0) / 6.0) * sl + nf.powf((2.0 - a) / 2.0) / lf.sqrt())];
    if *alpha < rat(3, 2) {
        cases.push((2, nf.powf((a - 3.0) / 14.0) * sl + nf.powf((2.0 - a) / 2.0) / lf.sqrt()));
    }
    if *alpha >= rat(3, 2) && *alpha < rat(11, 6) {
        cases.push((3, (nf.powf((a - 3.0) / 14.0) + nf.powf((3.0 - a) / 6.0) / lf.sqrt()) * sl));
    }
    let &(case, value) = cases.iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
    Ok(ShortBound { case, value, cases })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortIntervalReport {
    pub f: FunctionSpec,
    pub k: u32,
    pub r: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    /// Progression starts in `[N, N + L)`.
    pub count: u64,
    #[serde(serialize_with = "ser_rat")]
    pub density: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub target: Rational,
    pub bound: Option<ShortBound>,
}

pub fn density_short_interval(q: &ProgressionQuery, n: u64, l: u64, accelerate: bool) -> Result<ShortIntervalReport> {
    if l == 0 {
        return arg("L must be at least 1");
    }
    let end = n.checked_add(l).ok_or_else(|| Error::Overflow("N + L".into()))?;
    let count = hits(q, n, end, accelerate)?.iter().filter(|&&b| b).count() as u64;
    let bound = match q.f.alpha() {
        Some(a) if q.d == 1 && n >= 2 => Some(short_interval_bound(a, n, l)?),
        _ => None,
    };
    Ok(ShortIntervalReport {
        f: q.f.clone(),
        k: q.k,
        r: q.r,
        n,
        l,
        count,
        density: rat_int(count) / rat_int(l),
        target: limit_density(q.k, q.d)?,
        bound,
    })
}

/// Parse an `alpha` grid: either `A+i/B,i=LO..HI` or a comma-separated list of rationals.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<Rational>> {
    let s = s.trim();
    let grid = if let Some((expr, range)) = s.split_once(",i=") {
        let (base, step) = expr
            .split_once("+i/")
            .ok_or_else(|| Error::Argument(format!("alpha grid '{s}': expected A+i/B,i=LO..HI")))?;
        let base = parse_rational(base)?;
        let step = parse_rational(step)?;
        if step.is_zero() {
            return arg("alpha grid step denominator must be nonzero");
        }
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| Error::Argument(format!("alpha grid '{s}': expected i=LO..HI")))?;
        let lo: i64 = lo.trim().parse().map_err(|_| Error::Argument(format!("alpha grid lower index '{lo}'")))?;
        let hi: i64 = hi.trim().parse().map_err(|_| Error::Argument(format!("alpha grid upper index '{hi}'")))?;
        if hi < lo || hi - lo > 1_000_000 {
            return arg("alpha grid index range must be nonempty and at most 10^6 long");
        }
        (lo..=hi).map(|i| &base + rat_int(i) / &step).collect()
    } else {
        s.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?
    };
    let (one, two) = (Rational::one(), rat(2, 1));
    if grid.iter().any(|a| *a <= one || *a >= two) {
        return arg("alpha grid values must lie strictly between 1 and 2");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return arg("alpha grid must be strictly increasing");
    }
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub k: u32,
    pub r: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(serialize_with = "ser_rats")]
    pub alpha_grid: Vec<Rational>,
    /// `D_{N,k,r}(alpha) = #{n in [1,N] : ...} / N`
    #[serde(serialize_with = "ser_rats")]
    pub densities: Vec<Rational>,
}

impl SweepReport {
    pub fn mean(&self) -> f64 {
        self.densities.iter().map(rational_to_f64).sum::<f64>() / self.densities.len() as f64
    }
}

pub fn alpha_sweep(k: u32, r: u64, n: u64, alpha_grid: &[Rational]) -> Result<SweepReport> {
    if n == 0 {
        return arg("N must be at least 1");
    }
    if alpha_grid.is_empty() {
        return arg("alpha grid must be nonempty");
    }
    let densities = alpha_grid
        .par_iter()
        .map(|a| {
            let q = ProgressionQuery::new(FunctionSpec::power(a.clone())?, k, r)?;
            let table = FloorTable::build(&q.f, 1, last_arg(n, k, r)?)?;
            let c = (1..=n).filter(|&m| table.hit(m, r, k, q.d)).count();
            Ok(rat_int(c) / rat_int(n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { k, r, n, alpha_grid: alpha_grid.to_vec(), densities })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    /// Enclosure of `1 / ((e^(1/r) - 1) r (k-1))`.
    pub lower: CertifiedReal,
    /// Enclosure of `e^(1/r) / ((e^(1/r) - 1) r (k-1))`.
    pub upper: CertifiedReal,
}

/// Limit band of the density for `x log x`, with `e^(1/r)` enclosed.
pub fn xlogx_band_limits(k: u32, r: u64) -> Result<Band> {
    if k < 3 || r == 0 {
        return arg("need k >= 3 and r >= 1");
    }
    let w = 128;
    let ctx = Ctx::new(w);
    let e = CertifiedReal::from_fx(&ctx.exp(&ctx.ratio(&1.into(), &r.into())), w, w);
    let (elo, ehi) = (e.lower_rational(), e.upper_rational());
    let c = rat_int(r) * rat_int(k - 1);
    let one = Rational::one();
    let lower = (one.clone() / ((&ehi - &one) * &c), one.clone() / ((&elo - &one) * &c));
    let upper = ((&one + &one / (&ehi - &one)) / &c, (&one + &one / (&elo - &one)) / &c);
    let enclose = |(a, b): (Rational, Rational)| CertifiedReal::from_rational(&a, w).hull(&CertifiedReal::from_rational(&b, w));
    Ok(Band { lower: enclose(lower), upper: enclose(upper) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XLogXBandReport {
    pub k: u32,
    pub r: u64,
    pub band: Band,
    pub density: DensityReport,
    /// Whether each density lies certainly inside the band.
    pub inside: Vec<bool>,
}

pub fn xlogx_band(k: u32, r: u64, grid: &[u64], accelerate: bool) -> Result<XLogXBandReport> {
    let band = xlogx_band_limits(k, r)?;
    let q = ProgressionQuery::new(FunctionSpec::new(FunctionKind::XLogX)?, k, r)?;
    let density = density_fixed_r(&q, grid, accelerate)?;
    let inside =
        density.densities.iter().map(|x| *x >= band.lower.upper_rational() && *x <= band.upper.lower_rational()).collect();
    Ok(XLogXBandReport { k, r, band, density, inside })
}

pub(crate) fn to_u64(x: f64) -> u64 {
    x.to_u64().unwrap_or(u64::MAX)
}
