//! Extreme discrepancy of the orbit `(f(n), r f'(n)) mod 1` and the bounds that control it.

use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::exactmath::{falling_factorial, floor_rat, rat_int, rational_to_f64, CertifiedReal, PrecisionSchedule, Rational};
use crate::functions::FunctionSpec;

/// Largest point set accepted by [`Mode::Exact`].
pub const EXACT_SIZE_CAP: usize = 2048;

/// Constant in `D <= C_ETK (1/H + sum_h |S(h)| / (L u(h)))` for two dimensions.
///
/// Koksma-Szusz (Kuipers-Niederreiter, Uniform Distribution of Sequences, Ch. 2, Thm 2.5)
/// gives `D <= (3/2)^2 (2/(H+1) + sum ...)`, and `(9/4)(2/(H+1)) <= (9/2)(1/H)`.
pub const C_ETK: f64 = 4.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSource {
    pub f: FunctionSpec,
    pub r: u64,
    pub n: u64,
    pub l: u64,
}

/// Points of `[0,1)^2`, each coordinate known to within its enclosure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSet2D {
    pub points: Vec<(f64, f64)>,
    #[serde(skip)]
    pub enclosures: Vec<(CertifiedReal, CertifiedReal)>,
    pub source: Option<OrbitSource>,
}

impl PointSet2D {
    /// Point set from plain coordinates, which must lie in `[0,1)`.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<PointSet2D> {
        if points.iter().any(|&(x, y)| !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y)) {
            return arg("point coordinates must lie in [0, 1)");
        }
        Ok(PointSet2D { points, enclosures: vec![], source: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fractional part of a certified value, refining until the integer part is determined.
fn certified_frac(mut eval: impl FnMut(u32) -> Result<CertifiedReal>, exact: Option<Rational>) -> Result<CertifiedReal> {
    if let Some(v) = exact {
        let fr = &v - rat_int(floor_rat(&v));
        return Ok(CertifiedReal::from_rational(&fr, 96));
    }
    let mut last = None;
    for bits in PrecisionSchedule::default().steps() {
        let e = eval(bits)?;
        if let Some(m) = e.floor_if_determined() {
            return Ok(e.add_integer(&-m));
        }
        last = Some(e);
    }
    Err(Error::UnresolvedFloor { enclosure: last.map(|e| e.to_string()).unwrap_or_default(), bits: 16384 })
}

/// `({f(n)}, {r f'(n)})` for `n` in `[n_start, n_start + l)`.
pub fn orbit(f: &FunctionSpec, r: u64, n_start: u64, l: u64, bits: u32) -> Result<PointSet2D> {
    if l == 0 {
        return arg("L must be at least 1");
    }
    if n_start < f.n0 {
        return Err(Error::BelowAsymptoticRegime { n: n_start, reason: format!("orbit must start at n0 = {} or later", f.n0) });
    }
    let rr = rat_int(r);
    let mut enclosures = Vec::with_capacity(l as usize);
    for n in n_start..n_start + l {
        let fx = certified_frac(|b| f.eval(0, n, b.max(bits)), f.exact_integer_check(n).map(rat_int))?;
        let fd = certified_frac(|b| Ok(f.eval(1, n, b.max(bits))?.mul_rational(&rr, b.max(bits))), f.exact_scaled_derivative(n, r))?;
        enclosures.push((fx, fd));
    }
    let clamp = |c: &CertifiedReal| c.midpoint_f64().clamp(0.0, 1.0 - f64::EPSILON / 2.0);
    let points = enclosures.iter().map(|(a, b)| (clamp(a), clamp(b))).collect();
    Ok(PointSet2D { points, enclosures, source: Some(OrbitSource { f: f.clone(), r, n: n_start, l }) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Grid(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyValue {
    /// Exact for `Exact`; a lower bound for `Grid`, with the true value in `[value, value + error_radius]`.
    pub value: f64,
    pub mode: Mode,
    pub error_radius: f64,
}

/// Best `count/L - w * (t_j - t_i)` over closed y-ranges `[t_i, t_j]` of the sorted `ys`.
fn best_over(ys: &[f64], w: f64, inv_l: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut best_start = f64::NEG_INFINITY;
    for (j, &y) in ys.iter().enumerate() {
        best_start = best_start.max(w * y - j as f64 * inv_l);
        best = best.max((j + 1) as f64 * inv_l - w * y + best_start);
    }
    best
}

/// Best `w * (t_v - t_u) - (#points strictly between)/L` with `t` ranging over `{0} + ys + {1}`.
fn best_under(ys: &[f64], w: f64, inv_l: f64) -> f64 {
    // t_0 = 0, t_i = ys[i-1], t_{s+1} = 1; points strictly between t_u < t_v number v - u - 1
    let s = ys.len();
    let t = |i: usize| if i == 0 { 0.0 } else if i == s + 1 { 1.0 } else { ys[i - 1] };
    let mut best = f64::NEG_INFINITY;
    let mut best_start = -w * t(0);
    for v in 1..=s + 1 {
        best = best.max(w * t(v) - (v as f64 - 1.0) * inv_l + best_start);
        best_start = best_start.max(-w * t(v) + v as f64 * inv_l);
    }
    best
}

fn insert_sorted(v: &mut Vec<f64>, y: f64) {
    let pos = v.partition_point(|&a| a < y);
    v.insert(pos, y);
}

/// `sup |A(B)/L - vol(B)|` over boxes `B = [a1,b1) x [a2,b2)` in `[0,1)^2`.
pub fn extreme_discrepancy(ps: &PointSet2D, mode: Mode) -> Result<DiscrepancyValue> {
    match mode {
        Mode::Exact => {
            if ps.len() > EXACT_SIZE_CAP {
                return Err(Error::SizeCap(format!("exact mode handles at most {EXACT_SIZE_CAP} points; use grid mode")));
            }
            Ok(DiscrepancyValue { value: exact_discrepancy(&ps.points), mode, error_radius: 0.0 })
        }
        Mode::Grid(g) => {
            if g == 0 || g > 4096 {
                return arg("grid size must be in 1..=4096");
            }
            Ok(DiscrepancyValue { value: grid_discrepancy(&ps.points, g as usize), mode, error_radius: 4.0 / g as f64 })
        }
    }
}

/// Exact value in `O(L^3)`: the supremum is approached by closed boxes spanned by point
/// coordinates (excess side) or open boxes spanned by coordinates and `{0, 1}` (deficit side).
fn exact_discrepancy(pts: &[(f64, f64)]) -> f64 {
    let l = pts.len();
    if l == 0 {
        return 0.0;
    }
    let inv_l = 1.0 / l as f64;
    let mut by_x = pts.to_vec();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut best: f64 = 0.0;
    // excess: closed x-range [x_i, x_j]
    for i in 0..l {
        let mut ys = Vec::with_capacity(l - i);
        for j in i..l {
            insert_sorted(&mut ys, by_x[j].1);
            best = best.max(best_over(&ys, by_x[j].0 - by_x[i].0, inv_l));
        }
    }
    // deficit: open x-range (t_u, t_v) with t in {0} + xs + {1}
    let xt = |i: usize| if i == 0 { 0.0 } else if i == l + 1 { 1.0 } else { by_x[i - 1].0 };
    for u in 0..=l {
        let mut ys: Vec<f64> = Vec::with_capacity(l);
        // points strictly between t_u and t_v: indices with x in (t_u, t_v)
        let mut next = u; // by_x index of the next candidate point (point index u corresponds to t_{u+1})
        for v in u + 1..=l + 1 {
            let (lo, hi) = (xt(u), xt(v));
            while next < l && by_x[next].0 < hi {
                if by_x[next].0 > lo {
                    insert_sorted(&mut ys, by_x[next].1);
                }
                next += 1;
            }
            best = best.max(best_under(&ys, hi - lo, inv_l));
        }
    }
    best.min(1.0)
}

/// Supremum over boxes with corners on the `G x G` lattice (maximum subarray per column pair).
fn grid_discrepancy(pts: &[(f64, f64)], g: usize) -> f64 {
    let l = pts.len();
    if l == 0 {
        return 0.0;
    }
    let mut cells = vec![0u32; g * g];
    for &(x, y) in pts {
        let cx = ((x * g as f64) as usize).min(g - 1);
        let cy = ((y * g as f64) as usize).min(g - 1);
        cells[cx * g + cy] += 1;
    }
    let inv_l = 1.0 / l as f64;
    let cell = 1.0 / g as f64;
    let mut best: f64 = 0.0;
    let mut col = vec![0u32; g];
    for i in 0..g {
        col.iter_mut().for_each(|c| *c = 0);
        for j in i..g {
            for (c, v) in col.iter_mut().zip(&cells[j * g..(j + 1) * g]) {
                *c += v;
            }
            let w = (j - i + 1) as f64 * cell * cell;
            let (mut hi, mut lo, mut run_hi, mut run_lo) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
            for &c in &col {
                let v = c as f64 * inv_l - w;
                run_hi = v + run_hi.max(0.0);
                run_lo = v + run_lo.min(0.0);
                hi = hi.max(run_hi);
                lo = lo.min(run_lo);
            }
            best = best.max(hi).max(-lo);
        }
    }
    best.min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtkValue {
    pub h: u32,
    /// `1/H + sum_{0 < |h|_inf <= H} |S(h)| / (L u(h))`, without the constant [`C_ETK`].
    pub value: f64,
    /// Bound on the floating-point error of `value`.
    pub error_bound: f64,
}

/// The Erdos-Turan-Koksma sum for each `H` in `hs`, from one pass over the points.
pub fn etk_bounds(ps: &PointSet2D, hs: &[u32]) -> Result<Vec<EtkValue>> {
    if hs.iter().any(|&h| h == 0) {
        return arg("H must be at least 1");
    }
    let l = ps.len();
    if l == 0 {
        return arg("empty point set");
    }
    let hmax = *hs.iter().max().unwrap_or(&1) as usize;
    let width = 2 * hmax + 1;
    // S(h0, h1) for h0 in 0..=H, h1 in -H..=H, Kahan-compensated
    let mut re = vec![0f64; (hmax + 1) * width];
    let mut im = vec![0f64; (hmax + 1) * width];
    let mut cre = vec![0f64; (hmax + 1) * width];
    let mut cim = vec![0f64; (hmax + 1) * width];
    let tau = std::f64::consts::TAU;
    let mut px = vec![(0f64, 0f64); hmax + 1];
    let mut py = vec![(0f64, 0f64); width];
    for &(x, y) in &ps.points {
        for (h, p) in px.iter_mut().enumerate() {
            let a = tau * ((h as f64 * x).fract());
            *p = (a.cos(), a.sin());
        }
        for (idx, p) in py.iter_mut().enumerate() {
            let h = idx as f64 - hmax as f64;
            let a = tau * (h * y).rem_euclid(1.0);
            *p = (a.cos(), a.sin());
        }
        for h0 in 0..=hmax {
            let (c0, s0) = px[h0];
            let row = h0 * width;
            for (idx, &(c1, s1)) in py.iter().enumerate() {
                let k = row + idx;
                let (vr, vi) = (c0 * c1 - s0 * s1, s0 * c1 + c0 * s1);
                let yr = vr - cre[k];
                let tr = re[k] + yr;
                cre[k] = (tr - re[k]) - yr;
                re[k] = tr;
                let yi = vi - cim[k];
                let ti = im[k] + yi;
                cim[k] = (ti - im[k]) - yi;
                im[k] = ti;
            }
        }
    }
    let per_sum_err = l as f64 * 2f64.powi(-46);
    Ok(hs
        .iter()
        .map(|&h| {
            let h = h as usize;
            let mut total = 0.0;
            let mut terms = 0usize;
            for h0 in 0..=h {
                for h1 in -(h as i64)..=h as i64 {
                    if h0 == 0 && h1 <= 0 {
                        continue;
                    }
                    let k = h0 * width + (h1 + hmax as i64) as usize;
                    let u = (h0.max(1) as f64) * (h1.unsigned_abs().max(1) as f64);
                    total += 2.0 * re[k].hypot(im[k]) / (l as f64 * u);
                    terms += 2;
                }
            }
            EtkValue { h: h as u32, value: 1.0 / h as f64 + total, error_bound: terms as f64 * per_sum_err / l as f64 }
        })
        .collect())
}

pub fn etk_bound(ps: &PointSet2D, h: u32) -> Result<EtkValue> {
    Ok(etk_bounds(ps, &[h])?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryBound {
    /// 1, 2 or 3: which of the three shapes attains the minimum.
    pub case: u8,
    pub value: f64,
    /// Every applicable case with its value.
    pub cases: Vec<(u8, f64)>,
}

/// Shape of the discrepancy bound for the orbit over `[N, N+L)`, without constants:
/// case 1 `N^((a-2)/3) log N + N^(2-a)/L` for `a` in `(1,2)`;
/// case 2 `N^((a-3)/7) log N + N^(2-a)/L` for `a` in `(1,3/2)`;
/// case 3 `(N^((a-3)/7) + N^((3-a)/3)/L) log N` for `a` in `[3/2,11/6)`.
/// Requires `1 <= L <= N`.
pub fn theory_bound(alpha: &Rational, _r: u64, n: u64, l: u64) -> Result<TheoryBound> {
    let a = rational_to_f64(alpha);
    if !(1.0 < a && a < 2.0) {
        return arg("alpha must lie in (1, 2)");
    }
    if l == 0 || l > n {
        return arg("need 1 <= L <= N");
    }
    let nf = n as f64;
    let (lf, ln) = (l as f64, nf.ln());
    let mut cases = vec![(1, nf.powf((a - 2.0) / 3.0) * ln + nf.powf(2.0 - a) / lf)];
    if *alpha < crate::exactmath::rat(3, 2) {
        cases.push((2, nf.powf((a - 3.0) / 7.0) * ln + nf.powf(2.0 - a) / lf));
    }
    if *alpha >= crate::exactmath::rat(3, 2) && *alpha < crate::exactmath::rat(11, 6) {
        cases.push((3, (nf.powf((a - 3.0) / 7.0) + nf.powf((3.0 - a) / 3.0) / lf) * ln));
    }
    let &(case, value) = cases.iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
    Ok(TheoryBound { case, value, cases })
}

/// `J <= (4 d sqrt(d) + 1) D^(1/d)`.
pub fn isotropic_bound(d_value: f64, d: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&d_value) || d == 0 {
        return arg("need 0 <= D <= 1 and d >= 1");
    }
    let df = d as f64;
    Ok((4.0 * df * df.sqrt() + 1.0) * d_value.powf(1.0 / df))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    /// `lambda` of the lemma on the interval, when its hypothesis holds.
    pub lambda: Option<f64>,
    /// Shape of the bound (no constant), when the hypothesis holds.
    pub bound: Option<f64>,
    /// `|sum| / bound`: the multiplier the unspecified constant must at least be.
    pub fitted_multiplier: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeTestReport {
    pub h0: i64,
    pub h1: i64,
    pub n: u64,
    pub l: u64,
    /// `|sum_{n in [N, N+L)} e(h0 f(n) + h1 r f'(n))|`
    pub sum_abs: f64,
    pub checks: Vec<LemmaCheck>,
}

/// Extremes of `|g^(i)|` on `[lo, hi]` for `g = h0 x^a + h1 r a x^(a-1)`, plus whether `g^(i)` keeps its sign.
fn deriv_range(a: &Rational, h0: i64, h1r: f64, i: u64, lo: f64, hi: f64) -> (f64, f64, f64, bool) {
    // g^(i)(x) = x^(a-i-1) (h0 (a)_i x + h1 r (a)_(i+1))
    let ai = rational_to_f64(&falling_factorial(a, i));
    let ai1 = rational_to_f64(&falling_factorial(a, i + 1));
    let af = rational_to_f64(a);
    let g = |x: f64| x.powf(af - i as f64 - 1.0) * (h0 as f64 * ai * x + h1r * ai1);
    let mut xs = vec![lo, hi];
    // zero of g^(i+1): x = -c B / ((c + 1) A) with A = h0 (a)_i, B = h1 r (a)_(i+1), c = a - i - 1
    let (aa, bb, c) = (h0 as f64 * ai, h1r * ai1, af - i as f64 - 1.0);
    if aa != 0.0 && c + 1.0 != 0.0 {
        let x = -c * bb / ((c + 1.0) * aa);
        if x > lo && x < hi {
            xs.push(x);
        }
    }
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let (mn, mx) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let sign_const = mn > 0.0 || mx < 0.0;
    // also a root of g^(i) itself: x = -B / A
    let root_inside = aa != 0.0 && { let x = -bb / aa; x >= lo && x <= hi };
    let absmin = if sign_const && !root_inside { mn.abs().min(mx.abs()) } else { 0.0 };
    (absmin, mn.abs().max(mx.abs()), mn.min(mx), sign_const && !root_inside)
}

/// The three derivative tests applied to `g(x) = h0 f(x) + h1 r f'(x)` with `f = x^alpha`
/// on `[N, N+L)`, against the directly summed exponential sum.
pub fn derivative_test_bounds(alpha: &Rational, r: u64, h0: i64, h1: i64, n: u64, l: u64) -> Result<DerivativeTestReport> {
    if h0 == 0 && h1 == 0 {
        return arg("(h0, h1) must be nonzero");
    }
    let f = FunctionSpec::power(alpha.clone())?;
    let ps = orbit(&f, r, n, l, 64)?;
    let (mut sr, mut si) = (0f64, 0f64);
    for &(x, y) in &ps.points {
        let ph = std::f64::consts::TAU * (h0 as f64 * x + h1 as f64 * y).rem_euclid(1.0);
        sr += ph.cos();
        si += ph.sin();
    }
    let sum_abs = sr.hypot(si);
    let (lo, hi) = (n as f64, (n + l - 1).max(n) as f64);
    let h1r = (h1 * r as i64) as f64;
    let len = l as f64;
    let mut checks = Vec::new();
    let fit = |b: f64| (b > 0.0).then(|| sum_abs / b);

    // first derivative test: g' monotone and ||g'|| >= lambda1
    let (_, _, _, g2_fixed) = deriv_range(alpha, h0, h1r, 2, lo, hi);
    let (g1min, g1max) = {
        let af = rational_to_f64(alpha);
        let a1 = rational_to_f64(&falling_factorial(alpha, 1));
        let a2 = rational_to_f64(&falling_factorial(alpha, 2));
        let g1 = |x: f64| x.powf(af - 2.0) * (h0 as f64 * a1 * x + h1r * a2);
        let (u, v) = (g1(lo), g1(hi));
        (u.min(v), u.max(v))
    };
    let lam1 = if g2_fixed && g1min.floor() == g1max.floor() {
        Some((g1min - g1min.floor()).min(g1max.ceil() - g1max))
    } else {
        None
    };
    checks.push(match lam1 {
        Some(lam) if lam > 0.0 => LemmaCheck { lemma: "first-derivative", lambda: Some(lam), bound: Some(1.0 / lam), fitted_multiplier: fit(1.0 / lam), note: "g' monotone, ||g'|| >= lambda".into() },
        _ => LemmaCheck { lemma: "first-derivative", lambda: None, bound: None, fitted_multiplier: None, note: "hypothesis fails on interval: g' meets an integer or is not monotone".into() },
    });
    for (i, name, shape) in [
        (2u64, "second-derivative", (|len: f64, lam: f64| len * lam.sqrt() + 1.0 / lam.sqrt()) as fn(f64, f64) -> f64),
        (3u64, "third-derivative", |len: f64, lam: f64| len * lam.powf(1.0 / 6.0) + lam.powf(-1.0 / 3.0)),
    ] {
        let (mn, mx, _, ok) = deriv_range(alpha, h0, h1r, i, lo, hi);
        let valid = ok && mn > 0.0 && (i != 3 || mx < 1.0);
        checks.push(if valid {
            let b = shape(len, mn);
            LemmaCheck { lemma: name, lambda: Some(mn), bound: Some(b), fitted_multiplier: fit(b), note: format!("ratio max/min = {:.4}", mx / mn) }
        } else {
            LemmaCheck { lemma: name, lambda: None, bound: None, fitted_multiplier: None, note: "hypothesis fails on interval".into() }
        });
    }
    Ok(DerivativeTestReport { h0, h1, n, l, sum_abs, checks })
}

/// Full report for the orbit over `[N, N+L)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub alpha: String,
    pub r: u64,
    #[serde(rename = "D")]
    pub d: DiscrepancyValue,
    pub etk: Vec<EtkValue>,
    pub c_etk: f64,
    pub theory: Option<TheoryBound>,
    pub isotropic: f64,
}

pub fn discrepancy_report(f: &FunctionSpec, r: u64, n: u64, l: u64, hs: &[u32], grid: u32) -> Result<DiscrepancyReport> {
    let ps = orbit(f, r, n, l, 64)?;
    let mode = if ps.len() <= EXACT_SIZE_CAP { Mode::Exact } else { Mode::Grid(grid) };
    let d = extreme_discrepancy(&ps, mode)?;
    let etk = etk_bounds(&ps, hs)?;
    let theory = match f.alpha() {
        Some(a) if *a < rat_int(2) && l <= n => Some(theory_bound(a, r, n, l)?),
        _ => None,
    };
    let isotropic = isotropic_bound((d.value + d.error_radius).min(1.0), 2)?;
    Ok(DiscrepancyReport { n, l, alpha: f.to_string(), r, d, etk, c_etk: C_ETK, theory, isotropic })
}
