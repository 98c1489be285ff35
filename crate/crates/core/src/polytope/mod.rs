//! H-polytopes of the `C_{k,d+1}` family: construction, vertices, exact and Monte-Carlo volumes.
//!
//! The sets in question are half-open; every routine here works with their
//! closures, which have the same Lebesgue measure.

mod linalg;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{arg, Error, Result};
use crate::exactmath::{binomial, factorial, fmt_rational, rat, rat_int, rational_to_f64, Rational};

fn ser_rat<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

fn ser_rats<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_rational))
}

/// The constraint `normal . y >= offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HalfSpace {
    #[serde(serialize_with = "ser_rats")]
    pub normal: Vec<Rational>,
    #[serde(serialize_with = "ser_rat")]
    pub offset: Rational,
}

impl HalfSpace {
    pub fn new(normal: Vec<Rational>, offset: Rational) -> Result<HalfSpace> {
        if normal.iter().all(|c| c.is_zero()) {
            return arg("half-space normal must be nonzero");
        }
        Ok(HalfSpace { normal, offset })
    }

    fn slack(&self, y: &[Rational]) -> Rational {
        let mut s = -self.offset.clone();
        for (a, b) in self.normal.iter().zip(y) {
            if !a.is_zero() {
                s += a * b;
            }
        }
        s
    }
}

/// Which member of the family a polytope is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `0 <= sum_i C(j,i) y_i <= 1`
    C,
    /// `0 <= sum_i C(j,i) y_i <= 1 - eps`, the sufficient set of the criterion
    Cminus,
    /// `-eps <= sum_i C(j,i) y_i <= 1 + eps`, the necessary set
    Cplus,
    /// `0 <= sum_{i<=j} C(k-1,i) y_i <= 1` for `j = 1..d`, the lower-bound witness
    Cprime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "family")]
pub enum PolytopeLabel {
    C { k: u32, d: u32 },
    Cminus { k: u32, d: u32, #[serde(serialize_with = "ser_rat")] eps: Rational },
    Cplus { k: u32, d: u32, #[serde(serialize_with = "ser_rat")] eps: Rational },
    Cprime { k: u32, d: u32 },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Polytope {
    pub dim: usize,
    pub halfspaces: Vec<HalfSpace>,
    pub label: PolytopeLabel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VolumeResult {
    #[serde(serialize_with = "ser_rat")]
    pub volume: Rational,
    pub vertex_count: usize,
    pub simplex_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

fn pair(normal: Vec<Rational>, lo: Rational, hi: Rational) -> [HalfSpace; 2] {
    let neg = normal.iter().map(|c| -c).collect();
    [HalfSpace { normal, offset: lo }, HalfSpace { normal: neg, offset: -hi }]
}

/// Build `C_{k,d+1}` or one of its relatives in `R^{d+1}` with coordinates `y_0..y_d`.
pub fn build_c(k: u32, d: u32, variant: Variant, eps: Option<&Rational>) -> Result<Polytope> {
    if d < 1 || k < d + 2 {
        return arg(format!("need d >= 1 and k >= d + 2, got k = {k}, d = {d}"));
    }
    if k > 64 {
        return Err(Error::SizeCap(format!("k = {k} exceeds 64")));
    }
    let m = d as usize + 1;
    let eps = match variant {
        Variant::Cminus | Variant::Cplus => {
            let e = eps.ok_or_else(|| Error::Argument("eps is required for the eps-variants".into()))?;
            if e.is_negative() || *e >= rat(1, 2) {
                return arg("eps must lie in [0, 1/2)");
            }
            e.clone()
        }
        _ => Rational::zero(),
    };
    let mut hs = Vec::with_capacity(2 * k as usize);
    let mut e0 = vec![Rational::zero(); m];
    e0[0] = Rational::one();
    hs.extend(pair(e0, Rational::zero(), Rational::one()));
    let rows = if variant == Variant::Cprime { d } else { k - 1 };
    for j in 1..=rows {
        let normal: Vec<Rational> = (0..m as u64)
            .map(|i| match variant {
                Variant::Cprime if i as u32 <= j => rat_int(binomial(k as u64 - 1, i)),
                Variant::Cprime => Rational::zero(),
                _ => rat_int(binomial(j as u64, i)),
            })
            .collect();
        let (lo, hi) = match variant {
            Variant::C | Variant::Cprime => (Rational::zero(), Rational::one()),
            Variant::Cminus => (Rational::zero(), Rational::one() - &eps),
            Variant::Cplus => (-eps.clone(), Rational::one() + &eps),
        };
        hs.extend(pair(normal, lo, hi));
    }
    let label = match variant {
        Variant::C => PolytopeLabel::C { k, d },
        Variant::Cminus => PolytopeLabel::Cminus { k, d, eps },
        Variant::Cplus => PolytopeLabel::Cplus { k, d, eps },
        Variant::Cprime => PolytopeLabel::Cprime { k, d },
    };
    Ok(Polytope { dim: m, halfspaces: hs, label })
}

impl Polytope {
    pub fn custom(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Polytope> {
        if dim == 0 || halfspaces.iter().any(|h| h.normal.len() != dim) {
            return arg("half-space normals must all have the polytope's dimension");
        }
        Ok(Polytope { dim, halfspaces, label: PolytopeLabel::Custom })
    }

    pub fn contains(&self, y: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| !h.slack(y).is_negative())
    }
}

/// `1 / prod_{i=1}^d C(k-1, i)`.
pub fn lower_bound(k: u32, d: u32) -> Rational {
    let p = (1..=d as u64).fold(num_bigint::BigInt::one(), |acc, i| acc * binomial(k as u64 - 1, i));
    Rational::new(num_bigint::BigInt::one(), p)
}

type TightMask = u128;

struct Vertices {
    points: Vec<Vec<Rational>>,
    tight: Vec<TightMask>,
}

fn combinations(n: usize, m: usize, mut f: impl FnMut(&[usize])) {
    if m > n {
        return;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        f(&idx);
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - m {
                break;
            }
        }
        idx[i] += 1;
        for t in i + 1..m {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// Vertices of `{ y : normal_h . y >= offset_h }` by solving every `m`-subset of faces.
fn enumerate(hs: &[HalfSpace], m: usize) -> Vertices {
    let mut found: BTreeMap<Vec<Rational>, TightMask> = BTreeMap::new();
    combinations(hs.len(), m, |sub| {
        let rows: Vec<&[Rational]> = sub.iter().map(|&i| hs[i].normal.as_slice()).collect();
        let rhs: Vec<&Rational> = sub.iter().map(|&i| &hs[i].offset).collect();
        let Some(y) = linalg::solve(&rows, &rhs) else { return };
        if found.contains_key(&y) {
            return;
        }
        let mut mask: TightMask = 0;
        for (i, h) in hs.iter().enumerate() {
            let s = h.slack(&y);
            if s.is_negative() {
                return;
            }
            if s.is_zero() {
                mask |= 1 << i;
            }
        }
        found.insert(y, mask);
    });
    let (points, tight) = found.into_iter().unzip();
    Vertices { points, tight }
}

/// Vertices of a bounded polytope, or `Unbounded`. An empty polytope has no vertices.
fn vertex_data(p: &Polytope) -> Result<Vertices> {
    let m = p.dim;
    let hs = &p.halfspaces;
    if hs.len() > 128 {
        return Err(Error::SizeCap("more than 128 half-spaces".into()));
    }
    let normals: Vec<Vec<Rational>> = hs.iter().map(|h| h.normal.clone()).collect();
    let piv = linalg::pivot_columns(&normals, m);
    if piv.len() < m {
        // Contains a line when nonempty; test emptiness on the pivot coordinates.
        let reduced: Vec<HalfSpace> = hs
            .iter()
            .map(|h| HalfSpace { normal: piv.iter().map(|&c| h.normal[c].clone()).collect(), offset: h.offset.clone() })
            .collect();
        let v = if piv.is_empty() {
            hs.iter().all(|h| !h.offset.is_positive())
        } else {
            !enumerate(&reduced, piv.len()).points.is_empty()
        };
        return if v { Err(Error::Unbounded) } else { Ok(Vertices { points: vec![], tight: vec![] }) };
    }
    let verts = enumerate(hs, m);
    if verts.points.is_empty() {
        return Ok(verts);
    }
    // Pointed and nonempty: bounded iff the recession cone {A y >= 0} has no extreme ray.
    let mut ray = false;
    combinations(hs.len(), m - 1, |sub| {
        if ray {
            return;
        }
        let rows: Vec<&[Rational]> = sub.iter().map(|&i| hs[i].normal.as_slice()).collect();
        let Some(v) = linalg::kernel_line(&rows, m) else { return };
        let dots: Vec<Rational> =
            hs.iter().map(|h| h.normal.iter().zip(&v).map(|(a, b)| a * b).sum::<Rational>()).collect();
        if dots.iter().all(|x| !x.is_negative()) || dots.iter().all(|x| !x.is_positive()) {
            ray = true;
        }
    });
    if ray || m == 0 {
        return Err(Error::Unbounded);
    }
    Ok(verts)
}

pub fn vertices(p: &Polytope) -> Result<Vec<Vec<Rational>>> {
    Ok(vertex_data(p)?.points)
}

/// Exact bounding box `(min, max)` per coordinate; `None` for an empty polytope.
pub fn bounding_box(p: &Polytope) -> Result<Option<(Vec<Rational>, Vec<Rational>)>> {
    let v = vertices(p)?;
    if v.is_empty() {
        return Ok(None);
    }
    let lo = (0..p.dim).map(|i| v.iter().map(|y| &y[i]).min().unwrap().clone()).collect();
    let hi = (0..p.dim).map(|i| v.iter().map(|y| &y[i]).max().unwrap().clone()).collect();
    Ok(Some((lo, hi)))
}

fn affine_dim(points: &[&Vec<Rational>], m: usize) -> usize {
    if points.is_empty() {
        return 0;
    }
    let base = points[0];
    let rows: Vec<Vec<Rational>> = points[1..].iter().map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    linalg::rank(&rows, m)
}

fn centroid(points: &[&Vec<Rational>], m: usize) -> Vec<Rational> {
    let n = rat_int(points.len() as i64);
    (0..m).map(|i| points.iter().map(|p| &p[i]).sum::<Rational>() / &n).collect()
}

struct FlagWalk<'a> {
    verts: &'a Vertices,
    hs_count: usize,
    m: usize,
    chain: Vec<Vec<Rational>>,
    total: Rational,
    simplices: usize,
}

impl FlagWalk<'_> {
    /// Cone every flag of `face` (vertex indices, affine dimension `dim`) from the centroids above it.
    fn walk(&mut self, face: &[usize], dim: usize) {
        let pts: Vec<&Vec<Rational>> = face.iter().map(|&i| &self.verts.points[i]).collect();
        if dim == 1 {
            let apex = &self.chain[0];
            let mut rows: Vec<Vec<Rational>> =
                self.chain[1..].iter().map(|c| c.iter().zip(apex).map(|(a, b)| a - b).collect()).collect();
            for p in &pts {
                rows.push(p.iter().zip(apex).map(|(a, b)| a - b).collect());
            }
            self.total += linalg::abs(linalg::det(rows));
            self.simplices += 1;
            return;
        }
        let common = face.iter().fold(!0 as TightMask, |acc, &i| acc & self.verts.tight[i]);
        let mut seen = BTreeSet::new();
        let mut subfaces = Vec::new();
        for h in 0..self.hs_count {
            if common & (1 << h) != 0 {
                continue;
            }
            let g: Vec<usize> = face.iter().copied().filter(|&i| self.verts.tight[i] & (1 << h) != 0).collect();
            if g.len() < dim || !seen.insert(g.clone()) {
                continue;
            }
            let gp: Vec<&Vec<Rational>> = g.iter().map(|&i| &self.verts.points[i]).collect();
            if affine_dim(&gp, self.m) == dim - 1 {
                subfaces.push(g);
            }
        }
        self.chain.push(centroid(&pts, self.m));
        for g in subfaces {
            self.walk(&g, dim - 1);
        }
        self.chain.pop();
    }
}

/// Exact volume by coning all flags of the face lattice from the centroids of their faces.
pub fn volume_exact(p: &Polytope) -> Result<VolumeResult> {
    let m = p.dim;
    if m > 6 {
        return Err(Error::SizeCap(format!("dimension {m} exceeds 6")));
    }
    let verts = vertex_data(p)?;
    let n = verts.points.len();
    let all: Vec<usize> = (0..n).collect();
    let pts: Vec<&Vec<Rational>> = verts.points.iter().collect();
    if n == 0 || affine_dim(&pts, m) < m {
        return Ok(VolumeResult { volume: Rational::zero(), vertex_count: n, simplex_count: 0 });
    }
    if m == 1 {
        let lo = pts.iter().map(|y| &y[0]).min().unwrap();
        let hi = pts.iter().map(|y| &y[0]).max().unwrap();
        return Ok(VolumeResult { volume: hi - lo, vertex_count: n, simplex_count: 1 });
    }
    let mut w = FlagWalk { verts: &verts, hs_count: p.halfspaces.len(), m, chain: vec![], total: Rational::zero(), simplices: 0 };
    w.walk(&all, m);
    let volume = w.total / rat_int(factorial(m as u64));
    Ok(VolumeResult { volume, vertex_count: n, simplex_count: w.simplices })
}

/// Hit-rate estimate of the volume inside the exact bounding box, sampled in chunks
/// with independent ChaCha streams so the result depends only on `seed`.
pub fn volume_monte_carlo(p: &Polytope, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    let Some((lo, hi)) = bounding_box(p)? else {
        return Ok(MonteCarloEstimate { estimate: 0.0, std_error: 0.0, samples, seed });
    };
    let lo: Vec<f64> = lo.iter().map(rational_to_f64).collect();
    let span: Vec<f64> = hi.iter().map(rational_to_f64).zip(&lo).map(|(h, l)| h - l).collect();
    let box_vol: f64 = span.iter().product();
    if box_vol == 0.0 || samples == 0 {
        return Ok(MonteCarloEstimate { estimate: 0.0, std_error: 0.0, samples, seed });
    }
    let faces: Vec<(Vec<f64>, f64)> = p
        .halfspaces
        .iter()
        .map(|h| (h.normal.iter().map(|c| c.to_f64().unwrap()).collect(), h.offset.to_f64().unwrap()))
        .collect();
    const CHUNK: u64 = 1 << 18;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut y = vec![0f64; lo.len()];
            let mut hits = 0u64;
            for _ in 0..n {
                for i in 0..y.len() {
                    y[i] = lo[i] + span[i] * rng.gen::<f64>();
                }
                if faces.iter().all(|(a, b)| a.iter().zip(&y).map(|(u, v)| u * v).sum::<f64>() >= *b) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let phat = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        estimate: phat * box_vol,
        std_error: box_vol * (phat * (1.0 - phat) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// JSON document for a polytope with its exact volume and vertices.
pub fn to_json(p: &Polytope, v: &VolumeResult, verts: &[Vec<Rational>]) -> serde_json::Value {
    let vs: Vec<Vec<String>> = verts.iter().map(|y| y.iter().map(fmt_rational).collect()).collect();
    serde_json::json!({
        "dim": p.dim,
        "label": p.label,
        "halfspaces": p.halfspaces,
        "volume": fmt_rational(&v.volume),
        "vertex_count": v.vertex_count,
        "simplex_count": v.simplex_count,
        "vertices": vs,
    })
}
