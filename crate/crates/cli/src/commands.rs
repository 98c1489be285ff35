use psprog_core::discrepancy::{derivative_test_bounds, discrepancy_report};
use psprog_core::exactmath::{fmt_rational, parse_rational, rational_to_f64};
use psprog_core::experiments::{
    alpha_sweep, count_variable_r, density_fixed_r, density_short_interval, gap_lengths, parse_alpha_grid, xlogx_band,
};
use psprog_core::functions::FunctionSpec;
use psprog_core::polytope::{build_c, vertices, volume_exact, volume_monte_carlo, Variant};
use psprog_core::progressions::{brute_force_test, criterion_classify, ProgressionQuery, Verdict};
use psprog_core::{Error, Result};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{dec15, line_plot, opt_dec, rat_cells, Series, Table};

pub struct Rendered {
    pub text: Option<String>,
    pub table: Table,
    pub json: Value,
    pub svg: Option<String>,
}

impl Rendered {
    fn new(table: Table, json: Value) -> Rendered {
        Rendered { text: None, table, json, svg: None }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn parse_list(name: &str, s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| bad(format!("--{name}: '{t}' is not a nonnegative integer")))).collect()
}

/// Powers of ten from 1000 below `n`, then `n` itself.
fn decade_grid(n: u64) -> Vec<u64> {
    let mut g: Vec<u64> = std::iter::successors(Some(1000u64), |&x| x.checked_mul(10)).take_while(|&x| x < n).collect();
    g.push(n);
    g
}

fn n_grid(n: Option<u64>, grid: &Option<String>) -> Result<Vec<u64>> {
    match (grid, n) {
        (Some(g), _) => parse_list("grid", g),
        (None, Some(n)) => Ok(decade_grid(n)),
        (None, None) => Err(bad("give --n or --grid")),
    }
}

fn x_grid(s: &str) -> Result<Vec<u64>> {
    if let Some(spec) = s.strip_prefix("log:") {
        let err = || bad(format!("--x-grid '{s}': expected log:LO..HI:COUNT"));
        let (range, count) = spec.split_once(':').ok_or_else(err)?;
        let (lo, hi) = range.split_once("..").ok_or_else(err)?;
        let (lo, hi, count): (u64, u64, u64) =
            (lo.parse().map_err(|_| err())?, hi.parse().map_err(|_| err())?, count.parse().map_err(|_| err())?);
        if lo == 0 || hi <= lo || count < 2 {
            return Err(err());
        }
        let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
        let mut g: Vec<u64> =
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64).collect();
        g[0] = lo;
        *g.last_mut().unwrap() = hi;
        g.dedup();
        return Ok(g);
    }
    parse_list("x-grid", s)
}

fn function(s: &str) -> Result<FunctionSpec> {
    FunctionSpec::parse(s).map_err(|e| bad(format!("--f '{s}': {e}")))
}

fn rational(name: &str, s: &str) -> Result<psprog_core::Rational> {
    parse_rational(s).map_err(|e| bad(format!("--{name} '{s}': {e}")))
}

pub fn run(cmd: &Cmd) -> Result<Rendered> {
    match cmd {
        Cmd::Volume(a) => volume(a),
        Cmd::Detect(a) => detect(a),
        Cmd::Density(a) => density(a),
        Cmd::Short(a) => short(a),
        Cmd::VaryR(a) => vary_r(a),
        Cmd::Gaps(a) => gaps(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Discrepancy(a) => discrepancy(a),
        Cmd::XlogxBand(a) => band(a),
    }
}

fn volume(a: &VolumeArgs) -> Result<Rendered> {
    let variant = match a.variant {
        VariantArg::C => Variant::C,
        VariantArg::Cminus => Variant::Cminus,
        VariantArg::Cplus => Variant::Cplus,
        VariantArg::Cprime => Variant::Cprime,
    };
    let eps = a.eps.as_deref().map(|e| rational("eps", e)).transpose()?;
    let p = build_c(a.k, a.d, variant, eps.as_ref())?;
    let v = volume_exact(&p)?;
    let verts = vertices(&p)?;
    let mut doc = psprog_core::polytope::to_json(&p, &v, &verts);
    let mut table = Table::new(&["k", "d", "variant", "volume", "volume_decimal", "vertices", "mc_estimate", "mc_std_error"]);
    let [vr, vd] = rat_cells(&v.volume);
    let mut text = fmt_rational(&v.volume);
    let (mut est, mut se) = (String::new(), String::new());
    if let Some(n) = a.mc_samples {
        let mc = volume_monte_carlo(&p, n, a.seed)?;
        doc["monte_carlo"] = to_json(&mc);
        text.push_str(&format!("\nmonte carlo: {} +- {} ({} samples, seed {})", dec15(mc.estimate), dec15(mc.std_error), n, a.seed));
        (est, se) = (dec15(mc.estimate), dec15(mc.std_error));
    }
    table.push(vec![a.k.to_string(), a.d.to_string(), format!("{:?}", a.variant).to_lowercase(), vr, vd, v.vertex_count.to_string(), est, se]);
    Ok(Rendered { text: Some(text), ..Rendered::new(table, doc) })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::CertainlyIn => "in",
        Verdict::CertainlyOut => "out",
        Verdict::Uncertain => "uncertain",
    }
}

fn detect(a: &DetectArgs) -> Result<Rendered> {
    let q = ProgressionQuery::new(function(&a.f)?, a.k, a.r)?;
    let (lo, hi) = match (a.n, a.from, a.to) {
        (Some(n), _, _) => (n, n),
        (None, Some(f), Some(t)) if f <= t => (f, t),
        (None, Some(_), Some(_)) => return Err(bad("--from must not exceed --to")),
        _ => return Err(bad("give --n or both --from and --to")),
    };
    if hi - lo >= 10_000_000 {
        return Err(bad("--from..--to spans more than 10^7 values"));
    }
    let mut table = Table::new(&["n", "brute_force", "criterion", "shift", "eps_used", "floors"]);
    let mut rows = Vec::new();
    for n in lo..=hi {
        let bf = brute_force_test(&q, n)?;
        let floors = psprog_core::progressions::floors(&q, n)?;
        let fl = floors.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        let (crit, shift, eps) = match criterion_classify(&q, n) {
            Ok(o) => (
                verdict_str(o.verdict).to_string(),
                o.shift.map(|s| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default(),
                dec15(rational_to_f64(&o.eps_used)),
            ),
            Err(Error::BelowAsymptoticRegime { .. }) => ("n/a".into(), String::new(), String::new()),
            Err(e) => return Err(e),
        };
        rows.push(json!({"n": n, "brute_force": bf, "criterion": crit, "shift": shift, "floors": floors.iter().map(|v| v.to_string()).collect::<Vec<_>>()}));
        table.push(vec![n.to_string(), if bf { "in" } else { "out" }.into(), crit, shift, eps, fl]);
    }
    let doc = json!({"f": q.f.to_string(), "k": q.k, "d": q.d, "r": q.r, "results": rows});
    Ok(Rendered::new(table, doc))
}

fn density(a: &DensityArgs) -> Result<Rendered> {
    let q = ProgressionQuery::new(function(&a.f)?, a.k, a.r)?;
    let grid = n_grid(a.n, &a.grid)?;
    let rep = density_fixed_r(&q, &grid, a.accelerate)?;
    let mut table = Table::new(&["N", "count", "target", "target_decimal", "bound_F", "density", "density_decimal"]);
    let [t, td] = rat_cells(&rep.target);
    for (i, n) in rep.grid.iter().enumerate() {
        let [d, dd] = rat_cells(&rep.densities[i]);
        let bf = opt_dec(rep.bound_f.as_ref().map(|b| b[i]));
        table.push(vec![n.to_string(), rep.counts[i].to_string(), t.clone(), td.clone(), bf, d, dd]);
    }
    let svg = a.svg.as_ref().map(|_| {
        let pts = rep.grid.iter().zip(&rep.densities).map(|(&n, d)| (n as f64, rational_to_f64(d))).collect();
        let label = format!("{} k={} r={}", rep.f, rep.k, rep.r);
        line_plot("Density of progression starts", "N", "density", &[Series { label, points: pts }], Some(rational_to_f64(&rep.target)), true)
    });
    Ok(Rendered { svg, ..Rendered::new(table, to_json(&rep)) })
}

fn short(a: &ShortArgs) -> Result<Rendered> {
    let q = ProgressionQuery::new(function(&a.f)?, a.k, a.r)?;
    let rep = density_short_interval(&q, a.n, a.l, a.accelerate)?;
    let mut table = Table::new(&["N", "L", "count", "density", "density_decimal", "target", "target_decimal", "bound_case", "bound"]);
    let [d, dd] = rat_cells(&rep.density);
    let [t, td] = rat_cells(&rep.target);
    let (case, val) = rep.bound.as_ref().map_or((String::new(), String::new()), |b| (b.case.to_string(), dec15(b.value)));
    table.push(vec![a.n.to_string(), a.l.to_string(), rep.count.to_string(), d, dd, t, td, case, val]);
    Ok(Rendered::new(table, to_json(&rep)))
}

fn vary_r(a: &VaryRArgs) -> Result<Rendered> {
    let alpha = rational("alpha", &a.alpha)?;
    let grid = n_grid(a.n, &a.grid)?;
    let rep = count_variable_r(&alpha, a.k, &grid, !a.no_prune)?;
    let mut table = Table::new(&["N", "pair_count", "normalized", "A_tilde", "B_tilde"]);
    for i in 0..grid.len() {
        table.push(vec![
            grid[i].to_string(),
            rep.pair_counts[i].to_string(),
            dec15(rep.normalized[i]),
            dec15(rep.a_tilde),
            dec15(rep.b_tilde),
        ]);
    }
    Ok(Rendered::new(table, to_json(&rep)))
}

fn gaps(a: &GapsArgs) -> Result<Rendered> {
    let alpha = rational("alpha", &a.alpha)?;
    let grid = x_grid(&a.x_grid)?;
    let rep = gap_lengths(&alpha, a.k, a.r, &grid, a.full_scan)?;
    let mut table = Table::new(&["x", "L", "censored", "ratio", "ratio_k3"]);
    for i in 0..grid.len() {
        table.push(vec![
            grid[i].to_string(),
            rep.l_values[i].map(|l| l.to_string()).unwrap_or_default(),
            rep.censored[i].to_string(),
            opt_dec(rep.ratios[i]),
            opt_dec(rep.ratios_k3.as_ref().and_then(|r| r[i])),
        ]);
    }
    Ok(Rendered::new(table, to_json(&rep)))
}

fn sweep(a: &SweepArgs) -> Result<Rendered> {
    let grid = parse_alpha_grid(&a.alpha_grid).map_err(|e| bad(format!("--alpha-grid: {e}")))?;
    let rep = alpha_sweep(a.k, a.r, a.n, &grid)?;
    let mut table = Table::new(&["alpha", "alpha_decimal", "density", "density_decimal"]);
    for (al, d) in rep.alpha_grid.iter().zip(&rep.densities) {
        let [x, xd] = rat_cells(al);
        let [y, yd] = rat_cells(d);
        table.push(vec![x, xd, y, yd]);
    }
    let svg = a.svg.as_ref().map(|_| {
        let pts = rep.alpha_grid.iter().zip(&rep.densities).map(|(x, y)| (rational_to_f64(x), rational_to_f64(y))).collect();
        let label = format!("N={} k={} r={}", rep.n, rep.k, rep.r);
        line_plot("D_{N,k,r}(alpha)", "alpha", "density", &[Series { label, points: pts }], Some(1.0 / (a.k as f64 - 1.0)), false)
    });
    let mut doc = to_json(&rep);
    doc["mean"] = json!(rep.mean());
    Ok(Rendered { svg, ..Rendered::new(table, doc) })
}

fn discrepancy(a: &DiscrepancyArgs) -> Result<Rendered> {
    let f = function(&a.f)?;
    if f.alpha().is_none() {
        return Err(bad("--f: the orbit is defined for power functions only"));
    }
    let hs: Vec<u32> = parse_list("h", &a.h)?
        .into_iter()
        .map(|h| u32::try_from(h).map_err(|_| bad("--h values must fit in 32 bits")))
        .collect::<Result<_>>()?;
    let rep = discrepancy_report(&f, a.r, a.n, a.l, &hs, a.grid)?;
    let mut doc = to_json(&rep);
    if let (Some(h0), Some(h1)) = (a.h0, a.h1) {
        let alpha = f.alpha().expect("checked above");
        doc["derivative_tests"] = to_json(&derivative_test_bounds(alpha, a.r, h0, h1, a.n, a.l)?);
    }
    let mut table = Table::new(&["N", "L", "alpha", "r", "D", "D_mode", "D_error_radius", "H", "etk", "c_etk", "theory_case", "theory", "isotropic"]);
    let mode = match rep.d.mode {
        psprog_core::discrepancy::Mode::Exact => "exact".to_string(),
        psprog_core::discrepancy::Mode::Grid(g) => format!("grid{g}"),
    };
    for e in &rep.etk {
        table.push(vec![
            a.n.to_string(),
            a.l.to_string(),
            rep.alpha.clone(),
            a.r.to_string(),
            dec15(rep.d.value),
            mode.clone(),
            dec15(rep.d.error_radius),
            e.h.to_string(),
            dec15(e.value),
            dec15(rep.c_etk),
            rep.theory.as_ref().map(|t| t.case.to_string()).unwrap_or_default(),
            opt_dec(rep.theory.as_ref().map(|t| t.value)),
            dec15(rep.isotropic),
        ]);
    }
    Ok(Rendered::new(table, doc))
}

fn band(a: &BandArgs) -> Result<Rendered> {
    let grid = n_grid(a.n, &a.grid)?;
    let rep = xlogx_band(a.k, a.r, &grid, a.accelerate)?;
    let mut table = Table::new(&["N", "count", "density", "density_decimal", "band_lower", "band_upper", "inside"]);
    let (lo, hi) = (dec15(rep.band.lower.midpoint_f64()), dec15(rep.band.upper.midpoint_f64()));
    for i in 0..grid.len() {
        let [d, dd] = rat_cells(&rep.density.densities[i]);
        table.push(vec![grid[i].to_string(), rep.density.counts[i].to_string(), d, dd, lo.clone(), hi.clone(), rep.inside[i].to_string()]);
    }
    Ok(Rendered::new(table, to_json(&rep)))
}
