//! Acceptance gate for the workspace: eleven numbered checks, printed as
//! one verdict line each, exit status zero only if all of them pass.
//!
//! The grid sweeps behind the critical-point census are expensive, so
//! their raw outputs (and the probe ladders) are cached as JSON under
//! `target/acceptance-cache` and reused by later runs. Delete that
//! directory to force a full recomputation; set `ACCEPT_RECOUNT=1` to
//! keep the cached sweeps but rerun the critical-point search on them.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use slitmap::analysis::{
    boundary_probe, find_critical_points, lower_bound_check, morse_check, sweep, CriticalKind,
    CriticalPoint, GridSpec, PointClass, ScalarField, Trend,
};
use slitmap::geometry::{assemble_domain, make_circle};
use slitmap::kernel::conjugation_matrix;
use slitmap::mityuk::{MityukEngine, MityukResult, SlitSpec};
use slitmap::oracles::{annulus_r_circular, annulus_r_radial, ProductConfig};
use slitmap::solver::{SolveMethod, SolverConfig};
use slitmap_cli::demos::demo_domain;
use slitmap_cli::domain::{parse_thetas, Engine, ShapeSpec};

/// Pass with a detail string, or fail with one.
type Check = Result<String, String>;

const GRID: usize = 101;
const CACHE_VERSION: &str = "v1";

fn main() {
    let t0 = Instant::now();
    let mut verdicts: Vec<bool> = Vec::new();

    verdict(1, "annulus-oracle-agreement", c01_annulus_oracle(), &mut verdicts);
    verdict(2, "critical-circle-derivative", c02_critical_circle(), &mut verdicts);
    verdict(3, "radial-monotonicity", c03_radial_monotone(), &mut verdicts);
    verdict(4, "disk-closed-form", c04_disk(), &mut verdicts);
    verdict(5, "boundary-map-residuals", c05_boundary_map(), &mut verdicts);

    let studies = collect_studies();
    verdict(6, "critical-point-census", c06_census(&studies), &mut verdicts);
    verdict(7, "morse-count-identity", c07_morse(&studies), &mut verdicts);
    verdict(8, "boundary-limit-probes", c08_probes(), &mut verdicts);
    verdict(9, "distance-lower-bound", c09_lower_bound(&studies), &mut verdicts);
    verdict(10, "conjugation-exactness", c10_conjugation(), &mut verdicts);
    verdict(11, "determinism-and-convergence", c11_determinism(), &mut verdicts);

    let ok = verdicts.iter().filter(|v| **v).count();
    println!("acceptance: {ok}/11 criteria passed in {:.0}s", t0.elapsed().as_secs_f64());
    std::process::exit(if ok == verdicts.len() { 0 } else { 1 });
}

fn verdict(idx: usize, name: &str, check: Check, verdicts: &mut Vec<bool>) {
    match check {
        Ok(detail) => {
            println!("criterion-{idx:02} PASS {name}: {detail}");
            verdicts.push(true);
        }
        Err(detail) => {
            println!("criterion-{idx:02} FAIL {name}: {detail}");
            verdicts.push(false);
        }
    }
}

fn estr<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gmres(tol: f64) -> SolverConfig {
    SolverConfig { method: SolveMethod::Gmres, tol, max_iter: 400, restart: None }
}

fn cache_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-cache");
    fs::create_dir_all(&dir).expect("cache directory must be writable");
    dir
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Option<T> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) {
    let text = serde_json::to_string(value).expect("cache serializes");
    if let Err(e) = fs::write(path, text) {
        eprintln!("  warning: cannot write {}: {e}", path.display());
    }
}

fn progress(msg: &str) {
    eprintln!("[acceptance] {msg}");
}

fn annulus_engine(n: usize, circular: bool, tol: f64) -> Result<MityukEngine, String> {
    let outer = make_circle(C64::new(0.0, 0.0), 1.0, true, n).map_err(estr)?;
    let inner = make_circle(C64::new(0.0, 0.0), 0.25, false, n).map_err(estr)?;
    let dom = assemble_domain(outer, vec![inner]).map_err(estr)?;
    let slits = if circular { SlitSpec::circular(1) } else { SlitSpec::radial(1) };
    MityukEngine::new(dom, slits, gmres(tol)).map_err(estr)
}

/// Criterion 1: the annulus value at a fixed point matches both infinite
/// products to 1e-10 relative, in at most five seconds per evaluation.
fn c01_annulus_oracle() -> Check {
    let mut worst_rel = 0.0f64;
    let mut worst_secs = 0.0f64;
    for circular in [true, false] {
        let eng = annulus_engine(1024, circular, 1e-13)?;
        let t = Instant::now();
        let res = eng.evaluate(C64::new(0.5, 0.0)).map_err(estr)?;
        let secs = t.elapsed().as_secs_f64();
        let oracle = if circular {
            annulus_r_circular(0.25, 0.5, ProductConfig::default())
        } else {
            annulus_r_radial(0.25, 0.5, ProductConfig::default())
        }
        .map_err(estr)?;
        let rel = (res.radius - oracle).abs() / oracle;
        worst_rel = worst_rel.max(rel);
        worst_secs = worst_secs.max(secs);
    }
    let detail =
        format!("n=1024, relative error <= {worst_rel:.2e}, slowest evaluation {worst_secs:.2}s");
    if worst_rel <= 1e-10 && worst_secs <= 5.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 2: along the real axis of the circular-slit annulus the
/// radius is stationary at r = 0.5 and sloped on both sides of it.
fn c02_critical_circle() -> Check {
    let eng = annulus_engine(1024, true, 1e-13)?;
    let h = 1e-4;
    let mut warm: Option<Vec<f64>> = None;
    let mut value = |r: f64| -> Result<f64, String> {
        let (res, mu) = eng.evaluate_warm(C64::new(r, 0.0), warm.as_deref(), false).map_err(estr)?;
        warm = Some(mu);
        Ok(res.radius)
    };
    let mut deriv = |r: f64| -> Result<f64, String> {
        Ok((value(r + h)? - value(r - h)?) / (2.0 * h))
    };
    let d04 = deriv(0.4)?;
    let d05 = deriv(0.5)?;
    let d06 = deriv(0.6)?;
    let detail = format!("dR/dr = {d04:+.3e} at 0.4, {d05:+.1e} at 0.5, {d06:+.3e} at 0.6");
    if d05.abs() <= 1e-6 && d04 > 0.0 && d06 < 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 3: the radial-slit annulus value decreases strictly in |α|,
/// grows past ten times the mid value toward the inner boundary, tracks
/// the infinite product along the whole sweep, and falls two orders of
/// magnitude below the mid value close to the outer wall. The value
/// vanishes like twice the wall distance, so the two-order drop needs
/// |α| = 0.999 and a node count that keeps quadrature accuracy there.
fn c03_radial_monotone() -> Check {
    let eng = annulus_engine(1024, false, 1e-13)?;
    let mut warm: Option<Vec<f64>> = None;
    let mut value = |r: f64| -> Result<f64, String> {
        let (res, mu) = eng.evaluate_warm(C64::new(r, 0.0), warm.as_deref(), false).map_err(estr)?;
        warm = Some(mu);
        Ok(res.radius)
    };
    let gap = std::f64::consts::TAU / 1024.0;
    let mut values = Vec::with_capacity(30);
    let mut rel_sweep = 0.0f64;
    let mut rel_last = 0.0f64;
    for k in 0..30 {
        let r = 0.26 + k as f64 * (0.99 - 0.26) / 29.0;
        let v = value(r)?;
        let oracle = annulus_r_radial(0.25, r, ProductConfig::default()).map_err(estr)?;
        let rel = (v - oracle).abs() / oracle;
        if 1.0 - r >= 3.0 * gap {
            rel_sweep = rel_sweep.max(rel);
        } else {
            rel_last = rel_last.max(rel);
        }
        values.push(v);
    }
    let mid = value(0.5)?;
    let monotone = values.windows(2).all(|w| w[0] > w[1]);
    let wall = annulus_engine(16384, false, 1e-13)?;
    let rw = 0.999;
    let vw = wall.evaluate(C64::new(rw, 0.0)).map_err(estr)?.radius;
    let ow = annulus_r_radial(0.25, rw, ProductConfig::default()).map_err(estr)?;
    let rel_wall = (vw - ow).abs() / ow;
    let detail = format!(
        "R(0.26)/R(0.5) = {:.1}, strictly decreasing: {monotone}, product agreement <= \
         {rel_sweep:.1e} ({rel_last:.1e} at 0.99), R(0.999)/R(0.5) = {:.2e} at n=16384",
        values[0] / mid,
        vw / mid
    );
    if monotone
        && values[0] > 10.0 * mid
        && rel_sweep <= 1e-8
        && rel_last <= 2e-4
        && rel_wall <= 5e-6
        && vw < 1e-2 * mid
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 4: on the unit disk the computed radius matches 1 - |α|² at
/// 25 pseudo-random points.
fn c04_disk() -> Check {
    let outer = make_circle(C64::new(0.0, 0.0), 1.0, true, 512).map_err(estr)?;
    let dom = assemble_domain(outer, vec![]).map_err(estr)?;
    let eng = MityukEngine::new(dom, SlitSpec::circular(0), gmres(1e-13)).map_err(estr)?;
    let mut state: u64 = 0x853c49e6748fea9b;
    let mut unit = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let r = 0.85 * unit().sqrt();
        let th = std::f64::consts::TAU * unit();
        let alpha = C64::from_polar(r, th);
        let res = eng.evaluate(alpha).map_err(estr)?;
        worst = worst.max((res.radius - (1.0 - alpha.norm_sqr())).abs());
    }
    let detail = format!("n=512, worst deviation {worst:.2e} over 25 points");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn population_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Build a demo engine with one node count per ring of the study.
fn demo_engine(
    demo: &str,
    mix: &str,
    n_outer: usize,
    n_inner: usize,
    tol: f64,
) -> Result<Engine, String> {
    let mut spec = demo_domain(demo).map_err(estr)?;
    assign_n(&mut spec.outer, n_outer);
    for shape in &mut spec.inners {
        assign_n(shape, n_inner);
    }
    let thetas = parse_thetas(mix, spec.holes()).map_err(estr)?;
    Engine::build(&spec, None, &thetas, gmres(tol)).map_err(estr)
}

fn assign_n(shape: &mut ShapeSpec, n: usize) {
    match shape {
        ShapeSpec::Circle { n: slot, .. }
        | ShapeSpec::Ellipse { n: slot, .. }
        | ShapeSpec::Polygon { n: slot, .. } => *slot = Some(n),
        ShapeSpec::Slit { .. } => {}
    }
}

/// Criterion 5: the boundary values of the mapping function land on the
/// canonical slits: |Φ| = 1 on the outer ring, |Φ| constant on circular
/// components, arg Φ constant on radial components.
fn c05_boundary_map() -> Check {
    let cases = [
        ("annulus", "c", C64::new(0.5, 0.0)),
        ("annulus", "r", C64::new(0.5, 0.0)),
        ("three-circles", "c,c", C64::new(0.0, 1.5)),
        ("three-circles", "c,r", C64::new(0.0, 1.5)),
    ];
    let mut worst_outer = 0.0f64;
    let mut worst_sd = 0.0f64;
    for (demo, mix, alpha) in cases {
        let engine = demo_engine(demo, mix, 1024, 1024, 1e-13)?;
        let Engine::Plain(eng) = &engine else {
            return Err(format!("{demo} should build a plain engine"));
        };
        let (res, _) = eng.evaluate_warm(alpha, None, true).map_err(estr)?;
        let phi = res.boundary_values.ok_or("boundary values were not returned")?;
        let data = &eng.factor().data;
        for i in data.comp_range(0) {
            worst_outer = worst_outer.max((phi[i].norm() - 1.0).abs());
        }
        let thetas = eng.slits().thetas();
        for k in 1..data.ncomp() {
            let range = data.comp_range(k);
            let vals: Vec<f64> = if thetas[k - 1] == FRAC_PI_2 {
                phi[range].iter().map(|p| p.norm().ln()).collect()
            } else {
                let base = phi[range.start] / phi[range.start].norm();
                phi[range].iter().map(|p| (p * base.conj()).arg()).collect()
            };
            worst_sd = worst_sd.max(population_sd(&vals));
        }
    }
    let detail = format!(
        "n=1024, worst | |Φ|-1 | on the outer ring {worst_outer:.2e}, worst slit deviation sd {worst_sd:.2e}"
    );
    if worst_outer <= 1e-8 && worst_sd <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Expect {
    /// Exact isolated counts (maxima, minima, saddles).
    Counts(usize, usize, usize),
    /// Only the signed count maxima + minima - saddles is pinned.
    Diff(isize),
    /// No critical points of any kind.
    Empty,
    /// Census not gated (a degenerate family is legitimate here).
    Ungated,
}

#[derive(Clone, Copy)]
struct Study {
    demo: &'static str,
    mix: &'static str,
    n_outer: usize,
    n_inner: usize,
    expect: Expect,
}

/// Demo-by-demo sweep plan. Radial sweeps of the doubly connected corner
/// domains run at half resolution; they only have to certify an empty
/// census on a smooth monotone field, not resolve tight corridors.
const STUDIES: &[Study] = &[
    Study { demo: "disk", mix: "", n_outer: 512, n_inner: 512, expect: Expect::Counts(1, 0, 0) },
    Study { demo: "annulus", mix: "c", n_outer: 1024, n_inner: 1024, expect: Expect::Ungated },
    Study { demo: "annulus", mix: "r", n_outer: 1024, n_inner: 1024, expect: Expect::Empty },
    Study {
        demo: "two-circles-a005",
        mix: "c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(1, 0, 1),
    },
    Study {
        demo: "two-circles-a005",
        mix: "r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Empty,
    },
    Study {
        demo: "two-circles-a05",
        mix: "c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(1, 0, 1),
    },
    Study {
        demo: "two-circles-a05",
        mix: "r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Empty,
    },
    Study {
        demo: "rect-slit",
        mix: "c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(4, 0, 4),
    },
    Study { demo: "rect-slit", mix: "r", n_outer: 512, n_inner: 512, expect: Expect::Empty },
    Study {
        demo: "rect-rect",
        mix: "c",
        n_outer: 1024,
        n_inner: 512,
        expect: Expect::Counts(4, 0, 4),
    },
    Study { demo: "rect-rect", mix: "r", n_outer: 512, n_inner: 256, expect: Expect::Empty },
    Study {
        demo: "tri-tri",
        mix: "c",
        n_outer: 1024,
        n_inner: 512,
        expect: Expect::Counts(3, 0, 3),
    },
    Study { demo: "tri-tri", mix: "r", n_outer: 512, n_inner: 256, expect: Expect::Empty },
    Study { demo: "sq-sq", mix: "c", n_outer: 512, n_inner: 512, expect: Expect::Counts(8, 0, 8) },
    Study { demo: "sq-sq", mix: "r", n_outer: 256, n_inner: 256, expect: Expect::Empty },
    Study {
        demo: "sq-circle",
        mix: "c",
        n_outer: 512,
        n_inner: 512,
        expect: Expect::Counts(4, 0, 4),
    },
    Study { demo: "sq-circle", mix: "r", n_outer: 256, n_inner: 256, expect: Expect::Empty },
    Study {
        demo: "circle-sq",
        mix: "c",
        n_outer: 512,
        n_inner: 512,
        expect: Expect::Counts(4, 0, 4),
    },
    Study { demo: "circle-sq", mix: "r", n_outer: 256, n_inner: 256, expect: Expect::Empty },
    Study {
        demo: "three-circles",
        mix: "c,c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(2, 0, 3),
    },
    Study {
        demo: "three-circles",
        mix: "r,r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(0, 0, 1),
    },
    Study {
        demo: "three-circles",
        mix: "c,r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(0, 0, 1),
    },
    Study {
        demo: "six-circles",
        mix: "c,c,c,c,c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(4, 0, 8),
    },
    Study {
        demo: "six-circles",
        mix: "r,r,r,r,r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(0, 0, 4),
    },
    Study {
        demo: "six-circles",
        mix: "c,r,c,r,c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Counts(0, 0, 4),
    },
    Study {
        demo: "seven-circles",
        mix: "c,c,c,c,c,c",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Diff(-5),
    },
    Study {
        demo: "seven-circles",
        mix: "r,r,r,r,r,r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Diff(-5),
    },
    Study {
        demo: "seven-circles",
        mix: "c,c,c,r,r,r",
        n_outer: 1024,
        n_inner: 1024,
        expect: Expect::Diff(-5),
    },
];

fn mix_slug(mix: &str) -> String {
    if mix.is_empty() {
        "plain".to_string()
    } else {
        mix.chars().filter(|c| c.is_ascii_alphanumeric()).collect()
    }
}

fn study_key(s: &Study) -> String {
    format!("{CACHE_VERSION}-{}-{}-o{}-i{}", s.demo, mix_slug(s.mix), s.n_outer, s.n_inner)
}

#[derive(Serialize, Deserialize)]
struct FieldCache {
    nx: usize,
    ny: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    sweep_seconds: f64,
    /// One letter per node, row-major: i/e/g/f.
    class: String,
    /// Values of the interior nodes, in row-major order.
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct CritCache {
    x: f64,
    y: f64,
    value: f64,
    kind: String,
    gradient_norm: f64,
    multiplicity: usize,
}

#[derive(Serialize, Deserialize, Clone)]
struct OutCache {
    derive_seconds: f64,
    interior: usize,
    failed: usize,
    critical: Vec<CritCache>,
    checked: usize,
    violations: usize,
    min_margin: f64,
}

struct StudyOut {
    sweep_seconds: f64,
    out: OutCache,
    ell: usize,
}

fn class_char(c: PointClass) -> char {
    match c {
        PointClass::Interior => 'i',
        PointClass::Exterior => 'e',
        PointClass::Guard => 'g',
        PointClass::Failed => 'f',
    }
}

fn field_to_cache(field: &ScalarField, sweep_seconds: f64) -> FieldCache {
    let g = &field.grid;
    FieldCache {
        nx: g.nx,
        ny: g.ny,
        x0: g.x0,
        x1: g.x1,
        y0: g.y0,
        y1: g.y1,
        sweep_seconds,
        class: field.class.iter().map(|c| class_char(*c)).collect(),
        values: field
            .values
            .iter()
            .zip(&field.class)
            .filter(|(_, c)| **c == PointClass::Interior)
            .map(|(v, _)| *v)
            .collect(),
    }
}

fn field_from_cache(fc: &FieldCache) -> Result<ScalarField, String> {
    let grid = GridSpec::new(fc.nx, fc.ny, fc.x0, fc.x1, fc.y0, fc.y1).map_err(estr)?;
    let mut values = Vec::with_capacity(fc.nx * fc.ny);
    let mut class = Vec::with_capacity(fc.nx * fc.ny);
    let mut next = fc.values.iter();
    for ch in fc.class.chars() {
        let c = match ch {
            'i' => PointClass::Interior,
            'e' => PointClass::Exterior,
            'g' => PointClass::Guard,
            'f' => PointClass::Failed,
            _ => return Err(format!("bad class letter {ch:?} in cache")),
        };
        class.push(c);
        values.push(if c == PointClass::Interior {
            *next.next().ok_or("cache value list is short")?
        } else {
            f64::NAN
        });
    }
    if class.len() != fc.nx * fc.ny || next.next().is_some() {
        return Err("cache shape mismatch".to_string());
    }
    Ok(ScalarField { grid, values, class })
}

fn kind_str(kind: CriticalKind) -> &'static str {
    match kind {
        CriticalKind::Maximum => "maximum",
        CriticalKind::Minimum => "minimum",
        CriticalKind::Saddle => "saddle",
        CriticalKind::Degenerate => "degenerate",
    }
}

fn kind_from_str(s: &str) -> Result<CriticalKind, String> {
    match s {
        "maximum" => Ok(CriticalKind::Maximum),
        "minimum" => Ok(CriticalKind::Minimum),
        "saddle" => Ok(CriticalKind::Saddle),
        "degenerate" => Ok(CriticalKind::Degenerate),
        _ => Err(format!("bad critical kind {s:?} in cache")),
    }
}

/// The cached critical points as bare `CriticalPoint`s (only the kinds
/// matter for the census).
fn crit_points(out: &OutCache) -> Result<Vec<CriticalPoint>, String> {
    out.critical
        .iter()
        .map(|c| {
            Ok(CriticalPoint {
                location: C64::new(c.x, c.y),
                value: c.value,
                kind: kind_from_str(&c.kind)?,
                gradient_norm: c.gradient_norm,
                hessian: [0.0; 3],
                multiplicity: c.multiplicity,
            })
        })
        .collect()
}

fn run_study(s: &Study) -> Result<StudyOut, String> {
    let dir = cache_dir();
    let key = study_key(s);
    let field_path = dir.join(format!("field-{key}.json"));
    let out_path = dir.join(format!("out-{key}.json"));
    let recount = std::env::var("ACCEPT_RECOUNT").is_ok();

    let spec = demo_domain(s.demo).map_err(estr)?;
    let ell = spec.holes();

    let field_cache: Option<FieldCache> =
        read_json::<FieldCache>(&field_path).filter(|fc| fc.nx == GRID && fc.ny == GRID);
    let out_cache: Option<OutCache> =
        if recount { None } else { read_json::<OutCache>(&out_path) };

    if let (Some(fc), Some(out)) = (&field_cache, &out_cache) {
        return Ok(StudyOut { sweep_seconds: fc.sweep_seconds, out: out.clone(), ell });
    }

    let engine = demo_engine(s.demo, s.mix, s.n_outer, s.n_inner, 1e-12)?;
    let (field, sweep_seconds) = match &field_cache {
        Some(fc) => (field_from_cache(fc)?, fc.sweep_seconds),
        None => {
            progress(&format!("sweeping {}[{}] at n={} ...", s.demo, s.mix, s.n_outer));
            let (lo, hi) = engine.bbox();
            let grid = GridSpec::new(GRID, GRID, lo.re, hi.re, lo.im, hi.im).map_err(estr)?;
            let t = Instant::now();
            let field = sweep(&engine, grid).map_err(estr)?;
            let secs = t.elapsed().as_secs_f64();
            progress(&format!(
                "swept {}[{}] in {secs:.0}s, {} interior nodes",
                s.demo,
                s.mix,
                field.interior_count()
            ));
            write_json(&field_path, &field_to_cache(&field, secs));
            (field, secs)
        }
    };

    progress(&format!("locating critical points of {}[{}] ...", s.demo, s.mix));
    let t = Instant::now();
    let points = find_critical_points(&engine, &field).map_err(estr)?;
    let bound = lower_bound_check(&engine, &field);
    let out = OutCache {
        derive_seconds: t.elapsed().as_secs_f64(),
        interior: field.interior_count(),
        failed: field.failed_count(),
        critical: points
            .iter()
            .map(|p| CritCache {
                x: p.location.re,
                y: p.location.im,
                value: p.value,
                kind: kind_str(p.kind).to_string(),
                gradient_norm: p.gradient_norm,
                multiplicity: p.multiplicity,
            })
            .collect(),
        checked: bound.checked,
        violations: bound.violations,
        min_margin: bound.min_margin,
    };
    progress(&format!(
        "{}[{}]: {} critical points, {} bound violations",
        s.demo,
        s.mix,
        out.critical.len(),
        out.violations
    ));
    write_json(&out_path, &out);
    Ok(StudyOut { sweep_seconds, out, ell })
}

fn collect_studies() -> Vec<(&'static Study, Result<StudyOut, String>)> {
    STUDIES.iter().map(|s| (s, run_study(s))).collect()
}

/// Criterion 6: every demo sweep reproduces the published critical-point
/// census on a 101 x 101 grid, within two hours of wall clock per study.
fn c06_census(studies: &[(&Study, Result<StudyOut, String>)]) -> Check {
    let mut bad: Vec<String> = Vec::new();
    let mut slowest = 0.0f64;
    let mut gated = 0;
    for (s, result) in studies {
        let tag = format!("{}[{}]", s.demo, s.mix);
        let out = match result {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let total_secs = out.sweep_seconds + out.out.derive_seconds;
        slowest = slowest.max(total_secs);
        if total_secs > 7200.0 {
            bad.push(format!("{tag}: took {total_secs:.0}s"));
        }
        if out.out.failed > 0 {
            bad.push(format!("{tag}: {} failed nodes", out.out.failed));
        }
        if s.expect == Expect::Ungated {
            continue;
        }
        gated += 1;
        let points = match crit_points(&out.out) {
            Ok(p) => p,
            Err(e) => {
                bad.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let m = morse_check(&points, out.ell);
        let got = format!(
            "{} maxima, {} minima, {} saddles, {} degenerate",
            m.maxima, m.minima, m.saddles, m.degenerate
        );
        match s.expect {
            Expect::Counts(ma, mi, sa) => {
                if (m.maxima, m.minima, m.saddles, m.degenerate) != (ma, mi, sa, 0) {
                    bad.push(format!("{tag}: want {ma}/{mi}/{sa}/0, got {got}"));
                }
            }
            Expect::Diff(d) => {
                let diff = m.maxima as isize + m.minima as isize - m.saddles as isize;
                if diff != d || m.degenerate != 0 || m.minima != 0 {
                    bad.push(format!("{tag}: want difference {d}, got {got}"));
                }
            }
            Expect::Empty => {
                if !points.is_empty() {
                    bad.push(format!("{tag}: want an empty census, got {got}"));
                }
            }
            Expect::Ungated => {}
        }
    }
    if bad.is_empty() {
        Ok(format!("{gated} sweeps match the expected census; slowest study {slowest:.0}s"))
    } else {
        Err(bad.join("; "))
    }
}

/// Criterion 7: maxima + minima - saddles = 1 - holes on every study with
/// isolated critical points.
fn c07_morse(studies: &[(&Study, Result<StudyOut, String>)]) -> Check {
    let mut bad: Vec<String> = Vec::new();
    let mut checked = 0;
    for (s, result) in studies {
        if s.expect == Expect::Ungated {
            continue;
        }
        let tag = format!("{}[{}]", s.demo, s.mix);
        match result {
            Ok(out) => {
                let m = morse_check(&crit_points(&out.out)?, out.ell);
                checked += 1;
                if !m.euler_ok {
                    bad.push(format!(
                        "{tag}: {} + {} - {} != 1 - {} (degenerate {})",
                        m.maxima, m.minima, m.saddles, out.ell, m.degenerate
                    ));
                }
            }
            Err(e) => bad.push(format!("{tag}: {e}")),
        }
    }
    if bad.is_empty() {
        Ok(format!("{checked} studies satisfy the count identity"))
    } else {
        Err(bad.join("; "))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Want {
    Zero,
    Infinity,
    DirectionDependent,
}

fn want_str(w: Want) -> &'static str {
    match w {
        Want::Zero => "to-zero",
        Want::Infinity => "to-infinity",
        Want::DirectionDependent => "direction-dependent",
    }
}

struct ProbeCheck {
    target: (f64, f64),
    dirs: &'static [(f64, f64)],
    want: Want,
}

struct ProbePlan {
    demo: &'static str,
    mix: &'static str,
    n_outer: usize,
    n_inner: usize,
    start: f64,
    checks: Vec<ProbeCheck>,
}

const AXIS_PX: &[(f64, f64)] = &[(1.0, 0.0)];
const AXIS_NX: &[(f64, f64)] = &[(-1.0, 0.0)];
const AXIS_PY: &[(f64, f64)] = &[(0.0, 1.0)];
const AXIS_NY: &[(f64, f64)] = &[(0.0, -1.0)];
const SIDEWAYS: &[(f64, f64)] = &[(0.0, 1.0), (0.0, -1.0)];
const TIP_LEFT: &[(f64, f64)] = &[(-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
const TIP_RIGHT: &[(f64, f64)] = &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

fn probe_plans() -> Vec<ProbePlan> {
    let ring = |demo: &'static str, inner: (f64, f64), want_inner: Want| {
        let outer_dir = if demo == "annulus" { AXIS_NX } else { AXIS_PX };
        let outer_target = if demo == "annulus" { (1.0, 0.0) } else { (-1.0, 0.0) };
        vec![
            ProbeCheck { target: outer_target, dirs: outer_dir, want: Want::Zero },
            ProbeCheck { target: inner, dirs: AXIS_PX, want: want_inner },
        ]
    };
    let mut plans = Vec::new();
    for (mix, want_inner) in [("c", Want::Zero), ("r", Want::Infinity)] {
        plans.push(ProbePlan {
            demo: "annulus",
            mix,
            n_outer: 1024,
            n_inner: 1024,
            start: 0.5,
            checks: ring("annulus", (0.25, 0.0), want_inner),
        });
        plans.push(ProbePlan {
            demo: "two-circles-a005",
            mix,
            n_outer: 1024,
            n_inner: 1024,
            start: 0.5,
            checks: ring("two-circles-a005", (0.3, 0.0), want_inner),
        });
        plans.push(ProbePlan {
            demo: "two-circles-a05",
            mix,
            n_outer: 1024,
            n_inner: 1024,
            start: 0.5,
            checks: ring("two-circles-a05", (0.75, 0.0), want_inner),
        });
        plans.push(ProbePlan {
            demo: "rect-rect",
            mix,
            n_outer: 2048,
            n_inner: 1024,
            start: 0.8,
            checks: vec![
                ProbeCheck { target: (0.5, 0.0), dirs: AXIS_NY, want: want_inner },
                ProbeCheck { target: (-3.0, 0.0), dirs: AXIS_PX, want: Want::Zero },
            ],
        });
    }
    plans.push(ProbePlan {
        demo: "rect-slit",
        mix: "c",
        n_outer: 2048,
        n_inner: 2048,
        start: 0.9,
        checks: vec![
            ProbeCheck { target: (0.0, 0.0), dirs: TIP_RIGHT, want: Want::Zero },
            ProbeCheck { target: (-1.0, 0.0), dirs: TIP_LEFT, want: Want::Zero },
            ProbeCheck { target: (-0.5, 0.0), dirs: SIDEWAYS, want: Want::Zero },
            ProbeCheck { target: (3.0, 0.0), dirs: AXIS_NX, want: Want::Zero },
        ],
    });
    plans.push(ProbePlan {
        demo: "rect-slit",
        mix: "r",
        n_outer: 2048,
        n_inner: 2048,
        start: 0.9,
        checks: vec![
            ProbeCheck { target: (0.0, 0.0), dirs: TIP_RIGHT, want: Want::DirectionDependent },
            ProbeCheck { target: (-1.0, 0.0), dirs: TIP_LEFT, want: Want::DirectionDependent },
            ProbeCheck { target: (-0.5, 0.0), dirs: AXIS_PY, want: Want::Infinity },
            ProbeCheck { target: (3.0, 0.0), dirs: AXIS_NX, want: Want::Zero },
        ],
    });
    plans
}

#[derive(Serialize, Deserialize)]
struct ProbeOutcome {
    tx: f64,
    ty: f64,
    direction_dependent: bool,
    consensus: Option<String>,
    slopes: Vec<f64>,
}

fn trend_str(t: Trend) -> &'static str {
    match t {
        Trend::ToZero => "to-zero",
        Trend::ToInfinity => "to-infinity",
        Trend::Finite => "finite",
    }
}

fn run_probe_plan(plan: &ProbePlan) -> Result<Vec<ProbeOutcome>, String> {
    let dir = cache_dir();
    let path = dir.join(format!(
        "probes-{CACHE_VERSION}-{}-{}-o{}.json",
        plan.demo,
        mix_slug(plan.mix),
        plan.n_outer
    ));
    if let Some(cached) = read_json::<Vec<ProbeOutcome>>(&path) {
        if cached.len() == plan.checks.len() {
            return Ok(cached);
        }
    }
    progress(&format!("probing {}[{}] at n={} ...", plan.demo, plan.mix, plan.n_outer));
    let engine = demo_engine(plan.demo, plan.mix, plan.n_outer, plan.n_inner, 1e-12)?;
    let dists: Vec<f64> = (0..14).map(|k| plan.start * 0.78f64.powi(k)).collect();
    let mut outcomes = Vec::with_capacity(plan.checks.len());
    for check in &plan.checks {
        let target = C64::new(check.target.0, check.target.1);
        let dirs: Vec<C64> = check.dirs.iter().map(|d| C64::new(d.0, d.1)).collect();
        let report = boundary_probe(&engine, target, &dirs, &dists).map_err(estr)?;
        outcomes.push(ProbeOutcome {
            tx: check.target.0,
            ty: check.target.1,
            direction_dependent: report.direction_dependent,
            consensus: report.consensus.map(|t| trend_str(t).to_string()),
            slopes: report.rays.iter().map(|r| r.slope).collect(),
        });
    }
    write_json(&path, &outcomes);
    Ok(outcomes)
}

/// Criterion 8: approach trends at the boundary match the limit laws:
/// circular values vanish at every wall, radial values blow up at inner
/// walls and vanish at the outer one, and at the tips of a radial slit
/// the limit depends on the approach direction.
fn c08_probes() -> Check {
    let mut bad: Vec<String> = Vec::new();
    let mut checked = 0;
    for plan in probe_plans() {
        let outcomes = match run_probe_plan(&plan) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("{}[{}]: {e}", plan.demo, plan.mix));
                continue;
            }
        };
        for (check, out) in plan.checks.iter().zip(&outcomes) {
            checked += 1;
            let tag = format!(
                "{}[{}] at ({}, {})",
                plan.demo, plan.mix, check.target.0, check.target.1
            );
            let got = match (&out.consensus, out.direction_dependent) {
                (_, true) => "direction-dependent".to_string(),
                (Some(t), false) => t.clone(),
                (None, false) => "unclassified".to_string(),
            };
            let ok = match check.want {
                Want::Zero => out.consensus.as_deref() == Some("to-zero"),
                Want::Infinity => out.consensus.as_deref() == Some("to-infinity"),
                Want::DirectionDependent => out.direction_dependent,
            };
            if !ok {
                bad.push(format!("{tag}: want {}, got {got}", want_str(check.want)));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{checked} approach targets behave as expected"))
    } else {
        Err(bad.join("; "))
    }
}

/// Criterion 9: R(G, α) >= dist(α, ∂G) at every interior node of every
/// demo sweep.
fn c09_lower_bound(studies: &[(&Study, Result<StudyOut, String>)]) -> Check {
    let mut bad: Vec<String> = Vec::new();
    let mut checked = 0usize;
    let mut min_margin = f64::INFINITY;
    for (s, result) in studies {
        let tag = format!("{}[{}]", s.demo, s.mix);
        match result {
            Ok(out) => {
                checked += out.out.checked;
                min_margin = min_margin.min(out.out.min_margin);
                if out.out.violations > 0 {
                    bad.push(format!("{tag}: {} violations", out.out.violations));
                }
            }
            Err(e) => bad.push(format!("{tag}: {e}")),
        }
    }
    if bad.is_empty() {
        Ok(format!("0 violations across {checked} interior nodes; tightest margin {min_margin:.3e}"))
    } else {
        Err(bad.join("; "))
    }
}

/// Criterion 10: the discrete conjugation operator maps cos(kt) to
/// sin(kt) and sin(kt) to -cos(kt) to near machine precision below the
/// Nyquist mode.
fn c10_conjugation() -> Check {
    let mut worst = 0.0f64;
    for n in [64usize, 256] {
        let kmat = conjugation_matrix(n).map_err(estr)?;
        let ts: Vec<f64> =
            (0..n).map(|j| std::f64::consts::TAU * j as f64 / n as f64).collect();
        for k in 0..n / 2 {
            let kf = k as f64;
            let cosk: Vec<f64> = ts.iter().map(|t| (kf * t).cos()).collect();
            let sink: Vec<f64> = ts.iter().map(|t| (kf * t).sin()).collect();
            for i in 0..n {
                let mut from_cos = 0.0;
                let mut from_sin = 0.0;
                for j in 0..n {
                    from_cos += kmat[(i, j)] * cosk[j];
                    from_sin += kmat[(i, j)] * sink[j];
                }
                if k == 0 {
                    worst = worst.max(from_cos.abs());
                } else {
                    worst = worst.max((from_cos - sink[i]).abs());
                    worst = worst.max((from_sin + cosk[i]).abs());
                }
            }
        }
    }
    let detail = format!("worst deviation {worst:.2e} over n = 64 and 256");
    if worst <= 1e-13 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn field_bits(field: &ScalarField) -> Vec<u64> {
    field.values.iter().map(|v| v.to_bits()).collect()
}

fn pool_sweep(engine: &Engine, grid: GridSpec, workers: usize) -> Result<ScalarField, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(estr)?
        .install(|| sweep(engine, grid))
        .map_err(estr)
}

fn eval_radius(demo: &str, mix: &str, n: usize, alpha: C64) -> Result<f64, String> {
    let engine = demo_engine(demo, mix, n, n, 1e-13)?;
    let res: MityukResult = engine.evaluate(alpha).map_err(estr)?;
    Ok(res.radius)
}

/// Criterion 11: sweeps are bitwise independent of the rayon worker
/// count, and on the smooth demos the value is already converged at
/// n = 512 to within 1e-10 of the n = 1024 value.
fn c11_determinism() -> Check {
    for (demo, mix, grid_n) in
        [("three-circles", "c,c", 21usize), ("annulus", "r", 21)]
    {
        let engine = demo_engine(demo, mix, 512, 512, 1e-12)?;
        let (lo, hi) = engine.bbox();
        let grid = GridSpec::new(grid_n, grid_n, lo.re, hi.re, lo.im, hi.im).map_err(estr)?;
        let one = pool_sweep(&engine, grid, 1)?;
        let three = pool_sweep(&engine, grid, 3)?;
        if field_bits(&one) != field_bits(&three) || one.class != three.class {
            return Err(format!("{demo}[{mix}]: sweep bits differ between 1 and 3 workers"));
        }
    }

    let smooth = [
        ("annulus", vec!["c", "r"], C64::new(0.5, 0.0)),
        ("two-circles-a005", vec!["c", "r"], C64::new(-0.5, 0.0)),
        ("two-circles-a05", vec!["c", "r"], C64::new(-0.5, 0.0)),
        ("three-circles", vec!["c,c", "r,r"], C64::new(0.0, 1.5)),
        ("six-circles", vec!["c,c,c,c,c", "r,r,r,r,r"], C64::new(0.3, 0.3)),
        ("seven-circles", vec!["c,c,c,c,c,c", "r,r,r,r,r,r"], C64::new(-0.15, 0.2)),
    ];
    let mut worst = 0.0f64;
    for (demo, mixes, alpha) in smooth {
        for mix in mixes {
            let coarse = eval_radius(demo, mix, 512, alpha)?;
            let fine = eval_radius(demo, mix, 1024, alpha)?;
            worst = worst.max((coarse - fine).abs());
        }
    }
    let detail =
        format!("sweep bits match across worker counts; worst |R(512) - R(1024)| = {worst:.2e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
