//! Output records and writers.
//!
//! JSON reports embed the configuration that produced them under a
//! `config` key; the `rerun` subcommand reads that key back and repeats
//! the run. All output is deterministic: no timestamps, no environment
//! dependent fields, and floating point numbers are printed in shortest
//! round-trip form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slitmap::analysis::{
    BoundReport, CriticalKind, CriticalPoint, MorseSummary, PointClass, ProbeReport, ScalarField,
    Trend,
};
use slitmap::mityuk::{MityukResult, SlitParam};

use crate::domain::{CliError, CliResult};

/// The invocation echoed into every JSON report. Exactly one of `alpha`,
/// `grid`, `path` is set except for demo runs, which have their own mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<String>,
    pub theta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub method: String,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlitParamRecord {
    pub kind: String,
    pub value: f64,
}

/// A single evaluation, flattened for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputeRecord {
    pub alpha: [f64; 2],
    pub radius: f64,
    pub m: f64,
    pub h0: f64,
    pub c: f64,
    pub slit_params: Vec<SlitParamRecord>,
    pub constancy_residuals: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl From<&MityukResult> for ComputeRecord {
    fn from(r: &MityukResult) -> Self {
        ComputeRecord {
            alpha: [r.alpha.re, r.alpha.im],
            radius: r.radius,
            m: r.m,
            h0: r.h0,
            c: r.c,
            slit_params: r
                .slit_params
                .iter()
                .map(|p| match p {
                    SlitParam::CircularRadius(v) => {
                        SlitParamRecord { kind: "circular-radius".into(), value: *v }
                    }
                    SlitParam::RadialAngle(v) => {
                        SlitParamRecord { kind: "radial-angle".into(), value: *v }
                    }
                })
                .collect(),
            constancy_residuals: r.constancy_residuals.clone(),
            residual: r.residual,
            iterations: r.iterations,
        }
    }
}

#[derive(Serialize)]
pub struct ComputeReport {
    pub config: RunConfig,
    pub result: ComputeRecord,
}

/// Grid and values, with `null` at non-interior nodes.
#[derive(Serialize)]
pub struct FieldRecord {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub values: Vec<Option<f64>>,
    pub class: Vec<String>,
}

impl From<&ScalarField> for FieldRecord {
    fn from(f: &ScalarField) -> Self {
        FieldRecord {
            nx: f.grid.nx,
            ny: f.grid.ny,
            x0: f.grid.x0,
            x1: f.grid.x1,
            y0: f.grid.y0,
            y1: f.grid.y1,
            values: f.values.iter().map(|v| if v.is_finite() { Some(*v) } else { None }).collect(),
            class: f.class.iter().map(|c| class_str(*c).to_string()).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct SweepSummary {
    pub interior: usize,
    pub failed: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl From<&ScalarField> for SweepSummary {
    fn from(f: &ScalarField) -> Self {
        let range = f.value_range();
        SweepSummary {
            interior: f.interior_count(),
            failed: f.failed_count(),
            min: range.map(|r| r.0),
            max: range.map(|r| r.1),
        }
    }
}

#[derive(Serialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub summary: SweepSummary,
    pub field: FieldRecord,
}

#[derive(Serialize)]
pub struct CriticalRecord {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub kind: String,
    pub gradient_norm: f64,
    pub multiplicity: usize,
}

impl From<&CriticalPoint> for CriticalRecord {
    fn from(p: &CriticalPoint) -> Self {
        CriticalRecord {
            x: p.location.re,
            y: p.location.im,
            value: p.value,
            kind: kind_str(p.kind).to_string(),
            gradient_norm: p.gradient_norm,
            multiplicity: p.multiplicity,
        }
    }
}

#[derive(Serialize)]
pub struct MorseRecord {
    pub maxima: usize,
    pub minima: usize,
    pub saddles: usize,
    pub degenerate: usize,
    pub euler_ok: bool,
}

impl From<&MorseSummary> for MorseRecord {
    fn from(m: &MorseSummary) -> Self {
        MorseRecord {
            maxima: m.maxima,
            minima: m.minima,
            saddles: m.saddles,
            degenerate: m.degenerate,
            euler_ok: m.euler_ok,
        }
    }
}

#[derive(Serialize)]
pub struct CriticalReport {
    pub config: RunConfig,
    pub summary: SweepSummary,
    pub critical_points: Vec<CriticalRecord>,
    pub morse: MorseRecord,
}

#[derive(Serialize)]
pub struct RayRecord {
    pub direction: [f64; 2],
    pub slope: f64,
    pub trend: String,
    pub last_value: f64,
    pub samples: Vec<[f64; 2]>,
}

#[derive(Serialize)]
pub struct ProbeRecord {
    pub target: [f64; 2],
    pub rays: Vec<RayRecord>,
    pub direction_dependent: bool,
    pub consensus: Option<String>,
}

impl From<&ProbeReport> for ProbeRecord {
    fn from(p: &ProbeReport) -> Self {
        ProbeRecord {
            target: [p.target.re, p.target.im],
            rays: p
                .rays
                .iter()
                .map(|r| RayRecord {
                    direction: [r.direction.re, r.direction.im],
                    slope: r.slope,
                    trend: trend_str(r.trend).to_string(),
                    last_value: r.last_value,
                    samples: r.samples.iter().map(|&(d, v)| [d, v]).collect(),
                })
                .collect(),
            direction_dependent: p.direction_dependent,
            consensus: p.consensus.map(|t| trend_str(t).to_string()),
        }
    }
}

#[derive(Serialize)]
pub struct ProbeOut {
    pub config: RunConfig,
    pub probe: ProbeRecord,
}

#[derive(Serialize)]
pub struct BoundRecord {
    pub checked: usize,
    pub violations: usize,
    pub min_margin: f64,
    pub tightest: Option<TightestRecord>,
}

#[derive(Serialize)]
pub struct TightestRecord {
    pub alpha: [f64; 2],
    pub radius: f64,
    pub distance: f64,
}

impl From<&BoundReport> for BoundRecord {
    fn from(b: &BoundReport) -> Self {
        BoundRecord {
            checked: b.checked,
            violations: b.violations,
            min_margin: b.min_margin,
            tightest: b.tightest.map(|(a, r, d)| TightestRecord {
                alpha: [a.re, a.im],
                radius: r,
                distance: d,
            }),
        }
    }
}

#[derive(Serialize)]
pub struct BoundOut {
    pub config: RunConfig,
    pub bound: BoundRecord,
}

/// One slit mix of a demo study.
#[derive(Serialize)]
pub struct DemoStudy {
    pub theta: String,
    pub summary: SweepSummary,
    pub critical_points: Vec<CriticalRecord>,
    pub morse: MorseRecord,
    pub bound: BoundRecord,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeRecord>,
    pub field_file: String,
}

#[derive(Serialize)]
pub struct DemoReport {
    pub config: RunConfig,
    pub name: String,
    pub about: String,
    pub studies: Vec<DemoStudy>,
}

pub fn kind_str(k: CriticalKind) -> &'static str {
    match k {
        CriticalKind::Maximum => "maximum",
        CriticalKind::Minimum => "minimum",
        CriticalKind::Saddle => "saddle",
        CriticalKind::Degenerate => "degenerate",
    }
}

pub fn trend_str(t: Trend) -> &'static str {
    match t {
        Trend::ToZero => "to-zero",
        Trend::ToInfinity => "to-infinity",
        Trend::Finite => "finite",
    }
}

pub fn class_str(c: PointClass) -> &'static str {
    match c {
        PointClass::Interior => "interior",
        PointClass::Exterior => "exterior",
        PointClass::Guard => "guard",
        PointClass::Failed => "failed",
    }
}

/// Field export: one row per grid node, row-major from the bottom row up,
/// with an empty value at non-interior nodes.
pub fn field_csv(field: &ScalarField) -> String {
    let mut out = String::from("x,y,class,value\n");
    for iy in 0..field.grid.ny {
        for ix in 0..field.grid.nx {
            let z = field.grid.point(ix, iy);
            let v = field.value(ix, iy);
            let class = class_str(field.class_at(ix, iy));
            if v.is_finite() {
                out.push_str(&format!("{},{},{},{}\n", z.re, z.im, class, v));
            } else {
                out.push_str(&format!("{},{},{},\n", z.re, z.im, class));
            }
        }
    }
    out
}

pub fn compute_csv(r: &ComputeRecord) -> String {
    let mut header = String::from("alpha_re,alpha_im,radius,m,h0,c,residual,iterations");
    let mut row = format!(
        "{},{},{},{},{},{},{},{}",
        r.alpha[0], r.alpha[1], r.radius, r.m, r.h0, r.c, r.residual, r.iterations
    );
    for (k, p) in r.slit_params.iter().enumerate() {
        header.push_str(&format!(",slit{}_kind,slit{}_value", k + 1, k + 1));
        row.push_str(&format!(",{},{}", p.kind, p.value));
    }
    format!("{header}\n{row}\n")
}

pub fn critical_csv(points: &[CriticalRecord]) -> String {
    let mut out = String::from("x,y,value,kind,gradient_norm,multiplicity\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.x, p.y, p.value, p.kind, p.gradient_norm, p.multiplicity
        ));
    }
    out
}

pub fn probe_csv(p: &ProbeRecord) -> String {
    let mut out = String::from("ray,dir_re,dir_im,dist,value\n");
    for (k, ray) in p.rays.iter().enumerate() {
        for s in &ray.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k, ray.direction[0], ray.direction[1], s[0], s[1]
            ));
        }
    }
    out
}

pub fn bound_csv(b: &BoundRecord) -> String {
    let mut out = String::from("checked,violations,min_margin,alpha_re,alpha_im,radius,distance\n");
    match &b.tightest {
        Some(t) => out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.checked, b.violations, b.min_margin, t.alpha[0], t.alpha[1], t.radius, t.distance
        )),
        None => out.push_str(&format!("{},{},{},,,,\n", b.checked, b.violations, b.min_margin)),
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string(value)
        .map_err(|e| CliError::new("serialize", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Write to the file, or to stdout when no path is given.
pub fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(|e| {
                        CliError::new("io", format!("cannot create {}: {e}", parent.display()))
                    })?;
                }
            }
            fs::write(path, text).map_err(|e| {
                CliError::new("io", format!("cannot write {}: {e}", path.display()))
            })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
