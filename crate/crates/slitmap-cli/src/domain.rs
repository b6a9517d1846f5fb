//! Domain description files and their translation into solver engines.
//!
//! A domain is a JSON object with an outer boundary shape and a list of
//! inner ones. A degenerate inner component may be a straight slit, in
//! which case the domain is handled through the open-up map and may not
//! contain any further inner components.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slitmap::analysis::FieldEval;
use slitmap::geometry::{
    assemble_domain, make_circle, make_polygon, make_smooth_curve, ParamBoundary,
};
use slitmap::mityuk::{MityukEngine, MityukResult, OpenUpEngine, SlitSpec};
use slitmap::solver::{SolveMethod, SolverConfig};
use slitmap::C64;

/// An error with a short machine-readable code alongside the message.
/// Pipeline failures carry the library error's code, configuration
/// problems get their own.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<slitmap::Error> for CliError {
    fn from(e: slitmap::Error) -> Self {
        let code = match &e {
            slitmap::Error::OddNodeCount(_) => "node-count",
            slitmap::Error::DegenerateCurve(_) => "degenerate-curve",
            slitmap::Error::VanishingDerivative { .. } => "vanishing-derivative",
            slitmap::Error::DomainLayout(_) => "domain-layout",
            slitmap::Error::NotInterior { .. } => "point-not-interior",
            slitmap::Error::NearBoundary { .. } => "point-near-boundary",
            slitmap::Error::SlitSpec(_) => "slit-spec",
            slitmap::Error::UnwrapDefect { .. } => "unwrap-defect",
            slitmap::Error::Solve(_) => "solve-failed",
            slitmap::Error::Dimension(_) => "dimension-mismatch",
            slitmap::Error::OpenUp(_) => "open-up",
            slitmap::Error::DomainFile(_) => "domain-file",
            slitmap::Error::OracleInput(_) => "oracle-input",
            slitmap::Error::Analysis(_) => "analysis",
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One boundary component in a domain file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grading: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    /// A straight slit, allowed only as the single inner component.
    Slit { a: [f64; 2], b: [f64; 2] },
}

/// A complete domain description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    /// Default node count per component; the command line overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Default slit kinds, one token per inner component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<String>>,
    pub outer: ShapeSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inners: Vec<ShapeSpec>,
}

impl DomainSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::new("domain-file", format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::new("domain-file", format!("cannot parse {}: {e}", path.display()))
        })
    }

    /// Number of holes; a slit counts as one.
    pub fn holes(&self) -> usize {
        self.inners.len()
    }
}

fn cx(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn build_boundary(shape: &ShapeSpec, n: usize) -> CliResult<ParamBoundary> {
    match shape {
        ShapeSpec::Circle { center, radius, .. } => {
            Ok(make_circle(cx(*center), *radius, true, n)?)
        }
        ShapeSpec::Ellipse { center, semi_axes, .. } => {
            let c = cx(*center);
            let [a, b] = *semi_axes;
            if a <= 0.0 || b <= 0.0 {
                return Err(CliError::new("domain-file", "ellipse semi-axes must be positive"));
            }
            Ok(make_smooth_curve(
                |t| {
                    let (s, co) = t.sin_cos();
                    (
                        c + C64::new(a * co, b * s),
                        C64::new(-a * s, b * co),
                        C64::new(-a * co, -b * s),
                    )
                },
                n,
            )?)
        }
        ShapeSpec::Polygon { vertices, grading, .. } => {
            let verts: Vec<C64> = vertices.iter().map(|&p| cx(p)).collect();
            Ok(make_polygon(&verts, n, grading.unwrap_or(3))?)
        }
        ShapeSpec::Slit { .. } => {
            Err(CliError::new("domain-file", "a slit cannot be built as a curve"))
        }
    }
}

fn shape_n(shape: &ShapeSpec) -> Option<usize> {
    match shape {
        ShapeSpec::Circle { n, .. }
        | ShapeSpec::Ellipse { n, .. }
        | ShapeSpec::Polygon { n, .. } => *n,
        ShapeSpec::Slit { .. } => None,
    }
}

/// Parse one slit-kind token. Accepted spellings: `c`, `circular`, `pi/2`
/// for a circular slit; `r`, `radial`, `0` for a radial one.
pub fn parse_theta_token(tok: &str) -> CliResult<f64> {
    match tok.trim() {
        "c" | "circ" | "circular" | "pi/2" => Ok(FRAC_PI_2),
        "r" | "rad" | "radial" | "0" => Ok(0.0),
        other => Err(CliError::new(
            "slit-spec",
            format!("unknown slit kind {other:?}, expected c/circular or r/radial"),
        )),
    }
}

/// Parse a comma-separated slit list against the number of holes. A single
/// token broadcasts to every hole.
pub fn parse_thetas(list: &str, holes: usize) -> CliResult<Vec<f64>> {
    if holes == 0 {
        if list.is_empty() {
            return Ok(Vec::new());
        }
        return Err(CliError::new("slit-arity", "simply connected domain takes no slit list"));
    }
    let tokens: Vec<&str> = list.split(',').filter(|t| !t.trim().is_empty()).collect();
    if tokens.len() == 1 && holes > 1 {
        let t = parse_theta_token(tokens[0])?;
        return Ok(vec![t; holes]);
    }
    if tokens.len() != holes {
        return Err(CliError::new(
            "slit-arity",
            format!("{} slit kinds given for {} inner components", tokens.len(), holes),
        ));
    }
    tokens.iter().map(|t| parse_theta_token(t)).collect()
}

/// Canonical short form of a slit list, used when echoing configs.
pub fn format_thetas(thetas: &[f64]) -> String {
    thetas
        .iter()
        .map(|&t| if t == 0.0 { "r" } else { "c" })
        .collect::<Vec<_>>()
        .join(",")
}

/// A ready-to-evaluate solver for either a Jordan-curve domain or a slit
/// domain handled through the open-up map.
pub enum Engine {
    Plain(MityukEngine),
    OpenUp(OpenUpEngine),
}

/// Resolve the slit kinds for a domain: the command-line list wins, then
/// the file's, then all-circular.
pub fn resolve_thetas(theta_flag: Option<&str>, spec: &DomainSpec) -> CliResult<Vec<f64>> {
    let holes = spec.holes();
    match (theta_flag, &spec.thetas) {
        (Some(list), _) => parse_thetas(list, holes),
        (None, Some(tokens)) => parse_thetas(&tokens.join(","), holes),
        (None, None) => Ok(vec![FRAC_PI_2; holes]),
    }
}

impl Engine {
    /// Build from a description with resolved slit kinds. `n_flag`
    /// overrides every node count in the file.
    pub fn build(
        spec: &DomainSpec,
        n_flag: Option<usize>,
        thetas: &[f64],
        cfg: SolverConfig,
    ) -> CliResult<Engine> {
        if thetas.len() != spec.holes() {
            return Err(CliError::new(
                "slit-arity",
                format!("{} slit kinds given for {} inner components", thetas.len(), spec.holes()),
            ));
        }
        let file_n = spec.n.unwrap_or(256);
        let pick_n = |shape: &ShapeSpec| n_flag.or_else(|| shape_n(shape)).unwrap_or(file_n);

        let slits: Vec<&ShapeSpec> =
            spec.inners.iter().filter(|s| matches!(s, ShapeSpec::Slit { .. })).collect();
        match slits.len() {
            0 => {
                let outer = build_boundary(&spec.outer, pick_n(&spec.outer))?;
                let mut inners = Vec::with_capacity(spec.inners.len());
                for shape in &spec.inners {
                    inners.push(build_boundary(shape, pick_n(shape))?);
                }
                let dom = assemble_domain(outer, inners)?;
                let engine = MityukEngine::new(dom, SlitSpec::new(thetas.to_vec())?, cfg)?;
                Ok(Engine::Plain(engine))
            }
            1 if spec.inners.len() == 1 => {
                let ShapeSpec::Slit { a, b } = slits[0] else { unreachable!() };
                let outer = build_boundary(&spec.outer, pick_n(&spec.outer))?;
                let engine = OpenUpEngine::new(outer, (cx(*a), cx(*b)), thetas[0], cfg)?;
                Ok(Engine::OpenUp(engine))
            }
            _ => Err(CliError::new(
                "domain-file",
                "a slit must be the only inner component of its domain",
            )),
        }
    }

    pub fn evaluate(&self, alpha: C64) -> slitmap::Result<MityukResult> {
        match self {
            Engine::Plain(e) => e.evaluate(alpha),
            Engine::OpenUp(e) => e.evaluate(alpha),
        }
    }

    /// Number of holes of the physical domain.
    pub fn holes(&self) -> usize {
        match self {
            Engine::Plain(e) => e.domain().ell,
            Engine::OpenUp(_) => 1,
        }
    }

    /// Bounding box of the physical domain.
    pub fn bbox(&self) -> (C64, C64) {
        match self {
            Engine::Plain(e) => e.domain().bbox(),
            Engine::OpenUp(e) => e.outer().bbox(),
        }
    }
}

impl FieldEval for Engine {
    fn contains(&self, z: C64) -> bool {
        match self {
            Engine::Plain(e) => e.contains(z),
            Engine::OpenUp(e) => FieldEval::contains(e, z),
        }
    }

    fn dist_to_boundary(&self, z: C64) -> f64 {
        match self {
            Engine::Plain(e) => FieldEval::dist_to_boundary(e, z),
            Engine::OpenUp(e) => FieldEval::dist_to_boundary(e, z),
        }
    }

    fn node_gap(&self) -> f64 {
        match self {
            Engine::Plain(e) => e.node_gap(),
            Engine::OpenUp(e) => e.node_gap(),
        }
    }

    fn value_warm(&self, z: C64, warm: Option<&[f64]>) -> slitmap::Result<(f64, Vec<f64>)> {
        match self {
            Engine::Plain(e) => e.value_warm(z, warm),
            Engine::OpenUp(e) => e.value_warm(z, warm),
        }
    }
}

/// Parse `--method` into solver settings.
pub fn solver_config(method: &str, tol: f64) -> CliResult<SolverConfig> {
    let method = match method {
        "direct" => SolveMethod::DenseDirect,
        "iterative" => SolveMethod::Gmres,
        other => {
            return Err(CliError::new(
                "config",
                format!("unknown method {other:?}, expected direct or iterative"),
            ))
        }
    };
    if !(tol > 0.0) {
        return Err(CliError::new("config", "tolerance must be positive"));
    }
    Ok(SolverConfig { method, tol, max_iter: 400, restart: None })
}

/// Parse `--alpha RE,IM` (the imaginary part may be omitted).
pub fn parse_alpha(s: &str) -> CliResult<C64> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || CliError::new("config", format!("cannot parse point {s:?}, expected RE,IM"));
    match parts.as_slice() {
        [re] => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(C64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_lists_parse_and_broadcast() {
        assert_eq!(parse_thetas("c", 3).unwrap(), vec![FRAC_PI_2; 3]);
        assert_eq!(parse_thetas("c,r", 2).unwrap(), vec![FRAC_PI_2, 0.0]);
        assert_eq!(parse_thetas("", 0).unwrap(), Vec::<f64>::new());
        assert_eq!(parse_thetas("c,r", 3).unwrap_err().code, "slit-arity");
        assert_eq!(parse_thetas("x", 1).unwrap_err().code, "slit-spec");
    }

    #[test]
    fn domain_json_round_trips() {
        let spec = DomainSpec {
            comment: Some("unit test".into()),
            n: Some(64),
            thetas: Some(vec!["c".into()]),
            outer: ShapeSpec::Circle { center: [0.0, 0.0], radius: 1.0, n: None },
            inners: vec![ShapeSpec::Circle { center: [0.5, 0.0], radius: 0.25, n: Some(128) }],
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: DomainSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn slit_domains_must_be_doubly_connected() {
        let spec = DomainSpec {
            comment: None,
            n: Some(64),
            thetas: None,
            outer: ShapeSpec::Circle { center: [0.0, 0.0], radius: 2.0, n: None },
            inners: vec![
                ShapeSpec::Slit { a: [-0.5, 0.0], b: [0.5, 0.0] },
                ShapeSpec::Circle { center: [0.0, 1.0], radius: 0.2, n: None },
            ],
        };
        let thetas = resolve_thetas(None, &spec).unwrap();
        let err = Engine::build(&spec, None, &thetas, SolverConfig::default()).err().unwrap();
        assert_eq!(err.code, "domain-file");
    }
}
