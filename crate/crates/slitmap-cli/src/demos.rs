//! Built-in demo domains.
//!
//! Each demo carries its geometry constants, the slit mixes it ships with,
//! and a reference interior point used for convergence checks. The same
//! definitions back the `demo` subcommand, the `--demo` flag of the other
//! subcommands, and the acceptance suite.

use crate::domain::{CliError, CliResult, DomainSpec, ShapeSpec};

fn circle(center: [f64; 2], radius: f64) -> ShapeSpec {
    ShapeSpec::Circle { center, radius, n: None }
}

fn polygon(vertices: &[[f64; 2]]) -> ShapeSpec {
    ShapeSpec::Polygon { vertices: vertices.to_vec(), grading: None, n: None }
}

fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> ShapeSpec {
    polygon(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
}

/// A named demo: geometry, the slit mixes studied for it, and a reference
/// point well inside the domain.
#[derive(Debug)]
pub struct Demo {
    pub name: &'static str,
    pub about: &'static str,
    /// Slit lists (in `parse_thetas` syntax), one study per entry.
    pub mixes: &'static [&'static str],
    pub reference_alpha: [f64; 2],
}

pub const DEMOS: &[Demo] = &[
    Demo {
        name: "disk",
        about: "the unit disk, where the radius is known in closed form",
        mixes: &[""],
        reference_alpha: [0.3, 0.2],
    },
    Demo {
        name: "annulus",
        about: "0.25 < |z| < 1, the rotation-symmetric base case",
        mixes: &["c", "r"],
        reference_alpha: [0.5, 0.0],
    },
    Demo {
        name: "two-circles-a005",
        about: "unit disk with a hole of radius 0.25 centered at 0.05",
        mixes: &["c", "r"],
        reference_alpha: [-0.5, 0.0],
    },
    Demo {
        name: "two-circles-a05",
        about: "unit disk with a hole of radius 0.25 centered at 0.5",
        mixes: &["c", "r"],
        reference_alpha: [-0.5, 0.0],
    },
    Demo {
        name: "rect-slit",
        about: "the rectangle -3 < x < 3, -1 < y < 1 minus the slit [-1, 0]",
        mixes: &["c", "r"],
        reference_alpha: [1.5, 0.0],
    },
    Demo {
        name: "rect-rect",
        about: "the same rectangle minus the rectangle [0, 1] x [0, 0.5]",
        mixes: &["c", "r"],
        reference_alpha: [-1.5, 0.0],
    },
    Demo {
        name: "tri-tri",
        about: "triangle 0, 5, 4+5i minus triangle 3+3i, 4+3i, 3+i",
        mixes: &["c", "r"],
        reference_alpha: [2.0, 3.0],
    },
    Demo {
        name: "sq-sq",
        about: "square with vertices (+-1, +-1) minus the quarter-scale square",
        mixes: &["c", "r"],
        reference_alpha: [0.55, 0.0],
    },
    Demo {
        name: "sq-circle",
        about: "unit disk minus the square with vertices (+-0.25, +-0.25)",
        mixes: &["c", "r"],
        reference_alpha: [0.55, 0.0],
    },
    Demo {
        name: "circle-sq",
        about: "square with vertices (+-1, +-1) minus the disk of radius 0.25",
        mixes: &["c", "r"],
        reference_alpha: [0.55, 0.0],
    },
    Demo {
        name: "three-circles",
        about: "|z| < 3 minus unit disks centered at -1.5 and 1.5",
        mixes: &["c,c", "r,r", "c,r"],
        reference_alpha: [0.0, 1.5],
    },
    Demo {
        name: "six-circles",
        about: "unit disk minus five holes of radius 0.2 at 0, +-0.6, +-0.6i",
        mixes: &["c,c,c,c,c", "r,r,r,r,r", "c,r,c,r,c"],
        reference_alpha: [0.3, 0.3],
    },
    Demo {
        name: "seven-circles",
        about: "unit disk minus six scattered holes of radius 0.15",
        mixes: &["c,c,c,c,c,c", "r,r,r,r,r,r", "c,c,c,r,r,r"],
        reference_alpha: [-0.15, 0.2],
    },
];

pub fn demo_names() -> Vec<&'static str> {
    DEMOS.iter().map(|d| d.name).collect()
}

pub fn find_demo(name: &str) -> CliResult<&'static Demo> {
    DEMOS.iter().find(|d| d.name == name).ok_or_else(|| {
        CliError::new(
            "unknown-demo",
            format!("no demo named {name:?}; available: {}", demo_names().join(", ")),
        )
    })
}

/// Geometry of a demo as a regular domain description.
pub fn demo_domain(name: &str) -> CliResult<DomainSpec> {
    let demo = find_demo(name)?;
    let (outer, inners): (ShapeSpec, Vec<ShapeSpec>) = match name {
        "disk" => (circle([0.0, 0.0], 1.0), vec![]),
        "annulus" => (circle([0.0, 0.0], 1.0), vec![circle([0.0, 0.0], 0.25)]),
        "two-circles-a005" => (circle([0.0, 0.0], 1.0), vec![circle([0.05, 0.0], 0.25)]),
        "two-circles-a05" => (circle([0.0, 0.0], 1.0), vec![circle([0.5, 0.0], 0.25)]),
        "rect-slit" => (
            rect(-3.0, 3.0, -1.0, 1.0),
            vec![ShapeSpec::Slit { a: [-1.0, 0.0], b: [0.0, 0.0] }],
        ),
        "rect-rect" => (rect(-3.0, 3.0, -1.0, 1.0), vec![rect(0.0, 1.0, 0.0, 0.5)]),
        "tri-tri" => (
            polygon(&[[0.0, 0.0], [5.0, 0.0], [4.0, 5.0]]),
            vec![polygon(&[[3.0, 3.0], [4.0, 3.0], [3.0, 1.0]])],
        ),
        "sq-sq" => (rect(-1.0, 1.0, -1.0, 1.0), vec![rect(-0.25, 0.25, -0.25, 0.25)]),
        "sq-circle" => (circle([0.0, 0.0], 1.0), vec![rect(-0.25, 0.25, -0.25, 0.25)]),
        "circle-sq" => (rect(-1.0, 1.0, -1.0, 1.0), vec![circle([0.0, 0.0], 0.25)]),
        "three-circles" => (
            circle([0.0, 0.0], 3.0),
            vec![circle([-1.5, 0.0], 1.0), circle([1.5, 0.0], 1.0)],
        ),
        "six-circles" => (
            circle([0.0, 0.0], 1.0),
            vec![
                circle([0.0, 0.0], 0.2),
                circle([0.6, 0.0], 0.2),
                circle([0.0, 0.6], 0.2),
                circle([-0.6, 0.0], 0.2),
                circle([0.0, -0.6], 0.2),
            ],
        ),
        "seven-circles" => (
            circle([0.0, 0.0], 1.0),
            vec![
                circle([0.2, 0.0], 0.15),
                circle([0.5, 0.5], 0.15),
                circle([-0.1, 0.5], 0.15),
                circle([-0.6, 0.1], 0.15),
                circle([-0.4, -0.5], 0.15),
                circle([0.3, -0.6], 0.15),
            ],
        ),
        _ => unreachable!("find_demo validated the name"),
    };
    Ok(DomainSpec {
        comment: Some(demo.about.to_string()),
        n: None,
        thetas: None,
        outer,
        inners,
    })
}

/// Canonical boundary probes for a demo: a boundary target point and the
/// inward unit directions to approach it from. Distances come from the
/// caller's ladder.
pub fn demo_probes(name: &str) -> Vec<([f64; 2], Vec<[f64; 2]>)> {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        "disk" => vec![([1.0, 0.0], vec![[-1.0, 0.0]])],
        "annulus" => vec![
            ([1.0, 0.0], vec![[-1.0, 0.0]]),
            ([0.25, 0.0], vec![[1.0, 0.0]]),
        ],
        "two-circles-a005" => vec![
            ([-1.0, 0.0], vec![[1.0, 0.0]]),
            ([0.3, 0.0], vec![[1.0, 0.0]]),
        ],
        "two-circles-a05" => vec![
            ([-1.0, 0.0], vec![[1.0, 0.0]]),
            ([0.75, 0.0], vec![[1.0, 0.0]]),
        ],
        "rect-slit" => vec![
            ([0.0, 0.0], vec![[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
            ([-1.0, 0.0], vec![[-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
            ([-0.5, 0.0], vec![[0.0, 1.0], [0.0, -1.0]]),
            ([3.0, 0.0], vec![[-1.0, 0.0]]),
        ],
        "rect-rect" => vec![
            ([1.0, 0.5], vec![[1.0, 0.0], [0.0, 1.0], [d, d]]),
            ([0.5, 0.5], vec![[0.0, 1.0]]),
            ([-3.0, 0.0], vec![[1.0, 0.0]]),
        ],
        "three-circles" => vec![
            ([3.0, 0.0], vec![[-1.0, 0.0]]),
            ([2.5, 0.0], vec![[1.0, 0.0]]),
        ],
        _ => Vec::new(),
    }
}
