//! Boundary parametrizations and domain assembly.
//!
//! Every boundary component is a closed curve sampled at nodes that are
//! uniform in the parameter `t in [0, 2π)`. Smooth components carry their
//! exact derivatives at the nodes. Polygonal components are parametrized
//! with a graded substitution that drives the first `grading_order - 1`
//! derivatives of the parametrization to zero at each corner, so the same
//! trapezoidal-rule machinery applies unchanged; the corner nodes
//! themselves are flagged and handled specially by the kernel assembly.
//!
//! The module also provides the open-up map `Ψ₂` that turns a straight
//! slit into a circle, which reduces a slit domain to an ordinary domain
//! bounded by closed curves.

use crate::{C64, Error, Result};
use std::f64::consts::PI;

/// How a component was constructed. The structured operator backend
/// exploits circles; everything else is treated as a generic curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle { center: C64, radius: f64, ccw: bool },
    Polygon { vertices: Vec<C64> },
    Curve,
}

/// Corner locations (in parameter space) and the grading order of the
/// substitution used around them.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSpec {
    pub corner_params: Vec<f64>,
    pub grading_order: u32,
}

/// One closed boundary component sampled at `n` nodes uniform in the
/// parameter.
///
/// `nodes[i] = η(t_i)`, `first_derivs[i] = η'(t_i)`,
/// `second_derivs[i] = η''(t_i)` with `t_i = 2π i / n`. At corner nodes of
/// a graded polygon the first two derivatives vanish identically and
/// `corner_mask[i]` is set.
#[derive(Debug, Clone)]
pub struct ParamBoundary {
    pub component_index: usize,
    pub nodes: Vec<C64>,
    pub first_derivs: Vec<C64>,
    pub second_derivs: Vec<C64>,
    pub params: Vec<f64>,
    pub corner_mask: Vec<bool>,
    pub corners: Option<CornerSpec>,
    pub shape: Shape,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::OddNodeCount(n));
    }
    Ok(())
}

fn uniform_params(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

impl ParamBoundary {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Build a component from externally computed samples. Derivatives must
    /// be nonzero away from flagged corner nodes.
    pub fn from_samples(
        nodes: Vec<C64>,
        first_derivs: Vec<C64>,
        second_derivs: Vec<C64>,
        corner_mask: Vec<bool>,
        shape: Shape,
    ) -> Result<Self> {
        let n = nodes.len();
        check_n(n)?;
        if first_derivs.len() != n || second_derivs.len() != n || corner_mask.len() != n {
            return Err(Error::Dimension(format!(
                "sample arrays disagree in length with {n} nodes"
            )));
        }
        for i in 0..n {
            if !corner_mask[i] && first_derivs[i].norm() == 0.0 {
                return Err(Error::VanishingDerivative { component: 0, index: i });
            }
        }
        Ok(ParamBoundary {
            component_index: 0,
            nodes,
            first_derivs,
            second_derivs,
            params: uniform_params(n),
            corner_mask: corner_mask.clone(),
            corners: None,
            shape,
        })
    }

    /// Signed area enclosed by the node polyline (shoelace). Positive for
    /// counterclockwise orientation.
    pub fn signed_area(&self) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.nodes[i];
            let b = self.nodes[(i + 1) % n];
            acc += a.re * b.im - a.im * b.re;
        }
        0.5 * acc
    }

    /// The same curve traversed in the opposite direction,
    /// `η̃(t) = η(2π - t)`.
    pub fn reversed(&self) -> Self {
        let n = self.n();
        let pick = |j: usize| (n - j) % n;
        let shape = match &self.shape {
            Shape::Circle { center, radius, ccw } => Shape::Circle {
                center: *center,
                radius: *radius,
                ccw: !ccw,
            },
            Shape::Polygon { vertices } => {
                let mut v = vertices.clone();
                v[1..].reverse();
                Shape::Polygon { vertices: v }
            }
            Shape::Curve => Shape::Curve,
        };
        let corners = self.corners.as_ref().map(|c| CornerSpec {
            corner_params: c
                .corner_params
                .iter()
                .map(|&t| if t == 0.0 { 0.0 } else { 2.0 * PI - t })
                .collect(),
            grading_order: c.grading_order,
        });
        ParamBoundary {
            component_index: self.component_index,
            nodes: (0..n).map(|j| self.nodes[pick(j)]).collect(),
            first_derivs: (0..n).map(|j| -self.first_derivs[pick(j)]).collect(),
            second_derivs: (0..n).map(|j| self.second_derivs[pick(j)]).collect(),
            params: self.params.clone(),
            corner_mask: (0..n).map(|j| self.corner_mask[pick(j)]).collect(),
            corners,
            shape,
        }
    }

    /// Largest distance between adjacent nodes.
    pub fn max_gap(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| (self.nodes[(i + 1) % n] - self.nodes[i]).norm())
            .fold(0.0, f64::max)
    }

    /// Axis-aligned bounding box of the nodes.
    pub fn bbox(&self) -> (C64, C64) {
        let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for z in &self.nodes {
            lo.re = lo.re.min(z.re);
            lo.im = lo.im.min(z.im);
            hi.re = hi.re.max(z.re);
            hi.im = hi.im.max(z.im);
        }
        (lo, hi)
    }

    /// Winding number of the node polyline around `z`, by summing exterior
    /// angles. Exact away from the polyline.
    pub fn winding(&self, z: C64) -> i32 {
        let n = self.n();
        let mut total = 0.0;
        let mut prev = self.nodes[n - 1] - z;
        for i in 0..n {
            let cur = self.nodes[i] - z;
            let cross = prev.re * cur.im - prev.im * cur.re;
            let dot = prev.re * cur.re + prev.im * cur.im;
            total += cross.atan2(dot);
            prev = cur;
        }
        (total / (2.0 * PI)).round() as i32
    }

    /// Distance from `z` to the node polyline.
    pub fn dist(&self, z: C64) -> f64 {
        let n = self.n();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.nodes[i];
            let b = self.nodes[(i + 1) % n];
            best = best.min(segment_dist(z, a, b));
        }
        best
    }
}

/// Distance from `z` to the closed segment `[a, b]`.
pub fn segment_dist(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Circle of given center and radius, counterclockwise when `ccw` is set.
pub fn make_circle(center: C64, radius: f64, ccw: bool, n: usize) -> Result<ParamBoundary> {
    check_n(n)?;
    if radius <= 0.0 {
        return Err(Error::DegenerateCurve(format!("circle radius {radius}")));
    }
    let sign = if ccw { 1.0 } else { -1.0 };
    let params = uniform_params(n);
    let mut nodes = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &t in &params {
        let e = C64::new(0.0, sign * t).exp();
        nodes.push(center + radius * e);
        d1.push(C64::new(0.0, sign * radius) * e);
        d2.push(-radius * e);
    }
    Ok(ParamBoundary {
        component_index: 0,
        nodes,
        first_derivs: d1,
        second_derivs: d2,
        params,
        corner_mask: vec![false; n],
        corners: None,
        shape: Shape::Circle { center, radius, ccw },
    })
}

/// Smooth closed curve from a parametrization returning
/// `(η(t), η'(t), η''(t))`.
pub fn make_smooth_curve<F>(f: F, n: usize) -> Result<ParamBoundary>
where
    F: Fn(f64) -> (C64, C64, C64),
{
    check_n(n)?;
    let params = uniform_params(n);
    let mut nodes = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &t in &params {
        let (z, zp, zpp) = f(t);
        nodes.push(z);
        d1.push(zp);
        d2.push(zpp);
    }
    for (i, z) in d1.iter().enumerate() {
        if z.norm() == 0.0 {
            return Err(Error::VanishingDerivative { component: 0, index: i });
        }
    }
    Ok(ParamBoundary {
        component_index: 0,
        nodes,
        first_derivs: d1,
        second_derivs: d2,
        params,
        corner_mask: vec![false; n],
        corners: None,
        shape: Shape::Curve,
    })
}

/// The grading substitution `w: [0, 2π] -> [0, 2π]` and its first two
/// derivatives. `w` is strictly increasing with derivatives up to order
/// `p - 1` vanishing at both endpoints (for `p >= 3`; for `p = 2` only the
/// first derivative vanishes).
fn grading_w(s: f64, p: u32) -> (f64, f64, f64) {
    let pf = f64::from(p);
    let c3 = 1.0 / pf - 0.5;
    let v = |x: f64| c3 * ((PI - x) / PI).powi(3) + (x - PI) / (pf * PI) + 0.5;
    let vp = |x: f64| -3.0 * c3 * (PI - x) * (PI - x) / (PI * PI * PI) + 1.0 / (pf * PI);
    let vpp = |x: f64| 6.0 * c3 * (PI - x) / (PI * PI * PI);

    let (va, vb) = (v(s), v(2.0 * PI - s));
    let (vap, vbp) = (vp(s), vp(2.0 * PI - s));
    let (vapp, vbpp) = (vpp(s), vpp(2.0 * PI - s));

    let pi32 = p as i32;
    let a = va.powi(pi32);
    let b = vb.powi(pi32);
    let ap = pf * va.powi(pi32 - 1) * vap;
    let bp = -pf * vb.powi(pi32 - 1) * vbp;
    let app = pf * (pf - 1.0) * va.powi(pi32 - 2) * vap * vap + pf * va.powi(pi32 - 1) * vapp;
    let bpp = pf * (pf - 1.0) * vb.powi(pi32 - 2) * vbp * vbp + pf * vb.powi(pi32 - 1) * vbpp;

    let denom = a + b;
    let w = 2.0 * PI * a / denom;
    let wp = 2.0 * PI * (ap * b - a * bp) / (denom * denom);
    let wpp = 2.0 * PI
        * ((app * b - a * bpp) * denom - 2.0 * (ap * b - a * bp) * (ap + bp))
        / (denom * denom * denom);
    (w, wp, wpp)
}

/// Closed polygon through `vertices` in order, with a graded mesh of order
/// `grading_order` at every corner.
///
/// Nodes are distributed over the sides as evenly as the total `n` allows,
/// which places every corner exactly on a node; the parametrization's
/// first two derivatives vanish there and those nodes are flagged in
/// `corner_mask`.
pub fn make_polygon(vertices: &[C64], n: usize, grading_order: u32) -> Result<ParamBoundary> {
    check_n(n)?;
    let m = vertices.len();
    if m < 3 {
        return Err(Error::DegenerateCurve(format!("polygon with {m} vertices")));
    }
    if grading_order < 2 {
        return Err(Error::DegenerateCurve(format!(
            "grading order {grading_order} must be at least 2"
        )));
    }
    for k in 0..m {
        if (vertices[(k + 1) % m] - vertices[k]).norm() == 0.0 {
            return Err(Error::DegenerateCurve(format!("repeated vertex {k}")));
        }
    }
    // Fair partition of node indices over the sides; corner k sits at node
    // cuts[k].
    let cuts: Vec<usize> = (0..=m)
        .map(|k| ((k * n) as f64 / m as f64).round() as usize)
        .collect();
    for k in 0..m {
        if cuts[k + 1] - cuts[k] < 4 {
            return Err(Error::DegenerateCurve(format!(
                "{n} nodes are too few for {m} sides"
            )));
        }
    }
    let params = uniform_params(n);
    let mut nodes = vec![C64::new(0.0, 0.0); n];
    let mut d1 = vec![C64::new(0.0, 0.0); n];
    let mut d2 = vec![C64::new(0.0, 0.0); n];
    let mut corner_mask = vec![false; n];
    for k in 0..m {
        let (lo, hi) = (cuts[k], cuts[k + 1]);
        let side_nodes = hi - lo;
        let side_len = 2.0 * PI * side_nodes as f64 / n as f64;
        let d = vertices[(k + 1) % m] - vertices[k];
        for i in lo..hi {
            let sigma = 2.0 * PI * (i - lo) as f64 / side_nodes as f64;
            let (w, wp, wpp) = grading_w(sigma, grading_order);
            nodes[i] = vertices[k] + d * (w / (2.0 * PI));
            d1[i] = d * (wp / side_len);
            d2[i] = d * (wpp * 2.0 * PI / (side_len * side_len));
        }
        corner_mask[lo] = true;
    }
    let corner_params = cuts[..m].iter().map(|&c| params[c]).collect();
    Ok(ParamBoundary {
        component_index: 0,
        nodes,
        first_derivs: d1,
        second_derivs: d2,
        params,
        corner_mask,
        corners: Some(CornerSpec { corner_params, grading_order }),
        shape: Shape::Polygon { vertices: vertices.to_vec() },
    })
}

/// A bounded domain of connectivity `ell + 1`: one outer component
/// (counterclockwise) and `ell` inner components (clockwise).
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    pub boundaries: Vec<ParamBoundary>,
    pub ell: usize,
    offsets: Vec<usize>,
    total: usize,
}

/// Normalize orientations, validate the layout, and assemble the domain.
///
/// The outer boundary is reoriented counterclockwise and every inner one
/// clockwise if needed. Every inner component must lie strictly inside the
/// outer one and the inner components must be pairwise disjoint.
pub fn assemble_domain(
    outer: ParamBoundary,
    inners: Vec<ParamBoundary>,
) -> Result<DomainGeometry> {
    let outer = if outer.signed_area() > 0.0 { outer } else { outer.reversed() };
    let inners: Vec<ParamBoundary> = inners
        .into_iter()
        .map(|b| if b.signed_area() < 0.0 { b } else { b.reversed() })
        .collect();

    for (k, inner) in inners.iter().enumerate() {
        for node in &inner.nodes {
            if outer.winding(*node) != 1 {
                return Err(Error::DomainLayout(format!(
                    "inner component {} is not inside the outer boundary",
                    k + 1
                )));
            }
        }
    }
    for a in 0..inners.len() {
        for b in (a + 1)..inners.len() {
            let (alo, ahi) = inners[a].bbox();
            let (blo, bhi) = inners[b].bbox();
            let boxes_overlap =
                alo.re <= bhi.re && blo.re <= ahi.re && alo.im <= bhi.im && blo.im <= ahi.im;
            if boxes_overlap || inners[a].winding(inners[b].nodes[0]) != 0 {
                let min_dist = inners[a]
                    .nodes
                    .iter()
                    .map(|&z| inners[b].dist(z))
                    .fold(f64::INFINITY, f64::min);
                if min_dist == 0.0 || inners[a].winding(inners[b].nodes[0]) != 0 {
                    return Err(Error::DomainLayout(format!(
                        "inner components {} and {} overlap",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
    }

    let mut boundaries = Vec::with_capacity(1 + inners.len());
    boundaries.push(outer);
    boundaries.extend(inners);
    let mut offsets = Vec::with_capacity(boundaries.len());
    let mut total = 0;
    for (idx, b) in boundaries.iter_mut().enumerate() {
        b.component_index = idx;
        offsets.push(total);
        total += b.n();
    }
    let ell = boundaries.len() - 1;
    Ok(DomainGeometry { boundaries, ell, offsets, total })
}

impl DomainGeometry {
    /// Total number of nodes over all components.
    pub fn total_nodes(&self) -> usize {
        self.total
    }

    /// Index of the first node of component `k` in flattened arrays.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Component index owning flattened node `i`.
    pub fn component_of(&self, i: usize) -> usize {
        match self.offsets.binary_search(&i) {
            Ok(k) => k,
            Err(k) => k - 1,
        }
    }

    /// Axis-aligned bounding box of the outer boundary.
    pub fn bbox(&self) -> (C64, C64) {
        self.boundaries[0].bbox()
    }

    /// Diagonal of the outer bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Largest distance between adjacent nodes over all components.
    pub fn max_node_gap(&self) -> f64 {
        self.boundaries.iter().map(|b| b.max_gap()).fold(0.0, f64::max)
    }

    /// Distance from `z` to the nearest boundary component.
    pub fn dist_to_boundary(&self, z: C64) -> f64 {
        self.boundaries.iter().map(|b| b.dist(z)).fold(f64::INFINITY, f64::min)
    }

    /// Whether `z` is an interior point. Points within `1e-6` of the outer
    /// diameter from the boundary are conservatively reported as not
    /// interior.
    pub fn contains(&self, z: C64) -> bool {
        if self.dist_to_boundary(z) < 1e-6 * self.diameter() {
            return false;
        }
        if self.boundaries[0].winding(z) != 1 {
            return false;
        }
        self.boundaries[1..].iter().all(|b| b.winding(z) == 0)
    }

    /// True when every component is an exact circle, enabling the
    /// structured operator backend.
    pub fn all_circles(&self) -> bool {
        self.boundaries.iter().all(|b| matches!(b.shape, Shape::Circle { .. }))
    }
}

/// Inverse of the opening map on the slit side: `Ψ₁(w) = (w + 1/w)/4 + 1/2`
/// sends `|w| > 1` onto the complement of the segment `[0, 1]`.
pub fn psi1(w: C64) -> C64 {
    (w + 1.0 / w) * 0.25 + 0.5
}

/// Opening map for the segment `[0, 1]`: the branch of
/// `Ψ₂(z) = u (1 + sqrt(1 - 1/u²))`, `u = 2z - 1`, with `sqrt(1) = 1`,
/// mapping the complement of the segment onto `|w| > 1`.
pub fn open_up_psi2(z: C64) -> C64 {
    let u = 2.0 * z - C64::new(1.0, 0.0);
    u * (1.0 + (1.0 - 1.0 / (u * u)).sqrt())
}

/// Derivative of [`open_up_psi2`], expressed through `w = Ψ₂(z)` as
/// `Ψ₂'(z) = 4 w² / (w² - 1)`.
pub fn open_up_psi2_deriv(z: C64) -> C64 {
    let w = open_up_psi2(z);
    let w2 = w * w;
    4.0 * w2 / (w2 - 1.0)
}

/// Second derivative of [`open_up_psi2`],
/// `Ψ₂''(z) = -32 w³ / (w² - 1)³`.
pub fn open_up_psi2_second(z: C64) -> C64 {
    let w = open_up_psi2(z);
    let w2 = w * w;
    let d = w2 - 1.0;
    -32.0 * w * w2 / (d * d * d)
}
