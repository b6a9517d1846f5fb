//! Field-level studies of `R(G, α)` as a function of the point: grid
//! sweeps, critical point extraction with Morse counting, boundary
//! approach trends, and the lower bound `R(G, α) ≥ d(α, ∂G)`.
//!
//! Everything here works against the [`FieldEval`] trait so the same
//! machinery runs on ordinary domains, slit domains evaluated through
//! the open-up map, and closed-form test fields.

use crate::mityuk::{MityukEngine, OpenUpEngine};
use crate::{C64, Error, Result};
use rayon::prelude::*;

/// A positive scalar field on a planar domain, evaluated one point at a
/// time, with enough geometry awareness to stay off the boundary.
pub trait FieldEval: Sync {
    fn contains(&self, z: C64) -> bool;
    fn dist_to_boundary(&self, z: C64) -> f64;
    /// Coarsest boundary node spacing; sets the trust region of the
    /// discretization near the boundary.
    fn node_gap(&self) -> f64;
    /// Field value plus a state vector that warm-starts a neighboring
    /// evaluation.
    fn value_warm(&self, z: C64, warm: Option<&[f64]>) -> Result<(f64, Vec<f64>)>;

    fn value(&self, z: C64) -> Result<f64> {
        Ok(self.value_warm(z, None)?.0)
    }
}

impl FieldEval for MityukEngine {
    fn contains(&self, z: C64) -> bool {
        self.domain().contains(z)
    }

    fn dist_to_boundary(&self, z: C64) -> f64 {
        self.domain().dist_to_boundary(z)
    }

    fn node_gap(&self) -> f64 {
        self.domain().max_node_gap()
    }

    fn value_warm(&self, z: C64, warm: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        let (res, mu) = self.evaluate_warm(z, warm, false)?;
        Ok((res.radius, mu))
    }
}

impl FieldEval for OpenUpEngine {
    fn contains(&self, z: C64) -> bool {
        OpenUpEngine::contains(self, z)
    }

    fn dist_to_boundary(&self, z: C64) -> f64 {
        OpenUpEngine::dist_to_boundary(self, z)
    }

    fn node_gap(&self) -> f64 {
        self.max_node_gap()
    }

    fn value_warm(&self, z: C64, warm: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        let (res, mu) = self.evaluate_warm(z, warm)?;
        Ok((res.radius, mu))
    }
}

/// A closed-form field for exercising the search machinery without a
/// boundary integral solve. `f` returns `None` outside the domain.
pub struct FnField<F, D>
where
    F: Fn(C64) -> Option<f64> + Sync,
    D: Fn(C64) -> f64 + Sync,
{
    pub f: F,
    pub dist: D,
    pub gap: f64,
}

impl<F, D> FieldEval for FnField<F, D>
where
    F: Fn(C64) -> Option<f64> + Sync,
    D: Fn(C64) -> f64 + Sync,
{
    fn contains(&self, z: C64) -> bool {
        (self.f)(z).is_some()
    }

    fn dist_to_boundary(&self, z: C64) -> f64 {
        (self.dist)(z)
    }

    fn node_gap(&self) -> f64 {
        self.gap
    }

    fn value_warm(&self, z: C64, _warm: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        match (self.f)(z) {
            Some(v) => Ok((v, Vec::new())),
            None => Err(Error::NotInterior { re: z.re, im: z.im }),
        }
    }
}

/// Rectangular evaluation grid, inclusive of its edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Analysis(format!("grid {nx}x{ny} is too small")));
        }
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::Analysis(format!(
                "grid box [{x0}, {x1}] x [{y0}, {y1}] is empty"
            )));
        }
        Ok(GridSpec { nx, ny, x0, x1, y0, y1 })
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    /// Cell scale used for search radii and finite-difference steps.
    pub fn cell(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.dy()
    }

    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        C64::new(self.x(ix), self.y(iy))
    }
}

/// Why a grid node carries no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    Exterior,
    /// Interior but within the guard band of the boundary, where the
    /// quadrature is not trusted.
    Guard,
    /// The evaluation failed.
    Failed,
}

/// Field values over a grid; `values` is row-major with `NaN` at every
/// non-interior node.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub class: Vec<PointClass>,
}

impl ScalarField {
    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid.nx + ix
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.idx(ix, iy)]
    }

    pub fn class_at(&self, ix: usize, iy: usize) -> PointClass {
        self.class[self.idx(ix, iy)]
    }

    pub fn interior_count(&self) -> usize {
        self.class.iter().filter(|c| **c == PointClass::Interior).count()
    }

    pub fn failed_count(&self) -> usize {
        self.class.iter().filter(|c| **c == PointClass::Failed).count()
    }

    /// Smallest and largest interior value.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.values {
            if v.is_finite() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        if lo.is_finite() {
            Some((lo, hi))
        } else {
            None
        }
    }
}

/// Width of the band along the boundary that sweeps skip, in units of
/// the coarsest node gap.
const GUARD_GAPS: f64 = 2.5;

/// Evaluate the field over a grid.
///
/// Rows are distributed over the rayon pool; within a row, points run
/// left to right and each solution warm-starts the next. The result is
/// bitwise independent of the number of worker threads because rows
/// never share state.
pub fn sweep<E: FieldEval>(eval: &E, grid: GridSpec) -> Result<ScalarField> {
    let guard = GUARD_GAPS * eval.node_gap();
    let nx = grid.nx;
    let rows: Vec<(Vec<f64>, Vec<PointClass>)> = (0..grid.ny)
        .into_par_iter()
        .map(|iy| {
            let mut vals = vec![f64::NAN; nx];
            let mut class = vec![PointClass::Exterior; nx];
            let mut carry: Option<Vec<f64>> = None;
            for ix in 0..nx {
                let z = grid.point(ix, iy);
                if !eval.contains(z) {
                    continue;
                }
                if eval.dist_to_boundary(z) < guard {
                    class[ix] = PointClass::Guard;
                    continue;
                }
                match eval.value_warm(z, carry.as_deref()) {
                    Ok((v, state)) => {
                        vals[ix] = v;
                        class[ix] = PointClass::Interior;
                        if !state.is_empty() {
                            carry = Some(state);
                        }
                    }
                    Err(_) => {
                        class[ix] = PointClass::Failed;
                        carry = None;
                    }
                }
            }
            (vals, class)
        })
        .collect();

    let mut values = Vec::with_capacity(nx * grid.ny);
    let mut class = Vec::with_capacity(nx * grid.ny);
    for (v, c) in rows {
        values.extend(v);
        class.extend(c);
    }
    Ok(ScalarField { grid, values, class })
}

/// Nature of an isolated critical point, or a whole degenerate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Maximum,
    Minimum,
    Saddle,
    /// A vanishing Hessian eigenvalue, or a connected family of critical
    /// points (a critical circle collapses to one entry of this kind).
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub location: C64,
    pub value: f64,
    pub kind: CriticalKind,
    pub gradient_norm: f64,
    /// Finite-difference Hessian `[f_xx, f_xy, f_yy]`.
    pub hessian: [f64; 3],
    /// Number of refined grid candidates merged into this entry; large
    /// for a degenerate family.
    pub multiplicity: usize,
}

struct Refined {
    z: C64,
    value: f64,
    grad: f64,
    hess: [f64; 3],
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric 2x2 matrix
/// `[a, b; b, c]`, smaller eigenvalue magnitude first.
fn eig2(hess: [f64; 3]) -> ([f64; 2], [[f64; 2]; 2]) {
    let [a, b, c] = hess;
    let mean = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    let (l1, l2) = (mean - disc, mean + disc);
    let mut v2 = if b.abs() > 1e-300 {
        [b, l2 - a]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let n2 = v2[0].hypot(v2[1]);
    v2 = [v2[0] / n2, v2[1] / n2];
    let v1 = [-v2[1], v2[0]];
    if l1.abs() <= l2.abs() {
        ([l1, l2], [v1, v2])
    } else {
        ([l2, l1], [v2, v1])
    }
}

/// Gradient norm restricted to directions whose curvature is resolvable.
/// Along a near-null eigendirection of the Hessian the gradient cannot be
/// driven to zero by moving toward a critical point, so it is excluded;
/// that is what makes whole critical circles findable. Acceptance must
/// then check separately that the excluded component is discretization
/// error rather than a real slope.
fn effective_gradient(grad: [f64; 2], hess: [f64; 3], hess_noise: f64) -> f64 {
    let (lams, vecs) = eig2(hess);
    let lmax = lams[1].abs();
    let threshold = (1e-2 * lmax).max(hess_noise);
    if lams[0].abs() >= threshold {
        return grad[0].hypot(grad[1]);
    }
    if lmax < threshold {
        return grad[0].hypot(grad[1]);
    }
    (grad[0] * vecs[1][0] + grad[1] * vecs[1][1]).abs()
}

/// Whether a gradient below the tolerance really marks a stationary
/// point. Either the Hessian resolves above its noise level, or the
/// gradient itself sits at the finite-difference noise floor. Boundary
/// layers near corners produce spots that are flat against the global
/// tolerance yet carry a real slope over noise-level curvature; they
/// fail both arms.
fn stationary(gnorm: f64, hess: [f64; 3], gfloor: f64, hess_noise: f64) -> bool {
    let (lams, _) = eig2(hess);
    lams[1].abs() >= hess_noise || gnorm <= gfloor
}

/// Whether the gradient component hidden by the near-null direction is
/// truncation error. Halving the stencil shrinks a second-order error
/// fourfold but leaves a real slope unchanged; a field that is flat in
/// one direction and sloped in another, like a radial profile at an
/// inflection ring or a slit tip, keeps its slope and is rejected.
fn hidden_slope_is_truncation<E: FieldEval>(
    eval: &E,
    z: C64,
    h: f64,
    guard: f64,
    carry: &mut Option<Vec<f64>>,
    budget: &mut usize,
    gnorm: f64,
    gfloor: f64,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    match stencil(eval, z, 0.5 * h, guard, carry) {
        Some((_, g2, _)) => g2[0].hypot(g2[1]) <= 0.4 * gnorm + 3.0 * gfloor,
        None => false,
    }
}

/// Nine-point finite-difference stencil at `z` with step `h`: value,
/// gradient and Hessian, warm-starting successive solves. Fails if any
/// stencil point leaves the trusted region.
fn stencil<E: FieldEval>(
    eval: &E,
    z: C64,
    h: f64,
    guard: f64,
    carry: &mut Option<Vec<f64>>,
) -> Option<(f64, [f64; 2], [f64; 3])> {
    let probe = |dx: f64, dy: f64, carry: &mut Option<Vec<f64>>| -> Option<f64> {
        let p = C64::new(z.re + dx * h, z.im + dy * h);
        if !eval.contains(p) || eval.dist_to_boundary(p) < guard {
            return None;
        }
        match eval.value_warm(p, carry.as_deref()) {
            Ok((v, state)) => {
                if !state.is_empty() {
                    *carry = Some(state);
                }
                Some(v)
            }
            Err(_) => None,
        }
    };
    let f00 = probe(0.0, 0.0, carry)?;
    let fe = probe(1.0, 0.0, carry)?;
    let fw = probe(-1.0, 0.0, carry)?;
    let fn_ = probe(0.0, 1.0, carry)?;
    let fs = probe(0.0, -1.0, carry)?;
    let fne = probe(1.0, 1.0, carry)?;
    let fnw = probe(-1.0, 1.0, carry)?;
    let fse = probe(1.0, -1.0, carry)?;
    let fsw = probe(-1.0, -1.0, carry)?;
    let gx = (fe - fw) / (2.0 * h);
    let gy = (fn_ - fs) / (2.0 * h);
    let fxx = (fe - 2.0 * f00 + fw) / (h * h);
    let fyy = (fn_ - 2.0 * f00 + fs) / (h * h);
    let fxy = (fne + fsw - fnw - fse) / (4.0 * h * h);
    Some((f00, [gx, gy], [fxx, fxy, fyy]))
}

/// Damped Newton iteration on the finite-difference gradient, started
/// from a grid candidate. Returns `None` when the iteration cannot bring
/// the gradient below the tolerance; seeds that sit on a plateau of the
/// gradient norm (no critical point nearby) are abandoned early.
fn refine<E: FieldEval>(
    eval: &E,
    start: C64,
    h: f64,
    guard: f64,
    gtol: f64,
    gfloor: f64,
    hess_noise: f64,
    step_cap: f64,
) -> Option<Refined> {
    let mut carry: Option<Vec<f64>> = None;
    let mut budget = 60usize;
    let take = |eval: &E, z: C64, carry: &mut Option<Vec<f64>>, budget: &mut usize| {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        stencil(eval, z, h, guard, carry)
    };
    let mut z = start;
    let (mut value, mut grad, mut hess) = take(eval, z, &mut carry, &mut budget)?;
    let g0 = grad[0].hypot(grad[1]);
    let mut lambda = 0.0f64;
    for iter in 0..30 {
        let gnorm = grad[0].hypot(grad[1]);
        let geff = effective_gradient(grad, hess, hess_noise);
        if geff <= gtol && stationary(gnorm, hess, gfloor, hess_noise) {
            if gnorm <= gtol
                || hidden_slope_is_truncation(
                    eval,
                    z,
                    h,
                    guard,
                    &mut carry,
                    &mut budget,
                    gnorm,
                    gfloor,
                )
            {
                return Some(Refined { z, value, grad: geff, hess });
            }
        }
        if iter >= 8 && gnorm > 0.5 * g0 {
            return None;
        }
        let mut accepted = false;
        for _ in 0..4 {
            // Levenberg step for the least squares problem |grad|^2 / 2:
            // (H^2 + lambda I) s = -H grad. Unlike a shift of H itself
            // this never passes through a singular matrix, whatever the
            // signs of the Hessian eigenvalues.
            let [a, b, c] = hess;
            let h2a = a * a + b * b + lambda;
            let h2b = b * (a + c);
            let h2c = b * b + c * c + lambda;
            let hg0 = a * grad[0] + b * grad[1];
            let hg1 = b * grad[0] + c * grad[1];
            let det = h2a * h2c - h2b * h2b;
            let (mut sx, mut sy) = if det > 1e-300 {
                ((-h2c * hg0 + h2b * hg1) / det, (h2b * hg0 - h2a * hg1) / det)
            } else {
                (-grad[0], -grad[1])
            };
            let slen = sx.hypot(sy);
            if slen > step_cap {
                sx *= step_cap / slen;
                sy *= step_cap / slen;
            }
            let znew = C64::new(z.re + sx, z.im + sy);
            if let Some((v2, g2, h2)) = take(eval, znew, &mut carry, &mut budget) {
                if g2[0].hypot(g2[1]) < gnorm {
                    z = znew;
                    value = v2;
                    grad = g2;
                    hess = h2;
                    lambda /= 3.0;
                    accepted = true;
                    break;
                }
            }
            let scale = (hess[0].abs() + hess[2].abs()).max(1e-12);
            lambda = if lambda == 0.0 { 1e-3 * scale * scale } else { 10.0 * lambda };
        }
        if !accepted {
            return None;
        }
    }
    let gnorm = grad[0].hypot(grad[1]);
    let geff = effective_gradient(grad, hess, hess_noise);
    if geff <= gtol
        && stationary(gnorm, hess, gfloor, hess_noise)
        && (gnorm <= gtol
            || hidden_slope_is_truncation(
                eval,
                z,
                h,
                guard,
                &mut carry,
                &mut budget,
                gnorm,
                gfloor,
            ))
    {
        Some(Refined { z, value, grad: geff, hess })
    } else {
        None
    }
}

fn classify(hess: [f64; 3], noise: f64) -> CriticalKind {
    let (lams, _) = eig2(hess);
    // The relative cutoff sits above the finite-difference truncation of
    // the Hessian, which pollutes an exactly zero eigenvalue by roughly
    // (h / feature length)^2 times the large one.
    let threshold = (1e-2 * lams[1].abs()).max(noise);
    if lams[0].abs() < threshold {
        CriticalKind::Degenerate
    } else if lams[0] < 0.0 && lams[1] < 0.0 {
        CriticalKind::Maximum
    } else if lams[0] > 0.0 && lams[1] > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Saddle
    }
}

/// Locate the critical points of the field seen on a sweep.
///
/// Grid cells where the finite-difference gradient reaches a local
/// minimum seed a damped Newton iteration on the continuous field; seeds
/// that fail to converge are discarded, converged ones are merged by
/// proximity. A long chain of merged points (at least eight spanning
/// several cells) is reported as a single degenerate family, which is
/// how a critical circle shows up.
pub fn find_critical_points<E: FieldEval>(eval: &E, field: &ScalarField) -> Result<Vec<CriticalPoint>> {
    let grid = &field.grid;
    let (lo, hi) = match field.value_range() {
        Some(r) => r,
        None => return Ok(Vec::new()),
    };
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    let cell = grid.cell();
    let h = 0.35 * cell;
    let guard = GUARD_GAPS * eval.node_gap();
    // The field is accurate to roughly ten digits; the gradient tolerance
    // sits well above the finite-difference noise that implies.
    let noise = 1e-9 * hi.abs().max(1e-3);
    let gfloor = 30.0 * noise / h;
    let gtol = (1e-6 * range / cell).max(gfloor);
    let hess_noise = 50.0 * noise / (h * h);

    let nx = grid.nx;
    let ny = grid.ny;
    let at = |ix: usize, iy: usize| field.value(ix, iy);
    let interior =
        |ix: usize, iy: usize| field.class_at(ix, iy) == PointClass::Interior;

    let mut gnorm = vec![f64::INFINITY; nx * ny];
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let mut ok = true;
            'outer: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if !interior((ix as i64 + dx) as usize, (iy as i64 + dy) as usize) {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            if !ok {
                continue;
            }
            let gx = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * grid.dx());
            let gy = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * grid.dy());
            gnorm[iy * nx + ix] = gx.hypot(gy);
        }
    }

    let mut seeds = Vec::new();
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let g = gnorm[iy * nx + ix];
            if !g.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let j = ((iy as i64 + dy) as usize) * nx + (ix as i64 + dx) as usize;
                    if gnorm[j] < g {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                seeds.push(grid.point(ix, iy));
            }
        }
    }
    if seeds.len() > 400 {
        return Err(Error::Analysis(format!(
            "{} critical point seeds; the grid is too noisy",
            seeds.len()
        )));
    }

    let refined: Vec<Refined> = seeds
        .par_iter()
        .filter_map(|&s| refine(eval, s, h, guard, gtol, gfloor, hess_noise, 2.0 * cell))
        .collect();

    // Merge converged seeds that landed on the same point.
    let merge_radius = 1.2 * cell;
    let mut order: Vec<usize> = (0..refined.len()).collect();
    order.sort_by(|&a, &b| refined[a].grad.total_cmp(&refined[b].grad));
    let mut clusters: Vec<(C64, Vec<usize>)> = Vec::new();
    for i in order {
        let z = refined[i].z;
        match clusters.iter_mut().find(|(c, _)| (*c - z).norm() < merge_radius) {
            Some((_, members)) => members.push(i),
            None => clusters.push((z, vec![i])),
        }
    }

    // Chain nearby clusters; a long chain is one degenerate family.
    let k = clusters.len();
    let mut comp: Vec<usize> = (0..k).collect();
    fn root(comp: &mut Vec<usize>, mut i: usize) -> usize {
        while comp[i] != i {
            comp[i] = comp[comp[i]];
            i = comp[i];
        }
        i
    }
    let link_radius = 2.5 * cell;
    for i in 0..k {
        for j in i + 1..k {
            if (clusters[i].0 - clusters[j].0).norm() < link_radius {
                let (ri, rj) = (root(&mut comp, i), root(&mut comp, j));
                if ri != rj {
                    comp[ri] = rj;
                }
            }
        }
    }
    let mut families: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..k {
        let r = root(&mut comp, i);
        families.entry(r).or_default().push(i);
    }

    let mut out = Vec::new();
    for (_, cluster_ids) in families {
        let members: Vec<usize> = cluster_ids
            .iter()
            .flat_map(|&ci| clusters[ci].1.iter().copied())
            .collect();
        let best = members
            .iter()
            .copied()
            .min_by(|&a, &b| refined[a].grad.total_cmp(&refined[b].grad))
            .expect("families are never empty");
        let r = &refined[best];
        let extent = members
            .iter()
            .map(|&i| (refined[i].z - r.z).norm())
            .fold(0.0, f64::max);
        let kind = if cluster_ids.len() >= 8 && extent > 4.0 * cell {
            CriticalKind::Degenerate
        } else {
            classify(r.hess, hess_noise)
        };
        out.push(CriticalPoint {
            location: r.z,
            value: r.value,
            kind,
            gradient_norm: r.grad,
            hessian: r.hess,
            multiplicity: members.len(),
        });
    }

    // A connected degenerate family is a level set of the field, so far
    // apart entries of degenerate kind with the same critical value are
    // one family sampled at scattered spots.
    let value_tol = 1e-4 * range;
    let mut merged: Vec<CriticalPoint> = Vec::new();
    for p in out {
        if p.kind == CriticalKind::Degenerate {
            if let Some(prev) = merged.iter_mut().find(|q| {
                q.kind == CriticalKind::Degenerate && (q.value - p.value).abs() <= value_tol
            }) {
                prev.multiplicity += p.multiplicity;
                if p.gradient_norm < prev.gradient_norm {
                    prev.location = p.location;
                    prev.value = p.value;
                    prev.gradient_norm = p.gradient_norm;
                    prev.hessian = p.hessian;
                }
                continue;
            }
        }
        merged.push(p);
    }
    merged.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(merged)
}

/// Critical point counts against the Euler characteristic of a domain
/// with `ell` holes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorseSummary {
    pub maxima: usize,
    pub minima: usize,
    pub saddles: usize,
    pub degenerate: usize,
    /// Whether the counts satisfy `maxima + minima - saddles = 1 - ell`,
    /// which requires every point to be nondegenerate.
    pub euler_ok: bool,
}

pub fn morse_check(points: &[CriticalPoint], ell: usize) -> MorseSummary {
    let mut s = MorseSummary { maxima: 0, minima: 0, saddles: 0, degenerate: 0, euler_ok: false };
    for p in points {
        match p.kind {
            CriticalKind::Maximum => s.maxima += 1,
            CriticalKind::Minimum => s.minima += 1,
            CriticalKind::Saddle => s.saddles += 1,
            CriticalKind::Degenerate => s.degenerate += 1,
        }
    }
    s.euler_ok = s.degenerate == 0
        && (s.maxima as isize + s.minima as isize - s.saddles as isize) == 1 - ell as isize;
    s
}

/// Limit behavior of the field along one approach ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    ToZero,
    ToInfinity,
    Finite,
}

#[derive(Debug, Clone)]
pub struct RayProbe {
    pub direction: C64,
    /// `(distance, value)` pairs, farthest first.
    pub samples: Vec<(f64, f64)>,
    /// Log-log slope `d log V / d log d` over the near tail.
    pub slope: f64,
    pub trend: Trend,
    /// Nearest sampled value, an estimate of the limit when finite.
    pub last_value: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub target: C64,
    pub rays: Vec<RayProbe>,
    /// Set when the rays disagree on the trend, or agree on a finite
    /// limit whose value varies by more than ten percent.
    pub direction_dependent: bool,
    pub consensus: Option<Trend>,
}

/// Closest approach distance the quadrature resolves, in node gaps.
const PROBE_FLOOR_GAPS: f64 = 3.0;

/// Approach a boundary point along straight rays and classify the limit.
///
/// `directions` point from the boundary into the domain; `dists` are
/// positive and decreasing. Samples closer than three node gaps are
/// dropped because the quadrature no longer resolves them.
pub fn boundary_probe<E: FieldEval>(
    eval: &E,
    target: C64,
    directions: &[C64],
    dists: &[f64],
) -> Result<ProbeReport> {
    if directions.is_empty() || dists.is_empty() {
        return Err(Error::Analysis("probe needs directions and distances".into()));
    }
    let floor = PROBE_FLOOR_GAPS * eval.node_gap();
    let mut rays = Vec::with_capacity(directions.len());
    for &rawdir in directions {
        let dn = rawdir.norm();
        if dn == 0.0 {
            return Err(Error::Analysis("probe direction is zero".into()));
        }
        let dir = rawdir / dn;
        let mut dd: Vec<f64> = dists.to_vec();
        dd.sort_by(|a, b| b.total_cmp(a));
        let mut samples = Vec::new();
        let mut carry: Option<Vec<f64>> = None;
        for d in dd {
            if d < floor {
                continue;
            }
            let z = target + dir * d;
            if !eval.contains(z) || eval.dist_to_boundary(z) < floor {
                continue;
            }
            if let Ok((v, state)) = eval.value_warm(z, carry.as_deref()) {
                samples.push((d, v));
                if !state.is_empty() {
                    carry = Some(state);
                }
            }
        }
        if samples.len() < 3 {
            return Err(Error::Analysis(format!(
                "only {} usable samples along direction ({}, {})",
                samples.len(),
                dir.re,
                dir.im
            )));
        }
        let tail = &samples[samples.len().saturating_sub(5)..];
        let slope = loglog_slope(tail);
        let first = samples[0].1;
        let last = samples[samples.len() - 1].1;
        let trend = if slope >= 0.4 && last < 0.5 * first {
            Trend::ToZero
        } else if slope <= -0.4 && last > 2.0 * first {
            Trend::ToInfinity
        } else {
            Trend::Finite
        };
        rays.push(RayProbe { direction: dir, samples, slope, trend, last_value: last });
    }

    let base = rays[0].trend;
    let mut dependent = rays.iter().any(|r| r.trend != base);
    if !dependent && base == Trend::Finite {
        let lo = rays.iter().map(|r| r.last_value).fold(f64::INFINITY, f64::min);
        let hi = rays.iter().map(|r| r.last_value).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 0.1 * hi.abs().max(1e-300) {
            dependent = true;
        }
    }
    Ok(ProbeReport {
        target,
        rays,
        direction_dependent: dependent,
        consensus: if dependent { None } else { Some(base) },
    })
}

fn loglog_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(d, v)| *d > 0.0 && *v > 0.0)
        .map(|(d, v)| (d.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Outcome of testing `R(G, α) ≥ d(α, ∂G)` over a sweep.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest value of `R - d` seen; equality cases drive this to zero.
    pub min_margin: f64,
    /// `(α, R, d)` at the smallest margin.
    pub tightest: Option<(C64, f64, f64)>,
}

/// Check the distance lower bound at every interior grid node.
///
/// The boundary distance is measured to the node polyline, which differs
/// from the true curve by at most the chord sagitta; margins within that
/// geometric tolerance do not count as violations.
pub fn lower_bound_check<E: FieldEval>(eval: &E, field: &ScalarField) -> BoundReport {
    let gap = eval.node_gap();
    let tol = gap * gap + 1e-12;
    let mut report =
        BoundReport { checked: 0, violations: 0, min_margin: f64::INFINITY, tightest: None };
    for iy in 0..field.grid.ny {
        for ix in 0..field.grid.nx {
            if field.class_at(ix, iy) != PointClass::Interior {
                continue;
            }
            let z = field.grid.point(ix, iy);
            let v = field.value(ix, iy);
            let d = eval.dist_to_boundary(z);
            let margin = v - d;
            report.checked += 1;
            if margin < report.min_margin {
                report.min_margin = margin;
                report.tightest = Some((z, v, d));
            }
            if margin < -tol {
                report.violations += 1;
            }
        }
    }
    report
}
