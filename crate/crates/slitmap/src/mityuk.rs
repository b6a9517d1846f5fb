//! The end-to-end pipeline: from a domain and an interior point `α` to
//! the radius `R(G, α)`, the function `m(G, α)`, the canonical slit
//! parameters, and the boundary values of the mapping function.
//!
//! The mapping function onto the unit disk with `ell` concentric slits is
//! `Φ(z) = c (z - α) exp((z - α) f(z))` where `f` is analytic in the
//! domain. Writing the boundary condition for `Im[(γ + h + i μ)]`-type
//! data leads to the integral equation `(I - N) μ = -M γ` with
//!
//! - `γ = -log|η - α|` on components mapped to circular slits (and always
//!   on the outer boundary), and
//! - `γ = arg(η - α)`, continuously unwrapped, on components mapped to
//!   radial slits.
//!
//! The solution determines `h = (M μ - (I - N) γ) / 2`, constant on each
//! component up to discretization error. The outer constant `h_0` yields
//! `R(G, α) = e^{h_0}`, `m(G, α) = h_0 / (2π)`, and the normalization
//! `c = e^{-h_0}`; the inner constants carry the slit radii and angles.
//!
//! Domains whose boundary includes a straight slit (a degenerate
//! component with empty interior) are handled by opening up the slit:
//! an affine change of variables sends the slit ends to 0 and 1, the map
//! `Ψ₂` opens the segment into the unit circle, and the radius transforms
//! by the derivative of the composition at `α`.

use crate::geometry::{
    assemble_domain, make_circle, open_up_psi2, open_up_psi2_deriv, open_up_psi2_second,
    segment_dist, DomainGeometry, ParamBoundary, Shape,
};
use crate::kernel::{BoundaryData, CauchyFactor, CoefficientA, NeumannApply};
use crate::solver::{solve_density_warm, DensityAndConstants, SolverConfig};
use crate::{C64, Error, Result};
use std::f64::consts::PI;

/// Slit type assignment: one angle per inner boundary component, `π/2`
/// for a circular slit and `0` for a radial slit. The outer boundary is
/// always mapped to the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitSpec {
    thetas: Vec<f64>,
}

impl SlitSpec {
    /// Validates that every angle is exactly `0` or `π/2`.
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        for &t in &thetas {
            if t != 0.0 && t != PI / 2.0 {
                return Err(Error::SlitSpec(format!(
                    "slit angle {t} is neither 0 nor pi/2"
                )));
            }
        }
        Ok(SlitSpec { thetas })
    }

    /// All inner components mapped to circular slits.
    pub fn circular(ell: usize) -> Self {
        SlitSpec { thetas: vec![PI / 2.0; ell] }
    }

    /// All inner components mapped to radial slits.
    pub fn radial(ell: usize) -> Self {
        SlitSpec { thetas: vec![0.0; ell] }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Angles for all components including the outer one.
    pub fn full_thetas(&self) -> Vec<f64> {
        let mut full = Vec::with_capacity(self.thetas.len() + 1);
        full.push(PI / 2.0);
        full.extend_from_slice(&self.thetas);
        full
    }

    fn is_circular(&self, inner_index: usize) -> bool {
        self.thetas[inner_index] == PI / 2.0
    }
}

/// Canonical slit datum of one inner component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlitParam {
    /// Radius of the circular slit, in `(0, 1)`.
    CircularRadius(f64),
    /// Angle of the radial slit, normalized to `(-π, π]`.
    RadialAngle(f64),
}

/// Everything the method computes at a single point.
#[derive(Debug, Clone)]
pub struct MityukResult {
    pub alpha: C64,
    /// The outer harmonic constant `h_0 = log R`.
    pub h0: f64,
    /// `R(G, α) = e^{h_0}`.
    pub radius: f64,
    /// `m(G, α) = h_0 / (2π)`.
    pub m: f64,
    /// Normalization `c = e^{-h_0}` with `Φ'(α) = c`.
    pub c: f64,
    pub slit_params: Vec<SlitParam>,
    /// Weighted deviation of `h` from constancy on each component,
    /// outer first. Large values signal an unresolved discretization.
    pub constancy_residuals: Vec<f64>,
    /// Relative residual of the linear solve.
    pub residual: f64,
    /// Matrix-vector products spent by the linear solver.
    pub iterations: usize,
    /// `Φ` at the boundary nodes, when requested.
    pub boundary_values: Option<Vec<C64>>,
}

fn principal(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

fn normalize_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Assemble the coefficient function `A` and the boundary data `γ` for a
/// given point and slit assignment.
///
/// On radial components the argument is unwrapped along the component;
/// the unwrap must close up (the point cannot wind around the hole), and
/// a nonzero closure defect is reported as an error.
pub fn build_rhs(
    data: &BoundaryData,
    alpha: C64,
    slits: &SlitSpec,
) -> Result<(CoefficientA, Vec<f64>)> {
    if slits.len() + 1 != data.ncomp() {
        return Err(Error::SlitSpec(format!(
            "{} slit angles for {} inner components",
            slits.len(),
            data.ncomp() - 1
        )));
    }
    let full = slits.full_thetas();
    let a = CoefficientA::new(data, alpha, &full)?;
    let mut gamma = vec![0.0; data.total()];
    for k in 0..data.ncomp() {
        let range = data.comp_range(k);
        let circular = k == 0 || slits.is_circular(k - 1);
        if circular {
            for i in range {
                gamma[i] = -(data.nodes[i] - alpha).norm().ln();
            }
        } else {
            let raw: Vec<f64> = range
                .clone()
                .map(|i| {
                    let d = data.nodes[i] - alpha;
                    d.im.atan2(d.re)
                })
                .collect();
            let off = range.start;
            gamma[off] = raw[0];
            for i in 1..raw.len() {
                gamma[off + i] = gamma[off + i - 1] + principal(raw[i] - raw[i - 1]);
            }
            let defect = gamma[off + raw.len() - 1] + principal(raw[0] - raw[raw.len() - 1])
                - gamma[off];
            if defect.abs() > 0.5 {
                return Err(Error::UnwrapDefect { component: k, defect });
            }
        }
    }
    Ok((a, gamma))
}

/// Boundary values of the mapping function from a solved density:
/// `Φ = c (η - α) exp((η - α) f)` with `f = (γ + h + i μ) / A`.
pub fn boundary_map(
    data: &BoundaryData,
    alpha: C64,
    slits: &SlitSpec,
    dens: &DensityAndConstants,
) -> Result<Vec<C64>> {
    let (a, gamma) = build_rhs(data, alpha, slits)?;
    let c = (-dens.h_means[0]).exp();
    let mut phi = Vec::with_capacity(data.total());
    for i in 0..data.total() {
        let f = (C64::new(gamma[i] + dens.h[i], dens.mu[i])) / a.values[i];
        let d = data.nodes[i] - alpha;
        phi.push(c * d * (d * f).exp());
    }
    Ok(phi)
}

/// A domain prepared for repeated evaluations: the Cauchy factor is built
/// once and shared by every point.
pub struct MityukEngine {
    domain: DomainGeometry,
    factor: CauchyFactor,
    slits: SlitSpec,
    thetas: Vec<f64>,
    cfg: SolverConfig,
    guard: f64,
}

impl MityukEngine {
    pub fn new(domain: DomainGeometry, slits: SlitSpec, cfg: SolverConfig) -> Result<Self> {
        if slits.len() != domain.ell {
            return Err(Error::SlitSpec(format!(
                "{} slit angles for a domain of connectivity {}",
                slits.len(),
                domain.ell + 1
            )));
        }
        let factor = CauchyFactor::new(&domain)?;
        let guard = (1e-3 * domain.max_node_gap()).max(1e-6 * domain.diameter());
        let thetas = slits.full_thetas();
        Ok(MityukEngine { domain, factor, slits, thetas, cfg, guard })
    }

    pub fn domain(&self) -> &DomainGeometry {
        &self.domain
    }

    pub fn factor(&self) -> &CauchyFactor {
        &self.factor
    }

    pub fn slits(&self) -> &SlitSpec {
        &self.slits
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Evaluate at one point.
    pub fn evaluate(&self, alpha: C64) -> Result<MityukResult> {
        Ok(self.evaluate_warm(alpha, None, false)?.0)
    }

    /// Evaluate with an optional warm start for the density; returns the
    /// density for reuse at a neighboring point.
    pub fn evaluate_warm(
        &self,
        alpha: C64,
        warm: Option<&[f64]>,
        want_boundary: bool,
    ) -> Result<(MityukResult, Vec<f64>)> {
        if !self.domain.contains(alpha) {
            return Err(Error::NotInterior { re: alpha.re, im: alpha.im });
        }
        let d = self.domain.dist_to_boundary(alpha);
        if d < self.guard {
            return Err(Error::NearBoundary { re: alpha.re, im: alpha.im, guard: self.guard });
        }
        let data = &self.factor.data;
        let (a, gamma) = build_rhs(data, alpha, &self.slits)?;
        let sys = NeumannApply::new(&self.factor, &a, &self.thetas)?;
        let dens = solve_density_warm(&sys, &gamma, &self.cfg, warm)?;

        let h0 = dens.h_means[0];
        let radius = h0.exp();
        let mut slit_params = Vec::with_capacity(self.slits.len());
        for k in 1..data.ncomp() {
            let hk = dens.h_means[k];
            if self.slits.is_circular(k - 1) {
                slit_params.push(SlitParam::CircularRadius((hk - h0).exp()));
            } else {
                slit_params.push(SlitParam::RadialAngle(normalize_angle(-hk)));
            }
        }
        let boundary_values = if want_boundary {
            Some(boundary_map(data, alpha, &self.slits, &dens)?)
        } else {
            None
        };
        let result = MityukResult {
            alpha,
            h0,
            radius,
            m: h0 / (2.0 * PI),
            c: (-h0).exp(),
            slit_params,
            constancy_residuals: dens.h_residuals.clone(),
            residual: dens.residual,
            iterations: dens.iterations,
            boundary_values,
        };
        Ok((result, dens.mu))
    }
}

/// One-shot evaluation of `R(G, α)` and friends.
pub fn mityuk_values(
    domain: &DomainGeometry,
    alpha: C64,
    slits: &SlitSpec,
    cfg: &SolverConfig,
) -> Result<MityukResult> {
    MityukEngine::new(domain.clone(), slits.clone(), *cfg)?.evaluate(alpha)
}

/// A slit domain (outer closed curve minus one straight segment),
/// prepared for repeated evaluations through the open-up map. The image
/// domain and its Cauchy factor are built once; each point only costs an
/// evaluation on the image domain.
pub struct OpenUpEngine {
    outer: ParamBoundary,
    slit: (C64, C64),
    scale: f64,
    inv_span: C64,
    image: MityukEngine,
    guard: f64,
}

impl OpenUpEngine {
    /// `slit_theta` selects the canonical image of the slit: `π/2` for a
    /// circular slit, `0` for a radial slit.
    pub fn new(
        outer: ParamBoundary,
        slit: (C64, C64),
        slit_theta: f64,
        cfg: SolverConfig,
    ) -> Result<Self> {
        let outer = if outer.signed_area() > 0.0 { outer } else { outer.reversed() };
        let (sa, sb) = slit;
        let span = sb - sa;
        let scale = span.norm();
        if scale == 0.0 {
            return Err(Error::OpenUp("slit endpoints coincide".into()));
        }
        let inv_span = 1.0 / span;
        for node in &outer.nodes {
            if segment_dist(*node, sa, sb) < 1e-12 * scale {
                return Err(Error::OpenUp("slit touches the outer boundary".into()));
            }
        }
        if outer.winding(sa) != 1 || outer.winding(sb) != 1 {
            return Err(Error::OpenUp("slit is not inside the outer boundary".into()));
        }

        let n = outer.n();
        let mut nodes = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            let u = (outer.nodes[i] - sa) * inv_span;
            let w = open_up_psi2(u);
            if !w.re.is_finite() || !w.im.is_finite() || w.norm() <= 1.0 {
                return Err(Error::OpenUp(format!(
                    "outer boundary node {i} does not open up outside the unit circle"
                )));
            }
            let tp = outer.first_derivs[i] * inv_span;
            let tpp = outer.second_derivs[i] * inv_span;
            nodes.push(w);
            d1.push(open_up_psi2_deriv(u) * tp);
            d2.push(open_up_psi2_second(u) * tp * tp + open_up_psi2_deriv(u) * tpp);
        }
        let image_outer = ParamBoundary::from_samples(
            nodes,
            d1,
            d2,
            outer.corner_mask.clone(),
            Shape::Curve,
        )?;
        let circle = make_circle(C64::new(0.0, 0.0), 1.0, false, n)?;
        let image_dom = assemble_domain(image_outer, vec![circle])?;
        let slits = SlitSpec::new(vec![slit_theta])?;
        let image = MityukEngine::new(image_dom, slits, cfg)?;
        let guard = (1e-3 * outer.max_gap()).max(1e-6 * scale);
        Ok(OpenUpEngine { outer, slit: (sa, sb), scale, inv_span, image, guard })
    }

    pub fn image(&self) -> &MityukEngine {
        &self.image
    }

    /// The outer curve of the slit domain itself (not of the image).
    pub fn outer(&self) -> &ParamBoundary {
        &self.outer
    }

    /// Slit endpoints.
    pub fn slit(&self) -> (C64, C64) {
        self.slit
    }

    /// Whether `z` lies in the slit domain (inside the outer curve, off
    /// the slit).
    pub fn contains(&self, z: C64) -> bool {
        self.outer.winding(z) == 1 && self.dist_to_boundary(z) > 1e-6 * self.scale
    }

    /// Distance to the outer curve or the slit, whichever is closer.
    pub fn dist_to_boundary(&self, z: C64) -> f64 {
        self.outer.dist(z).min(segment_dist(z, self.slit.0, self.slit.1))
    }

    pub fn max_node_gap(&self) -> f64 {
        self.outer.max_gap()
    }

    pub fn evaluate(&self, alpha: C64) -> Result<MityukResult> {
        Ok(self.evaluate_warm(alpha, None)?.0)
    }

    pub fn evaluate_warm(
        &self,
        alpha: C64,
        warm: Option<&[f64]>,
    ) -> Result<(MityukResult, Vec<f64>)> {
        if self.outer.winding(alpha) != 1 {
            return Err(Error::NotInterior { re: alpha.re, im: alpha.im });
        }
        if self.dist_to_boundary(alpha) < self.guard {
            return Err(Error::NearBoundary {
                re: alpha.re,
                im: alpha.im,
                guard: self.guard,
            });
        }
        let u = (alpha - self.slit.0) * self.inv_span;
        let w_alpha = open_up_psi2(u);
        if w_alpha.norm() <= 1.0 + 1e-9 {
            return Err(Error::OpenUp(format!(
                "point ({}, {}) maps within the guard distance of the unit circle",
                alpha.re, alpha.im
            )));
        }
        let deriv = open_up_psi2_deriv(u).norm();
        let (img, mu) = self.image.evaluate_warm(w_alpha, warm, false)?;
        let radius = self.scale * img.radius / deriv;
        let h0 = radius.ln();
        let result = MityukResult {
            alpha,
            h0,
            radius,
            m: h0 / (2.0 * PI),
            c: (-h0).exp(),
            slit_params: img.slit_params.clone(),
            constancy_residuals: img.constancy_residuals.clone(),
            residual: img.residual,
            iterations: img.iterations,
            boundary_values: None,
        };
        Ok((result, mu))
    }
}

/// One-shot evaluation on a slit domain through the open-up map.
pub fn mityuk_via_openup(
    outer: &ParamBoundary,
    slit: (C64, C64),
    slit_theta: f64,
    alpha: C64,
    cfg: &SolverConfig,
) -> Result<MityukResult> {
    OpenUpEngine::new(outer.clone(), slit, slit_theta, *cfg)?.evaluate(alpha)
}
