//! The generalized Neumann kernel and its companion operator.
//!
//! With `A(t) = exp(i(π/2 - θ(t))) (η(t) - α)` the kernels are
//!
//! ```text
//! N(s, t) = (1/π) Im( A(s) η'(t) / (A(t) (η(t) - η(s))) )
//! M(s, t) = (1/π) Re( A(s) η'(t) / (A(t) (η(t) - η(s))) )
//! ```
//!
//! `N` is continuous and discretized by the plain trapezoidal rule. `M`
//! has a cotangent singularity on the diagonal blocks; its principal
//! value discretization is the trapezoidal part plus an explicit
//! circulant cotangent correction, the spectral treatment of the
//! conjugation operator.
//!
//! The `α`-dependence of both kernels sits in a rank-one term: with
//! `E(s, t) = η'(t)/(η(t) - η(s))` and `v(t) = η'(t)/(η(t) - α)`,
//!
//! ```text
//! A(s) η'(t) / (A(t)(η(t) - η(s))) = e^{-iθ(s)} (E(s, t) - v(t)) e^{iθ(t)}
//! ```
//!
//! so the expensive factor `E` depends only on the geometry and is cached
//! once per domain, while each new `α` costs `O(n)` to set up. For
//! domains bounded entirely by circles, `E` additionally splits into
//! circulant diagonal blocks (applied with the FFT) and smooth
//! off-diagonal blocks (applied with truncated multipole or Taylor
//! expansions about the source circle center), which turns a
//! matrix-vector product into a near-linear operation without ever
//! forming `E`.

use crate::geometry::{DomainGeometry, Shape};
use crate::{C64, Error, Result};
use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Flattened per-node arrays over all boundary components.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub nodes: Vec<C64>,
    pub d1: Vec<C64>,
    pub d2: Vec<C64>,
    /// Trapezoidal column weight `2 / n_k` of the node's component.
    pub weights: Vec<f64>,
    /// Component index per node.
    pub comp: Vec<usize>,
    pub corner: Vec<bool>,
    /// Start offset per component, with a final sentinel equal to the
    /// total node count.
    pub offsets: Vec<usize>,
    /// `|η'|` per node, the arclength density.
    pub speed: Vec<f64>,
}

impl BoundaryData {
    fn from_domain(domain: &DomainGeometry) -> Self {
        let total = domain.total_nodes();
        let ncomp = domain.boundaries.len();
        let mut data = BoundaryData {
            nodes: Vec::with_capacity(total),
            d1: Vec::with_capacity(total),
            d2: Vec::with_capacity(total),
            weights: Vec::with_capacity(total),
            comp: Vec::with_capacity(total),
            corner: Vec::with_capacity(total),
            offsets: Vec::with_capacity(ncomp + 1),
            speed: Vec::with_capacity(total),
        };
        for (k, b) in domain.boundaries.iter().enumerate() {
            data.offsets.push(data.nodes.len());
            let w = 2.0 / b.n() as f64;
            for i in 0..b.n() {
                data.nodes.push(b.nodes[i]);
                data.d1.push(b.first_derivs[i]);
                data.d2.push(b.second_derivs[i]);
                data.weights.push(w);
                data.comp.push(k);
                data.corner.push(b.corner_mask[i]);
                data.speed.push(b.first_derivs[i].norm());
            }
        }
        data.offsets.push(data.nodes.len());
        data
    }

    pub fn total(&self) -> usize {
        self.nodes.len()
    }

    pub fn ncomp(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn comp_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }
}

/// Reusable buffers for the FFT and expansion passes.
struct EScratch {
    block: Vec<C64>,
    fft: Vec<C64>,
    expansion: Vec<C64>,
}

/// Scratch buffers for operator applications; one per thread.
pub struct Workspace {
    scratch: EScratch,
    cvec: Vec<C64>,
    uvec: Vec<C64>,
}

struct CotBlock {
    n: usize,
    /// The correction weights `c_p = (-1)^p cot(π p / n) / n`, `c_0 = 0`.
    cvec: Vec<f64>,
    /// Forward FFT of `c`, for the circulant convolution.
    chat: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

enum BlockOp {
    /// Self-interaction of a circle: the block is circulant.
    Circulant {
        n: usize,
        dhat: Vec<C64>,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
    /// All targets outside the source circle: multipole expansion about
    /// the source center.
    Multipole { center: C64, terms: usize },
    /// All sources outside the target circle: local expansion about the
    /// target center.
    Local { center: C64, terms: usize },
}

enum Backend {
    Dense { er: Vec<f64>, ei: Vec<f64> },
    Circles { blocks: Vec<BlockOp> },
}

/// The cached, `α`-independent part of the kernel: the Cauchy factor
/// `E(s, t) = η'(t)/(η(t) - η(s))` with trapezoidal weights folded in,
/// plus the diagonal limits and the cotangent corrections.
pub struct CauchyFactor {
    pub data: BoundaryData,
    backend: Backend,
    /// `η''/(2η')` per node, zero at corners.
    diag_eta: Vec<C64>,
    /// `w_j η'_j` per node: the quadrature charge of each source node.
    qc: Vec<C64>,
    cot: Vec<CotBlock>,
    max_block: usize,
    max_terms: usize,
}

fn fill_dense(data: &BoundaryData) -> (Vec<f64>, Vec<f64>) {
    let t = data.total();
    let mut er = vec![0.0; t * t];
    let mut ei = vec![0.0; t * t];
    for i in 0..t {
        let zi = data.nodes[i];
        let row_r = &mut er[i * t..(i + 1) * t];
        let row_i = &mut ei[i * t..(i + 1) * t];
        for j in 0..t {
            if j == i {
                continue;
            }
            let e = data.weights[j] * data.d1[j] / (data.nodes[j] - zi);
            row_r[j] = e.re;
            row_i[j] = e.im;
        }
    }
    (er, ei)
}

struct PlanCache {
    planner: FftPlanner<f64>,
    plans: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl PlanCache {
    fn new() -> Self {
        PlanCache { planner: FftPlanner::new(), plans: HashMap::new() }
    }

    fn get(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let planner = &mut self.planner;
        self.plans
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    }
}

/// Truncation length making a geometric tail `ρ^(K+1)/(1-ρ)` smaller than
/// `1e-16`, or `None` when the ratio is too close to 1 to be practical.
fn expansion_terms(rho: f64) -> Option<usize> {
    if !(0.0 < rho && rho < 0.93) {
        return None;
    }
    let k = ((1e-16 * (1.0 - rho)).ln() / rho.ln()).ceil() as usize;
    let k = k.max(8) + 4;
    if k > 400 {
        None
    } else {
        Some(k)
    }
}

fn try_circle_blocks(
    domain: &DomainGeometry,
    data: &BoundaryData,
    plans: &mut PlanCache,
) -> Option<(Vec<BlockOp>, usize)> {
    let ncomp = data.ncomp();
    let mut blocks: Vec<BlockOp> = Vec::with_capacity(ncomp * ncomp);
    let mut max_terms = 0usize;
    for tgt in 0..ncomp {
        let Shape::Circle { center: tc, radius: tr, .. } = domain.boundaries[tgt].shape else {
            return None;
        };
        for src in 0..ncomp {
            let Shape::Circle { center: sc, radius: sr, .. } = domain.boundaries[src].shape
            else {
                return None;
            };
            if tgt == src {
                let r = data.comp_range(src);
                let (off, n) = (r.start, r.len());
                let mut d = vec![C64::new(0.0, 0.0); n];
                let z0 = data.nodes[off];
                for (k, dk) in d.iter_mut().enumerate().skip(1) {
                    let j = off + (n - k);
                    *dk = data.weights[j] * data.d1[j] / (data.nodes[j] - z0);
                }
                let (fwd, inv) = plans.get(n);
                let mut scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
                fwd.process_with_scratch(&mut d, &mut scratch);
                blocks.push(BlockOp::Circulant { n, dhat: d, fwd, inv });
                continue;
            }
            // Either expansion may apply; take the faster-converging one.
            let dmin_t = data
                .comp_range(tgt)
                .map(|i| (data.nodes[i] - sc).norm())
                .fold(f64::INFINITY, f64::min);
            let dmin_s = data
                .comp_range(src)
                .map(|j| (data.nodes[j] - tc).norm())
                .fold(f64::INFINITY, f64::min);
            let rho_m = if dmin_t > sr { Some(sr / dmin_t) } else { None };
            let rho_l = if dmin_s > tr { Some(tr / dmin_s) } else { None };
            let op = match (rho_m, rho_l) {
                (Some(a), Some(b)) if a <= b => BlockOp::Multipole {
                    center: sc,
                    terms: expansion_terms(a)?,
                },
                (_, Some(b)) => BlockOp::Local { center: tc, terms: expansion_terms(b)? },
                (Some(a), None) => BlockOp::Multipole {
                    center: sc,
                    terms: expansion_terms(a)?,
                },
                (None, None) => return None,
            };
            if let BlockOp::Multipole { terms, .. } | BlockOp::Local { terms, .. } = op {
                max_terms = max_terms.max(terms);
            }
            blocks.push(op);
        }
    }
    Some((blocks, max_terms))
}

/// Accumulate a source block's expansion coefficients into `buf`; the
/// cost is one pass over the sources regardless of the target count.
fn expansion_coeffs(
    op: &BlockOp,
    nodes: &[C64],
    srange: std::ops::Range<usize>,
    charges: impl Fn(usize) -> C64,
    buf: &mut [C64],
) {
    match op {
        BlockOp::Circulant { .. } => unreachable!("circulant blocks are applied by FFT"),
        BlockOp::Multipole { center, terms } => {
            let mom = &mut buf[..*terms];
            for m in mom.iter_mut() {
                *m = C64::new(0.0, 0.0);
            }
            for j in srange {
                let mut cur = charges(j);
                let base = nodes[j] - center;
                for m in mom.iter_mut() {
                    *m += cur;
                    cur *= base;
                }
            }
        }
        BlockOp::Local { center, terms } => {
            let coef = &mut buf[..*terms];
            for c in coef.iter_mut() {
                *c = C64::new(0.0, 0.0);
            }
            for j in srange {
                let p = 1.0 / (nodes[j] - center);
                let mut cur = charges(j) * p;
                for c in coef.iter_mut() {
                    *c += cur;
                    cur *= p;
                }
            }
        }
    }
}

/// Evaluate a block expansion with prebuilt coefficients at one target.
fn expansion_eval(op: &BlockOp, buf: &[C64], target: C64) -> C64 {
    match op {
        BlockOp::Circulant { .. } => unreachable!("circulant blocks are applied by FFT"),
        BlockOp::Multipole { center, terms } => {
            let zeta = 1.0 / (target - center);
            let mut acc = buf[*terms - 1];
            for k in (0..*terms - 1).rev() {
                acc = buf[k] + zeta * acc;
            }
            -zeta * acc
        }
        BlockOp::Local { center, terms } => {
            let x = target - center;
            let mut acc = buf[*terms - 1];
            for k in (0..*terms - 1).rev() {
                acc = buf[k] + x * acc;
            }
            acc
        }
    }
}

impl CauchyFactor {
    /// Build the cached factor for a domain, choosing the structured
    /// backend when every component is a circle and the separation
    /// geometry allows it, the dense backend otherwise.
    pub fn new(domain: &DomainGeometry) -> Result<Self> {
        let data = BoundaryData::from_domain(domain);
        let t = data.total();
        let mut diag_eta = vec![C64::new(0.0, 0.0); t];
        let mut qc = vec![C64::new(0.0, 0.0); t];
        for i in 0..t {
            if !data.corner[i] {
                diag_eta[i] = data.d2[i] / (2.0 * data.d1[i]);
            }
            qc[i] = data.weights[i] * data.d1[i];
        }

        let mut plans = PlanCache::new();
        let mut cot = Vec::with_capacity(data.ncomp());
        let mut max_block = 0usize;
        for k in 0..data.ncomp() {
            let n = data.comp_range(k).len();
            max_block = max_block.max(n);
            let mut cvec = vec![0.0; n];
            for (p, c) in cvec.iter_mut().enumerate().skip(1) {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                *c = sign * (PI * p as f64 / n as f64).tan().recip() / n as f64;
            }
            let (fwd, inv) = plans.get(n);
            let mut chat: Vec<C64> = cvec.iter().map(|&x| C64::new(x, 0.0)).collect();
            let mut scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
            fwd.process_with_scratch(&mut chat, &mut scratch);
            cot.push(CotBlock { n, cvec, chat, fwd, inv });
        }

        let mut max_terms = 0usize;
        let backend = if domain.all_circles() {
            match try_circle_blocks(domain, &data, &mut plans) {
                Some((blocks, terms)) => {
                    max_terms = terms;
                    Backend::Circles { blocks }
                }
                None => {
                    let (er, ei) = fill_dense(&data);
                    Backend::Dense { er, ei }
                }
            }
        } else {
            let (er, ei) = fill_dense(&data);
            Backend::Dense { er, ei }
        };

        let factor =
            CauchyFactor { data, backend, diag_eta, qc, cot, max_block, max_terms };
        factor.validate_expansions()?;
        Ok(factor)
    }

    /// Whether the structured circle backend is active.
    pub fn is_structured(&self) -> bool {
        matches!(self.backend, Backend::Circles { .. })
    }

    /// Scratch buffers sized for this factor.
    pub fn workspace(&self) -> Workspace {
        let scratch_len = self
            .cot
            .iter()
            .map(|c| c.fwd.get_inplace_scratch_len().max(c.inv.get_inplace_scratch_len()))
            .max()
            .unwrap_or(0);
        let t = self.data.total();
        Workspace {
            scratch: EScratch {
                block: vec![C64::new(0.0, 0.0); self.max_block],
                fft: vec![C64::new(0.0, 0.0); scratch_len],
                expansion: vec![C64::new(0.0, 0.0); self.max_terms.max(1)],
            },
            cvec: vec![C64::new(0.0, 0.0); t],
            uvec: vec![C64::new(0.0, 0.0); t],
        }
    }

    /// Spot-check every expansion block against direct summation with the
    /// actual quadrature charges; fail loudly rather than return quietly
    /// degraded values.
    fn validate_expansions(&self) -> Result<()> {
        let Backend::Circles { blocks } = &self.backend else {
            return Ok(());
        };
        let ncomp = self.data.ncomp();
        let mut buf = vec![C64::new(0.0, 0.0); self.max_terms.max(1)];
        for tgt in 0..ncomp {
            for src in 0..ncomp {
                let op = &blocks[tgt * ncomp + src];
                if matches!(op, BlockOp::Circulant { .. }) {
                    continue;
                }
                let srange = self.data.comp_range(src);
                let trange = self.data.comp_range(tgt);
                expansion_coeffs(op, &self.data.nodes, srange.clone(), |j| self.qc[j], &mut buf);
                for frac in [0usize, 1, 2, 3] {
                    let i = trange.start + frac * trange.len() / 4;
                    let w = self.data.nodes[i];
                    let mut direct = C64::new(0.0, 0.0);
                    let mut scale = 0.0;
                    for j in srange.clone() {
                        let term = self.qc[j] / (self.data.nodes[j] - w);
                        direct += term;
                        scale += term.norm();
                    }
                    let approx = expansion_eval(op, &buf, w);
                    if (approx - direct).norm() > 1e-11 * scale.max(1e-300) {
                        return Err(Error::Solve(format!(
                            "expansion self-check failed for block ({tgt}, {src})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `y = E u` with the quadrature weights folded in and a zero
    /// diagonal: `y_i = Σ_{j != i} w_j η'_j u_j / (η_j - η_i)`.
    pub fn apply_e(&self, u: &[C64], y: &mut [C64], ws: &mut Workspace) {
        self.apply_e_scratch(u, y, &mut ws.scratch);
    }

    fn apply_e_scratch(&self, u: &[C64], y: &mut [C64], ws: &mut EScratch) {
        let t = self.data.total();
        debug_assert_eq!(u.len(), t);
        debug_assert_eq!(y.len(), t);
        match &self.backend {
            Backend::Dense { er, ei } => {
                for i in 0..t {
                    let row_r = &er[i * t..(i + 1) * t];
                    let row_i = &ei[i * t..(i + 1) * t];
                    let mut acc_r = 0.0;
                    let mut acc_i = 0.0;
                    for j in 0..t {
                        let (ur, ui) = (u[j].re, u[j].im);
                        acc_r += row_r[j] * ur - row_i[j] * ui;
                        acc_i += row_r[j] * ui + row_i[j] * ur;
                    }
                    y[i] = C64::new(acc_r, acc_i);
                }
            }
            Backend::Circles { blocks } => {
                for yi in y.iter_mut() {
                    *yi = C64::new(0.0, 0.0);
                }
                let ncomp = self.data.ncomp();
                for tgt in 0..ncomp {
                    let trange = self.data.comp_range(tgt);
                    for src in 0..ncomp {
                        let srange = self.data.comp_range(src);
                        let op = &blocks[tgt * ncomp + src];
                        if let BlockOp::Circulant { n, dhat, fwd, inv } = op {
                            let buf = &mut ws.block[..*n];
                            buf.copy_from_slice(&u[srange]);
                            fwd.process_with_scratch(buf, &mut ws.fft);
                            for (b, d) in buf.iter_mut().zip(dhat) {
                                *b *= d;
                            }
                            inv.process_with_scratch(buf, &mut ws.fft);
                            let scale = 1.0 / *n as f64;
                            for (yi, b) in y[trange.clone()].iter_mut().zip(buf.iter()) {
                                *yi += scale * b;
                            }
                        } else {
                            expansion_coeffs(
                                op,
                                &self.data.nodes,
                                srange.clone(),
                                |j| self.qc[j] * u[j],
                                &mut ws.expansion,
                            );
                            for i in trange.clone() {
                                y[i] += expansion_eval(op, &ws.expansion, self.data.nodes[i]);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Blockwise circulant cotangent convolution used by the companion
    /// kernel: `y_i += Σ_j c_{(i - j) mod n} x_j` within each component.
    pub fn add_cot_convolution(&self, x: &[f64], y: &mut [f64], ws: &mut Workspace) {
        for (k, blk) in self.cot.iter().enumerate() {
            let range = self.data.comp_range(k);
            let buf = &mut ws.scratch.block[..blk.n];
            for (b, &xv) in buf.iter_mut().zip(&x[range.clone()]) {
                *b = C64::new(xv, 0.0);
            }
            blk.fwd.process_with_scratch(buf, &mut ws.scratch.fft);
            for (b, c) in buf.iter_mut().zip(&blk.chat) {
                *b *= c;
            }
            blk.inv.process_with_scratch(buf, &mut ws.scratch.fft);
            let scale = 1.0 / blk.n as f64;
            for (yi, b) in y[range].iter_mut().zip(buf.iter()) {
                *yi += scale * b.re;
            }
        }
    }

    /// Entry of the cotangent correction table for component `k` at local
    /// indices `(i, j)`.
    fn cot_entry(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.cot[k].n;
        self.cot[k].cvec[(i + n - j) % n]
    }
}

/// The coefficient function `A(t) = exp(i(π/2 - θ(t))) (η(t) - α)`
/// sampled at the nodes, with its derivative
/// `A'(t) = exp(i(π/2 - θ(t))) η'(t)`.
#[derive(Debug, Clone)]
pub struct CoefficientA {
    pub values: Vec<C64>,
    pub derivs: Vec<C64>,
}

impl CoefficientA {
    /// `thetas` holds one angle per component, the outer one included.
    pub fn new(data: &BoundaryData, alpha: C64, thetas: &[f64]) -> Result<Self> {
        if thetas.len() != data.ncomp() {
            return Err(Error::Dimension(format!(
                "{} slit angles for {} components",
                thetas.len(),
                data.ncomp()
            )));
        }
        let t = data.total();
        let mut values = Vec::with_capacity(t);
        let mut derivs = Vec::with_capacity(t);
        for i in 0..t {
            let phase = C64::new(0.0, PI / 2.0 - thetas[data.comp[i]]).exp();
            values.push(phase * (data.nodes[i] - alpha));
            derivs.push(phase * data.d1[i]);
        }
        Ok(CoefficientA { values, derivs })
    }
}

/// Dense discretizations of the kernel pair.
pub struct KernelMatrices {
    pub n: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

/// One solve-ready operator pair `(N, M)` for a fixed `α` and slit angle
/// assignment, applied matrix-free through the cached Cauchy factor.
pub struct NeumannApply<'a> {
    factor: &'a CauchyFactor,
    /// `e^{iθ}` per node.
    phases: Vec<C64>,
    /// `v_j = η'_j / (η_j - α)`, zero at corners.
    v: Vec<C64>,
    /// `A` values, kept for dense materialization.
    avalues: Vec<C64>,
    dn: Vec<f64>,
    dm: Vec<f64>,
}

impl<'a> NeumannApply<'a> {
    pub fn new(factor: &'a CauchyFactor, a: &CoefficientA, thetas: &[f64]) -> Result<Self> {
        let data = &factor.data;
        if thetas.len() != data.ncomp() {
            return Err(Error::Dimension(format!(
                "{} slit angles for {} components",
                thetas.len(),
                data.ncomp()
            )));
        }
        let t = data.total();
        if a.values.len() != t {
            return Err(Error::Dimension(format!(
                "coefficient sampled at {} nodes, domain has {}",
                a.values.len(),
                t
            )));
        }
        let mut phases = Vec::with_capacity(t);
        let mut v = Vec::with_capacity(t);
        let mut dn = Vec::with_capacity(t);
        let mut dm = Vec::with_capacity(t);
        for i in 0..t {
            phases.push(C64::new(0.0, thetas[data.comp[i]]).exp());
            let vi = a.derivs[i] / a.values[i];
            v.push(vi);
            let d = factor.diag_eta[i] - vi;
            dn.push(data.weights[i] * d.im);
            dm.push(data.weights[i] * d.re);
        }
        Ok(NeumannApply { factor, phases, v, avalues: a.values.clone(), dn, dm })
    }

    pub fn dim(&self) -> usize {
        self.factor.data.total()
    }

    pub fn factor(&self) -> &CauchyFactor {
        self.factor
    }

    /// The complex core `C x` through the rank-one split; the result is
    /// left in `ws.cvec`.
    fn core_into(&self, x: &[f64], ws: &mut Workspace) {
        let t = self.dim();
        let data = &self.factor.data;
        let Workspace { scratch, cvec, uvec } = ws;
        for j in 0..t {
            uvec[j] = self.phases[j] * x[j];
        }
        let mut s = C64::new(0.0, 0.0);
        for j in 0..t {
            s += data.weights[j] * self.v[j] * uvec[j];
        }
        self.factor.apply_e_scratch(uvec, cvec, scratch);
        for i in 0..t {
            let corrected = cvec[i] - s + data.weights[i] * self.v[i] * uvec[i];
            cvec[i] = self.phases[i].conj() * corrected;
        }
    }

    /// `y = N x`.
    pub fn apply_n(&self, x: &[f64], y: &mut [f64], ws: &mut Workspace) {
        self.core_into(x, ws);
        for i in 0..self.dim() {
            y[i] = ws.cvec[i].im + self.dn[i] * x[i];
        }
    }

    /// `y = M x`.
    pub fn apply_m(&self, x: &[f64], y: &mut [f64], ws: &mut Workspace) {
        self.core_into(x, ws);
        for i in 0..self.dim() {
            y[i] = ws.cvec[i].re + self.dm[i] * x[i];
        }
        self.factor.add_cot_convolution(x, y, ws);
    }

    /// `y = (I - N) x`.
    pub fn apply_i_minus_n(&self, x: &[f64], y: &mut [f64], ws: &mut Workspace) {
        self.apply_n(x, y, ws);
        for i in 0..self.dim() {
            y[i] = x[i] - y[i];
        }
    }

    /// Dense matrices for the direct solver and for cross-validation,
    /// assembled entrywise from the definition rather than the rank-one
    /// split.
    pub fn materialize(&self) -> KernelMatrices {
        let t = self.dim();
        let data = &self.factor.data;
        let inv_a: Vec<C64> = self.avalues.iter().map(|a| 1.0 / a).collect();
        let mut n_mat = DMatrix::<f64>::zeros(t, t);
        let mut m_mat = DMatrix::<f64>::zeros(t, t);
        for j in 0..t {
            let col = data.weights[j] * data.d1[j] * inv_a[j];
            for i in 0..t {
                if i == j {
                    n_mat[(i, j)] = self.dn[i];
                    m_mat[(i, j)] = self.dm[i];
                } else {
                    let c = self.avalues[i] * col / (data.nodes[j] - data.nodes[i]);
                    n_mat[(i, j)] = c.im;
                    m_mat[(i, j)] = c.re;
                }
                if data.comp[i] == data.comp[j] {
                    let k = data.comp[i];
                    m_mat[(i, j)] +=
                        self.factor.cot_entry(k, i - data.offsets[k], j - data.offsets[k]);
                }
            }
        }
        KernelMatrices { n: n_mat, m: m_mat }
    }
}

/// Dense discretization of `N` for a given coefficient function.
pub fn assemble_n(
    factor: &CauchyFactor,
    a: &CoefficientA,
    thetas: &[f64],
) -> Result<DMatrix<f64>> {
    Ok(NeumannApply::new(factor, a, thetas)?.materialize().n)
}

/// Dense discretization of `M` for a given coefficient function.
pub fn assemble_m(
    factor: &CauchyFactor,
    a: &CoefficientA,
    thetas: &[f64],
) -> Result<DMatrix<f64>> {
    Ok(NeumannApply::new(factor, a, thetas)?.materialize().m)
}

/// Both dense matrices in one pass.
pub fn assemble_nm(
    factor: &CauchyFactor,
    a: &CoefficientA,
    thetas: &[f64],
) -> Result<KernelMatrices> {
    Ok(NeumannApply::new(factor, a, thetas)?.materialize())
}

/// Which operator [`apply_operator`] should apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    N,
    M,
}

/// Convenience single-shot application allocating its own workspace.
pub fn apply_operator(sys: &NeumannApply, which: Operator, x: &[f64]) -> Vec<f64> {
    let mut ws = sys.factor().workspace();
    let mut y = vec![0.0; sys.dim()];
    match which {
        Operator::N => sys.apply_n(x, &mut y, &mut ws),
        Operator::M => sys.apply_m(x, &mut y, &mut ws),
    }
    y
}

/// The discrete conjugation operator: `K[i, j] = (2/n) cot(π (i - j)/n)`
/// for odd `i - j` and zero otherwise. Maps `cos(k t)` to `sin(k t)` and
/// `sin(k t)` to `-cos(k t)` exactly for `1 <= k < n/2`.
pub fn conjugation_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::OddNodeCount(n));
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let p = (i + n - j) % n;
            if p % 2 == 1 {
                k[(i, j)] = 2.0 / n as f64 * (PI * p as f64 / n as f64).tan().recip();
            }
        }
    }
    Ok(k)
}
