//! Closed-form reference values for domains where the slit map is known.
//!
//! For the unit disk the radius is elementary. For the annulus
//! `q < |z| < 1` both slit maps have classical infinite product
//! representations, evaluated here in log space with `log1p` so the result
//! stays accurate for moduli `q` close to 1 and points close to either
//! boundary.

use crate::{Error, Result};

/// Truncation control for the annulus products.
///
/// Summation stops once a log-space term falls below `tol` in absolute
/// value, or after `max_terms` terms. Terms decay like `q^{2j}`, so the
/// defaults are far more than enough for any `q <= 0.9`.
#[derive(Debug, Clone, Copy)]
pub struct ProductConfig {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig { tol: 1e-14, max_terms: 200 }
    }
}

/// Radius of the unit disk at `alpha`, `R = 1 - |alpha|^2`.
pub fn disk_r(alpha: num_complex::Complex64) -> f64 {
    1.0 - alpha.norm_sqr()
}

fn check_annulus_args(q: f64, r: f64) -> Result<()> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::OracleInput(format!("modulus q = {q} must lie in (0, 1)")));
    }
    if !(q < r && r < 1.0) {
        return Err(Error::OracleInput(format!(
            "radius r = {r} must lie strictly between q = {q} and 1"
        )));
    }
    Ok(())
}

fn log_product(q: f64, r: f64, alternate: bool, cfg: ProductConfig) -> f64 {
    let r2 = r * r;
    let mut acc = (-r2).ln_1p();
    let mut q2j = 1.0;
    for j in 1..=cfg.max_terms {
        q2j *= q * q;
        let term = (-q2j * r2).ln_1p() + (-q2j / r2).ln_1p() - 2.0 * (-q2j).ln_1p();
        acc += if alternate && j % 2 == 1 { -term } else { term };
        if term.abs() < cfg.tol {
            break;
        }
    }
    acc
}

/// Radius of the annulus `q < |z| < 1` at a point of modulus `r` for the
/// circular slit disk normalization.
///
/// The value depends only on `r = |alpha|` by rotational symmetry. It is
/// symmetric under `r -> q/r` and attains its maximum at `r = sqrt(q)`.
pub fn annulus_r_circular(q: f64, r: f64, cfg: ProductConfig) -> Result<f64> {
    check_annulus_args(q, r)?;
    Ok(log_product(q, r, false, cfg).exp())
}

/// Radius of the annulus `q < |z| < 1` at a point of modulus `r` for the
/// radial slit disk normalization.
///
/// Strictly decreasing in `r`: it blows up as `alpha` approaches the inner
/// circle and vanishes at the outer one.
pub fn annulus_r_radial(q: f64, r: f64, cfg: ProductConfig) -> Result<f64> {
    check_annulus_args(q, r)?;
    Ok(log_product(q, r, true, cfg).exp())
}
