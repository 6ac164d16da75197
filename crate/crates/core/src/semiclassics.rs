//! The model Bargmann–Fock projector on `R^{2n}` with frequencies `a_i`,
//! and quadrature checks of its reproducing and Gaussian-moment identities.
//!
//! Both integrands factor over the `2n` real axes, so each check is a
//! product of one-dimensional Gauss–Legendre sums on a box centred on the
//! integrand's Gaussian peak.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::GaussLegendre;
use crate::symbols::Symbol;
use crate::C64;

/// Gauss–Legendre order per real axis for isotropic frequencies.
pub const DEFAULT_ORDER: usize = 64;
/// Box half-width in units of the widest Gaussian's standard deviation.
pub const BOX_SIGMAS: f64 = 8.0;
/// Largest Gaussian mass allowed outside the box.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelKernelParams {
    a: Vec<f64>,
    half_width: f64,
    order: usize,
}

impl ModelKernelParams {
    /// Frequencies must be positive, finite and ascending; `n = a.len()` is
    /// 1 or 2.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "model dimension must be 1 or 2, got {}",
                a.len()
            )));
        }
        if a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument(
                "frequencies must be positive and finite".into(),
            ));
        }
        if a.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(
                "frequencies must be sorted ascending".into(),
            ));
        }
        let half_width = BOX_SIGMAS / a[0].sqrt();
        // keep the node spacing fixed relative to the narrowest Gaussian
        let ratio = (a[a.len() - 1] / a[0]).sqrt().ceil() as usize;
        Ok(Self {
            a,
            half_width,
            order: DEFAULT_ORDER * ratio,
        })
    }

    pub fn with_half_width(mut self, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidArgument(
                "box half-width must be positive".into(),
            ));
        }
        self.half_width = half_width;
        Ok(self)
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument(
                "quadrature order must be positive".into(),
            ));
        }
        self.order = order;
        Ok(self)
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `prod a_i / 2pi`, the value of the kernel on the diagonal.
    pub fn diagonal_value(&self) -> f64 {
        self.a.iter().map(|a| a / (2.0 * PI)).product()
    }

    /// Gaussian mass lost outside the box, summed over the real axes. Each
    /// axis integrand has standard deviation `a_i^{-1/2}`; each `a_i` covers
    /// two real axes.
    pub fn boundary_mass(&self) -> f64 {
        self.a
            .iter()
            .map(|a| 2.0 * erfc(self.half_width * (a / 2.0).sqrt()))
            .sum()
    }

    fn check_box(&self) -> Result<()> {
        let m = self.boundary_mass();
        if m > BOUNDARY_MASS_LIMIT {
            return Err(Error::QuadratureFault(format!(
                "box half-width {} leaves mass {m:.3e} outside",
                self.half_width
            )));
        }
        Ok(())
    }

    fn check_vector(&self, z: &[f64]) -> Result<()> {
        if z.len() != 2 * self.n() {
            return Err(Error::DimensionMismatch(z.len(), 2 * self.n()));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("model-space point".into()));
        }
        Ok(())
    }
}

/// `(2pi)^{-n} prod a_i exp(-1/4 sum a_i (|z_i|^2 + |z'_i|^2 - 2 z_i conj(z'_i)))`
/// with `z_i = Z_{2i} + i Z_{2i+1}`.
pub fn model_projector(params: &ModelKernelParams, z: &[f64], zp: &[f64]) -> Result<C64> {
    params.check_vector(z)?;
    params.check_vector(zp)?;
    let mut exponent = C64::new(0.0, 0.0);
    for (i, a) in params.a.iter().enumerate() {
        let zi = C64::new(z[2 * i], z[2 * i + 1]);
        let wi = C64::new(zp[2 * i], zp[2 * i + 1]);
        exponent -= 0.25 * a * (zi.norm_sqr() + wi.norm_sqr() - 2.0 * zi * wi.conj());
    }
    Ok(params.diagonal_value() * exponent.exp())
}

/// `int exp(-a s^2 / 2 + a s (m + i g / 2)) ds` by Gauss–Legendre on the
/// box centred at the real peak `s = m`.
fn axis_integral(rule: &GaussLegendre, half_width: f64, a: f64, m: f64, g: f64) -> C64 {
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(x, w)| {
            let s = m + half_width * x;
            let e = C64::new(-0.5 * a * s * s + a * s * m, 0.5 * a * g * s);
            w * half_width * e.exp()
        })
        .sum()
}

/// `int P(Z, Z'') P(Z'', Z') dZ''` by tensor quadrature.
pub fn reproducing_integral(params: &ModelKernelParams, z: &[f64], zp: &[f64]) -> Result<C64> {
    params.check_vector(z)?;
    params.check_vector(zp)?;
    params.check_box()?;
    let rule = GaussLegendre::new(params.order)?;
    let mut acc = C64::new(1.0, 0.0);
    for (i, a) in params.a.iter().enumerate() {
        let (x, y, xp, yp) = (z[2 * i], z[2 * i + 1], zp[2 * i], zp[2 * i + 1]);
        let c = (a / (2.0 * PI)).powi(2) * (-0.25 * a * (x * x + y * y + xp * xp + yp * yp)).exp();
        let u = axis_integral(&rule, params.half_width, *a, 0.5 * (x + xp), y - yp);
        let v = axis_integral(&rule, params.half_width, *a, 0.5 * (y + yp), xp - x);
        acc *= c * u * v;
    }
    Ok(acc)
}

/// A fixed panel of nine points in `R^{2n}` with coordinates in
/// `[-1/4, 1/4]`, starting at the origin.
pub fn model_panel(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..9)
        .map(|k| {
            (0..2 * n)
                .map(|m| {
                    if k == 0 {
                        0.0
                    } else {
                        0.25 * ((k * (m + 1)) as f64 * golden + m as f64).sin()
                    }
                })
                .collect()
        })
        .collect()
}

/// Max over all panel pairs of `|int P(Z,Z'')P(Z'',Z') dZ'' - P(Z,Z')|`.
pub fn check_reproducing(params: &ModelKernelParams) -> Result<f64> {
    let panel = model_panel(params.n());
    let mut worst = 0.0f64;
    for z in &panel {
        for zp in &panel {
            let r = (reproducing_integral(params, z, zp)? - model_projector(params, z, zp)?).norm();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// `|int P(sqrt(p) Z, sqrt(p) Z') p^n exp(-p |Z'|_a^2) dZ' - exp(-p |Z|_a^2)|`
/// with `|Z|_a^2 = 1/4 sum a_i |z_i|^2`. Integrated in the scaled variable
/// `W = sqrt(p) Z'`, which absorbs the `p^n`.
pub fn gaussian_moment_check(params: &ModelKernelParams, p: usize, z: &[f64]) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    params.check_vector(z)?;
    params.check_box()?;
    let rule = GaussLegendre::new(params.order)?;
    let sp = (p as f64).sqrt();
    let mut acc = C64::new(1.0, 0.0);
    let mut norm_a = 0.0;
    for (i, a) in params.a.iter().enumerate() {
        let (x, y) = (sp * z[2 * i], sp * z[2 * i + 1]);
        let c = a / (2.0 * PI) * (-0.25 * a * (x * x + y * y)).exp();
        let u = axis_integral(&rule, params.half_width, *a, 0.5 * x, y);
        let v = axis_integral(&rule, params.half_width, *a, 0.5 * y, -x);
        acc *= c * u * v;
        norm_a += 0.25 * a * (z[2 * i].powi(2) + z[2 * i + 1].powi(2));
    }
    Ok((acc - C64::new((-(p as f64) * norm_a).exp(), 0.0)).norm())
}

/// Leading diagonal coefficient of `p^{-n} T_{f,p}(x, x)` on a normalized
/// Kähler model: `f(x)`.
pub fn leading_coefficient(f: &Symbol, x: Point) -> C64 {
    f.eval(x)
}
