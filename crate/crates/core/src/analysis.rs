//! Operator functionals, expansion residuals over a `p` grid, and the
//! log–log rate fitter that turns remainder classes into verdicts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dirichlet_energy, integrate, PhaseSpace, Point};
use crate::hilbert::quantum_space;
use crate::symbols::{dist_to_const, dist_to_real, sup_norm, Regularity, Symbol};
use crate::toeplitz::{
    commutator_test, kernel_diagonal, multiplication_residual, product_residual, toeplitz_with,
    ProductOrder, QuadSpec,
};
use crate::{par, CMatrix, C64};

/// Residuals at or below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-12;
/// Default slack on fitted slopes.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Relative slack in the multiplication-operator bound.
pub const LAPLACE_EPSILON: f64 = 0.05;

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix entries".into()))
    }
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == a.ncols() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a.nrows(), a.ncols()))
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    check_square(a)?;
    check_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.clone().singular_values().max())
}

/// `sqrt(sum |a_jk|^2)`.
pub fn hs_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    Ok(a.norm())
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().sum()
}

/// `|| (A - A^*) / 2 ||_HS`, the distance to Hermitian matrices.
pub fn dist_to_hermitian(a: &CMatrix) -> Result<f64> {
    check_square(a)?;
    hs_norm(&((a - a.adjoint()) * C64::new(0.5, 0.0)))
}

/// `sqrt(tr(A A^*) - |tr A|^2 / d)`, the distance to `C Id`. Evaluated as
/// `|| A - (tr A / d) Id ||_HS`, which avoids the cancellation.
pub fn dist_to_scalar(a: &CMatrix) -> Result<f64> {
    check_square(a)?;
    let d = a.nrows();
    if d == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let mean = trace(a) / d as f64;
    let mut centred = a.clone();
    for j in 0..d {
        centred[(j, j)] -= mean;
    }
    hs_norm(&centred)
}

/// How a residual series is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitMode {
    /// Least-squares slope of `log r` against `log p` must not exceed
    /// `target + tolerance`.
    Slope,
    /// `r_p * p^{scale_exponent}` must decrease strictly; used for
    /// little-o claims, which a slope cannot certify.
    Monotone { scale_exponent: f64 },
}

/// Expected decay of a remainder for a symbol class: `(mode, exponent)`.
pub fn class_target(reg: Regularity) -> (FitMode, f64) {
    match reg {
        Regularity::Cinf | Regularity::C2 => (FitMode::Slope, -1.0),
        Regularity::C1 => (FitMode::Slope, -0.5),
        Regularity::C0 => (
            FitMode::Monotone {
                scale_exponent: 0.0,
            },
            0.0,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub p_grid: Vec<usize>,
    pub residuals: Vec<f64>,
    pub mode: FitMode,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub target_exponent: f64,
    pub tolerance: f64,
    /// Every residual was below [`ZERO_FLOOR`].
    pub exact_zero: bool,
    pub verdict: bool,
}

/// Least-squares `(slope, intercept)` of `log r` on `log p`, using the
/// strictly positive residuals only.
pub fn loglog_slope(p_grid: &[usize], residuals: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = p_grid
        .iter()
        .zip(residuals)
        .filter(|(_, r)| **r > ZERO_FLOOR && r.is_finite())
        .map(|(p, r)| ((*p as f64).ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn fit_rate(
    p_grid: &[usize],
    residuals: &[f64],
    target_exponent: f64,
    tolerance: f64,
    mode: FitMode,
) -> Result<RateFit> {
    if p_grid.len() != residuals.len() {
        return Err(Error::DimensionMismatch(p_grid.len(), residuals.len()));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("residual series".into()));
    }
    let exact_zero = !residuals.is_empty() && residuals.iter().all(|r| r.abs() <= ZERO_FLOOR);
    let fit = loglog_slope(p_grid, residuals);
    let mut out = RateFit {
        p_grid: p_grid.to_vec(),
        residuals: residuals.to_vec(),
        mode,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        target_exponent,
        tolerance,
        exact_zero,
        verdict: false,
    };
    if exact_zero {
        out.verdict = true;
        return Ok(out);
    }
    match mode {
        FitMode::Slope => {
            let (slope, _) = fit.ok_or(Error::InsufficientData {
                need: 3,
                got: residuals.iter().filter(|r| **r > ZERO_FLOOR).count(),
            })?;
            out.verdict = slope <= target_exponent + tolerance;
        }
        FitMode::Monotone { scale_exponent } => {
            if residuals.len() < 3 {
                return Err(Error::InsufficientData {
                    need: 3,
                    got: residuals.len(),
                });
            }
            out.verdict = strictly_decreasing(p_grid, residuals, scale_exponent);
        }
    }
    Ok(out)
}

/// `r_p p^{k}` strictly decreasing along the grid.
pub fn strictly_decreasing(p_grid: &[usize], residuals: &[f64], scale_exponent: f64) -> bool {
    let scaled: Vec<f64> = p_grid
        .iter()
        .zip(residuals)
        .map(|(p, r)| r * (*p as f64).powf(scale_exponent))
        .collect();
    scaled.windows(2).all(|w| w[1] < w[0])
}

/// Fits with the default target for the symbol class.
pub fn fit_for_class(p_grid: &[usize], residuals: &[f64], reg: Regularity) -> Result<RateFit> {
    let (mode, target) = class_target(reg);
    fit_rate(p_grid, residuals, target, SLOPE_TOLERANCE, mode)
}

/// A residual series together with the reference value it was measured
/// against at each `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub p_grid: Vec<usize>,
    pub residuals: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Evaluates `f(p)` for every `p` concurrently; results stay in grid order.
pub fn sweep<F>(p_grid: &[usize], f: F) -> Result<Series>
where
    F: Fn(usize) -> Result<(f64, f64)> + Sync + Send,
{
    let out = par::map_slice(p_grid, |&p| f(p));
    let mut residuals = Vec::with_capacity(out.len());
    let mut reference = Vec::with_capacity(out.len());
    for r in out {
        let (res, refv) = r?;
        residuals.push(res);
        reference.push(refv);
    }
    Ok(Series {
        p_grid: p_grid.to_vec(),
        residuals,
        reference,
    })
}

fn mean_of(ps: &PhaseSpace, p: usize, f: &Symbol, quad: QuadSpec) -> Result<C64> {
    let grid = quad.grid_for(ps, p, f)?;
    integrate(ps, &grid, |x| f.eval(x))
}

/// `|p^{-1} tr T_{f,p} - \int f omega|`.
pub fn trace_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<Series> {
    sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        let t = toeplitz_with(ps, &h, f, quad)?;
        let mean = mean_of(ps, p, f, quad)?;
        Ok(((t.trace() / p as f64 - mean).norm(), mean.norm()))
    })
}

pub fn trace_expansion_residual(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<RateFit> {
    let s = trace_series(ps, p_grid, f, quad)?;
    fit_for_class(&s.p_grid, &s.residuals, f.regularity())
}

/// `|p^{-1} tr(T_{f1} ... T_{fm}) - \int f1 ... fm omega|`, `1 <= m <= 4`.
pub fn product_trace_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    fs: &[Symbol],
    quad: QuadSpec,
) -> Result<Series> {
    if fs.is_empty() || fs.len() > 4 {
        return Err(Error::InvalidArgument(format!(
            "product traces take 1 to 4 factors, got {}",
            fs.len()
        )));
    }
    let product = fs[1..].iter().fold(fs[0].clone(), |acc, f| acc.mul(f));
    sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        let mut acc = CMatrix::identity(h.dim(), h.dim());
        for f in fs {
            acc *= toeplitz_with(ps, &h, f, quad)?.entries;
        }
        let limit = mean_of(ps, p, &product, quad)?;
        Ok(((trace(&acc) / p as f64 - limit).norm(), limit.norm()))
    })
}

fn weakest(fs: &[Symbol]) -> Regularity {
    fs.iter()
        .map(Symbol::regularity)
        .min()
        .unwrap_or(Regularity::Cinf)
}

pub fn product_trace_residual(
    ps: &PhaseSpace,
    p_grid: &[usize],
    fs: &[Symbol],
    quad: QuadSpec,
) -> Result<RateFit> {
    let s = product_trace_series(ps, p_grid, fs, quad)?;
    fit_for_class(&s.p_grid, &s.residuals, weakest(fs))
}

/// `|| T_f T_g - T_{fg} ||_op` over the grid.
pub fn product_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    g: &Symbol,
    quad: QuadSpec,
) -> Result<Series> {
    sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        Ok((
            product_residual(ps, &h, f, g, quad, ProductOrder::Zeroth)?,
            0.0,
        ))
    })
}

/// `|| (p/i)[T_f, T_g] - T_{{f,g}} ||_op` over the grid.
pub fn commutator_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    g: &Symbol,
    quad: QuadSpec,
) -> Result<Series> {
    sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        Ok((commutator_test(ps, &h, f, g, quad)?, 0.0))
    })
}

/// Norm convergence `||f||_inf - ||T_{f,p}||` together with the
/// coherent-state lower bound `|<T Psi_x*, Psi_x*>|` at a peak of `|f|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormConvergence {
    pub sup_norm: f64,
    pub series: Series,
    pub coherent_bounds: Vec<f64>,
    pub fit: RateFit,
}

/// `(||f||_inf - ||T_{f,p}||, ||f||_inf, |<T Psi, Psi>|)` at one level,
/// with `Psi` the coherent state at a peak of `|f|`.
pub fn norm_convergence_at(
    ps: &PhaseSpace,
    p: usize,
    f: &Symbol,
    quad: QuadSpec,
) -> Result<(f64, f64, f64)> {
    let grid = quad.grid_for(ps, p, f)?;
    let sup = sup_norm(f, &grid);
    let peak = match f.peak() {
        Some(x) => x,
        None => grid
            .nodes()
            .max_by(|a, b| f.eval(a.0).norm().total_cmp(&f.eval(b.0).norm()))
            .map(|(x, _)| x)
            .unwrap_or(Point::north_pole()),
    };
    let h = quantum_space(ps, p)?;
    let t = toeplitz_with(ps, &h, f, quad)?;
    let norm = operator_norm(&t.entries)?;
    let psi = h.coherent_state(peak);
    Ok((
        sup.value - norm,
        sup.value,
        psi.expectation(&t.entries).norm(),
    ))
}

pub fn norm_convergence_residual(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<NormConvergence> {
    let rows = par::map_slice(p_grid, |&p| norm_convergence_at(ps, p, f, quad));
    let mut residuals = Vec::new();
    let mut reference = Vec::new();
    let mut coherent_bounds = Vec::new();
    for r in rows {
        let (a, s, b) = r?;
        residuals.push(a);
        reference.push(s);
        coherent_bounds.push(b);
    }
    let fit = fit_for_class(p_grid, &residuals, f.regularity())?;
    Ok(NormConvergence {
        sup_norm: reference.iter().copied().fold(0.0, f64::max),
        series: Series {
            p_grid: p_grid.to_vec(),
            residuals,
            reference,
        },
        coherent_bounds,
        fit,
    })
}

/// Max over `points` of `|p^{-1} T_{f,p}(x,x) - f(x)|`.
pub fn kernel_diagonal_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    points: &[Point],
    quad: QuadSpec,
) -> Result<Series> {
    let reference = points.iter().map(|x| f.eval(*x).norm()).fold(0.0, f64::max);
    sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        let t = toeplitz_with(ps, &h, f, quad)?;
        let worst = points
            .iter()
            .map(|x| (kernel_diagonal(&h, &t, *x) - f.eval(*x)).norm())
            .fold(0.0, f64::max);
        Ok((worst, reference))
    })
}

/// Twenty fixed sample points, stratified in height and spread in angle.
pub fn fixed_panel() -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..20)
        .map(|k| Point::new((k as f64 + 0.5) / 20.0, k as f64 * golden).expect("inside chart"))
        .collect()
}

/// Residual series for both halves of the distance theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResiduals {
    /// `p^{-1} dist(T, Herm)^2` per `p`.
    pub herm_values: Vec<f64>,
    /// `p^{-1} dist(T, C Id)^2` per `p`.
    pub scalar_values: Vec<f64>,
    /// `dist(f, L^2(X, R))^2`.
    pub herm_limit: f64,
    /// `dist(f, C)^2`.
    pub scalar_limit: f64,
    pub herm: Series,
    pub scalar: Series,
}

pub fn distance_series(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<DistanceResiduals> {
    let pmax = p_grid.iter().copied().max().unwrap_or(8);
    let grid = quad.grid_for(ps, pmax, f)?;
    let herm_limit = dist_to_real(ps, &grid, f)?.powi(2);
    let scalar_limit = dist_to_const(ps, &grid, f)?.powi(2);
    let rows = par::map_slice(p_grid, |&p| -> Result<(f64, f64)> {
        let h = quantum_space(ps, p)?;
        let t = toeplitz_with(ps, &h, f, quad)?;
        let pf = p as f64;
        Ok((
            dist_to_hermitian(&t.entries)?.powi(2) / pf,
            dist_to_scalar(&t.entries)?.powi(2) / pf,
        ))
    });
    let mut herm_values = Vec::new();
    let mut scalar_values = Vec::new();
    for r in rows {
        let (a, b) = r?;
        herm_values.push(a);
        scalar_values.push(b);
    }
    let series = |vals: &[f64], limit: f64| Series {
        p_grid: p_grid.to_vec(),
        residuals: vals.iter().map(|v| (v - limit).abs()).collect(),
        reference: vec![limit; p_grid.len()],
    };
    Ok(DistanceResiduals {
        herm: series(&herm_values, herm_limit),
        scalar: series(&scalar_values, scalar_limit),
        herm_values,
        scalar_values,
        herm_limit,
        scalar_limit,
    })
}

/// `(herm fit, scalar fit)` with class targets.
pub fn distance_theorem_residuals(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<(RateFit, RateFit)> {
    let d = distance_series(ps, p_grid, f, quad)?;
    Ok((
        fit_for_class(p_grid, &d.herm.residuals, f.regularity())?,
        fit_for_class(p_grid, &d.scalar.residuals, f.regularity())?,
    ))
}

/// Outcome of the multiplication-operator bound
/// `p^{-1} ||T_f - M_f P||_HS^2 <= (1 + eps) ||df||^2 / lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceReport {
    pub p_grid: Vec<usize>,
    pub lhs: Vec<f64>,
    pub energy: f64,
    pub lambda: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn laplace_bound_check(
    ps: &PhaseSpace,
    p_grid: &[usize],
    f: &Symbol,
    quad: QuadSpec,
) -> Result<LaplaceReport> {
    let egrid = crate::geometry::QuadratureGrid::with_breaks(ps, 64, 64, f.breaks())?;
    let energy = dirichlet_energy(ps, &egrid, f)?;
    let lambda = ps.first_laplace_eigenvalue();
    let bound = (1.0 + LAPLACE_EPSILON) * energy / lambda;
    let s = sweep(p_grid, |p| {
        let h = quantum_space(ps, p)?;
        Ok((multiplication_residual(ps, &h, f, quad)?, bound))
    })?;
    let holds = s.residuals.iter().all(|v| *v <= bound + ZERO_FLOOR);
    Ok(LaplaceReport {
        p_grid: p_grid.to_vec(),
        lhs: s.residuals,
        energy,
        lambda,
        bound,
        holds,
    })
}
