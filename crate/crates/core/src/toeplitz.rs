//! Toeplitz operators `T_{f,p} = P_p f P_p` as dense matrices in the
//! orthonormal monomial basis, and the operator identities built on them.
//!
//! Assembly: with `f̂_m(t) = n_phi^{-1} sum_l f(t, phi_l) e^{-i m phi_l}`
//! (one FFT per `t` node) the entries are
//! `T[j][k] = sum_t w_t |ê_j(t)| |ê_k(t)| f̂_{j-k}(t)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::analysis::{hs_norm, operator_norm, trace};
use crate::error::{Error, Result};
use crate::geometry::{integrate, PhaseSpace, Point, QuadratureGrid};
use crate::hilbert::{quantum_space, QuantumSpace};
use crate::symbols::{Regularity, Symbol};
use crate::{par, CMatrix, C64};

/// Extra quadrature order beyond `2p` in the automatic grid.
pub const AUTO_MARGIN: usize = 16;
/// Largest entry change tolerated when doubling `n_t` for non-smooth symbols.
pub const REFINEMENT_TOLERANCE: f64 = 1e-6;

/// Quadrature choice for assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadSpec {
    /// `(2p + 16, 2p + 16)`, split at the symbol's break points.
    #[default]
    Auto,
    Fixed {
        n_t: usize,
        n_phi: usize,
    },
}

impl QuadSpec {
    pub fn orders(&self, p: usize) -> (usize, usize) {
        match *self {
            QuadSpec::Auto => (2 * p + AUTO_MARGIN, 2 * p + AUTO_MARGIN),
            QuadSpec::Fixed { n_t, n_phi } => (n_t, n_phi),
        }
    }

    /// The grid used for `f` at level `p`.
    pub fn grid_for(&self, ps: &PhaseSpace, p: usize, f: &Symbol) -> Result<QuadratureGrid> {
        let (n_t, n_phi) = self.orders(p);
        QuadratureGrid::with_breaks(ps, n_t, n_phi, f.breaks())
    }
}

#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub entries: CMatrix,
    pub p: usize,
    pub symbol_name: String,
    pub n_t: usize,
    pub n_phi: usize,
}

impl ToeplitzMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.entries)
    }

    pub fn adjoint(&self) -> CMatrix {
        self.entries.adjoint()
    }
}

/// Matrix of `P_p f P_p` on an explicit grid.
pub fn toeplitz_matrix(
    h: &QuantumSpace,
    f: &Symbol,
    grid: &QuadratureGrid,
) -> Result<ToeplitzMatrix> {
    h.check_grid(grid)?;
    let p = h.p();
    let d = h.dim();
    let n_phi = grid.n_phi();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n_phi);
    let inv = 1.0 / n_phi as f64;

    // per t node: Fourier modes m = -p..=p of f(t, .)
    let modes = par::map_range(grid.t_nodes().len(), |i| -> Result<Vec<C64>> {
        let t = grid.t_nodes()[i];
        let mut buf: Vec<C64> = (0..n_phi)
            .map(|l| f.eval(Point::new(t, grid.phi_node(l)).expect("grid node")))
            .collect();
        if buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(format!(
                "symbol `{}` at t = {t}",
                f.name()
            )));
        }
        fft.process(&mut buf);
        Ok((0..2 * p + 1)
            .map(|s| {
                let m = s as isize - p as isize;
                buf[m.rem_euclid(n_phi as isize) as usize] * inv
            })
            .collect())
    });
    let modes = modes.into_iter().collect::<Result<Vec<_>>>()?;
    let nt = modes.len();

    // radial[j][i] = |ê_j(t_i)|, weighted[j][i] = w_i |ê_j(t_i)|
    let profiles = par::map_slice(grid.t_nodes(), |&t| h.radial_profile(t));
    let radial: Vec<Vec<f64>> = (0..d)
        .map(|j| profiles.iter().map(|a| a[j]).collect())
        .collect();
    let weighted: Vec<Vec<f64>> = radial
        .iter()
        .map(|r| r.iter().zip(grid.t_weights()).map(|(a, w)| a * w).collect())
        .collect();
    // by_mode[s][i] = f̂_{s-p}(t_i)
    let by_mode: Vec<Vec<C64>> = (0..2 * p + 1)
        .map(|s| (0..nt).map(|i| modes[i][s]).collect())
        .collect();

    let rows = par::map_range(d, |j| {
        (0..d)
            .map(|k| {
                let s = j + p - k;
                let (wj, rk, fm) = (&weighted[j], &radial[k], &by_mode[s]);
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..nt {
                    acc += fm[i] * (wj[i] * rk[i]);
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    Ok(ToeplitzMatrix {
        entries: DMatrix::from_fn(d, d, |j, k| rows[j][k]),
        p,
        symbol_name: f.name().to_string(),
        n_t: grid.n_t(),
        n_phi,
    })
}

fn needs_refinement_check(f: &Symbol) -> bool {
    f.regularity() < Regularity::Cinf || !f.breaks().is_empty()
}

/// Assembles `T_{f,p}` with the given quadrature choice. Non-smooth
/// symbols are re-assembled with `n_t` doubled and rejected if any entry
/// moves by more than [`REFINEMENT_TOLERANCE`].
pub fn toeplitz_with(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    f: &Symbol,
    quad: QuadSpec,
) -> Result<ToeplitzMatrix> {
    let grid = quad.grid_for(ps, h.p(), f)?;
    let t = toeplitz_matrix(h, f, &grid)?;
    if needs_refinement_check(f) {
        let fine = grid.with_orders(2 * grid.n_t(), grid.n_phi());
        let tf = toeplitz_matrix(h, f, &fine)?;
        let delta = (&tf.entries - &t.entries).camax();
        if delta > REFINEMENT_TOLERANCE {
            return Err(Error::QuadratureFault(format!(
                "T_{{{},{}}} moved by {delta:e} under t-refinement",
                f.name(),
                h.p()
            )));
        }
    }
    Ok(t)
}

pub fn toeplitz_auto(ps: &PhaseSpace, h: &QuantumSpace, f: &Symbol) -> Result<ToeplitzMatrix> {
    toeplitz_with(ps, h, f, QuadSpec::Auto)
}

/// Plain matrix product `A B`; in general not a Toeplitz matrix itself.
pub fn compose(a: &ToeplitzMatrix, b: &ToeplitzMatrix) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(&a.entries * &b.entries)
}

/// `|| (p/i) [T_f, T_g] - T_{{f,g}} ||_op`.
pub fn commutator_test(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    f: &Symbol,
    g: &Symbol,
    quad: QuadSpec,
) -> Result<f64> {
    for s in [f, g] {
        if !s.has_gradient() {
            return Err(Error::MissingDerivative(s.name().to_string()));
        }
    }
    let tf = toeplitz_with(ps, h, f, quad)?;
    let tg = toeplitz_with(ps, h, g, quad)?;
    let bracket = Symbol::poisson(ps, f, g);
    let tb = toeplitz_with(ps, h, &bracket, quad)?;
    let comm = &tf.entries * &tg.entries - &tg.entries * &tf.entries;
    let scaled = comm * C64::new(0.0, -(h.p() as f64));
    operator_norm(&(scaled - &tb.entries))
}

/// Order of the product expansion being probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductOrder {
    /// `|| T_f T_g - T_{fg} ||_op`.
    Zeroth,
    /// Cauchy defect of `p (T_f T_g - T_{fg})` between `p` and `2p`,
    /// measured through the operator norm and the trace.
    First,
}

fn product_remainder(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    f: &Symbol,
    g: &Symbol,
    quad: QuadSpec,
) -> Result<CMatrix> {
    let tf = toeplitz_with(ps, h, f, quad)?;
    let tg = toeplitz_with(ps, h, g, quad)?;
    let tfg = toeplitz_with(ps, h, &f.mul(g), quad)?;
    Ok(compose(&tf, &tg)? - tfg.entries)
}

pub fn product_residual(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    f: &Symbol,
    g: &Symbol,
    quad: QuadSpec,
    order: ProductOrder,
) -> Result<f64> {
    match order {
        ProductOrder::Zeroth => operator_norm(&product_remainder(ps, h, f, g, quad)?),
        ProductOrder::First => {
            let h2 = quantum_space(ps, 2 * h.p())?;
            let functionals = |hh: &QuantumSpace| -> Result<(f64, C64)> {
                let r = product_remainder(ps, hh, f, g, quad)? * C64::new(hh.p() as f64, 0.0);
                // p^{-1} tr (p R_p) = tr R_p
                Ok((operator_norm(&r)?, trace(&r) / hh.p() as f64))
            };
            let (n1, t1) = functionals(h)?;
            let (n2, t2) = functionals(&h2)?;
            Ok((n1 - n2).abs().max((t1 - t2).norm()))
        }
    }
}

/// `p^{-1} T_{f,p}(x, x) = p^{-1} sum_{jk} T[j][k] ê_j(x) conj(ê_k(x))`.
pub fn kernel_diagonal(h: &QuantumSpace, t: &ToeplitzMatrix, x: Point) -> C64 {
    let u = h.basis_values(x);
    let tu = &t.entries * u.map(|c| c.conj());
    u.iter().zip(tu.iter()).map(|(a, b)| a * b).sum::<C64>() / h.p() as f64
}

/// `p^{-1} || T_{f,p} - M_f P_p ||_HS^2` through the trace identity
/// `tr T_{|f2|^2} - ||T_{f2}||_HS^2` with `f2 = f - \int f omega`.
pub fn multiplication_residual(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    f: &Symbol,
    quad: QuadSpec,
) -> Result<f64> {
    let grid = quad.grid_for(ps, h.p(), f)?;
    let mean = integrate(ps, &grid, |x| f.eval(x))? / ps.volume();
    let f2 = f.shift(-mean);
    let t_sq = toeplitz_with(ps, h, &f2.abs_sq(), quad)?;
    let t2 = toeplitz_with(ps, h, &f2, quad)?;
    let hs = hs_norm(&t2.entries)?;
    let v = (t_sq.trace().re - hs * hs) / h.p() as f64;
    crate::symbols::clamp_radicand(v, "multiplication residual")
}
