//! Quantum spaces `H_p`: holomorphic sections of `O(p)` over the sphere,
//! i.e. polynomials of degree `<= p` with the `L^2` structure induced by
//! the Fubini–Study metric `(1 + |z|^2)^{-p}` and `omega`.
//!
//! The orthonormal basis is `e_j = sqrt((p+1) binom(p, j)) z^j`. All
//! evaluation goes through the *weighted* values
//! `ê_j(x) = sqrt((p+1) binom(p,j)) t^{j/2} (1-t)^{(p-j)/2} e^{ij phi}`,
//! whose squared moduli integrate directly against `omega`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{PhaseSpace, Point, QuadratureGrid};
use crate::{par, CMatrix, C64};

/// Default entrywise tolerance for the quadrature Gram matrix.
pub const GRAM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSpace {
    p: usize,
    /// `0.5 * ln((p+1) binom(p, j))`
    log_norms: Vec<f64>,
    pub gram_tolerance: f64,
}

/// The level-`p` quantum space. `p = 0` is rejected.
pub fn quantum_space(ps: &PhaseSpace, p: usize) -> Result<QuantumSpace> {
    let _ = ps;
    if p == 0 {
        return Err(Error::InvalidArgument("level p must be at least 1".into()));
    }
    // ln k! by cumulative sums keeps binomials finite far beyond p = 512
    let mut ln_fact = vec![0.0f64; p + 1];
    for k in 1..=p {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_p1 = ((p + 1) as f64).ln();
    let log_norms = (0..=p)
        .map(|j| 0.5 * (ln_p1 + ln_fact[p] - ln_fact[j] - ln_fact[p - j]))
        .collect();
    Ok(QuantumSpace {
        p,
        log_norms,
        gram_tolerance: GRAM_TOLERANCE,
    })
}

impl QuantumSpace {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.p + 1
    }

    /// Smallest `(n_t, n_phi)` for which the quadrature is exact on all
    /// products `ê_j conj(ê_k)`.
    pub fn min_grid(&self) -> (usize, usize) {
        (self.p + 1, 2 * self.p + 2)
    }

    /// Rejects grids below the exactness contract.
    pub fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        let (need_t, need_phi) = self.min_grid();
        if grid.n_t() < need_t || grid.n_phi() < need_phi {
            return Err(Error::GridTooCoarse {
                need_t,
                need_phi,
                n_t: grid.n_t(),
                n_phi: grid.n_phi(),
            });
        }
        Ok(())
    }

    /// `|ê_j|` as a function of `t` alone, for every `j`.
    pub fn radial_profile(&self, t: f64) -> Vec<f64> {
        let p = self.p;
        (0..=p).map(|j| self.radial(j, t)).collect()
    }

    fn radial(&self, j: usize, t: f64) -> f64 {
        let p = self.p;
        let a = 0.5 * j as f64;
        let b = 0.5 * (p - j) as f64;
        let mut ln = self.log_norms[j];
        if j > 0 {
            if t <= 0.0 {
                return 0.0;
            }
            ln += a * t.ln();
        }
        if j < p {
            if t >= 1.0 {
                return 0.0;
            }
            ln += b * (-t).ln_1p();
        }
        ln.exp()
    }

    /// Weighted basis value `ê_j(x)`.
    pub fn basis_eval(&self, j: usize, x: Point) -> Result<C64> {
        if j > self.p {
            return Err(Error::InvalidArgument(format!(
                "basis index {j} out of range 0..={}",
                self.p
            )));
        }
        Ok(C64::from_polar(self.radial(j, x.t()), j as f64 * x.phi()))
    }

    /// All weighted basis values at `x`.
    pub fn basis_values(&self, x: Point) -> DVector<C64> {
        DVector::from_iterator(
            self.dim(),
            (0..=self.p).map(|j| C64::from_polar(self.radial(j, x.t()), j as f64 * x.phi())),
        )
    }

    /// Diagonal of the Bergman kernel, `P_p(x, x) = sum_j |ê_j(x)|^2`.
    pub fn bergman_density(&self, x: Point) -> f64 {
        self.radial_profile(x.t()).iter().map(|a| a * a).sum()
    }

    /// Gram matrix `<ê_k, ê_j>` under the quadrature.
    pub fn gram_matrix(&self, grid: &QuadratureGrid) -> Result<CMatrix> {
        self.check_grid(grid)?;
        let d = self.dim();
        let profiles: Vec<Vec<f64>> = par::map_slice(grid.t_nodes(), |&t| self.radial_profile(t));
        // phi-sums of e^{i(k-j)phi} by direct summation
        let n_phi = grid.n_phi();
        let phase: Vec<C64> = (0..d)
            .map(|m| {
                (0..n_phi)
                    .map(|l| C64::from_polar(1.0, m as f64 * grid.phi_node(l)))
                    .sum::<C64>()
                    / n_phi as f64
            })
            .collect();
        let rows = par::map_range(d, |j| {
            (0..d)
                .map(|k| {
                    let m = j.abs_diff(k);
                    let ph = if k >= j { phase[m] } else { phase[m].conj() };
                    let s: f64 = profiles
                        .iter()
                        .zip(grid.t_weights())
                        .map(|(a, w)| w * a[j] * a[k])
                        .sum();
                    ph * s
                })
                .collect::<Vec<_>>()
        });
        Ok(DMatrix::from_fn(d, d, |j, k| rows[j][k]))
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self, grid: &QuadratureGrid) -> Result<f64> {
        let g = self.gram_matrix(grid)?;
        let d = self.dim();
        Ok((0..d)
            .flat_map(|j| (0..d).map(move |k| (j, k)))
            .map(|(j, k)| {
                let id = if j == k { 1.0 } else { 0.0 };
                (g[(j, k)] - C64::new(id, 0.0)).norm()
            })
            .fold(0.0, f64::max))
    }

    /// Normalized reproducing-kernel state peaked at `x0`:
    /// coefficients proportional to `conj(ê_j(x0))`.
    pub fn coherent_state(&self, x0: Point) -> StateVector {
        let v = self.basis_values(x0).map(|c| c.conj());
        let n = v.norm();
        StateVector {
            coeffs: v.unscale(n),
        }
    }
}

pub fn bergman_density(h: &QuantumSpace, x: Point) -> f64 {
    h.bergman_density(x)
}

pub fn basis_eval(h: &QuantumSpace, j: usize, x: Point) -> Result<C64> {
    h.basis_eval(j, x)
}

pub fn coherent_state(h: &QuantumSpace, x0: Point) -> StateVector {
    h.coherent_state(x0)
}

/// A vector of `H_p` in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: DVector<C64>,
}

impl StateVector {
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `<self, other>`, linear in the first slot.
    pub fn inner(&self, other: &StateVector) -> C64 {
        other.coeffs.dotc(&self.coeffs)
    }

    /// Weighted pointwise value `sum_j c_j ê_j(x)`; `|.|^2` is the density
    /// of the state against `omega`.
    pub fn eval(&self, h: &QuantumSpace, x: Point) -> C64 {
        self.coeffs
            .iter()
            .zip(h.basis_values(x).iter())
            .map(|(c, e)| c * e)
            .sum()
    }

    /// `<A psi, psi>`.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        (a * &self.coeffs).dotc(&self.coeffs).conj()
    }
}

/// Mass of `|psi|^2 omega` outside the geodesic ball of `radius` around `x0`.
pub fn mass_outside_ball(
    ps: &PhaseSpace,
    h: &QuantumSpace,
    psi: &StateVector,
    x0: Point,
    radius: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let v = crate::geometry::integrate(ps, grid, |x| {
        if x.distance_to(ps, &x0) > radius {
            C64::new(psi.eval(h, x).norm_sqr(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    Ok(v.re)
}
