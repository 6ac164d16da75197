//! The model phase space: the Riemann sphere with its Fubini–Study form
//! normalized to total mass one.
//!
//! Points are addressed in the chart `(t, phi)` with `t = |z|^2 / (1 + |z|^2)`
//! and `phi = arg z`. In this chart the symplectic form is `dt ^ dphi / 2pi`,
//! so a tensor Gauss–Legendre x trapezoid rule integrates monomials
//! `t^a e^{ik phi}` exactly.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::GaussLegendre;
use crate::symbols::Symbol;
use crate::C64;

const TAU: f64 = 2.0 * PI;

/// Available model geometries. Only the sphere ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    SphereCp1,
}

/// Sign convention for the symplectic form. `Reversed` flips the sign of
/// every Poisson bracket; it exists to check that the commutator
/// experiments actually detect a wrong convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Standard,
    Reversed,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Reversed => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpace {
    pub model: Model,
    /// `\int_X omega`, fixed to one by the prequantization condition.
    pub total_symplectic_mass: f64,
    /// Radius of the round sphere of area one.
    pub metric_scale: f64,
    pub orientation: Orientation,
}

/// The sphere with unit symplectic mass and the round metric of area one.
pub fn make_phase_space() -> PhaseSpace {
    PhaseSpace {
        model: Model::SphereCp1,
        total_symplectic_mass: 1.0,
        metric_scale: (4.0 * PI).powf(-0.5),
        orientation: Orientation::Standard,
    }
}

impl Default for PhaseSpace {
    fn default() -> Self {
        make_phase_space()
    }
}

impl PhaseSpace {
    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Riemannian volume, equal to the symplectic mass for `g = omega(., J.)`.
    pub fn volume(&self) -> f64 {
        self.total_symplectic_mass
    }

    /// Lowest positive eigenvalue of the Laplacian on functions: `l(l+1)/R^2`
    /// at `l = 1`, i.e. `8 pi` for the area-one sphere.
    pub fn first_laplace_eigenvalue(&self) -> f64 {
        2.0 / (self.metric_scale * self.metric_scale)
    }

    pub fn quadrature_grid(&self, n_t: usize, n_phi: usize) -> Result<QuadratureGrid> {
        quadrature_grid(self, n_t, n_phi)
    }
}

/// A point of the sphere in the `(t, phi)` chart. `t = 0` is the south pole
/// (`z = 0`), `t = 1` the north pole (`z = infinity`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    t: f64,
    phi: f64,
}

impl Point {
    pub fn new(t: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "point (t = {t}, phi = {phi}) outside the chart"
            )));
        }
        Ok(Self {
            t,
            phi: phi.rem_euclid(TAU),
        })
    }

    pub fn south_pole() -> Self {
        Self { t: 0.0, phi: 0.0 }
    }

    pub fn north_pole() -> Self {
        Self { t: 1.0, phi: 0.0 }
    }

    /// Point with prescribed height `z3 = 2t - 1`.
    pub fn from_height(z3: f64, phi: f64) -> Result<Self> {
        Self::new(0.5 * (z3 + 1.0), phi)
    }

    pub fn from_cartesian(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::InvalidArgument(
                "zero vector has no direction".into(),
            ));
        }
        Self::from_height((z / r).clamp(-1.0, 1.0), y.atan2(x))
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Affine coordinate `z = sqrt(t/(1-t)) e^{i phi}`; `None` at the north pole.
    pub fn affine(&self) -> Option<C64> {
        if self.t >= 1.0 {
            None
        } else {
            Some(Complex::from_polar(
                (self.t / (1.0 - self.t)).sqrt(),
                self.phi,
            ))
        }
    }

    /// Unit-sphere coordinates `(z1, z2, z3)`.
    pub fn cartesian(&self) -> [f64; 3] {
        let r = 2.0 * (self.t * (1.0 - self.t)).max(0.0).sqrt();
        [r * self.phi.cos(), r * self.phi.sin(), 2.0 * self.t - 1.0]
    }

    /// Angle between the two points seen from the centre of the sphere.
    pub fn angle_to(&self, other: &Point) -> f64 {
        let a = self.cartesian();
        let b = other.cartesian();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cn = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
        cn.atan2(dot)
    }

    /// Geodesic distance for the round metric of area one.
    pub fn distance_to(&self, ps: &PhaseSpace, other: &Point) -> f64 {
        ps.metric_scale * self.angle_to(other)
    }
}

/// Tensor-product rule: Gauss–Legendre in `t` (optionally composite, split
/// at interior break points) times the uniform rule in `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    n_t: usize,
    n_phi: usize,
    breaks: Vec<f64>,
    t_nodes: Vec<f64>,
    t_weights: Vec<f64>,
}

/// Builds the `n_t x n_phi` grid on the sphere.
pub fn quadrature_grid(ps: &PhaseSpace, n_t: usize, n_phi: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::with_breaks(ps, n_t, n_phi, &[])
}

#[derive(Debug, Clone, Copy)]
enum Grade {
    None,
    /// Clustered towards the left end.
    Left,
    /// Clustered towards the right end.
    Right,
}

/// Nodes (ascending) and weights of one panel.
fn graded_panel(gl: &GaussLegendre, a: f64, b: f64, grade: Grade) -> (Vec<f64>, Vec<f64>) {
    let h = b - a;
    match grade {
        Grade::None => gl.on_interval(a, b),
        Grade::Left | Grade::Right => {
            let (u, wu) = gl.on_interval(0.0, 1.0);
            let mut pts: Vec<(f64, f64)> = u
                .iter()
                .zip(&wu)
                .map(|(u, w)| {
                    let t = match grade {
                        Grade::Left => a + h * u * u,
                        _ => b - h * u * u,
                    };
                    (t, 2.0 * h * u * w)
                })
                .collect();
            pts.sort_by(|x, y| x.0.total_cmp(&y.0));
            pts.into_iter().unzip()
        }
    }
}

impl QuadratureGrid {
    /// Composite grid: every panel between consecutive break points in
    /// `(0, 1)` carries its own `n_t`-point Gauss–Legendre rule. Panels
    /// touching a break use the substitution `t = c +- (b - a) u^2` with `c`
    /// the break, which turns `|t - c|^alpha` into `u^{2 alpha}` and keeps
    /// polynomials polynomial.
    pub fn with_breaks(ps: &PhaseSpace, n_t: usize, n_phi: usize, breaks: &[f64]) -> Result<Self> {
        if n_t == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature orders must be positive, got ({n_t}, {n_phi})"
            )));
        }
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|b| *b > 0.0 && *b < 1.0)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let gl = GaussLegendre::new(n_t)?;
        let mut edges = vec![0.0];
        edges.extend(&cuts);
        edges.push(1.0);
        let mut t_nodes = Vec::with_capacity(n_t * (edges.len() - 1));
        let mut t_weights = Vec::with_capacity(t_nodes.capacity());
        let is_cut = |x: f64| cuts.contains(&x);
        let mut panels = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            match (is_cut(a), is_cut(b)) {
                (true, true) => {
                    let m = 0.5 * (a + b);
                    panels.push((a, m, Grade::Left));
                    panels.push((m, b, Grade::Right));
                }
                (true, false) => panels.push((a, b, Grade::Left)),
                (false, true) => panels.push((a, b, Grade::Right)),
                (false, false) => panels.push((a, b, Grade::None)),
            }
        }
        for (a, b, grade) in panels {
            let (x, wt) = graded_panel(&gl, a, b, grade);
            t_nodes.extend(x);
            t_weights.extend(wt);
        }
        let _ = ps;
        Ok(Self {
            n_t,
            n_phi,
            breaks: cuts,
            t_nodes,
            t_weights,
        })
    }

    /// Gauss–Legendre order per panel.
    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    /// Weights of the `t` rule; they sum to one.
    pub fn t_weights(&self) -> &[f64] {
        &self.t_weights
    }

    pub fn phi_node(&self, l: usize) -> f64 {
        TAU * l as f64 / self.n_phi as f64
    }

    pub fn len(&self) -> usize {
        self.t_nodes.len() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same grid with both orders doubled.
    pub fn refined(&self) -> Self {
        self.with_orders(2 * self.n_t, 2 * self.n_phi)
    }

    pub fn with_orders(&self, n_t: usize, n_phi: usize) -> Self {
        Self::with_breaks(&make_phase_space(), n_t, n_phi, &self.breaks).expect("positive orders")
    }

    /// All `(point, weight)` pairs; weights sum to one.
    pub fn nodes(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        let inv = 1.0 / self.n_phi as f64;
        self.t_nodes
            .iter()
            .zip(&self.t_weights)
            .flat_map(move |(&t, &w)| {
                (0..self.n_phi).map(move |l| {
                    (
                        Point {
                            t,
                            phi: self.phi_node(l),
                        },
                        w * inv,
                    )
                })
            })
    }

    pub fn weight_sum(&self) -> f64 {
        self.t_weights.iter().sum()
    }
}

/// `sum_i w_i field(x_i)`, i.e. `\int_X field omega`.
pub fn integrate<F>(ps: &PhaseSpace, grid: &QuadratureGrid, field: F) -> Result<C64>
where
    F: Fn(Point) -> C64 + Sync + Send,
{
    let inv = 1.0 / grid.n_phi as f64;
    let rows = par::map_range(grid.t_nodes.len(), |i| {
        let t = grid.t_nodes[i];
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..grid.n_phi {
            let v = field(Point {
                t,
                phi: grid.phi_node(l),
            });
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "integrand at (t = {t}, phi = {})",
                    grid.phi_node(l)
                )));
            }
            acc += v;
        }
        Ok(acc * grid.t_weights[i] * inv)
    });
    let mut total = C64::new(0.0, 0.0);
    for r in rows {
        total += r?;
    }
    Ok(total * ps.total_symplectic_mass)
}

/// `{f, g}(x) = (df/dphi)(dg/dt) - (df/dt)(dg/dphi)`, the bracket of
/// `(X, 2 pi omega)` written in the `(t, phi)` chart, times the orientation
/// sign.
pub fn poisson_bracket(ps: &PhaseSpace, f: &Symbol, g: &Symbol, x: Point) -> Result<C64> {
    let (ft, fphi) = f.gradient(x)?;
    let (gt, gphi) = g.gradient(x)?;
    Ok((fphi * gt - ft * gphi) * ps.orientation.sign())
}

/// `|df|_g^2` in the chart: `4 pi [ t(1-t)|f_t|^2 + |f_phi|^2 / (4t(1-t)) ]`.
pub fn gradient_norm_sq(ps: &PhaseSpace, f: &Symbol, x: Point) -> Result<f64> {
    let (ft, fphi) = f.gradient(x)?;
    let s = x.t * (1.0 - x.t);
    let r2 = ps.metric_scale * ps.metric_scale;
    Ok((s * ft.norm_sqr() + fphi.norm_sqr() / (4.0 * s)) / r2)
}

/// Dirichlet energy `\int_X |df|^2 dv_X` for the area-one round metric.
///
/// The value on `grid` is compared against the value on the doubled grid;
/// more than 1% disagreement is reported as a non-integrable gradient.
pub fn dirichlet_energy(ps: &PhaseSpace, grid: &QuadratureGrid, f: &Symbol) -> Result<f64> {
    if !f.has_gradient() {
        return Err(Error::MissingDerivative(f.name().to_string()));
    }
    let energy = |g: &QuadratureGrid| -> Result<f64> {
        let v = integrate(ps, g, |x| match gradient_norm_sq(ps, f, x) {
            Ok(e) => C64::new(e, 0.0),
            Err(_) => C64::new(f64::NAN, 0.0),
        });
        match v {
            Ok(v) => Ok(v.re),
            Err(Error::NonFinite(_)) => Err(Error::NotIntegrable(f.name().to_string())),
            Err(e) => Err(e),
        }
    };
    let coarse = energy(grid)?;
    let fine = energy(&grid.refined())?;
    let scale = fine.abs().max(coarse.abs());
    if scale > 1e-12 && (fine - coarse).abs() > 0.01 * scale {
        return Err(Error::NotIntegrable(f.name().to_string()));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::builtin_symbol;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps() -> PhaseSpace {
        make_phase_space()
    }

    #[test]
    fn phase_space_normalization() {
        let ps = ps();
        assert_eq!(ps.total_symplectic_mass, 1.0);
        assert_abs_diff_eq!(4.0 * PI * ps.metric_scale.powi(2), 1.0, epsilon = 1e-15);
        assert_eq!(ps.volume(), 1.0);
        assert_abs_diff_eq!(ps.first_laplace_eigenvalue(), 8.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn one_by_one_grid_is_midpoint() {
        let g = quadrature_grid(&ps(), 1, 1).unwrap();
        let nodes: Vec<_> = g.nodes().collect();
        assert_eq!(nodes.len(), 1);
        assert_abs_diff_eq!(nodes[0].0.t(), 0.5, epsilon = 1e-15);
        assert_eq!(nodes[0].0.phi(), 0.0);
        assert_abs_diff_eq!(nodes[0].1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_orders_rejected() {
        assert!(quadrature_grid(&ps(), 0, 4).is_err());
        assert!(quadrature_grid(&ps(), 4, 0).is_err());
    }

    #[test]
    fn weights_partition_unit_mass() {
        let g = quadrature_grid(&ps(), 16, 16).unwrap();
        let s: f64 = g.nodes().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        let g = QuadratureGrid::with_breaks(&ps(), 16, 16, &[0.5]).unwrap();
        assert_abs_diff_eq!(g.weight_sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exactness_contract_on_monomials() {
        let ps = ps();
        let (n_t, n_phi) = (6usize, 5usize);
        let g = quadrature_grid(&ps, n_t, n_phi).unwrap();
        for a in 0..(2 * n_t) {
            for k in -(n_phi as i32 - 1)..=(n_phi as i32 - 1) {
                let v = integrate(&ps, &g, |x| {
                    C64::from_polar(x.t().powi(a as i32), k as f64 * x.phi())
                })
                .unwrap();
                let want = if k == 0 { 1.0 / (a as f64 + 1.0) } else { 0.0 };
                assert_abs_diff_eq!(v.re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn elementary_integrals() {
        let ps = ps();
        let g = quadrature_grid(&ps, 8, 8).unwrap();
        let one = integrate(&ps, &g, |_| C64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(one.re, 1.0, epsilon = 1e-14);
        let t = integrate(&ps, &g, |x| C64::new(x.t(), 0.0)).unwrap();
        assert_abs_diff_eq!(t.re, 0.5, epsilon = 1e-14);
        let z3 = integrate(&ps, &g, |x| C64::new(2.0 * x.t() - 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z3.re, 0.0, epsilon = 1e-14);
        let z3sq = integrate(&ps, &g, |x| C64::new((2.0 * x.t() - 1.0).powi(2), 0.0)).unwrap();
        assert_abs_diff_eq!(z3sq.re, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_reports_non_finite() {
        let ps = ps();
        let g = quadrature_grid(&ps, 4, 4).unwrap();
        let r = integrate(&ps, &g, |x| C64::new(1.0 / (x.t() - x.t()), 0.0));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn integrate_commutes_with_conjugation() {
        let ps = ps();
        let g = quadrature_grid(&ps, 10, 10).unwrap();
        let f = builtin_symbol("complex_mix").unwrap();
        let a = integrate(&ps, &g, |x| f.eval(x).conj()).unwrap();
        let b = integrate(&ps, &g, |x| f.eval(x)).unwrap().conj();
        assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-15);
    }

    #[test]
    fn coordinate_bracket_relations() {
        let ps = ps();
        let z = ["z1", "z2", "z3"].map(|n| builtin_symbol(n).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Point::new(rng.gen_range(0.01..0.99), rng.gen_range(0.0..TAU)).unwrap();
            let c = x.cartesian();
            // {z_a, z_b} = 2 eps_abc z_c
            for (a, b, cidx) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let v = poisson_bracket(&ps, &z[a], &z[b], x).unwrap();
                assert_abs_diff_eq!(v.re, 2.0 * c[cidx], epsilon = 1e-6);
                let w = poisson_bracket(&ps, &z[b], &z[a], x).unwrap();
                assert_abs_diff_eq!(w.re, -2.0 * c[cidx], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn bracket_sign_regression_z3_z1() {
        let ps = ps();
        let z1 = builtin_symbol("z1").unwrap();
        let z2 = builtin_symbol("z2").unwrap();
        let z3 = builtin_symbol("z3").unwrap();
        let x = Point::new(0.3, 1.1).unwrap();
        let v = poisson_bracket(&ps, &z3, &z1, x).unwrap();
        assert_abs_diff_eq!(v.re, 2.0 * z2.eval(x).re, epsilon = 1e-12);
        // the finite-difference route agrees with the analytic one
        let fd3 = z3.without_gradient();
        let fd1 = z1.without_gradient();
        let w = poisson_bracket(&ps, &fd3, &fd1, x).unwrap();
        assert_abs_diff_eq!(w.re, v.re, epsilon = 1e-6);
        let flipped = ps.with_orientation(Orientation::Reversed);
        let u = poisson_bracket(&flipped, &z3, &z1, x).unwrap();
        assert_abs_diff_eq!(u.re, -v.re, epsilon = 1e-15);
    }

    #[test]
    fn bracket_trivial_cases() {
        let ps = ps();
        let f = builtin_symbol("complex_mix").unwrap();
        let one = builtin_symbol("const(1)").unwrap();
        let x = Point::new(0.42, 2.0).unwrap();
        assert_eq!(poisson_bracket(&ps, &f, &f, x).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(poisson_bracket(&ps, &f, &one, x).unwrap().norm(), 0.0);
    }

    #[test]
    fn bracket_rejects_c0_without_derivatives() {
        let ps = ps();
        let h = builtin_symbol("holder(0.5)").unwrap().without_gradient();
        let z3 = builtin_symbol("z3").unwrap();
        let x = Point::new(0.3, 0.0).unwrap();
        assert!(matches!(
            poisson_bracket(&ps, &h, &z3, x),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi() {
        let ps = ps();
        let z = ["z1", "z2", "z3"].map(|n| builtin_symbol(n).unwrap());
        let y2 = builtin_symbol("harmonic_Y2").unwrap();
        let cm = builtin_symbol("complex_mix").unwrap();
        // brackets as symbols so that the outer bracket differentiates them
        let b12 = Symbol::poisson(&ps, &z[0], &z[1]);
        let b23 = Symbol::poisson(&ps, &z[1], &z[2]);
        let b31 = Symbol::poisson(&ps, &z[2], &z[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = Point::new(rng.gen_range(0.05..0.95), rng.gen_range(0.0..TAU)).unwrap();
            let a = poisson_bracket(&ps, &y2, &cm, x).unwrap();
            let b = poisson_bracket(&ps, &cm, &y2, x).unwrap();
            assert!((a + b).norm() < 1e-8);
            let jac = poisson_bracket(&ps, &z[0], &b23, x).unwrap()
                + poisson_bracket(&ps, &z[1], &b31, x).unwrap()
                + poisson_bracket(&ps, &z[2], &b12, x).unwrap();
            assert!(jac.norm() < 1e-6, "jacobi defect {}", jac.norm());
        }
    }

    #[test]
    fn dirichlet_energies() {
        let ps = ps();
        let g = quadrature_grid(&ps, 24, 24).unwrap();
        let c = builtin_symbol("const(3)").unwrap();
        assert_abs_diff_eq!(dirichlet_energy(&ps, &g, &c).unwrap(), 0.0, epsilon = 1e-14);
        for name in ["z1", "z2", "z3"] {
            let f = builtin_symbol(name).unwrap();
            let e = dirichlet_energy(&ps, &g, &f).unwrap();
            assert_abs_diff_eq!(e, 8.0 * PI / 3.0, epsilon = 1e-10);
        }
        // kink = z3|z3|: 4 pi \int t(1-t) 16 z3^2 dt = 32 pi / 15
        let k = builtin_symbol("kink").unwrap();
        let g = QuadratureGrid::with_breaks(&ps, 24, 8, &[0.5]).unwrap();
        assert_abs_diff_eq!(
            dirichlet_energy(&ps, &g, &k).unwrap(),
            32.0 * PI / 15.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn dirichlet_energy_detects_blow_up() {
        let ps = ps();
        let g = QuadratureGrid::with_breaks(&ps, 32, 8, &[0.5]).unwrap();
        // |z3|^{1/2}: |grad|^2 ~ 1/|z3| is not integrable
        let h = builtin_symbol("holder(0.5)").unwrap();
        assert!(matches!(
            dirichlet_energy(&ps, &g, &h),
            Err(Error::NotIntegrable(_))
        ));
        let nograd = h.without_gradient();
        assert!(matches!(
            dirichlet_energy(&ps, &g, &nograd),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn point_chart_helpers() {
        let x = Point::new(0.25, -1.0).unwrap();
        assert!(x.phi() >= 0.0 && x.phi() < TAU);
        let z = x.affine().unwrap();
        assert_abs_diff_eq!(z.norm_sqr() / (1.0 + z.norm_sqr()), 0.25, epsilon = 1e-15);
        assert!(Point::north_pole().affine().is_none());
        assert!(Point::new(1.5, 0.0).is_err());
        let c = x.cartesian();
        let back = Point::from_cartesian(c[0], c[1], c[2]).unwrap();
        assert_abs_diff_eq!(back.t(), x.t(), epsilon = 1e-14);
        assert_abs_diff_eq!(back.phi(), x.phi(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            Point::south_pole().angle_to(&Point::north_pole()),
            PI,
            epsilon = 1e-15
        );
    }
}
