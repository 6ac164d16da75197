//! Classical observables with a declared regularity class, and the
//! built-in catalog of test symbols.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{integrate, poisson_bracket, PhaseSpace, Point, QuadratureGrid};
use crate::C64;

/// Declared smoothness class. Ordered: `C0 < C1 < C2 < Cinf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regularity {
    C0,
    C1,
    C2,
    Cinf,
}

impl Regularity {
    /// Class of a first derivative.
    pub fn derivative(self) -> Self {
        match self {
            Regularity::C0 | Regularity::C1 => Regularity::C0,
            Regularity::C2 => Regularity::C1,
            Regularity::Cinf => Regularity::Cinf,
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::C0 => "C0",
            Regularity::C1 => "C1",
            Regularity::C2 => "C2",
            Regularity::Cinf => "Cinf",
        })
    }
}

type EvalFn = Arc<dyn Fn(Point) -> C64 + Send + Sync>;
/// Returns `(df/dt, df/dphi)`.
type GradFn = Arc<dyn Fn(Point) -> (C64, C64) + Send + Sync>;

/// Finite-difference step for symbols without analytic derivatives.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct Symbol {
    name: String,
    regularity: Regularity,
    eval: EvalFn,
    grad: Option<GradFn>,
    sup_norm_hint: Option<f64>,
    peak: Option<Point>,
    breaks: Vec<f64>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("regularity", &self.regularity)
            .field("analytic_grad", &self.grad.is_some())
            .field("sup_norm_hint", &self.sup_norm_hint)
            .finish()
    }
}

impl Symbol {
    pub fn new<F>(name: impl Into<String>, regularity: Regularity, eval: F) -> Self
    where
        F: Fn(Point) -> C64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            regularity,
            eval: Arc::new(eval),
            grad: None,
            sup_norm_hint: None,
            peak: None,
            breaks: Vec::new(),
        }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(Point) -> (C64, C64) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Declares `sup |f|` and a point where it is attained.
    pub fn with_peak(mut self, sup: f64, at: Point) -> Self {
        self.sup_norm_hint = Some(sup);
        self.peak = Some(at);
        self
    }

    /// Values of `t` where the symbol loses smoothness; quadrature splits there.
    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks = breaks.to_vec();
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Drops analytic derivative data. Symbols of class `C1` and above then
    /// fall back to finite differences.
    pub fn without_gradient(&self) -> Self {
        let mut s = self.clone();
        s.grad = None;
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn sup_norm_hint(&self) -> Option<f64> {
        self.sup_norm_hint
    }

    pub fn peak(&self) -> Option<Point> {
        self.peak
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some() || self.regularity >= Regularity::C1
    }

    pub fn eval(&self, x: Point) -> C64 {
        (self.eval)(x)
    }

    /// `(df/dt, df/dphi)` at `x`: analytic when available, otherwise central
    /// differences (one-sided at the chart boundary), which are only
    /// permitted for class `C1` and above.
    pub fn gradient(&self, x: Point) -> Result<(C64, C64)> {
        if let Some(g) = &self.grad {
            return Ok(g(x));
        }
        if self.regularity < Regularity::C1 {
            return Err(Error::MissingDerivative(self.name.clone()));
        }
        let at = |t: f64, phi: f64| self.eval(Point::new(t, phi).expect("t kept in [0, 1]"));
        let (t, phi) = (x.t(), x.phi());
        let h = FD_STEP * t.abs().max(1.0);
        let dt = if t - h < 0.0 {
            (at(t + h, phi) - at(t, phi)) / h
        } else if t + h > 1.0 {
            (at(t, phi) - at(t - h, phi)) / h
        } else {
            (at(t + h, phi) - at(t - h, phi)) / (2.0 * h)
        };
        let hp = FD_STEP * phi.abs().max(1.0);
        let dphi = (at(t, phi + hp) - at(t, phi - hp)) / (2.0 * hp);
        Ok((dt, dphi))
    }

    pub fn conj(&self) -> Self {
        let e = self.eval.clone();
        let mut s = Symbol {
            name: format!("conj({})", self.name),
            eval: Arc::new(move |x| e(x).conj()),
            grad: None,
            ..self.clone()
        };
        if let Some(g) = self.grad.clone() {
            s.grad = Some(Arc::new(move |x| {
                let (a, b) = g(x);
                (a.conj(), b.conj())
            }));
        }
        s
    }

    pub fn scale(&self, c: C64) -> Self {
        let e = self.eval.clone();
        let mut s = Symbol {
            name: format!("({c})*{}", self.name),
            eval: Arc::new(move |x| c * e(x)),
            grad: None,
            sup_norm_hint: self.sup_norm_hint.map(|h| h * c.norm()),
            ..self.clone()
        };
        if let Some(g) = self.grad.clone() {
            s.grad = Some(Arc::new(move |x| {
                let (a, b) = g(x);
                (c * a, c * b)
            }));
        }
        s
    }

    /// `f + c`.
    pub fn shift(&self, c: C64) -> Self {
        let e = self.eval.clone();
        Symbol {
            name: format!("{}+({c})", self.name),
            eval: Arc::new(move |x| e(x) + c),
            sup_norm_hint: None,
            peak: None,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Symbol) -> Self {
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let grad: Option<GradFn> = match (self.grad.clone(), other.grad.clone()) {
            (Some(g1), Some(g2)) => Some(Arc::new(move |x| {
                let (a1, b1) = g1(x);
                let (a2, b2) = g2(x);
                (a1 + a2, b1 + b2)
            })),
            _ => None,
        };
        Symbol {
            name: format!("{}+{}", self.name, other.name),
            regularity: self.regularity.min(other.regularity),
            eval: Arc::new(move |x| e1(x) + e2(x)),
            grad,
            sup_norm_hint: None,
            peak: None,
            breaks: merge_breaks(&self.breaks, &other.breaks),
        }
    }

    pub fn mul(&self, other: &Symbol) -> Self {
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let grad: Option<GradFn> = match (self.grad.clone(), other.grad.clone()) {
            (Some(g1), Some(g2)) => {
                let (f1, f2) = (self.eval.clone(), other.eval.clone());
                Some(Arc::new(move |x| {
                    let (a1, b1) = g1(x);
                    let (a2, b2) = g2(x);
                    let (v1, v2) = (f1(x), f2(x));
                    (a1 * v2 + v1 * a2, b1 * v2 + v1 * b2)
                }))
            }
            _ => None,
        };
        Symbol {
            name: format!("{}*{}", self.name, other.name),
            regularity: self.regularity.min(other.regularity),
            eval: Arc::new(move |x| e1(x) * e2(x)),
            grad,
            sup_norm_hint: None,
            peak: None,
            breaks: merge_breaks(&self.breaks, &other.breaks),
        }
    }

    /// `|f|^2`.
    pub fn abs_sq(&self) -> Self {
        self.mul(&self.conj()).renamed(format!("|{}|^2", self.name))
    }

    /// The pointwise Poisson bracket `{f, g}` as a symbol. Its class is one
    /// step below the weaker argument; it carries no analytic gradient.
    pub fn poisson(ps: &PhaseSpace, f: &Symbol, g: &Symbol) -> Symbol {
        let (f2, g2, ps2) = (f.clone(), g.clone(), *ps);
        Symbol {
            name: format!("{{{},{}}}", f.name, g.name),
            regularity: f.regularity.min(g.regularity).derivative(),
            eval: Arc::new(move |x| {
                poisson_bracket(&ps2, &f2, &g2, x).unwrap_or(C64::new(f64::NAN, f64::NAN))
            }),
            grad: None,
            sup_norm_hint: None,
            peak: None,
            breaks: merge_breaks(&f.breaks, &g.breaks),
        }
    }
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn z3_of(x: Point) -> f64 {
    2.0 * x.t() - 1.0
}

/// Catalog entries understood by [`builtin_symbol`]. Parametrised families
/// are shown with a sample argument.
pub const CATALOG: &[(&str, &str)] = &[
    ("z1", "Cinf  coordinate function 2 sqrt(t(1-t)) cos(phi)"),
    ("z2", "Cinf  coordinate function 2 sqrt(t(1-t)) sin(phi)"),
    ("z3", "Cinf  coordinate function 2t - 1"),
    (
        "harmonic_Y2",
        "Cinf  (3 z3^2 - 1) / 2, a degree-2 spherical harmonic",
    ),
    ("holder(a)", "C0    |z3|^a for 0 < a < 1"),
    ("kink", "C1    z3 |z3|"),
    ("kink2", "C2    z3^2 |z3|"),
    ("const(c)", "Cinf  constant c (real, or complex as 1+2i)"),
    ("i_z3", "Cinf  i z3"),
    ("i_kink", "C1    i z3 |z3|"),
    ("complex_mix", "Cinf  z1 + i z3"),
];

/// Looks up a catalog symbol by name, e.g. `"z3"`, `"holder(0.5)"`,
/// `"const(1+2i)"`.
pub fn builtin_symbol(name: &str) -> Result<Symbol> {
    let name = name.trim();
    let north = Point::north_pole();
    let sym = match name {
        "z1" => coordinate(0),
        "z2" => coordinate(1),
        "z3" => Symbol::new("z3", Regularity::Cinf, |x| c(z3_of(x)))
            .with_gradient(|_| (c(2.0), c(0.0)))
            .with_peak(1.0, north),
        "harmonic_Y2" => Symbol::new("harmonic_Y2", Regularity::Cinf, |x| {
            let z = z3_of(x);
            c(1.5 * z * z - 0.5)
        })
        .with_gradient(|x| (c(6.0 * z3_of(x)), c(0.0)))
        .with_peak(1.0, north),
        "kink" => kink(),
        "kink2" => Symbol::new("kink2", Regularity::C2, |x| {
            let z = z3_of(x);
            c(z * z * z.abs())
        })
        .with_gradient(|x| {
            let z = z3_of(x);
            (c(6.0 * z * z.abs()), c(0.0))
        })
        .with_peak(1.0, north)
        .with_breaks(&[0.5]),
        "i_z3" => Symbol::new("i_z3", Regularity::Cinf, |x| C64::new(0.0, z3_of(x)))
            .with_gradient(|_| (C64::new(0.0, 2.0), c(0.0)))
            .with_peak(1.0, north),
        "i_kink" => kink().scale(C64::new(0.0, 1.0)).renamed("i_kink"),
        "complex_mix" => coordinate(0)
            .add(&builtin_symbol("i_z3")?)
            .renamed("complex_mix")
            .with_peak(1.0, north),
        _ => {
            if let Some(arg) = call_arg(name, "holder") {
                let alpha: f64 = arg
                    .parse()
                    .map_err(|_| Error::UnknownSymbol(name.to_string()))?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "holder exponent must lie in (0, 1), got {alpha}"
                    )));
                }
                holder(alpha, name)
            } else if let Some(arg) = call_arg(name, "const") {
                let v = parse_complex(arg).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
                Symbol::new(name, Regularity::Cinf, move |_| v)
                    .with_gradient(|_| (c(0.0), c(0.0)))
                    .with_peak(v.norm(), Point::south_pole())
            } else {
                return Err(Error::UnknownSymbol(name.to_string()));
            }
        }
    };
    Ok(sym)
}

fn coordinate(axis: usize) -> Symbol {
    let name = if axis == 0 { "z1" } else { "z2" };
    let trig = move |phi: f64| if axis == 0 { phi.cos() } else { phi.sin() };
    let dtrig = move |phi: f64| if axis == 0 { -phi.sin() } else { phi.cos() };
    Symbol::new(name, Regularity::Cinf, move |x| {
        let r = 2.0 * (x.t() * (1.0 - x.t())).max(0.0).sqrt();
        c(r * trig(x.phi()))
    })
    .with_gradient(move |x| {
        let s = (x.t() * (1.0 - x.t())).sqrt();
        let r = 2.0 * s;
        (
            c((1.0 - 2.0 * x.t()) / s * trig(x.phi())),
            c(r * dtrig(x.phi())),
        )
    })
    .with_peak(
        1.0,
        Point::new(
            0.5,
            if axis == 0 {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            },
        )
        .expect("valid"),
    )
}

fn kink() -> Symbol {
    Symbol::new("kink", Regularity::C1, |x| {
        let z = z3_of(x);
        c(z * z.abs())
    })
    .with_gradient(|x| (c(4.0 * z3_of(x).abs()), c(0.0)))
    .with_peak(1.0, Point::north_pole())
    .with_breaks(&[0.5])
}

fn holder(alpha: f64, name: &str) -> Symbol {
    // derivative exists away from the equator only
    Symbol::new(name, Regularity::C0, move |x| c(z3_of(x).abs().powf(alpha)))
        .with_gradient(move |x| {
            let z = z3_of(x);
            (
                c(2.0 * alpha * z.signum() * z.abs().powf(alpha - 1.0)),
                c(0.0),
            )
        })
        .with_peak(1.0, Point::north_pole())
        .with_breaks(&[0.5])
}

fn call_arg<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    name.strip_prefix(head)?
        .trim()
        .strip_prefix('(')?
        .strip_suffix(')')
        .map(str::trim)
}

/// Parses `1.5`, `-2`, `i`, `-0.5i`, `1+2i`, `1e-3-4i`.
fn parse_complex(s: &str) -> Option<C64> {
    let s: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // find the split between real and imaginary part: last +/- not
        // following an exponent marker and not at position 0
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse().ok()?,
        };
        Some(C64::new(re.parse().ok()?, im))
    } else {
        s.parse().ok().map(|re| C64::new(re, 0.0))
    }
}

/// Result of [`sup_norm`]: the reported value is `max(grid_max, hint)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub grid_max: f64,
    pub hint: Option<f64>,
    /// Grid maximum and hint differ by more than `1e-3`.
    pub disagrees: bool,
}

pub fn sup_norm(f: &Symbol, grid: &QuadratureGrid) -> SupNorm {
    let grid_max = grid
        .nodes()
        .map(|(x, _)| f.eval(x).norm())
        .fold(0.0, f64::max);
    let hint = f.sup_norm_hint();
    let value = hint.map_or(grid_max, |h| h.max(grid_max));
    SupNorm {
        value,
        grid_max,
        hint,
        disagrees: hint.is_some_and(|h| (h - grid_max).abs() > 1e-3),
    }
}

/// `sqrt(\int |Im f|^2 omega)`, the L^2 distance to real-valued functions.
pub fn dist_to_real(ps: &PhaseSpace, grid: &QuadratureGrid, f: &Symbol) -> Result<f64> {
    let v = integrate(ps, grid, |x| c(f.eval(x).im.powi(2)))?;
    Ok(v.re.max(0.0).sqrt())
}

/// `sqrt(\int |f|^2 - |\int f|^2 / vol)`, the L^2 distance to constants.
pub fn dist_to_const(ps: &PhaseSpace, grid: &QuadratureGrid, f: &Symbol) -> Result<f64> {
    let mean = integrate(ps, grid, |x| f.eval(x))?;
    let sq = integrate(ps, grid, |x| c(f.eval(x).norm_sqr()))?;
    let r = sq.re - mean.norm_sqr() / ps.volume();
    clamp_radicand(r, "dist_to_const").map(f64::sqrt)
}

/// Small negative radicands (>= -1e-12) are rounding and clamp to zero;
/// anything below is a quadrature fault.
pub(crate) fn clamp_radicand(r: f64, what: &str) -> Result<f64> {
    if r >= 0.0 {
        Ok(r)
    } else if r >= -1e-12 {
        Ok(0.0)
    } else {
        Err(Error::QuadratureFault(format!(
            "{what}: negative radicand {r:e}"
        )))
    }
}
