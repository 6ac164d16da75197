//! Declarative experiment runner: a flat `key = value` config in, CSV rows
//! ordered by `(experiment, symbols, p)` and a JSON summary out.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    class_target, commutator_series, distance_series, fixed_panel, kernel_diagonal_series,
    laplace_bound_check, loglog_slope, norm_convergence_at, product_series, product_trace_series,
    trace_series, FitMode, Series, SLOPE_TOLERANCE, ZERO_FLOOR,
};
use crate::error::{Error, Result};
use crate::geometry::{make_phase_space, quadrature_grid, Orientation, PhaseSpace, Point};
use crate::hilbert::quantum_space;
use crate::par;
use crate::semiclassics::{
    check_reproducing, gaussian_moment_check, model_panel, ModelKernelParams,
};
use crate::symbols::{builtin_symbol, Regularity, Symbol};
use crate::toeplitz::QuadSpec;

/// Tolerance for experiments whose residual is an exact identity.
pub const EXACT_TOLERANCE: f64 = 1e-10;
/// Tolerance for the model-kernel quadrature checks.
pub const MODEL_TOLERANCE: f64 = 1e-8;
/// Default slope slack for the commutator.
pub const COMMUTATOR_TOLERANCE: f64 = 0.2;
/// Default `C` in the per-row commutator bound `p * residual <= C`.
pub const COMMUTATOR_CONSTANT: f64 = 8.0;
/// Smallest `p` accepted by rate experiments.
pub const MIN_RATE_P: usize = 8;

pub const CSV_HEADER: &str = "experiment,symbols,p,n_t,n_phi,residual,reference,slope,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GramCheck,
    BergmanDensity,
    KernelDiagonal,
    TraceExpansion,
    ProductTrace,
    ProductResidual,
    Commutator,
    NormConvergence,
    Distances,
    LaplaceBound,
    ModelKernel,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::GramCheck,
        ExperimentKind::BergmanDensity,
        ExperimentKind::KernelDiagonal,
        ExperimentKind::TraceExpansion,
        ExperimentKind::ProductTrace,
        ExperimentKind::ProductResidual,
        ExperimentKind::Commutator,
        ExperimentKind::NormConvergence,
        ExperimentKind::Distances,
        ExperimentKind::LaplaceBound,
        ExperimentKind::ModelKernel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::GramCheck => "gram_check",
            ExperimentKind::BergmanDensity => "bergman_density",
            ExperimentKind::KernelDiagonal => "kernel_diagonal",
            ExperimentKind::TraceExpansion => "trace_expansion",
            ExperimentKind::ProductTrace => "product_trace",
            ExperimentKind::ProductResidual => "product_residual",
            ExperimentKind::Commutator => "commutator",
            ExperimentKind::NormConvergence => "norm_convergence",
            ExperimentKind::Distances => "distances",
            ExperimentKind::LaplaceBound => "laplace_bound",
            ExperimentKind::ModelKernel => "model_kernel",
        }
    }

    /// Experiments judged by a fitted decay rate.
    pub fn is_rate(self) -> bool {
        matches!(
            self,
            ExperimentKind::KernelDiagonal
                | ExperimentKind::TraceExpansion
                | ExperimentKind::ProductTrace
                | ExperimentKind::ProductResidual
                | ExperimentKind::Commutator
                | ExperimentKind::NormConvergence
                | ExperimentKind::Distances
        )
    }

    fn needs_symbols(self) -> bool {
        !matches!(
            self,
            ExperimentKind::GramCheck
                | ExperimentKind::BergmanDensity
                | ExperimentKind::ModelKernel
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub symbols: Vec<String>,
    pub p_list: Vec<usize>,
    pub quad: QuadSpec,
    /// `None` means the class default.
    pub target_exponent: Option<f64>,
    /// `None` means the experiment default.
    pub tolerance: Option<f64>,
    pub out_path: Option<PathBuf>,
    pub seed: u64,
    /// Extra uniformly drawn sample points for pointwise experiments.
    pub random_points: usize,
    /// Model frequencies for `model_kernel`.
    pub a: Vec<f64>,
    pub orientation: Orientation,
    pub bound_constant: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            symbols: Vec::new(),
            p_list: Vec::new(),
            quad: QuadSpec::Auto,
            target_exponent: None,
            tolerance: None,
            out_path: None,
            seed: 0,
            random_points: 0,
            a: vec![2.0 * PI],
            orientation: Orientation::Standard,
            bound_constant: COMMUTATOR_CONSTANT,
        }
    }

    pub fn with_symbols(mut self, symbols: &[&str]) -> Self {
        self.symbols = symbols.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_p_list(mut self, p_list: &[usize]) -> Self {
        self.p_list = p_list.to_vec();
        self
    }

    pub fn with_a(mut self, a: &[f64]) -> Self {
        self.a = a.to_vec();
        self
    }

    /// Reads a config file; see [`ExperimentConfig::parse`].
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. `#` starts a comment, lists are
    /// comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("line {}: expected `key = value`", i + 1))
            })?;
            let key = k.trim().to_string();
            if entries.iter().any(|e| e.1 == key) {
                return Err(Error::InvalidArgument(format!(
                    "line {}: duplicate key `{key}`",
                    i + 1
                )));
            }
            entries.push((i + 1, key, v.trim().to_string()));
        }
        let experiment = entries
            .iter()
            .find(|e| e.1 == "experiment")
            .ok_or_else(|| Error::InvalidArgument("missing key `experiment`".into()))?
            .2
            .parse::<ExperimentKind>()?;
        let mut cfg = Self::new(experiment);
        let mut n: Option<usize> = None;
        for (line, key, value) in &entries {
            let bad = |what: &str| {
                Error::InvalidArgument(format!("line {line}: {what} `{value}` for `{key}`"))
            };
            match key.as_str() {
                "experiment" => {}
                "symbols" | "symbol" => cfg.symbols = split_list(value),
                "p_list" => {
                    cfg.p_list = split_list(value)
                        .iter()
                        .map(|s| s.parse::<usize>().map_err(|_| bad("bad integer")))
                        .collect::<Result<_>>()?
                }
                "quad" => cfg.quad = parse_quad(value).ok_or_else(|| bad("bad quadrature"))?,
                "target_exponent" => {
                    cfg.target_exponent = match value.as_str() {
                        "auto" => None,
                        v => Some(parse_real(v).ok_or_else(|| bad("bad number"))?),
                    }
                }
                "tolerance" => {
                    let t = parse_real(value)
                        .filter(|t| *t >= 0.0)
                        .ok_or_else(|| bad("bad tolerance"))?;
                    cfg.tolerance = Some(t);
                }
                "out_path" => cfg.out_path = Some(PathBuf::from(value)),
                "seed" => cfg.seed = value.parse().map_err(|_| bad("bad seed"))?,
                "random_points" => {
                    cfg.random_points = value.parse().map_err(|_| bad("bad count"))?
                }
                "n" => n = Some(value.parse().map_err(|_| bad("bad dimension"))?),
                "a" => {
                    cfg.a = split_list(value)
                        .iter()
                        .map(|s| parse_real(s).ok_or_else(|| bad("bad frequency")))
                        .collect::<Result<_>>()?
                }
                "orientation" => {
                    cfg.orientation = match value.as_str() {
                        "standard" => Orientation::Standard,
                        "reversed" => Orientation::Reversed,
                        _ => return Err(bad("bad orientation")),
                    }
                }
                "bound_constant" => {
                    cfg.bound_constant = parse_real(value)
                        .filter(|c| *c > 0.0)
                        .ok_or_else(|| bad("bad constant"))?
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "line {line}: unknown key `{key}`"
                    )))
                }
            }
        }
        if let Some(n) = n {
            if n != cfg.a.len() {
                return Err(Error::InvalidArgument(format!(
                    "n = {n} but {} frequencies given",
                    cfg.a.len()
                )));
            }
        }
        if experiment == ExperimentKind::ModelKernel && cfg.p_list.is_empty() {
            cfg.p_list = vec![1, 4, 16, 64];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.experiment;
        if self.p_list.is_empty() {
            return Err(Error::InvalidArgument("p_list is empty".into()));
        }
        if self.p_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "p_list must be strictly ascending".into(),
            ));
        }
        if self.p_list[0] == 0 {
            return Err(Error::InvalidArgument("p must be positive".into()));
        }
        if k.is_rate() && self.p_list[0] < MIN_RATE_P {
            return Err(Error::InvalidArgument(format!(
                "{k} needs every p >= {MIN_RATE_P}"
            )));
        }
        if k.needs_symbols() && self.symbols.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{k} needs at least one symbol"
            )));
        }
        let arity = match k {
            ExperimentKind::ProductResidual | ExperimentKind::Commutator => Some(2..=2),
            ExperimentKind::ProductTrace => Some(1..=4),
            _ => None,
        };
        if let Some(r) = arity {
            if !r.contains(&self.symbols.len()) {
                return Err(Error::InvalidArgument(format!(
                    "{k} takes {}..={} symbols, got {}",
                    r.start(),
                    r.end(),
                    self.symbols.len()
                )));
            }
        }
        for s in &self.symbols {
            builtin_symbol(s)?;
        }
        if k == ExperimentKind::ModelKernel {
            ModelKernelParams::new(self.a.clone())?;
        }
        Ok(())
    }

    fn symbol_objects(&self) -> Result<Vec<Symbol>> {
        self.symbols.iter().map(|s| builtin_symbol(s)).collect()
    }

    fn default_tolerance(&self) -> f64 {
        match self.experiment {
            ExperimentKind::Commutator => COMMUTATOR_TOLERANCE,
            _ => SLOPE_TOLERANCE,
        }
    }

    /// Fit mode and target for a series whose weakest symbol has class `reg`.
    fn rate_rule(&self, reg: Regularity) -> (FitMode, f64, f64) {
        let tol = self.tolerance.unwrap_or_else(|| self.default_tolerance());
        match self.target_exponent {
            Some(t) => (FitMode::Slope, t, tol),
            None if self.experiment == ExperimentKind::Commutator => (FitMode::Slope, -1.0, tol),
            None => {
                let (mode, t) = class_target(reg);
                (mode, t, tol)
            }
        }
    }

    /// Fixed panel plus `random_points` seeded draws.
    fn sample_points(&self) -> Vec<Point> {
        let mut pts = fixed_panel();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_points {
            let t = rng.gen_range(0.0..1.0);
            let phi = rng.gen_range(0.0..2.0 * PI);
            pts.push(Point::new(t, phi).expect("t drawn from [0, 1)"));
        }
        pts
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reals, optionally as multiples of pi: `2pi`, `1.5 pi`, `pi`.
fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(m) = s.strip_suffix("pi") {
        let m = m.trim().trim_end_matches('*').trim();
        let m = if m.is_empty() {
            1.0
        } else {
            m.parse::<f64>().ok()?
        };
        return Some(m * PI).filter(|x| x.is_finite());
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_quad(s: &str) -> Option<QuadSpec> {
    if s == "auto" {
        return Some(QuadSpec::Auto);
    }
    let parts = split_list(s);
    match parts.as_slice() {
        [a, b] => Some(QuadSpec::Fixed {
            n_t: a.parse().ok().filter(|n| *n > 0)?,
            n_phi: b.parse().ok().filter(|n| *n > 0)?,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub symbols: String,
    pub p: Option<usize>,
    pub n_t: Option<usize>,
    pub n_phi: Option<usize>,
    pub residual: f64,
    pub reference: f64,
    /// Log–log slope over this and all earlier rows of the series. Only the
    /// last row of a series is judged on it; earlier values are diagnostic.
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{:.16e},{:.16e},{},{}",
            self.experiment,
            self.symbols,
            opt(self.p),
            opt(self.n_t),
            opt(self.n_phi),
            self.residual,
            self.reference,
            self.slope.map(|s| format!("{s:.16e}")).unwrap_or_default(),
            self.verdict.as_str()
        )
    }
}

/// One judged series inside a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub experiment: String,
    pub symbols: String,
    pub mode: FitMode,
    pub slope: Option<f64>,
    pub target_exponent: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<FitSummary>,
    /// Extra per-experiment quantities for the JSON summary.
    pub notes: serde_json::Map<String, serde_json::Value>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
            && self.fits.iter().all(|f| f.verdict != Verdict::Fail)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let c = &self.config;
        let quad = match c.quad {
            QuadSpec::Auto => json!("auto"),
            QuadSpec::Fixed { n_t, n_phi } => json!([n_t, n_phi]),
        };
        json!({
            "experiment": c.experiment,
            "symbols": c.symbols,
            "p_list": c.p_list,
            "quad": quad,
            "seed": c.seed,
            "orientation": match c.orientation {
                Orientation::Standard => "standard",
                Orientation::Reversed => "reversed",
            },
            "fits": self.fits,
            "notes": self.notes,
            "verdict": Verdict::from_bool(self.passed()),
            "wall_time_s": self.wall_time_s,
        })
    }

    /// Writes the CSV to `csv_path` and the summary next to it as `.json`.
    pub fn write(&self, csv_path: &Path) -> io::Result<PathBuf> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(csv_path, self.csv())?;
        let json_path = csv_path.with_extension("json");
        let text = serde_json::to_string_pretty(&self.summary_json()).map_err(io::Error::other)?;
        fs::write(&json_path, text + "\n")?;
        Ok(json_path)
    }
}

/// A failed run: the error and where it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub context: String,
    pub error: Error,
}

impl RunFailure {
    /// 3 for numeric faults, 2 for everything else (bad configuration).
    pub fn exit_code(&self) -> i32 {
        if self.error.is_numeric_fault() {
            3
        } else {
            2
        }
    }
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Process exit code for a finished report.
pub fn exit_code(report: &Report) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    ps: PhaseSpace,
    rows: Vec<ReportRow>,
    fits: Vec<FitSummary>,
    notes: serde_json::Map<String, serde_json::Value>,
}

impl Runner<'_> {
    fn fail(&self, symbols: &str, p: Option<usize>, error: Error) -> RunFailure {
        let mut context = format!("experiment {}", self.cfg.experiment);
        if !symbols.is_empty() {
            context.push_str(&format!(", symbols {symbols}"));
        }
        if let Some(p) = p {
            context.push_str(&format!(", p = {p}"));
        }
        RunFailure { context, error }
    }

    /// Evaluates `f(p)` over the p list concurrently, naming the first
    /// failing `p`.
    fn per_p<T, F>(&self, symbols: &str, f: F) -> std::result::Result<Vec<T>, RunFailure>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        let out = par::map_slice(&self.cfg.p_list, |&p| f(p).map_err(|e| (p, e)));
        out.into_iter()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|(p, e)| self.fail(symbols, Some(p), e))
    }

    fn orders(&self, p: usize) -> (Option<usize>, Option<usize>) {
        let (a, b) = self.cfg.quad.orders(p);
        (Some(a), Some(b))
    }

    /// Rows judged pointwise: `verdict(residual, reference, p)`.
    fn push_exact<V>(&mut self, label: &str, symbols: &str, series: &Series, verdict: V)
    where
        V: Fn(f64, f64, usize) -> bool,
    {
        for ((p, r), refv) in series
            .p_grid
            .iter()
            .zip(&series.residuals)
            .zip(&series.reference)
        {
            let (n_t, n_phi) = self.orders(*p);
            self.rows.push(ReportRow {
                experiment: label.into(),
                symbols: symbols.into(),
                p: Some(*p),
                n_t,
                n_phi,
                residual: *r,
                reference: *refv,
                slope: None,
                verdict: Verdict::from_bool(verdict(*r, *refv, *p)),
            });
        }
    }

    /// Rows judged by decay rate, with an optional extra per-row bound.
    fn push_rate(
        &mut self,
        label: &str,
        symbols: &str,
        reg: Regularity,
        series: &Series,
        row_bound: Option<f64>,
    ) {
        let (mode, target, tol) = self.cfg.rate_rule(reg);
        let p = &series.p_grid;
        let r = &series.residuals;
        let mut last_slope = None;
        for i in 0..p.len() {
            let slope = loglog_slope(&p[..=i], &r[..=i]).map(|s| s.0);
            let last = i + 1 == p.len();
            let mut verdict = match mode {
                FitMode::Slope => match slope {
                    _ if r[i].abs() <= ZERO_FLOOR && (!last || slope.is_none()) => Verdict::Pass,
                    Some(s) if last => Verdict::from_bool(s <= target + tol),
                    _ => Verdict::NotApplicable,
                },
                FitMode::Monotone { scale_exponent } => {
                    if i == 0 {
                        Verdict::NotApplicable
                    } else {
                        let cur = r[i] * (p[i] as f64).powf(scale_exponent);
                        let prev = r[i - 1] * (p[i - 1] as f64).powf(scale_exponent);
                        Verdict::from_bool(cur < prev || r[i].abs() <= ZERO_FLOOR)
                    }
                }
            };
            if let Some(c) = row_bound {
                if r[i] * p[i] as f64 > c {
                    verdict = Verdict::Fail;
                } else if verdict == Verdict::NotApplicable {
                    verdict = Verdict::Pass;
                }
            }
            let (n_t, n_phi) = self.orders(p[i]);
            self.rows.push(ReportRow {
                experiment: label.into(),
                symbols: symbols.into(),
                p: Some(p[i]),
                n_t,
                n_phi,
                residual: r[i],
                reference: series.reference[i],
                slope,
                verdict,
            });
            last_slope = slope;
        }
        let first = self.rows.len() - p.len();
        let verdicts: Vec<Verdict> = self.rows[first..].iter().map(|r| r.verdict).collect();
        let verdict = if verdicts.contains(&Verdict::Fail) {
            Verdict::Fail
        } else {
            match mode {
                FitMode::Slope => *verdicts.last().unwrap_or(&Verdict::NotApplicable),
                FitMode::Monotone { .. } if p.len() >= 2 => Verdict::Pass,
                FitMode::Monotone { .. } => Verdict::NotApplicable,
            }
        };
        self.fits.push(FitSummary {
            experiment: label.into(),
            symbols: symbols.into(),
            mode,
            slope: last_slope,
            target_exponent: matches!(mode, FitMode::Slope).then_some(target),
            tolerance: matches!(mode, FitMode::Slope).then_some(tol),
            verdict,
        });
    }

    fn note(&mut self, key: String, value: serde_json::Value) {
        self.notes.insert(key, value);
    }

    fn series_from(p: &[usize], pairs: Vec<(f64, f64)>) -> Series {
        Series {
            p_grid: p.to_vec(),
            residuals: pairs.iter().map(|x| x.0).collect(),
            reference: pairs.iter().map(|x| x.1).collect(),
        }
    }

    fn execute(&mut self) -> std::result::Result<(), RunFailure> {
        let cfg = self.cfg;
        let ps = self.ps;
        let quad = cfg.quad;
        let plist = cfg.p_list.clone();
        let kind = cfg.experiment;
        let label = kind.as_str();
        let symbols = cfg.symbol_objects().map_err(|e| self.fail("", None, e))?;
        let joined = cfg.symbols.join(";");
        match kind {
            ExperimentKind::GramCheck => {
                let v = self.per_p("", |p| {
                    let h = quantum_space(&ps, p)?;
                    let (n_t, n_phi) = quad.orders(p);
                    Ok((h.gram_defect(&quadrature_grid(&ps, n_t, n_phi)?)?, 0.0))
                })?;
                let s = Self::series_from(&plist, v);
                self.push_exact(label, "", &s, |r, _, _| r <= EXACT_TOLERANCE);
            }
            ExperimentKind::BergmanDensity => {
                let pts = cfg.sample_points();
                let v = self.per_p("", |p| {
                    let h = quantum_space(&ps, p)?;
                    let want = p as f64 + 1.0;
                    let worst = pts
                        .iter()
                        .map(|x| (h.bergman_density(*x) - want).abs())
                        .fold(0.0, f64::max);
                    Ok((worst, want))
                })?;
                let s = Self::series_from(&plist, v);
                self.push_exact(label, "", &s, |r, refv, _| r <= EXACT_TOLERANCE * refv);
            }
            ExperimentKind::KernelDiagonal => {
                let pts = cfg.sample_points();
                for (f, name) in symbols.iter().zip(&cfg.symbols) {
                    let v = self.per_p(name, |p| {
                        let s = kernel_diagonal_series(&ps, &[p], f, &pts, quad)?;
                        Ok((s.residuals[0], s.reference[0]))
                    })?;
                    self.push_rate(
                        label,
                        name,
                        f.regularity(),
                        &Self::series_from(&plist, v),
                        None,
                    );
                }
            }
            ExperimentKind::TraceExpansion => {
                for (f, name) in symbols.iter().zip(&cfg.symbols) {
                    let v = self.per_p(name, |p| {
                        let s = trace_series(&ps, &[p], f, quad)?;
                        Ok((s.residuals[0], s.reference[0]))
                    })?;
                    self.push_rate(
                        label,
                        name,
                        f.regularity(),
                        &Self::series_from(&plist, v),
                        None,
                    );
                }
            }
            ExperimentKind::ProductTrace => {
                let v = self.per_p(&joined, |p| {
                    let s = product_trace_series(&ps, &[p], &symbols, quad)?;
                    Ok((s.residuals[0], s.reference[0]))
                })?;
                let reg = weakest(&symbols);
                self.push_rate(label, &joined, reg, &Self::series_from(&plist, v), None);
            }
            ExperimentKind::ProductResidual => {
                let v = self.per_p(&joined, |p| {
                    let s = product_series(&ps, &[p], &symbols[0], &symbols[1], quad)?;
                    Ok((s.residuals[0], 0.0))
                })?;
                let reg = weakest(&symbols);
                self.push_rate(label, &joined, reg, &Self::series_from(&plist, v), None);
            }
            ExperimentKind::Commutator => {
                let v = self.per_p(&joined, |p| {
                    let s = commutator_series(&ps, &[p], &symbols[0], &symbols[1], quad)?;
                    Ok((s.residuals[0], 0.0))
                })?;
                let reg = weakest(&symbols);
                let bound = Some(cfg.bound_constant);
                self.push_rate(label, &joined, reg, &Self::series_from(&plist, v), bound);
                self.note("bound_constant".into(), json!(cfg.bound_constant));
            }
            ExperimentKind::NormConvergence => {
                for (f, name) in symbols.iter().zip(&cfg.symbols) {
                    let v = self.per_p(name, |p| norm_convergence_at(&ps, p, f, quad))?;
                    let coherent: Vec<f64> = v.iter().map(|x| x.2).collect();
                    let pairs = v.iter().map(|x| (x.0, x.1)).collect();
                    self.push_rate(
                        label,
                        name,
                        f.regularity(),
                        &Self::series_from(&plist, pairs),
                        None,
                    );
                    self.note(format!("coherent_lower_bound:{name}"), json!(coherent));
                }
            }
            ExperimentKind::Distances => {
                for (f, name) in symbols.iter().zip(&cfg.symbols) {
                    let v = self.per_p(name, |p| distance_series(&ps, &[p], f, quad))?;
                    let herm = Self::series_from(
                        &plist,
                        v.iter()
                            .map(|d| (d.herm.residuals[0], d.herm_limit))
                            .collect(),
                    );
                    let scalar = Self::series_from(
                        &plist,
                        v.iter()
                            .map(|d| (d.scalar.residuals[0], d.scalar_limit))
                            .collect(),
                    );
                    self.push_rate("distances:herm", name, f.regularity(), &herm, None);
                    self.push_rate("distances:scalar", name, f.regularity(), &scalar, None);
                    let herm_values: Vec<f64> = v.iter().map(|d| d.herm_values[0]).collect();
                    let scalar_values: Vec<f64> = v.iter().map(|d| d.scalar_values[0]).collect();
                    self.note(
                        format!("normalized_dist_herm_sq:{name}"),
                        json!(herm_values),
                    );
                    self.note(
                        format!("normalized_dist_scalar_sq:{name}"),
                        json!(scalar_values),
                    );
                }
            }
            ExperimentKind::LaplaceBound => {
                for (f, name) in symbols.iter().zip(&cfg.symbols) {
                    let v = self.per_p(name, |p| laplace_bound_check(&ps, &[p], f, quad))?;
                    let pairs = v.iter().map(|r| (r.lhs[0], r.bound)).collect();
                    self.push_exact(label, name, &Self::series_from(&plist, pairs), |r, b, _| {
                        r <= b + ZERO_FLOOR
                    });
                    if let Some(r) = v.first() {
                        self.note(
                            format!("energy:{name}"),
                            json!({ "dirichlet_energy": r.energy, "lambda": r.lambda, "bound": r.bound }),
                        );
                    }
                }
            }
            ExperimentKind::ModelKernel => {
                let params =
                    ModelKernelParams::new(cfg.a.clone()).map_err(|e| self.fail("", None, e))?;
                let tag = cfg
                    .a
                    .iter()
                    .map(|a| format!("a={a}"))
                    .collect::<Vec<_>>()
                    .join(";");
                let rep = check_reproducing(&params).map_err(|e| self.fail(&tag, None, e))?;
                self.rows.push(ReportRow {
                    experiment: "model_kernel:reproducing".into(),
                    symbols: tag.clone(),
                    p: None,
                    n_t: Some(params.order()),
                    n_phi: None,
                    residual: rep,
                    reference: 0.0,
                    slope: None,
                    verdict: Verdict::from_bool(rep <= MODEL_TOLERANCE),
                });
                let panel = model_panel(params.n());
                let v = self.per_p(&tag, |p| {
                    let mut worst = 0.0f64;
                    for z in &panel {
                        worst = worst.max(gaussian_moment_check(&params, p, z)?);
                    }
                    Ok((worst, 0.0))
                })?;
                for (p, (r, _)) in plist.iter().zip(v) {
                    self.rows.push(ReportRow {
                        experiment: "model_kernel:moment".into(),
                        symbols: tag.clone(),
                        p: Some(*p),
                        n_t: Some(params.order()),
                        n_phi: None,
                        residual: r,
                        reference: 0.0,
                        slope: None,
                        verdict: Verdict::from_bool(r <= MODEL_TOLERANCE),
                    });
                }
                self.note("half_width".into(), json!(params.half_width()));
                self.note("boundary_mass".into(), json!(params.boundary_mass()));
            }
        }
        Ok(())
    }
}

fn weakest(fs: &[Symbol]) -> Regularity {
    fs.iter()
        .map(Symbol::regularity)
        .min()
        .unwrap_or(Regularity::Cinf)
}

/// Runs one experiment. Rows come back ordered by `(experiment, symbols, p)`.
pub fn run(config: &ExperimentConfig) -> std::result::Result<Report, RunFailure> {
    let start = Instant::now();
    config.validate().map_err(|error| RunFailure {
        context: format!("experiment {}", config.experiment),
        error,
    })?;
    let mut runner = Runner {
        cfg: config,
        ps: make_phase_space().with_orientation(config.orientation),
        rows: Vec::new(),
        fits: Vec::new(),
        notes: serde_json::Map::new(),
    };
    runner.execute()?;
    let mut rows = runner.rows;
    rows.sort_by(|a, b| (&a.experiment, &a.symbols, a.p).cmp(&(&b.experiment, &b.symbols, b.p)));
    Ok(Report {
        config: config.clone(),
        rows,
        fits: runner.fits,
        notes: runner.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Smoke,
    PaperFull,
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(SuiteName::Smoke),
            "paper-full" => Ok(SuiteName::PaperFull),
            _ => Err(Error::InvalidArgument(format!("unknown suite `{s}`"))),
        }
    }
}

const FULL: [usize; 6] = [8, 16, 32, 64, 128, 256];
const FROM_16: [usize; 5] = [16, 32, 64, 128, 256];

/// Named configs making up a suite.
pub fn suite_configs(name: SuiteName) -> Vec<(String, ExperimentConfig)> {
    use ExperimentKind as K;
    let cfg = |k: K, syms: &[&str], p: &[usize]| {
        ExperimentConfig::new(k).with_symbols(syms).with_p_list(p)
    };
    let mut out: Vec<(String, ExperimentConfig)> = Vec::new();
    match name {
        SuiteName::Smoke => {
            let p = [8, 16];
            out.push(("gram_check".into(), cfg(K::GramCheck, &[], &p)));
            out.push(("bergman_density".into(), cfg(K::BergmanDensity, &[], &p)));
            out.push((
                "kernel_diagonal".into(),
                cfg(K::KernelDiagonal, &["z3", "kink", "holder(0.5)"], &p),
            ));
            out.push((
                "trace_expansion".into(),
                cfg(K::TraceExpansion, &["const(2)", "z1", "kink"], &p),
            ));
            out.push((
                "product_trace".into(),
                cfg(K::ProductTrace, &["z3", "z3"], &p),
            ));
            out.push((
                "product_residual".into(),
                cfg(K::ProductResidual, &["z1", "z3"], &p),
            ));
            out.push(("commutator".into(), cfg(K::Commutator, &["z3", "z1"], &p)));
            out.push((
                "norm_convergence".into(),
                cfg(K::NormConvergence, &["z3", "kink"], &p),
            ));
            out.push(("distances".into(), cfg(K::Distances, &["i_z3", "z3"], &p)));
            out.push((
                "laplace_bound".into(),
                cfg(K::LaplaceBound, &["z1", "z3", "kink"], &p),
            ));
            out.push((
                "model_kernel".into(),
                cfg(K::ModelKernel, &[], &p).with_a(&[2.0 * PI, 4.0 * PI]),
            ));
        }
        SuiteName::PaperFull => {
            let exact = [1, 4, 16, 64, 256];
            let moments = [1, 4, 16, 64];
            out.push(("c1_gram".into(), cfg(K::GramCheck, &[], &exact)));
            out.push(("c1_density".into(), cfg(K::BergmanDensity, &[], &exact)));
            for (tag, a) in [
                ("n1", vec![2.0 * PI]),
                ("n2", vec![2.0 * PI, 4.0 * PI]),
                ("n2_wide", vec![1.5, 9.0]),
            ] {
                out.push((
                    format!("c2_model_{tag}"),
                    cfg(K::ModelKernel, &[], &moments).with_a(&a),
                ));
            }
            out.push((
                "c3_norm_z3".into(),
                cfg(K::NormConvergence, &["z3"], &FROM_16),
            ));
            out.push((
                "c3_norm_kink".into(),
                cfg(K::NormConvergence, &["kink"], &FROM_16),
            ));
            out.push((
                "c3_norm_holder".into(),
                cfg(K::NormConvergence, &["holder(0.5)"], &FULL),
            ));
            let diag = [
                "z1",
                "z3",
                "harmonic_Y2",
                "complex_mix",
                "kink",
                "holder(0.5)",
            ];
            out.push((
                "c4_kernel_diagonal".into(),
                cfg(K::KernelDiagonal, &diag, &FULL),
            ));
            let tr = ["const(2)", "z1", "z3", "harmonic_Y2", "complex_mix"];
            out.push(("c5_trace".into(), cfg(K::TraceExpansion, &tr, &FULL)));
            for (a, b) in [
                ("z3", "z3"),
                ("kink", "kink"),
                ("kink", "z1"),
                ("i_kink", "kink"),
            ] {
                out.push((
                    format!("c5_product_trace_{a}_{b}"),
                    cfg(K::ProductTrace, &[a, b], &FULL),
                ));
            }
            for (a, b) in [
                ("z1", "z3"),
                ("z3", "z3"),
                ("z1", "harmonic_Y2"),
                ("harmonic_Y2", "harmonic_Y2"),
                ("complex_mix", "z2"),
                ("kink", "z1"),
                ("kink", "kink"),
                ("i_kink", "z3"),
            ] {
                out.push((
                    format!("c6_product_{a}_{b}"),
                    cfg(K::ProductResidual, &[a, b], &FROM_16),
                ));
            }
            out.push((
                "c6_commutator_z3_z1".into(),
                cfg(K::Commutator, &["z3", "z1"], &FULL),
            ));
            out.push((
                "c7_distances".into(),
                cfg(K::Distances, &["i_z3", "z3", "i_kink", "kink"], &FULL),
            ));
            out.push((
                "c8_laplace".into(),
                cfg(K::LaplaceBound, &["z1", "z3", "kink"], &FULL),
            ));
        }
    }
    out
}
