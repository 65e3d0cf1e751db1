//! Convergence experiments: initial data, initial-layer preparation,
//! ε × Δt × scheme sweeps, max-over-ε aggregation, slope fitting and CSV.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relaxsys::{self, RelaxationSystem, SystemError};
use crate::spectral::{self, GridField, ModalState};
use crate::stepper::{self, StepError, StepPlan};
use crate::tableaux::{self, TableauError};

/// Step of the brute-force initial-layer integration.
pub const FINE_LAYER_DT: f64 = 1e-5;

/// The fine-step reference uses this fraction of the smallest tested Δt.
pub const FINE_REFERENCE_RATIO: f64 = 64.0;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("empty error table")]
    EmptyTable,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("cell (scheme = {scheme}, eps = {epsilon:e}, dt = {dt:e}) failed: {source}")]
    Cell {
        scheme: String,
        epsilon: f64,
        dt: f64,
        source: StepError,
    },
    #[error("layer preparation at eps = {epsilon:e} failed: {source}")]
    Layer { epsilon: f64, source: StepError },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Step(#[from] StepError),
}

impl LabError {
    /// Whether the error stems from the configuration rather than a
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            LabError::Config(_)
                | LabError::UnknownModel(_)
                | LabError::System(SystemError::UnknownModel(_))
                | LabError::System(SystemError::BadMomentOrder(_))
                | LabError::System(SystemError::BadEpsilon(_))
                | LabError::Tableau(TableauError::UnknownScheme(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

fn io_err(path: &Path, e: impl fmt::Display) -> LabError {
    LabError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    /// Per-mode matrix exponential.
    Exact,
    /// `bhr553s` at the smallest Δt divided by [`FINE_REFERENCE_RATIO`].
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    Exact,
    /// `bhr553s` at [`FINE_LAYER_DT`].
    Fine,
}

impl std::str::FromStr for ReferenceMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "fine" => Ok(Self::Fine),
            _ => Err(format!(
                "reference mode must be `exact` or `fine`, got `{s}`"
            )),
        }
    }
}

impl std::str::FromStr for LayerMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "fine" => Ok(Self::Fine),
            _ => Err(format!("layer mode must be `exact` or `fine`, got `{s}`")),
        }
    }
}

/// One convergence sweep. Every field has a default, so a TOML file only
/// needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `broadwell` or `grad:M`.
    pub model: String,
    pub schemes: Vec<String>,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_count: usize,
    /// Explicit ε values; replaces the log-spaced grid when present.
    pub eps_list: Option<Vec<f64>>,
    /// `Δt_k = dt_base / N² · 2^{−k}`, `k = 1..=dt_levels`.
    pub dt_base: f64,
    pub dt_levels: u32,
    pub n: usize,
    pub t0: f64,
    pub t: f64,
    pub reference: ReferenceMode,
    pub layer: LayerMode,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "broadwell".into(),
            schemes: vec!["ars222".into(), "ars443".into(), "bhr553s".into()],
            eps_lo: 1e-7,
            eps_hi: 1.0,
            eps_count: 15,
            eps_list: None,
            dt_base: 32.0,
            dt_levels: 6,
            n: 40,
            t0: 1.0,
            t: 2.0,
            reference: ReferenceMode::Exact,
            layer: LayerMode::Exact,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// ε values in ascending order without duplicates.
    pub fn epsilons(&self) -> Vec<f64> {
        let mut eps = match &self.eps_list {
            Some(list) => list.clone(),
            None => log_space(self.eps_lo, self.eps_hi, self.eps_count),
        };
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        eps
    }

    /// Δt ladder, largest first.
    pub fn dts(&self) -> Vec<f64> {
        let base = self.dt_base / (self.n * self.n) as f64;
        (1..=self.dt_levels)
            .map(|k| base * 0.5f64.powi(k as i32))
            .collect()
    }

    /// Schemes in configuration order, first occurrence kept.
    pub fn unique_schemes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.schemes {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if !(self.t0 >= 0.0 && self.t > self.t0 && self.t.is_finite()) {
            return bad(format!(
                "need T > T0 >= 0, got T0 = {}, T = {}",
                self.t0, self.t
            ));
        }
        let needed = max_wavenumber(&self.model)?;
        if self.n < needed {
            return bad(format!(
                "N = {} cannot represent the {} initial data (needs N >= {needed})",
                self.n, self.model
            ));
        }
        if self.schemes.is_empty() {
            return bad("no schemes given".into());
        }
        for s in &self.schemes {
            tableaux::registry(s)?;
        }
        match &self.eps_list {
            Some(list) => {
                if list.is_empty() || list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                    return bad("eps_list must hold positive finite values".into());
                }
            }
            None => {
                if !(self.eps_lo > 0.0 && self.eps_hi >= self.eps_lo && self.eps_hi.is_finite()) {
                    return bad(format!(
                        "need 0 < eps_lo <= eps_hi, got [{}, {}]",
                        self.eps_lo, self.eps_hi
                    ));
                }
                if self.eps_count == 0 {
                    return bad("eps_count must be positive".into());
                }
            }
        }
        if !(self.dt_base > 0.0 && self.dt_base.is_finite()) || self.dt_levels == 0 {
            return bad("dt ladder needs dt_base > 0 and dt_levels >= 1".into());
        }
        let span = self.t - self.t0;
        for dt in self.dts() {
            if stepper::steps_for(span, dt).is_err() {
                return bad(format!("T - T0 = {span} is not a multiple of dt = {dt:e}"));
            }
        }
        Ok(())
    }
}

/// `count` log-spaced values; the endpoints are reproduced exactly.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

fn max_wavenumber(model: &str) -> Result<usize> {
    match model {
        "broadwell" => Ok(4),
        m if m.starts_with("grad:") => {
            relaxsys::builtin(m, 1.0)?;
            Ok(2)
        }
        other => Err(LabError::UnknownModel(other.to_string())),
    }
}

/// Projection of the model's initial data onto `P_N`.
pub fn initial_state(model: &str, n: usize) -> Result<ModalState> {
    let fields: Vec<Box<dyn Fn(f64) -> f64>> = match model {
        "broadwell" => {
            let rho = |x: f64| 0.5 + 0.3 * (2.0 * x).sin();
            vec![
                Box::new(rho),
                Box::new(move |x: f64| rho(x) * (0.5 + 0.05 * (2.0 * x).cos())),
                Box::new(move |x: f64| rho(x) / 2.0),
            ]
        }
        m if m.starts_with("grad:") => {
            let (sys, _) = relaxsys::builtin(m, 1.0)?;
            let mut f: Vec<Box<dyn Fn(f64) -> f64>> = vec![
                Box::new(|x: f64| (2.0 * x).sin() + 1.1),
                Box::new(|_| 0.0),
                // θ/√2 with θ = √2
                Box::new(|_| 1.0),
            ];
            while f.len() < sys.dim() {
                f.push(Box::new(|_| 0.0));
            }
            f
        }
        other => return Err(LabError::UnknownModel(other.to_string())),
    };
    // Sample finely enough that products of low modes do not alias when N
    // is small.
    let x = spectral::grid(n.max(8));
    let values = fields
        .iter()
        .map(|f| x.iter().map(|&xj| f(xj)).collect())
        .collect();
    Ok(spectral::project_grid(&GridField { x, values }, n).expect("grid is large enough"))
}

/// Evolves `state` over the initial layer `[0, T0]`.
pub fn prepare_layer(
    system: &RelaxationSystem,
    state: &ModalState,
    t0: f64,
    mode: LayerMode,
) -> std::result::Result<ModalState, StepError> {
    if t0 == 0.0 {
        return Ok(state.clone());
    }
    match mode {
        LayerMode::Exact => stepper::exact_evolve(system, state, t0),
        LayerMode::Fine => stepper::fine_step_evolve(system, state, t0, FINE_LAYER_DT),
    }
}

/// One cell of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub model: String,
    pub scheme: String,
    pub epsilon: f64,
    pub dt: f64,
    pub l2_error: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Keeps the first row for each `(model, scheme, epsilon, dt)`.
    pub fn from_rows(rows: Vec<ErrorRow>) -> Self {
        let mut out: Vec<ErrorRow> = Vec::with_capacity(rows.len());
        for row in rows {
            let dup = out.iter().any(|r| {
                r.model == row.model
                    && r.scheme == row.scheme
                    && r.epsilon == row.epsilon
                    && r.dt == row.dt
            });
            if !dup {
                out.push(row);
            }
        }
        Self { rows: out }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Schemes in order of first appearance.
    pub fn schemes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme) {
                out.push(r.scheme.clone());
            }
        }
        out
    }

    /// `(dt, error)` pairs of one scheme at one ε.
    pub fn series(&self, scheme: &str, epsilon: f64) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.epsilon == epsilon)
            .map(|r| (r.dt, r.l2_error))
            .collect()
    }

    pub fn epsilons(&self, scheme: &str) -> Vec<f64> {
        let mut eps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.epsilon)
            .collect();
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        eps
    }
}

/// Runs every `(scheme, ε, Δt)` cell of `cfg`.
///
/// For each ε the layered state at `T0` and the reference at `T` are
/// computed once and shared by all schemes and step sizes; rows come out
/// ordered by scheme (configuration order), ε ascending, Δt descending.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let schemes = cfg
        .unique_schemes()
        .iter()
        .map(|s| tableaux::registry(s))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let epsilons = cfg.epsilons();
    let dts = cfg.dts();
    let span = cfg.t - cfg.t0;
    let (base, _) = relaxsys::builtin(&cfg.model, 1.0)?;
    let u0 = initial_state(&cfg.model, cfg.n)?;
    let fine_dt = dts.iter().copied().fold(f64::INFINITY, f64::min) / FINE_REFERENCE_RATIO;

    let per_eps: Vec<(RelaxationSystem, ModalState, ModalState)> = epsilons
        .par_iter()
        .map(|&epsilon| {
            let sys = base.with_epsilon(epsilon)?;
            let wrap = |source| LabError::Layer { epsilon, source };
            let layered = prepare_layer(&sys, &u0, cfg.t0, cfg.layer).map_err(wrap)?;
            let reference = match cfg.reference {
                ReferenceMode::Exact => stepper::exact_evolve(&sys, &layered, span),
                ReferenceMode::Fine => stepper::fine_step_evolve(&sys, &layered, span, fine_dt),
            }
            .map_err(wrap)?;
            Ok((sys, layered, reference))
        })
        .collect::<Result<_>>()?;

    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for s in 0..schemes.len() {
        for e in 0..epsilons.len() {
            cells.extend(dts.iter().map(|&dt| (s, e, dt)));
        }
    }

    let rows = cells
        .par_iter()
        .map(|&(s, e, dt)| {
            let tableau = &schemes[s];
            let (sys, layered, reference) = &per_eps[e];
            let cell_err = |source| LabError::Cell {
                scheme: tableau.name().to_string(),
                epsilon: epsilons[e],
                dt,
                source,
            };
            let plan = StepPlan::new(sys, tableau, dt).map_err(cell_err)?;
            let steps = plan.steps_for(span).map_err(cell_err)?;
            let end = plan.integrate(layered, span).map_err(cell_err)?;
            let l2_error =
                spectral::modal_error(&end, reference).map_err(|e| cell_err(StepError::from(e)))?;
            if !l2_error.is_finite() {
                return Err(cell_err(StepError::Linalg(
                    crate::densemat::LinalgError::Overflow,
                )));
            }
            Ok(ErrorRow {
                model: cfg.model.clone(),
                scheme: tableau.name().to_string(),
                epsilon: epsilons[e],
                dt,
                l2_error,
                steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorTable::from_rows(rows))
}

/// Max-over-ε error for one scheme and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformRow {
    pub model: String,
    pub scheme: String,
    pub dt: f64,
    pub l2_error: f64,
    /// The ε attaining the maximum.
    pub epsilon: f64,
}

/// For each scheme and Δt, the largest error over ε. Rows follow the
/// scheme order of `table`, then Δt descending.
pub fn uniform_error(table: &ErrorTable) -> Result<Vec<UniformRow>> {
    if table.is_empty() {
        return Err(LabError::EmptyTable);
    }
    let mut out: Vec<UniformRow> = Vec::new();
    for r in &table.rows {
        match out
            .iter_mut()
            .find(|u| u.model == r.model && u.scheme == r.scheme && u.dt == r.dt)
        {
            Some(u) => {
                if r.l2_error > u.l2_error {
                    u.l2_error = r.l2_error;
                    u.epsilon = r.epsilon;
                }
            }
            None => out.push(UniformRow {
                model: r.model.clone(),
                scheme: r.scheme.clone(),
                dt: r.dt,
                l2_error: r.l2_error,
                epsilon: r.epsilon,
            }),
        }
    }
    let schemes = table.schemes();
    out.sort_by(|a, b| {
        let ia = schemes.iter().position(|s| *s == a.scheme);
        let ib = schemes.iter().position(|s| *s == b.scheme);
        ia.cmp(&ib).then(b.dt.total_cmp(&a.dt))
    });
    Ok(out)
}

/// Which errors a fit was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitTarget {
    Epsilon(f64),
    Uniform,
}

impl fmt::Display for FitTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitTarget::Epsilon(e) => write!(f, "{e:.16e}"),
            FitTarget::Uniform => f.write_str("uniform"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub scheme: String,
    pub epsilon: FitTarget,
    pub slope: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
}

/// Least-squares slope of `ln(error)` against `ln(dt)`; returns
/// `(slope, rms residual)`.
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(LabError::DegenerateFit(format!("{} pair(s)", pairs.len())));
    }
    if let Some((dt, e)) = pairs
        .iter()
        .find(|(dt, e)| !(*e > 0.0 && e.is_finite() && *dt > 0.0 && dt.is_finite()))
    {
        return Err(LabError::DegenerateFit(format!(
            "unusable pair (dt = {dt}, error = {e})"
        )));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(LabError::DegenerateFit("all dt equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum();
    Ok((slope, (ss / n).sqrt()))
}

/// Per-ε fits for every scheme followed by its uniform (max-over-ε) fit.
pub fn fit_table(table: &ErrorTable) -> Result<Vec<OrderFit>> {
    let uniform = uniform_error(table)?;
    let mut fits = Vec::new();
    for scheme in table.schemes() {
        for eps in table.epsilons(&scheme) {
            let (slope, residual) = fit_order(&table.series(&scheme, eps))?;
            fits.push(OrderFit {
                scheme: scheme.clone(),
                epsilon: FitTarget::Epsilon(eps),
                slope,
                residual,
            });
        }
        let pairs: Vec<(f64, f64)> = uniform
            .iter()
            .filter(|u| u.scheme == scheme)
            .map(|u| (u.dt, u.l2_error))
            .collect();
        let (slope, residual) = fit_order(&pairs)?;
        fits.push(OrderFit {
            scheme,
            epsilon: FitTarget::Uniform,
            slope,
            residual,
        });
    }
    Ok(fits)
}

pub const TABLE_HEADER: &str = "model,scheme,epsilon,dt,l2_error,steps";
pub const FIT_HEADER: &str = "scheme,epsilon,slope,residual";

pub fn write_table<W: Write>(table: &ErrorTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{}",
            r.model, r.scheme, r.epsilon, r.dt, r.l2_error, r.steps
        )?;
    }
    Ok(())
}

pub fn write_fits<W: Write>(fits: &[OrderFit], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FIT_HEADER}")?;
    for f in fits {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e}",
            f.scheme, f.epsilon, f.slope, f.residual
        )?;
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| io_err(path, e))?;
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn write_table_csv(table: &ErrorTable, path: &Path) -> Result<()> {
    write_file(path, |b| write_table(table, b))
}

pub fn write_fits_csv(fits: &[OrderFit], path: &Path) -> Result<()> {
    write_file(path, |b| write_fits(fits, b))
}

fn data_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(LabError::Parse {
                line: 1,
                msg: format!("expected header `{header}`"),
            })
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

fn field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| LabError::Parse {
        line,
        msg: format!("bad {what} `{s}`"),
    })
}

pub fn read_table(text: &str) -> Result<ErrorTable> {
    let mut rows = Vec::new();
    for (line, f) in data_lines(text, TABLE_HEADER)? {
        if f.len() != 6 {
            return Err(LabError::Parse {
                line,
                msg: format!("expected 6 fields, found {}", f.len()),
            });
        }
        rows.push(ErrorRow {
            model: f[0].to_string(),
            scheme: f[1].to_string(),
            epsilon: field(line, f[2], "epsilon")?,
            dt: field(line, f[3], "dt")?,
            l2_error: field(line, f[4], "l2_error")?,
            steps: field(line, f[5], "steps")?,
        });
    }
    Ok(ErrorTable { rows })
}

pub fn read_fits(text: &str) -> Result<Vec<OrderFit>> {
    let mut fits = Vec::new();
    for (line, f) in data_lines(text, FIT_HEADER)? {
        if f.len() != 4 {
            return Err(LabError::Parse {
                line,
                msg: format!("expected 4 fields, found {}", f.len()),
            });
        }
        let epsilon = if f[1] == "uniform" {
            FitTarget::Uniform
        } else {
            FitTarget::Epsilon(field(line, f[1], "epsilon")?)
        };
        fits.push(OrderFit {
            scheme: f[0].to_string(),
            epsilon,
            slope: field(line, f[2], "slope")?,
            residual: field(line, f[3], "residual")?,
        });
    }
    Ok(fits)
}

/// Single run: layer to `T0`, then `scheme` with step `dt` up to `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: String,
    pub scheme: String,
    pub epsilon: f64,
    pub dt: f64,
    pub n: usize,
    pub t0: f64,
    pub t: f64,
    pub layer: LayerMode,
}

pub fn run(spec: &RunSpec) -> Result<ModalState> {
    if !(spec.t0 >= 0.0 && spec.t > spec.t0) {
        return Err(LabError::Config(format!(
            "need T > T0 >= 0, got T0 = {}, T = {}",
            spec.t0, spec.t
        )));
    }
    let (sys, _) = relaxsys::builtin(&spec.model, spec.epsilon)?;
    let tableau = tableaux::registry(&spec.scheme)?;
    let u0 = initial_state(&spec.model, spec.n)?;
    let layered = prepare_layer(&sys, &u0, spec.t0, spec.layer)?;
    let plan = StepPlan::new(&sys, &tableau, spec.dt)?;
    Ok(plan.integrate(&layered, spec.t - spec.t0)?)
}
