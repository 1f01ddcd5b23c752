//! Run configuration: defaults, TOML files and `key=value` overrides.
//!
//! Precedence is command-line override > file value > built-in default.
//! Quantities with a logarithmic alias (`tx_power` / `tx_power_dbm`, ...)
//! may be given in either form, but not both in the same source.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use faulty_ris_core::faulty::FaultPattern;
use faulty_ris_core::linalg::{db_to_linear, dbm_to_watts};
use faulty_ris_core::metrics::Method;
use faulty_ris_core::scenario::{friis_reference_loss, GammaRule, ScenarioConfig};
use faulty_ris_core::trial::NaiveSolver;
use faulty_ris_core::Point3;
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("`{0}` and `{1}` set the same quantity")]
    Conflict(String, String),
    #[error(transparent)]
    Invalid(#[from] faulty_ris_core::Error),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// How per-trial linear values are collapsed into one dB figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    /// `10 log10(mean(x))`.
    DbOfMean,
    /// `mean(10 log10(x))`.
    MeanOfDb,
}

impl Aggregate {
    pub fn name(self) -> &'static str {
        match self {
            Aggregate::DbOfMean => "db_of_mean",
            Aggregate::MeanOfDb => "mean_of_db",
        }
    }
}

/// Experiment-level options that are not part of the physical scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub naive_solver: NaiveSolver,
    pub aggregate: Aggregate,
    /// Largest tolerated fraction of failed trials per (case, method) before exit code 3.
    pub max_failure_rate: f64,
    pub fault_counts: Vec<usize>,
    pub methods: Vec<Method>,
    pub pattern: FaultPattern,
    /// Fault fraction used by the pattern study.
    pub study_fraction: f64,
    pub grid: (usize, usize),
    pub heatmap_faulty: usize,
    pub heatmap_trial: u64,
    /// Independent channel draws averaged per heatmap cell.
    pub heatmap_average: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            naive_solver: NaiveSolver::Sdr,
            aggregate: Aggregate::DbOfMean,
            max_failure_rate: 0.1,
            fault_counts: vec![0, 5, 10, 15, 20, 25],
            methods: Method::ALL.to_vec(),
            pattern: FaultPattern::Uniform,
            study_fraction: 0.25,
            grid: (60, 60),
            heatmap_faulty: 10,
            heatmap_trial: 0,
            heatmap_average: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub run: RunOptions,
    /// Canonical keys set by any applied source so far.
    explicit: BTreeSet<String>,
}

impl PartialEq for SimConfig {
    fn eq(&self, other: &Self) -> bool {
        self.scenario == other.scenario && self.run == other.run
    }
}

/// Keys that set the same quantity.
const ALIASES: &[(&str, &str)] = &[
    ("tx_power", "tx_power_dbm"),
    ("noise_power", "noise_power_dbm"),
    ("rician_factor", "rician_factor_db"),
    ("ref_loss", "ref_loss_db"),
    ("M", "ap_antennas"),
];

fn canonical(key: &str) -> &str {
    ALIASES.iter().find(|(_, alias)| *alias == key).map(|(c, _)| *c).unwrap_or(key)
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => s.trim().parse().map_err(|_| bad(key, format!("`{s}` is not a number"))),
        _ => Err(bad(key, "expected a number")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 && *f < 9.0e15 => Ok(*f as u64),
        Value::String(s) => s.trim().parse().map_err(|_| bad(key, format!("`{s}` is not a non-negative integer"))),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    as_u64(key, v).map(|x| x as usize)
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    match v {
        Value::Boolean(b) => Ok(*b),
        Value::String(s) => match s.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(bad(key, format!("`{s}` is not a boolean"))),
        },
        _ => Err(bad(key, "expected a boolean")),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

/// Array of values, or a comma/`x`-separated string.
fn as_list(key: &str, v: &Value) -> Result<Vec<Value>> {
    match v {
        Value::Array(a) => Ok(a.clone()),
        Value::String(s) => Ok(s
            .split([',', 'x'])
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| Value::String(p.to_string()))
            .collect()),
        Value::Integer(_) | Value::Float(_) => Ok(vec![v.clone()]),
        _ => Err(bad(key, "expected a list")),
    }
}

fn as_point(key: &str, v: &Value) -> Result<Point3> {
    let items = as_list(key, v)?;
    if items.len() != 3 {
        return Err(bad(key, format!("expected 3 coordinates, got {}", items.len())));
    }
    Ok(Point3::new(as_f64(key, &items[0])?, as_f64(key, &items[1])?, as_f64(key, &items[2])?))
}

impl SimConfig {
    /// Defaults overlaid with a TOML file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_toml(&text)?;
        Ok(cfg)
    }

    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        self.apply_table(&table)
    }

    /// Applies one flat table. Aliased keys may not both appear.
    pub fn apply_table(&mut self, table: &Table) -> Result<()> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for key in table.keys() {
            let c = canonical(key);
            if !seen.insert(c) {
                let other = table.keys().find(|k| *k != key && canonical(k) == c).unwrap();
                return Err(ConfigError::Conflict(other.clone(), key.clone()));
            }
        }
        for (key, value) in table {
            self.set(key, value)?;
            self.explicit.insert(canonical(key).to_string());
        }
        if table.contains_key("wavelength") {
            self.derive_defaults();
        }
        Ok(())
    }

    /// Applies `key=value`. The value is read as a TOML literal when possible,
    /// otherwise as a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        let mut table = Table::new();
        table.insert(key.to_string(), value);
        self.apply_table(&table)
    }

    /// Spacing and reference loss follow the wavelength unless set explicitly.
    fn derive_defaults(&mut self) {
        if !self.explicit.contains("spacing") {
            self.scenario.element_spacing = self.scenario.wavelength / 2.0;
        }
        if !self.explicit.contains("ref_loss") {
            self.scenario.ref_loss = friis_reference_loss(self.scenario.wavelength);
        }
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let s = &mut self.scenario;
        let r = &mut self.run;
        match key {
            "p_ap" => s.ap_position = as_point(key, v)?,
            "p_ris" => s.ris_position = as_point(key, v)?,
            "p_ue" => s.ue_position = as_point(key, v)?,
            "M" | "ap_antennas" => s.ap_antennas = as_usize(key, v)?,
            "Nx" => s.ris_nx = as_usize(key, v)?,
            "Ny" => s.ris_ny = as_usize(key, v)?,
            "wavelength" => s.wavelength = as_f64(key, v)?,
            "spacing" => s.element_spacing = as_f64(key, v)?,
            "tx_power" => s.tx_power = as_f64(key, v)?,
            "tx_power_dbm" => s.tx_power = dbm_to_watts(as_f64(key, v)?),
            "noise_power" => s.noise_power = as_f64(key, v)?,
            "noise_power_dbm" => s.noise_power = dbm_to_watts(as_f64(key, v)?),
            "rician_factor" => s.rician_factor = as_f64(key, v)?,
            "rician_factor_db" => s.rician_factor = db_to_linear(as_f64(key, v)?),
            "scatter_paths" => s.scatter_paths = as_usize(key, v)?,
            "eta_i" => s.eta_ap_ris = as_f64(key, v)?,
            "eta_r" => s.eta_ris_ue = as_f64(key, v)?,
            "ref_loss" => s.ref_loss = as_f64(key, v)?,
            "ref_loss_db" => s.ref_loss = db_to_linear(as_f64(key, v)?),
            "area_x" => s.area_x = as_f64(key, v)?,
            "area_y" => s.area_y = as_f64(key, v)?,
            "test_points" => s.test_points = as_usize(key, v)?,
            "gamma_divisor" => s.gamma_divisor = as_f64(key, v)?,
            "gamma_rule" => {
                s.gamma_rule = match as_str(key, v)? {
                    "per_trial" => GammaRule::PerTrial,
                    "fixed" => GammaRule::Fixed(match s.gamma_rule {
                        GammaRule::Fixed(x) => x,
                        GammaRule::PerTrial => 1.0,
                    }),
                    other => return Err(bad(key, format!("`{other}` is not per_trial or fixed"))),
                }
            }
            "gamma_snr" => s.gamma_rule = GammaRule::Fixed(as_f64(key, v)?),
            "exclusion_radius" => s.exclusion_radius = as_f64(key, v)?,
            "trials" => s.trials = as_usize(key, v)?,
            "seed" => s.seed = as_u64(key, v)?,
            "randomization_samples" => s.randomization_samples = as_usize(key, v)?,
            "bisection_tol" => s.bisection_tol = as_f64(key, v)?,
            "gamma_slack" => s.gamma_slack = as_f64(key, v)?,
            "pad_structured_faults" => s.pad_structured_faults = as_bool(key, v)?,
            "solver_gap_tol" => s.solver.gap = as_f64(key, v)?,
            "solver_psd_tol" => s.solver.psd = as_f64(key, v)?,
            "solver_eq_tol" => s.solver.eq = as_f64(key, v)?,
            "solver_max_iter" => s.solver.max_iter = as_usize(key, v)?,
            "naive_solver" => {
                let name = as_str(key, v)?;
                r.naive_solver = NaiveSolver::parse(name).ok_or_else(|| bad(key, format!("`{name}` is not sdr or analytic")))?;
            }
            "aggregate" => {
                r.aggregate = match as_str(key, v)? {
                    "db_of_mean" => Aggregate::DbOfMean,
                    "mean_of_db" => Aggregate::MeanOfDb,
                    other => return Err(bad(key, format!("`{other}` is not db_of_mean or mean_of_db"))),
                }
            }
            "max_failure_rate" => r.max_failure_rate = as_f64(key, v)?,
            "fault_counts" => {
                r.fault_counts = as_list(key, v)?.iter().map(|x| as_usize(key, x)).collect::<Result<_>>()?;
            }
            "methods" => r.methods = parse_methods(key, v)?,
            "pattern" => {
                let name = as_str(key, v)?;
                r.pattern = FaultPattern::parse(name).ok_or_else(|| bad(key, format!("unknown pattern `{name}`")))?;
            }
            "study_fraction" => r.study_fraction = as_f64(key, v)?,
            "grid" => {
                let items = as_list(key, v)?;
                r.grid = match items.as_slice() {
                    [a] => (as_usize(key, a)?, as_usize(key, a)?),
                    [a, b] => (as_usize(key, a)?, as_usize(key, b)?),
                    _ => return Err(bad(key, "expected NX or NXxNY")),
                };
            }
            "heatmap_faulty" => r.heatmap_faulty = as_usize(key, v)?,
            "heatmap_trial" => r.heatmap_trial = as_u64(key, v)?,
            "heatmap_average" => r.heatmap_average = as_usize(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks the scenario and the run options.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let r = &self.run;
        let n = self.scenario.ris_elements();
        if let Some(b) = r.fault_counts.iter().find(|&&b| b > n) {
            return Err(bad("fault_counts", format!("{b} exceeds N = {n}")));
        }
        if r.fault_counts.is_empty() {
            return Err(bad("fault_counts", "empty"));
        }
        if r.methods.is_empty() {
            return Err(bad("methods", "empty"));
        }
        if !(0.0..=1.0).contains(&r.study_fraction) {
            return Err(bad("study_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&r.max_failure_rate) {
            return Err(bad("max_failure_rate", "must lie in [0, 1]"));
        }
        if r.grid.0 == 0 || r.grid.1 == 0 {
            return Err(bad("grid", "dimensions must be >= 1"));
        }
        if r.heatmap_faulty > n {
            return Err(bad("heatmap_faulty", format!("exceeds N = {n}")));
        }
        if r.heatmap_average == 0 {
            return Err(bad("heatmap_average", "must be >= 1"));
        }
        Ok(())
    }

    /// Fault count of the pattern study, rounded to the nearest element.
    pub fn study_count(&self) -> usize {
        (self.run.study_fraction * self.scenario.ris_elements() as f64).round() as usize
    }

    /// Every key in canonical linear units, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let s = &self.scenario;
        let r = &self.run;
        let point = |p: &Point3| Value::Array(p.iter().map(|c| Value::Float(*c)).collect());
        let int = |x: usize| Value::Integer(x as i64);
        let float = Value::Float;
        let string = |x: &str| Value::String(x.to_string());
        let mut out = vec![
            ("p_ap", point(&s.ap_position)),
            ("p_ris", point(&s.ris_position)),
            ("p_ue", point(&s.ue_position)),
            ("M", int(s.ap_antennas)),
            ("Nx", int(s.ris_nx)),
            ("Ny", int(s.ris_ny)),
            ("wavelength", float(s.wavelength)),
            ("spacing", float(s.element_spacing)),
            ("tx_power", float(s.tx_power)),
            ("noise_power", float(s.noise_power)),
            ("rician_factor", float(s.rician_factor)),
            ("scatter_paths", int(s.scatter_paths)),
            ("eta_i", float(s.eta_ap_ris)),
            ("eta_r", float(s.eta_ris_ue)),
            ("ref_loss", float(s.ref_loss)),
            ("area_x", float(s.area_x)),
            ("area_y", float(s.area_y)),
            ("test_points", int(s.test_points)),
            ("gamma_divisor", float(s.gamma_divisor)),
        ];
        match s.gamma_rule {
            GammaRule::PerTrial => out.push(("gamma_rule", string("per_trial"))),
            GammaRule::Fixed(x) => {
                out.push(("gamma_rule", string("fixed")));
                out.push(("gamma_snr", float(x)));
            }
        }
        out.extend([
            ("exclusion_radius", float(s.exclusion_radius)),
            ("trials", int(s.trials)),
            ("seed", Value::Integer(s.seed as i64)),
            ("randomization_samples", int(s.randomization_samples)),
            ("bisection_tol", float(s.bisection_tol)),
            ("gamma_slack", float(s.gamma_slack)),
            ("pad_structured_faults", Value::Boolean(s.pad_structured_faults)),
            ("solver_gap_tol", float(s.solver.gap)),
            ("solver_psd_tol", float(s.solver.psd)),
            ("solver_eq_tol", float(s.solver.eq)),
            ("solver_max_iter", int(s.solver.max_iter)),
            ("naive_solver", string(r.naive_solver.name())),
            ("aggregate", string(r.aggregate.name())),
            ("max_failure_rate", float(r.max_failure_rate)),
            ("fault_counts", Value::Array(r.fault_counts.iter().map(|&b| int(b)).collect())),
            ("methods", Value::Array(r.methods.iter().map(|m| string(m.name())).collect())),
            ("pattern", string(r.pattern.name())),
            ("study_fraction", float(r.study_fraction)),
            ("grid", string(&format!("{}x{}", r.grid.0, r.grid.1))),
            ("heatmap_faulty", int(r.heatmap_faulty)),
            ("heatmap_trial", Value::Integer(r.heatmap_trial as i64)),
            ("heatmap_average", int(r.heatmap_average)),
        ]);
        out
    }

    /// Resolved configuration as TOML; loading it reproduces `self` exactly.
    pub fn to_toml(&self) -> String {
        let mut text = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(text, "{key} = {value}");
        }
        text
    }
}

fn parse_methods(key: &str, v: &Value) -> Result<Vec<Method>> {
    let items = match v {
        Value::String(s) if s == "all" => return Ok(Method::ALL.to_vec()),
        Value::String(s) => s.split(',').map(|p| Value::String(p.trim().to_string())).collect(),
        _ => as_list(key, v)?,
    };
    items
        .iter()
        .map(|x| {
            let name = as_str(key, x)?;
            Method::parse(name).ok_or_else(|| bad(key, format!("unknown method `{name}`")))
        })
        .collect()
}
