//! Run configuration (TOML).
//!
//! ```toml
//! scenario = "theorem"          # theorem | corollary | regularization | custom
//! T = 1.0
//! dt = 1e-3
//! seed = 42
//!
//! [params]
//! a = 0.0
//! b = 1.0
//! c = 1.0
//!
//! [grid]
//! nx = 64
//! ny = 64
//!
//! [initial.q]
//! kind = "random-fourier"
//! fit = { kind = "interval", margin = 0.05 }
//! ```
//!
//! Parsing reports every problem at once, each prefixed with its key path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::bulk::{self, MaterialParams};
use crate::error::{Error, Result};
use crate::experiments::initial::{Fit, QInit, UInit};
use crate::fields::{BackendKind, Boundary, Grid2D};
use crate::solver::Scheme;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "NEMLAB_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "nemlab-out";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Theorem,
    Corollary,
    Regularization,
    #[default]
    Custom,
}

impl Scenario {
    /// Scenarios that rely on the eigenvalue-preservation regime `0 <= a <= b^2/24c`.
    pub fn needs_theorem_regime(self) -> bool {
        !matches!(self, Scenario::Custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub ny: usize,
    #[serde(default = "default_len")]
    pub lx: f64,
    #[serde(default = "default_len")]
    pub ly: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_n() -> usize {
    64
}
fn default_len() -> f64 {
    std::f64::consts::TAU
}
fn default_boundary() -> Boundary {
    Boundary::Periodic
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: default_n(),
            ny: default_n(),
            lx: default_len(),
            ly: default_len(),
            boundary: default_boundary(),
        }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.lx, self.ly, self.boundary)
    }

    /// Same box with the node count scaled by `num / den` per axis.
    pub fn rescaled(&self, num: usize, den: usize) -> GridSpec {
        GridSpec {
            nx: self.nx * num / den,
            ny: self.ny * num / den,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default = "default_q0")]
    pub q: QInit,
    #[serde(default = "default_u0")]
    pub u: UInit,
}

fn default_q0() -> QInit {
    QInit::RandomFourier {
        max_mode: 3,
        amplitude: 1.0,
        fit: Fit::Interval { margin: 0.05 },
    }
}
fn default_u0() -> UInit {
    UInit::Zero
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            q: default_q0(),
            u: default_u0(),
        }
    }
}

/// Wall data for Dirichlet grids; ignored on periodic grids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// Walls keep the initial values.
    #[default]
    FromInitial,
    /// Walls (and the initial field there) hold one uniaxial tensor.
    Uniaxial { s: f64, director: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSpec {
    /// Mollification scales, strictly decreasing.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05, 0.025]
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        RegularizationSpec {
            deltas: default_deltas(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Scenario,
    pub params: MaterialParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Final time.
    #[serde(rename = "T", default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_monitor_interval")]
    pub monitor_interval: f64,
    /// Halve `dt` on stability violations instead of failing.
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<RegularizationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    1.0
}
fn default_safety() -> f64 {
    0.5
}
fn default_monitor_interval() -> f64 {
    0.05
}

// Key schema used to name every unknown key, not just the first one.
const TOP_KEYS: &[&str] = &[
    "scenario",
    "params",
    "grid",
    "backend",
    "scheme",
    "dt",
    "T",
    "safety",
    "monitor_interval",
    "adaptive",
    "seed",
    "initial",
    "boundary",
    "regularization",
    "output_dir",
];
const PARAM_KEYS: &[&str] = &["l", "a", "b", "c", "nu", "lambda", "gamma"];
const GRID_KEYS: &[&str] = &["nx", "ny", "lx", "ly", "boundary"];
const INITIAL_KEYS: &[&str] = &["q", "u"];
const Q_KEYS: &[&str] = &["kind", "s", "director", "max_mode", "amplitude", "fit"];
const FIT_KEYS: &[&str] = &["kind", "margin", "value"];
const U_KEYS: &[&str] = &["kind", "max_mode", "amplitude"];
const BOUNDARY_KEYS: &[&str] = &["kind", "s", "director"];
const REG_KEYS: &[&str] = &["deltas"];

fn unknown_keys(table: &Table, known: &[&str], path: &str, out: &mut Vec<String>) {
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            let full = if path.is_empty() {
                key.clone()
            } else {
                format!("{path}.{key}")
            };
            out.push(format!("{full}: unknown key"));
        }
    }
}

fn sub<'a>(table: &'a Table, key: &str) -> Option<&'a Table> {
    table.get(key).and_then(Value::as_table)
}

fn collect_unknown(root: &Table) -> Vec<String> {
    let mut out = Vec::new();
    unknown_keys(root, TOP_KEYS, "", &mut out);
    let nested: [(&str, &[&str]); 4] = [
        ("params", PARAM_KEYS),
        ("grid", GRID_KEYS),
        ("boundary", BOUNDARY_KEYS),
        ("regularization", REG_KEYS),
    ];
    for (key, known) in nested {
        if let Some(t) = sub(root, key) {
            unknown_keys(t, known, key, &mut out);
        }
    }
    if let Some(init) = sub(root, "initial") {
        unknown_keys(init, INITIAL_KEYS, "initial", &mut out);
        if let Some(q) = sub(init, "q") {
            unknown_keys(q, Q_KEYS, "initial.q", &mut out);
            if let Some(f) = sub(q, "fit") {
                unknown_keys(f, FIT_KEYS, "initial.q.fit", &mut out);
            }
        }
        if let Some(u) = sub(init, "u") {
            unknown_keys(u, U_KEYS, "initial.u", &mut out);
        }
    }
    out
}

fn positive(v: &mut Vec<String>, key: &str, x: f64) {
    if !(x > 0.0) || !x.is_finite() {
        v.push(format!("{key}: must be > 0 (got {x})"));
    }
}

impl RunConfig {
    /// Default configuration for a scenario, mainly for documentation and tests.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut cfg = RunConfig {
            scenario,
            params: MaterialParams::default(),
            grid: GridSpec::default(),
            backend: BackendKind::Spectral,
            scheme: Scheme::ImexEuler,
            dt: default_dt(),
            t_end: default_t_end(),
            safety: default_safety(),
            monitor_interval: default_monitor_interval(),
            adaptive: false,
            seed: 0,
            initial: InitialSpec::default(),
            boundary: BoundarySpec::FromInitial,
            regularization: None,
            output_dir: None,
        };
        match scenario {
            Scenario::Corollary => {
                cfg.initial.q = QInit::RandomFourier {
                    max_mode: 3,
                    amplitude: 1.0,
                    fit: Fit::L1Max { value: 0.5 },
                }
            }
            Scenario::Regularization => {
                cfg.initial.u = UInit::TaylorGreen { amplitude: 1.0 };
                cfg.regularization = Some(RegularizationSpec::default());
            }
            _ => {}
        }
        cfg
    }

    /// Every semantic violation, each prefixed with its key path.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let regime = self.scenario.needs_theorem_regime();
        v.extend(
            bulk::validate(&self.params, regime)
                .into_iter()
                .map(|m| format!("params: {m}")),
        );
        if let Err(e) = self.grid.grid() {
            v.push(format!("grid: {}", e.to_string().trim_start_matches("domain error: ")));
        }
        if self.backend == BackendKind::Spectral && self.grid.boundary == Boundary::Dirichlet {
            v.push("backend: spectral backend requires grid.boundary = \"periodic\"".into());
        }
        positive(&mut v, "dt", self.dt);
        positive(&mut v, "safety", self.safety);
        // the config format stores signed 64-bit integers
        if self.seed > i64::MAX as u64 {
            v.push(format!("seed: must be <= {} (got {})", i64::MAX, self.seed));
        }
        positive(&mut v, "monitor_interval", self.monitor_interval);
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            v.push(format!("T: must be >= 0 (got {})", self.t_end));
        }
        match &self.initial.q {
            QInit::RandomFourier { amplitude, fit, .. } => {
                positive(&mut v, "initial.q.amplitude", *amplitude);
                match fit {
                    Fit::Interval { margin } if !(*margin >= 0.0 && *margin < 0.5) => {
                        v.push(format!("initial.q.fit.margin: must be in [0, 0.5) (got {margin})"))
                    }
                    Fit::L1Max { value } => positive(&mut v, "initial.q.fit.value", *value),
                    _ => {}
                }
            }
            QInit::Uniaxial { director, .. } if director.iter().all(|d| *d == 0.0) => {
                v.push("initial.q.director: must be nonzero".into())
            }
            _ => {}
        }
        if let BoundarySpec::Uniaxial { director, .. } = &self.boundary {
            if director.iter().all(|d| *d == 0.0) {
                v.push("boundary.director: must be nonzero".into());
            }
        }
        let fit = match &self.initial.q {
            QInit::RandomFourier { fit, .. } => Some(*fit),
            _ => None,
        };
        match self.scenario {
            Scenario::Theorem | Scenario::Corollary => {
                if !self.grid.nx.is_multiple_of(4) || !self.grid.ny.is_multiple_of(4) || self.grid.nx < 16 || self.grid.ny < 16 {
                    v.push(format!(
                        "grid: refinement calibration needs nx, ny >= 16 and divisible by 4 (got {}x{})",
                        self.grid.nx, self.grid.ny
                    ));
                }
                if self.scenario == Scenario::Theorem && !matches!(fit, Some(Fit::Interval { .. })) {
                    v.push("initial.q: theorem scenario requires kind = \"random-fourier\" with fit.kind = \"interval\"".into());
                }
                if self.scenario == Scenario::Corollary {
                    match (fit, self.params.eigen_interval()) {
                        (Some(Fit::L1Max { value }), Ok(iv)) if value <= iv.hi => v.push(format!(
                            "initial.q.fit.value: corollary scenario needs a value above hi = {} (got {value})",
                            iv.hi
                        )),
                        (Some(Fit::L1Max { .. }), _) => {}
                        _ => v.push("initial.q: corollary scenario requires kind = \"random-fourier\" with fit.kind = \"l1-max\"".into()),
                    }
                }
            }
            Scenario::Regularization => match &self.regularization {
                None => v.push("regularization: section required for scenario = \"regularization\"".into()),
                Some(r) => {
                    if r.deltas.is_empty() {
                        v.push("regularization.deltas: must not be empty".into());
                    }
                    if r.deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                        v.push("regularization.deltas: every delta must be > 0".into());
                    }
                    if r.deltas.windows(2).any(|w| w[1] >= w[0]) {
                        v.push("regularization.deltas: must be strictly decreasing".into());
                    }
                }
            },
            Scenario::Custom => {}
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Output directory: the configured one, else the environment default,
    /// else `nemlab-out`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }
}

/// Parses and fully validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Table = toml::from_str(text).map_err(|e| Error::Config(vec![format!("syntax: {e}")]))?;
    let unknown = collect_unknown(&root);
    if !unknown.is_empty() {
        return Err(Error::Config(unknown));
    }
    let cfg: RunConfig = Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(vec![e.message().trim().to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[params]\na = 0.0\nb = 1.0\nc = 1.0\n";

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_documented_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.safety, 0.5);
        assert_eq!(cfg.backend, BackendKind::Spectral);
        assert_eq!(cfg.scenario, Scenario::Custom);
        assert_eq!(cfg.grid.nx, 64);
    }

    #[test]
    fn negative_c_is_reported() {
        let e = errors("[params]\na = 0.0\nb = 1.0\nc = -1\n");
        assert!(e.iter().any(|m| m.contains("c > 0 violated")), "{e:?}");
    }

    #[test]
    fn unknown_keys_are_all_named_with_paths() {
        let e = errors(&format!("foo = 1\n{MINIMAL}bar = 2\n[grid]\nnz = 4\n"));
        for key in ["foo", "params.bar", "grid.nz"] {
            assert!(e.iter().any(|m| m.starts_with(key)), "{key} missing in {e:?}");
        }
    }

    #[test]
    fn all_violations_are_listed_together() {
        let e = errors("dt = -1\nsafety = 0\n[params]\na = 0.0\nb = -1.0\nc = 1.0\n[grid]\nnx = 7\n");
        assert!(e.len() >= 4, "{e:?}");
        assert!(e.iter().any(|m| m.starts_with("dt:")));
        assert!(e.iter().any(|m| m.starts_with("grid:")));
    }

    #[test]
    fn theorem_regime_is_enforced_per_scenario() {
        let text = "scenario = \"theorem\"\n[params]\na = 1.0\nb = 1.0\nc = 1.0\n";
        assert!(errors(text).iter().any(|m| m.contains("a <= b^2/24c violated")));
        let custom = "[params]\na = 1.0\nb = 1.0\nc = 1.0\n";
        assert!(parse_config(custom).is_ok());
    }

    #[test]
    fn scenario_defaults_validate_and_round_trip() {
        for s in [
            Scenario::Theorem,
            Scenario::Corollary,
            Scenario::Regularization,
            Scenario::Custom,
        ] {
            let cfg = RunConfig::for_scenario(s);
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(parse_config(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn regularization_needs_its_section() {
        let text = "scenario = \"regularization\"\n[params]\na = 0.0\nb = 1.0\nc = 1.0\n";
        assert!(errors(text).iter().any(|m| m.starts_with("regularization")));
    }
}
