use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chrono_duhamel::duhamel::NonlinearitySpec;
use chrono_duhamel::propagator::{DispersionKind, DispersionRelation, Grid};

/// Problem with the configuration file or its references.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub dispersion: DispersionConfig,
    pub nonlinearity: NonlinearityConfig,
    pub initial: InitialConfig,
    pub times: TimesConfig,
    pub functional: FunctionalConfig,
    pub caps: CapsConfig,
    pub norm: NormConfig,
    pub certify: CertifyConfig,
    pub tolerances: ToleranceConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid: GridConfig::default(),
            dispersion: DispersionConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            initial: InitialConfig::default(),
            times: TimesConfig::default(),
            functional: FunctionalConfig::default(),
            caps: CapsConfig::default(),
            norm: NormConfig::default(),
            certify: CertifyConfig::default(),
            tolerances: ToleranceConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 8,
            length: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub kind: DispersionKind,
    pub mass: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            kind: DispersionKind::KleinGordon,
            mass: 1.0,
        }
    }
}

/// `N(u) = sum_k coefficients[k] u^k`; keys are degrees.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub coefficients: BTreeMap<String, f64>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            coefficients: BTreeMap::from([("3".to_string(), 1.0)]),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `psi = amplitude cos(2 pi x / Lx)`, `chi = 0`.
    Cosine,
    /// Uniform random `psi`, `chi` in `[-amplitude, amplitude]` from the seed.
    Random,
    Zero,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amplitude: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::Cosine,
            amplitude: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TimesConfig {
    pub t1: f64,
    pub t2: f64,
    pub steps: usize,
}

impl Default for TimesConfig {
    fn default() -> Self {
        Self {
            t1: 0.0,
            t2: 0.5,
            steps: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    PointEval,
    LinearWeights,
    TensorFile,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalConfig {
    pub kind: FunctionalKind,
    /// Grid node for `point_eval`.
    pub node: usize,
    /// Evaluation time for `point_eval`.
    pub time: f64,
    /// Chart weights for `linear_weights` (length `2M`).
    pub weights: Vec<f64>,
    /// Text tensor dump for `tensor_file`, relative to the config file.
    pub path: Option<PathBuf>,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            kind: FunctionalKind::PointEval,
            node: 0,
            time: 0.0,
            weights: Vec::new(),
            path: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CapsConfig {
    /// Degree cap `P` of transported functionals.
    pub degree: usize,
    /// Largest tree order `K`.
    pub tree_order: usize,
    /// RK4 substeps of the functional transport per trajectory step.
    pub substeps: usize,
}

impl Default for CapsConfig {
    fn default() -> Self {
        Self {
            degree: 5,
            tree_order: 2,
            substeps: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub s: f64,
    /// Weight mass; defaults to `m` when positive, else 1.
    pub m_ref: Option<f64>,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { s: 1.0, m_ref: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub radius: f64,
    /// Floor of the backward flow for the guaranteed time; defaults to `radius / 2`.
    pub floor: Option<f64>,
    /// Window length; defaults to half the guaranteed time.
    pub span: Option<f64>,
    /// Time horizon over which the vector-field majorant is measured.
    pub horizon: f64,
    /// Majorant coefficients to use instead of the measured ones.
    pub majorant: Option<Vec<f64>>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            radius: 0.2,
            floor: None,
            span: None,
            horizon: 1.0,
            majorant: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Largest acceptable invariance drift.
    pub drift: f64,
    /// Largest acceptable gap between tree and dense transport.
    pub trees: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            drift: 1e-6,
            trees: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Field snapshot every this many steps (0: endpoints only).
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

/// Validated objects built from a [`RunConfig`].
#[derive(Debug)]
pub struct Resolved {
    pub grid: Grid,
    pub disp: DispersionRelation,
    pub nonlin: NonlinearitySpec,
    pub m_ref: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if let Some(p) = &cfg.functional.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.functional.path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    /// Checks every field and builds the numerical objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let bad = |field: &str, msg: String| ConfigError(format!("{field}: {msg}"));
        let grid = Grid::new(self.grid.points, self.grid.length).map_err(|e| bad("grid", e.to_string()))?;
        if !(self.dispersion.mass >= 0.0) {
            return Err(bad("dispersion.mass", format!("must be nonnegative, got {}", self.dispersion.mass)));
        }
        let disp = match self.dispersion.kind {
            DispersionKind::KleinGordon => DispersionRelation::klein_gordon(self.dispersion.mass),
            DispersionKind::Schrodinger => DispersionRelation::schrodinger(),
        };
        let mut terms = Vec::new();
        for (k, c) in &self.nonlinearity.coefficients {
            let k: usize = k
                .parse()
                .map_err(|_| bad("nonlinearity.coefficients", format!("degree '{k}' is not a nonnegative integer")))?;
            terms.push((k, *c));
        }
        let nonlin = NonlinearitySpec::from_terms(terms);
        let m_ref = self.norm.m_ref.unwrap_or_else(|| disp.reference_mass());
        if !(m_ref > 0.0) {
            return Err(bad("norm.m_ref", format!("must be positive, got {m_ref}")));
        }
        if self.times.steps == 0 && self.times.t1 != self.times.t2 {
            return Err(bad("times.steps", "must be positive".into()));
        }
        if self.caps.degree == 0 {
            return Err(bad("caps.degree", "must be positive".into()));
        }
        if !(self.certify.radius > 0.0) {
            return Err(bad("certify.radius", format!("must be positive, got {}", self.certify.radius)));
        }
        if let Some(floor) = self.certify.floor {
            if !(floor > 0.0 && floor < self.certify.radius) {
                return Err(bad("certify.floor", format!("must lie in (0, radius), got {floor}")));
            }
        }
        if let Some(m) = &self.certify.majorant {
            if m.iter().any(|c| !(*c >= 0.0)) {
                return Err(bad("certify.majorant", "coefficients must be nonnegative".into()));
            }
        }
        match self.functional.kind {
            FunctionalKind::PointEval if self.functional.node >= grid.points() => {
                return Err(bad("functional.node", format!("{} is outside the grid", self.functional.node)));
            }
            FunctionalKind::LinearWeights if self.functional.weights.len() != 2 * grid.points() => {
                return Err(bad(
                    "functional.weights",
                    format!("expected {} weights, got {}", 2 * grid.points(), self.functional.weights.len()),
                ));
            }
            FunctionalKind::TensorFile => match &self.functional.path {
                Some(p) if p.is_file() => {}
                Some(p) => return Err(bad("functional.path", format!("{} does not exist", p.display()))),
                None => return Err(bad("functional.path", "required for tensor_file".into())),
            },
            _ => {}
        }
        Ok(Resolved {
            grid,
            disp,
            nonlin,
            m_ref,
        })
    }

    /// The resolved configuration as `#`-prefixed TOML lines.
    pub fn header_comment(&self) -> String {
        let body = toml::to_string(self).expect("configuration serializes");
        let mut out = String::from("# resolved configuration\n");
        for line in body.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.resolve().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<RunConfig>("[grid]\npoints = 8\nsize = 3\n").unwrap_err();
        assert!(err.to_string().contains("size"));
    }

    #[test]
    fn invalid_values_name_the_field() {
        let mut cfg = RunConfig::default();
        cfg.grid.points = 6;
        assert!(cfg.resolve().unwrap_err().0.starts_with("grid"));
        let mut cfg = RunConfig::default();
        cfg.nonlinearity.coefficients.insert("x".into(), 1.0);
        assert!(cfg.resolve().unwrap_err().0.starts_with("nonlinearity"));
    }
}
