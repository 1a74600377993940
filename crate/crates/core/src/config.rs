//! Run configuration: a flat document of dotted `key = value` lines.
//!
//! ```text
//! # defaults reproduce the reference setup
//! domain.a = 0
//! domain.b = 100
//! grid.dx = 0.01
//! time.dt = 0.2
//! time.T = 10
//! time.snapshots = [2, 6, 10]
//! scheme.theta = 1
//! potential.kind = "Dirac"        # Zero | Dirac | DiracSquared | Bounded
//! potential.x0 = 40
//! potential.strength = 1
//! potential.sign = 1              # +1 or -1
//! mollifier.moments = 1
//! omega.schedule = "Linear"       # Linear | Logarithmic; default depends on sign
//! omega.N0 = 1
//! epsilon = 0.2                   # or a list: [0.8, 0.5, 0.2]
//! u0.center = 50
//! output.dir = "out"
//! ```
//!
//! Values use TOML syntax (strings quoted). A `Bounded` potential is the
//! Gaussian `strength * exp(-(x - x0)^2)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::kernel::{MollifierKernel, MAX_DERIVATIVE_ORDER};
use crate::potential::{OmegaSchedule, PotentialKind, PotentialSpec, Sign};
use crate::solver::{sample_initial_bump, SchemeConfig, SpaceTimeGrid, SpatialGrid};
use crate::{Error, Result};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "VWH_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScheduleName {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EpsilonSetting {
    Single(f64),
    List(Vec<f64>),
}

impl EpsilonSetting {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsilonSetting::Single(e) => vec![*e],
            EpsilonSetting::List(v) => v.clone(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, EpsilonSetting::List(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSettings {
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub x0: f64,
    pub strength: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifierConfig {
    /// `n` of the moment class; 0 and 1 both select the plain bump.
    pub moments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaConfig {
    /// `None` selects Linear for `sign = +1` and Logarithmic for `sign = -1`.
    pub schedule: Option<ScheduleName>,
    #[serde(rename = "N0")]
    pub n0: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialConfig {
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub scheme: SchemeSettings,
    pub potential: PotentialConfig,
    pub mollifier: MollifierConfig,
    pub omega: OmegaConfig,
    pub epsilon: EpsilonSetting,
    pub u0: InitialConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig { a: 0.0, b: 100.0 },
            grid: GridConfig { dx: 0.01 },
            time: TimeConfig {
                dt: 0.2,
                t_final: 10.0,
                snapshots: vec![2.0, 6.0, 10.0],
            },
            scheme: SchemeSettings { theta: 1.0 },
            potential: PotentialConfig {
                kind: PotentialKind::Dirac,
                x0: 40.0,
                strength: 1.0,
                sign: Sign::Positive,
            },
            mollifier: MollifierConfig { moments: 1 },
            omega: OmegaConfig {
                schedule: None,
                n0: 1,
            },
            epsilon: EpsilonSetting::Single(0.2),
            u0: InitialConfig { center: 50.0 },
            output: OutputConfig { dir: PathBuf::from("out") },
        }
    }
}

const KEYS: &[&str] = &[
    "domain.a",
    "domain.b",
    "grid.dx",
    "time.dt",
    "time.T",
    "time.snapshots",
    "scheme.theta",
    "potential.kind",
    "potential.x0",
    "potential.strength",
    "potential.sign",
    "mollifier.moments",
    "omega.schedule",
    "omega.N0",
    "epsilon",
    "u0.center",
    "output.dir",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn value_err(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn as_number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(f) => Ok(*f),
        other => Err(value_err(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn as_integer(key: &str, v: &toml::Value) -> Result<i64> {
    match v {
        toml::Value::Integer(i) => Ok(*i),
        other => Err(value_err(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| value_err(key, format!("expected a string, got {}", v.type_str())))
}

fn as_number_list(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|i| as_number(key, i)).collect(),
        other => Err(value_err(key, format!("expected a list, got {}", other.type_str()))),
    }
}

/// Parses and validates a configuration document; missing keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string().trim_end().to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);

    let mut cfg = RunConfig::default();
    for (key, v) in &flat {
        let k = key.as_str();
        match k {
            "domain.a" => cfg.domain.a = as_number(k, v)?,
            "domain.b" => cfg.domain.b = as_number(k, v)?,
            "grid.dx" => cfg.grid.dx = as_number(k, v)?,
            "time.dt" => cfg.time.dt = as_number(k, v)?,
            "time.T" => cfg.time.t_final = as_number(k, v)?,
            "time.snapshots" => cfg.time.snapshots = as_number_list(k, v)?,
            "scheme.theta" => cfg.scheme.theta = as_number(k, v)?,
            "potential.kind" => {
                let s = as_str(k, v)?;
                cfg.potential.kind = PotentialKind::parse(s)
                    .ok_or_else(|| value_err(k, format!("unknown potential kind `{s}`")))?;
            }
            "potential.x0" => cfg.potential.x0 = as_number(k, v)?,
            "potential.strength" => cfg.potential.strength = as_number(k, v)?,
            "potential.sign" => {
                let s = as_integer(k, v)?;
                cfg.potential.sign =
                    Sign::from_int(s).ok_or_else(|| value_err(k, "sign must be +1 or -1"))?;
            }
            "mollifier.moments" => {
                let n = as_integer(k, v)?;
                cfg.mollifier.moments =
                    usize::try_from(n).map_err(|_| value_err(k, "must be >= 0"))?;
            }
            "omega.schedule" => {
                cfg.omega.schedule = Some(match as_str(k, v)? {
                    "Linear" => ScheduleName::Linear,
                    "Logarithmic" => ScheduleName::Logarithmic,
                    s => return Err(value_err(k, format!("unknown schedule `{s}`"))),
                })
            }
            "omega.N0" => {
                let n = as_integer(k, v)?;
                cfg.omega.n0 = u32::try_from(n).map_err(|_| value_err(k, "must be >= 1"))?;
            }
            "epsilon" => {
                cfg.epsilon = match v {
                    toml::Value::Array(_) => EpsilonSetting::List(as_number_list(k, v)?),
                    _ => EpsilonSetting::Single(as_number(k, v)?),
                }
            }
            "u0.center" => cfg.u0.center = as_number(k, v)?,
            "output.dir" => cfg.output.dir = PathBuf::from(as_str(k, v)?),
            _ => return Err(Error::UnknownKey(key.clone())),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl RunConfig {
    /// Renders the configuration as a flat document accepted by [`parse_config`].
    pub fn to_document(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            let items: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
            format!("[{}]", items.join(", "))
        };
        let _ = writeln!(s, "domain.a = {}", fmt_f64(self.domain.a));
        let _ = writeln!(s, "domain.b = {}", fmt_f64(self.domain.b));
        let _ = writeln!(s, "grid.dx = {}", fmt_f64(self.grid.dx));
        let _ = writeln!(s, "time.dt = {}", fmt_f64(self.time.dt));
        let _ = writeln!(s, "time.T = {}", fmt_f64(self.time.t_final));
        let _ = writeln!(s, "time.snapshots = {}", list(&self.time.snapshots));
        let _ = writeln!(s, "scheme.theta = {}", fmt_f64(self.scheme.theta));
        let _ = writeln!(s, "potential.kind = \"{}\"", self.potential.kind.name());
        let _ = writeln!(s, "potential.x0 = {}", fmt_f64(self.potential.x0));
        let _ = writeln!(s, "potential.strength = {}", fmt_f64(self.potential.strength));
        let _ = writeln!(s, "potential.sign = {}", self.potential.sign.as_int());
        let _ = writeln!(s, "mollifier.moments = {}", self.mollifier.moments);
        if let Some(name) = self.omega.schedule {
            let _ = writeln!(s, "omega.schedule = \"{name:?}\"");
        }
        let _ = writeln!(s, "omega.N0 = {}", self.omega.n0);
        match &self.epsilon {
            EpsilonSetting::Single(e) => {
                let _ = writeln!(s, "epsilon = {}", fmt_f64(*e));
            }
            EpsilonSetting::List(v) => {
                let _ = writeln!(s, "epsilon = {}", list(v));
            }
        }
        let _ = writeln!(s, "u0.center = {}", fmt_f64(self.u0.center));
        let dir = self.output.dir.to_string_lossy();
        let _ = writeln!(s, "output.dir = {}", toml::Value::String(dir.into_owned()));
        s
    }

    /// Checks every field against the preconditions of the modules that consume it.
    pub fn validate(&self) -> Result<()> {
        let Self {
            domain,
            grid,
            time,
            scheme,
            potential,
            mollifier,
            omega,
            epsilon,
            u0,
            ..
        } = self;
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(value_err(key, "must be finite"))
            }
        };
        finite("domain.a", domain.a)?;
        finite("domain.b", domain.b)?;
        if !(domain.b > domain.a) {
            return Err(value_err("domain.b", "must exceed domain.a"));
        }
        if !(grid.dx > 0.0 && grid.dx <= (domain.b - domain.a) / 4.0) {
            return Err(value_err("grid.dx", "must be positive and at most (b - a)/4"));
        }
        if !(time.dt > 0.0 && time.dt.is_finite()) {
            return Err(value_err("time.dt", "must be positive"));
        }
        if !(time.t_final > 0.0 && time.t_final.is_finite()) {
            return Err(value_err("time.T", "must be positive"));
        }
        let space = self.spatial_grid()?;
        SpaceTimeGrid::new(space.clone(), time.dt, time.t_final, time.snapshots.clone())
            .map_err(|e| value_err("time", e.to_string()))?;
        SchemeConfig::new(scheme.theta).map_err(|e| value_err("scheme.theta", e.to_string()))?;
        if !(potential.strength >= 0.0 && potential.strength.is_finite()) {
            return Err(value_err("potential.strength", "must be finite and >= 0"));
        }
        finite("potential.x0", potential.x0)?;
        if matches!(potential.kind, PotentialKind::Dirac | PotentialKind::DiracSquared)
            && !space.contains(potential.x0)
        {
            return Err(Error::Placement {
                what: "potential.x0".into(),
                position: potential.x0,
                a: domain.a,
                b: domain.b,
            });
        }
        if mollifier.moments > MAX_DERIVATIVE_ORDER {
            return Err(value_err(
                "mollifier.moments",
                format!("at most {MAX_DERIVATIVE_ORDER}"),
            ));
        }
        if omega.n0 == 0 {
            return Err(value_err("omega.N0", "must be >= 1"));
        }
        let eps = epsilon.values();
        if eps.is_empty() {
            return Err(value_err("epsilon", "empty list"));
        }
        let schedule = self.schedule();
        for &e in &eps {
            schedule.omega(e).map_err(|err| value_err("epsilon", err.to_string()))?;
        }
        if eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(value_err("epsilon", "list must be strictly decreasing"));
        }
        finite("u0.center", u0.center)?;
        sample_initial_bump(u0.center, &space)?;
        Ok(())
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::with_spacing(self.domain.a, self.domain.b, self.grid.dx)
    }

    pub fn time_grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(
            self.spatial_grid()?,
            self.time.dt,
            self.time.t_final,
            self.time.snapshots.clone(),
        )
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        SchemeConfig::new(self.scheme.theta)
    }

    /// Effective omega schedule.
    pub fn schedule(&self) -> OmegaSchedule {
        let log = OmegaSchedule::Logarithmic { n0: self.omega.n0 };
        match self.omega.schedule {
            Some(ScheduleName::Linear) => OmegaSchedule::Linear,
            Some(ScheduleName::Logarithmic) => log,
            None => match self.potential.sign {
                Sign::Positive => OmegaSchedule::Linear,
                Sign::Negative => log,
            },
        }
    }

    pub fn kernel(&self) -> Result<MollifierKernel> {
        let bump = MollifierKernel::standard_bump();
        if self.mollifier.moments <= 1 {
            Ok(bump)
        } else {
            bump.vanish_moments(self.mollifier.moments)
        }
    }

    pub fn potential_spec(&self, grid: &SpatialGrid) -> Result<PotentialSpec> {
        let p = &self.potential;
        match p.kind {
            PotentialKind::Zero => Ok(PotentialSpec::zero(p.sign)),
            PotentialKind::Dirac => PotentialSpec::dirac(p.x0, p.strength, p.sign),
            PotentialKind::DiracSquared => PotentialSpec::dirac_squared(p.x0, p.strength, p.sign),
            PotentialKind::Bounded => PotentialSpec::bounded_from_fn(
                grid,
                |x| p.strength * (-(x - p.x0) * (x - p.x0)).exp(),
                p.sign,
            ),
        }
    }

    pub fn initial_datum(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        sample_initial_bump(self.u0.center, grid)
    }

    /// `output.dir`, overridden by `VWH_OUTPUT_DIR` when set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }

    /// JSON echo without the output directory, so reports do not depend on
    /// where they are written.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output");
        }
        v
    }
}

/// All recognised keys.
pub fn known_keys() -> &'static [&'static str] {
    KEYS
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.domain.a, 0.0);
        assert_eq!(cfg.domain.b, 100.0);
        assert_eq!(cfg.grid.dx, 0.01);
        assert_eq!(cfg.time.dt, 0.2);
        assert_eq!(cfg.scheme.theta, 1.0);
        assert_eq!(cfg.u0.center, 50.0);
    }

    #[test]
    fn epsilon_list_is_sweep() {
        let cfg = parse_config("epsilon = [0.8, 0.5, 0.2]\n").unwrap();
        assert!(cfg.epsilon.is_sweep());
        assert_eq!(cfg.epsilon.values(), vec![0.8, 0.5, 0.2]);
    }

    #[test]
    fn theta_out_of_range() {
        let err = parse_config("scheme.theta = 1.5").unwrap_err();
        assert!(matches!(err, Error::ConfigValue { ref key, .. } if key == "scheme.theta"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("grid.dy = 0.1").unwrap_err();
        assert!(matches!(err, Error::UnknownKey(ref k) if k == "grid.dy"));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("grid.dx = 0.01\ntime.dt = = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn comments_and_integers() {
        let cfg = parse_config("# reference\ntime.T = 4 # steps of 0.2\ntime.snapshots = [1, 2]\npotential.sign = -1\n").unwrap();
        assert_eq!(cfg.time.t_final, 4.0);
        assert_eq!(cfg.potential.sign, Sign::Negative);
        assert_eq!(cfg.schedule(), OmegaSchedule::Logarithmic { n0: 1 });
    }

    #[test]
    fn clipped_initial_bump() {
        assert!(matches!(parse_config("u0.center = 0.4"), Err(Error::Placement { .. })));
    }

    #[test]
    fn logarithmic_rejects_unit_epsilon() {
        let err = parse_config("omega.schedule = \"Logarithmic\"\nepsilon = 1.0").unwrap_err();
        assert!(matches!(err, Error::ConfigValue { ref key, .. } if key == "epsilon"));
    }

    #[test]
    fn unsorted_epsilons_rejected() {
        assert!(parse_config("epsilon = [0.2, 0.5]").is_err());
    }

    #[test]
    fn every_key_is_accepted() {
        let doc = RunConfig::default().to_document();
        for key in known_keys() {
            if *key == "omega.schedule" {
                continue;
            }
            assert!(doc.contains(&format!("{key} = ")), "{key} missing");
        }
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (10.0f64..40.0, 0.05f64..0.5),
            prop_oneof![Just(0.5), Just(1.0), 0.0f64..=1.0],
            prop_oneof![
                Just(PotentialKind::Zero),
                Just(PotentialKind::Dirac),
                Just(PotentialKind::DiracSquared),
                Just(PotentialKind::Bounded)
            ],
            any::<bool>(),
            proptest::option::of(prop_oneof![Just(ScheduleName::Linear), Just(ScheduleName::Logarithmic)]),
            proptest::collection::vec(0.01f64..0.99, 1..5),
            0usize..=MAX_DERIVATIVE_ORDER,
            1u32..4,
        )
            .prop_map(|((b, dx), theta, kind, neg, schedule, mut eps, moments, n0)| {
                eps.sort_by(|a, b| b.total_cmp(a));
                eps.dedup();
                let mut cfg = RunConfig::default();
                cfg.domain.b = b;
                cfg.grid.dx = dx;
                cfg.time.t_final = 2.0;
                cfg.time.snapshots = vec![0.4, 2.0];
                cfg.scheme.theta = theta;
                cfg.potential.kind = kind;
                cfg.potential.x0 = b / 3.0;
                cfg.potential.sign = if neg { Sign::Negative } else { Sign::Positive };
                cfg.omega.schedule = schedule;
                cfg.omega.n0 = n0;
                cfg.mollifier.moments = moments;
                cfg.u0.center = b / 2.0;
                cfg.epsilon = if eps.len() == 1 {
                    EpsilonSetting::Single(eps[0])
                } else {
                    EpsilonSetting::List(eps)
                };
                cfg
            })
    }

    proptest! {
        #[test]
        fn document_round_trip(cfg in arb_config()) {
            prop_assume!(cfg.validate().is_ok());
            let parsed = parse_config(&cfg.to_document()).unwrap();
            prop_assert_eq!(parsed, cfg);
        }
    }
}
