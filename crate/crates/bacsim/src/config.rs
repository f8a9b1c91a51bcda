//! Declarative scenario configuration.
//!
//! A scenario is a single TOML file naming either a dataset to replay or a
//! synthetic spec to generate, the speed band, the sweep axes, the battery
//! unit, and run policy. `validate` reports every violation at once rather
//! than stopping at the first.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ingest::{ColumnMap, DatasetFlavor, DurationUnit, IngestOptions};
use crate::report::{InitialState, SweepParams};
use crate::synth::SynthSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub flavor: DatasetFlavor,
    #[serde(default)]
    pub duration_unit: DurationUnit,
    #[serde(default)]
    pub columns: ColumnMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedBandConfig {
    pub min_kw: f64,
    pub max_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_kw: Vec<f64>,
    pub pack_counts: Vec<u32>,
}

/// `"full"`, `"empty"`, or a fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateConfig {
    Named(NamedState),
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    Full,
    Empty,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        InitialStateConfig::Named(NamedState::Full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    pub pack_capacity_kwh: f64,
    pub pack_power_kw: f64,
    pub initial_state: InitialStateConfig,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            pack_capacity_kwh: 13.5,
            pack_power_kw: 5.0,
            initial_state: InitialStateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub parity_epsilon_kwh: f64,
    pub output_dir: PathBuf,
    /// 0 means one worker per core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            parity_epsilon_kwh: crate::report::DEFAULT_PARITY_EPSILON_KWH,
            output_dir: PathBuf::from("out"),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dataset: Option<DatasetConfig>,
    pub synth: Option<SynthSpec>,
    pub speed_band: Option<SpeedBandConfig>,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub battery: BatteryConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml_str(&text, path)
    }

    /// Collects every violation. An empty result means the config is
    /// runnable. `base_dir` anchors relative dataset paths.
    pub fn validate(&self, base_dir: &Path) -> Vec<String> {
        let mut issues = Vec::new();
        match (&self.dataset, &self.synth) {
            (Some(_), Some(_)) => issues
                .push("exactly one of [dataset] and [synth] must be present, found both".into()),
            (None, None) => issues
                .push("exactly one of [dataset] and [synth] must be present, found neither".into()),
            (Some(ds), None) => {
                let path = resolve_path(base_dir, &ds.path);
                if !path.is_file() {
                    issues.push(format!("dataset path {} does not exist", path.display()));
                }
            }
            (None, Some(synth)) => {
                if let Err(e) = synth.validate() {
                    issues.push(e.to_string());
                }
            }
        }
        if let Some(band) = &self.speed_band {
            if !band.min_kw.is_finite()
                || band.min_kw < 0.0
                || band.max_kw.is_nan()
                || band.max_kw <= band.min_kw
            {
                issues.push(format!(
                    "speed band [{}, {}) is invalid",
                    band.min_kw, band.max_kw
                ));
            }
        }
        if self.sweep.grid_kw.is_empty() {
            issues.push("sweep.grid_kw must list at least one grid feed".into());
        }
        for &g in &self.sweep.grid_kw {
            if !g.is_finite() || g <= 0.0 {
                issues.push(format!("grid feed {g} kW must be positive"));
            }
        }
        if self.sweep.pack_counts.is_empty() {
            issues.push("sweep.pack_counts must list at least one pack count".into());
        }
        if !self.battery.pack_capacity_kwh.is_finite() || self.battery.pack_capacity_kwh <= 0.0 {
            issues.push(format!(
                "battery.pack_capacity_kwh must be positive, got {}",
                self.battery.pack_capacity_kwh
            ));
        }
        if !self.battery.pack_power_kw.is_finite() || self.battery.pack_power_kw <= 0.0 {
            issues.push(format!(
                "battery.pack_power_kw must be positive, got {}",
                self.battery.pack_power_kw
            ));
        }
        if let InitialStateConfig::Fraction(f) = self.battery.initial_state {
            if !(0.0..=1.0).contains(&f) {
                issues.push(format!(
                    "battery.initial_state fraction {f} must be in [0, 1]"
                ));
            }
        }
        if !self.run.parity_epsilon_kwh.is_finite() || self.run.parity_epsilon_kwh < 0.0 {
            issues.push(format!(
                "run.parity_epsilon_kwh must be >= 0, got {}",
                self.run.parity_epsilon_kwh
            ));
        }
        issues
    }

    /// The speed band: explicit, or the flavor default — `[3, 22)` kW
    /// domestic, `[3, 100)` kW local authority, domestic for synth data.
    pub fn effective_speed_band(&self) -> (f64, f64) {
        if let Some(band) = &self.speed_band {
            return (band.min_kw, band.max_kw);
        }
        match self.dataset.as_ref().map(|d| d.flavor) {
            Some(DatasetFlavor::LocalAuthority) => (3.0, 100.0),
            _ => (3.0, 22.0),
        }
    }

    pub fn ingest_options(&self) -> IngestOptions {
        let (flavor, columns, duration_unit) = match &self.dataset {
            Some(ds) => (ds.flavor, ds.columns.clone(), ds.duration_unit),
            None => (
                DatasetFlavor::Domestic,
                ColumnMap::default(),
                DurationUnit::Hours,
            ),
        };
        IngestOptions {
            flavor,
            columns,
            duration_unit,
            speed_band: self.effective_speed_band(),
        }
    }

    pub fn sweep_params(&self) -> SweepParams {
        SweepParams {
            pack_capacity_kwh: self.battery.pack_capacity_kwh,
            pack_power_kw: self.battery.pack_power_kw,
            initial_state: match self.battery.initial_state {
                InitialStateConfig::Named(NamedState::Full) => InitialState::Full,
                InitialStateConfig::Named(NamedState::Empty) => InitialState::Empty,
                InitialStateConfig::Fraction(f) => InitialState::Fraction(f),
            },
            parity_epsilon_kwh: self.run.parity_epsilon_kwh,
        }
    }
}

pub fn resolve_path(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTH_SCENARIO: &str = r#"
        [synth]
        cp_count = 10
        sessions_per_cp = 5
        seed = 42
        start_hour_weights = [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]
        plugin_duration = { mu = 2.2, sigma = 0.6 }
        raw_energy = { mu = 2.1, sigma = 0.5 }
        ev_max_bands = [{ min_kw = 3.0, max_kw = 7.0, weight = 1.0 }]
        min_plugin_h = 0.05
        max_plugin_h = 48.0

        [sweep]
        grid_kw = [3.0]
        pack_counts = [0, 1]
    "#;

    #[test]
    fn parses_synth_scenario_with_defaults() {
        let cfg = ScenarioConfig::from_toml_str(SYNTH_SCENARIO, Path::new("test.toml")).unwrap();
        assert!(cfg.validate(Path::new(".")).is_empty());
        assert_eq!(cfg.battery.pack_capacity_kwh, 13.5);
        assert_eq!(cfg.battery.pack_power_kw, 5.0);
        assert_eq!(cfg.effective_speed_band(), (3.0, 22.0));
        assert_eq!(cfg.run.workers, 0);
    }

    #[test]
    fn both_sources_rejected() {
        let text =
            format!("{SYNTH_SCENARIO}\n[dataset]\npath = \"x.csv\"\nflavor = \"domestic\"\n");
        let cfg = ScenarioConfig::from_toml_str(&text, Path::new("test.toml")).unwrap();
        let issues = cfg.validate(Path::new("."));
        assert!(
            issues.iter().any(|i| i.contains("found both")),
            "{issues:?}"
        );
    }

    #[test]
    fn collects_all_violations_at_once() {
        let text = r#"
            [sweep]
            grid_kw = []
            pack_counts = []

            [battery]
            pack_capacity_kwh = 0.0
            pack_power_kw = -1.0

            [run]
            parity_epsilon_kwh = -2.0
        "#;
        let cfg = ScenarioConfig::from_toml_str(text, Path::new("test.toml")).unwrap();
        let issues = cfg.validate(Path::new("."));
        assert!(issues.len() >= 6, "{issues:?}");
    }

    #[test]
    fn missing_dataset_file_is_reported() {
        let text = r#"
            [dataset]
            path = "does-not-exist.csv"
            flavor = "local_authority"
            duration_unit = "minutes"

            [sweep]
            grid_kw = [3.0, 7.0]
            pack_counts = [0, 1, 2]
        "#;
        let cfg = ScenarioConfig::from_toml_str(text, Path::new("test.toml")).unwrap();
        let issues = cfg.validate(Path::new("/tmp"));
        assert_eq!(issues.len(), 1);
        assert!(issues[0].contains("does-not-exist.csv"));
        assert_eq!(cfg.effective_speed_band(), (3.0, 100.0));
    }

    #[test]
    fn fractional_initial_state_parses() {
        let text = r#"
            [synth]
            cp_count = 1
            sessions_per_cp = 1
            seed = 1
            start_hour_weights = [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]
            plugin_duration = { mu = 2.0, sigma = 0.5 }
            raw_energy = { mu = 2.0, sigma = 0.5 }
            ev_max_bands = [{ min_kw = 3.0, max_kw = 7.0, weight = 1.0 }]
            min_plugin_h = 0.05
            max_plugin_h = 48.0

            [sweep]
            grid_kw = [3.0]
            pack_counts = [1]

            [battery]
            initial_state = 0.5
        "#;
        let cfg = ScenarioConfig::from_toml_str(text, Path::new("t.toml")).unwrap();
        assert_eq!(cfg.battery.initial_state, InitialStateConfig::Fraction(0.5));
        assert!(cfg.validate(Path::new(".")).is_empty());

        let spec = crate::model::BankSpec::new(2, 10.0, 5.0).unwrap();
        assert_eq!(cfg.sweep_params().initial_state.stored_kwh(spec), 10.0);
    }
}
