//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use revmarket_core::blackbox::{BlackBoxConfig, PlantedSpec};
use revmarket_core::market::ReturnKind;
use revmarket_core::rng::{self, TAG_NULL};
use revmarket_core::{GaConfig, GameVariant, RegimeLabel, WindowSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, CliError};

/// Annotated defaults, printed by `revmarket defaults`.
pub const REFERENCE: &str = include_str!("reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    pub close_column: String,
    pub returns: ReturnKind,
    pub output: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub variants: Vec<GameVariant>,
    pub days: DaySelection,
    pub null: NullConfig,
    pub window: WindowSpec,
    pub ga: GaConfig,
    pub param_sets: Vec<toml::Table>,
    pub regimes: Vec<RegimeRange>,
    pub blackbox: BlackBoxSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("prices.csv"),
            close_column: "close".into(),
            returns: ReturnKind::Log,
            output: PathBuf::from("out"),
            seed: 0,
            workers: 0,
            variants: vec![GameVariant::Gcmjg],
            days: DaySelection::default(),
            null: NullConfig::default(),
            window: WindowSpec::default(),
            ga: GaConfig::default(),
            param_sets: Vec::new(),
            regimes: Vec::new(),
            blackbox: BlackBoxSection::default(),
        }
    }
}

/// Which days to predict. With nothing set, every predictable day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaySelection {
    #[serde(with = "opt_date", skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(with = "opt_date", skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
    /// Keep only the last N selected days.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullConfig {
    pub n_strategies: usize,
    /// Defaults to a value derived from the master seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            n_strategies: 10_000,
            seed: None,
        }
    }
}

/// Inclusive date range. Without a label, the range is classified from the
/// realized returns of the predicted days inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeRange {
    #[serde(with = "date")]
    pub start: NaiveDate,
    #[serde(with = "date")]
    pub end: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<RegimeLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlackBoxSection {
    pub holdout_days: usize,
    pub random_genomes: usize,
    pub planted: PlantedSpec,
}

impl Default for BlackBoxSection {
    fn default() -> Self {
        let bb = BlackBoxConfig::default();
        Self {
            holdout_days: bb.holdout_days,
            random_genomes: bb.random_genomes,
            planted: PlantedSpec::default(),
        }
    }
}

impl BlackBoxSection {
    pub fn config(&self) -> BlackBoxConfig {
        BlackBoxConfig {
            holdout_days: self.holdout_days,
            random_genomes: self.random_genomes,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub variants: Vec<GameVariant>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| validation(format!("config: {e}")))
    }

    /// Loads `path`, resolves relative paths against its directory, applies
    /// `overrides` and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
        let mut cfg =
            Self::from_toml(&text).map_err(|e| validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data = absolute(base, &cfg.data);
        cfg.output = absolute(base, &cfg.output);
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        if !overrides.variants.is_empty() {
            cfg.variants = overrides.variants.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.variants.is_empty() {
            return Err(validation(
                "variants: at least one game variant is required",
            ));
        }
        let mut seen = self.variants.clone();
        seen.sort_by_key(|v| v.id());
        seen.dedup();
        if seen.len() != self.variants.len() {
            return Err(validation("variants: duplicate entries"));
        }
        if let (Some(s), Some(e)) = (self.days.start, self.days.end) {
            if s > e {
                return Err(validation("days: start is after end"));
            }
        }
        if self.days.last == Some(0) {
            return Err(validation("days.last must be >= 1"));
        }
        if self.null.n_strategies == 0 {
            return Err(validation("null.n_strategies must be >= 1"));
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if r.start > r.end {
                return Err(validation(format!("regimes[{i}]: start is after end")));
            }
        }
        for k in 0..self.param_set_count() {
            let ga = self.param_set(k)?;
            ga.validate()
                .map_err(|e| validation(format!("param set {k}: {e}")))?;
            self.window
                .validate(ga.hyper.memory)
                .map_err(|e| validation(format!("param set {k}: {e}")))?;
        }
        Ok(())
    }

    /// Validation for the black-box command, which also needs the planted game.
    pub fn validate_blackbox(&self) -> Result<(), CliError> {
        self.blackbox
            .planted
            .build()
            .map_err(|e| validation(format!("blackbox.planted: {e}")))?;
        if self.blackbox.holdout_days == 0 {
            return Err(validation("blackbox.holdout_days must be >= 1"));
        }
        Ok(())
    }

    pub fn param_set_count(&self) -> usize {
        self.param_sets.len().max(1)
    }

    /// GA configuration of parameter set `k`: the `[ga]` table with
    /// `param_sets[k]` merged on top. Seeds and variants are filled in by the
    /// caller.
    pub fn param_set(&self, k: usize) -> Result<GaConfig, CliError> {
        let Some(overlay) = self.param_sets.get(k) else {
            return Ok(self.ga.clone());
        };
        let mut base = toml::Table::try_from(&self.ga).expect("GA config serializes");
        merge(&mut base, overlay);
        base.try_into()
            .map_err(|e| validation(format!("param_sets[{k}]: {e}")))
    }

    pub fn null_seed(&self) -> u64 {
        self.null
            .seed
            .unwrap_or_else(|| rng::derive(self.seed, &[TAG_NULL]))
    }

    /// Same runs, same artifacts: everything except the worker count.
    pub fn same_run(&self, other: &RunConfig) -> bool {
        let mut a = self.clone();
        a.workers = other.workers;
        &a == other
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        let joined = base.join(p);
        std::path::absolute(&joined).unwrap_or(joined)
    }
}

fn merge(base: &mut toml::Table, overlay: &toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Accepts both TOML dates and `"YYYY-MM-DD"` strings.
fn parse_date<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
    use serde::de::Error;
    let text = match toml::Value::deserialize(d)? {
        toml::Value::String(s) => s,
        toml::Value::Datetime(dt) => dt.to_string(),
        other => return Err(D::Error::custom(format!("expected a date, got {other}"))),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .map_err(|e| D::Error::custom(format!("bad date {text:?}: {e}")))
}

mod date {
    use super::*;

    pub fn serialize<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&d.format("%Y-%m-%d").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        parse_date(d)
    }
}

mod opt_date {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Option<NaiveDate>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => date::serialize(d, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDate>, D::Error> {
        parse_date(d).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parses_to_defaults() {
        let cfg = RunConfig::from_toml(REFERENCE).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.days.start = NaiveDate::from_ymd_opt(2008, 1, 2);
        cfg.days.last = Some(20);
        cfg.ga.hyper.threshold = f64::INFINITY;
        cfg.regimes.push(RegimeRange {
            start: NaiveDate::from_ymd_opt(2008, 1, 2).unwrap(),
            end: NaiveDate::from_ymd_opt(2008, 3, 1).unwrap(),
            label: Some(RegimeLabel::TrendingDown),
        });
        cfg.param_sets
            .push(toml::from_str("population_size = 30").unwrap());
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn accepts_bare_toml_dates() {
        let cfg = RunConfig::from_toml(
            "[days]\nstart = 2008-01-02\nend = \"2008-02-01\"\n[[regimes]]\nstart = 2008-01-02\nend = 2008-01-31\n",
        )
        .unwrap();
        assert_eq!(cfg.days.start, NaiveDate::from_ymd_opt(2008, 1, 2));
        assert_eq!(cfg.regimes[0].label, None);
    }

    #[test]
    fn param_sets_overlay_ga() {
        let cfg = RunConfig::from_toml(
            "[ga]\npopulation_size = 40\n[ga.hyper]\nagents = 7\n\n[[param_sets]]\nmutation_rate_per_bit = 0.01\n\n[[param_sets]]\nhyper = { memory = 2 }\n",
        )
        .unwrap();
        assert_eq!(cfg.param_set_count(), 2);
        let a = cfg.param_set(0).unwrap();
        assert_eq!(
            (a.population_size, a.mutation_rate_per_bit, a.hyper.agents),
            (40, 0.01, 7)
        );
        let b = cfg.param_set(1).unwrap();
        assert_eq!(
            (b.hyper.agents, b.hyper.memory, b.mutation_rate_per_bit),
            (7, 2, 0.005)
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_toml("unknown_key = 1").is_err());
        assert!(RunConfig::from_toml("variants = [\"nope\"]").is_err());
        let cfg = RunConfig::from_toml("[window]\nin_sample_days = 3\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Validation(_))));
        let cfg = RunConfig::from_toml("[[param_sets]]\npopulation_size = 1\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("variants = [\"GCMG\", \"GCMG\"]").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn worker_count_is_not_part_of_the_run() {
        let a = RunConfig::default();
        let b = RunConfig {
            workers: 8,
            ..a.clone()
        };
        assert!(a.same_run(&b));
        assert!(!a.same_run(&RunConfig {
            seed: 1,
            ..a.clone()
        }));
    }
}
