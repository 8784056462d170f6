//! Layered run configuration.
//!
//! Built-in defaults are overlaid by the top level of the config file, then
//! by the selected profile, then by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use safe_core::p1812::{ModelEnvironment, Polarization};
use safe_core::profile::ClutterClass;
use safe_core::ret::{CoefficientTable, LeafState, RetLimit, RetParameters};
use safe_core::safe::{Execution, Mode, SafeConfig};
use safe_core::LatLon;
use serde::{Deserialize, Serialize};

use crate::args::GlobalArgs;
use crate::error::CliError;

/// Canopy growth per year when only the year pair is given, m.
pub const DEFAULT_GROWTH_RATE_M_PER_YEAR: f64 = 0.5;
pub const DEFAULT_RX_HEIGHT_M: f64 = 2.5;

/// A terminal as `lat,lon[,height_m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub position: LatLon,
    pub height_m: Option<f64>,
}

impl FromStr for Site {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let (pos, height) = match parts[..] {
            [lat, lon] => (format!("{lat},{lon}"), None),
            [lat, lon, h] => {
                let h: f64 = h.parse().map_err(|e| format!("height `{h}`: {e}"))?;
                (format!("{lat},{lon}"), Some(h))
            }
            _ => return Err(format!("expected `lat,lon[,height_m]`, got `{s}`")),
        };
        Ok(Site {
            position: pos.parse()?,
            height_m: height,
        })
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.height_m {
            Some(h) => write!(f, "{},{},{h}", self.position.lat, self.position.lon),
            None => write!(f, "{},{}", self.position.lat, self.position.lon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoliageKind {
    Ret,
    DualSlope,
}

impl FromStr for FoliageKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ret" => Ok(Self::Ret),
            "dual-slope" => Ok(Self::DualSlope),
            other => Err(format!("unknown foliage model '{other}' (ret, dual-slope)")),
        }
    }
}

/// One configuration layer; unset keys fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub preset: Option<String>,
    pub dtm: Option<PathBuf>,
    pub dsm: Option<PathBuf>,
    pub fallback_dtm: Option<PathBuf>,
    pub coefficients: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tx: Option<String>,
    pub frequency_mhz: Option<f64>,
    pub polarization: Option<Polarization>,
    pub mode: Option<Mode>,
    pub ret_limit_db: Option<f64>,
    pub clutter_class: Option<ClutterClass>,
    pub species: Option<String>,
    pub leaf_state: Option<LeafState>,
    pub ret_frequency_ghz: Option<f64>,
    pub foliage_model: Option<FoliageKind>,
    pub detection_threshold_m: Option<f64>,
    pub profile_spacing_m: Option<f64>,
    pub intersection_step_m: Option<f64>,
    pub time_percentage: Option<f64>,
    pub location_percentage: Option<f64>,
    pub delta_n: Option<f64>,
    pub n0: Option<f64>,
    pub growth_rate_m_per_year: Option<f64>,
    pub survey_year: Option<i32>,
    pub measurement_year: Option<i32>,
    pub serial: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    /// `top` wins wherever it sets a key.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, preset, dtm, dsm, fallback_dtm, coefficients, out, tx, frequency_mhz, polarization, mode,
            ret_limit_db, clutter_class, species, leaf_state, ret_frequency_ghz, foliage_model,
            detection_threshold_m, profile_spacing_m, intersection_step_m, time_percentage,
            location_percentage, delta_n, n0, growth_rate_m_per_year, survey_year, measurement_year, serial
        )
    }

    pub fn from_flags(g: &GlobalArgs) -> Settings {
        Settings {
            preset: g.preset.clone(),
            dtm: g.dtm.clone(),
            dsm: g.dsm.clone(),
            fallback_dtm: g.fallback_dtm.clone(),
            coefficients: g.coefficients.clone(),
            out: g.out.clone(),
            tx: g.tx.map(|s| s.to_string()),
            frequency_mhz: g.freq,
            polarization: g.polarization,
            mode: g.mode,
            ret_limit_db: g.ret_limit,
            clutter_class: g.clutter_class,
            species: g.species.clone(),
            leaf_state: g.leaf_state,
            ret_frequency_ghz: g.ret_frequency,
            foliage_model: g.foliage_model,
            detection_threshold_m: g.threshold,
            profile_spacing_m: g.spacing,
            intersection_step_m: g.step,
            time_percentage: g.time_percentage,
            location_percentage: g.location_percentage,
            delta_n: g.delta_n,
            n0: g.n0,
            growth_rate_m_per_year: g.growth_rate,
            survey_year: g.survey_year,
            measurement_year: g.measurement_year,
            serial: g.serial.then_some(true),
        }
    }

    fn builtin() -> Settings {
        let safe = SafeConfig::semi_rural();
        let env = safe.environment;
        Settings {
            out: Some(PathBuf::from("out")),
            polarization: Some(Polarization::Vertical),
            mode: Some(safe.mode),
            ret_limit_db: Some(safe.ret_limit.db()),
            clutter_class: Some(safe.clutter_class),
            species: Some(safe.ret_params.species.clone()),
            leaf_state: Some(safe.ret_params.leaf_state),
            ret_frequency_ghz: Some(safe.ret_params.frequency_ghz),
            foliage_model: Some(FoliageKind::Ret),
            detection_threshold_m: Some(safe.detection_threshold_m),
            profile_spacing_m: Some(safe.profile_spacing_m),
            intersection_step_m: Some(safe.intersection_step_m),
            time_percentage: Some(env.time_percentage),
            location_percentage: Some(env.location_percentage),
            delta_n: Some(env.delta_n),
            n0: Some(env.n0),
            serial: Some(false),
            ..Default::default()
        }
    }

    fn builtin_profiles() -> BTreeMap<String, Settings> {
        SafeConfig::PRESETS
            .iter()
            .map(|name| {
                let c = SafeConfig::preset(name).expect("listed preset exists");
                let s = Settings {
                    ret_limit_db: Some(c.ret_limit.db()),
                    ..Default::default()
                };
                (name.to_string(), s)
            })
            .collect()
    }
}

/// Parsed config file: top-level keys plus `[profiles.<name>]` tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub base: Settings,
    pub profiles: BTreeMap<String, Settings>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config: {e}")))?;
        let profiles = match table.remove("profiles") {
            None => BTreeMap::new(),
            Some(toml::Value::Table(t)) => t
                .into_iter()
                .map(|(name, v)| {
                    let s: Settings = v
                        .try_into()
                        .map_err(|e| CliError::Config(format!("config profile `{name}`: {e}")))?;
                    if s.preset.is_some() {
                        return Err(CliError::Config(format!("config profile `{name}` may not select a preset")));
                    }
                    Ok((name, s))
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(CliError::Config("config: `profiles` must be a table".into())),
        };
        let base: Settings = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("config: {e}")))?;
        Ok(Self { base, profiles })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Canopy growth between measurement and survey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeGrowth {
    pub rate_m_per_year: f64,
    pub survey_year: i32,
    pub measurement_year: i32,
    pub offset_m: f64,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub dtm: Option<PathBuf>,
    pub dsm: Option<PathBuf>,
    pub fallback_dtm: Option<PathBuf>,
    pub coefficients: Option<PathBuf>,
    pub out: PathBuf,
    pub transmitter: Option<Site>,
    pub frequency_mhz: Option<f64>,
    pub polarization: Polarization,
    pub foliage_model: FoliageKind,
    pub safe: SafeConfig,
    pub tree_growth: Option<TreeGrowth>,
    pub execution: Execution,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("no value for `{key}`")))
}

impl RunConfig {
    /// Resolves `flags` over the optional config file.
    pub fn resolve(flags: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Self::from_layers(file, Settings::from_flags(flags))
    }

    pub fn from_layers(file: ConfigFile, flags: Settings) -> Result<Self, CliError> {
        let preset = flags.preset.clone().or_else(|| file.base.preset.clone());
        let profile = match &preset {
            None => Settings::default(),
            Some(name) => file
                .profiles
                .get(name)
                .cloned()
                .or_else(|| Settings::builtin_profiles().remove(name))
                .ok_or_else(|| CliError::Config(format!("unknown profile `{name}`")))?,
        };
        let s = Settings::builtin().overlay(file.base).overlay(profile).overlay(flags);
        Self::from_settings(s, preset)
    }

    fn from_settings(s: Settings, preset: Option<String>) -> Result<Self, CliError> {
        let foliage_model = required(s.foliage_model, "foliage_model")?;
        let ret_params = match foliage_model {
            FoliageKind::DualSlope => RetParameters::dual_slope_default(),
            FoliageKind::Ret => {
                let table = match &s.coefficients {
                    Some(p) => CoefficientTable::from_file(p)?,
                    None => CoefficientTable::builtin(),
                };
                table.parameters(
                    &required(s.species, "species")?,
                    required(s.leaf_state, "leaf_state")?,
                    required(s.ret_frequency_ghz, "ret_frequency_ghz")?,
                )?
            }
        };
        let ret_limit = RetLimit::new(required(s.ret_limit_db, "ret_limit_db")?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let safe = SafeConfig {
            mode: required(s.mode, "mode")?,
            clutter_class: required(s.clutter_class, "clutter_class")?,
            ret_params,
            ret_limit,
            environment: ModelEnvironment {
                time_percentage: required(s.time_percentage, "time_percentage")?,
                location_percentage: required(s.location_percentage, "location_percentage")?,
                delta_n: required(s.delta_n, "delta_n")?,
                n0: required(s.n0, "n0")?,
                ..ModelEnvironment::default()
            },
            detection_threshold_m: required(s.detection_threshold_m, "detection_threshold_m")?,
            profile_spacing_m: required(s.profile_spacing_m, "profile_spacing_m")?,
            intersection_step_m: required(s.intersection_step_m, "intersection_step_m")?,
        };
        safe.validate()?;

        let tree_growth = match (s.survey_year, s.measurement_year) {
            (None, None) => {
                if s.growth_rate_m_per_year.is_some() {
                    return Err(CliError::Config(
                        "a growth rate needs survey_year and measurement_year".into(),
                    ));
                }
                None
            }
            (Some(survey), Some(measured)) => {
                let rate = s.growth_rate_m_per_year.unwrap_or(DEFAULT_GROWTH_RATE_M_PER_YEAR);
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(CliError::Config(format!("growth rate {rate} must be >= 0")));
                }
                if survey < measured {
                    return Err(CliError::Config(format!(
                        "survey year {survey} precedes measurement year {measured}"
                    )));
                }
                Some(TreeGrowth {
                    rate_m_per_year: rate,
                    survey_year: survey,
                    measurement_year: measured,
                    offset_m: rate * f64::from(survey - measured),
                })
            }
            _ => {
                return Err(CliError::Config(
                    "survey_year and measurement_year must be given together".into(),
                ))
            }
        };

        let transmitter = s
            .tx
            .map(|t| t.parse::<Site>().map_err(|e| CliError::Config(format!("tx: {e}"))))
            .transpose()?;
        Ok(RunConfig {
            preset,
            dtm: s.dtm,
            dsm: s.dsm,
            fallback_dtm: s.fallback_dtm,
            coefficients: s.coefficients,
            out: required(s.out, "out")?,
            transmitter,
            frequency_mhz: s.frequency_mhz,
            polarization: required(s.polarization, "polarization")?,
            foliage_model,
            safe,
            tree_growth,
            execution: if s.serial == Some(true) {
                Execution::Serial
            } else {
                Execution::Parallel
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(file: &str, flags: Settings) -> Result<RunConfig, CliError> {
        RunConfig::from_layers(ConfigFile::parse(file).unwrap(), flags)
    }

    #[test]
    fn defaults_match_semi_rural() {
        let c = resolve("", Settings::default()).unwrap();
        assert_eq!(c.safe, SafeConfig::semi_rural());
        assert_eq!(c.out, PathBuf::from("out"));
        assert_eq!(c.tree_growth, None);
    }

    #[test]
    fn flags_beat_profile_beat_file() {
        let file = "ret_limit_db = 12.0\nspecies = \"american-plane\"\n[profiles.mine]\nret_limit_db = 17.0\n";
        assert_eq!(resolve(file, Settings::default()).unwrap().safe.ret_limit.db(), 12.0);
        let with_profile = Settings {
            preset: Some("mine".into()),
            ..Default::default()
        };
        assert_eq!(resolve(file, with_profile.clone()).unwrap().safe.ret_limit.db(), 17.0);
        let with_flag = Settings {
            ret_limit_db: Some(25.0),
            ..with_profile
        };
        assert_eq!(resolve(file, with_flag).unwrap().safe.ret_limit.db(), 25.0);
    }

    #[test]
    fn builtin_presets() {
        let forested = Settings {
            preset: Some("heavily-forested".into()),
            ..Default::default()
        };
        assert_eq!(resolve("", forested).unwrap().safe.ret_limit.db(), 30.0);
        let file = "preset = \"semi-rural\"\n";
        assert_eq!(resolve(file, Settings::default()).unwrap().safe.ret_limit.db(), 20.0);
        let unknown = Settings {
            preset: Some("jungle".into()),
            ..Default::default()
        };
        assert!(matches!(resolve("", unknown), Err(CliError::Config(_))));
    }

    #[test]
    fn tree_growth_from_years() {
        let flags = Settings {
            survey_year: Some(2020),
            measurement_year: Some(2013),
            ..Default::default()
        };
        let g = resolve("", flags.clone()).unwrap().tree_growth.unwrap();
        assert!((g.offset_m - 3.5).abs() < 1e-12);
        let same = Settings {
            measurement_year: Some(2020),
            ..flags.clone()
        };
        assert_eq!(resolve("", same).unwrap().tree_growth.unwrap().offset_m, 0.0);
        let backwards = Settings {
            survey_year: Some(2010),
            ..flags
        };
        assert!(resolve("", backwards).is_err());
        let rate_only = Settings {
            growth_rate_m_per_year: Some(0.5),
            ..Default::default()
        };
        assert!(resolve("", rate_only).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ConfigFile::parse("ret_limt_db = 3\n").is_err());
        assert!(ConfigFile::parse("[profiles.a]\nbogus = 1\n").is_err());
    }

    #[test]
    fn site_parsing() {
        let s: Site = "45.3,-76.1,16".parse().unwrap();
        assert_eq!(s.height_m, Some(16.0));
        let s: Site = " 45.3 , -76.1 ".parse().unwrap();
        assert_eq!(s.height_m, None);
        assert!("45.3".parse::<Site>().is_err());
        assert!("95,0,1".parse::<Site>().is_err());
    }
}
