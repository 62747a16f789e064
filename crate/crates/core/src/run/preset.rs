//! Apparatus presets: the full configuration of one simulated experiment,
//! its TOML form, named builtins, and dotted-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{BucketConfig, CoincidenceConfig, SpectrometerConfig};
use crate::error::{Error, Result};
use crate::linedata::{absorption_profile, parse_csv_linelist, AbsorptionProfile, GasConditions};
use crate::material::MaterialTable;
use crate::sample::{FilterCurve, SampleConfig};
use crate::source::{
    conjugate_wavelength, phase_matching_angle, CrystalConfig, JsiGridSpec, PumpConfig,
};

/// Sample description as it appears in a preset file. Data references are
/// either `builtin:<name>` or filesystem paths; they resolve to a runtime
/// [`SampleConfig`] when the run starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSpec {
    Blank,
    LiquidCuvette {
        path_length_cm: f64,
        passes: u8,
        #[serde(default = "default_loss")]
        round_trip_loss: f64,
        mu_csv: String,
    },
    GasCell {
        path_length_cm: f64,
        passes: u8,
        #[serde(default = "default_loss")]
        round_trip_loss: f64,
        linelist: String,
        conditions: GasConditions,
    },
    CalibrationFilter {
        filter_csv: String,
    },
}

fn default_loss() -> f64 {
    1.0
}

/// Complete configuration for one simulated acquisition campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApparatusPreset {
    pub name: String,
    pub exposure_s: f64,
    pub frames: u32,
    pub seed: u64,
    pub pump: PumpConfig,
    pub crystal: CrystalConfig,
    pub bucket: BucketConfig,
    pub spectrometer: SpectrometerConfig,
    pub coincidence: CoincidenceConfig,
    pub jsi_grid: JsiGridSpec,
    pub sample: SampleSpec,
}

impl ApparatusPreset {
    pub fn validate(&self) -> Result<()> {
        if !(self.exposure_s > 0.0) {
            return Err(Error::Config(format!(
                "exposure_s must be positive, got {}",
                self.exposure_s
            )));
        }
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        self.pump.validate()?;
        self.crystal.validate()?;
        self.bucket.validate()?;
        self.spectrometer.validate()?;
        self.coincidence.validate()?;
        Ok(())
    }

    /// Wavelength coverage of the idler axis implied by the JSI grid.
    pub fn idler_coverage_nm(&self) -> Result<(f64, f64)> {
        let lo = conjugate_wavelength(self.pump.wavelength_nm, self.jsi_grid.signal_max_nm)?;
        let hi = conjugate_wavelength(self.pump.wavelength_nm, self.jsi_grid.signal_min_nm)?;
        Ok((lo, hi))
    }

    /// Load referenced data and synthesize profiles: the runtime sample.
    pub fn resolve_sample(&self) -> Result<SampleConfig> {
        match &self.sample {
            SampleSpec::Blank => Ok(SampleConfig::Blank),
            SampleSpec::LiquidCuvette {
                path_length_cm,
                passes,
                round_trip_loss,
                mu_csv,
            } => {
                let text = load_text_resource(mu_csv)?;
                let profile = AbsorptionProfile::from_csv(&text)?;
                let cfg = SampleConfig::LiquidCuvette {
                    path_length_cm: *path_length_cm,
                    passes: *passes,
                    round_trip_loss: *round_trip_loss,
                    profile,
                };
                cfg.validate()?;
                Ok(cfg)
            }
            SampleSpec::GasCell {
                path_length_cm,
                passes,
                round_trip_loss,
                linelist,
                conditions,
            } => {
                let text = load_text_resource(linelist)?;
                let lines = if linelist.ends_with(".par") {
                    crate::linedata::par::parse_par_file(&text)?
                } else {
                    parse_csv_linelist(&text)?
                };
                let (lo, hi) = self.idler_coverage_nm()?;
                let grid = profile_grid(lo - 2.0, hi + 2.0, 0.01);
                let profile = absorption_profile(&lines, conditions, &grid)?;
                let cfg = SampleConfig::GasCell {
                    path_length_cm: *path_length_cm,
                    passes: *passes,
                    round_trip_loss: *round_trip_loss,
                    profile,
                };
                cfg.validate()?;
                Ok(cfg)
            }
            SampleSpec::CalibrationFilter { filter_csv } => {
                let text = load_text_resource(filter_csv)?;
                let curve = FilterCurve::from_csv(&text)?;
                Ok(SampleConfig::CalibrationFilter { curve })
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("preset serialization: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let preset: ApparatusPreset = toml::from_str(text)
            .map_err(|e| Error::Config(format!("preset parse error: {e}")))?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Apply one `dotted.key=value` override and revalidate.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut root = toml::Value::try_from(self)
            .map_err(|e| Error::Config(format!("preset serialization: {e}")))?;
        set_path(&mut root, key, value)?;
        let preset: ApparatusPreset = root
            .try_into()
            .map_err(|e| Error::Config(format!("override '{key}={value}' breaks the preset: {e}")))?;
        preset.validate()?;
        Ok(preset)
    }
}

fn profile_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Resolve `builtin:<name>` data references or read from disk.
pub fn load_text_resource(reference: &str) -> Result<String> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        builtin_data(name).map(str::to_string)
    } else {
        let path = Path::new(reference);
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }
}

fn builtin_data(name: &str) -> Result<&'static str> {
    match name {
        "acetylene" => Ok(include_str!("../../data/lines_acetylene.csv")),
        "co2" => Ok(include_str!("../../data/lines_co2.csv")),
        "ethanol" => Ok(include_str!("../../data/mu_ethanol.csv")),
        "dcm" => Ok(include_str!("../../data/mu_dcm.csv")),
        "filter" => Ok(include_str!("../../data/filter_calibration.csv")),
        "demo.par" => Ok(include_str!("../../data/demo_lines.par")),
        other => Err(Error::Config(format!(
            "unknown builtin data reference 'builtin:{other}' \
             (available: acetylene, co2, ethanol, dcm, filter, demo.par)"
        ))),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut cursor = root;
    for (i, seg) in segments.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::Config(format!(
                "override key '{key}': '{}' is not a table",
                segments[..i].join(".")
            ))
        })?;
        if !table.contains_key(*seg) {
            let mut valid: Vec<&str> = table.keys().map(String::as_str).collect();
            valid.sort_unstable();
            return Err(Error::Config(format!(
                "unknown override key '{}' (valid keys here: {})",
                segments[..=i].join("."),
                valid.join(", ")
            )));
        }
        if i + 1 == segments.len() {
            let old = table.get(*seg).unwrap();
            let new = parse_override_value(value, old);
            table.insert((*seg).to_string(), new);
            return Ok(());
        }
        cursor = table.get_mut(*seg).unwrap();
    }
    unreachable!("loop returns on the last segment");
}

fn parse_override_value(text: &str, old: &toml::Value) -> toml::Value {
    let parsed: Option<toml::Value> = toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"));
    match parsed {
        Some(toml::Value::Integer(i)) if old.is_float() => toml::Value::Float(i as f64),
        Some(v) if !v.is_str() => v,
        // TOML needs quoted strings; accept bare words for convenience.
        Some(toml::Value::String(s)) => toml::Value::String(s),
        _ => toml::Value::String(text.to_string()),
    }
}

/// Names of the shipped presets.
pub const BUILTIN_PRESETS: [&str; 5] = ["ethanol", "dcm", "acetylene", "co2", "calibration"];

/// Look a preset up by builtin name, falling back to a filesystem path.
pub fn load_preset(name_or_path: &str) -> Result<ApparatusPreset> {
    if BUILTIN_PRESETS.contains(&name_or_path) {
        return builtin_preset(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return ApparatusPreset::load(path);
    }
    Err(Error::UnknownPreset(format!(
        "{name_or_path} (builtins: {})",
        BUILTIN_PRESETS.join(", ")
    )))
}

/// Build one of the named presets that mirror the measurement scenarios:
/// liquid cuvettes for ethanol and DCM, double-pass gas cells for acetylene
/// and CO2, and the calibration interference filter.
///
/// Rates and exposures are desk-scale: boosted pair rates with tens of
/// seconds of equivalent integration, so the full suite runs in minutes.
pub fn builtin_preset(name: &str) -> Result<ApparatusPreset> {
    let materials = MaterialTable::<f64>::builtin();
    // The energy-conservation map is an involution, so this also recovers
    // the signal wavelength paired with a given idler.
    let solve_angle = |idler_nm: f64| -> Result<f64> {
        let signal = conjugate_wavelength(532.0, idler_nm)?;
        phase_matching_angle(&materials, "BBO", 532.0, signal, idler_nm)
    };

    let crystal_1mm = CrystalConfig {
        thickness_mm: 1.0,
        cut_angle_rad: solve_angle(1550.0719424460433)?,
        material_id: "BBO".into(),
    };

    let pump = |pair_rate_hz: f64| PumpConfig {
        pair_rate_hz,
        ..PumpConfig::default()
    };

    let preset = match name {
        "ethanol" => ApparatusPreset {
            name: "ethanol".into(),
            exposure_s: 10.0,
            frames: 4,
            seed: 7001,
            pump: pump(2.0e5),
            crystal: crystal_1mm,
            bucket: BucketConfig::default(),
            spectrometer: SpectrometerConfig::with_grating(600, 810.0)?,
            coincidence: CoincidenceConfig::default(),
            jsi_grid: JsiGridSpec::default(),
            sample: SampleSpec::LiquidCuvette {
                path_length_cm: 0.3,
                passes: 1,
                round_trip_loss: 1.0,
                mu_csv: "builtin:ethanol".into(),
            },
        },
        "dcm" => ApparatusPreset {
            name: "dcm".into(),
            exposure_s: 10.0,
            frames: 4,
            seed: 7002,
            pump: pump(2.0e5),
            crystal: crystal_1mm,
            bucket: BucketConfig::default(),
            spectrometer: SpectrometerConfig::with_grating(600, 810.0)?,
            coincidence: CoincidenceConfig::default(),
            jsi_grid: JsiGridSpec::default(),
            sample: SampleSpec::LiquidCuvette {
                path_length_cm: 4.0,
                passes: 1,
                round_trip_loss: 1.0,
                mu_csv: "builtin:dcm".into(),
            },
        },
        "acetylene" => ApparatusPreset {
            name: "acetylene".into(),
            exposure_s: 12.0,
            frames: 4,
            seed: 7003,
            pump: pump(2.5e5),
            crystal: CrystalConfig {
                thickness_mm: 3.0,
                cut_angle_rad: solve_angle(1530.0)?,
                material_id: "BBO".into(),
            },
            bucket: BucketConfig::default(),
            spectrometer: SpectrometerConfig::with_grating(1200, 816.0)?,
            coincidence: CoincidenceConfig::default(),
            jsi_grid: JsiGridSpec::default(),
            sample: SampleSpec::GasCell {
                path_length_cm: 100.0,
                passes: 2,
                round_trip_loss: 1.0,
                linelist: "builtin:acetylene".into(),
                // Cell at ~1160 hPa total; pure-absorber filling assumed.
                conditions: GasConditions {
                    temperature_k: 300.0,
                    pressure_total_atm: 1.1448,
                    self_fraction: 1.0,
                    molar_mass_amu: 26.037,
                },
            },
        },
        "co2" => ApparatusPreset {
            name: "co2".into(),
            exposure_s: 20.0,
            frames: 4,
            seed: 7004,
            pump: pump(7.0e5),
            crystal: crystal_1mm,
            bucket: BucketConfig::default(),
            spectrometer: SpectrometerConfig::with_grating(600, 810.0)?,
            coincidence: CoincidenceConfig::default(),
            jsi_grid: JsiGridSpec::default(),
            sample: SampleSpec::GasCell {
                path_length_cm: 100.0,
                passes: 2,
                round_trip_loss: 1.0,
                linelist: "builtin:co2".into(),
                // Cell at ~2200 hPa total.
                conditions: GasConditions {
                    temperature_k: 300.0,
                    pressure_total_atm: 2.1712,
                    self_fraction: 1.0,
                    molar_mass_amu: 43.9898,
                },
            },
        },
        "calibration" => ApparatusPreset {
            name: "calibration".into(),
            exposure_s: 10.0,
            frames: 2,
            seed: 7005,
            pump: pump(2.0e5),
            crystal: crystal_1mm,
            bucket: BucketConfig::default(),
            spectrometer: SpectrometerConfig::with_grating(600, 810.0)?,
            coincidence: CoincidenceConfig::default(),
            jsi_grid: JsiGridSpec::default(),
            sample: SampleSpec::CalibrationFilter {
                filter_csv: "builtin:filter".into(),
            },
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    preset.validate()?;
    Ok(preset)
}
