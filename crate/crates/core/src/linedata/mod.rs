//! Spectroscopic line databases and absorption-coefficient synthesis.
//!
//! Two input formats are supported: the fixed-width 160-character record
//! layout of line-by-line databases ([`par`]) and a small CSV schema for
//! hand-curated fixture lists. Profiles come out as mu(lambda) on a vacuum
//! wavelength grid in nm; wavenumber conversion (nu = 1e7 / lambda_nm)
//! happens internally.

pub mod par;
mod profile;

pub use profile::{absorption_profile, doppler_width, lorentz_width, voigt_value};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One spectroscopic transition.
///
/// Intensity is used at its 296 K reference value (the experiments sit at
/// ~300 K; the lower-state energy is kept so the temperature scaling can be
/// added later).
#[derive(Debug, Clone, PartialEq)]
pub struct LineRecord {
    pub molecule_id: u32,
    pub isotopologue_id: u32,
    /// Transition center, cm^-1.
    pub nu0_wavenumber: f64,
    /// Line intensity at 296 K, cm^-1 / (molecule cm^-2).
    pub intensity_s: f64,
    /// Einstein A coefficient, s^-1 (parsed, unused downstream).
    pub einstein_a: f64,
    /// Air-broadened HWHM, cm^-1/atm.
    pub gamma_air: f64,
    /// Self-broadened HWHM, cm^-1/atm.
    pub gamma_self: f64,
    /// Lower-state energy, cm^-1.
    pub lower_state_energy: f64,
    /// Temperature exponent of gamma_air.
    pub n_air: f64,
    /// Air pressure-induced line shift, cm^-1/atm.
    pub delta_air: f64,
    /// Columns 68-160 of a fixed-width record, preserved verbatim.
    pub opaque_tail: String,
    /// Original 160-character record when parsed from one.
    raw: Option<String>,
}

impl LineRecord {
    /// Record built from field values (CSV rows, synthetic fixtures).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        molecule_id: u32,
        isotopologue_id: u32,
        nu0_wavenumber: f64,
        intensity_s: f64,
        gamma_air: f64,
        gamma_self: f64,
        n_air: f64,
        lower_state_energy: f64,
        delta_air: f64,
    ) -> Result<Self> {
        let rec = LineRecord {
            molecule_id,
            isotopologue_id,
            nu0_wavenumber,
            intensity_s,
            einstein_a: 0.0,
            gamma_air,
            gamma_self,
            lower_state_energy,
            n_air,
            delta_air,
            opaque_tail: " ".repeat(93),
            raw: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu0_wavenumber > 0.0) {
            return Err(Error::domain(
                "LineRecord",
                format!("nu0 must be positive, got {}", self.nu0_wavenumber),
            ));
        }
        if self.intensity_s < 0.0 {
            return Err(Error::domain(
                "LineRecord",
                format!("intensity must be nonnegative, got {}", self.intensity_s),
            ));
        }
        if self.gamma_air < 0.0 || self.gamma_self < 0.0 {
            return Err(Error::domain(
                "LineRecord",
                "broadening coefficients must be nonnegative".to_string(),
            ));
        }
        Ok(())
    }

    /// Vacuum wavelength of the line center, nm.
    pub fn lambda_nm(&self) -> f64 {
        1e7 / self.nu0_wavenumber
    }

    pub(crate) fn set_raw(&mut self, raw: String) {
        self.raw = Some(raw);
    }

    pub(crate) fn raw(&self) -> Option<&str> {
        self.raw.as_deref()
    }
}

/// Thermodynamic state of the absorbing gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasConditions {
    pub temperature_k: f64,
    pub pressure_total_atm: f64,
    /// Partial-pressure fraction of the absorber, 0..=1.
    pub self_fraction: f64,
    pub molar_mass_amu: f64,
}

impl GasConditions {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k > 0.0) {
            return Err(Error::Config(format!(
                "temperature_k must be positive, got {}",
                self.temperature_k
            )));
        }
        if self.pressure_total_atm < 0.0 {
            return Err(Error::Config(format!(
                "pressure_total_atm must be nonnegative, got {}",
                self.pressure_total_atm
            )));
        }
        if !(0.0..=1.0).contains(&self.self_fraction) {
            return Err(Error::Config(format!(
                "self_fraction must lie in [0, 1], got {}",
                self.self_fraction
            )));
        }
        if !(self.molar_mass_amu > 0.0) {
            return Err(Error::Config(format!(
                "molar_mass_amu must be positive, got {}",
                self.molar_mass_amu
            )));
        }
        Ok(())
    }

    /// Absorber partial pressure, atm.
    pub fn partial_pressure_atm(&self) -> f64 {
        self.pressure_total_atm * self.self_fraction
    }
}

/// Absorption coefficient sampled on an ascending wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionProfile {
    pub grid_lambda_nm: Vec<f64>,
    pub mu_per_cm: Vec<f64>,
    pub conditions: Option<GasConditions>,
}

impl AbsorptionProfile {
    pub fn new(
        grid_lambda_nm: Vec<f64>,
        mu_per_cm: Vec<f64>,
        conditions: Option<GasConditions>,
    ) -> Result<Self> {
        if grid_lambda_nm.len() != mu_per_cm.len() {
            return Err(Error::Config(format!(
                "grid/mu length mismatch: {} vs {}",
                grid_lambda_nm.len(),
                mu_per_cm.len()
            )));
        }
        if grid_lambda_nm.is_empty() {
            return Err(Error::Config("absorption profile grid is empty".into()));
        }
        if !grid_lambda_nm.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "absorption profile grid must be strictly ascending".into(),
            ));
        }
        if mu_per_cm.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::Config(
                "absorption coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(AbsorptionProfile {
            grid_lambda_nm,
            mu_per_cm,
            conditions,
        })
    }

    /// Linear interpolation of mu at `lambda_nm`; `None` outside coverage.
    pub fn mu_at(&self, lambda_nm: f64) -> Option<f64> {
        let grid = &self.grid_lambda_nm;
        if lambda_nm < grid[0] || lambda_nm > *grid.last().unwrap() {
            return None;
        }
        let idx = grid.partition_point(|&g| g <= lambda_nm);
        if idx == 0 {
            return Some(self.mu_per_cm[0]);
        }
        if idx == grid.len() {
            return Some(*self.mu_per_cm.last().unwrap());
        }
        let (x0, x1) = (grid[idx - 1], grid[idx]);
        let (y0, y1) = (self.mu_per_cm[idx - 1], self.mu_per_cm[idx]);
        Some(y0 + (y1 - y0) * (lambda_nm - x0) / (x1 - x0))
    }

    /// Serialize as `lambda_nm,mu_per_cm` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_nm,mu_per_cm\n");
        for (l, m) in self.grid_lambda_nm.iter().zip(&self.mu_per_cm) {
            out.push_str(&format!("{l},{m}\n"));
        }
        out
    }

    /// Parse a `lambda_nm,mu_per_cm` CSV (comment lines start with '#').
    pub fn from_csv(text: &str) -> Result<Self> {
        let (lambda, mu) = parse_two_column_csv(text, "mu_per_cm")?;
        AbsorptionProfile::new(lambda, mu, None)
    }
}

/// Parse a two-column CSV `lambda_nm,<value_header>`, skipping comments.
pub(crate) fn parse_two_column_csv(
    text: &str,
    value_header: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lambda = Vec::new();
    let mut values = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            let expect = format!("lambda_nm,{value_header}");
            if line != expect {
                return Err(Error::Schema(format!(
                    "expected header '{expect}', got '{line}'"
                )));
            }
            saw_header = true;
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| Error::Format {
            line: Some(idx + 1),
            msg: format!("expected two comma-separated values, got '{line}'"),
        })?;
        let parse = |tok: &str| {
            tok.trim().parse::<f64>().map_err(|_| Error::Format {
                line: Some(idx + 1),
                msg: format!("not a number: '{tok}'"),
            })
        };
        lambda.push(parse(a)?);
        values.push(parse(b)?);
    }
    if !saw_header {
        return Err(Error::Schema("missing CSV header".into()));
    }
    if lambda.is_empty() {
        return Err(Error::Schema("CSV has a header but no data rows".into()));
    }
    Ok((lambda, values))
}

const CSV_HEADER: &str = "nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso";

/// Parse the CSV line-list fixture format. Rows come back sorted by nu0.
pub fn parse_csv_linelist(text: &str) -> Result<Vec<LineRecord>> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::Schema(format!(
                    "expected header '{CSV_HEADER}', got '{line}'"
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(Error::Schema(format!(
                "line {}: expected 9 columns, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let num = |i: usize, name: &'static str| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| Error::Format {
                line: Some(idx + 1),
                msg: format!("column {name}: not a number: '{}'", fields[i]),
            })
        };
        let int = |i: usize, name: &'static str| -> Result<u32> {
            fields[i].parse::<u32>().map_err(|_| Error::Format {
                line: Some(idx + 1),
                msg: format!("column {name}: not an integer: '{}'", fields[i]),
            })
        };
        records.push(LineRecord::new(
            int(7, "molecule")?,
            int(8, "iso")?,
            num(0, "nu0_cm")?,
            num(1, "S")?,
            num(2, "gamma_air")?,
            num(3, "gamma_self")?,
            num(4, "n_air")?,
            num(5, "E_lower")?,
            num(6, "delta_air")?,
        )?);
    }
    if !saw_header {
        return Err(Error::Schema("missing line-list header".into()));
    }
    if records.is_empty() {
        return Err(Error::Schema("line list has a header but no rows".into()));
    }
    records.sort_by(|a, b| a.nu0_wavenumber.total_cmp(&b.nu0_wavenumber));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROWS: &str = "\
# provenance comment
nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso
6550.0,1.0e-21,0.08,0.12,0.75,10.0,-0.002,26,1
6540.0,2.0e-21,0.08,0.12,0.75,20.0,-0.002,26,1
";

    #[test]
    fn csv_rows_sorted_by_nu0() {
        let recs = parse_csv_linelist(TWO_ROWS).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].nu0_wavenumber < recs[1].nu0_wavenumber);
        assert_eq!(recs[0].nu0_wavenumber, 6540.0);
    }

    #[test]
    fn csv_empty_body_is_schema_error() {
        let text = format!("{CSV_HEADER}\n");
        assert!(matches!(
            parse_csv_linelist(&text),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn csv_missing_column_is_schema_error() {
        let text = format!("{CSV_HEADER}\n6550.0,1e-21,0.08\n");
        assert!(matches!(parse_csv_linelist(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn csv_negative_intensity_rejected() {
        let text = format!("{CSV_HEADER}\n6550.0,-1e-21,0.08,0.12,0.75,10.0,0.0,26,1\n");
        assert!(parse_csv_linelist(&text).is_err());
    }

    #[test]
    fn profile_interpolation_and_coverage() {
        let p = AbsorptionProfile::new(vec![100.0, 200.0, 300.0], vec![0.0, 1.0, 0.0], None)
            .unwrap();
        assert_eq!(p.mu_at(150.0), Some(0.5));
        assert_eq!(p.mu_at(200.0), Some(1.0));
        assert_eq!(p.mu_at(99.0), None);
        assert_eq!(p.mu_at(301.0), None);
    }

    #[test]
    fn profile_csv_round_trip() {
        let p = AbsorptionProfile::new(
            vec![1500.25, 1500.5, 1500.75],
            vec![0.125, 0.25, 0.0625],
            None,
        )
        .unwrap();
        let csv = p.to_csv();
        let q = AbsorptionProfile::from_csv(&csv).unwrap();
        assert_eq!(p.grid_lambda_nm, q.grid_lambda_nm);
        assert_eq!(p.mu_per_cm, q.mu_per_cm);
    }

    #[test]
    fn profile_rejects_unsorted_grid() {
        assert!(AbsorptionProfile::new(vec![2.0, 1.0], vec![0.0, 0.0], None).is_err());
    }
}
