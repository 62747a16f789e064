//! Lambert-Beer transmission of the idler arm.
//!
//! Samples are either absorbing media described by mu(lambda) with a path
//! length and pass count (liquid cuvette or gas cell), a calibration filter
//! described directly by a tabulated transmittance curve, or a blank. The
//! double pass is pure path-length doubling plus an optional fixed
//! round-trip loss factor.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linedata::{parse_two_column_csv, AbsorptionProfile};
use crate::source::PhotonPairEvent;

/// Tabulated transmittance for the calibration interference filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCurve {
    pub lambda_nm: Vec<f64>,
    pub transmittance: Vec<f64>,
}

impl FilterCurve {
    pub fn new(lambda_nm: Vec<f64>, transmittance: Vec<f64>) -> Result<Self> {
        if lambda_nm.len() != transmittance.len() || lambda_nm.is_empty() {
            return Err(Error::Config("filter curve needs matching nonempty columns".into()));
        }
        if !lambda_nm.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("filter curve grid must be strictly ascending".into()));
        }
        if transmittance.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Config("filter transmittance must lie in [0, 1]".into()));
        }
        Ok(FilterCurve {
            lambda_nm,
            transmittance,
        })
    }

    /// Parse a `lambda_nm,T` CSV (comment lines start with '#').
    pub fn from_csv(text: &str) -> Result<Self> {
        let (lambda, t) = parse_two_column_csv(text, "T")?;
        FilterCurve::new(lambda, t)
    }

    /// Linear interpolation between tabulated points; `None` off the table.
    pub fn t_at(&self, lambda_nm: f64) -> Option<f64> {
        let grid = &self.lambda_nm;
        if lambda_nm < grid[0] || lambda_nm > *grid.last().unwrap() {
            return None;
        }
        let idx = grid.partition_point(|&g| g <= lambda_nm);
        if idx == 0 {
            return Some(self.transmittance[0]);
        }
        if idx == grid.len() {
            return Some(*self.transmittance.last().unwrap());
        }
        let (x0, x1) = (grid[idx - 1], grid[idx]);
        let (y0, y1) = (self.transmittance[idx - 1], self.transmittance[idx]);
        Some(y0 + (y1 - y0) * (lambda_nm - x0) / (x1 - x0))
    }
}

/// What sits in the idler beam.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleConfig {
    /// Nothing; T = 1 everywhere. The blank reference acquisition.
    Blank,
    /// Liquid cuvette with a tabulated mu(lambda) curve.
    LiquidCuvette {
        path_length_cm: f64,
        passes: u8,
        round_trip_loss: f64,
        profile: AbsorptionProfile,
    },
    /// Gas cell with a synthesized (or loaded) mu(lambda) profile.
    GasCell {
        path_length_cm: f64,
        passes: u8,
        round_trip_loss: f64,
        profile: AbsorptionProfile,
    },
    /// Calibration interference filter with a tabulated T curve.
    CalibrationFilter { curve: FilterCurve },
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            SampleConfig::Blank | SampleConfig::CalibrationFilter { .. } => Ok(()),
            SampleConfig::LiquidCuvette {
                path_length_cm,
                passes,
                round_trip_loss,
                ..
            }
            | SampleConfig::GasCell {
                path_length_cm,
                passes,
                round_trip_loss,
                ..
            } => {
                if !(*path_length_cm > 0.0) {
                    return Err(Error::Config(format!(
                        "sample.path_length_cm must be positive, got {path_length_cm}"
                    )));
                }
                if !matches!(passes, 1 | 2) {
                    return Err(Error::Config(format!(
                        "sample.passes must be 1 or 2, got {passes}"
                    )));
                }
                if !(0.0..=1.0).contains(round_trip_loss) {
                    return Err(Error::Config(format!(
                        "sample.round_trip_loss must lie in [0, 1], got {round_trip_loss}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Transmittance at one wavelength. The boolean is false when the
    /// wavelength fell outside the sample data coverage (T defaults to 1).
    pub fn transmittance_at(&self, lambda_nm: f64) -> (f64, bool) {
        match self {
            SampleConfig::Blank => (1.0, true),
            SampleConfig::CalibrationFilter { curve } => match curve.t_at(lambda_nm) {
                Some(t) => (t, true),
                None => (1.0, false),
            },
            SampleConfig::LiquidCuvette {
                path_length_cm,
                passes,
                round_trip_loss,
                profile,
            }
            | SampleConfig::GasCell {
                path_length_cm,
                passes,
                round_trip_loss,
                profile,
            } => match profile.mu_at(lambda_nm) {
                Some(mu) => {
                    let eff_len = path_length_cm * f64::from(*passes);
                    let loss = if *passes == 2 { *round_trip_loss } else { 1.0 };
                    ((-mu * eff_len).exp() * loss, true)
                }
                None => (1.0, false),
            },
        }
    }
}

/// Per-bin transmittance over a grid, with the out-of-coverage tally.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceProfile {
    pub lambda_nm: Vec<f64>,
    pub transmittance: Vec<f64>,
    /// Bins that fell outside the sample data and defaulted to T = 1.
    pub out_of_coverage: usize,
}

/// Evaluate T(lambda) = exp(-mu * path * passes) bin-wise on a grid.
pub fn transmittance_profile(sample: &SampleConfig, grid_lambda_nm: &[f64]) -> Result<TransmittanceProfile> {
    sample.validate()?;
    let mut t = Vec::with_capacity(grid_lambda_nm.len());
    let mut misses = 0usize;
    for &lambda in grid_lambda_nm {
        let (ti, covered) = sample.transmittance_at(lambda);
        if !covered {
            misses += 1;
        }
        t.push(ti);
    }
    Ok(TransmittanceProfile {
        lambda_nm: grid_lambda_nm.to_vec(),
        transmittance: t,
        out_of_coverage: misses,
    })
}

/// Bernoulli thinning of the idler: the photon survives the sample with
/// probability T(lambda_i). Always consumes exactly one draw, so blank and
/// sample runs stay stream-aligned under a shared seed.
pub fn apply_sample<R: Rng + ?Sized>(
    event: &PhotonPairEvent,
    sample: &SampleConfig,
    rng: &mut R,
) -> bool {
    let (t, _) = sample.transmittance_at(event.lambda_i_nm);
    rng.gen::<f64>() < t
}
