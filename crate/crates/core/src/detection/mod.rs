//! Detection chain: idler bucket detector (SPAD), signal-arm spectrometer
//! with gated intensified camera, and the delay-compensated coincidence gate.
//!
//! Timing convention: `bucket_time_ns` values are gate-opening timestamps,
//! i.e. the SPAD click after the trigger chain. A correctly tuned chain
//! delays the trigger by `fiber_delay_ns + fpga_delay_ns`, which the
//! acquisition loop applies when constructing gate times; the gate test then
//! compares the chain-delayed signal arrival against it.

pub mod image;

pub use image::CountImage;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Idler-arm single-photon avalanche diode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketConfig {
    /// Detection efficiency for the idler channel, 0..=1.
    pub efficiency_eta_i: f64,
    /// Free-running dark count rate, Hz.
    pub dark_rate_hz: f64,
    /// Laser-synchronized gate width, ns.
    pub gate_width_ns: f64,
    /// Dead time after an accepted click, ns.
    pub dead_time_ns: f64,
}

impl Default for BucketConfig {
    fn default() -> Self {
        BucketConfig {
            efficiency_eta_i: 0.25,
            dark_rate_hz: 1000.0,
            gate_width_ns: 5.0,
            dead_time_ns: 50.0,
        }
    }
}

impl BucketConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency_eta_i) {
            return Err(Error::Config(format!(
                "bucket.efficiency_eta_i must lie in [0, 1], got {}",
                self.efficiency_eta_i
            )));
        }
        for (name, v) in [
            ("bucket.dark_rate_hz", self.dark_rate_hz),
            ("bucket.dead_time_ns", self.dead_time_ns),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.gate_width_ns > 0.0) {
            return Err(Error::Config(format!(
                "bucket.gate_width_ns must be positive, got {}",
                self.gate_width_ns
            )));
        }
        Ok(())
    }

    /// Fraction of time the laser-synchronized gate is open.
    pub fn duty_cycle(&self, rep_rate_hz: f64) -> f64 {
        (self.gate_width_ns * 1e-9 * rep_rate_hz).min(1.0)
    }
}

/// Signal-arm spectrograph plus intensified camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrometerConfig {
    pub grating_lines_per_mm: u32,
    pub lambda_center_nm: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub dispersion_nm_per_pixel: f64,
    /// Optical blur FWHM, nm.
    pub resolution_fwhm_nm: f64,
    pub camera_qe: f64,
    /// Effective in-gate dark rate per pixel, Hz.
    pub camera_dark_rate_hz_per_pixel: f64,
}

impl SpectrometerConfig {
    /// Preset dispersion per grating: 600 l/mm -> 0.12 nm/px, 1200 -> 0.06.
    pub fn dispersion_preset(grating_lines_per_mm: u32) -> Result<f64> {
        match grating_lines_per_mm {
            600 => Ok(0.12),
            1200 => Ok(0.06),
            other => Err(Error::Config(format!(
                "no dispersion preset for {other} lines/mm (600 and 1200 available)"
            ))),
        }
    }

    /// Standard configuration for one of the two installed gratings.
    pub fn with_grating(grating_lines_per_mm: u32, lambda_center_nm: f64) -> Result<Self> {
        let dispersion = Self::dispersion_preset(grating_lines_per_mm)?;
        Ok(SpectrometerConfig {
            grating_lines_per_mm,
            lambda_center_nm,
            pixels_x: 1024,
            pixels_y: 256,
            dispersion_nm_per_pixel: dispersion,
            resolution_fwhm_nm: 3.0 * dispersion,
            camera_qe: 0.3,
            camera_dark_rate_hz_per_pixel: 0.02,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dispersion_nm_per_pixel > 0.0) {
            return Err(Error::Config(format!(
                "spectrometer.dispersion_nm_per_pixel must be positive, got {}",
                self.dispersion_nm_per_pixel
            )));
        }
        // Zero disables the blur model; positive blur cannot resolve below
        // one pixel.
        if self.resolution_fwhm_nm > 0.0 && self.resolution_fwhm_nm < self.dispersion_nm_per_pixel
        {
            return Err(Error::Config(format!(
                "spectrometer.resolution_fwhm_nm ({}) cannot resolve below one pixel ({})",
                self.resolution_fwhm_nm, self.dispersion_nm_per_pixel
            )));
        }
        if self.resolution_fwhm_nm < 0.0 {
            return Err(Error::Config("resolution_fwhm_nm must be nonnegative".into()));
        }
        if self.pixels_x == 0 || self.pixels_y == 0 {
            return Err(Error::Config("spectrometer needs a nonempty chip".into()));
        }
        if !(0.0..=1.0).contains(&self.camera_qe) {
            return Err(Error::Config(format!(
                "spectrometer.camera_qe must lie in [0, 1], got {}",
                self.camera_qe
            )));
        }
        if self.camera_dark_rate_hz_per_pixel < 0.0 {
            return Err(Error::Config("camera dark rate must be nonnegative".into()));
        }
        Ok(())
    }

    /// Short-wavelength edge of the chip.
    pub fn lambda_min_nm(&self) -> f64 {
        self.lambda_center_nm - self.dispersion_nm_per_pixel * self.pixels_x as f64 / 2.0
    }

    /// Wavelength of a pixel center; inverse of [`pixel_of_wavelength`].
    pub fn wavelength_axis(&self) -> Vec<f64> {
        (0..self.pixels_x)
            .map(|x| self.lambda_min_nm() + x as f64 * self.dispersion_nm_per_pixel)
            .collect()
    }
}

/// Linear-dispersion pixel map: x = round((lambda - lambda_min)/dispersion);
/// `None` when the wavelength lands off-chip.
pub fn pixel_of_wavelength(lambda_nm: f64, spec: &SpectrometerConfig) -> Option<usize> {
    let x = ((lambda_nm - spec.lambda_min_nm()) / spec.dispersion_nm_per_pixel).round();
    if x < 0.0 || x >= spec.pixels_x as f64 {
        None
    } else {
        Some(x as usize)
    }
}

/// Delay compensation and gate geometry for the coincidence test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoincidenceConfig {
    /// Optical delay line on the signal arm, ns.
    pub fiber_delay_ns: f64,
    /// Fine electronic delay, ns.
    pub fpga_delay_ns: f64,
    /// Full acceptance window, ns.
    pub gate_width_ns: f64,
    /// Gaussian timing jitter sigma, ns.
    pub jitter_sigma_ns: f64,
}

impl Default for CoincidenceConfig {
    fn default() -> Self {
        CoincidenceConfig {
            fiber_delay_ns: 60.0,
            fpga_delay_ns: 2.0,
            gate_width_ns: 5.0,
            jitter_sigma_ns: 0.3,
        }
    }
}

impl CoincidenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_width_ns > 0.0) {
            return Err(Error::Config(format!(
                "coincidence.gate_width_ns must be positive, got {}",
                self.gate_width_ns
            )));
        }
        if self.fiber_delay_ns < 0.0 || self.fpga_delay_ns < 0.0 || self.jitter_sigma_ns < 0.0 {
            return Err(Error::Config(
                "coincidence delays and jitter must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Total trigger-chain delay applied to gate-opening timestamps.
    pub fn chain_delay_ns(&self) -> f64 {
        self.fiber_delay_ns + self.fpga_delay_ns
    }
}

/// Per-event SPAD response within one laser-synchronized gate.
///
/// A present photon is detected with probability eta_i; independently, a
/// dark count can fire inside the gate around the arrival slot. The earlier
/// click wins and suppresses the other within the dead time. Exposure-long
/// dark generation between photons goes through [`dark_count_times`].
pub fn spad_detect<R: Rng + ?Sized>(
    idler_arrival_ns: Option<f64>,
    bucket: &BucketConfig,
    rng: &mut R,
) -> Option<f64> {
    let gate = bucket.gate_width_ns;
    let p_dark_in_gate = bucket.dark_rate_hz * gate * 1e-9;

    let real = idler_arrival_ns.filter(|_| rng.gen::<f64>() < bucket.efficiency_eta_i);
    let dark = if rng.gen::<f64>() < p_dark_in_gate {
        let base = idler_arrival_ns.unwrap_or(0.0);
        Some(base + (rng.gen::<f64>() - 0.5) * gate)
    } else {
        None
    };

    match (real, dark) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    }
}

/// Dark-count click times over an exposure, as a Poisson stream at the
/// gated-duty-cycle effective rate (free darks register only while the
/// laser-synchronized gate is open).
pub fn dark_count_times<R: Rng + ?Sized>(
    bucket: &BucketConfig,
    rep_rate_hz: f64,
    exposure_s: f64,
    rng: &mut R,
) -> Vec<f64> {
    let rate = bucket.dark_rate_hz * bucket.duty_cycle(rep_rate_hz);
    let mean = rate * exposure_s;
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut times: Vec<f64> = (0..n)
        .map(|_| rng.gen::<f64>() * exposure_s * 1e9)
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Suppress clicks falling within `dead_time_ns` after an accepted click.
/// Input must be sorted ascending.
pub fn apply_dead_time(times: &[f64], dead_time_ns: f64) -> Vec<f64> {
    let mut accepted: Vec<f64> = Vec::with_capacity(times.len());
    for &t in times {
        match accepted.last() {
            Some(&prev) if t - prev < dead_time_ns => {}
            _ => accepted.push(t),
        }
    }
    accepted
}

/// Coincidence test: the chain-delayed signal arrival falls inside the gate
/// opened at `bucket_time_ns`, with Gaussian timing jitter. Deterministic
/// when `jitter_sigma_ns` is zero.
pub fn coincidence_gate<R: Rng + ?Sized>(
    bucket_time_ns: f64,
    signal_time_ns: f64,
    coinc: &CoincidenceConfig,
    rng: &mut R,
) -> bool {
    let jitter = if coinc.jitter_sigma_ns > 0.0 {
        Normal::new(0.0, coinc.jitter_sigma_ns)
            .expect("validated sigma")
            .sample(rng)
    } else {
        0.0
    };
    let offset = signal_time_ns + coinc.chain_delay_ns() - bucket_time_ns + jitter;
    offset.abs() <= coinc.gate_width_ns / 2.0
}

/// Quantum SNR advantage of coincidence gating over direct detection:
/// eta_i / (N_i * delta_t).
pub fn snr_ratio(eta_i: f64, noise_rate_hz: f64, window_s: f64) -> Result<f64> {
    if !(noise_rate_hz > 0.0) {
        return Err(Error::domain(
            "snr_ratio",
            format!("noise rate must be positive, got {noise_rate_hz}"),
        ));
    }
    if !(window_s > 0.0) {
        return Err(Error::domain(
            "snr_ratio",
            format!("coincidence window must be positive, got {window_s}"),
        ));
    }
    Ok(eta_i / (noise_rate_hz * window_s))
}

/// Gaussian vertical beam profile on the chip: sigma in pixels, centered.
pub const BEAM_SIGMA_Y_PIXELS: f64 = 10.0;

/// Accumulate gated signal photons into a count image.
///
/// Each photon: detected with `camera_qe`, blurred in wavelength by the
/// optical resolution, binned to its spectral pixel, and spread vertically
/// with the fixed Gaussian beam profile. Camera dark counts are Poisson per
/// pixel at the configured effective rate over `exposure_s * frames`.
pub fn accumulate_image<R: Rng + ?Sized>(
    gated_signal_nm: &[f64],
    spec: &SpectrometerConfig,
    exposure_s: f64,
    frames: u32,
    rng: &mut R,
) -> Result<CountImage> {
    spec.validate()?;
    if !(exposure_s > 0.0) || frames == 0 {
        return Err(Error::Config(
            "exposure must be positive and frames at least 1".into(),
        ));
    }
    let mut counts = vec![0u64; spec.pixels_x * spec.pixels_y];
    let blur_sigma = spec.resolution_fwhm_nm / (8.0f64.ln()).sqrt();
    let y_center = (spec.pixels_y as f64 - 1.0) / 2.0;

    for &lambda in gated_signal_nm {
        if rng.gen::<f64>() >= spec.camera_qe {
            continue;
        }
        let blurred = if blur_sigma > 0.0 {
            let n: f64 = Normal::new(0.0, blur_sigma).expect("sigma > 0").sample(rng);
            lambda + n
        } else {
            lambda
        };
        let Some(x) = pixel_of_wavelength(blurred, spec) else {
            continue;
        };
        let y_f: f64 = Normal::new(y_center, BEAM_SIGMA_Y_PIXELS)
            .expect("fixed sigma")
            .sample(rng);
        let y = y_f.round().clamp(0.0, spec.pixels_y as f64 - 1.0) as usize;
        counts[y * spec.pixels_x + x] += 1;
    }

    let dark_mean = spec.camera_dark_rate_hz_per_pixel * exposure_s * f64::from(frames);
    if dark_mean > 0.0 {
        let poisson = Poisson::new(dark_mean).expect("positive mean");
        for c in counts.iter_mut() {
            *c += poisson.sample(rng) as u64;
        }
    }

    Ok(CountImage {
        counts,
        pixels_x: spec.pixels_x,
        pixels_y: spec.pixels_y,
        exposure_s,
        frames,
        wavelength_axis_nm: spec.wavelength_axis(),
        spectrometer: spec.clone(),
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn spec600() -> SpectrometerConfig {
        SpectrometerConfig::with_grating(600, 810.0).unwrap()
    }

    #[test]
    fn spad_perfect_efficiency_detects_at_arrival() {
        let bucket = BucketConfig {
            efficiency_eta_i: 1.0,
            dark_rate_hz: 0.0,
            ..BucketConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(spad_detect(Some(123.5), &bucket, &mut rng), Some(123.5));
    }

    #[test]
    fn spad_zero_efficiency_never_clicks() {
        let bucket = BucketConfig {
            efficiency_eta_i: 0.0,
            dark_rate_hz: 0.0,
            ..BucketConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert_eq!(spad_detect(Some(1.0), &bucket, &mut rng), None);
            assert_eq!(spad_detect(None, &bucket, &mut rng), None);
        }
    }

    #[test]
    fn dark_stream_matches_poisson_oracle() {
        // 1000 Hz free dark rate, gate covering the full pulse period
        // (25 ns at 40 MHz -> duty 1), 3600 s: mean 3.6e6 counts.
        let bucket = BucketConfig {
            efficiency_eta_i: 1.0,
            dark_rate_hz: 1000.0,
            gate_width_ns: 25.0,
            dead_time_ns: 0.0,
        };
        assert!((bucket.duty_cycle(4.0e7) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let times = dark_count_times(&bucket, 4.0e7, 3600.0, &mut rng);
        let n = times.len() as f64;
        let mean = 3.6e6;
        assert!(
            (n - mean).abs() < 3.0 * mean.sqrt(),
            "dark count {n} vs {mean}"
        );
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn duty_cycle_scales_dark_rate() {
        // Narrow gate: 5 ns at 40 MHz -> duty 0.2.
        let bucket = BucketConfig {
            dark_rate_hz: 10_000.0,
            gate_width_ns: 5.0,
            ..BucketConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let times = dark_count_times(&bucket, 4.0e7, 100.0, &mut rng);
        let mean = 10_000.0 * 0.2 * 100.0;
        assert!((times.len() as f64 - mean).abs() < 4.0 * mean.sqrt());
    }

    #[test]
    fn dead_time_suppresses_close_clicks() {
        let times = vec![0.0, 10.0, 30.0, 100.0, 140.0, 141.0];
        assert_eq!(apply_dead_time(&times, 50.0), vec![0.0, 100.0]);
        assert_eq!(apply_dead_time(&times, 0.0), times);
    }

    #[test]
    fn pixel_map_center_and_edges() {
        let spec = spec600();
        assert_eq!(pixel_of_wavelength(810.0, &spec), Some(512));
        let lambda_min = spec.lambda_min_nm();
        assert_eq!(pixel_of_wavelength(lambda_min - 1.0, &spec), None);
        assert_eq!(pixel_of_wavelength(lambda_min, &spec), Some(0));
        // axis is the inverse map
        for (x, &l) in spec.wavelength_axis().iter().enumerate().step_by(97) {
            assert_eq!(pixel_of_wavelength(l, &spec), Some(x));
        }
    }

    #[test]
    fn grating_preset_halves_dispersion() {
        assert_eq!(
            SpectrometerConfig::dispersion_preset(1200).unwrap(),
            SpectrometerConfig::dispersion_preset(600).unwrap() / 2.0
        );
        assert!(SpectrometerConfig::dispersion_preset(300).is_err());
    }

    #[test]
    fn gate_is_deterministic_without_jitter() {
        let coinc = CoincidenceConfig {
            fiber_delay_ns: 60.0,
            fpga_delay_ns: 2.0,
            gate_width_ns: 5.0,
            jitter_sigma_ns: 0.0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        // Perfectly compensated: gate opened at click + chain delay.
        let t_click = 1000.0;
        let gate_time = t_click + coinc.chain_delay_ns();
        assert!(coincidence_gate(gate_time, t_click, &coinc, &mut rng));
        // Offset by one full gate width: outside.
        assert!(!coincidence_gate(
            gate_time + coinc.gate_width_ns,
            t_click,
            &coinc,
            &mut rng
        ));
    }

    #[test]
    fn gate_acceptance_matches_gaussian_cdf_oracle() {
        // Zero offset, jitter sigma = gate/2: acceptance is
        // P(|N(0, g/2)| <= g/2) = erf(1/sqrt(2)) = 0.6827 (Gaussian CDF).
        let coinc = CoincidenceConfig {
            fiber_delay_ns: 0.0,
            fpga_delay_ns: 0.0,
            gate_width_ns: 4.0,
            jitter_sigma_ns: 2.0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| coincidence_gate(0.0, 0.0, &coinc, &mut rng))
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.6826894921370859).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn image_columns_equal_event_histogram_when_ideal() {
        // qe = 1, no blur beyond a delta at pixel centers, no darks: the
        // column sums reproduce the per-wavelength histogram exactly.
        let mut spec = spec600();
        spec.camera_qe = 1.0;
        spec.camera_dark_rate_hz_per_pixel = 0.0;
        spec.resolution_fwhm_nm = 0.0; // explicit: no optical blur
        let axis = spec.wavelength_axis();
        let mut events = Vec::new();
        let mut expected = vec![0u64; spec.pixels_x];
        for (i, &l) in axis.iter().enumerate().step_by(11) {
            for _ in 0..(i % 7 + 1) {
                events.push(l);
                expected[i] += 1;
            }
        }
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let img = accumulate_image(&events, &spec, 1.0, 1, &mut rng).unwrap();
        let columns = img.column_sums();
        assert_eq!(columns, expected);
        assert_eq!(img.total_counts(), events.len() as u64);
    }

    #[test]
    fn dark_only_image_is_poisson_per_pixel() {
        let mut spec = spec600();
        spec.pixels_x = 64;
        spec.pixels_y = 16;
        spec.camera_dark_rate_hz_per_pixel = 5.0;
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let img = accumulate_image(&[], &spec, 2.0, 1, &mut rng).unwrap();
        let mean_expected = 10.0;
        let n = (spec.pixels_x * spec.pixels_y) as f64;
        let total_mean = img.total_counts() as f64 / n;
        assert!((total_mean - mean_expected).abs() < 4.0 * (mean_expected / n).sqrt());
        // chi-square over pixels against the Poisson mean
        let chi2: f64 = img
            .counts
            .iter()
            .map(|&c| {
                let d = c as f64 - mean_expected;
                d * d / mean_expected
            })
            .sum();
        // dof ~ n; 4-sigma window on the chi-square statistic
        assert!(
            (chi2 - n).abs() < 4.0 * (2.0 * n).sqrt(),
            "chi2 {chi2} for {n} pixels"
        );
    }

    #[test]
    fn doubling_frames_doubles_dark_totals() {
        let mut spec = spec600();
        spec.pixels_x = 128;
        spec.pixels_y = 32;
        spec.camera_dark_rate_hz_per_pixel = 2.0;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let one = accumulate_image(&[], &spec, 1.0, 1, &mut rng).unwrap();
        let two = accumulate_image(&[], &spec, 1.0, 2, &mut rng).unwrap();
        let (a, b) = (one.total_counts() as f64, two.total_counts() as f64);
        assert!((b / a - 2.0).abs() < 0.15, "ratio {}", b / a);
    }

    #[test]
    fn snr_ratio_formula() {
        let r = snr_ratio(0.2, 1000.0, 1e-9).unwrap();
        assert!((r - 2e5).abs() < 1e-9 * 2e5, "got {r}");
        assert_eq!(snr_ratio(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(snr_ratio(0.5, 1000.0, 0.0).is_err());
        assert!(snr_ratio(0.5, 0.0, 1e-9).is_err());
        // invariant under N -> cN, dt -> dt/c
        let a = snr_ratio(0.3, 500.0, 2e-9).unwrap();
        let b = snr_ratio(0.3, 5000.0, 2e-10).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }
}
