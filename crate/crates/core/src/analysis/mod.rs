//! From raw count images to calibrated spectra, transmittance/absorbance
//! with uncertainties, and alert decisions.

pub mod savgol;

pub use savgol::savgol_filter;

use crate::detection::CountImage;
use crate::error::{Error, Result};
use crate::linedata::AbsorptionProfile;
use crate::source::conjugate_wavelength;

/// What a spectrum's values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Counts,
    Transmittance,
    Absorbance,
}

impl SpectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::Counts => "counts",
            SpectrumKind::Transmittance => "transmittance",
            SpectrumKind::Absorbance => "absorbance",
        }
    }
}

/// Which photon the wavelength axis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisLabel {
    /// Directly measured signal-arm wavelengths.
    Signal,
    /// Axis relabeled to the conjugate idler wavelengths.
    IdlerConjugate,
}

impl AxisLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisLabel::Signal => "signal",
            AxisLabel::IdlerConjugate => "idler-conjugate",
        }
    }
}

/// 1D spectrum with per-bin 1-sigma uncertainties and a mask.
///
/// Transmittance above 1 is reported as-is (noise can push it there); the
/// mask marks bins without usable information, never out-of-range values.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambda_nm: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: Vec<f64>,
    pub masked: Vec<bool>,
    pub kind: SpectrumKind,
    pub axis: AxisLabel,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.lambda_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_nm.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda_nm.len();
        if self.values.len() != n || self.sigma.len() != n || self.masked.len() != n {
            return Err(Error::Config("spectrum column lengths differ".into()));
        }
        if self.sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::Config("sigma must be nonnegative".into()));
        }
        Ok(())
    }

    /// Serialize as `lambda_nm,value,sigma,masked` CSV with a kind header.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# kind = {}\n# axis = {}\nlambda_nm,value,sigma,masked\n",
            self.kind.as_str(),
            self.axis.as_str()
        );
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.lambda_nm[i],
                self.values[i],
                self.sigma[i],
                u8::from(self.masked[i])
            ));
        }
        out
    }
}

/// Sum camera counts over the spatial axis: values[x] = sum_y counts[y][x],
/// sigma[x] = sqrt(values[x]) (Poisson).
pub fn vertical_bin(image: &CountImage) -> Result<Spectrum> {
    image.validate()?;
    let sums = image.column_sums();
    let values: Vec<f64> = sums.iter().map(|&c| c as f64).collect();
    let sigma: Vec<f64> = values.iter().map(|&v| v.sqrt()).collect();
    Ok(Spectrum {
        lambda_nm: image.wavelength_axis_nm.clone(),
        masked: vec![false; values.len()],
        values,
        sigma,
        kind: SpectrumKind::Counts,
        axis: AxisLabel::Signal,
    })
}

/// Smooth a spectrum's values with a Savitzky-Golay filter. Uncertainties
/// and mask carry over unchanged (the per-bin Poisson sigma stays the
/// conservative error estimate for the smoothed value).
pub fn savgol_smooth(spectrum: &Spectrum, window_bins: usize, poly_order: usize) -> Result<Spectrum> {
    spectrum.validate()?;
    let values = savgol::savgol_filter(&spectrum.values, window_bins, poly_order)?;
    Ok(Spectrum {
        values,
        ..spectrum.clone()
    })
}

/// Bin-wise transmittance T = I/I0 with error propagation
/// sigma_T = T sqrt(1/I + 1/I0); zero-count blank bins are masked.
pub fn transmittance(sample_spec: &Spectrum, blank_spec: &Spectrum) -> Result<Spectrum> {
    sample_spec.validate()?;
    blank_spec.validate()?;
    if sample_spec.lambda_nm != blank_spec.lambda_nm {
        return Err(Error::Config(
            "sample and blank spectra have different wavelength axes".into(),
        ));
    }
    if sample_spec.axis != blank_spec.axis {
        return Err(Error::Config("sample and blank axis labels differ".into()));
    }
    let n = sample_spec.len();
    let mut values = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut masked = vec![false; n];
    let mut any_unmasked = false;
    for i in 0..n {
        let i1 = sample_spec.values[i];
        let i0 = blank_spec.values[i];
        if sample_spec.masked[i] || blank_spec.masked[i] || i0 <= 0.0 {
            masked[i] = true;
            continue;
        }
        let t = i1 / i0;
        values[i] = t;
        // sqrt(n) Poisson sigma with an n >= 1 floor on the sample side so
        // zero-count sample bins still carry a finite uncertainty.
        let i1_floor = i1.max(1.0);
        sigma[i] = (i1_floor + i1 * i1 / i0).sqrt() / i0;
        any_unmasked = true;
    }
    if !any_unmasked {
        return Err(Error::Config(
            "transmittance is fully masked: no usable overlap between sample and blank".into(),
        ));
    }
    Ok(Spectrum {
        lambda_nm: sample_spec.lambda_nm.clone(),
        values,
        sigma,
        masked,
        kind: SpectrumKind::Transmittance,
        axis: sample_spec.axis,
    })
}

/// A = -ln(T), sigma_A = sigma_T / T; nonpositive T bins are masked.
pub fn absorbance(t_spec: &Spectrum) -> Result<Spectrum> {
    t_spec.validate()?;
    if t_spec.kind != SpectrumKind::Transmittance {
        return Err(Error::Config("absorbance needs a transmittance input".into()));
    }
    let n = t_spec.len();
    let mut values = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut masked = t_spec.masked.clone();
    for i in 0..n {
        if masked[i] {
            continue;
        }
        let t = t_spec.values[i];
        if t <= 0.0 {
            masked[i] = true;
            continue;
        }
        values[i] = -t.ln();
        sigma[i] = t_spec.sigma[i] / t;
    }
    Ok(Spectrum {
        lambda_nm: t_spec.lambda_nm.clone(),
        values,
        sigma,
        masked,
        kind: SpectrumKind::Absorbance,
        axis: t_spec.axis,
    })
}

/// Relabel a signal-axis spectrum onto the conjugate idler axis and reverse
/// the ordering so the axis stays ascending. Involutive up to 1e-9 nm.
pub fn conjugate_axis(spectrum: &Spectrum, lambda_p_nm: f64) -> Result<Spectrum> {
    spectrum.validate()?;
    let mut lambda: Vec<f64> = Vec::with_capacity(spectrum.len());
    for &l in &spectrum.lambda_nm {
        lambda.push(conjugate_wavelength(lambda_p_nm, l)?);
    }
    lambda.reverse();
    let mut values = spectrum.values.clone();
    let mut sigma = spectrum.sigma.clone();
    let mut masked = spectrum.masked.clone();
    values.reverse();
    sigma.reverse();
    masked.reverse();
    Ok(Spectrum {
        lambda_nm: lambda,
        values,
        sigma,
        masked,
        kind: spectrum.kind,
        axis: match spectrum.axis {
            AxisLabel::Signal => AxisLabel::IdlerConjugate,
            AxisLabel::IdlerConjugate => AxisLabel::Signal,
        },
    })
}

/// One contiguous run of significant absorbance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertBand {
    pub lambda_lo_nm: f64,
    pub lambda_hi_nm: f64,
    pub mean_absorbance: f64,
    /// Peak significance A/sigma_A inside the band.
    pub z_score: f64,
    pub bins: usize,
}

/// Outcome of the feature scan.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertReport {
    pub bands: Vec<AlertBand>,
    pub triggered: bool,
    pub threshold_z: f64,
    pub min_band_bins: usize,
}

impl AlertReport {
    /// Structured-text rendering (one `band:` line per interval).
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# ghost alert report v1\nthreshold_z = {}\nmin_band_bins = {}\ntriggered = {}\n\
             # band: lambda_lo_nm lambda_hi_nm mean_absorbance z_score bins\n",
            self.threshold_z, self.min_band_bins, self.triggered
        );
        for b in &self.bands {
            out.push_str(&format!(
                "band: {} {} {} {} {}\n",
                b.lambda_lo_nm, b.lambda_hi_nm, b.mean_absorbance, b.z_score, b.bins
            ));
        }
        out
    }
}

/// Scan an absorbance spectrum for maximal runs of at least `min_band_bins`
/// consecutive unmasked bins with A/sigma_A > threshold_z.
pub fn detect_features(
    absorbance_spec: &Spectrum,
    threshold_z: f64,
    min_band_bins: usize,
) -> Result<AlertReport> {
    absorbance_spec.validate()?;
    if absorbance_spec.kind != SpectrumKind::Absorbance {
        return Err(Error::Config("feature detection needs an absorbance spectrum".into()));
    }
    if min_band_bins == 0 {
        return Err(Error::Parameter("min_band_bins must be at least 1".into()));
    }
    let n = absorbance_spec.len();
    let significant = |i: usize| -> bool {
        if absorbance_spec.masked[i] {
            return false;
        }
        let s = absorbance_spec.sigma[i];
        s > 0.0 && absorbance_spec.values[i] / s > threshold_z
    };

    let mut bands = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=n {
        let on = i < n && significant(i);
        match (start, on) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                let len = i - s;
                if len >= min_band_bins {
                    let slice = s..i;
                    let mean_a = slice.clone().map(|j| absorbance_spec.values[j]).sum::<f64>()
                        / len as f64;
                    let z = slice
                        .clone()
                        .map(|j| absorbance_spec.values[j] / absorbance_spec.sigma[j])
                        .fold(f64::MIN, f64::max);
                    bands.push(AlertBand {
                        lambda_lo_nm: absorbance_spec.lambda_nm[s],
                        lambda_hi_nm: absorbance_spec.lambda_nm[i - 1],
                        mean_absorbance: mean_a,
                        z_score: z,
                        bins: len,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    Ok(AlertReport {
        triggered: !bands.is_empty(),
        bands,
        threshold_z,
        min_band_bins,
    })
}

/// Pearson correlation between a measured absorbance spectrum and a
/// reference mu(lambda) profile scaled by the path length, after convolving
/// the reference with a Gaussian instrument kernel and resampling it onto
/// the measured axis. Masked bins and bins outside the reference coverage
/// are excluded.
pub fn compare_reference(
    measured_absorbance: &Spectrum,
    reference_mu: &AbsorptionProfile,
    path_cm: f64,
    instrument_fwhm_nm: f64,
) -> Result<f64> {
    measured_absorbance.validate()?;
    if !(path_cm > 0.0) {
        return Err(Error::domain("compare_reference", "path length must be positive"));
    }
    if instrument_fwhm_nm < 0.0 {
        return Err(Error::domain("compare_reference", "kernel width must be nonnegative"));
    }

    let ref_lambda = &reference_mu.grid_lambda_nm;
    let ref_a: Vec<f64> = reference_mu.mu_per_cm.iter().map(|&m| m * path_cm).collect();
    let sigma = instrument_fwhm_nm / (8.0f64.ln()).sqrt();

    // Gaussian smoothing on the (possibly non-uniform) reference grid via
    // normalized kernel weights, then linear resampling to the measured axis.
    let smoothed_at = |x: f64| -> f64 {
        if sigma == 0.0 {
            // degenerate kernel: plain linear interpolation
            return interp(ref_lambda, &ref_a, x);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &l) in ref_lambda.iter().enumerate() {
            let d = (l - x) / sigma;
            if d.abs() > 6.0 {
                continue;
            }
            // trapezoid-style weight from local grid spacing
            let left = if i > 0 { ref_lambda[i] - ref_lambda[i - 1] } else { 0.0 };
            let right = if i + 1 < ref_lambda.len() {
                ref_lambda[i + 1] - ref_lambda[i]
            } else {
                0.0
            };
            let w = (-0.5 * d * d).exp() * 0.5 * (left + right).max(f64::MIN_POSITIVE);
            num += w * ref_a[i];
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    };

    let (lo, hi) = (ref_lambda[0], *ref_lambda.last().unwrap());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..measured_absorbance.len() {
        let l = measured_absorbance.lambda_nm[i];
        if measured_absorbance.masked[i] || l < lo || l > hi {
            continue;
        }
        let r = smoothed_at(l);
        if r.is_nan() {
            continue;
        }
        xs.push(measured_absorbance.values[i]);
        ys.push(r);
    }
    if xs.len() < 3 {
        return Err(Error::domain(
            "compare_reference",
            "no usable overlap between measured spectrum and reference coverage",
        ));
    }
    Ok(pearson(&xs, &ys))
}

fn interp(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let idx = grid.partition_point(|&g| g <= x);
    if idx == 0 {
        return values[0];
    }
    if idx == grid.len() {
        return *values.last().unwrap();
    }
    let (x0, x1) = (grid[idx - 1], grid[idx]);
    let (y0, y1) = (values[idx - 1], values[idx]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
