//! Count images and their on-disk text format.
//!
//! An image persists as two files: `<stem>.counts.csv` (a `# key = value`
//! header carrying the config snapshot and seed, then row-major integer
//! counts) and `<stem>.axis.csv` (the wavelength axis, one value per line).
//! Floats are printed with the shortest round-trippable representation, so
//! save -> load -> save is byte-identical.

use std::path::Path;

use crate::detection::SpectrometerConfig;
use crate::error::{Error, Result};

const IMAGE_MAGIC: &str = "# ghost count image v1";
const AXIS_MAGIC: &str = "# ghost wavelength axis v1";

/// 2D photon-count array: `pixels_y` rows of `pixels_x` spectral columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CountImage {
    /// Row-major counts, length `pixels_x * pixels_y`.
    pub counts: Vec<u64>,
    pub pixels_x: usize,
    pub pixels_y: usize,
    /// Per-frame exposure, seconds.
    pub exposure_s: f64,
    pub frames: u32,
    /// Wavelength of each spectral column, nm; strictly ascending.
    pub wavelength_axis_nm: Vec<f64>,
    /// Config snapshot used to produce the image.
    pub spectrometer: SpectrometerConfig,
    pub seed: u64,
}

impl CountImage {
    pub fn at(&self, y: usize, x: usize) -> u64 {
        self.counts[y * self.pixels_x + x]
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Vertical sums per spectral column.
    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.pixels_x];
        for y in 0..self.pixels_y {
            let row = &self.counts[y * self.pixels_x..(y + 1) * self.pixels_x];
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }

    /// Integer merge of two partial images with identical geometry.
    pub fn merge(&mut self, other: &CountImage) -> Result<()> {
        if self.pixels_x != other.pixels_x
            || self.pixels_y != other.pixels_y
            || self.wavelength_axis_nm != other.wavelength_axis_nm
        {
            return Err(Error::Config(
                "cannot merge count images with different geometry".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.frames += other.frames;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.len() != self.pixels_x * self.pixels_y {
            return Err(Error::Config("count buffer does not match geometry".into()));
        }
        if self.wavelength_axis_nm.len() != self.pixels_x {
            return Err(Error::Config("wavelength axis does not match width".into()));
        }
        if !self.wavelength_axis_nm.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("wavelength axis must be strictly monotone".into()));
        }
        Ok(())
    }

    fn header(&self) -> String {
        let s = &self.spectrometer;
        format!(
            "{IMAGE_MAGIC}\n\
             # seed = {}\n\
             # exposure_s = {}\n\
             # frames = {}\n\
             # pixels_x = {}\n\
             # pixels_y = {}\n\
             # grating_lines_per_mm = {}\n\
             # lambda_center_nm = {}\n\
             # dispersion_nm_per_pixel = {}\n\
             # resolution_fwhm_nm = {}\n\
             # camera_qe = {}\n\
             # camera_dark_rate_hz_per_pixel = {}\n",
            self.seed,
            self.exposure_s,
            self.frames,
            self.pixels_x,
            self.pixels_y,
            s.grating_lines_per_mm,
            s.lambda_center_nm,
            s.dispersion_nm_per_pixel,
            s.resolution_fwhm_nm,
            s.camera_qe,
            s.camera_dark_rate_hz_per_pixel
        )
    }

    /// Serialize header plus row-major counts.
    pub fn to_counts_text(&self) -> String {
        let mut out = self.header();
        for y in 0..self.pixels_y {
            let row = &self.counts[y * self.pixels_x..(y + 1) * self.pixels_x];
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_axis_text(&self) -> String {
        let mut out = String::from(AXIS_MAGIC);
        out.push('\n');
        for l in &self.wavelength_axis_nm {
            out.push_str(&format!("{l}\n"));
        }
        out
    }

    pub fn from_texts(counts_text: &str, axis_text: &str) -> Result<Self> {
        let mut lines = counts_text.lines().enumerate().peekable();
        match lines.next() {
            Some((_, l)) if l == IMAGE_MAGIC => {}
            other => {
                return Err(Error::Format {
                    line: Some(1),
                    msg: format!("expected '{IMAGE_MAGIC}', got {:?}", other.map(|o| o.1)),
                })
            }
        }
        let mut fields = std::collections::BTreeMap::new();
        while let Some((_, l)) = lines.peek() {
            if !l.starts_with('#') {
                break;
            }
            let (idx, l) = lines.next().unwrap();
            let body = l.trim_start_matches('#').trim();
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Format {
                line: Some(idx + 1),
                msg: format!("bad header line '{l}'"),
            })?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<&String> {
            fields
                .get(k)
                .ok_or_else(|| Error::Schema(format!("count image header missing '{k}'")))
        };
        let f64_of = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Schema(format!("header '{k}' is not a number")))
        };
        let usize_of = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Schema(format!("header '{k}' is not an integer")))
        };

        let pixels_x = usize_of("pixels_x")?;
        let pixels_y = usize_of("pixels_y")?;
        let spectrometer = SpectrometerConfig {
            grating_lines_per_mm: usize_of("grating_lines_per_mm")? as u32,
            lambda_center_nm: f64_of("lambda_center_nm")?,
            pixels_x,
            pixels_y,
            dispersion_nm_per_pixel: f64_of("dispersion_nm_per_pixel")?,
            resolution_fwhm_nm: f64_of("resolution_fwhm_nm")?,
            camera_qe: f64_of("camera_qe")?,
            camera_dark_rate_hz_per_pixel: f64_of("camera_dark_rate_hz_per_pixel")?,
        };

        let mut counts = Vec::with_capacity(pixels_x * pixels_y);
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            for tok in line.split(',') {
                counts.push(tok.parse::<u64>().map_err(|_| Error::Format {
                    line: Some(idx + 1),
                    msg: format!("bad count '{tok}'"),
                })?);
            }
        }

        let mut axis_lines = axis_text.lines();
        match axis_lines.next() {
            Some(l) if l == AXIS_MAGIC => {}
            other => {
                return Err(Error::Format {
                    line: Some(1),
                    msg: format!("expected '{AXIS_MAGIC}', got {other:?}"),
                })
            }
        }
        let wavelength_axis_nm: Vec<f64> = axis_lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.trim().parse::<f64>().map_err(|_| Error::Format {
                    line: None,
                    msg: format!("bad axis value '{l}'"),
                })
            })
            .collect::<Result<_>>()?;

        let img = CountImage {
            counts,
            pixels_x,
            pixels_y,
            exposure_s: f64_of("exposure_s")?,
            frames: usize_of("frames")? as u32,
            wavelength_axis_nm,
            spectrometer,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Schema("header 'seed' is not an integer".into()))?,
        };
        img.validate()?;
        Ok(img)
    }

    /// Write `<stem>.counts.csv` and `<stem>.axis.csv` under `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let counts_path = dir.join(format!("{stem}.counts.csv"));
        std::fs::write(&counts_path, self.to_counts_text())
            .map_err(|e| Error::io(&counts_path, e))?;
        let axis_path = dir.join(format!("{stem}.axis.csv"));
        std::fs::write(&axis_path, self.to_axis_text()).map_err(|e| Error::io(&axis_path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let counts_path = dir.join(format!("{stem}.counts.csv"));
        let counts_text =
            std::fs::read_to_string(&counts_path).map_err(|e| Error::io(&counts_path, e))?;
        let axis_path = dir.join(format!("{stem}.axis.csv"));
        let axis_text =
            std::fs::read_to_string(&axis_path).map_err(|e| Error::io(&axis_path, e))?;
        Self::from_texts(&counts_text, &axis_text)
    }
}
