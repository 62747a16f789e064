//! Full simulated experiments: blank and sample acquisitions under an
//! apparatus preset, frame-parallel execution, and persistence.
//!
//! Reproducibility contract: child seeds derive from the preset seed per
//! role ("blank"/"sample") and per frame. Frames are independent streams and
//! the final image is their integer sum, so the worker count never changes
//! the result.

pub mod preset;

pub use preset::{builtin_preset, load_preset, ApparatusPreset, SampleSpec, BUILTIN_PRESETS};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::detection::{
    accumulate_image, apply_dead_time, coincidence_gate, dark_count_times, spad_detect,
    CountImage,
};
use crate::error::{Error, Result};
use crate::material::MaterialTable;
use crate::sample::{apply_sample, SampleConfig};
use crate::seed::{derive_seed, derive_seed_indexed};
use crate::source::{sample_pair, JsiTable, SourceState};

/// Ground-truth bookkeeping of gate/photon pairings over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoincidenceTally {
    /// Camera-gated signal photons whose gate came from their own pair.
    pub true_pairs: u64,
    /// Camera-gated signal photons caught by an unrelated gate.
    pub accidentals: u64,
    /// Gates opened by dark counts.
    pub dark_gates: u64,
    /// Gates opened by detected idler photons.
    pub real_gates: u64,
}

impl CoincidenceTally {
    fn add(&mut self, other: &CoincidenceTally) {
        self.true_pairs += other.true_pairs;
        self.accidentals += other.accidentals;
        self.dark_gates += other.dark_gates;
        self.real_gates += other.real_gates;
    }
}

/// One frame's worth of simulation output.
struct FrameResult {
    image: CountImage,
    tally: CoincidenceTally,
    coverage_misses: u64,
}

/// Result of a full acquisition.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub image: CountImage,
    pub tally: CoincidenceTally,
    /// Idler photons that fell outside the sample data coverage
    /// (transmitted unattenuated, per the coverage rule).
    pub coverage_misses: u64,
}

/// Blank and sample acquisitions under one preset.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub blank: CountImage,
    pub with_sample: CountImage,
    pub preset: ApparatusPreset,
}

fn simulate_frame(
    jsi: &JsiTable,
    preset: &ApparatusPreset,
    sample: &SampleConfig,
    frame_seed: u64,
) -> Result<FrameResult> {
    let mut rng = ChaCha12Rng::seed_from_u64(frame_seed);
    let exposure_ns = preset.exposure_s * 1e9;
    let chain_delay = preset.coincidence.chain_delay_ns();

    // Pair generation, idler transmission, and bucket detection.
    // Bucket clicks carry provenance: the pair index, or none for darks.
    let mut signal_arrivals: Vec<(f64, f64, u64)> = Vec::new(); // (t_emit, lambda_s, pair)
    let mut clicks: Vec<(f64, Option<u64>)> = Vec::new();
    let mut coverage_misses = 0u64;
    let mut source = SourceState::new(jsi);
    let mut pair_idx = 0u64;
    loop {
        let ev = sample_pair(&mut source, &mut rng);
        if ev.t_emit_ns > exposure_ns {
            break;
        }
        signal_arrivals.push((ev.t_emit_ns, ev.lambda_s_nm, pair_idx));
        let (_, covered) = sample.transmittance_at(ev.lambda_i_nm);
        if !covered {
            coverage_misses += 1;
        }
        if apply_sample(&ev, sample, &mut rng) {
            if let Some(t_click) = spad_detect(Some(ev.t_emit_ns), &preset.bucket, &mut rng) {
                clicks.push((t_click, Some(pair_idx)));
            }
        }
        pair_idx += 1;
    }

    for t in dark_count_times(
        &preset.bucket,
        preset.pump.rep_rate_hz,
        preset.exposure_s,
        &mut rng,
    ) {
        clicks.push((t, None));
    }
    clicks.sort_by(|a, b| a.0.total_cmp(&b.0));

    // SPAD dead time over the merged click stream.
    let times: Vec<f64> = clicks.iter().map(|c| c.0).collect();
    let kept = apply_dead_time(&times, preset.bucket.dead_time_ns);
    let mut kept_iter = kept.iter().peekable();
    clicks.retain(|(t, _)| match kept_iter.peek() {
        Some(&&k) if k == *t => {
            kept_iter.next();
            true
        }
        _ => false,
    });

    // Gates open at click + trigger-chain delay.
    let gates: Vec<(f64, Option<u64>)> = clicks
        .iter()
        .map(|&(t, p)| (t + chain_delay, p))
        .collect();

    // Match each signal photon against candidate gates; a photon is
    // detected at most once, by the first gate that accepts it.
    let half_window =
        preset.coincidence.gate_width_ns / 2.0 + 6.0 * preset.coincidence.jitter_sigma_ns;
    let mut tally = CoincidenceTally {
        real_gates: gates.iter().filter(|g| g.1.is_some()).count() as u64,
        dark_gates: gates.iter().filter(|g| g.1.is_none()).count() as u64,
        ..CoincidenceTally::default()
    };
    let mut gated_lambdas: Vec<f64> = Vec::new();
    let mut lo = 0usize;
    for &(t_emit, lambda_s, pair) in &signal_arrivals {
        let arrival = t_emit + chain_delay;
        while lo < gates.len() && gates[lo].0 < arrival - half_window {
            lo += 1;
        }
        let mut hit = None;
        for gate in gates[lo..]
            .iter()
            .take_while(|g| g.0 <= arrival + half_window)
        {
            if coincidence_gate(gate.0, t_emit, &preset.coincidence, &mut rng) {
                hit = Some(gate.1);
                break;
            }
        }
        if let Some(gate_pair) = hit {
            gated_lambdas.push(lambda_s);
            if gate_pair == Some(pair) {
                tally.true_pairs += 1;
            } else {
                tally.accidentals += 1;
            }
        }
    }

    let image = accumulate_image(
        &gated_lambdas,
        &preset.spectrometer,
        preset.exposure_s,
        1,
        &mut rng,
    )?;
    Ok(FrameResult {
        image,
        tally,
        coverage_misses,
    })
}

/// Run all frames of one acquisition under a derived master seed.
fn acquire(
    preset: &ApparatusPreset,
    sample: &SampleConfig,
    master_seed: u64,
    workers: usize,
) -> Result<Acquisition> {
    preset.validate()?;
    sample.validate()?;
    let materials = MaterialTable::<f64>::builtin();
    let jsi = JsiTable::new(&materials, &preset.pump, &preset.crystal, &preset.jsi_grid)?;

    let frame_seeds: Vec<u64> = (0..preset.frames)
        .map(|i| derive_seed_indexed(master_seed, "frame", u64::from(i)))
        .collect();

    let frames: Vec<FrameResult> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            frame_seeds
                .par_iter()
                .map(|&s| simulate_frame(&jsi, preset, sample, s))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        frame_seeds
            .iter()
            .map(|&s| simulate_frame(&jsi, preset, sample, s))
            .collect::<Result<Vec<_>>>()?
    };

    // Integer sum in frame order; commutative, so worker scheduling cannot
    // change the outcome.
    let mut iter = frames.into_iter();
    let first = iter.next().expect("at least one frame");
    let mut image = first.image;
    let mut tally = first.tally;
    let mut misses = first.coverage_misses;
    for f in iter {
        image.merge(&f.image)?;
        tally.add(&f.tally);
        misses += f.coverage_misses;
    }
    image.seed = master_seed;
    Ok(Acquisition {
        image,
        tally,
        coverage_misses: misses,
    })
}

/// Simulate one acquisition: source, sample (or blank), bucket detection,
/// coincidence gating, camera accumulation.
pub fn run_acquisition(
    preset: &ApparatusPreset,
    use_sample: bool,
    workers: usize,
) -> Result<CountImage> {
    Ok(run_acquisition_full(preset, use_sample, workers)?.image)
}

/// Like [`run_acquisition`] but keeps the coincidence tally and coverage
/// diagnostics.
pub fn run_acquisition_full(
    preset: &ApparatusPreset,
    use_sample: bool,
    workers: usize,
) -> Result<Acquisition> {
    let sample = if use_sample {
        preset.resolve_sample()?
    } else {
        SampleConfig::Blank
    };
    acquire(preset, &sample, preset.seed, workers)
}

/// Blank acquisition then sample acquisition, under independent derived
/// seeds, sharing axes and dimensions.
pub fn run_measurement_set(preset: &ApparatusPreset, workers: usize) -> Result<MeasurementSet> {
    let sample = preset.resolve_sample()?;
    let blank = acquire(
        preset,
        &SampleConfig::Blank,
        derive_seed(preset.seed, "blank"),
        workers,
    )?;
    let with_sample = acquire(
        preset,
        &sample,
        derive_seed(preset.seed, "sample"),
        workers,
    )?;
    Ok(MeasurementSet {
        blank: blank.image,
        with_sample: with_sample.image,
        preset: preset.clone(),
    })
}

impl MeasurementSet {
    /// Persist as a directory: preset snapshot plus both images.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let preset_path = dir.join("preset.toml");
        std::fs::write(&preset_path, self.preset.to_toml()?)
            .map_err(|e| Error::io(&preset_path, e))?;
        self.blank.save(dir, "blank")?;
        self.with_sample.save(dir, "sample")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let preset_path = dir.join("preset.toml");
        let preset = ApparatusPreset::load(&preset_path)?;
        let blank = CountImage::load(dir, "blank")?;
        let with_sample = CountImage::load(dir, "sample")?;
        if blank.wavelength_axis_nm != with_sample.wavelength_axis_nm
            || blank.pixels_x != with_sample.pixels_x
            || blank.pixels_y != with_sample.pixels_y
        {
            return Err(Error::Config(
                "blank and sample images disagree on axes or dimensions".into(),
            ));
        }
        Ok(MeasurementSet {
            blank,
            with_sample,
            preset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_preset() -> ApparatusPreset {
        let mut p = builtin_preset("ethanol").unwrap();
        p.exposure_s = 0.5;
        p.frames = 2;
        p.pump.pair_rate_hz = 5.0e4;
        p
    }

    #[test]
    fn blank_flag_equals_blank_sample_config() {
        let mut p = small_preset();
        p.sample = SampleSpec::Blank;
        let with_flag = run_acquisition(&p, false, 1).unwrap();
        let with_blank_config = run_acquisition(&p, true, 1).unwrap();
        assert_eq!(with_flag, with_blank_config);
    }

    #[test]
    fn zero_rates_give_empty_image() {
        let mut p = small_preset();
        p.bucket.dark_rate_hz = 0.0;
        p.spectrometer.camera_dark_rate_hz_per_pixel = 0.0;
        p.bucket.efficiency_eta_i = 0.0; // no gates at all
        let img = run_acquisition(&p, false, 1).unwrap();
        assert_eq!(img.total_counts(), 0);
    }

    #[test]
    fn determinism_and_worker_invariance() {
        let p = small_preset();
        let a = run_acquisition(&p, true, 1).unwrap();
        let b = run_acquisition(&p, true, 1).unwrap();
        assert_eq!(a, b);
        let c = run_acquisition(&p, true, 2).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn measurement_set_uses_independent_streams() {
        let mut p = small_preset();
        p.sample = SampleSpec::Blank;
        let set = run_measurement_set(&p, 1).unwrap();
        // same config on both arms, different derived seeds
        assert_ne!(set.blank, set.with_sample);
        assert_eq!(
            set.blank.wavelength_axis_nm,
            set.with_sample.wavelength_axis_nm
        );
    }

    #[test]
    fn persistence_round_trip_byte_identical() {
        let p = small_preset();
        let set = run_measurement_set(&p, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let d1 = dir.path().join("a");
        let d2 = dir.path().join("b");
        set.save(&d1).unwrap();
        let back = MeasurementSet::load(&d1).unwrap();
        back.save(&d2).unwrap();
        for name in ["preset.toml", "blank.counts.csv", "blank.axis.csv", "sample.counts.csv", "sample.axis.csv"] {
            let x = std::fs::read(d1.join(name)).unwrap();
            let y = std::fs::read(d2.join(name)).unwrap();
            assert_eq!(x, y, "{name} differs after reload");
        }
    }

    #[test]
    fn flat_half_transmission_halves_counts() {
        // T = 0.5 flat sample: sample/blank column ratio ~ 0.5 in every
        // well-populated bin (binomial oracle per bin).
        let dir = tempfile::tempdir().unwrap();
        let mu_path = dir.path().join("half.csv");
        // mu * 1 cm = ln 2 over the whole idler range
        std::fs::write(
            &mu_path,
            format!(
                "lambda_nm,mu_per_cm\n1400,{ln2}\n1700,{ln2}\n",
                ln2 = std::f64::consts::LN_2
            ),
        )
        .unwrap();
        let mut p = small_preset();
        p.exposure_s = 2.0;
        p.frames = 2;
        p.pump.pair_rate_hz = 2.0e5;
        p.bucket.dark_rate_hz = 0.0;
        p.bucket.efficiency_eta_i = 1.0;
        p.spectrometer.camera_qe = 1.0;
        p.spectrometer.camera_dark_rate_hz_per_pixel = 0.0;
        p.sample = SampleSpec::LiquidCuvette {
            path_length_cm: 1.0,
            passes: 1,
            round_trip_loss: 1.0,
            mu_csv: mu_path.to_string_lossy().into_owned(),
        };
        let set = run_measurement_set(&p, 1).unwrap();
        let blank = set.blank.column_sums();
        let sample = set.with_sample.column_sums();
        let mut checked = 0;
        for (b, s) in blank.iter().zip(&sample) {
            if *b < 400 {
                continue;
            }
            let ratio = *s as f64 / *b as f64;
            let sigma = 0.5 * (1.0 / *b as f64 + 1.0 / (*s as f64).max(1.0)).sqrt();
            assert!(
                (ratio - 0.5).abs() < 5.0 * sigma,
                "ratio {ratio} at blank {b}"
            );
            checked += 1;
        }
        assert!(checked > 20, "only {checked} populated bins");
    }

    #[test]
    fn coincidence_tally_sees_true_pairs() {
        let mut p = small_preset();
        p.sample = SampleSpec::Blank;
        p.bucket.dark_rate_hz = 0.0;
        let acq = run_acquisition_full(&p, true, 1).unwrap();
        assert!(acq.tally.true_pairs > 0);
        assert_eq!(acq.tally.dark_gates, 0);
        assert!(acq.tally.accidentals < acq.tally.true_pairs / 10);
    }

    #[test]
    fn coverage_misses_counted() {
        let dir = tempfile::tempdir().unwrap();
        let mu_path = dir.path().join("narrow.csv");
        // profile covering only a slice of the idler range
        std::fs::write(&mu_path, "lambda_nm,mu_per_cm\n1540,0.0\n1560,0.0\n").unwrap();
        let mut p = small_preset();
        p.sample = SampleSpec::LiquidCuvette {
            path_length_cm: 1.0,
            passes: 1,
            round_trip_loss: 1.0,
            mu_csv: mu_path.to_string_lossy().into_owned(),
        };
        let acq = run_acquisition_full(&p, true, 1).unwrap();
        assert!(acq.coverage_misses > 0);
    }
}
