//! Command-line driver: simulate measurement sets, analyze them into
//! spectra and alerts, synthesize reference absorption profiles, and run the
//! filter calibration check.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.
//! Diagnostics go to stderr; data goes to files (or stdout for `presets`).

// NaN-rejecting validation on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ghostspec::analysis::{
    absorbance, compare_reference, conjugate_axis, detect_features, savgol_smooth, transmittance,
    vertical_bin,
};
use ghostspec::error::Error;
use ghostspec::linedata::{absorption_profile, parse_csv_linelist, GasConditions};
use ghostspec::run::{load_preset, run_measurement_set, MeasurementSet, BUILTIN_PRESETS};
use ghostspec::sample::SampleConfig;

#[derive(Parser)]
#[command(
    name = "ghostspec",
    about = "Near-infrared quantum ghost spectroscopy simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PresetArgs {
    /// Builtin preset name or path to a preset TOML file.
    #[arg(long)]
    preset: String,
    /// Override preset values by dotted key path, e.g. --set seed=7 or
    /// --set spectrometer.grating_lines_per_mm=1200. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for frame-parallel simulation (never changes results).
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run blank + sample acquisitions and persist the measurement set.
    Simulate {
        #[command(flatten)]
        preset: PresetArgs,
        /// Output directory for the measurement set.
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a persisted measurement set into spectra CSVs and an alert report.
    Analyze {
        /// Directory written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Savitzky-Golay window (odd, >= 3).
        #[arg(long, default_value_t = 11)]
        window: usize,
        /// Savitzky-Golay polynomial order.
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Skip the smoothed outputs entirely.
        #[arg(long)]
        no_smooth: bool,
        /// Alert threshold on A/sigma_A.
        #[arg(long, default_value_t = 5.0)]
        threshold_z: f64,
        /// Minimum consecutive significant bins for an alert band.
        #[arg(long, default_value_t = 3)]
        min_band_bins: usize,
        /// Also emit a vector-graphic rendering of the spectrum panels.
        #[arg(long)]
        svg: bool,
    },
    /// Synthesize a reference absorption profile from a line list.
    Lines {
        /// Line-list path (.csv or .par) or builtin:<name>.
        #[arg(long)]
        linelist: String,
        #[arg(long, default_value_t = 300.0)]
        temperature_k: f64,
        #[arg(long, default_value_t = 0.001)]
        pressure_atm: f64,
        #[arg(long, default_value_t = 1.0)]
        self_fraction: f64,
        #[arg(long)]
        molar_mass_amu: f64,
        #[arg(long)]
        grid_min_nm: f64,
        #[arg(long)]
        grid_max_nm: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_step_nm: f64,
        /// Output CSV path (lambda_nm,mu_per_cm).
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the calibration-filter preset and compare the recovered
    /// transmittance against the filter's tabulated curve.
    Calibrate {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// List builtin presets, or show one as TOML.
    Presets {
        /// Print the full TOML of this preset instead of the name list.
        #[arg(long)]
        show: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn resolve_preset(args: &PresetArgs) -> Result<ghostspec::ApparatusPreset, Error> {
    let mut preset = load_preset(&args.preset)?;
    for kv in &args.set {
        let (key, value) = kv.split_once('=').ok_or_else(|| {
            Error::Config(format!("override '{kv}' is not of the form key=value"))
        })?;
        preset = preset.with_override(key.trim(), value.trim())?;
    }
    Ok(preset)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { preset, out } => {
            let resolved = resolve_preset(&preset)?;
            eprintln!(
                "simulating preset '{}' ({} frames x {} s, seed {})",
                resolved.name, resolved.frames, resolved.exposure_s, resolved.seed
            );
            let set = run_measurement_set(&resolved, preset.workers.max(1))?;
            set.save(&out)?;
            eprintln!(
                "wrote measurement set to {} (blank {} counts, sample {} counts)",
                out.display(),
                set.blank.total_counts(),
                set.with_sample.total_counts()
            );
            Ok(())
        }
        Command::Analyze {
            input,
            out,
            window,
            order,
            no_smooth,
            threshold_z,
            min_band_bins,
            svg,
        } => analyze(
            &input,
            &out,
            window,
            order,
            no_smooth,
            threshold_z,
            min_band_bins,
            svg,
        ),
        Command::Lines {
            linelist,
            temperature_k,
            pressure_atm,
            self_fraction,
            molar_mass_amu,
            grid_min_nm,
            grid_max_nm,
            grid_step_nm,
            out,
        } => {
            let text = ghostspec::run::preset::load_text_resource(&linelist)?;
            let lines = if linelist.ends_with(".par") {
                ghostspec::linedata::par::parse_par_file(&text)?
            } else {
                parse_csv_linelist(&text)?
            };
            let conditions = GasConditions {
                temperature_k,
                pressure_total_atm: pressure_atm,
                self_fraction,
                molar_mass_amu,
            };
            if !(grid_max_nm > grid_min_nm) || !(grid_step_nm > 0.0) {
                return Err(Error::Config(
                    "grid bounds must satisfy min < max with positive step".into(),
                ));
            }
            let n = ((grid_max_nm - grid_min_nm) / grid_step_nm).ceil() as usize + 1;
            let grid: Vec<f64> = (0..n).map(|i| grid_min_nm + i as f64 * grid_step_nm).collect();
            let profile = absorption_profile(&lines, &conditions, &grid)?;
            write_file(&out, &profile.to_csv())?;
            eprintln!(
                "wrote {} ({} bins, {} lines)",
                out.display(),
                grid.len(),
                lines.len()
            );
            Ok(())
        }
        Command::Calibrate { preset, out } => calibrate(&preset, &out),
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let preset = load_preset(&name)?;
                    println!("{}", preset.to_toml()?);
                }
                None => {
                    for name in BUILTIN_PRESETS {
                        println!("{name}");
                    }
                }
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    input: &Path,
    out: &Path,
    window: usize,
    order: usize,
    no_smooth: bool,
    threshold_z: f64,
    min_band_bins: usize,
    svg: bool,
) -> Result<(), Error> {
    let set = MeasurementSet::load(input)?;
    let lambda_p = set.preset.pump.wavelength_nm;

    let blank_counts = vertical_bin(&set.blank)?;
    let sample_counts = vertical_bin(&set.with_sample)?;
    write_file(&out.join("counts_blank.csv"), &blank_counts.to_csv())?;
    write_file(&out.join("counts_sample.csv"), &sample_counts.to_csv())?;

    // Raw (unsmoothed) ratio is always emitted for inspection.
    let t_raw = transmittance(&sample_counts, &blank_counts)?;
    let a_raw = absorbance(&t_raw)?;
    write_file(&out.join("transmittance_raw.csv"), &t_raw.to_csv())?;
    write_file(&out.join("absorbance_raw.csv"), &a_raw.to_csv())?;

    // Smoothing applies to count spectra before ratioing.
    let (t_spec, a_spec) = if no_smooth {
        (t_raw.clone(), a_raw.clone())
    } else {
        let blank_smooth = savgol_smooth(&blank_counts, window, order)?;
        let sample_smooth = savgol_smooth(&sample_counts, window, order)?;
        write_file(&out.join("counts_blank_smoothed.csv"), &blank_smooth.to_csv())?;
        write_file(
            &out.join("counts_sample_smoothed.csv"),
            &sample_smooth.to_csv(),
        )?;
        let t = transmittance(&sample_smooth, &blank_smooth)?;
        let a = absorbance(&t)?;
        write_file(&out.join("transmittance.csv"), &t.to_csv())?;
        write_file(&out.join("absorbance.csv"), &a.to_csv())?;
        (t, a)
    };

    // Conjugated-axis variants.
    let t_idler = conjugate_axis(&t_spec, lambda_p)?;
    let a_idler = conjugate_axis(&a_spec, lambda_p)?;
    write_file(&out.join("transmittance_idler_axis.csv"), &t_idler.to_csv())?;
    write_file(&out.join("absorbance_idler_axis.csv"), &a_idler.to_csv())?;

    let report = detect_features(&a_idler, threshold_z, min_band_bins)?;
    write_file(&out.join("alert.txt"), &report.to_text())?;
    eprintln!(
        "alert: {} ({} band(s) above z = {threshold_z})",
        if report.triggered { "TRIGGERED" } else { "quiet" },
        report.bands.len()
    );

    // Reference comparison when the preset's sample carries a profile.
    if let Ok(sample_cfg) = set.preset.resolve_sample() {
        let (profile, path_cm) = match &sample_cfg {
            SampleConfig::LiquidCuvette {
                profile,
                path_length_cm,
                passes,
                ..
            }
            | SampleConfig::GasCell {
                profile,
                path_length_cm,
                passes,
                ..
            } => (Some(profile.clone()), path_length_cm * f64::from(*passes)),
            _ => (None, 0.0),
        };
        if let Some(profile) = profile {
            // Instrument kernel in idler nm: signal-space FWHM stretched by
            // the local conjugation slope (~ (lambda_i/lambda_s)^2).
            let stretch = {
                let ls = set.preset.spectrometer.lambda_center_nm;
                let li: f64 = ghostspec::source::conjugate_wavelength(lambda_p, ls)?;
                (li / ls).powi(2)
            };
            let fwhm_idler = set.preset.spectrometer.resolution_fwhm_nm * stretch;
            match compare_reference(&a_idler, &profile, path_cm, fwhm_idler) {
                Ok(score) => {
                    write_file(
                        &out.join("reference_score.txt"),
                        &format!("pearson_r = {score}\n"),
                    )?;
                    eprintln!("reference correlation: {score:.3}");
                }
                Err(e) => eprintln!("reference comparison skipped: {e}"),
            }
        }
    }

    if svg {
        let panels = vec![
            svg::Panel {
                title: "counts (signal axis)",
                traces: vec![
                    ("blank", &blank_counts, "#1f77b4"),
                    ("sample", &sample_counts, "#ff7f0e"),
                ],
            },
            svg::Panel {
                title: "transmittance",
                traces: vec![("T", &t_spec, "#2ca02c")],
            },
            svg::Panel {
                title: "absorbance (idler axis)",
                traces: vec![("A", &a_idler, "#d62728")],
            },
        ];
        write_file(&out.join("spectra.svg"), &svg::render(&panels))?;
    }

    eprintln!("analysis written to {}", out.display());
    Ok(())
}

fn calibrate(preset_args: &PresetArgs, out: &Path) -> Result<(), Error> {
    let preset = resolve_preset(preset_args)?;
    let SampleConfig::CalibrationFilter { curve } = preset.resolve_sample()? else {
        return Err(Error::Config(format!(
            "preset '{}' does not describe a calibration filter",
            preset.name
        )));
    };
    eprintln!("running calibration acquisition under preset '{}'", preset.name);
    let set = run_measurement_set(&preset, preset_args.workers.max(1))?;
    set.save(out)?;

    let blank = vertical_bin(&set.blank)?;
    let sample = vertical_bin(&set.with_sample)?;
    let t = transmittance(&sample, &blank)?;
    let t_idler = conjugate_axis(&t, preset.pump.wavelength_nm)?;
    write_file(&out.join("transmittance_idler_axis.csv"), &t_idler.to_csv())?;

    // Compare recovered T against the tabulated curve over populated bins.
    let mut n_used = 0usize;
    let mut worst: f64 = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..t_idler.len() {
        if t_idler.masked[i] || t_idler.sigma[i] > 0.05 {
            continue;
        }
        let Some(expected) = curve.t_at(t_idler.lambda_nm[i]) else {
            continue;
        };
        worst = worst.max((t_idler.values[i] - expected).abs());
        xs.push(t_idler.values[i]);
        ys.push(expected);
        n_used += 1;
    }
    if n_used < 10 {
        return Err(Error::Config(
            "calibration run produced too few well-populated bins; raise pair rate or exposure"
                .into(),
        ));
    }
    let mean_abs_dev: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n_used as f64;
    let report = format!(
        "# ghost calibration report v1\nbins_compared = {n_used}\nmax_abs_dev_T = {worst}\nmean_abs_dev_T = {mean_abs_dev}\n"
    );
    write_file(&out.join("calibration_report.txt"), &report)?;
    eprintln!(
        "calibration: {n_used} bins, max |dT| = {worst:.4}, mean |dT| = {mean_abs_dev:.4}"
    );
    Ok(())
}
