//! Desk-scale simulator and analysis toolkit for near-infrared quantum
//! ghost spectroscopy.
//!
//! The pipeline mirrors a coincidence-gated two-arm experiment: a
//! nondegenerate SPDC source emits frequency-anticorrelated photon pairs;
//! the idler traverses an absorbing sample and triggers a bucket detector;
//! the signal is dispersed onto a gated intensified camera; blank-referenced
//! spectra then yield transmittance, absorbance, and threat alerts.
//!
//! Module map:
//! - [`material`]: Sellmeier coefficient sets and refractive-index lookup
//! - [`source`]: phase matching, joint spectral intensity, pair sampling
//! - [`linedata`]: spectroscopic line databases and absorption synthesis
//! - [`sample`]: Lambert-Beer transmission of the idler arm
//! - [`detection`]: bucket detector, spectrometer camera, coincidence gate
//! - [`run`]: full acquisitions, presets, persistence
//! - [`analysis`]: binning, smoothing, T/A spectra, feature alerts
//!
//! The numeric kernels are generic over the scalar type (see [`float::Real`]);
//! the aliases below fix the concrete `f64` instantiations used by the
//! simulation pipeline.

// Validation guards use `!(x > 0.0)` on purpose: the negation also rejects
// NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod detection;
pub mod error;
pub mod faddeeva;
pub mod float;
pub mod linedata;
pub mod material;
pub mod run;
pub mod sample;
pub mod seed;
pub mod source;

pub use error::{Error, Result};
pub use float::Real;

/// Material registry at the pipeline scalar type.
pub type Materials = material::MaterialTable<f64>;
/// Sellmeier expansion at the pipeline scalar type.
pub type Sellmeier = material::SellmeierExpansion<f64>;

pub use analysis::{AlertReport, Spectrum};
pub use detection::CountImage;
pub use linedata::{AbsorptionProfile, GasConditions, LineRecord};
pub use run::{ApparatusPreset, MeasurementSet};
pub use sample::SampleConfig;
pub use source::{JsiTable, PhotonPairEvent};
