//! Nondegenerate type-I SPDC source model.
//!
//! Covers the collinear phase-matching condition in a negative uniaxial
//! crystal (extraordinary pump, ordinary signal/idler), the joint spectral
//! intensity built from the pump envelope and the crystal sinc factor, and
//! Monte-Carlo sampling of photon-pair events from the tabulated JSI.
//!
//! Conventions: the signal is the higher-energy photon (~810 nm arm), the
//! idler the lower-energy one (~1550 nm arm). Wavelengths are vacuum nm at
//! the API surface; Sellmeier evaluations take micrometres internally.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::material::{sellmeier_index, MaterialTable, Polarization};

/// Speed of light in nm/s.
const C_NM_PER_S: f64 = 2.99792458e17;

/// Time-bandwidth product of a transform-limited Gaussian pulse
/// (intensity FWHMs): 2 ln 2 / pi.
const GAUSSIAN_TBP: f64 = 0.441271200305303;

/// Pump laser parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Center wavelength, nm.
    pub wavelength_nm: f64,
    /// FWHM of the pump spectral amplitude, nm.
    pub bandwidth_nm: f64,
    /// Pulse repetition rate, Hz.
    pub rep_rate_hz: f64,
    /// Mean generated pair rate, Hz (detected-scale brightness knob).
    pub pair_rate_hz: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            wavelength_nm: 532.0,
            bandwidth_nm: transform_limited_bandwidth_nm(532.0, 8.0),
            rep_rate_hz: 4.0e7,
            pair_rate_hz: 1.0e4,
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump.wavelength_nm", self.wavelength_nm),
            ("pump.bandwidth_nm", self.bandwidth_nm),
            ("pump.rep_rate_hz", self.rep_rate_hz),
            ("pump.pair_rate_hz", self.pair_rate_hz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Standard deviation of the pump intensity envelope in inverse
    /// wavelength (nm^-1).
    pub fn sigma_inverse_nm(&self) -> f64 {
        let fwhm_inv = self.bandwidth_nm / (self.wavelength_nm * self.wavelength_nm);
        fwhm_inv / (8.0f64.ln()).sqrt()
    }
}

/// Spectral FWHM (nm) of a transform-limited Gaussian pulse.
pub fn transform_limited_bandwidth_nm(wavelength_nm: f64, pulse_width_ps: f64) -> f64 {
    let dnu_hz = GAUSSIAN_TBP / (pulse_width_ps * 1e-12);
    wavelength_nm * wavelength_nm * dnu_hz / C_NM_PER_S
}

/// Nonlinear crystal parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrystalConfig {
    /// Crystal thickness along the beam, mm.
    pub thickness_mm: f64,
    /// Angle between propagation direction and optic axis, rad.
    pub cut_angle_rad: f64,
    /// Key into the material coefficient table.
    pub material_id: String,
}

impl CrystalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_mm > 0.0) {
            return Err(Error::Config(format!(
                "crystal.thickness_mm must be positive, got {}",
                self.thickness_mm
            )));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.cut_angle_rad) {
            return Err(Error::Config(format!(
                "crystal.cut_angle_rad must lie in [0, pi/2], got {}",
                self.cut_angle_rad
            )));
        }
        Ok(())
    }
}

/// One SPDC emission event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPairEvent {
    /// Signal wavelength (higher-energy photon), nm.
    pub lambda_s_nm: f64,
    /// Idler wavelength (lower-energy photon), nm.
    pub lambda_i_nm: f64,
    /// Emission timestamp, ns, quantized to pump pulse slots.
    pub t_emit_ns: f64,
}

/// Idler wavelength conjugate to a signal wavelength under energy
/// conservation: 1/lambda_i = 1/lambda_p - 1/lambda_s.
pub fn conjugate_wavelength<T: Real>(lambda_p_nm: T, lambda_s_nm: T) -> Result<T> {
    if !(lambda_s_nm > lambda_p_nm) {
        return Err(Error::domain(
            "conjugate_wavelength",
            format!(
                "signal wavelength {lambda_s_nm} nm must exceed pump wavelength {lambda_p_nm} nm"
            ),
        ));
    }
    Ok(T::one() / (T::one() / lambda_p_nm - T::one() / lambda_s_nm))
}

/// Extraordinary-wave index at propagation angle `theta` to the optic axis:
/// 1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
pub fn effective_e_index<T: Real>(
    table: &MaterialTable<T>,
    material_id: &str,
    wavelength_um: T,
    theta_rad: T,
) -> Result<T> {
    let n_o = sellmeier_index(table, material_id, Polarization::Ordinary, wavelength_um)?;
    let n_e = sellmeier_index(table, material_id, Polarization::Extraordinary, wavelength_um)?;
    let (sin, cos) = theta_rad.sin_cos();
    let inv2 = (cos * cos) / (n_o * n_o) + (sin * sin) / (n_e * n_e);
    Ok(T::one() / inv2.sqrt())
}

/// Collinear type-I phase mismatch, rad/mm:
/// dk = 2 pi [ n_e(lambda_p, theta)/lambda_p - n_o(lambda_s)/lambda_s - n_o(lambda_i)/lambda_i ].
pub fn phase_mismatch<T: Real>(
    table: &MaterialTable<T>,
    material_id: &str,
    theta_rad: T,
    lambda_p_nm: T,
    lambda_s_nm: T,
    lambda_i_nm: T,
) -> Result<T> {
    let um = T::of(1e-3);
    let n_p = effective_e_index(table, material_id, lambda_p_nm * um, theta_rad)?;
    let n_s = sellmeier_index(table, material_id, Polarization::Ordinary, lambda_s_nm * um)?;
    let n_i = sellmeier_index(table, material_id, Polarization::Ordinary, lambda_i_nm * um)?;
    let per_nm = n_p / lambda_p_nm - n_s / lambda_s_nm - n_i / lambda_i_nm;
    Ok(T::of(2.0) * T::PI() * per_nm * T::of(1e6))
}

/// Solve the cut angle that phase-matches the given wavelength triple.
///
/// Brackets the sign change of the mismatch over (0, pi/2) and bisects down
/// to machine resolution (well below the 1e-12 rad tolerance), so the
/// residual mismatch at the returned angle is far under 1e-9 rad/mm.
pub fn phase_matching_angle<T: Real>(
    table: &MaterialTable<T>,
    material_id: &str,
    lambda_p_nm: T,
    lambda_s_nm: T,
    lambda_i_nm: T,
) -> Result<T> {
    let mut lo = T::of(1e-9);
    let mut hi = T::FRAC_PI_2() - T::of(1e-9);
    let f = |theta: T| phase_mismatch(table, material_id, theta, lambda_p_nm, lambda_s_nm, lambda_i_nm);
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return Err(Error::NoSolution {
            op: "phase_matching_angle",
            lo: 0.0,
            hi: std::f64::consts::FRAC_PI_2,
            msg: format!(
                "mismatch does not change sign for {material_id} at ({lambda_p_nm}, {lambda_s_nm}, {lambda_i_nm}) nm; \
                 type-I tuning needs a negative uniaxial material"
            ),
        });
    }
    loop {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < T::of(1e-15) {
            return Ok((lo + hi) * T::of(0.5));
        }
    }
}

/// Normalized sinc: sin(x)/x with sinc(0) = 1.
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::of(1e-8) {
        T::one() - x * x / T::of(6.0)
    } else {
        x.sin() / x
    }
}

/// Joint spectral intensity at (lambda_s, lambda_i), in [0, 1].
///
/// Product of the pump intensity envelope, Gaussian in the total inverse
/// wavelength 1/lambda_s + 1/lambda_i with FWHM set by the pump bandwidth,
/// and the crystal factor sinc^2(dk L / 2).
pub fn joint_spectral_intensity<T: Real>(
    table: &MaterialTable<T>,
    lambda_s_nm: T,
    lambda_i_nm: T,
    pump: &PumpConfig,
    crystal: &CrystalConfig,
) -> Result<T> {
    let lambda_p = T::of(pump.wavelength_nm);
    let inv_sum = T::one() / lambda_s_nm + T::one() / lambda_i_nm - T::one() / lambda_p;
    let fwhm_inv = T::of(pump.bandwidth_nm / (pump.wavelength_nm * pump.wavelength_nm));
    let four_ln2 = T::of(4.0 * std::f64::consts::LN_2);
    let ratio = inv_sum / fwhm_inv;
    let envelope = (-four_ln2 * ratio * ratio).exp();
    let dk = phase_mismatch(
        table,
        &crystal.material_id,
        T::of(crystal.cut_angle_rad),
        lambda_p,
        lambda_s_nm,
        lambda_i_nm,
    )?;
    let s = sinc(dk * T::of(crystal.thickness_mm) * T::of(0.5));
    Ok(envelope * s * s)
}

/// Rectangular (lambda_s, lambda_i) tabulation domain for the JSI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsiGridSpec {
    pub signal_min_nm: f64,
    pub signal_max_nm: f64,
    pub signal_points: usize,
    pub idler_points: usize,
}

impl Default for JsiGridSpec {
    fn default() -> Self {
        JsiGridSpec {
            signal_min_nm: 790.0,
            signal_max_nm: 830.0,
            signal_points: 512,
            idler_points: 512,
        }
    }
}

/// JSI tabulated on cell centers, with the sampling tables derived from it.
#[derive(Debug, Clone)]
pub struct JsiTable {
    pump: PumpConfig,
    signal_centers: Vec<f64>,
    idler_centers: Vec<f64>,
    signal_step: f64,
    /// Row-major weights, signal index major.
    weights: Vec<f64>,
    /// Cumulative distribution over flattened cells, normalized to 1.
    cdf: Vec<f64>,
    signal_marginal: Vec<f64>,
}

impl JsiTable {
    pub fn new(
        table: &MaterialTable<f64>,
        pump: &PumpConfig,
        crystal: &CrystalConfig,
        grid: &JsiGridSpec,
    ) -> Result<Self> {
        pump.validate()?;
        crystal.validate()?;
        if grid.signal_points == 0 || grid.idler_points == 0 {
            return Err(Error::Config("JSI grid needs at least one cell".into()));
        }
        if !(grid.signal_min_nm < grid.signal_max_nm) {
            return Err(Error::Config("JSI grid signal range is empty".into()));
        }
        if !(grid.signal_min_nm > pump.wavelength_nm) {
            return Err(Error::Config(
                "JSI signal range must lie above the pump wavelength".into(),
            ));
        }
        if !(grid.signal_max_nm < 2.0 * pump.wavelength_nm) {
            return Err(Error::Config(
                "signal grid must stay the higher-energy photon (below degeneracy)".into(),
            ));
        }

        let idler_min = conjugate_wavelength(pump.wavelength_nm, grid.signal_max_nm)?;
        let idler_max = conjugate_wavelength(pump.wavelength_nm, grid.signal_min_nm)?;
        let ns = grid.signal_points;
        let ni = grid.idler_points;
        let ds = (grid.signal_max_nm - grid.signal_min_nm) / ns as f64;
        let di = (idler_max - idler_min) / ni as f64;
        let signal_centers: Vec<f64> = (0..ns)
            .map(|j| grid.signal_min_nm + (j as f64 + 0.5) * ds)
            .collect();
        let idler_centers: Vec<f64> = (0..ni)
            .map(|j| idler_min + (j as f64 + 0.5) * di)
            .collect();

        // Index lookups factorize over the two axes; dk is assembled per cell.
        let lambda_p = pump.wavelength_nm;
        let n_pump = effective_e_index(
            table,
            &crystal.material_id,
            lambda_p * 1e-3,
            crystal.cut_angle_rad,
        )?;
        let k_pump = n_pump / lambda_p;
        let n_signal: Vec<f64> = signal_centers
            .iter()
            .map(|&l| sellmeier_index(table, &crystal.material_id, Polarization::Ordinary, l * 1e-3))
            .collect::<Result<_>>()?;
        let n_idler: Vec<f64> = idler_centers
            .iter()
            .map(|&l| sellmeier_index(table, &crystal.material_id, Polarization::Ordinary, l * 1e-3))
            .collect::<Result<_>>()?;

        let fwhm_inv = pump.bandwidth_nm / (lambda_p * lambda_p);
        let four_ln2 = 4.0 * std::f64::consts::LN_2;
        let half_thickness = crystal.thickness_mm * 0.5;
        let inv_p = 1.0 / lambda_p;

        let mut weights = vec![0.0f64; ns * ni];
        for (is, (&ls, &n_s)) in signal_centers.iter().zip(&n_signal).enumerate() {
            let k_s = n_s / ls;
            let inv_s = 1.0 / ls;
            for (ii, (&li, &n_i)) in idler_centers.iter().zip(&n_idler).enumerate() {
                let dk = 2.0 * std::f64::consts::PI * (k_pump - k_s - n_i / li) * 1e6;
                let x = (inv_s + 1.0 / li - inv_p) / fwhm_inv;
                let envelope = (-four_ln2 * x * x).exp();
                let s = sinc(dk * half_thickness);
                weights[is * ni + ii] = envelope * s * s;
            }
        }

        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config(
                "tabulated JSI is identically zero on the requested grid".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cdf.push(acc / total);
        }
        *cdf.last_mut().unwrap() = 1.0;

        let mut signal_marginal = vec![0.0f64; ns];
        for is in 0..ns {
            signal_marginal[is] = weights[is * ni..(is + 1) * ni].iter().sum();
        }

        Ok(JsiTable {
            pump: pump.clone(),
            signal_centers,
            idler_centers,
            signal_step: ds,
            weights,
            cdf,
            signal_marginal,
        })
    }

    pub fn signal_centers(&self) -> &[f64] {
        &self.signal_centers
    }

    pub fn idler_centers(&self) -> &[f64] {
        &self.idler_centers
    }

    pub fn weight_at(&self, signal_idx: usize, idler_idx: usize) -> f64 {
        self.weights[signal_idx * self.idler_centers.len() + idler_idx]
    }

    /// Marginal of the tabulated JSI over the idler axis (unnormalized).
    pub fn signal_marginal(&self) -> &[f64] {
        &self.signal_marginal
    }

    pub fn pump(&self) -> &PumpConfig {
        &self.pump
    }
}

/// Mutable sampling cursor over a tabulated JSI.
///
/// Emission times follow a Poisson process at `pair_rate_hz`, quantized to
/// pump pulse slots. Cloning the table reference keeps parallel samplers
/// cheap; reproducibility across worker counts comes from per-frame seed
/// derivation (see the acquisition module).
pub struct SourceState<'a> {
    jsi: &'a JsiTable,
    clock_s: f64,
}

impl<'a> SourceState<'a> {
    pub fn new(jsi: &'a JsiTable) -> Self {
        SourceState { jsi, clock_s: 0.0 }
    }
}

/// Draw the next photon-pair event.
///
/// Cells are drawn by inverse CDF on the discretized grid; the signal
/// wavelength is uniform within its cell, and the total inverse wavelength
/// is drawn from the pump envelope truncated at 3.9 sigma, which pins the
/// energy-conservation residual of every event below 4 sigma regardless of
/// grid resolution.
pub fn sample_pair<R: Rng + ?Sized>(state: &mut SourceState<'_>, rng: &mut R) -> PhotonPairEvent {
    let jsi = state.jsi;
    let pump = &jsi.pump;

    let gap: f64 = Exp::new(pump.pair_rate_hz)
        .expect("validated pair rate")
        .sample(rng);
    state.clock_s += gap;
    let slot = (state.clock_s * pump.rep_rate_hz).round();
    let t_emit_ns = slot / pump.rep_rate_hz * 1e9;

    let u: f64 = rng.gen();
    let flat = jsi.cdf.partition_point(|&c| c <= u).min(jsi.cdf.len() - 1);
    let ni = jsi.idler_centers.len();
    let is = flat / ni;

    let jitter: f64 = rng.gen::<f64>() - 0.5;
    let lambda_s = jsi.signal_centers[is] + jitter * jsi.signal_step;

    let sigma_inv = pump.sigma_inverse_nm();
    let z = loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 3.9 {
            break z;
        }
    };
    let inv_total = 1.0 / pump.wavelength_nm + z * sigma_inv;
    let lambda_i = 1.0 / (inv_total - 1.0 / lambda_s);

    PhotonPairEvent {
        lambda_s_nm: lambda_s,
        lambda_i_nm: lambda_i,
        t_emit_ns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{MaterialCoefficients, SellmeierExpansion};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn bbo() -> MaterialTable<f64> {
        MaterialTable::builtin()
    }

    #[test]
    fn conjugate_matches_arithmetic() {
        // 1/(1/532 - 1/810) = 1550.0719... nm
        let li: f64 = conjugate_wavelength(532.0, 810.0).unwrap();
        assert!((li - 1550.0719424460433).abs() < 1e-9);
        // degenerate symmetric case
        let deg: f64 = conjugate_wavelength(532.0, 1064.0).unwrap();
        assert!((deg - 1064.0).abs() < 1e-9);
        assert!(conjugate_wavelength::<f64>(532.0, 500.0).is_err());
        assert!(conjugate_wavelength::<f64>(532.0, 532.0).is_err());
    }

    #[test]
    fn effective_index_interpolates_between_principals() {
        let t = bbo();
        let n_o = sellmeier_index(&t, "BBO", Polarization::Ordinary, 0.532).unwrap();
        let n_e = sellmeier_index(&t, "BBO", Polarization::Extraordinary, 0.532).unwrap();
        assert!(
            (effective_e_index(&t, "BBO", 0.532, 0.0).unwrap() - n_o).abs() < 1e-12,
            "theta = 0 degenerates to the ordinary index"
        );
        assert!(
            (effective_e_index(&t, "BBO", 0.532, std::f64::consts::FRAC_PI_2).unwrap() - n_e)
                .abs()
                < 1e-12
        );
        let mid = effective_e_index(&t, "BBO", 0.532, std::f64::consts::FRAC_PI_4).unwrap();
        // Hand-evaluated ellipse at 45 degrees: 1/n^2 = (1/n_o^2 + 1/n_e^2)/2.
        let oracle = (2.0 / (1.0 / (n_o * n_o) + 1.0 / (n_e * n_e))).sqrt();
        assert!((mid - oracle).abs() < 1e-12);
        assert!(mid < n_o && mid > n_e);
    }

    #[test]
    fn effective_index_monotone_in_theta() {
        let t = bbo();
        let mut prev = effective_e_index(&t, "BBO", 0.532, 0.0).unwrap();
        for i in 1..=90 {
            let theta = std::f64::consts::FRAC_PI_2 * i as f64 / 90.0;
            let n = effective_e_index(&t, "BBO", 0.532, theta).unwrap();
            assert!(n <= prev + 1e-15);
            prev = n;
        }
    }

    #[test]
    fn degenerate_phase_matching_angle() {
        let t = bbo();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 1064.0, 1064.0).unwrap();
        let deg = theta.to_degrees();
        // Independently hand-computed from the published fit: 22.83 degrees.
        assert!((deg - 22.8).abs() < 0.5, "got {deg}");
        let dk = phase_mismatch(&t, "BBO", theta, 532.0, 1064.0, 1064.0).unwrap();
        assert!(dk.abs() < 1e-9, "residual {dk} rad/mm");
    }

    #[test]
    fn nondegenerate_angle_in_expected_window() {
        let t = bbo();
        let li = conjugate_wavelength(532.0, 810.0).unwrap();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 810.0, li).unwrap();
        let deg = theta.to_degrees();
        assert!((20.0..26.0).contains(&deg), "got {deg}");
        let dk = phase_mismatch(&t, "BBO", theta, 532.0, 810.0, li).unwrap();
        assert!(dk.abs() < 1e-9);
    }

    #[test]
    fn perturbed_angle_changes_sign_like_index_derivative() {
        let t = bbo();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 1064.0, 1064.0).unwrap();
        let plus = phase_mismatch(&t, "BBO", theta + 1f64.to_radians(), 532.0, 1064.0, 1064.0)
            .unwrap();
        // n_e(theta) decreases with theta for a negative uniaxial crystal,
        // so the mismatch goes negative past the solution.
        assert!(plus < 0.0);
        let minus = phase_mismatch(&t, "BBO", theta - 1f64.to_radians(), 532.0, 1064.0, 1064.0)
            .unwrap();
        assert!(minus > 0.0);
        // Finite-difference slope agrees in sign.
        let slope = (plus - minus) / 2f64.to_radians();
        assert!(slope < 0.0);
    }

    #[test]
    fn positive_uniaxial_material_has_no_type_one_solution() {
        // Synthetic material with n_e > n_o over the whole window.
        let mut t = bbo();
        t.insert(MaterialCoefficients {
            id: "positive-test".into(),
            ordinary: SellmeierExpansion {
                constant: 1.0,
                terms: vec![(1.2, 0.01)],
                valid_um: (0.3, 5.0),
            },
            extraordinary: SellmeierExpansion {
                constant: 1.0,
                terms: vec![(1.5, 0.01)],
                valid_um: (0.3, 5.0),
            },
        });
        let err = phase_matching_angle(&t, "positive-test", 532.0, 1064.0, 1064.0).unwrap_err();
        assert!(matches!(err, Error::NoSolution { .. }));
    }

    #[test]
    fn random_pairs_solve_to_tiny_residual() {
        let t = bbo();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100 {
            let ls = 700.0 + rng.gen::<f64>() * 350.0;
            let li = conjugate_wavelength(532.0, ls).unwrap();
            let theta = phase_matching_angle(&t, "BBO", 532.0, ls, li).unwrap();
            let dk = phase_mismatch(&t, "BBO", theta, 532.0, ls, li).unwrap();
            assert!(dk.abs() < 1e-9, "ls={ls}: residual {dk}");
        }
    }

    #[test]
    fn jsi_peaks_on_ridge_and_vanishes_at_sinc_zero() {
        let t = bbo();
        let pump = PumpConfig::default();
        let li = conjugate_wavelength(532.0, 810.0).unwrap();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 810.0, li).unwrap();
        let crystal = CrystalConfig {
            thickness_mm: 1.0,
            cut_angle_rad: theta,
            material_id: "BBO".into(),
        };
        // On-ridge, phase matched: sinc factor 1, envelope 1.
        let w = joint_spectral_intensity(&t, 810.0, li, &pump, &crystal).unwrap();
        assert!((w - 1.0).abs() < 1e-9, "peak weight {w}");

        // Find the idler offset where dk * L / 2 = pi: weight ~ 0 there.
        let mut lo = li;
        let mut hi = li + 20.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let dk = phase_mismatch(&t, "BBO", theta, 532.0, 810.0, mid).unwrap();
            if (dk * crystal.thickness_mm * 0.5).abs() < std::f64::consts::PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let broad = PumpConfig {
            bandwidth_nm: 1e4,
            ..pump.clone()
        };
        let w0 = joint_spectral_intensity(&t, 810.0, 0.5 * (lo + hi), &broad, &crystal).unwrap();
        assert!(w0 < 1e-12, "sinc zero weight {w0}");
    }

    #[test]
    fn thicker_crystal_narrows_sinc_first_zero_in_proportion() {
        // The first-zero full width of the sinc^2 factor, measured in dk,
        // halves when the crystal thickness doubles. Tabulate a flat-pump
        // JSI cross-section along the idler axis and read the zeros off in
        // mismatch units (the idler-to-dk map is not linear, so widths are
        // compared in dk, where the invariant lives).
        let t = bbo();
        let li0 = conjugate_wavelength(532.0, 810.0).unwrap();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 810.0, li0).unwrap();
        let broad = PumpConfig {
            bandwidth_nm: 1e4,
            ..PumpConfig::default()
        };
        let width_for = |thickness: f64| {
            let crystal = CrystalConfig {
                thickness_mm: thickness,
                cut_angle_rad: theta,
                material_id: "BBO".into(),
            };
            let scan: Vec<f64> = (0..200_000)
                .map(|i| li0 - 8.0 + 16.0 * i as f64 / 199_999.0)
                .collect();
            let cross: Vec<(f64, f64)> = scan
                .iter()
                .map(|&li| {
                    let w = joint_spectral_intensity(&t, 810.0, li, &broad, &crystal).unwrap();
                    let dk = phase_mismatch(&t, "BBO", theta, 532.0, 810.0, li).unwrap();
                    (dk, w)
                })
                .collect();
            let peak = cross
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .unwrap()
                .0;
            let right = (peak..cross.len())
                .find(|&i| cross[i].1 < 1e-6)
                .expect("right zero in scan");
            let left = (0..=peak)
                .rev()
                .find(|&i| cross[i].1 < 1e-6)
                .expect("left zero in scan");
            (cross[right].0 - cross[left].0).abs()
        };
        let w1 = width_for(1.0);
        let w2 = width_for(2.0);
        let ratio = w1 / w2;
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
        // Sanity: the analytic first-zero width in dk is 4 pi / L.
        assert!((w1 - 4.0 * std::f64::consts::PI).abs() < 0.1, "w1 {w1}");
    }

    fn test_jsi(thickness_mm: f64, bandwidth_nm: f64) -> JsiTable {
        let t = bbo();
        let li = conjugate_wavelength(532.0, 810.0).unwrap();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 810.0, li).unwrap();
        let pump = PumpConfig {
            bandwidth_nm,
            ..PumpConfig::default()
        };
        let crystal = CrystalConfig {
            thickness_mm,
            cut_angle_rad: theta,
            material_id: "BBO".into(),
        };
        JsiTable::new(&t, &pump, &crystal, &JsiGridSpec::default()).unwrap()
    }

    #[test]
    fn marginal_narrows_with_thickness() {
        // Numerically integrated signal marginals: the 3 mm crystal is
        // narrower than the 1 mm one.
        let rms_width = |jsi: &JsiTable| {
            let m = jsi.signal_marginal();
            let xs = jsi.signal_centers();
            let tot: f64 = m.iter().sum();
            let mean: f64 = xs.iter().zip(m).map(|(x, w)| x * w).sum::<f64>() / tot;
            (xs.iter()
                .zip(m)
                .map(|(x, w)| (x - mean).powi(2) * w)
                .sum::<f64>()
                / tot)
                .sqrt()
        };
        let w1 = rms_width(&test_jsi(1.0, 0.052));
        let w3 = rms_width(&test_jsi(3.0, 0.052));
        assert!(w3 < w1, "w3={w3} vs w1={w1}");
    }

    #[test]
    fn vanishing_bandwidth_is_a_config_error() {
        let t = bbo();
        let li = conjugate_wavelength(532.0, 810.0).unwrap();
        let theta = phase_matching_angle(&t, "BBO", 532.0, 810.0, li).unwrap();
        let pump = PumpConfig {
            bandwidth_nm: 1e-12,
            ..PumpConfig::default()
        };
        let crystal = CrystalConfig {
            thickness_mm: 1.0,
            cut_angle_rad: theta,
            material_id: "BBO".into(),
        };
        let err = JsiTable::new(&t, &pump, &crystal, &JsiGridSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err}");
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let jsi = test_jsi(1.0, 0.052);
        let run = || {
            let mut rng = ChaCha12Rng::seed_from_u64(7);
            let mut state = SourceState::new(&jsi);
            (0..500).map(|_| sample_pair(&mut state, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sampled_pairs_conserve_energy_within_envelope() {
        let jsi = test_jsi(1.0, 0.052);
        let sigma = jsi.pump().sigma_inverse_nm();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut state = SourceState::new(&jsi);
        for _ in 0..20_000 {
            let ev = sample_pair(&mut state, &mut rng);
            assert!(ev.lambda_s_nm < ev.lambda_i_nm);
            let resid =
                (1.0 / ev.lambda_s_nm + 1.0 / ev.lambda_i_nm - 1.0 / 532.0).abs();
            assert!(resid <= 4.0 * sigma, "residual {resid} vs 4 sigma {}", 4.0 * sigma);
        }
    }

    #[test]
    fn delta_pump_limit_forces_conjugates() {
        // Narrow pump: every sampled idler is the conjugate of its signal
        // within the grid resolution.
        let jsi = test_jsi(1.0, 0.005);
        let idler_step = jsi.idler_centers()[1] - jsi.idler_centers()[0];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut state = SourceState::new(&jsi);
        for _ in 0..5_000 {
            let ev = sample_pair(&mut state, &mut rng);
            let conj = conjugate_wavelength(532.0, ev.lambda_s_nm).unwrap();
            assert!(
                (ev.lambda_i_nm - conj).abs() < idler_step,
                "idler {} vs conjugate {conj}",
                ev.lambda_i_nm
            );
        }
    }

    #[test]
    fn timestamps_sit_on_pulse_slots() {
        let jsi = test_jsi(1.0, 0.052);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut state = SourceState::new(&jsi);
        let period_ns = 1e9 / jsi.pump().rep_rate_hz;
        let mut last = -1.0;
        for _ in 0..2_000 {
            let ev = sample_pair(&mut state, &mut rng);
            let slots = ev.t_emit_ns / period_ns;
            assert!((slots - slots.round()).abs() < 1e-6);
            assert!(ev.t_emit_ns >= last);
            last = ev.t_emit_ns;
        }
    }
}
