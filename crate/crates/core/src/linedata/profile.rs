//! Line widths, Voigt evaluation, and absorption-coefficient synthesis.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::faddeeva::faddeeva_w;
use crate::float::Real;
use crate::linedata::{AbsorptionProfile, GasConditions, LineRecord};

/// Boltzmann constant, J/K (CODATA exact).
const K_BOLTZMANN: f64 = 1.380649e-23;
/// Speed of light, m/s (exact).
const C_M_PER_S: f64 = 2.99792458e8;
/// Atomic mass unit, kg.
const AMU_KG: f64 = 1.66053906660e-27;
/// Ideal-gas number density, cm^-3, at 1 atm and 1 K: 101325 / k_B * 1e-6.
const LOSCHMIDT_ATM_K: f64 = 7.338939875377e21;

/// Doppler half width at half maximum, cm^-1:
/// (nu0 / c) sqrt(2 ln 2 k_B T / m).
pub fn doppler_width<T: Real>(nu0_cm: T, temperature_k: T, molar_mass_amu: T) -> Result<T> {
    if nu0_cm < T::zero() {
        return Err(Error::domain("doppler_width", "nu0 must be nonnegative"));
    }
    if !(temperature_k > T::zero()) || !(molar_mass_amu > T::zero()) {
        return Err(Error::domain(
            "doppler_width",
            "temperature and molar mass must be positive",
        ));
    }
    let two_ln2 = T::of(2.0 * std::f64::consts::LN_2);
    let kt_over_m = T::of(K_BOLTZMANN) * temperature_k / (molar_mass_amu * T::of(AMU_KG));
    Ok(nu0_cm * (two_ln2 * kt_over_m).sqrt() / T::of(C_M_PER_S))
}

/// Pressure-broadened (Lorentz) half width at half maximum, cm^-1:
/// (296/T)^n_air [gamma_air (P - p_self) + gamma_self p_self].
pub fn lorentz_width(record: &LineRecord, conditions: &GasConditions) -> Result<f64> {
    conditions.validate()?;
    let p = conditions.pressure_total_atm;
    let p_self = conditions.partial_pressure_atm();
    let scale = (296.0 / conditions.temperature_k).powf(record.n_air);
    Ok(scale * (record.gamma_air * (p - p_self) + record.gamma_self * p_self))
}

/// Voigt line-shape density at `nu_cm`, normalized to unit area over nu.
///
/// K(x, y) = Re w(x + iy) with x = sqrt(ln 2) (nu - nu0)/gamma_D and
/// y = sqrt(ln 2) gamma_L/gamma_D; the pure-Doppler and pure-Lorentz limits
/// are evaluated in closed form.
pub fn voigt_value<T: Real>(nu_cm: T, nu0_cm: T, gamma_d: T, gamma_l: T) -> Result<T> {
    if gamma_d < T::zero() || gamma_l < T::zero() {
        return Err(Error::domain("voigt_value", "widths must be nonnegative"));
    }
    if gamma_d == T::zero() && gamma_l == T::zero() {
        return Err(Error::domain(
            "voigt_value",
            "degenerate shape: both widths are zero",
        ));
    }
    let d = nu_cm - nu0_cm;
    if gamma_l == T::zero() {
        // Gaussian of HWHM gamma_d: peak sqrt(ln2/pi)/gamma_d.
        let ln2 = T::of(std::f64::consts::LN_2);
        let u = d / gamma_d;
        return Ok((ln2 / T::PI()).sqrt() / gamma_d * (-ln2 * u * u).exp());
    }
    if gamma_d == T::zero() {
        // Lorentzian of HWHM gamma_l: peak 1/(pi gamma_l).
        return Ok(gamma_l / (T::PI() * (d * d + gamma_l * gamma_l)));
    }
    let sqrt_ln2 = T::of(std::f64::consts::LN_2).sqrt();
    let x = sqrt_ln2 * d / gamma_d;
    let y = sqrt_ln2 * gamma_l / gamma_d;
    let k = faddeeva_w(Complex::new(x, y)).re;
    Ok(k * sqrt_ln2 / (gamma_d * T::PI().sqrt()))
}

/// Absorber number density, cm^-3, from the ideal-gas law at the partial
/// pressure of the absorbing species.
pub fn number_density_per_cm3(conditions: &GasConditions) -> f64 {
    LOSCHMIDT_ATM_K * conditions.partial_pressure_atm() / conditions.temperature_k
}

/// Lines whose (shifted) center sits further than this many combined HWHMs
/// outside the grid are skipped.
const SKIP_DISTANCE_WIDTHS: f64 = 100.0;

/// Synthesize mu(lambda) on `grid_lambda_nm` by summing Voigt lines:
/// mu(nu) = N sum_j S_j f_j(nu; gamma_D, gamma_L, nu0 + delta_air P).
pub fn absorption_profile(
    lines: &[LineRecord],
    conditions: &GasConditions,
    grid_lambda_nm: &[f64],
) -> Result<AbsorptionProfile> {
    conditions.validate()?;
    if grid_lambda_nm.is_empty() {
        return Err(Error::Config("absorption grid is empty".into()));
    }
    if !grid_lambda_nm.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(
            "absorption grid must be strictly ascending".into(),
        ));
    }

    let density = number_density_per_cm3(conditions);
    let nu_grid: Vec<f64> = grid_lambda_nm.iter().map(|&l| 1e7 / l).collect();
    // Ascending lambda means descending nu.
    let (nu_min, nu_max) = (*nu_grid.last().unwrap(), nu_grid[0]);

    let mut mu = vec![0.0f64; grid_lambda_nm.len()];
    for record in lines {
        record.validate()?;
        let gamma_d: f64 = doppler_width(
            record.nu0_wavenumber,
            conditions.temperature_k,
            conditions.molar_mass_amu,
        )?;
        let gamma_l = lorentz_width(record, conditions)?;
        let center = record.nu0_wavenumber + record.delta_air * conditions.pressure_total_atm;
        let reach = SKIP_DISTANCE_WIDTHS * (gamma_d + gamma_l);
        if center < nu_min - reach || center > nu_max + reach {
            continue;
        }
        let strength = density * record.intensity_s;
        if strength == 0.0 {
            continue;
        }
        for (m, &nu) in mu.iter_mut().zip(&nu_grid) {
            *m += strength * voigt_value(nu, center, gamma_d, gamma_l)?;
        }
    }

    AbsorptionProfile::new(grid_lambda_nm.to_vec(), mu, Some(*conditions))
}
