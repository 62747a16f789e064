//! Savitzky-Golay smoothing.
//!
//! Each output value is the least-squares polynomial fit over a sliding
//! window, evaluated at the window's query point. Interior points use the
//! centered window; edge points fit the same order on the truncated window,
//! which keeps polynomial inputs exact everywhere.
//!
//! The fits run in a discrete orthonormal polynomial basis built by the
//! Stieltjes three-term recurrence, so high orders on wide windows stay
//! numerically stable (basis values on the window are bounded by 1).

use crate::error::{Error, Result};
use crate::float::Real;

/// Validate window/order and return the half width.
fn check_params(window_bins: usize, poly_order: usize) -> Result<usize> {
    if window_bins < 3 || window_bins.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "smoothing window must be odd and at least 3, got {window_bins}"
        )));
    }
    if poly_order >= window_bins {
        return Err(Error::Parameter(format!(
            "polynomial order {poly_order} must be below the window size {window_bins}"
        )));
    }
    Ok(window_bins / 2)
}

/// Weights of the least-squares fit of degree `order` over integer offsets
/// `lo..=hi` (relative to the query point at offset 0), evaluated at 0.
fn fit_weights<T: Real>(lo: i64, hi: i64, order: usize) -> Vec<T> {
    let n = (hi - lo + 1) as usize;
    let order = order.min(n - 1);
    // offsets scaled into [-1, 1] for conditioning
    let scale = T::of((lo.abs().max(hi.abs()) as f64).max(1.0));
    let xs: Vec<T> = (lo..=hi).map(|o| T::of(o as f64) / scale).collect();

    // Orthonormal basis values on the window (rows) and at the query point.
    let mut p_prev = vec![T::zero(); n];
    let mut p_cur = vec![T::one(); n];
    let mut q_prev = T::zero();
    let mut q_cur = T::one();
    let norm0 = T::of(n as f64).sqrt();
    for v in p_cur.iter_mut() {
        *v = *v / norm0;
    }
    q_cur = q_cur / norm0;

    // weights accumulate sum_k p_k(x_j) p_k(0)
    let mut weights: Vec<T> = p_cur.iter().map(|&p| p * q_cur).collect();

    let mut beta = T::zero();
    for _ in 0..order {
        // alpha_k = <x p_k, p_k>
        let alpha = xs
            .iter()
            .zip(&p_cur)
            .fold(T::zero(), |acc, (&x, &p)| acc + x * p * p);
        let mut p_next: Vec<T> = xs
            .iter()
            .zip(p_cur.iter().zip(&p_prev))
            .map(|(&x, (&p, &pm))| (x - alpha) * p - beta * pm)
            .collect();
        let q_next = (T::zero() - alpha) * q_cur - beta * q_prev;
        let norm = p_next
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt();
        for v in p_next.iter_mut() {
            *v = *v / norm;
        }
        let q_next = q_next / norm;
        beta = norm;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        for (w, &p) in weights.iter_mut().zip(&p_cur) {
            *w = *w + p * q_cur;
        }
    }
    weights
}

/// Smooth `values` with a window of `window_bins` and fit order `poly_order`.
pub fn savgol_filter<T: Real>(
    values: &[T],
    window_bins: usize,
    poly_order: usize,
) -> Result<Vec<T>> {
    let half = check_params(window_bins, poly_order)? as i64;
    let n = values.len() as i64;
    if n == 0 {
        return Ok(Vec::new());
    }

    // Distinct windows: the interior one plus up to `half` truncations per
    // edge; cache weights per (lo, hi) pattern.
    let mut cache: std::collections::BTreeMap<(i64, i64), Vec<T>> = std::collections::BTreeMap::new();
    let mut out = Vec::with_capacity(values.len());
    for i in 0..n {
        let lo = (-half).max(-i);
        let hi = half.min(n - 1 - i);
        let weights = cache
            .entry((lo, hi))
            .or_insert_with(|| fit_weights(lo, hi, poly_order));
        let mut acc = T::zero();
        for (w, o) in weights.iter().zip(lo..=hi) {
            acc = acc + *w * values[(i + o) as usize];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Interior-window weights (exposed for variance analysis in tests).
pub fn interior_weights<T: Real>(window_bins: usize, poly_order: usize) -> Result<Vec<T>> {
    let half = check_params(window_bins, poly_order)? as i64;
    Ok(fit_weights(-half, half, poly_order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn polynomial(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    #[test]
    fn reproduces_polynomials_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for window in (3..=25usize).step_by(2) {
            for order in 0..window {
                let coeffs: Vec<f64> = (0..=order).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let values: Vec<f64> = (0..40)
                    .map(|i| polynomial(&coeffs, i as f64 / 40.0))
                    .collect();
                let smoothed = savgol_filter(&values, window, order).unwrap();
                let scale = values.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-30);
                for (i, (&a, &b)) in values.iter().zip(&smoothed).enumerate() {
                    assert!(
                        (a - b).abs() <= 1e-9 * scale,
                        "window {window} order {order} bin {i}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let v = vec![1.0f64; 10];
        assert!(savgol_filter(&v, 1, 0).is_err());
        assert!(savgol_filter(&v, 4, 1).is_err());
        assert!(savgol_filter(&v, 5, 5).is_err());
    }

    #[test]
    fn linear_operator() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let sa = savgol_filter(&a, 7, 2).unwrap();
        let sb = savgol_filter(&b, 7, 2).unwrap();
        let ss = savgol_filter(&sum, 7, 2).unwrap();
        for i in 0..30 {
            assert!((ss[i] - (sa[i] + sb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_reduced_by_row_norm() {
        // Oracle: output variance of white noise is sigma^2 * sum(w^2);
        // for window 11 order 2 the interior row norm is 0.2075 (Gram).
        let w: Vec<f64> = interior_weights(11, 2).unwrap();
        let row_norm2: f64 = w.iter().map(|x| x * x).sum();
        assert!((row_norm2 - 0.20745920745920746).abs() < 1e-9);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..20_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let smoothed = savgol_filter(&noise, 11, 2).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
        };
        let (vi, vo) = (var(&noise), var(&smoothed[5..20_000 - 5]));
        assert!(vo < vi, "variance must shrink: {vo} vs {vi}");
        assert!((vo / vi - row_norm2).abs() < 0.02, "ratio {}", vo / vi);
    }

    #[test]
    fn works_in_f32() {
        let values: Vec<f32> = (0..20).map(|i| (i * i) as f32).collect();
        let smoothed = savgol_filter(&values, 7, 2).unwrap();
        for (a, b) in values.iter().zip(&smoothed) {
            assert!((a - b).abs() < 1e-2 * a.abs().max(1.0));
        }
    }
}
