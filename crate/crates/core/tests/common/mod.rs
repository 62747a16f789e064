//! Shared statistical oracles for the integration suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_p(statistic: f64, dof: f64) -> f64 {
    let dist = ChiSquared::new(dof).expect("positive dof");
    1.0 - dist.cdf(statistic)
}

/// Chi-square goodness-of-fit p-value of observed counts against expected
/// weights (normalized internally); bins with tiny expectation are pooled.
pub fn chi_square_gof_p(observed: &[u64], expected_weights: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_weights.len());
    let n: u64 = observed.iter().sum();
    let total_w: f64 = expected_weights.iter().sum();
    let mut stat = 0.0;
    let mut dof = 0.0f64;
    let mut pool_obs = 0.0;
    let mut pool_exp = 0.0;
    for (&o, &w) in observed.iter().zip(expected_weights) {
        let e = n as f64 * w / total_w;
        if e < 5.0 {
            pool_obs += o as f64;
            pool_exp += e;
            if pool_exp >= 5.0 {
                let d = pool_obs - pool_exp;
                stat += d * d / pool_exp;
                dof += 1.0;
                pool_obs = 0.0;
                pool_exp = 0.0;
            }
            continue;
        }
        let d = o as f64 - e;
        stat += d * d / e;
        dof += 1.0;
    }
    if pool_exp > 0.0 {
        let d = pool_obs - pool_exp;
        stat += d * d / pool_exp;
        dof += 1.0;
    }
    chi_square_p(stat, (dof - 1.0).max(1.0))
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic Kolmogorov series).
pub fn ks_two_sample_p(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / n;
        let fb = j as f64 / m;
        d = d.max((fa - fb).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    // Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += 2.0 * sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}
