//! Monte Carlo summaries and the two goodness-of-fit tests used by the
//! test-suite and the sweep driver.

use rand::seq::SliceRandom;

use crate::rng::keyed_rng;

/// (mean, standard error of the mean). SE is 0 for fewer than two values.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    (mean, (sample_variance(values) / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample variance, from the fourth central moment.
pub fn variance_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n < 4.0 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    ((m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n).max(0.0).sqrt()
}

/// Kolmogorov distribution survival function Q(x) = P(K > x).
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    let p = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    KsResult { statistic: d, p_value: p }
}

/// Permutation test that the column index carries no information.
///
/// `table[r][i]` is the value of unit i in replica r. The statistic is the
/// spread of the per-unit means; each permutation shuffles units within
/// every replica. Returns the permutation p-value.
pub fn permutation_index_test(table: &[Vec<f64>], permutations: usize, seed: u64) -> f64 {
    let stat = |t: &[Vec<f64>]| -> f64 {
        let units = t[0].len();
        let reps = t.len() as f64;
        let means: Vec<f64> = (0..units).map(|i| t.iter().map(|row| row[i]).sum::<f64>() / reps).collect();
        sample_variance(&means)
    };
    let observed = stat(table);
    let mut rng = keyed_rng(&[seed, 0x7065_726d]);
    let mut work = table.to_vec();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        for row in work.iter_mut() {
            row.shuffle(&mut rng);
        }
        if stat(&work) >= observed {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + permutations) as f64
}
