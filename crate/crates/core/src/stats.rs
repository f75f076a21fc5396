//! Goodness-of-fit statistics: Kolmogorov-Smirnov, chi-square, circular moments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{CoreError, Result};
use crate::grid::DensityField;

/// One-sample KS statistic of `samples` against a tabulated reference density.
pub fn ks_statistic(samples: &[f64], reference: &DensityField) -> Result<f64> {
    if samples.is_empty() {
        return Err(CoreError::EmptySamples);
    }
    let cdf = reference.cdf();
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference.cdf_at(&cdf, x);
        sup = sup.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

/// 95% acceptance threshold for the one-sample KS statistic.
pub fn ks_threshold_95(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Asymptotic Kolmogorov distribution CDF, Pr(sqrt(n) D <= z).
pub fn kolmogorov_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        sum += (-1.0f64).powi(k as i32 + 1) * (-2.0 * k * k * z * z).exp();
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of a KS statistic for sample size `n` (asymptotic).
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    1.0 - kolmogorov_cdf((n as f64).sqrt() * statistic)
}

/// Chi-square goodness-of-fit record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n: usize,
}

/// Chi-square test of observed counts against expected counts.
///
/// Bins with expected count below `min_expected` are pooled into their
/// neighbour to keep the asymptotic distribution valid.
pub fn chi_square_test(observed: &[u64], expected: &[f64], min_expected: f64) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(CoreError::Invalid("bin count mismatch".into()));
    }
    let mut obs = Vec::with_capacity(observed.len());
    let mut exp = Vec::with_capacity(expected.len());
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o as f64;
        acc_e += e;
        if acc_e >= min_expected {
            obs.push(acc_o);
            exp.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let (Some(o), Some(e)) = (obs.last_mut(), exp.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        } else {
            obs.push(acc_o);
            exp.push(acc_e);
        }
    }
    if obs.len() < 2 {
        return Err(CoreError::Invalid("too few usable bins".into()));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = 1.0 - chi.cdf(statistic);
    let n = observed.iter().sum::<u64>() as usize;
    Ok(ChiSquareResult { statistic, dof, p_value, n })
}

/// Chi-square test of samples on [0, 2pi) against the uniform distribution.
pub fn chi_square_uniform_circle(samples: &[f64], bins: usize) -> Result<ChiSquareResult> {
    if samples.is_empty() {
        return Err(CoreError::EmptySamples);
    }
    let mut counts = vec![0u64; bins];
    let w = std::f64::consts::TAU / bins as f64;
    for &s in samples {
        let mut i = (s.rem_euclid(std::f64::consts::TAU) / w) as usize;
        if i >= bins {
            i = bins - 1;
        }
        counts[i] += 1;
    }
    let expected = vec![samples.len() as f64 / bins as f64; bins];
    chi_square_test(&counts, &expected, 5.0)
}

/// First circular moment: (mean resultant length, mean angle).
pub fn circular_moment(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for &a in samples {
        c += a.cos();
        s += a.sin();
    }
    ((c * c + s * s).sqrt() / n, s.atan2(c))
}

/// Circular variance, 1 - R. Uniform angles approach 1.
pub fn circular_variance(samples: &[f64]) -> f64 {
    1.0 - circular_moment(samples).0
}

/// Circular correlation (Fisher-Lee) between two angle series.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ma = circular_moment(a).1;
    let mb = circular_moment(b).1;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let sx = (x - ma).sin();
        let sy = (y - mb).sin();
        num += sx * sy;
        da += sx * sx;
        db += sy * sy;
    }
    if da == 0.0 || db == 0.0 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

/// Point estimate with sample size and standard error attached.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and standard error of a sample, pairwise-summed.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 {
            pairwise_sum(&sq) / (n as f64 - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error
    }
}

/// Order-stable pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1..=8 => values.iter().sum(),
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Histogram of samples over `bins` equal cells spanning `[lo, hi]`; out-of-range
/// samples clamp to the end bins.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let w = (hi - lo) / bins as f64;
    for &s in samples {
        let i = (((s - lo) / w) as isize).clamp(0, bins as isize - 1) as usize;
        counts[i] += 1;
    }
    counts
}

/// L1 distance between a sample histogram and a reference density.
pub fn histogram_l1(samples: &[f64], reference: &DensityField, bins: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(CoreError::EmptySamples);
    }
    let g = &reference.grid;
    let counts = histogram(samples, g.lo, g.hi, bins);
    let cdf = reference.cdf();
    let w = (g.hi - g.lo) / bins as f64;
    let n = samples.len() as f64;
    let mut l1 = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let a = g.lo + w * i as f64;
        let p_ref = reference.cdf_at(&cdf, a + w) - reference.cdf_at(&cdf, a);
        l1 += (c as f64 / n - p_ref).abs();
    }
    Ok(l1)
}
