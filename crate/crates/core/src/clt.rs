//! Monte-Carlo verification of the Central Limit Theorem for Birkhoff sums
//! over the volume measure, with the variance estimated along two algebraic
//! routes and a Kolmogorov–Smirnov comparison against the Gaussian limit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;
use crate::sampling::{uniform_starts, with_chunk_rngs, CHUNK};
use crate::torus::{TorusMap, TorusPoint};

use rayon::prelude::*;

/// Minimum sample count for any reported statistic.
pub const MIN_SAMPLE_COUNT: usize = 1000;

/// Truncation lag of the autocorrelation-sum variance estimator.
pub const ACF_LAG: u64 = 32;

// ---------------------------------------------------------------------------
// Standard normal CDF via a rational erf approximation (Cody's method).
// Absolute error below 1e-12 over the full range; bit-exactness across
// platforms is not promised, the tolerance is.
// ---------------------------------------------------------------------------

const ERF_THRESHOLD: f64 = 0.46875;
const INV_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= ERF_THRESHOLD {
        return 1.0 - erf(x);
    } else if y <= 4.0 {
        let mut xnum = ERF_C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + ERF_C[i]) * y;
            xden = (xden + ERF_D[i]) * y;
        }
        scaled_exp(y) * (xnum + ERF_C[7]) / (xden + ERF_D[7])
    } else if y < 26.543 {
        let z = 1.0 / (y * y);
        let mut xnum = ERF_P[5] * z;
        let mut xden = z;
        for i in 0..4 {
            xnum = (xnum + ERF_P[i]) * z;
            xden = (xden + ERF_Q[i]) * z;
        }
        let r = z * (xnum + ERF_P[4]) / (xden + ERF_Q[4]);
        scaled_exp(y) * (INV_SQRT_PI - r) / y
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// exp(−y²) computed with the split trick to avoid cancellation.
fn scaled_exp(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= ERF_THRESHOLD {
        let z = y * y;
        let mut xnum = ERF_A[4] * z;
        let mut xden = z;
        for i in 0..3 {
            xnum = (xnum + ERF_A[i]) * z;
            xden = (xden + ERF_B[i]) * z;
        }
        x * (xnum + ERF_A[3]) / (xden + ERF_B[3])
    } else {
        let e = 1.0 - erfc(y);
        if x < 0.0 {
            -e
        } else {
            e
        }
    }
}

/// CDF of the standard normal distribution.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov distance
// ---------------------------------------------------------------------------

/// Sup distance between the empirical CDF of `values` and a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

// ---------------------------------------------------------------------------
// Birkhoff-sum sampling
// ---------------------------------------------------------------------------

/// Birkhoff n-sums from `count` independent uniform starts.
///
/// Shares its start generation and left-to-right accumulation order with the
/// type-certificate sweep, so values at equal `(n, count, seed)` are
/// bit-identical across both code paths and any thread count.
pub fn birkhoff_values(
    phi: &TrigObservable,
    map: &TorusMap,
    n: u64,
    count: usize,
    seed: u64,
) -> Vec<f64> {
    let starts = uniform_starts(count, seed);
    starts
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&x0| {
                    let mut acc = 0.0;
                    let mut x = x0;
                    for _ in 0..n {
                        acc += phi.evaluate(x);
                        x = map.apply(x);
                    }
                    acc
                })
                .collect::<Vec<f64>>()
        })
        .flatten()
        .collect()
}

/// Fraction of values strictly above the threshold.
pub fn tail_fraction(values: &[f64], threshold: f64) -> f64 {
    let hits = values.iter().filter(|&&v| v > threshold).count();
    hits as f64 / values.len() as f64
}

/// A batch of Birkhoff n-sums sampled from the volume measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltSample {
    pub n: u64,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Sample Birkhoff sums of the centered observable. The observable is
/// centered here (constant term dropped), matching the CLT normalization.
pub fn sample_birkhoff(
    phi: &TrigObservable,
    map: &TorusMap,
    n: u64,
    count: usize,
    seed: u64,
) -> Result<CltSample> {
    map.require_experiment_ready()?;
    if count < MIN_SAMPLE_COUNT {
        return Err(Error::InvalidParameter(format!(
            "count must be at least {MIN_SAMPLE_COUNT}, got {count}"
        )));
    }
    let centered = phi.normalize_zero_mean();
    Ok(CltSample {
        n,
        values: birkhoff_values(&centered, map, n, count, seed),
        seed,
    })
}

/// One variance estimate with its standard error (from the empirical fourth
/// moment of the underlying per-sample statistic).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma_squared: f64,
    pub n_used: u64,
    pub standard_error: f64,
}

/// Both variance estimators and their agreement verdict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceReport {
    /// `mean(φ_n²)/n` from Birkhoff samples.
    pub direct: VarianceEstimate,
    /// Truncated autocorrelation sum `Σ_{|k|<K} ∫ φ·φ∘Tᵏ`.
    pub autocorrelation: VarianceEstimate,
    /// Whether the two agree within 5 combined standard errors.
    pub estimators_agree: bool,
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, (var / n).sqrt())
}

/// Estimate σ² = lim mean(φ_n²)/n two ways and cross-check.
pub fn estimate_variance(
    phi: &TrigObservable,
    map: &TorusMap,
    n: u64,
    count: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let sample = sample_birkhoff(phi, map, n, count, seed)?;
    let squares: Vec<f64> = sample.values.iter().map(|v| v * v / n as f64).collect();
    let (direct_s2, direct_se) = mean_and_se(&squares);

    // Independent route: per start x, the unbiased summand
    // z = φ(x)² + 2 Σ_{k=1}^{K-1} φ(x)·φ(Tᵏx) has mean Σ_{|k|<K} c_k.
    let centered = phi.normalize_zero_mean();
    let zs: Vec<f64> = with_chunk_rngs(count, seed, 1 << 32, |rng, _| {
        let x0 = TorusPoint::new(rng.random(), rng.random());
        let v0 = centered.evaluate(x0);
        let mut x = x0;
        let mut corr = 0.0;
        for _ in 1..ACF_LAG {
            x = map.apply(x);
            corr += centered.evaluate(x);
        }
        v0 * v0 + 2.0 * v0 * corr
    });
    let (acf_s2, acf_se) = mean_and_se(&zs);

    let combined = (direct_se * direct_se + acf_se * acf_se).sqrt();
    let agree = (direct_s2 - acf_s2).abs() <= 5.0 * combined;
    Ok(VarianceReport {
        direct: VarianceEstimate {
            sigma_squared: direct_s2.max(0.0),
            n_used: n,
            standard_error: direct_se,
        },
        autocorrelation: VarianceEstimate {
            sigma_squared: acf_s2.max(0.0),
            n_used: ACF_LAG,
            standard_error: acf_se,
        },
        estimators_agree: agree,
    })
}

/// KS distance between the empirical law of `values/(σ√n)` and the standard
/// normal; rejects σ ≤ 0.
pub fn ks_distance(sample: &CltSample, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let scale = sigma * (sample.n as f64).sqrt();
    let normalized: Vec<f64> = sample.values.iter().map(|v| v / scale).collect();
    Ok(ks_statistic(&normalized, normal_cdf))
}

/// Per-n row of a CLT report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltEntry {
    pub n: u64,
    pub sigma_squared: f64,
    pub sigma_se: f64,
    /// Null when σ̂ = 0 (degenerate sample).
    pub ks: Option<f64>,
    /// `(threshold C, fraction of samples with φ_n > C)`, strict inequality.
    pub tails: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltReport {
    pub entries: Vec<CltEntry>,
    pub count: usize,
    pub seed: u64,
    /// True when the map is a numerically certified shear: the Gaussian
    /// limit is then an empirical observation, not a theorem instance.
    pub empirical_only: bool,
}

/// σ̂², KS distance and tail fractions for each n in the schedule.
pub fn clt_report(
    phi: &TrigObservable,
    map: &TorusMap,
    schedule: &[u64],
    count: usize,
    seed: u64,
    thresholds: &[f64],
) -> Result<CltReport> {
    let mut entries = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let sample = sample_birkhoff(phi, map, n, count, seed)?;
        let squares: Vec<f64> = sample.values.iter().map(|v| v * v / n as f64).collect();
        let (s2, se) = mean_and_se(&squares);
        let ks = if s2 > 0.0 {
            Some(ks_distance(&sample, s2.sqrt())?)
        } else {
            None
        };
        let tails = thresholds
            .iter()
            .map(|&c| (c, tail_fraction(&sample.values, c)))
            .collect();
        entries.push(CltEntry {
            n,
            sigma_squared: s2.max(0.0),
            sigma_se: se,
            ks,
            tails,
        });
    }
    Ok(CltReport {
        entries,
        count,
        seed,
        empirical_only: map.is_sheared(),
    })
}
