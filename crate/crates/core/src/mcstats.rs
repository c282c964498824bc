//! Monte Carlo summaries, distribution distances and Taylor's-law regression.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::path_rng;

const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateCI {
    pub point: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

impl EstimateCI {
    pub fn new(point: f64, stderr: f64, n: usize) -> Self {
        Self {
            point,
            stderr,
            ci95_low: point - Z95 * stderr,
            ci95_high: point + Z95 * stderr,
            n,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci95_low <= x && x <= self.ci95_high
    }

    /// `|point - x|` in standard errors.
    pub fn z_score(&self, x: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.point == x {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.point - x).abs() / self.stderr
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub mean: EstimateCI,
    /// Unbiased sample variance; standard error from the fourth central
    /// moment.
    pub variance: EstimateCI,
}

fn central_moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    (mean, m2 / n, m4 / n)
}

pub fn empirical_moments(samples: &[f64]) -> Result<EmpiricalMoments> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let (mean, m2, m4) = central_moments(samples);
    let s2 = m2 * nf / (nf - 1.0);
    let var_s2 = ((m4 - (nf - 3.0) / (nf - 1.0) * s2 * s2) / nf).max(0.0);
    Ok(EmpiricalMoments {
        mean: EstimateCI::new(mean, (s2 / nf).sqrt(), n),
        variance: EstimateCI::new(s2, var_s2.sqrt(), n),
    })
}

/// Bootstrap standard error of the sample variance.
pub fn bootstrap_variance(samples: &[f64], n_boot: usize, seed: u64) -> Result<EstimateCI> {
    let base = empirical_moments(samples)?;
    if n_boot < 2 {
        return Err(Error::Config(
            "bootstrap needs at least 2 replicates".into(),
        ));
    }
    let n = samples.len();
    let mut rng = path_rng(seed, u64::MAX, 0);
    let mut buf = vec![0.0; n];
    let reps: Vec<f64> = (0..n_boot)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.random_range(0..n)];
            }
            let (_, m2, _) = central_moments(&buf);
            m2 * n as f64 / (n as f64 - 1.0)
        })
        .collect();
    let (_, v, _) = central_moments(&reps);
    let se = (v * n_boot as f64 / (n_boot as f64 - 1.0)).sqrt();
    Ok(EstimateCI::new(base.variance.point, se, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// `log sigma2 - a_hat - b_hat log mu`, in input order.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `log sigma2` on `log mu`.
pub fn fit_taylor(points: &[(f64, f64)]) -> Result<TlFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 (mu, sigma2) points, got {}",
            points.len()
        )));
    }
    for &(mu, s2) in points {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain {
                name: "mu",
                value: mu,
                range: "(0, inf)",
            });
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::Domain {
                name: "sigma2",
                value: s2,
                range: "(0, inf)",
            });
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx <= f64::EPSILON * xbar.abs().max(1.0) * n {
        return Err(Error::InsufficientData(
            "all log mu values are equal".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let b_hat = sxy / sxx;
    let a_hat = ybar - b_hat * xbar;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - a_hat - b_hat * x)
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(TlFit {
        a_hat,
        b_hat,
        r_squared,
        n_points: points.len(),
        residuals,
    })
}

/// Counts of the integer values `0..` in `samples`.
pub fn histogram(samples: &[f64]) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    for &x in samples {
        if !(x >= 0.0 && x.fract() == 0.0 && x < 1e9) {
            return Err(Error::Domain {
                name: "sample",
                value: x,
                range: "nonnegative integers",
            });
        }
        let k = x as usize;
        if k >= out.len() {
            out.resize(k + 1, 0);
        }
        out[k] += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfDistance {
    pub tv: f64,
    pub chi2: f64,
    /// Analytic mass at or above the cutoff.
    pub tail_mass: f64,
}

/// Analytic mass the tail bin may hold.
pub const MAX_TAIL_MASS: f64 = 1e-6;

/// Distance between a histogram and an analytic pmf on `0..cutoff`, with a
/// final bin for everything at or above `cutoff`.
pub fn pmf_distance(
    counts: &[u64],
    pmf: impl Fn(usize) -> f64,
    cutoff: usize,
) -> Result<PmfDistance> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("empty histogram".into()));
    }
    let n = total as f64;
    let probs: Vec<f64> = (0..cutoff).map(&pmf).collect();
    let tail_mass = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    if tail_mass > MAX_TAIL_MASS {
        return Err(Error::Config(format!(
            "cutoff {cutoff} leaves analytic tail mass {tail_mass:e} > {MAX_TAIL_MASS:e}"
        )));
    }
    let observed_tail: u64 = counts.iter().skip(cutoff).sum();
    let bins = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| (counts.get(k).copied().unwrap_or(0) as f64, p))
        .chain(std::iter::once((observed_tail as f64, tail_mass)));
    let (mut tv, mut chi2) = (0.0, 0.0);
    for (obs, p) in bins {
        tv += (obs / n - p).abs();
        let expected = n * p;
        if expected > 0.0 {
            chi2 += (obs - expected).powi(2) / expected;
        }
    }
    Ok(PmfDistance {
        tv: 0.5 * tv,
        chi2,
        tail_mass,
    })
}

/// Total variation between two pmfs given as probability vectors.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Normalize a histogram to a probability vector.
pub fn empirical_pmf(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect()
}

/// Kolmogorov-Smirnov distance `sup |F_n - F|`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d
            .max((j as f64 / n - f).abs())
            .max((f - i as f64 / n).abs());
        i = j;
    }
    Ok(d)
}
