//! Simulators for the processes whose long-run laws are the families in
//! [`crate::families`], and their transient transforms.
//!
//! Every path draws from its own counter-based stream (see [`crate::rng`]),
//! paths run in parallel, and samples are collected in path order, so a
//! configuration always reproduces the same output bit for bit.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Gamma as GammaDist};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::divisibility::tweble_levy_scale;
use crate::error::{Error, Result};
use crate::families::poisson;
use crate::quad;
use crate::rng::path_rng;
use crate::series::PowerSeries;

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_HORIZON: f64 = 20.0;

/// Largest share of the driver mean the OU-TweBLE jump cutoff may discard.
pub const MAX_DISCARDED_FRACTION: f64 = 0.05;

/// Mass a cluster pgf may miss through truncation.
const CLUSTER_DEFICIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Continuous-time horizon.
    pub horizon: f64,
    /// Recorded steps of a discrete chain after `burn_in`.
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            horizon: DEFAULT_HORIZON,
            n_steps: 0,
            burn_in: DEFAULT_BURN_IN,
            seed,
            stream_id: 0,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_steps(mut self, burn_in: usize, n_steps: usize) -> Self {
        self.burn_in = burn_in;
        self.n_steps = n_steps;
        self
    }

    pub fn with_stream(mut self, stream_id: u64) -> Self {
        self.stream_id = stream_id;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::Domain {
                name: "horizon",
                value: self.horizon,
                range: "[0, inf)",
            });
        }
        Ok(())
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        path_rng(self.seed, self.stream_id, path as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub terminal_samples: Vec<f64>,
    pub config: SimConfig,
    /// Disasters (chain), immigrant clusters or driver jumps per path.
    pub event_counts: Vec<u64>,
    /// Expected contribution of jumps dropped by a cutoff.
    pub discarded_mean: Option<f64>,
}

fn run_paths(
    cfg: &SimConfig,
    path: impl Fn(&mut ChaCha8Rng) -> (f64, u64) + Sync,
) -> (Vec<f64>, Vec<u64>) {
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| path(&mut cfg.rng(i)))
        .unzip()
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

/// `X_{n+1} = X_n + beta_{n+1}` with probability `p`, else `0`;
/// `beta ~ Poisson(alpha)`, `X_0 = 0`. Runs `burn_in + n_steps` steps.
pub fn simulate_disaster_chain(alpha: f64, p: f64, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    positive("alpha", alpha)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            range: "(0, 1); p = 0 or 1 gives a degenerate chain",
        });
    }
    let steps = cfg.burn_in + cfg.n_steps;
    let (terminal_samples, event_counts) = run_paths(cfg, |rng| {
        let (mut x, mut disasters) = (0.0, 0u64);
        for _ in 0..steps {
            if rng.random::<f64>() < p {
                x += poisson(rng, alpha);
            } else {
                x = 0.0;
                disasters += 1;
            }
        }
        (x, disasters)
    });
    Ok(SimResult {
        terminal_samples,
        config: cfg.clone(),
        event_counts,
        discarded_mean: None,
    })
}

/// Check that `h` is a cluster-size pgf: `h(0) = 0`, nonnegative
/// coefficients, total mass 1 up to truncation.
pub fn validate_cluster_pgf(h: &PowerSeries) -> Result<()> {
    if h.coeff(0).abs() > 1e-12 {
        return Err(Error::InvalidClusterPgf(format!(
            "h(0) = {} must be 0",
            h.coeff(0)
        )));
    }
    if let Some((k, v)) = h.min_coefficient_from(1) {
        if v < 0.0 {
            return Err(Error::InvalidClusterPgf(format!(
                "coefficient {k} is negative ({v:e})"
            )));
        }
    }
    let deficit = 1.0 - h.sum();
    if deficit.abs() > CLUSTER_DEFICIT_TOL {
        return Err(Error::InvalidClusterPgf(format!(
            "coefficients sum to {} (|1 - sum| > {CLUSTER_DEFICIT_TOL:e}); raise the order",
            h.sum()
        )));
    }
    Ok(())
}

/// Pure-death process with immigration in clusters: clusters arrive at rate
/// `r` with size pgf `h`, and every individual dies at rate 1.
///
/// Exact sampler: `Poisson(r t)` arrival epochs uniform on `[0, t]`; a member
/// of a cluster arriving at `s` is alive at `t` with probability
/// `e^{-(t - s)}`.
pub fn simulate_death_immigration(r: f64, h: &PowerSeries, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    positive("r", r)?;
    validate_cluster_pgf(h)?;
    let sizes = WeightedIndex::new(h.coeffs().iter().map(|c| c.max(0.0)))
        .map_err(|e| Error::InvalidClusterPgf(e.to_string()))?;
    let t = cfg.horizon;
    let (terminal_samples, event_counts) = run_paths(cfg, |rng| {
        let n = poisson(rng, r * t) as u64;
        let mut alive = 0u64;
        for _ in 0..n {
            let age = t * rng.random::<f64>();
            let k = sizes.sample(rng) as u64;
            alive += Binomial::new(k, (-age).exp())
                .expect("survival probability in [0, 1]")
                .sample(rng);
        }
        (alive as f64, n)
    });
    Ok(SimResult {
        terminal_samples,
        config: cfg.clone(),
        event_counts,
        discarded_mean: None,
    })
}

/// `phi_t(z) = exp{-r integral_0^t [1 - h(1 - e^{-s}(1 - z))] ds}`.
pub fn transient_pgf_death_immigration(r: f64, h: &PowerSeries, t: f64, z: f64) -> Result<f64> {
    positive("r", r)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain {
            name: "z",
            value: z,
            range: "[0, 1]",
        });
    }
    let f = |s: f64| 1.0 - h.eval(1.0 - (-s).exp() * (1.0 - z));
    Ok((-r * quad::integrate(f, 0.0, t, 1e-12)).exp())
}

/// OU process `dX = -X dt + dL`, `X_0 = 0`, driven by a rate-`alpha`
/// compound Poisson process with exponential jumps of mean `beta`. Sampled
/// exactly as `sum_i e^{-(t - s_i)} D_i`.
pub fn simulate_ou_compound_poisson(alpha: f64, beta: f64, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    let jump = Exp::new(1.0 / beta).map_err(|e| Error::Config(e.to_string()))?;
    let t = cfg.horizon;
    let (terminal_samples, event_counts) = run_paths(cfg, |rng| {
        let n = poisson(rng, alpha * t) as u64;
        let x: f64 = (0..n)
            .map(|_| {
                let age = t * rng.random::<f64>();
                (-age).exp() * jump.sample(rng)
            })
            .sum();
        (x, n)
    });
    Ok(SimResult {
        terminal_samples,
        config: cfg.clone(),
        event_counts,
        discarded_mean: None,
    })
}

fn check_plst_args(t: f64, lambda: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf]",
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain {
            name: "lambda",
            value: lambda,
            range: "[0, inf)",
        });
    }
    Ok(())
}

/// `Phi_t(lambda) = ((1 + lambda beta) / (1 + lambda beta e^{-t}))^{-alpha}`.
/// `t = inf` gives the gamma limit `(1 + lambda beta)^{-alpha}`.
pub fn transient_plst_ou_gamma(alpha: f64, beta: f64, t: f64, lambda: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    check_plst_args(t, lambda)?;
    let lb = lambda * beta;
    Ok(((1.0 + lb * (-t).exp()) / (1.0 + lb)).powf(alpha))
}

/// `exp{-alpha integral_0^t (1 - phi_D(lambda e^{-s})) ds}` with the jump
/// transform `phi_D(u) = 1 / (1 + u beta)`, by quadrature.
pub fn transient_plst_ou_gamma_quad(alpha: f64, beta: f64, t: f64, lambda: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    check_plst_args(t, lambda)?;
    if !t.is_finite() {
        return Err(Error::Domain {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    let f = |s: f64| {
        let u = lambda * (-s).exp() * beta;
        u / (1.0 + u)
    };
    Ok((-alpha * quad::integrate(f, 0.0, t, 1e-13)).exp())
}

/// Jump law of the OU-TweBLE driver restricted to `x > eps`.
///
/// The driver Lévy density is `(1 - alpha)^{1 - alpha} pi(x)` with
/// `Gamma(1 - alpha) pi(x) = alpha x^{-alpha-1} e^{-theta x} + theta x^{-alpha} e^{-theta x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedDriver {
    pub alpha: f64,
    pub theta: f64,
    pub eps: f64,
    /// Jump rate from the `x^{-alpha-1}` part.
    pub rate_a: f64,
    /// Jump rate from the `x^{-alpha}` part.
    pub rate_b: f64,
    /// `integral_0^eps x (1 - alpha)^{1 - alpha} pi(x) dx`.
    pub discarded_mean: f64,
    /// Driver mean `E L_1`, the TweBLE mean `(theta / (1 - alpha))^{alpha - 1}`.
    pub full_mean: f64,
}

impl TruncatedDriver {
    pub fn new(alpha: f64, theta: f64, eps: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                range: "(0, 1)",
            });
        }
        positive("theta", theta)?;
        positive("eps", eps)?;
        let scale = tweble_levy_scale(alpha);
        let y = theta * eps;
        let upper = gamma_ur(1.0 - alpha, y);
        let rate_a =
            scale * theta.powf(alpha) * (y.powf(-alpha) * (-y).exp() / gamma(1.0 - alpha) - upper);
        let rate_b = scale * theta.powf(alpha) * upper;
        // integral_0^eps x pi(x) dx through lower incomplete gammas
        let lower = |s: f64| gamma(s) * gamma_lr(s, y);
        let discarded_mean = scale * theta.powf(alpha - 1.0) / gamma(1.0 - alpha)
            * (alpha * lower(1.0 - alpha) + lower(2.0 - alpha));
        let full_mean = (theta / (1.0 - alpha)).powf(alpha - 1.0);
        Ok(Self {
            alpha,
            theta,
            eps,
            rate_a,
            rate_b,
            discarded_mean,
            full_mean,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate_a + self.rate_b
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.discarded_mean / self.full_mean
    }

    fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R, tail: &GammaDist<f64>) -> f64 {
        if rng.random::<f64>() * self.rate() < self.rate_a {
            // Pareto(eps, alpha) proposal, accept with e^{-theta (x - eps)}
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let x = self.eps * u.powf(-1.0 / self.alpha);
                if rng.random::<f64>() < (-self.theta * (x - self.eps)).exp() {
                    return x;
                }
            }
        } else {
            loop {
                let x = tail.sample(rng);
                if x > self.eps {
                    return x;
                }
            }
        }
    }
}

/// OU process driven by the TweBLE subordinator (`0 < alpha < 1`), with
/// jumps below `eps` dropped. Fails when the dropped share of the driver
/// mean exceeds [`MAX_DISCARDED_FRACTION`].
pub fn simulate_tweble_ou(alpha: f64, theta: f64, cfg: &SimConfig, eps: f64) -> Result<SimResult> {
    cfg.validate()?;
    let driver = TruncatedDriver::new(alpha, theta, eps)?;
    let frac = driver.discarded_fraction();
    if frac > MAX_DISCARDED_FRACTION {
        return Err(Error::Config(format!(
            "jump cutoff eps = {eps} discards {:.2}% of the driver mean (limit {:.0}%)",
            100.0 * frac,
            100.0 * MAX_DISCARDED_FRACTION
        )));
    }
    let tail =
        GammaDist::new(1.0 - alpha, 1.0 / theta).map_err(|e| Error::Config(e.to_string()))?;
    let t = cfg.horizon;
    let (terminal_samples, event_counts) = run_paths(cfg, |rng| {
        let n = poisson(rng, driver.rate() * t) as u64;
        let x: f64 = (0..n)
            .map(|_| {
                let age = t * rng.random::<f64>();
                (-age).exp() * driver.sample_jump(rng, &tail)
            })
            .sum();
        (x, n)
    });
    Ok(SimResult {
        terminal_samples,
        config: cfg.clone(),
        event_counts,
        discarded_mean: Some(driver.discarded_mean * (-(-t).exp_m1())),
    })
}
