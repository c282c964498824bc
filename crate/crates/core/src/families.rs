//! The five two-parameter families: Tweedie–Bar-Lev–Enis (TweBLE), negative
//! binomial, compound Poisson-geometric, Pólya-Aeppli and gamma.
//!
//! Conventions used throughout:
//!
//! * `q = 1 - p` is always derived, never stored.
//! * Compound Poisson-geometric: `X = sum_{i<=N} beta_i` with
//!   `P(N = k) = q p^k` (k >= 0) and `beta_i ~ Poisson(alpha)`.
//! * Pólya-Aeppli: `X = sum_{i<=K} G_i` with `K ~ Poisson(alpha)` and
//!   `P(G = k) = q p^{k-1}` (k >= 1).
//! * TweBLE: `alpha` in `[-40, 2] \ {1}` plus `-inf` (Poisson limit). The
//!   natural parameter must satisfy `theta / (1 - alpha) > 0`, i.e. `theta > 0`
//!   for `alpha < 1` and `theta < 0` for `alpha` in `(1, 2]`. For the Poisson
//!   limit any finite `theta` is allowed and the mean is `exp(-theta)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Geometric, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::PowerSeries;

/// Lower end of the implemented finite TweBLE index range.
pub const TWEBLE_ALPHA_MIN: f64 = -40.0;

/// Negative pmf values above `-PMF_CLAMP_TOL` are treated as roundoff.
pub const PMF_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Tweble,
    #[serde(rename = "negbin")]
    NegBin,
    #[serde(rename = "cpgeo")]
    CpGeo,
    PolyaAeppli,
    Gamma,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Tweble => "tweble",
            FamilyKind::NegBin => "negbin",
            FamilyKind::CpGeo => "cpgeo",
            FamilyKind::PolyaAeppli => "polya-aeppli",
            FamilyKind::Gamma => "gamma",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            FamilyKind::NegBin | FamilyKind::CpGeo | FamilyKind::PolyaAeppli
        )
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tweble" | "tweedie" => Ok(FamilyKind::Tweble),
            "negbin" | "nb" | "negative-binomial" => Ok(FamilyKind::NegBin),
            "cpgeo" | "cpg" | "poisson-geometric" => Ok(FamilyKind::CpGeo),
            "polya-aeppli" | "pa" | "geometric-poisson" => Ok(FamilyKind::PolyaAeppli),
            "gamma" => Ok(FamilyKind::Gamma),
            other => Err(Error::Unsupported(format!(
                "unknown family '{other}' (expected tweble, negbin, cpgeo, polya-aeppli or gamma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyParams {
    Tweble {
        alpha: f64,
        theta: f64,
    },
    #[serde(rename = "negbin")]
    NegBin {
        alpha: f64,
        p: f64,
    },
    #[serde(rename = "cpgeo")]
    CpGeo {
        alpha: f64,
        p: f64,
    },
    PolyaAeppli {
        alpha: f64,
        p: f64,
    },
    Gamma {
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mu: f64,
    pub sigma2: f64,
}

impl Moments {
    /// `log sigma2 / log mu`, without any singularity check.
    pub fn log_ratio(&self) -> f64 {
        self.sigma2.ln() / self.mu.ln()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
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

fn check_probability(value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "p",
            value,
            range: "(0, 1)",
        })
    }
}

impl FamilyParams {
    pub fn tweble(alpha: f64, theta: f64) -> Result<Self> {
        Self::Tweble { alpha, theta }.validated()
    }

    pub fn neg_bin(alpha: f64, p: f64) -> Result<Self> {
        Self::NegBin { alpha, p }.validated()
    }

    pub fn cp_geo(alpha: f64, p: f64) -> Result<Self> {
        Self::CpGeo { alpha, p }.validated()
    }

    pub fn polya_aeppli(alpha: f64, p: f64) -> Result<Self> {
        Self::PolyaAeppli { alpha, p }.validated()
    }

    pub fn gamma(alpha: f64, beta: f64) -> Result<Self> {
        Self::Gamma { alpha, beta }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::Tweble { .. } => FamilyKind::Tweble,
            Self::NegBin { .. } => FamilyKind::NegBin,
            Self::CpGeo { .. } => FamilyKind::CpGeo,
            Self::PolyaAeppli { .. } => FamilyKind::PolyaAeppli,
            Self::Gamma { .. } => FamilyKind::Gamma,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind().is_discrete()
    }

    /// `1 - p` for the three discrete families.
    pub fn q(&self) -> Option<f64> {
        match *self {
            Self::NegBin { p, .. } | Self::CpGeo { p, .. } | Self::PolyaAeppli { p, .. } => {
                Some(1.0 - p)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Tweble { alpha, theta } => {
                if alpha == f64::NEG_INFINITY {
                    return if theta.is_finite() {
                        Ok(())
                    } else {
                        Err(Error::Domain {
                            name: "theta",
                            value: theta,
                            range: "(-inf, inf) for the Poisson limit",
                        })
                    };
                }
                if !(TWEBLE_ALPHA_MIN..=2.0).contains(&alpha) || alpha == 1.0 {
                    return Err(Error::Domain {
                        name: "alpha",
                        value: alpha,
                        range: "[-40, 2] \\ {1} or -inf",
                    });
                }
                if !theta.is_finite() || theta == 0.0 || theta / (1.0 - alpha) <= 0.0 {
                    return Err(Error::Domain {
                        name: "theta",
                        value: theta,
                        range: "theta/(1-alpha) > 0 (theta > 0 when alpha < 1, theta < 0 when alpha in (1, 2])",
                    });
                }
                Ok(())
            }
            Self::NegBin { alpha, p }
            | Self::CpGeo { alpha, p }
            | Self::PolyaAeppli { alpha, p } => {
                check_positive("alpha", alpha)?;
                check_probability(p)
            }
            Self::Gamma { alpha, beta } => {
                check_positive("alpha", alpha)?;
                check_positive("beta", beta)
            }
        }
    }

    pub fn moments(&self) -> Result<Moments> {
        self.validate()?;
        let m = match *self {
            Self::Tweble { alpha, theta } => {
                if alpha == f64::NEG_INFINITY {
                    let mean = (-theta).exp();
                    Moments {
                        mu: mean,
                        sigma2: mean,
                    }
                } else {
                    let kappa = theta / (1.0 - alpha);
                    Moments {
                        mu: kappa.powf(alpha - 1.0),
                        sigma2: kappa.powf(alpha - 2.0),
                    }
                }
            }
            Self::NegBin { alpha, p } => {
                let q = 1.0 - p;
                Moments {
                    mu: alpha * p / q,
                    sigma2: alpha * p / (q * q),
                }
            }
            Self::CpGeo { alpha, p } => {
                let q = 1.0 - p;
                Moments {
                    mu: alpha * p / q,
                    sigma2: alpha * p * (alpha + q) / (q * q),
                }
            }
            Self::PolyaAeppli { alpha, p } => {
                let q = 1.0 - p;
                Moments {
                    mu: alpha / q,
                    sigma2: alpha * (1.0 + p) / (q * q),
                }
            }
            Self::Gamma { alpha, beta } => Moments {
                mu: alpha * beta,
                sigma2: alpha * beta * beta,
            },
        };
        Ok(m)
    }

    /// Log-Laplace transform `L(lambda) = -log E exp(-lambda X)`.
    ///
    /// Defined on the open interval where the transform is finite; this
    /// contains `[0, inf)` except for TweBLE with `alpha` in `(1, 2)`, whose
    /// domain is `lambda < -theta`.
    pub fn llt(&self, lambda: f64) -> Result<f64> {
        self.validate()?;
        let out_of_domain = |range| Error::Domain {
            name: "lambda",
            value: lambda,
            range,
        };
        if !lambda.is_finite() {
            return Err(out_of_domain("finite values"));
        }
        match *self {
            Self::Tweble { alpha, theta } => {
                if alpha == f64::NEG_INFINITY {
                    return Ok(-(-theta).exp() * (-lambda).exp_m1());
                }
                let ratio = lambda / theta;
                if alpha == 0.0 {
                    if ratio <= -1.0 {
                        return Err(out_of_domain("lambda > -theta"));
                    }
                    return Ok(ratio.ln_1p());
                }
                if alpha != 2.0 && ratio <= -1.0 {
                    return Err(out_of_domain(if alpha < 1.0 {
                        "lambda > -theta"
                    } else {
                        "lambda < -theta"
                    }));
                }
                let kappa = theta / (1.0 - alpha);
                if alpha == 2.0 {
                    // (theta+lambda)^2 - theta^2 in closed form avoids powf of a negative base.
                    return Ok(-(lambda * (2.0 * theta + lambda)) / 2.0);
                }
                let scale = (1.0 - alpha) / alpha * kappa.powf(alpha);
                Ok(scale * (alpha * ratio.ln_1p()).exp_m1())
            }
            Self::NegBin { alpha, p } => {
                let x = p * (-lambda).exp();
                if x >= 1.0 {
                    return Err(out_of_domain("lambda > log p"));
                }
                Ok(alpha * ((-x).ln_1p() - (-p).ln_1p()))
            }
            Self::CpGeo { alpha, p } => {
                let x = p * (alpha * (-lambda).exp_m1()).exp();
                if x >= 1.0 {
                    return Err(out_of_domain("p exp(-alpha(1 - e^-lambda)) < 1"));
                }
                Ok((-x).ln_1p() - (-p).ln_1p())
            }
            Self::PolyaAeppli { alpha, p } => {
                let e = (-lambda).exp();
                let den = 1.0 - p * e;
                if den <= 0.0 {
                    return Err(out_of_domain("lambda > log p"));
                }
                Ok(-alpha * (-lambda).exp_m1() / den)
            }
            Self::Gamma { alpha, beta } => {
                if lambda * beta <= -1.0 {
                    return Err(out_of_domain("lambda > -1/beta"));
                }
                Ok(alpha * (lambda * beta).ln_1p())
            }
        }
    }

    fn require_discrete(&self, what: &str) -> Result<()> {
        if self.is_discrete() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} is only defined for the discrete families (negbin, cpgeo, polya-aeppli), not {}",
                self.kind().name()
            )))
        }
    }

    /// Probability generating function `E z^X` for `z` in `[0, 1]`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        self.validate()?;
        self.require_discrete("pgf")?;
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain {
                name: "z",
                value: z,
                range: "[0, 1]",
            });
        }
        Ok(match *self {
            Self::NegBin { alpha, p } => ((1.0 - p) / (1.0 - p * z)).powf(alpha),
            Self::CpGeo { alpha, p } => (1.0 - p) / (1.0 - p * (-alpha * (1.0 - z)).exp()),
            Self::PolyaAeppli { alpha, p } => (-alpha * (1.0 - z) / (1.0 - p * z)).exp(),
            _ => unreachable!(),
        })
    }

    /// Power series in `z` of `log pgf(shift + slope z)`.
    ///
    /// Needs `0 <= shift` and `shift + slope <= 1` so that every intermediate
    /// series has a positive constant term.
    pub fn log_pgf_series_at(&self, shift: f64, slope: f64, order: usize) -> Result<PowerSeries> {
        self.validate()?;
        self.require_discrete("pgf series")?;
        if !(0.0..=1.0).contains(&shift) || shift + slope > 1.0 {
            return Err(Error::Domain {
                name: "shift",
                value: shift,
                range: "0 <= shift <= shift + slope <= 1",
            });
        }
        match *self {
            Self::NegBin { alpha, p } => {
                // alpha [log q - log(1 - p shift - p slope z)]
                let lin = PowerSeries::linear(1.0 - p * shift, -p * slope, order);
                Ok(lin
                    .log()?
                    .scale(-alpha)
                    .add_constant(alpha * (1.0 - p).ln()))
            }
            Self::CpGeo { alpha, p } => {
                // log q - log(1 - p exp(-alpha(1 - shift) + alpha slope z))
                let inner = PowerSeries::linear(-alpha * (1.0 - shift), alpha * slope, order).exp();
                let den = inner.scale(-p).add_constant(1.0);
                Ok(den.log()?.scale(-1.0).add_constant((1.0 - p).ln()))
            }
            Self::PolyaAeppli { alpha, p } => {
                // -alpha (1 - w) / (1 - p w),  w = shift + slope z
                let num = PowerSeries::linear(1.0 - shift, -slope, order);
                let den = PowerSeries::linear(1.0 - p * shift, -p * slope, order);
                Ok(num.div(&den)?.scale(-alpha))
            }
            _ => unreachable!(),
        }
    }

    /// Power series of `pgf(shift + slope z)`.
    pub fn pgf_series_at(&self, shift: f64, slope: f64, order: usize) -> Result<PowerSeries> {
        Ok(self.log_pgf_series_at(shift, slope, order)?.exp())
    }

    /// Power series of the pgf; coefficient `k` is `P(X = k)`.
    pub fn pgf_series(&self, order: usize) -> Result<PowerSeries> {
        self.pgf_series_at(0.0, 1.0, order)
    }

    /// `P(X = k)`.
    ///
    /// Negative binomial and Pólya-Aeppli use their closed forms. The compound
    /// Poisson-geometric pmf is read off the pgf series at the given order; a
    /// coefficient below `-PMF_CLAMP_TOL` is reported as a truncation error and
    /// smaller negative values are clamped to zero.
    pub fn pmf(&self, k: usize, order: usize) -> Result<f64> {
        self.validate()?;
        self.require_discrete("pmf")?;
        if k >= order {
            return Err(Error::Config(format!(
                "pmf index {k} must be below the truncation order {order}"
            )));
        }
        match *self {
            Self::NegBin { alpha, p } => Ok(negbin_pmf(alpha, p, k)),
            Self::PolyaAeppli { alpha, p } => Ok(polya_aeppli_pmf(alpha, p, k)),
            Self::CpGeo { .. } => {
                let s = self.pgf_series(order)?;
                clamp_probability(k, s.coeff(k))
            }
            _ => unreachable!(),
        }
    }

    /// `P(X = k)` for `k < order`, all at once.
    pub fn pmf_table(&self, order: usize) -> Result<Vec<f64>> {
        self.validate()?;
        self.require_discrete("pmf")?;
        match *self {
            Self::CpGeo { .. } => self
                .pgf_series(order)?
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, &c)| clamp_probability(k, c))
                .collect(),
            _ => (0..order).map(|k| self.pmf(k, order)).collect(),
        }
    }

    /// Prepare an exact sampler.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let dist_err = |e: &dyn std::fmt::Display| Error::Config(format!("sampler setup: {e}"));
        Ok(match *self {
            Self::Tweble { alpha, theta } => {
                if alpha == f64::NEG_INFINITY {
                    Sampler::Poisson((-theta).exp())
                } else if alpha == 0.0 {
                    Sampler::Gamma(GammaDist::new(1.0, 1.0 / theta).map_err(|e| dist_err(&e))?)
                } else if alpha < 0.0 {
                    // Poisson(rate) sum of Gamma(-alpha, scale 1/theta) clusters.
                    let kappa = theta / (1.0 - alpha);
                    let rate = (alpha - 1.0) / alpha * kappa.powf(alpha);
                    Sampler::PoissonGamma {
                        rate,
                        shape: -alpha,
                        scale: 1.0 / theta,
                    }
                } else {
                    return Err(Error::Unsupported(format!(
                        "direct sampling of TweBLE with alpha = {alpha} (tempered stable) is not \
                         implemented; use the OU approximation in `processes`"
                    )));
                }
            }
            Self::NegBin { alpha, p } => {
                Sampler::NegBin(GammaDist::new(alpha, p / (1.0 - p)).map_err(|e| dist_err(&e))?)
            }
            Self::CpGeo { alpha, p } => Sampler::CpGeo {
                count: Geometric::new(1.0 - p).map_err(|e| dist_err(&e))?,
                alpha,
            },
            Self::PolyaAeppli { alpha, p } => Sampler::PolyaAeppli {
                count: Poisson::new(alpha).map_err(|e| dist_err(&e))?,
                cluster_excess: Geometric::new(1.0 - p).map_err(|e| dist_err(&e))?,
            },
            Self::Gamma { alpha, beta } => {
                Sampler::Gamma(GammaDist::new(alpha, beta).map_err(|e| dist_err(&e))?)
            }
        })
    }

    /// Draw one variate. Prefer [`FamilyParams::sampler`] in loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }
}

fn clamp_probability(k: usize, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -PMF_CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeCoefficient {
            index: k,
            value,
            tol: PMF_CLAMP_TOL,
        })
    }
}

fn negbin_pmf(alpha: f64, p: f64, k: usize) -> f64 {
    // binom(k + alpha - 1, k) q^alpha p^k, built up multiplicatively
    let mut term = (1.0 - p).powf(alpha);
    for j in 1..=k {
        term *= p * (j as f64 - 1.0 + alpha) / j as f64;
    }
    term
}

fn polya_aeppli_pmf(alpha: f64, p: f64, k: usize) -> f64 {
    let q = 1.0 - p;
    let e = (-alpha).exp();
    if k == 0 {
        return e;
    }
    // sum_{l=1..k} binom(k-1, l-1) alpha^l / l! p^{k-l} q^l
    let mut term = alpha * q * p.powi(k as i32 - 1);
    let mut total = term;
    for l in 1..k {
        let lf = l as f64;
        term *= (k as f64 - lf) / lf * alpha / (lf + 1.0) * q / p;
        total += term;
    }
    e * total
}

/// Exact sampler prepared from validated [`FamilyParams`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Poisson(f64),
    PoissonGamma {
        rate: f64,
        shape: f64,
        scale: f64,
    },
    NegBin(GammaDist<f64>),
    CpGeo {
        count: Geometric,
        alpha: f64,
    },
    PolyaAeppli {
        count: Poisson<f64>,
        cluster_excess: Geometric,
    },
    Gamma(GammaDist<f64>),
}

/// Poisson draw that accepts a zero mean.
pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng),
        Err(_) => 0.0,
    }
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Poisson(mean) => poisson(rng, *mean),
            Sampler::PoissonGamma { rate, shape, scale } => {
                let n = poisson(rng, *rate);
                if n == 0.0 {
                    0.0
                } else {
                    // A sum of n iid Gamma(shape) is Gamma(n * shape).
                    GammaDist::new(n * shape, *scale)
                        .expect("positive shape and scale")
                        .sample(rng)
                }
            }
            Sampler::NegBin(mix) => {
                let lambda = mix.sample(rng);
                poisson(rng, lambda)
            }
            Sampler::CpGeo { count, alpha } => {
                let n = count.sample(rng);
                // Sum of n iid Poisson(alpha) is Poisson(n alpha).
                poisson(rng, n as f64 * alpha)
            }
            Sampler::PolyaAeppli {
                count,
                cluster_excess,
            } => {
                let k = count.sample(rng) as u64;
                (0..k).map(|_| 1 + cluster_excess.sample(rng)).sum::<u64>() as f64
            }
            Sampler::Gamma(g) => g.sample(rng),
        }
    }
}
