//! Compound-Poisson and self-decomposable canonical forms.
//!
//! A pgf `phi` on `N0` is discrete self-decomposable when
//!
//! ```text
//! phi(z) = exp{ -r * integral_z^1 (1 - h(u)) / (1 - u) du }
//! ```
//!
//! for a rate `r > 0` and a pgf `h` with `h(0) = 0`. Differentiating gives
//! `h = 1 - (1 - z) (log phi)'(z) / r` and `h(0) = 0` forces
//! `r = (log phi)'(0)`. [`sd_canonical`] computes `h` by series arithmetic
//! and decides by the sign of its coefficients up to the truncation order.
//! Closed-form reference conditions are reported next to that verdict and
//! never replace it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::FamilyParams;
use crate::quad;
use crate::series::PowerSeries;

/// Coefficients below `-SD_TOL` count as negative.
pub const SD_TOL: f64 = 1e-10;

/// Smallest truncation order accepted by [`sd_canonical`].
pub const MIN_SD_ORDER: usize = 16;

/// `exp{-rate (1 - cluster(z))}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundPoissonRep {
    pub rate: f64,
    /// Cluster-size pgf. For the compound Poisson-geometric law this is
    /// `c(phi(z))`, which keeps an atom at zero; see
    /// [`CompoundPoissonRep::without_zero_atom`].
    pub cluster: PowerSeries,
}

impl CompoundPoissonRep {
    pub fn pgf_series(&self) -> PowerSeries {
        self.cluster.add_constant(-1.0).scale(self.rate).exp()
    }

    /// Equivalent representation whose cluster has no mass at zero.
    pub fn without_zero_atom(&self) -> Self {
        let c0 = self.cluster.coeff(0);
        if c0 == 0.0 {
            return self.clone();
        }
        Self {
            rate: self.rate * (1.0 - c0),
            cluster: self.cluster.add_constant(-c0).scale(1.0 / (1.0 - c0)),
        }
    }
}

pub fn compound_poisson_rep(fam: &FamilyParams, order: usize) -> Result<CompoundPoissonRep> {
    fam.validate()?;
    check_order(order, 1)?;
    match *fam {
        FamilyParams::NegBin { alpha, p } => {
            // logarithmic-series clusters
            let lq = -(-p).ln_1p();
            let cluster = PowerSeries::from_fn(order, |k| {
                if k == 0 {
                    0.0
                } else {
                    p.powi(k as i32) / (k as f64 * lq)
                }
            });
            Ok(CompoundPoissonRep {
                rate: alpha * lq,
                cluster,
            })
        }
        FamilyParams::CpGeo { alpha, p } => {
            // c(w) = log(1 - p w) / log q evaluated at w = exp(-alpha (1 - z))
            let lq = (-p).ln_1p();
            let w = PowerSeries::linear(-alpha, alpha, order).exp();
            let cluster = w.scale(-p).add_constant(1.0).log()?.scale(1.0 / lq);
            Ok(CompoundPoissonRep { rate: -lq, cluster })
        }
        FamilyParams::PolyaAeppli { alpha, p } => {
            let q = 1.0 - p;
            let cluster = PowerSeries::from_fn(order, |k| {
                if k == 0 {
                    0.0
                } else {
                    q * p.powi(k as i32 - 1)
                }
            });
            Ok(CompoundPoissonRep {
                rate: alpha,
                cluster,
            })
        }
        _ => Err(Error::Unsupported(format!(
            "compound Poisson series form is only available for discrete families, not {}",
            fam.kind().name()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdVerdict {
    SD,
    NotSD,
    /// Reserved; the closed-form families here always resolve.
    Inconclusive,
}

/// A closed-form condition for self-decomposability and how it compares with
/// the coefficient oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceClaim {
    pub statement: String,
    /// What the condition predicts at this point; `None` when it is silent.
    pub claims_sd: Option<bool>,
    /// `None` when the condition is silent.
    pub agrees_with_oracle: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdCanonical {
    pub r: f64,
    pub h: PowerSeries,
    pub verdict: SdVerdict,
    pub first_negative_index: Option<usize>,
    /// Minimum over the coefficients `1..order` of `h`.
    pub min_coefficient: f64,
    /// `log phi(0)`; fixes the integration constant on reconstruction.
    pub log_p0: f64,
    /// `N(z)` numerator coefficients (compound Poisson-geometric only).
    pub numerator: Option<PowerSeries>,
    pub reference: ReferenceClaim,
}

impl SdCanonical {
    /// `exp{-r integral_z^1 (1 - h(u)) / (1 - u) du}` as a series.
    pub fn pgf_series(&self) -> Result<PowerSeries> {
        let n = self.h.order();
        let integrand = self
            .h
            .scale(-1.0)
            .add_constant(1.0)
            .div(&PowerSeries::linear(1.0, -1.0, n))?;
        Ok(integrand
            .antiderivative()
            .scale(self.r)
            .add_constant(self.log_p0)
            .exp())
    }
}

/// Canonical self-decomposable pair of a discrete family at truncation
/// `order`, with the oracle verdict at tolerance `tol`.
pub fn sd_canonical(fam: &FamilyParams, order: usize, tol: f64) -> Result<SdCanonical> {
    fam.validate()?;
    check_order(order, MIN_SD_ORDER)?;
    if !fam.is_discrete() {
        return Err(Error::Unsupported(format!(
            "sd_canonical needs a discrete family; use tweble_sd_analysis for {}",
            fam.kind().name()
        )));
    }
    let dlog = fam.log_pgf_series_at(0.0, 1.0, order + 1)?.derivative();
    let r = dlog.coeff(0);
    let dlog = dlog.with_order(order);
    let h = PowerSeries::linear(1.0, -1.0, order)
        .mul(&dlog)?
        .scale(-1.0 / r)
        .add_constant(1.0);
    let mut h = h.into_coeffs();
    h[0] = 0.0;
    let h = PowerSeries::new(h)?;
    let min_coefficient = h.coeffs()[1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let first_negative_index = h.first_below(1, tol);
    let verdict = if first_negative_index.is_some() {
        SdVerdict::NotSD
    } else {
        SdVerdict::SD
    };
    let oracle_sd = verdict == SdVerdict::SD;
    let numerator = match *fam {
        FamilyParams::CpGeo { alpha, p } => Some(cpgeo_numerator(alpha, p, order)),
        _ => None,
    };
    Ok(SdCanonical {
        r,
        h,
        verdict,
        first_negative_index,
        min_coefficient,
        log_p0: fam.pgf(0.0)?.ln(),
        numerator,
        reference: reference_claim(fam, oracle_sd),
    })
}

/// `N(z) = p sum_k z^k [(k - r) b_k - (k + 1) b_{k+1}]`, `b_k = e^-alpha alpha^k / k!`.
pub fn cpgeo_numerator(alpha: f64, p: f64, order: usize) -> PowerSeries {
    let r = cpgeo_rate(alpha, p);
    let mut b = (-alpha).exp();
    PowerSeries::from_fn(order, |k| {
        if k > 0 {
            b *= alpha / k as f64;
        }
        if k == 0 {
            0.0
        } else {
            // (k + 1) b_{k+1} = alpha b_k
            p * b * (k as f64 - r - alpha)
        }
    })
}

/// `r = p alpha e^-alpha / (1 - p e^-alpha)`.
pub fn cpgeo_rate(alpha: f64, p: f64) -> f64 {
    let e = (-alpha).exp();
    p * alpha * e / (1.0 - p * e)
}

/// `p* = alpha / (1 - alpha e^-alpha)`.
pub fn cpgeo_p_star(alpha: f64) -> f64 {
    alpha / (1.0 - alpha * (-alpha).exp())
}

fn reference_claim(fam: &FamilyParams, oracle_sd: bool) -> ReferenceClaim {
    let (statement, claims_sd) = match *fam {
        FamilyParams::NegBin { .. } => (
            "negative binomial is SD for all (alpha, p)".into(),
            Some(true),
        ),
        FamilyParams::PolyaAeppli { p, .. } => (
            "h is absolutely monotone only if p > 1/2".into(),
            // necessary condition only: it rules SD out for p <= 1/2
            if p <= 0.5 { Some(false) } else { None },
        ),
        FamilyParams::CpGeo { alpha, p } => {
            let ps = cpgeo_p_star(alpha);
            let applies = ps > 0.0 && ps < 1.0 && p >= ps;
            (
                format!("SD if p >= p* = alpha / (1 - alpha e^-alpha) = {ps}"),
                if applies { Some(true) } else { None },
            )
        }
        _ => (String::new(), None),
    };
    ReferenceClaim {
        statement,
        claims_sd,
        agrees_with_oracle: claims_sd.map(|c| c == oracle_sd),
    }
}

/// Compound-geometric form `(1 - pi) / (1 - pi inner(z))` of a negative
/// binomial with `0 < alpha < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundGeometricRep {
    pub pi: f64,
    pub inner: PowerSeries,
}

impl CompoundGeometricRep {
    pub fn pgf_series(&self) -> Result<PowerSeries> {
        let n = self.inner.order();
        PowerSeries::constant(1.0 - self.pi, n).div(&self.inner.scale(-self.pi).add_constant(1.0))
    }
}

/// `pi = 1 - q^alpha`; inner coefficient `n` is
/// `p^n alpha [1 - alpha]_{n-1} / (n! pi)` with the rising factorial `[x]_n`.
pub fn compound_geometric_rep(fam: &FamilyParams, order: usize) -> Result<CompoundGeometricRep> {
    fam.validate()?;
    check_order(order, 2)?;
    let FamilyParams::NegBin { alpha, p } = *fam else {
        return Err(Error::Unsupported(format!(
            "compound geometric form is only derived for negbin, not {}",
            fam.kind().name()
        )));
    };
    if alpha >= 1.0 {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    let pi = -(alpha * (-p).ln_1p()).exp_m1();
    let mut t = p * alpha / pi;
    let inner = PowerSeries::from_fn(order, |n| match n {
        0 => 0.0,
        1 => t,
        _ => {
            t *= p * (n as f64 - 1.0 - alpha) / n as f64;
            t
        }
    });
    Ok(CompoundGeometricRep { pi, inner })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L0Point {
    pub lambda: f64,
    /// `L0(lambda) = lambda L'(lambda)`.
    pub l0: f64,
    pub l0_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyPoint {
    pub x: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwebleSdAnalysis {
    pub alpha: f64,
    pub theta: f64,
    pub points: Vec<L0Point>,
    pub verdict: SdVerdict,
    /// `L0'` changes sign here (`alpha < 0`).
    pub lambda_c: Option<f64>,
    /// A grid point with `L0' < 0`.
    pub witness: Option<f64>,
    /// `pi(x) = x^{-alpha-1} (alpha + theta x) e^{-theta x} / Gamma(1 - alpha)`
    /// on a log grid (`0 <= alpha < 1`).
    pub levy_density: Option<Vec<LevyPoint>>,
    /// `(1 - alpha)^{1 - alpha}`: the driving Lévy density is
    /// `levy_scale * pi(x)`.
    pub levy_scale: Option<f64>,
    /// `integral (1 ^ x) levy_scale pi(x) dx`.
    pub levy_integral_1_wedge_x: Option<f64>,
}

/// `L'(lambda)` of TweBLE with `alpha < 1`.
fn tweble_llt_prime(alpha: f64, theta: f64, lambda: f64) -> f64 {
    if alpha == f64::NEG_INFINITY {
        return (-theta - lambda).exp();
    }
    ((theta + lambda) / (1.0 - alpha)).powf(alpha - 1.0)
}

/// `L0'(lambda) = (1 - alpha)^{1 - alpha} (theta + lambda)^{alpha - 2} (theta + lambda alpha)`.
pub fn tweble_l0_prime(alpha: f64, theta: f64, lambda: f64) -> f64 {
    if alpha == f64::NEG_INFINITY {
        return (-theta - lambda).exp() * (1.0 - lambda);
    }
    (1.0 - alpha).powf(1.0 - alpha) * (theta + lambda).powf(alpha - 2.0) * (theta + lambda * alpha)
}

/// `pi(x) = x^{-alpha-1} (alpha + theta x) e^{-theta x} / Gamma(1 - alpha)`.
pub fn tweble_levy_density(alpha: f64, theta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x.powf(-alpha - 1.0) * (alpha + theta * x) * (-theta * x).exp()
        / statrs::function::gamma::gamma(1.0 - alpha)
}

/// `(1 - alpha)^{1 - alpha}`.
pub fn tweble_levy_scale(alpha: f64) -> f64 {
    (1.0 - alpha).powf(1.0 - alpha)
}

/// `Phi0(lambda) = exp{-alpha (1 - 1 / (1 + lambda beta))}`: the transform of
/// the compound Poisson driver of a gamma law.
pub fn gamma_driver_plst(alpha: f64, beta: f64, lambda: f64) -> f64 {
    (-alpha * (1.0 - 1.0 / (1.0 + lambda * beta))).exp()
}

const LEVY_GRID: usize = 81;

/// Self-decomposability of TweBLE laws with `alpha < 1` through the sign of
/// `L0'`.
pub fn tweble_sd_analysis(alpha: f64, theta: f64, lambda_grid: &[f64]) -> Result<TwebleSdAnalysis> {
    FamilyParams::tweble(alpha, theta)?;
    if alpha >= 1.0 {
        return Err(Error::Unsupported(format!(
            "SD analysis covers alpha < 1; alpha = {alpha} is in the tempered-stable regime"
        )));
    }
    if let Some(&bad) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Domain {
            name: "lambda",
            value: bad,
            range: "[0, inf)",
        });
    }
    let points: Vec<L0Point> = lambda_grid
        .iter()
        .map(|&lambda| L0Point {
            lambda,
            l0: lambda * tweble_llt_prime(alpha, theta, lambda),
            l0_prime: tweble_l0_prime(alpha, theta, lambda),
        })
        .collect();
    if alpha < 0.0 {
        let lambda_c = if alpha == f64::NEG_INFINITY {
            1.0
        } else {
            -theta / alpha
        };
        let witness = points.iter().find(|p| p.l0_prime < 0.0).map(|p| p.lambda);
        return Ok(TwebleSdAnalysis {
            alpha,
            theta,
            points,
            verdict: SdVerdict::NotSD,
            lambda_c: Some(lambda_c),
            witness,
            levy_density: None,
            levy_scale: None,
            levy_integral_1_wedge_x: None,
        });
    }
    let scale = tweble_levy_scale(alpha);
    let x_hi = 1.0 + 60.0 / theta;
    let levy_density = (0..LEVY_GRID)
        .map(|i| {
            let x = 10f64.powf(-6.0 + 8.0 * i as f64 / (LEVY_GRID - 1) as f64) / theta;
            LevyPoint {
                x,
                density: tweble_levy_density(alpha, theta, x),
            }
        })
        .collect();
    let near = quad::integrate(
        |x| scale * x * tweble_levy_density(alpha, theta, x),
        0.0,
        1.0,
        1e-12,
    );
    let far = quad::integrate(
        |x| scale * tweble_levy_density(alpha, theta, x),
        1.0,
        x_hi,
        1e-12,
    );
    Ok(TwebleSdAnalysis {
        alpha,
        theta,
        points,
        verdict: SdVerdict::SD,
        lambda_c: None,
        witness: None,
        levy_density: Some(levy_density),
        levy_scale: Some(scale),
        levy_integral_1_wedge_x: Some(near + far),
    })
}

/// pgf of the thinning remainder `X_c` in `X = c o X + X_c`:
/// `phi(z) / phi(1 - c (1 - z))`.
pub fn sd_thin_component_pgf(fam: &FamilyParams, c: f64, order: usize) -> Result<PowerSeries> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain {
            name: "c",
            value: c,
            range: "[0, 1]",
        });
    }
    let sd = sd_canonical(fam, order, SD_TOL)?;
    if let Some(index) = sd.first_negative_index {
        return Err(Error::NotSelfDecomposable {
            index,
            value: sd.h.coeff(index),
        });
    }
    let num = fam.log_pgf_series_at(0.0, 1.0, order)?;
    let den = fam.log_pgf_series_at(1.0 - c, c, order)?;
    let out = num.sub(&den)?.exp();
    if let Some((index, value)) = out.min_coefficient_from(0) {
        if value < -SD_TOL {
            return Err(Error::NegativeCoefficient {
                index,
                value,
                tol: SD_TOL,
            });
        }
    }
    Ok(out)
}

fn check_order(order: usize, min: usize) -> Result<()> {
    if order < min {
        return Err(Error::Config(format!(
            "series order {order} is below the minimum {min}"
        )));
    }
    Ok(())
}
