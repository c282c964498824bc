use serde::Serialize;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Gamma};

use tlid_core::mcstats::{
    empirical_moments, histogram, ks_distance, pmf_distance, EstimateCI, MAX_TAIL_MASS,
};
use tlid_core::processes::{
    simulate_death_immigration, simulate_disaster_chain, simulate_ou_compound_poisson,
    simulate_tweble_ou, transient_pgf_death_immigration, SimConfig, SimResult, TruncatedDriver,
};
use tlid_core::{Error, FamilyParams, PowerSeries};

use super::missing;
use crate::args::{Process, SimulateArgs};
use crate::output::{fmt_f64, print_json, write_csv, RunManifest};

pub const SAMPLES_SCHEMA: &str = "samples/v1";

/// Analytic mass left beyond the histogram cutoff.
const CUTOFF_TAIL: f64 = 0.1 * MAX_TAIL_MASS;

#[derive(Debug, Default, Serialize)]
pub struct Targets {
    /// Net of jumps dropped by a cutoff, when there is one.
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_untruncated: Option<f64>,
    pub variance: Option<f64>,
    pub zero_fraction: Option<f64>,
    /// Law the distances compare against.
    pub reference_law: Option<String>,
}

#[derive(Debug, Default, Serialize)]
pub struct Distances {
    pub tv: Option<f64>,
    pub chi2: Option<f64>,
    pub tail_mass: Option<f64>,
    pub ks: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub process: Process,
    pub n_paths: usize,
    pub mean: EstimateCI,
    pub variance: EstimateCI,
    pub zero_fraction: EstimateCI,
    /// Share of paths with no disasters, clusters or jumps.
    pub no_event_fraction: f64,
    pub analytic: Targets,
    /// `|empirical - analytic|` in standard errors.
    pub z_scores: Value,
    pub distances: Distances,
    pub discarded_mean: Option<f64>,
}

fn need(v: Option<f64>, flag: &str, process: &str) -> Result<f64, Error> {
    v.ok_or_else(|| missing(flag, process))
}

/// Cluster-size pgf from `kind:value`.
pub fn parse_cluster(spec: &str, order: usize) -> Result<PowerSeries, Error> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("cluster '{spec}': expected kind:value")))?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("cluster '{spec}': '{s}' is not a number")))
    };
    let unit = |name: &'static str, v: f64| {
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(Error::Domain {
                name,
                value: v,
                range: "(0, 1)",
            })
        }
    };
    let h = match kind {
        "geometric" => {
            let p = unit("cluster p", num(value)?)?;
            PowerSeries::from_fn(order, |k| if k == 0 { 0.0 } else { (1.0 - p) * p.powi(k as i32 - 1) })
        }
        "logarithmic" => {
            let p = unit("cluster p", num(value)?)?;
            let l = -(-p).ln_1p();
            PowerSeries::from_fn(order, |k| if k == 0 { 0.0 } else { p.powi(k as i32) / (k as f64 * l) })
        }
        "shifted-poisson" => {
            let m = num(value)?;
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Domain {
                    name: "cluster mean",
                    value: m,
                    range: "[0, inf)",
                });
            }
            let mut t = (-m).exp();
            PowerSeries::from_fn(order, |k| match k {
                0 => 0.0,
                1 => t,
                _ => {
                    t *= m / (k - 1) as f64;
                    t
                }
            })
        }
        "pmf" => {
            let masses = value.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            if masses.len() >= order {
                return Err(Error::Config(format!(
                    "cluster pmf has {} sizes; raise --order above that",
                    masses.len()
                )));
            }
            PowerSeries::from_fn(order, |k| if k == 0 { 0.0 } else { masses.get(k - 1).copied().unwrap_or(0.0) })
        }
        other => {
            return Err(Error::Config(format!(
                "unknown cluster kind '{other}' (expected geometric, logarithmic, shifted-poisson or pmf)"
            )))
        }
    };
    Ok(h)
}

/// Stationary pgf `exp{-r integral_z^1 (1 - h(u)) / (1 - u) du}`.
pub fn death_immigration_limit(r: f64, h: &PowerSeries) -> Result<PowerSeries, Error> {
    let n = h.order();
    let g = h
        .scale(-1.0)
        .add_constant(1.0)
        .div(&PowerSeries::linear(1.0, -1.0, n))?;
    let big_g = g.antiderivative();
    Ok(big_g.add_constant(-big_g.sum()).scale(r).exp())
}

fn cutoff(pmf: &[f64]) -> Result<usize, Error> {
    let mut acc = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        acc += p;
        if 1.0 - acc < CUTOFF_TAIL {
            return Ok(k + 1);
        }
    }
    Err(Error::Config(format!(
        "reference pmf keeps mass {:e} beyond order {}; raise --order",
        1.0 - acc,
        pmf.len()
    )))
}

fn pmf_distances(samples: &[f64], pmf: &[f64]) -> Result<Distances, Error> {
    let d = pmf_distance(
        &histogram(samples)?,
        |k| pmf.get(k).copied().unwrap_or(0.0),
        cutoff(pmf)?,
    )?;
    Ok(Distances {
        tv: Some(d.tv),
        chi2: Some(d.chi2),
        tail_mass: Some(d.tail_mass),
        ks: None,
    })
}

fn run_process(
    args: &SimulateArgs,
    cfg: &SimConfig,
) -> Result<(SimResult, Targets, Distances), Error> {
    let name = match args.process {
        Process::DisasterChain => "disaster-chain",
        Process::DeathImmigration => "death-immigration",
        Process::OuGamma => "ou-gamma",
        Process::TwebleOu => "tweble-ou",
    };
    let t = args.horizon;
    match args.process {
        Process::DisasterChain => {
            let alpha = need(args.alpha, "alpha", name)?;
            let p = need(args.p, "p", name)?;
            let res = simulate_disaster_chain(alpha, p, cfg)?;
            let lim = FamilyParams::cp_geo(alpha, p)?;
            let m = lim.moments()?;
            let pmf = lim.pmf_table(args.order)?;
            let targets = Targets {
                mean: Some(m.mu),
                variance: Some(m.sigma2),
                zero_fraction: Some(lim.pgf(0.0)?),
                mean_untruncated: None,
                reference_law: Some(format!("cpgeo(alpha = {alpha}, p = {p})")),
            };
            let dist = pmf_distances(&res.terminal_samples, &pmf)?;
            Ok((res, targets, dist))
        }
        Process::DeathImmigration => {
            let r = need(args.r, "r", name)?;
            let spec = args
                .cluster
                .as_deref()
                .ok_or_else(|| missing("cluster", name))?;
            let h = parse_cluster(spec, args.order)?;
            let res = simulate_death_immigration(r, &h, cfg)?;
            let (km, kv) = h.mean_variance();
            let fact2 = kv + km * km - km;
            let (law, pmf) = match spec.strip_prefix("geometric:") {
                Some(p) => {
                    let p: f64 = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad cluster '{spec}'")))?;
                    let nb = FamilyParams::neg_bin(r / p, p)?;
                    (
                        format!("negbin(alpha = {}, p = {p})", r / p),
                        nb.pmf_table(args.order)?,
                    )
                }
                None => (
                    "stationary law of the cluster process".to_string(),
                    death_immigration_limit(r, &h)?.into_coeffs(),
                ),
            };
            let targets = Targets {
                mean: Some(r * km * (1.0 - (-t).exp())),
                variance: Some(
                    r * (0.5 * fact2 * (1.0 - (-2.0 * t).exp()) + km * (1.0 - (-t).exp())),
                ),
                zero_fraction: Some(transient_pgf_death_immigration(r, &h, t, 0.0)?),
                mean_untruncated: None,
                reference_law: Some(law),
            };
            let dist = pmf_distances(&res.terminal_samples, &pmf)?;
            Ok((res, targets, dist))
        }
        Process::OuGamma => {
            let alpha = need(args.alpha, "alpha", name)?;
            let beta = need(args.beta, "beta", name)?;
            let res = simulate_ou_compound_poisson(alpha, beta, cfg)?;
            let limit = Gamma::new(alpha, 1.0 / beta).map_err(|e| Error::Config(e.to_string()))?;
            let targets = Targets {
                mean: Some(alpha * beta * (1.0 - (-t).exp())),
                variance: Some(alpha * beta * beta * (1.0 - (-2.0 * t).exp())),
                zero_fraction: Some((-alpha * t).exp()),
                mean_untruncated: None,
                reference_law: Some(format!("gamma(alpha = {alpha}, beta = {beta})")),
            };
            let dist = Distances {
                ks: Some(ks_distance(&res.terminal_samples, |x| limit.cdf(x))?),
                ..Distances::default()
            };
            Ok((res, targets, dist))
        }
        Process::TwebleOu => {
            let alpha = need(args.alpha, "alpha", name)?;
            let theta = need(args.theta, "theta", name)?;
            let res = simulate_tweble_ou(alpha, theta, cfg, args.eps)?;
            let m = FamilyParams::tweble(alpha, theta)?.moments()?;
            let dropped = res.discarded_mean.unwrap_or(0.0);
            let targets = Targets {
                mean: Some((m.mu - dropped) * (1.0 - (-t).exp())),
                mean_untruncated: Some(m.mu * (1.0 - (-t).exp())),
                variance: Some(m.sigma2 * (1.0 - (-2.0 * t).exp())),
                zero_fraction: None,
                reference_law: Some(format!("tweble(alpha = {alpha}, theta = {theta})")),
            };
            Ok((res, targets, Distances::default()))
        }
    }
}

pub fn run(args: &SimulateArgs) -> Result<(), Error> {
    if args.process == Process::TwebleOu {
        // fail on a bad cutoff before simulating
        TruncatedDriver::new(
            need(args.alpha, "alpha", "tweble-ou")?,
            need(args.theta, "theta", "tweble-ou")?,
            args.eps,
        )?;
    }
    let cfg = SimConfig::new(args.paths, args.seed)
        .with_horizon(args.horizon)
        .with_steps(args.burn_in, args.steps)
        .with_stream(args.stream);
    let (res, analytic, distances) = run_process(args, &cfg)?;
    let xs = &res.terminal_samples;
    let n = xs.len();
    let em = empirical_moments(xs)?;
    let zf = xs.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
    let zero_fraction = EstimateCI::new(zf, (zf * (1.0 - zf) / n as f64).sqrt(), n);
    let no_event_fraction = res.event_counts.iter().filter(|&&c| c == 0).count() as f64 / n as f64;
    let z = |ci: &EstimateCI, v: Option<f64>| v.map(|v| ci.z_score(v));
    let z_scores = json!({
        "mean": z(&em.mean, analytic.mean),
        "variance": z(&em.variance, analytic.variance),
        "zero_fraction": z(&zero_fraction, analytic.zero_fraction),
    });
    let manifest = RunManifest::new("simulate", args, Some(args.seed));
    if let Some(path) = &args.samples {
        write_csv(
            Some(path),
            &["path", "value"],
            xs.iter()
                .enumerate()
                .map(|(i, &x)| vec![i.to_string(), fmt_f64(x)]),
            &manifest.clone().with_schema(SAMPLES_SCHEMA),
        )?;
    }
    let summary = Summary {
        process: args.process,
        n_paths: n,
        mean: em.mean,
        variance: em.variance,
        zero_fraction,
        no_event_fraction,
        analytic,
        z_scores,
        distances,
        discarded_mean: res.discarded_mean,
    };
    print_json(summary, &manifest)
}
