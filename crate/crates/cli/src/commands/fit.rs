use std::path::Path;

use serde::Serialize;

use tlid_core::mcstats::{fit_taylor, TlFit};
use tlid_core::{Error, FamilyKind, FamilyParams};

use super::{kind, linspace, missing};
use crate::args::FitArgs;
use crate::output::{io_err, print_json, RunManifest};

#[derive(Debug, Serialize)]
pub struct FitOut {
    #[serde(flatten)]
    pub fit: TlFit,
    pub sigma1sq: Option<f64>,
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: no '{name}' column", path.display())))
    };
    let (im, is) = (col("mu")?, col("sigma2")?);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let get = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Config(format!(
                        "{}: bad number in record {}",
                        path.display(),
                        line + 1
                    ))
                })
        };
        out.push((get(im)?, get(is)?));
    }
    Ok(out)
}

/// Family with one parameter fixed from the flags and the other set to `x`.
fn sweep_member(args: &FitArgs, k: FamilyKind, x: f64) -> Result<FamilyParams, Error> {
    let name = k.name();
    let pick = |fixed: Option<f64>, other: Option<f64>, a: &str, b: &str| match (fixed, other) {
        (Some(v), None) => Ok((Some(v), None)),
        (None, Some(v)) => Ok((None, Some(v))),
        _ => Err(Error::Config(format!(
            "{name}: fix exactly one of --{a} and --{b} to sweep the other"
        ))),
    };
    match k {
        FamilyKind::Tweble => match pick(args.alpha, args.theta, "alpha", "theta")? {
            (Some(alpha), _) => FamilyParams::tweble(alpha, x),
            (_, Some(theta)) => {
                let theta = if x > 1.0 { -theta.abs() } else { theta.abs() };
                FamilyParams::tweble(x, theta)
            }
            _ => unreachable!(),
        },
        FamilyKind::Gamma => match pick(args.alpha, args.beta, "alpha", "beta")? {
            (Some(alpha), _) => FamilyParams::gamma(alpha, x),
            (_, Some(beta)) => FamilyParams::gamma(x, beta),
            _ => unreachable!(),
        },
        _ => {
            let (alpha, p) = match pick(args.alpha, args.p, "alpha", "p")? {
                (Some(alpha), _) => (alpha, x),
                (_, Some(p)) => (x, p),
                _ => unreachable!(),
            };
            match k {
                FamilyKind::NegBin => FamilyParams::neg_bin(alpha, p),
                FamilyKind::CpGeo => FamilyParams::cp_geo(alpha, p),
                _ => FamilyParams::polya_aeppli(alpha, p),
            }
        }
    }
}

pub fn points(args: &FitArgs) -> Result<Vec<(f64, f64)>, Error> {
    let pts = match (&args.input, &args.family) {
        (Some(path), _) => read_points(path)?,
        (None, Some(family)) => {
            let k = kind(family)?;
            let from = args.from.ok_or_else(|| missing("from", family))?;
            let to = args.to.ok_or_else(|| missing("to", family))?;
            linspace(from, to, args.points)?
                .into_iter()
                .map(|x| {
                    let m = sweep_member(args, k, x)?.moments()?;
                    Ok((m.mu, m.sigma2))
                })
                .collect::<Result<Vec<_>, Error>>()?
        }
        (None, None) => return Err(Error::Config("give --input or --family".into())),
    };
    match args.sigma1sq {
        None => Ok(pts),
        Some(s) if s.is_finite() && s > 0.0 => {
            Ok(pts.into_iter().map(|(m, v)| (m, s * v)).collect())
        }
        Some(s) => Err(Error::Domain {
            name: "sigma1sq",
            value: s,
            range: "(0, inf)",
        }),
    }
}

pub fn run(args: &FitArgs) -> Result<(), Error> {
    let fit = fit_taylor(&points(args)?)?;
    print_json(
        FitOut {
            fit,
            sigma1sq: args.sigma1sq,
        },
        &RunManifest::new("fit", args, None),
    )
}
