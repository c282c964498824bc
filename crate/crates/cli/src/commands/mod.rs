pub mod curve;
pub mod fit;
pub mod moments;
pub mod sd_check;
pub mod simulate;

use tlid_core::taylor::Template;
use tlid_core::{Error, FamilyKind, FamilyParams};

use crate::args::FamilyArgs;

pub fn missing(flag: &str, family: &str) -> Error {
    Error::Config(format!("--{flag} is required for {family}"))
}

pub fn kind(name: &str) -> Result<FamilyKind, Error> {
    name.parse()
}

impl FamilyArgs {
    fn need(&self, v: Option<f64>, flag: &str) -> Result<f64, Error> {
        v.ok_or_else(|| missing(flag, &self.family))
    }

    fn p_value(&self) -> Result<f64, Error> {
        match (self.p, self.q) {
            (Some(p), _) => Ok(p),
            (None, Some(q)) => Ok(1.0 - q),
            (None, None) => Err(missing("p", &self.family)),
        }
    }

    pub fn params(&self) -> Result<FamilyParams, Error> {
        let alpha = || self.need(self.alpha, "alpha");
        match kind(&self.family)? {
            FamilyKind::Tweble => FamilyParams::tweble(alpha()?, self.need(self.theta, "theta")?),
            FamilyKind::NegBin => FamilyParams::neg_bin(alpha()?, self.p_value()?),
            FamilyKind::CpGeo => FamilyParams::cp_geo(alpha()?, self.p_value()?),
            FamilyKind::PolyaAeppli => FamilyParams::polya_aeppli(alpha()?, self.p_value()?),
            FamilyKind::Gamma => FamilyParams::gamma(alpha()?, self.need(self.beta, "beta")?),
        }
    }

    /// Slice holding the family's fixed parameter.
    pub fn template(&self) -> Result<Template, Error> {
        let t = match kind(&self.family)? {
            FamilyKind::Tweble => Template::Tweble {
                theta_abs: self.need(self.theta, "theta")?.abs(),
            },
            FamilyKind::NegBin => Template::NegBin {
                alpha: self.need(self.alpha, "alpha")?,
            },
            FamilyKind::CpGeo => Template::CpGeo {
                alpha: self.need(self.alpha, "alpha")?,
            },
            FamilyKind::PolyaAeppli => Template::PolyaAeppli {
                alpha: self.need(self.alpha, "alpha")?,
            },
            FamilyKind::Gamma => Template::Gamma {
                beta: self.need(self.beta, "beta")?,
            },
        };
        t.validate()?;
        Ok(t)
    }
}

/// `n` evenly spaced points on `[from, to]`.
pub fn linspace(from: f64, to: f64, n: usize) -> Result<Vec<f64>, Error> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::Config("sweep bounds must be finite".into()));
    }
    match n {
        0 => Err(Error::Config("--points must be at least 1".into())),
        1 => Ok(vec![from]),
        _ => Ok((0..n)
            .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
            .collect()),
    }
}
