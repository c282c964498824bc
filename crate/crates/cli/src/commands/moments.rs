use std::collections::BTreeMap;

use serde::Serialize;

use tlid_core::taylor::{tl_report, Branch};
use tlid_core::{Error, FamilyParams};

use crate::args::MomentsArgs;
use crate::output::{print_json, RunManifest};

#[derive(Debug, Serialize)]
pub struct MomentsOut {
    pub params: FamilyParams,
    pub mu: f64,
    pub sigma2: f64,
    /// `null` where the mean is 1.
    pub b: Option<f64>,
    pub a: f64,
    pub branch: Branch,
    pub critical: BTreeMap<String, f64>,
}

pub fn run(args: &MomentsArgs) -> Result<(), Error> {
    let fam = args.family.params()?;
    let r = tl_report(&fam)?;
    let out = MomentsOut {
        params: fam,
        mu: r.mu,
        sigma2: r.sigma2,
        b: r.b,
        a: r.a,
        branch: r.branch,
        critical: r.critical,
    };
    print_json(out, &RunManifest::new("moments", args, None))
}
