use serde::Serialize;

use tlid_core::divisibility::{sd_canonical, tweble_sd_analysis, ReferenceClaim, SdVerdict};
use tlid_core::{Error, FamilyParams};

use super::linspace;
use crate::args::SdCheckArgs;
use crate::output::{print_json, RunManifest};

/// Leading coefficients of `h` shown in the report.
const H_HEAD: usize = 12;

#[derive(Debug, Serialize)]
pub struct SdOut {
    pub params: FamilyParams,
    pub verdict: SdVerdict,
    pub method: &'static str,
    pub r: Option<f64>,
    pub first_negative_index: Option<usize>,
    pub min_coefficient: Option<f64>,
    pub h_head: Option<Vec<f64>>,
    pub reference_claim: Option<ReferenceClaim>,
    pub lambda_c: Option<f64>,
    pub witness_lambda: Option<f64>,
    pub order: usize,
    pub tol: f64,
}

pub fn run(args: &SdCheckArgs) -> Result<(), Error> {
    let fam = args.family.params()?;
    let mut out = SdOut {
        params: fam,
        verdict: SdVerdict::Inconclusive,
        method: "",
        r: None,
        first_negative_index: None,
        min_coefficient: None,
        h_head: None,
        reference_claim: None,
        lambda_c: None,
        witness_lambda: None,
        order: args.order,
        tol: args.tol,
    };
    match fam {
        FamilyParams::Tweble { alpha, theta } => {
            let grid = linspace(0.0, args.lambda_max, args.lambda_points)?;
            let a = tweble_sd_analysis(alpha, theta, &grid)?;
            out.method = "sign of L0' on a lambda grid";
            out.verdict = a.verdict;
            out.lambda_c = a.lambda_c;
            out.witness_lambda = a.witness;
        }
        FamilyParams::Gamma { .. } => {
            // Lévy density alpha e^{-x/beta} / x: x times it is decreasing
            out.method = "canonical Levy density";
            out.verdict = SdVerdict::SD;
        }
        _ => {
            let c = sd_canonical(&fam, args.order, args.tol)?;
            out.method = "coefficients of the canonical h";
            out.verdict = c.verdict;
            out.r = Some(c.r);
            out.first_negative_index = c.first_negative_index;
            out.min_coefficient = Some(c.min_coefficient);
            out.h_head = Some(c.h.coeffs().iter().take(H_HEAD).copied().collect());
            out.reference_claim = Some(c.reference);
        }
    }
    print_json(out, &RunManifest::new("sd-check", args, None))
}
