use tlid_core::taylor::b_curve;
use tlid_core::Error;

use super::linspace;
use crate::args::CurveArgs;
use crate::output::{fmt_f64, write_csv, RunManifest};

pub const SCHEMA: &str = "curve/v1";
pub const HEADER: [&str; 5] = ["param", "mu", "sigma2", "b", "branch"];

pub fn run(args: &CurveArgs) -> Result<(), Error> {
    let t = args.family.template()?;
    let grid = linspace(args.from, args.to, args.points)?;
    let rows = b_curve(&t, &grid)?;
    let manifest = RunManifest::new("curve", args, None).with_schema(SCHEMA);
    write_csv(
        args.out.as_deref(),
        &HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.param),
                fmt_f64(r.mu),
                fmt_f64(r.sigma2),
                r.b.map(fmt_f64).unwrap_or_default(),
                r.branch.label().to_string(),
            ]
        }),
        &manifest,
    )
}
