//! Taylor's-law exponents and their branch structure.
//!
//! With the `a = 0` convention every family here satisfies
//! `sigma2 = mu^b` with `b = log sigma2 / log mu`. The closed forms below are
//! the per-family simplifications of that ratio. Points where `mu = 1` but
//! `sigma2 != 1` are singular: `b` diverges there with opposite signs on the
//! two sides, splitting each one-parameter slice into two branches.
//!
//! A [`Template`] fixes one parameter of a family and leaves the other free;
//! it is the unit for critical points, curves and iso-exponent solving.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{FamilyParams, Moments, TWEBLE_ALPHA_MIN};

/// `|log mu|` below this counts as `mu = 1`.
pub const SINGULAR_TOL: f64 = 1e-12;

const GOLDEN_TOL: f64 = 1e-10;
const ISO_TOL: f64 = 1e-11;
const SCAN_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    LowerBranch,
    UpperBranch,
    FixedPoint,
    Singular,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::LowerBranch => "lower",
            Branch::UpperBranch => "upper",
            Branch::FixedPoint => "fixed-point",
            Branch::Singular => "singular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlReport {
    /// `None` exactly when `branch` is `Singular`.
    pub b: Option<f64>,
    pub a: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub branch: Branch,
    pub critical: BTreeMap<String, f64>,
}

/// Closed-form exponent.
pub fn tl_exponent(fam: &FamilyParams) -> Result<f64> {
    let m = fam.moments()?;
    let log_mu = m.mu.ln();
    let log_s2 = m.sigma2.ln();
    match *fam {
        FamilyParams::Tweble { alpha, .. } => {
            if alpha == f64::NEG_INFINITY {
                Ok(1.0)
            } else {
                Ok((2.0 - alpha) / (1.0 - alpha))
            }
        }
        FamilyParams::Gamma { beta, .. } if beta == 1.0 => Ok(1.0),
        FamilyParams::Gamma { alpha, .. } if alpha == 1.0 => Ok(2.0),
        _ if log_mu.abs() < SINGULAR_TOL => Err(Error::SingularMean { log_sigma2: log_s2 }),
        FamilyParams::NegBin { alpha, p } => {
            let q = 1.0 - p;
            Ok(1.0 - q.ln() / (alpha * p / q).ln())
        }
        FamilyParams::CpGeo { alpha, p } => {
            let q = 1.0 - p;
            Ok(1.0 + (alpha / q).ln_1p() / (alpha * p / q).ln())
        }
        FamilyParams::PolyaAeppli { alpha, p } => {
            let q = 1.0 - p;
            Ok(1.0 + ((1.0 + p) / q).ln() / (alpha / q).ln())
        }
        FamilyParams::Gamma { alpha, beta } => Ok(1.0 + beta.ln() / (alpha * beta).ln()),
    }
}

/// Branch of a single parameter point.
pub fn branch_of(fam: &FamilyParams) -> Result<Branch> {
    let m = fam.moments()?;
    Ok(match *fam {
        FamilyParams::Tweble { alpha, .. } => {
            if alpha < 1.0 {
                Branch::LowerBranch
            } else {
                Branch::UpperBranch
            }
        }
        FamilyParams::Gamma { alpha, beta } if alpha == 1.0 || beta == 1.0 => Branch::FixedPoint,
        _ => classify(&m),
    })
}

fn classify(m: &Moments) -> Branch {
    let log_mu = m.mu.ln();
    if log_mu.abs() < SINGULAR_TOL {
        if m.sigma2.ln().abs() < SINGULAR_TOL {
            Branch::FixedPoint
        } else {
            Branch::Singular
        }
    } else if log_mu < 0.0 {
        Branch::LowerBranch
    } else {
        Branch::UpperBranch
    }
}

/// Exponent, intercept, branch and the critical values of the slice through
/// `fam` that holds its first parameter fixed.
pub fn tl_report(fam: &FamilyParams) -> Result<TlReport> {
    let m = fam.moments()?;
    let branch = branch_of(fam)?;
    let b = match tl_exponent(fam) {
        Ok(b) => Some(b),
        Err(Error::SingularMean { .. }) => None,
        Err(e) => return Err(e),
    };
    let critical = critical_points(&Template::through(fam))?;
    Ok(TlReport {
        b,
        a: 0.0,
        mu: m.mu,
        sigma2: m.sigma2,
        branch,
        critical,
    })
}

/// A one-parameter slice of a family.
///
/// The free parameter is `alpha` for TweBLE and gamma, `p` for the negative
/// binomial and `q = 1 - p` for compound Poisson-geometric and Pólya-Aeppli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Template {
    /// Fixed `|theta|`; `theta` takes the sign of `1 - alpha`.
    Tweble {
        theta_abs: f64,
    },
    #[serde(rename = "negbin")]
    NegBin {
        alpha: f64,
    },
    #[serde(rename = "cpgeo")]
    CpGeo {
        alpha: f64,
    },
    PolyaAeppli {
        alpha: f64,
    },
    Gamma {
        beta: f64,
    },
}

/// Open branch interval of the free parameter with the limits of `b` at its
/// ends.
#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
    branch: Branch,
    lim_lo: f64,
    lim_hi: f64,
}

impl Interval {
    /// Map `u` in `(0, 1)` onto the interval.
    fn at(&self, u: f64) -> f64 {
        if self.hi.is_infinite() {
            self.lo + self.lo.max(1.0) * (std::f64::consts::FRAC_PI_2 * u).tan()
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }
}

impl Template {
    /// Slice through `fam` keeping its first parameter fixed.
    pub fn through(fam: &FamilyParams) -> Self {
        match *fam {
            FamilyParams::Tweble { theta, .. } => Template::Tweble {
                theta_abs: theta.abs().max(f64::MIN_POSITIVE),
            },
            FamilyParams::NegBin { alpha, .. } => Template::NegBin { alpha },
            FamilyParams::CpGeo { alpha, .. } => Template::CpGeo { alpha },
            FamilyParams::PolyaAeppli { alpha, .. } => Template::PolyaAeppli { alpha },
            FamilyParams::Gamma { beta, .. } => Template::Gamma { beta },
        }
    }

    pub fn free_name(&self) -> &'static str {
        match self {
            Template::Tweble { .. } | Template::Gamma { .. } => "alpha",
            Template::NegBin { .. } => "p",
            Template::CpGeo { .. } | Template::PolyaAeppli { .. } => "q",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Template::Tweble { theta_abs } => ("theta", theta_abs),
            Template::NegBin { alpha }
            | Template::CpGeo { alpha }
            | Template::PolyaAeppli { alpha } => ("alpha", alpha),
            Template::Gamma { beta } => ("beta", beta),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                name,
                value: v,
                range: "(0, inf)",
            })
        }
    }

    /// Family at the given value of the free parameter.
    pub fn at(&self, x: f64) -> Result<FamilyParams> {
        self.validate()?;
        match *self {
            Template::Tweble { theta_abs } => {
                let theta = if x > 1.0 { -theta_abs } else { theta_abs };
                FamilyParams::tweble(x, theta)
            }
            Template::NegBin { alpha } => FamilyParams::neg_bin(alpha, x),
            Template::CpGeo { alpha } => FamilyParams::cp_geo(alpha, 1.0 - x),
            Template::PolyaAeppli { alpha } => FamilyParams::polya_aeppli(alpha, 1.0 - x),
            Template::Gamma { beta } => FamilyParams::gamma(x, beta),
        }
    }

    /// Constant exponent of the slice, when there is one.
    pub fn constant_b(&self) -> Option<f64> {
        match *self {
            Template::Gamma { beta } if beta == 1.0 => Some(1.0),
            _ => None,
        }
    }

    /// Value of the free parameter where `mu = 1` (the exponent diverges).
    pub fn singular_point(&self) -> Option<f64> {
        match *self {
            Template::Tweble { .. } => Some(1.0),
            Template::NegBin { alpha } => Some(1.0 / (1.0 + alpha)),
            Template::CpGeo { alpha } => Some(alpha / (1.0 + alpha)),
            Template::PolyaAeppli { alpha } if alpha < 1.0 => Some(alpha),
            Template::PolyaAeppli { .. } => None,
            Template::Gamma { beta } if beta == 1.0 => None,
            Template::Gamma { beta } => Some(1.0 / beta),
        }
    }

    fn intervals(&self) -> Vec<Interval> {
        let iv = |lo, hi, branch, lim_lo, lim_hi| Interval {
            lo,
            hi,
            branch,
            lim_lo,
            lim_hi,
        };
        use Branch::*;
        let inf = f64::INFINITY;
        match *self {
            Template::Tweble { .. } => vec![
                iv(TWEBLE_ALPHA_MIN, 1.0, LowerBranch, 1.0 + 1.0 / 41.0, inf),
                iv(1.0, 2.0, UpperBranch, -inf, 0.0),
            ],
            Template::NegBin { alpha } => {
                let pc = 1.0 / (1.0 + alpha);
                vec![
                    iv(0.0, pc, LowerBranch, 1.0, -inf),
                    iv(pc, 1.0, UpperBranch, inf, 2.0),
                ]
            }
            Template::CpGeo { .. } | Template::PolyaAeppli { .. } => match self.singular_point() {
                Some(qc) => vec![
                    iv(0.0, qc, UpperBranch, 2.0, inf),
                    iv(qc, 1.0, LowerBranch, -inf, 1.0),
                ],
                None => {
                    // Polya-Aeppli with alpha >= 1; b -> 3 at q -> 1 only when alpha = 1
                    let top = if *self == (Template::PolyaAeppli { alpha: 1.0 }) {
                        3.0
                    } else {
                        1.0
                    };
                    vec![iv(0.0, 1.0, UpperBranch, 2.0, top)]
                }
            },
            Template::Gamma { beta } => {
                let ac = 1.0 / beta;
                let pole = if beta > 1.0 { -inf } else { inf };
                vec![
                    iv(0.0, ac, LowerBranch, 1.0, pole),
                    iv(ac, inf, UpperBranch, -pole, 1.0),
                ]
            }
        }
    }

    fn b_at(&self, x: f64) -> Result<f64> {
        tl_exponent(&self.at(x)?)
    }
}

/// Location and value of the smallest exponent on the negative-binomial upper
/// branch `p > p_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BMin {
    pub b_min: f64,
    pub argmin_p: f64,
    /// `false` when the infimum is only approached as `p -> 1`.
    pub attained: bool,
}

/// Golden-section search for the minimum of the negative-binomial exponent on
/// its upper branch. For `alpha <= 1` the branch decreases towards its limit
/// `b = 2` at `p -> 1`, which is then reported as the (unattained) infimum.
pub fn negbin_b_min(alpha: f64) -> Result<BMin> {
    let t = Template::NegBin { alpha };
    t.validate()?;
    let pc = 1.0 / (1.0 + alpha);
    let f = |p: f64| t.b_at(p).unwrap_or(f64::INFINITY);
    let (lo, hi) = (pc + 1e-9 * (1.0 - pc), 1.0 - 1e-12);
    let (p_star, b_star) = golden_section(f, lo, hi, GOLDEN_TOL);
    if p_star > 1.0 - 1e-6 {
        Ok(BMin {
            b_min: 2.0,
            argmin_p: 1.0,
            attained: false,
        })
    } else {
        Ok(BMin {
            b_min: b_star,
            argmin_p: p_star,
            attained: true,
        })
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Named critical values of a slice. Keys:
///
/// * TweBLE: `alpha_c`.
/// * Negative binomial: `p_c`, `p_0`, `q_0`, `b_min`, `b_min_argmin_p`,
///   `b_min_attained` (1 or 0).
/// * Compound Poisson-geometric: `q_c`, `q_0`, `p_c`, `p_0`, and `p_star` when
///   `alpha / (1 - alpha e^-alpha)` lies in `(0, 1)`.
/// * Pólya-Aeppli: `q_c` and `q_0` (only for `alpha < 1`).
/// * Gamma: `alpha_c` (only for `beta != 1`).
pub fn critical_points(t: &Template) -> Result<BTreeMap<String, f64>> {
    t.validate()?;
    let mut out = BTreeMap::new();
    match *t {
        Template::Tweble { .. } => {
            out.insert("alpha_c".into(), 1.0);
        }
        Template::NegBin { alpha } => {
            let disc = (alpha * alpha + 4.0 * alpha).sqrt();
            out.insert("p_c".into(), 1.0 / (1.0 + alpha));
            out.insert("p_0".into(), (2.0 + alpha - disc) / 2.0);
            out.insert("q_0".into(), (disc - alpha) / 2.0);
            let bm = negbin_b_min(alpha)?;
            out.insert("b_min".into(), bm.b_min);
            out.insert("b_min_argmin_p".into(), bm.argmin_p);
            out.insert("b_min_attained".into(), if bm.attained { 1.0 } else { 0.0 });
        }
        Template::CpGeo { alpha } => {
            let qc = alpha / (1.0 + alpha);
            // positive root of (1+alpha) q^2 - alpha(1-alpha) q - alpha^2
            let lin = alpha * (1.0 - alpha);
            let q0 = (lin + (lin * lin + 4.0 * (1.0 + alpha) * alpha * alpha).sqrt())
                / (2.0 * (1.0 + alpha));
            out.insert("q_c".into(), qc);
            out.insert("q_0".into(), q0);
            out.insert("p_c".into(), 1.0 - qc);
            out.insert("p_0".into(), 1.0 - q0);
            let p_star = alpha / (1.0 - alpha * (-alpha).exp());
            if p_star > 0.0 && p_star < 1.0 {
                out.insert("p_star".into(), p_star);
            }
        }
        Template::PolyaAeppli { alpha } => {
            if alpha < 1.0 {
                out.insert("q_c".into(), alpha);
                out.insert(
                    "q_0".into(),
                    ((alpha * alpha + 8.0 * alpha).sqrt() - alpha) / 2.0,
                );
            }
        }
        Template::Gamma { beta } => {
            if beta != 1.0 {
                out.insert("alpha_c".into(), 1.0 / beta);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub param: f64,
    pub mu: f64,
    pub sigma2: f64,
    /// `None` at singular points.
    pub b: Option<f64>,
    pub branch: Branch,
    /// Signs of `b` just left and right of a singular point.
    pub side_signs: Option<(f64, f64)>,
}

/// Exponent along a slice. Singular grid points are kept and flagged.
pub fn b_curve(t: &Template, grid: &[f64]) -> Result<Vec<CurveRow>> {
    t.validate()?;
    if grid.is_empty() {
        return Err(Error::InsufficientData("empty parameter grid".into()));
    }
    grid.iter()
        .map(|&x| {
            let fam = t.at(x)?;
            let m = fam.moments()?;
            let branch = branch_of(&fam)?;
            let (b, side_signs) = if branch == Branch::Singular {
                let h = 1e-6 * x.abs().max(1e-3);
                let left = t.b_at(x - h).map(f64::signum).unwrap_or(f64::NAN);
                let right = t.b_at(x + h).map(f64::signum).unwrap_or(f64::NAN);
                (None, Some((left, right)))
            } else {
                (Some(tl_exponent(&fam)?), None)
            };
            Ok(CurveRow {
                param: x,
                mu: m.mu,
                sigma2: m.sigma2,
                b,
                branch,
                side_signs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum IsoSolution {
    /// Parameter values (ascending) at which the exponent equals the target.
    Params(Vec<f64>),
    /// The slice has this exponent everywhere.
    FixedPoint,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    x0: f64,
    x1: f64,
    b0: f64,
    b1: f64,
    /// The piece reaches the interval end, where `b` is only a limit.
    open_lo: bool,
    open_hi: bool,
}

impl Piece {
    /// `(lo, hi, lo_closed, hi_closed)` of the values of `b` on the piece.
    fn range(&self) -> (f64, f64, bool, bool) {
        let (a, ac) = (self.b0, !self.open_lo);
        let (b, bc) = (self.b1, !self.open_hi);
        if a <= b {
            (a, b, ac, bc)
        } else {
            (b, a, bc, ac)
        }
    }
}

fn monotone_pieces(t: &Template, iv: &Interval) -> Vec<Piece> {
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            let s = 0.5 - 0.5 * (std::f64::consts::PI * i as f64 / (SCAN_POINTS - 1) as f64).cos();
            iv.at(1e-9 + (1.0 - 2e-9) * s)
        })
        .collect();
    let f = |x: f64| t.b_at(x).unwrap_or(f64::NAN);
    let bs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut breaks = vec![0usize];
    for i in 1..xs.len() - 1 {
        let left = bs[i] - bs[i - 1];
        let right = bs[i + 1] - bs[i];
        if left * right < 0.0 {
            breaks.push(i);
        }
    }
    breaks.push(xs.len() - 1);
    let last = breaks.len() - 1;
    let knots: Vec<(f64, f64)> = breaks
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            if j == 0 {
                (xs[i], iv.lim_lo)
            } else if j == last {
                (xs[i], iv.lim_hi)
            } else {
                let is_min = bs[i] < bs[i - 1];
                let g = |x: f64| if is_min { f(x) } else { -f(x) };
                let (x, _) = golden_section(g, xs[i - 1], xs[i + 1], 1e-14);
                (x, f(x))
            }
        })
        .collect();
    knots
        .windows(2)
        .enumerate()
        .map(|(j, w)| Piece {
            x0: w[0].0,
            x1: w[1].0,
            b0: w[0].1,
            b1: w[1].1,
            open_lo: j == 0,
            open_hi: j == knots.len() - 2,
        })
        .collect()
}

fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let r = (x * 1e6).round() / 1e6;
        format!("{r}")
    }
}

type Range = (f64, f64, bool, bool);

/// Ranges of `b` over the given pieces, merged.
fn attained_ranges(pieces: &[Piece]) -> Vec<Range> {
    let mut rs: Vec<Range> = pieces.iter().map(Piece::range).collect();
    rs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<Range> = Vec::new();
    for r in rs {
        match merged.last_mut() {
            Some(last) if r.0 < last.1 || (r.0 == last.1 && (r.2 || last.3)) => {
                if r.1 > last.1 || (r.1 == last.1 && r.3) {
                    last.1 = r.1;
                    last.3 = r.3;
                }
            }
            _ => merged.push(r),
        }
    }
    merged
}

fn fmt_range(r: &Range) -> String {
    if r.0 == r.1 {
        return format!("{{{}}}", fmt_num(r.0));
    }
    format!(
        "{}{}, {}{}",
        if r.2 { "[" } else { "(" },
        fmt_num(r.0),
        fmt_num(r.1),
        if r.3 { "]" } else { ")" }
    )
}

/// Complement of merged ranges.
fn gaps(ranges: &[Range]) -> Vec<Range> {
    let mut out = Vec::new();
    let mut prev = (f64::NEG_INFINITY, false);
    for r in ranges {
        if r.0 > prev.0 || (r.0 == prev.0 && !r.2 && !prev.1 && r.0.is_finite()) {
            out.push((prev.0, r.0, !prev.1 && prev.0.is_finite(), !r.2));
        }
        prev = (r.1, r.3);
    }
    if prev.0 < f64::INFINITY {
        out.push((prev.0, f64::INFINITY, !prev.1, false));
    }
    out
}

/// Push the bracket of an end piece towards the interval end until `b`
/// crosses the target.
fn extend_bracket(t: &Template, iv: &Interval, pc: &Piece, target: f64) -> Option<(f64, f64)> {
    let g = |x: f64| t.b_at(x).unwrap_or(f64::NAN) - target;
    if pc.open_lo {
        let (x1, g1) = (pc.x0, g(pc.x0));
        let mut d = pc.x0 - iv.lo;
        for _ in 0..320 {
            d /= 10.0;
            let x = iv.lo + d;
            if x <= iv.lo {
                break;
            }
            if g(x) * g1 <= 0.0 {
                return Some((x, x1));
            }
        }
    }
    if pc.open_hi {
        let (x0, g0) = (pc.x1, g(pc.x1));
        let mut d = if iv.hi.is_finite() {
            iv.hi - pc.x1
        } else {
            pc.x1
        };
        for _ in 0..320 {
            let x = if iv.hi.is_finite() {
                d /= 10.0;
                iv.hi - d
            } else {
                d *= 10.0;
                d
            };
            if x >= iv.hi || !x.is_finite() {
                break;
            }
            if g(x) * g0 <= 0.0 {
                return Some((x0, x));
            }
        }
    }
    None
}

/// Parameter values on a slice where the exponent equals `b_target`.
///
/// With `branch = None` both branches are searched. Branches are split into
/// monotone pieces by a dense scan with golden-section refinement of the
/// extrema. At the ends of each branch `b` is replaced by its analytic limit,
/// so the reported ranges are exact. Each piece containing the target is
/// bisected; end pieces first extend their bracket geometrically towards the
/// branch end.
pub fn solve_iso_b(t: &Template, b_target: f64, branch: Option<Branch>) -> Result<IsoSolution> {
    t.validate()?;
    if let Some(b) = t.constant_b() {
        return if (b_target - b).abs() <= 1e-10 {
            Ok(IsoSolution::FixedPoint)
        } else {
            Err(Error::NoSolution {
                target: b_target,
                branch: String::new(),
                ranges: format!("{{{b}}} (constant on this slice)"),
                excluded: format!("everything except {b}"),
            })
        };
    }
    if let Template::Tweble { .. } = t {
        return solve_tweble(b_target, branch);
    }
    let intervals: Vec<Interval> = t
        .intervals()
        .into_iter()
        .filter(|iv| branch.is_none_or(|b| b == iv.branch))
        .collect();
    let mut solutions = Vec::new();
    let mut all_pieces = Vec::new();
    let mut unresolved = false;
    for iv in &intervals {
        let pieces = monotone_pieces(t, iv);
        for pc in &pieces {
            let (lo, hi, lc, hc) = pc.range();
            let inside = (b_target > lo || (lc && b_target == lo))
                && (b_target < hi || (hc && b_target == hi));
            if !inside {
                continue;
            }
            let g = |x: f64| t.b_at(x).unwrap_or(f64::NAN) - b_target;
            let found = bisect(&g, pc.x0, pc.x1).or_else(|| {
                extend_bracket(t, iv, pc, b_target).and_then(|(a, b)| bisect(&g, a, b))
            });
            match found {
                Some(x) => solutions.push(x),
                None => unresolved = true,
            }
        }
        all_pieces.extend(pieces);
    }
    if solutions.is_empty() {
        if unresolved {
            return Err(Error::Unsupported(format!(
                "b = {b_target} is approached only at a branch end, closer than double precision resolves"
            )));
        }
        let ranges = attained_ranges(&all_pieces);
        return Err(Error::NoSolution {
            target: b_target,
            branch: branch
                .map(|b| format!(" on the {} branch", b.label()))
                .unwrap_or_default(),
            ranges: ranges.iter().map(fmt_range).collect::<Vec<_>>().join(" u "),
            excluded: gaps(&ranges)
                .iter()
                .map(fmt_range)
                .collect::<Vec<_>>()
                .join(" u "),
        });
    }
    solutions.sort_by(f64::total_cmp);
    solutions.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(IsoSolution::Params(solutions))
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let (mut ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga * gb > 0.0 || ga.is_nan() || gb.is_nan() {
        return None;
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm.abs() <= ISO_TOL || m == a || m == b {
            return Some(m);
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    Some(0.5 * (a + b))
}

fn solve_tweble(b_target: f64, branch: Option<Branch>) -> Result<IsoSolution> {
    // b = (2 - alpha)/(1 - alpha)  <=>  alpha = (b - 2)/(b - 1); b = 1 is the Poisson limit.
    let alpha = if b_target == 1.0 {
        f64::NEG_INFINITY
    } else {
        (b_target - 2.0) / (b_target - 1.0)
    };
    let on_branch = match branch {
        None => true,
        Some(Branch::LowerBranch) => alpha < 1.0,
        Some(Branch::UpperBranch) => alpha > 1.0,
        Some(_) => false,
    };
    let admissible = alpha == f64::NEG_INFINITY || (TWEBLE_ALPHA_MIN..=2.0).contains(&alpha);
    if on_branch && admissible {
        return Ok(IsoSolution::Params(vec![alpha]));
    }
    let b_lo = (2.0 - TWEBLE_ALPHA_MIN) / (1.0 - TWEBLE_ALPHA_MIN);
    Err(Error::NoSolution {
        target: b_target,
        branch: branch
            .map(|b| format!(" on the {} branch", b.label()))
            .unwrap_or_default(),
        ranges: format!("(-inf, 0] u {{1}} u [{}, inf)", fmt_num(b_lo)),
        excluded: format!("(0, 1) u (1, {}) for alpha >= -40", fmt_num(b_lo)),
    })
}

/// Moments and intercept after the variance rescaling
/// `L(lambda) -> L(s lambda) / s` with `s = sigma1sq`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rescaled {
    pub moments: Moments,
    pub a: f64,
    pub sigma1sq: f64,
    /// Explicit rescaled family, when the family is closed under rescaling
    /// (gamma only).
    pub family: Option<FamilyParams>,
}

pub fn rescale(fam: &FamilyParams, sigma1sq: f64) -> Result<Rescaled> {
    if !(sigma1sq.is_finite() && sigma1sq > 0.0) {
        return Err(Error::Domain {
            name: "sigma1sq",
            value: sigma1sq,
            range: "(0, inf)",
        });
    }
    let m = fam.moments()?;
    let family = match *fam {
        FamilyParams::Gamma { alpha, beta } => {
            Some(FamilyParams::gamma(alpha / sigma1sq, beta * sigma1sq)?)
        }
        _ => None,
    };
    Ok(Rescaled {
        moments: Moments {
            mu: m.mu,
            sigma2: sigma1sq * m.sigma2,
        },
        a: sigma1sq.ln(),
        sigma1sq,
        family,
    })
}

/// Log-Laplace transform of the rescaled law, `L(s lambda) / s`.
pub fn rescaled_llt(fam: &FamilyParams, sigma1sq: f64, lambda: f64) -> Result<f64> {
    if !(sigma1sq.is_finite() && sigma1sq > 0.0) {
        return Err(Error::Domain {
            name: "sigma1sq",
            value: sigma1sq,
            range: "(0, inf)",
        });
    }
    Ok(fam.llt(sigma1sq * lambda)? / sigma1sq)
}

/// Pólya-Aeppli with `alpha = 1`: the exponent from its closed form next to
/// the competing reading `b = log(2 - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaAlphaOneRow {
    pub q: f64,
    pub b_formula: f64,
    pub b_prose: f64,
}

pub fn pa_alpha_one_comparison(q_grid: &[f64]) -> Result<Vec<PaAlphaOneRow>> {
    let t = Template::PolyaAeppli { alpha: 1.0 };
    q_grid
        .iter()
        .map(|&q| {
            Ok(PaAlphaOneRow {
                q,
                b_formula: t.b_at(q)?,
                b_prose: (2.0 - q).ln(),
            })
        })
        .collect()
}

/// The law of each of `n` iid summands of `fam`.
pub fn iid_summand(fam: &FamilyParams, n: u32) -> Result<FamilyParams> {
    fam.validate()?;
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            range: "n >= 1",
        });
    }
    let n = n as f64;
    match *fam {
        FamilyParams::NegBin { alpha, p } => FamilyParams::neg_bin(alpha / n, p),
        FamilyParams::Gamma { alpha, beta } => FamilyParams::gamma(alpha / n, beta),
        _ => Err(Error::Unsupported(format!(
            "iid summands within the family are only implemented for negbin and gamma, not {}",
            fam.kind().name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(f: FamilyParams) -> f64 {
        tl_exponent(&f).unwrap()
    }

    #[test]
    fn named_exponents() {
        assert_eq!(b(FamilyParams::tweble(0.0, 1.0).unwrap()), 2.0);
        assert_eq!(b(FamilyParams::tweble(2.0, -1.0).unwrap()), 0.0);
        assert_eq!(
            b(FamilyParams::tweble(f64::NEG_INFINITY, 1.0).unwrap()),
            1.0
        );
        let p0 = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(b(FamilyParams::neg_bin(1.0, p0).unwrap()).abs() < 1e-10);
        let q = 1.0 / 2f64.sqrt();
        let f = FamilyParams::cp_geo(1.0, 1.0 - q).unwrap();
        assert!(b(f).abs() < 1e-10);
        assert!((f.moments().unwrap().sigma2 - 1.0).abs() < 1e-12);
        let q0 = ((0.25f64 + 4.0).sqrt() - 0.5) / 2.0;
        assert!((q0 - 0.780_776_4).abs() < 1e-7);
        let f = FamilyParams::polya_aeppli(0.5, 1.0 - q0).unwrap();
        assert!(b(f).abs() < 1e-10);
        assert_eq!(b(FamilyParams::gamma(2.0, 2.0).unwrap()), 1.5);
    }

    #[test]
    fn singular_mean_is_an_error() {
        let f = FamilyParams::neg_bin(1.0, 0.5).unwrap();
        assert!(matches!(tl_exponent(&f), Err(Error::SingularMean { .. })));
        let r = tl_report(&f).unwrap();
        assert_eq!(r.branch, Branch::Singular);
        assert!(r.b.is_none());
        // TweBLE at mu = 1 has sigma2 = 1 and keeps its closed form
        assert_eq!(b(FamilyParams::tweble(0.5, 0.5).unwrap()), 3.0);
    }

    #[test]
    fn critical_values() {
        let c = critical_points(&Template::NegBin { alpha: 1.0 }).unwrap();
        assert_eq!(c["p_c"], 0.5);
        assert!((c["p_0"] - 0.381_966_011_250_105).abs() < 1e-12);
        assert_eq!(c["b_min"], 2.0);
        assert_eq!(c["b_min_attained"], 0.0);
        let c = critical_points(&Template::CpGeo { alpha: 1.0 }).unwrap();
        assert_eq!(c["q_c"], 0.5);
        assert!((c["q_0"] - 0.707_106_781_186_547_5).abs() < 1e-12);
        let c = critical_points(&Template::Gamma { beta: 2.0 }).unwrap();
        assert_eq!(c["alpha_c"], 0.5);
        assert!(critical_points(&Template::Gamma { beta: 1.0 })
            .unwrap()
            .is_empty());
    }

    #[test]
    fn critical_values_solve_their_equations() {
        for alpha in [0.2, 0.5, 1.0, 2.0, 7.0] {
            let c = critical_points(&Template::NegBin { alpha }).unwrap();
            let m = FamilyParams::neg_bin(alpha, c["p_c"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.mu - 1.0).abs() < 1e-10);
            let m = FamilyParams::neg_bin(alpha, c["p_0"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.sigma2 - 1.0).abs() < 1e-10);
            let c = critical_points(&Template::CpGeo { alpha }).unwrap();
            let m = FamilyParams::cp_geo(alpha, 1.0 - c["q_c"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.mu - 1.0).abs() < 1e-10);
            let m = FamilyParams::cp_geo(alpha, 1.0 - c["q_0"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.sigma2 - 1.0).abs() < 1e-10);
            assert!(c["q_0"] > c["q_c"]);
        }
        for alpha in [0.1, 0.5, 0.9] {
            let c = critical_points(&Template::PolyaAeppli { alpha }).unwrap();
            let m = FamilyParams::polya_aeppli(alpha, 1.0 - c["q_c"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.mu - 1.0).abs() < 1e-10);
            let m = FamilyParams::polya_aeppli(alpha, 1.0 - c["q_0"])
                .unwrap()
                .moments()
                .unwrap();
            assert!((m.sigma2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn b_min_interior_for_alpha_above_one() {
        let bm = negbin_b_min(2.0).unwrap();
        assert!(bm.attained);
        assert!(bm.b_min > 1.0 && bm.b_min < 2.0);
        // local minimum: neighbours are not lower
        let t = Template::NegBin { alpha: 2.0 };
        for d in [-1e-4, 1e-4] {
            assert!(t.b_at(bm.argmin_p + d).unwrap() >= bm.b_min);
        }
        let bm = negbin_b_min(0.5).unwrap();
        assert!(!bm.attained && bm.b_min == 2.0);
    }

    #[test]
    fn tweble_curve() {
        let rows = b_curve(
            &Template::Tweble { theta_abs: 1.0 },
            &[-2.0, -1.0, 0.0, 0.5],
        )
        .unwrap();
        let got: Vec<f64> = rows.iter().map(|r| r.b.unwrap()).collect();
        let want = [4.0 / 3.0, 1.5, 2.0, 3.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(b_curve(&Template::Tweble { theta_abs: 1.0 }, &[]).is_err());
    }

    #[test]
    fn negbin_curve_sign_pattern_and_singular_row() {
        let rows = b_curve(
            &Template::NegBin { alpha: 1.0 },
            &[0.1, (3.0 - 5f64.sqrt()) / 2.0, 0.45, 0.5],
        )
        .unwrap();
        assert!(rows[0].b.unwrap() > 0.0);
        assert!(rows[1].b.unwrap().abs() < 1e-10);
        assert!(rows[2].b.unwrap() < 0.0);
        assert_eq!(rows[3].branch, Branch::Singular);
        assert_eq!(rows[3].side_signs, Some((-1.0, 1.0)));
    }

    #[test]
    fn polya_aeppli_alpha_one_limits() {
        let t = Template::PolyaAeppli { alpha: 1.0 };
        assert!((t.b_at(1e-9).unwrap() - 2.0).abs() < 0.05);
        assert!((t.b_at(1.0 - 1e-7).unwrap() - 3.0).abs() < 1e-5);
    }

    #[test]
    fn pa_alpha_one_rows() {
        let rows = pa_alpha_one_comparison(&[1e-6, 0.5, 1.0 - 1e-6]).unwrap();
        assert!(rows[2].b_formula > 2.9 && rows[2].b_prose.abs() < 1e-5);
        assert!(pa_alpha_one_comparison(&[1.0]).is_err());
    }

    #[test]
    fn iso_b() {
        let s = solve_iso_b(&Template::NegBin { alpha: 1.0 }, 0.0, None).unwrap();
        match s {
            IsoSolution::Params(ps) => {
                assert_eq!(ps.len(), 1);
                assert!((ps[0] - 0.381_966_011_250_105).abs() < 1e-9);
            }
            _ => panic!(),
        }
        assert_eq!(
            solve_iso_b(&Template::Gamma { beta: 1.0 }, 1.0, None).unwrap(),
            IsoSolution::FixedPoint
        );
        let err = solve_iso_b(&Template::CpGeo { alpha: 1.0 }, 1.5, None).unwrap_err();
        assert!(matches!(err, Error::NoSolution { .. }));
        let msg = err.to_string();
        assert!(msg.contains("excluded: [1, 2]"), "{msg}");
        let cases = [
            (Template::NegBin { alpha: 1.0 }, 1.5, "excluded: [1, 2]"),
            (Template::PolyaAeppli { alpha: 1.5 }, 2.2, "(2.09133, inf)"),
            (Template::Gamma { beta: 2.0 }, 1.0, "excluded: {1}"),
        ];
        for (t, target, needle) in cases {
            let msg = solve_iso_b(&t, target, None).unwrap_err().to_string();
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn iso_b_solutions_hit_target() {
        let cases = [
            (Template::NegBin { alpha: 2.0 }, 1.9),
            (Template::NegBin { alpha: 0.5 }, -3.0),
            (Template::CpGeo { alpha: 0.3 }, 5.0),
            (Template::PolyaAeppli { alpha: 1.5 }, 2.05),
            (Template::PolyaAeppli { alpha: 0.4 }, -1.0),
            (Template::Gamma { beta: 0.5 }, 7.0),
            (Template::Gamma { beta: 3.0 }, -0.5),
        ];
        for (t, target) in cases {
            let IsoSolution::Params(ps) = solve_iso_b(&t, target, None).unwrap() else {
                panic!("{t:?}")
            };
            for p in ps {
                assert!((t.b_at(p).unwrap() - target).abs() <= 1e-10, "{t:?} {p}");
            }
        }
        // two crossings on the non-monotone negative-binomial upper branch
        let IsoSolution::Params(ps) = solve_iso_b(
            &Template::NegBin { alpha: 2.0 },
            1.9,
            Some(Branch::UpperBranch),
        )
        .unwrap() else {
            panic!()
        };
        assert_eq!(ps.len(), 2);
    }

    #[test]
    fn tweble_iso_b() {
        let t = Template::Tweble { theta_abs: 1.0 };
        assert_eq!(
            solve_iso_b(&t, 3.0, None).unwrap(),
            IsoSolution::Params(vec![0.5])
        );
        assert_eq!(
            solve_iso_b(&t, 1.0, None).unwrap(),
            IsoSolution::Params(vec![f64::NEG_INFINITY])
        );
        assert!(solve_iso_b(&t, 0.5, None).is_err());
        assert!(solve_iso_b(&t, -1.0, Some(Branch::LowerBranch)).is_err());
    }

    #[test]
    fn rescale_examples() {
        let nb = FamilyParams::neg_bin(1.0, 0.5).unwrap();
        let r = rescale(&nb, 1.0).unwrap();
        assert_eq!(r.moments, nb.moments().unwrap());
        assert_eq!(r.a, 0.0);
        let r = rescale(&nb, 1f64.exp()).unwrap();
        assert!((r.a - 1.0).abs() < 1e-15);
        assert!((r.moments.sigma2 - 2.0 * 1f64.exp()).abs() < 1e-14);
        let g = FamilyParams::gamma(2.0, 1.0).unwrap();
        let r = rescale(&g, 2.0).unwrap();
        assert_eq!(r.family, Some(FamilyParams::gamma(1.0, 2.0).unwrap()));
        assert_eq!((r.moments.mu, r.moments.sigma2), (2.0, 4.0));
        assert!(rescale(&g, 0.0).is_err());
        // the explicit gamma agrees with L(s lambda)/s
        for lambda in [0.1, 1.0, 3.0] {
            let lhs = r.family.unwrap().llt(lambda).unwrap();
            let rhs = rescaled_llt(&g, 2.0, lambda).unwrap();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn iid_summands() {
        let nb = FamilyParams::neg_bin(2.0, 0.5).unwrap();
        let s = iid_summand(&nb, 2).unwrap();
        assert_eq!(s, FamilyParams::neg_bin(1.0, 0.5).unwrap());
        let m = s.moments().unwrap();
        assert_eq!((m.mu, m.sigma2), (1.0, 2.0));
        assert_eq!(
            iid_summand(&FamilyParams::gamma(3.0, 1.0).unwrap(), 3).unwrap(),
            FamilyParams::gamma(1.0, 1.0).unwrap()
        );
        assert_eq!(iid_summand(&nb, 1).unwrap(), nb);
        assert!(iid_summand(&FamilyParams::cp_geo(1.0, 0.5).unwrap(), 2).is_err());
        assert!(iid_summand(&nb, 0).is_err());
    }
}
