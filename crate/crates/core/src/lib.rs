//! Taylor's law for infinitely divisible two-parameter families.
//!
//! Five families are covered: Tweedie–Bar-Lev–Enis (TweBLE), negative binomial,
//! compound Poisson-geometric, Pólya-Aeppli and gamma. For each the crate
//! provides
//!
//! * closed-form moments, log-Laplace transforms, pgfs, pmfs and exact samplers
//!   ([`families`]),
//! * Taylor's-law exponents, branch structure, iso-exponent solving and the
//!   variance rescaling ([`taylor`]),
//! * compound-Poisson and self-decomposable canonical representations decided
//!   by coefficient-level oracles ([`divisibility`]),
//! * exact simulators of the Markov processes whose limit laws these are
//!   ([`processes`]), and
//! * the Monte Carlo statistics used to check them ([`mcstats`]).
//!
//! Truncated power-series algebra lives in [`series`].

pub mod divisibility;
pub mod error;
pub mod families;
pub mod mcstats;
pub mod processes;
pub mod quad;
pub mod rng;
pub mod series;
pub mod taylor;

pub use error::{Error, Result};
pub use families::{FamilyKind, FamilyParams, Moments};
pub use series::PowerSeries;
