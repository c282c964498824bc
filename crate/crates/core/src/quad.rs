//! Numerical integration on finite intervals.
//!
//! Thin layer over the tanh-sinh rule from the `quadrature` crate that bisects
//! the interval until the reported error estimate meets the target.

const MAX_DEPTH: u32 = 24;

/// Error estimates below this multiple of `eps |integral|` are accepted
/// whatever the absolute target.
const REL_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Integrate `f` over `[a, b]` to roughly `tol` absolute error.
///
/// Integrable endpoint singularities are fine; non-finite integrand values
/// at the nodes are treated as zero by the underlying rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, tol);
    }
    refine(&f, a, b, tol, 0)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(REL_FLOOR * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    refine(f, a, mid, 0.5 * tol, depth + 1) + refine(f, mid, b, 0.5 * tol, depth + 1)
}
