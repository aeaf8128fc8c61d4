//! Adaptive Simpson quadrature with an absolute-error target.

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Returns `None` if the integrand produces a non-finite value anywhere it
/// is evaluated, or if the recursion bottoms out before the local error
/// target is met.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> Option<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !fa.is_finite() || !fb.is_finite() || !fm.is_finite() {
        return None;
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return None;
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * abs_tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        // Interval too rough for the budget; refuse rather than return a
        // value outside tolerance.
        return None;
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, abs_tol / 2.0, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, abs_tol / 2.0, depth - 1)?;
    Some(l + r)
}
