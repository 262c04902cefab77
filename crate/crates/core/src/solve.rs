//! Scalar root finding for monotone functions: geometric bracket expansion
//! followed by a safeguarded Newton iteration that never leaves the bracket.

use crate::{Error, Result};

/// Expands `[lo, hi]` geometrically about its midpoint until `f` changes
/// sign across the interval.
pub fn expand_bracket<F: Fn(f64) -> f64>(f: &F, lo0: f64, hi0: f64) -> Result<(f64, f64)> {
    let mut lo = lo0.min(hi0);
    let mut hi = lo0.max(hi0);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..200 {
        if flo == 0.0 {
            return Ok((lo, lo));
        }
        if fhi == 0.0 {
            return Ok((hi, hi));
        }
        if flo.signum() != fhi.signum() {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        let half = (hi - lo).max(1.0);
        lo = mid - half;
        hi = mid + half;
        flo = f(lo);
        fhi = f(hi);
        if !flo.is_finite() || !fhi.is_finite() {
            return Err(Error::Numerical(format!(
                "bracket expansion hit a non-finite value: f({lo}) = {flo}, f({hi}) = {fhi}"
            )));
        }
    }
    Err(Error::Numerical(format!(
        "no sign change found while expanding bracket from [{lo0}, {hi0}]"
    )))
}

/// Newton iteration safeguarded by bisection inside a sign-changing bracket.
///
/// `f` must be continuous and change sign over `[lo, hi]`; `df` is its
/// derivative. Convergence is declared when `|f| <= ftol` or the bracket
/// width drops below `xtol`.
pub fn newton_bracketed<F, D>(
    f: &F,
    df: &D,
    bracket: (f64, f64),
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change over [{lo}, {hi}]: f = ({flo}, {fhi})"
        )));
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let fx = f(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        // Shrink the bracket around the root.
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if hi - lo <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(format!(
        "root iteration did not converge; bracket [{lo}, {hi}], last residual {}",
        f(x)
    )))
}

/// Bisection to `xtol` for a continuous function with a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, bracket: (f64, f64), xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "bisection bracket [{lo}, {hi}] has no sign change: f = ({flo}, {fhi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo <= xtol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt2() {
        let f = |x: f64| x * x - 2.0;
        let df = |x: f64| 2.0 * x;
        let b = expand_bracket(&f, 0.1, 1.0).unwrap();
        let r = newton_bracketed(&f, &df, b, 1e-15, 1e-14, 100).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn newton_safeguard_survives_flat_derivative() {
        // Derivative vanishes at 0; the bisection fallback must take over.
        let f = |x: f64| x * x * x - 1e-3;
        let df = |x: f64| 3.0 * x * x;
        let r = newton_bracketed(&f, &df, (-1.0, 2.0), 1e-15, 1e-16, 200).unwrap();
        assert!((r - 0.1).abs() < 1e-9);
    }

    #[test]
    fn expand_bracket_walks_out() {
        let f = |x: f64| x - 1000.0;
        let (lo, hi) = expand_bracket(&f, 0.0, 1.0).unwrap();
        assert!(f(lo).signum() != f(hi).signum());
    }

    #[test]
    fn bisect_monotone() {
        let f = |x: f64| 2f64.powf(x) - 8.0;
        let r = bisect(&f, (0.0, 10.0), 1e-12).unwrap();
        assert!((r - 3.0).abs() < 1e-10);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        let f = |x: f64| x * x + 1.0;
        assert!(newton_bracketed(&f, &|x| 2.0 * x, (-1.0, 1.0), 1e-12, 1e-12, 50).is_err());
    }
}
