//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult<T> {
    pub root: T,
    pub value: T,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` until the bracket is narrower than
/// `rel_tol * max(|lo|, |hi|, 1)`. `f(lo)` and `f(hi)` must differ in sign
/// (a zero at either end is accepted).
///
/// Returns the final bracket along with the midpoint so callers can polish.
pub fn bisect<T, F>(f: F, lo: T, hi: T, rel_tol: T, max_iter: usize) -> Result<(RootResult<T>, [T; 2])>
where
    T: Scalar,
    F: Fn(T) -> Result<T>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == T::zero() {
        return Ok((RootResult { root: a, value: fa, iterations: 0 }, [a, a]));
    }
    if fb == T::zero() {
        return Ok((RootResult { root: b, value: fb, iterations: 0 }, [b, b]));
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::InvalidBracket {
            lo: a.as_f64(),
            hi: b.as_f64(),
            f_lo: fa.as_f64(),
            f_hi: fb.as_f64(),
        });
    }
    let two = T::lit(2.0);
    let mut iterations = 0;
    loop {
        let mid = a + (b - a) / two;
        let scale = a.abs().max(b.abs()).max(T::one());
        if b - a <= rel_tol * scale || mid <= a || mid >= b {
            let value = f(mid)?;
            return Ok((RootResult { root: mid, value, iterations }, [a, b]));
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: (b - a).as_f64(),
            });
        }
        iterations += 1;
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok((RootResult { root: mid, value: fm, iterations }, [mid, mid]));
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
}

/// Illinois-style secant refinement inside a sign-changing bracket. Stops once
/// `|f| <= residual_tol` and returns the best point seen.
pub fn secant_polish<T, F>(f: F, bracket: [T; 2], start: RootResult<T>, residual_tol: T, max_iter: usize) -> Result<RootResult<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<T>,
{
    let [mut a, mut b] = bracket;
    let mut best = start;
    if best.value.abs() <= residual_tol || a == b {
        return Ok(best);
    }
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut side = 0i8;
    for _ in 0..max_iter {
        if fa.signum() == fb.signum() {
            break;
        }
        let x = b - fb * (b - a) / (fb - fa);
        if !(x > a.min(b) && x < a.max(b)) {
            break;
        }
        let fx = f(x)?;
        best.iterations += 1;
        if fx.abs() < best.value.abs() {
            best.root = x;
            best.value = fx;
        }
        if fx.abs() <= residual_tol {
            break;
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa /= T::lit(2.0);
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb /= T::lit(2.0);
            }
            side = 1;
        }
    }
    Ok(best)
}
