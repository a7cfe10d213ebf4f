//! Bracketed scalar root finding.

use super::NumericError;
use crate::math::abs;

/// Brent's method on a sign-changing bracket.
pub fn brent<F>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64, NumericError>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericError::NoSignChange { a, b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if abs(fc) < abs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * abs(b) + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if abs(m) <= tol || fb == 0.0 {
            return Ok(b);
        }
        if abs(e) >= tol && abs(fa) > abs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - abs(tol * q)).min(abs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if abs(d) > tol { d } else if m > 0.0 { tol } else { -tol };
        fb = f(b);
    }
    Err(NumericError::MaxIterations)
}

/// Newton iteration kept inside a bracket, falling back to bisection.
pub fn safeguarded_newton<F, D>(f: F, df: D, lo: f64, hi: f64, x0: f64, xtol: f64) -> Result<f64, NumericError>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericError::NoSignChange { a: lo, b: hi });
    }
    let rising = fhi > 0.0;
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(NumericError::NonFinite { t: x });
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let dfx = df(x);
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if abs(next - x) <= xtol * (1.0 + abs(x)) || hi - lo <= xtol * (1.0 + abs(x)) {
            return Ok(next);
        }
        x = next;
    }
    Err(NumericError::MaxIterations)
}
