//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use alloc::vec;
use alloc::vec::Vec;

use super::NumericError;
use crate::math::abs;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

// The Kronrod–Gauss difference cannot resolve below rounding.
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

/// One G7K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, abs((k - g) * h))
}

/// Adaptive integral of `f` over [a, b] by bisection of the worst panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64, NumericError> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    panels.push((a, b, v, e));
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(NumericError::NonFinite { t: a });
        }
        if err <= abs_tol.max(rel_tol * abs(total)).max(ROUNDOFF * abs(total)) {
            return Ok(total);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(wi, we), (i, p)| if p.3 > we { (i, p.3) } else { (wi, we) });
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, m);
        let (v2, e2) = gk15(&f, m, pb);
        panels.push((pa, m, v1, e1));
        panels.push((m, pb, v2, e2));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    Err(NumericError::Quadrature { estimate: total, error: err })
}

/// Running integral ∫_{x₀}^{xᵢ} f at every grid point, one adaptive
/// integral per interval.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, xs: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Vec<f64>, NumericError> {
    let mut out = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        out[i] = out[i - 1] + integrate(&f, xs[i - 1], xs[i], abs_tol, rel_tol)?;
    }
    Ok(out)
}

/// Uniform grid in t(s) = ∫_{s₀}^{s} speed, with the parameter values
/// s(tᵢ) found by safeguarded Newton on the running integral.
pub fn invert_arc_length<F: Fn(f64) -> f64>(
    speed: F,
    s_range: (f64, f64),
    n: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(Vec<f64>, Vec<f64>), NumericError> {
    let (s0, s1) = s_range;
    if !(s1 > s0) || n < 2 {
        return Err(NumericError::EmptyInterval);
    }
    let total = integrate(&speed, s0, s1, abs_tol, rel_tol)?;
    let tgrid = super::linspace(0.0, total, n);
    let mut s_vals = vec![s0; n];
    let mut s_prev = s0;
    let mut l_prev = 0.0;
    for i in 1..n {
        let target = tgrid[i];
        let s = if i == n - 1 {
            s1
        } else {
            let arc = |s: f64| l_prev + integrate(&speed, s_prev, s, abs_tol, rel_tol).unwrap_or(f64::NAN) - target;
            let v = speed(s_prev);
            let guess = if v > 0.0 { s_prev + (target - l_prev) / v } else { 0.5 * (s_prev + s1) };
            super::roots::safeguarded_newton(arc, &speed, s_prev, s1, guess, 1e-15)?
        };
        l_prev += integrate(&speed, s_prev, s, abs_tol, rel_tol)?;
        s_prev = s;
        s_vals[i] = s;
    }
    Ok((tgrid, s_vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_single_panel() {
        let (v, _) = gk15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn integrable_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn arc_length_of_a_parabola_graph() {
        let speed = |s: f64| (1.0 + 4.0 * s * s).sqrt();
        let (t, s) = invert_arc_length(speed, (0.0, 1.0), 9, 1e-14, 1e-14).unwrap();
        let exact = |s: f64| 0.5 * s * (1.0 + 4.0 * s * s).sqrt() + 0.25 * (2.0 * s).asinh();
        for (ti, si) in t.iter().zip(&s) {
            assert!((exact(*si) - ti).abs() < 1e-12);
        }
        assert_eq!(s[8], 1.0);
    }

    #[test]
    fn cumulative_sine() {
        let xs = crate::numeric::linspace(0.0, 3.0, 11);
        let c = cumulative(|x: f64| x.sin(), &xs, 1e-14, 1e-14).unwrap();
        for (x, v) in xs.iter().zip(c) {
            assert!((v - (1.0 - x.cos())).abs() < 1e-13);
        }
    }
}
