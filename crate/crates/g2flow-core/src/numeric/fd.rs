//! Finite-difference derivatives on non-uniform grids via Fornberg weights.

use alloc::vec;
use alloc::vec::Vec;

use super::{check_grid, NumericError};

/// Weights `w[m][j]` such that f⁽ᵐ⁾(x0) ≈ Σⱼ w[m][j] f(xs[j]), m = 0..=max_order.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil width used for a derivative of the given order.
pub fn stencil_width(order: usize) -> usize {
    if order <= 1 {
        5
    } else {
        7
    }
}

/// Derivative of sampled data: centered stencils in the interior, shifted
/// one-sided stencils near the ends.
pub fn derivative(t: &[f64], y: &[f64], order: usize) -> Result<Vec<f64>, NumericError> {
    if t.len() != y.len() {
        return Err(NumericError::LengthMismatch { left: t.len(), right: y.len() });
    }
    let w = stencil_width(order);
    if t.len() < w {
        return Err(NumericError::GridTooShort { needed: w, got: t.len() });
    }
    check_grid(t)?;
    let n = t.len();
    let half = w / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - w);
        let xs = &t[start..start + w];
        let weights = fornberg_weights(t[i], xs, order);
        out.push(weights[order].iter().zip(&y[start..start + w]).map(|(a, b)| a * b).sum());
    }
    Ok(out)
}

/// Fourth-order central directional derivative of a smooth map, used when
/// analytic derivatives of the inputs are known.
pub fn central_directional<F>(f: F, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

/// Sixth-order variant of [`central_directional`].
pub fn central_directional6<F>(f: F, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(3.0 * h) - 9.0 * f(2.0 * h) + 45.0 * f(h) - 45.0 * f(-h) + 9.0 * f(-2.0 * h) - f(-3.0 * h)) / (60.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    #[test]
    fn five_point_central_weights() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expected = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w[1].iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_on_quartics_nonuniform() {
        let t: Vec<f64> = (0..12).map(|i| (i as f64 * 0.3).powf(1.3)).collect();
        let y: Vec<f64> = t.iter().map(|x| x.powi(4) - 2.0 * x * x + 3.0).collect();
        let d = derivative(&t, &y, 1).unwrap();
        for (x, dy) in t.iter().zip(d) {
            let exact = 4.0 * x.powi(3) - 4.0 * x;
            assert!((dy - exact).abs() < 1e-9 * (1.0 + exact.abs()), "{x}: {dy} vs {exact}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let t = linspace(0.0, 2.0, n);
            let y: Vec<f64> = t.iter().map(|x| x.sin()).collect();
            let d = derivative(&t, &y, 1).unwrap();
            t.iter().zip(d).map(|(x, dy)| (dy - x.cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn second_derivative() {
        let t = linspace(0.0, 1.0, 40);
        let y: Vec<f64> = t.iter().map(|x| x.exp()).collect();
        let d = derivative(&t, &y, 2).unwrap();
        for (x, dy) in t.iter().zip(d) {
            assert!((dy - x.exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn short_grid_rejected() {
        assert_eq!(
            derivative(&[0.0, 1.0, 2.0], &[0.0; 3], 1),
            Err(NumericError::GridTooShort { needed: 5, got: 3 })
        );
    }

    #[test]
    fn directional_stencils_on_exponential() {
        let d4 = central_directional(|h| (0.5 + 2.0 * h).exp(), 1e-3);
        let d6 = central_directional6(|h| (0.5 + 2.0 * h).exp(), 4e-3);
        let exact = 2.0 * 0.5f64.exp();
        assert!((d4 - exact).abs() < 1e-10);
        assert!((d6 - exact).abs() < 1e-12);
    }
}
