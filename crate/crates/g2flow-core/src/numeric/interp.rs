//! Local Lagrange interpolation on sorted grids.

use super::NumericError;

/// Interpolates `y(x)` with the `npts` grid points nearest to `x`.
pub fn lagrange_local(t: &[f64], y: &[f64], x: f64, npts: usize) -> Result<f64, NumericError> {
    if t.len() != y.len() {
        return Err(NumericError::LengthMismatch { left: t.len(), right: y.len() });
    }
    if t.len() < npts {
        return Err(NumericError::GridTooShort { needed: npts, got: t.len() });
    }
    let n = t.len();
    // First index with t[i] >= x.
    let pos = t.partition_point(|v| *v < x);
    let start = pos.saturating_sub(npts / 2).min(n - npts);
    Ok(lagrange(&t[start..start + npts], &y[start..start + npts], x))
}

/// Lagrange polynomial through all given nodes, evaluated at `x`.
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut s = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                l *= (x - xj) / (xi - xj);
            }
        }
        s += l * yi;
    }
    s
}
