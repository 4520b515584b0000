//! Natural cubic splines on rectilinear grids.
//!
//! Used to interpolate per-coefficient data of solved tori across an action
//! window. One-dimensional splines solve the standard tridiagonal system for
//! knot second derivatives (natural ends); the two-dimensional form is the
//! tensor product, interpolating along the second axis per row and then
//! splining the row results.

use crate::error::{Error, Result};

/// Knot second derivatives of the natural cubic interpolant, via the Thomas
/// algorithm. `xs` must be strictly increasing and match `ys` in length.
pub fn natural_second_derivs(xs: &[f64], ys: &[f64], out: &mut Vec<f64>) -> Result<()> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::InvalidArgument(format!(
            "spline needs at least 3 knots, got {n} xs and {} ys",
            ys.len()
        )));
    }
    for w in xs.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(
                "spline knots must be strictly increasing".into(),
            ));
        }
    }
    out.clear();
    out.resize(n, 0.0);
    // Interior equations: (h_{i-1}/6) m_{i-1} + ((h_{i-1}+h_i)/3) m_i
    // + (h_i/6) m_{i+1} = dy_i/h_i - dy_{i-1}/h_{i-1}; natural: m_0 = m_n = 0.
    let mut diag = vec![0.0f64; n];
    let mut rhs = vec![0.0f64; n];
    let mut upper = vec![0.0f64; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
    }
    // Forward sweep over the interior band.
    for i in 2..n - 1 {
        let lower = (xs[i] - xs[i - 1]) / 6.0;
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { out[i + 1] } else { 0.0 };
        out[i] = (rhs[i] - upper[i] * next) / diag[i];
    }
    Ok(())
}

/// Evaluate the natural cubic interpolant given precomputed second
/// derivatives; clamps to the end cubics outside the knot range.
pub fn eval_with(xs: &[f64], ys: &[f64], m: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = match xs.partition_point(|&t| t <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let h = xs[k + 1] - xs[k];
    let a = (xs[k + 1] - x) / h;
    let b = (x - xs[k]) / h;
    a * ys[k]
        + b * ys[k + 1]
        + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0
}

/// A one-dimensional natural cubic spline that owns its data.
#[derive(Debug, Clone)]
pub struct Spline1 {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl Spline1 {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let mut m = Vec::new();
        natural_second_derivs(xs, ys, &mut m)?;
        Ok(Spline1 {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_with(&self.xs, &self.ys, &self.m, x)
    }
}

/// Tensor-product natural cubic spline over a rectilinear grid; `values` is
/// row-major with the first axis outermost.
#[derive(Debug, Clone)]
pub struct Spline2 {
    xs1: Vec<f64>,
    xs2: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives along axis 2, one band per row.
    m2: Vec<f64>,
}

impl Spline2 {
    pub fn natural(xs1: &[f64], xs2: &[f64], values: &[f64]) -> Result<Self> {
        let (n1, n2) = (xs1.len(), xs2.len());
        if values.len() != n1 * n2 {
            return Err(Error::InvalidArgument(format!(
                "grid of {n1} x {n2} knots needs {} values, got {}",
                n1 * n2,
                values.len()
            )));
        }
        let mut m2 = vec![0.0f64; n1 * n2];
        let mut band = Vec::new();
        for r in 0..n1 {
            natural_second_derivs(xs2, &values[r * n2..(r + 1) * n2], &mut band)?;
            m2[r * n2..(r + 1) * n2].copy_from_slice(&band);
        }
        Ok(Spline2 {
            xs1: xs1.to_vec(),
            xs2: xs2.to_vec(),
            values: values.to_vec(),
            m2,
        })
    }

    pub fn eval(&self, a1: f64, a2: f64) -> f64 {
        let (n1, n2) = (self.xs1.len(), self.xs2.len());
        let mut col = Vec::with_capacity(n1);
        for r in 0..n1 {
            col.push(eval_with(
                &self.xs2,
                &self.values[r * n2..(r + 1) * n2],
                &self.m2[r * n2..(r + 1) * n2],
                a2,
            ));
        }
        let mut m = Vec::new();
        natural_second_derivs(&self.xs1, &col, &mut m)
            .expect("axis validated at construction");
        eval_with(&self.xs1, &col, &m, a1)
    }
}
