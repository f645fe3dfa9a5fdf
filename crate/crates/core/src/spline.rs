//! Natural cubic spline with analytic first and second derivatives.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivative of the interpolant at each knot.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds the natural spline (zero curvature at both ends).
    ///
    /// Panics if fewer than three knots are given or knots are not strictly
    /// increasing; callers validate grids before building tables.
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n, "spline needs >= 3 matching knots");
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "spline knots must be strictly increasing"
        );
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for i in 2..n - 1 {
            let lower = (x[i] - x[i - 1]) / 6.0;
            let factor = lower / diag[i - 1];
            diag[i] -= factor * upper[i - 1];
            rhs[i] -= factor * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { m[i + 1] } else { 0.0 };
            m[i] = (rhs[i] - upper[i] * next) / diag[i];
        }
        CubicSpline { x, y, m }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value, first and second derivative at `t`. Outside the knot range the
    /// end cubic is extrapolated.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        (value, d1, d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::natural(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.value(*xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn natural_ends_and_interior_accuracy() {
        let x: Vec<f64> = (0..401).map(|i| -4.0 + i as f64 * 0.02).collect();
        let y: Vec<f64> = x.iter().map(|v| v.cos()).collect();
        let s = CubicSpline::natural(x, y);
        assert_eq!(s.eval(-4.0).2, 0.0);
        let (v, d1, d2) = s.eval(0.517);
        assert!((v - 0.517f64.cos()).abs() < 1e-8);
        assert!((d1 + 0.517f64.sin()).abs() < 1e-6);
        assert!((d2 + 0.517f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn derivatives_are_consistent_with_values() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).powf(1.2) * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| (0.7 * v).sin() + v * v).collect();
        let s = CubicSpline::natural(x, y);
        let t = 1.234;
        let h = 1e-5;
        let fd1 = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
        let fd2 = (s.eval(t + h).1 - s.eval(t - h).1) / (2.0 * h);
        assert!((fd1 - s.eval(t).1).abs() < 1e-8);
        assert!((fd2 - s.eval(t).2).abs() < 1e-6);
    }
}
