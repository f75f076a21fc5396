//! Uniform grids, trapezoid quadrature and grid densities.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Uniform 1-D grid of `n` nodes spanning `[lo, hi]` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        assert!(hi > lo && n >= 2);
        Grid1d { lo, hi, n }
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + self.dx() * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            self.dx() * 0.5
        } else {
            self.dx()
        }
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let mut acc = 0.5 * (values[0] + values[self.n - 1]);
        for v in &values[1..self.n - 1] {
            acc += v;
        }
        acc * self.dx()
    }

    pub fn sample<F: FnMut(f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        self.points().map(|x| f(x)).collect()
    }

    /// Quadrature of `f` over the grid.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        let v = self.sample(f);
        self.trapezoid(&v)
    }
}

/// Non-negative density tabulated on a [`Grid1d`], normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid1d,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    /// Builds a density from samples, normalizing to unit trapezoid mass.
    pub fn from_samples(grid: Grid1d, mut values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::Invalid("density length mismatch".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoreError::Invalid(
                "density values must be finite and non-negative".into(),
            ));
        }
        let mass = grid.trapezoid(&values);
        if mass <= 0.0 {
            return Err(CoreError::Invalid("density has zero mass".into()));
        }
        for v in &mut values {
            *v /= mass;
        }
        Ok(DensityField { grid, values, time })
    }

    /// Builds a density from solver output without renormalizing, so mass
    /// drift stays observable. Small negative round-off is clamped to zero.
    pub fn from_raw(grid: Grid1d, mut values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::Invalid("density length mismatch".into()));
        }
        let scale = values.iter().cloned().fold(0.0f64, f64::max);
        for v in &mut values {
            if !v.is_finite() || *v < -1e-9 * scale {
                return Err(CoreError::Invalid(
                    "solver density has non-finite or negative values".into(),
                ));
            }
            *v = v.max(0.0);
        }
        Ok(DensityField { grid, values, time })
    }

    pub fn uniform(grid: Grid1d, time: f64) -> Self {
        let v = vec![1.0; grid.n];
        DensityField::from_samples(grid, v, time).expect("uniform density")
    }

    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    /// L1 distance between two densities on the same grid.
    pub fn l1_distance(&self, other: &DensityField) -> f64 {
        assert_eq!(self.grid, other.grid);
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        self.grid.trapezoid(&diff)
    }

    /// Cumulative distribution at the grid nodes (trapezoid running sum).
    pub fn cdf(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        let mut out = vec![0.0; self.grid.n];
        for i in 1..self.grid.n {
            out[i] = out[i - 1] + 0.5 * (self.values[i - 1] + self.values[i]) * dx;
        }
        let total = out[self.grid.n - 1];
        if total > 0.0 {
            for v in &mut out {
                *v /= total;
            }
        }
        out
    }

    /// CDF evaluated at an arbitrary point by linear interpolation.
    pub fn cdf_at(&self, cdf: &[f64], x: f64) -> f64 {
        if x <= self.grid.lo {
            return 0.0;
        }
        if x >= self.grid.hi {
            return 1.0;
        }
        let u = (x - self.grid.lo) / self.grid.dx();
        let i = (u.floor() as usize).min(self.grid.n - 2);
        let frac = u - i as f64;
        cdf[i] + (cdf[i + 1] - cdf[i]) * frac
    }

    /// Inverse-CDF sample for a uniform deviate `u` in [0, 1).
    pub fn inverse_cdf(&self, cdf: &[f64], u: f64) -> f64 {
        let idx = match cdf.binary_search_by(|p| p.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i,
        };
        if idx == 0 {
            return self.grid.lo;
        }
        if idx >= self.grid.n {
            return self.grid.hi;
        }
        let lo = cdf[idx - 1];
        let hi = cdf[idx];
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        self.grid.x(idx - 1) + frac * self.grid.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_integrates_polynomial() {
        let g = Grid1d::new(0.0, 1.0, 2049);
        let v = g.integrate(|x| 3.0 * x * x);
        assert_relative_eq!(v, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn density_normalizes_and_cdf_monotone() {
        let g = Grid1d::new(0.0, 1.0, 257);
        let d = DensityField::from_samples(g.clone(), g.sample(|x| x + 0.1), 0.0).unwrap();
        assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-12);
        let cdf = d.cdf();
        assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
        assert_relative_eq!(cdf[g.n - 1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_cdf_round_trips() {
        let g = Grid1d::new(-2.0, 2.0, 513);
        let d =
            DensityField::from_samples(g, (0..513).map(|i| 1.0 + (i % 7) as f64).collect(), 0.0)
                .unwrap();
        let cdf = d.cdf();
        for &u in &[0.01, 0.3, 0.5, 0.77, 0.99] {
            let x = d.inverse_cdf(&cdf, u);
            assert_relative_eq!(d.cdf_at(&cdf, x), u, epsilon = 1e-9);
        }
    }
}
