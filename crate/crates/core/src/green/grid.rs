//! Periodic grid, n-dimensional FFT and spectral application of constant
//! coefficient operators.

use crate::constants::DimPair;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_BUDGET: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusGrid {
    pub n: u32,
    #[serde(rename = "L")]
    pub side: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

impl TorusGrid {
    pub fn new(n: u32, side: f64, points: usize) -> Result<Self> {
        Self::with_budget(n, side, points, DEFAULT_BUDGET)
    }

    pub fn with_budget(n: u32, side: f64, points: usize, budget: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Range(format!("torus grids support n = 2, 3 (got {n})")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Range(format!("side length must be positive (got {side})")));
        }
        if points < 16 || points % 2 == 1 {
            return Err(Error::Range(format!("points per axis must be even and >= 16 (got {points})")));
        }
        let total = points.checked_pow(n).filter(|&t| t <= budget);
        if total.is_none() {
            return Err(Error::Range(format!("{points}^{n} grid points exceed the budget {budget}")));
        }
        Ok(TorusGrid { n, side, points })
    }

    pub fn h(&self) -> f64 {
        self.side / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n as i32)
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.n as usize];
        for a in (0..self.n as usize).rev() {
            c[a] = idx % self.points;
            idx /= self.points;
        }
        c
    }

    /// Point shifted by an integer offset; wraps around.
    pub fn shift(&self, c: &[usize], off: &[i64]) -> Vec<usize> {
        let p = self.points as i64;
        c.iter().zip(off).map(|(&i, &o)| (i as i64 + o).rem_euclid(p) as usize).collect()
    }

    /// Signed minimal-image offset along one axis, in cells.
    pub fn wrap(&self, d: i64) -> i64 {
        let p = self.points as i64;
        let d = d.rem_euclid(p);
        if d >= p / 2 {
            d - p
        } else {
            d
        }
    }

    pub fn offset_cells(&self, a: &[usize], b: &[usize]) -> Vec<i64> {
        a.iter().zip(b).map(|(&i, &j)| self.wrap(i as i64 - j as i64)).collect()
    }

    /// Minimal-image Euclidean distance.
    pub fn dist(&self, a: &[usize], b: &[usize]) -> f64 {
        let s: i64 = self.offset_cells(a, b).iter().map(|d| d * d).sum();
        (s as f64).sqrt() * self.h()
    }

    /// |xi|^2 for the Fourier index `idx`.
    pub fn xi2(&self, idx: usize) -> f64 {
        let w = 2.0 * PI / self.side;
        let c = self.coords(idx);
        let s: i64 = c.iter().map(|&i| self.wrap(i as i64).pow(2)).sum();
        w * w * s as f64
    }

    /// Signed integer mode of each axis for the Fourier index `idx`.
    pub fn mode(&self, idx: usize) -> Vec<i64> {
        self.coords(idx).iter().map(|&i| self.wrap(i as i64)).collect()
    }
}

/// Planned forward and inverse transforms along every axis.
pub struct GridFft {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.points);
        let inv = planner.plan_fft_inverse(grid.points);
        GridFft { grid, fwd, inv }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let p = self.grid.points;
        let n = self.grid.n as usize;
        let mut line = vec![Complex64::new(0.0, 0.0); p];
        for axis in 0..n {
            let stride = p.pow((n - 1 - axis) as u32);
            let block = stride * p;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized sum_j x_j e^{-2 pi i j.m / N}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Unnormalized sum_m X_m e^{+2 pi i j.m / N}.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Real field -> Fourier coefficients c_m with f(x_j) = sum_m c_m e^{i xi_m x_j}.
    pub fn analyze(&self, f: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut d);
        let s = 1.0 / self.grid.len() as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }

    /// Inverse of `analyze`, keeping the real part.
    pub fn synthesize(&self, c: &[Complex64]) -> Vec<f64> {
        let mut d = c.to_vec();
        self.inverse(&mut d);
        d.iter().map(|v| v.re).collect()
    }

    /// Multiplies the Fourier coefficients of f by m(|xi|^2).
    pub fn multiply<F: Fn(f64) -> f64>(&self, f: &[f64], m: F) -> Vec<f64> {
        let mut c = self.analyze(f);
        for (i, v) in c.iter_mut().enumerate() {
            *v *= m(self.grid.xi2(i));
        }
        self.synthesize(&c)
    }

}

/// Cyclic index shift of a real field, index 0 to `to`, without FFTs.
pub fn translate(grid: &TorusGrid, f: &[f64], to: &[usize]) -> Vec<f64> {
    let off: Vec<i64> = to.iter().map(|&t| t as i64).collect();
    let mut out = vec![0.0; f.len()];
    for (i, &v) in f.iter().enumerate() {
        out[grid.index(&grid.shift(&grid.coords(i), &off))] = v;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Shape {
    /// s(x) = c, |c| <= 1.
    Constant(f64),
    /// s(x) = cos of the angle between x - x0 and the first axis.
    Axial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyPotential {
    pub lambda: f64,
    pub x0: Vec<usize>,
    pub shape: Shape,
}

impl HardyPotential {
    pub fn new(lambda: f64, x0: Vec<usize>, shape: Shape) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Range(format!("lambda must be >= 0 (got {lambda})")));
        }
        if let Shape::Constant(c) = shape {
            if !(c.abs() <= 1.0) {
                return Err(Error::Range(format!("|s| must be <= 1 (got {c})")));
            }
        }
        Ok(HardyPotential { lambda, x0, shape })
    }

    /// V on the grid; the cell of x0 is excluded (value 0).
    pub fn sample(&self, grid: &TorusGrid, k: u32) -> Result<Vec<f64>> {
        if self.x0.len() != grid.n as usize || self.x0.iter().any(|&i| i >= grid.points) {
            return Err(Error::Domain("singular point outside the grid".into()));
        }
        Ok((0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                let d = grid.dist(&c, &self.x0);
                if d == 0.0 {
                    return 0.0;
                }
                let s = match self.shape {
                    Shape::Constant(c) => c,
                    Shape::Axial => grid.offset_cells(&c, &self.x0)[0] as f64 * grid.h() / d,
                };
                self.lambda * s / d.powi(2 * k as i32)
            })
            .collect())
    }
}

/// P = Delta^k + sum_j b_j Delta^j with constant coefficients, optionally minus V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub n: u32,
    pub k: u32,
    pub b: Vec<f64>,
    #[serde(default)]
    pub potential: Option<HardyPotential>,
}

impl OperatorSpec {
    pub fn new(d: DimPair, b: Vec<f64>) -> Result<Self> {
        let s = OperatorSpec { n: d.n, k: d.k, b, potential: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_potential(mut self, v: HardyPotential) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn dim(&self) -> Result<DimPair> {
        DimPair::new(self.n, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.dim()?;
        if self.b.len() != self.k as usize {
            return Err(Error::Range(format!("need {} lower coefficients b_0..b_{{k-1}}", self.k)));
        }
        if self.b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Range("lower coefficients must be finite and >= 0".into()));
        }
        if !(self.b[0] > 0.0) {
            return Err(Error::NotCoercive(format!("b_0 = {} leaves the constant mode in the kernel", self.b[0])));
        }
        Ok(())
    }

    pub fn symbol(&self, xi2: f64) -> f64 {
        let mut s = xi2.powi(self.k as i32);
        for (j, &b) in self.b.iter().enumerate() {
            s += b * xi2.powi(j as i32);
        }
        s
    }

    /// min over the grid modes of the symbol.
    pub fn min_symbol(&self, grid: &TorusGrid) -> f64 {
        (0..grid.len()).map(|i| self.symbol(grid.xi2(i))).fold(f64::INFINITY, f64::min)
    }

    pub fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        self.validate()?;
        if grid.n != self.n {
            return Err(Error::Domain(format!("operator dimension {} on a {}-dimensional grid", self.n, grid.n)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        assert!(TorusGrid::new(3, 1.0, 15).is_err());
        assert!(TorusGrid::new(3, 1.0, 8).is_err());
        assert!(TorusGrid::new(4, 1.0, 16).is_err());
        assert!(TorusGrid::new(3, 1.0, 256).is_err());
        let g = TorusGrid::new(3, 1.0, 16).unwrap();
        for i in [0, 17, 4095] {
            assert_eq!(g.index(&g.coords(i)), i);
        }
        assert_eq!(g.dist(&[0, 0, 0], &[15, 0, 0]), g.h());
        assert_eq!(g.wrap(8), -8);
    }

    #[test]
    fn fft_round_trip_and_laplacian() {
        let g = TorusGrid::new(2, 2.0 * PI, 16).unwrap();
        let f = GridFft::new(g);
        let field: Vec<f64> = (0..g.len())
            .map(|i| {
                let c = g.coords(i);
                let (x, y) = (c[0] as f64 * g.h(), c[1] as f64 * g.h());
                (2.0 * x).sin() * y.cos()
            })
            .collect();
        let lap = f.multiply(&field, |x| x);
        for (a, b) in lap.iter().zip(&field) {
            assert!((a - 5.0 * b).abs() < 1e-12);
        }
        let back = f.multiply(&field, |_| 1.0);
        assert!(back.iter().zip(&field).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn spec_validation() {
        let d = DimPair::new(3, 1).unwrap();
        assert!(matches!(OperatorSpec::new(d, vec![0.0]), Err(Error::NotCoercive(_))));
        assert!(OperatorSpec::new(d, vec![-1.0]).is_err());
        assert!(OperatorSpec::new(d, vec![1.0, 2.0]).is_err());
        let s = OperatorSpec::new(d, vec![2.0]).unwrap();
        assert_eq!(s.symbol(3.0), 5.0);
    }

    #[test]
    fn potential_bound() {
        let g = TorusGrid::new(3, 1.0, 16).unwrap();
        for shape in [Shape::Constant(-1.0), Shape::Axial] {
            let v = HardyPotential::new(0.3, vec![3, 4, 5], shape).unwrap();
            let vals = v.sample(&g, 1).unwrap();
            for (i, &x) in vals.iter().enumerate() {
                let d = g.dist(&g.coords(i), &[3, 4, 5]);
                assert!(x.abs() * d * d <= 0.3 + 1e-12);
            }
        }
        assert!(HardyPotential::new(0.1, vec![0, 0, 0], Shape::Constant(1.5)).is_err());
    }
}
