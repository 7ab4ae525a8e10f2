//! Small linear-algebra kernels: banded SPD Cholesky, Lanczos extremes, PCG.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric band matrix; stores the lower band row by row.
#[derive(Debug, Clone)]
pub struct Banded {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Banded { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Adds v to entry (i, j) and (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let mut l = self.clone();
        for j in 0..self.n {
            let lo = j.saturating_sub(self.bw);
            let mut d = l.data[l.slot(j, j)];
            for p in lo..j {
                let v = l.data[l.slot(j, p)];
                d -= v * v;
            }
            if !(d > 0.0) {
                return Err(Error::NotCoercive(format!("non-positive pivot {d:e} at row {j}")));
            }
            let d = d.sqrt();
            let sj = l.slot(j, j);
            l.data[sj] = d;
            for i in j + 1..(j + self.bw + 1).min(self.n) {
                let lo_i = i.saturating_sub(self.bw).max(lo);
                let mut v = l.data[l.slot(i, j)];
                for p in lo_i..j {
                    v -= l.data[l.slot(i, p)] * l.data[l.slot(j, p)];
                }
                let s = l.slot(i, j);
                l.data[s] = v / d;
            }
        }
        Ok(BandedCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: Banded,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..l.n {
            let lo = i.saturating_sub(l.bw);
            let mut v = y[i];
            for j in lo..i {
                v -= l.data[l.slot(i, j)] * y[j];
            }
            y[i] = v / l.data[l.slot(i, i)];
        }
        for i in (0..l.n).rev() {
            let mut v = y[i];
            for j in i + 1..(i + l.bw + 1).min(l.n) {
                v -= l.data[l.slot(j, i)] * y[j];
            }
            y[i] = v / l.data[l.slot(i, i)];
        }
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    (ev.min(), ev.max())
}

/// Which end of the spectrum has to converge before Lanczos stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Min,
    Max,
    Both,
}

/// Extreme eigenvalues (min, max) of a symmetric operator by Lanczos with full
/// reorthogonalization. Only the `want` end is converged to `tol`.
pub fn lanczos_extremes<F: FnMut(&[f64]) -> Vec<f64>>(
    mut apply: F,
    start: Vec<f64>,
    max_steps: usize,
    tol: f64,
    want: Extreme,
) -> (f64, f64) {
    let norm = dot(&start, &start).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / norm).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    for step in 0..max_steps {
        let q = &basis[step];
        let mut w = apply(q);
        let a = dot(&w, q);
        alpha.push(a);
        for b in &basis {
            let c = dot(&w, b);
            axpy(&mut w, -c, b);
        }
        for b in &basis {
            let c = dot(&w, b);
            axpy(&mut w, -c, b);
        }
        let bn = dot(&w, &w).sqrt();
        let m = alpha.len();
        let exhausted = bn <= 1e-14 * alpha.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        if m % 10 == 0 || exhausted || step + 1 == max_steps {
            let cur = tridiagonal_extremes(&alpha, &beta);
            let scale = cur.0.abs().max(cur.1.abs()).max(f64::MIN_POSITIVE);
            let lo = (cur.0 - last.0).abs() <= tol * scale;
            let hi = (cur.1 - last.1).abs() <= tol * scale;
            let done = match want {
                Extreme::Min => lo,
                Extreme::Max => hi,
                Extreme::Both => lo && hi,
            };
            if exhausted || done {
                return cur;
            }
            last = cur;
        }
        beta.push(bn);
        basis.push(w.iter().map(|v| v / bn).collect());
    }
    last
}

/// Preconditioned conjugate gradients for SPD `a`; returns (x, iterations).
pub fn pcg<A: FnMut(&[f64]) -> Vec<f64>, M: FnMut(&[f64]) -> Vec<f64>>(
    mut a: A,
    mut precond: M,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let bn = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotCoercive(format!("operator is not positive along a search direction ({pap:e})")));
        }
        let al = rz / pap;
        axpy(&mut x, al, &p);
        axpy(&mut r, -al, &ap);
        if dot(&r, &r).sqrt() <= rtol * bn {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz2 = dot(&r, &z);
        let be = rz2 / rz;
        rz = rz2;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + be * *pi;
        }
    }
    Err(Error::Range(format!("PCG did not converge in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Banded {
        let mut a = Banded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let mut a = Banded::zeros(6, 2);
        for i in 0..6 {
            a.add(i, i, 6.0 + i as f64);
            if i >= 1 {
                a.add(i, i - 1, -1.5);
            }
            if i >= 2 {
                a.add(i, i - 2, 0.25);
            }
        }
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let b = a.mul(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
        let mut bad = Banded::zeros(2, 1);
        bad.add(0, 0, 1.0);
        bad.add(1, 0, 2.0);
        bad.add(1, 1, 1.0);
        assert!(bad.cholesky().is_err());
    }

    #[test]
    fn lanczos_on_laplacian() {
        let n = 50;
        let a = laplace_1d(n);
        let start: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let (lo, hi) = lanczos_extremes(|x| a.mul(x), start, 200, 1e-13, Extreme::Both);
        let th = std::f64::consts::PI / (n as f64 + 1.0);
        assert!((lo - (2.0 - 2.0 * th.cos())).abs() < 1e-10);
        assert!((hi - (2.0 + 2.0 * th.cos())).abs() < 1e-10);
    }

    #[test]
    fn pcg_converges() {
        let a = laplace_1d(40);
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let (x, _) = pcg(|v| a.mul(v), |r| r.to_vec(), &b, 1e-12, 200).unwrap();
        let r = a.mul(&x);
        assert!(r.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-8));
    }
}
