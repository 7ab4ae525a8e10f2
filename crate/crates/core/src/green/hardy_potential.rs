//! Green's function of P - V with V = lambda s d(., x0)^{-2k}, by direct solves,
//! and the weighted pointwise constant around the singular point.

use super::construct::loglog_slope;
use super::giraud::axis_mean;
use super::grid::{GridFft, OperatorSpec, TorusGrid};
use crate::error::{Error, Result};
use crate::hardy::coercivity_margin;
use crate::linalg::pcg;
use crate::report::{CheckReport, Provenance};
use serde::Serialize;
use std::time::Instant;

const PCG_TOL: f64 = 1e-10;
const PCG_MAX: usize = 2000;

/// Solves (P - V) G = delta_y / h^n; returns G(., y) and the iteration count.
pub fn solve_with_potential(grid: &TorusGrid, spec: &OperatorSpec, y: &[usize]) -> Result<(Vec<f64>, usize)> {
    spec.check_grid(grid)?;
    let v = match &spec.potential {
        Some(p) => p.sample(grid, spec.k)?,
        None => vec![0.0; grid.len()],
    };
    let fft = GridFft::new(*grid);
    let mut rhs = vec![0.0; grid.len()];
    rhs[grid.index(y)] = 1.0 / grid.cell_volume();
    pcg(
        |u| {
            let pu = fft.multiply(u, |x| spec.symbol(x));
            pu.iter().zip(u).zip(&v).map(|((p, a), w)| p - w * a).collect()
        },
        |r| fft.multiply(r, |x| 1.0 / spec.symbol(x)),
        &rhs,
        PCG_TOL,
        PCG_MAX,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyGreenEstimate {
    pub lambda: f64,
    pub gamma: f64,
    /// max |G(x, y)| d(x, y)^{n-2k} (min/max)^gamma over sampled pairs.
    pub c_star: f64,
    /// Same without the weight.
    pub c_unweighted: f64,
    /// Slope of log |G(x, y_far)| against log d(x, x0).
    pub exponent: f64,
    pub margin: f64,
    pub iterations: usize,
}

/// Source offsets (in cells) from x0: on-axis dyadic, two off-axis, and two far points.
fn source_offsets(grid: &TorusGrid) -> Vec<Vec<i64>> {
    let n = grid.n as usize;
    let q = (grid.points / 4) as i64;
    let mut out = Vec::new();
    let mut j = 1i64;
    while j <= grid.points as i64 / 4 {
        let mut o = vec![0; n];
        o[0] = j;
        out.push(o);
        j *= 2;
    }
    let pad = |v: &[i64]| -> Vec<i64> { (0..n).map(|i| v.get(i).copied().unwrap_or(0)).collect() };
    out.push(pad(&[2, 1, 0]));
    out.push(pad(&[3, -2, 1]));
    out.push(pad(&[q, q, 0]));
    out
}

pub fn hardy_green_estimate(grid: &TorusGrid, spec: &OperatorSpec, gamma: f64) -> Result<HardyGreenEstimate> {
    spec.check_grid(grid)?;
    let span = spec.n as f64 - 2.0 * spec.k as f64;
    if !(gamma > 0.0 && gamma < span) {
        return Err(Error::Range(format!("gamma = {gamma} outside (0, n - 2k)")));
    }
    let pot = spec.potential.as_ref().ok_or_else(|| Error::Domain("estimate needs a Hardy potential".into()))?;
    let cm = coercivity_margin(grid, spec)?;
    if !(cm.discrete > 0.0) {
        return Err(Error::NotCoercive(format!("P - V has discrete margin {:e}", cm.discrete)));
    }
    let x0 = pot.x0.clone();
    let d0 = |c: &[usize]| grid.dist(c, &x0);
    let mut c_star = 0.0f64;
    let mut c_unweighted = 0.0f64;
    let mut iterations = 0;
    let mut far: Option<Vec<f64>> = None;
    let offsets = source_offsets(grid);
    for (si, off) in offsets.iter().enumerate() {
        let y = grid.shift(&x0, off);
        let (g, it) = solve_with_potential(grid, spec, &y)?;
        iterations += it;
        let dy = d0(&y);
        for (i, &v) in g.iter().enumerate() {
            let c = grid.coords(i);
            let dx = d0(&c);
            let dxy = grid.dist(&c, &y);
            if dx == 0.0 || dxy == 0.0 {
                continue;
            }
            let base = v.abs() * dxy.powf(span);
            let w = (dx.min(dy) / dx.max(dy)).powf(gamma);
            c_star = c_star.max(base * w);
            c_unweighted = c_unweighted.max(base);
        }
        if si + 1 == offsets.len() {
            far = Some(g);
        }
    }
    let g = far.expect("at least one source");
    let cells: Vec<usize> = std::iter::successors(Some(1usize), |j| Some(2 * j)).take_while(|&j| j <= grid.points / 8).collect();
    let pts: Vec<(f64, f64)> = cells.iter().map(|&j| (j as f64 * grid.h(), axis_mean(grid, &g, &x0, j).abs())).collect();
    let exponent = loglog_slope(&pts).ok_or_else(|| Error::Domain("degenerate exponent fit".into()))?;
    Ok(HardyGreenEstimate { lambda: pot.lambda, gamma, c_star, c_unweighted, exponent, margin: cm.discrete, iterations })
}

pub fn hardy_green_report(grid: &TorusGrid, spec: &OperatorSpec, gamma: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let e = hardy_green_estimate(grid, spec, gamma)?;
    let floor = -gamma - 0.1;
    let pass = e.c_star.is_finite() && e.exponent >= floor;
    Ok(CheckReport::flag("green.hardy_estimate", e.exponent, 0.1, pass, Provenance::Derived)
        .input("n", spec.n)
        .input("k", spec.k)
        .input("N", grid.points as u64)
        .input("L", grid.side)
        .input("lambda", e.lambda)
        .input("gamma", gamma)
        .detail("c_star", e.c_star)
        .detail("c_unweighted", e.c_unweighted)
        .detail("exponent_floor", floor)
        .detail("margin", e.margin)
        .detail("iterations", e.iterations as u64)
        .timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::DimPair;
    use crate::green::{fourier_green_oracle, HardyPotential, Shape};
    use crate::hardy::coercivity_loss_lambda;
    use std::f64::consts::PI;

    fn setup(lambda: f64, s: f64) -> (TorusGrid, OperatorSpec) {
        let g = TorusGrid::new(3, 2.0 * PI, 32).unwrap();
        let p = HardyPotential::new(lambda, vec![0, 0, 0], Shape::Constant(s)).unwrap();
        let spec = OperatorSpec::new(DimPair::new(3, 1).unwrap(), vec![1.0]).unwrap().with_potential(p);
        (g, spec)
    }

    #[test]
    fn zero_potential_matches_oracle() {
        let (g, s) = setup(0.0, 1.0);
        let (u, _) = solve_with_potential(&g, &s, &[3, 4, 5]).unwrap();
        let mut plain = s.clone();
        plain.potential = None;
        let o = fourier_green_oracle(&g, &plain, &[3, 4, 5]).unwrap();
        let m = o.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(u.iter().zip(&o.values).all(|(a, b)| (a - b).abs() < 1e-8 * m));
    }

    #[test]
    fn lambda_zero_weight_only_shrinks() {
        let (g, s) = setup(0.0, 1.0);
        let e = hardy_green_estimate(&g, &s, 0.5).unwrap();
        assert!(e.c_star <= e.c_unweighted && e.c_star > 0.0);
        assert!(e.exponent.abs() < 0.1, "{}", e.exponent);
    }

    #[test]
    fn repulsive_potential_close_to_free() {
        let (g, s0) = setup(0.0, -1.0);
        let (_, s1) = setup(0.05, -1.0);
        let a = hardy_green_estimate(&g, &s0, 0.5).unwrap();
        let b = hardy_green_estimate(&g, &s1, 0.5).unwrap();
        let r = b.c_star / a.c_star;
        assert!(r > 0.5 && r < 2.0, "{r}");
    }

    #[test]
    fn attractive_potential_exponent() {
        let (g, s) = setup(1.0, 1.0);
        let th = coercivity_loss_lambda(&g, &s).unwrap().unwrap();
        let (_, s3) = setup(0.3 * th, 1.0);
        let e = hardy_green_estimate(&g, &s3, 0.5).unwrap();
        assert!(e.exponent < 0.0 && e.exponent >= -0.6, "{}", e.exponent);
        let (_, past) = setup(1.05 * th, 1.0);
        assert!(matches!(hardy_green_estimate(&g, &past, 0.5), Err(Error::NotCoercive(_))));
        assert!(hardy_green_estimate(&g, &s3, 1.5).is_err());
    }
}
