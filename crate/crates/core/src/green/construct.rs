//! Parametrix, remainder, Neumann-series assembly, Fourier oracle,
//! representation check and mass extraction on the torus.
//!
//! Fields are band limited to the grid's Fourier box. For such fields the
//! grid sum with weight h^n is exactly the continuum convolution, so the
//! Neumann terms are formed as products of Fourier coefficients.

use super::grid::{translate, GridFft, OperatorSpec, TorusGrid};
use super::kernel::KernelTable;
use crate::constants::green_kernel_constant;
use crate::error::{Error, Result};
use crate::radial::quad;
use crate::report::{CheckReport, Provenance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Smooth cutoff: 1 below r1, 0 above r2, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub r1: f64,
    pub r2: f64,
}

impl Cutoff {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r2) {
            return Err(Error::Range(format!("need 0 < r1 < r2 (got {r1}, {r2})")));
        }
        Ok(Cutoff { r1, r2 })
    }

    pub fn for_grid(g: &TorusGrid) -> Self {
        Cutoff { r1: g.side / 4.0, r2: g.side / 2.0 }
    }

    fn tau(&self, r: f64) -> f64 {
        (r - self.r1) / (self.r2 - self.r1)
    }

    pub fn eta(&self, r: f64) -> f64 {
        if r <= self.r1 {
            1.0
        } else if r >= self.r2 {
            0.0
        } else {
            let t = self.tau(r);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    pub fn eta_d2(&self, r: f64) -> f64 {
        if r <= self.r1 || r >= self.r2 {
            return 0.0;
        }
        let t = self.tau(r);
        let w = self.r2 - self.r1;
        -60.0 * t * (1.0 - 3.0 * t + 2.0 * t * t) / (w * w)
    }
}

fn require_flat3(spec: &OperatorSpec, grid: &TorusGrid) -> Result<()> {
    spec.check_grid(grid)?;
    if spec.n != 3 || spec.k != 1 {
        return Err(Error::Range(format!(
            "torus constructions are implemented for n = 3, k = 1 (got n={}, k={})",
            spec.n, spec.k
        )));
    }
    Ok(())
}

fn reject_potential(spec: &OperatorSpec) -> Result<()> {
    if spec.potential.is_some() {
        return Err(Error::Domain("this construction takes P without a Hardy potential".into()));
    }
    Ok(())
}

/// Continuum Fourier transform of eta C |x|^{-1} in R^3 at frequency rho.
pub fn parametrix_hat(cut: &Cutoff, rho: f64) -> Result<f64> {
    let c4pi = 4.0 * PI * green_kernel_constant(crate::constants::DimPair { n: 3, k: 1 });
    if rho == 0.0 {
        let inner = cut.r1 * cut.r1 / 2.0;
        let outer = quad::integrate(|r| cut.eta(r) * r, cut.r1, cut.r2, 1e-13, 0.0)?.value;
        return Ok(c4pi * (inner + outer));
    }
    let inner = (1.0 - (rho * cut.r1).cos()) / rho;
    let outer = quad::integrate(|r| cut.eta(r) * (rho * r).sin(), cut.r1, cut.r2, 1e-13, 1e-300)?.value;
    Ok(c4pi / rho * (inner + outer))
}

/// Fourier coefficients (per grid mode) of a radial band-limited field with
/// continuum transform `hat`, centered at index 0.
fn radial_coefficients<F: FnMut(f64) -> Result<f64>>(grid: &TorusGrid, mut hat: F) -> Result<Vec<Complex64>> {
    let w = 2.0 * PI / grid.side;
    let vol = grid.side.powi(grid.n as i32);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s: i64 = grid.mode(i).iter().map(|m| m * m).sum();
        let v = match cache.get(&s) {
            Some(&v) => v,
            None => {
                let v = hat(w * (s as f64).sqrt())?;
                cache.insert(s, v);
                v
            }
        };
        out.push(Complex64::new(v / vol, 0.0));
    }
    Ok(out)
}

fn table_from_coefficients(
    grid: &TorusGrid,
    spec: &OperatorSpec,
    x: &[usize],
    method: &str,
    coef: &[Complex64],
) -> Result<KernelTable> {
    let fft = GridFft::new(*grid);
    let centered = fft.synthesize(coef);
    KernelTable::new(*grid, spec.clone(), x.to_vec(), method, translate(grid, &centered, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// eta C d^{2k-n} at the grid points, 0 on the diagonal.
    Pointwise,
    /// The grid's band-limited image of the same function.
    BandLimited,
}

pub fn parametrix(grid: &TorusGrid, spec: &OperatorSpec, x: &[usize], cut: &Cutoff, sampling: Sampling) -> Result<KernelTable> {
    spec.check_grid(grid)?;
    if cut.r2 > grid.side / 2.0 {
        return Err(Error::Range("cutoff radius r2 must not exceed L/2".into()));
    }
    let d = spec.dim()?;
    let c = green_kernel_constant(d);
    let t = match sampling {
        Sampling::Pointwise => {
            let vals = (0..grid.len())
                .map(|i| {
                    let r = grid.dist(&grid.coords(i), x);
                    if r == 0.0 {
                        0.0
                    } else {
                        cut.eta(r) * c * r.powi(2 * d.k as i32 - d.n as i32)
                    }
                })
                .collect();
            KernelTable::new(*grid, spec.clone(), x.to_vec(), "parametrix.pointwise", vals)?
        }
        Sampling::BandLimited => {
            require_flat3(spec, grid)?;
            let coef = radial_coefficients(grid, |rho| parametrix_hat(cut, rho))?;
            table_from_coefficients(grid, spec, x, "parametrix.band_limited", &coef)?
        }
    };
    Ok(t.param("r1", cut.r1).param("r2", cut.r2))
}

/// Pointwise remainder f = -(Delta + b_0)(eta Gamma) for k = 1 at r > 0.
pub fn remainder_pointwise(spec: &OperatorSpec, cut: &Cutoff, r: f64) -> Result<f64> {
    if spec.k != 1 || spec.n != 3 {
        return Err(Error::Range("closed-form remainder implemented for n = 3, k = 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain("remainder is evaluated off the diagonal".into()));
    }
    let c = green_kernel_constant(spec.dim()?);
    // eta'' C / r from Delta(eta C / r); the cross terms cancel since C/r is harmonic.
    Ok(c * (cut.eta_d2(r) - spec.b[0] * cut.eta(r)) / r)
}

fn remainder_hat(spec: &OperatorSpec, cut: &Cutoff, rho: f64) -> Result<f64> {
    Ok(1.0 - spec.symbol(rho * rho) * parametrix_hat(cut, rho)?)
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in &pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        None
    } else {
        Some(num / den)
    }
}

/// Dyadic shell indices j (radius j h) used for near-diagonal fits: 4h, 8h, ...
/// up to r1/2, or starting at h on grids too coarse for two such shells.
/// Past r1 the cutoff derivatives dominate, and the band-limited samples
/// right at r1 already see them.
pub fn fit_shells(grid: &TorusGrid, cut: &Cutoff) -> Vec<usize> {
    let lim = 0.5 * cut.r1 / grid.h() + 1e-9;
    let dyadic = |start: usize| -> Vec<usize> {
        std::iter::successors(Some(start), |j| Some(j * 2)).take_while(|&j| j as f64 <= lim).collect()
    };
    let v = dyadic(4);
    if v.len() >= 2 {
        v
    } else {
        dyadic(1)
    }
}

/// Slope of the shell maxima of |table| over radii j h, j in `shells`.
pub fn shell_exponent(t: &KernelTable, shells: &[usize]) -> Option<f64> {
    let h = t.grid().h();
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .filter_map(|&j| {
            let r = j as f64 * h;
            t.shell_max(r * (1.0 - 1e-9), r * (1.0 + 1e-9)).map(|v| (r, v))
        })
        .collect();
    loglog_slope(&pts)
}

#[derive(Debug, Clone)]
pub struct Remainder {
    pub table: KernelTable,
    pub near_exponent: Option<f64>,
}

/// f = delta - P Gamma for the band-limited parametrix, as a grid field.
pub fn parametrix_remainder(grid: &TorusGrid, spec: &OperatorSpec, x: &[usize], cut: &Cutoff) -> Result<Remainder> {
    require_flat3(spec, grid)?;
    reject_potential(spec)?;
    let coef = radial_coefficients(grid, |rho| remainder_hat(spec, cut, rho))?;
    let table = table_from_coefficients(grid, spec, x, "remainder.band_limited", &coef)?;
    let near_exponent = shell_exponent(&table, &fit_shells(grid, cut));
    Ok(Remainder { table, near_exponent })
}

pub fn fourier_green_oracle(grid: &TorusGrid, spec: &OperatorSpec, x: &[usize]) -> Result<KernelTable> {
    spec.check_grid(grid)?;
    reject_potential(spec)?;
    let vol = grid.side.powi(grid.n as i32);
    let mut coef = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s = spec.symbol(grid.xi2(i));
        if !(s > 0.0) {
            return Err(Error::NotCoercive(format!("symbol {s} at mode {:?}", grid.mode(i))));
        }
        coef.push(Complex64::new(1.0 / (vol * s), 0.0));
    }
    table_from_coefficients(grid, spec, x, "oracle.fourier", &coef)
}

#[derive(Debug, Clone)]
pub struct NeumannGreen {
    pub table: KernelTable,
    /// Near-diagonal shell exponent of each iterated remainder Gamma_i, i = 1..=depth+1.
    pub level_exponents: Vec<Option<f64>>,
    /// sup |Gamma_i| over the grid.
    pub level_sup: Vec<f64>,
}

/// G = Gamma + sum_{i=1}^p Gamma_i * Gamma + u, Gamma_1 = f, Gamma_{i+1} = Gamma_i * f,
/// P u = Gamma_{p+1}.
pub fn neumann_green(grid: &TorusGrid, spec: &OperatorSpec, x: &[usize], depth: usize, cut: &Cutoff) -> Result<NeumannGreen> {
    require_flat3(spec, grid)?;
    reject_potential(spec)?;
    let need = (spec.n as usize).div_ceil(2);
    if depth < need {
        return Err(Error::Range(format!("depth {depth} < ceil(n/2) = {need}")));
    }
    if spec.min_symbol(grid) <= 0.0 {
        return Err(Error::NotCoercive("symbol vanishes on the grid".into()));
    }
    let w = 2.0 * PI / grid.side;
    let vol = grid.side.powi(grid.n as i32);
    let mut cache: HashMap<i64, (f64, f64)> = HashMap::new();
    let mut gamma = Vec::with_capacity(grid.len());
    let mut f = Vec::with_capacity(grid.len());
    let mut sym = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s: i64 = grid.mode(i).iter().map(|m| m * m).sum();
        let (g, r) = match cache.get(&s) {
            Some(&v) => v,
            None => {
                let rho = w * (s as f64).sqrt();
                let v = (parametrix_hat(cut, rho)?, remainder_hat(spec, cut, rho)?);
                cache.insert(s, v);
                v
            }
        };
        gamma.push(g);
        f.push(r);
        sym.push(spec.symbol(grid.xi2(i)));
    }
    let fft = GridFft::new(*grid);
    let mut total: Vec<f64> = gamma.clone();
    let mut level: Vec<f64> = vec![1.0; grid.len()];
    let shells = fit_shells(grid, cut);
    let mut level_exponents = Vec::new();
    let mut level_sup = Vec::new();
    for i in 1..=depth + 1 {
        for (l, fi) in level.iter_mut().zip(&f) {
            *l *= fi;
        }
        let coef: Vec<Complex64> = level.iter().map(|&v| Complex64::new(v / vol, 0.0)).collect();
        let t = KernelTable::new(*grid, spec.clone(), vec![0; grid.n as usize], "level", fft.synthesize(&coef))?;
        level_exponents.push(shell_exponent(&t, &shells));
        level_sup.push(t.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        if i <= depth {
            for ((acc, l), g) in total.iter_mut().zip(&level).zip(&gamma) {
                *acc += l * g;
            }
        } else {
            for ((acc, l), s) in total.iter_mut().zip(&level).zip(&sym) {
                *acc += l / s;
            }
        }
    }
    let coef: Vec<Complex64> = total.iter().map(|&v| Complex64::new(v / vol, 0.0)).collect();
    let table = table_from_coefficients(grid, spec, x, "neumann", &coef)?
        .param("depth", depth as f64)
        .param("r1", cut.r1)
        .param("r2", cut.r2);
    Ok(NeumannGreen { table, level_exponents, level_sup })
}

/// max |a - b| / max |b| over points at distance > min_dist from the source.
pub fn relative_deviation(a: &KernelTable, b: &KernelTable, min_dist: f64) -> Result<f64> {
    if a.meta.grid != b.meta.grid || a.meta.source != b.meta.source {
        return Err(Error::Domain("tables differ in grid or source".into()));
    }
    let g = a.grid();
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        if g.dist(&g.coords(i), &a.meta.source) > min_dist {
            let (x, y) = (a.values[i], b.values[i]);
            worst = worst.max((x - y).abs() / y.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// phi(x) = sum a cos(xi.x) + b sin(xi.x) with xi = 2 pi m / L.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<(Vec<i64>, f64, f64)>,
}

impl TrigPoly {
    pub fn constant(c: f64, n: usize) -> Self {
        TrigPoly { terms: vec![(vec![0; n], c, 0.0)] }
    }

    /// Random modes with |m_a| <= max_mode and unit-range coefficients.
    pub fn random<R: Rng>(n: usize, terms: usize, max_mode: i64, rng: &mut R) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let m = (0..n).map(|_| rng.random_range(-max_mode..=max_mode)).collect();
                (m, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
            .collect();
        TrigPoly { terms }
    }

    fn phase(grid: &TorusGrid, m: &[i64], c: &[usize]) -> f64 {
        let w = 2.0 * PI / grid.side;
        m.iter().zip(c).map(|(&mi, &ci)| w * mi as f64 * ci as f64 * grid.h()).sum()
    }

    pub fn eval(&self, grid: &TorusGrid, c: &[usize]) -> f64 {
        self.terms.iter().map(|(m, a, b)| {
            let p = Self::phase(grid, m, c);
            a * p.cos() + b * p.sin()
        }).sum()
    }

    pub fn apply(&self, grid: &TorusGrid, spec: &OperatorSpec, c: &[usize]) -> f64 {
        let w = 2.0 * PI / grid.side;
        self.terms.iter().map(|(m, a, b)| {
            let xi2 = w * w * m.iter().map(|v| (v * v) as f64).sum::<f64>();
            let p = Self::phase(grid, m, c);
            spec.symbol(xi2) * (a * p.cos() + b * p.sin())
        }).sum()
    }

    pub fn max_abs_mode(&self) -> i64 {
        self.terms.iter().flat_map(|(m, _, _)| m.iter().map(|v| v.abs())).max().unwrap_or(0)
    }
}

/// |sum_y G_x(y) (P phi)(y) h^n - phi(x)|, relative to max |phi| on the grid.
pub fn representation_check(g: &KernelTable, spec: &OperatorSpec, phi: &TrigPoly) -> Result<CheckReport> {
    let grid = *g.grid();
    if phi.max_abs_mode() >= grid.points as i64 / 2 {
        return Err(Error::Domain("test function is not resolved by the grid".into()));
    }
    let mut acc = 0.0;
    let mut peak = 0.0f64;
    for i in 0..grid.len() {
        let c = grid.coords(i);
        acc += g.values[i] * phi.apply(&grid, spec, &c);
        peak = peak.max(phi.eval(&grid, &c).abs());
    }
    acc *= grid.cell_volume();
    let target = phi.eval(&grid, &g.meta.source);
    let res = (acc - target).abs() / peak.max(f64::MIN_POSITIVE);
    Ok(CheckReport::flag("green.representation", res, 1e-3, res < 1e-3, Provenance::Derived)
        .input("method", g.meta.method.clone())
        .detail("integral", acc)
        .detail("phi_at_x", target)
        .detail("max_phi", peak))
}

#[derive(Debug, Clone)]
pub struct MassEstimate {
    pub mass: f64,
    /// Difference to the estimate from the next pair of radii.
    pub spread: f64,
    /// (r, G - Gamma) samples used.
    pub samples: Vec<(f64, f64)>,
}

/// Regular part of G at the source, G - C d^{2k-n} -> m, with the singular part
/// removed through the band-limited parametrix and Richardson over r = h, 2h, 4h.
pub fn extract_mass(g: &KernelTable, spec: &OperatorSpec, x0: &[usize], cut: &Cutoff) -> Result<MassEstimate> {
    if spec.n != 2 * spec.k + 1 {
        return Err(Error::Domain(format!("the mass is defined for n = 2k+1 (n={}, k={})", spec.n, spec.k)));
    }
    if g.meta.source != x0 {
        return Err(Error::Domain("kernel is not built around x0".into()));
    }
    let grid = *g.grid();
    let gamma = parametrix(&grid, spec, x0, cut, Sampling::BandLimited)?;
    let n = grid.n as usize;
    let beta = |j: i64| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for sign in [-1, 1] {
                let mut off = vec![0i64; n];
                off[a] = sign * j;
                let y = grid.shift(x0, &off);
                s += g.at(&y) - gamma.at(&y);
            }
        }
        s / (2 * n) as f64
    };
    let h = grid.h();
    let samples: Vec<(f64, f64)> = [1, 2, 4].iter().map(|&j| (j as f64 * h, beta(j))).collect();
    let m1 = 2.0 * samples[0].1 - samples[1].1;
    let m2 = 2.0 * samples[1].1 - samples[2].1;
    Ok(MassEstimate { mass: m1, spread: (m1 - m2).abs(), samples })
}

/// Checks a stored table: deviation from the Fourier oracle at distance > 4h and
/// the representation identity on `functions` random trigonometric polynomials.
pub fn verify_table(t: &KernelTable, functions: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let grid = *t.grid();
    let spec = &t.meta.spec;
    let oracle = fourier_green_oracle(&grid, spec, &t.meta.source)?;
    let dev = relative_deviation(t, &oracle, 4.0 * grid.h())?;
    let mut out = vec![CheckReport::flag("green.verify.oracle_deviation", dev, 0.05, dev < 0.05, Provenance::Derived)
        .input("method", t.meta.method.clone())
        .input("N", grid.points as u64)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_mode = (grid.points as i64 / 4).min(4);
    for i in 0..functions {
        let phi = TrigPoly::random(grid.n as usize, 3, max_mode, &mut rng);
        let mut r = representation_check(t, spec, &phi)?.input("seed", seed);
        r.name = format!("green.verify.representation.f{}", i + 1);
        out.push(r);
    }
    Ok(out)
}

/// Regular part at the source of the Green function of -Delta + b0 on the torus
/// of side L, from the lattice sum of Yukawa kernels over |i|, |j|, |q| <= shells.
/// The tail falls off like exp(-sqrt(b0) L shells).
pub fn periodized_yukawa_mass(b0: f64, l: f64, shells: i64) -> f64 {
    let k = b0.sqrt();
    let mut m = -k / (4.0 * PI);
    for i in -shells..=shells {
        for j in -shells..=shells {
            for q in -shells..=shells {
                if i == 0 && j == 0 && q == 0 {
                    continue;
                }
                let d = l * ((i * i + j * j + q * q) as f64).sqrt();
                m += (-k * d).exp() / (4.0 * PI * d);
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::DimPair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(points: usize, b0: f64) -> (TorusGrid, OperatorSpec, Cutoff) {
        let g = TorusGrid::new(3, 2.0 * PI, points).unwrap();
        let s = OperatorSpec::new(DimPair::new(3, 1).unwrap(), vec![b0]).unwrap();
        let c = Cutoff::for_grid(&g);
        (g, s, c)
    }

    fn yukawa_mass(b0: f64, l: f64) -> f64 {
        periodized_yukawa_mass(b0, l, 6)
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(1.0, 2.0).unwrap();
        assert_eq!(c.eta(0.5), 1.0);
        assert_eq!(c.eta(2.5), 0.0);
        assert!((c.eta(1.5) - 0.5).abs() < 1e-15);
        // second derivative against finite differences
        let (r, e) = (1.3, 1e-4);
        let fd = (c.eta(r + e) - 2.0 * c.eta(r) + c.eta(r - e)) / (e * e);
        assert!((fd - c.eta_d2(r)).abs() < 1e-5);
        assert!(Cutoff::new(2.0, 1.0).is_err());
    }

    #[test]
    fn pointwise_parametrix() {
        let (g, s, c) = setup(16, 1.0);
        let t = parametrix(&g, &s, &[0, 0, 0], &c, Sampling::Pointwise).unwrap();
        let adj = t.at(&[1, 0, 0]);
        assert!((adj - 1.0 / (4.0 * PI * g.h())).abs() < 1e-14);
        assert_eq!(t.at(&[8, 0, 0]), 0.0);
    }

    #[test]
    fn parametrix_hat_matches_numeric_transform() {
        let c = Cutoff::new(0.5, 1.0).unwrap();
        for rho in [0.0, 0.7, 3.0, 11.0] {
            let direct = quad::integrate(
                |r| {
                    let s = if rho == 0.0 { r } else { (rho * r).sin() / rho };
                    c.eta(r) * s
                },
                0.0,
                1.0,
                1e-13,
                1e-300,
            )
            .unwrap()
            .value;
            assert!((parametrix_hat(&c, rho).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn remainder_closed_form() {
        let (_, s, c) = setup(16, 2.0);
        let r = 0.5 * c.r1;
        let f = remainder_pointwise(&s, &c, r).unwrap();
        assert!((f + 2.0 / (4.0 * PI * r)).abs() < 1e-14);
        assert_eq!(remainder_pointwise(&s, &c, 1.01 * c.r2).unwrap(), 0.0);
    }

    #[test]
    fn remainder_exponent_near_diagonal() {
        let (g, s, c) = setup(32, 1.0);
        let r = parametrix_remainder(&g, &s, &[0, 0, 0], &c).unwrap();
        let e = r.near_exponent.unwrap();
        assert!((e + 1.0).abs() < 0.2, "{e}");
    }

    #[test]
    fn oracle_properties() {
        let (g, s, _) = setup(16, 0.5);
        let t = fourier_green_oracle(&g, &s, &[2, 3, 4]).unwrap();
        let total: f64 = t.values.iter().sum::<f64>() * g.cell_volume();
        assert!((total - 2.0).abs() < 1e-12);
        let u = fourier_green_oracle(&g, &s, &[5, 1, 9]).unwrap();
        assert!(KernelTable::symmetry_defect(&[t, u]).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_near_diagonal_newtonian() {
        // small b0: G - 1/(4 pi d) is the zero-mode constant plus a bounded part
        let (g, s, _) = setup(32, 1e-3);
        // differences cancel the constant and most of the smooth part
        let t = fourier_green_oracle(&g, &s, &[0, 0, 0]).unwrap();
        let h = g.h();
        let near = t.at(&[2, 0, 0]) - t.at(&[4, 0, 0]);
        let newton = 1.0 / (4.0 * PI) * (1.0 / (2.0 * h) - 1.0 / (4.0 * h));
        assert!((near - newton).abs() < 0.1 * newton, "{near} {newton}");
    }

    #[test]
    fn neumann_matches_oracle() {
        let (g, s, c) = setup(32, 1.0);
        let x = [1, 2, 3];
        let ng = neumann_green(&g, &s, &x, 2, &c).unwrap();
        let or = fourier_green_oracle(&g, &s, &x).unwrap();
        assert!(relative_deviation(&ng.table, &or, 4.0 * g.h()).unwrap() < 1e-10);
        assert!(neumann_green(&g, &s, &x, 1, &c).is_err());
        // later levels are bounded near the diagonal
        assert!(ng.level_exponents[1].unwrap() > -0.5, "{:?}", ng.level_exponents);
    }

    #[test]
    fn representation_exact_for_modes() {
        let (g, s, _) = setup(16, 1.0);
        let t = fourier_green_oracle(&g, &s, &[0, 5, 2]).unwrap();
        let r = representation_check(&t, &s, &TrigPoly::constant(1.0, 3)).unwrap();
        assert!(r.value < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = TrigPoly::random(3, 4, 3, &mut rng);
        assert!(representation_check(&t, &s, &phi).unwrap().value < 1e-12);
        let wide = TrigPoly { terms: vec![(vec![8, 0, 0], 1.0, 0.0)] };
        assert!(representation_check(&t, &s, &wide).is_err());
    }

    #[test]
    fn mass_against_periodized_yukawa() {
        let (g, s, c) = setup(32, 1.0);
        let t = fourier_green_oracle(&g, &s, &[0, 0, 0]).unwrap();
        let m = extract_mass(&t, &s, &[0, 0, 0], &c).unwrap();
        let e = yukawa_mass(1.0, g.side);
        assert!(((m.mass - e) / e).abs() < 0.03, "{} {e}", m.mass);
    }

    #[test]
    fn mass_refinement_and_translation() {
        let mut ms = Vec::new();
        for n in [32, 64] {
            let (g, s, c) = setup(n, 1.0);
            let t = fourier_green_oracle(&g, &s, &[0, 0, 0]).unwrap();
            ms.push(extract_mass(&t, &s, &[0, 0, 0], &c).unwrap().mass);
        }
        assert!(((ms[0] - ms[1]) / ms[1]).abs() < 0.05, "{ms:?}");
        let (g, s, c) = setup(32, 1.0);
        let a = extract_mass(&fourier_green_oracle(&g, &s, &[0, 0, 0]).unwrap(), &s, &[0, 0, 0], &c).unwrap();
        let b = extract_mass(&fourier_green_oracle(&g, &s, &[7, 19, 3]).unwrap(), &s, &[7, 19, 3], &c).unwrap();
        assert!((a.mass - b.mass).abs() < 1e-6);
    }

    #[test]
    fn mass_grows_as_b0_vanishes() {
        let mut last = f64::NEG_INFINITY;
        for b0 in [1.0, 0.1, 0.01] {
            let (g, s, c) = setup(16, b0);
            let t = fourier_green_oracle(&g, &s, &[0, 0, 0]).unwrap();
            let m = extract_mass(&t, &s, &[0, 0, 0], &c).unwrap().mass;
            assert!(m > last);
            last = m;
        }
        assert!(last > 0.0);
    }
}
