//! Radial profile algebra, radial integration and sphere moments.

pub mod field;
mod profile;
pub mod quad;

pub use field::Field;
pub use profile::{RadialProfile, Term};
#[allow(unused_imports)]
pub(crate) use profile::snap;

use crate::constants::omega;
use crate::error::{Error, Result};
use crate::report::{CheckReport, Provenance};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

pub const RTOL: f64 = 1e-12;

/// Upper end of the finite part of the radial range; beyond it the tail map takes over.
fn tail_start(scales: impl Iterator<Item = f64>) -> f64 {
    10.0 * scales.fold(1.0f64, f64::max)
}

fn smallest_scale(scales: impl Iterator<Item = f64>) -> f64 {
    scales.fold(1.0f64, f64::min)
}

/// Integral of g over [r0, r1] split into geometric panels starting at `ell`.
fn panels<F: Fn(f64) -> f64>(g: &F, r0: f64, r1: f64, ell: f64, rtol: f64) -> Result<f64> {
    let mut cuts = vec![r0];
    let mut b = ell.max(r0 * 2.0).max(f64::MIN_POSITIVE);
    while b < r1 {
        if b > r0 {
            cuts.push(b);
        }
        b *= 2.0;
    }
    cuts.push(r1);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quad::integrate(g, w[0], w[1], rtol, 0.0)?.value;
    }
    Ok(total)
}

/// One-dimensional integral of g(r) over [r0, r1] (r1 = None means infinity)
/// when g ~ r^q at infinity. `scales` locate the features of g.
pub fn integrate_radial_fn<F: Fn(f64) -> f64>(
    g: F,
    r0: f64,
    r1: Option<f64>,
    q_inf: f64,
    scales: &[f64],
    rtol: f64,
) -> Result<f64> {
    let t = tail_start(scales.iter().copied());
    let ell = 0.1 * smallest_scale(scales.iter().copied());
    match r1 {
        Some(b) => {
            if b < r0 {
                return Err(Error::Domain(format!("empty range [{r0}, {b}]")));
            }
            panels(&g, r0, b, ell, rtol)
        }
        None => {
            if q_inf >= -1.0 {
                return Err(Error::Divergent(format!("integrand power {q_inf} at infinity")));
            }
            let t = t.max(2.0 * r0);
            let head = panels(&g, r0, t, ell, rtol)?;
            let tail = quad::integrate_tail(&g, t, q_inf, rtol, 0.0)?.value;
            Ok(head + tail)
        }
    }
}

/// Integral of f over the shell r0 < |x| < r1 in R^n.
pub fn radial_integral(f: &RadialProfile, n: u32, r0: f64, r1: Option<f64>) -> Result<f64> {
    radial_integral_tol(f, n, r0, r1, RTOL)
}

pub fn radial_integral_tol(f: &RadialProfile, n: u32, r0: f64, r1: Option<f64>, rtol: f64) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    if r0 < 0.0 {
        return Err(Error::Domain("negative radius".into()));
    }
    let nf = n as f64;
    if r0 == 0.0 && (f.singular_order() as f64) <= -nf {
        return Err(Error::Divergent(format!(
            "power r^{} is not integrable at the origin in dimension {n}",
            f.singular_order()
        )));
    }
    let p_inf = f.power_at_inf();
    if r1.is_none() && p_inf >= -nf {
        return Err(Error::Divergent(format!(
            "power {p_inf} is not integrable at infinity in dimension {n}"
        )));
    }
    let scales: Vec<f64> = f.terms.iter().filter_map(|t| t.scale()).collect();
    let g = |r: f64| f.eval(r) * r.powi(n as i32 - 1);
    let v = integrate_radial_fn(g, r0, r1, nf - 1.0 + p_inf, &scales, rtol)?;
    Ok(omega(n) * v)
}

/// Monomial moment over S^{n-1}: omega * prod (e_i - 1)!! / (n (n+2) ... (n + |e| - 2)).
pub fn sphere_moment<E: Copy + Into<u32>>(exponents: &[E], n: u32) -> f64 {
    assert!(exponents.len() <= n as usize, "more exponents than dimensions");
    let exponents: Vec<u32> = exponents.iter().map(|&e| e.into()).collect();
    if exponents.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let mut num = 1.0;
    for &e in &exponents {
        let mut j = e as i64 - 1;
        while j > 1 {
            num *= j as f64;
            j -= 2;
        }
    }
    let total: u32 = exponents.iter().sum();
    let mut den = 1.0;
    let mut j = 0;
    while j < total {
        den *= (n + j) as f64;
        j += 2;
    }
    omega(n) * num / den
}

/// The same moment from 2 prod Gamma((e_i+1)/2) / Gamma((|e|+n)/2); absent
/// coordinates have e_i = 0. Odd exponents give 0.
pub fn sphere_moment_gamma(e: &[u32], n: u32) -> f64 {
    if e.iter().any(|x| x % 2 == 1) {
        return 0.0;
    }
    let mut l = 0.0;
    for i in 0..n as usize {
        let ei = *e.get(i).unwrap_or(&0) as f64;
        l += ln_gamma((ei + 1.0) / 2.0);
    }
    let tot: u32 = e.iter().sum();
    2.0 * (l - ln_gamma((tot as f64 + n as f64) / 2.0)).exp()
}

/// Double-factorial moments against the Gamma form over all multi-indices of
/// total degree <= `max_deg` in dimensions 2..=`max_n`.
pub fn sphere_moment_report(max_n: u32, max_deg: u32) -> CheckReport {
    let mut worst = 0.0f64;
    let mut count = 0u64;
    for n in 2..=max_n {
        for e in field::multi_indices(n as usize, max_deg) {
            let e: Vec<u32> = e.into_iter().map(u32::from).collect();
            let a = sphere_moment(&e, n);
            let b = sphere_moment_gamma(&e, n);
            let err = if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
            worst = worst.max(err);
            count += 1;
        }
    }
    CheckReport::flag("radial.sphere_moment.gamma", worst, 1e-12, worst <= 1e-12, Provenance::Derived)
        .input("max_n", max_n)
        .input("max_degree", max_deg)
        .detail("indices", count)
}

/// Monte Carlo estimate of every even moment of degree <= `max_deg` on S^{n-1}
/// from one sample set of normalized Gaussians; reports the worst |z|-score.
pub fn sphere_moment_mc<R: Rng>(n: u32, max_deg: u32, samples: usize, rng: &mut R) -> (f64, u64) {
    let idx: Vec<Vec<u32>> = field::multi_indices(n as usize, max_deg)
        .into_iter()
        .map(|e| e.into_iter().map(u32::from).collect::<Vec<u32>>())
        .filter(|e| e.iter().all(|x| x % 2 == 0) && e.iter().any(|&x| x > 0))
        .collect();
    let half = (max_deg / 2) as usize;
    let mut sum = vec![0.0; idx.len()];
    let mut sq = vec![0.0; idx.len()];
    let mut x = vec![0.0; n as usize];
    let mut pw = vec![vec![1.0; half + 1]; n as usize];
    for _ in 0..samples {
        let mut norm = 0.0f64;
        for v in x.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
            norm += *v * *v;
        }
        let norm = norm.sqrt();
        for (i, v) in x.iter().enumerate() {
            let y2 = (v / norm) * (v / norm);
            for j in 1..=half {
                pw[i][j] = pw[i][j - 1] * y2;
            }
        }
        for (m, e) in idx.iter().enumerate() {
            let mut v = 1.0;
            for (i, &ei) in e.iter().enumerate() {
                v *= pw[i][(ei / 2) as usize];
            }
            sum[m] += v;
            sq[m] += v * v;
        }
    }
    let ns = samples as f64;
    let w = omega(n);
    let mut worst = 0.0f64;
    for (m, e) in idx.iter().enumerate() {
        let mean = sum[m] / ns;
        let var = (sq[m] / ns - mean * mean).max(0.0) * ns / (ns - 1.0);
        let se = w * (var / ns).sqrt();
        let z = (w * mean - sphere_moment(e, n)).abs() / se;
        worst = worst.max(z);
    }
    (worst, idx.len() as u64)
}

pub fn sphere_moment_mc_report<R: Rng>(max_n: u32, max_deg: u32, samples: usize, rng: &mut R) -> CheckReport {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 2..=max_n {
        let (z, c) = sphere_moment_mc(n, max_deg, samples, rng);
        worst = worst.max(z);
        count += c;
    }
    CheckReport::flag("radial.sphere_moment.monte_carlo", worst, 4.0, worst <= 4.0, Provenance::Derived)
        .input("max_n", max_n)
        .input("max_degree", max_deg)
        .input("samples", samples as u64)
        .detail("moments", count)
}
