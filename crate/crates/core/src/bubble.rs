//! The standard bubble U = (mu / (mu^2 + a_{n,k} r^2))^{(n-2k)/2}, its PDE
//! residual, its integrals and the far-field constant K0.

use crate::constants::{bubble_scale, green_kernel_constant, DimPair};
use crate::error::{Error, Result};
use crate::radial::field::{derivative_tensor, Field};
use crate::radial::{radial_integral, RadialProfile, Term};
use crate::report::{CheckReport, Provenance};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BubbleParams {
    pub d: DimPair,
    pub mu: f64,
    /// Reporting only; profiles are centered at the origin.
    pub center: [f64; 3],
}

impl BubbleParams {
    pub fn unit(d: DimPair) -> Self {
        BubbleParams { d, mu: 1.0, center: [0.0; 3] }
    }
    pub fn with_mu(d: DimPair, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        Ok(BubbleParams { d, mu, center: [0.0; 3] })
    }
}

pub fn standard_bubble(p: &BubbleParams) -> RadialProfile {
    let s = p.d.s();
    let a = bubble_scale(p.d);
    RadialProfile::from_terms(vec![Term::new(p.mu.powf(s), 0, a, s, p.mu * p.mu)])
}

/// U^{2*-1}, built directly with exponent (n+2k)/2.
pub fn bubble_source(p: &BubbleParams) -> RadialProfile {
    let d = p.d;
    let s1 = (d.n as f64 + 2.0 * d.k as f64) / 2.0;
    let a = bubble_scale(d);
    RadialProfile::from_terms(vec![Term::new(p.mu.powf(s1), 0, a, s1, p.mu * p.mu)])
}

/// T(f) = (n-2k)/2 f + r f'.
pub fn pohozaev_field(f: &RadialProfile, d: DimPair) -> RadialProfile {
    f.scale_by(d.s()).add(&f.radial_derivative_field())
}

pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// max over radii of |Delta^k U - U^{2*-1}| / U^{2*-1}.
pub fn bubble_residual_value(p: &BubbleParams, radii: &[f64]) -> Result<f64> {
    let u = standard_bubble(p);
    let lhs = u.iterated_laplacian(p.d.n, p.d.k)?;
    let rhs = u.pow(p.d.two_star_f64() - 1.0)?;
    // Reduced form first, so that cancellation happens in the coefficients
    // rather than between large values at large r.
    let diff = lhs.canonical_sub(&rhs);
    let mut worst = 0.0f64;
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius {r} not positive")));
        }
        worst = worst.max(diff.eval(r).abs() / rhs.eval(r));
    }
    Ok(worst)
}

pub fn bubble_residual(p: &BubbleParams, radii: &[f64]) -> Result<CheckReport> {
    let v = bubble_residual_value(p, radii)?;
    Ok(CheckReport::flag(
        &format!("bubble.residual.n{}k{}", p.d.n, p.d.k),
        v,
        1e-10,
        v < 1e-10,
        Provenance::Derived,
    )
    .input("n", p.d.n)
    .input("k", p.d.k)
    .input("mu", p.mu)
    .input("samples", radii.len()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BubbleIntegrals {
    pub int_u_2star: f64,
    pub int_u_2star_minus1: f64,
    /// Defined for n > 2k + 2.
    pub int_half_lap_km1_sq: Option<f64>,
    /// Defined for n > 2k + 2.
    pub int_grad_km1_sq: Option<f64>,
    pub k0: f64,
}

/// Integral of (Delta^{(k-1)/2} U)^2 for the unit bubble.
pub fn int_half_lap_sq(d: DimPair) -> Result<f64> {
    if d.n <= 2 * d.k + 2 {
        return Err(Error::Domain(format!(
            "(Delta^((k-1)/2) U)^2 is not integrable for n={} <= 2k+2={}",
            d.n,
            2 * d.k + 2
        )));
    }
    let u = standard_bubble(&BubbleParams::unit(d));
    let dens = u.half_laplacian_square(d.n, d.k - 1)?;
    radial_integral(&dens, d.n, 0.0, None)
}

/// Integral of |grad^{k-1} U|^2 summed over all index tuples, through the field algebra.
pub fn int_grad_sq(d: DimPair) -> Result<f64> {
    if d.n <= 2 * d.k + 2 {
        return Err(Error::Domain(format!(
            "|grad^(k-1) U| is in L^2 only for n > 2k+2 (n={}, k={})",
            d.n, d.k
        )));
    }
    let u = Field::from_profile(&standard_bubble(&BubbleParams::unit(d)), d.n);
    let comps = derivative_tensor(&u, (d.k - 1) as usize);
    let mut acc = Field::zero(d.n);
    for (_, c) in &comps {
        acc = acc.add(&c.mul(c)?);
    }
    acc.check_integrable()?;
    acc.integrate()
}

pub fn bubble_integrals(d: DimPair) -> Result<BubbleIntegrals> {
    let p = BubbleParams::unit(d);
    let u = standard_bubble(&p);
    let int_u_2star = radial_integral(&u.pow(d.two_star_f64())?, d.n, 0.0, None)?;
    let j = radial_integral(&bubble_source(&p), d.n, 0.0, None)?;
    let (hl, gr) = if d.n > 2 * d.k + 2 {
        (Some(int_half_lap_sq(d)?), Some(int_grad_sq(d)?))
    } else {
        (None, None)
    };
    Ok(BubbleIntegrals {
        int_u_2star,
        int_u_2star_minus1: j,
        int_half_lap_km1_sq: hl,
        int_grad_km1_sq: gr,
        k0: green_kernel_constant(d) * j,
    })
}

/// a^{-(n-2k)/2} (far-field coefficient of U) against C_{n,k} int U^{2*-1}.
pub fn farfield_normalization_check(d: DimPair) -> Result<CheckReport> {
    let lhs = bubble_scale(d).powf(-d.s());
    let j = radial_integral(&bubble_source(&BubbleParams::unit(d)), d.n, 0.0, None)?;
    let rhs = green_kernel_constant(d) * j;
    let rel = ((lhs - rhs) / lhs).abs();
    Ok(CheckReport::flag(
        &format!("bubble.farfield.n{}k{}", d.n, d.k),
        rel,
        1e-8,
        rel < 1e-8,
        Provenance::Derived,
    )
    .input("n", d.n)
    .input("k", d.k)
    .detail("coefficient", lhs)
    .detail("K0", rhs)
    .detail("int_U_2star_minus1", j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;
    use std::f64::consts::PI;

    pub(crate) const LIST: [(u32, u32); 8] = [(3, 1), (4, 1), (5, 1), (5, 2), (6, 2), (7, 2), (7, 3), (9, 4)];

    fn dp(n: u32, k: u32) -> DimPair {
        DimPair::new(n, k).unwrap()
    }

    /// int_{R^n} r^c (mu2 + a r^2)^{-s} from the Beta function.
    fn beta_oracle(n: u32, c: f64, a: f64, s: f64, mu2: f64) -> f64 {
        let p = c + n as f64;
        crate::constants::omega(n) * 0.5 * a.powf(-p / 2.0) * mu2.powf(p / 2.0 - s) * beta(p / 2.0, s - p / 2.0)
    }

    #[test]
    fn examples() {
        let u = standard_bubble(&BubbleParams::unit(dp(3, 1)));
        assert_eq!(u.eval(0.0), 1.0);
        let u = standard_bubble(&BubbleParams::unit(dp(5, 2)));
        for r in [0.0, 0.5, 3.0] {
            let e = (1.0 + r * r / 105f64.sqrt()).powf(-0.5);
            assert!((u.eval(r) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn scaling_identity() {
        let d = dp(7, 2);
        let mu = 0.37;
        let u = standard_bubble(&BubbleParams::with_mu(d, mu).unwrap());
        let u1 = standard_bubble(&BubbleParams::unit(d));
        for r in [0.01, 0.4, 2.0, 30.0] {
            let e = mu.powf(-d.s()) * u1.eval(r / mu);
            assert!((u.eval(r) - e).abs() < 1e-14 * e);
        }
    }

    #[test]
    fn residual_small() {
        let radii = log_radii(1e-3, 1e3, 61);
        for (n, k) in LIST {
            let v = bubble_residual_value(&BubbleParams::unit(dp(n, k)), &radii).unwrap();
            assert!(v < 1e-12, "{n} {k}: {v}");
            for mu in [1e-3, 1e3] {
                let w = bubble_residual_value(&BubbleParams::with_mu(dp(n, k), mu).unwrap(), &radii).unwrap();
                assert!((w - v).abs() < 1e-12, "{n} {k} mu={mu}: {w}");
            }
        }
    }

    #[test]
    fn laplacian_power_at_origin() {
        for (n, k) in LIST {
            let u = standard_bubble(&BubbleParams::unit(dp(n, k)));
            let l = u.iterated_laplacian(n, k).unwrap();
            assert!((l.eval(0.0) - 1.0).abs() < 1e-12, "{n} {k}");
        }
    }

    #[test]
    fn pohozaev_field_examples() {
        let d = dp(5, 2);
        let u = standard_bubble(&BubbleParams::unit(d));
        assert!((pohozaev_field(&u, d).eval(0.0) - 0.5).abs() < 1e-15);
        let g = RadialProfile::monomial(1.0, 2 * 2 - 5);
        let t = pohozaev_field(&g, d);
        assert!(t.approx_eq(&RadialProfile::monomial(-0.5, -1), 1e-15));
        let c = pohozaev_field(&RadialProfile::constant(3.0), d);
        assert!(c.approx_eq(&RadialProfile::constant(1.5), 1e-15));
    }

    #[test]
    fn integrals_against_beta() {
        for (n, k) in LIST {
            let d = dp(n, k);
            let a = bubble_scale(d);
            let bi = bubble_integrals(d).unwrap();
            let s = d.s();
            let e1 = beta_oracle(n, 0.0, a, s * d.two_star_f64(), 1.0);
            let e2 = beta_oracle(n, 0.0, a, s * (d.two_star_f64() - 1.0), 1.0);
            assert!(((bi.int_u_2star - e1) / e1).abs() < 1e-11, "{n} {k}");
            assert!(((bi.int_u_2star_minus1 - e2) / e2).abs() < 1e-11, "{n} {k}");
        }
        let bi = bubble_integrals(dp(3, 1)).unwrap();
        assert!((bi.int_u_2star_minus1 - 4.0 * PI * 3f64.sqrt()).abs() < 1e-10);
        assert!((bi.k0 - 3f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn grad_and_half_lap_agree() {
        for (n, k) in [(5, 1), (8, 2), (10, 3), (9, 2)] {
            let d = dp(n, k);
            let a = int_half_lap_sq(d).unwrap();
            let b = int_grad_sq(d).unwrap();
            assert!(((a - b) / a).abs() < 1e-10, "{n} {k}: {a} {b}");
        }
        assert!(int_grad_sq(dp(7, 3)).is_err());
    }

    #[test]
    fn critical_integral_scale_invariant() {
        let d = dp(5, 2);
        let base = bubble_integrals(d).unwrap().int_u_2star;
        for mu in [1e-3, 1e3] {
            let u = standard_bubble(&BubbleParams::with_mu(d, mu).unwrap());
            let v = radial_integral(&u.pow(d.two_star_f64()).unwrap(), d.n, 0.0, None).unwrap();
            assert!(((v - base) / base).abs() < 1e-10, "{mu}: {v} {base}");
        }
    }

    #[test]
    fn farfield_list() {
        for (n, k) in LIST {
            let r = farfield_normalization_check(dp(n, k)).unwrap();
            assert!(r.pass, "{n} {k}: {}", r.value);
        }
    }
}
