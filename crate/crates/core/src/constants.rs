//! Named constants: critical exponent, bubble scale, Green-kernel constant.

use crate::error::{Error, Result};
use crate::report::{CheckReport, Provenance};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DimPair {
    pub n: u32,
    pub k: u32,
}

impl DimPair {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if n < 3 || k < 1 || 2 * k >= n {
            return Err(Error::Dim { n, k });
        }
        Ok(DimPair { n, k })
    }

    /// (n - 2k) / 2, the decay half-exponent.
    pub fn s(&self) -> f64 {
        (self.n as f64 - 2.0 * self.k as f64) / 2.0
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn two_star_f64(&self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0 * self.k as f64)
    }
}

pub fn critical_exponent(d: DimPair) -> Ratio<i64> {
    Ratio::new(2 * d.n as i64, d.n as i64 - 2 * d.k as i64)
}

/// Area of the unit sphere S^{n-1}.
pub fn omega(n: u32) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// prod_{j=-k}^{k-1} (n + 2j), exact.
pub fn bubble_product(d: DimPair) -> BigInt {
    let (n, k) = (d.n as i64, d.k as i64);
    (-k..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n + 2 * j))
}

pub fn bubble_scale(d: DimPair) -> f64 {
    let p = bubble_product(d).to_f64().expect("finite product");
    p.powf(-1.0 / d.k as f64)
}

/// The integer product prod_{i=1}^{k-1} (n-2k+2(i-1))(2k-2i).
pub fn kernel_product(d: DimPair) -> BigInt {
    let (n, k) = (d.n as i64, d.k as i64);
    (1..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - 2 * k + 2 * (i - 1)) * BigInt::from(2 * k - 2 * i)
    })
}

/// C_{n,k} * omega_{n-1}, an exact rational.
pub fn kernel_rational(d: DimPair) -> BigRational {
    let den = BigInt::from(d.n as i64 - 2) * kernel_product(d);
    BigRational::new(BigInt::one(), den)
}

pub fn green_kernel_constant(d: DimPair) -> f64 {
    kernel_rational(d).to_f64().expect("finite") / omega(d.n)
}

/// -d/dr Delta^{k-1}(C r^{2k-n}) = omega^{-1} r^{1-n}, checked on the rational parts.
pub fn flux_identity_check(d: DimPair) -> Result<CheckReport> {
    if d.k > 6 || d.n > 16 {
        return Err(Error::Range(format!("flux check supports k<=6, n<=16, got {:?}", d)));
    }
    let n = d.n as i64;
    let mut alpha = n - 2 * d.k as i64;
    let mut coef = kernel_rational(d);
    for _ in 1..d.k {
        // Delta r^{-a} = a (n-2-a) r^{-a-2}
        coef *= BigRational::from_integer(BigInt::from(alpha * (n - 2 - alpha)));
        alpha += 2;
    }
    if alpha != n - 2 {
        return Err(Error::Range("power bookkeeping broke".into()));
    }
    // -d/dr r^{2-n} = (n-2) r^{1-n}
    coef *= BigRational::from_integer(BigInt::from(n - 2));
    let pass = coef == BigRational::one();
    let diff = (&coef - BigRational::one()).to_f64().unwrap_or(f64::INFINITY);
    let mut r = CheckReport::flag(
        &format!("constants.flux_identity.n{}k{}", d.n, d.k),
        diff,
        0.0,
        pass,
        Provenance::Derived,
    )
    .input("n", d.n)
    .input("k", d.k)
    .detail("coefficient", coef.to_string());
    if coef.is_zero() {
        r.pass = false;
    }
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedConstants {
    pub two_star: String,
    pub two_star_value: f64,
    pub a_nk: f64,
    #[serde(rename = "C_nk")]
    pub c_nk: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

pub fn named_constants(d: DimPair) -> Result<NamedConstants> {
    let ts = critical_exponent(d);
    let (kp, ka) = if d.n == 2 * d.k + 4 {
        let (a, b) = crate::rates::kappa_values(d.k)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(NamedConstants {
        two_star: ts.to_string(),
        two_star_value: *ts.numer() as f64 / *ts.denom() as f64,
        a_nk: bubble_scale(d),
        c_nk: green_kernel_constant(d),
        omega: omega(d.n),
        kappa_prime: kp,
        kappa: ka,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(n: u32, k: u32) -> DimPair {
        DimPair::new(n, k).unwrap()
    }

    #[test]
    fn critical_exponent_examples() {
        assert_eq!(critical_exponent(dp(3, 1)), Ratio::from_integer(6));
        assert_eq!(critical_exponent(dp(5, 2)), Ratio::from_integer(10));
        assert!(DimPair::new(4, 2).is_err());
        assert!(DimPair::new(2, 1).is_err());
    }

    #[test]
    fn bubble_scale_examples() {
        assert!((bubble_scale(dp(3, 1)) - 1.0 / 3.0).abs() < 1e-15);
        assert!((bubble_scale(dp(5, 2)) - 105f64.powf(-0.5)).abs() < 1e-15);
        for k in 1..=6 {
            let a = bubble_scale(dp(2 * k + 2, k));
            assert!(a.is_finite() && a > 0.0);
        }
    }

    #[test]
    fn bubble_scale_inverts_product() {
        for n in 3..=16u32 {
            for k in 1..=6u32 {
                if let Ok(d) = DimPair::new(n, k) {
                    let p = bubble_product(d).to_f64().unwrap();
                    let a = bubble_scale(d);
                    assert!((a.powi(k as i32) * p - 1.0).abs() < 1e-13, "{n} {k}");
                }
            }
        }
    }

    #[test]
    fn omega_low_dims() {
        // independent closed forms
        assert!((omega(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega(3) - 4.0 * PI).abs() < 1e-13);
        assert!((omega(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((omega(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn green_constant_examples() {
        assert!((green_kernel_constant(dp(3, 1)) * 4.0 * PI - 1.0).abs() < 1e-14);
        assert!((green_kernel_constant(dp(5, 2)) * 16.0 * PI * PI - 1.0).abs() < 1e-14);
        for n in 3..10 {
            let c = green_kernel_constant(dp(n, 1));
            assert!((c * (n as f64 - 2.0) * omega(n) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn flux_examples() {
        for (n, k) in [(3, 1), (5, 2), (7, 3)] {
            assert!(flux_identity_check(dp(n, k)).unwrap().pass);
        }
        assert!(flux_identity_check(dp(17, 6)).is_err());
    }

    #[test]
    fn flux_by_hand_n7_k3() {
        // C*omega = 1/(5 * (1*4) * (3*2)); two power-rule steps: 1*4, 3*2; then (n-2)=5
        let q = kernel_rational(dp(7, 3));
        assert_eq!(q, BigRational::new(BigInt::one(), BigInt::from(120)));
    }
}
