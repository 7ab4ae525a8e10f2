use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// c * r^m * (mu2 + a r^2)^(-s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub c: f64,
    pub m: i32,
    pub a: f64,
    pub s: f64,
    pub mu2: f64,
}

impl Term {
    pub fn new(c: f64, m: i32, a: f64, s: f64, mu2: f64) -> Self {
        Term { c, m, a, s, mu2 }.folded()
    }

    pub fn monomial(c: f64, m: i32) -> Self {
        Term { c, m, a: 0.0, s: 0.0, mu2: 1.0 }
    }

    /// Terms with a = 0 carry their base factor in the coefficient.
    pub(crate) fn folded(self) -> Self {
        if self.a == 0.0 || self.s == 0.0 {
            Term { c: self.c * self.mu2.powf(-self.s), m: self.m, a: 0.0, s: 0.0, mu2: 1.0 }
        } else {
            self
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let mut v = self.c * pow_i(r, self.m);
        if self.a != 0.0 {
            v *= (self.mu2 + self.a * r * r).powf(-self.s);
        }
        v
    }

    pub fn same_shape(&self, o: &Term) -> bool {
        self.m == o.m && self.a == o.a && self.s == o.s && self.mu2 == o.mu2
    }

    pub fn same_base(&self, o: &Term) -> bool {
        self.a == o.a && self.mu2 == o.mu2
    }

    fn key_cmp(&self, o: &Term) -> Ordering {
        self.s
            .total_cmp(&o.s)
            .then(self.m.cmp(&o.m))
            .then(self.a.total_cmp(&o.a))
            .then(self.mu2.total_cmp(&o.mu2))
    }

    /// Effective power as r -> infinity.
    pub fn power_at_inf(&self) -> f64 {
        if self.a > 0.0 {
            self.m as f64 - 2.0 * self.s
        } else {
            self.m as f64
        }
    }

    /// Length scale where the base switches regime.
    pub fn scale(&self) -> Option<f64> {
        if self.a > 0.0 {
            Some((self.mu2 / self.a).sqrt())
        } else {
            None
        }
    }

    /// D t = t'/r.
    fn d_over_r(&self) -> [Term; 2] {
        let t1 = Term { c: self.c * self.m as f64, m: self.m - 2, ..*self };
        let t2 = if self.a != 0.0 {
            Term { c: -2.0 * self.a * self.s * self.c, s: self.s + 1.0, ..*self }
        } else {
            Term { c: 0.0, ..*self }
        };
        [t1, t2]
    }

    fn mul(&self, o: &Term) -> Result<Term> {
        let (a, mu2) = if self.a == 0.0 {
            (o.a, o.mu2)
        } else if o.a == 0.0 || self.same_base(o) {
            (self.a, self.mu2)
        } else {
            return Err(Error::NonRepresentable(format!(
                "product of bases ({}, {}) and ({}, {})",
                self.a, self.mu2, o.a, o.mu2
            )));
        };
        Ok(Term { c: self.c * o.c, m: self.m + o.m, a, s: self.s + o.s, mu2 }.folded())
    }
}

fn pow_i(r: f64, m: i32) -> f64 {
    if m == 0 {
        1.0
    } else {
        r.powi(m)
    }
}

/// Snap x to a nearby multiple of 2^-20 when it is within roundoff of one.
pub(crate) fn snap(x: f64) -> f64 {
    let q = (x * 1048576.0).round() / 1048576.0;
    if (x - q).abs() <= 1e-12 * x.abs().max(1.0) {
        q
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RadialProfile {
    pub terms: Vec<Term>,
    /// Set for kernel profiles, which may carry negative powers of r.
    pub kernel: bool,
}

impl RadialProfile {
    pub fn zero() -> Self {
        RadialProfile::default()
    }

    pub fn constant(c: f64) -> Self {
        RadialProfile::from_terms(vec![Term::monomial(c, 0)])
    }

    pub fn monomial(c: f64, m: i32) -> Self {
        let mut p = RadialProfile::from_terms(vec![Term::monomial(c, m)]);
        p.kernel = m < 0;
        p
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let kernel = terms.iter().any(|t| t.m < 0);
        let mut p = RadialProfile { terms: terms.into_iter().map(Term::folded).collect(), kernel };
        p.tidy();
        p
    }

    /// Sort by (s, m, a, mu2), merge like terms, drop coefficients below
    /// 1e-14 of the largest.
    pub fn tidy(&mut self) {
        self.terms.retain(|t| t.c != 0.0);
        self.terms.sort_by(|x, y| x.key_cmp(y));
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out.last_mut() {
                Some(l) if l.same_shape(&t) => l.c += t.c,
                _ => out.push(t),
            }
        }
        let cmax = out.iter().fold(0.0f64, |m, t| m.max(t.c.abs()));
        out.retain(|t| t.c.abs() > 1e-14 * cmax && t.c != 0.0);
        self.terms = out;
    }

    /// Canonical form used for equality: powers r^{2j} with j >= 1 on a
    /// nontrivial base are rewritten through r^2 = (B - mu2)/a, then tidied.
    pub fn canonical(&self) -> RadialProfile {
        Self::canonical_of(self.terms.iter(), self.kernel)
    }

    /// Canonical form of self - o, merged in one pass so that exact
    /// cancellation between the operands is detected.
    pub fn canonical_sub(&self, o: &RadialProfile) -> RadialProfile {
        let neg: Vec<Term> = o.terms.iter().map(|t| Term { c: -t.c, ..*t }).collect();
        Self::canonical_of(self.terms.iter().chain(neg.iter()), self.kernel || o.kernel)
    }

    fn canonical_of<'a>(it: impl Iterator<Item = &'a Term>, kernel: bool) -> RadialProfile {
        let mut out = Vec::new();
        for t in it {
            if t.a == 0.0 || t.m < 2 {
                out.push(*t);
                continue;
            }
            let j = t.m / 2;
            let rem = t.m % 2;
            // r^{2j} = a^{-j} sum_i C(j,i) B^i (-mu2)^{j-i}
            let mut binom = 1.0;
            for i in 0..=j {
                let c = t.c * binom * (-t.mu2).powi(j - i) * t.a.powi(-j);
                out.push(Term { c, m: rem, a: t.a, s: snap(t.s - i as f64), mu2: t.mu2 }.folded());
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        // Merge with a record of the absolute mass per shape, so that
        // coefficients left over from exact cancellation are recognized.
        out.retain(|t| t.c != 0.0);
        out.sort_by(|x, y| x.key_cmp(y));
        let mut merged: Vec<(Term, f64)> = Vec::with_capacity(out.len());
        for t in out {
            match merged.last_mut() {
                Some((l, mass)) if l.same_shape(&t) => {
                    l.c += t.c;
                    *mass += t.c.abs();
                }
                _ => merged.push((t, t.c.abs())),
            }
        }
        let terms = merged.into_iter().filter(|(t, mass)| t.c.abs() > 1e-13 * mass).map(|(t, _)| t).collect();
        let mut p = RadialProfile { terms, kernel };
        p.tidy();
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(r)).sum()
    }

    /// Sum of |terms|, the cancellation scale of eval.
    pub fn eval_abs(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(r).abs()).sum()
    }

    pub fn scale_by(&self, k: f64) -> RadialProfile {
        let mut p = self.clone();
        for t in &mut p.terms {
            t.c *= k;
        }
        p.tidy();
        p
    }

    pub fn add(&self, o: &RadialProfile) -> RadialProfile {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&o.terms);
        let mut p = RadialProfile { terms, kernel: self.kernel || o.kernel };
        p.tidy();
        p
    }

    pub fn sub(&self, o: &RadialProfile) -> RadialProfile {
        self.add(&o.scale_by(-1.0))
    }

    pub fn mul(&self, o: &RadialProfile) -> Result<RadialProfile> {
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for x in &self.terms {
            for y in &o.terms {
                terms.push(x.mul(y)?);
            }
        }
        let mut p = RadialProfile { terms, kernel: self.kernel || o.kernel };
        p.tidy();
        Ok(p)
    }

    pub fn mul_rpow(&self, j: i32) -> RadialProfile {
        let mut p = self.clone();
        for t in &mut p.terms {
            t.m += j;
        }
        p.kernel = p.terms.iter().any(|t| t.m < 0) || self.kernel;
        p.tidy();
        p
    }

    /// Power of a single-term profile; the r-exponent must stay integral.
    pub fn pow(&self, p: f64) -> Result<RadialProfile> {
        if self.terms.len() != 1 {
            return Err(Error::NonRepresentable("power of a multi-term profile".into()));
        }
        let t = self.terms[0];
        let mp = t.m as f64 * p;
        if (mp - mp.round()).abs() > 1e-12 {
            return Err(Error::NonRepresentable(format!("r^{} to the power {}", t.m, p)));
        }
        if t.c < 0.0 && (p - p.round()).abs() > 1e-12 {
            return Err(Error::NonRepresentable("fractional power of a negative coefficient".into()));
        }
        let c = if t.c < 0.0 { t.c.abs().powf(p) * if (p.round() as i64) % 2 == 0 { 1.0 } else { -1.0 } } else { t.c.powf(p) };
        Ok(RadialProfile::from_terms(vec![Term { c, m: mp.round() as i32, a: t.a, s: snap(t.s * p), mu2: t.mu2 }]))
    }

    /// D f = f'/r.
    pub fn d_over_r(&self) -> RadialProfile {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.extend(t.d_over_r());
        }
        let mut p = RadialProfile { terms, kernel: self.kernel };
        p.tidy();
        p
    }

    pub fn deriv(&self) -> RadialProfile {
        self.d_over_r().mul_rpow(1)
    }

    /// Radial Laplacian with the minus sign: -(f'' + (n-1) f'/r) = -(n Df + r^2 D^2 f).
    pub fn laplacian(&self, n: u32) -> Result<RadialProfile> {
        let d1 = self.d_over_r();
        let d2 = d1.d_over_r().mul_rpow(2);
        let out = d1.scale_by(n as f64).add(&d2).scale_by(-1.0);
        if !self.kernel && out.terms.iter().any(|t| t.m < 0) {
            return Err(Error::NonRepresentable(
                "Laplacian introduces a singular power at the origin".into(),
            ));
        }
        Ok(RadialProfile { kernel: self.kernel, ..out })
    }

    pub fn iterated_laplacian(&self, n: u32, j: u32) -> Result<RadialProfile> {
        let mut f = self.clone();
        for _ in 0..j {
            f = f.laplacian(n)?;
        }
        Ok(f)
    }

    /// (Delta^{k/2} f)^2 for even k, |grad Delta^{(k-1)/2} f|^2 for odd k.
    pub fn half_laplacian_square(&self, n: u32, k: u32) -> Result<RadialProfile> {
        let g = self.iterated_laplacian(n, k / 2)?;
        if k % 2 == 0 {
            g.mul(&g)
        } else {
            let dg = g.deriv();
            dg.mul(&dg)
        }
    }

    /// x . grad f = r f'.
    pub fn radial_derivative_field(&self) -> RadialProfile {
        self.d_over_r().mul_rpow(2)
    }

    /// Most negative power at the origin.
    pub fn singular_order(&self) -> i32 {
        self.terms.iter().map(|t| t.m).min().unwrap_or(0)
    }

    pub fn power_at_inf(&self) -> f64 {
        self.terms.iter().map(|t| t.power_at_inf()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Coefficient-wise comparison of canonical forms.
    pub fn approx_eq(&self, o: &RadialProfile, rtol: f64) -> bool {
        let a = self.canonical();
        let b = o.canonical();
        let diff = a.canonical_sub(&b);
        let scale = a.terms.iter().chain(b.terms.iter()).fold(0.0f64, |m, t| m.max(t.c.abs()));
        diff.terms.iter().all(|t| t.c.abs() <= rtol * scale.max(f64::MIN_POSITIVE))
    }

    /// Profile text: one record per line, `c=.. m=.. a=.. s=.. mu2=..`;
    /// `#` starts a comment; an optional `kernel` line marks kernel profiles.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# radial profile: sum c*r^m*(mu2 + a*r^2)^(-s)\n");
        if self.kernel {
            s.push_str("kernel\n");
        }
        for t in &self.terms {
            s.push_str(&format!(
                "c={:.17e} m={} a={:.17e} s={:.17e} mu2={:.17e}\n",
                t.c, t.m, t.a, t.s, t.mu2
            ));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<RadialProfile> {
        let mut terms = Vec::new();
        let mut kernel_flag = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "kernel" {
                kernel_flag = true;
                continue;
            }
            let (mut c, mut m, mut a, mut s, mut mu2) = (None, None, None, None, None);
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {tok:?}", ln + 1)))?;
                let fv = || -> Result<f64> {
                    let x: f64 = v.parse().map_err(|_| Error::Parse(format!("line {}: bad number {v:?}", ln + 1)))?;
                    if !x.is_finite() {
                        return Err(Error::Parse(format!("line {}: non-finite {k}", ln + 1)));
                    }
                    Ok(x)
                };
                let slot = match k {
                    "c" => &mut c,
                    "a" => &mut a,
                    "s" => &mut s,
                    "mu2" => &mut mu2,
                    "m" => {
                        if m.is_some() {
                            return Err(Error::Parse(format!("line {}: duplicate m", ln + 1)));
                        }
                        let mv: i32 = v.parse().map_err(|_| Error::Parse(format!("line {}: bad integer m", ln + 1)))?;
                        if mv.abs() > 400 {
                            return Err(Error::Parse(format!("line {}: |m| too large", ln + 1)));
                        }
                        m = Some(mv);
                        continue;
                    }
                    _ => return Err(Error::Parse(format!("line {}: unknown key {k:?}", ln + 1))),
                };
                if slot.is_some() {
                    return Err(Error::Parse(format!("line {}: duplicate {k}", ln + 1)));
                }
                *slot = Some(fv()?);
            }
            let t = Term {
                c: c.ok_or_else(|| Error::Parse(format!("line {}: missing c", ln + 1)))?,
                m: m.unwrap_or(0),
                a: a.unwrap_or(0.0),
                s: s.unwrap_or(0.0),
                mu2: mu2.unwrap_or(1.0),
            };
            if t.a < 0.0 || t.mu2 <= 0.0 {
                return Err(Error::Parse(format!("line {}: need a >= 0 and mu2 > 0", ln + 1)));
            }
            if t.s.abs() > 1e3 {
                return Err(Error::Parse(format!("line {}: |s| too large", ln + 1)));
            }
            if t.m < 0 && !kernel_flag {
                return Err(Error::Parse(format!("line {}: negative power outside a kernel profile", ln + 1)));
            }
            terms.push(t);
        }
        let mut p = RadialProfile::from_terms(terms);
        p.kernel = p.kernel || kernel_flag;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_r2_n3() {
        let f = RadialProfile::monomial(1.0, 2);
        let l = f.laplacian(3).unwrap();
        assert!(l.approx_eq(&RadialProfile::constant(-6.0), 1e-15));
    }

    #[test]
    fn fundamental_solution_harmonic() {
        for n in 3..10 {
            let f = RadialProfile::monomial(1.0, 2 - n as i32);
            assert!(f.laplacian(n).unwrap().is_zero(), "n={n}");
        }
    }

    #[test]
    fn k1_bubble_equation() {
        // (1 + r^2/3)^{-1/2} solves Delta f = f^5 in R^3
        let f = RadialProfile::from_terms(vec![Term::new(1.0, 0, 1.0 / 3.0, 0.5, 1.0)]);
        let lhs = f.laplacian(3).unwrap();
        let rhs = f.pow(5.0).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-13), "{lhs:?} vs {rhs:?}");
        for r in [0.0, 0.3, 2.0, 40.0] {
            assert!((lhs.eval(r) - rhs.eval(r)).abs() <= 1e-13 * rhs.eval(r));
        }
    }

    #[test]
    fn iterated_examples() {
        let f = RadialProfile::monomial(1.0, 4);
        assert_eq!(f.iterated_laplacian(3, 0).unwrap(), f);
        let l1 = f.laplacian(3).unwrap();
        assert!(l1.approx_eq(&RadialProfile::monomial(-20.0, 2), 1e-15));
        let l2 = f.iterated_laplacian(3, 2).unwrap();
        assert!(l2.approx_eq(&RadialProfile::constant(120.0), 1e-15));
    }

    #[test]
    fn kernel_power_to_fundamental() {
        // Delta^{k-1} r^{2k-n} = prod (n-2k+2(i-1))(2k-2i) r^{2-n}
        for (n, k) in [(5u32, 2u32), (7, 3), (9, 4), (11, 3)] {
            let f = RadialProfile::monomial(1.0, 2 * k as i32 - n as i32);
            let g = f.iterated_laplacian(n, k - 1).unwrap();
            let mut c = 1.0;
            for i in 1..k {
                c *= (n as f64 - 2.0 * k as f64 + 2.0 * (i as f64 - 1.0)) * (2.0 * k as f64 - 2.0 * i as f64);
            }
            assert!(g.approx_eq(&RadialProfile::monomial(c, 2 - n as i32), 1e-14), "{n} {k}");
        }
    }

    #[test]
    fn half_lap_square_examples() {
        let f = RadialProfile::monomial(1.0, 2);
        let h = f.half_laplacian_square(3, 1).unwrap();
        assert!(h.approx_eq(&RadialProfile::monomial(4.0, 2), 1e-15));
        // Delta f constant for k=2
        let h2 = f.half_laplacian_square(3, 2).unwrap();
        assert!(h2.approx_eq(&RadialProfile::constant(36.0), 1e-15));
    }

    #[test]
    fn singular_laplacian_flagged() {
        let f = RadialProfile::monomial(1.0, 1);
        assert!(matches!(f.laplacian(3), Err(Error::NonRepresentable(_))));
    }

    #[test]
    fn mixed_bases_rejected() {
        let f = RadialProfile::from_terms(vec![Term::new(1.0, 0, 1.0, 1.0, 1.0)]);
        let g = RadialProfile::from_terms(vec![Term::new(1.0, 0, 2.0, 1.0, 1.0)]);
        assert!(f.mul(&g).is_err());
        assert!(f.add(&g).terms.len() == 2);
    }

    #[test]
    fn text_roundtrip() {
        let f = RadialProfile::from_terms(vec![
            Term::new(1.5, 0, 1.0 / 3.0, 0.5, 1.0),
            Term::new(-2.0, 2, 0.0, 0.0, 1.0),
        ]);
        let g = RadialProfile::parse_text(&f.to_text()).unwrap();
        assert_eq!(f, g);
        assert!(RadialProfile::parse_text("c=1 m=-1").is_err());
        assert!(RadialProfile::parse_text("kernel\nc=1 m=-1").unwrap().kernel);
        assert!(RadialProfile::parse_text("c=1 q=2").is_err());
        assert!(RadialProfile::parse_text("c=nan").is_err());
    }
}
