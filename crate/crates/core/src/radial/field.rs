//! Fields sum c * x^alpha * t(|x|) with t a single profile term. Closed under
//! partial derivatives, products on a common base and x . grad; integrals over
//! R^n reduce to sphere moments times radial integrals.

use super::{sphere_moment, RadialProfile, Term};
use crate::constants::omega;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    alpha: Vec<u8>,
    m: i32,
    a: u64,
    s: u64,
    mu2: u64,
}

impl Key {
    fn term(&self, c: f64) -> Term {
        Term { c, m: self.m, a: f64::from_bits(self.a), s: f64::from_bits(self.s), mu2: f64::from_bits(self.mu2) }
    }
    fn from_term(alpha: Vec<u8>, t: &Term) -> Key {
        Key { alpha, m: t.m, a: t.a.to_bits(), s: t.s.to_bits(), mu2: t.mu2.to_bits() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub n: u32,
    map: BTreeMap<Key, f64>,
}

impl Field {
    pub fn zero(n: u32) -> Field {
        Field { n, map: BTreeMap::new() }
    }

    pub fn from_profile(p: &RadialProfile, n: u32) -> Field {
        let mut f = Field::zero(n);
        for t in &p.terms {
            f.push(vec![0; n as usize], t);
        }
        f
    }

    /// c * x^alpha.
    pub fn monomial(alpha: &[u8], c: f64, n: u32) -> Field {
        let mut a = alpha.to_vec();
        a.resize(n as usize, 0);
        let mut f = Field::zero(n);
        f.push(a, &Term::monomial(c, 0));
        f
    }

    fn push(&mut self, alpha: Vec<u8>, t: &Term) {
        if t.c == 0.0 {
            return;
        }
        let t = t.folded();
        let k = Key::from_term(alpha, &Term { c: 0.0, ..t });
        let e = self.map.entry(k).or_insert(0.0);
        *e += t.c;
    }

    fn tidy(&mut self) {
        let cmax = self.map.values().fold(0.0f64, |m, c| m.max(c.abs()));
        self.map.retain(|_, c| *c != 0.0 && c.abs() > 1e-14 * cmax);
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn add(&self, o: &Field) -> Field {
        let mut f = self.clone();
        for (k, c) in &o.map {
            *f.map.entry(k.clone()).or_insert(0.0) += c;
        }
        f.tidy();
        f
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.map.values().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Even powers r^{2j} without a base are expanded into monomials, so that
    /// polynomial fields have a unique representation.
    pub fn canonical(&self) -> Field {
        let mut f = Field::zero(self.n);
        for (k, &c) in &self.map {
            let t = k.term(c);
            if t.a != 0.0 || t.m < 2 || t.m % 2 == 1 {
                f.push(k.alpha.clone(), &t);
                continue;
            }
            let rest = Term { m: 0, ..t };
            let j = (t.m / 2) as u32;
            for e in multi_indices(self.n as usize, j) {
                let tot: u32 = e.iter().map(|&x| x as u32).sum();
                if tot != j {
                    continue;
                }
                // multinomial j! / prod e_i!
                let mut coef = (1..=j).map(f64::from).product::<f64>();
                for &x in &e {
                    coef /= (1..=x as u32).map(f64::from).product::<f64>();
                }
                let a: Vec<u8> = k.alpha.iter().zip(&e).map(|(x, y)| x + 2 * y).collect();
                f.push(a, &Term { c: c * coef, ..rest });
            }
        }
        f.tidy();
        f
    }

    /// Coefficientwise equality of canonical forms, relative to the larger operand.
    pub fn approx_eq(&self, o: &Field, rtol: f64) -> bool {
        let (a, b) = (self.canonical(), o.canonical());
        let scale = a.max_abs_coeff().max(b.max_abs_coeff());
        a.sub(&b).map.values().all(|c| c.abs() <= rtol * scale)
    }

    pub fn scale(&self, s: f64) -> Field {
        let mut f = self.clone();
        for c in f.map.values_mut() {
            *c *= s;
        }
        f.tidy();
        f
    }

    pub fn sub(&self, o: &Field) -> Field {
        self.add(&o.scale(-1.0))
    }

    pub fn partial(&self, i: usize) -> Field {
        let mut f = Field::zero(self.n);
        for (k, &c) in &self.map {
            let t = k.term(c);
            if k.alpha[i] > 0 {
                let mut a = k.alpha.clone();
                a[i] -= 1;
                f.push(a, &Term { c: c * k.alpha[i] as f64, ..t });
            }
            let mut a = k.alpha.clone();
            a[i] += 1;
            // D t = t'/r
            f.push(a.clone(), &Term { c: c * t.m as f64, m: t.m - 2, ..t });
            if t.a != 0.0 {
                f.push(a, &Term { c: -2.0 * t.a * t.s * c, s: t.s + 1.0, ..t });
            }
        }
        f.tidy();
        f
    }

    /// Minus-sign Laplacian.
    pub fn laplacian(&self) -> Field {
        let mut acc = Field::zero(self.n);
        for i in 0..self.n as usize {
            acc = acc.add(&self.partial(i).partial(i));
        }
        acc.scale(-1.0)
    }

    pub fn iterated_laplacian(&self, j: u32) -> Field {
        let mut f = self.clone();
        for _ in 0..j {
            f = f.laplacian();
        }
        f
    }

    pub fn mul(&self, o: &Field) -> Result<Field> {
        let mut f = Field::zero(self.n);
        for (k1, &c1) in &self.map {
            let t1 = k1.term(c1);
            for (k2, &c2) in &o.map {
                let t2 = k2.term(c2);
                let p = RadialProfile { terms: vec![t1], kernel: true }
                    .mul(&RadialProfile { terms: vec![t2], kernel: true })?;
                let a: Vec<u8> = k1.alpha.iter().zip(&k2.alpha).map(|(x, y)| x + y).collect();
                for t in &p.terms {
                    f.push(a.clone(), t);
                }
            }
        }
        f.tidy();
        Ok(f)
    }

    /// x . grad.
    pub fn xgrad(&self) -> Field {
        let mut acc = Field::zero(self.n);
        for i in 0..self.n as usize {
            let d = self.partial(i);
            let mut g = Field::zero(self.n);
            for (k, &c) in &d.map {
                let mut a = k.alpha.clone();
                a[i] += 1;
                g.push(a, &k.term(c));
            }
            acc = acc.add(&g);
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.map
            .iter()
            .map(|(k, &c)| {
                let mono: f64 = k.alpha.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product();
                mono * k.term(c).eval(r)
            })
            .sum()
    }

    /// Radial profile whose integral against r^{n-1} dr gives the integral of
    /// the field over R^n divided by omega.
    fn reduced_profile(&self) -> RadialProfile {
        let mut terms = Vec::new();
        let w = omega(self.n);
        for (k, &c) in &self.map {
            let mom = sphere_moment(&k.alpha, self.n) / w;
            if mom == 0.0 {
                continue;
            }
            let deg: u32 = k.alpha.iter().map(|&e| e as u32).sum();
            let t = k.term(c * mom);
            terms.push(Term { m: t.m + deg as i32, ..t });
        }
        let mut p = RadialProfile { terms, kernel: true };
        p.tidy();
        p
    }

    /// Integral over R^n.
    pub fn integrate(&self) -> Result<f64> {
        let p = self.reduced_profile();
        let mut p = p;
        p.kernel = true;
        if p.is_zero() {
            return Ok(0.0);
        }
        super::radial_integral(&p, self.n, 0.0, None)
    }

    /// Integral over the unit sphere.
    pub fn sphere_integral(&self) -> f64 {
        self.map
            .iter()
            .map(|(k, &c)| sphere_moment(&k.alpha, self.n) * k.term(c).eval(1.0))
            .sum()
    }

    /// Largest effective power at infinity among the terms.
    pub fn power_at_inf(&self) -> f64 {
        self.map
            .iter()
            .map(|(k, &c)| {
                let deg: f64 = k.alpha.iter().map(|&e| e as f64).sum();
                k.term(c).power_at_inf() + deg
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_integrable(&self) -> Result<()> {
        let p = self.power_at_inf();
        if p >= -(self.n as f64) {
            return Err(Error::Divergent(format!("field decays like r^{p} in dimension {}", self.n)));
        }
        Ok(())
    }
}

/// Every exponent vector in `n` variables with total degree at most `max_total`.
pub fn multi_indices(n: usize, max_total: u32) -> Vec<Vec<u8>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e as u8);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_total, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All partial derivatives of order p as a map from sorted index tuples.
pub fn derivative_tensor(f: &Field, p: usize) -> Vec<(Vec<usize>, Field)> {
    let n = f.n as usize;
    let mut out = vec![(Vec::new(), f.clone())];
    for _ in 0..p {
        let mut next = Vec::new();
        for (idx, g) in &out {
            for i in 0..n {
                let mut j = idx.clone();
                j.push(i);
                next.push((j, g.partial(i)));
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_matches_radial() {
        let p = RadialProfile::from_terms(vec![Term::new(1.0, 0, 0.5, 1.5, 2.0), Term::new(0.3, 2, 0.5, 2.5, 2.0)]);
        let n = 4;
        let f = Field::from_profile(&p, n).laplacian();
        let g = p.laplacian(n).unwrap();
        for x in [[0.3, 0.1, -0.2, 0.5], [1.0, 2.0, 0.0, -1.0]] {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((f.eval(&x) - g.eval(r)).abs() < 1e-12 * g.eval_abs(r));
        }
    }

    #[test]
    fn polynomial_laplacian() {
        // Delta(x^2 y) = -2y
        let f = Field::monomial(&[2, 1], 1.0, 3).laplacian();
        assert_eq!(f, Field::monomial(&[0, 1], -2.0, 3));
    }

    #[test]
    fn integral_of_gaussian_like() {
        // int x1^2 (1+r^2)^{-4} over R^3 = (1/3) int r^2 ... via radial route
        let p = RadialProfile::from_terms(vec![Term::new(1.0, 0, 1.0, 4.0, 1.0)]);
        let f = Field::from_profile(&p, 3).mul(&Field::monomial(&[2], 1.0, 3)).unwrap();
        let v = f.integrate().unwrap();
        let w = super::super::radial_integral(&p.mul_rpow(2), 3, 0.0, None).unwrap() / 3.0;
        assert!((v - w).abs() < 1e-13 * w);
    }

    #[test]
    fn multi_index_count() {
        // C(d + n, n) exponent vectors of degree <= d
        assert_eq!(multi_indices(3, 6).len(), 84);
        assert_eq!(multi_indices(5, 6).len(), 462);
        assert!(multi_indices(4, 3).iter().all(|e| e.iter().map(|&x| x as u32).sum::<u32>() <= 3));
    }

    #[test]
    fn xgrad_euler() {
        // x . grad of a homogeneous polynomial of degree d is d times it
        let f = Field::monomial(&[1, 2, 0], 2.0, 3).add(&Field::monomial(&[0, 0, 3], -1.0, 3));
        assert_eq!(f.xgrad(), f.scale(3.0));
    }
}
