//! Pohozaev-Pucci-Serrin identity on balls and annuli for radial data, the
//! boundary operator S(u), the commutator identity and the D_r invariant of the
//! Green kernel.

use crate::bubble::pohozaev_field;
use crate::constants::{green_kernel_constant, omega, DimPair};
use crate::error::{Error, Result};
use crate::radial::field::Field;
use crate::radial::{integrate_radial_fn, radial_integral, RadialProfile, RTOL};
use crate::report::{CheckReport, Provenance};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct PohozaevCase {
    pub u: RadialProfile,
    /// Weight in front of the nonlinearity.
    pub f: RadialProfile,
    pub eps: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub d: DimPair,
}

impl PohozaevCase {
    pub fn new(u: RadialProfile, f: RadialProfile, eps: f64, r_in: f64, r_out: f64, d: DimPair) -> Result<Self> {
        let c = PohozaevCase { u, f, eps, r_in, r_out, d };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_in >= 0.0 && self.r_out > self.r_in && self.r_out.is_finite()) {
            return Err(Error::Domain(format!("need 0 <= r_in < r_out, got [{}, {}]", self.r_in, self.r_out)));
        }
        let ts = self.d.two_star_f64();
        if !(self.eps >= 0.0 && self.eps < ts - 2.0) {
            return Err(Error::Domain(format!("eps must lie in [0, {}), got {}", ts - 2.0, self.eps)));
        }
        if self.r_in == 0.0 && (self.u.singular_order() < 0 || self.f.singular_order() < 0) {
            return Err(Error::Divergent("singular profile on a ball; use an annulus".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PohozaevSides {
    pub lhs: f64,
    /// n eps / (2*(2*-eps)) int f |u|^{2*-eps}
    pub rhs_eps: f64,
    /// 1/(2*-eps) int (grad f, x) |u|^{2*-eps}
    pub rhs_grad: f64,
    pub rhs_boundary_outer: f64,
    pub rhs_boundary_inner: f64,
}

impl PohozaevSides {
    pub fn rhs_volume(&self) -> f64 {
        self.rhs_eps + self.rhs_grad
    }
    pub fn rhs_boundary(&self) -> f64 {
        self.rhs_boundary_outer - self.rhs_boundary_inner
    }
    pub fn rhs(&self) -> f64 {
        self.rhs_volume() + self.rhs_boundary()
    }
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs()).abs()
    }
}

/// Laplacian towers of u and T(u) with their radial derivatives.
struct Tower {
    k: u32,
    lap_u: Vec<RadialProfile>,
    dlap_u: Vec<RadialProfile>,
    lap_t: Vec<RadialProfile>,
    dlap_t: Vec<RadialProfile>,
}

impl Tower {
    fn new(u: &RadialProfile, d: DimPair) -> Result<Tower> {
        let t = pohozaev_field(u, d);
        let mut lap_u = vec![u.clone()];
        for _ in 0..d.k {
            let next = lap_u.last().expect("nonempty").laplacian(d.n)?;
            lap_u.push(next);
        }
        let mut lap_t = vec![t];
        for _ in 0..d.k / 2 {
            let next = lap_t.last().expect("nonempty").laplacian(d.n)?;
            lap_t.push(next);
        }
        let dlap_u = lap_u.iter().map(|p| p.deriv()).collect();
        let dlap_t = lap_t.iter().map(|p| p.deriv()).collect();
        Ok(Tower { k: d.k, lap_u, dlap_u, lap_t, dlap_t })
    }

    /// S(u) on the sphere of radius r with outward normal.
    fn s(&self, r: f64) -> f64 {
        let k = self.k as usize;
        let mut acc = 0.0;
        for i in 0..k / 2 {
            acc += -self.dlap_u[k - i - 1].eval(r) * self.lap_t[i].eval(r)
                + self.lap_u[k - i - 1].eval(r) * self.dlap_t[i].eval(r);
        }
        if k % 2 == 1 {
            let q = (k - 1) / 2;
            acc -= self.dlap_u[q].eval(r) * self.lap_t[q].eval(r);
        }
        acc
    }

    /// (Delta^{k/2} u)^2, with |grad Delta^q u|^2 for odd k = 2q+1.
    fn half_sq(&self, r: f64) -> f64 {
        let k = self.k as usize;
        let v = if k % 2 == 0 { self.lap_u[k / 2].eval(r) } else { self.dlap_u[(k - 1) / 2].eval(r) };
        v * v
    }
}

pub fn boundary_density_s(u: &RadialProfile, d: DimPair, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} not positive")));
    }
    Ok(Tower::new(u, d)?.s(r))
}

fn signed_pow(u: f64, p: f64) -> f64 {
    u.signum() * u.abs().powf(p)
}

fn scales(ps: &[&RadialProfile]) -> Vec<f64> {
    ps.iter().flat_map(|p| p.terms.iter().filter_map(|t| t.scale())).collect()
}

fn sides_unchecked(c: &PohozaevCase) -> Result<PohozaevSides> {
    let d = c.d;
    let n = d.n;
    let w = omega(n);
    let tw = Tower::new(&c.u, d)?;
    let t = &tw.lap_t[0];
    let lku = &tw.lap_u[d.k as usize];
    let p = d.two_star_f64() - c.eps;
    let xf = c.f.radial_derivative_field();
    let sc = scales(&[&c.u, &c.f]);
    let rn = |r: f64| r.powi(n as i32 - 1);
    let vol = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(w * integrate_radial_fn(|r| g(r) * rn(r), c.r_in, Some(c.r_out), 0.0, &sc, RTOL)?)
    };
    // The two parts nearly cancel for solutions; integrating them apart keeps
    // the relative tolerance meaningful.
    let lhs = vol(&|r| lku.eval(r) * t.eval(r))?
        - vol(&|r| c.f.eval(r) * signed_pow(c.u.eval(r), p - 1.0) * t.eval(r))?;
    let int_f = vol(&|r| c.f.eval(r) * c.u.eval(r).abs().powf(p))?;
    let int_xf = vol(&|r| xf.eval(r) * c.u.eval(r).abs().powf(p))?;
    let ts = d.two_star_f64();
    let flux = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let dens = r * (tw.half_sq(r) / 2.0 - c.f.eval(r) * c.u.eval(r).abs().powf(p) / p) + tw.s(r);
        w * rn(r) * dens
    };
    Ok(PohozaevSides {
        lhs,
        rhs_eps: d.nf() * c.eps / (ts * p) * int_f,
        rhs_grad: int_xf / p,
        rhs_boundary_outer: flux(c.r_out),
        rhs_boundary_inner: flux(c.r_in),
    })
}

pub fn pohozaev_sides(c: &PohozaevCase) -> Result<PohozaevSides> {
    c.validate()?;
    sides_unchecked(c)
}

pub fn pohozaev_check(c: &PohozaevCase) -> Result<CheckReport> {
    let s = pohozaev_sides(c)?;
    let tol = 1e-8 * (1.0 + s.lhs.abs());
    let res = s.residual();
    Ok(CheckReport::flag("pohozaev.identity", res, tol, res < tol, Provenance::Derived)
        .input("n", c.d.n)
        .input("k", c.d.k)
        .input("eps", c.eps)
        .input("r_in", c.r_in)
        .input("r_out", c.r_out)
        .detail("lhs", s.lhs)
        .detail("rhs_eps", s.rhs_eps)
        .detail("rhs_grad", s.rhs_grad)
        .detail("rhs_boundary_outer", s.rhs_boundary_outer)
        .detail("rhs_boundary_inner", s.rhs_boundary_inner)
        .detail("rhs", s.rhs()))
}

/// Checks the eps-volume term by differentiating the remaining parts of the
/// identity (f = 1) in eps at eps = 0, with a second-order one-sided stencil.
pub fn eps_derivative_check(u: &RadialProfile, d: DimPair, r_in: f64, r_out: f64, h: f64) -> Result<CheckReport> {
    let f = RadialProfile::constant(1.0);
    let phi = |eps: f64| -> Result<f64> {
        let c = PohozaevCase::new(u.clone(), f.clone(), eps, r_in, r_out, d)?;
        let s = sides_unchecked(&c)?;
        Ok(s.lhs - s.rhs_grad - s.rhs_boundary())
    };
    let num = (-3.0 * phi(0.0)? + 4.0 * phi(h)? - phi(2.0 * h)?) / (2.0 * h);
    let ts = d.two_star_f64();
    let sc = scales(&[u]);
    let int = omega(d.n)
        * integrate_radial_fn(|r| u.eval(r).abs().powf(ts) * r.powi(d.n as i32 - 1), r_in, Some(r_out), 0.0, &sc, RTOL)?;
    let exact = d.nf() / (ts * ts) * int;
    let tol = 1e-6 * exact.abs().max(1.0);
    Ok(CheckReport::compare("pohozaev.eps_derivative", num, exact, tol, Provenance::Derived)
        .input("n", d.n)
        .input("k", d.k)
        .input("h", h))
}

/// Delta^{l/2} as a list of components: one for even l, the gradient of
/// Delta^{(l-1)/2} for odd l.
fn half_power(v: &Field, l: u32) -> Vec<Field> {
    let base = v.iterated_laplacian(l / 2);
    if l % 2 == 0 {
        vec![base]
    } else {
        (0..v.n as usize).map(|i| base.partial(i)).collect()
    }
}

/// max coefficient defect of Delta^{l/2}(x.grad v) - l Delta^{l/2} v - x.grad(Delta^{l/2} v)
pub fn commutator_defect(v: &Field, l: u32) -> f64 {
    let lhs: Vec<Field> = half_power(&v.xgrad(), l).iter().map(Field::canonical).collect();
    let rhs: Vec<Field> = half_power(v, l).iter().map(|c| c.scale(l as f64).add(&c.xgrad()).canonical()).collect();
    let scale = lhs.iter().chain(&rhs).fold(0.0f64, |m, c| m.max(c.max_abs_coeff())).max(f64::MIN_POSITIVE);
    lhs.iter().zip(&rhs).map(|(a, b)| a.sub(b).max_abs_coeff() / scale).fold(0.0, f64::max)
}

pub fn commutator_check(d: DimPair, l: u32, v: &Field) -> Result<CheckReport> {
    if v.n != d.n {
        return Err(Error::Domain(format!("field lives in dimension {}, pair has n={}", v.n, d.n)));
    }
    let defect = commutator_defect(v, l);
    Ok(CheckReport::flag("pohozaev.commutator", defect, 1e-12, defect <= 1e-12, Provenance::Derived)
        .input("n", d.n)
        .input("k", d.k)
        .input("l", l)
        .input("terms", v.len()))
}

/// Green kernel of Delta^k on R^n scaled by c: c C_{n,k} r^{2k-n}.
pub fn gamma1(d: DimPair, c: f64) -> RadialProfile {
    RadialProfile::monomial(c * green_kernel_constant(d), 2 * d.k as i32 - d.n as i32)
}

/// D_r for the profile g: the flux through the sphere of radius r of
/// (x,nu)(Delta^{k/2} g)^2/2 + S(g).
pub fn d_r(g: &RadialProfile, d: DimPair, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} not positive")));
    }
    let tw = Tower::new(g, d)?;
    Ok(omega(d.n) * r.powi(d.n as i32 - 1) * (r * tw.half_sq(r) / 2.0 + tw.s(r)))
}

pub fn d_r_invariant(d: DimPair, r_values: &[f64]) -> Result<CheckReport> {
    if r_values.is_empty() {
        return Err(Error::Domain("no radii given".into()));
    }
    let g = gamma1(d, 1.0);
    let vals: Vec<f64> = r_values.iter().map(|&r| d_r(&g, d, r)).collect::<Result<_>>()?;
    let j = radial_integral(&crate::bubble::bubble_source(&crate::bubble::BubbleParams::unit(d)), d.n, 0.0, None)?;
    let k0 = green_kernel_constant(d) * j;
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let pass = max < 1e-8 * k0 * k0 && spread < 1e-10;
    Ok(CheckReport::flag(&format!("pohozaev.d_r.n{}k{}", d.n, d.k), max, 1e-8 * k0 * k0, pass, Provenance::Paper)
        .input("n", d.n)
        .input("k", d.k)
        .input("radii", r_values.len())
        .detail("spread", spread)
        .detail("K0", k0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{standard_bubble, BubbleParams};
    use crate::radial::field::multi_indices;
    use crate::radial::Term;

    fn dp(n: u32, k: u32) -> DimPair {
        DimPair::new(n, k).unwrap()
    }

    #[test]
    fn k1_s_is_classical() {
        // S(u) = -u' T(u) for k = 1
        let d = dp(4, 1);
        let u = RadialProfile::from_terms(vec![Term::new(1.0, 0, 1.0, 0.7, 2.0), Term::monomial(0.3, 2)]);
        let t = pohozaev_field(&u, d);
        for r in [0.2, 1.0, 3.0] {
            let s = boundary_density_s(&u, d, r).unwrap();
            let e = -u.deriv().eval(r) * t.eval(r);
            assert!((s - e).abs() < 1e-14 * e.abs().max(1.0));
        }
    }

    #[test]
    fn constant_has_zero_s_for_even_k() {
        for (n, k) in [(5, 2), (9, 4)] {
            let s = boundary_density_s(&RadialProfile::constant(2.5), dp(n, k), 0.7).unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn polynomial_on_ball() {
        // u = 1 - r^2, k = 1, n = 3: lhs = int 6 (1/2 - 5/2 r^2) = -8 pi
        let u = RadialProfile::constant(1.0).sub(&RadialProfile::monomial(1.0, 2));
        let c = PohozaevCase::new(u, RadialProfile::zero(), 0.0, 0.0, 1.0, dp(3, 1)).unwrap();
        let s = pohozaev_sides(&c).unwrap();
        assert!((s.lhs + 8.0 * std::f64::consts::PI).abs() < 1e-12, "{}", s.lhs);
        assert!(s.residual() < 1e-10, "{}", s.residual());
    }

    #[test]
    fn zero_gives_zero() {
        let c = PohozaevCase::new(RadialProfile::zero(), RadialProfile::constant(1.0), 0.1, 0.0, 1.0, dp(5, 2)).unwrap();
        let s = pohozaev_sides(&c).unwrap();
        assert_eq!(s.lhs, 0.0);
        assert_eq!(s.rhs(), 0.0);
    }

    #[test]
    fn bubble_on_annulus() {
        for (n, k) in [(3, 1), (4, 1), (5, 1), (5, 2), (6, 2), (7, 2), (7, 3)] {
            let d = dp(n, k);
            let u = standard_bubble(&BubbleParams::unit(d));
            let c = PohozaevCase::new(u, RadialProfile::constant(1.0), 0.0, 0.1, 2.0, d).unwrap();
            let r = pohozaev_check(&c).unwrap();
            assert!(r.pass, "{n} {k}: {}", r.value);
        }
    }

    #[test]
    fn weighted_and_perturbed() {
        let d = dp(6, 2);
        let u = RadialProfile::from_terms(vec![Term::new(1.0, 0, 0.4, 1.0, 1.0), Term::monomial(-0.2, 4)]);
        let f = RadialProfile::constant(1.0).add(&RadialProfile::monomial(0.5, 2));
        for eps in [0.0, 0.1] {
            for (a, b) in [(0.0, 1.0), (0.3, 1.5)] {
                let c = PohozaevCase::new(u.clone(), f.clone(), eps, a, b, d).unwrap();
                let r = pohozaev_check(&c).unwrap();
                assert!(r.pass, "{eps} {a}: {}", r.value);
            }
        }
    }

    #[test]
    fn singular_on_ball_rejected() {
        let d = dp(5, 2);
        let c = PohozaevCase::new(gamma1(d, 1.0), RadialProfile::zero(), 0.0, 0.0, 1.0, d);
        assert!(matches!(c, Err(Error::Divergent(_))));
    }

    #[test]
    fn eps_term_by_differentiation() {
        let d = dp(5, 2);
        let u = standard_bubble(&BubbleParams::unit(d));
        let r = eps_derivative_check(&u, d, 0.0, 1.5, 1e-4).unwrap();
        assert!(r.pass, "{} vs {:?}", r.value, r.expected);
    }

    #[test]
    fn commutator_r4() {
        let d = dp(3, 1);
        let v = Field::from_profile(&RadialProfile::monomial(1.0, 4), 3);
        assert!(commutator_check(d, 2, &v).unwrap().pass);
        // Delta(x . grad r^4) = Delta(4 r^4) = -80 r^2
        let lhs = v.xgrad().laplacian();
        assert!(lhs.approx_eq(&Field::from_profile(&RadialProfile::monomial(-80.0, 2), 3), 1e-14));
    }

    #[test]
    fn commutator_exhaustive() {
        for n in 3..=5u32 {
            let kmax = (n - 1) / 2;
            for alpha in multi_indices(n as usize, 6) {
                let v = Field::monomial(&alpha, 1.0, n);
                for l in 0..=2 * kmax {
                    let e = commutator_defect(&v, l);
                    assert!(e <= 1e-12, "n={n} l={l} {alpha:?}: {e}");
                }
            }
        }
    }

    #[test]
    fn d_r_vanishes() {
        for (n, k) in [(3, 1), (5, 2), (7, 3), (9, 4)] {
            let r = d_r_invariant(dp(n, k), &[0.1, 1.0, 10.0]).unwrap();
            assert!(r.pass, "{n} {k}: {}", r.value);
            assert!(r.value < 1e-10);
        }
    }

    #[test]
    fn d_r_quadratic() {
        let d = dp(5, 2);
        let a = d_r(&gamma1(d, 1.0), d, 0.5).unwrap();
        let b = d_r(&gamma1(d, 2.0), d, 0.5).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-14);
    }
}
