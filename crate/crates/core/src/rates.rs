//! Blow-up rate formulas and obstruction verdicts, the kappa constants, the
//! radial trace identity, the Weyl-bubble product and the pointwise control
//! constant of bubble families.

use crate::bubble::{bubble_integrals, int_half_lap_sq, pohozaev_field, standard_bubble, BubbleIntegrals, BubbleParams};
use crate::constants::{bubble_scale, green_kernel_constant, omega, DimPair};
use crate::error::{Error, Result};
use crate::radial::field::{derivative_tensor, Field};
use crate::radial::{radial_integral, sphere_moment, RadialProfile};
use crate::report::{CheckReport, Provenance};
use crate::tensor::{SymTensor, WeylTensor};
use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// (kappa'_k, kappa_k) at n = 2k + 4.
pub fn kappa_values(k: u32) -> Result<(f64, f64)> {
    let d = DimPair::new(2 * k + 4, k)?;
    let j = bubble_integrals(d)?.int_u_2star_minus1;
    let i = int_half_lap_sq(d)?;
    let kp = (d.n - 2 * k) as f64 * j / (2.0 * i);
    Ok((kp, (d.n as f64).powi(k as i32 - 1) * kp))
}

/// k(3n(n-2) - 4k^2 + 4) / (12 n (n-1)), the scalar-curvature threshold factor.
pub fn threshold_coefficient(n: u32, k: u32) -> Ratio<i64> {
    let (n, k) = (n as i64, k as i64);
    Ratio::new(k * (3 * n * (n - 2) - 4 * k * k + 4), 12 * n * (n - 1))
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn odd_double_factorial(p: u32) -> f64 {
    // (2p-1)!!
    (1..=p).map(|j| (2 * j - 1) as f64).product()
}

/// Integral of A(grad^p U, grad^p U) for the unit standard bubble, p = k - 1,
/// through exact differentiation and sphere moments.
pub fn contracted_gradient_integral(a: &SymTensor, d: DimPair) -> Result<f64> {
    let p = (d.k - 1) as usize;
    check_trace_args(a, d)?;
    let u = Field::from_profile(&standard_bubble(&BubbleParams::unit(d)), d.n);
    let comps = derivative_tensor(&u, p);
    let dim = comps.len();
    let mut total = Field::zero(d.n);
    for (i, (_, ci)) in comps.iter().enumerate() {
        let mut w = Field::zero(d.n);
        for (j, (_, cj)) in comps.iter().enumerate() {
            let aij = a.data[i * dim + j];
            if aij != 0.0 {
                w = w.add(&cj.scale(aij));
            }
        }
        if !w.is_zero() {
            total = total.add(&ci.mul(&w)?);
        }
    }
    total.check_integrable()?;
    total.integrate()
}

fn check_trace_args(a: &SymTensor, d: DimPair) -> Result<()> {
    if d.n <= 2 * d.k + 2 {
        return Err(Error::Domain(format!(
            "grad^(k-1) U is in L^2 only for n > 2k+2 (n={}, k={})",
            d.n, d.k
        )));
    }
    if a.n != d.n as usize || a.order != 2 * (d.k as usize - 1) {
        return Err(Error::Domain(format!(
            "tensor has n={}, order={}; need n={}, order={}",
            a.n,
            a.order,
            d.n,
            2 * (d.k - 1)
        )));
    }
    Ok(())
}

/// Compares the integral of A(grad^{k-1} U, grad^{k-1} U) with
/// Tr(A) int (Delta^{(k-1)/2} U)^2 / n^{k-1}.
pub fn radial_trace_identity(a: &SymTensor, d: DimPair) -> Result<CheckReport> {
    check_trace_args(a, d)?;
    let p = d.k - 1;
    let lhs = contracted_gradient_integral(a, d)?;
    let i = int_half_lap_sq(d)?;
    let tr = a.symmetrize_and_trace()?;
    let rhs = tr * i / (d.n as f64).powi(p as i32);
    // constant obtained from the full symmetry of int d_I U d_J U
    let moment: f64 = (0..p).map(|j| (d.n + 2 * j) as f64).product();
    let sym = odd_double_factorial(p) * i / moment * tr;
    let scale = lhs.abs().max(rhs.abs()).max(i * a.max_abs()).max(f64::MIN_POSITIVE);
    let rel = (lhs - rhs).abs() / scale;
    Ok(CheckReport::flag(&format!("rates.trace_identity.n{}k{}", d.n, d.k), rel, 1e-6, rel < 1e-6, Provenance::Paper)
        .input("n", d.n)
        .input("k", d.k)
        .detail("lhs", lhs)
        .detail("rhs", rhs)
        .detail("trace", tr)
        .detail("symmetric_moment_rhs", sym)
        .detail("symmetric_moment_rel_error", (lhs - sym).abs() / scale))
}

/// sum over i,p,j,q of t_{ipjq} int x_p x_q d_ij Delta^{k-1} U T(U) for radial U,
/// via d_ij V = delta_ij V'/r + x_i x_j (V'/r)'/r and sphere moments.
pub fn radial_bubble_contraction(t: &SymTensor, u: &RadialProfile, d: DimPair) -> Result<f64> {
    if t.order != 4 || t.n != d.n as usize {
        return Err(Error::Domain("need a 4-tensor in dimension n".into()));
    }
    let n = d.n as usize;
    let v = u.iterated_laplacian(d.n, d.k - 1)?;
    let tu = pohozaev_field(u, d);
    let dv = v.d_over_r();
    let d2v = dv.d_over_r();
    let w = omega(d.n);
    let r2 = radial_integral(&dv.mul(&tu)?.mul_rpow(2), d.n, 0.0, None)? / w;
    let r4 = radial_integral(&d2v.mul(&tu)?.mul_rpow(4), d.n, 0.0, None)? / w;
    // tensor-only sums first; both vanish for a Weyl tensor, so the large
    // radial factors multiply only their roundoff
    let (mut s2, mut s4) = (0.0, 0.0);
    let mut e = vec![0u32; n];
    for idx in t.indices() {
        let c = t.data[t.offset(&idx)];
        if c == 0.0 {
            continue;
        }
        let (i, p, j, q) = (idx[0], idx[1], idx[2], idx[3]);
        e.iter_mut().for_each(|x| *x = 0);
        e[p] += 1;
        e[q] += 1;
        let m2 = sphere_moment(&e, d.n);
        e[i] += 1;
        e[j] += 1;
        let m4 = sphere_moment(&e, d.n);
        if i == j {
            s2 += c * m2;
        }
        s4 += c * m4;
    }
    Ok(r2 * s2 + r4 * s4)
}

/// Same contraction for a general field U, by direct differentiation.
pub fn field_bubble_contraction(t: &SymTensor, u: &Field, d: DimPair) -> Result<f64> {
    if t.order != 4 || t.n != d.n as usize || u.n != d.n {
        return Err(Error::Domain("need a 4-tensor and a field in dimension n".into()));
    }
    let n = d.n as usize;
    let v = u.iterated_laplacian(d.k - 1);
    let tu = u.scale(d.s()).add(&u.xgrad());
    let mut total = Field::zero(d.n);
    for i in 0..n {
        let vi = v.partial(i);
        for j in 0..n {
            let mut q = Field::zero(d.n);
            for p in 0..n {
                for qq in 0..n {
                    let c = t.get(&[i, p, j, qq]);
                    if c != 0.0 {
                        let mut alpha = vec![0u8; n];
                        alpha[p] += 1;
                        alpha[qq] += 1;
                        q = q.add(&Field::monomial(&alpha, c, d.n));
                    }
                }
            }
            if q.is_zero() {
                continue;
            }
            total = total.add(&vi.partial(j).mul(&tu)?.mul(&q)?);
        }
    }
    if total.is_zero() {
        return Ok(0.0);
    }
    total.check_integrable()?;
    total.integrate()
}

/// Weyl (x) B for a radial profile U.
pub fn weyl_bubble_product(w: &WeylTensor, u: &RadialProfile, d: DimPair) -> Result<f64> {
    Ok(d.k as f64 / 3.0 * radial_bubble_contraction(&w.0, u, d)?)
}

pub fn weyl_bubble_product_field(w: &WeylTensor, u: &Field, d: DimPair) -> Result<f64> {
    Ok(d.k as f64 / 3.0 * field_bubble_contraction(&w.0, u, d)?)
}

/// Orthonormal basis of symmetric p-tensors inside the n^p coordinate space.
fn symmetric_basis(n: usize, p: usize) -> DMatrix<f64> {
    let probe = SymTensor::zeros(n, p);
    let mut orbits: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (off, mut idx) in probe.indices().enumerate() {
        idx.sort_unstable();
        orbits.entry(idx).or_default().push(off);
    }
    let mut b = DMatrix::zeros(probe.data.len(), orbits.len());
    for (col, offs) in orbits.values().enumerate() {
        let w = 1.0 / (offs.len() as f64).sqrt();
        for &o in offs {
            b[(o, col)] = w;
        }
    }
    b
}

/// Extreme eigenvalues of S -> A(S, S) restricted to symmetric tensors.
pub fn symmetric_form_spectrum(a: &SymTensor) -> Result<(f64, f64)> {
    if a.order % 2 == 1 {
        return Err(Error::Domain("odd order form".into()));
    }
    let p = a.order / 2;
    let dim = a.n.pow(p as u32);
    let m = DMatrix::from_row_slice(dim, dim, &a.data);
    let m = (&m + m.transpose()) * 0.5;
    let b = symmetric_basis(a.n, p);
    let q = b.transpose() * m * &b;
    let eig = SymmetricEigen::new(q).eigenvalues;
    Ok((eig.min(), eig.max()))
}

/// Sphere integral of A(grad^{k-1} r^{2k-n}, grad^{k-1} r^{2k-n}).
pub fn sphere_kernel_contraction(a: &SymTensor, d: DimPair) -> Result<f64> {
    let p = (d.k - 1) as usize;
    if a.n != d.n as usize || a.order != 2 * p {
        return Err(Error::Domain("tensor shape does not match (n, 2(k-1))".into()));
    }
    let f = Field::from_profile(&RadialProfile::monomial(1.0, 2 * d.k as i32 - d.n as i32), d.n);
    let comps = derivative_tensor(&f, p);
    let dim = comps.len();
    let mut acc = 0.0;
    for (i, (_, ci)) in comps.iter().enumerate() {
        for (j, (_, cj)) in comps.iter().enumerate() {
            let aij = a.data[i * dim + j];
            if aij != 0.0 {
                acc += aij * ci.mul(cj)?.sphere_integral();
            }
        }
    }
    Ok(acc)
}

/// c with sphere_kernel_contraction(A) = c Tr(A) for every A (rotation invariance).
pub fn sphere_kernel_trace_factor(d: DimPair) -> Result<f64> {
    let p = (d.k - 1) as usize;
    let a = SymTensor::delta_power(d.n as usize, p).symmetrize();
    Ok(sphere_kernel_contraction(&a, d)? / a.symmetrize_and_trace()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    General,
    U0Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDoc {
    pub n: usize,
    pub order: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleDoc {
    pub int_u_2star: f64,
    pub int_u_2star_minus1: f64,
    #[serde(default)]
    pub int_half_lap_km1_sq: Option<f64>,
}

/// Point data of one blow-up configuration. Only the fields used by the
/// (n, k, scenario) branch may be given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCase {
    pub n: u32,
    pub k: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub u0_at_x0: Option<f64>,
    #[serde(default)]
    pub h0_at_x0: Option<f64>,
    #[serde(default)]
    pub rg_at_x0: Option<f64>,
    #[serde(default)]
    pub tr_a_diff: Option<f64>,
    #[serde(default)]
    pub a_diff: Option<TensorDoc>,
    #[serde(default)]
    pub sphere_integral: Option<f64>,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub weyl_b: Option<f64>,
    #[serde(default)]
    pub bubble: Option<BubbleDoc>,
}

impl RateCase {
    pub fn new(n: u32, k: u32, scenario: Scenario) -> Self {
        RateCase {
            n,
            k,
            scenario,
            u0_at_x0: None,
            h0_at_x0: None,
            rg_at_x0: None,
            tr_a_diff: None,
            a_diff: None,
            sphere_integral: None,
            mass: None,
            weyl_b: None,
            bubble: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RateCase = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        DimPair::new(c.n, c.k)?;
        let finite = [c.u0_at_x0, c.h0_at_x0, c.rg_at_x0, c.tr_a_diff, c.sphere_integral, c.mass, c.weyl_b];
        if finite.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite input".into()));
        }
        if let Some(t) = &c.a_diff {
            if t.n > 16 || t.order > 8 || t.n.checked_pow(t.order as u32).map_or(true, |l| l != t.data.len()) {
                return Err(Error::Parse("a_diff tensor has the wrong shape".into()));
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The predicted limit is negative while eps >= 0: no such family.
    Excluded,
    /// The limit vanishes; the formulas do not decide.
    Borderline,
    Allowed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePrediction {
    pub branch: String,
    /// eps ~ c mu^power, times log(1/mu) when `log_factor`.
    pub power: f64,
    pub log_factor: bool,
    pub limit: f64,
    pub verdict: Verdict,
    pub details: BTreeMap<String, f64>,
}

fn verdict(limit: f64, scale: f64) -> Verdict {
    if limit.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        Verdict::Borderline
    } else if limit < 0.0 {
        Verdict::Excluded
    } else {
        Verdict::Allowed
    }
}

fn inconsistent(msg: &str) -> Error {
    Error::Inconsistent(msg.to_string())
}

/// Tr(A_0 - A_g) from exactly one of: tr_a_diff, a_diff, (h0, R_g).
fn trace_input(c: &RateCase, d: DimPair) -> Result<(f64, Option<SymTensor>)> {
    let tensor = match &c.a_diff {
        Some(t) => {
            let t = SymTensor::new(t.n, t.order, t.data.clone())?;
            if t.n != d.n as usize || t.order != 2 * (d.k as usize - 1) {
                return Err(inconsistent("a_diff must have n = n and order 2(k-1)"));
            }
            Some(t)
        }
        None => None,
    };
    let h_form = c.h0_at_x0.is_some() || c.rg_at_x0.is_some();
    let sources = c.tr_a_diff.is_some() as u8 + tensor.is_some() as u8 + h_form as u8;
    if sources != 1 {
        return Err(inconsistent("give exactly one of tr_a_diff, a_diff, or h0_at_x0 with rg_at_x0"));
    }
    if let Some(t) = c.tr_a_diff {
        return Ok((t, None));
    }
    if let Some(t) = tensor {
        return Ok((t.symmetrize_and_trace()?, Some(t)));
    }
    let (h0, rg) = match (c.h0_at_x0, c.rg_at_x0) {
        (Some(h), Some(r)) => (h, r),
        _ => return Err(inconsistent("h0_at_x0 and rg_at_x0 go together")),
    };
    // Tr / n^{k-1} = h0 - coefficient * R_g
    let coef = ratio_f64(threshold_coefficient(d.n, d.k));
    Ok(((d.n as f64).powi(d.k as i32 - 1) * (h0 - coef * rg), None))
}

fn bubble_data(c: &RateCase, d: DimPair) -> Result<BubbleIntegrals> {
    match c.bubble {
        Some(b) => Ok(BubbleIntegrals {
            int_u_2star: b.int_u_2star,
            int_u_2star_minus1: b.int_u_2star_minus1,
            int_half_lap_km1_sq: b.int_half_lap_km1_sq,
            int_grad_km1_sq: None,
            k0: green_kernel_constant(d) * b.int_u_2star_minus1,
        }),
        None => bubble_integrals(d),
    }
}

pub fn rate_predict(c: &RateCase) -> Result<RatePrediction> {
    let d = DimPair::new(c.n, c.k)?;
    let (n, k) = (c.n, c.k);
    let ts = d.two_star_f64();
    let nf = d.nf();
    if c.mass.is_some() && n != 2 * k + 1 {
        return Err(inconsistent("mass is defined only for n = 2k+1"));
    }
    if c.scenario == Scenario::U0Zero && c.u0_at_x0.is_some_and(|u| u != 0.0) {
        return Err(inconsistent("u0_at_x0 must vanish in the u0 = 0 scenario"));
    }
    let b = bubble_data(c, d)?;
    let (s, j) = (b.int_u_2star, b.int_u_2star_minus1);
    if !(s > 0.0) {
        return Err(inconsistent("int |U|^{2*} must be positive"));
    }
    let mut details = BTreeMap::new();
    let gradient_branch = match c.scenario {
        Scenario::General => n >= 2 * k + 4,
        Scenario::U0Zero => n > 2 * k + 2,
    };
    if gradient_branch {
        if c.sphere_integral.is_some() {
            return Err(inconsistent("sphere_integral belongs to n = 2k+2"));
        }
        let (tr, _) = trace_input(c, d)?;
        let i = match b.int_half_lap_km1_sq {
            Some(i) => i,
            None => int_half_lap_sq(d)?,
        };
        let wb = c.weyl_b.unwrap_or(0.0);
        let u0 = if n == 2 * k + 4 && c.scenario == Scenario::General {
            c.u0_at_x0.ok_or_else(|| inconsistent("u0_at_x0 is required at n = 2k+4"))?
        } else {
            0.0
        };
        let a_term = tr * i / nf.powi(k as i32 - 1);
        let u_term = (nf - 2.0 * k as f64) / 2.0 * j * u0;
        let den = nf / (ts * ts) * s;
        let limit = (wb + a_term - u_term) / den;
        details.insert("trace".into(), tr);
        details.insert("a_term".into(), a_term);
        details.insert("u0_term".into(), u_term);
        details.insert("weyl_b".into(), wb);
        let scale = (wb.abs() + a_term.abs() + u_term.abs()) / den;
        return Ok(RatePrediction {
            branch: if c.scenario == Scenario::General { "n>=2k+4" } else { "u0=0,n>2k+2" }.into(),
            power: 2.0,
            log_factor: false,
            limit,
            verdict: verdict(limit, scale),
            details,
        });
    }
    match c.scenario {
        Scenario::General => {
            if c.tr_a_diff.is_some() || c.a_diff.is_some() || c.h0_at_x0.is_some() || c.sphere_integral.is_some() {
                return Err(inconsistent("curvature data is not used for 2k < n < 2k+4"));
            }
            let u0 = c.u0_at_x0.ok_or_else(|| inconsistent("u0_at_x0 is required for 2k < n < 2k+4"))?;
            let limit = -ts * j / s * u0;
            Ok(RatePrediction {
                branch: "2k<n<2k+4".into(),
                power: d.s(),
                log_factor: false,
                limit,
                verdict: verdict(limit, (ts * j / s * u0).abs()),
                details,
            })
        }
        Scenario::U0Zero if n == 2 * k + 2 => {
            let sph = match (c.sphere_integral, &c.a_diff) {
                (Some(v), None) if c.tr_a_diff.is_none() && c.h0_at_x0.is_none() => v,
                (Some(_), _) => return Err(inconsistent("sphere_integral excludes other curvature data")),
                (None, Some(_)) => {
                    let (_, t) = trace_input(c, d)?;
                    sphere_kernel_contraction(&t.expect("tensor present"), d)?
                }
                (None, None) => {
                    let (tr, _) = trace_input(c, d)?;
                    sphere_kernel_trace_factor(d)? * tr
                }
            };
            let cj = ts * green_kernel_constant(d) * j;
            let a = cj * cj / (nf * s);
            let limit = a * sph;
            details.insert("a".into(), a);
            details.insert("sphere_integral".into(), sph);
            Ok(RatePrediction {
                branch: "u0=0,n=2k+2".into(),
                power: 2.0,
                log_factor: true,
                limit,
                verdict: verdict(limit, (a * sph).abs()),
                details,
            })
        }
        Scenario::U0Zero => {
            let m = c.mass.ok_or_else(|| inconsistent("mass is required for n = 2k+1"))?;
            let limit = -ts * j * j / s * m;
            details.insert("mass".into(), m);
            Ok(RatePrediction {
                branch: "u0=0,n=2k+1".into(),
                power: 1.0,
                log_factor: false,
                limit,
                verdict: verdict(limit, (ts * j * j / s * m).abs()),
                details,
            })
        }
    }
}

pub fn rate_report(c: &RateCase) -> Result<CheckReport> {
    let p = rate_predict(c)?;
    let mut r = CheckReport::flag("rates.predict", p.limit, 0.0, true, Provenance::Paper)
        .input("n", c.n)
        .input("k", c.k)
        .detail("branch", p.branch.clone())
        .detail("power", p.power)
        .detail("log_factor", p.log_factor)
        .detail("verdict", serde_json::to_value(p.verdict).expect("serializes"));
    for (key, v) in &p.details {
        r = r.detail(key, *v);
    }
    Ok(r)
}

fn sign_verdict(s: f64, excluded_when_positive: bool) -> Verdict {
    if s == 0.0 {
        Verdict::Borderline
    } else if (s > 0.0) == excluded_when_positive {
        Verdict::Excluded
    } else {
        Verdict::Allowed
    }
}

/// Signed-input grid over every obstruction branch: nine configurations, each
/// with the deciding quantity at -1, 0, +1, paired with the expected verdict.
pub fn truth_table_cases() -> Vec<(RateCase, Verdict)> {
    let (kp2, _) = kappa_values(2).expect("k = 2");
    let (_, k1) = kappa_values(1).expect("k = 1");
    let c82 = ratio_f64(threshold_coefficient(8, 2));
    let c102 = ratio_f64(threshold_coefficient(10, 2));
    let c62 = ratio_f64(threshold_coefficient(6, 2));
    let delta = |n: usize, s: f64| Some(TensorDoc { n, order: 2, data: SymTensor::delta_power(n, 1).scale(s).data });
    let mut out = Vec::new();
    for s in [-1.0, 0.0, 1.0] {
        let mut c = RateCase::new(5, 2, Scenario::General);
        c.u0_at_x0 = Some(s);
        out.push((c, sign_verdict(s, true)));
        let mut c = RateCase::new(6, 1, Scenario::General);
        c.u0_at_x0 = Some(1.0);
        c.tr_a_diff = Some(k1 + s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(9, 2, Scenario::General);
        c.tr_a_diff = Some(s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(5, 2, Scenario::U0Zero);
        c.mass = Some(s);
        out.push((c, sign_verdict(s, true)));
        let mut c = RateCase::new(6, 2, Scenario::U0Zero);
        c.a_diff = delta(6, s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(8, 2, Scenario::U0Zero);
        c.a_diff = delta(8, s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(8, 2, Scenario::General);
        c.u0_at_x0 = Some(1.0);
        c.rg_at_x0 = Some(3.0);
        c.h0_at_x0 = Some(c82 * 3.0 + kp2 + s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(10, 2, Scenario::General);
        c.rg_at_x0 = Some(-2.0);
        c.h0_at_x0 = Some(c102 * -2.0 + s);
        out.push((c, sign_verdict(s, false)));
        let mut c = RateCase::new(6, 2, Scenario::U0Zero);
        c.rg_at_x0 = Some(1.5);
        c.h0_at_x0 = Some(c62 * 1.5 + s);
        out.push((c, sign_verdict(s, false)));
    }
    out
}

/// Number of truth-table cases whose verdict differs from the expected one,
/// plus the exact k = 1, n = 6 threshold coefficient.
pub fn truth_table_report() -> Result<CheckReport> {
    let cases = truth_table_cases();
    let mut wrong = 0u64;
    let mut first = None;
    for (i, (c, want)) in cases.iter().enumerate() {
        let ok = rate_predict(c).map(|p| p.verdict == *want).unwrap_or(false);
        if !ok {
            wrong += 1;
            first.get_or_insert(i as u64);
        }
    }
    let coef = threshold_coefficient(6, 1);
    let coef_ok = coef == Ratio::new(1, 5);
    let mut r = CheckReport::flag("rates.truth_table", wrong as f64, 0.0, wrong == 0 && coef_ok, Provenance::Paper)
        .input("cases", cases.len() as u64)
        .detail("threshold_coefficient_6_1", format!("{}/{}", coef.numer(), coef.denom()));
    if let Some(i) = first {
        r = r.detail("first_mismatch", i);
    }
    Ok(r)
}

/// Family of profiles u_alpha(r), r the distance to the concentration point.
pub struct BubbleFamily<'a> {
    pub d: DimPair,
    pub mus: Vec<f64>,
    pub u0_sup: f64,
    pub field: Box<dyn Fn(usize, f64) -> f64 + 'a>,
}

/// Smallest C per member with |u| <= C (|u0|^{(2*-1)^2} + (mu/(mu^2 + a r^2))^{(n-2k)/2})
/// over radii both absolute and relative to mu.
pub fn pointwise_control_constant(fam: &BubbleFamily) -> Result<Vec<f64>> {
    if fam.mus.windows(2).any(|w| !(w[1] < w[0])) || fam.mus.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Domain("mu values must be positive and strictly decreasing".into()));
    }
    let d = fam.d;
    let a = bubble_scale(d);
    let s = d.s();
    let base = fam.u0_sup.abs().powf((d.two_star_f64() - 1.0).powi(2));
    let abs_r = crate::bubble::log_radii(1e-8, 10.0, 400);
    let rel_t = crate::bubble::log_radii(1e-3, 1e3, 200);
    let mut out = Vec::with_capacity(fam.mus.len());
    for (al, &mu) in fam.mus.iter().enumerate() {
        let mut c = 0.0f64;
        let pts = std::iter::once(0.0).chain(abs_r.iter().copied()).chain(rel_t.iter().map(|t| t * mu));
        for r in pts {
            let bound = base + (mu / (mu * mu + a * r * r)).powf(s);
            c = c.max((fam.field)(al, r).abs() / bound);
        }
        out.push(c);
    }
    Ok(out)
}
