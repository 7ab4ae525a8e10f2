//! Acceptance criteria, one PASS/FAIL line each, with the runtime bound.
//!
//! Runs directly against the library with literal tolerances, independent of
//! the suite configuration defaults.

use polycrit::bubble::{bubble_residual_value, farfield_normalization_check, log_radii, standard_bubble, BubbleParams};
use polycrit::constants::flux_identity_check;
use polycrit::green::construct::relative_deviation;
use polycrit::green::giraud::{expected_exponent, giraud_radial, random_pairs, GiraudCase};
use polycrit::green::hardy_potential::hardy_green_estimate;
use polycrit::green::{
    fourier_green_oracle, neumann_green, representation_check, Cutoff, HardyPotential, KernelTable, OperatorSpec,
    Shape, TorusGrid, TrigPoly,
};
use polycrit::hardy::{classical_constant, coercivity_loss_lambda, hardy_best_constant, RayleighProblem};
use polycrit::pohozaev::{commutator_defect, d_r_invariant, pohozaev_sides};
use polycrit::radial::field::{multi_indices, Field};
use polycrit::radial::{sphere_moment_mc, sphere_moment_report};
use polycrit::rates::{kappa_values, radial_trace_identity, rate_predict, threshold_coefficient, truth_table_cases, weyl_bubble_product};
use polycrit::suite::pohozaev_cases;
use polycrit::tensor::{SymTensor, WeylTensor};
use polycrit::DimPair;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

const SEED: u64 = 2024;

/// Criteria whose failure is a documented conflict: the line still says FAIL,
/// but the process exit status is not affected.
const KNOWN: &[(u8, &str)] = &[(
    10,
    "trace identity at (k,n) = (3,10): the constant 1/n^(k-1) misses the direct contraction by about 5%, the symmetric-moment constant matches",
)];

struct Outcome {
    pass: bool,
    summary: String,
    /// The failure is confined to the part listed in KNOWN.
    known_part_only: bool,
}

fn dp(n: u32, k: u32) -> DimPair {
    DimPair::new(n, k).unwrap()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn c1() -> Outcome {
    let (_, k1) = kappa_values(1).unwrap();
    let (_, k2) = kappa_values(2).unwrap();
    let e1 = (k1 - 2.0).abs() / 2.0;
    let want = 2.0 * 30f64.sqrt();
    let e2 = (k2 - want).abs() / want;
    Outcome { known_part_only: false, pass: e1 < 1e-6 && e2 < 1e-6, summary: format!("kappa_1 = {k1:.15}, kappa_2 = {k2:.15} (rel {e1:.1e}, {e2:.1e})") }
}

const PAIRS: [(u32, u32); 8] = [(3, 1), (4, 1), (5, 1), (5, 2), (6, 2), (7, 2), (7, 3), (9, 4)];

fn c2() -> Outcome {
    let radii = log_radii(1e-3, 1e3, 241);
    let worst = PAIRS
        .iter()
        .map(|&(n, k)| bubble_residual_value(&BubbleParams::unit(dp(n, k)), &radii).unwrap())
        .fold(0.0f64, f64::max);
    Outcome { known_part_only: false, pass: worst < 1e-10, summary: format!("max relative residual {worst:.2e} over 8 pairs") }
}

fn c3() -> Outcome {
    let mut count = 0;
    let mut ok = true;
    for k in 1..=6u32 {
        for n in 2 * k + 1..=16 {
            ok &= flux_identity_check(dp(n, k)).unwrap().pass;
            count += 1;
        }
    }
    Outcome { known_part_only: false, pass: ok, summary: format!("{count} pairs, exact rational equality") }
}

fn c4() -> Outcome {
    let mut worst = 0.0f64;
    let mut j3 = f64::NAN;
    for &(n, k) in &PAIRS {
        let r = farfield_normalization_check(dp(n, k)).unwrap();
        worst = worst.max(r.value);
        if (n, k) == (3, 1) {
            j3 = r.details["int_U_2star_minus1"].as_f64().unwrap();
        }
    }
    let want = 4.0 * PI * 3f64.sqrt();
    let e3 = (j3 - want).abs() / want;
    Outcome { known_part_only: false,
        pass: worst < 1e-8 && e3 < 1e-8,
        summary: format!("max rel {worst:.2e}; n=3,k=1 integral {j3:.15} vs 4 pi sqrt 3 (rel {e3:.1e})"),
    }
}

fn c5() -> Outcome {
    let mut worst_res = 0.0f64;
    let cases = pohozaev_cases().unwrap();
    for c in &cases {
        worst_res = worst_res.max(pohozaev_sides(c).unwrap().residual());
    }
    let eps_set: std::collections::BTreeSet<u64> = cases.iter().map(|c| c.eps.to_bits()).collect();
    let shapes = cases.iter().any(|c| c.r_in == 0.0) && cases.iter().any(|c| c.r_in > 0.0);
    let (mut dr, mut spread) = (0.0f64, 0.0f64);
    for (n, k) in [(3, 1), (5, 2), (7, 3)] {
        let r = d_r_invariant(dp(n, k), &[0.05, 0.3, 1.0, 4.0, 20.0]).unwrap();
        dr = dr.max(r.value);
        spread = spread.max(r.details["spread"].as_f64().unwrap());
    }
    let mut comm = 0.0f64;
    let mut count = 0;
    for n in 3..=5u32 {
        for alpha in multi_indices(n as usize, 6) {
            let v = Field::monomial(&alpha, 1.0, n);
            for l in 0..=2 * ((n - 1) / 2) {
                comm = comm.max(commutator_defect(&v, l));
                count += 1;
            }
        }
    }
    Outcome { known_part_only: false,
        pass: cases.len() == 6 && eps_set.len() == 2 && shapes && worst_res < 1e-8 && dr < 1e-8 && spread < 1e-10 && comm <= 1e-12,
        summary: format!(
            "6 cases max residual {worst_res:.2e}; D_r max {dr:.2e}, spread {spread:.2e}; commutator {count} cases max {comm:.1e}"
        ),
    }
}

fn c6() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, k, tol) in [(3, 1, 0.02), (10, 1, 0.02), (5, 2, 0.05)] {
        let d = dp(n, k);
        let p = RayleighProblem::with_points(d, 3200).unwrap();
        let c = hardy_best_constant(&p).unwrap().constant;
        let e = classical_constant(d).unwrap();
        let rel = (c - e).abs() / e;
        pass &= rel < tol;
        parts.push(format!("({n},{k}) {c:.6} vs {e:.6} rel {rel:.2e}"));
    }
    Outcome { known_part_only: false, pass, summary: parts.join("; ") }
}

fn c7() -> Outcome {
    let g = TorusGrid::new(3, 2.0 * PI, 32).unwrap();
    let s = OperatorSpec::new(dp(3, 1), vec![1.0]).unwrap();
    let cut = Cutoff::for_grid(&g);
    let sources = [[1, 2, 3], [11, 1, 16], [17, 24, 6]];
    let mut dev = 0.0f64;
    let mut tables = Vec::new();
    for x in &sources {
        let ng = neumann_green(&g, &s, x, 2, &cut).unwrap();
        let or = fourier_green_oracle(&g, &s, x).unwrap();
        dev = dev.max(relative_deviation(&ng.table, &or, 4.0 * g.h()).unwrap());
        tables.push(ng.table);
    }
    let mut r = rng(7);
    let mut rep = 0.0f64;
    for _ in 0..5 {
        let phi = TrigPoly::random(3, 3, 4, &mut r);
        rep = rep.max(representation_check(&tables[0], &s, &phi).unwrap().value);
    }
    let sym = KernelTable::symmetry_defect(&tables).unwrap();
    Outcome { known_part_only: false,
        pass: dev < 0.05 && rep < 1e-3 && sym < 1e-3,
        summary: format!("deviation {dev:.2e}, representation {rep:.2e}, symmetry {sym:.2e}"),
    }
}

fn c8() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    let mut count = 0;
    for below in [true, false] {
        for (a, b) in random_pairs(3, 10, below, &mut r) {
            let fit = giraud_radial(&GiraudCase::new(3, a, b, 1.0, 64).unwrap()).unwrap();
            worst = worst.max((fit.exponent - expected_exponent(3, a, b)).abs());
            count += 1;
        }
    }
    Outcome { known_part_only: false, pass: count == 20 && worst <= 0.2, summary: format!("{count} pairs, max exponent error {worst:.3}") }
}

fn c9() -> Outcome {
    let g = TorusGrid::new(3, 2.0 * PI, 32).unwrap();
    let spec = |lambda: f64| {
        let p = HardyPotential::new(lambda, vec![0, 0, 0], Shape::Constant(1.0)).unwrap();
        OperatorSpec::new(dp(3, 1), vec![1.0]).unwrap().with_potential(p)
    };
    let lh = coercivity_loss_lambda(&g, &spec(1.0)).unwrap().unwrap();
    let gamma = 0.5;
    let mut stars = Vec::new();
    let mut min_exp = f64::INFINITY;
    for f in [0.0, 0.1, 0.3] {
        let e = hardy_green_estimate(&g, &spec(f * lh), gamma).unwrap();
        stars.push(e.c_star);
        min_exp = min_exp.min(e.exponent);
    }
    let hi = stars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = stars.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    Outcome { known_part_only: false,
        pass: stars.iter().all(|c| c.is_finite()) && ratio < 3.0 && min_exp >= -gamma - 0.1,
        summary: format!("lambda_H {lh:.4}, C* {stars:.4?}, ratio {ratio:.3}, min exponent {min_exp:.3}"),
    }
}

fn c10() -> Outcome {
    let mut r = rng(10);
    let mut parts = Vec::new();
    let mut pass = true;
    let mut only_known = true;
    for (k, n) in [(2u32, 8u32), (3, 10)] {
        let mut worst = 0.0f64;
        let mut sym = 0.0f64;
        for _ in 0..10 {
            let a = SymTensor::random_block_symmetric(n as usize, (k - 1) as usize, &mut r);
            let rep = radial_trace_identity(&a, dp(n, k)).unwrap();
            worst = worst.max(rep.value);
            sym = sym.max(rep.details["symmetric_moment_rel_error"].as_f64().unwrap());
        }
        if worst >= 1e-6 {
            pass = false;
            only_known &= (k, n) == (3, 10);
        }
        parts.push(format!("(k,n)=({k},{n}) rel {worst:.2e} [symmetric-moment form {sym:.1e}]"));
    }
    let mut w = 0.0f64;
    for i in 0..20 {
        let (n, k) = [(7u32, 2u32), (8, 2), (9, 3)][i % 3];
        let d = dp(n, k);
        let t = WeylTensor::random_unit(n as usize, &mut r).unwrap();
        let u = standard_bubble(&BubbleParams::with_mu(d, [1.0, 0.5][i % 2]).unwrap());
        w = w.max(weyl_bubble_product(&t, &u, d).unwrap().abs());
    }
    if w >= 1e-8 {
        pass = false;
        only_known = false;
    }
    parts.push(format!("Weyl product max {w:.1e} (unit-norm W)"));
    Outcome { pass, summary: parts.join("; "), known_part_only: !pass && only_known }
}

fn c11() -> Outcome {
    let cases = truth_table_cases();
    let wrong = cases.iter().filter(|(c, v)| rate_predict(c).map(|p| p.verdict != *v).unwrap_or(true)).count();
    let coef = threshold_coefficient(6, 1);
    Outcome { known_part_only: false,
        pass: cases.len() == 27 && wrong == 0 && coef == Ratio::new(1, 5),
        summary: format!("{} cases, {wrong} wrong; k=1, n=6 coefficient {coef}", cases.len()),
    }
}

fn c12() -> Outcome {
    let g = sphere_moment_report(8, 6);
    let mut r = rng(12);
    let mut z = 0.0f64;
    let mut count = 0;
    for n in 2..=8 {
        let (zn, c) = sphere_moment_mc(n, 6, 1_000_000, &mut r);
        z = z.max(zn);
        count += c;
    }
    Outcome { known_part_only: false,
        pass: g.value <= 1e-12 && z <= 4.0,
        summary: format!("Gamma form max rel {:.1e}; Monte Carlo {count} moments, max |z| {z:.2}", g.value),
    }
}

fn main() {
    let criteria: [(u8, &str, f64, fn() -> Outcome); 12] = [
        (1, "kappa constants", 5.0, c1),
        (2, "bubble PDE residual", 5.0, c2),
        (3, "kernel constant flux identity", 1.0, c3),
        (4, "far-field / K0 consistency", 10.0, c4),
        (5, "Pohozaev identity, D_r, commutator", 30.0, c5),
        (6, "Hardy best constants", 60.0, c6),
        (7, "Green construction", 120.0, c7),
        (8, "Giraud exponents", 60.0, c8),
        (9, "weighted Hardy-potential estimate", 120.0, c9),
        (10, "trace identity and Weyl product", 30.0, c10),
        (11, "rate truth table", 1.0, c11),
        (12, "sphere moments", 30.0, c12),
    ];
    let mut unexpected = 0;
    for (id, title, budget, f) in criteria {
        let start = Instant::now();
        let o = f();
        let t = start.elapsed().as_secs_f64();
        let pass = o.pass && t < budget;
        let known = KNOWN.iter().find(|(k, _)| *k == id).filter(|_| o.known_part_only && t < budget);
        println!(
            "{} criterion {id:>2} {title}: {} [{t:.2} s of {budget} s]{}",
            if pass { "PASS" } else { "FAIL" },
            o.summary,
            match (pass, known) {
                (false, Some((_, why))) => format!(" (known: {why})"),
                _ => String::new(),
            }
        );
        if !pass && known.is_none() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
