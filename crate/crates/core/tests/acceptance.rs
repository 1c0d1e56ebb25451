//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL`
//! line with the measured quantity next to its pinned tolerance; the
//! process exits non-zero if any line is `FAIL`.

mod common;

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circsplit::ap::{
    ap_denominator, classify_theta, fk_eval, g_value, partition_ap_with, taylor_split, APGenerators,
    AlgoConfig, ThetaClass, ALPHA,
};
use circsplit::discrepancy::{check_partial_coloring, partial_color, ConstraintSystem, WalkConfig};
use circsplit::lacunary::{
    alpha_of_family, default_moment_order, exceed_threshold, gen_lacunary, gen_conformant_family,
    normalized_moment, moment_closed_form, moment_quadrature, SampledTable,
};
use circsplit::products::{product_spectral_ratio, partition_product, ProductKind, ProductSigning, ProductSpec};
use circsplit::spectral::{limit_effective_resistance, partition_error_floor};
use circsplit::{CirculantGraph, Signing};

use common::{brute_force_optimum, dense_pencil_max, next_prime_above, product_laplacians};

/// Criterion 1: `ratio·√k` budget and the allowed growth between steps.
const SCALING_BUDGET: f64 = 60.0;
const SCALING_DRIFT: f64 = 1.5;
/// Criterion 2: algorithm vs exhaustive optimum.
const OPTIMALITY_FACTOR: f64 = 8.0;
const MOMENT_REL_TOL: f64 = 1e-8;
const MOMENT_SPREAD_TOL: f64 = 2e-8;
const ER_TOL: f64 = 1e-9;
const LIMIT_ER_TOL: f64 = 1e-8;
const RESISTANCE_BUDGET: f64 = 4.0;
const COLORING_SUCCESSES: usize = 95;
const PRODUCT_ORACLE_TOL: f64 = 1e-8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ap_ratio(spec: &APGenerators, seed: u64) -> f64 {
    let out = partition_ap_with(spec, &AlgoConfig::desk(spec.k()), &mut seeded(seed), false).unwrap();
    out.spectral.certified_bound
}

fn scaling() -> Outcome {
    let mut worst = 0.0f64;
    let mut drift_ok = true;
    let mut notes = Vec::new();
    for (a, b) in [(0u64, 1u64), (3, 7)] {
        let mut prev: Option<f64> = None;
        let mut seq = Vec::new();
        for k in [16usize, 32, 64, 128, 256] {
            let n = next_prime_above(20 * k as u64 * b + a * k as u64);
            let spec = APGenerators::new(a, b, k, n).unwrap();
            let mut scaled: Vec<f64> = (0..3).map(|seed| ap_ratio(&spec, seed) * (k as f64).sqrt()).collect();
            worst = scaled.iter().fold(worst, |m, &v| m.max(v));
            scaled.sort_by(f64::total_cmp);
            let median = scaled[1];
            if let Some(p) = prev {
                drift_ok &= median <= SCALING_DRIFT * p;
            }
            prev = Some(median);
            seq.push(format!("{median:.2}"));
        }
        notes.push(format!("({a},{b}): [{}]", seq.join(", ")));
    }
    outcome(
        worst <= SCALING_BUDGET && drift_ok,
        format!(
            "max ratio*sqrt(k) {worst:.3} <= {SCALING_BUDGET}; median sequence within x{SCALING_DRIFT}: {}",
            notes.join(" ")
        ),
    )
}

fn optimality_and_floor() -> (Outcome, Outcome) {
    let mut worst_factor = 0.0f64;
    let mut floor_ok = true;
    let mut worst_floor_margin = f64::INFINITY;
    for k in 4..=12usize {
        let n = 4 * k as u64 + 1;
        let spec = APGenerators::new(0, 1, k, n).unwrap();
        let algo = partition_ap_with(&spec, &AlgoConfig::desk(k), &mut seeded(k as u64), false)
            .unwrap()
            .spectral
            .max_ratio;
        let g = CirculantGraph::canonical(n, &(1..=k as i64).collect::<Vec<_>>()).unwrap();
        let (opt, _) = brute_force_optimum(&g);
        worst_factor = worst_factor.max(algo / opt);
        let floor = partition_error_floor(2 * k as u64);
        floor_ok &= opt >= floor;
        worst_floor_margin = worst_floor_margin.min(opt / floor);
    }
    (
        outcome(
            worst_factor <= OPTIMALITY_FACTOR,
            format!("worst algorithm/optimum {worst_factor:.3} <= {OPTIMALITY_FACTOR} over k = 4..12"),
        ),
        outcome(
            floor_ok,
            format!("smallest optimum/(1/(2 sqrt(2k))) {worst_floor_margin:.3} >= 1"),
        ),
    )
}

fn moments() -> Outcome {
    let mut rng = seeded(4);
    let mut worst_rel = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut cases = 0;
    for k in 2..=6usize {
        for p in [2u64, 4, 6, 8] {
            let fam = gen_lacunary(k, p as f64).unwrap();
            assert!(fam.validity_bound().is_some_and(|v| v >= p));
            let exact = moment_closed_form(k, p).unwrap().to_f64().unwrap();
            let mut values = Vec::new();
            for _ in 0..8 {
                let x = Signing::new((0..k).map(|_| if rng.random() { 1 } else { -1 }).collect()).unwrap();
                values.push(moment_quadrature(&fam, &x, p, 1e-10 * exact).unwrap());
            }
            for v in &values {
                worst_rel = worst_rel.max((v - exact).abs() / exact);
            }
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            worst_spread = worst_spread.max(hi - lo);
            cases += 1;
        }
    }
    outcome(
        worst_rel <= MOMENT_REL_TOL && worst_spread <= MOMENT_SPREAD_TOL,
        format!(
            "{cases} (K,p) cases: relative error {worst_rel:.2e} <= {MOMENT_REL_TOL:e}, signing spread {worst_spread:.2e} <= {MOMENT_SPREAD_TOL:e}"
        ),
    )
}

fn normalization() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [216usize, 729, 1296] {
        let p = default_moment_order(k);
        let r = normalized_moment(k, p).unwrap();
        ok &= r.within;
        parts.push(format!("K={k} p={p}: {:.4} in [{:.4}, {:.4}]", r.ratio, r.lower, r.upper));
    }
    outcome(ok, parts.join("; "))
}

fn anti_concentration() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [8usize, 10, 12] {
        let fam = gen_conformant_family(k).unwrap();
        let table = SampledTable::new(&fam, 100_000, &mut seeded(k as u64)).unwrap();
        let floor = 1.0 / (4.0 * k as f64);
        let mut min_frac = f64::INFINITY;
        table.for_each_class(|_, stats| {
            debug_assert_eq!(stats.threshold, exceed_threshold(k));
            min_frac = min_frac.min(stats.exceed_fraction);
        });
        ok &= min_frac >= floor;
        parts.push(format!("K={k}: min fraction {min_frac:.4} >= {floor:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn resistance() -> Outcome {
    let mut worst_closed = 0.0f64;
    for n in 4..=64u64 {
        let cycle = CirculantGraph::canonical(n, &[1]).unwrap();
        worst_closed = worst_closed.max((cycle.edge_effective_resistance(1).unwrap() - (n - 1) as f64 / n as f64).abs());
        let all: Vec<i64> = (1..=((n - 1) / 2) as i64).collect();
        if n % 2 == 0 {
            // the antipodal generator is excluded, so only odd n give K_n
            continue;
        }
        let complete = CirculantGraph::canonical(n, &all).unwrap();
        for er in complete.edge_effective_resistances() {
            worst_closed = worst_closed.max((er - 2.0 / n as f64).abs());
        }
    }
    let mut rng = seeded(7);
    let mut worst_foster = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let n = rng.random_range(5..=500u64);
        let k = rng.random_range(1..=6usize);
        let gens: Vec<i64> = (0..k).map(|_| rng.random_range(1..((n + 1) / 2)) as i64).collect();
        let Ok(g) = CirculantGraph::canonical(n, &gens) else {
            continue;
        };
        let total: f64 = g.edge_effective_resistances().iter().sum();
        worst_foster = worst_foster.max((n as f64 * total - (n - 1) as f64).abs());
        tested += 1;
    }
    let limit = limit_effective_resistance(&[1, 2], 1, 1e-13).unwrap();
    let limit_err = (limit - 1.0 / 5f64.sqrt()).abs();
    let mut worst_budget = 0.0f64;
    for k in 4..=12usize {
        let fam = gen_lacunary(k, 2.0).unwrap();
        let alpha = alpha_of_family(&fam, 1e-10).unwrap();
        worst_budget = worst_budget.max(k as f64 * alpha);
    }
    for k in 4..=7usize {
        let fam = gen_conformant_family(k).unwrap();
        let alpha = alpha_of_family(&fam, 1e-10).unwrap();
        worst_budget = worst_budget.max(k as f64 * alpha);
    }
    outcome(
        worst_closed <= ER_TOL && worst_foster <= ER_TOL && limit_err <= LIMIT_ER_TOL && worst_budget <= RESISTANCE_BUDGET,
        format!(
            "closed forms {worst_closed:.1e}, Foster {worst_foster:.1e} <= {ER_TOL:e}; limit (1,2) error {limit_err:.1e} <= {LIMIT_ER_TOL:e}; max K*alpha {worst_budget:.4} <= {RESISTANCE_BUDGET}"
        ),
    )
}

fn coloring() -> Outcome {
    let (n, m, c, delta) = (64usize, 128usize, 4.0, 1.0 / 64.0);
    let cfg = WalkConfig::new(delta).unchecked().with_restart_cap(20);
    let mut rng = seeded(8);
    let mut successes = 0;
    let mut verified = 0;
    for _ in 0..100 {
        let vectors: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let sys = ConstraintSystem::new(vectors, vec![c; m]).unwrap();
        let x0 = vec![0.0; n];
        if let Ok(out) = partial_color(&sys, &x0, &cfg, &mut rng) {
            successes += 1;
            if check_partial_coloring(&sys, &x0, &out.x, delta).passed() {
                verified += 1;
            }
        }
    }
    outcome(
        successes >= COLORING_SUCCESSES && verified == successes,
        format!("{successes}/100 succeeded (need {COLORING_SUCCESSES}), {verified} passed recomputation"),
    )
}

fn products() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let cart = ProductSpec::new(ProductKind::Cartesian, 64, vec![4, 8]).unwrap();
    let out = partition_product(&cart, AlgoConfig::desk, &mut seeded(9)).unwrap();
    let factor_max = out.factor_ratios.iter().cloned().fold(0.0, f64::max);
    let budget = 60.0 / 2.0;
    ok &= out.report.max_ratio <= budget && out.report.max_ratio <= factor_max + 1e-12;
    parts.push(format!(
        "Cartesian (4,8): {:.4} <= min({budget}, factor max {factor_max:.4})",
        out.report.max_ratio
    ));
    for ks in [vec![2usize, 2], vec![2, 4]] {
        let spec = ProductSpec::new(ProductKind::Tensor, 16, ks.clone()).unwrap();
        let budget = 120.0 / spec.k_product().sqrt();
        let mut worst_oracle = 0.0f64;
        let mut worst_ratio = 0.0f64;
        let mut rng = seeded(10);
        for trial in 0..4 {
            let per: Vec<Signing> = ks
                .iter()
                .map(|&k| {
                    if trial == 0 {
                        Signing::all_positive(k)
                    } else {
                        Signing::new((0..k).map(|_| if rng.random() { 1 } else { -1 }).collect()).unwrap()
                    }
                })
                .collect();
            let signs = ProductSigning::new(&spec, per).unwrap();
            let enumerated = product_spectral_ratio(&spec, &signs).unwrap().max_ratio;
            let (l, d) = product_laplacians(&spec, &signs);
            worst_oracle = worst_oracle.max((enumerated - dense_pencil_max(&l, &d)).abs());
        }
        let out = partition_product(&spec, AlgoConfig::desk, &mut seeded(11)).unwrap();
        worst_ratio = worst_ratio.max(out.report.max_ratio);
        ok &= worst_ratio <= budget && worst_oracle <= PRODUCT_ORACLE_TOL;
        parts.push(format!(
            "tensor {ks:?}: {worst_ratio:.4} <= {budget:.2}, oracle gap {worst_oracle:.1e} <= {PRODUCT_ORACLE_TOL:e}"
        ));
    }
    outcome(ok, parts.join("; "))
}

fn analytic_bounds() -> Outcome {
    let mut rng = seeded(12);
    let mut failures = Vec::new();

    // denominator bound away from the near-zero class
    let mut worst = f64::INFINITY;
    for (k, a, b) in [(16usize, 0u64, 1u64), (64, 3, 7), (256, 5, 11)] {
        let floor = ALPHA * ALPHA * k as f64 / 96.0;
        let mut seen = 0;
        while seen < 10_000 {
            let theta = rng.random_range(0.0..TAU);
            if classify_theta(theta, b, k).0 != ThetaClass::Theta1 {
                continue;
            }
            seen += 1;
            worst = worst.min(ap_denominator(a, b, k, theta) / floor);
        }
    }
    if worst < 1.0 {
        failures.push(format!("denominator/floor {worst:.3}"));
    }

    // f_k decreasing on (0, 3/k]
    for k in [4usize, 16, 64, 256] {
        let step = 3.0 / k as f64 / 1000.0;
        let vals: Vec<f64> = (1..=1000).map(|i| fk_eval(k, i as f64 * step)).collect();
        if vals.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("f_{k} not decreasing"));
        }
    }

    // f_k away from zero
    let mut worst_fk = 0.0f64;
    for k in [16usize, 64, 256] {
        let lo = ALPHA / k as f64;
        for _ in 0..10_000 {
            let t = rng.random_range(lo..TAU - lo);
            worst_fk = worst_fk.max(fk_eval(k, t) / (k * k) as f64);
        }
    }
    if worst_fk > 0.97 {
        failures.push(format!("f_k/k^2 {worst_fk:.4}"));
    }

    // near-zero expansion ratio
    let mut worst_g = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(16..=256usize);
        let a = rng.random_range(0..50u64);
        let b = rng.random_range(1..20u64);
        let spec = APGenerators::new(a, b, k, next_prime_above(2 * (a + b * k as u64) + 1)).unwrap();
        let x = Signing::new((0..k).map(|_| if rng.random() { 1 } else { -1 }).collect()).unwrap();
        let hat = rng.random_range(-ALPHA / k as f64..ALPHA / k as f64);
        let theta = (hat + TAU * rng.random_range(0..b) as f64) / b as f64;
        let split = taylor_split(&x, &spec, theta).unwrap();
        let a_theta = a as f64 * theta;
        let ratio = (g_value(a_theta, &split.beta) / g_value(a_theta, &split.beta_ref)).abs();
        worst_g = worst_g.max(ratio / split.gamma());
    }
    if worst_g > 13.0 {
        failures.push(format!("|g/g'|/gamma {worst_g:.3}"));
    }

    // derivative bound for random sign trig polynomials
    let mut worst_bern = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=128usize);
        let c: Vec<f64> = (0..k).map(|_| if rng.random() { 1.0 } else { -1.0 }).collect();
        let s: Vec<f64> = (0..k).map(|_| if rng.random() { 1.0 } else { -1.0 }).collect();
        let m = 64 * k;
        let (mut top, mut top_d) = (0.0f64, 0.0f64);
        for i in 0..m {
            let th = TAU * i as f64 / m as f64;
            let (mut v, mut d) = (0.0, 0.0);
            for j in 0..k {
                let f = (j + 1) as f64;
                let (sn, cs) = (f * th).sin_cos();
                v += c[j] * cs + s[j] * sn;
                d += f * (s[j] * cs - c[j] * sn);
            }
            top = top.max(v.abs());
            top_d = top_d.max(d.abs());
        }
        worst_bern = worst_bern.max(top_d / (k as f64 * top));
    }
    if worst_bern > 1.02 {
        failures.push(format!("Bernstein {worst_bern:.4}"));
    }

    outcome(
        failures.is_empty(),
        format!(
            "denominator/floor min {worst:.3} >= 1; f_k monotone; f_k/k^2 max {worst_fk:.4} <= 0.97; |g/g'|/gamma max {worst_g:.3} <= 13; |T'|/(k|T|) max {worst_bern:.4} <= 1.02{}",
            if failures.is_empty() { String::new() } else { format!(" [{}]", failures.join(", ")) }
        ),
    )
}

fn report(id: u32, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    finish(id, name, limit, start.elapsed(), out)
}

fn finish(id: u32, name: &str, limit: Duration, took: Duration, out: Outcome) -> bool {
    let on_time = took <= limit;
    let passed = out.passed && on_time;
    println!(
        "criterion {id:>2} {:<4} {name}: {} ({:.1}s, limit {}s)",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    passed
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut all = true;
    all &= report(1, "scaling", min(25), scaling);

    let start = Instant::now();
    let (opt, floor) = optimality_and_floor();
    let took = start.elapsed();
    all &= finish(2, "optimality factor", min(2), took, opt);
    all &= finish(3, "error floor", min(2), took, floor);

    all &= report(4, "moment identity", min(1), moments);
    all &= report(5, "moment normalization", min(1), normalization);
    all &= report(6, "anti-concentration", min(10), anti_concentration);
    all &= report(7, "effective resistance", min(3), resistance);
    all &= report(8, "partial coloring", min(5), coloring);
    all &= report(9, "products", min(5), products);
    all &= report(10, "analytic bounds", min(3), analytic_bounds);
    if !all {
        std::process::exit(1);
    }
}
