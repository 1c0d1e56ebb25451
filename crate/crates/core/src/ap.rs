//! Splitting circulants whose generators form an arithmetic progression
//! `a + b, a + 2b, …, a + kb`.
//!
//! The signing is found by iterated partial coloring against two constraint
//! families: trigonometric rows `cos(sθ)`, `sin(sθ)` on the grid
//! `θ = 2πj/(7k)`, which control angles where `bθ` is far from `0`, and
//! monomial rows `(s/k)^l`, which control the Taylor expansion near `0`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{mul_mod, one_minus_cos, reduce_angle, turn_to_radians};
use crate::discrepancy::{iterate_to_full_signing, ConstraintSystem, LeftoverRule, RoundSummary, StepRule, WalkConfig};
use crate::error::{Error, Result};
use crate::spectral::{fold_generator, spectral_ratio_with, CirculantGraph, RatioMode, Signing, SpectralErrorReport};

/// Split point between the two angle classes, as a multiple of `1/k`.
pub const ALPHA: f64 = 0.9;

/// Generators `(a + s·b) mod n` for `s = 1..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct APGenerators {
    a: u64,
    b: u64,
    k: usize,
    n: u64,
    graph: CirculantGraph,
    /// `order[s-1]` is the graph generator index of term `s`.
    order: Vec<usize>,
}

impl APGenerators {
    pub fn new(a: u64, b: u64, k: usize, n: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("k must be positive".into()));
        }
        if b == 0 {
            return Err(Error::InvalidSpec("common difference b must be positive".into()));
        }
        if n < 3 || n > i64::MAX as u64 {
            return Err(Error::InvalidSpec(format!("group order {n} out of range")));
        }
        let terms = Self::residues(a, b, k, n);
        let mut folded: Vec<i64> = Vec::with_capacity(k);
        for (s, &r) in terms.iter().enumerate() {
            if r == 0 {
                return Err(Error::InvalidSpec(format!("term {} is 0 mod {n}", s + 1)));
            }
            if 2 * r == n {
                return Err(Error::InvalidSpec(format!("term {} equals n/2", s + 1)));
            }
            folded.push(fold_generator(n, r as i64) as i64);
        }
        let graph = CirculantGraph::canonical(n, &folded).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if graph.k() != k {
            return Err(Error::InvalidSpec(format!(
                "terms are not distinct up to sign mod {n}: {} distinct of {k}",
                graph.k()
            )));
        }
        let order = folded
            .iter()
            .map(|&f| graph.generator_index(f).expect("generator present"))
            .collect();
        Ok(Self { a, b, k, n, graph, order })
    }

    fn residues(a: u64, b: u64, k: usize, n: u64) -> Vec<u64> {
        (1..=k as u64)
            .map(|s| ((a as u128 + s as u128 * b as u128) % n as u128) as u64)
            .collect()
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Term residues `(a + s·b) mod n` in progression order.
    pub fn terms(&self) -> Vec<u64> {
        Self::residues(self.a, self.b, self.k, self.n)
    }

    pub fn graph(&self) -> &CirculantGraph {
        &self.graph
    }

    /// Reorders a signing indexed by progression term into graph generator
    /// order.
    pub fn to_graph_signing(&self, x: &Signing) -> Result<Signing> {
        if x.len() != self.k {
            return Err(Error::SigningLength {
                expected: self.k,
                got: x.len(),
            });
        }
        let mut out = vec![1i8; self.k];
        for (s, &idx) in self.order.iter().enumerate() {
            out[idx] = x.as_slice()[s];
        }
        Signing::new(out)
    }
}

/// Tunable constants of the partition algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub alpha: f64,
    /// Highest monomial degree `L`.
    pub moment_degree: usize,
    pub delta: f64,
    pub stop_threshold: usize,
    /// Trigonometric rows get `c = trig_coef·√ln(14k/a_t)`.
    pub trig_coef: f64,
    pub budget_lambda: f64,
    pub budget_moment: f64,
    pub leftover: LeftoverRule,
    pub step_rule: StepRule,
    pub enforce_thresholds: bool,
    pub restart_cap: Option<usize>,
    /// `None` picks exact verification when `n ≤ 10⁶·k`, else a certified grid.
    pub verify: Option<RatioMode>,
}

impl AlgoConfig {
    /// The constants from the analysis: `L = ⌈38·log₂k⌉`, stop at
    /// `32(L+1)`, coefficient 7. These only start coloring once `k` is in
    /// the tens of thousands; below that every term is signed `+1`.
    pub fn asymptotic(k: usize) -> Self {
        let moment_degree = (38.0 * (k.max(2) as f64).log2()).ceil() as usize;
        Self {
            alpha: ALPHA,
            moment_degree,
            delta: 1.0 / k.max(3) as f64,
            stop_threshold: 32 * (moment_degree + 1),
            trig_coef: 7.0,
            budget_lambda: 50.0,
            budget_moment: 33.0,
            leftover: LeftoverRule::PlusOne,
            step_rule: StepRule::Coarse,
            enforce_thresholds: true,
            restart_cap: None,
            verify: None,
        }
    }

    /// Constants scaled for `k` in the hundreds: two monomial rows beyond
    /// the constant one, trigonometric coefficient 2, stop at `2(L+1)`.
    /// Stopping earlier leaves too few free directions once the `L + 1`
    /// zero-threshold rows are tight.
    pub fn desk(k: usize) -> Self {
        let moment_degree = 2;
        Self {
            alpha: ALPHA,
            moment_degree,
            delta: 1.0 / k.max(3) as f64,
            stop_threshold: 2 * (moment_degree + 1),
            trig_coef: 2.0,
            budget_lambda: 50.0,
            budget_moment: 33.0,
            leftover: LeftoverRule::Sign,
            step_rule: StepRule::Coarse,
            enforce_thresholds: false,
            restart_cap: None,
            verify: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha != ALPHA {
            return Err(Error::InvalidSpec(format!("alpha must be {ALPHA}, got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidSpec(format!("delta {} must lie in (0, 1/2)", self.delta)));
        }
        if self.stop_threshold == 0 {
            return Err(Error::InvalidSpec("stop threshold must be positive".into()));
        }
        if !(self.trig_coef >= 0.0) {
            return Err(Error::InvalidSpec("trigonometric coefficient must be nonnegative".into()));
        }
        Ok(())
    }

    fn walk(&self) -> WalkConfig {
        WalkConfig {
            delta: self.delta,
            restart_cap: self.restart_cap,
            step_rule: self.step_rule,
            enforce_thresholds: self.enforce_thresholds,
        }
    }
}

/// Number of rows of [`build_constraint_system`]: `14k + L + 1`.
pub fn constraint_count(k: usize, moment_degree: usize) -> usize {
    14 * k + moment_degree + 1
}

/// Rows `cos(s·θ_j)` then `sin(s·θ_j)` for `θ_j = 2π(j−1)/(7k)`,
/// `j = 1..7k`, then `(s/k)^l` for `l = 0..L`, all over `s = 1..k`.
/// Thresholds are left at zero; the driver sets them per round.
pub fn build_constraint_system(k: usize, moment_degree: usize) -> Result<ConstraintSystem> {
    if k < 2 {
        return Err(Error::InvalidSpec("constraint system needs k >= 2".into()));
    }
    let grid = 7 * k as u64;
    let mut cos_rows = Vec::with_capacity(7 * k);
    let mut sin_rows = Vec::with_capacity(7 * k);
    for j in 0..grid {
        let mut c = Vec::with_capacity(k);
        let mut s = Vec::with_capacity(k);
        for t in 1..=k as u64 {
            let angle = turn_to_radians(mul_mod(t, j, grid), grid);
            c.push(angle.cos());
            s.push(angle.sin());
        }
        cos_rows.push(c);
        sin_rows.push(s);
    }
    let mut rows = cos_rows;
    rows.append(&mut sin_rows);
    for l in 0..=moment_degree as i32 {
        rows.push((1..=k).map(|t| (t as f64 / k as f64).powi(l)).collect());
    }
    let m = rows.len();
    ConstraintSystem::with_dim(k, rows, vec![0.0; m])
}

/// Threshold coefficients when `alive` coordinates remain: trigonometric
/// rows get `coef·√ln(14k/alive)`, monomial rows get `0`.
pub fn threshold_schedule(k: usize, moment_degree: usize, trig_coef: f64, alive: usize) -> Vec<f64> {
    let c = trig_coef * (14.0 * k as f64 / alive as f64).ln().sqrt();
    let mut out = vec![c; 14 * k];
    out.extend(std::iter::repeat_n(0.0, moment_degree + 1));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaClass {
    /// `bθ` is at least `α/k` away from `0` mod `2π`.
    Theta1,
    /// `bθ` is within `α/k` of `0` mod `2π`.
    Theta2,
}

/// Classifies `θ` by the residue `θ̂ = bθ mod 2π ∈ (−π, π]`.
pub fn classify_theta(theta: f64, b: u64, k: usize) -> (ThetaClass, f64) {
    classify_residue(reduce_angle(b as f64 * theta), k)
}

/// As [`classify_theta`] for `θ = 2πj/n`, with exact reduction.
pub fn classify_turn(j: u64, n: u64, b: u64, k: usize) -> (ThetaClass, f64) {
    classify_residue(turn_to_radians(mul_mod(b % n, j % n, n), n), k)
}

fn classify_residue(theta_hat: f64, k: usize) -> (ThetaClass, f64) {
    let class = if theta_hat.abs() > ALPHA / k as f64 {
        ThetaClass::Theta1
    } else {
        ThetaClass::Theta2
    };
    (class, theta_hat)
}

/// `(Σ_{s=1..k} cos(sθ), Σ_{s=1..k} sin(sθ))` from the geometric-sum closed
/// forms, falling back to direct summation when `sin(θ/2)` vanishes.
pub fn trig_sums(k: usize, theta_hat: f64) -> (f64, f64) {
    let h = 0.5 * theta_hat;
    let sh = h.sin();
    if sh.abs() < 1e-9 {
        return (1..=k).fold((0.0, 0.0), |(c, s), t| {
            let a = t as f64 * theta_hat;
            (c + a.cos(), s + a.sin())
        });
    }
    let kk = k as f64;
    let cos_sum = -0.5 + ((kk + 0.5) * theta_hat).sin() / (2.0 * sh);
    let sin_sum = (h.cos() - ((kk + 0.5) * theta_hat).cos()) / (2.0 * sh);
    (cos_sum, sin_sum)
}

/// `f_k(θ̂) = (Σ cos sθ̂)² + (Σ sin sθ̂)² = sin²(kθ̂/2)/sin²(θ̂/2)`.
pub fn fk_eval(k: usize, theta_hat: f64) -> f64 {
    let sh = (0.5 * theta_hat).sin();
    if sh.abs() < 1e-9 {
        let (c, s) = trig_sums(k, theta_hat);
        return c * c + s * s;
    }
    let r = (0.5 * k as f64 * theta_hat).sin() / sh;
    r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub value: f64,
    pub limit: f64,
    pub passes: bool,
}

/// Largest `|Σ x_s cos(sθ)|` or `|Σ x_s sin(sθ)|` over `θ = 2πj/(7k)`.
pub fn lambda_max(x: &Signing) -> f64 {
    let k = x.len() as u64;
    let grid = 7 * k;
    let mut best = 0.0f64;
    for j in 0..grid {
        let mut c = 0.0;
        let mut s = 0.0;
        for (t, &xs) in (1..=k).zip(x.as_slice()) {
            let angle = turn_to_radians(mul_mod(t, j, grid), grid);
            c += xs as f64 * angle.cos();
            s += xs as f64 * angle.sin();
        }
        best = best.max(c.abs()).max(s.abs());
    }
    best
}

pub fn lambda_condition_check(x: &Signing, budget_lambda: f64) -> BudgetCheck {
    let value = lambda_max(x);
    let limit = budget_lambda * (x.len() as f64).sqrt();
    BudgetCheck {
        value,
        limit,
        passes: value <= limit,
    }
}

/// Largest `|Σ x_s (s/k)^l|` over `l = 0..L`.
pub fn moment_max(x: &Signing, moment_degree: usize) -> f64 {
    let k = x.len() as f64;
    (0..=moment_degree as i32)
        .map(|l| {
            x.as_slice()
                .iter()
                .enumerate()
                .map(|(i, &xs)| xs as f64 * ((i + 1) as f64 / k).powi(l))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Budget is `budget_moment·log₂k`, with `log₂k` floored at 1.
pub fn moment_condition_check(x: &Signing, moment_degree: usize, budget_moment: f64) -> BudgetCheck {
    let value = moment_max(x, moment_degree);
    let limit = budget_moment * (x.len() as f64).log2().max(1.0);
    BudgetCheck {
        value,
        limit,
        passes: value <= limit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub lambda: BudgetCheck,
    pub moment: BudgetCheck,
}

impl ConditionReport {
    pub fn evaluate(x: &Signing, cfg: &AlgoConfig) -> Self {
        Self {
            lambda: lambda_condition_check(x, cfg.budget_lambda),
            moment: moment_condition_check(x, cfg.moment_degree, cfg.budget_moment),
        }
    }

    pub fn passes(&self) -> bool {
        self.lambda.passes && self.moment.passes
    }
}

/// The sums behind the near-zero expansion: `β = (Σ x_s(1 − cos sθ̂),
/// Σ x_s sin sθ̂, Σ x_s)` and the same with every `x_s = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorSplit {
    pub theta_hat: f64,
    pub beta: [f64; 3],
    pub beta_ref: [f64; 3],
}

impl TaylorSplit {
    /// `max_j |β_j| / |β′_j|` over components with `β′_j ≠ 0`.
    pub fn gamma(&self) -> f64 {
        self.beta
            .iter()
            .zip(&self.beta_ref)
            .filter(|(_, r)| **r != 0.0)
            .map(|(b, r)| (b / r).abs())
            .fold(0.0, f64::max)
    }
}

/// `g(β) = cos(aθ)β₁ + sin(aθ)β₂ + (1 − cos aθ)β₃`, which equals
/// `Σ x_s (1 − cos((a + sb)θ))` when `β` comes from [`taylor_split`].
pub fn g_value(a_theta: f64, beta: &[f64; 3]) -> f64 {
    a_theta.cos() * beta[0] + a_theta.sin() * beta[1] + one_minus_cos(a_theta) * beta[2]
}

fn split_at(x: &Signing, theta_hat: f64) -> TaylorSplit {
    let mut beta = [0.0; 3];
    let mut beta_ref = [0.0; 3];
    for (i, &xs) in x.as_slice().iter().enumerate() {
        let angle = (i + 1) as f64 * theta_hat;
        let terms = [one_minus_cos(angle), angle.sin(), 1.0];
        for c in 0..3 {
            beta[c] += xs as f64 * terms[c];
            beta_ref[c] += terms[c];
        }
    }
    TaylorSplit {
        theta_hat,
        beta,
        beta_ref,
    }
}

/// Taylor split of `x` at `θ`, which must lie in the near-zero class.
pub fn taylor_split(x: &Signing, spec: &APGenerators, theta: f64) -> Result<TaylorSplit> {
    check_len(x, spec)?;
    match classify_theta(theta, spec.b, spec.k) {
        (ThetaClass::Theta2, theta_hat) => Ok(split_at(x, theta_hat)),
        (ThetaClass::Theta1, theta_hat) => Err(Error::ThetaNotInTheta2 { theta_hat }),
    }
}

/// As [`taylor_split`] for `θ = 2πj/n`.
pub fn taylor_split_turn(x: &Signing, spec: &APGenerators, j: u64) -> Result<TaylorSplit> {
    check_len(x, spec)?;
    match classify_turn(j, spec.n, spec.b, spec.k) {
        (ThetaClass::Theta2, theta_hat) => Ok(split_at(x, theta_hat)),
        (ThetaClass::Theta1, theta_hat) => Err(Error::ThetaNotInTheta2 { theta_hat }),
    }
}

fn check_len(x: &Signing, spec: &APGenerators) -> Result<()> {
    if x.len() != spec.k {
        return Err(Error::SigningLength {
            expected: spec.k,
            got: x.len(),
        });
    }
    Ok(())
}

/// `Σ_s (1 − cos((a + sb)θ))` at `θ = 2πj/n`, reduced exactly.
pub fn ap_denominator_turn(spec: &APGenerators, j: u64) -> f64 {
    spec.terms()
        .iter()
        .map(|&r| one_minus_cos(turn_to_radians(mul_mod(r, j, spec.n), spec.n)))
        .sum()
}

/// `Σ_s (1 − cos((a + sb)θ))` at an arbitrary angle.
pub fn ap_denominator(a: u64, b: u64, k: usize, theta: f64) -> f64 {
    let base = reduce_angle(a as f64 * theta);
    let step = reduce_angle(b as f64 * theta);
    (1..=k as u64).map(|s| one_minus_cos(base + s as f64 * step)).sum()
}

/// Default verification mode for a graph of order `n` with `k` generators.
pub fn auto_verify_mode(n: u64, k: usize) -> RatioMode {
    if n as u128 <= 1_000_000u128 * k as u128 {
        RatioMode::Exact
    } else {
        RatioMode::Grid { oversample: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApPartition {
    /// Signs indexed by progression term `s = 1..k`.
    pub signing: Signing,
    pub conditions: ConditionReport,
    pub spectral: SpectralErrorReport,
    pub rounds: Vec<RoundSummary>,
}

/// Runs the algorithm on `spec` and verifies the result.
pub fn partition_ap<R: Rng + ?Sized>(spec: &APGenerators, cfg: &AlgoConfig, rng: &mut R) -> Result<ApPartition> {
    partition_ap_with(spec, cfg, rng, true)
}

/// As [`partition_ap`], optionally without per-angle samples in the report.
pub fn partition_ap_with<R: Rng + ?Sized>(
    spec: &APGenerators,
    cfg: &AlgoConfig,
    rng: &mut R,
    keep_samples: bool,
) -> Result<ApPartition> {
    cfg.validate()?;
    let k = spec.k;
    let (signing, rounds) = if k == 1 {
        (Signing::all_positive(1), Vec::new())
    } else {
        let sys = build_constraint_system(k, cfg.moment_degree)?;
        let run = iterate_to_full_signing(
            &sys,
            |alive| threshold_schedule(k, cfg.moment_degree, cfg.trig_coef, alive),
            &cfg.walk(),
            cfg.stop_threshold,
            cfg.leftover,
            rng,
        )?;
        (Signing::new(run.signs)?, run.rounds)
    };
    let conditions = ConditionReport::evaluate(&signing, cfg);
    let mode = cfg.verify.unwrap_or_else(|| auto_verify_mode(spec.n, k));
    let spectral = spectral_ratio_with(&spec.graph, &spec.to_graph_signing(&signing)?, mode, keep_samples)?;
    Ok(ApPartition {
        signing,
        conditions,
        spectral,
        rounds,
    })
}

/// The ratio of a progression-ordered signing, without running the algorithm.
pub fn ap_spectral_ratio(spec: &APGenerators, x: &Signing, mode: RatioMode) -> Result<SpectralErrorReport> {
    spectral_ratio_with(&spec.graph, &spec.to_graph_signing(x)?, mode, false)
}

/// Angle `θ = 2πj/n` as a float, for reporting.
pub fn turn_angle(j: u64, n: u64) -> f64 {
    TAU * j as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn spec_validation() {
        let s = APGenerators::new(0, 1, 4, 9).unwrap();
        assert_eq!(s.terms(), vec![1, 2, 3, 4]);
        assert!(APGenerators::new(0, 1, 4, 8).is_err()); // 4 = n/2
        assert!(APGenerators::new(0, 1, 5, 9).is_err()); // 5 ≡ −4
        assert!(APGenerators::new(0, 3, 2, 9).is_err()); // 6 ≡ −3 and gcd 3
        let t = APGenerators::new(3, 7, 3, 101).unwrap();
        assert_eq!(t.terms(), vec![10, 17, 24]);
    }

    #[test]
    fn constraint_rows() {
        let sys = build_constraint_system(2, 1).unwrap();
        assert_eq!(sys.len(), 30);
        assert_eq!(sys.row(0), &[1.0, 1.0]);
        assert_eq!(sys.row(14), &[0.0, 0.0]);
        assert_eq!(sys.row(28), &[1.0, 1.0]);
        assert_eq!(sys.row(29), &[0.5, 1.0]);
        assert!(build_constraint_system(1, 1).is_err());
    }

    #[test]
    fn theta_classes() {
        assert_eq!(classify_theta(0.05, 1, 10).0, ThetaClass::Theta2);
        assert_eq!(classify_theta(1.0, 1, 10).0, ThetaClass::Theta1);
        assert_eq!(classify_theta(PI, 2, 10).0, ThetaClass::Theta2);
        assert_eq!(classify_turn(1, 1000, 1, 10).0, ThetaClass::Theta2);
        assert_eq!(classify_turn(999, 1000, 1, 10).0, ThetaClass::Theta2);
        assert_eq!(classify_turn(500, 1000, 1, 10).0, ThetaClass::Theta1);
    }

    #[test]
    fn fk_values() {
        assert_eq!(fk_eval(7, 0.0), 49.0);
        for t in [0.3, 1.0, 2.5, -1.7] {
            assert!((fk_eval(1, t) - 1.0).abs() < 1e-12);
            let (c, s) = trig_sums(9, t);
            let direct: (f64, f64) = (1..=9).fold((0.0, 0.0), |(a, b), q| {
                (a + (q as f64 * t).cos(), b + (q as f64 * t).sin())
            });
            assert!((c - direct.0).abs() < 1e-12 && (s - direct.1).abs() < 1e-12);
            assert!((fk_eval(9, t) - (c * c + s * s)).abs() < 1e-10);
        }
        for k in 1..20 {
            assert!(fk_eval(k, PI) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn condition_checks() {
        let ones = Signing::all_positive(8);
        assert!((lambda_max(&ones) - 8.0).abs() < 1e-12);
        let alt = Signing::new((0..8).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
        assert!(moment_max(&alt, 0).abs() < 1e-12);
        let ones10 = Signing::all_positive(10);
        assert!((moment_max(&ones10, 1) - 10.0).abs() < 1e-12);
        let x = Signing::new(vec![1, 1, -1, -1]).unwrap();
        assert!((moment_max(&x, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_split_identities() {
        let spec = APGenerators::new(3, 7, 6, 1009).unwrap();
        let x = Signing::new(vec![1, -1, -1, 1, 1, -1]).unwrap();
        let t0 = taylor_split_turn(&x, &spec, 0).unwrap();
        assert_eq!(t0.beta, [0.0, 0.0, 0.0]);
        assert_eq!(t0.beta_ref, [0.0, 0.0, 6.0]);
        assert!(matches!(
            taylor_split(&x, &spec, 1.0),
            Err(Error::ThetaNotInTheta2 { .. })
        ));
        let ones = Signing::all_positive(6);
        let t = taylor_split(&ones, &spec, 0.001).unwrap();
        assert_eq!(t.beta, t.beta_ref);
        // g(β) reproduces the direct sum at θ = 2πj/n
        let j = 1009 - 1;
        let split = taylor_split_turn(&x, &spec, j).unwrap();
        let a_theta = turn_to_radians(mul_mod(3, j, 1009), 1009);
        let direct: f64 = spec
            .terms()
            .iter()
            .zip(x.as_slice())
            .map(|(&r, &xs)| xs as f64 * one_minus_cos(turn_to_radians(mul_mod(r, j, 1009), 1009)))
            .sum();
        assert!((g_value(a_theta, &split.beta) - direct).abs() < 1e-12);
    }

    #[test]
    fn k_one_is_trivial() {
        let spec = APGenerators::new(0, 1, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = partition_ap(&spec, &AlgoConfig::desk(1), &mut rng).unwrap();
        assert_eq!(out.signing.as_slice(), &[1]);
        assert_eq!(out.spectral.max_ratio, 1.0);
    }

    #[test]
    fn asymptotic_config_small_k_signs_all_positive() {
        let spec = APGenerators::new(0, 1, 8, 101).unwrap();
        let cfg = AlgoConfig::asymptotic(8);
        assert_eq!(cfg.moment_degree, 114);
        assert_eq!(cfg.stop_threshold, 32 * 115);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = partition_ap(&spec, &cfg, &mut rng).unwrap();
        assert_eq!(out.signing, Signing::all_positive(8));
    }

    #[test]
    fn schedule_shape() {
        let c = threshold_schedule(4, 2, 7.0, 4);
        assert_eq!(c.len(), constraint_count(4, 2));
        assert!((c[0] - 7.0 * 14f64.ln().sqrt()).abs() < 1e-12);
        assert_eq!(&c[56..], &[0.0, 0.0, 0.0]);
    }
}
