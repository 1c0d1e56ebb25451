//! Rapidly growing generator families `a_k > g·(a_1 + … + a_{k−1})`.
//!
//! For such families the cosines `cos(a_kθ)` behave almost like independent
//! variables: low moments of `S(θ) = Σ x_k cos(a_kθ)` match a closed
//! combinatorial formula, and `S` cannot stay small everywhere. This module
//! computes those moments exactly, cross-checks them by quadrature, and
//! measures how often and how far `S` strays from zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{mul_mod, one_minus_cos, turn_to_radians};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_periodic, PeriodicRule};
use crate::spectral::{limit_effective_resistances, Signing};

/// Largest generator accepted, so that every comparison in `f64` is exact.
const MAX_GENERATOR: u64 = 1 << 53;

/// `log_6(x)`.
pub fn log6(x: f64) -> f64 {
    x.ln() / 6f64.ln()
}

/// Largest `e` with `6^e ≤ k`.
pub fn floor_log6(k: u64) -> u32 {
    let mut e = 0;
    let mut p = 6u64;
    while p <= k {
        e += 1;
        match p.checked_mul(6) {
            Some(q) => p = q,
            None => break,
        }
    }
    e
}

/// The gap `4·log_6 K` of the conforming families.
pub fn conformant_gap(k: usize) -> f64 {
    4.0 * log6(k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunaryFamily {
    gens: Vec<u64>,
    gap: f64,
}

impl LacunaryFamily {
    /// Checks the strict gap condition and that the generators are coprime.
    pub fn new(gens: Vec<u64>, gap: f64) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument(format!("gap {gap} must be positive")));
        }
        if gens[0] == 0 || gens.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("generators must be positive and strictly increasing".into()));
        }
        if *gens.last().expect("non-empty") > MAX_GENERATOR {
            return Err(Error::Overflow("lacunary family"));
        }
        let mut prefix = 0u64;
        for (i, &a) in gens.iter().enumerate() {
            if i > 0 && !(a as f64 / prefix as f64 > gap) {
                return Err(Error::InvalidSpec(format!(
                    "a_{} / (a_1 + … + a_{}) = {a}/{prefix} is not above the gap {gap}",
                    i + 1,
                    i
                )));
            }
            prefix = prefix.checked_add(a).ok_or(Error::Overflow("lacunary family"))?;
        }
        let g = gens.iter().fold(0u64, |g, &a| g.gcd(&a));
        if g != 1 {
            return Err(Error::InvalidSpec(format!("generators share the common factor {g}")));
        }
        Ok(Self { gens, gap })
    }

    pub fn k(&self) -> usize {
        self.gens.len()
    }

    pub fn gens(&self) -> &[u64] {
        &self.gens
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn largest(&self) -> u64 {
        *self.gens.last().expect("non-empty")
    }

    /// Largest even `p` with `a_k > p·(a_1 + … + a_{k−1})` for every `k ≥ 2`;
    /// `None` when `K = 1` and every `p` qualifies.
    pub fn validity_bound(&self) -> Option<u64> {
        let mut prefix = self.gens[0];
        let mut bound: Option<u64> = None;
        for &a in &self.gens[1..] {
            // largest integer p with p·prefix < a
            let p = (a - 1) / prefix;
            bound = Some(bound.map_or(p, |b| b.min(p)));
            prefix += a;
        }
        bound.map(|b| b - b % 2)
    }

    /// Whether the closed moment formula provably applies at order `p`.
    pub fn closed_form_applies(&self, p: u64) -> bool {
        self.validity_bound().is_none_or(|b| p <= b)
    }
}

/// Greedy family: `a_1 = 1`, then the smallest integer strictly above
/// `gap·(a_1 + … + a_{k−1})`.
pub fn gen_lacunary(k: usize, gap: f64) -> Result<LacunaryFamily> {
    if k == 0 {
        return Err(Error::InvalidArgument("family size must be positive".into()));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::InvalidArgument(format!("gap {gap} must be positive")));
    }
    let mut gens = vec![1u64];
    let mut prefix = 1u64;
    while gens.len() < k {
        let target = gap * prefix as f64;
        if !(target < MAX_GENERATOR as f64) {
            return Err(Error::Overflow("lacunary family"));
        }
        let mut a = target.floor() as u64 + 1;
        while !(a as f64 / prefix as f64 > gap) {
            a += 1;
        }
        if a > MAX_GENERATOR {
            return Err(Error::Overflow("lacunary family"));
        }
        gens.push(a);
        prefix += a;
    }
    LacunaryFamily::new(gens, gap)
}

/// Greedy family with the conforming gap `4·log_6 K` (`K ≥ 2`).
pub fn gen_conformant_family(k: usize) -> Result<LacunaryFamily> {
    if k < 2 {
        return Err(Error::InvalidArgument("the conforming gap needs K >= 2".into()));
    }
    gen_lacunary(k, conformant_gap(k))
}

fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

fn check_even(p: u64) -> Result<()> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidArgument(format!("moment order {p} must be even and at least 2")));
    }
    Ok(())
}

/// Exact `(1/2π)∫ S(θ)^p dθ` for any sufficiently lacunary family of size
/// `K`: `p!/2^p · Σ_l C(K, l) · Σ 1/((p_1/2)!⋯(p_l/2)!)²` over compositions
/// of `p` into `l` even positive parts.
pub fn moment_closed_form(k: usize, p: u64) -> Result<BigRational> {
    check_even(p)?;
    let q = p / 2;
    let lmax = (k as u64).min(q);
    // ways[l][r] = Σ over compositions of r into l positive parts t_i of (r!/Π t_i!)²
    let mut ways = vec![vec![BigUint::zero(); q as usize + 1]; lmax as usize + 1];
    ways[0][0] = BigUint::one();
    let binom_sq: Vec<Vec<BigUint>> = (0..=q)
        .map(|r| (0..=r).map(|t| binomial(r, t).pow(2)).collect())
        .collect();
    for l in 1..=lmax as usize {
        for r in 1..=q as usize {
            let mut acc = BigUint::zero();
            for t in 1..=r {
                if !ways[l - 1][r - t].is_zero() {
                    acc += &binom_sq[r][t] * &ways[l - 1][r - t];
                }
            }
            ways[l][r] = acc;
        }
    }
    let mut total = BigUint::zero();
    for l in 1..=lmax {
        total += &ways[l as usize][q as usize] * binomial(k as u64, l);
    }
    let numer = factorial(p) * total;
    let denom = (BigUint::one() << p as usize) * factorial(q).pow(2);
    Ok(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
}

/// Both sides of `(p − 1)!! = p!/(2^{p/2}·(p/2)!)`.
pub fn double_factorial_identity(p: u64) -> Result<(BigUint, BigUint)> {
    check_even(p)?;
    let lhs = (1..p).step_by(2).fold(BigUint::one(), |acc, i| acc * BigUint::from(i));
    let rhs = factorial(p) / ((BigUint::one() << (p / 2) as usize) * factorial(p / 2));
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMoment {
    pub k: usize,
    pub p: u64,
    /// `A/((K/2)^{p/2}·(p−1)!!)` as `numerator/denominator`.
    pub ratio_exact: String,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// Normalized moment `A/((K/2)^{p/2}·(p−1)!!)` with the two-sided bounds
/// `1 − 8·log_6²K/K` and `1 + (log_6K/(K − log_6K))·½·K^{log_6 4}`.
pub fn normalized_moment(k: usize, p: u64) -> Result<NormalizedMoment> {
    if k < 2 {
        return Err(Error::InvalidArgument("K must be at least 2".into()));
    }
    let moment = moment_closed_form(k, p)?;
    let (dfact, _) = double_factorial_identity(p)?;
    let half_k = BigRational::new(BigInt::from(k), BigInt::from(2));
    let scale = num_traits::pow(half_k, (p / 2) as usize) * BigRational::from_integer(BigInt::from(dfact));
    let ratio = moment / scale;
    let value = ratio.to_f64().unwrap_or(f64::NAN);
    let kf = k as f64;
    let l = log6(kf);
    let lower = 1.0 - 8.0 * l * l / kf;
    let upper = 1.0 + l / (kf - l) * 0.5 * kf.powf(log6(4.0));
    Ok(NormalizedMoment {
        k,
        p,
        ratio_exact: format!("{}/{}", ratio.numer(), ratio.denom()),
        ratio: value,
        lower,
        upper,
        within: lower <= value && value <= upper,
    })
}

/// Default order `2⌊log_6 K⌋` used with [`normalized_moment`].
pub fn default_moment_order(k: usize) -> u64 {
    2 * floor_log6(k as u64).max(1) as u64
}

fn check_signing(fam: &LacunaryFamily, x: &Signing) -> Result<()> {
    if x.len() != fam.k() {
        return Err(Error::SigningLength {
            expected: fam.k(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Node cap for [`moment_quadrature`].
pub const DEFAULT_MOMENT_NODE_CAP: u64 = 1 << 28;

/// `(1/2π)∫ S(θ)^p dθ` by periodic quadrature starting at `16·p·a_K` nodes.
pub fn moment_quadrature(fam: &LacunaryFamily, x: &Signing, p: u64, quad_tol: f64) -> Result<f64> {
    moment_quadrature_capped(fam, x, p, quad_tol, DEFAULT_MOMENT_NODE_CAP)
}

pub fn moment_quadrature_capped(
    fam: &LacunaryFamily,
    x: &Signing,
    p: u64,
    quad_tol: f64,
    node_cap: u64,
) -> Result<f64> {
    check_signing(fam, x)?;
    check_even(p)?;
    let start = 16u64
        .checked_mul(p)
        .and_then(|v| v.checked_mul(fam.largest()))
        .ok_or(Error::Overflow("quadrature grid"))?;
    if start > node_cap {
        return Err(Error::Infeasible(format!(
            "moment quadrature needs {start} nodes, cap is {node_cap}"
        )));
    }
    let gens = fam.gens();
    let signs: Vec<f64> = x.as_slice().iter().map(|&s| s as f64).collect();
    let rule = PeriodicRule::new(start, quad_tol).with_max_nodes(node_cap);
    let est = integrate_periodic(1, rule, |sweep, acc| {
        acc[0] += rotated_sum(gens, &signs, sweep.first, sweep.stride, sweep.count, sweep.nodes, |s| {
            s.powi(p as i32)
        });
    })?;
    Ok(est.values[0])
}

/// `Σ_t f(Σ_k w_k cos(a_k θ_t))` over `θ_t = 2π(first + t·stride)/nodes`,
/// advancing each cosine by rotation and reseeding exactly every 256 nodes.
fn rotated_sum<F: Fn(f64) -> f64>(
    gens: &[u64],
    weights: &[f64],
    first: u64,
    stride: u64,
    count: u64,
    nodes: u64,
    f: F,
) -> f64 {
    const RESEED: u64 = 256;
    let k = gens.len();
    let steps: Vec<(f64, f64)> = gens
        .iter()
        .map(|&a| {
            let d = turn_to_radians(mul_mod(a, stride, nodes), nodes);
            (d.cos(), d.sin())
        })
        .collect();
    let mut rot = vec![(0.0, 0.0); k];
    let mut total = 0.0;
    for t in 0..count {
        if t % RESEED == 0 {
            let i = first + t * stride;
            for (r, &a) in rot.iter_mut().zip(gens) {
                let ang = turn_to_radians(mul_mod(a, i, nodes), nodes);
                *r = (ang.cos(), ang.sin());
            }
        }
        let mut s = 0.0;
        for ((r, w), st) in rot.iter_mut().zip(weights).zip(&steps) {
            s += w * r.0;
            *r = (r.0 * st.0 - r.1 * st.1, r.1 * st.0 + r.0 * st.1);
        }
        total += f(s);
    }
    total
}

/// `(1/4)·√(K·log_6 K)`.
pub fn exceed_threshold(k: usize) -> f64 {
    0.25 * (k as f64 * log6(k as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub max_abs: f64,
    pub exceed_fraction: f64,
    pub threshold: f64,
}

/// Cosines `cos(a_k θ_t)` at uniformly sampled angles, shared by every
/// signing. Angles are `2π·u/2^53` with integer `u`, reduced exactly.
#[derive(Debug, Clone)]
pub struct SampledTable {
    k: usize,
    cosines: Vec<f64>,
    thetas: Vec<f64>,
}

impl SampledTable {
    pub fn new<R: Rng + ?Sized>(fam: &LacunaryFamily, n_samples: usize, rng: &mut R) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let k = fam.k();
        let mut cosines = Vec::with_capacity(n_samples * k);
        let mut thetas = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let u = rng.random::<u64>() >> 11;
            thetas.push(turn_to_radians(u, MAX_GENERATOR).rem_euclid(std::f64::consts::TAU));
            for &a in fam.gens() {
                cosines.push(turn_to_radians(mul_mod(a, u, MAX_GENERATOR), MAX_GENERATOR).cos());
            }
        }
        Ok(Self { k, cosines, thetas })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `S(θ_t)` for every sample.
    pub fn values(&self, x: &Signing) -> Vec<f64> {
        self.cosines
            .chunks_exact(self.k)
            .map(|row| row.iter().zip(x.as_slice()).map(|(c, &s)| s as f64 * c).sum())
            .collect()
    }

    pub fn stats(&self, x: &Signing) -> SampleStats {
        Self::summarize(&self.values(x), self.k)
    }

    fn summarize(values: &[f64], k: usize) -> SampleStats {
        let threshold = exceed_threshold(k);
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let hits = values.iter().filter(|v| v.abs() >= threshold).count();
        SampleStats {
            max_abs,
            exceed_fraction: hits as f64 / values.len() as f64,
            threshold,
        }
    }

    /// Calls `visit` for every signing with `x_1 = +1`, walking them in Gray
    /// code order so each class costs one pass over the samples.
    pub fn for_each_class<F: FnMut(&Signing, SampleStats)>(&self, mut visit: F) {
        let mut signs = vec![1i8; self.k];
        let mut values = self.values(&Signing::all_positive(self.k));
        let classes = 1u64 << (self.k - 1);
        for g in 0..classes {
            if g > 0 {
                let bit = g.trailing_zeros() as usize + 1;
                let delta = -2.0 * signs[bit] as f64;
                signs[bit] = -signs[bit];
                for (v, row) in values.iter_mut().zip(self.cosines.chunks_exact(self.k)) {
                    *v += delta * row[bit];
                }
            }
            let x = Signing::new(signs.clone()).expect("±1 entries");
            visit(&x, Self::summarize(&values, self.k));
        }
    }

    /// Fraction of samples with `S(θ)^p ≥ level`.
    pub fn power_fraction(&self, x: &Signing, p: u64, level: f64) -> f64 {
        let vals = self.values(x);
        vals.iter().filter(|v| v.powi(p as i32) >= level).count() as f64 / vals.len() as f64
    }
}

/// Largest `|S(θ)|` and the fraction of `n_samples` uniform angles with
/// `|S(θ)| ≥ (1/4)√(K·log_6 K)`.
pub fn skmax_sampled<R: Rng + ?Sized>(
    fam: &LacunaryFamily,
    x: &Signing,
    n_samples: usize,
    rng: &mut R,
) -> Result<SampleStats> {
    check_signing(fam, x)?;
    Ok(SampledTable::new(fam, n_samples, rng)?.stats(x))
}

/// Largest family size for [`exhaustive_min_max`].
pub const MAX_EXHAUSTIVE_K: usize = 20;
/// Grids up to this size are scanned point by point.
const DIRECT_SCAN_LIMIT: u64 = 1 << 20;
/// Interval budget per sign class for the branch-and-bound scan.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMax {
    pub signing: Signing,
    /// `max_i |Σ_k x_k (1 − cos(a_k θ_i))|` over the grid.
    pub max: f64,
    pub argmax_theta: f64,
    /// `|Σ_k x_k|`.
    pub degree_gap: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxReport {
    pub grid_nodes: u64,
    pub min_max: f64,
    pub witness: Signing,
    pub threshold: f64,
    pub exceeds_threshold: bool,
    pub classes: Vec<ClassMax>,
}

struct GridObjective<'a> {
    gens: &'a [u64],
    signs: Vec<f64>,
    nodes: u64,
}

impl GridObjective<'_> {
    fn at(&self, i: u64) -> f64 {
        self.gens
            .iter()
            .zip(&self.signs)
            .map(|(&a, s)| s * one_minus_cos(turn_to_radians(mul_mod(a, i, self.nodes), self.nodes)))
            .sum()
    }

    /// Objective at grid index `i` together with a bound on how far it can
    /// move within angular distance `w`: each term changes by at most
    /// `min(2, a·w·|sin φ| + (a·w)²/2)` where `φ` is its phase at `i`.
    fn at_with_drift(&self, i: u64, w: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut drift = 0.0;
        for (&a, s) in self.gens.iter().zip(&self.signs) {
            let phase = turn_to_radians(mul_mod(a, i, self.nodes), self.nodes);
            value += s * one_minus_cos(phase);
            let t = a as f64 * w;
            drift += (t * phase.sin().abs() + 0.5 * t * t).min(2.0);
        }
        (value, drift)
    }
}

#[derive(PartialEq)]
struct Cell {
    bound: f64,
    lo: u64,
    hi: u64,
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.lo.cmp(&self.lo))
    }
}

/// Exact maximum of `|F|` over grid indices `1..nodes`, returned with its
/// index. `F` is even in `θ`, so only `1..=nodes/2` is visited. Small grids
/// are scanned; large ones use best-first interval refinement with the
/// drift bound.
fn grid_max(obj: &GridObjective, budget: u64) -> Result<(f64, u64)> {
    let n = obj.nodes;
    if n <= DIRECT_SCAN_LIMIT {
        let mut best = (f64::NEG_INFINITY, 1);
        for i in 1..=n / 2 {
            let v = obj.at(i).abs();
            if v > best.0 {
                best = (v, i);
            }
        }
        return Ok(best);
    }
    let unit = std::f64::consts::TAU / n as f64;
    let mut best = (f64::NEG_INFINITY, 1u64);
    let mut heap = BinaryHeap::new();
    let mut visited = 0u64;
    let push = |lo: u64, hi: u64, best: &mut (f64, u64), heap: &mut BinaryHeap<Cell>| {
        let mid = lo + (hi - lo) / 2;
        let w = unit * (mid - lo).max(hi - mid) as f64;
        let (v, drift) = obj.at_with_drift(mid, w);
        let v = v.abs();
        if v > best.0 || (v == best.0 && mid < best.1) {
            *best = (v, mid);
        }
        let bound = v + drift;
        if lo < hi && bound > best.0 {
            heap.push(Cell { bound, lo, hi });
        }
    };
    push(1, n / 2, &mut best, &mut heap);
    while let Some(cell) = heap.pop() {
        if cell.bound <= best.0 {
            break;
        }
        visited += 1;
        if visited > budget {
            return Err(Error::Infeasible(format!(
                "grid maximum over {n} nodes exceeded the budget of {budget} intervals"
            )));
        }
        let mid = cell.lo + (cell.hi - cell.lo) / 2;
        if cell.lo < mid {
            push(cell.lo, mid - 1, &mut best, &mut heap);
        }
        if mid < cell.hi {
            push(mid + 1, cell.hi, &mut best, &mut heap);
        }
    }
    Ok(best)
}

/// For every sign class (`x_1 = +1`), the maximum over `θ_i = 2πi/M`,
/// `M = density·a_K`, of `|Σ_k x_k (1 − cos(a_kθ_i))|`; returns the class
/// minimizing it.
pub fn exhaustive_min_max(fam: &LacunaryFamily, density: u64, threshold: f64) -> Result<MinMaxReport> {
    exhaustive_min_max_budget(fam, density, threshold, DEFAULT_NODE_BUDGET)
}

pub fn exhaustive_min_max_budget(
    fam: &LacunaryFamily,
    density: u64,
    threshold: f64,
    budget: u64,
) -> Result<MinMaxReport> {
    let k = fam.k();
    if k > MAX_EXHAUSTIVE_K {
        return Err(Error::Infeasible(format!(
            "{k} generators exceed the exhaustive limit of {MAX_EXHAUSTIVE_K}"
        )));
    }
    if density < 2 {
        return Err(Error::InvalidArgument("grid density must be at least 2".into()));
    }
    let nodes = density
        .checked_mul(fam.largest())
        .filter(|&m| m <= MAX_GENERATOR)
        .ok_or(Error::Overflow("angle grid"))?;
    let mut classes = Vec::with_capacity(1 << (k - 1));
    for mask in 0..(1u64 << (k - 1)) {
        let signing = Signing::from_mask(k, mask << 1);
        let obj = GridObjective {
            gens: fam.gens(),
            signs: signing.as_slice().iter().map(|&s| s as f64).collect(),
            nodes,
        };
        let (max, idx) = grid_max(&obj, budget)?;
        classes.push(ClassMax {
            degree_gap: signing.sum().abs(),
            signing,
            max,
            argmax_theta: std::f64::consts::TAU * idx as f64 / nodes as f64,
        });
    }
    let best = classes
        .iter()
        .min_by(|a, b| a.max.total_cmp(&b.max))
        .expect("at least one class");
    Ok(MinMaxReport {
        grid_nodes: nodes,
        min_max: best.max,
        witness: best.signing.clone(),
        threshold,
        exceeds_threshold: best.max > threshold,
        classes,
    })
}

/// `(1/10)·√(K·log_6 K)`.
pub fn min_max_threshold(k: usize) -> f64 {
    0.1 * (k as f64 * log6(k as f64)).sqrt()
}

/// Largest limiting edge effective resistance over the family.
pub fn alpha_of_family(fam: &LacunaryFamily, quad_tol: f64) -> Result<f64> {
    Ok(limit_effective_resistances(fam.gens(), quad_tol)?
        .into_iter()
        .fold(0.0, f64::max))
}
