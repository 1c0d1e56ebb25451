//! Closed-form spectral quantities of circulant graphs.
//!
//! For `X(Z_n, {±a_1, …, ±a_k})` the Laplacian is diagonalized by the Fourier
//! basis, with eigenvalue `λ_j = 2·Σ_s (1 − cos(2π·a_s·j/n))`. Every quantity
//! here (eigenvalues, effective resistances, the relative error of a signing)
//! is a sum over those closed forms; no matrix is ever built.

use std::f64::consts::TAU;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::angle::{mul_mod, one_minus_cos_turn};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_periodic, PeriodicRule};

/// A circulant graph with canonical generators `1 ≤ a_1 < … < a_k < n/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculantGraph {
    n: u64,
    gens: Vec<u64>,
}

/// Folds a raw generator into its representative in `[0, n/2]`.
pub(crate) fn fold_generator(n: u64, raw: i64) -> u64 {
    let r = raw.rem_euclid(n as i64) as u64;
    r.min(n - r)
}

impl CirculantGraph {
    /// Reduces raw generators mod `n`, folds `±a` together, drops duplicates
    /// and checks the result generates `Z_n`.
    pub fn canonical(n: u64, raw_gens: &[i64]) -> Result<Self> {
        if n < 3 || n > i64::MAX as u64 {
            return Err(Error::InvalidOrder(n));
        }
        if raw_gens.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        let mut gens = Vec::with_capacity(raw_gens.len());
        for &raw in raw_gens {
            let a = fold_generator(n, raw);
            if a == 0 {
                return Err(Error::ZeroGenerator { n, generator: raw });
            }
            if 2 * a == n {
                return Err(Error::SelfInverseGenerator { n, generator: a });
            }
            gens.push(a);
        }
        gens.sort_unstable();
        gens.dedup();
        let gcd = gens.iter().fold(n, |g, &a| g.gcd(&a));
        if gcd != 1 {
            return Err(Error::DisconnectedGraph { n, gcd });
        }
        Ok(Self { n, gens })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn gens(&self) -> &[u64] {
        &self.gens
    }

    /// Number of generator pairs `k`; the graph is `2k`-regular.
    pub fn k(&self) -> usize {
        self.gens.len()
    }

    pub fn degree(&self) -> usize {
        2 * self.gens.len()
    }

    /// Position of `a` (folded) in the generator list.
    pub fn generator_index(&self, a: i64) -> Result<usize> {
        let folded = fold_generator(self.n, a);
        self.gens
            .binary_search(&folded)
            .map_err(|_| Error::GeneratorNotInGraph(folded))
    }

    /// `1 − cos(2π·a_s·j/n)` for every generator.
    fn one_minus_cos_row(&self, j: u64, out: &mut [f64]) {
        for (o, &a) in out.iter_mut().zip(&self.gens) {
            *o = one_minus_cos_turn(mul_mod(a, j, self.n), self.n);
        }
    }

    /// All `n` Laplacian eigenvalues, indexed by frequency `j`.
    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        let mut row = vec![0.0; self.k()];
        (0..self.n)
            .map(|j| {
                self.one_minus_cos_row(j, &mut row);
                2.0 * row.iter().sum::<f64>()
            })
            .collect()
    }

    /// Effective resistance across an edge generated by `±a`.
    pub fn edge_effective_resistance(&self, a: i64) -> Result<f64> {
        let idx = self.generator_index(a)?;
        Ok(self.edge_effective_resistances()[idx])
    }

    /// Effective resistance across each generator's edges, in generator order.
    pub fn edge_effective_resistances(&self) -> Vec<f64> {
        let k = self.k();
        let mut row = vec![0.0; k];
        let mut acc = vec![0.0; k];
        for j in 1..self.n {
            self.one_minus_cos_row(j, &mut row);
            let den: f64 = row.iter().sum();
            for (a, r) in acc.iter_mut().zip(&row) {
                *a += r / den;
            }
        }
        acc.iter().map(|v| v / self.n as f64).collect()
    }

    /// The largest edge effective resistance (the quantity `α` in the
    /// sparsification bound).
    pub fn max_edge_effective_resistance(&self) -> f64 {
        self.edge_effective_resistances().into_iter().fold(0.0, f64::max)
    }
}

/// A `±1` vector over generators: `+1` puts the pair `±a_s` in the first part.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Signing(Vec<i8>);

impl Signing {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("sign entries must be ±1, found {bad}")));
        }
        Ok(Self(signs))
    }

    pub fn all_positive(k: usize) -> Self {
        Self(vec![1; k])
    }

    /// Signing from the low `k` bits of `mask`; bit set means `−1`.
    pub fn from_mask(k: usize, mask: u64) -> Self {
        Self((0..k).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Rounds each entry to its sign, zero going to `+1`.
    pub fn from_reals(x: &[f64]) -> Self {
        Self(x.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&s| s as i64).sum()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self(order.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<i8>> for Signing {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Signing> for Vec<i8> {
    fn from(s: Signing) -> Self {
        s.0
    }
}

/// How the relative spectral error is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMode {
    /// Every frequency `θ_j = 2πj/n`, `j = 1..n-1`.
    Exact,
    /// `oversample · max(a_s)` uniform angles in `(0, 2π)`.
    Grid { oversample: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub theta: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Relative eigenvalue deviation `max |λ(L₁) − λ(L₂)| / λ(L)` of a signing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralErrorReport {
    pub max_ratio: f64,
    pub argmax_theta: f64,
    pub mode: RatioMode,
    /// Grid mode only: `(1 − 2π·max(a_s)/M)⁻¹`.
    pub bernstein_factor: Option<f64>,
    /// `max_ratio` in exact mode; `max_ratio · bernstein_factor` in grid mode.
    pub certified_bound: f64,
    /// Per-angle traces; empty when requested without samples.
    pub samples: Vec<RatioSample>,
}

struct RatioScan {
    max_ratio: f64,
    argmax_theta: f64,
    samples: Vec<RatioSample>,
}

fn check_signing(g: &CirculantGraph, x: &Signing) -> Result<()> {
    if x.len() != g.k() {
        return Err(Error::SigningLength {
            expected: g.k(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Scans `θ_i = 2π·i/modulus` for `i = 1..modulus-1`. Mirror pairs `i`,
/// `modulus − i` share values, so only the lower half is evaluated.
fn scan_ratio(gens: &[u64], x: &[i8], modulus: u64, keep_samples: bool) -> RatioScan {
    let k = gens.len();
    let mut row = vec![0.0; k];
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut samples = if keep_samples {
        vec![
            RatioSample {
                theta: 0.0,
                numerator: 0.0,
                denominator: 0.0
            };
            (modulus - 1) as usize
        ]
    } else {
        Vec::new()
    };
    // removable singularity at common zeros of every term
    let sum_sq: f64 = gens.iter().map(|&a| (a as f64).powi(2)).sum();
    let signed_sq: f64 = gens.iter().zip(x).map(|(&a, &s)| s as f64 * (a as f64).powi(2)).sum();
    for i in 1..=modulus / 2 {
        let mut all_zero = true;
        for (o, &a) in row.iter_mut().zip(gens) {
            let r = mul_mod(a, i, modulus);
            all_zero &= r == 0;
            *o = one_minus_cos_turn(r, modulus);
        }
        let (num, den) = if all_zero {
            (signed_sq, sum_sq)
        } else {
            let mut num = 0.0;
            let mut den = 0.0;
            for (&r, &s) in row.iter().zip(x) {
                num += s as f64 * r;
                den += r;
            }
            (num, den)
        };
        let ratio = num.abs() / den;
        if ratio > best.0 {
            best = (ratio, i);
        }
        if keep_samples {
            let theta = TAU * i as f64 / modulus as f64;
            samples[(i - 1) as usize] = RatioSample {
                theta,
                numerator: num,
                denominator: den,
            };
            let mirror = modulus - i;
            if mirror != i {
                samples[(mirror - 1) as usize] = RatioSample {
                    theta: TAU * mirror as f64 / modulus as f64,
                    numerator: num,
                    denominator: den,
                };
            }
        }
    }
    RatioScan {
        max_ratio: best.0,
        argmax_theta: TAU * best.1 as f64 / modulus as f64,
        samples,
    }
}

/// Evaluates the relative spectral error of `x`, keeping per-angle samples.
pub fn spectral_ratio(g: &CirculantGraph, x: &Signing, mode: RatioMode) -> Result<SpectralErrorReport> {
    spectral_ratio_with(g, x, mode, true)
}

/// As [`spectral_ratio`], optionally dropping the per-angle samples.
pub fn spectral_ratio_with(
    g: &CirculantGraph,
    x: &Signing,
    mode: RatioMode,
    keep_samples: bool,
) -> Result<SpectralErrorReport> {
    check_signing(g, x)?;
    match mode {
        RatioMode::Exact => {
            let scan = scan_ratio(&g.gens, x.as_slice(), g.n, keep_samples);
            Ok(SpectralErrorReport {
                max_ratio: scan.max_ratio,
                argmax_theta: scan.argmax_theta,
                mode,
                bernstein_factor: None,
                certified_bound: scan.max_ratio,
                samples: scan.samples,
            })
        }
        RatioMode::Grid { oversample } => {
            if oversample < 8 {
                return Err(Error::InvalidArgument(format!(
                    "grid oversample {oversample} must be at least 8"
                )));
            }
            let degree = *g.gens.last().expect("non-empty generators");
            let nodes = (oversample as u64)
                .checked_mul(degree)
                .ok_or(Error::Overflow("grid size"))?;
            let scan = scan_ratio(&g.gens, x.as_slice(), nodes, keep_samples);
            let factor = 1.0 / (1.0 - TAU * degree as f64 / nodes as f64);
            Ok(SpectralErrorReport {
                max_ratio: scan.max_ratio,
                argmax_theta: scan.argmax_theta,
                mode,
                bernstein_factor: Some(factor),
                certified_bound: scan.max_ratio * factor,
                samples: scan.samples,
            })
        }
    }
}

/// Lower bound `(2/d)(1 − 1/n)` on the maximum edge effective resistance of
/// any `d`-regular graph on `n` vertices.
pub fn er_degree_lower_bound(n: u64, d: f64) -> f64 {
    2.0 / d * (1.0 - 1.0 / n as f64)
}

/// Error level `1/(2√d)` that no two-way edge partition of a `d`-regular
/// graph can beat.
pub fn partition_error_floor(d: u64) -> f64 {
    0.5 / (d as f64).sqrt()
}

fn check_family(gens: &[u64]) -> Result<()> {
    if gens.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    if gens.contains(&0) {
        return Err(Error::InvalidArgument("generators must be positive".into()));
    }
    let gcd = gens.iter().fold(0u64, |g, &a| g.gcd(&a));
    if gcd != 1 {
        return Err(Error::InvalidSpec(format!("generators share the common factor {gcd}")));
    }
    Ok(())
}

/// Limit of every generator's edge effective resistance as `n → ∞`:
/// `(1/2π)∫ (1 − cos aθ) / Σ_k (1 − cos a_kθ) dθ`, with the integrand taking
/// its limit `a²/Σa_k²` where the denominator vanishes.
pub fn limit_effective_resistances(gens: &[u64], quad_tol: f64) -> Result<Vec<f64>> {
    check_family(gens)?;
    let k = gens.len();
    let top = *gens.iter().max().expect("non-empty");
    let start = 16u64.checked_mul(top).ok_or(Error::Overflow("quadrature grid"))?.max(64);
    let sum_sq: f64 = gens.iter().map(|&a| (a as f64).powi(2)).sum();
    let limit: Vec<f64> = gens.iter().map(|&a| (a as f64).powi(2) / sum_sq).collect();
    let mut row = vec![0.0; k];
    let estimate = integrate_periodic(k, PeriodicRule::new(start, quad_tol), |sweep, acc| {
        for i in sweep.indices() {
            for (o, &a) in row.iter_mut().zip(gens) {
                *o = one_minus_cos_turn(mul_mod(a, i, sweep.nodes), sweep.nodes);
            }
            let den: f64 = row.iter().sum();
            if den < 1e-12 {
                for (s, l) in acc.iter_mut().zip(&limit) {
                    *s += l;
                }
            } else {
                for (s, r) in acc.iter_mut().zip(&row) {
                    *s += r / den;
                }
            }
        }
    })?;
    Ok(estimate.values)
}

/// Limit effective resistance of the edges generated by `a`.
pub fn limit_effective_resistance(gens: &[u64], a: u64, quad_tol: f64) -> Result<f64> {
    let idx = gens
        .iter()
        .position(|&g| g == a)
        .ok_or(Error::GeneratorNotInGraph(a))?;
    Ok(limit_effective_resistances(gens, quad_tol)?[idx])
}
