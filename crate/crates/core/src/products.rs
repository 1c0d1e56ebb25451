//! Cartesian and tensor products of circulants `X(Z_n, ±{1..k_h})`.
//!
//! Product Laplacians are diagonalized by tensor products of the factor
//! Fourier bases, so their eigenvalues at `j ∈ Z_n^d` combine per-factor
//! trigonometric sums. A Cartesian product signs generator `s·e_h` by
//! `y_{h,s}`; a tensor product signs `(s_1, …, s_d)` by `Π_h y_{h,s_h}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{mul_mod, one_minus_cos, turn_to_radians};
use crate::ap::{partition_ap_with, APGenerators, AlgoConfig};
use crate::error::{Error, Result};
use crate::spectral::Signing;

/// Default cap on `n^d` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    Cartesian,
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSpec {
    kind: ProductKind,
    n: u64,
    ks: Vec<usize>,
}

impl ProductSpec {
    pub fn new(kind: ProductKind, n: u64, ks: Vec<usize>) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::InvalidSpec("a product needs at least one factor".into()));
        }
        if n < 3 {
            return Err(Error::InvalidSpec(format!("group order {n} is too small")));
        }
        for &k in &ks {
            if k == 0 || 2 * k as u64 >= n {
                return Err(Error::InvalidSpec(format!(
                    "factor size {k} must lie in 1..={}",
                    (n - 1) / 2
                )));
            }
        }
        if kind == ProductKind::Tensor && n % 2 == 0 && ks.iter().filter(|&&k| k == 1).count() >= 2 {
            return Err(Error::InvalidSpec(
                "tensor product is disconnected: n is even and two factors only use ±1".into(),
            ));
        }
        Ok(Self { kind, n, ks })
    }

    pub fn kind(&self) -> ProductKind {
        self.kind
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn dims(&self) -> usize {
        self.ks.len()
    }

    /// `K = Π_h k_h`.
    pub fn k_product(&self) -> f64 {
        self.ks.iter().map(|&k| k as f64).product()
    }

    pub fn vertex_count(&self) -> Option<u64> {
        self.n.checked_pow(self.ks.len() as u32)
    }
}

/// Per-factor signings `y_h`, one sign per generator pair `±s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSigning {
    pub per_factor: Vec<Signing>,
}

impl ProductSigning {
    pub fn new(spec: &ProductSpec, per_factor: Vec<Signing>) -> Result<Self> {
        if per_factor.len() != spec.dims() {
            return Err(Error::InvalidArgument(format!(
                "{} factor signings for {} factors",
                per_factor.len(),
                spec.dims()
            )));
        }
        for (y, &k) in per_factor.iter().zip(spec.ks()) {
            if y.len() != k {
                return Err(Error::SigningLength {
                    expected: k,
                    got: y.len(),
                });
            }
        }
        Ok(Self { per_factor })
    }

    /// Sign of the Cartesian generator `s·e_h` (`s` may be negative).
    pub fn cartesian_sign(&self, h: usize, s: i64) -> i8 {
        self.per_factor[h].as_slice()[s.unsigned_abs() as usize - 1]
    }

    /// Sign of the tensor generator `(s_1, …, s_d)`.
    pub fn tensor_sign(&self, s: &[i64]) -> i8 {
        s.iter()
            .zip(&self.per_factor)
            .map(|(&v, y)| y.as_slice()[v.unsigned_abs() as usize - 1])
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductErrorReport {
    pub max_ratio: f64,
    /// Frequency vector `j ∈ Z_n^d` attaining the maximum.
    pub argmax: Vec<u64>,
    pub enumerated: u64,
}

/// Per-factor sums at every frequency `j_h ∈ Z_n`.
struct FactorTables {
    /// `Σ_s y_s (1 − cos(j s θ))`
    signed: Vec<f64>,
    /// `Σ_s (1 − cos(j s θ))`
    plain: Vec<f64>,
    /// `Σ_s y_s`
    signed_total: f64,
    k: f64,
}

impl FactorTables {
    fn new(n: u64, y: &Signing) -> Self {
        let mut signed = Vec::with_capacity(n as usize);
        let mut plain = Vec::with_capacity(n as usize);
        for j in 0..n {
            let mut num = 0.0;
            let mut den = 0.0;
            for (s, &ys) in (1..=y.len() as u64).zip(y.as_slice()) {
                let r = one_minus_cos(turn_to_radians(mul_mod(s, j, n), n));
                num += ys as f64 * r;
                den += r;
            }
            signed.push(num);
            plain.push(den);
        }
        Self {
            signed,
            plain,
            signed_total: y.sum() as f64,
            k: y.len() as f64,
        }
    }
}

/// Exact maximum over `j ∈ Z_n^d \ {0}` of the relative eigenvalue error.
///
/// Cartesian: `|Σ_h N_h| / Σ_h D_h` with `N_h = Σ_s y(1 − cos)` and
/// `D_h = Σ_s (1 − cos)` at `j_h`. Tensor: `|Π_h Y_h − Π_h Ŷ_h| /
/// (Π_h k_h − Π_h C_h)` with `Y_h = Σ y`, `Ŷ_h = Σ y cos`, `C_h = Σ cos`,
/// both evaluated through stable differences.
pub fn product_spectral_ratio(spec: &ProductSpec, signs: &ProductSigning) -> Result<ProductErrorReport> {
    product_spectral_ratio_capped(spec, signs, DEFAULT_ENUMERATION_CAP)
}

pub fn product_spectral_ratio_capped(
    spec: &ProductSpec,
    signs: &ProductSigning,
    cap: u64,
) -> Result<ProductErrorReport> {
    let signs = ProductSigning::new(spec, signs.per_factor.clone())?;
    let n = spec.n;
    let d = spec.dims();
    let size = (n as u128).pow(d as u32);
    if size > cap as u128 {
        return Err(Error::EnumerationCapExceeded { size, cap });
    }
    let tables: Vec<FactorTables> = signs.per_factor.iter().map(|y| FactorTables::new(n, y)).collect();
    // prefix[h] holds the combined (numerator, auxiliary numerator,
    // denominator, auxiliary denominator) of factors 0..h
    let mut prefix = vec![[0.0f64, 1.0, 0.0, 1.0]; d + 1];
    let combine = |acc: [f64; 4], t: &FactorTables, j: usize| -> [f64; 4] {
        let num_h = t.signed[j];
        let den_h = t.plain[j];
        match spec.kind {
            ProductKind::Cartesian => [acc[0] + num_h, 1.0, acc[2] + den_h, 1.0],
            ProductKind::Tensor => {
                let yc = t.signed_total - num_h;
                let c = t.k - den_h;
                [
                    t.signed_total * acc[0] + num_h * acc[1],
                    yc * acc[1],
                    t.k * acc[2] + den_h * acc[3],
                    c * acc[3],
                ]
            }
        }
    };
    let mut idx = vec![0usize; d];
    for h in 0..d {
        prefix[h + 1] = combine(prefix[h], &tables[h], 0);
    }
    let mut best = (f64::NEG_INFINITY, vec![0u64; d]);
    let mut enumerated = 0u64;
    loop {
        // advance the odometer, last coordinate fastest
        let mut h = d;
        loop {
            if h == 0 {
                return Ok(ProductErrorReport {
                    max_ratio: best.0,
                    argmax: best.1,
                    enumerated,
                });
            }
            h -= 1;
            idx[h] += 1;
            if idx[h] < n as usize {
                break;
            }
            idx[h] = 0;
        }
        for g in h..d {
            prefix[g + 1] = combine(prefix[g], &tables[g], idx[g]);
        }
        let [num, _, den, _] = prefix[d];
        let ratio = num.abs() / den;
        enumerated += 1;
        if ratio > best.0 {
            best = (ratio, idx.iter().map(|&v| v as u64).collect());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPartition {
    pub signing: ProductSigning,
    pub report: ProductErrorReport,
    /// Exact ratio of each `y_h` on its own factor.
    pub factor_ratios: Vec<f64>,
}

/// Signs each factor with the progression algorithm (`a = 0`, `b = 1`) and
/// verifies the assembled product signing exhaustively.
pub fn partition_product<R, C>(spec: &ProductSpec, config_for: C, rng: &mut R) -> Result<ProductPartition>
where
    R: Rng + ?Sized,
    C: Fn(usize) -> AlgoConfig,
{
    let mut per_factor = Vec::with_capacity(spec.dims());
    let mut factor_ratios = Vec::with_capacity(spec.dims());
    for &k in spec.ks() {
        let factor = APGenerators::new(0, 1, k, spec.n)?;
        let out = partition_ap_with(&factor, &config_for(k), rng, false)?;
        factor_ratios.push(out.spectral.max_ratio);
        per_factor.push(out.signing);
    }
    let signing = ProductSigning::new(spec, per_factor)?;
    let report = product_spectral_ratio(spec, &signing)?;
    Ok(ProductPartition {
        signing,
        report,
        factor_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{spectral_ratio, CirculantGraph, RatioMode};

    #[test]
    fn spec_validation() {
        assert!(ProductSpec::new(ProductKind::Cartesian, 16, vec![]).is_err());
        assert!(ProductSpec::new(ProductKind::Cartesian, 16, vec![8]).is_err());
        assert!(ProductSpec::new(ProductKind::Cartesian, 16, vec![7, 1]).is_ok());
        assert!(ProductSpec::new(ProductKind::Tensor, 16, vec![1, 1]).is_err());
        assert!(ProductSpec::new(ProductKind::Tensor, 15, vec![1, 1]).is_ok());
        assert!(ProductSpec::new(ProductKind::Tensor, 16, vec![1, 2]).is_ok());
    }

    #[test]
    fn single_factor_matches_circulant() {
        let y = Signing::new(vec![1, -1, -1, 1, 1]).unwrap();
        let g = CirculantGraph::canonical(23, &[1, 2, 3, 4, 5]).unwrap();
        let direct = spectral_ratio(&g, &y, RatioMode::Exact).unwrap();
        for kind in [ProductKind::Cartesian, ProductKind::Tensor] {
            let spec = ProductSpec::new(kind, 23, vec![5]).unwrap();
            let signs = ProductSigning::new(&spec, vec![y.clone()]).unwrap();
            let rep = product_spectral_ratio(&spec, &signs).unwrap();
            assert_eq!(rep.max_ratio.to_bits(), direct.max_ratio.to_bits());
            assert_eq!(rep.enumerated, 22);
        }
    }

    #[test]
    fn all_positive_tensor_is_one() {
        let spec = ProductSpec::new(ProductKind::Tensor, 15, vec![1, 1]).unwrap();
        let signs = ProductSigning::new(&spec, vec![Signing::all_positive(1); 2]).unwrap();
        let rep = product_spectral_ratio(&spec, &signs).unwrap();
        assert!((rep.max_ratio - 1.0).abs() < 1e-12);
        assert_eq!(signs.tensor_sign(&[1, -1]), 1);
    }

    #[test]
    fn enumeration_cap() {
        let spec = ProductSpec::new(ProductKind::Cartesian, 64, vec![2, 2, 2]).unwrap();
        let signs = ProductSigning::new(&spec, vec![Signing::all_positive(2); 3]).unwrap();
        assert_eq!(
            product_spectral_ratio_capped(&spec, &signs, 1000).unwrap_err(),
            Error::EnumerationCapExceeded { size: 262144, cap: 1000 }
        );
    }

    #[test]
    fn signing_shapes_checked() {
        let spec = ProductSpec::new(ProductKind::Cartesian, 16, vec![2, 3]).unwrap();
        assert!(ProductSigning::new(&spec, vec![Signing::all_positive(2)]).is_err());
        assert!(ProductSigning::new(&spec, vec![Signing::all_positive(2), Signing::all_positive(2)]).is_err());
        let s = ProductSigning::new(&spec, vec![Signing::new(vec![1, -1]).unwrap(), Signing::all_positive(3)]).unwrap();
        assert_eq!(s.cartesian_sign(0, -2), -1);
    }
}
