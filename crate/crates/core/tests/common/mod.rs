#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

use circsplit::products::{ProductKind, ProductSigning, ProductSpec};
use circsplit::{CirculantGraph, RatioMode, Signing};

/// Dense Laplacian of a circulant; `signs` turns it into `L₁ − L₂`.
pub fn circulant_laplacian(g: &CirculantGraph, signs: Option<&Signing>) -> DMatrix<f64> {
    let n = g.n() as usize;
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        for (s, &a) in g.gens().iter().enumerate() {
            let w = signs.map_or(1.0, |x| x.as_slice()[s] as f64);
            for v in [(u + a as usize) % n, (u + n - a as usize) % n] {
                l[(u, u)] += w;
                l[(u, v)] -= w;
            }
        }
    }
    l
}

/// `(χ_u − χ_v)ᵀ L† (χ_u − χ_v)` by dense eigendecomposition.
pub fn dense_effective_resistance(l: &DMatrix<f64>, u: usize, v: usize) -> f64 {
    let eig = SymmetricEigen::new(l.clone());
    let mut total = 0.0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() < 1e-9 {
            continue;
        }
        let d = eig.eigenvectors[(u, i)] - eig.eigenvectors[(v, i)];
        total += d * d / lambda;
    }
    total
}

/// `max |μ|` over the pencil `(Δ, L)` restricted to the range of `L`,
/// via `L^{+1/2} Δ L^{+1/2}`.
pub fn dense_pencil_max(l: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(l.clone());
    let q = &eig.eigenvectors;
    let scale: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| if lam.abs() < 1e-9 { 0.0 } else { 1.0 / lam.sqrt() })
        .collect();
    let mut half = q.clone();
    for (j, s) in scale.iter().enumerate() {
        half.column_mut(j).scale_mut(*s);
    }
    let p = &half * q.transpose();
    let m = &p * delta * &p;
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Dense Laplacian of a product on `Z_n^d` and its signed difference.
pub fn product_laplacians(spec: &ProductSpec, signs: &ProductSigning) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = spec.n() as usize;
    let d = spec.dims();
    let size = n.pow(d as u32);
    let encode = |coords: &[usize]| coords.iter().fold(0usize, |acc, &c| acc * n + c);
    let decode = |mut id: usize| {
        let mut c = vec![0usize; d];
        for h in (0..d).rev() {
            c[h] = id % n;
            id /= n;
        }
        c
    };
    let mut gens: Vec<(Vec<i64>, f64)> = Vec::new();
    match spec.kind() {
        ProductKind::Cartesian => {
            for (h, &k) in spec.ks().iter().enumerate() {
                for s in 1..=k as i64 {
                    for sign in [1i64, -1] {
                        let mut v = vec![0i64; d];
                        v[h] = sign * s;
                        gens.push((v, signs.cartesian_sign(h, s) as f64));
                    }
                }
            }
        }
        ProductKind::Tensor => {
            let ranges: Vec<Vec<i64>> = spec
                .ks()
                .iter()
                .map(|&k| (1..=k as i64).flat_map(|s| [s, -s]).collect())
                .collect();
            let mut stack = vec![Vec::new()];
            for r in &ranges {
                stack = stack
                    .into_iter()
                    .flat_map(|p: Vec<i64>| {
                        r.iter().map(move |&s| {
                            let mut q = p.clone();
                            q.push(s);
                            q
                        })
                    })
                    .collect();
            }
            for v in stack {
                let w = signs.tensor_sign(&v) as f64;
                gens.push((v, w));
            }
        }
    }
    let mut l = DMatrix::zeros(size, size);
    let mut delta = DMatrix::zeros(size, size);
    for u in 0..size {
        let cu = decode(u);
        for (g, w) in &gens {
            let cv: Vec<usize> = cu
                .iter()
                .zip(g)
                .map(|(&c, &s)| (c as i64 + s).rem_euclid(n as i64) as usize)
                .collect();
            let v = encode(&cv);
            l[(u, u)] += 1.0;
            l[(u, v)] -= 1.0;
            delta[(u, u)] += w;
            delta[(u, v)] -= w;
        }
    }
    (l, delta)
}

/// Smallest exact ratio over all sign classes with `x_1 = +1`.
pub fn brute_force_optimum(g: &CirculantGraph) -> (f64, Signing) {
    let k = g.k();
    let mut best = (f64::INFINITY, Signing::all_positive(k));
    for mask in 0..(1u64 << (k - 1)) {
        let x = Signing::from_mask(k, mask << 1);
        let r = circsplit::spectral::spectral_ratio_with(g, &x, RatioMode::Exact, false)
            .unwrap()
            .max_ratio;
        if r < best.0 {
            best = (r, x);
        }
    }
    best
}

pub fn next_prime_above(n: u64) -> u64 {
    (n + 1..).find(|&m| primal_check::miller_rabin(m)).unwrap()
}
