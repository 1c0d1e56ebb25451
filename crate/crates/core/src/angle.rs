//! Angle helpers.
//!
//! Angles of the form `2π·p/q` with integer `p, q` are reduced exactly in
//! integer arithmetic before any floating point work, so `cos((a + s·b)·θ_j)`
//! stays accurate even when `a`, `b` and `j` are large.

use std::f64::consts::{PI, TAU};

/// `(a * b) mod m` without overflow.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Reduces the rational turn `p/q` (the angle `2π·p/q`) to radians in `(-π, π]`.
#[inline]
pub fn turn_to_radians(p: u64, q: u64) -> f64 {
    let r = p % q;
    if 2 * (r as u128) > q as u128 {
        -TAU * ((q - r) as f64 / q as f64)
    } else {
        TAU * (r as f64 / q as f64)
    }
}

/// `1 - cos(x)` evaluated as `2 sin²(x/2)` to avoid cancellation near zero.
#[inline]
pub fn one_minus_cos(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    2.0 * h * h
}

/// `1 - cos(2π·p/q)` with exact reduction.
#[inline]
pub fn one_minus_cos_turn(p: u64, q: u64) -> f64 {
    one_minus_cos(turn_to_radians(p, q))
}

/// Reduces an arbitrary angle to `(-π, π]`.
#[inline]
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turns_reduce_into_half_open_interval() {
        assert_eq!(turn_to_radians(0, 7), 0.0);
        assert!((turn_to_radians(1, 2) - PI).abs() < 1e-15);
        assert!((turn_to_radians(3, 4) + PI / 2.0).abs() < 1e-15);
        assert!((turn_to_radians(9, 4) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn large_multipliers_stay_exact() {
        // (10^15 + 1) * 1 mod 10^15 = 1, a tiny angle.
        let n = 1_000_000_000_000_000u64;
        let r = mul_mod(n + 1, 1, n);
        assert_eq!(r, 1);
        let x = one_minus_cos_turn(r, n);
        let expect = 2.0 * (PI / n as f64).sin().powi(2);
        assert!((x - expect).abs() <= 1e-40);
        assert!(x > 0.0);
    }

    #[test]
    fn reduce_angle_matches_turns() {
        for p in 0..20u64 {
            let a = reduce_angle(TAU * p as f64 / 7.0);
            let b = turn_to_radians(p, 7);
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
    }
}
