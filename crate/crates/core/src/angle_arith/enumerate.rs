//! Enumeration of the finite angle sets cut out by iterate equations.
//!
//! Every set here is a lattice `{ j / D }` or a difference of two such
//! lattices, so all results come back sorted and deduplicated and set
//! differences are done by merging.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::angle::RationalAngle;
use crate::error::AngleError;

/// Largest lattice the enumerators agree to materialize.
pub const MAX_ENUMERATION: u64 = 1 << 26;

/// `|m^a - m^b|` as an exact integer.
pub fn iterate_kernel_size(m: i64, a: u32, b: u32) -> BigInt {
    let m = BigInt::from(m);
    (num_traits::pow(m.clone(), a as usize) - num_traits::pow(m, b as usize)).abs()
}

/// Size of `{ theta : m^a theta = m^b theta }` as `u64`, rejecting bad input.
fn lattice_size(m: i64, a: u32, b: u32) -> Result<u64, AngleError> {
    if m.unsigned_abs() < 2 {
        return Err(AngleError::SmallMultiplier(m));
    }
    if a <= b {
        return Err(AngleError::ExponentOrder { a, b });
    }
    let d = iterate_kernel_size(m, a, b);
    match d.to_u64() {
        Some(d) if d <= MAX_ENUMERATION => Ok(d),
        _ => Err(AngleError::TooLarge(d.to_string())),
    }
}

fn lattice(d: u64) -> Vec<RationalAngle> {
    (0..d).map(|j| RationalAngle::from_u64(j, d)).collect()
}

/// `a \ b` for sorted, deduplicated inputs.
pub fn sorted_difference(a: &[RationalAngle], b: &[RationalAngle]) -> Vec<RationalAngle> {
    let mut out = Vec::with_capacity(a.len().saturating_sub(b.len()));
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j < b.len() && b[j] == *x {
            continue;
        }
        out.push(x.clone());
    }
    out
}

/// `a ∩ b` for sorted, deduplicated inputs.
pub fn sorted_intersection(a: &[RationalAngle], b: &[RationalAngle]) -> Vec<RationalAngle> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// All `theta` with `m^a theta = m^b theta`, i.e. `{ j / |m^a - m^b| }`.
pub fn enum_equal_iterates(m: i64, a: u32, b: u32) -> Result<Vec<RationalAngle>, AngleError> {
    Ok(lattice(lattice_size(m, a, b)?))
}

fn check_nk(n: u32, k: u32) -> Result<(), AngleError> {
    if k <= 1 || n <= k {
        return Err(AngleError::InvalidIndices { n, k });
    }
    Ok(())
}

fn misiurewicz_set(base: i64, n: u32, k: u32) -> Result<Vec<RationalAngle>, AngleError> {
    check_nk(n, k)?;
    let all = enum_equal_iterates(base, n - 1, k - 1)?;
    let periodic = enum_equal_iterates(base, n - k, 0)?;
    Ok(sorted_difference(&all, &periodic))
}

/// `{ theta : 2^{n-1} theta = 2^{k-1} theta, 2^{n-k} theta != theta }` for `n > k > 1`.
pub fn enum_misiurewicz_quadratic(n: u32, k: u32) -> Result<Vec<RationalAngle>, AngleError> {
    misiurewicz_set(2, n, k)
}

/// `{ theta : 2^n theta = theta }`, the `2^n - 1` angles of period dividing `n`.
pub fn enum_parabolic_quadratic(n: u32) -> Result<Vec<RationalAngle>, AngleError> {
    if n == 0 {
        return Err(AngleError::ExponentOrder { a: 0, b: 0 });
    }
    enum_equal_iterates(2, n, 0)
}

/// Base `-2` analogue of [`enum_misiurewicz_quadratic`].
pub fn enum_misiurewicz_tricorn(n: u32, k: u32) -> Result<Vec<RationalAngle>, AngleError> {
    misiurewicz_set(-2, n, k)
}

/// The full lattice `(-2)^{n-1} theta = (-2)^{k-1} theta` with the angles of
/// `(-2)^{n-k} theta = theta` removed, built as a literal set difference of
/// the two unrestricted lattices.
pub fn enum_x_tricorn(n: u32, k: u32) -> Result<Vec<RationalAngle>, AngleError> {
    check_nk(n, k)?;
    let outer = enum_equal_iterates(-2, n - 1, k - 1)?;
    let inner = enum_equal_iterates(-2, n - k, 0)?;
    Ok(sorted_difference(&outer, &inner))
}

/// `2^{n-1} - 2^{k-1} - 2^{n-k} + 1`.
pub fn misiurewicz_count_quadratic(n: u32, k: u32) -> i128 {
    (1i128 << (n - 1)) - (1i128 << (k - 1)) - (1i128 << (n - k)) + 1
}

/// Parity-split count of the base `-2` Misiurewicz set.
pub fn misiurewicz_count_tricorn(n: u32, k: u32) -> i128 {
    if (n - k) % 2 == 0 {
        (1i128 << (n - 1)) - (1i128 << (k - 1)) - (1i128 << (n - k)) + 1
    } else {
        (1i128 << (n - 1)) + (1i128 << (k - 1)) - (1i128 << (n - k)) - 1
    }
}
