//! Polynomial root finding: companion-matrix eigenvalues for starting points,
//! Aberth iteration for simultaneous polishing with any evaluator, and a
//! multiplicity-aware single-root polish.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::dynamics::quad_orbit_second;

/// Eigenvalues of the companion matrix of `coeffs` (lowest degree first).
/// Returns `None` when the leading coefficient vanishes or the QR sweep fails.
pub fn companion_roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let lead = *coeffs.last()?;
    let d = coeffs.len() - 1;
    if lead.norm() == 0.0 || d == 0 {
        return None;
    }
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for (i, a) in coeffs[..d].iter().enumerate() {
        m[(i, d - 1)] = -a / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100 * d)?;
    let ev = schur.eigenvalues()?;
    let out: Vec<Complex64> = ev.iter().copied().collect();
    out.iter().all(|z| z.is_finite()).then_some(out)
}

/// `d` points on a circle, rotated off the real axis.
pub fn circle_start(d: usize, radius: f64) -> Vec<Complex64> {
    (0..d)
        .map(|j| Complex64::from_polar(radius, std::f64::consts::TAU * (j as f64 + 0.25) / d as f64 + 0.4))
        .collect()
}

/// Aberth iteration. `f` returns `(value, derivative)`. Iterates until every
/// correction is below `tol * max(1, |z|)` or `max_iter` sweeps have run.
pub fn aberth<F>(f: F, mut z: Vec<Complex64>, tol: f64, max_iter: usize) -> Vec<Complex64>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let d = z.len();
    let mut done = vec![false; d];
    for _ in 0..max_iter {
        let mut all = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (v, dv) = f(z[i]);
            if v.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let sum: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff.norm() == 0.0 {
                        Complex64::zero()
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let w = ratio / (1.0 - ratio * sum);
            if !w.is_finite() {
                // step off a critical point of f
                let bump = Complex64::new(1e-7, 1e-7) * z[i].norm().max(1.0);
                z[i] += bump;
                all = false;
                continue;
            }
            z[i] -= w;
            if w.norm() <= tol * z[i].norm().max(1.0) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

/// Polishes one root of possibly higher multiplicity. `f` returns the value
/// and the first two derivatives. Schröder's iteration converges quadratically
/// at roots of any multiplicity but stagnates near `sqrt(eps)` at a double
/// root, which is then pinned down as a simple root of the derivative.
/// Returns the root and the estimated multiplicity.
pub fn polish_root<F>(f: F, mut z: Complex64, max_iter: usize) -> (Complex64, u32)
where
    F: Fn(Complex64) -> [Complex64; 3],
{
    let mut mult = 1.0;
    for _ in 0..max_iter {
        let [v, d1, d2] = f(z);
        let den = d1 * d1 - v * d2;
        if v.norm() == 0.0 || den.norm() == 0.0 {
            break;
        }
        let m = (d1 * d1 / den).norm();
        if m.is_finite() {
            mult = m;
        }
        let step = v * d1 / den;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    let mult = mult.round().max(1.0) as u32;
    // A double root is a simple root of f'. Keep that refinement only if it
    // does not increase |f|, so simple roots are left alone.
    let mut w = z;
    for _ in 0..max_iter {
        let [_, d1, d2] = f(w);
        if d2.norm() == 0.0 {
            break;
        }
        let step = d1 / d2;
        w -= step;
        if !w.is_finite() || step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            break;
        }
    }
    if w.is_finite() && (w - z).norm() < 1e-4 * z.norm().max(1.0) && f(w)[0].norm() <= f(z)[0].norm() {
        z = w;
    }
    (z, mult)
}

fn poly_square_add_c(p: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); (2 * p.len() - 1).max(2)];
    for (i, a) in p.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in p.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out[1] += 1;
    out
}

/// Exact integer coefficients of `c -> p_c^n(0)`, lowest degree first.
pub fn critical_orbit_poly(n: u32) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero()];
    for _ in 0..n {
        p = poly_square_add_c(&p);
    }
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// Coefficients of `p_c^n(0) - p_c^k(0)`.
pub fn preperiodic_poly(n: u32, k: u32) -> Vec<BigInt> {
    let mut a = critical_orbit_poly(n);
    let b = critical_orbit_poly(k);
    if a.len() < b.len() {
        a.resize(b.len(), BigInt::zero());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
    while a.len() > 1 && a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
    a
}

pub fn to_complex(coeffs: &[BigInt]) -> Vec<Complex64> {
    coeffs
        .iter()
        .map(|x| Complex64::new(x.to_f64().unwrap_or(f64::INFINITY), 0.0))
        .collect()
}

/// All roots of `p_c^n(0) - p_c^k(0)` with multiplicity, by companion matrix
/// then Aberth and multiple-root polishing on the orbit itself.
pub fn preperiodic_roots(n: u32, k: u32) -> Vec<Complex64> {
    let coeffs = to_complex(&preperiodic_poly(n, k));
    let d = coeffs.len() - 1;
    let init = companion_roots(&coeffs)
        .filter(|r| r.len() == d && r.iter().all(|z| z.norm() < 4.0))
        .unwrap_or_else(|| circle_start(d, 2.5));
    let eval2 = |c: Complex64| -> [Complex64; 3] {
        let a = orbit_second(c, n);
        let b = orbit_second(c, k);
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    };
    let roots = aberth(|c| {
        let [v, d1, _] = eval2(c);
        (v, d1)
    }, init, 1e-14, 2000);
    roots.into_iter().map(|z| polish_root(eval2, z, 100).0).collect()
}

fn orbit_second(c: Complex64, n: u32) -> [Complex64; 3] {
    let nan = Complex64::new(f64::NAN, f64::NAN);
    quad_orbit_second(c, n as usize).unwrap_or([nan; 3])
}
