//! Critical orbits with parameter derivatives for `z^2 + c`, `conj(z)^2 + c`
//! and the degree-4 second iterate, plus escape-rate (Green function) values.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Escaped;

/// Orbits whose modulus passes this bound are abandoned.
pub const OVERFLOW_GUARD: f64 = 1e150;
/// Default escape radius for potential evaluation.
pub const GREEN_RADIUS: f64 = 1e6;
/// Default iteration cap for potential evaluation.
pub const GREEN_MAX_ITERS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `z^2 + c`.
    Mandelbrot,
    /// `conj(z)^2 + c`.
    Tricorn,
}

impl Family {
    /// Escape-rate factor of one depth unit: one step of `z^2 + c`, or two
    /// antiholomorphic steps.
    pub fn depth_degree(self) -> f64 {
        match self {
            Family::Mandelbrot => 2.0,
            Family::Tricorn => 4.0,
        }
    }

    /// Angle multiplier of one depth unit (`2`, or `(-2)^2 = 4`).
    pub fn depth_angle_multiplier(self) -> i64 {
        match self {
            Family::Mandelbrot => 2,
            Family::Tricorn => 4,
        }
    }

    /// Multiplier of the circle map conjugate to one dynamical step.
    pub fn angle_base(self) -> i64 {
        match self {
            Family::Mandelbrot => 2,
            Family::Tricorn => -2,
        }
    }

    /// Single dynamical steps per depth unit.
    pub fn steps_per_depth(self) -> usize {
        match self {
            Family::Mandelbrot => 1,
            Family::Tricorn => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Mandelbrot => "mandelbrot",
            Family::Tricorn => "tricorn",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mandelbrot" | "quadratic" => Ok(Family::Mandelbrot),
            "tricorn" | "antiholomorphic" => Ok(Family::Tricorn),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

/// Where an orbit starts: the critical point `0` or the critical value `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    CriticalPoint,
    CriticalValue,
}

/// A Tricorn parameter `lambda = (a, b)` with `c = (a + i b)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TricornParam {
    pub a: f64,
    pub b: f64,
}

impl TricornParam {
    pub fn new(a: f64, b: f64) -> Self {
        TricornParam { a, b }
    }

    /// Principal square root of `c`; the other preimage is `-lambda`.
    pub fn from_c(c: Complex64) -> Self {
        let s = c.sqrt();
        TricornParam { a: s.re, b: s.im }
    }

    pub fn c(&self) -> Complex64 {
        let l = Complex64::new(self.a, self.b);
        l * l
    }

    pub fn neg(&self) -> Self {
        TricornParam {
            a: -self.a,
            b: -self.b,
        }
    }
}

/// Orbit value and its derivative in `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphicJet {
    pub value: Complex64,
    pub dc: Complex64,
}

/// Orbit value with both Wirtinger derivatives, `d/dc` and `d/dc̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WirtingerJet {
    pub value: Complex64,
    pub dc: Complex64,
    pub dcbar: Complex64,
}

impl WirtingerJet {
    /// Real partials `(dF/dx, dF/dy)` for `c = x + i y`.
    pub fn real_partials(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        (self.dc + self.dcbar, i * (self.dc - self.dcbar))
    }
}

/// Past this modulus `z^2 + c` is `z^2` to working precision.
const LOG_SWITCH: f64 = 1e60;

/// `log` of the orbit of the critical value after `n` steps, with its
/// Wirtinger derivatives (`dcbar` vanishes for the quadratic family).
///
/// Once the orbit is large the recursion continues on `log z`, so deep
/// escaping orbits stay finite. The imaginary part is not reduced mod 2 pi.
pub fn log_orbit(c: Complex64, family: Family, n: usize) -> Option<WirtingerJet> {
    let steps = n * family.steps_per_depth();
    let anti = family == Family::Tricorn;
    let (mut z, mut u) = start_values(c, Start::CriticalValue);
    let mut v = Complex64::new(0.0, 0.0);
    let mut k = 0;
    while k < steps && z.norm() <= LOG_SWITCH {
        if anti {
            let zb = z.conj();
            let nu = 2.0 * zb * v.conj() + 1.0;
            let nv = 2.0 * zb * u.conj();
            z = zb * zb + c;
            u = nu;
            v = nv;
        } else {
            u = 2.0 * z * u + 1.0;
            z = z * z + c;
        }
        k += 1;
    }
    if z.norm() == 0.0 || !z.is_finite() || !u.is_finite() || !v.is_finite() {
        return None;
    }
    let mut l = z.ln();
    let mut lu = u / z;
    let mut lv = v / z;
    for _ in k..steps {
        if anti {
            let nu = 2.0 * lv.conj();
            lv = 2.0 * lu.conj();
            lu = nu;
            l = 2.0 * l.conj();
        } else {
            l = 2.0 * l;
            lu = 2.0 * lu;
        }
    }
    Some(WirtingerJet {
        value: l,
        dc: lu,
        dcbar: lv,
    })
}

fn start_values(c: Complex64, start: Start) -> (Complex64, Complex64) {
    match start {
        Start::CriticalPoint => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        Start::CriticalValue => (c, Complex64::new(1.0, 0.0)),
    }
}

fn guard(z: Complex64, step: usize) -> Result<(), Escaped> {
    let m = z.norm();
    if m > OVERFLOW_GUARD || !m.is_finite() {
        Err(Escaped { step, modulus: m })
    } else {
        Ok(())
    }
}

/// `p_c^n(z_0)` with its `c`-derivative, `z_0` the critical point or value.
pub fn quad_orbit(c: Complex64, start: Start, n: usize) -> Result<HolomorphicJet, Escaped> {
    let (mut z, mut dz) = start_values(c, start);
    for step in 0..n {
        dz = 2.0 * z * dz + 1.0;
        z = z * z + c;
        guard(z, step + 1)?;
    }
    Ok(HolomorphicJet { value: z, dc: dz })
}

/// `f_c^n(z_0)` for `f_c(z) = conj(z)^2 + c` with Wirtinger derivatives.
pub fn anti_orbit(c: Complex64, start: Start, n: usize) -> Result<WirtingerJet, Escaped> {
    let (mut z, mut u) = start_values(c, start);
    let mut v = Complex64::new(0.0, 0.0);
    for step in 0..n {
        let zb = z.conj();
        let nu = 2.0 * zb * v.conj() + 1.0;
        let nv = 2.0 * zb * u.conj();
        z = zb * zb + c;
        u = nu;
        v = nv;
        guard(z, step + 1)?;
    }
    Ok(WirtingerJet {
        value: z,
        dc: u,
        dcbar: v,
    })
}

/// Second-order jet `(p_c^n(0), d/dc, d²/dc²)` of the critical orbit.
pub fn quad_orbit_second(c: Complex64, n: usize) -> Result<[Complex64; 3], Escaped> {
    let zero = Complex64::new(0.0, 0.0);
    let (mut z, mut d1, mut d2) = (zero, zero, zero);
    for step in 0..n {
        d2 = 2.0 * (d1 * d1 + z * d2);
        d1 = 2.0 * z * d1 + 1.0;
        z = z * z + c;
        guard(z, step + 1)?;
    }
    Ok([z, d1, d2])
}

/// One step of `conj(z)^2 + c`.
pub fn anti_step(c: Complex64, z: Complex64) -> Complex64 {
    let zb = z.conj();
    zb * zb + c
}

/// `P_lambda(z) = z^4 + 2 (a - i b)^2 z^2 + (a + i b)^2 + (a - i b)^4`.
pub fn quartic_eval(lambda: TricornParam, z: Complex64) -> Complex64 {
    let plus = Complex64::new(lambda.a, lambda.b);
    let minus = Complex64::new(lambda.a, -lambda.b);
    let m2 = minus * minus;
    let z2 = z * z;
    z2 * z2 + 2.0 * m2 * z2 + plus * plus + m2 * m2
}

/// Critical points `(0, i a + b, -(i a + b))` of `P_lambda`.
pub fn quartic_crit(lambda: TricornParam) -> [Complex64; 3] {
    let c1 = Complex64::new(lambda.b, lambda.a);
    [Complex64::new(0.0, 0.0), c1, -c1]
}

/// Potential value together with a cap on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    pub g: f64,
    pub bound: f64,
    /// Depth units taken before escape (or the cap).
    pub iterations: usize,
    pub escaped: bool,
}

/// Green function of the family at `z`, default radius and iteration cap.
pub fn green(c: Complex64, z: Complex64, family: Family) -> GreenValue {
    green_with(c, z, family, GREEN_RADIUS, GREEN_MAX_ITERS)
}

/// Green function with explicit working radius and depth cap.
///
/// The orbit counts as escaped once `|z| > radius` and `|z|^2 > radius |c|`,
/// so `log|z|` is accurate even when `|c|` is huge. The Tricorn value is
/// computed on double steps, `4^{-m} log|f_c^{2m}(z)|`.
pub fn green_with(
    c: Complex64,
    z: Complex64,
    family: Family,
    radius: f64,
    max_iters: usize,
) -> GreenValue {
    let d = family.depth_degree();
    let mut z = z;
    let mut scale = 1.0f64;
    for n in 0..=max_iters {
        let m = z.norm();
        if (m > radius && m * m > radius * c.norm()) || m > OVERFLOW_GUARD.sqrt() {
            // later steps change log|z| by at most -log(1 - |c|/|z|^2) each,
            // shrinking geometrically
            let ratio = (c.norm() / (m * m)).min(0.5);
            return GreenValue {
                g: scale * m.ln(),
                bound: scale * 2.0 * -(1.0 - ratio).ln(),
                iterations: n,
                escaped: true,
            };
        }
        if n == max_iters {
            break;
        }
        z = match family {
            Family::Mandelbrot => z * z + c,
            Family::Tricorn => anti_step(c, anti_step(c, z)),
        };
        scale /= d;
    }
    GreenValue {
        g: 0.0,
        bound: scale * radius.ln(),
        iterations: max_iters,
        escaped: false,
    }
}
