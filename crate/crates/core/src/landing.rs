//! Refinement of ray endpoints onto Misiurewicz and parabolic loci, and
//! clustering of refined endpoints into landing multiplicities.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle_arith::RationalAngle;
use crate::batch;
use crate::dynamics::{anti_orbit, quad_orbit, Family, Start};
use crate::error::LandingError;
use crate::rays::{landing_estimate, trace_ray, RaySchedule};
use crate::roots::{aberth, circle_start, companion_roots};

/// Refined records must satisfy `residual <= RESIDUAL_TOL * max(1, |c|)`.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// `|f^{n-k}(0)|` at or below this means the root is a centre, not in Per*.
pub const STRICTNESS_MIN: f64 = 1e-3;
pub const CYCLE_TOL: f64 = 1e-9;
pub const DEFAULT_EPSILON: f64 = 1e-6;
const NEWTON_MAX_ITERS: usize = 100;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandingKind {
    Misiurewicz { n: u32, k: u32 },
    Parabolic { q: u32 },
    Unrefined,
}

impl fmt::Display for LandingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LandingKind::Misiurewicz { n, k } => write!(f, "misiurewicz({n},{k})"),
            LandingKind::Parabolic { q } => write!(f, "parabolic({q})"),
            LandingKind::Unrefined => f.write_str("unrefined"),
        }
    }
}

impl std::str::FromStr for LandingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("unknown landing kind {s:?}");
        let args = |prefix: &str| -> Option<Vec<u32>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|x| x.trim().parse().ok()).collect()
        };
        if s == "unrefined" {
            return Ok(LandingKind::Unrefined);
        }
        if let Some(v) = args("misiurewicz") {
            if let [n, k] = v[..] {
                return Ok(LandingKind::Misiurewicz { n, k });
            }
        }
        if let Some(v) = args("parabolic") {
            if let [q] = v[..] {
                return Ok(LandingKind::Parabolic { q });
            }
        }
        Err(bad())
    }
}

/// Outcome of a refinement, before it is attached to an angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub c: Complex64,
    pub kind: LandingKind,
    pub residual: f64,
    /// `|f^{n-k}(0)|` for Misiurewicz refinements; NaN for parabolic ones.
    pub strictness: f64,
    pub cycle_period: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingRecord {
    pub theta: RationalAngle,
    pub family: Family,
    pub n: u32,
    pub k: u32,
    pub c_ray: Complex64,
    pub c_refined: Complex64,
    pub kind: LandingKind,
    pub residual: f64,
    pub strictness: f64,
    pub cycle_period: Option<u32>,
}

impl LandingRecord {
    pub fn new(
        theta: RationalAngle,
        family: Family,
        (n, k): (u32, u32),
        c_ray: Complex64,
        r: Refinement,
    ) -> Self {
        LandingRecord {
            theta,
            family,
            n,
            k,
            c_ray,
            c_refined: r.c,
            kind: r.kind,
            residual: r.residual,
            strictness: r.strictness,
            cycle_period: r.cycle_period,
        }
    }

    pub fn is_refined(&self) -> bool {
        self.kind != LandingKind::Unrefined
    }
}

fn orbit_values(family: Family, c: Complex64, n: usize) -> Vec<Complex64> {
    let mut z = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(z);
    for _ in 0..n {
        z = match family {
            Family::Mandelbrot => z * z + c,
            Family::Tricorn => z.conj() * z.conj() + c,
        };
        out.push(z);
    }
    out
}

/// Least `p <= n - k` with `|f^{k+p}(0) - f^k(0)| <= CYCLE_TOL`.
pub fn cycle_period(family: Family, c: Complex64, n: u32, k: u32) -> Option<u32> {
    let orbit = orbit_values(family, c, n as usize);
    let base = orbit[k as usize];
    (1..=n - k).find(|&p| (orbit[(k + p) as usize] - base).norm() <= CYCLE_TOL)
}

/// Value and Newton step of `f^n(0) - f^k(0)`.
fn preperiodic_step(family: Family, c: Complex64, n: u32, k: u32) -> Option<(f64, Complex64)> {
    match family {
        Family::Mandelbrot => {
            let a = quad_orbit(c, Start::CriticalPoint, n as usize).ok()?;
            let b = quad_orbit(c, Start::CriticalPoint, k as usize).ok()?;
            let h = a.value - b.value;
            let dh = a.dc - b.dc;
            let step = -h / dh;
            step.is_finite().then_some((h.norm(), step))
        }
        Family::Tricorn => {
            let a = anti_orbit(c, Start::CriticalPoint, n as usize).ok()?;
            let b = anti_orbit(c, Start::CriticalPoint, k as usize).ok()?;
            let h = a.value - b.value;
            let (ax, ay) = a.real_partials();
            let (bx, by) = b.real_partials();
            let (px, py) = (ax - bx, ay - by);
            let det = px.re * py.im - py.re * px.im;
            let dx = (-h.re * py.im + py.re * h.im) / det;
            let dy = (-px.re * h.im + px.im * h.re) / det;
            let step = Complex64::new(dx, dy);
            step.is_finite().then_some((h.norm(), step))
        }
    }
}

/// Damped Newton run until the step reaches rounding level; returns the point
/// with the smallest residual seen.
fn newton_preperiodic(family: Family, seed: Complex64, n: u32, k: u32) -> Option<(Complex64, f64)> {
    let mut c = seed;
    let (mut r, mut step) = preperiodic_step(family, c, n, k)?;
    let mut best = (c, r);
    for _ in 0..NEWTON_MAX_ITERS {
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let trial = c + step * lambda;
            if let Some((rt, st)) = preperiodic_step(family, trial, n, k) {
                if rt < r || step.norm() * lambda <= 4.0 * f64::EPSILON * c.norm().max(1.0) {
                    next = Some((trial, rt, st));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((nc, nr, ns)) = next else { break };
        let moved = (nc - c).norm();
        c = nc;
        r = nr;
        step = ns;
        if r < best.1 {
            best = (c, r);
        }
        if r == 0.0 || moved <= 4.0 * f64::EPSILON * c.norm().max(1.0) {
            break;
        }
    }
    Some(best)
}

/// Refines a ray endpoint onto `f^n(0) = f^k(0)`.
///
/// For the Tricorn with `n - k` odd the system solved is `(2n, 2k)`, the locus
/// such landing points are guaranteed to lie on. A root whose `|f^{n-k}(0)|`
/// is at most `STRICTNESS_MIN` is a centre and is returned as `Unrefined` at
/// the seed.
pub fn refine_misiurewicz(
    family: Family,
    seed: Complex64,
    n: u32,
    k: u32,
) -> Result<Refinement, LandingError> {
    if k < 1 || n <= k {
        return Err(LandingError::InvalidIndices { n, k });
    }
    let (sn, sk) = match family {
        Family::Tricorn if (n - k) % 2 == 1 => (2 * n, 2 * k),
        _ => (n, k),
    };
    let (c, residual) =
        newton_preperiodic(family, seed, sn, sk).ok_or(LandingError::NewtonDiverged { seed })?;
    let scale = c.norm().max(1.0);
    if !c.is_finite() || residual > 1e-6 * scale {
        return Err(LandingError::NewtonDiverged { seed });
    }
    let strictness = orbit_values(family, c, (n - k) as usize)[(n - k) as usize].norm();
    if strictness <= STRICTNESS_MIN {
        return Ok(Refinement {
            c: seed,
            kind: LandingKind::Unrefined,
            residual,
            strictness,
            cycle_period: None,
        });
    }
    let kind = if residual <= RESIDUAL_TOL * scale {
        LandingKind::Misiurewicz { n, k }
    } else {
        LandingKind::Unrefined
    };
    Ok(Refinement {
        c,
        kind,
        residual,
        strictness,
        cycle_period: cycle_period(family, c, sn, sk),
    })
}

/// `p_c^s` and its partials at `z`: value, d/dz, d/dc, d2/dz2, d2/dzdc.
fn cycle_jets(c: Complex64, z0: Complex64, s: u32) -> [Complex64; 5] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (mut z, mut zz, mut zc, mut zzz, mut zzc) = (z0, one, zero, zero, zero);
    for _ in 0..s {
        zzz = 2.0 * (zz * zz + z * zzz);
        zzc = 2.0 * (zc * zz + z * zzc);
        zz = 2.0 * z * zz;
        zc = 2.0 * z * zc + 1.0;
        z = z * z + c;
    }
    [z, zz, zc, zzz, zzc]
}

/// Coefficients of `p_c^s(z) - z` in `z`, lowest degree first.
fn cycle_poly(c: Complex64, s: u32) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut p = vec![zero, Complex64::new(1.0, 0.0)];
    for _ in 0..s {
        let mut sq = vec![zero; 2 * p.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq[0] += c;
        p = sq;
    }
    p[1] -= 1.0;
    p
}

/// Above this degree Aberth starts on a circle; the companion eigenvalue
/// sweep costs more than the iterations it saves.
const COMPANION_MAX_DEGREE: usize = 32;

/// All points of period dividing `s` for `p_c`, with their cycle multipliers.
pub fn periodic_points(c: Complex64, s: u32) -> Vec<(Complex64, Complex64)> {
    let f = |z: Complex64| {
        let j = cycle_jets(c, z, s);
        (j[0] - z, j[1] - 1.0)
    };
    let settled = |zs: &[Complex64]| zs.iter().all(|&z| f(z).0.norm() <= 1e-8 * z.norm().max(1.0));
    let companion = || {
        let coeffs = cycle_poly(c, s);
        let d = coeffs.len() - 1;
        let init = companion_roots(&coeffs)
            .filter(|r| r.len() == d && r.iter().all(|z| z.norm() < 8.0))
            .unwrap_or_else(|| circle_start(d, 2.5));
        aberth(f, init, 1e-14, 500)
    };
    let d = 1usize << s;
    let roots = if d > COMPANION_MAX_DEGREE {
        let r = aberth(f, circle_start(d, 2.0 + c.norm().sqrt()), 1e-14, 500);
        if settled(&r) {
            r
        } else {
            companion()
        }
    } else {
        companion()
    };
    roots.into_iter().map(|z| (z, cycle_jets(c, z, s)[1])).collect()
}

fn parabolic_newton(
    seed_c: Complex64,
    seed_z: Complex64,
    s: u32,
    omega: Complex64,
) -> Option<(Complex64, Complex64)> {
    let eval = |c: Complex64, z: Complex64| {
        let [p, pz, pc, pzz, pzc] = cycle_jets(c, z, s);
        let g1 = p - z;
        let g2 = pz - omega;
        let det = (pz - 1.0) * pzc - pc * pzz;
        let dz = -(g1 * pzc - pc * g2) / det;
        let dc = -((pz - 1.0) * g2 - pzz * g1) / det;
        (g1.norm().max(g2.norm()), dc, dz)
    };
    let (mut c, mut z) = (seed_c, seed_z);
    let (mut r, mut dc, mut dz) = eval(c, z);
    for _ in 0..NEWTON_MAX_ITERS {
        if !(dc.is_finite() && dz.is_finite()) {
            return None;
        }
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let (tc, tz) = (c + dc * lambda, z + dz * lambda);
            let (rt, tdc, tdz) = eval(tc, tz);
            if rt < r {
                next = Some((tc, tz, rt, tdc, tdz));
                break;
            }
            lambda *= 0.5;
        }
        let Some((nc, nz, nr, ndc, ndz)) = next else { break };
        let moved = (nc - c).norm() + (nz - z).norm();
        (c, z, r, dc, dz) = (nc, nz, nr, ndc, ndz);
        if r == 0.0 || moved <= 4.0 * f64::EPSILON * (c.norm() + z.norm()).max(1.0) {
            break;
        }
    }
    (r <= 1e-10 * c.norm().max(1.0)).then_some((c, z))
}

/// Residual of `(p_c^q(z) - z, (p_c^q)'(z) - 1)`.
pub fn parabolic_residual(c: Complex64, z: Complex64, q: u32) -> f64 {
    let j = cycle_jets(c, z, q);
    (j[0] - z).norm().max((j[1] - 1.0).norm())
}

/// Re-solves from every point of the cycle through `z` and keeps the best
/// residual. How well a double pair `(c, z)` can satisfy the system depends
/// on where the cycle is entered: near the critical value the second
/// derivative is huge and `ulp(z)` alone costs ~1e-11.
fn polish_over_cycle(
    c: Complex64,
    z: Complex64,
    s: u32,
    omega: Complex64,
    q: u32,
) -> (Complex64, f64) {
    let mut best = (c, parabolic_residual(c, z, q));
    let mut w = z;
    for _ in 0..s {
        if let Some((c2, z2)) = parabolic_newton(c, w, s, omega) {
            if (c2 - c).norm() <= 1e-9 {
                let r = parabolic_residual(c2, z2, q);
                if r < best.1 {
                    best = (c2, r);
                }
            }
        }
        w = w * w + c;
    }
    best
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Refines a ray endpoint onto the root of a hyperbolic component whose
/// parabolic cycle returns after `q` steps.
///
/// Every factorisation `q = s r` is tried: a cycle of period `s` with
/// multiplier a primitive `r`-th root of unity (the `q`-system itself is
/// singular at satellite roots). The converged candidate nearest to the seed
/// wins.
pub fn refine_parabolic_quadratic(seed: Complex64, q: u32) -> Result<Refinement, LandingError> {
    if q == 0 {
        return Err(LandingError::InvalidIndices { n: 0, k: 0 });
    }
    // (c, z, s, omega); candidates are generated in increasing s.
    let mut candidates: Vec<(Complex64, Complex64, u32, Complex64)> = Vec::new();
    for s in (1..=q).filter(|s| q % s == 0) {
        let r = q / s;
        let points = periodic_points(seed, s);
        for j in (0..r).filter(|&j| gcd(j, r) == 1) {
            let omega = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / r as f64);
            let mut starts: Vec<&(Complex64, Complex64)> = points.iter().collect();
            starts.sort_by(|a, b| (a.1 - omega).norm().total_cmp(&(b.1 - omega).norm()));
            for (z, _) in starts.into_iter().take(4) {
                if let Some((c, z)) = parabolic_newton(seed, *z, s, omega) {
                    candidates.push((c, z, s, omega));
                }
            }
        }
    }
    // A satellite root also solves the system of any multiple of its period,
    // where that system is singular and converges poorly. Among candidates
    // that agree to 1e-6 keep the one of least period.
    let mut distinct: Vec<(Complex64, Complex64, u32, Complex64)> = Vec::new();
    for cand in candidates {
        if !distinct.iter().any(|d| (d.0 - cand.0).norm() <= 1e-6) {
            distinct.push(cand);
        }
    }
    distinct.sort_by(|a, b| (a.0 - seed).norm().total_cmp(&(b.0 - seed).norm()));
    let (c, z, s, omega) = *distinct
        .first()
        .ok_or(LandingError::NewtonDiverged { seed })?;
    let d0 = (c - seed).norm();
    if distinct
        .iter()
        .skip(1)
        .any(|d| (d.0 - seed).norm() - d0 <= TIE_TOL)
    {
        return Err(LandingError::AmbiguousSeed { seed });
    }
    let (c, residual) = polish_over_cycle(c, z, s, omega, q);
    let kind = if residual <= RESIDUAL_TOL * c.norm().max(1.0) {
        LandingKind::Parabolic { q }
    } else {
        LandingKind::Unrefined
    };
    Ok(Refinement {
        c,
        kind,
        residual,
        strictness: f64::NAN,
        cycle_period: None,
    })
}

/// Which locus a batch of rays is refined onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LandingTarget {
    Misiurewicz { n: u32, k: u32 },
    Parabolic { q: u32 },
}

impl LandingTarget {
    pub fn indices(self) -> (u32, u32) {
        match self {
            LandingTarget::Misiurewicz { n, k } => (n, k),
            LandingTarget::Parabolic { q } => (q, 0),
        }
    }
}

/// Traces the ray of `theta`, then refines its endpoint.
pub fn land_angle(
    family: Family,
    theta: &RationalAngle,
    target: LandingTarget,
    schedule: &RaySchedule,
) -> Result<LandingRecord, LandingError> {
    let trace = trace_ray(family, theta, schedule)?;
    let (c_ray, _) = landing_estimate(&trace)?;
    let refinement = match target {
        LandingTarget::Misiurewicz { n, k } => refine_misiurewicz(family, c_ray, n, k)?,
        LandingTarget::Parabolic { q } => {
            if family != Family::Mandelbrot {
                return Err(LandingError::InvalidIndices { n: q, k: 0 });
            }
            refine_parabolic_quadratic(c_ray, q)?
        }
    };
    Ok(LandingRecord::new(
        theta.clone(),
        family,
        target.indices(),
        c_ray,
        refinement,
    ))
}

/// `land_angle` over a batch, in input order.
pub fn land_angles(
    family: Family,
    angles: &[RationalAngle],
    target: LandingTarget,
    schedule: &RaySchedule,
) -> Vec<Result<LandingRecord, LandingError>> {
    batch::map(angles, |theta| land_angle(family, theta, target, schedule))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: Complex64,
    /// Indices into the clustered record list, ascending.
    pub members: Vec<usize>,
    pub angles: Vec<RationalAngle>,
    pub diameter: f64,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub epsilon: f64,
    /// Cluster id of every input record.
    pub assignment: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering of refined positions at threshold `epsilon`.
/// Cluster ids follow the first member in input order; the representative is
/// that first member's position.
pub fn cluster(records: &[LandingRecord], epsilon: f64) -> Result<ClusterSet, LandingError> {
    let pos: Vec<Complex64> = records.iter().map(|r| r.c_refined).collect();
    let n = pos.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pos[a].re.total_cmp(&pos[b].re).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..n).collect();
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if pos[j].re - pos[i].re > epsilon {
                break;
            }
            if (pos[j] - pos[i]).norm() <= epsilon {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut assignment = vec![0; n];
    let mut clusters: Vec<Cluster> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if id_of_root[root] == usize::MAX {
            id_of_root[root] = clusters.len();
            clusters.push(Cluster {
                representative: pos[i],
                members: Vec::new(),
                angles: Vec::new(),
                diameter: 0.0,
            });
        }
        let id = id_of_root[root];
        assignment[i] = id;
        clusters[id].members.push(i);
        clusters[id].angles.push(records[i].theta.clone());
    }
    for (id, cl) in clusters.iter_mut().enumerate() {
        let mut diam: f64 = 0.0;
        for (a, &i) in cl.members.iter().enumerate() {
            for &j in &cl.members[a + 1..] {
                diam = diam.max((pos[i] - pos[j]).norm());
            }
        }
        cl.diameter = diam;
        if diam > 10.0 * epsilon {
            return Err(LandingError::ChainingDetected {
                cluster: id,
                diameter: diam,
                epsilon,
            });
        }
    }
    Ok(ClusterSet {
        clusters,
        epsilon,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle_arith::{enum_misiurewicz_quadratic, enum_parabolic_quadratic};

    fn a(p: u64, q: u64) -> RationalAngle {
        RationalAngle::from_u64(p, q)
    }

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn record_at(theta: RationalAngle, c: Complex64) -> LandingRecord {
        LandingRecord {
            theta,
            family: Family::Mandelbrot,
            n: 2,
            k: 0,
            c_ray: c,
            c_refined: c,
            kind: LandingKind::Parabolic { q: 2 },
            residual: 0.0,
            strictness: f64::NAN,
            cycle_period: None,
        }
    }

    #[test]
    fn tip_from_ray_seed() {
        let rec = land_angle(
            Family::Mandelbrot,
            &a(1, 2),
            LandingTarget::Misiurewicz { n: 3, k: 2 },
            &RaySchedule::default(),
        )
        .unwrap();
        assert!((rec.c_refined + 2.0).norm() <= 1e-15);
        assert!(rec.residual < 1e-14);
        assert_eq!(rec.kind, LandingKind::Misiurewicz { n: 3, k: 2 });
        assert_eq!(rec.cycle_period, Some(1));
        assert!(rec.strictness > 1.0);
    }

    #[test]
    fn per_n1_roots_are_all_centres() {
        // p^3(0) - p(0) = c^2 (c + 1)^2
        for seed in [cx(0.05, 0.02), cx(-0.97, 0.03), cx(-1.1, -0.05)] {
            let r = refine_misiurewicz(Family::Mandelbrot, seed, 3, 1).unwrap();
            assert_eq!(r.kind, LandingKind::Unrefined);
            assert!(r.strictness <= STRICTNESS_MIN);
            assert_eq!(r.c, seed);
        }
    }

    #[test]
    fn tricorn_tip_solves_doubled_system() {
        let rec = land_angle(
            Family::Tricorn,
            &a(1, 2),
            LandingTarget::Misiurewicz { n: 3, k: 2 },
            &RaySchedule::default(),
        )
        .unwrap();
        assert!((rec.c_refined - cx(-2.0, 0.0)).norm() < 1e-12);
        let c = rec.c_refined;
        let f6 = anti_orbit(c, Start::CriticalPoint, 6).unwrap().value;
        let f4 = anti_orbit(c, Start::CriticalPoint, 4).unwrap().value;
        assert!((f6 - f4).norm() < 1e-10);
    }

    #[test]
    fn parabolic_examples() {
        let r = refine_parabolic_quadratic(cx(0.26, 0.0), 1).unwrap();
        assert!((r.c - 0.25).norm() < 1e-12, "{}", r.c);
        assert_eq!(r.kind, LandingKind::Parabolic { q: 1 });
        let r = refine_parabolic_quadratic(cx(-0.757, 0.108), 2).unwrap();
        assert!((r.c + 0.75).norm() < 1e-12, "{}", r.c);
        assert!(r.residual <= 1e-12);
        let seed = landing_estimate(
            &trace_ray(Family::Mandelbrot, &a(3, 7), &RaySchedule::default()).unwrap(),
        )
        .unwrap()
        .0;
        let r = refine_parabolic_quadratic(seed, 3).unwrap();
        assert!((r.c + 1.75).norm() < 1e-12, "{}", r.c);
    }

    #[test]
    fn period_three_roots() {
        // Satellite roots on the main cardioid are mu/2 - mu^2/4 with mu the
        // internal multiplier; the primitive one is where the real 3-cycle
        // is born, c = -7/4.
        let mu = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let rabbit = mu / 2.0 - mu * mu / 4.0;
        let expect = [(a(1, 7), rabbit), (a(3, 7), cx(-1.75, 0.0)), (a(6, 7), rabbit.conj())];
        for (th, want) in expect {
            let rec = land_angle(
                Family::Mandelbrot,
                &th,
                LandingTarget::Parabolic { q: 3 },
                &RaySchedule::default(),
            )
            .unwrap();
            assert!((rec.c_refined - want).norm() < 1e-12, "{th}: {}", rec.c_refined);
            assert!(rec.residual <= RESIDUAL_TOL * rec.c_refined.norm().max(1.0));
        }
        let real = periodic_points(cx(-1.75, 0.0), 3);
        let best = real.iter().map(|(_, m)| (m - 1.0).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6);
    }

    #[test]
    fn p2_clusters() {
        let angles = enum_parabolic_quadratic(2).unwrap();
        let recs: Vec<LandingRecord> = land_angles(
            Family::Mandelbrot,
            &angles,
            LandingTarget::Parabolic { q: 2 },
            &RaySchedule::default(),
        )
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
        let cs = cluster(&recs, DEFAULT_EPSILON).unwrap();
        assert_eq!(cs.clusters.len(), 2);
        assert!((cs.clusters[0].representative - 0.25).norm() < 1e-12);
        assert_eq!(cs.clusters[0].multiplicity(), 1);
        assert!((cs.clusters[1].representative + 0.75).norm() < 1e-12);
        assert_eq!(cs.clusters[1].multiplicity(), 2);
    }

    #[test]
    fn c32_is_one_cluster() {
        let angles = enum_misiurewicz_quadratic(3, 2).unwrap();
        let recs: Vec<LandingRecord> = land_angles(
            Family::Mandelbrot,
            &angles,
            LandingTarget::Misiurewicz { n: 3, k: 2 },
            &RaySchedule::default(),
        )
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
        let cs = cluster(&recs, DEFAULT_EPSILON).unwrap();
        assert_eq!(cs.clusters.len(), 1);
        assert!((cs.clusters[0].representative + 2.0).norm() <= 1e-15);
        assert_eq!(cs.clusters[0].multiplicity(), 1);
    }

    #[test]
    fn duplicates_merge() {
        let recs: Vec<LandingRecord> = (0..5).map(|i| record_at(a(i, 7), cx(0.1, 0.2))).collect();
        let cs = cluster(&recs, DEFAULT_EPSILON).unwrap();
        assert_eq!(cs.clusters.len(), 1);
        assert_eq!(cs.clusters[0].multiplicity(), 5);
        assert_eq!(cs.assignment, vec![0; 5]);
    }

    #[test]
    fn chaining_is_rejected() {
        let recs: Vec<LandingRecord> = (0..20)
            .map(|i| record_at(a(i, 20), cx(i as f64 * 0.9e-6, 0.0)))
            .collect();
        assert!(matches!(
            cluster(&recs, DEFAULT_EPSILON),
            Err(LandingError::ChainingDetected { .. })
        ));
    }

    #[test]
    fn cluster_ids_follow_input_order() {
        let recs = vec![
            record_at(a(0, 3), cx(1.0, 0.0)),
            record_at(a(1, 3), cx(-1.0, 0.0)),
            record_at(a(2, 3), cx(1.0, 1e-9)),
        ];
        let cs = cluster(&recs, DEFAULT_EPSILON).unwrap();
        assert_eq!(cs.assignment, vec![0, 1, 0]);
        assert_eq!(cs.clusters[0].angles, vec![a(0, 3), a(2, 3)]);
    }

    #[test]
    fn cycle_period_of_known_points() {
        // c = i: 0 -> i -> -1+i -> -i -> -1+i, a 2-cycle entered at step 2
        let c = cx(0.0, 1.0);
        assert_eq!(cycle_period(Family::Mandelbrot, c, 4, 2), Some(2));
        assert_eq!(cycle_period(Family::Mandelbrot, cx(-2.0, 0.0), 3, 2), Some(1));
    }

    proptest::proptest! {
        #[test]
        fn every_record_in_exactly_one_cluster(xs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..60)) {
            let recs: Vec<LandingRecord> = xs
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| record_at(a(i as u64, 64), cx(x, y)))
                .collect();
            if let Ok(cs) = cluster(&recs, 1e-3) {
                let total: usize = cs.clusters.iter().map(Cluster::multiplicity).sum();
                proptest::prop_assert_eq!(total, recs.len());
                for (i, id) in cs.assignment.iter().enumerate() {
                    proptest::prop_assert!(cs.clusters[*id].members.contains(&i));
                }
                for (i, p) in cs.clusters.iter().enumerate() {
                    for q in &cs.clusters[i + 1..] {
                        proptest::prop_assert!((p.representative - q.representative).norm() > 1e-3);
                    }
                }
            }
        }
    }
}
