//! Parameter-plane external rays by Newton continuation along potential levels.
//!
//! A ray point at potential `t` and angle `theta` is the parameter `c` whose
//! critical value sits on the dynamical level `e^{t + 2 pi i theta}` of its
//! own Böttcher coordinate. Far from the connectedness locus that coordinate
//! is the identity up to `O(|c| / |z|)`, so after `N` depth units we solve
//!
//! ```text
//! orbit(c, N) = exp(D^N t + 2 pi i frac(m^N theta))
//! ```
//!
//! with `N` the least depth making `D^N t` exceed the threshold. `D = m = 2`
//! for `z^2 + c`; the Tricorn uses double steps, `D = 4` and `m = (-2)^2`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle_arith::RationalAngle;
use crate::dynamics::{log_orbit, Family};
use crate::error::RayError;

/// Tuning of the continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub substeps_per_halving: u32,
    pub newton_tol: f64,
    pub newton_max_iters: u32,
    pub depth_threshold: f64,
}

impl Default for RaySchedule {
    fn default() -> Self {
        RaySchedule {
            t_start: 32.0,
            t_end: 1e-8,
            substeps_per_halving: 4,
            newton_tol: 1e-13,
            newton_max_iters: 30,
            depth_threshold: 16.0,
        }
    }
}

/// Grid refinement stops at this multiple of the base substep count.
pub const MAX_REFINEMENT: u32 = 64;
/// A new level may move at most this many times the previous move.
pub const CONTINUITY_FACTOR: f64 = 10.0;
const MAX_DAMPING_HALVINGS: u32 = 8;
const STEP_FLOOR_ULPS: f64 = 8.0;

impl RaySchedule {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<(), RayError> {
        let bad = |m: &str| Err(RayError::InvalidSchedule(m.to_string()));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if !(self.t_start > self.t_end && self.t_start.is_finite()) {
            return bad("t_start must exceed t_end");
        }
        if self.substeps_per_halving == 0 {
            return bad("substeps_per_halving must be at least 1");
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return bad("Newton tolerance and iteration cap must be positive");
        }
        if !(self.depth_threshold > 0.0) || self.depth_threshold > 300.0 {
            return bad("depth threshold must lie in (0, 300]");
        }
        Ok(())
    }

    /// Least depth `N` with `D^N t >= threshold`.
    pub fn depth_for(&self, family: Family, t: f64) -> u32 {
        let d = family.depth_degree();
        let mut n = 0;
        let mut p = t;
        while p < self.depth_threshold {
            p *= d;
            n += 1;
        }
        n
    }
}

/// One accepted point of a traced ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayLevel {
    pub t: f64,
    pub depth: u32,
    pub target: Complex64,
    pub c: Complex64,
    /// `|log(orbit / target)|`, the relative residual of the level.
    pub residual: f64,
    pub iters: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TraceStatus {
    Reached,
    Stalled { t_best: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub family: Family,
    pub theta: RationalAngle,
    pub schedule: RaySchedule,
    pub levels: Vec<RayLevel>,
    pub status: TraceStatus,
}

impl RayTrace {
    pub fn reached(&self) -> bool {
        self.status == TraceStatus::Reached
    }

    pub fn last(&self) -> &RayLevel {
        self.levels.last().expect("a trace always holds its seed level")
    }
}

/// Angles `frac(m^N theta)` for every depth the trace can need.
struct DepthAngles {
    angles: Vec<f64>,
}

impl DepthAngles {
    fn new(theta: &RationalAngle, multiplier: i64, max_depth: u32) -> Self {
        let mut angles = Vec::with_capacity(max_depth as usize + 1);
        let mut a = theta.clone();
        for _ in 0..=max_depth {
            angles.push(a.to_f64());
            a = a.mul(multiplier);
        }
        DepthAngles { angles }
    }

    fn log_target(&self, family: Family, t: f64, depth: u32) -> Complex64 {
        let potential = t * family.depth_degree().powi(depth as i32);
        Complex64::new(potential, TAU * self.angles[depth as usize])
    }
}

/// Evaluation of `log orbit(c, depth) - log target` at one point.
struct LevelEval {
    residual: f64,
    step: Complex64,
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > TAU / 2.0 {
        r - TAU
    } else {
        r
    }
}

fn newton_data(family: Family, c: Complex64, depth: u32, log_target: Complex64) -> Option<LevelEval> {
    let lj = log_orbit(c, family, depth as usize)?;
    let d = lj.value - log_target;
    let f = Complex64::new(d.re, wrap_phase(d.im));
    let step = match family {
        Family::Mandelbrot => {
            if lj.dc.norm() == 0.0 {
                return None;
            }
            -f / lj.dc
        }
        Family::Tricorn => {
            let (px, py) = lj.real_partials();
            let det = px.re * py.im - py.re * px.im;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dx = (-f.re * py.im + py.re * f.im) / det;
            let dy = (-px.re * f.im + px.im * f.re) / det;
            Complex64::new(dx, dy)
        }
    };
    step.is_finite().then_some(LevelEval {
        residual: f.norm(),
        step,
    })
}

impl LevelEval {
    /// Either the residual meets the relative tolerance or the Newton
    /// correction is below the spacing of doubles around `c`, in which case
    /// `c` is the best representable solution of the level.
    fn converged(&self, c: Complex64, tol: f64) -> bool {
        self.residual <= tol
            || self.step.norm() <= STEP_FLOOR_ULPS * f64::EPSILON * c.norm().max(1.0)
    }
}

/// Whether `c` is accepted as a solution of the given level.
pub fn level_converged(level: &RayLevel, family: Family, tol: f64) -> bool {
    newton_data(family, level.c, level.depth, level.target.ln())
        .is_some_and(|e| e.converged(level.c, tol))
}

/// Damped Newton for one level. Returns `(c, residual, iterations)`.
fn solve_level(
    family: Family,
    seed: Complex64,
    depth: u32,
    target: Complex64,
    schedule: &RaySchedule,
) -> Option<(Complex64, f64, u32)> {
    let tol = schedule.newton_tol;
    let mut c = seed;
    let mut e = newton_data(family, c, depth, target)?;
    for it in 0..schedule.newton_max_iters {
        if e.converged(c, tol) {
            return Some((c, e.residual, it));
        }
        // Log-domain steps overshoot far from the set, so cap them at half of |c|.
        let mut lambda = (0.5 * c.norm() / e.step.norm()).min(1.0);
        let mut accepted = None;
        for _ in 0..=MAX_DAMPING_HALVINGS {
            let trial = c + e.step * lambda;
            if let Some(et) = newton_data(family, trial, depth, target) {
                if et.residual < e.residual {
                    accepted = Some((trial, et));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let (nc, ne) = accepted?;
        c = nc;
        e = ne;
    }
    e.converged(c, tol)
        .then_some((c, e.residual, schedule.newton_max_iters))
}

/// Traces the parameter ray of angle `theta` from `t_start` down to `t_end`.
///
/// Stalls are returned as data: the trace then ends at the deepest accepted level.
pub fn trace_ray(
    family: Family,
    theta: &RationalAngle,
    schedule: &RaySchedule,
) -> Result<RayTrace, RayError> {
    schedule.validate()?;
    let max_depth = schedule.depth_for(family, schedule.t_end) + 1;
    let angles = DepthAngles::new(theta, family.depth_angle_multiplier(), max_depth);

    let mut t = schedule.t_start;
    let depth0 = schedule.depth_for(family, t);
    let seed_target = angles.log_target(family, t, depth0);
    let seed_guess = Complex64::from_polar(t.exp(), TAU * angles.angles[0]);
    let mut levels = Vec::new();
    let (c0, r0, it0) = solve_level(family, seed_guess, depth0, seed_target, schedule)
        .ok_or_else(|| RayError::InvalidSchedule("cannot seed the ray at t_start".into()))?;
    levels.push(RayLevel {
        t,
        depth: depth0,
        target: seed_target.exp(),
        c: c0,
        residual: r0,
        iters: it0,
    });

    let base = schedule.substeps_per_halving;
    let max_sub = base * MAX_REFINEMENT;
    let mut sub = base;
    let mut c = c0;
    let mut last_move: Option<f64> = None;
    while t > schedule.t_end {
        let t_next = t * 2f64.powf(-1.0 / sub as f64);
        let depth = schedule.depth_for(family, t_next);
        let target = angles.log_target(family, t_next, depth);
        let solved = solve_level(family, c, depth, target, schedule);
        let solved = solved.filter(|(nc, _, _)| {
            let moved = (nc - c).norm();
            match last_move {
                Some(prev) if prev > 0.0 => moved <= CONTINUITY_FACTOR * prev,
                _ => true,
            }
        });
        match solved {
            Some((nc, r, it)) => {
                last_move = Some((nc - c).norm());
                c = nc;
                t = t_next;
                levels.push(RayLevel {
                    t,
                    depth,
                    target: target.exp(),
                    c,
                    residual: r,
                    iters: it,
                });
                sub = (sub / 2).max(base);
            }
            None => {
                sub *= 2;
                if sub > max_sub {
                    return Ok(RayTrace {
                        family,
                        theta: theta.clone(),
                        schedule: schedule.clone(),
                        levels,
                        status: TraceStatus::Stalled { t_best: t },
                    });
                }
            }
        }
    }
    Ok(RayTrace {
        family,
        theta: theta.clone(),
        schedule: schedule.clone(),
        levels,
        status: TraceStatus::Reached,
    })
}

/// Deepest point of a completed trace with the stability indicator
/// `|c(t_end) - c(2 t_end)|`.
pub fn landing_estimate(trace: &RayTrace) -> Result<(Complex64, f64), RayError> {
    if let TraceStatus::Stalled { t_best } = trace.status {
        return Err(RayError::NotReached {
            theta: trace.theta.clone(),
            t_best,
        });
    }
    let last = trace.last();
    let goal = (2.0 * last.t).ln();
    let partner = trace
        .levels
        .iter()
        .min_by(|a, b| {
            (a.t.ln() - goal)
                .abs()
                .total_cmp(&(b.t.ln() - goal).abs())
        })
        .expect("nonempty trace");
    Ok((last.c, (last.c - partner.c).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{green, TricornParam};

    fn a(p: u64, q: u64) -> RationalAngle {
        RationalAngle::from_u64(p, q)
    }

    #[test]
    fn schedule_validation() {
        assert!(RaySchedule::default().validate().is_ok());
        let mut s = RaySchedule::default();
        s.t_end = 64.0;
        assert!(matches!(
            trace_ray(Family::Mandelbrot, &a(0, 1), &s),
            Err(RayError::InvalidSchedule(_))
        ));
        let mut s = RaySchedule::default();
        s.substeps_per_halving = 0;
        assert!(s.validate().is_err());
        let mut s = RaySchedule::default();
        s.t_end = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn depth_rule() {
        let s = RaySchedule::default();
        assert_eq!(s.depth_for(Family::Mandelbrot, 32.0), 0);
        assert_eq!(s.depth_for(Family::Mandelbrot, 8.0), 1);
        assert_eq!(s.depth_for(Family::Tricorn, 8.0), 1);
        assert_eq!(s.depth_for(Family::Tricorn, 1.0), 2);
        let n = s.depth_for(Family::Mandelbrot, 1e-8);
        assert!(2f64.powi(n as i32) * 1e-8 >= 16.0);
        assert!(2f64.powi(n as i32 - 1) * 1e-8 < 16.0);
    }

    #[test]
    fn tip_ray_lands_at_minus_two() {
        let tr = trace_ray(Family::Mandelbrot, &a(1, 2), &RaySchedule::default()).unwrap();
        assert!(tr.reached());
        let (c, _) = landing_estimate(&tr).unwrap();
        assert!((c - Complex64::new(-2.0, 0.0)).norm() < 1e-6, "{c}");
    }

    #[test]
    fn levels_decrease_and_hold_residuals() {
        let tr = trace_ray(Family::Mandelbrot, &a(1, 7), &RaySchedule::default()).unwrap();
        assert!(tr.reached());
        for w in tr.levels.windows(2) {
            assert!(w[1].t < w[0].t);
        }
        for l in &tr.levels {
            assert!(level_converged(l, tr.family, tr.schedule.newton_tol));
            let g = green(l.c, l.c, Family::Mandelbrot);
            assert!((g.g - l.t).abs() <= g.bound + 1e-9 * l.t, "t={} g={}", l.t, g.g);
        }
    }

    #[test]
    fn conjugate_angles_give_conjugate_rays() {
        let s = RaySchedule::default();
        let t1 = trace_ray(Family::Mandelbrot, &a(2, 7), &s).unwrap();
        let t2 = trace_ray(Family::Mandelbrot, &a(5, 7), &s).unwrap();
        assert_eq!(t1.levels.len(), t2.levels.len());
        for (x, y) in t1.levels.iter().zip(&t2.levels) {
            assert_eq!(x.t, y.t);
            let scale = x.c.norm().max(1.0);
            assert!((x.c - y.c.conj()).norm() <= 1e-10 * scale, "{} {}", x.c, y.c);
        }
    }

    #[test]
    fn cusp_ray_approaches_at_the_parabolic_rate() {
        // Near c = 1/4 + e the orbit needs about pi / sqrt(e) steps to pass
        // the gate, so pi / sqrt(c(t) - 1/4) - log2(1/t) tends to a constant.
        let gap = |t_end: f64| {
            let tr = trace_ray(Family::Mandelbrot, &a(0, 1), &RaySchedule::default().with_t_end(t_end)).unwrap();
            assert!(tr.reached());
            let l = tr.last();
            assert!(l.c.im.abs() < 1e-12 && l.c.re > 0.25);
            (std::f64::consts::PI / (l.c.re - 0.25).sqrt(), (1.0 / l.t).log2())
        };
        let (a6, l6) = gap(1e-6);
        let (a8, l8) = gap(1e-8);
        let slope = (a8 - a6) / (l8 - l6);
        assert!((slope - 1.0).abs() < 0.03, "{slope}");
    }

    #[test]
    fn cusp_ray_endpoint_and_quality() {
        let tr = trace_ray(Family::Mandelbrot, &a(0, 1), &RaySchedule::default()).unwrap();
        let (c, q) = landing_estimate(&tr).unwrap();
        // The ray is still about 0.011 from the cusp at t = 1e-8; see above.
        assert!((c.re - 0.25).abs() < 0.02 && c.im.abs() < 1e-12, "{c}");
        assert!(q > 0.0 && q < 2e-3, "{q}");
    }

    #[test]
    fn tricorn_tip_ray() {
        let tr = trace_ray(Family::Tricorn, &a(1, 2), &RaySchedule::default()).unwrap();
        let (c, _) = landing_estimate(&tr).unwrap();
        assert!((c - Complex64::new(-2.0, 0.0)).norm() < 1e-5, "{c}");
    }

    #[test]
    fn period_two_root_rays_meet_slowly() {
        let s = RaySchedule::default();
        let (c1, _) = landing_estimate(&trace_ray(Family::Mandelbrot, &a(1, 3), &s).unwrap()).unwrap();
        let (c2, _) = landing_estimate(&trace_ray(Family::Mandelbrot, &a(2, 3), &s).unwrap()).unwrap();
        assert!((c1 - c2.conj()).norm() < 1e-10);
        assert!((c1 - Complex64::new(-0.75, 0.0)).norm() < 0.15, "{c1}");
        assert!(c1.im > 0.0);
    }

    #[test]
    fn tricorn_conjugate_angles_land_at_conjugates() {
        let s = RaySchedule::default();
        for (p, q) in [(1u64, 12u64), (1, 6), (2, 9)] {
            let t1 = trace_ray(Family::Tricorn, &a(p, q), &s).unwrap();
            let t2 = trace_ray(Family::Tricorn, &a(q - p, q), &s).unwrap();
            if !(t1.reached() && t2.reached()) {
                continue;
            }
            let (c1, _) = landing_estimate(&t1).unwrap();
            let (c2, _) = landing_estimate(&t2).unwrap();
            assert!((c1 - c2.conj()).norm() < 1e-8, "{p}/{q}: {c1} {c2}");
        }
    }

    #[test]
    fn tricorn_levels_match_the_potential() {
        let tr = trace_ray(Family::Tricorn, &a(1, 12), &RaySchedule::default().with_t_end(1e-4)).unwrap();
        assert!(tr.reached());
        for l in &tr.levels {
            let zero = Complex64::new(0.0, 0.0);
            let gc = green(l.c, l.c, Family::Tricorn);
            let g0 = green(l.c, zero, Family::Tricorn);
            // a preimage of the critical point 0
            let c1 = crate::dynamics::quartic_crit(TricornParam::from_c(l.c))[1];
            assert!(crate::dynamics::anti_step(l.c, c1).norm() < 1e-9 * l.c.norm().max(1.0));
            let g1 = green(l.c, c1, Family::Tricorn);
            assert!((gc.g - l.t).abs() <= gc.bound + 1e-9 * l.t, "t={} g={}", l.t, gc.g);
            assert!((2.0 * g0.g - l.t).abs() <= 1e-6 * l.t);
            assert!((g0.g - 2.0 * g1.g).abs() <= 1e-6 * l.t);
        }
    }

    #[test]
    fn stalled_trace_has_no_landing() {
        let tr = RayTrace {
            family: Family::Mandelbrot,
            theta: a(1, 3),
            schedule: RaySchedule::default(),
            levels: vec![RayLevel {
                t: 1.0,
                depth: 4,
                target: Complex64::new(1.0, 0.0),
                c: Complex64::new(1.0, 0.0),
                residual: 0.0,
                iters: 0,
            }],
            status: TraceStatus::Stalled { t_best: 1.0 },
        };
        assert!(matches!(
            landing_estimate(&tr),
            Err(RayError::NotReached { .. })
        ));
    }
}
