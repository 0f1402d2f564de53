//! Atomic measures built from landing clusters, uniform-angle reference
//! samples, moment diagnostics, and exact rational bookkeeping for identities
//! between cluster measures.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle_arith::{
    enum_misiurewicz_quadratic, enum_misiurewicz_tricorn, enum_parabolic_quadratic,
    misiurewicz_count_quadratic, misiurewicz_count_tricorn, star_discrepancy_angles,
    RationalAngle,
};
use crate::batch;
use crate::dynamics::Family;
use crate::error::MeasureError;
use crate::landing::{cluster, land_angles, ClusterSet, LandingRecord, LandingTarget, DEFAULT_EPSILON};
use crate::rays::{landing_estimate, trace_ray, RaySchedule};

/// Reference angles are `u / 2^REFERENCE_DEPTH`.
pub const REFERENCE_DEPTH: u32 = 40;
pub const DEFAULT_MOMENTS: usize = 8;
/// Fraction of reference rays that must reach `t_end`.
pub const MIN_LANDED_FRACTION: f64 = 0.9;
const NORMALIZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(Complex64, f64)>,
    pub total: f64,
}

impl EmpiricalMeasure {
    pub fn from_atoms(atoms: Vec<(Complex64, f64)>) -> Self {
        let total = atoms.iter().map(|a| a.1).sum();
        EmpiricalMeasure { atoms, total }
    }

    pub fn is_normalized(&self) -> bool {
        (self.total - 1.0).abs() <= NORMALIZED_TOL
    }

    /// The same atoms rescaled to total mass 1.
    pub fn normalized(&self) -> Result<Self, MeasureError> {
        if !(self.total > 0.0) {
            return Err(MeasureError::NotNormalized(self.total));
        }
        Ok(EmpiricalMeasure::from_atoms(
            self.atoms.iter().map(|&(c, w)| (c, w / self.total)).collect(),
        ))
    }

    pub fn mean(&self) -> Complex64 {
        self.atoms.iter().map(|&(c, w)| c * w).sum::<Complex64>() / self.total
    }
}

/// Atom at each cluster representative with weight `multiplicity / normalizer`.
pub fn measure_from_clusters(
    clusters: &ClusterSet,
    normalizer: usize,
) -> Result<EmpiricalMeasure, MeasureError> {
    if normalizer == 0 {
        return Err(MeasureError::BadNormalizer);
    }
    let n = normalizer as f64;
    Ok(EmpiricalMeasure::from_atoms(
        clusters
            .clusters
            .iter()
            .map(|c| (c.representative, c.multiplicity() as f64 / n))
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub family: Family,
    pub seed: u64,
    pub count: usize,
    pub measure: EmpiricalMeasure,
    /// Angles whose rays stalled; they carry no weight.
    pub dropped: Vec<RationalAngle>,
}

impl ReferenceSample {
    pub fn landed(&self) -> usize {
        self.count - self.dropped.len()
    }
}

/// `count` uniform dyadic angles of depth 40 from a seeded ChaCha stream,
/// sorted.
pub fn reference_angles(count: usize, rng_seed: u64) -> Vec<RationalAngle> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let den = BigUint::one() << REFERENCE_DEPTH;
    let mut angles: Vec<RationalAngle> = (0..count)
        .map(|_| {
            let u: u64 = rng.gen_range(0..1u64 << REFERENCE_DEPTH);
            RationalAngle::new(BigInt::from(u), BigInt::from(den.clone()))
                .expect("nonzero denominator")
        })
        .collect();
    angles.sort();
    angles
}

/// Stand-in for the landing pushforward of Lebesgue measure: ray endpoints at
/// `t_end` of uniformly drawn angles, each landed ray weighted equally.
pub fn reference_sample(
    family: Family,
    count: usize,
    rng_seed: u64,
    schedule: &RaySchedule,
) -> Result<ReferenceSample, MeasureError> {
    if count == 0 {
        return Err(MeasureError::EmptySample);
    }
    schedule.validate()?;
    let angles = reference_angles(count, rng_seed);
    let ends = batch::map(&angles, |theta| {
        trace_ray(family, theta, schedule)
            .ok()
            .and_then(|tr| landing_estimate(&tr).ok())
            .map(|(c, _)| c)
    });
    let mut dropped = Vec::new();
    let mut points = Vec::new();
    for (theta, end) in angles.iter().zip(ends) {
        match end {
            Some(c) => points.push(c),
            None => dropped.push(theta.clone()),
        }
    }
    let landed = points.len();
    if (landed as f64) < MIN_LANDED_FRACTION * count as f64 {
        return Err(MeasureError::InsufficientLandings { landed, count });
    }
    let w = 1.0 / landed as f64;
    Ok(ReferenceSample {
        family,
        seed: rng_seed,
        count,
        measure: EmpiricalMeasure::from_atoms(points.into_iter().map(|c| (c, w)).collect()),
        dropped,
    })
}

/// `m_j = sum w c^j` for `j = 1..=k`.
pub fn moments(mu: &EmpiricalMeasure, k: usize) -> Result<Vec<Complex64>, MeasureError> {
    if !mu.is_normalized() {
        return Err(MeasureError::NotNormalized(mu.total));
    }
    let mut out = vec![Complex64::zero(); k];
    for &(c, w) in &mu.atoms {
        let mut p = Complex64::new(w, 0.0);
        for m in out.iter_mut() {
            p *= c;
            *m += p;
        }
    }
    Ok(out)
}

/// Moments about the mean, `sum w (c - mean)^j` for `j = 1..=k`.
pub fn central_moments(mu: &EmpiricalMeasure, k: usize) -> Result<Vec<Complex64>, MeasureError> {
    let mean = mu.mean();
    let shifted = EmpiricalMeasure {
        atoms: mu.atoms.iter().map(|&(c, w)| (c - mean, w)).collect(),
        total: mu.total,
    };
    moments(&shifted, k)
}

/// `max_j |m_j(mu1) - m_j(mu2)|` over `j <= k`.
pub fn moment_distance(
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    k: usize,
) -> Result<f64, MeasureError> {
    let a = moments(mu1, k)?;
    let b = moments(mu2, k)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// Truncated Laurent series in `w` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Laurent {
    terms: BTreeMap<i64, BigRational>,
    floor: i64,
}

impl Laurent {
    fn new(floor: i64) -> Self {
        Laurent {
            terms: BTreeMap::new(),
            floor,
        }
    }

    fn add_term(&mut self, e: i64, c: BigRational) {
        if e < self.floor || c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (&e, c) in &other.terms {
            out.add_term(e, c.clone());
        }
        out
    }

    fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::new(self.floor.max(other.floor));
        for (&ea, a) in &self.terms {
            for (&eb, b) in &other.terms {
                out.add_term(ea + eb, a * b);
            }
        }
        out
    }

    fn coeff(&self, e: i64) -> BigRational {
        self.terms.get(&e).cloned().unwrap_or_else(BigRational::zero)
    }
}

fn inverse_map_series(b: &[BigRational], floor: i64) -> Laurent {
    let mut psi = Laurent::new(floor);
    psi.add_term(1, BigRational::one());
    for (m, bm) in b.iter().enumerate() {
        psi.add_term(-(m as i64), bm.clone());
    }
    psi
}

/// Coefficients `b_0, ..., b_{count-1}` of the inverse uniformizing map of the
/// Mandelbrot complement, `w + sum_m b_m w^{-m}`.
///
/// With `D = 2^{n-1}`, the critical orbit point `z_n` at parameter `psi(w)` is
/// `w^D + O(w^{1-D})`, so its coefficient of `w^{D-1-m}` must vanish. That
/// coefficient is `D b_m` plus terms in `b_0..b_{m-1}`.
pub fn uniformizer_coefficients(count: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(count);
    for m in 0..count as i64 {
        let mut d: i64 = 2;
        while m >= 2 * d - 2 {
            d *= 2;
        }
        let floor = -(m + 2);
        let psi = inverse_map_series(&b, floor);
        let mut z = psi.clone();
        let mut top = 1;
        while top < d {
            z = z.mul(&z).add(&psi);
            top *= 2;
        }
        let known = z.coeff(d - 1 - m);
        b.push(-known / BigRational::from_integer(BigInt::from(d)));
    }
    b
}

/// Exact moments `int c^j d mu_M` for `j = 1..=k`: the constant term of
/// `psi(w)^j`.
pub fn harmonic_moments(k: usize) -> Vec<BigRational> {
    let b = uniformizer_coefficients(k.max(1));
    let floor = -(k as i64) - 1;
    let psi = inverse_map_series(&b, floor);
    let mut p = psi.clone();
    let mut out = Vec::with_capacity(k);
    for j in 1..=k {
        if j > 1 {
            p = p.mul(&psi);
        }
        out.push(p.coeff(0));
    }
    out
}

/// Moments of the exact measure as complex numbers, for comparison with
/// empirical ones.
pub fn harmonic_moments_f64(k: usize) -> Vec<Complex64> {
    harmonic_moments(k)
        .iter()
        .map(|q| Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0))
        .collect()
}

/// Atomic measure with exact rational weights, keyed by cluster id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExactMeasure {
    pub weights: BTreeMap<usize, BigRational>,
}

impl ExactMeasure {
    pub fn dirac(id: usize) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(id, BigRational::one());
        ExactMeasure { weights }
    }

    /// Landing pushforward of the uniform probability on the clustered angles.
    pub fn pushforward(clusters: &ClusterSet) -> Self {
        let total: usize = clusters.clusters.iter().map(|c| c.multiplicity()).sum();
        let den = BigInt::from(total);
        ExactMeasure {
            weights: clusters
                .clusters
                .iter()
                .enumerate()
                .map(|(id, c)| (id, BigRational::new(BigInt::from(c.multiplicity()), den.clone())))
                .collect(),
        }
    }

    /// Uniform probability on the cluster representatives.
    pub fn equidistributed(clusters: &ClusterSet) -> Self {
        let den = BigInt::from(clusters.clusters.len());
        ExactMeasure {
            weights: (0..clusters.clusters.len())
                .map(|id| (id, BigRational::new(BigInt::one(), den.clone())))
                .collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        ExactMeasure {
            weights: self.weights.iter().map(|(&k, w)| (k, w * s)).collect(),
        }
        .pruned()
    }

    pub fn add(&self, other: &ExactMeasure) -> Self {
        let mut weights = self.weights.clone();
        for (&k, w) in &other.weights {
            *weights.entry(k).or_insert_with(BigRational::zero) += w;
        }
        ExactMeasure { weights }.pruned()
    }

    pub fn sub(&self, other: &ExactMeasure) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn total(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |a, w| a + w)
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    fn pruned(mut self) -> Self {
        self.weights.retain(|_, w| !w.is_zero());
        self
    }
}

/// Both sides of the level-`n` identity between the landing pushforward of
/// the uniform measure on `P(n)` and the equidistribution on its landing
/// points, as exact atomic measures over the same clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicIdentity {
    pub n: u32,
    /// Cluster holding the angle 0, i.e. the cusp `1/4`.
    pub cusp: usize,
    pub lhs: ExactMeasure,
    /// Right-hand side with cusp coefficient `1/2^{n-1}`.
    pub stated_rhs: ExactMeasure,
    /// Right-hand side with cusp coefficient `1/(2^n - 1)`.
    pub balanced_rhs: ExactMeasure,
}

impl ParabolicIdentity {
    /// Builds both sides from a clustering of the landings of `P(n)`.
    /// `None` if no cluster contains the angle 0.
    pub fn build(n: u32, clusters: &ClusterSet) -> Option<Self> {
        let zero = RationalAngle::zero();
        let cusp = clusters.clusters.iter().position(|c| c.angles.contains(&zero))?;
        let push = ExactMeasure::pushforward(clusters);
        let equi = ExactMeasure::equidistributed(clusters);
        let lhs = push.sub(&equi);
        let inv_card = BigRational::new(BigInt::one(), (BigInt::one() << n) - 1);
        let inv_half = BigRational::new(BigInt::one(), BigInt::one() << (n - 1));
        let dirac = ExactMeasure::dirac(cusp);
        let head = equi.scale(&inv_card);
        Some(ParabolicIdentity {
            n,
            cusp,
            stated_rhs: head.sub(&dirac.scale(&inv_half)),
            balanced_rhs: head.sub(&dirac.scale(&inv_card)),
            lhs,
        })
    }

    pub fn stated_holds(&self) -> bool {
        self.lhs == self.stated_rhs
    }

    pub fn balanced_holds(&self) -> bool {
        self.lhs == self.balanced_rhs
    }

    /// Total mass of `lhs - stated_rhs`; zero exactly when the cusp
    /// coefficients agree.
    pub fn stated_defect(&self) -> BigRational {
        self.lhs.sub(&self.stated_rhs).total()
    }
}

/// Which angle family a report row enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Misiurewicz,
    Parabolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub k: u32,
    pub cardinality: usize,
    /// Closed-form count, when one applies.
    pub expected_cardinality: Option<i128>,
    pub landed: usize,
    pub landed_fraction: f64,
    pub refined: usize,
    pub clusters: Option<usize>,
    pub star_discrepancy: f64,
    pub moment_distance: Option<f64>,
    /// Moment distance rose more than the slack over the previous row.
    pub non_monotone: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: Family,
    pub kind: RowKind,
    pub moments: usize,
    pub slack: f64,
    pub reference_count: usize,
    pub reference_landed: usize,
    pub reference_seed: u64,
    pub reference_mean: Complex64,
    /// Exact first moment of the limit measure, where one is known.
    pub series_mean: Option<f64>,
    pub rows: Vec<ReportRow>,
}

/// Relative rise in moment distance tolerated between consecutive rows.
pub const MONOTONE_SLACK: f64 = 0.2;

/// Angle set and closed-form count for one row.
pub fn row_angles(
    family: Family,
    kind: RowKind,
    n: u32,
    k: u32,
) -> Result<(Vec<RationalAngle>, Option<i128>, LandingTarget), String> {
    match (family, kind) {
        (Family::Mandelbrot, RowKind::Misiurewicz) => Ok((
            enum_misiurewicz_quadratic(n, k).map_err(|e| e.to_string())?,
            Some(misiurewicz_count_quadratic(n, k)),
            LandingTarget::Misiurewicz { n, k },
        )),
        (Family::Tricorn, RowKind::Misiurewicz) => Ok((
            enum_misiurewicz_tricorn(n, k).map_err(|e| e.to_string())?,
            Some(misiurewicz_count_tricorn(n, k)),
            LandingTarget::Misiurewicz { n, k },
        )),
        (Family::Mandelbrot, RowKind::Parabolic) => Ok((
            enum_parabolic_quadratic(n).map_err(|e| e.to_string())?,
            Some((1i128 << n) - 1),
            LandingTarget::Parabolic { q: n },
        )),
        (Family::Tricorn, RowKind::Parabolic) => {
            Err("parabolic rows are only available for the quadratic family".into())
        }
    }
}

/// Measure of one row: clusters when clustering succeeds, else one atom per
/// landed record.
pub fn row_measure(
    records: &[LandingRecord],
    normalizer: usize,
    epsilon: f64,
) -> (EmpiricalMeasure, Result<ClusterSet, String>) {
    match cluster(records, epsilon) {
        Ok(cs) => {
            let mu = measure_from_clusters(&cs, normalizer.max(1))
                .unwrap_or_else(|_| EmpiricalMeasure::from_atoms(Vec::new()));
            (mu, Ok(cs))
        }
        Err(e) => {
            let w = 1.0 / normalizer.max(1) as f64;
            let mu = EmpiricalMeasure::from_atoms(records.iter().map(|r| (r.c_refined, w)).collect());
            (mu, Err(e.to_string()))
        }
    }
}

/// One row per `(n, k)`: enumerate, land, cluster, compare to `reference`.
/// Failures are recorded in the row's note; the report always completes.
pub fn convergence_report(
    family: Family,
    kind: RowKind,
    indices: &[(u32, u32)],
    schedule: &RaySchedule,
    reference: &ReferenceSample,
    k_moments: usize,
) -> ConvergenceReport {
    let reference_mu = reference.measure.normalized().ok();
    let mut rows: Vec<ReportRow> = Vec::new();
    for &(n, k) in indices {
        let mut row = ReportRow {
            n,
            k,
            cardinality: 0,
            expected_cardinality: None,
            landed: 0,
            landed_fraction: 0.0,
            refined: 0,
            clusters: None,
            star_discrepancy: f64::NAN,
            moment_distance: None,
            non_monotone: false,
            note: String::new(),
        };
        let (angles, expected, target) = match row_angles(family, kind, n, k) {
            Ok(v) => v,
            Err(e) => {
                row.note = e;
                rows.push(row);
                continue;
            }
        };
        row.cardinality = angles.len();
        row.expected_cardinality = expected;
        row.star_discrepancy = star_discrepancy_angles(&angles).unwrap_or(f64::NAN);
        let results = land_angles(family, &angles, target, schedule);
        let mut notes = Vec::new();
        let records: Vec<LandingRecord> = results
            .into_iter()
            .filter_map(|r| r.map_err(|e| notes.push(e.to_string())).ok())
            .collect();
        row.landed = records.len();
        row.landed_fraction = records.len() as f64 / angles.len().max(1) as f64;
        row.refined = records.iter().filter(|r| r.is_refined()).count();
        let (mu, cs) = row_measure(&records, angles.len(), DEFAULT_EPSILON);
        match cs {
            Ok(cs) => row.clusters = Some(cs.clusters.len()),
            Err(e) => notes.push(e),
        }
        if let (Some(reference), Ok(mu)) = (&reference_mu, mu.normalized()) {
            row.moment_distance = moment_distance(&mu, reference, k_moments).ok();
        }
        if let (Some(prev), Some(cur)) = (
            rows.last().and_then(|r| r.moment_distance),
            row.moment_distance,
        ) {
            row.non_monotone = cur > prev * (1.0 + MONOTONE_SLACK);
        }
        if !notes.is_empty() {
            notes.sort();
            notes.dedup();
            row.note = format!("{} failures: {}", row.cardinality - row.landed, notes.join("; "));
        }
        rows.push(row);
    }
    ConvergenceReport {
        family,
        kind,
        moments: k_moments,
        slack: MONOTONE_SLACK,
        reference_count: reference.count,
        reference_landed: reference.landed(),
        reference_seed: reference.seed,
        reference_mean: reference.measure.mean(),
        series_mean: (family == Family::Mandelbrot)
            .then(|| harmonic_moments(1)[0].to_f64().unwrap_or(f64::NAN)),
        rows,
    }
}
