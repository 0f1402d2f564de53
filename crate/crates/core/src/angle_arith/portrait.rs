use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::angle::RationalAngle;
use super::enumerate::enum_equal_iterates;
use crate::error::AngleError;

/// A finite angle set whose elements share one image under `theta -> d theta`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PortraitSet {
    angles: Vec<RationalAngle>,
    degree: u32,
}

impl PortraitSet {
    pub fn new(mut angles: Vec<RationalAngle>, degree: u32) -> Result<Self, AngleError> {
        if angles.is_empty() {
            return Err(AngleError::Empty);
        }
        angles.sort();
        angles.dedup();
        let image = angles[0].mul(degree as i64);
        if angles.iter().any(|a| a.mul(degree as i64) != image) {
            return Err(AngleError::ImageMismatch { degree });
        }
        Ok(PortraitSet { angles, degree })
    }

    pub fn angles(&self) -> &[RationalAngle] {
        &self.angles
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    fn is_disjoint(&self, other: &PortraitSet) -> bool {
        !self.angles.iter().any(|a| other.angles.binary_search(a).is_ok())
    }
}

/// An ordered `(d-1)`-tuple of portrait sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalPortrait {
    pub sets: Vec<PortraitSet>,
    pub degree: u32,
}

impl CriticalPortrait {
    pub fn new(sets: Vec<PortraitSet>, degree: u32) -> Self {
        CriticalPortrait { sets, degree }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PortraitClass {
    Cb0,
    Cb,
    Invalid,
}

/// Arc of the circle cut by sorted `cuts` that contains `x` (not itself a cut).
fn arc_index(cuts: &[RationalAngle], x: &RationalAngle) -> usize {
    let below = cuts.partition_point(|c| c < x);
    below % cuts.len()
}

/// True iff `b` lies in a single component of the circle minus `a`.
pub fn is_unlinked(a: &[RationalAngle], b: &[RationalAngle]) -> Result<bool, AngleError> {
    let mut cuts = a.to_vec();
    cuts.sort();
    cuts.dedup();
    if b.iter().any(|x| cuts.binary_search(x).is_ok()) {
        return Err(AngleError::NotDisjoint);
    }
    if cuts.is_empty() || b.is_empty() {
        return Ok(true);
    }
    let first = arc_index(&cuts, &b[0]);
    Ok(b.iter().all(|x| arc_index(&cuts, x) == first))
}

fn pair_unlinked(a: &PortraitSet, b: &PortraitSet) -> bool {
    is_unlinked(a.angles(), b.angles()).unwrap_or(false)
}

/// Classifies a portrait as simple (`Cb0`), general (`Cb`) or invalid.
pub fn portrait_validate(portrait: &CriticalPortrait) -> PortraitClass {
    let d = portrait.degree;
    let sets = &portrait.sets;
    if d < 2 || sets.len() != (d - 1) as usize {
        return PortraitClass::Invalid;
    }
    let images_ok = sets.iter().all(|s| {
        s.degree == d && {
            let img = s.angles[0].mul(d as i64);
            s.angles.iter().all(|a| a.mul(d as i64) == img)
        }
    });
    if !images_ok {
        return PortraitClass::Invalid;
    }

    let n = sets.len();
    let mut all_pairs_disjoint_unlinked = true;
    let mut disjoint_or_equal = true;
    let mut unlinked_when_disjoint = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let disjoint = sets[i].is_disjoint(&sets[j]);
            let unlinked = disjoint && pair_unlinked(&sets[i], &sets[j]);
            if !(disjoint && unlinked) {
                all_pairs_disjoint_unlinked = false;
            }
            if !disjoint && sets[i] != sets[j] {
                disjoint_or_equal = false;
            }
            if disjoint && !unlinked {
                unlinked_when_disjoint = false;
            }
        }
    }

    if all_pairs_disjoint_unlinked && sets.iter().all(|s| s.len() == 2) {
        return PortraitClass::Cb0;
    }

    let distinct: BTreeSet<&PortraitSet> = sets.iter().collect();
    let union: BTreeSet<&RationalAngle> = sets.iter().flat_map(|s| s.angles.iter()).collect();
    let cardinality_ok = union.len() == d as usize + distinct.len() - 1;
    if disjoint_or_equal && cardinality_ok && unlinked_when_disjoint {
        PortraitClass::Cb
    } else {
        PortraitClass::Invalid
    }
}

impl PartialOrd for PortraitSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PortraitSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.angles
            .cmp(&other.angles)
            .then(self.degree.cmp(&other.degree))
    }
}

/// The set `{alpha, alpha + 1/2}` of solutions of `-2 alpha = theta`.
pub fn tricorn_theta0(theta: &RationalAngle) -> Vec<RationalAngle> {
    let half = RationalAngle::from_u64(1, 2);
    // -2 alpha = theta  <=>  alpha = -theta/2 mod 1/2
    let alpha = halve(&theta.mul(-1));
    let mut v = vec![alpha.clone(), alpha.add(&half)];
    v.sort();
    v
}

/// One solution of `2 x = theta`.
fn halve(theta: &RationalAngle) -> RationalAngle {
    RationalAngle::new(
        num_bigint::BigInt::from(theta.numerator().clone()),
        num_bigint::BigInt::from(theta.denominator().clone()) * 2,
    )
    .expect("nonzero denominator")
}

/// The two critical portraits of the degree-4 second iterate attached to a
/// Tricorn parameter ray of angle `theta`, ordered as `(lambda, -lambda)`.
pub fn tricorn_portraits(
    theta: &RationalAngle,
) -> Result<(CriticalPortrait, CriticalPortrait), AngleError> {
    let theta0 = tricorn_theta0(theta);
    let degenerate = || AngleError::DegeneratePortrait {
        theta: theta.clone(),
        theta0: theta0.clone(),
    };
    let quarter = RationalAngle::from_u64(1, 4);
    let base = halve(&halve(theta));
    let mut betas: Vec<RationalAngle> = Vec::with_capacity(4);
    let mut b = base;
    for _ in 0..4 {
        betas.push(b.clone());
        b = b.add(&quarter);
    }
    betas.sort();
    if betas.iter().any(|b| theta0.binary_search(b).is_ok()) {
        return Err(degenerate());
    }

    // The three ways of splitting four points into two pairs.
    let splits = [
        ([0usize, 1], [2usize, 3]),
        ([0, 2], [1, 3]),
        ([0, 3], [1, 2]),
    ];
    let set0 = PortraitSet::new(theta0.clone(), 4).map_err(|_| degenerate())?;
    let mut found = Vec::new();
    for (p, q) in splits {
        let s1 = PortraitSet::new(vec![betas[p[0]].clone(), betas[p[1]].clone()], 4)
            .map_err(|_| degenerate())?;
        let s2 = PortraitSet::new(vec![betas[q[0]].clone(), betas[q[1]].clone()], 4)
            .map_err(|_| degenerate())?;
        let candidate = CriticalPortrait::new(vec![set0.clone(), s1, s2], 4);
        if portrait_validate(&candidate) == PortraitClass::Cb0 {
            found.push(candidate);
        }
    }
    if found.len() != 1 {
        return Err(degenerate());
    }
    let mut portrait = found.pop().unwrap();
    // Theta_1 holds the pair with the smallest element.
    if portrait.sets[2].angles[0] < portrait.sets[1].angles[0] {
        portrait.sets.swap(1, 2);
    }
    let mut swapped = portrait.clone();
    swapped.sets.swap(1, 2);
    Ok((portrait, swapped))
}

/// Unordered pairs `{alpha, alpha'}` with `d alpha = d alpha'`, `alpha != alpha'`
/// and `d^m x = d^n x` for both elements.
pub fn enum_critical_pairs(
    d: u32,
    m: u32,
    n: u32,
) -> Result<Vec<(RationalAngle, RationalAngle)>, AngleError> {
    let angles = enum_equal_iterates(d as i64, m, n)?;
    let mut by_image: BTreeMap<RationalAngle, Vec<RationalAngle>> = BTreeMap::new();
    for a in angles {
        by_image.entry(a.mul(d as i64)).or_default().push(a);
    }
    let mut out = Vec::new();
    for group in by_image.values() {
        for i in 0..group.len() {
            for j in (i + 1)..group.len() {
                out.push((group[i].clone(), group[j].clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
