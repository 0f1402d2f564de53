//! Exact arithmetic on the circle R/Z.
//!
//! Angles are rationals with arbitrary-precision numerator and denominator.
//! The enumerators return sorted, deduplicated lists so downstream files are
//! deterministic and set operations can be done by merging.

mod angle;
mod discrepancy;
mod enumerate;
mod portrait;

pub use angle::{mul, orbit_signature, OrbitSignature, RationalAngle};
pub use discrepancy::{star_discrepancy, star_discrepancy_angles};
pub use enumerate::{
    enum_equal_iterates, enum_misiurewicz_quadratic, enum_misiurewicz_tricorn,
    enum_parabolic_quadratic, enum_x_tricorn, iterate_kernel_size, misiurewicz_count_quadratic,
    misiurewicz_count_tricorn, sorted_difference, sorted_intersection, MAX_ENUMERATION,
};
pub use portrait::{
    enum_critical_pairs, is_unlinked, portrait_validate, tricorn_portraits, tricorn_theta0,
    CriticalPortrait, PortraitClass, PortraitSet,
};
