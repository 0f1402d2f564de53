use super::angle::RationalAngle;
use crate::error::AngleError;

/// Star discrepancy of a finite point set of [0, 1) against Lebesgue measure.
///
/// For sorted points `x_1 <= ... <= x_N` this is
/// `max_i max(i/N - x_i, x_i - (i-1)/N)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64, AngleError> {
    if points.is_empty() {
        return Err(AngleError::Empty);
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max))
}

pub fn star_discrepancy_angles(angles: &[RationalAngle]) -> Result<f64, AngleError> {
    let xs: Vec<f64> = angles.iter().map(RationalAngle::to_f64).collect();
    star_discrepancy(&xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle_arith::enum_parabolic_quadratic;

    #[test]
    fn equally_spaced() {
        for n in [1usize, 2, 7, 100] {
            let xs: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
            assert!((star_discrepancy(&xs).unwrap() - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_and_empty() {
        assert_eq!(star_discrepancy(&[0.0]).unwrap(), 1.0);
        assert!(star_discrepancy(&[]).is_err());
    }

    #[test]
    fn parabolic_set_is_a_lattice() {
        let p8 = enum_parabolic_quadratic(8).unwrap();
        let d = star_discrepancy_angles(&p8).unwrap();
        assert!((d - 1.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn unsorted_input_is_sorted_first() {
        let d1 = star_discrepancy(&[0.5, 0.0, 0.25, 0.75]).unwrap();
        assert!((d1 - 0.25).abs() < 1e-15);
    }
}
