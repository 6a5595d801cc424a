//! Regridding between the moving physical interval `[a, s]` and the fixed
//! interval `[0, 1]` via `z = (1 - y) a + y s`.
//!
//! Both directions use linear interpolation on uniform grids, which never
//! creates new extrema; endpoint values are copied, not interpolated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of intervals on the fixed grid.
pub const MIN_INTERVALS: usize = 8;

/// Samples of `ũ` on `M + 1` uniform nodes over `y ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedProfile {
    values: Vec<f64>,
}

impl FixedProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidParameter(format!(
                "fixed profile needs at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite profile value".into()));
        }
        Ok(Self { values })
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at_y(&self, y: f64) -> f64 {
        interp_uniform(&self.values, y)
    }
}

/// Samples of `u` on a uniform grid over `z ∈ [a, s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalProfile {
    pub values: Vec<f64>,
    /// Front position.
    pub s: f64,
}

impl PhysicalProfile {
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// Node positions for the left edge `a`.
    pub fn nodes(&self, a: f64) -> impl Iterator<Item = f64> + '_ {
        let n = self.intervals() as f64;
        let s = self.s;
        (0..self.values.len()).map(move |j| {
            let y = j as f64 / n;
            (1.0 - y) * a + y * s
        })
    }
}

/// Linear interpolation of uniform samples over `[0, 1]` at `y`, clamped.
#[inline]
pub fn interp_uniform(values: &[f64], y: f64) -> f64 {
    let n = values.len() - 1;
    if y <= 0.0 {
        return values[0];
    }
    if y >= 1.0 {
        return values[n];
    }
    let x = y * n as f64;
    let i = (x as usize).min(n - 1);
    let w = x - i as f64;
    values[i] + w * (values[i + 1] - values[i])
}

/// Resamples uniform samples over `[0, 1]` onto `intervals + 1` uniform nodes.
pub fn resample_uniform(values: &[f64], intervals: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=intervals)
        .map(|j| interp_uniform(values, j as f64 / intervals as f64))
        .collect();
    out[0] = values[0];
    out[intervals] = values[values.len() - 1];
    out
}

fn check_domain(a: f64, s: f64) -> Result<()> {
    if s > a {
        Ok(())
    } else {
        Err(Error::DegenerateDomain { a, s })
    }
}

/// Maps a physical profile onto the fixed domain with the same node count.
pub fn to_fixed(u: &PhysicalProfile, a: f64) -> Result<FixedProfile> {
    to_fixed_with(u, a, u.intervals())
}

/// Maps a physical profile onto `intervals + 1` fixed-domain nodes.
///
/// Node `y_j` corresponds to `z = (1 - y_j) a + y_j s`; the physical grid is
/// uniform over `[a, s]`, so that position sits at fraction `y_j` of it.
pub fn to_fixed_with(u: &PhysicalProfile, a: f64, intervals: usize) -> Result<FixedProfile> {
    check_domain(a, u.s)?;
    if u.values.len() < 2 {
        return Err(Error::InvalidParameter("physical profile needs two nodes".into()));
    }
    FixedProfile::new(resample_uniform(&u.values, intervals))
}

/// Maps a fixed-domain profile onto a uniform physical grid over `[a, s]`
/// with the same node count.
pub fn to_physical(ut: &FixedProfile, s: f64, a: f64) -> Result<PhysicalProfile> {
    to_physical_with(ut, s, a, ut.intervals())
}

/// Inverse map `u(z) = ũ((z - a) / (s - a))` onto `intervals + 1` physical nodes.
pub fn to_physical_with(
    ut: &FixedProfile,
    s: f64,
    a: f64,
    intervals: usize,
) -> Result<PhysicalProfile> {
    check_domain(a, s)?;
    if intervals == 0 {
        return Err(Error::InvalidParameter("need at least one interval".into()));
    }
    Ok(PhysicalProfile {
        values: resample_uniform(ut.values(), intervals),
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(f: impl Fn(f64) -> f64, a: f64, s: f64, n: usize) -> PhysicalProfile {
        let values = (0..=n)
            .map(|j| f(a + (s - a) * j as f64 / n as f64))
            .collect();
        PhysicalProfile { values, s }
    }

    #[test]
    fn endpoints_are_exact() {
        let u = sample(|z| (3.0 * z).sin(), 1.0, 2.3, 17);
        let ut = to_fixed_with(&u, 1.0, 40).unwrap();
        assert_eq!(ut.values()[0], u.values[0]);
        assert_eq!(ut.values()[40], u.values[17]);
    }

    #[test]
    fn identity_profile_midpoint() {
        let u = sample(|z| z, 1.0, 3.0, 8);
        let ut = to_fixed(&u, 1.0).unwrap();
        assert!((ut.at_y(0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn to_physical_examples() {
        let c = FixedProfile::new(vec![0.37; 9]).unwrap();
        let u = to_physical(&c, 2.0, 1.0).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.37));

        let lin = FixedProfile::new((0..=8).map(|j| j as f64 / 8.0).collect()).unwrap();
        let u = to_physical(&lin, 2.0, 0.0).unwrap();
        // z = 1 is the midpoint node of 8 intervals over [0, 2]
        assert!((u.values[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_on_shared_nodes() {
        let u = sample(|z| z * z - 0.3 * z, 0.5, 1.7, 32);
        let back = to_physical(&to_fixed(&u, 0.5).unwrap(), 1.7, 0.5).unwrap();
        assert_eq!(back.values, u.values);
    }

    #[test]
    fn degenerate_domain_errors() {
        let u = PhysicalProfile {
            values: vec![1.0; 9],
            s: 1.0,
        };
        assert!(matches!(to_fixed(&u, 1.0), Err(Error::DegenerateDomain { .. })));
        let ut = FixedProfile::new(vec![1.0; 9]).unwrap();
        assert!(matches!(to_physical(&ut, 0.5, 1.0), Err(Error::DegenerateDomain { .. })));
    }

    #[test]
    fn fixed_profile_minimum_size() {
        assert!(FixedProfile::new(vec![0.0; 8]).is_err());
        assert!(FixedProfile::new(vec![0.0; 9]).is_ok());
    }

    fn round_trip_error(n: usize) -> f64 {
        let (a, s) = (1.0, 2.5);
        let f = |z: f64| (2.0 * z).sin() + 0.2 * z * z;
        let u = sample(f, a, s, n);
        // fixed grid 3n/2 so nodes do not coincide
        let ut = to_fixed_with(&u, a, 3 * n / 2).unwrap();
        let back = to_physical_with(&ut, s, a, n).unwrap();
        back.values
            .iter()
            .zip(&u.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn round_trip_error_is_second_order() {
        let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| round_trip_error(n)).collect();
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "errors {errs:?}");
        }
    }

    proptest! {
        #[test]
        fn monotone_stays_monotone(mut v in proptest::collection::vec(-5.0f64..5.0, 9..60), m in 8usize..100) {
            v.sort_by(f64::total_cmp);
            let u = PhysicalProfile { values: v.clone(), s: 2.0 };
            let ut = to_fixed_with(&u, 1.0, m).unwrap();
            prop_assert!(ut.values().windows(2).all(|w| w[0] <= w[1]));
            let lo = v[0];
            let hi = v[v.len() - 1];
            prop_assert!(ut.values().iter().all(|&x| x >= lo && x <= hi));
        }
    }
}
