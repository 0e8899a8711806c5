//! Box domains with per-axis periodicity and minimum-image arithmetic.
//!
//! All coordinates use the origin-at-box-corner convention: on periodic axes
//! positions live in `[0, extent)`, and displacement components in
//! `[-extent/2, extent/2)`. Non-periodic axes are unconstrained at this level;
//! walls handle containment physically.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SphError};

/// Maximum spatial dimension supported. 2D points are padded with a trailing zero.
pub const MAX_DIM: usize = 3;

/// Rectangular simulation box with per-axis periodicity.
///
/// Immutable once constructed; cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    extents: [f64; MAX_DIM],
    periodic: [bool; MAX_DIM],
    dim: usize,
}

impl Domain {
    /// A `dim`-dimensional box. Extents must be strictly positive.
    pub fn new(extents: &[f64], periodic: &[bool]) -> Result<Self> {
        let dim = extents.len();
        if dim < 2 || dim > MAX_DIM {
            return Err(SphError::Config(format!(
                "domain must be 2D or 3D, got {dim} axes"
            )));
        }
        if periodic.len() != dim {
            return Err(SphError::DimensionMismatch {
                expected: dim,
                got: periodic.len(),
            });
        }
        if extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(SphError::Config(format!(
                "domain extents must be strictly positive, got {extents:?}"
            )));
        }
        let mut ext = [0.0; MAX_DIM];
        let mut per = [false; MAX_DIM];
        ext[..dim].copy_from_slice(extents);
        per[..dim].copy_from_slice(periodic);
        Ok(Self {
            extents: ext,
            periodic: per,
            dim,
        })
    }

    pub fn rect(lx: f64, ly: f64, px: bool, py: bool) -> Result<Self> {
        Self::new(&[lx, ly], &[px, py])
    }

    pub fn cuboid(lx: f64, ly: f64, lz: f64, px: bool, py: bool, pz: bool) -> Result<Self> {
        Self::new(&[lx, ly, lz], &[px, py, pz])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    #[inline]
    pub fn periodic(&self) -> &[bool] {
        &self.periodic[..self.dim]
    }

    #[inline]
    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    #[inline]
    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Squared box diagonal; the length scale used for default Sinkhorn epsilon.
    pub fn diagonal_sq(&self) -> f64 {
        self.extents().iter().map(|e| e * e).sum()
    }

    /// Minimum-image displacement from `b` to `a` (i.e. `a - b`).
    ///
    /// On periodic axes each component lies in `[-extent/2, extent/2)`; on
    /// non-periodic axes it is the plain difference. Panics on dimension
    /// mismatch (contract violation).
    #[inline]
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> [f64; MAX_DIM] {
        assert!(
            a.len() == self.dim && b.len() == self.dim,
            "displacement: point dimension mismatch ({} / {} vs domain {})",
            a.len(),
            b.len(),
            self.dim
        );
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = self.displacement_component(a[k] - b[k], k);
        }
        out
    }

    /// Minimum-image of a raw per-axis difference of wrapped coordinates
    /// (`|diff| < 1.5 extent`); branch-based, bitwise-identical to
    /// [`Self::displacement_component`] on that range.
    #[inline(always)]
    pub fn displacement_component_wrapped(&self, diff: f64, axis: usize) -> f64 {
        if !self.periodic[axis] {
            return diff;
        }
        let l = self.extents[axis];
        debug_assert!(diff.abs() < 1.5 * l);
        let half = 0.5 * l;
        if diff >= half {
            diff - l
        } else if diff < -half {
            diff + l
        } else {
            diff
        }
    }

    /// Minimum-image of a raw per-axis difference.
    #[inline]
    pub fn displacement_component(&self, diff: f64, axis: usize) -> f64 {
        if !self.periodic[axis] {
            return diff;
        }
        let l = self.extents[axis];
        let mut d = diff - l * (diff / l).round();
        // round() leaves both half-extent endpoints possible; fold +L/2 to -L/2.
        if d >= 0.5 * l {
            d -= l;
        } else if d < -0.5 * l {
            d += l;
        }
        d
    }

    /// `p + dp`, wrapped into `[0, extent)` on periodic axes.
    #[inline]
    pub fn shift(&self, p: &[f64], dp: &[f64]) -> [f64; MAX_DIM] {
        assert!(
            p.len() == self.dim && dp.len() == self.dim,
            "shift: point dimension mismatch"
        );
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = self.wrap_component(p[k] + dp[k], k);
        }
        out
    }

    /// Wrap a coordinate into `[0, extent)` on a periodic axis; identity otherwise.
    #[inline]
    pub fn wrap_component(&self, x: f64, axis: usize) -> f64 {
        if !self.periodic[axis] {
            return x;
        }
        let l = self.extents[axis];
        let mut w = x - l * (x / l).floor();
        // Guard against w == l from roundoff when x is a tiny negative value.
        if w >= l {
            w -= l;
        }
        w
    }

    /// Wrap a point in place (periodic axes only).
    #[inline]
    pub fn wrap_in_place(&self, p: &mut [f64]) {
        for k in 0..self.dim {
            p[k] = self.wrap_component(p[k], k);
        }
    }

    /// Squared minimum-image distance between two points.
    #[inline]
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.displacement(a, b);
        d[..self.dim].iter().map(|x| x * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit2() -> Domain {
        Domain::rect(1.0, 1.0, true, true).unwrap()
    }

    #[test]
    fn wraps_across_the_boundary() {
        let d = unit2().displacement(&[0.05, 0.5], &[0.95, 0.5]);
        assert_abs_diff_eq!(d[0], 0.10, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.0);
    }

    #[test]
    fn non_periodic_axis_is_plain_difference() {
        let dom = Domain::rect(1.0, 1.0, false, true).unwrap();
        let d = dom.displacement(&[0.05, 0.2], &[0.95, 0.2]);
        assert_abs_diff_eq!(d[0], -0.90, epsilon = 1e-15);
    }

    #[test]
    fn displacement_of_point_with_itself_is_zero() {
        let dom = unit2();
        let p = [0.123, 0.987];
        let d = dom.displacement(&p, &p);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn shift_wraps_into_box() {
        let dom = unit2();
        let s = dom.shift(&[0.9, 0.5], &[0.2, 0.0]);
        assert_abs_diff_eq!(s[0], 0.1, epsilon = 1e-15);
        let id = dom.shift(&[0.3, 0.4], &[0.0, 0.0]);
        assert_eq!(id[0], 0.3);
        assert_eq!(id[1], 0.4);
    }

    #[test]
    fn halfway_point_maps_to_negative_half() {
        let dom = unit2();
        let d = dom.displacement(&[0.75, 0.0], &[0.25, 0.0]);
        // exactly L/2 apart: convention picks -L/2
        assert_eq!(d[0], -0.5);
    }

    #[test]
    fn rejects_bad_extents() {
        assert!(Domain::rect(0.0, 1.0, true, true).is_err());
        assert!(Domain::new(&[1.0], &[true]).is_err());
        assert!(Domain::new(&[1.0, 1.0], &[true]).is_err());
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn displacement_panics_on_dim_mismatch() {
        unit2().displacement(&[0.1], &[0.2, 0.3]);
    }
}
