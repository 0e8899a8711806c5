//! Particle state containers shared by the solver, the case library, and the
//! evaluation harness.

use ndarray::{Array1, Array2};

use crate::domain::Domain;
use crate::error::{Result, SphError};

/// Particle tag. The integer codes are the ones serialized into datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ParticleType {
    Fluid = 0,
    Wall = 1,
    MovingWall = 2,
}

impl ParticleType {
    #[inline]
    pub fn code(self) -> i64 {
        self as i64
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(Self::Fluid),
            1 => Ok(Self::Wall),
            2 => Ok(Self::MovingWall),
            other => Err(SphError::Config(format!(
                "unknown particle type code {other}"
            ))),
        }
    }

    #[inline]
    pub fn is_wall(self) -> bool {
        matches!(self, Self::Wall | Self::MovingWall)
    }
}

/// Full state of one time instant: positions, velocities, densities,
/// pressures, masses, and particle tags. All arrays share the leading
/// dimension N. Values, not handles: clone freely, share immutably.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub positions: Array2<f64>,
    pub velocities: Array2<f64>,
    pub densities: Array1<f64>,
    pub pressures: Array1<f64>,
    pub masses: Array1<f64>,
    pub types: Vec<ParticleType>,
}

impl ParticleState {
    /// Validating constructor: checks shared leading dimension, matching
    /// spatial dimension, and strictly positive fluid densities.
    pub fn new(
        positions: Array2<f64>,
        velocities: Array2<f64>,
        densities: Array1<f64>,
        pressures: Array1<f64>,
        masses: Array1<f64>,
        types: Vec<ParticleType>,
    ) -> Result<Self> {
        let n = positions.nrows();
        let dim = positions.ncols();
        if velocities.nrows() != n || velocities.ncols() != dim {
            return Err(SphError::ShapeMismatch {
                name: "velocities".into(),
                expected: format!("[{n}, {dim}]"),
                got: format!("{:?}", velocities.shape()),
            });
        }
        for (name, len) in [
            ("densities", densities.len()),
            ("pressures", pressures.len()),
            ("masses", masses.len()),
            ("types", types.len()),
        ] {
            if len != n {
                return Err(SphError::ShapeMismatch {
                    name: name.into(),
                    expected: format!("[{n}]"),
                    got: format!("[{len}]"),
                });
            }
        }
        for (i, (&rho, ty)) in densities.iter().zip(&types).enumerate() {
            if *ty == ParticleType::Fluid && !(rho > 0.0) {
                return Err(SphError::Config(format!(
                    "fluid particle {i} has non-positive density {rho}"
                )));
            }
        }
        Ok(Self {
            positions,
            velocities,
            densities,
            pressures,
            masses,
            types,
        })
    }

    /// Fluid particles at rest with uniform density `rho0` and lattice mass
    /// `rho0 * dx^dim`.
    pub fn fluid_at_rest(positions: Array2<f64>, rho0: f64, dx: f64) -> Self {
        let n = positions.nrows();
        let dim = positions.ncols();
        let mass = rho0 * dx.powi(dim as i32);
        Self {
            velocities: Array2::zeros((n, dim)),
            densities: Array1::from_elem(n, rho0),
            pressures: Array1::zeros(n),
            masses: Array1::from_elem(n, mass),
            types: vec![ParticleType::Fluid; n],
            positions,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.nrows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.positions.ncols()
    }

    #[inline]
    pub fn is_fluid(&self, i: usize) -> bool {
        self.types[i] == ParticleType::Fluid
    }

    pub fn n_fluid(&self) -> usize {
        self.types
            .iter()
            .filter(|t| **t == ParticleType::Fluid)
            .count()
    }

    /// Check that positions lie inside the box on periodic axes.
    pub fn validate_in_domain(&self, domain: &Domain) -> Result<()> {
        if self.dim() != domain.dim() {
            return Err(SphError::DimensionMismatch {
                expected: domain.dim(),
                got: self.dim(),
            });
        }
        for (i, row) in self.positions.outer_iter().enumerate() {
            for k in 0..domain.dim() {
                if domain.is_periodic(k) && !(row[k] >= 0.0 && row[k] < domain.extent(k)) {
                    return Err(SphError::Config(format!(
                        "particle {i} outside periodic box on axis {k}: {}",
                        row[k]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Keep only the particles at `indices`, preserving order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let dim = self.dim();
        let mut positions = Array2::zeros((indices.len(), dim));
        let mut velocities = Array2::zeros((indices.len(), dim));
        let mut densities = Array1::zeros(indices.len());
        let mut pressures = Array1::zeros(indices.len());
        let mut masses = Array1::zeros(indices.len());
        let mut types = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            positions.row_mut(row).assign(&self.positions.row(i));
            velocities.row_mut(row).assign(&self.velocities.row(i));
            densities[row] = self.densities[i];
            pressures[row] = self.pressures[i];
            masses[row] = self.masses[i];
            types.push(self.types[i]);
        }
        Self {
            positions,
            velocities,
            densities,
            pressures,
            masses,
            types,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constructor_validates_shapes() {
        let pos = array![[0.0, 0.0], [1.0, 1.0]];
        let bad_vel = Array2::zeros((3, 2));
        let err = ParticleState::new(
            pos.clone(),
            bad_vel,
            Array1::ones(2),
            Array1::zeros(2),
            Array1::ones(2),
            vec![ParticleType::Fluid; 2],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_non_positive_fluid_density() {
        let pos = array![[0.0, 0.0]];
        let err = ParticleState::new(
            pos,
            Array2::zeros((1, 2)),
            array![0.0],
            Array1::zeros(1),
            Array1::ones(1),
            vec![ParticleType::Fluid],
        );
        assert!(err.is_err());
    }

    #[test]
    fn type_codes_round_trip() {
        for ty in [
            ParticleType::Fluid,
            ParticleType::Wall,
            ParticleType::MovingWall,
        ] {
            assert_eq!(ParticleType::from_code(ty.code()).unwrap(), ty);
        }
        assert!(ParticleType::from_code(7).is_err());
    }
}
