//! Dataset serialization: HDF5 trajectory splits, JSON metadata, split
//! construction, and temporal subsampling.
//!
//! Layout of one dataset directory:
//!
//! ```text
//! <dir>/train.h5      groups "00000", "00001", ... each holding
//! <dir>/valid.h5        "position"      float32 [T, N, dim]
//! <dir>/test.h5         "particle_type" int64   [N]
//! <dir>/metadata.json
//! ```

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use crate::cases::{CaseSpec, SplitPlan};
use crate::domain::Domain;
use crate::error::{Result, SphError};
use crate::sph::DensityMode;

/// Time-ordered stack of particle positions plus static particle types.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `[T, N, dim]`, single precision as serialized.
    pub positions: Array3<f32>,
    /// `[N]` particle-type codes (0 fluid, 1 wall, 2 moving wall).
    pub particle_types: Array1<i64>,
    /// Physical time between stored frames.
    pub frame_dt: f64,
}

impl Trajectory {
    pub fn new(positions: Array3<f32>, particle_types: Array1<i64>, frame_dt: f64) -> Self {
        assert_eq!(
            positions.shape()[1],
            particle_types.len(),
            "types length must match particle count"
        );
        assert!(positions.shape()[0] >= 1, "need at least one frame");
        Self {
            positions,
            particle_types,
            frame_dt,
        }
    }

    #[inline]
    pub fn n_frames(&self) -> usize {
        self.positions.shape()[0]
    }

    #[inline]
    pub fn n_particles(&self) -> usize {
        self.positions.shape()[1]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.positions.shape()[2]
    }

    /// Frames `[start, end)` as a new trajectory.
    pub fn slice_frames(&self, start: usize, end: usize) -> Self {
        Self {
            positions: self
                .positions
                .slice(ndarray::s![start..end, .., ..])
                .to_owned(),
            particle_types: self.particle_types.clone(),
            frame_dt: self.frame_dt,
        }
    }
}

/// Keep frames `0, every, 2*every, ...`; the frame spacing scales by `every`.
pub fn subsample(trajectory: &Trajectory, every: usize) -> Trajectory {
    assert!(every >= 1, "subsampling stride must be >= 1");
    let t = trajectory.n_frames();
    let kept = (t + every - 1) / every;
    let mut positions = Array3::zeros((kept, trajectory.n_particles(), trajectory.dim()));
    for (out_idx, frame) in (0..t).step_by(every).enumerate() {
        positions
            .index_axis_mut(ndarray::Axis(0), out_idx)
            .assign(&trajectory.positions.index_axis(ndarray::Axis(0), frame));
    }
    Trajectory {
        positions,
        particle_types: trajectory.particle_types.clone(),
        frame_dt: trajectory.frame_dt * every as f64,
    }
}

/// Split a set of trajectories (or one long trajectory) into
/// train/valid/test at the 2/1/1 ratio.
pub enum SplitInput {
    /// Episodic: split by trajectory index in order.
    Trajectories(Vec<Trajectory>),
    /// Stationary: split one long trajectory by frame ranges.
    SingleLong(Trajectory),
}

pub fn make_splits(
    input: SplitInput,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>, Vec<Trajectory>)> {
    match input {
        SplitInput::Trajectories(mut trajs) => {
            let n = trajs.len();
            if n < 4 {
                return Err(SphError::LengthMismatch(format!(
                    "need at least 4 trajectories for a 2/1/1 split, got {n}"
                )));
            }
            let n_train = n / 2;
            let n_valid = n / 4;
            let test = trajs.split_off(n_train + n_valid);
            let valid = trajs.split_off(n_train);
            Ok((trajs, valid, test))
        }
        SplitInput::SingleLong(traj) => {
            let t = traj.n_frames();
            if t < 4 {
                return Err(SphError::LengthMismatch(format!(
                    "need at least 4 frames for a 2/1/1 split, got {t}"
                )));
            }
            let n_train = t / 2;
            let n_valid = t / 4;
            let train = traj.slice_frames(0, n_train);
            let valid = traj.slice_frames(n_train, n_train + n_valid);
            let test = traj.slice_frames(n_train + n_valid, t);
            Ok((vec![train], vec![valid], vec![test]))
        }
    }
}

/// Zero-padded five-digit trajectory key ("00000", "00001", ...).
pub fn trajectory_key(index: usize) -> String {
    format!("{index:05}")
}

/// Write trajectories to one HDF5 split file.
pub fn write_split(trajectories: &[Trajectory], path: &Path) -> Result<()> {
    let file = hdf5::File::create(path)?;
    for (idx, traj) in trajectories.iter().enumerate() {
        let group = file.create_group(&trajectory_key(idx))?;
        group
            .new_dataset::<f32>()
            .shape(traj.positions.shape())
            .create("position")?
            .write(&traj.positions)?;
        group
            .new_dataset::<i64>()
            .shape(traj.particle_types.len())
            .create("particle_type")?
            .write(&traj.particle_types)?;
    }
    file.close()?;
    Ok(())
}

/// Read a split file written by [`write_split`] (or a published one).
///
/// `frame_dt` is not stored in the HDF5 payload; pass the metadata value (use
/// [`read_dataset`] for the directory-level API).
pub fn read_split(path: &Path, frame_dt: f64) -> Result<Vec<Trajectory>> {
    if !path.exists() {
        return Err(SphError::MissingInput(format!("{}", path.display())));
    }
    let file = hdf5::File::open(path)?;
    let mut names = file.member_names()?;
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for (idx, name) in names.iter().enumerate() {
        if name != &trajectory_key(idx) {
            return Err(SphError::MalformedFile {
                path: path.display().to_string(),
                reason: format!(
                    "expected trajectory key {:?} at position {idx}, found {name:?}",
                    trajectory_key(idx)
                ),
            });
        }
        let group = file.group(name)?;
        let position = group
            .dataset("position")
            .map_err(|_| SphError::MissingKey(format!("{name}/position")))?;
        if position.ndim() != 3 {
            return Err(SphError::ShapeMismatch {
                name: format!("{name}/position"),
                expected: "[T, N, dim]".into(),
                got: format!("rank {}", position.ndim()),
            });
        }
        let positions: Array3<f32> = position.read()?;
        let types_ds = group
            .dataset("particle_type")
            .map_err(|_| SphError::MissingKey(format!("{name}/particle_type")))?;
        let particle_types: Array1<i64> = types_ds.read()?;
        if particle_types.len() != positions.shape()[1] {
            return Err(SphError::ShapeMismatch {
                name: format!("{name}/particle_type"),
                expected: format!("[{}]", positions.shape()[1]),
                got: format!("[{}]", particle_types.len()),
            });
        }
        out.push(Trajectory {
            positions,
            particle_types,
            frame_dt,
        });
    }
    Ok(out)
}

/// Solver provenance recorded alongside the physical constants, namespaced so
/// consumers of the plain metadata are unaffected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverProvenance {
    pub kernel: String,
    /// Smoothing length over particle spacing.
    pub h_over_dx: f64,
    pub artificial_viscosity_alpha: f64,
    pub density_mode: DensityMode,
    pub transport_velocity: bool,
    pub integrator: String,
    pub wall_bc: String,
    pub density_diffusion: bool,
    pub hydrostatic_wall_pressure: bool,
}

/// One `metadata.json` per dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetMetadata {
    pub case: String,
    pub dim: usize,
    pub dx: f64,
    pub frame_dt: f64,
    pub dt_solver: f64,
    pub frames_between_samples: u32,
    pub box_extents: Vec<f64>,
    pub periodic: Vec<bool>,
    pub viscosity: f64,
    pub reynolds: f64,
    pub c0: f64,
    pub rho0: f64,
    pub p_bg: f64,
    pub force_magnitude: f64,
    pub num_particles: usize,
    pub splits: SplitPlan,
    pub seed: u64,
    pub type_codes: std::collections::BTreeMap<String, i64>,
    pub solver_provenance: SolverProvenance,
}

impl DatasetMetadata {
    pub fn from_case(spec: &CaseSpec, num_particles: usize, seed: u64) -> Self {
        let mut type_codes = std::collections::BTreeMap::new();
        type_codes.insert("fluid".to_string(), 0);
        type_codes.insert("wall".to_string(), 1);
        type_codes.insert("moving_wall".to_string(), 2);
        Self {
            case: spec.id.to_string(),
            dim: spec.domain.dim(),
            dx: spec.dx,
            frame_dt: spec.frame_dt(),
            dt_solver: spec.dt_solver,
            frames_between_samples: spec.frames_between_samples,
            box_extents: spec.domain.extents().to_vec(),
            periodic: spec.domain.periodic().to_vec(),
            viscosity: spec.viscosity,
            reynolds: spec.reynolds,
            c0: spec.c0,
            rho0: spec.rho0,
            p_bg: spec.p_bg,
            force_magnitude: spec.force_magnitude,
            num_particles,
            splits: spec.splits,
            seed,
            type_codes,
            solver_provenance: SolverProvenance {
                kernel: "quintic_spline".into(),
                h_over_dx: 1.0,
                artificial_viscosity_alpha: spec.artificial_viscosity_alpha,
                density_mode: spec.density_mode,
                transport_velocity: spec.p_bg > 0.0,
                integrator: "kick_drift_kick".into(),
                wall_bc: "generalized_dummy_particles".into(),
                density_diffusion: false,
                hydrostatic_wall_pressure: matches!(spec.id, crate::cases::CaseId::Dam2d),
            },
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(&self.box_extents, &self.periodic)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("metadata.json");
        let file = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("metadata.json");
        if !path.exists() {
            return Err(SphError::MissingInput(format!("{}", path.display())));
        }
        let file = std::fs::File::open(&path)?;
        Ok(serde_json::from_reader(file)?)
    }
}

/// A dataset directory: metadata plus the three split files.
pub struct Dataset {
    pub metadata: DatasetMetadata,
    pub dir: PathBuf,
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "valid", "test"];

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let metadata = DatasetMetadata::read(dir)?;
        Ok(Self {
            metadata,
            dir: dir.to_path_buf(),
        })
    }

    pub fn split_path(&self, split: &str) -> PathBuf {
        self.dir.join(format!("{split}.h5"))
    }

    pub fn read_split(&self, split: &str) -> Result<Vec<Trajectory>> {
        read_split(&self.split_path(split), self.metadata.frame_dt)
    }
}

/// Write a full dataset directory (three splits plus metadata).
pub fn write_dataset(
    dir: &Path,
    metadata: &DatasetMetadata,
    train: &[Trajectory],
    valid: &[Trajectory],
    test: &[Trajectory],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    metadata.write(dir)?;
    write_split(train, &dir.join("train.h5"))?;
    write_split(valid, &dir.join("valid.h5"))?;
    write_split(test, &dir.join("test.h5"))?;
    Ok(())
}
