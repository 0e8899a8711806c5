//! Reference predictors and the file-exchange adapter for externally trained
//! models.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ndarray::{Array2, Array3};

use crate::error::{Result, SphError};
use crate::state::ParticleState;

use super::{FeatureFrame, PredictionMode, Predictor};

/// Plays back the reference trajectory; the oracle predictor (zero rollout
/// error by construction).
pub struct GroundTruthPredictor {
    reference: Array3<f64>,
}

impl GroundTruthPredictor {
    pub fn new(reference: Array3<f64>) -> Self {
        Self { reference }
    }
}

impl Predictor for GroundTruthPredictor {
    fn mode(&self) -> PredictionMode {
        PredictionMode::Position
    }

    fn predict(&mut self, _frame: &FeatureFrame, step: usize) -> Result<Array2<f64>> {
        if step >= self.reference.shape()[0] {
            return Err(SphError::PredictorProtocol {
                step,
                reason: format!("reference has only {} frames", self.reference.shape()[0]),
            });
        }
        Ok(self.reference.index_axis(ndarray::Axis(0), step).to_owned())
    }
}

/// Predicts zero acceleration: constant-velocity extrapolation. The sanity
/// baseline every learned model should beat.
pub struct ConstantVelocityPredictor;

impl Predictor for ConstantVelocityPredictor {
    fn mode(&self) -> PredictionMode {
        PredictionMode::Acceleration
    }

    fn predict(&mut self, frame: &FeatureFrame, _step: usize) -> Result<Array2<f64>> {
        Ok(Array2::zeros((
            frame.positions.nrows(),
            frame.positions.ncols(),
        )))
    }
}

/// The SPH solver wrapped as a predictor at recorded-frame granularity: each
/// prediction runs `substeps` solver steps on a private full-resolution state
/// (including stripped wall layers) and returns the positions of the recorded
/// subset. Ignores the feature frame; the solver state is the memory.
pub struct SolverPredictor {
    stepper: crate::sph::Stepper,
    state: ParticleState,
    kept: Vec<usize>,
    substeps: usize,
    dt: f64,
}

impl SolverPredictor {
    pub fn new(
        stepper: crate::sph::Stepper,
        state: ParticleState,
        kept: Vec<usize>,
        substeps: usize,
        dt: f64,
    ) -> Self {
        Self {
            stepper,
            state,
            kept,
            substeps,
            dt,
        }
    }
}

impl Predictor for SolverPredictor {
    fn mode(&self) -> PredictionMode {
        PredictionMode::Position
    }

    fn predict(&mut self, _frame: &FeatureFrame, _step: usize) -> Result<Array2<f64>> {
        for _ in 0..self.substeps {
            self.stepper.step_with_dt(&mut self.state, self.dt)?;
        }
        let dim = self.state.dim();
        let mut out = Array2::zeros((self.kept.len(), dim));
        for (row, &i) in self.kept.iter().enumerate() {
            for k in 0..dim {
                out[[row, k]] = self.state.positions[[i, k]];
            }
        }
        Ok(out)
    }
}

/// Batch predictor file protocol: for step `k` the harness writes
/// `request_{k:05}.h5` with the feature tensors, then polls for
/// `response_{k:05}.h5` holding a `prediction` dataset of shape `[N, dim]`.
/// Responders should write to a temporary name and rename, so a response file
/// is complete once visible.
///
/// Request layout: datasets `positions` `[N, dim]`, `velocity_history`
/// `[H, N, dim]`, `particle_type` `[N]` (i64), `senders`/`receivers` `[E]`
/// (i64), `displacements` `[E, dim]`, `distances` `[E]`, `step` (scalar
/// i64), plus `force` `[N, dim]` and `boundary_distances` when the case has
/// them.
pub struct FileExchangePredictor {
    dir: PathBuf,
    mode: PredictionMode,
    timeout: Duration,
    poll_interval: Duration,
}

impl FileExchangePredictor {
    pub fn new(dir: PathBuf, mode: PredictionMode) -> Self {
        Self {
            dir,
            mode,
            timeout: Duration::from_secs(60),
            poll_interval: Duration::from_millis(10),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn request_path(dir: &std::path::Path, step: usize) -> PathBuf {
        dir.join(format!("request_{step:05}.h5"))
    }

    pub fn response_path(dir: &std::path::Path, step: usize) -> PathBuf {
        dir.join(format!("response_{step:05}.h5"))
    }

    fn write_request(&self, frame: &FeatureFrame, step: usize) -> Result<()> {
        let path = Self::request_path(&self.dir, step);
        let tmp = path.with_extension("h5.tmp");
        {
            let file = hdf5::File::create(&tmp)?;
            file.new_dataset::<f64>()
                .shape(frame.positions.shape())
                .create("positions")?
                .write(&frame.positions)?;
            file.new_dataset::<f64>()
                .shape(frame.velocity_history.shape())
                .create("velocity_history")?
                .write(&frame.velocity_history)?;
            let types: Vec<i64> = frame.types.iter().map(|t| t.code()).collect();
            file.new_dataset::<i64>()
                .shape(types.len())
                .create("particle_type")?
                .write(&ndarray::Array1::from_vec(types))?;
            let senders: Vec<i64> = frame.edges.senders.iter().map(|&s| s as i64).collect();
            let receivers: Vec<i64> = frame.edges.receivers.iter().map(|&r| r as i64).collect();
            file.new_dataset::<i64>()
                .shape(senders.len())
                .create("senders")?
                .write(&ndarray::Array1::from_vec(senders))?;
            file.new_dataset::<i64>()
                .shape(receivers.len())
                .create("receivers")?
                .write(&ndarray::Array1::from_vec(receivers))?;
            let dim = frame.positions.ncols();
            let mut disp = Array2::zeros((frame.edges.len(), dim));
            for e in 0..frame.edges.len() {
                for k in 0..dim {
                    disp[[e, k]] = frame.edges.displacements[e][k];
                }
            }
            file.new_dataset::<f64>()
                .shape(disp.shape())
                .create("displacements")?
                .write(&disp)?;
            file.new_dataset::<f64>()
                .shape(frame.edges.distances.len())
                .create("distances")?
                .write(&ndarray::Array1::from_vec(frame.edges.distances.clone()))?;
            if let Some(force) = &frame.force {
                file.new_dataset::<f64>()
                    .shape(force.shape())
                    .create("force")?
                    .write(force)?;
            }
            if let Some(b) = &frame.boundary_distances {
                file.new_dataset::<f64>()
                    .shape(b.shape())
                    .create("boundary_distances")?
                    .write(b)?;
            }
            file.new_dataset::<i64>()
                .shape(())
                .create("step")?
                .write_scalar(&(step as i64))?;
        }
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn read_response(&self, step: usize, n: usize, dim: usize) -> Result<Array2<f64>> {
        let path = Self::response_path(&self.dir, step);
        let deadline = Instant::now() + self.timeout;
        loop {
            if path.exists() {
                break;
            }
            if Instant::now() > deadline {
                return Err(SphError::PredictorProtocol {
                    step,
                    reason: format!("timed out waiting for {}", path.display()),
                });
            }
            std::thread::sleep(self.poll_interval);
        }
        let file = hdf5::File::open(&path)?;
        let ds = file
            .dataset("prediction")
            .map_err(|_| SphError::PredictorProtocol {
                step,
                reason: "response file lacks a `prediction` dataset".into(),
            })?;
        let pred: Array2<f64> = ds.read()?;
        if pred.shape() != [n, dim] {
            return Err(SphError::PredictorProtocol {
                step,
                reason: format!("prediction shape {:?}, expected [{n}, {dim}]", pred.shape()),
            });
        }
        Ok(pred)
    }
}

impl Predictor for FileExchangePredictor {
    fn mode(&self) -> PredictionMode {
        self.mode
    }

    fn predict(&mut self, frame: &FeatureFrame, step: usize) -> Result<Array2<f64>> {
        self.write_request(frame, step)?;
        self.read_response(step, frame.positions.nrows(), frame.positions.ncols())
    }
}
