//! The benchmark case library: constructors for the seven cases (geometry,
//! wall particles, initial fields, external forces) and the trajectory
//! generator that drives the solver and records temporally coarse-grained
//! frames.

mod catalog;
mod geometry;

pub use catalog::{case_spec, catalog, catalog_json, expected_particle_count};
pub(crate) use geometry::{sites_in_span, Placement};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Trajectory;
use crate::domain::{Domain, MAX_DIM};
use crate::error::{Result, SphError};
use crate::kernel::QuinticKernel;
use crate::sph::{
    relax, DensityMode, EosParams, ForceField, RelaxOptions, SolverParams, Stepper, StepperConfig,
};
use crate::state::{ParticleState, ParticleType};

/// Identifier of a benchmark case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    Tgv2d,
    Rpf2d,
    Ldc2d,
    Dam2d,
    Tgv3d,
    Rpf3d,
    Ldc3d,
}

impl CaseId {
    pub const ALL: [CaseId; 7] = [
        CaseId::Tgv2d,
        CaseId::Rpf2d,
        CaseId::Ldc2d,
        CaseId::Dam2d,
        CaseId::Tgv3d,
        CaseId::Rpf3d,
        CaseId::Ldc3d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Tgv2d => "tgv2d",
            CaseId::Rpf2d => "rpf2d",
            CaseId::Ldc2d => "ldc2d",
            CaseId::Dam2d => "dam2d",
            CaseId::Tgv3d => "tgv3d",
            CaseId::Rpf3d => "rpf3d",
            CaseId::Ldc3d => "ldc3d",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = SphError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SphError::UnknownCase(s.to_string()))
    }
}

/// How initial fluid positions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Lattice,
    /// Random draws relaxed by SPH stepping with damped velocities.
    RelaxedRandom,
}

/// Train/valid/test split layout of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SplitPlan {
    /// Episodic cases: many trajectories of equal length, split by index.
    ByTrajectory {
        trajectory_length: usize,
        train: usize,
        valid: usize,
        test: usize,
    },
    /// Statistically stationary cases: one long trajectory, split by frames.
    ByFrames {
        train: usize,
        valid: usize,
        test: usize,
    },
}

impl SplitPlan {
    /// Recorded frames of one generated trajectory at full scale.
    pub fn full_trajectory_frames(&self) -> usize {
        match *self {
            SplitPlan::ByTrajectory {
                trajectory_length, ..
            } => trajectory_length,
            SplitPlan::ByFrames { train, valid, test } => train + valid + test,
        }
    }

    /// Trajectory count at full scale (1 for stationary cases).
    pub fn full_trajectory_count(&self) -> usize {
        match *self {
            SplitPlan::ByTrajectory {
                train, valid, test, ..
            } => train + valid + test,
            SplitPlan::ByFrames { .. } => 1,
        }
    }
}

/// Full physical/numerical parameter set of one benchmark case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: CaseId,
    pub domain: Domain,
    /// Average particle spacing.
    pub dx: f64,
    /// Base solver step (fixed-dt dataset generation).
    pub dt_solver: f64,
    /// Solver steps between recorded frames.
    pub frames_between_samples: u32,
    pub c0: f64,
    pub rho0: f64,
    pub p_bg: f64,
    /// Kinematic viscosity = 1/Re.
    pub viscosity: f64,
    pub force_magnitude: f64,
    pub reynolds: f64,
    pub splits: SplitPlan,
    pub seed: u64,
    pub artificial_viscosity_alpha: f64,
    pub density_mode: DensityMode,
    pub init_mode: InitMode,
    /// Prescribed lid speed for cavity cases; zero elsewhere.
    pub lid_velocity: f64,
}

impl CaseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt_solver > 0.0 && self.c0 > 0.0 && self.rho0 > 0.0) {
            return Err(SphError::Config(format!(
                "case {}: dx, dt, c0, rho0 must be positive",
                self.id
            )));
        }
        if self.viscosity < 0.0 {
            return Err(SphError::Config("viscosity must be >= 0".into()));
        }
        if self.frames_between_samples < 1 {
            return Err(SphError::Config(
                "frames_between_samples must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Physical time between recorded frames.
    pub fn frame_dt(&self) -> f64 {
        self.dt_solver * self.frames_between_samples as f64
    }

    /// Smoothing length (h = 1.0 dx; support 3 dx, hence three wall layers).
    pub fn smoothing_length(&self) -> f64 {
        self.dx
    }

    pub fn kernel(&self) -> QuinticKernel {
        QuinticKernel::new(self.smoothing_length(), self.domain.dim())
    }

    pub fn eos(&self) -> EosParams {
        EosParams::new(self.c0, self.rho0, self.p_bg)
    }

    pub fn solver_params(&self) -> SolverParams {
        // Transport (shifting) advection keeps particle distributions regular
        // under sustained strain for the fully-supported flows. The free
        // surface of the dam break rules it out there; the artificial
        // viscosity is the stabilizer for that case.
        let transport = self.density_mode == DensityMode::Summation;
        SolverParams {
            eos: self.eos(),
            viscosity: self.viscosity,
            artificial_viscosity_alpha: self.artificial_viscosity_alpha,
            cfl_number: 0.25,
            density_mode: self.density_mode,
            transport_velocity: transport,
            shifting_coefficient: if transport { 0.2 } else { 0.0 },
            pressure_floor: None,
        }
    }

    pub fn particle_mass(&self) -> f64 {
        self.rho0 * self.dx.powi(self.domain.dim() as i32)
    }
}

/// The external volumetric force field of a case.
pub fn external_force_field(id: CaseId) -> ForceField {
    match id {
        CaseId::Rpf2d | CaseId::Rpf3d => ForceField::OpposedHalves {
            flow_axis: 0,
            split_axis: 1,
            split: 1.0,
            magnitude: 1.0,
        },
        CaseId::Dam2d => ForceField::Constant {
            f: [0.0, -1.0, 0.0],
        },
        _ => ForceField::None,
    }
}

/// Force vector at a position and time.
pub fn external_force(id: CaseId, position: &[f64], t: f64) -> [f64; MAX_DIM] {
    external_force_field(id).eval(position, t)
}

/// An initialized case: particle state with all three wall layers, the case
/// parameters, and per-particle wall-layer tags (0 = fluid, 1 = innermost).
#[derive(Debug, Clone)]
pub struct CaseSetup {
    pub state: ParticleState,
    pub spec: CaseSpec,
    pub wall_layers: Vec<u8>,
}

impl CaseSetup {
    /// Indices kept by wall-layer stripping: fluid plus the innermost layer.
    pub fn stripped_indices(&self) -> Vec<usize> {
        (0..self.state.len())
            .filter(|&i| self.wall_layers[i] <= 1)
            .collect()
    }
}

/// Remove all but the innermost wall layer; fluid untouched, types preserved.
pub fn strip_wall_layers(state: &ParticleState, wall_layers: &[u8]) -> ParticleState {
    let keep: Vec<usize> = (0..state.len()).filter(|&i| wall_layers[i] <= 1).collect();
    state.select(&keep)
}

/// Build the initial particle configuration of a case, including full wall
/// layers. Random-init cases draw positions from `seed` and relax them.
pub fn init_case(id: CaseId, seed: u64) -> Result<CaseSetup> {
    init_from_spec(case_spec(id), seed)
}

/// As [`init_case`], honoring overridden parameters on `spec`.
pub fn init_from_spec(spec: CaseSpec, seed: u64) -> Result<CaseSetup> {
    spec.validate()?;
    match spec.id {
        CaseId::Tgv2d | CaseId::Tgv3d => init_tgv(spec, seed),
        CaseId::Rpf2d | CaseId::Rpf3d => init_rpf(spec),
        CaseId::Ldc2d | CaseId::Ldc3d => init_ldc(spec),
        CaseId::Dam2d => init_dam(spec, seed),
    }
}

/// Wall-layer thickness in lattice cells.
const WALL_LAYERS: usize = 3;

fn init_tgv(spec: CaseSpec, seed: u64) -> Result<CaseSetup> {
    let dim = spec.domain.dim();
    let cells: Vec<usize> = spec
        .domain
        .extents()
        .iter()
        .map(|&e| sites_in_span(e, spec.dx))
        .collect();
    let n: usize = cells.iter().product();

    let mut placement = Placement::new(dim);
    match spec.init_mode {
        InitMode::Lattice => placement.lattice(&vec![0.0; dim], &cells, spec.dx),
        InitMode::RelaxedRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            placement.random_uniform(&vec![0.0; dim], spec.domain.extents(), n, &mut rng);
        }
    }
    let mut state = ParticleState::fluid_at_rest(placement.into_array(), spec.rho0, spec.dx);

    if spec.init_mode == InitMode::RelaxedRandom {
        let opts = RelaxOptions::default();
        relax(
            &mut state,
            &spec.domain,
            &spec.kernel(),
            &spec.solver_params(),
            &opts,
        )?;
    }

    // Taylor-Green velocity field at the (possibly relaxed) positions.
    let k = if dim == 2 {
        2.0 * std::f64::consts::PI
    } else {
        1.0
    };
    for i in 0..state.len() {
        let x = state.positions[[i, 0]];
        let y = state.positions[[i, 1]];
        if dim == 2 {
            state.velocities[[i, 0]] = -(k * x).cos() * (k * y).sin();
            state.velocities[[i, 1]] = (k * x).sin() * (k * y).cos();
        } else {
            let z = state.positions[[i, 2]];
            state.velocities[[i, 0]] = (k * x).sin() * (k * y).cos() * (k * z).cos();
            state.velocities[[i, 1]] = -(k * x).cos() * (k * y).sin() * (k * z).cos();
            state.velocities[[i, 2]] = 0.0;
        }
    }

    let layers = vec![0u8; state.len()];
    Ok(CaseSetup {
        state,
        spec,
        wall_layers: layers,
    })
}

fn init_rpf(spec: CaseSpec) -> Result<CaseSetup> {
    let dim = spec.domain.dim();
    let cells: Vec<usize> = spec
        .domain
        .extents()
        .iter()
        .map(|&e| sites_in_span(e, spec.dx))
        .collect();
    let mut placement = Placement::new(dim);
    placement.lattice(&vec![0.0; dim], &cells, spec.dx);
    let state = ParticleState::fluid_at_rest(placement.into_array(), spec.rho0, spec.dx);
    let layers = vec![0u8; state.len()];
    Ok(CaseSetup {
        state,
        spec,
        wall_layers: layers,
    })
}

/// Cavity cases. The fluid cavity is a unit square (times a periodic depth in
/// 3D) inset by three wall layers. The static walls form a bottom-and-sides
/// "U" whose layers nest outward; the moving lid spans the full outer width
/// above the cavity.
fn init_ldc(spec: CaseSpec) -> Result<CaseSetup> {
    let dim = spec.domain.dim();
    let dx = spec.dx;
    let o = WALL_LAYERS as f64 * dx; // cavity origin in x and y
    let cavity = 1.0; // cavity edge length
    let nc = sites_in_span(cavity, dx);
    let nz = if dim == 3 {
        sites_in_span(spec.domain.extent(2), dx)
    } else {
        1
    };
    let total_x = sites_in_span(spec.domain.extent(0), dx);

    let mut placement = Placement::new(dim);
    let mut layers: Vec<u8> = Vec::new();
    let mut types: Vec<ParticleType> = Vec::new();

    let add = |p: &mut Placement,
               layers: &mut Vec<u8>,
               types: &mut Vec<ParticleType>,
               origin_xy: [f64; 2],
               cells_xy: [usize; 2],
               layer: u8,
               ty: ParticleType| {
        let before = p.len();
        if dim == 2 {
            p.lattice(&[origin_xy[0], origin_xy[1]], &cells_xy, dx);
        } else {
            p.lattice(
                &[origin_xy[0], origin_xy[1], 0.0],
                &[cells_xy[0], cells_xy[1], nz],
                dx,
            );
        }
        let added = p.len() - before;
        layers.extend(std::iter::repeat(layer).take(added));
        types.extend(std::iter::repeat(ty).take(added));
    };

    // fluid cavity
    add(
        &mut placement,
        &mut layers,
        &mut types,
        [o, o],
        [nc, nc],
        0,
        ParticleType::Fluid,
    );

    // static U: bottom rows widen with each layer; side columns span the cavity
    for k in 1..=WALL_LAYERS {
        let kf = k as f64;
        add(
            &mut placement,
            &mut layers,
            &mut types,
            [o - kf * dx, o - kf * dx],
            [nc + 2 * k, 1],
            k as u8,
            ParticleType::Wall,
        );
        for side in 0..2 {
            let x0 = if side == 0 {
                o - kf * dx
            } else {
                o + cavity + (kf - 1.0) * dx
            };
            add(
                &mut placement,
                &mut layers,
                &mut types,
                [x0, o],
                [1, nc],
                k as u8,
                ParticleType::Wall,
            );
        }
    }

    // moving lid: full-width slabs above the cavity
    for k in 1..=WALL_LAYERS {
        let kf = k as f64;
        add(
            &mut placement,
            &mut layers,
            &mut types,
            [0.0, o + cavity + (kf - 1.0) * dx],
            [total_x, 1],
            k as u8,
            ParticleType::MovingWall,
        );
    }

    let positions = placement.into_array();
    let n = positions.nrows();
    let mut velocities = Array2::zeros((n, dim));
    for i in 0..n {
        if types[i] == ParticleType::MovingWall {
            velocities[[i, 0]] = spec.lid_velocity;
        }
    }
    let state = ParticleState::new(
        positions,
        velocities,
        Array1::from_elem(n, spec.rho0),
        Array1::from_elem(n, spec.p_bg),
        Array1::from_elem(n, spec.particle_mass()),
        types,
    )?;
    Ok(CaseSetup {
        state,
        spec,
        wall_layers: layers,
    })
}

/// Dam break: a closed tank with three nested wall-ring layers and a
/// relaxed-random water column of height 1 and width 2 against the left wall.
fn init_dam(spec: CaseSpec, seed: u64) -> Result<CaseSetup> {
    let dx = spec.dx;
    let o = WALL_LAYERS as f64 * dx;
    let interior_x = spec.domain.extent(0) - 2.0 * o; // 5.366
    let interior_y = spec.domain.extent(1) - 2.0 * o; // 2.0
    let col_w = 2.0;
    let col_h = 1.0;
    let n_fluid = sites_in_span(col_w, dx) * sites_in_span(col_h, dx);

    let mut placement = Placement::new(2);
    let mut layers: Vec<u8> = Vec::new();

    // fluid column (random, relaxed below)
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    placement.random_uniform(&[o, o], &[col_w, col_h], n_fluid, &mut rng);
    layers.extend(std::iter::repeat(0u8).take(n_fluid));

    // nested wall rings: top/bottom rows extend k cells past the interior,
    // side columns span the interior height
    let ny = sites_in_span(interior_y, dx);
    for k in 1..=WALL_LAYERS {
        let kf = k as f64;
        let row_cells = sites_in_span(interior_x + 2.0 * kf * dx, dx);
        let row_x0 = o - kf * dx;
        for y0 in [o - kf * dx, o + interior_y + (kf - 1.0) * dx] {
            let before = placement.len();
            placement.lattice(&[row_x0, y0], &[row_cells, 1], dx);
            layers.extend(std::iter::repeat(k as u8).take(placement.len() - before));
        }
        for x0 in [o - kf * dx, o + interior_x + (kf - 1.0) * dx] {
            let before = placement.len();
            placement.lattice(&[x0, o], &[1, ny], dx);
            layers.extend(std::iter::repeat(k as u8).take(placement.len() - before));
        }
    }

    let positions = placement.into_array();
    let n = positions.nrows();
    let types: Vec<ParticleType> = layers
        .iter()
        .map(|&l| {
            if l == 0 {
                ParticleType::Fluid
            } else {
                ParticleType::Wall
            }
        })
        .collect();
    let mut state = ParticleState::new(
        positions,
        Array2::zeros((n, 2)),
        Array1::from_elem(n, spec.rho0),
        Array1::from_elem(n, spec.p_bg),
        Array1::from_elem(n, spec.particle_mass()),
        types,
    )?;

    // relax the random column (no gravity, free-surface pressure clamp)
    let opts = RelaxOptions {
        clamp_negative_pressure: true,
        ..RelaxOptions::default()
    };
    relax(
        &mut state,
        &spec.domain,
        &spec.kernel(),
        &spec.solver_params(),
        &opts,
    )?;

    Ok(CaseSetup {
        state,
        spec,
        wall_layers: layers,
    })
}

/// Warm-up policy for statistically stationary cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Warmup {
    /// Record from the initial state.
    None,
    /// Run a fixed number of frame intervals before recording.
    Fixed { frames: usize },
    /// Run until the kinetic energy changes by less than `tol` (relative)
    /// over a window of 100 recorded-frame intervals, capped at `max_frames`.
    Auto { max_frames: usize },
}

/// Options for trajectory generation.
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    /// Recorded frames (the initial frame plus `frames - 1` sampled frames).
    pub frames: usize,
    pub warmup: Warmup,
    pub seed: u64,
    /// Per-step solver diagnostics CSV.
    pub diagnostics_path: Option<std::path::PathBuf>,
}

impl GenerateOptions {
    pub fn new(frames: usize, seed: u64) -> Self {
        Self {
            frames,
            warmup: Warmup::None,
            seed,
            diagnostics_path: None,
        }
    }

    /// The per-case default warm-up: automatic equilibrium detection for the
    /// stationary cases, none for decaying/episodic ones.
    pub fn with_default_warmup(mut self, id: CaseId) -> Self {
        self.warmup = match id {
            CaseId::Rpf2d | CaseId::Rpf3d | CaseId::Ldc2d | CaseId::Ldc3d => {
                Warmup::Auto { max_frames: 1000 }
            }
            _ => Warmup::None,
        };
        self
    }
}

/// Result of one generated trajectory.
pub struct GenerateResult {
    pub trajectory: Trajectory,
    /// Fluid kinetic energy at each recorded frame (solver velocities).
    pub frame_energy: Vec<f64>,
    /// Indices of recorded (stripped) particles in the full state.
    pub kept_indices: Vec<usize>,
    pub spec: CaseSpec,
}

/// Run the solver for a case and record stripped-wall positions every
/// `frames_between_samples` steps as single precision.
pub fn generate_trajectory(id: CaseId, opts: &GenerateOptions) -> Result<GenerateResult> {
    let setup = init_case(id, opts.seed)?;
    generate_from_setup(setup, opts)
}

/// As [`generate_trajectory`], from an already-initialized setup.
pub fn generate_from_setup(setup: CaseSetup, opts: &GenerateOptions) -> Result<GenerateResult> {
    let CaseSetup {
        mut state,
        spec,
        wall_layers,
    } = setup;
    if opts.frames == 0 {
        return Err(SphError::Config("frames must be >= 1".into()));
    }
    let kept: Vec<usize> = (0..state.len()).filter(|&i| wall_layers[i] <= 1).collect();
    let dim = spec.domain.dim();
    let substeps = spec.frames_between_samples as usize;
    let dt = spec.dt_solver;

    let config =
        StepperConfig::new(spec.solver_params(), external_force_field(spec.id)).with_fixed_dt(dt);
    let mut stepper = Stepper::new(spec.domain, spec.kernel(), config, &state)?;
    if let Some(path) = &opts.diagnostics_path {
        let sink = std::io::BufWriter::new(std::fs::File::create(path)?);
        stepper.set_diagnostics(Box::new(sink))?;
    }
    stepper.prime(&mut state)?;

    // warm-up (stationary cases)
    match opts.warmup {
        Warmup::None => {}
        Warmup::Fixed { frames } => {
            for _ in 0..frames * substeps {
                stepper.step_with_dt(&mut state, dt).map_err(frame_err)?;
            }
        }
        Warmup::Auto { max_frames } => {
            let window = 100usize;
            let mut history: Vec<f64> = vec![fluid_kinetic_energy(&state)];
            for _ in 0..max_frames {
                let mut info = None;
                for _ in 0..substeps {
                    info = Some(stepper.step_with_dt(&mut state, dt).map_err(frame_err)?);
                }
                let e = info.map(|i| i.e_kin).unwrap_or(0.0);
                history.push(e);
                if history.len() > window {
                    let past = history[history.len() - 1 - window];
                    if e > 0.0 && ((e - past) / e).abs() < 0.01 {
                        break;
                    }
                }
            }
        }
    }

    let mut positions = Array3::<f32>::zeros((opts.frames, kept.len(), dim));
    let mut frame_energy = Vec::with_capacity(opts.frames);
    record_frame(&state, &kept, &mut positions, 0);
    frame_energy.push(fluid_kinetic_energy(&state));

    for frame in 1..opts.frames {
        for _ in 0..substeps {
            stepper
                .step_with_dt(&mut state, dt)
                .map_err(|e| frame_indexed_err(e, frame))?;
        }
        record_frame(&state, &kept, &mut positions, frame);
        frame_energy.push(fluid_kinetic_energy(&state));
    }

    let types: Array1<i64> = kept.iter().map(|&i| state.types[i].code()).collect();
    Ok(GenerateResult {
        trajectory: Trajectory::new(positions, types, spec.frame_dt()),
        frame_energy,
        kept_indices: kept,
        spec,
    })
}

fn record_frame(state: &ParticleState, kept: &[usize], out: &mut Array3<f32>, frame: usize) {
    for (row, &i) in kept.iter().enumerate() {
        for k in 0..state.dim() {
            out[[frame, row, k]] = state.positions[[i, k]] as f32;
        }
    }
}

pub(crate) fn fluid_kinetic_energy(state: &ParticleState) -> f64 {
    let mut e = 0.0;
    for i in 0..state.len() {
        if state.types[i] == ParticleType::Fluid {
            let sq: f64 = (0..state.dim())
                .map(|k| state.velocities[[i, k]] * state.velocities[[i, k]])
                .sum();
            e += 0.5 * state.masses[i] * sq;
        }
    }
    e
}

fn frame_err(e: SphError) -> SphError {
    e
}

fn frame_indexed_err(e: SphError, frame: usize) -> SphError {
    match e {
        SphError::Instability { step, t, reason } => SphError::Instability {
            step,
            t,
            reason: format!("{reason} (while recording frame {frame})"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn case_ids_parse_and_display() {
        for id in CaseId::ALL {
            assert_eq!(id.as_str().parse::<CaseId>().unwrap(), id);
        }
        assert!(matches!(
            "nope".parse::<CaseId>(),
            Err(SphError::UnknownCase(_))
        ));
    }

    #[test]
    fn tgv2d_velocity_field_samples() {
        // u(0, 0.25) = -cos(0) sin(pi/2) = -1, v = 0
        let k = 2.0 * std::f64::consts::PI;
        let u = -(k * 0.0f64).cos() * (k * 0.25f64).sin();
        let v = (k * 0.0f64).sin() * (k * 0.25f64).cos();
        assert_abs_diff_eq!(u, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rpf_force_flips_with_height() {
        let f_lo = external_force(CaseId::Rpf2d, &[0.3, 0.5], 0.0);
        let f_hi = external_force(CaseId::Rpf2d, &[0.3, 1.5], 0.0);
        assert_eq!(f_lo[0], 1.0);
        assert_eq!(f_hi[0], -1.0);
        assert_eq!(f_lo[1], 0.0);
        let f_tgv = external_force(CaseId::Tgv2d, &[0.3, 0.5], 0.0);
        assert_eq!(f_tgv, [0.0; MAX_DIM]);
        let f_dam = external_force(CaseId::Dam2d, &[1.0, 1.0], 0.0);
        assert_eq!(f_dam[1], -1.0);
    }

    #[test]
    fn lattice_cases_have_catalog_counts() {
        // Lattice-initialized cases are cheap to build in full.
        for id in [CaseId::Rpf2d, CaseId::Rpf3d] {
            let setup = init_case(id, 0).unwrap();
            assert_eq!(setup.state.len(), expected_particle_count(id), "{id}");
        }
    }

    #[test]
    fn ldc_stripped_counts_match_catalog() {
        for id in [CaseId::Ldc2d, CaseId::Ldc3d] {
            let setup = init_case(id, 0).unwrap();
            let stripped = strip_wall_layers(&setup.state, &setup.wall_layers);
            assert_eq!(stripped.len(), expected_particle_count(id), "{id}");
            // fluid untouched by stripping
            assert_eq!(stripped.n_fluid(), setup.state.n_fluid());
        }
    }

    #[test]
    fn ldc2d_wall_breakdown() {
        let setup = init_case(CaseId::Ldc2d, 0).unwrap();
        let n_fluid = setup.state.n_fluid();
        assert_eq!(n_fluid, 2500);
        // innermost layer: lid 56, bottom 52, sides 2 x 50
        let inner: Vec<usize> = (0..setup.state.len())
            .filter(|&i| setup.wall_layers[i] == 1)
            .collect();
        assert_eq!(inner.len(), 208);
        let moving = inner
            .iter()
            .filter(|&&i| setup.state.types[i] == ParticleType::MovingWall)
            .count();
        assert_eq!(moving, 56);
        // lid carries the prescribed velocity
        let lid_idx = inner
            .iter()
            .copied()
            .find(|&i| setup.state.types[i] == ParticleType::MovingWall)
            .unwrap();
        assert_eq!(setup.state.velocities[[lid_idx, 0]], 1.0);
    }

    #[test]
    fn strip_is_identity_without_walls() {
        let setup = init_case(CaseId::Rpf2d, 0).unwrap();
        let stripped = strip_wall_layers(&setup.state, &setup.wall_layers);
        assert_eq!(stripped.len(), setup.state.len());
    }

    #[test]
    fn rpf_force_integrates_to_zero_over_domain() {
        // antisymmetric halves: sample on the case lattice
        let setup = init_case(CaseId::Rpf2d, 0).unwrap();
        let mut fx_sum = 0.0;
        for i in 0..setup.state.len() {
            let row = setup.state.positions.row(i);
            fx_sum += external_force(CaseId::Rpf2d, row.as_slice().unwrap(), 0.0)[0];
        }
        assert_abs_diff_eq!(fx_sum, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn catalog_json_lists_all_cases() {
        let v = catalog_json();
        assert_eq!(v["cases"].as_array().unwrap().len(), 7);
        let first = &v["cases"][0];
        assert!(first.get("particle_count").is_some());
        assert!(first.get("frame_dt").is_some());
    }
}
