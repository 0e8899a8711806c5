//! Symplectic kick-drift-kick time integration with cached neighbor lists.

use std::io::Write;

use ndarray::{Array1, Array2};

use crate::domain::Domain;
use crate::error::{Result, SphError};
use crate::kernel::QuinticKernel;
use crate::neighbors::{build_cell_list, collect_pairs_csr};
use crate::state::{ParticleState, ParticleType};

use super::neighborhood::{EdgeGeometry, Neighborhood};
use super::rhs;
use super::{cfl_dt, DensityMode, ForceField, SolverParams};

/// Stepper construction options.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub params: SolverParams,
    pub force: ForceField,
    /// Fixed solver step (dataset-generation mode); `None` selects the CFL
    /// step each call.
    pub fixed_dt: Option<f64>,
    /// Verlet skin as a fraction of the smoothing length.
    pub skin_factor: f64,
}

impl StepperConfig {
    pub fn new(params: SolverParams, force: ForceField) -> Self {
        Self {
            params,
            force,
            fixed_dt: None,
            skin_factor: 0.5,
        }
    }

    pub fn with_fixed_dt(mut self, dt: f64) -> Self {
        self.fixed_dt = Some(dt);
        self
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    /// Kinetic energy of the fluid, `0.5 sum m v^2`.
    pub e_kin: f64,
    pub max_velocity: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub rebuilt_neighbors: bool,
}

/// Time integrator owning the neighbor cache and acceleration state.
///
/// One step: half-kick velocities, drift positions with the (transport)
/// velocity and wrap, rebuild the pair list if accumulated motion exceeded
/// the skin, update densities per the density mode, apply the equation of
/// state and the wall boundary condition, evaluate the momentum RHS, and
/// complete the velocity kick. Wall particles never advect; their prescribed
/// velocities are restored after each step.
pub struct Stepper {
    domain: Domain,
    kernel: QuinticKernel,
    config: StepperConfig,
    prescribed: Array2<f64>,
    has_walls: bool,

    nbh: Neighborhood,
    geo: EdgeGeometry,
    primed: bool,
    motion_since_build: f64,

    accel: Array2<f64>,
    /// Pending position shift for the next drift (transport advection).
    pending_shift: Option<Array2<f64>>,
    drift: Array2<f64>,
    /// Shift velocity of the last drift, feeding the convective correction.
    shift: Option<Array2<f64>>,

    step_index: u64,
    t: f64,
    diagnostics: Option<Box<dyn Write + Send>>,
}

impl Stepper {
    pub fn new(
        domain: Domain,
        kernel: QuinticKernel,
        config: StepperConfig,
        state: &ParticleState,
    ) -> Result<Self> {
        config.params.validate()?;
        if state.dim() != domain.dim() {
            return Err(SphError::DimensionMismatch {
                expected: domain.dim(),
                got: state.dim(),
            });
        }
        let n = state.len();
        let dim = state.dim();
        let mut prescribed = Array2::zeros((n, dim));
        let mut has_walls = false;
        for i in 0..n {
            if state.types[i].is_wall() {
                has_walls = true;
                prescribed.row_mut(i).assign(&state.velocities.row(i));
            }
        }
        Ok(Self {
            domain,
            kernel,
            config,
            prescribed,
            has_walls,
            nbh: Neighborhood::default(),
            geo: EdgeGeometry::default(),
            primed: false,
            motion_since_build: 0.0,
            accel: Array2::zeros((n, dim)),
            pending_shift: None,
            drift: Array2::zeros((n, dim)),
            shift: None,
            step_index: 0,
            t: 0.0,
            diagnostics: None,
        })
    }

    /// Attach a per-step CSV diagnostics sink
    /// (`step,t,dt,e_kin,max_v,min_rho,max_rho`). A header row is written.
    pub fn set_diagnostics(&mut self, mut sink: Box<dyn Write + Send>) -> Result<()> {
        writeln!(sink, "step,t,dt,e_kin,max_v,min_rho,max_rho")?;
        self.diagnostics = Some(sink);
        Ok(())
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn accelerations(&self) -> &Array2<f64> {
        &self.accel
    }

    pub fn kernel(&self) -> &QuinticKernel {
        &self.kernel
    }

    pub fn prescribed_wall_velocities(&self) -> &Array2<f64> {
        &self.prescribed
    }

    /// Pair-search radius: kernel support plus the Verlet skin, clamped so
    /// every periodic axis keeps at least three cells. Thin periodic boxes
    /// then trade skin (rebuild cadence) for validity.
    fn search_radius(&self) -> f64 {
        let support = self.kernel.support_radius();
        let mut radius = support * (1.0 + self.config.skin_factor / 3.0);
        for k in 0..self.domain.dim() {
            if self.domain.is_periodic(k) {
                radius = radius.min(self.domain.extent(k) / 3.0 * (1.0 - 1e-12));
            }
        }
        radius.max(support)
    }

    /// Verlet skin implied by the clamped search radius.
    fn skin(&self) -> f64 {
        (self.search_radius() - self.kernel.support_radius()).max(0.0)
    }

    fn rebuild_neighbors(&mut self, state: &ParticleState) -> Result<()> {
        let cutoff = self.search_radius();
        let cl = build_cell_list(&state.positions, &self.domain, cutoff, None)?;
        let (offsets, senders, receivers) =
            collect_pairs_csr(&cl, &state.positions, &self.domain, cutoff)?;
        self.nbh = Neighborhood {
            offsets,
            senders,
            receivers,
            n: state.len(),
            dim: state.dim(),
        };
        self.motion_since_build = 0.0;
        Ok(())
    }

    /// Update densities, pressures, wall BC, and the momentum RHS for the
    /// current positions. `dt_for_density` drives the continuity integration
    /// in evolution mode (zero leaves densities untouched).
    fn evaluate_rhs(&mut self, state: &mut ParticleState, dt_for_density: f64) -> Result<()> {
        self.geo
            .refresh(&self.nbh, &state.positions, &self.domain, &self.kernel);

        match self.config.params.density_mode {
            DensityMode::Summation => {
                let mut rho = Array1::zeros(state.len());
                rhs::density_summation_pass(
                    &self.nbh,
                    &self.geo,
                    &state.masses,
                    &self.kernel,
                    &mut rho,
                );
                state.densities = rho;
            }
            DensityMode::Evolution => {
                if dt_for_density != 0.0 {
                    let mut rate = Array1::zeros(state.len());
                    rhs::density_rate_pass(&self.nbh, &self.geo, state, &mut rate);
                    for i in 0..state.len() {
                        if state.types[i] == ParticleType::Fluid {
                            state.densities[i] += dt_for_density * rate[i];
                            if !(state.densities[i] > 0.0) {
                                return Err(self.instability(format!(
                                    "density of particle {i} became {}",
                                    state.densities[i]
                                )));
                            }
                        }
                    }
                }
            }
        }

        let floor = self.config.params.pressure_floor;
        for i in 0..state.len() {
            if state.types[i] == ParticleType::Fluid {
                let p = self.config.params.eos.pressure(state.densities[i]);
                state.pressures[i] = match floor {
                    Some(f) => p.max(f),
                    None => p,
                };
            }
        }

        if self.has_walls {
            rhs::wall_bc_pass(
                &self.nbh,
                &self.geo,
                state,
                &self.prescribed,
                &self.config.params.eos,
                self.config.force.uniform_body_force(),
            );
        }

        let out = rhs::momentum_pass(
            &self.nbh,
            &self.geo,
            state,
            &self.config.params,
            &self.config.force,
            self.shift.as_ref(),
            self.t,
            self.kernel.h(),
        );
        self.accel = out.accel;
        self.pending_shift = out.concentration_gradient.map(|grad| {
            let c = self.config.params.shifting_coefficient;
            let h = self.kernel.h();
            let cap = 0.1 * h;
            let mut shift = grad;
            for i in 0..state.len() {
                let mut norm2 = 0.0;
                for k in 0..state.dim() {
                    shift[[i, k]] *= -c * h * h;
                    norm2 += shift[[i, k]] * shift[[i, k]];
                }
                let norm = norm2.sqrt();
                if norm > cap {
                    let scale = cap / norm;
                    for k in 0..state.dim() {
                        shift[[i, k]] *= scale;
                    }
                }
            }
            shift
        });
        Ok(())
    }

    /// Build neighbors and evaluate the initial RHS without advancing time.
    pub fn prime(&mut self, state: &mut ParticleState) -> Result<()> {
        if !self.primed {
            self.rebuild_neighbors(state)?;
            self.evaluate_rhs(state, 0.0)?;
            self.check_state(state)?;
            self.primed = true;
        }
        Ok(())
    }

    /// Advance one step using the fixed step if configured, otherwise the
    /// CFL-limited step.
    pub fn step(&mut self, state: &mut ParticleState) -> Result<StepInfo> {
        self.prime(state)?;
        let dt = match self.config.fixed_dt {
            Some(dt) => dt,
            None => cfl_dt(state, &self.kernel, &self.config.params, &self.accel)?,
        };
        self.step_with_dt(state, dt)
    }

    /// Advance one step of length `dt`.
    pub fn step_with_dt(&mut self, state: &mut ParticleState, dt: f64) -> Result<StepInfo> {
        self.prime(state)?;
        let dim = state.dim();
        let n = state.len();
        let half = 0.5 * dt;
        let transport = self.config.params.transport_velocity;

        // half kick; transport advection adds the pending position shift
        let apply_shift = transport && dt > 0.0 && self.pending_shift.is_some();
        let mut max_drift = 0.0f64;
        let mut shift_vel = if apply_shift {
            Some(Array2::zeros((n, dim)))
        } else {
            None
        };
        for i in 0..n {
            if state.types[i] == ParticleType::Fluid {
                for k in 0..dim {
                    state.velocities[[i, k]] += half * self.accel[[i, k]];
                    let mut dv = state.velocities[[i, k]];
                    if apply_shift {
                        let dr = self.pending_shift.as_ref().unwrap()[[i, k]];
                        dv += dr / dt;
                        shift_vel.as_mut().unwrap()[[i, k]] = dr / dt;
                    }
                    self.drift[[i, k]] = dv;
                }
                let speed: f64 = (0..dim)
                    .map(|k| self.drift[[i, k]] * self.drift[[i, k]])
                    .sum::<f64>()
                    .sqrt();
                max_drift = max_drift.max(speed);
            } else {
                for k in 0..dim {
                    self.drift[[i, k]] = 0.0;
                }
            }
        }
        self.shift = shift_vel;

        // drift (fluid only), wrapped on periodic axes
        for i in 0..n {
            if state.types[i] == ParticleType::Fluid {
                for k in 0..dim {
                    let x = state.positions[[i, k]] + dt * self.drift[[i, k]];
                    state.positions[[i, k]] = self.domain.wrap_component(x, k);
                }
            }
        }
        self.motion_since_build += dt * max_drift;
        self.t += dt;
        self.step_index += 1;

        let skin = self.skin();
        let mut rebuilt = false;
        if skin <= 0.0 || self.motion_since_build >= 0.5 * skin {
            self.rebuild_neighbors(state)?;
            rebuilt = true;
        }

        self.evaluate_rhs(state, dt)?;

        // second half kick
        for i in 0..n {
            if state.types[i] == ParticleType::Fluid {
                for k in 0..dim {
                    state.velocities[[i, k]] += half * self.accel[[i, k]];
                }
            }
        }

        // walls keep their prescribed kinematics between steps
        if self.has_walls {
            for i in 0..n {
                if state.types[i].is_wall() {
                    for k in 0..dim {
                        state.velocities[[i, k]] = self.prescribed[[i, k]];
                    }
                }
            }
        }

        let info = self.collect_info(state, dt, rebuilt)?;
        if let Some(sink) = &mut self.diagnostics {
            writeln!(
                sink,
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                info.step,
                info.t,
                info.dt,
                info.e_kin,
                info.max_velocity,
                info.min_density,
                info.max_density
            )?;
        }
        Ok(info)
    }

    fn check_state(&self, state: &ParticleState) -> Result<()> {
        for i in 0..state.len() {
            if state.types[i] != ParticleType::Fluid {
                continue;
            }
            if !(state.densities[i] > 0.0) {
                return Err(self.instability(format!(
                    "non-positive density {} at particle {i}",
                    state.densities[i]
                )));
            }
        }
        Ok(())
    }

    fn collect_info(&self, state: &ParticleState, dt: f64, rebuilt: bool) -> Result<StepInfo> {
        let dim = state.dim();
        let mut e_kin = 0.0;
        let mut max_v: f64 = 0.0;
        let mut min_rho = f64::INFINITY;
        let mut max_rho = f64::NEG_INFINITY;
        let mut finite = true;
        for i in 0..state.len() {
            let sq: f64 = (0..dim)
                .map(|k| state.velocities[[i, k]] * state.velocities[[i, k]])
                .sum();
            if state.types[i] == ParticleType::Fluid {
                e_kin += 0.5 * state.masses[i] * sq;
                min_rho = min_rho.min(state.densities[i]);
                max_rho = max_rho.max(state.densities[i]);
                if !(state.densities[i] > 0.0) {
                    return Err(self.instability(format!(
                        "non-positive density {} at particle {i}",
                        state.densities[i]
                    )));
                }
                for k in 0..dim {
                    finite &= state.positions[[i, k]].is_finite();
                }
            }
            max_v = max_v.max(sq.sqrt());
            finite &= sq.is_finite();
        }
        if !finite || !e_kin.is_finite() {
            return Err(self.instability("non-finite velocity or position".into()));
        }
        let v_limit = 10.0 * self.config.params.eos.c0;
        if max_v > v_limit {
            return Err(self.instability(format!(
                "velocity {max_v:.3e} exceeds 10 c0 = {v_limit:.3e}"
            )));
        }
        Ok(StepInfo {
            step: self.step_index,
            t: self.t,
            dt,
            e_kin,
            max_velocity: max_v,
            min_density: min_rho,
            max_density: max_rho,
            rebuilt_neighbors: rebuilt,
        })
    }

    fn instability(&self, reason: String) -> SphError {
        SphError::Instability {
            step: self.step_index,
            t: self.t,
            reason,
        }
    }
}
