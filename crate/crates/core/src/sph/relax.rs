//! SPH relaxation of randomly drawn particle positions.
//!
//! Runs the solver with velocities zeroed at the start of every step, so each
//! step is a damped pressure-driven move toward a near-uniform density field.
//! The step size follows the CFL bound with the acceleration term dominating.

use crate::domain::Domain;
use crate::error::Result;
use crate::kernel::QuinticKernel;
use crate::state::{ParticleState, ParticleType};

use super::stepper::{Stepper, StepperConfig};
use super::{cfl_dt, DensityMode, ForceField, SolverParams};

/// Relaxation controls.
#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    pub n_steps: usize,
    /// Clamp EOS pressure at zero so free surfaces do not clump under
    /// tension during relaxation.
    pub clamp_negative_pressure: bool,
    /// Extra background pressure driving regularization, as a fraction of
    /// `c0^2 rho0`.
    pub background_fraction: f64,
    /// Velocity retained after each step (0 = hard zeroing).
    pub damping: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            clamp_negative_pressure: false,
            background_fraction: 0.05,
            damping: 0.9,
        }
    }
}

/// Relax `state` in place. Walls (if present) participate through the usual
/// boundary treatment; external forces are off. Velocities are zero on exit.
pub fn relax(
    state: &mut ParticleState,
    domain: &Domain,
    kernel: &QuinticKernel,
    base: &SolverParams,
    opts: &RelaxOptions,
) -> Result<()> {
    let mut params = *base;
    params.density_mode = DensityMode::Summation;
    params.artificial_viscosity_alpha = 0.0;
    params.viscosity = 0.0;
    let bg_floor = opts.background_fraction * base.eos.c0 * base.eos.c0 * base.eos.rho0;
    params.eos.p_bg = base.eos.p_bg.max(bg_floor);
    // concentration-gradient shifting spreads clusters that pressure alone
    // leaves behind (the kernel gradient vanishes at tiny separations)
    params.transport_velocity = true;
    params.shifting_coefficient = 0.2;
    params.pressure_floor = if opts.clamp_negative_pressure {
        Some(0.0)
    } else {
        None
    };

    zero_fluid_velocities(state);
    let config = StepperConfig::new(params, ForceField::None);
    let mut stepper = Stepper::new(*domain, *kernel, config, state)?;
    stepper.prime(state)?;
    for _ in 0..opts.n_steps {
        damp_fluid_velocities(state, opts.damping);
        let dt = cfl_dt(state, kernel, &params, stepper.accelerations())?;
        stepper.step_with_dt(state, dt)?;
    }
    zero_fluid_velocities(state);
    // hand back a clean thermodynamic state: the positions are the result,
    // densities restart from the reference value (summation-mode solvers
    // recompute them immediately; evolution-mode solvers integrate from here)
    for i in 0..state.len() {
        state.densities[i] = base.eos.rho0;
        state.pressures[i] = base.eos.p_bg;
    }
    Ok(())
}

fn zero_fluid_velocities(state: &mut ParticleState) {
    damp_fluid_velocities(state, 0.0);
}

fn damp_fluid_velocities(state: &mut ParticleState, factor: f64) {
    for i in 0..state.len() {
        if state.types[i] == ParticleType::Fluid {
            for k in 0..state.dim() {
                state.velocities[[i, k]] *= factor;
            }
        }
    }
}
