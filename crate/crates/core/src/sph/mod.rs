//! Weakly-compressible SPH: equation of state, right-hand sides, generalized
//! wall boundary treatment, CFL step control, kick-drift-kick time
//! integration, and relaxation of random initial particle distributions.

mod neighborhood;
mod relax;
mod rhs;
mod stepper;

pub use neighborhood::{EdgeGeometry, Neighborhood};
pub use relax::{relax, RelaxOptions};
pub use rhs::{momentum_pass, MomentumOutput};
pub use stepper::{StepInfo, Stepper, StepperConfig};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::domain::MAX_DIM;
use crate::error::{Result, SphError};
use crate::kernel::QuinticKernel;
use crate::neighbors::EdgeSet;
use crate::state::ParticleState;

/// Barotropic equation-of-state constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosParams {
    /// Artificial speed of sound.
    pub c0: f64,
    /// Reference density.
    pub rho0: f64,
    /// Background pressure.
    pub p_bg: f64,
}

impl EosParams {
    pub fn new(c0: f64, rho0: f64, p_bg: f64) -> Self {
        Self { c0, rho0, p_bg }
    }

    /// `p = c0^2 (rho - rho0) + p_bg`
    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.c0 * self.c0 * (rho - self.rho0) + self.p_bg
    }

    /// Inverse of [`Self::pressure`].
    #[inline]
    pub fn density_of_pressure(&self, p: f64) -> f64 {
        self.rho0 + (p - self.p_bg) / (self.c0 * self.c0)
    }
}

/// How densities are updated each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Kernel summation every step (default for fully-supported flows).
    Summation,
    /// Continuity-equation integration (free-surface flows).
    Evolution,
}

/// Solver parameter set for one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub eos: EosParams,
    /// Kinematic viscosity (the inverse Reynolds number in the
    /// non-dimensional momentum equation).
    pub viscosity: f64,
    pub artificial_viscosity_alpha: f64,
    pub cfl_number: f64,
    pub density_mode: DensityMode,
    /// Advect positions with a transport velocity: each step adds a position
    /// shift down the particle-concentration gradient, and the momentum
    /// equation gains the matching convective correction. Keeps particle
    /// distributions regular under sustained strain.
    pub transport_velocity: bool,
    /// Shift magnitude prefactor: `dr = -C h^2 sum_j (m_j/rho_j) grad W_ij`,
    /// capped at a tenth of the smoothing length per step.
    pub shifting_coefficient: f64,
    /// Optional floor applied to EOS output (used when relaxing
    /// configurations with a free surface).
    pub pressure_floor: Option<f64>,
}

impl SolverParams {
    pub fn new(eos: EosParams, viscosity: f64) -> Self {
        Self {
            eos,
            viscosity,
            artificial_viscosity_alpha: 0.0,
            cfl_number: 0.25,
            density_mode: DensityMode::Summation,
            transport_velocity: true,
            shifting_coefficient: 0.2,
            pressure_floor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_number > 0.0 && self.cfl_number < 1.0) {
            return Err(SphError::Config(format!(
                "cfl_number must lie in (0, 1), got {}",
                self.cfl_number
            )));
        }
        if self.artificial_viscosity_alpha < 0.0 {
            return Err(SphError::Config("alpha must be >= 0".into()));
        }
        if !(self.eos.c0 > 0.0) || !(self.eos.rho0 > 0.0) {
            return Err(SphError::Config("c0 and rho0 must be positive".into()));
        }
        if self.viscosity < 0.0 {
            return Err(SphError::Config("viscosity must be >= 0".into()));
        }
        Ok(())
    }
}

/// External volumetric force field of a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ForceField {
    None,
    /// Uniform body force (gravity, channel drive).
    Constant {
        f: [f64; MAX_DIM],
    },
    /// `+magnitude` along `flow_axis` where `pos[split_axis] < split`,
    /// `-magnitude` above (reverse-Poiseuille drive).
    OpposedHalves {
        flow_axis: usize,
        split_axis: usize,
        split: f64,
        magnitude: f64,
    },
}

impl ForceField {
    /// Force vector at a position and time.
    #[inline]
    pub fn eval(&self, pos: &[f64], _t: f64) -> [f64; MAX_DIM] {
        match *self {
            ForceField::None => [0.0; MAX_DIM],
            ForceField::Constant { f } => f,
            ForceField::OpposedHalves {
                flow_axis,
                split_axis,
                split,
                magnitude,
            } => {
                let mut f = [0.0; MAX_DIM];
                f[flow_axis] = if pos[split_axis] < split {
                    magnitude
                } else {
                    -magnitude
                };
                f
            }
        }
    }

    /// The uniform body force to use in the hydrostatic wall-pressure
    /// correction, if this field is uniform.
    pub fn uniform_body_force(&self) -> Option<[f64; MAX_DIM]> {
        match *self {
            ForceField::Constant { f } => Some(f),
            _ => None,
        }
    }
}

/// EOS pressure for a single density value.
#[inline]
pub fn eos_pressure(rho: f64, params: &SolverParams) -> f64 {
    debug_assert!(rho > 0.0, "EOS requires positive density, got {rho}");
    let p = params.eos.pressure(rho);
    match params.pressure_floor {
        Some(floor) => p.max(floor),
        None => p,
    }
}

// The free-function (EdgeSet-based) entry points below derive geometry from
// the displacements stored on the edge set. Internally the stepper keeps its
// own neighborhood and refreshes geometry from positions every step.

/// Density summation over an edge set (self term included).
pub fn density_summation(
    state: &ParticleState,
    edges: &EdgeSet,
    kernel: &QuinticKernel,
) -> Array1<f64> {
    let nbh = Neighborhood::from_edges(edges, state.len());
    let geo = geometry_from_edges(&nbh, edges, kernel);
    let mut out = Array1::zeros(state.len());
    rhs::density_summation_pass(&nbh, &geo, &state.masses, kernel, &mut out);
    out
}

/// One forward-Euler step of the continuity equation; errors if any fluid
/// density becomes non-positive.
pub fn density_evolution_step(
    state: &ParticleState,
    edges: &EdgeSet,
    kernel: &QuinticKernel,
    dt: f64,
) -> Result<Array1<f64>> {
    let nbh = Neighborhood::from_edges(edges, state.len());
    let geo = geometry_from_edges(&nbh, edges, kernel);
    let mut rate = Array1::zeros(state.len());
    rhs::density_rate_pass(&nbh, &geo, state, &mut rate);
    let mut out = state.densities.clone();
    for i in 0..state.len() {
        if state.is_fluid(i) {
            out[i] += dt * rate[i];
            if !(out[i] > 0.0) {
                return Err(SphError::Instability {
                    step: 0,
                    t: 0.0,
                    reason: format!("density of particle {i} became {}", out[i]),
                });
            }
        }
    }
    Ok(out)
}

/// Geometry taken from the displacements already stored on an edge set.
pub(crate) fn geometry_from_edges(
    nbh: &Neighborhood,
    edges: &EdgeSet,
    kernel: &QuinticKernel,
) -> EdgeGeometry {
    // nbh edge order is the receiver-CSR permutation of `edges`; rebuild in
    // the same order.
    let (_, order) = edges.receiver_csr(nbh.n);
    let mut geo = EdgeGeometry::default();
    for &e in &order {
        let e = e as usize;
        let r = edges.distances[e];
        let (w, dwdr) = kernel.value_and_grad(r);
        geo.disp.push(edges.displacements[e]);
        geo.dist.push(r);
        geo.w.push(w);
        geo.dwdr.push(dwdr);
    }
    geo
}

/// Momentum right-hand side over an explicit edge set. Pressures, densities,
/// and wall boundary values must be current.
pub fn momentum_rhs(
    state: &ParticleState,
    edges: &EdgeSet,
    kernel: &QuinticKernel,
    params: &SolverParams,
    force: &ForceField,
) -> Result<MomentumOutput> {
    let nbh = Neighborhood::from_edges(edges, state.len());
    let geo = geometry_from_edges(&nbh, edges, kernel);
    let out = rhs::momentum_pass(&nbh, &geo, state, params, force, None, 0.0, kernel.h());
    if out.accel.iter().any(|a| !a.is_finite()) {
        return Err(SphError::Instability {
            step: 0,
            t: 0.0,
            reason: "non-finite acceleration in momentum RHS".into(),
        });
    }
    Ok(out)
}

/// Generalized wall boundary condition over an explicit edge set: mirrors
/// fluid velocity for no-slip, extrapolates fluid pressure (optionally with a
/// hydrostatic correction), and inverts the EOS for wall density.
pub fn enforce_wall_bc(
    state: &mut ParticleState,
    edges: &EdgeSet,
    kernel: &QuinticKernel,
    prescribed: &Array2<f64>,
    eos: &EosParams,
    body_force: Option<[f64; MAX_DIM]>,
) {
    let nbh = Neighborhood::from_edges(edges, state.len());
    let geo = geometry_from_edges(&nbh, edges, kernel);
    rhs::wall_bc_pass(&nbh, &geo, state, prescribed, eos, body_force);
}

/// CFL-limited time step:
/// `dt = cfl * min( h/(c0 + |v|max), h^2/nu, sqrt(h/|a|max) )`.
pub fn cfl_dt(
    state: &ParticleState,
    kernel: &QuinticKernel,
    params: &SolverParams,
    accelerations: &Array2<f64>,
) -> Result<f64> {
    let h = kernel.h();
    let vmax = state
        .velocities
        .outer_iter()
        .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let amax = accelerations
        .outer_iter()
        .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let acoustic = h / (params.eos.c0 + vmax);
    let viscous = if params.viscosity > 0.0 {
        h * h / params.viscosity
    } else {
        f64::INFINITY
    };
    let body = if amax > 0.0 {
        (h / amax).sqrt()
    } else {
        f64::INFINITY
    };
    let dt = params.cfl_number * acoustic.min(viscous).min(body);
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SphError::Instability {
            step: 0,
            t: 0.0,
            reason: format!("non-positive CFL step {dt}"),
        });
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::neighbors::neighbor_pairs_bruteforce;
    use crate::state::ParticleType;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array2;

    fn periodic_lattice_state(n_side: usize, dx: f64) -> (ParticleState, Domain, QuinticKernel) {
        let ext = n_side as f64 * dx;
        let domain = Domain::rect(ext, ext, true, true).unwrap();
        let mut pos = Array2::zeros((n_side * n_side, 2));
        for i in 0..n_side {
            for j in 0..n_side {
                pos[[i * n_side + j, 0]] = (i as f64 + 0.5) * dx;
                pos[[i * n_side + j, 1]] = (j as f64 + 0.5) * dx;
            }
        }
        let state = ParticleState::fluid_at_rest(pos, 1.0, dx);
        let kernel = QuinticKernel::new(dx, 2);
        (state, domain, kernel)
    }

    fn default_params() -> SolverParams {
        SolverParams::new(EosParams::new(10.0, 1.0, 0.0), 0.0)
    }

    #[test]
    fn eos_reference_density_gives_background_pressure() {
        let params = SolverParams::new(EosParams::new(10.0, 1.0, 3.5), 0.0);
        assert_eq!(eos_pressure(1.0, &params), 3.5);
        let params0 = default_params();
        assert_abs_diff_eq!(eos_pressure(1.02, &params0), 2.0, epsilon = 1e-12);
        // inverse
        let rho = params.eos.density_of_pressure(5.5);
        assert_abs_diff_eq!(params.eos.pressure(rho), 5.5, epsilon = 1e-12);
    }

    #[test]
    fn density_summation_isolated_particle_is_self_term() {
        let domain = Domain::rect(1.0, 1.0, false, false).unwrap();
        let pos = ndarray::array![[0.5, 0.5]];
        let state = ParticleState::fluid_at_rest(pos, 1.0, 0.1);
        let kernel = QuinticKernel::new(0.1, 2);
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let rho = density_summation(&state, &edges, &kernel);
        let m = state.masses[0];
        assert_relative_eq!(rho[0], m * kernel.w0(), max_relative = 1e-14);
    }

    #[test]
    fn density_summation_on_lattice_recovers_rho0() {
        let (state, domain, kernel) = periodic_lattice_state(20, 0.05);
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let rho = density_summation(&state, &edges, &kernel);
        for &r in rho.iter() {
            assert_abs_diff_eq!(r, 1.0, epsilon = 0.02);
        }
    }

    #[test]
    fn density_summation_is_permutation_equivariant() {
        let (state, domain, kernel) = periodic_lattice_state(8, 0.05);
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let rho = density_summation(&state, &edges, &kernel);

        // reverse particle order
        let n = state.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted = state.select(&perm);
        let edges_p =
            neighbor_pairs_bruteforce(&permuted.positions, &domain, kernel.support_radius());
        let rho_p = density_summation(&permuted, &edges_p, &kernel);
        for i in 0..n {
            assert_abs_diff_eq!(rho_p[i], rho[n - 1 - i], epsilon = 1e-14);
        }
    }

    #[test]
    fn density_evolution_rigid_translation_and_zero_dt() {
        let (mut state, domain, kernel) = periodic_lattice_state(10, 0.05);
        for i in 0..state.len() {
            state.velocities[[i, 0]] = 0.7;
            state.velocities[[i, 1]] = -0.3;
        }
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let rho1 = density_evolution_step(&state, &edges, &kernel, 0.1).unwrap();
        for i in 0..state.len() {
            assert_abs_diff_eq!(rho1[i], state.densities[i], epsilon = 1e-12);
        }
        let rho0 = density_evolution_step(&state, &edges, &kernel, 0.0).unwrap();
        assert_eq!(rho0, state.densities);
    }

    #[test]
    fn density_evolution_uniform_expansion_matches_divergence() {
        // v = x: div v = dim. Check the central particle (full support,
        // velocities smooth there).
        let (mut state, domain, kernel) = periodic_lattice_state(16, 0.05);
        for i in 0..state.len() {
            state.velocities[[i, 0]] = state.positions[[i, 0]];
            state.velocities[[i, 1]] = state.positions[[i, 1]];
        }
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let dt = 1e-6;
        let rho1 = density_evolution_step(&state, &edges, &kernel, dt).unwrap();
        // central particle index: i = j = 8 -> 8*16+8
        let c = 8 * 16 + 8;
        let rate = (rho1[c] - state.densities[c]) / dt;
        let expected = -state.densities[c] * 2.0;
        assert_relative_eq!(rate, expected, max_relative = 0.05);
    }

    #[test]
    fn momentum_uniform_pressure_is_equilibrium() {
        let (mut state, domain, kernel) = periodic_lattice_state(12, 0.05);
        for i in 0..state.len() {
            state.pressures[i] = 1.0;
        }
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let out = momentum_rhs(
            &state,
            &edges,
            &kernel,
            &default_params(),
            &ForceField::None,
        )
        .unwrap();
        for a in out.accel.iter() {
            assert_abs_diff_eq!(*a, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn momentum_uniform_force_gives_f_over_rho() {
        let (mut state, domain, kernel) = periodic_lattice_state(12, 0.05);
        for i in 0..state.len() {
            state.densities[i] = 1.25;
        }
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let force = ForceField::Constant { f: [1.0, 0.0, 0.0] };
        let out = momentum_rhs(&state, &edges, &kernel, &default_params(), &force).unwrap();
        for i in 0..state.len() {
            assert_abs_diff_eq!(out.accel[[i, 0]], 1.0 / 1.25, epsilon = 1e-12);
            assert_abs_diff_eq!(out.accel[[i, 1]], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn internal_forces_cancel_pairwise() {
        // random small periodic system with pressure, viscosity, and
        // artificial viscosity active: sum of m_i a_i equals sum of forces
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let domain = Domain::rect(1.0, 1.0, true, true).unwrap();
        let n = 120;
        let mut pos = Array2::zeros((n, 2));
        let mut vel = Array2::zeros((n, 2));
        for i in 0..n {
            for k in 0..2 {
                pos[[i, k]] = rng.gen::<f64>();
                vel[[i, k]] = rng.gen::<f64>() - 0.5;
            }
        }
        let dx = 0.1;
        let kernel = QuinticKernel::new(dx, 2);
        let mut state = ParticleState::fluid_at_rest(pos, 1.0, dx);
        state.velocities = vel;
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let rho = density_summation(&state, &edges, &kernel);
        state.densities = rho;
        let mut params = SolverParams::new(EosParams::new(10.0, 1.0, 1.0), 0.05);
        params.artificial_viscosity_alpha = 0.3;
        params.transport_velocity = false;
        for i in 0..n {
            state.pressures[i] = eos_pressure(state.densities[i], &params);
        }
        let out = momentum_rhs(&state, &edges, &kernel, &params, &ForceField::None).unwrap();
        let mut fx = 0.0;
        let mut fy = 0.0;
        let mut scale = 0.0;
        for i in 0..n {
            fx += state.masses[i] * out.accel[[i, 0]];
            fy += state.masses[i] * out.accel[[i, 1]];
            scale += state.masses[i] * (out.accel[[i, 0]].abs() + out.accel[[i, 1]].abs());
        }
        assert!(
            fx.abs() <= 1e-12 * scale.max(1.0),
            "fx = {fx}, scale = {scale}"
        );
        assert!(
            fy.abs() <= 1e-12 * scale.max(1.0),
            "fy = {fy}, scale = {scale}"
        );
    }

    #[test]
    fn wall_bc_mirrors_tangential_fluid_velocity() {
        // one wall particle below a row of fluid particles moving at +u
        let domain = Domain::rect(1.0, 1.0, true, false).unwrap();
        let dx = 0.05;
        let kernel = QuinticKernel::new(dx, 2);
        let mut pos = Vec::new();
        // wall at y = 0.475; fluid rows above
        pos.push([0.5, 0.475]);
        let mut types = vec![ParticleType::Wall];
        for row in 0..3 {
            for col in 0..9 {
                pos.push([0.3 + col as f64 * dx, 0.525 + row as f64 * dx]);
                types.push(ParticleType::Fluid);
            }
        }
        let n = pos.len();
        let mut positions = Array2::zeros((n, 2));
        for (i, p) in pos.iter().enumerate() {
            positions[[i, 0]] = p[0];
            positions[[i, 1]] = p[1];
        }
        let mut velocities = Array2::zeros((n, 2));
        for i in 1..n {
            velocities[[i, 0]] = 0.8;
        }
        let mut state = ParticleState::new(
            positions,
            velocities,
            ndarray::Array1::from_elem(n, 1.0),
            ndarray::Array1::from_elem(n, 0.0),
            ndarray::Array1::from_elem(n, 1.0 * dx * dx),
            types,
        )
        .unwrap();
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let prescribed = Array2::zeros((n, 2));
        let eos = EosParams::new(10.0, 1.0, 0.0);
        enforce_wall_bc(&mut state, &edges, &kernel, &prescribed, &eos, None);
        // static wall next to fluid moving at +u: ghost velocity ~ -u
        assert_abs_diff_eq!(state.velocities[[0, 0]], -0.8, epsilon = 1e-9);

        // moving lid at U with adjacent fluid also at U keeps ~U
        let mut prescribed_moving = Array2::zeros((n, 2));
        prescribed_moving[[0, 0]] = 0.8;
        enforce_wall_bc(&mut state, &edges, &kernel, &prescribed_moving, &eos, None);
        assert_abs_diff_eq!(state.velocities[[0, 0]], 0.8, epsilon = 1e-9);
    }

    #[test]
    fn wall_without_fluid_neighbors_keeps_prescribed_values() {
        let domain = Domain::rect(1.0, 1.0, false, false).unwrap();
        let dx = 0.05;
        let kernel = QuinticKernel::new(dx, 2);
        let positions = ndarray::array![[0.1, 0.1], [0.9, 0.9]];
        let types = vec![ParticleType::Wall, ParticleType::Fluid];
        let mut state = ParticleState::new(
            positions,
            Array2::zeros((2, 2)),
            ndarray::Array1::from_elem(2, 1.0),
            ndarray::Array1::from_elem(2, 7.0),
            ndarray::Array1::from_elem(2, dx * dx),
            types,
        )
        .unwrap();
        let edges = neighbor_pairs_bruteforce(&state.positions, &domain, kernel.support_radius());
        let mut prescribed = Array2::zeros((2, 2));
        prescribed[[0, 1]] = 0.25;
        let eos = EosParams::new(10.0, 1.0, 1.5);
        enforce_wall_bc(&mut state, &edges, &kernel, &prescribed, &eos, None);
        assert_eq!(state.velocities[[0, 1]], 0.25);
        assert_eq!(state.pressures[0], 1.5);
        assert_eq!(state.densities[0], 1.0);
    }

    #[test]
    fn cfl_acoustic_term_dominates_at_rest() {
        let (state, _domain, kernel) = periodic_lattice_state(6, 0.05);
        let params = default_params();
        let accel = Array2::zeros((state.len(), 2));
        let dt = cfl_dt(&state, &kernel, &params, &accel).unwrap();
        assert_relative_eq!(dt, 0.25 * kernel.h() / 10.0, max_relative = 1e-12);
    }

    #[test]
    fn cfl_matches_independent_bound_evaluation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (mut state, _domain, kernel) = periodic_lattice_state(4, 0.05);
            let mut accel = Array2::zeros((state.len(), 2));
            for i in 0..state.len() {
                for k in 0..2 {
                    state.velocities[[i, k]] = 4.0 * (rng.gen::<f64>() - 0.5);
                    accel[[i, k]] = 100.0 * (rng.gen::<f64>() - 0.5);
                }
            }
            let mut params = default_params();
            params.viscosity = rng.gen::<f64>() * 0.1;
            let dt = cfl_dt(&state, &kernel, &params, &accel).unwrap();

            // independent evaluation
            let h = kernel.h();
            let vmax = state
                .velocities
                .outer_iter()
                .map(|r| (r[0] * r[0] + r[1] * r[1]).sqrt())
                .fold(0.0f64, f64::max);
            let amax = accel
                .outer_iter()
                .map(|r| (r[0] * r[0] + r[1] * r[1]).sqrt())
                .fold(0.0f64, f64::max);
            let mut expect = h / (10.0 + vmax);
            if params.viscosity > 0.0 {
                expect = expect.min(h * h / params.viscosity);
            }
            expect = expect.min((h / amax).sqrt());
            assert_relative_eq!(dt, 0.25 * expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_dt_step_is_identity() {
        let (mut state, domain, kernel) = periodic_lattice_state(12, 0.05);
        for i in 0..state.len() {
            state.velocities[[i, 0]] = 0.3;
        }
        let config = StepperConfig::new(default_params(), ForceField::None);
        let mut stepper = Stepper::new(domain, kernel, config, &state).unwrap();
        stepper.prime(&mut state).unwrap();
        let before_pos = state.positions.clone();
        let before_vel = state.velocities.clone();
        stepper.step_with_dt(&mut state, 0.0).unwrap();
        assert_eq!(state.positions, before_pos);
        assert_eq!(state.velocities, before_vel);
    }

    #[test]
    fn force_free_uniform_flow_advects_exactly() {
        let (mut state, domain, kernel) = periodic_lattice_state(12, 0.05);
        let u = [0.31, -0.17];
        for i in 0..state.len() {
            state.velocities[[i, 0]] = u[0];
            state.velocities[[i, 1]] = u[1];
        }
        let start = state.positions.clone();
        let config = StepperConfig::new(default_params(), ForceField::None);
        let mut stepper = Stepper::new(domain, kernel, config, &state).unwrap();
        let dt = 1e-3;
        let steps = 50;
        for _ in 0..steps {
            stepper.step_with_dt(&mut state, dt).unwrap();
        }
        let t = dt * steps as f64;
        for i in 0..state.len() {
            assert_abs_diff_eq!(state.velocities[[i, 0]], u[0], epsilon = 1e-12);
            assert_abs_diff_eq!(state.velocities[[i, 1]], u[1], epsilon = 1e-12);
            for k in 0..2 {
                let expect = domain.wrap_component(start[[i, k]] + u[k] * t, k);
                assert_abs_diff_eq!(state.positions[[i, k]], expect, epsilon = 1e-10);
            }
        }
    }
}
