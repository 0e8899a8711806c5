//! Right-hand-side passes of the weakly-compressible solver: density
//! summation/evolution, generalized wall boundary treatment, and the momentum
//! equation (pressure gradient, viscous, artificial-viscosity, external-force,
//! and background-pressure terms).

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::domain::MAX_DIM;
use crate::kernel::QuinticKernel;
use crate::state::{ParticleState, ParticleType};

use super::neighborhood::{EdgeGeometry, Neighborhood};
use super::{EosParams, ForceField, SolverParams};

/// Softening added to squared distances in the viscous denominators.
const DIST_EPS_FACTOR: f64 = 0.01;

/// Density by kernel summation, `rho_i = sum_j m_j W_ij` including the self
/// term, written into `out` for every particle.
pub fn density_summation_pass(
    nbh: &Neighborhood,
    geo: &EdgeGeometry,
    masses: &Array1<f64>,
    kernel: &QuinticKernel,
    out: &mut Array1<f64>,
) {
    let m = masses.as_slice().expect("contiguous");
    let w0 = kernel.w0();
    out.as_slice_mut()
        .expect("contiguous")
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, rho)| {
            let mut acc = m[i] * w0;
            for e in nbh.edges_of(i) {
                acc += m[nbh.senders[e] as usize] * geo.w[e];
            }
            *rho = acc;
        });
}

/// Continuity-equation rate `drho_i/dt = rho_i * sum_j (m_j/rho_j)
/// (v_i - v_j) . grad W_ij`, for fluid receivers (zero for walls).
pub fn density_rate_pass(
    nbh: &Neighborhood,
    geo: &EdgeGeometry,
    state: &ParticleState,
    out: &mut Array1<f64>,
) {
    let dim = nbh.dim;
    let v = state.velocities.as_slice().expect("contiguous");
    let rho = state.densities.as_slice().expect("contiguous");
    let m = state.masses.as_slice().expect("contiguous");
    let types = &state.types;
    out.as_slice_mut()
        .expect("contiguous")
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, rate)| {
            if types[i] != ParticleType::Fluid {
                *rate = 0.0;
                return;
            }
            let mut div = 0.0;
            for e in nbh.edges_of(i) {
                if geo.dist[e] <= 0.0 {
                    continue;
                }
                let j = nbh.senders[e] as usize;
                let g = geo.dwdr[e] / geo.dist[e];
                let mut vdotd = 0.0;
                for k in 0..dim {
                    vdotd += (v[i * dim + k] - v[j * dim + k]) * geo.disp[e][k];
                }
                div += m[j] / rho[j] * vdotd * g;
            }
            *rate = rho[i] * div;
        });
}

/// Generalized wall boundary treatment. For each wall particle with fluid
/// neighbors: no-slip ghost velocity `2 v_prescribed - <v_fluid>`, pressure
/// extrapolated from the fluid (plus a hydrostatic correction under a body
/// force), density from the inverse equation of state. Wall particles
/// without fluid neighbors keep the prescribed velocity and background
/// pressure. Positions are untouched.
pub fn wall_bc_pass(
    nbh: &Neighborhood,
    geo: &EdgeGeometry,
    state: &mut ParticleState,
    prescribed: &Array2<f64>,
    eos: &EosParams,
    body_force: Option<[f64; MAX_DIM]>,
) {
    let dim = nbh.dim;
    let n = state.len();
    // Fluid fields are only read, wall rows only written; wall-wall pairs are
    // skipped, so a snapshot of the fluid values is not needed.
    let w_tiny = 1e-12 * QuinticKernel::new(1.0, dim).w0();

    for w in 0..n {
        if !state.types[w].is_wall() {
            continue;
        }
        let mut w_sum = 0.0;
        let mut v_sum = [0.0; MAX_DIM];
        let mut p_sum = 0.0;
        let mut hydro = 0.0;
        for e in nbh.edges_of(w) {
            let j = nbh.senders[e] as usize;
            if state.types[j] != ParticleType::Fluid {
                continue;
            }
            let wij = geo.w[e];
            if wij <= 0.0 {
                continue;
            }
            w_sum += wij;
            for k in 0..dim {
                v_sum[k] += state.velocities[[j, k]] * wij;
            }
            p_sum += state.pressures[j] * wij;
            if let Some(g) = body_force {
                // disp = x_wall - x_fluid
                let mut gdotd = 0.0;
                for k in 0..dim {
                    gdotd += g[k] * geo.disp[e][k];
                }
                hydro += state.densities[j] * gdotd * wij;
            }
        }
        if w_sum > w_tiny {
            let inv = 1.0 / w_sum;
            for k in 0..dim {
                state.velocities[[w, k]] = 2.0 * prescribed[[w, k]] - v_sum[k] * inv;
            }
            let p_w = (p_sum + hydro) * inv;
            state.pressures[w] = p_w;
            state.densities[w] = eos
                .density_of_pressure(p_w)
                .clamp(0.1 * eos.rho0, 10.0 * eos.rho0);
        } else {
            for k in 0..dim {
                state.velocities[[w, k]] = prescribed[[w, k]];
            }
            state.pressures[w] = eos.p_bg;
            state.densities[w] = eos.rho0;
        }
    }
}

/// Output of the momentum pass: physical acceleration per particle, plus the
/// particle-concentration gradient `sum_j (m_j/rho_j) grad W_ij` used for the
/// transport (shifting) advection when enabled.
pub struct MomentumOutput {
    pub accel: Array2<f64>,
    pub concentration_gradient: Option<Array2<f64>>,
}

/// Momentum equation for fluid receivers (walls get zero acceleration):
///
/// * pairwise-antisymmetric pressure gradient with density-weighted
///   inter-particle pressure and volume-squared weighting,
/// * inter-particle viscous operator acting on velocity differences,
/// * artificial viscosity, active only for approaching pairs,
/// * external volumetric force `F / rho`,
/// * with transport advection: the convective correction
///   `(1/m_i) sum_j (V_i^2+V_j^2) (A_i+A_j)/2 . grad W` with
///   `A = rho v (dv)^T` built from the shift velocities `dv` of the last
///   drift, plus the particle-concentration gradient accumulated separately
///   to drive the next position shift.
pub fn momentum_pass(
    nbh: &Neighborhood,
    geo: &EdgeGeometry,
    state: &ParticleState,
    params: &SolverParams,
    force: &ForceField,
    shift_velocity: Option<&Array2<f64>>,
    t: f64,
    h: f64,
) -> MomentumOutput {
    let dim = nbh.dim;
    let n = state.len();
    let pos = state.positions.as_slice().expect("contiguous");
    let v = state.velocities.as_slice().expect("contiguous");
    let rho = state.densities.as_slice().expect("contiguous");
    let p = state.pressures.as_slice().expect("contiguous");
    let m = state.masses.as_slice().expect("contiguous");
    let types = &state.types;

    let nu = params.viscosity;
    let alpha = params.artificial_viscosity_alpha;
    let c0 = params.eos.c0;
    let with_shift = params.transport_velocity && params.shifting_coefficient > 0.0;
    let shift = shift_velocity.and_then(|s| s.as_slice());
    let eps_h2 = DIST_EPS_FACTOR * h * h;

    let mut accel = Array2::zeros((n, dim));
    let mut conc_grad = if with_shift {
        Some(Array2::zeros((n, dim)))
    } else {
        None
    };

    {
        let accel_flat = accel.as_slice_mut().expect("contiguous");
        let bg_flat = conc_grad
            .as_mut()
            .map(|a| a.as_slice_mut().expect("contiguous"));

        let body = |i: usize, a_row: &mut [f64], bg_row: Option<&mut [f64]>| {
            if types[i] != ParticleType::Fluid {
                return;
            }
            let f_ext = force.eval(&pos[i * dim..i * dim + dim], t);
            let inv_rho_i = 1.0 / rho[i];
            for k in 0..dim {
                a_row[k] = f_ext[k] * inv_rho_i;
            }
            let vol_i = m[i] / rho[i];
            let vol_i2 = vol_i * vol_i;
            let inv_m_i = 1.0 / m[i];
            let mut bg_acc = [0.0; MAX_DIM];
            for e in nbh.edges_of(i) {
                let r = geo.dist[e];
                let dwdr = geo.dwdr[e];
                if r <= 0.0 || dwdr == 0.0 {
                    continue;
                }
                let disp = geo.disp[e];
                let j = nbh.senders[e] as usize;
                let vol_j = m[j] / rho[j];
                let volsq = vol_i2 + vol_j * vol_j;
                let g_over_r = dwdr / r;

                // density-weighted inter-particle pressure
                let p_ij = (rho[j] * p[i] + rho[i] * p[j]) / (rho[i] + rho[j]);
                let mut coeff = -inv_m_i * volsq * p_ij * g_over_r;

                // artificial viscosity for approaching pairs
                let mut vdotd = 0.0;
                for k in 0..dim {
                    vdotd += (v[i * dim + k] - v[j * dim + k]) * disp[k];
                }
                if alpha > 0.0 && vdotd < 0.0 {
                    let mu = h * vdotd / (r * r + eps_h2);
                    let pi_ij = -alpha * c0 * mu / (0.5 * (rho[i] + rho[j]));
                    coeff -= m[j] * pi_ij * g_over_r;
                }

                // inter-particle viscous operator on velocity differences
                let visc = if nu > 0.0 {
                    m[j] * nu * (rho[i] + rho[j]) / (rho[i] * rho[j]) * (r * dwdr)
                        / (r * r + eps_h2)
                } else {
                    0.0
                };

                for k in 0..dim {
                    let dv = v[i * dim + k] - v[j * dim + k];
                    a_row[k] += coeff * disp[k] + visc * dv;
                }

                // convective correction for transport-velocity advection
                if let Some(sv) = shift {
                    let mut svi_dot_g = 0.0;
                    let mut svj_dot_g = 0.0;
                    for k in 0..dim {
                        let gk = g_over_r * disp[k];
                        svi_dot_g += sv[i * dim + k] * gk;
                        svj_dot_g += sv[j * dim + k] * gk;
                    }
                    let c = 0.5 * volsq * inv_m_i;
                    for k in 0..dim {
                        a_row[k] += c
                            * (rho[i] * v[i * dim + k] * svi_dot_g
                                + rho[j] * v[j * dim + k] * svj_dot_g);
                    }
                }

                if with_shift {
                    let vg = vol_j * g_over_r;
                    for k in 0..dim {
                        bg_acc[k] += vg * disp[k];
                    }
                }
            }
            if let Some(bg) = bg_row {
                bg[..dim].copy_from_slice(&bg_acc[..dim]);
            }
        };

        match bg_flat {
            Some(bg) => {
                accel_flat
                    .par_chunks_mut(dim)
                    .zip(bg.par_chunks_mut(dim))
                    .enumerate()
                    .for_each(|(i, (a_row, bg_row))| body(i, a_row, Some(bg_row)));
            }
            None => {
                accel_flat
                    .par_chunks_mut(dim)
                    .enumerate()
                    .for_each(|(i, a_row)| body(i, a_row, None));
            }
        }
    }

    MomentumOutput {
        accel,
        concentration_gradient: conc_grad,
    }
}
