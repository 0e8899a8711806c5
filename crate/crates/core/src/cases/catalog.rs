//! The seven-case catalog: every physical and numerical constant of the
//! benchmark datasets, exported as machine-readable JSON for external
//! verification.

use std::f64::consts::PI;

use crate::domain::Domain;
use crate::sph::DensityMode;

use super::{CaseId, CaseSpec, InitMode, SplitPlan};

/// Parameter set of one benchmark case.
pub fn case_spec(id: CaseId) -> CaseSpec {
    match id {
        CaseId::Tgv2d => CaseSpec {
            id,
            domain: Domain::rect(1.0, 1.0, true, true).unwrap(),
            dx: 0.02,
            dt_solver: 4.0e-4,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 0.0,
            viscosity: 0.01,
            force_magnitude: 0.0,
            reynolds: 100.0,
            splits: SplitPlan::ByTrajectory {
                trajectory_length: 126,
                train: 100,
                valid: 50,
                test: 50,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::RelaxedRandom,
            lid_velocity: 0.0,
        },
        CaseId::Rpf2d => CaseSpec {
            id,
            domain: Domain::rect(1.0, 2.0, true, true).unwrap(),
            dx: 0.025,
            dt_solver: 4.0e-4,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 5.0,
            viscosity: 0.1,
            force_magnitude: 1.0,
            reynolds: 10.0,
            splits: SplitPlan::ByFrames {
                train: 20_000,
                valid: 10_000,
                test: 10_000,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::Lattice,
            lid_velocity: 0.0,
        },
        CaseId::Ldc2d => CaseSpec {
            id,
            domain: Domain::rect(1.12, 1.12, false, false).unwrap(),
            dx: 0.02,
            dt_solver: 4.0e-4,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 1.0,
            viscosity: 0.01,
            force_magnitude: 0.0,
            reynolds: 100.0,
            splits: SplitPlan::ByFrames {
                train: 10_000,
                valid: 5_000,
                test: 5_000,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::Lattice,
            lid_velocity: 1.0,
        },
        CaseId::Dam2d => CaseSpec {
            id,
            domain: Domain::rect(5.486, 2.12, false, false).unwrap(),
            dx: 0.02,
            dt_solver: 3.0e-4,
            frames_between_samples: 100,
            c0: 14.14,
            rho0: 1.0,
            p_bg: 0.0,
            viscosity: 5.0e-5,
            force_magnitude: 1.0,
            reynolds: 40_000.0,
            splits: SplitPlan::ByTrajectory {
                trajectory_length: 401,
                train: 50,
                valid: 25,
                test: 25,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.1,
            density_mode: DensityMode::Evolution,
            init_mode: InitMode::RelaxedRandom,
            lid_velocity: 0.0,
        },
        CaseId::Tgv3d => CaseSpec {
            id,
            domain: Domain::cuboid(2.0 * PI, 2.0 * PI, 2.0 * PI, true, true, true).unwrap(),
            dx: 2.0 * PI / 20.0,
            dt_solver: 5.0e-3,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 0.0,
            viscosity: 0.02,
            force_magnitude: 0.0,
            reynolds: 50.0,
            splits: SplitPlan::ByTrajectory {
                trajectory_length: 61,
                train: 200,
                valid: 100,
                test: 100,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::RelaxedRandom,
            lid_velocity: 0.0,
        },
        CaseId::Rpf3d => CaseSpec {
            id,
            domain: Domain::cuboid(1.0, 2.0, 0.5, true, true, true).unwrap(),
            dx: 0.05,
            dt_solver: 1.0e-3,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 2.0,
            viscosity: 0.1,
            force_magnitude: 1.0,
            reynolds: 10.0,
            splits: SplitPlan::ByFrames {
                train: 10_000,
                valid: 5_000,
                test: 5_000,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::Lattice,
            lid_velocity: 0.0,
        },
        CaseId::Ldc3d => CaseSpec {
            id,
            domain: Domain::cuboid(1.25, 1.25, 0.5, false, false, true).unwrap(),
            dx: 1.0 / 24.0,
            dt_solver: 9.0e-4,
            frames_between_samples: 100,
            c0: 10.0,
            rho0: 1.0,
            p_bg: 1.0,
            viscosity: 0.01,
            force_magnitude: 0.0,
            reynolds: 100.0,
            splits: SplitPlan::ByFrames {
                train: 10_000,
                valid: 5_000,
                test: 5_000,
            },
            seed: 0,
            artificial_viscosity_alpha: 0.0,
            density_mode: DensityMode::Summation,
            init_mode: InitMode::Lattice,
            lid_velocity: 1.0,
        },
    }
}

/// All seven benchmark cases.
pub fn catalog() -> Vec<CaseSpec> {
    CaseId::ALL.iter().map(|&id| case_spec(id)).collect()
}

/// Stripped particle count of each case (fluid plus innermost wall layer).
pub fn expected_particle_count(id: CaseId) -> usize {
    match id {
        CaseId::Tgv2d => 2500,
        CaseId::Rpf2d => 3200,
        CaseId::Ldc2d => 2708,
        CaseId::Dam2d => 5740,
        CaseId::Tgv3d => 8000,
        CaseId::Rpf3d => 8000,
        CaseId::Ldc3d => 8160,
    }
}

/// The catalog as a JSON document for external tools.
pub fn catalog_json() -> serde_json::Value {
    let entries: Vec<serde_json::Value> = catalog()
        .into_iter()
        .map(|spec| {
            let mut v = serde_json::to_value(&spec).expect("case spec serializes");
            v["particle_count"] = expected_particle_count(spec.id).into();
            v["frame_dt"] = spec.frame_dt().into();
            v
        })
        .collect();
    serde_json::json!({ "cases": entries })
}
