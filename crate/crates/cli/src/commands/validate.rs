//! `sphkit validate`: physics validation suites with pass/fail verdicts.

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use sphkit::validation::{run_conservation_suite, run_poiseuille_validation, run_tgv2d_decay};

use crate::config::{load_config, resolve_out_dir, write_effective_config};
use crate::CommonArgs;

// Acceptance tolerances, pinned here and in the library acceptance suite.
const POISEUILLE_CENTERLINE_TOL: f64 = 0.05;
const TGV_RATE_TOL: f64 = 0.15;
const TGV_POINTWISE_TOL: f64 = 0.20;
const MOMENTUM_TOL: f64 = 1e-10;
const GALILEAN_TOL: f64 = 1e-12;
const LATTICE_DENSITY_TOL: f64 = 0.02;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub suite: String,
    /// Frames for the Taylor-Green decay run.
    pub tgv_frames: usize,
    pub seed: u64,
    /// Poiseuille profile sample times.
    pub poiseuille_times: Vec<f64>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            suite: "all".into(),
            tgv_frames: 126,
            seed: 0,
            poiseuille_times: vec![5e-4, 2e-3, 6.5e-3],
        }
    }
}

pub fn run(common: CommonArgs, suite: String, tgv_frames: Option<usize>) -> Result<ExitCode> {
    let mut cfg: ValidateConfig = load_config(
        &ValidateConfig::default(),
        common.config.as_deref(),
        &common.sets,
    )?;
    if suite != "all" || cfg.suite.is_empty() {
        cfg.suite = suite;
    }
    if let Some(frames) = tgv_frames {
        cfg.tgv_frames = frames;
    }
    let out_dir = resolve_out_dir(common.out.as_deref(), "validate")?;
    std::fs::create_dir_all(&out_dir)?;
    write_effective_config(&out_dir, &cfg)?;

    let mut all_pass = true;
    let run_poiseuille = matches!(cfg.suite.as_str(), "poiseuille" | "all");
    let run_tgv = matches!(cfg.suite.as_str(), "tgv2d" | "all");
    let run_conservation = matches!(cfg.suite.as_str(), "conservation" | "all");
    if !(run_poiseuille || run_tgv || run_conservation) {
        bail!(
            "unknown suite {:?} (poiseuille | tgv2d | conservation | all)",
            cfg.suite
        );
    }

    if run_poiseuille {
        let result = run_poiseuille_validation(&cfg.poiseuille_times)?;
        let mut csv = std::fs::File::create(out_dir.join("poiseuille_profiles.csv"))?;
        writeln!(csv, "t,y,u_sph,u_series")?;
        for profile in &result.profiles {
            for i in 0..profile.y.len() {
                writeln!(
                    csv,
                    "{:.9e},{:.9e},{:.9e},{:.9e}",
                    profile.t, profile.y[i], profile.u_sph[i], profile.u_series[i]
                )?;
            }
        }
        let pass = result.centerline_rel_error_steady <= POISEUILLE_CENTERLINE_TOL;
        all_pass &= pass;
        println!(
            "poiseuille: centerline error {:.3}% (tolerance {:.0}%) .. {}",
            100.0 * result.centerline_rel_error_steady,
            100.0 * POISEUILLE_CENTERLINE_TOL,
            verdict(pass)
        );
    }

    if run_tgv {
        let result = run_tgv2d_decay(cfg.tgv_frames, cfg.seed, 1.0)?;
        let mut csv = std::fs::File::create(out_dir.join("tgv2d_decay.csv"))?;
        writeln!(csv, "t,e_kin_sph,e_kin_analytic")?;
        for i in 0..result.times.len() {
            writeln!(
                csv,
                "{:.9e},{:.9e},{:.9e}",
                result.times[i], result.e_kin[i], result.e_analytic[i]
            )?;
        }
        let pass = result.rate_rel_error.abs() <= TGV_RATE_TOL
            && result.max_pointwise_rel_error <= TGV_POINTWISE_TOL;
        all_pass &= pass;
        println!(
            "tgv2d: fitted rate {:.4} vs analytic {:.4} ({:+.1}%), worst pointwise {:.1}% .. {}",
            result.fitted_rate,
            result.analytic_rate,
            100.0 * result.rate_rel_error,
            100.0 * result.max_pointwise_rel_error,
            verdict(pass)
        );
    }

    if run_conservation {
        let result = run_conservation_suite(cfg.seed)?;
        std::fs::write(
            out_dir.join("conservation.json"),
            serde_json::to_string_pretty(&result)?,
        )?;
        let pass = result.momentum_rel_drift <= MOMENTUM_TOL
            && result.galilean_max_diff <= GALILEAN_TOL
            && result.lattice_density_max_rel_dev <= LATTICE_DENSITY_TOL;
        all_pass &= pass;
        println!(
            "conservation: momentum drift {:.2e}, galilean {:.2e}, lattice density {:.2e} .. {}",
            result.momentum_rel_drift,
            result.galilean_max_diff,
            result.lattice_density_max_rel_dev,
            verdict(pass)
        );
    }

    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        println!("validation FAILED");
        Ok(ExitCode::from(1))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
