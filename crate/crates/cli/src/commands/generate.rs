//! `sphkit generate`: run the solver and write a dataset directory.

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sphkit::cases::{self, CaseId, GenerateOptions, SplitPlan, Warmup};
use sphkit::dataio::{self, DatasetMetadata, SplitInput};

use crate::config::{load_config, resolve_out_dir, write_effective_config};
use crate::CommonArgs;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub case: String,
    /// Recorded frames per trajectory (episodic) or total (stationary);
    /// 0 selects the catalog default.
    pub frames: usize,
    /// Trajectory count for episodic cases; 0 selects a minimal 2/1/1 set of
    /// four (the full catalog counts take hours to generate).
    pub trajectories: usize,
    pub seed: u64,
    pub warmup: String,
    pub diagnostics: bool,
    /// Optional particle-spacing override (desk-scale runs).
    pub dx: Option<f64>,
    /// Optional solver-step override.
    pub dt_solver: Option<f64>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            case: String::new(),
            frames: 0,
            trajectories: 0,
            seed: 0,
            warmup: "auto".into(),
            diagnostics: false,
            dx: None,
            dt_solver: None,
        }
    }
}

pub fn run(
    common: CommonArgs,
    case: Option<String>,
    frames: Option<usize>,
    trajectories: Option<usize>,
    seed: Option<u64>,
    diagnostics: bool,
) -> Result<ExitCode> {
    let mut cfg: GenerateConfig = load_config(
        &GenerateConfig::default(),
        common.config.as_deref(),
        &common.sets,
    )?;
    if let Some(case) = case {
        cfg.case = case;
    }
    if let Some(frames) = frames {
        cfg.frames = frames;
    }
    if let Some(t) = trajectories {
        cfg.trajectories = t;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.diagnostics |= diagnostics;
    if cfg.case.is_empty() {
        bail!("no case id: pass --case or set `case` in the config");
    }

    let case_id: CaseId = cfg.case.parse::<CaseId>()?;
    let mut spec = cases::case_spec(case_id);
    if let Some(dx) = cfg.dx {
        spec.dx = dx;
    }
    if let Some(dt) = cfg.dt_solver {
        spec.dt_solver = dt;
    }
    let out_dir = resolve_out_dir(common.out.as_deref(), &format!("datasets/{case_id}"))?;
    std::fs::create_dir_all(&out_dir)?;
    write_effective_config(&out_dir, &cfg)?;

    let warmup = match cfg.warmup.as_str() {
        "none" => Warmup::None,
        "auto" => Warmup::Auto { max_frames: 1000 },
        other => match other.strip_prefix("fixed:") {
            Some(n) => Warmup::Fixed {
                frames: n.parse().context("warmup frame count")?,
            },
            None => bail!("unknown warmup mode {other:?} (none | auto | fixed:N)"),
        },
    };

    let (train, valid, test, n_particles) = match spec.splits {
        SplitPlan::ByTrajectory {
            trajectory_length, ..
        } => {
            let frames = if cfg.frames == 0 {
                trajectory_length
            } else {
                cfg.frames
            };
            let count = if cfg.trajectories == 0 {
                4
            } else {
                cfg.trajectories
            };
            let mut trajectories = Vec::with_capacity(count);
            let mut n_particles = 0;
            for idx in 0..count {
                let mut opts = GenerateOptions::new(frames, cfg.seed + idx as u64);
                opts.warmup = Warmup::None;
                if cfg.diagnostics {
                    opts.diagnostics_path = Some(out_dir.join(format!("diagnostics_{idx:05}.csv")));
                }
                let setup = cases::init_from_spec(spec.clone(), opts.seed)?;
                let result = cases::generate_from_setup(setup, &opts)?;
                n_particles = result.trajectory.n_particles();
                eprintln!(
                    "generated trajectory {idx} ({} frames, {} particles)",
                    result.trajectory.n_frames(),
                    n_particles
                );
                trajectories.push(result.trajectory);
            }
            let (train, valid, test) = dataio::make_splits(SplitInput::Trajectories(trajectories))?;
            (train, valid, test, n_particles)
        }
        SplitPlan::ByFrames { train, valid, test } => {
            let total = if cfg.frames == 0 {
                train + valid + test
            } else {
                cfg.frames
            };
            let mut opts = GenerateOptions::new(total, cfg.seed);
            opts.warmup = warmup;
            if cfg.diagnostics {
                opts.diagnostics_path = Some(out_dir.join("diagnostics_00000.csv"));
            }
            let setup = cases::init_from_spec(spec.clone(), opts.seed)?;
            let result = cases::generate_from_setup(setup, &opts)?;
            let n_particles = result.trajectory.n_particles();
            eprintln!(
                "generated long trajectory ({} frames, {} particles)",
                result.trajectory.n_frames(),
                n_particles
            );
            let (train, valid, test) =
                dataio::make_splits(SplitInput::SingleLong(result.trajectory))?;
            (train, valid, test, n_particles)
        }
    };

    let metadata = DatasetMetadata::from_case(&spec, n_particles, cfg.seed);
    dataio::write_dataset(&out_dir, &metadata, &train, &valid, &test)?;
    println!(
        "wrote {} (train {} / valid {} / test {})",
        out_dir.display(),
        describe(&train),
        describe(&valid),
        describe(&test),
    );
    Ok(ExitCode::SUCCESS)
}

fn describe(split: &[dataio::Trajectory]) -> String {
    if split.len() == 1 {
        format!("1 x {} frames", split[0].n_frames())
    } else {
        format!("{} trajectories", split.len())
    }
}
