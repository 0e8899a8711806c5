//! `sphkit evaluate`: autoregressive rollout evaluation of a predictor over
//! a dataset's trajectories, with per-trajectory and aggregate reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ndarray::{s, Array1, Array3};
use serde::{Deserialize, Serialize};
use sphkit::cases::CaseId;
use sphkit::dataio::{Dataset, Trajectory};
use sphkit::metrics::{aggregate_reports, RolloutReport, SinkhornParams};
use sphkit::rollout::{
    rollout, ConstantVelocityPredictor, FeatureConfig, FileExchangePredictor, GroundTruthPredictor,
    HistoryWindow, PredictionMode, Predictor, RolloutOptions,
};
use sphkit::state::ParticleType;
use sphkit::Domain;

use crate::config::{load_config, resolve_out_dir, write_effective_config};
use crate::CommonArgs;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub dataset: String,
    pub predictor: String,
    pub split: String,
    /// Rollout steps; 0 takes what the trajectory allows (capped at 20).
    pub steps: usize,
    /// Max trajectories to evaluate; 0 = all in the split.
    pub trajectories: usize,
    /// Velocity-history length (input window holds this many differences).
    pub history: usize,
    /// MSE_n aggregates to report.
    pub mse_ns: Vec<usize>,
    /// Sinkhorn stride (0 disables the per-step Sinkhorn distance).
    pub sinkhorn_every: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            predictor: "ground-truth".into(),
            split: "test".into(),
            steps: 0,
            trajectories: 0,
            history: 5,
            mse_ns: vec![1, 5, 20],
            sinkhorn_every: 1,
        }
    }
}

pub fn run(
    common: CommonArgs,
    dataset: Option<PathBuf>,
    predictor: Option<String>,
    split: Option<String>,
    steps: Option<usize>,
    trajectories: Option<usize>,
) -> Result<ExitCode> {
    let mut cfg: EvaluateConfig = load_config(
        &EvaluateConfig::default(),
        common.config.as_deref(),
        &common.sets,
    )?;
    if let Some(d) = dataset {
        cfg.dataset = d.display().to_string();
    }
    if let Some(p) = predictor {
        cfg.predictor = p;
    }
    if let Some(s) = split {
        cfg.split = s;
    }
    if let Some(n) = steps {
        cfg.steps = n;
    }
    if let Some(t) = trajectories {
        cfg.trajectories = t;
    }
    if cfg.dataset.is_empty() {
        bail!("no dataset: pass --dataset or set `dataset` in the config");
    }

    let out_dir = resolve_out_dir(common.out.as_deref(), "evaluate")?;
    std::fs::create_dir_all(&out_dir)?;
    write_effective_config(&out_dir, &cfg)?;

    let dataset = Dataset::open(Path::new(&cfg.dataset))?;
    let meta = &dataset.metadata;
    let domain = meta.domain()?;
    let trajs = dataset.read_split(&cfg.split)?;
    let mass = meta.rho0 * meta.dx.powi(meta.dim as i32);

    let case: Option<CaseId> = meta.case.parse().ok();
    let force = case.map(sphkit::cases::external_force_field);

    let limit = if cfg.trajectories == 0 {
        trajs.len()
    } else {
        cfg.trajectories.min(trajs.len())
    };

    let mut reports: Vec<RolloutReport> = Vec::new();
    for (idx, traj) in trajs.iter().take(limit).enumerate() {
        let report = evaluate_one(traj, &domain, meta.dx, mass, force, &cfg, &out_dir, idx)
            .with_context(|| format!("trajectory {idx}"))?;
        reports.push(report);
    }

    let aggregate = aggregate_reports(&reports);
    std::fs::write(
        out_dir.join("aggregate.json"),
        serde_json::to_string_pretty(&aggregate)?,
    )?;
    // headline table, one row per run
    let mut table = String::from("predictor");
    for n in &cfg.mse_ns {
        table += &format!(",mse_{n}");
    }
    table += ",sinkhorn,mse_e_kin\n";
    table += &cfg.predictor;
    for n in &cfg.mse_ns {
        match aggregate.mse_n.get(n) {
            Some(v) => table += &format!(",{v:.6e}"),
            None => table += ",",
        }
    }
    table += &format!(
        ",{:.6e},{:.6e}\n",
        aggregate.sinkhorn_mean, aggregate.mse_e_kin
    );
    std::fs::write(out_dir.join("aggregate.csv"), &table)?;

    println!(
        "evaluated {} trajectories of {} ({} split) with {}",
        reports.len(),
        meta.case,
        cfg.split,
        cfg.predictor
    );
    for n in &cfg.mse_ns {
        if let Some(v) = aggregate.mse_n.get(n) {
            println!("  mse_{n:<3} = {v:.6e}");
        }
    }
    println!("  sinkhorn = {:.6e}", aggregate.sinkhorn_mean);
    println!("  mse_e_kin = {:.6e}", aggregate.mse_e_kin);
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    traj: &Trajectory,
    domain: &Domain,
    dx: f64,
    mass: f64,
    force: Option<sphkit::sph::ForceField>,
    cfg: &EvaluateConfig,
    out_dir: &Path,
    idx: usize,
) -> Result<RolloutReport> {
    let t = traj.n_frames();
    let n = traj.n_particles();
    let window_frames = cfg.history + 1;
    let available = t.saturating_sub(window_frames);
    let steps = if cfg.steps == 0 {
        available.min(20)
    } else {
        if cfg.steps > available {
            bail!(
                "trajectory has {t} frames: {} window frames + {} steps requested",
                window_frames,
                cfg.steps
            );
        }
        cfg.steps
    };
    if steps == 0 {
        bail!("trajectory too short for a rollout ({t} frames, window {window_frames})");
    }

    let positions: Array3<f64> = traj.positions.mapv(|v| v as f64);
    let window = HistoryWindow::new(
        positions.slice(s![0..window_frames, .., ..]).to_owned(),
        *domain,
    )?;
    let reference = positions.slice(s![window_frames..window_frames + steps, .., ..]);

    let types: Vec<ParticleType> = traj
        .particle_types
        .iter()
        .map(|&code| ParticleType::from_code(code))
        .collect::<sphkit::Result<_>>()?;
    let mut feature_config = FeatureConfig::new(*domain, dx, types);
    if let Some(force) = force {
        feature_config = feature_config.with_force(force);
    }

    let mut opts = RolloutOptions::new(Array1::from_elem(n, mass), traj.frame_dt);
    opts.mse_ns = cfg.mse_ns.clone();
    opts.sinkhorn_every = cfg.sinkhorn_every;
    opts.sinkhorn = SinkhornParams::default();

    let mut predictor = build_predictor(&cfg.predictor, &reference.to_owned())?;
    let (_, report) = rollout(
        predictor.as_mut(),
        window,
        reference,
        &feature_config,
        &opts,
    )?;

    std::fs::write(
        out_dir.join(format!("rollout_{idx:05}.json")),
        report.to_json()?,
    )?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    std::fs::write(out_dir.join(format!("rollout_{idx:05}.csv")), csv)?;
    Ok(report)
}

fn build_predictor(spec: &str, reference: &Array3<f64>) -> Result<Box<dyn Predictor>> {
    if spec == "ground-truth" {
        return Ok(Box::new(GroundTruthPredictor::new(reference.clone())));
    }
    if spec == "zero-acceleration" {
        return Ok(Box::new(ConstantVelocityPredictor));
    }
    if let Some(rest) = spec.strip_prefix("file-exchange:") {
        let (dir, mode) = match rest.rsplit_once(':') {
            Some((dir, mode_str)) if !dir.is_empty() => {
                let mode = match mode_str {
                    "acceleration" => PredictionMode::Acceleration,
                    "velocity" => PredictionMode::Velocity,
                    "position" => PredictionMode::Position,
                    dirlike => {
                        // the suffix was part of the path, not a mode
                        return Ok(Box::new(FileExchangePredictor::new(
                            PathBuf::from(format!("{dir}:{dirlike}")),
                            PredictionMode::Acceleration,
                        )));
                    }
                };
                (dir.to_string(), mode)
            }
            _ => (rest.to_string(), PredictionMode::Acceleration),
        };
        return Ok(Box::new(FileExchangePredictor::new(
            PathBuf::from(dir),
            mode,
        )));
    }
    bail!(
        "unknown predictor {spec:?} (ground-truth | zero-acceleration | file-exchange:DIR[:MODE])"
    )
}
