//! `sphkit inspect`: dataset summary and catalog cross-checks.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use sphkit::cases::{self, CaseId, SplitPlan};
use sphkit::dataio::{Dataset, SPLIT_NAMES};

pub fn run(dataset: Option<PathBuf>, catalog: bool) -> Result<ExitCode> {
    if catalog {
        println!("{}", serde_json::to_string_pretty(&cases::catalog_json())?);
        return Ok(ExitCode::SUCCESS);
    }
    let Some(dir) = dataset else {
        anyhow::bail!("pass --dataset DIR (or --catalog)");
    };
    let dataset = Dataset::open(&dir)?;
    let meta = &dataset.metadata;
    println!("dataset: {}", dir.display());
    println!("  case: {}", meta.case);
    println!("  dim: {}", meta.dim);
    println!("  box: {:?} periodic {:?}", meta.box_extents, meta.periodic);
    println!(
        "  dx: {}  frame_dt: {}  dt_solver: {}",
        meta.dx, meta.frame_dt, meta.dt_solver
    );
    println!(
        "  eos: c0 = {}, rho0 = {}, p_bg = {}; viscosity = {} (Re {})",
        meta.c0, meta.rho0, meta.p_bg, meta.viscosity, meta.reynolds
    );
    println!("  particles: {}", meta.num_particles);

    let mut split_counts = Vec::new();
    for split in SPLIT_NAMES {
        let trajs = dataset.read_split(split)?;
        let frames: Vec<usize> = trajs.iter().map(|t| t.n_frames()).collect();
        let n: Vec<usize> = trajs.iter().map(|t| t.n_particles()).collect();
        println!(
            "  {split}: {} trajectories, frames {:?}, particles {:?}",
            trajs.len(),
            summarize(&frames),
            summarize(&n),
        );
        split_counts.push((trajs.len(), frames, n));
    }

    // cross-check against the catalog when the case id is known
    if let Ok(case_id) = meta.case.parse::<CaseId>() {
        let spec = cases::case_spec(case_id);
        let expected_n = cases::expected_particle_count(case_id);
        let mut ok = true;
        ok &= check("frame_dt", (meta.frame_dt - spec.frame_dt()).abs() < 1e-12);
        ok &= check(
            "box extents",
            meta.box_extents
                .iter()
                .zip(spec.domain.extents())
                .all(|(a, b)| (a - b).abs() < 1e-12),
        );
        ok &= check("particle count", meta.num_particles == expected_n);
        for (count, _frames, ns) in &split_counts {
            ok &= check(
                "per-trajectory particle count",
                ns.iter().all(|&n| n == expected_n),
            );
            match spec.splits {
                SplitPlan::ByTrajectory { .. } => {
                    ok &= check("split has trajectories", *count >= 1);
                }
                SplitPlan::ByFrames { .. } => {
                    ok &= check("single-trajectory split", *count == 1);
                }
            }
        }
        if ok {
            println!("  catalog cross-check: OK");
        } else {
            println!("  catalog cross-check: MISMATCH (see above)");
        }
    } else {
        println!("  catalog cross-check: unknown case id, skipped");
    }
    Ok(ExitCode::SUCCESS)
}

fn check(label: &str, ok: bool) -> bool {
    if !ok {
        println!("  mismatch: {label}");
    }
    ok
}

fn summarize(values: &[usize]) -> String {
    match values {
        [] => "-".into(),
        [only] => format!("{only}"),
        _ => {
            let min = values.iter().min().unwrap();
            let max = values.iter().max().unwrap();
            if min == max {
                format!("{min} each")
            } else {
                format!("{min}..{max}")
            }
        }
    }
}
