//! Evaluation measures over predicted vs. reference trajectories: position
//! MSE, kinetic-energy error, and the Sinkhorn distance between particle
//! distributions.
//!
//! Conventions: MSE averages over steps, particles, and coordinates (divides
//! by the dimension); position errors use minimum-image displacements on
//! periodic axes; wall particles are excluded upstream by the rollout
//! harness (their positions are static by construction).

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Result, SphError};

/// Mean squared minimum-image position error of one frame, averaged over
/// particles and coordinates.
pub fn mse_frame(pred: ArrayView2<f64>, reference: ArrayView2<f64>, domain: &Domain) -> f64 {
    let n = pred.nrows();
    let dim = pred.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for k in 0..dim {
            let d = domain.displacement_component(pred[[i, k]] - reference[[i, k]], k);
            total += d * d;
        }
    }
    total / (n * dim) as f64
}

/// Per-step MSE over two `[T, N, dim]` stacks.
pub fn mse_per_step(
    pred: ArrayView3<f64>,
    reference: ArrayView3<f64>,
    domain: &Domain,
) -> Result<Vec<f64>> {
    if pred.shape() != reference.shape() {
        return Err(SphError::ShapeMismatch {
            name: "mse_per_step".into(),
            expected: format!("{:?}", reference.shape()),
            got: format!("{:?}", pred.shape()),
        });
    }
    Ok((0..pred.shape()[0])
        .map(|t| {
            mse_frame(
                pred.index_axis(ndarray::Axis(0), t),
                reference.index_axis(ndarray::Axis(0), t),
                domain,
            )
        })
        .collect())
}

/// `MSE_n`: the n-step average rollout loss — the mean of the per-step MSE
/// over steps `1..=n` (rows `0..n` of stacks that start at the first
/// predicted step).
pub fn mse_n(
    pred: ArrayView3<f64>,
    reference: ArrayView3<f64>,
    domain: &Domain,
    n: usize,
) -> Result<f64> {
    let per_step = mse_per_step(pred, reference, domain)?;
    if n == 0 || n > per_step.len() {
        return Err(SphError::LengthMismatch(format!(
            "mse_n: n = {n} not in 1..={}",
            per_step.len()
        )));
    }
    Ok(per_step[..n].iter().sum::<f64>() / n as f64)
}

/// Kinetic energy `0.5 sum_i m_i |v_i|^2`.
pub fn kinetic_energy(velocities: ArrayView2<f64>, masses: &Array1<f64>) -> f64 {
    velocities
        .outer_iter()
        .zip(masses.iter())
        .map(|(v, &m)| 0.5 * m * v.iter().map(|x| x * x).sum::<f64>())
        .sum()
}

/// Kinetic-energy series of a position trajectory `[T, N, dim]`: velocities
/// are minimum-image frame differences divided by `frame_dt`; entry `t`
/// covers the step from frame `t` to `t + 1` (length `T - 1`). Only rows
/// with `include[i] == true` contribute.
pub fn kinetic_energy_series(
    positions: ArrayView3<f64>,
    masses: &Array1<f64>,
    include: &[bool],
    domain: &Domain,
    frame_dt: f64,
) -> Vec<f64> {
    let t = positions.shape()[0];
    let n = positions.shape()[1];
    let dim = positions.shape()[2];
    let mut out = Vec::with_capacity(t.saturating_sub(1));
    for f in 0..t.saturating_sub(1) {
        let mut e = 0.0;
        for i in 0..n {
            if !include[i] {
                continue;
            }
            let mut v2 = 0.0;
            for k in 0..dim {
                let d = domain
                    .displacement_component(positions[[f + 1, i, k]] - positions[[f, i, k]], k)
                    / frame_dt;
                v2 += d * d;
            }
            e += 0.5 * masses[i] * v2;
        }
        out.push(e);
    }
    out
}

/// MSE between two scalar kinetic-energy time series.
pub fn mse_e_kin(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(SphError::LengthMismatch(format!(
            "kinetic-energy series lengths {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred.len() as f64)
}

/// Sinkhorn solver controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SinkhornParams {
    /// Entropic regularization; `None` selects `1e-3 x squared box diagonal`.
    pub epsilon: Option<f64>,
    pub max_iters: usize,
    /// L1 marginal violation declaring convergence.
    pub tol: f64,
    /// Subtract the self-transport terms (Sinkhorn divergence) so that
    /// `d(P, P) = 0`.
    pub debias: bool,
    /// Use minimum-image ground distances on periodic axes.
    pub periodic: bool,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_iters: 500,
            tol: 1e-6,
            debias: true,
            periodic: true,
        }
    }
}

/// Sinkhorn result; non-convergence is reported, not silent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SinkhornOutput {
    pub value: f64,
    pub converged: bool,
    pub marginal_residual: f64,
    pub iterations: usize,
    pub epsilon: f64,
}

fn squared_ground_cost(
    p: ArrayView2<f64>,
    q: ArrayView2<f64>,
    domain: &Domain,
    periodic: bool,
) -> Array2<f64> {
    let n = p.nrows();
    let m = q.nrows();
    let dim = p.ncols();
    let mut cost = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let mut d2 = 0.0;
            for k in 0..dim {
                let raw = p[[i, k]] - q[[j, k]];
                let d = if periodic {
                    domain.displacement_component(raw, k)
                } else {
                    raw
                };
                d2 += d * d;
            }
            cost[[i, j]] = d2;
        }
    }
    cost
}

/// Log-domain Sinkhorn for uniform weights; returns the entropic OT cost
/// (dual objective) plus convergence data.
fn sinkhorn_raw(cost: &Array2<f64>, epsilon: f64, max_iters: usize, tol: f64) -> SinkhornOutput {
    let n = cost.nrows();
    let m = cost.ncols();
    let log_a = -(n as f64).ln();
    let log_b = -(m as f64).ln();
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let inv_eps = 1.0 / epsilon;

    while iterations < max_iters {
        iterations += 1;
        for i in 0..n {
            let mut max = f64::NEG_INFINITY;
            for j in 0..m {
                let v = (g[j] - cost[[i, j]]) * inv_eps;
                if v > max {
                    max = v;
                }
            }
            let mut sum = 0.0;
            for j in 0..m {
                sum += ((g[j] - cost[[i, j]]) * inv_eps - max).exp();
            }
            f[i] = -epsilon * (log_b + max + sum.ln());
        }
        for j in 0..m {
            let mut max = f64::NEG_INFINITY;
            for i in 0..n {
                let v = (f[i] - cost[[i, j]]) * inv_eps;
                if v > max {
                    max = v;
                }
            }
            let mut sum = 0.0;
            for i in 0..n {
                sum += ((f[i] - cost[[i, j]]) * inv_eps - max).exp();
            }
            g[j] = -epsilon * (log_a + max + sum.ln());
        }
        if iterations % 10 == 0 || iterations == max_iters {
            residual = marginal_residual(cost, &f, &g, epsilon, log_a, log_b);
            if residual < tol {
                break;
            }
        }
    }
    if residual.is_infinite() {
        residual = marginal_residual(cost, &f, &g, epsilon, log_a, log_b);
    }

    let a = (log_a).exp();
    let b = (log_b).exp();
    let value = f.iter().sum::<f64>() * a + g.iter().sum::<f64>() * b;
    SinkhornOutput {
        value,
        converged: residual < tol,
        marginal_residual: residual,
        iterations,
        epsilon,
    }
}

/// Entropic self-transport `OT_eps(P, P)` via the damped symmetric
/// fixed-point iteration `f <- (f + T(f))/2`, which converges much faster
/// than alternating updates on symmetric problems.
fn sinkhorn_symmetric(
    cost: &Array2<f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> SinkhornOutput {
    let n = cost.nrows();
    let log_a = -(n as f64).ln();
    let inv_eps = 1.0 / epsilon;
    let mut f = vec![0.0f64; n];
    let mut t_of_f = vec![0.0f64; n];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    while iterations < max_iters {
        iterations += 1;
        for i in 0..n {
            let mut max = f64::NEG_INFINITY;
            for j in 0..n {
                let v = (f[j] - cost[[i, j]]) * inv_eps;
                if v > max {
                    max = v;
                }
            }
            let mut sum = 0.0;
            for j in 0..n {
                sum += ((f[j] - cost[[i, j]]) * inv_eps - max).exp();
            }
            t_of_f[i] = -epsilon * (log_a + max + sum.ln());
        }
        delta = 0.0f64;
        for i in 0..n {
            delta = delta.max((t_of_f[i] - f[i]).abs());
            f[i] = 0.5 * (f[i] + t_of_f[i]);
        }
        if delta < tol * epsilon {
            break;
        }
    }
    let residual = marginal_residual(cost, &f, &f, epsilon, log_a, log_a);
    SinkhornOutput {
        value: 2.0 * f.iter().sum::<f64>() * log_a.exp(),
        converged: delta < tol * epsilon,
        marginal_residual: residual,
        iterations,
        epsilon,
    }
}

/// L1 violation of the row marginals of the implied transport plan.
fn marginal_residual(
    cost: &Array2<f64>,
    f: &[f64],
    g: &[f64],
    epsilon: f64,
    log_a: f64,
    log_b: f64,
) -> f64 {
    let n = cost.nrows();
    let m = cost.ncols();
    let a = log_a.exp();
    let mut violation = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..m {
            row += (log_a + log_b + (f[i] + g[j] - cost[[i, j]]) / epsilon).exp();
        }
        violation += (row - a).abs();
    }
    violation
}

/// Entropic-regularized optimal transport between two particle clouds with
/// uniform weights; squared (minimum-image) Euclidean ground cost. Debiased
/// by default so identical clouds score zero.
pub fn sinkhorn_distance(
    p: ArrayView2<f64>,
    q: ArrayView2<f64>,
    domain: &Domain,
    params: &SinkhornParams,
) -> Result<SinkhornOutput> {
    if p.nrows() == 0 || q.nrows() == 0 {
        return Err(SphError::Config(
            "sinkhorn requires non-empty clouds".into(),
        ));
    }
    if p.ncols() != domain.dim() || q.ncols() != domain.dim() {
        return Err(SphError::DimensionMismatch {
            expected: domain.dim(),
            got: p.ncols().max(q.ncols()),
        });
    }
    let epsilon = params
        .epsilon
        .unwrap_or_else(|| 1e-3 * domain.diagonal_sq());
    // identical clouds: the divergence is zero by definition
    if params.debias && p.shape() == q.shape() && p.iter().zip(q.iter()).all(|(a, b)| a == b) {
        return Ok(SinkhornOutput {
            value: 0.0,
            converged: true,
            marginal_residual: 0.0,
            iterations: 0,
            epsilon,
        });
    }
    let cost_pq = squared_ground_cost(p, q, domain, params.periodic);
    let mut out = sinkhorn_raw(&cost_pq, epsilon, params.max_iters, params.tol);
    if params.debias {
        let cost_pp = squared_ground_cost(p, p, domain, params.periodic);
        let cost_qq = squared_ground_cost(q, q, domain, params.periodic);
        let pp = sinkhorn_symmetric(&cost_pp, epsilon, params.max_iters, params.tol);
        let qq = sinkhorn_symmetric(&cost_qq, epsilon, params.max_iters, params.tol);
        out.value -= 0.5 * pp.value + 0.5 * qq.value;
        out.converged &= pp.converged && qq.converged;
        out.marginal_residual = out
            .marginal_residual
            .max(pp.marginal_residual)
            .max(qq.marginal_residual);
    }
    Ok(out)
}

/// The evaluation record of one rollout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RolloutReport {
    pub steps: usize,
    pub mse_per_step: Vec<f64>,
    /// `MSE_n` aggregates keyed by n (e.g. 1, 5, 20).
    pub mse_n: BTreeMap<usize, f64>,
    /// Per-step Sinkhorn distance; `NaN` where not computed (serialized as
    /// null).
    pub sinkhorn_per_step: Vec<f64>,
    pub e_kin_pred: Vec<f64>,
    pub e_kin_ref: Vec<f64>,
    pub mse_e_kin: f64,
}

impl RolloutReport {
    pub fn empty() -> Self {
        Self {
            steps: 0,
            mse_per_step: Vec::new(),
            mse_n: BTreeMap::new(),
            sinkhorn_per_step: Vec::new(),
            e_kin_pred: Vec::new(),
            e_kin_ref: Vec::new(),
            mse_e_kin: 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per rollout step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,mse,sinkhorn,e_kin_pred,e_kin_ref")?;
        for s in 0..self.steps {
            let fmt_opt = |v: f64| {
                if v.is_nan() {
                    String::new()
                } else {
                    format!("{v:.9e}")
                }
            };
            writeln!(
                w,
                "{},{:.9e},{},{},{}",
                s + 1,
                self.mse_per_step[s],
                fmt_opt(*self.sinkhorn_per_step.get(s).unwrap_or(&f64::NAN)),
                fmt_opt(*self.e_kin_pred.get(s).unwrap_or(&f64::NAN)),
                fmt_opt(*self.e_kin_ref.get(s).unwrap_or(&f64::NAN)),
            )?;
        }
        Ok(())
    }
}

/// Mean of the headline columns over several rollout reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rollouts: usize,
    pub mse_n: BTreeMap<usize, f64>,
    pub sinkhorn_mean: f64,
    pub mse_e_kin: f64,
}

pub fn aggregate_reports(reports: &[RolloutReport]) -> AggregateReport {
    let mut mse_n: BTreeMap<usize, f64> = BTreeMap::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut sink_sum = 0.0;
    let mut sink_count = 0usize;
    let mut eki = 0.0;
    for r in reports {
        for (&n, &v) in &r.mse_n {
            *mse_n.entry(n).or_default() += v;
            *counts.entry(n).or_default() += 1;
        }
        for &s in &r.sinkhorn_per_step {
            if !s.is_nan() {
                sink_sum += s;
                sink_count += 1;
            }
        }
        eki += r.mse_e_kin;
    }
    for (n, v) in mse_n.iter_mut() {
        *v /= counts[n] as f64;
    }
    AggregateReport {
        rollouts: reports.len(),
        mse_n,
        sinkhorn_mean: if sink_count > 0 {
            sink_sum / sink_count as f64
        } else {
            f64::NAN
        },
        mse_e_kin: if reports.is_empty() {
            0.0
        } else {
            eki / reports.len() as f64
        },
    }
}
