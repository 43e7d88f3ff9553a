//! Runtime checks and trace post-processing.

use std::time::Instant;

use serde::Serialize;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::ingest::{sample_synthetic, Family, SyntheticSpec};
use crate::problem::{init_coupling, is_permutation, CouplingState, Problem, SolverConfig};
use crate::solver::{collision_sweep, isa_sweep, Method};

/// True iff every permutation is a bijection of `0..N_p`. Sample arrays are
/// never written, so this is exact marginal preservation.
pub fn check_marginal_preservation(problem: &Problem, state: &CouplingState) -> bool {
    state.perms().len() == problem.num_marginals()
        && state
            .perms()
            .iter()
            .all(|p| is_permutation(p, problem.num_points()))
}

/// Non-increasing up to `1e-12 * max(1, |prev|)` recompute jitter.
pub fn verify_monotone(trace: &[f64]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha_hat: f64,
    pub r_squared: f64,
    pub points: usize,
    pub stationary: f64,
}

/// Least-squares fit of `log(trace[t] - stationary)` against `t`.
///
/// Uses the points before the error first falls below `1e-3` of its initial
/// value. `alpha_hat` is the negated slope.
pub fn fit_exponential_decay(trace: &[f64], stationary: f64) -> Result<DecayFit> {
    let err0 = trace.first().map_or(0.0, |m| m - stationary);
    let cutoff = 1e-3 * err0;
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .map(|m| m - stationary)
        .take_while(|&e| e > 0.0 && e >= cutoff)
        .enumerate()
        .map(|(t, e)| (t as f64, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateTrace(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        alpha_hat: -slope,
        r_squared,
        points: pts.len(),
        stationary,
    })
}

/// Decay fit over the first half of a trace, taking the final trace value as
/// the stationary cost.
pub fn relaxation_fit(trace: &[f64]) -> Result<DecayFit> {
    let stationary = *trace.last().ok_or(Error::DegenerateTrace(0))?;
    fit_exponential_decay(&trace[..trace.len().div_ceil(2)], stationary)
}

/// Synthetic problem used for timing measurements.
#[derive(Debug, Clone)]
pub struct ScalingScenario {
    pub families: Vec<Family>,
    /// Dimension for families without a fixed one.
    pub dim: usize,
    pub seed: u64,
    pub method: Method,
    pub cost: CostModel,
    pub repeats: usize,
}

impl Default for ScalingScenario {
    fn default() -> Self {
        Self {
            families: vec![Family::SwissRoll, Family::Normal],
            dim: 2,
            seed: 0,
            method: Method::Collision,
            cost: CostModel::squared_euclidean(),
            repeats: 5,
        }
    }
}

impl ScalingScenario {
    pub fn build(&self, num_points: usize) -> Result<Problem> {
        let marginals = self
            .families
            .iter()
            .enumerate()
            .map(|(i, &family)| {
                sample_synthetic(&SyntheticSpec {
                    family,
                    num_points,
                    dim: family.fixed_dim().unwrap_or(self.dim),
                    seed: self.seed.wrapping_add(i as u64),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Problem::new(marginals, self.cost.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub num_points: usize,
    pub ms_per_sweep: f64,
}

/// Median per-sweep wall time for each size. Every repeat starts from the
/// same initial pairing and times `sweeps` consecutive sweeps. Repeats are
/// interleaved across sizes so background load affects all sizes alike.
pub fn measure_sweep_scaling(
    scenario: &ScalingScenario,
    sizes: &[usize],
    sweeps: usize,
) -> Result<Vec<ScalingPoint>> {
    if !sizes.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument("sizes must be ascending".into()));
    }
    if sweeps == 0 {
        return Err(Error::InvalidArgument("sweeps must be >= 1".into()));
    }
    let config = SolverConfig {
        seed: scenario.seed,
        ..Default::default()
    };
    let setups = sizes
        .iter()
        .map(|&np| {
            let problem = scenario.build(np)?;
            let initial = init_coupling(&problem, &config);
            Ok((problem, initial))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut times = vec![Vec::new(); sizes.len()];
    for _ in 0..scenario.repeats.max(1) {
        for ((problem, initial), out) in setups.iter().zip(&mut times) {
            let mut state = initial.clone();
            let start = Instant::now();
            for _ in 0..sweeps {
                match scenario.method {
                    Method::Collision => collision_sweep(problem, &mut state),
                    Method::Isa => isa_sweep(problem, &mut state),
                };
            }
            out.push(start.elapsed().as_secs_f64() * 1e3 / sweeps as f64);
        }
    }
    Ok(sizes
        .iter()
        .zip(&mut times)
        .map(|(&np, t)| ScalingPoint {
            num_points: np,
            ms_per_sweep: median(t),
        })
        .collect())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}
