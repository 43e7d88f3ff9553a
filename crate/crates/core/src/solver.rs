//! Collision-based and iterative-swapping solvers.
//!
//! Both solvers share one move: exchange two entries of one marginal's
//! permutation, accepted only when the total cost strictly decreases. The
//! collision solver proposes `floor(N_p/2)` disjoint random pairs per
//! marginal and sweep; the iterative swapping algorithm (ISA) proposes every
//! pair.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{self, delta_unchecked};
use crate::error::{Error, Result};
use crate::problem::{init_coupling, CouplingState, Problem, SolverConfig};

/// Below this many pairs per marginal, deltas are evaluated serially.
const PARALLEL_MIN_PAIRS: usize = 4096;

/// Relative drift allowed between the running cost and a full recompute.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Collision,
    Isa,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Collision => "collision",
            Self::Isa => "isa",
        }
    }
}

/// Disjoint random collision partners: position `first[k]` is paired with
/// `second[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingPlan {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl PairingPlan {
    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.first.iter().copied().zip(self.second.iter().copied())
    }
}

/// Shuffles `0..np` and splits the first `2 * floor(np/2)` entries into two
/// halves. For odd `np` the last shuffled index sits out.
pub fn make_pairing<R: Rng + ?Sized>(np: usize, rng: &mut R) -> Result<PairingPlan> {
    if np < 2 {
        return Err(Error::TooFewPoints(np));
    }
    let mut order = Vec::with_capacity(np);
    shuffled_order(np, rng, &mut order);
    let half = np / 2;
    Ok(PairingPlan {
        first: order[..half].to_vec(),
        second: order[half..2 * half].to_vec(),
    })
}

fn shuffled_order<R: Rng + ?Sized>(np: usize, rng: &mut R, order: &mut Vec<usize>) {
    order.clear();
    order.extend(0..np);
    order.shuffle(rng);
}

/// Outcome of one sweep over all marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Mean cost after the sweep, from the running sum.
    pub cost_after: f64,
    pub wall_ms: f64,
}

/// One row of a convergence trace. Row 0 is the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sweep: usize,
    pub mean_cost: f64,
    pub accepted: u64,
    pub cumulative_candidates: u64,
    /// Milliseconds since the start of the run.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub method: Method,
    pub seed: u64,
    pub initial_mean_cost: f64,
    pub final_mean_cost: f64,
    pub sweeps_run: usize,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn mean_costs(&self) -> Vec<f64> {
        self.trace.iter().map(|e| e.mean_cost).collect()
    }

    pub fn total_accepted(&self) -> u64 {
        self.trace.iter().map(|e| e.accepted).sum()
    }

    /// Average wall time of one sweep, excluding initialization.
    pub fn ms_per_sweep(&self) -> Option<f64> {
        let first = self.trace.first()?;
        let last = self.trace.last()?;
        (self.sweeps_run > 0).then(|| (last.wall_ms - first.wall_ms) / self.sweeps_run as f64)
    }
}

#[derive(Default)]
struct Scratch {
    order: Vec<usize>,
    deltas: Vec<f64>,
}

/// One collision sweep using the state's RNG. Marginals are visited in
/// order; each gets a fresh pairing plan.
pub fn collision_sweep(problem: &Problem, state: &mut CouplingState) -> SweepStats {
    let parallel = rayon::current_num_threads() > 1;
    collision_sweep_with(problem, state, &mut Scratch::default(), parallel)
}

fn collision_sweep_with(
    problem: &Problem,
    state: &mut CouplingState,
    scratch: &mut Scratch,
    parallel: bool,
) -> SweepStats {
    let start = Instant::now();
    let np = state.num_points();
    let half = np / 2;
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    if half > 0 {
        for k in 0..problem.num_marginals() {
            shuffled_order(np, &mut state.rng, &mut scratch.order);
            let (first, rest) = scratch.order.split_at(half);
            let second = &rest[..half];
            proposed += half as u64;
            if parallel && half >= PARALLEL_MIN_PAIRS {
                // Pairs in one plan touch disjoint tuples, so every delta can
                // be taken against the pre-sweep pairing.
                let perms = &state.perms;
                scratch.deltas.clear();
                scratch.deltas.resize(half, 0.0);
                scratch
                    .deltas
                    .par_iter_mut()
                    .zip(first.par_iter().zip(second.par_iter()))
                    .for_each(|(d, (&a, &b))| *d = delta_unchecked(problem, perms, k, a, b));
                for ((&a, &b), &d) in first.iter().zip(second).zip(&scratch.deltas) {
                    if d < 0.0 {
                        state.apply_swap(k, a, b, d);
                        accepted += 1;
                    }
                }
            } else {
                for (&a, &b) in first.iter().zip(second) {
                    let d = delta_unchecked(problem, &state.perms, k, a, b);
                    if d < 0.0 {
                        state.apply_swap(k, a, b, d);
                        accepted += 1;
                    }
                }
            }
        }
    }
    state.sweep_count += 1;
    SweepStats {
        proposed,
        accepted,
        cost_after: state.mean_cost(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// One ISA sweep: every pair `j < k` of every marginal, applied in place so
/// later pairs see earlier accepted swaps.
pub fn isa_sweep(problem: &Problem, state: &mut CouplingState) -> SweepStats {
    let start = Instant::now();
    let np = state.num_points();
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    for m in 0..problem.num_marginals() {
        for j in 0..np {
            for k in j + 1..np {
                proposed += 1;
                let d = delta_unchecked(problem, &state.perms, m, j, k);
                if d < 0.0 {
                    state.apply_swap(m, j, k, d);
                    accepted += 1;
                }
            }
        }
    }
    state.sweep_count += 1;
    SweepStats {
        proposed,
        accepted,
        cost_after: state.mean_cost(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs the collision solver from the configured initial pairing.
pub fn collision_solve(
    problem: &Problem,
    config: &SolverConfig,
) -> Result<(CouplingState, RunReport)> {
    solve(problem, config, Method::Collision)
}

/// Runs ISA from the configured initial pairing.
pub fn isa_solve(problem: &Problem, config: &SolverConfig) -> Result<(CouplingState, RunReport)> {
    solve(problem, config, Method::Isa)
}

pub fn solve(
    problem: &Problem,
    config: &SolverConfig,
    method: Method,
) -> Result<(CouplingState, RunReport)> {
    config.validate()?;
    let mut state = init_coupling(problem, config);
    let report = run_from(problem, &mut state, config, method)?;
    Ok((state, report))
}

/// Continues a run from an existing state until convergence or
/// `config.max_sweeps` further sweeps.
pub fn run_from(
    problem: &Problem,
    state: &mut CouplingState,
    config: &SolverConfig,
    method: Method,
) -> Result<RunReport> {
    config.validate()?;
    if config.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| drive(problem, state, config, method, true))
    } else {
        let parallel = config.threads == 0 && rayon::current_num_threads() > 1;
        drive(problem, state, config, method, parallel)
    }
}

fn drive(
    problem: &Problem,
    state: &mut CouplingState,
    config: &SolverConfig,
    method: Method,
    parallel: bool,
) -> Result<RunReport> {
    let start = Instant::now();
    let np = state.num_points() as f64;
    let drift_scale = state.total_cost.abs();
    let initial_mean_cost = state.mean_cost();
    let mut trace = vec![TraceEntry {
        sweep: 0,
        mean_cost: initial_mean_cost,
        accepted: 0,
        cumulative_candidates: 0,
        wall_ms: 0.0,
    }];
    let mut scratch = Scratch::default();
    let mut candidates = 0u64;
    let mut converged = state.num_points() < 2;

    let mut t = 0;
    while !converged && t < config.max_sweeps {
        t += 1;
        let stats = match method {
            Method::Collision => collision_sweep_with(problem, state, &mut scratch, parallel),
            Method::Isa => isa_sweep(problem, state),
        };
        if t % config.recompute_interval == 0 {
            check_drift(problem, state, drift_scale)?;
        }
        candidates += stats.proposed;
        trace.push(TraceEntry {
            sweep: t,
            mean_cost: state.total_cost / np,
            accepted: stats.accepted,
            cumulative_candidates: candidates,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        // An ISA sweep without accepted swaps has tested every pair against
        // an unchanged state, so the pairing is a fixed point.
        if method == Method::Isa && stats.accepted == 0 {
            converged = true;
        } else if t >= config.window {
            let prev = trace[t - config.window].mean_cost;
            let cur = trace[t].mean_cost;
            converged = (prev - cur) / prev.abs().max(1e-300) <= config.tolerance;
        }
    }
    check_drift(problem, state, drift_scale)?;

    Ok(RunReport {
        method,
        seed: config.seed,
        initial_mean_cost,
        final_mean_cost: state.mean_cost(),
        sweeps_run: t,
        trace,
        converged,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Recomputes the total cost, fails if the running sum drifted, and resets
/// the running sum to the fresh value.
fn check_drift(problem: &Problem, state: &mut CouplingState, scale: f64) -> Result<()> {
    let fresh = cost::total_cost(problem, &state.perms);
    let running = state.total_cost;
    let tol = DRIFT_TOLERANCE * fresh.abs().max(scale).max(f64::MIN_POSITIVE);
    if !((running - fresh).abs() <= tol) {
        return Err(Error::CostDrift { running, fresh });
    }
    state.total_cost = fresh;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{mean_cost, CostModel};
    use crate::problem::{is_permutation, MarginalSamples};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_d(xs: Vec<f64>, ys: Vec<f64>) -> Problem {
        Problem::new(
            vec![
                MarginalSamples::from_1d("x", xs).unwrap(),
                MarginalSamples::from_1d("y", ys).unwrap(),
            ],
            CostModel::squared_euclidean(),
        )
        .unwrap()
    }

    fn lcg_values(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect()
    }

    #[test]
    fn pairing_two_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plan = make_pairing(2, &mut rng).unwrap();
        let mut both = vec![plan.first[0], plan.second[0]];
        both.sort();
        assert_eq!(both, vec![0, 1]);
    }

    #[test]
    fn pairing_odd_leaves_one_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plan = make_pairing(5, &mut rng).unwrap();
        assert_eq!(plan.len(), 2);
        let mut all: Vec<_> = plan.first.iter().chain(&plan.second).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|&i| i < 5));
    }

    #[test]
    fn pairing_deterministic_and_guarded() {
        let a = make_pairing(100, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = make_pairing(100, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let mut even: Vec<_> = a.first.iter().chain(&a.second).copied().collect();
        even.sort();
        assert!(even.into_iter().eq(0..100));
        assert!(matches!(
            make_pairing(1, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::TooFewPoints(1))
        ));
    }

    #[test]
    fn optimal_pairing_accepts_nothing() {
        let xs = vec![0.0, 1.0, 2.0, 5.0];
        let p = one_d(xs.clone(), xs);
        let mut s = init_coupling(&p, &SolverConfig::default());
        let stats = collision_sweep(&p, &mut s);
        assert_eq!(stats.accepted, 0);
        assert_eq!(stats.proposed, 4);
        assert_eq!(s.total_cost(), 0.0);
    }

    #[test]
    fn two_point_sweep_reaches_zero() {
        let p = one_d(vec![0.0, 1.0], vec![1.0, 0.0]);
        let mut s = init_coupling(&p, &SolverConfig::default());
        let stats = collision_sweep(&p, &mut s);
        // Marginal 0 swaps first; marginal 1 then sees an optimal pairing.
        assert_eq!(stats.accepted, 1);
        assert_eq!(stats.cost_after, 0.0);
        assert_eq!(mean_cost(&p, &s), 0.0);
    }

    #[test]
    fn ties_are_rejected() {
        let p = one_d(vec![1.0, 1.0], vec![3.0, 3.0]);
        let mut s = init_coupling(&p, &SolverConfig::default());
        let before = s.perms().to_vec();
        let stats = collision_sweep(&p, &mut s);
        assert_eq!(stats.accepted, 0);
        assert_eq!(s.perms(), &before[..]);
    }

    #[test]
    fn single_point_converges_immediately() {
        let p = one_d(vec![1.0], vec![3.0]);
        for method in [Method::Collision, Method::Isa] {
            let (s, r) = solve(&p, &SolverConfig::default(), method).unwrap();
            assert!(r.converged);
            assert_eq!(r.sweeps_run, 0);
            assert_eq!(r.total_accepted(), 0);
            assert_eq!(s.total_cost(), 4.0);
        }
    }

    #[test]
    fn isa_sweep_proposal_count() {
        let p = Problem::new(
            (0..3)
                .map(|i| MarginalSamples::from_1d(format!("m{i}"), lcg_values(7, i)).unwrap())
                .collect(),
            CostModel::squared_euclidean(),
        )
        .unwrap();
        let mut s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(isa_sweep(&p, &mut s).proposed, 3 * 7 * 6 / 2);
        let mut s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(collision_sweep(&p, &mut s).proposed, 3 * 3);
    }

    #[test]
    fn isa_fixed_point_is_sorted_in_1d() {
        let xs = lcg_values(40, 1);
        let ys = lcg_values(40, 2);
        let p = one_d(xs.clone(), ys.clone());
        let cfg = SolverConfig {
            tolerance: 0.0,
            window: 1000,
            ..Default::default()
        };
        let (s, r) = isa_solve(&p, &cfg).unwrap();
        assert!(r.converged);
        let mut pairs: Vec<(f64, f64)> = (0..40)
            .map(|i| (xs[s.perms()[0][i]], ys[s.perms()[1][i]]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn isa_on_optimal_state_accepts_nothing() {
        let xs = vec![-1.0, 0.5, 2.0];
        let p = one_d(xs.clone(), xs.iter().map(|x| x * 2.0).collect());
        let mut s = init_coupling(&p, &SolverConfig::default());
        assert_eq!(isa_sweep(&p, &mut s).accepted, 0);
    }

    #[test]
    fn isa_stationary_implies_collision_stationary() {
        let p = Problem::new(
            (0..3)
                .map(|i| MarginalSamples::new(format!("m{i}"), 2, lcg_values(24, 10 + i)).unwrap())
                .collect(),
            CostModel::squared_euclidean(),
        )
        .unwrap();
        let cfg = SolverConfig {
            tolerance: 0.0,
            window: 10_000,
            ..Default::default()
        };
        let (mut s, r) = isa_solve(&p, &cfg).unwrap();
        assert!(r.converged);
        for _ in 0..50 {
            assert_eq!(collision_sweep(&p, &mut s).accepted, 0);
        }
    }

    #[test]
    fn trace_is_monotone_and_perms_valid() {
        let p = one_d(lcg_values(301, 5), lcg_values(301, 6));
        let cfg = SolverConfig {
            max_sweeps: 300,
            recompute_interval: 7,
            ..Default::default()
        };
        let (s, r) = collision_solve(&p, &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].mean_cost <= w[0].mean_cost + 1e-12));
        assert!(s.perms().iter().all(|pm| is_permutation(pm, 301)));
        assert!((r.final_mean_cost - mean_cost(&p, &s)).abs() < 1e-12);
        assert_eq!(r.trace.len(), r.sweeps_run + 1);
        assert_eq!(r.trace.last().unwrap().cumulative_candidates, r.sweeps_run as u64 * 300);
    }

    #[test]
    fn positive_tolerance_halts_before_cap() {
        let p = one_d(lcg_values(64, 7), lcg_values(64, 8));
        let cfg = SolverConfig {
            tolerance: 1e-3,
            window: 10,
            max_sweeps: 100_000,
            ..Default::default()
        };
        let (_, r) = collision_solve(&p, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.sweeps_run < 100_000);
    }

    #[test]
    fn parallel_path_matches_serial() {
        let n = 2 * PARALLEL_MIN_PAIRS + 3;
        let p = Problem::new(
            vec![
                MarginalSamples::new("a", 2, lcg_values(2 * n, 1)).unwrap(),
                MarginalSamples::new("b", 2, lcg_values(2 * n, 2)).unwrap(),
            ],
            CostModel::squared_euclidean(),
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let mut serial = init_coupling(&p, &cfg);
        let mut par = serial.clone();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        for _ in 0..5 {
            let a = collision_sweep_with(&p, &mut serial, &mut Scratch::default(), false);
            let b = pool.install(|| {
                collision_sweep_with(&p, &mut par, &mut Scratch::default(), true)
            });
            assert_eq!(a.accepted, b.accepted);
        }
        assert_eq!(serial.perms(), par.perms());
        assert_eq!(serial.total_cost().to_bits(), par.total_cost().to_bits());
    }
}
