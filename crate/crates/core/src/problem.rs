//! Problem and coupling-state representations.
//!
//! A coupling between `K` equal-size sample sets is stored as one index
//! permutation per marginal over immutable sample arrays: joint tuple `r`
//! consists of point `perms[i][r]` of every marginal `i`. Swapping two
//! entries of one permutation is the only mutation a solver ever performs,
//! so the marginals are preserved exactly.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::{self, CostModel};
use crate::error::{Error, Result};

/// One marginal's point cloud: `num_points` points in `dim` dimensions,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSamples {
    id: String,
    dim: usize,
    data: Vec<f64>,
}

impl MarginalSamples {
    pub fn new(id: impl Into<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "marginal `{id}` has dimension 0"
            )));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "marginal `{id}`: data length {} is not a positive multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { id, index });
        }
        Ok(Self { id, dim, data })
    }

    /// Builds samples from a list of equal-length rows.
    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let id = id.into();
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument(format!(
                "marginal `{id}`: rows have unequal lengths"
            )));
        }
        Self::new(id, dim, rows.concat())
    }

    /// Convenience for one-dimensional samples.
    pub fn from_1d(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(id, 1, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn point(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }
}

/// `K >= 2` marginals with a common number of points, plus a cost model.
#[derive(Debug, Clone)]
pub struct Problem {
    marginals: Vec<MarginalSamples>,
    cost: CostModel,
}

impl Problem {
    pub fn new(marginals: Vec<MarginalSamples>, cost: CostModel) -> Result<Self> {
        if marginals.len() < 2 {
            return Err(Error::TooFewMarginals {
                required: 2,
                found: marginals.len(),
            });
        }
        let first = &marginals[0];
        for m in &marginals[1..] {
            if m.num_points() != first.num_points() {
                return Err(Error::MismatchedCounts {
                    id: m.id().to_owned(),
                    expected: first.num_points(),
                    found: m.num_points(),
                });
            }
            if cost.is_pairwise() && m.dim() != first.dim() {
                return Err(Error::MismatchedDims {
                    id: m.id().to_owned(),
                    expected: first.dim(),
                    found: m.dim(),
                });
            }
        }
        Ok(Self { marginals, cost })
    }

    pub fn marginals(&self) -> &[MarginalSamples] {
        &self.marginals
    }

    pub fn marginal(&self, index: usize) -> &MarginalSamples {
        &self.marginals[index]
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn num_marginals(&self) -> usize {
        self.marginals.len()
    }

    pub fn num_points(&self) -> usize {
        self.marginals[0].num_points()
    }

    /// Common dimension of all marginals, if they share one.
    pub fn common_dim(&self) -> Option<usize> {
        let d = self.marginals[0].dim();
        self.marginals.iter().all(|m| m.dim() == d).then_some(d)
    }
}

/// Initial pairing of the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Tuple `r` pairs the `r`-th sample of every marginal.
    #[default]
    Identity,
    /// Marginals `2..K` are independently shuffled with the configured seed.
    RandomShuffle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative decrease of the mean cost over `window` sweeps at or below
    /// which a run counts as converged.
    pub tolerance: f64,
    pub window: usize,
    pub max_sweeps: usize,
    /// Sweeps between full recomputations of the running cost.
    pub recompute_interval: usize,
    pub seed: u64,
    pub init: InitMode,
    /// Worker threads for delta evaluation. `0` uses the ambient rayon pool.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            window: 50,
            max_sweeps: 10_000,
            recompute_interval: 100,
            seed: 0,
            init: InitMode::Identity,
            threads: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be finite and >= 0, got {}",
                self.tolerance
            )));
        }
        if self.window == 0 || self.max_sweeps == 0 || self.recompute_interval == 0 {
            return Err(Error::InvalidArgument(
                "window, max_sweeps and recompute_interval must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Current joint pairing plus running cost and RNG state.
#[derive(Debug, Clone)]
pub struct CouplingState {
    pub(crate) perms: Vec<Vec<usize>>,
    pub(crate) total_cost: f64,
    pub(crate) sweep_count: usize,
    pub(crate) rng: ChaCha8Rng,
}

impl CouplingState {
    /// Builds a state from explicit permutations, validating each one.
    pub fn from_perms(problem: &Problem, perms: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        if perms.len() != problem.num_marginals() {
            return Err(Error::InvalidArgument(format!(
                "expected {} permutations, got {}",
                problem.num_marginals(),
                perms.len()
            )));
        }
        if !perms.iter().all(|p| is_permutation(p, problem.num_points())) {
            return Err(Error::InvalidArgument(
                "every index array must be a permutation of 0..N_p".into(),
            ));
        }
        let total_cost = cost::total_cost(problem, &perms);
        Ok(Self {
            perms,
            total_cost,
            sweep_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// Running unnormalized cost `S = sum_r c(tuple_r)`.
    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn mean_cost(&self) -> f64 {
        self.total_cost / self.num_points() as f64
    }

    pub fn num_points(&self) -> usize {
        self.perms[0].len()
    }

    pub fn sweep_count(&self) -> usize {
        self.sweep_count
    }

    /// Sample indices forming joint tuple `r`, one per marginal.
    pub fn tuple_indices(&self, r: usize) -> Vec<usize> {
        self.perms.iter().map(|p| p[r]).collect()
    }

    /// Replaces the running cost with a fresh full recomputation and returns
    /// the previous running value.
    pub fn refresh_cost(&mut self, problem: &Problem) -> f64 {
        let old = self.total_cost;
        self.total_cost = cost::total_cost(problem, &self.perms);
        old
    }

    #[inline]
    pub(crate) fn apply_swap(&mut self, marginal: usize, a: usize, b: usize, delta: f64) {
        self.perms[marginal].swap(a, b);
        self.total_cost += delta;
    }
}

/// Creates the starting coupling for a solver run.
pub fn init_coupling(problem: &Problem, config: &SolverConfig) -> CouplingState {
    let np = problem.num_points();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let perms = (0..problem.num_marginals())
        .map(|i| {
            let mut p: Vec<usize> = (0..np).collect();
            if i > 0 && config.init == InitMode::RandomShuffle {
                p.shuffle(&mut rng);
            }
            p
        })
        .collect::<Vec<_>>();
    let total_cost = cost::total_cost(problem, &perms);
    CouplingState {
        perms,
        total_cost,
        sweep_count: 0,
        rng,
    }
}

pub(crate) fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return false;
        }
    }
    true
}
