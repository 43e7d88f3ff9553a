//! Multi-marginal optimal transport between equal-size sample sets.
//!
//! The coupling of `K` marginals is a set of index permutations. Two
//! solvers improve it by exchanging pairs of samples within one marginal
//! whenever the exchange strictly lowers the total cost:
//!
//! - [`solver::collision_solve`] draws `floor(N_p/2)` disjoint random pairs
//!   per marginal and sweep, costing `O(n K^2 N_p)` per sweep for pairwise
//!   `L^p` costs;
//! - [`solver::isa_solve`] tries every pair, `O(n K^2 N_p^2)` per sweep.
//!
//! [`oracle`] holds exact references (Hungarian assignment, brute-force
//! enumeration, sorted 1-D pairing) and an entropic Sinkhorn baseline.
//!
//! ```
//! use mmot::{CostModel, MarginalSamples, Problem, SolverConfig};
//!
//! let x = MarginalSamples::from_1d("x", vec![0.0, 1.0, 2.0, 3.0]).unwrap();
//! let y = MarginalSamples::from_1d("y", vec![3.5, 1.5, 0.5, 2.5]).unwrap();
//! let problem = Problem::new(vec![x, y], CostModel::squared_euclidean()).unwrap();
//! let (_, report) = mmot::isa_solve(&problem, &SolverConfig::default()).unwrap();
//! assert!((report.final_mean_cost - 0.25).abs() < 1e-12);
//! ```

pub mod alloc_probe;
pub mod cli;
pub mod cost;
pub mod diagnostics;
mod error;
pub mod ingest;
pub mod oracle;
pub mod pairwise;
pub mod problem;
pub mod solver;

pub use cost::{mean_cost, swap_delta, tuple_cost, wasserstein_estimate, CostModel};
pub use error::{Error, Result};
pub use problem::{init_coupling, CouplingState, InitMode, MarginalSamples, Problem, SolverConfig};
pub use solver::{collision_solve, isa_solve, Method, RunReport};
