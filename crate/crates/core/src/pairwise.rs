//! Distance matrices between many sample sets.
//!
//! In [`PairwiseMode::Mmot`] one joint `K`-marginal coupling is solved and
//! every pair distance is read off that single pairing. In
//! [`PairwiseMode::Pairwise2`] each pair is solved as its own two-marginal
//! problem.

use serde::{Deserialize, Serialize};

use crate::cost::{pair_estimate, CostModel};
use crate::error::{Error, Result};
use crate::problem::{MarginalSamples, Problem, SolverConfig};
use crate::solver::collision_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairwiseMode {
    Mmot,
    Pairwise2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub names: Vec<String>,
    /// Symmetric with zero diagonal.
    pub matrix: Vec<Vec<f64>>,
    pub mode: PairwiseMode,
    /// Entries are estimates read from one joint coupling.
    pub from_mmot: bool,
    pub sweeps: usize,
    pub ms_per_sweep: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub name: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborList {
    pub name: String,
    pub neighbors: Vec<Neighbor>,
}

/// `d^p` distances between all pairs of marginals.
pub fn distance_matrix(
    marginals: Vec<MarginalSamples>,
    mode: PairwiseMode,
    p: f64,
    config: &SolverConfig,
) -> Result<DistanceMatrix> {
    let k = marginals.len();
    if k < 2 {
        return Err(Error::TooFewMarginals { required: 2, found: k });
    }
    let cost = CostModel::pairwise_lp(p, 1.0)?;
    let names: Vec<String> = marginals.iter().map(|m| m.id().to_owned()).collect();
    let mut matrix = vec![vec![0.0; k]; k];
    let (sweeps, ms_per_sweep, wall_ms);
    match mode {
        PairwiseMode::Mmot => {
            let problem = Problem::new(marginals, cost)?;
            let (state, report) = collision_solve(&problem, config)?;
            for j in 0..k {
                for l in j + 1..k {
                    let d = pair_estimate(&problem, &state, j, l, p)?;
                    matrix[j][l] = d;
                    matrix[l][j] = d;
                }
            }
            sweeps = report.sweeps_run;
            ms_per_sweep = report.ms_per_sweep().unwrap_or(0.0);
            wall_ms = report.wall_ms;
        }
        PairwiseMode::Pairwise2 => {
            let mut total_sweeps = 0;
            let mut total_ms = 0.0;
            let mut sweep_ms = 0.0;
            let mut pair_index = 0u64;
            for j in 0..k {
                for l in j + 1..k {
                    let problem = Problem::new(
                        vec![marginals[j].clone(), marginals[l].clone()],
                        cost.clone(),
                    )?;
                    let cfg = SolverConfig {
                        seed: config.seed.wrapping_add(pair_index),
                        ..config.clone()
                    };
                    pair_index += 1;
                    let (_, report) = collision_solve(&problem, &cfg)?;
                    matrix[j][l] = report.final_mean_cost;
                    matrix[l][j] = report.final_mean_cost;
                    total_sweeps += report.sweeps_run;
                    total_ms += report.wall_ms;
                    sweep_ms += report.trace.last().map_or(0.0, |e| e.wall_ms);
                }
            }
            sweeps = total_sweeps;
            ms_per_sweep = if total_sweeps > 0 {
                sweep_ms / total_sweeps as f64
            } else {
                0.0
            };
            wall_ms = total_ms;
        }
    }
    Ok(DistanceMatrix {
        names,
        matrix,
        mode,
        from_mmot: mode == PairwiseMode::Mmot,
        sweeps,
        ms_per_sweep,
        wall_ms,
    })
}

impl DistanceMatrix {
    /// For each entry, all others sorted by increasing distance.
    pub fn nearest_neighbors(&self) -> Vec<NeighborList> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let mut neighbors: Vec<Neighbor> = self
                    .names
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, other)| Neighbor {
                        name: other.clone(),
                        distance: self.matrix[i][j],
                    })
                    .collect();
                neighbors.sort_by(|a, b| a.distance.total_cmp(&b.distance));
                NeighborList {
                    name: name.clone(),
                    neighbors,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(id: &str, center: f64, n: usize) -> MarginalSamples {
        let data = (0..n)
            .flat_map(|i| {
                let t = i as f64 / n as f64;
                [center + t, center - 0.5 * t]
            })
            .collect();
        MarginalSamples::new(id, 2, data).unwrap()
    }

    #[test]
    fn identical_pair_is_zero() {
        let a = blob("a", 0.0, 20);
        for mode in [PairwiseMode::Mmot, PairwiseMode::Pairwise2] {
            let d = distance_matrix(vec![a.clone(), a.clone()], mode, 2.0, &SolverConfig::default())
                .unwrap();
            assert_eq!(d.matrix[0][1], 0.0);
        }
    }

    #[test]
    fn symmetric_with_zero_diagonal() {
        let ms = vec![blob("a", 0.0, 30), blob("b", 1.0, 30), blob("c", 3.0, 30)];
        let cfg = SolverConfig {
            init: crate::problem::InitMode::RandomShuffle,
            ..Default::default()
        };
        for mode in [PairwiseMode::Mmot, PairwiseMode::Pairwise2] {
            let d = distance_matrix(ms.clone(), mode, 2.0, &cfg).unwrap();
            for i in 0..3 {
                assert_eq!(d.matrix[i][i], 0.0);
                for j in 0..3 {
                    assert_eq!(d.matrix[i][j], d.matrix[j][i]);
                }
            }
            let nn = d.nearest_neighbors();
            assert_eq!(nn[0].neighbors[0].name, "b");
            assert_eq!(nn[2].neighbors[0].name, "b");
        }
    }

    #[test]
    fn needs_two_marginals() {
        assert!(distance_matrix(vec![blob("a", 0.0, 4)], PairwiseMode::Mmot, 2.0, &SolverConfig::default())
            .is_err());
    }
}
