//! Both swap dynamics on a small three-marginal problem, checked against
//! exhaustive enumeration.

use mmot::ingest::{sample_synthetic, Family, SyntheticSpec};
use mmot::oracle::brute_force_mmot;
use mmot::{collision_solve, isa_solve, CostModel, Problem, SolverConfig};

fn main() -> mmot::Result<()> {
    for instance in 0..5u64 {
        let marginals = (0..3)
            .map(|i| sample_synthetic(&SyntheticSpec::new(Family::Normal, 6, 10 * instance + i)))
            .collect::<mmot::Result<Vec<_>>>()?;
        let problem = Problem::new(marginals, CostModel::gangbo_swiech())?;
        let optimum = brute_force_mmot(&problem)?.mean_cost;

        let config = SolverConfig {
            tolerance: 0.0,
            window: 500,
            max_sweeps: 20_000,
            seed: instance,
            ..Default::default()
        };
        let (_, isa) = isa_solve(&problem, &config)?;
        let (_, col) = collision_solve(&problem, &config)?;
        println!(
            "instance {instance}: optimum {optimum:.5}  isa {:.5} ({} sweeps)  collision {:.5} ({} sweeps)",
            isa.final_mean_cost, isa.sweeps_run, col.final_mean_cost, col.sweeps_run
        );
    }
    Ok(())
}
