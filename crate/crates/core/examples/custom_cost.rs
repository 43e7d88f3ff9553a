//! A tuple cost that is not a sum of pairwise terms: the spread of each
//! tuple around its barycenter, plus a penalty on the first coordinate.

use mmot::ingest::{sample_synthetic, Family, SyntheticSpec};
use mmot::{collision_solve, CostModel, Problem, SolverConfig};

fn main() -> mmot::Result<()> {
    let cost = CostModel::generic(|tuple: &[&[f64]]| {
        let k = tuple.len() as f64;
        let dim = tuple[0].len();
        let mut spread = 0.0;
        for d in 0..dim {
            let mean = tuple.iter().map(|x| x[d]).sum::<f64>() / k;
            spread += tuple.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>();
        }
        let lead = tuple.iter().map(|x| x[0]).fold(f64::MIN, f64::max);
        spread + 0.1 * lead.abs()
    });
    let marginals = [Family::Normal, Family::Uniform, Family::Ring]
        .iter()
        .enumerate()
        .map(|(i, &f)| sample_synthetic(&SyntheticSpec::new(f, 500, i as u64)))
        .collect::<mmot::Result<Vec<_>>>()?;
    let problem = Problem::new(marginals, cost)?;
    let (_, report) = collision_solve(&problem, &SolverConfig::default())?;
    println!(
        "mean cost {:.4} -> {:.4} in {} sweeps ({} swaps accepted)",
        report.initial_mean_cost,
        report.final_mean_cost,
        report.sweeps_run,
        report.total_accepted()
    );
    Ok(())
}
