//! Joint pairing of five synthetic distributions with the Gangbo-Swiech
//! cost, exported as training pairs (one row per tuple, 10 columns).
//!
//!     cargo run --release --example multi_marginal_pairs -- pairs.csv

use mmot::ingest::{sample_synthetic, write_rows, Family, SyntheticSpec};
use mmot::{collision_solve, wasserstein_estimate, CostModel, Problem, SolverConfig};

fn main() -> mmot::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "pairs.csv".into());
    let families = [Family::Normal, Family::SwissRoll, Family::Banana, Family::Funnel, Family::Ring];
    let marginals = families
        .iter()
        .enumerate()
        .map(|(i, &f)| sample_synthetic(&SyntheticSpec::new(f, 2000, i as u64)))
        .collect::<mmot::Result<Vec<_>>>()?;
    let problem = Problem::new(marginals, CostModel::gangbo_swiech())?;

    let (state, report) = collision_solve(&problem, &SolverConfig::default())?;
    println!(
        "{} sweeps, mean cost {:.4} -> {:.4}, converged {}",
        report.sweeps_run, report.initial_mean_cost, report.final_mean_cost, report.converged
    );
    println!("summed pairwise W2^2 estimate {:.4}", wasserstein_estimate(&problem, &state, 2.0)?);

    let rows: Vec<Vec<f64>> = (0..problem.num_points())
        .map(|r| {
            state
                .tuple_indices(r)
                .into_iter()
                .zip(problem.marginals())
                .flat_map(|(i, m)| m.point(i).to_vec())
                .collect()
        })
        .collect();
    write_rows(&out, rows.iter().map(Vec::as_slice))?;
    println!("wrote {} rows to {out}", rows.len());
    Ok(())
}
