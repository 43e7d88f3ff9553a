//! Swiss roll against a Gaussian: collision dynamics versus the exact
//! assignment.
//!
//!     cargo run --release --example two_marginal -- [N_p] [sweeps]

use mmot::ingest::{sample_synthetic, Family, SyntheticSpec};
use mmot::oracle::exact_assignment_2m;
use mmot::{collision_solve, CostModel, Problem, SolverConfig};

fn main() -> mmot::Result<()> {
    let mut args = std::env::args().skip(1);
    let np = args.next().map_or(1000, |s| s.parse().expect("N_p"));
    let sweeps = args.next().map_or(1000, |s| s.parse().expect("sweeps"));

    let roll = sample_synthetic(&SyntheticSpec::new(Family::SwissRoll, np, 0))?;
    let gauss = sample_synthetic(&SyntheticSpec::new(Family::Normal, np, 1))?;
    let cost = CostModel::squared_euclidean();
    let exact = exact_assignment_2m(&roll, &gauss, &cost)?;

    let problem = Problem::new(vec![roll, gauss], cost)?;
    let config = SolverConfig {
        tolerance: 0.0,
        window: sweeps + 1,
        max_sweeps: sweeps,
        ..Default::default()
    };
    let (_, report) = collision_solve(&problem, &config)?;

    println!("initial mean cost  {:.6}", report.initial_mean_cost);
    println!("collision ({sweeps} sweeps) {:.6}", report.final_mean_cost);
    println!("exact assignment   {:.6}", exact.mean_cost);
    println!(
        "relative gap {:.3e}, {:.3} ms/sweep",
        (report.final_mean_cost - exact.mean_cost) / exact.mean_cost,
        report.ms_per_sweep().unwrap_or(0.0)
    );
    Ok(())
}
