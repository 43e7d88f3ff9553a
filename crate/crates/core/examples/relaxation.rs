//! Per-sweep cost trace and a fitted decay rate.

use mmot::diagnostics::{fit_exponential_decay, relaxation_fit};
use mmot::ingest::{sample_synthetic, Family, SyntheticSpec};
use mmot::{collision_solve, CostModel, Problem, SolverConfig};

fn main() -> mmot::Result<()> {
    let x = sample_synthetic(&SyntheticSpec::new(Family::SwissRoll, 2000, 0))?;
    let y = sample_synthetic(&SyntheticSpec::new(Family::Normal, 2000, 1))?;
    let problem = Problem::new(vec![x, y], CostModel::squared_euclidean())?;
    let config = SolverConfig {
        tolerance: 0.0,
        window: 2001,
        max_sweeps: 2000,
        ..Default::default()
    };
    let (_, report) = collision_solve(&problem, &config)?;
    let trace = report.mean_costs();
    let stationary = *trace.last().unwrap();
    for t in [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000] {
        println!("sweep {t:>4}  excess cost {:.4e}", trace[t] - stationary);
    }
    let fit = relaxation_fit(&trace)?;
    println!(
        "first half: alpha_hat {:.4}, R^2 {:.3} over {} points",
        fit.alpha_hat, fit.r_squared, fit.points
    );
    let early = fit_exponential_decay(&trace[..20], stationary)?;
    println!("first 20 sweeps: alpha_hat {:.4}, R^2 {:.3}", early.alpha_hat, early.r_squared);
    Ok(())
}
