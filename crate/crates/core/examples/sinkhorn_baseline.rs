//! Entropic regularization against the exact assignment as the
//! regularization strength shrinks.

use mmot::ingest::{sample_synthetic, Family, SyntheticSpec};
use mmot::oracle::{exact_assignment_2m, sinkhorn_2m, SinkhornParams};
use mmot::CostModel;

fn main() -> mmot::Result<()> {
    let x = sample_synthetic(&SyntheticSpec::new(Family::Banana, 64, 0))?;
    let y = sample_synthetic(&SyntheticSpec::new(Family::Ring, 64, 1))?;
    let cost = CostModel::squared_euclidean();
    let exact = exact_assignment_2m(&x, &y, &cost)?.mean_cost;
    println!("exact {exact:.6}");
    for lambda in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let params = SinkhornParams {
            lambda,
            ..Default::default()
        };
        let r = sinkhorn_2m(&x, &y, &cost, &params)?;
        println!(
            "lambda {lambda:<5} cost {:.6}  gap {:.2e}  iterations {:>6}  converged {}  log-domain {}",
            r.reg_cost,
            r.reg_cost - exact,
            r.iterations,
            r.converged,
            r.log_domain
        );
    }
    Ok(())
}
