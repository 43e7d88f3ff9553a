//! Per-sweep wall time against sample count for both dynamics.

use mmot::diagnostics::{measure_sweep_scaling, ScalingScenario};
use mmot::Method;

fn main() -> mmot::Result<()> {
    let collision = measure_sweep_scaling(&ScalingScenario::default(), &[1000, 2000, 4000, 8000, 16000], 100)?;
    let isa = ScalingScenario {
        method: Method::Isa,
        ..Default::default()
    };
    let isa = measure_sweep_scaling(&isa, &[250, 500, 1000], 1)?;
    for (name, pts) in [("collision", collision), ("isa", isa)] {
        for w in pts.windows(2) {
            println!(
                "{name:<9} N_p {:>5} -> {:>5}: {:.4} -> {:.4} ms/sweep (x{:.2})",
                w[0].num_points,
                w[1].num_points,
                w[0].ms_per_sweep,
                w[1].ms_per_sweep,
                w[1].ms_per_sweep / w[0].ms_per_sweep
            );
        }
    }
    Ok(())
}
