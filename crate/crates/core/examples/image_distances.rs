//! Distance matrix between grayscale images, from one joint coupling and
//! from independent two-marginal solves.
//!
//!     cargo run --release --example image_distances -- [dir-of-pgm]
//!
//! Without a directory, eight synthetic blob images are used.

use std::path::PathBuf;

use mmot::ingest::{image_to_samples, load_pgm, GrayImage, ImageMode};
use mmot::pairwise::{distance_matrix, PairwiseMode};
use mmot::{MarginalSamples, SolverConfig};

fn blob(size: usize, cx: f64, cy: f64, sigma: f64) -> GrayImage {
    let px = (0..size * size)
        .map(|i| {
            let x = ((i % size) as f64 + 0.5) / size as f64;
            let y = ((i / size) as f64 + 0.5) / size as f64;
            (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    GrayImage::new(size, size, px).expect("valid image")
}

fn main() -> mmot::Result<()> {
    let images: Vec<(String, GrayImage)> = match std::env::args().nth(1) {
        Some(dir) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
                .collect();
            files.sort();
            files
                .into_iter()
                .map(|p| Ok((p.file_stem().unwrap().to_string_lossy().into_owned(), load_pgm(&p)?)))
                .collect::<mmot::Result<_>>()?
        }
        None => (0..8)
            .map(|i| {
                let t = i as f64 / 8.0;
                (format!("blob{i}"), blob(32, 0.2 + 0.6 * t, 0.5, 0.05 + 0.1 * t))
            })
            .collect(),
    };
    let marginals: Vec<MarginalSamples> = images
        .iter()
        .enumerate()
        .map(|(i, (name, img))| image_to_samples(img, 500, ImageMode::IntensitySampled, i as u64, name.clone()))
        .collect::<mmot::Result<_>>()?;

    let config = SolverConfig::default();
    let joint = distance_matrix(marginals.clone(), PairwiseMode::Mmot, 2.0, &config)?;
    let pairs = distance_matrix(marginals, PairwiseMode::Pairwise2, 2.0, &config)?;
    println!("joint solve: {} sweeps, {:.1} ms", joint.sweeps, joint.wall_ms);
    println!("pairwise solves: {} sweeps, {:.1} ms", pairs.sweeps, pairs.wall_ms);
    for (i, name) in joint.names.iter().enumerate() {
        let row: Vec<String> = (0..joint.names.len())
            .map(|j| format!("{:.4}/{:.4}", joint.matrix[i][j], pairs.matrix[i][j]))
            .collect();
        println!("{name:>8} {}", row.join(" "));
    }
    for nn in joint.nearest_neighbors() {
        println!("{} nearest: {}", nn.name, nn.neighbors[0].name);
    }
    Ok(())
}
