//! Constrained grid search on a synthetic ellipse.
//!
//! ```text
//! cargo run --release --example tune_grid
//! ```

use rom_boundary::dataset::{synth_shape, Shape};
use rom_boundary::metrics::pair_area;
use rom_boundary::ocsvm::{train, TrainConfig};
use rom_boundary::tuning::{grid_search, GridConfig, MEsvConfig, DEFAULT_NEGATIVE_OFFSET};

fn main() -> rom_boundary::Result<()> {
    let shape = Shape::ellipse(60.0, 30.0);
    let (train_set, area) = synth_shape(shape, 500, 11)?;
    // held-out poses stay a little short of the extremes
    let (test_set, _) = synth_shape(Shape::ellipse(57.0, 28.5), 100, 12)?;

    let report = grid_search(&train_set, &test_set, &GridConfig::default(), &MEsvConfig::default(), DEFAULT_NEGATIVE_OFFSET)?;
    for r in &report.rounds {
        println!(
            "round {}: nu {:.4}..{:.4} ({}), sigma {:.4}..{:.4} ({})",
            r.round,
            r.nu[0],
            r.nu[r.nu.len() - 1],
            r.nu.len(),
            r.sigma[0],
            r.sigma[r.sigma.len() - 1],
            r.sigma.len()
        );
    }
    println!("{} cells, {} accepted, failures {:?}", report.cells.len(), report.accepted.len(), report.histogram);

    let mut matrix = Vec::new();
    report.write_matrix_csv(&mut matrix, 0)?;
    println!("first-round failure masks (1 test, 2 M-ESV, 4 negatives):\n{}", String::from_utf8_lossy(&matrix));

    let sel = report.selected_or_err()?;
    let model = train(&train_set, &TrainConfig::new(sel.nu, sel.sigma))?;
    let a = pair_area(&model, 256, 30.0)?;
    println!(
        "selected nu = {:.4}, sigma = {:.2}: area {:.0} ± {:.0} deg^2 (ellipse {area:.0})",
        sel.nu, sel.sigma, a.area, a.uncertainty
    );
    Ok(())
}
