//! Lattice of boundary values for plotting, with a coarse ASCII rendering.
//!
//! ```text
//! cargo run --release --example isolines [out.csv]
//! ```

use rom_boundary::dataset::{synth_shape, Shape};
use rom_boundary::metrics::{pair_lattice, write_isolines};
use rom_boundary::ocsvm::{train, TrainConfig};

fn main() -> rom_boundary::Result<()> {
    let shape = Shape::Crescent { center: [0.0, 0.0], radius: 50.0, cut_radius: 40.0, cut_offset: 30.0 };
    let (data, _) = synth_shape(shape, 600, 5)?;
    let model = train(&data, &TrainConfig::new(0.01, 15.0))?;

    if let Some(path) = std::env::args().nth(1) {
        let rows = write_isolines(&model, 256, 30.0, std::fs::File::create(&path)?)?;
        println!("wrote {rows} rows to {path}");
    }

    let lattice = pair_lattice(&model, 64, 10.0)?;
    let gamma = lattice.evaluate(&model)?;
    // rows in descending q1 so the picture is upright
    for r in (0..64).rev().step_by(2) {
        let line: String = (0..64).map(|c| if gamma[c * 64 + r] > 0.0 { '#' } else { '.' }).collect();
        println!("{line}");
    }
    Ok(())
}
