//! Writes synthetic angle CSVs for trying the command line tool.
//!
//! ```text
//! cargo run --release --example prepare_data -- data/
//! rom-boundary tune --train data/train.csv --test data/test.csv -o data/tuning.json
//! ```

use std::path::PathBuf;

use rom_boundary::dataset::{save_angles, synth_shape, Provenance, Shape};

fn main() -> rom_boundary::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let (train, _) = synth_shape(Shape::disk(50.0), 500, 1)?;
    let (test, _) = synth_shape(Shape::disk(47.5), 100, 2)?;
    save_angles(dir.join("train.csv"), &train.with_provenance(Provenance::Exploration))?;
    save_angles(dir.join("test.csv"), &test.with_provenance(Provenance::Test))?;
    println!("wrote {}/train.csv and {}/test.csv", dir.display(), dir.display());
    Ok(())
}
