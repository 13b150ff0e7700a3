//! Weighted RoM volume from pair areas and the Impairment Index.
//!
//! Two "arms" are simulated as 3-DoF datasets, the impaired one with a
//! reduced range on the first DoF. One 2-D boundary is learned per DoF pair.
//!
//! ```text
//! cargo run --release --example impairment_index
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rom_boundary::dataset::{Provenance, RomDataset};
use rom_boundary::metrics::{impairment_index, pair_area, weighted_volume, WeightMatrix};
use rom_boundary::ocsvm::{train, TrainConfig};

fn arm(limits: [(f64, f64); 3], seed: u64) -> rom_boundary::Result<RomDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| limits.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()).collect();
    RomDataset::from_rows(&rows, Provenance::Exploration)
}

fn volume(data: &RomDataset) -> rom_boundary::Result<f64> {
    let mut areas = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let model = train(&data.select_dofs(&[i, j])?, &TrainConfig::new(0.01, 30.0))?;
        let a = pair_area(&model, 128, 30.0)?;
        println!("  pair ({i}, {j}): {:>8.0} ± {:.0} deg^2", a.area, a.uncertainty);
        areas.push(a);
    }
    weighted_volume(&areas, &WeightMatrix::ones(3))
}

fn main() -> rom_boundary::Result<()> {
    println!("healthy arm");
    let healthy = volume(&arm([(-40.0, 120.0), (-30.0, 90.0), (0.0, 100.0)], 1)?)?;
    println!("impaired arm");
    let impaired = volume(&arm([(-20.0, 60.0), (-30.0, 90.0), (0.0, 100.0)], 2)?)?;
    println!("V_healthy = {healthy:.0}, V_impaired = {impaired:.0}, II = {:.4}", impairment_index(impaired, healthy)?);

    // volumes reported for four participants
    for (vi, vh) in [(6229.6, 12850.0), (8621.4, 13450.0), (8380.7, 12825.3), (9328.4, 13167.9)] {
        println!("II({vi}, {vh}) = {:.4}", impairment_index(vi, vh)?);
    }
    Ok(())
}
