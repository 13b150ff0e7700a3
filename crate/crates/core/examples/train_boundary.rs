//! Fit a boundary to samples of a disk and query it.
//!
//! ```text
//! cargo run --release --example train_boundary
//! ```

use rom_boundary::dataset::{synth_shape, Shape};
use rom_boundary::ocsvm::{certify_kkt, train_detailed, OcsvmModel, TrainConfig};

fn main() -> rom_boundary::Result<()> {
    let (data, area) = synth_shape(Shape::disk(50.0), 1000, 7)?;
    println!("{} samples of a radius-50 disk (area {area:.1} deg^2)", data.len());

    let cfg = TrainConfig::new(0.01, 40.0);
    let out = train_detailed(&data, &cfg)?;
    let model = &out.model;
    println!(
        "nu = {}, sigma = {}: {} support vectors, rho = {:.6}, {} updates, KKT residual {:.2e}",
        cfg.nu,
        cfg.kernel.sigma,
        model.n_support(),
        model.rho(),
        out.iterations,
        certify_kkt(&out, &data)?
    );

    for q in [[0.0, 0.0], [30.0, 30.0], [48.0, 0.0], [55.0, 0.0], [80.0, -80.0]] {
        let g = model.gamma_at(&q)?;
        println!("  Gamma({:>6.1}, {:>6.1}) = {:>+.5}  {}", q[0], q[1], g.value(), g.region(1e-6));
    }

    let json = model.to_json()?;
    let back = OcsvmModel::from_json(&json)?;
    assert_eq!(&back, model);
    println!("model JSON: {} bytes, round trip exact", json.len());
    Ok(())
}
