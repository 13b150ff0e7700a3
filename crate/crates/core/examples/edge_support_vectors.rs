//! Edge or interior: the support-vector test behind the overfitting check.
//!
//! ```text
//! cargo run --release --example edge_support_vectors
//! ```

use rom_boundary::dataset::{synth_shape, Shape};
use rom_boundary::ocsvm::{train, TrainConfig};
use rom_boundary::tuning::{edge_sv_test, m_esv_check, EdgeTestConfig, MEsvConfig};

fn main() -> rom_boundary::Result<()> {
    let cfg = EdgeTestConfig { max_misclassified: 0, min_neighbors: 3 };
    let square: Vec<[f64; 2]> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]];
    for (k, p) in square.iter().enumerate() {
        let others: Vec<&[f64]> = square.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, q)| &q[..]).collect();
        let v = edge_sv_test(p, &others, &cfg)?;
        println!("{p:?}: {:?}", v.kind);
    }

    let (data, _) = synth_shape(Shape::disk(50.0), 500, 1)?;
    for sigma in [1.0, 40.0] {
        let model = train(&data, &TrainConfig::new(0.01, sigma))?;
        let r = m_esv_check(&model, &data, &MEsvConfig::default())?;
        println!(
            "sigma = {sigma:>4}: {} SVs, {} interior (limit {}), radius {:.2} -> {}",
            r.support_vectors,
            r.interior,
            r.max_interior,
            r.radius,
            if r.pass { "smooth" } else { "overfit" }
        );
    }
    Ok(())
}
