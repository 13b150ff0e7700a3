//! The analytic gradient of the boundary function against central
//! differences, and a gradient walk from outside onto the boundary.
//!
//! ```text
//! cargo run --release --example boundary_gradient
//! ```

use rom_boundary::dataset::{synth_shape, Shape};
use rom_boundary::ocsvm::{train, TrainConfig};

fn main() -> rom_boundary::Result<()> {
    let (data, _) = synth_shape(Shape::ellipse(60.0, 30.0), 800, 3)?;
    let model = train(&data, &TrainConfig::new(0.02, 25.0))?;

    let h = 1e-3;
    for q in [[10.0, 5.0], [55.0, 0.0], [-20.0, 28.0]] {
        let g = model.gradient_at(&q)?;
        let fd: Vec<f64> = (0..2)
            .map(|k| {
                let (mut a, mut b) = (q, q);
                a[k] += h;
                b[k] -= h;
                (model.gamma_at(&a).unwrap().value() - model.gamma_at(&b).unwrap().value()) / (2.0 * h)
            })
            .collect();
        println!("q = {q:?}: analytic [{:+.6e}, {:+.6e}]  central [{:+.6e}, {:+.6e}]", g[0], g[1], fd[0], fd[1]);
    }

    // ascend Γ from an infeasible pose until it is back inside
    let mut q = vec![80.0, 40.0];
    for step in 0..200 {
        let g = model.gamma_at(&q)?.value();
        if g >= 0.0 {
            println!("back inside after {step} steps at ({:.2}, {:.2}), Gamma = {g:+.2e}", q[0], q[1]);
            break;
        }
        let grad = model.gradient_at(&q)?;
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (x, d) in q.iter_mut().zip(&grad) {
            *x += d / norm;
        }
    }
    Ok(())
}
