//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rom_boundary::dataset::{synth_shape, Provenance, RomDataset, Shape};
use rom_boundary::kinematics::{
    compose_frame, extract_joint_angles, hemisphere_align, rotmat_to_euler_zxy, wrap_degrees, KinematicChain,
    Quaternion, RotationMatrix, Side, SkeletonFrame, BonePose, ARM_DOF,
};
use rom_boundary::metrics::{impairment_index, pair_area};
use rom_boundary::ocsvm::{certify_kkt, train, train_detailed, OcsvmModel, TrainConfig};
use rom_boundary::tuning::{
    constraint_negative_exclusion, edge_sv_test, grid_search, m_esv_check, make_negative_samples, AxisRange,
    EdgeKind, EdgeTestConfig, GridConfig, MEsvConfig, DEFAULT_NEGATIVE_OFFSET,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("impairment index table", table_ii),
        ("nu property", nu_property),
        ("KKT certification", kkt_certification),
        ("gradient check", gradient_check),
        ("geometry oracle", geometry_oracle),
        ("tuning constraint behaviour", constraint_behaviour),
        ("edge-SV vs convex hull", edge_sv_oracle),
        ("kinematics round trips", kinematics_round_trips),
        ("operating point", operating_point),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += !o.pass as usize;
        println!(
            "criterion {}: {} {name} ({:.1}s): {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn table_ii() -> Outcome {
    let rows = [
        (12850.0, 6229.6, 0.4848),
        (13450.0, 8621.4, 0.6410),
        (12825.3, 8380.7, 0.6534),
        (13167.9, 9328.4, 0.7084),
    ];
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (k, (vh, vi, expected)) in rows.iter().enumerate() {
        let ii = impairment_index(*vi, *vh).expect("positive volumes");
        let err = (ii - expected).abs();
        worst = worst.max(err);
        if err > 5e-5 {
            misses.push(format!("row {} gives {ii:.6} vs {expected}", k + 1));
        }
    }
    let detail = if misses.is_empty() {
        format!("max |error| {worst:.2e} <= 5e-5")
    } else {
        format!("max |error| {worst:.2e} > 5e-5; {}", misses.join(", "))
    };
    outcome(misses.is_empty(), detail)
}

fn nu_property() -> Outcome {
    let mut bad = Vec::new();
    let mut cases = 0;
    for seed in [1u64, 2] {
        let (data, _) = synth_shape(Shape::disk(50.0), 2000, seed).expect("valid shape");
        for sigma in [15.0, 40.0] {
            for nu in [0.01, 0.05, 0.2] {
                let model = train(&data, &TrainConfig::new(nu, sigma)).expect("training converges");
                let gammas = model.gamma_batch(data.samples()).expect("matching dimension");
                let outliers = gammas.iter().filter(|g| g.value() < 0.0).count() as f64 / 2000.0;
                let svs = model.training().sv_fraction;
                cases += 1;
                if outliers > nu + 0.02 || svs < nu - 0.02 {
                    bad.push(format!("seed {seed} sigma {sigma} nu {nu}: outliers {outliers:.4}, SVs {svs:.4}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{cases} models, {} violations {}", bad.len(), bad.join("; ")))
}

fn kkt_certification() -> Outcome {
    let shapes = [
        Shape::disk(50.0),
        Shape::ellipse(60.0, 30.0),
        Shape::AnnulusSector { center: [10.0, -20.0], inner: 20.0, outer: 60.0, start_deg: 0.0, end_deg: 200.0 },
        Shape::Crescent { center: [0.0, 0.0], radius: 50.0, cut_radius: 40.0, cut_offset: 30.0 },
    ];
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for seed in 0..20u64 {
        let shape = shapes[seed as usize % shapes.len()];
        let (data, _) = synth_shape(shape, 300 + 20 * seed as usize, 100 + seed).expect("valid shape");
        let nu = [0.005, 0.02, 0.1, 0.3][(seed / 4) as usize % 4];
        let sigma = [3.0, 10.0, 25.0, 60.0, 200.0][seed as usize % 5];
        let cfg = TrainConfig::new(nu, sigma);
        match train_detailed(&data, &cfg) {
            Ok(out) => {
                let v = certify_kkt(&out, &data).expect("matching dimension");
                worst = worst.max(v);
                fails += (v > 1e-6) as usize;
            }
            Err(_) => fails += 1,
        }
    }
    outcome(fails == 0, format!("20 datasets, max violation {worst:.2e}, {fails} above 1e-6"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut models: Vec<OcsvmModel> = Vec::new();
    for k in 0..10u64 {
        let dim = 2 + (k as usize % 3);
        let rows: Vec<Vec<f64>> = (0..150).map(|_| (0..dim).map(|_| rng.gen_range(-60.0..60.0)).collect()).collect();
        let data = RomDataset::from_rows(&rows, Provenance::Exploration).expect("finite rows");
        let sigma = [4.0, 10.0, 25.0, 60.0, 150.0][k as usize % 5];
        models.push(train(&data, &TrainConfig::new(0.1, sigma)).expect("training converges"));
    }
    let h = 1e-3;
    let mut worst_ratio: f64 = 0.0;
    let mut fails = 0;
    for case in 0..500 {
        let model = &models[case % models.len()];
        let q: Vec<f64> = (0..model.dim()).map(|_| rng.gen_range(-80.0..80.0)).collect();
        let grad = model.gradient_at(&q).expect("matching dimension");
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let tol = (1e-4 * norm).max(1e-6);
        for k in 0..q.len() {
            let (mut a, mut b) = (q.clone(), q.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (model.gamma_at(&a).unwrap().value() - model.gamma_at(&b).unwrap().value()) / (2.0 * h);
            let err = (fd - grad[k]).abs();
            worst_ratio = worst_ratio.max(err / tol);
            fails += (err > tol) as usize;
        }
    }
    outcome(fails == 0, format!("500 cases, worst error/tolerance {worst_ratio:.2e}, {fails} components out"))
}

/// Training samples from the shape; held-out samples from the same shape at
/// 95% linear scale, as free captures rarely reach the extreme limits.
fn tuning_fixture(outer: Shape, inner: Shape) -> (RomDataset, RomDataset, f64) {
    let (train_set, area) = synth_shape(outer, 500, 1).expect("valid shape");
    let (test_set, _) = synth_shape(inner, 100, 2).expect("valid shape");
    (train_set, test_set.with_provenance(Provenance::Test), area)
}

fn geometry_oracle() -> Outcome {
    let cases = [
        ("disk", Shape::disk(50.0), Shape::disk(47.5)),
        ("ellipse", Shape::ellipse(60.0, 30.0), Shape::ellipse(57.0, 28.5)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, outer, inner) in cases {
        let (train_set, test_set, exact) = tuning_fixture(outer, inner);
        let report = grid_search(&train_set, &test_set, &GridConfig::default(), &MEsvConfig::default(), DEFAULT_NEGATIVE_OFFSET)
            .expect("valid inputs");
        let Some(sel) = report.selected else {
            pass = false;
            parts.push(format!("{name}: no feasible pair"));
            continue;
        };
        let model = train(&train_set, &TrainConfig::new(sel.nu, sel.sigma)).expect("training converges");
        let a = pair_area(&model, 256, 30.0).expect("enclosed boundary");
        let rel = (a.area - exact) / exact;
        pass &= rel.abs() <= 0.10;
        parts.push(format!(
            "{name}: nu {:.4} sigma {:.1} area {:.0} vs {exact:.0} ({:+.1}%)",
            sel.nu,
            sel.sigma,
            a.area,
            100.0 * rel
        ));
    }
    outcome(pass, parts.join("; "))
}

fn constraint_behaviour() -> Outcome {
    let (train_set, test_set, _) = tuning_fixture(Shape::disk(50.0), Shape::disk(47.5));
    let nus = AxisRange::new(1e-3, 1.0, 7).values();
    let mesv = MEsvConfig::default();
    let negatives = make_negative_samples(&train_set, DEFAULT_NEGATIVE_OFFSET).expect("nonempty data");

    let small_sigma_overfits = nus.iter().all(|&nu| {
        let model = train(&train_set, &TrainConfig::new(nu, 1.0)).expect("training converges");
        !m_esv_check(&model, &train_set, &mesv).expect("valid config").pass
    });
    let admitted: Vec<f64> = nus
        .iter()
        .copied()
        .filter(|&nu| {
            let model = train(&train_set, &TrainConfig::new(nu, 1e3)).expect("training converges");
            constraint_negative_exclusion(&model, &negatives).expect("negatives").pass
        })
        .collect();
    let large_sigma_underfits = admitted.is_empty();

    let report = grid_search(&train_set, &test_set, &GridConfig::default(), &mesv, DEFAULT_NEGATIVE_OFFSET)
        .expect("valid inputs");
    let between = !report.accepted.is_empty() && report.accepted.iter().all(|&(_, s)| s > 1.0 && s < 1e3);
    let (lo, hi) = report
        .accepted
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, s)| (lo.min(s), hi.max(s)));

    outcome(
        small_sigma_overfits && large_sigma_underfits && between,
        format!(
            "sigma=1 fails M-ESV for all nu: {small_sigma_overfits}; sigma=1e3 fails negative exclusion for all nu: \
             {large_sigma_underfits} (passes for {} of {} nu); accepted sigma in [{lo:.1}, {hi:.1}] strictly between: {between}",
            admitted.len(),
            nus.len()
        ),
    )
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the strict convex hull vertices (Andrew's monotone chain).
fn hull_vertices(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap());
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let order: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in order {
            while hull.len() >= start + 2 && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull.sort_unstable();
    hull.dedup();
    hull
}

fn edge_sv_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = EdgeTestConfig { max_misclassified: 0, min_neighbors: 1 };
    let mut disagreements = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=30);
        let spread = rng.gen_range(1.0..100.0);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)]).collect();
        let hull = hull_vertices(&pts);
        for k in 0..n {
            let others: Vec<&[f64]> = pts.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, p)| &p[..]).collect();
            let v = edge_sv_test(&pts[k], &others, &cfg).expect("valid input");
            checked += 1;
            if (v.kind == EdgeKind::Edge) != hull.binary_search(&k).is_ok() {
                disagreements += 1;
            }
        }
    }
    outcome(disagreements == 0, format!("100 instances, {checked} points, {disagreements} disagreements"))
}

fn kinematics_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (z, x, y) = (rng.gen_range(-180.0..180.0), rng.gen_range(-85.0..85.0), rng.gen_range(-180.0..180.0));
        let e = rotmat_to_euler_zxy(&RotationMatrix::compose_zxy(z, x, y)).expect("proper rotation");
        for (a, b) in [(e.z, z), (e.x, x), (e.y, y)] {
            worst = worst.max(wrap_degrees(a - b).abs());
        }
    }
    let euler_ok = worst <= 1e-6;

    let chain = KinematicChain::default();
    let mut chain_worst: f64 = 0.0;
    for k in 0..1000 {
        let side = if k % 2 == 0 { Side::Right } else { Side::Left };
        let mut q = [0.0; ARM_DOF];
        for (i, v) in q.iter_mut().enumerate() {
            *v = if i == 0 || i == 6 { rng.gen_range(-85.0..85.0) } else { rng.gen_range(-179.0..179.0) };
        }
        let chest = Quaternion::from_axis_angle([rng.gen(), rng.gen(), rng.gen::<f64>() + 0.1], rng.gen_range(-90.0..90.0));
        let frame = compose_frame(0.0, &chain, side, chest, &q);
        let got = extract_joint_angles(&frame, &chain, side).expect("complete frame");
        for i in 0..ARM_DOF {
            chain_worst = chain_worst.max(wrap_degrees(got.q[i] - q[i]).abs());
        }
    }
    let chain_ok = chain_worst <= 1e-6;

    let mut zero = SkeletonFrame::new(0.0);
    for bone in chain.bone_names() {
        zero = zero.with_bone(bone, BonePose { position: [0.0; 3], orientation: Quaternion::IDENTITY });
    }
    let zero_ok = [Side::Right, Side::Left].iter().all(|&side| {
        extract_joint_angles(&zero, &chain, side)
            .map(|a| a.q.as_slice().iter().all(|v| v.abs() < 1e-12))
            .unwrap_or(false)
    });

    let a = Quaternion::from_axis_angle([0.3, -0.5, 0.8], -120.0);
    let b = Quaternion::from_axis_angle([-0.2, 0.9, 0.1], 150.0);
    let mut path: Vec<Quaternion> = (0..100).map(|t| a.slerp(&b, t as f64 / 99.0)).collect();
    for k in 0..100 {
        if rng.gen_bool(0.3) {
            path[k] = path[k].negated();
        }
    }
    let aligned = hemisphere_align(&path).expect("unit quaternions");
    let hemi_ok = aligned.windows(2).all(|w| w[0].dot(&w[1]) >= 0.0);

    outcome(
        euler_ok && chain_ok && zero_ok && hemi_ok,
        format!(
            "ZXY max error {worst:.1e} deg; chain max error {chain_worst:.1e} deg; zero pose -> zero: {zero_ok}; \
             hemisphere dots >= 0: {hemi_ok}"
        ),
    )
}

/// Four shoulder/elbow DoFs with coupled limits, spanning about ±170 deg on
/// the first.
fn arm_scale_dataset(m: usize, seed: u64) -> RomDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let semi = [170.0, 110.0, 90.0, 70.0];
    let center = [0.0, 40.0, 0.0, 75.0];
    let mut rows = Vec::with_capacity(m);
    while rows.len() < m {
        let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if u.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            continue;
        }
        // elbow range shrinks as the arm is raised
        let lift = 1.0 - 0.3 * u[0].abs();
        rows.push((0..4).map(|k| center[k] + semi[k] * u[k] * if k == 3 { lift } else { 1.0 }).collect());
    }
    RomDataset::from_rows(&rows, Provenance::Exploration).expect("finite rows")
}

fn operating_point() -> Outcome {
    let data = arm_scale_dataset(4000, 9);
    let (lo, hi) = data.bounding_box().expect("nonempty");
    match train_detailed(&data, &TrainConfig::new(0.0075, 40.0)) {
        Ok(out) => {
            let f = out.model.training().sv_fraction;
            outcome(
                f < 0.05,
                format!(
                    "m = 4000, q1 spans [{:.0}, {:.0}]: converged in {} updates, SV fraction {:.3}%",
                    lo[0],
                    hi[0],
                    out.iterations,
                    100.0 * f
                ),
            )
        }
        Err(e) => outcome(false, format!("training failed: {e}")),
    }
}
