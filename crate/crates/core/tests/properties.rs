use proptest::prelude::*;
use rom_boundary::dataset::{synth_shape, Provenance, RomDataset, Shape};
use rom_boundary::metrics::{impairment_index, pair_area, weighted_volume, PairArea, WeightMatrix};
use rom_boundary::ocsvm::{train_detailed, TrainConfig};

fn area(i: usize, j: usize, a: f64) -> PairArea {
    PairArea { i, j, area: a, uncertainty: 0.0, resolution: 64, lo: [0.0; 2], hi: [1.0; 2] }
}

fn all_pairs(areas: &[f64], n: usize) -> Vec<PairArea> {
    let mut out = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            out.push(area(i, j, areas[k]));
            k += 1;
        }
    }
    out
}

fn translated(data: &RomDataset, shift: [f64; 2]) -> RomDataset {
    let rows: Vec<Vec<f64>> = data
        .samples()
        .iter()
        .map(|p| vec![p.as_slice()[0] + shift[0], p.as_slice()[1] + shift[1]])
        .collect();
    RomDataset::from_rows(&rows, Provenance::Exploration).unwrap()
}

proptest! {
    #[test]
    fn unit_weights_sum_areas(areas in prop::collection::vec(0.0..1e4f64, 6)) {
        let pairs = all_pairs(&areas, 4);
        let v = weighted_volume(&pairs, &WeightMatrix::ones(4)).unwrap();
        let sum: f64 = areas.iter().sum();
        prop_assert!((v - sum).abs() <= 1e-12 * sum.max(1.0));
    }

    #[test]
    fn volume_is_linear_in_weights(
        areas in prop::collection::vec(0.0..1e4f64, 3),
        w1 in prop::collection::vec(0.0..5.0f64, 3),
        w2 in prop::collection::vec(0.0..5.0f64, 3),
        a in 0.0..3.0f64,
        b in 0.0..3.0f64,
    ) {
        let matrix = |w: &[f64]| WeightMatrix::from_rows(vec![
            vec![0.0, w[0], w[1]],
            vec![w[0], 0.0, w[2]],
            vec![w[1], w[2], 0.0],
        ]).unwrap();
        let mixed: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let pairs = all_pairs(&areas, 3);
        let lhs = weighted_volume(&pairs, &matrix(&mixed)).unwrap();
        let rhs = a * weighted_volume(&pairs, &matrix(&w1)).unwrap() + b * weighted_volume(&pairs, &matrix(&w2)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn impairment_index_is_scale_free(vi in 0.0..1e5f64, vh in 1e-3..1e5f64, k in 1e-3..1e3f64) {
        let ii = impairment_index(vi, vh).unwrap();
        let scaled = impairment_index(k * vi, k * vh).unwrap();
        prop_assert!((ii - scaled).abs() <= 1e-12 * ii.max(1.0));
        prop_assert!(ii >= 0.0);
    }

    #[test]
    fn synthetic_data_is_reproducible(seed in 0u64..1000, n in 50usize..200) {
        let (a, _) = synth_shape(Shape::ellipse(40.0, 25.0), n, seed).unwrap();
        let (b, _) = synth_shape(Shape::ellipse(40.0, 25.0), n, seed).unwrap();
        prop_assert_eq!(a.to_flat(), b.to_flat());
        for p in a.samples() {
            let q = p.as_slice();
            prop_assert!((q[0] / 40.0).powi(2) + (q[1] / 25.0).powi(2) <= 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coefficients_are_feasible(seed in 0u64..1000, nu in 0.01..0.5f64, sigma in 5.0..80.0f64) {
        let (data, _) = synth_shape(Shape::disk(40.0), 150, seed).unwrap();
        let out = train_detailed(&data, &TrainConfig::new(nu, sigma)).unwrap();
        let sum: f64 = out.alphas.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(out.alphas.iter().all(|&a| (-1e-12..=out.upper_bound + 1e-12).contains(&a)));
        let sv_fraction = out.model.n_support() as f64 / data.len() as f64;
        prop_assert!(sv_fraction + 1e-9 >= nu);
    }

    #[test]
    fn area_is_translation_invariant(seed in 0u64..1000, dx in -60.0..60.0f64, dy in -60.0..60.0f64) {
        let (data, _) = synth_shape(Shape::ellipse(45.0, 30.0), 200, seed).unwrap();
        let cfg = TrainConfig::new(0.05, 35.0);
        let base = pair_area(&train_detailed(&data, &cfg).unwrap().model, 96, 30.0).unwrap();
        let moved = pair_area(&train_detailed(&translated(&data, [dx, dy]), &cfg).unwrap().model, 96, 30.0).unwrap();
        prop_assert!(
            (base.area - moved.area).abs() <= base.uncertainty + moved.uncertainty,
            "{} vs {} (uncertainty {} + {})", base.area, moved.area, base.uncertainty, moved.uncertainty
        );
    }
}
