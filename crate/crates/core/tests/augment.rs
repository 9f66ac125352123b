use std::collections::HashMap;

use cochceps::augment::{
    angle_mask, cepstral_mask, mask_cells, quefrency_mask, resize_nearest, sample_transform, sample_view_pair_seeded,
    znormalize_fold, MaskAxis, MaskPolicy, MaskRecord, Transform, ViewPrep,
};
use cochceps::matrix::Matrix;
use cochceps::rng;
use cochceps::CCGram;
use proptest::prelude::*;
use rand::Rng;

fn ramp(rows: usize, cols: usize) -> CCGram {
    let data = (0..rows * cols).map(|i| i as f64 + 1.0).collect();
    CCGram::new(Matrix::from_vec(rows, cols, data).unwrap(), 45.0)
}

fn changed(a: &Matrix, b: &Matrix) -> Vec<bool> {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.to_bits() != y.to_bits()).collect()
}

fn in_bounds(records: &[MaskRecord], rows: usize, cols: usize, policy: &MaskPolicy) -> bool {
    records.iter().all(|r| {
        let (len, max) = match r.axis {
            MaskAxis::Angle => (rows, policy.phi),
            MaskAxis::Quefrency => (cols, policy.q),
        };
        r.width <= max && r.start_index + r.width <= len
    })
}

#[test]
fn angle_masks_zero_whole_rows() {
    let x = ramp(20, 239);
    let policy = MaskPolicy::default();
    for seed in 0..200 {
        let (y, recs) = angle_mask(&x, &policy, &mut rng::seeded(seed));
        assert!(recs.len() == 2 && recs.iter().all(|r| r.axis == MaskAxis::Angle));
        let zeroed: Vec<usize> = (0..20).filter(|&r| y.values.row(r).iter().all(|&v| v == 0.0)).collect();
        assert!(zeroed.len() <= 4);
        assert_eq!(changed(&x.values, &y.values), mask_cells(&recs, 20, 239));
    }
}

#[test]
fn quefrency_masks_zero_whole_columns() {
    let x = ramp(20, 239);
    let policy = MaskPolicy::default();
    for seed in 0..200 {
        let (y, recs) = quefrency_mask(&x, &policy, &mut rng::seeded(seed));
        assert_eq!(recs.len(), 5);
        let zeroed = (0..239).filter(|&c| y.values.column(c).iter().all(|&v| v == 0.0)).count();
        assert!(zeroed <= 25);
        assert_eq!(changed(&x.values, &y.values), mask_cells(&recs, 20, 239));
    }
}

#[test]
fn single_column_image() {
    let x = ramp(4, 1);
    let policy = MaskPolicy { phi: 0, q: 1, fill_value: 0.0 };
    for seed in 0..10_000 {
        let (y, recs) = quefrency_mask(&x, &policy, &mut rng::seeded(seed));
        assert!(in_bounds(&recs, 4, 1, &policy));
        let zeroed = y.values.as_slice().iter().all(|&v| v == 0.0);
        assert_eq!(zeroed, recs[0].width == 1);
    }
}

#[test]
fn cepstral_is_angle_then_quefrency() {
    let x = ramp(20, 239);
    let policy = MaskPolicy::default();
    for seed in 0..200 {
        let (c, rc) = cepstral_mask(&x, &policy, &mut rng::seeded(seed));
        let mut r = rng::seeded(seed);
        let (a, ra) = angle_mask(&x, &policy, &mut r);
        let (q, rq) = quefrency_mask(&a, &policy, &mut r);
        assert!(c.values.bit_eq(&q.values));
        assert_eq!(rc, [ra, rq].concat());
    }
}

#[test]
fn transform_choice_is_uniform() {
    let mut r = rng::seeded(5);
    let draws = 30_000;
    let mut counts = HashMap::new();
    for _ in 0..draws {
        *counts.entry(sample_transform(&mut r)).or_insert(0usize) += 1;
    }
    let x = ramp(4, 6);
    let mut per_view = [HashMap::new(), HashMap::new()];
    for seed in 0..draws as u64 {
        let pair = sample_view_pair_seeded(&x, &MaskPolicy::default(), seed);
        for (v, t) in pair.transforms.into_iter().enumerate() {
            *per_view[v].entry(t).or_insert(0usize) += 1;
        }
    }
    for table in [&counts, &per_view[0], &per_view[1]] {
        for t in Transform::ALL {
            let p = table[&t] as f64 / draws as f64;
            assert!((p - 1.0 / 3.0).abs() < 0.01, "{t}: {p}");
        }
    }
}

#[test]
fn view_pair_is_seeded() {
    let x = ramp(20, 239);
    let a = sample_view_pair_seeded(&x, &MaskPolicy::default(), 9);
    let b = sample_view_pair_seeded(&x, &MaskPolicy::default(), 9);
    assert_eq!(a, b);
    assert_eq!(a.rng_seed, Some(9));
    for (view, masks) in [(&a.view_i, &a.masks[0]), (&a.view_j, &a.masks[1])] {
        assert_eq!(changed(&x.values, &view.values), mask_cells(masks, 20, 239));
    }
}

#[test]
fn fold_normalisation_statistics() {
    let mut r = rng::seeded(3);
    for _ in 0..20 {
        let fold: Vec<CCGram> = (0..r.random_range(1..6))
            .map(|_| {
                let scale = r.random_range(0.1..50.0);
                let shift = r.random_range(-100.0..100.0);
                let data = (0..20 * 30).map(|_| shift + scale * r.random_range(-1.0..1.0)).collect();
                CCGram::new(Matrix::from_vec(20, 30, data).unwrap(), 45.0)
            })
            .collect();
        let (out, _) = znormalize_fold(&fold).unwrap();
        let all: Vec<f64> = out.iter().flat_map(|c| c.values.as_slice().to_vec()).collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let std = (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
    }
    assert!(znormalize_fold(&[CCGram::new(Matrix::filled(2, 2, 4.0), 45.0)]).is_err());
}

#[test]
fn resize_to_square() {
    let x = ramp(20, 239).values;
    let y = resize_nearest(&x, 239, 239);
    assert_eq!(y.shape(), (239, 239));
    let mut mult = vec![0usize; 20];
    for r in 0..239 {
        let src = (0..20).find(|&s| x.row(s) == y.row(r)).expect("row comes from the input");
        mult[src] += 1;
    }
    let (lo, hi) = (mult.iter().min().unwrap(), mult.iter().max().unwrap());
    assert!(hi - lo <= 1);
    assert_eq!(mult.iter().sum::<usize>(), 239);
}

#[test]
fn masks_survive_resize_as_whole_rows() {
    let x = ramp(20, 239);
    let prep = ViewPrep::default();
    let policy = MaskPolicy { phi: 2, q: 0, fill_value: 0.0 };
    for seed in 0..50 {
        let (masked, recs) = angle_mask(&x, &policy, &mut rng::seeded(seed));
        let out = prep.finish(&masked.values);
        let zero_rows = (0..239).filter(|&r| out.row(r).iter().all(|&v| v == 0.0)).count();
        let masked_src: usize = (0..20).filter(|&r| recs.iter().any(|m| m.range().contains(&r))).count();
        let expected: usize = (0..239).filter(|&r| recs.iter().any(|m| m.range().contains(&(r * 20 / 239)))).count();
        assert_eq!(zero_rows, expected);
        assert!(zero_rows >= masked_src * 11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn masks_in_bounds_and_local(
        rows in 1usize..30,
        cols in 1usize..60,
        phi in 0usize..8,
        q in 0usize..12,
        seed in any::<u64>(),
    ) {
        let x = ramp(rows, cols);
        let policy = MaskPolicy { phi, q, fill_value: 0.0 };
        let (y, recs) = cepstral_mask(&x, &policy, &mut rng::seeded(seed));
        prop_assert_eq!(recs.len(), phi + q);
        prop_assert!(in_bounds(&recs, rows, cols, &policy));
        prop_assert_eq!(changed(&x.values, &y.values), mask_cells(&recs, rows, cols));
    }

    #[test]
    fn resize_is_index_map(rows in 1usize..25, cols in 1usize..25, tr in 1usize..50, tc in 1usize..50) {
        let x = ramp(rows, cols).values;
        let y = resize_nearest(&x, tr, tc);
        for r in 0..tr {
            for c in 0..tc {
                prop_assert_eq!(y.get(r, c), x.get(r * rows / tr, c * cols / tc));
            }
        }
    }
}
