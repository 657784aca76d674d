mod support;

use coastedge::edgedetect::{canny, CannyParams};
use coastedge::filter::{convolve2d, Kernel};
use coastedge::metrics::{psnr_from_rmse, rmse, ssim, uqi};
use coastedge::preprocess::{
    equalize_histogram, gaussian_blur, morphological_closing, scale_minmax,
};
use coastedge::raster::{Band, BandName, Dtype, EdgeKind, EdgeMap, Grid, NpyArray, ValueKind};
use proptest::prelude::*;
use support::{max_abs_diff, oracle_convolve};

fn grid_strategy(max_side: usize, max_value: u32) -> impl Strategy<Value = Grid> {
    (3..=max_side, 3..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(0..=max_value, w * h)
            .prop_map(move |v| Grid::new(w, h, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn band(grid: Grid, kind: ValueKind) -> Band {
    Band::new(BandName::Green, kind, grid).unwrap()
}

fn edge_pair(max_side: usize) -> impl Strategy<Value = (EdgeMap, EdgeMap)> {
    (11..=max_side, 11..=max_side).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        )
            .prop_map(move |(a, b)| {
                (
                    EdgeMap::new(w, h, EdgeKind::Magnitude, a).unwrap(),
                    EdgeMap::new(w, h, EdgeKind::Magnitude, b).unwrap(),
                )
            })
    })
}

/// Label-like image: two levels split by a random step, rotated or not.
fn step_image() -> impl Strategy<Value = Grid> {
    (8usize..24, 8usize..24, 0.2f64..0.8, 0u32..100, 155u32..256).prop_map(
        |(w, h, split, lo, hi)| {
            let cut = ((w as f64) * split) as usize;
            Grid::from_fn(w, h, |x, _| if x < cut { lo as f64 } else { hi as f64 })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn npy_round_trip(shape in prop::collection::vec(1usize..5, 1..4), seed in any::<u64>()) {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n as u64)
            .map(|i| (seed.wrapping_mul(i + 1) >> 48) as f64)
            .collect();
        for dtype in [Dtype::U16, Dtype::F32, Dtype::F64] {
            let array = NpyArray::new(shape.clone(), dtype, data.clone()).unwrap();
            let bytes = array.to_bytes();
            prop_assert_eq!((bytes.len() - n * dtype.item_size()) % 64, 0);
            prop_assert_eq!(NpyArray::from_bytes(&bytes).unwrap(), array);
        }
    }

    #[test]
    fn scaling_is_monotone_and_spans(grid in grid_strategy(20, 65535)) {
        let scaled = scale_minmax(&band(grid.clone(), ValueKind::Raw16));
        let (lo, hi) = grid.min_max();
        let out = scaled.grid().data();
        if hi > lo {
            prop_assert_eq!(scaled.grid().min_max(), (0.0, 255.0));
        } else {
            prop_assert!(out.iter().all(|&v| v == 0.0));
        }
        let inp = grid.data();
        for i in 0..inp.len() {
            for j in 0..inp.len() {
                if inp[i] < inp[j] {
                    prop_assert!(out[i] <= out[j]);
                }
            }
        }
    }

    #[test]
    fn equalization_is_monotone_and_in_range(grid in grid_strategy(20, 255)) {
        let eq = equalize_histogram(&band(grid.clone(), ValueKind::Scaled8));
        let (inp, out) = (grid.data(), eq.grid().data());
        prop_assert!(out.iter().all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0));
        for i in 0..inp.len() {
            for j in 0..inp.len() {
                if inp[i] == inp[j] {
                    prop_assert_eq!(out[i], out[j]);
                } else if inp[i] < inp[j] {
                    prop_assert!(out[i] <= out[j]);
                }
            }
        }
        let (lo, hi) = grid.min_max();
        if hi > lo {
            prop_assert_eq!(eq.grid().min_max(), (0.0, 255.0));
        }
    }

    #[test]
    fn blur_commutes_with_transpose(grid in grid_strategy(16, 255), k in prop::sample::select(vec![3usize, 5])) {
        prop_assume!(grid.width() >= k && grid.height() >= k);
        let b = gaussian_blur(&band(grid.clone(), ValueKind::Scaled8), k, 1.0).unwrap();
        let bt = gaussian_blur(&band(grid.transpose(), ValueKind::Scaled8), k, 1.0).unwrap();
        prop_assert_eq!(b.grid().transpose(), bt.grid().clone());
        let (lo, hi) = grid.min_max();
        let (blo, bhi) = b.grid().min_max();
        prop_assert!(blo >= lo && bhi <= hi);
    }

    #[test]
    fn closing_is_extensive_idempotent_and_symmetric(grid in grid_strategy(16, 255)) {
        let b = band(grid.clone(), ValueKind::Scaled8);
        let closed = morphological_closing(&b, 3).unwrap();
        for (c, v) in closed.grid().data().iter().zip(grid.data()) {
            prop_assert!(c >= v);
        }
        let twice = morphological_closing(&closed, 3).unwrap();
        prop_assert_eq!(twice.grid(), closed.grid());
        let t = morphological_closing(&band(grid.transpose(), ValueKind::Scaled8), 3).unwrap();
        prop_assert_eq!(t.grid(), &closed.grid().transpose());
    }

    #[test]
    fn convolution_matches_nested_loops(
        grid in grid_strategy(14, 1000),
        k in prop::sample::select(vec![1usize, 3, 5]),
        seed in any::<u32>(),
    ) {
        prop_assume!(grid.width() >= k && grid.height() >= k);
        let weights = (0..k * k)
            .map(|i| ((seed as u64 * (i as u64 + 7)) % 97) as f64 / 13.0 - 3.5)
            .collect();
        let kernel = Kernel::new(k, weights).unwrap();
        let got = convolve2d(&grid, &kernel).unwrap();
        prop_assert!(max_abs_diff(&got, &oracle_convolve(&grid, &kernel)) < 1e-9);
    }

    #[test]
    fn canny_rotation_consistency(grid in step_image(), turns in 1usize..4) {
        let params = CannyParams::default();
        let mut rotated = grid.clone();
        for _ in 0..turns {
            rotated = rotated.rotate90();
        }
        let a = canny(&band(grid, ValueKind::Scaled8), &params).unwrap();
        let b = canny(&band(rotated, ValueKind::Scaled8), &params).unwrap();
        // same number of edge pixels up to a one-pixel shift of the line
        prop_assert_eq!(a.edge_count(), b.edge_count());
    }

    #[test]
    fn metrics_are_symmetric((a, b) in edge_pair(20)) {
        prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        let (s1, s2) = (ssim(&a, &b, 11, 1.5).unwrap(), ssim(&b, &a, 11, 1.5).unwrap());
        prop_assert!((s1 - s2).abs() < 1e-12);
        let (u1, u2) = (uqi(&a, &b, 8).unwrap(), uqi(&b, &a, 8).unwrap());
        prop_assert!((u1 - u2).abs() < 1e-12);
        prop_assert!((-1.0..=1.0 + 1e-12).contains(&s1));
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&u1));
    }

    #[test]
    fn identical_maps_score_perfectly((a, _) in edge_pair(20)) {
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        prop_assert!((ssim(&a, &a, 11, 1.5).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((uqi(&a, &a, 8).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_decreases_with_rmse(r1 in 0.001f64..255.0, r2 in 0.001f64..255.0) {
        prop_assume!(r1 < r2);
        prop_assert!(psnr_from_rmse(r1) > psnr_from_rmse(r2));
    }
}
