//! Hypervolume and rank-sum checks through the public API.

use gim_morl::metrics::{hypervolume, normalized_hypervolume, rank_sum_test, HypervolumeInput};
use proptest::prelude::*;

/// Counts the unit cells of the integer grid dominated by some point.
fn grid_area(points: &[[i64; 2]]) -> i64 {
    let mut area = 0;
    for i in 0..8 {
        for j in 0..8 {
            if points.iter().any(|p| p[0] > i && p[1] > j) {
                area += 1;
            }
        }
    }
    area
}

proptest! {
    #[test]
    fn matches_grid_count(raw in prop::collection::vec((0i64..8, 0i64..8), 1..8)) {
        let pts: Vec<[i64; 2]> = raw.iter().map(|&(a, b)| [a, b]).collect();
        let input = HypervolumeInput::new(&pts, [0, 0]).unwrap();
        prop_assert_eq!(hypervolume(&input), grid_area(&pts));
    }

    #[test]
    fn normalized_lies_in_unit_interval(raw in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..10)) {
        let pts: Vec<[f64; 2]> = raw.iter().map(|&(a, b)| [a, b]).collect();
        let input = HypervolumeInput::new(&pts, [0.0, 0.0]).unwrap();
        let n = normalized_hypervolume(&input, [4.0, 4.0]).unwrap();
        prop_assert!((0.0..=1.0).contains(&n));
    }
}

#[test]
fn points_below_reference_are_dropped() {
    let input = HypervolumeInput::new(&[[3.0, 3.0], [-1.0, 5.0]], [0.0, 0.0]).unwrap();
    assert_eq!(input.dropped(), 1);
    assert_eq!(hypervolume(&input), 9.0);
}

#[test]
fn rank_sum_separated_samples() {
    // U = 0, n = 3 + 3: z = (0 - 4.5 + 0.5) / sqrt(5.25)
    let p = rank_sum_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((p - 0.080_855_598_370_052_3).abs() < 1e-9, "{p}");
    let q = rank_sum_test(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!((p - q).abs() < 1e-12);
}

#[test]
fn rank_sum_rejects_empty() {
    assert!(rank_sum_test(&[], &[1.0]).is_err());
}
