mod common;

use buddykit::imagekit::ImageTensor;
use buddykit::lossfns::best_buddy_loss;
use buddykit::patchcore::{
    build_database, build_pyramid, buddy_search, unfold, BuddyProblem, BuddySearchConfig, PatchConfig, SearchMode,
};
use buddykit::Error;
use proptest::prelude::*;

fn pair(h: usize, w: usize, seed: u64) -> (ImageTensor, ImageTensor) {
    let hr = common::random_image(h, w, 3, seed);
    let sr = common::jittered(&hr, 0.3, seed + 1000);
    (sr, hr)
}

#[test]
fn unfold_matches_naive_indexing() {
    let img = common::random_image(11, 8, 3, 2);
    for stride in [1, 2, 3] {
        let grid = unfold(&img, 3, stride).unwrap();
        let naive = common::naive_unfold(&img, 3, stride);
        assert_eq!(grid.len(), naive.len());
        for (i, p) in naive.iter().enumerate() {
            assert_eq!(grid.patch(i), &p[..]);
        }
    }
}

#[test]
fn database_lists_every_level_in_order() {
    let hr = common::random_image(24, 12, 1, 3);
    let pyr = build_pyramid(&hr).unwrap();
    let db = build_database(&pyr).unwrap();
    let naive: Vec<Vec<f64>> = pyr.iter().flat_map(|l| common::naive_unfold(l, 3, 1)).collect();
    assert_eq!(db.len(), naive.len());
    assert_eq!(db.len(), 22 * 10 + 10 * 4 + 4 * 1);
    for (i, p) in naive.iter().enumerate() {
        assert_eq!(db.candidate(i), &p[..]);
    }
    let last = db.provenance(db.len() - 1);
    assert_eq!((last.level, last.row, last.col), (4, 3, 0));
}

#[test]
fn both_modes_agree_with_exhaustive_reference() {
    for (k, &(h, w)) in [(12, 12), (24, 12), (12, 36), (24, 24)].iter().enumerate() {
        for (alpha, beta) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.5)] {
            let (sr, hr) = pair(h, w, k as u64);
            let pyr = build_pyramid(&hr).unwrap();
            let naive = common::naive_buddies(&sr, &pyr, alpha, beta);
            let problem = BuddyProblem::new(&sr, &hr).unwrap();
            for mode in [SearchMode::Brute, SearchMode::Accelerated] {
                let got = problem.search(&BuddySearchConfig::new(alpha, beta, mode)).unwrap();
                for (m, &(idx, obj)) in got.matches.iter().zip(&naive.picks) {
                    assert_eq!(m.buddy_index, idx, "{h}x{w} a{alpha} b{beta} {mode:?}");
                    assert!((m.objective - obj).abs() <= 1e-12 * (1.0 + obj));
                }
            }
        }
    }
}

#[test]
fn identical_images_have_zero_loss() {
    let hr = common::random_image(24, 24, 3, 5);
    let problem = BuddyProblem::new(&hr, &hr).unwrap();
    let a = problem.search(&BuddySearchConfig::default()).unwrap();
    assert_eq!(best_buddy_loss(&problem.queries, &a, &problem.db).unwrap(), 0.0);
    for m in &a.matches {
        assert_eq!(m.buddy_index, problem.db.colocated_index(m.query_index));
    }
}

#[test]
fn duplicated_patches_tie_break_to_lowest_index() {
    // every level of an all-zero image is exactly zero, so all candidates tie
    let hr = ImageTensor::filled(12, 12, 1, 0.0).unwrap();
    let sr = ImageTensor::filled(12, 12, 1, 0.6).unwrap();
    let problem = BuddyProblem::new(&sr, &hr).unwrap();
    for mode in [SearchMode::Brute, SearchMode::Accelerated] {
        let a = problem.search(&BuddySearchConfig::new(1.0, 1.0, mode)).unwrap();
        for m in &a.matches {
            assert_eq!(m.buddy_index, problem.db.colocated_index(m.query_index));
        }
    }
}

#[test]
fn rejects_inconsistent_inputs() {
    let (sr, hr) = pair(24, 24, 1);
    let small = common::random_image(12, 24, 3, 1);
    assert!(matches!(BuddyProblem::new(&small, &hr), Err(Error::Shape(_))));
    let odd = common::random_image(20, 20, 3, 1);
    assert!(matches!(BuddyProblem::new(&odd, &odd), Err(Error::NotDivisible { factor: 3, .. })));
    let sixes = common::random_image(18, 18, 3, 1);
    assert!(matches!(BuddyProblem::new(&sixes, &sixes), Err(Error::NotDivisible { factor: 4, .. })));

    let problem = BuddyProblem::new(&sr, &hr).unwrap();
    let other = BuddyProblem::new(&hr, &sr).unwrap();
    let err = buddy_search(&problem.queries, &problem.gts, &other.db, &BuddySearchConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Misaligned(_)));
    let bad = BuddySearchConfig::new(-1.0, 1.0, SearchMode::Brute);
    assert!(problem.search(&bad).unwrap_err().is_validation());
}

#[test]
fn custom_strides_keep_colocation() {
    let (sr, hr) = pair(24, 24, 8);
    let cfg = PatchConfig {
        patch_size: 3,
        query_stride: 6,
        candidate_stride: 2,
    };
    let problem = BuddyProblem::with_config(&sr, &hr, &cfg).unwrap();
    for q in 0..problem.gts.len() {
        assert_eq!(problem.gts.patch(q), problem.db.candidate(problem.db.colocated_index(q)));
    }
    let brute = problem.search(&BuddySearchConfig::new(1.0, 1.0, SearchMode::Brute)).unwrap();
    let fast = problem.search(&BuddySearchConfig::default()).unwrap();
    assert_eq!(brute.buddy_indices(), fast.buddy_indices());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn accelerated_equals_brute(seed in any::<u64>(), hm in 1usize..4, wm in 1usize..4, alpha in 0.0f64..3.0, beta in 0.0f64..3.0, amp in 0.0f64..1.0) {
        prop_assume!(alpha + beta > 1e-3);
        let hr = common::random_image(12 * hm, 12 * wm, 3, seed);
        let sr = common::jittered(&hr, amp, seed ^ 1);
        let problem = BuddyProblem::new(&sr, &hr).unwrap();
        let brute = problem.search(&BuddySearchConfig::new(alpha, beta, SearchMode::Brute)).unwrap();
        let fast = problem.search(&BuddySearchConfig::new(alpha, beta, SearchMode::Accelerated)).unwrap();
        prop_assert_eq!(brute, fast);
    }

    #[test]
    fn buddy_never_worse_than_ground_truth(seed in any::<u64>(), alpha in 0.0f64..3.0, beta in 0.01f64..3.0) {
        let (sr, hr) = pair(12, 24, seed);
        let problem = BuddyProblem::new(&sr, &hr).unwrap();
        let a = problem.search(&BuddySearchConfig::new(alpha, beta, SearchMode::Accelerated)).unwrap();
        for m in &a.matches {
            let anchor = beta * common::sq_dist(problem.gts.patch(m.query_index), problem.queries.patch(m.query_index));
            prop_assert!(m.objective <= anchor * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn zero_beta_loss_is_mae(seed in any::<u64>()) {
        let (sr, hr) = pair(24, 12, seed);
        let problem = BuddyProblem::new(&sr, &hr).unwrap();
        let a = problem.search(&BuddySearchConfig::new(1.0, 0.0, SearchMode::Accelerated)).unwrap();
        let bb = best_buddy_loss(&problem.queries, &a, &problem.db).unwrap();
        prop_assert!((bb - buddykit::imagekit::mae(&sr, &hr).unwrap()).abs() < 1e-12);
    }
}
