mod common;

use std::collections::BTreeMap;

use common::{brute_force_labels, random_grid};
use ltlnav::semmap::{Cell, LabelGrid};
use ltlnav::Execution;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_thresholds(rng: &mut StdRng, classes: &[String], res: f64) -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    for c in classes {
        if rng.random_bool(0.8) {
            t.insert(c.clone(), rng.random_range(0.0..6.0) * res);
        }
    }
    t
}

fn assert_matches_oracle(seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let grid = random_grid(&mut rng, 32, n);
    let t = random_thresholds(&mut rng, grid.classes(), grid.resolution());
    let expected = brute_force_labels(&grid, &t);
    for exec in [Execution::Parallel, Execution::Sequential] {
        let lg = LabelGrid::build_with(&grid, &t, exec).unwrap();
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(lg.labels(grid.cell_at(i)), want, "seed {seed} cell {:?}", grid.cell_at(i));
        }
    }
}

#[test]
fn fifty_random_grids_match_brute_force() {
    for seed in 0..50 {
        assert_matches_oracle(seed);
    }
}

#[test]
fn single_chair_radius_two() {
    let mut g = ltlnav::SemanticGrid::new(9, 9, 0.5, vec!["chair".into()], ltlnav::CellClass::Free).unwrap();
    g.set(Cell::new(4, 4), ltlnav::CellClass::Object(0));
    let t = BTreeMap::from([("chair".to_string(), 1.0)]);
    let lg = LabelGrid::build(&g, &t).unwrap();
    let want = brute_force_labels(&g, &t);
    let near = want.iter().filter(|l| !l.is_empty()).count();
    // lattice points within radius 2: 13
    assert_eq!(near, 13);
    for (i, w) in want.iter().enumerate() {
        assert_eq!(lg.labels(g.cell_at(i)), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_transform_matches_oracle(seed in any::<u64>()) {
        assert_matches_oracle(seed);
    }

    #[test]
    fn larger_radius_never_removes(seed in any::<u64>(), grow in 0.0f64..3.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 20, 3);
        let t = random_thresholds(&mut rng, grid.classes(), grid.resolution());
        let mut bigger = t.clone();
        for c in grid.classes() {
            let r = t.get(c).copied().unwrap_or(1.5 * grid.resolution());
            bigger.insert(c.clone(), r + grow * grid.resolution());
        }
        let small = LabelGrid::build(&grid, &t).unwrap();
        let large = LabelGrid::build(&grid, &bigger).unwrap();
        for i in 0..grid.len() {
            let c = grid.cell_at(i);
            prop_assert!(small.labels(c).is_subset(large.labels(c)));
        }
    }

    #[test]
    fn word_of_path_is_per_cell_lookup(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 16, 2);
        let t = BTreeMap::new();
        let lg = LabelGrid::build(&grid, &t).unwrap();
        let oracle = brute_force_labels(&grid, &t);
        let path: Vec<Cell> = (0..rng.random_range(0..6))
            .map(|_| Cell::new(rng.random_range(0..grid.width()), rng.random_range(0..grid.height())))
            .collect();
        let word = lg.word_of_path(&path).unwrap();
        prop_assert_eq!(word.len(), path.len());
        for (l, c) in word.iter().zip(&path) {
            prop_assert_eq!(l, &oracle[grid.index(*c)]);
        }
    }
}
