//! Seeded random generation of trees, sets, and Haar systems.
//!
//! Everything here is deterministic in the seed (ChaCha8 streams), so the
//! verify suites and the CLI reproduce byte-identical results for identical
//! parameters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::{ExactScalar, Rational};
use crate::haar::{DyadicInterval, DyadicSet, HaarSystem};
use crate::martingale::{FiltrationTree, LeafSet, TreeNode};
use crate::tensor::DyadicSet2D;

/// The named generator recorded in experiment output.
pub const GENERATOR_NAME: &str = "chacha8";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random filtration of depth at most `max_depth`: every split draws 2 or 3
/// children with small integer weights, so each split introduces
/// denominators at most 15. Leaves get likelier with depth.
pub fn random_tree(rng: &mut ChaCha8Rng, max_depth: usize) -> FiltrationTree {
    fn build(rng: &mut ChaCha8Rng, mass: Rational, depth: usize, max_depth: usize) -> TreeNode {
        let leaf_chance = match depth {
            0 => 0.0,
            1 => 0.15,
            2 => 0.3,
            _ => 0.45,
        };
        if depth == max_depth || rng.random::<f64>() < leaf_chance {
            return TreeNode::leaf(mass);
        }
        let arity = if rng.random_bool(0.7) { 2 } else { 3 };
        let weights: Vec<i64> = (0..arity).map(|_| rng.random_range(1..=5)).collect();
        let total: i64 = weights.iter().sum();
        let children = weights
            .into_iter()
            .map(|w| {
                let child_mass = &mass * &Rational::new(w, total).expect("total > 0");
                build(rng, child_mass, depth + 1, max_depth)
            })
            .collect();
        TreeNode::branch(mass, children)
    }
    let root = build(rng, Rational::one(), 0, max_depth.max(1));
    FiltrationTree::from_root(root).expect("generated trees satisfy the mass invariants")
}

/// Random nonempty leaf set.
pub fn random_leafset(rng: &mut ChaCha8Rng, tree: &FiltrationTree) -> LeafSet {
    loop {
        let positions: Vec<usize> =
            (0..tree.leaf_count()).filter(|_| rng.random_bool(0.5)).collect();
        if !positions.is_empty() {
            return LeafSet::from_positions(tree, &positions);
        }
    }
}

/// Random nonempty 1D dyadic set at the given resolution.
pub fn random_dyadic_set(rng: &mut ChaCha8Rng, resolution: u32) -> DyadicSet {
    loop {
        let cells: Vec<bool> = (0..1usize << resolution)
            .map(|_| rng.random_bool(0.5))
            .collect();
        if cells.iter().any(|&c| c) {
            return DyadicSet::new(resolution, cells).expect("cell count matches");
        }
    }
}

/// Random nonempty 2D dyadic set.
pub fn random_dyadic_set_2d(rng: &mut ChaCha8Rng, resolution: u32) -> DyadicSet2D {
    loop {
        let cells: Vec<bool> = (0..1usize << (2 * resolution))
            .map(|_| rng.random_bool(0.5))
            .collect();
        if cells.iter().any(|&c| c) {
            return DyadicSet2D::new(resolution, cells).expect("cell count matches");
        }
    }
}

/// Random Haar system of at most `max_len` distinct intervals of level
/// below the resolution.
pub fn random_haar_system(rng: &mut ChaCha8Rng, resolution: u32, max_len: usize) -> HaarSystem {
    let available: Vec<DyadicInterval> = HaarSystem::complete(resolution)
        .intervals()
        .to_vec();
    let cap = max_len.min(available.len());
    let len = rng.random_range(1..=cap);
    // Partial Fisher-Yates over the available intervals.
    let mut pool = available;
    for i in 0..len {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(len);
    HaarSystem::new(resolution, pool).expect("sampled intervals are distinct")
}

/// Random scalar with small numerators and denominators.
pub fn random_scalar(rng: &mut ChaCha8Rng) -> ExactScalar {
    let part = |rng: &mut ChaCha8Rng| {
        Rational::new(rng.random_range(-12i64..=12), rng.random_range(1i64..=9))
            .expect("positive denominator")
    };
    ExactScalar::new(part(rng), part(rng))
}

/// Random rational in (0, 1) with a small denominator.
pub fn random_unit_rational(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.random_range(2i64..=16);
    let num = rng.random_range(1..den);
    Rational::new(num, den).expect("den > 0")
}
