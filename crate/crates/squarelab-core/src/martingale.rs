//! Finite atom-based filtrations, conditional expectations, martingale
//! differences, and the martingale square function of indicator sets.
//!
//! A filtration is a rooted tree whose nodes carry positive rational masses;
//! each node's mass equals the sum of its children's masses and the root has
//! mass one. Leaves are padded to a common depth by unary chains, which
//! contribute zero martingale differences.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::bigint::BigUint;
use num::traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};

/// Builder / file representation of a filtration node.
///
/// JSON form: `{"mass": "p/q", "children": [...]}` with leaves carrying
/// `"leaf_id"` instead of children.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeNode {
    pub mass: Rational,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_id: Option<u64>,
}

impl TreeNode {
    pub fn leaf(mass: Rational) -> Self {
        TreeNode {
            mass,
            children: Vec::new(),
            leaf_id: None,
        }
    }

    pub fn branch(mass: Rational, children: Vec<TreeNode>) -> Self {
        TreeNode {
            mass,
            children,
            leaf_id: None,
        }
    }
}

/// One atom of a level: a contiguous run of leaves (in depth-first order)
/// together with its probability mass.
#[derive(Clone, Debug)]
pub struct Atom {
    pub start: usize,
    pub end: usize,
    pub mass: Rational,
}

/// Compiled finite filtration: levels 0 (root) through `depth` (leaves),
/// all leaves at the same depth. Immutable after construction.
#[derive(Clone, Debug)]
pub struct FiltrationTree {
    depth: usize,
    leaf_masses: Vec<Rational>,
    /// leaf_id of each leaf position (depth-first order).
    leaf_ids: Vec<u64>,
    /// leaf position by leaf_id.
    position_of_id: Vec<usize>,
    /// levels[n] partitions the leaves into atoms of F_n.
    levels: Vec<Vec<Atom>>,
}

impl FiltrationTree {
    pub fn from_root(root: TreeNode) -> Result<Self> {
        if root.mass != Rational::one() {
            return Err(Error::InvalidTree(format!(
                "root mass must be 1/1, got {}",
                root.mass
            )));
        }
        validate(&root)?;
        let depth = max_depth(&root);

        // Collect leaves in depth-first order; remember the depth at which
        // each original leaf sits so unary padding can be applied.
        let mut leaves: Vec<(Rational, Option<u64>, usize)> = Vec::new();
        collect_leaves(&root, 0, &mut leaves);

        let leaf_count = leaves.len();
        let leaf_masses: Vec<Rational> = leaves.iter().map(|(m, _, _)| m.clone()).collect();
        let explicit: Vec<Option<u64>> = leaves.iter().map(|(_, id, _)| *id).collect();
        let leaf_ids = assign_leaf_ids(&explicit)?;
        let mut position_of_id = vec![0usize; leaf_count];
        for (pos, &id) in leaf_ids.iter().enumerate() {
            position_of_id[id as usize] = pos;
        }

        // Build each level's atoms. A node at depth d below which a leaf was
        // collected covers a contiguous leaf range; original leaves shallower
        // than a level act as their own (padded) atom.
        let mut levels: Vec<Vec<Atom>> = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let mut atoms = Vec::new();
            let mut cursor = 0usize;
            atoms_at_level(&root, 0, n, &mut cursor, &mut atoms);
            debug_assert_eq!(cursor, leaf_count);
            levels.push(atoms);
        }

        Ok(FiltrationTree {
            depth,
            leaf_masses,
            leaf_ids,
            position_of_id,
            levels,
        })
    }

    /// The dyadic model: equal-split binary tree of the given depth, leaf
    /// masses 2^-depth. Leaf ids follow left-to-right order, so leaf i is
    /// the dyadic cell [i 2^-depth, (i+1) 2^-depth).
    pub fn equal_split_binary(depth: u32) -> Self {
        fn build(level: u32, depth: u32) -> TreeNode {
            let mass = Rational::pow2(-(level as i64));
            if level == depth {
                TreeNode::leaf(mass)
            } else {
                TreeNode::branch(mass, vec![build(level + 1, depth), build(level + 1, depth)])
            }
        }
        FiltrationTree::from_root(build(0, depth)).expect("equal-split tree is always valid")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_masses.len()
    }

    pub fn leaf_mass(&self, position: usize) -> &Rational {
        &self.leaf_masses[position]
    }

    pub fn leaf_ids(&self) -> &[u64] {
        &self.leaf_ids
    }

    pub fn atoms(&self, level: usize) -> &[Atom] {
        &self.levels[level]
    }

    pub fn indicator(&self, set: &LeafSet) -> StepFunction {
        StepFunction {
            values: (0..self.leaf_count())
                .map(|i| {
                    if set.members[i] {
                        ExactScalar::one()
                    } else {
                        ExactScalar::zero()
                    }
                })
                .collect(),
        }
    }

    pub fn pv(&self, set: &LeafSet) -> Rational {
        let mut total = Rational::zero();
        for (i, member) in set.members.iter().enumerate() {
            if *member {
                total += &self.leaf_masses[i];
            }
        }
        total
    }

    /// E(f | F_n): on each level-n atom, the mass-weighted average of f.
    pub fn conditional_expectation(&self, f: &StepFunction, n: usize) -> Result<StepFunction> {
        if n > self.depth {
            return Err(Error::LevelOutOfRange {
                level: n,
                depth: self.depth,
            });
        }
        let mut values = vec![ExactScalar::zero(); self.leaf_count()];
        for atom in &self.levels[n] {
            let mut sum = ExactScalar::zero();
            for i in atom.start..atom.end {
                sum += &f.values[i].scale(&self.leaf_masses[i]);
            }
            let avg = sum.scale(&atom.mass.recip()?);
            for value in values.iter_mut().take(atom.end).skip(atom.start) {
                *value = avg.clone();
            }
        }
        Ok(StepFunction { values })
    }

    /// E f = sum of leaf mass times value.
    pub fn expectation(&self, f: &StepFunction) -> ExactScalar {
        let mut sum = ExactScalar::zero();
        for (i, v) in f.values.iter().enumerate() {
            sum += &v.scale(&self.leaf_masses[i]);
        }
        sum
    }

    /// E 1_V f.
    pub fn expectation_over(&self, set: &LeafSet, f: &StepFunction) -> ExactScalar {
        let mut sum = ExactScalar::zero();
        for (i, v) in f.values.iter().enumerate() {
            if set.members[i] {
                sum += &v.scale(&self.leaf_masses[i]);
            }
        }
        sum
    }

    /// True when f takes a single value on every level-n atom.
    pub fn is_level_measurable(&self, f: &StepFunction, n: usize) -> bool {
        if n > self.depth {
            return false;
        }
        self.levels[n].iter().all(|atom| {
            let first = &f.values[atom.start];
            (atom.start..atom.end).all(|i| &f.values[i] == first)
        })
    }

    /// Martingale differences of 1_V. With `include_root`, d_0 = f_0
    /// (convention f_-1 = 0) so the differences telescope to 1_V exactly;
    /// without it, the n = 0 term is omitted.
    pub fn differences(&self, set: &LeafSet, include_root: bool) -> Vec<StepFunction> {
        let indicator = self.indicator(set);
        let mut out = Vec::with_capacity(self.depth + 1);
        let mut prev: Option<StepFunction> = None;
        for n in 0..=self.depth {
            let f_n = self
                .conditional_expectation(&indicator, n)
                .expect("level within depth");
            let d_n = match &prev {
                None => f_n.clone(),
                Some(f_prev) => f_n.sub(f_prev),
            };
            if n > 0 || include_root {
                out.push(d_n);
            }
            prev = Some(f_n);
        }
        out
    }

    /// (S 1_V)^2 = sum_n d_n^2, leafwise.
    pub fn square_function(&self, set: &LeafSet, include_root: bool) -> StepFunction {
        let mut values = vec![ExactScalar::zero(); self.leaf_count()];
        for d in self.differences(set, include_root) {
            for (i, v) in d.values.iter().enumerate() {
                values[i] += &v.square();
            }
        }
        StepFunction { values }
    }

    /// E 1_V (S 1_V)^2 together with P(V) and their ratio, the empirical
    /// lower-bound constant for this V.
    ///
    /// The differences are constant on the atoms of their level, so the
    /// energy is accumulated atomwise from one prefix-sum table of member
    /// masses; this avoids the leafwise step functions on hot search paths.
    /// `square_function` provides the independent leafwise route.
    pub fn local_energy(&self, set: &LeafSet, include_root: bool) -> Result<LocalEnergy> {
        let leaf_count = self.leaf_count();
        let mut prefix = Vec::with_capacity(leaf_count + 1);
        prefix.push(Rational::zero());
        for i in 0..leaf_count {
            let mut next = prefix[i].clone();
            if set.members[i] {
                next += &self.leaf_masses[i];
            }
            prefix.push(next);
        }
        let pv = prefix[leaf_count].clone();
        if pv.is_zero() {
            return Err(Error::EmptySet);
        }

        let member_mass = |atom: &Atom| &prefix[atom.end] - &prefix[atom.start];
        let mut energy = Rational::zero();
        // f_{n-1} per previous-level atom, scanned in tandem (atoms nest).
        let mut parent_values: Vec<(usize, Rational)> = Vec::new();
        for (n, atoms) in self.levels.iter().enumerate() {
            let mut values = Vec::with_capacity(atoms.len());
            let mut parent_cursor = 0usize;
            for atom in atoms {
                let f = member_mass(atom).checked_div(&atom.mass)?;
                let difference = if n == 0 {
                    if include_root {
                        Some(f.clone())
                    } else {
                        None
                    }
                } else {
                    while parent_values[parent_cursor].0 <= atom.start {
                        parent_cursor += 1;
                    }
                    Some(&f - &parent_values[parent_cursor].1)
                };
                if let Some(d) = difference {
                    if !d.is_zero() {
                        energy += &(&d.square() * &member_mass(atom));
                    }
                }
                values.push((atom.end, f));
            }
            parent_values = values;
        }
        let ratio = ExactScalar::from_rational(energy.checked_div(&pv)?);
        Ok(LocalEnergy {
            energy: ExactScalar::from_rational(energy),
            pv,
            ratio,
        })
    }
}

/// A measurable set V given as a union of leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafSet {
    members: Vec<bool>,
}

impl LeafSet {
    pub fn from_positions(tree: &FiltrationTree, positions: &[usize]) -> Self {
        let mut members = vec![false; tree.leaf_count()];
        for &p in positions {
            members[p] = true;
        }
        LeafSet { members }
    }

    pub fn from_leaf_ids(tree: &FiltrationTree, ids: &[u64]) -> Result<Self> {
        let mut members = vec![false; tree.leaf_count()];
        for &id in ids {
            let pos = *tree
                .position_of_id
                .get(id as usize)
                .ok_or_else(|| Error::Parse(format!("unknown leaf id {id}")))?;
            members[pos] = true;
        }
        Ok(LeafSet { members })
    }

    pub fn all(tree: &FiltrationTree) -> Self {
        LeafSet {
            members: vec![true; tree.leaf_count()],
        }
    }

    pub fn complement(&self) -> Self {
        LeafSet {
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    /// Parse `leaves=0,3,7` or `mask=0x89` (bit i of the mask selects
    /// leaf_id i).
    pub fn from_spec(tree: &FiltrationTree, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(list) = spec.strip_prefix("leaves=") {
            let ids = parse_index_list(list)?;
            LeafSet::from_leaf_ids(tree, &ids)
        } else if let Some(hex) = spec.strip_prefix("mask=") {
            let mask = parse_hex_mask(hex)?;
            let ids: Vec<u64> = (0..tree.leaf_count() as u64)
                .filter(|&i| mask.bit(i))
                .collect();
            if mask.bits() > tree.leaf_count() as u64 {
                return Err(Error::Parse(format!(
                    "mask selects leaves beyond the {} present",
                    tree.leaf_count()
                )));
            }
            LeafSet::from_leaf_ids(tree, &ids)
        } else {
            Err(Error::Parse(format!(
                "leaf set spec must start with leaves= or mask=, got {spec:?}"
            )))
        }
    }

    pub fn contains_position(&self, position: usize) -> bool {
        self.members[position]
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn member_positions(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

/// A function constant on leaves, i.e. F_depth-measurable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction {
    values: Vec<ExactScalar>,
}

impl StepFunction {
    pub fn constant(tree: &FiltrationTree, c: ExactScalar) -> Self {
        StepFunction {
            values: vec![c; tree.leaf_count()],
        }
    }

    pub fn from_values(values: Vec<ExactScalar>) -> Self {
        StepFunction { values }
    }

    pub fn values(&self) -> &[ExactScalar] {
        &self.values
    }

    pub fn value(&self, position: usize) -> &ExactScalar {
        &self.values[position]
    }

    pub fn sub(&self, rhs: &StepFunction) -> StepFunction {
        StepFunction {
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

/// Result of the local energy computation for one set V.
#[derive(Clone, Debug)]
pub struct LocalEnergy {
    pub energy: ExactScalar,
    pub pv: Rational,
    pub ratio: ExactScalar,
}

pub(crate) fn parse_index_list(list: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(
            u64::from_str(part)
                .map_err(|e| Error::Parse(format!("bad index {part:?}: {e}")))?,
        );
    }
    Ok(out)
}

pub(crate) fn parse_hex_mask(hex: &str) -> Result<BigUint> {
    let digits = hex
        .trim()
        .strip_prefix("0x")
        .or_else(|| hex.trim().strip_prefix("0X"))
        .unwrap_or(hex.trim());
    BigUint::parse_bytes(digits.as_bytes(), 16)
        .ok_or_else(|| Error::Parse(format!("bad hex mask {hex:?}")))
}

pub(crate) fn mask_to_hex(bits: &[bool]) -> String {
    let mut mask = BigUint::zero();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            mask.set_bit(i as u64, true);
        }
    }
    format!("{:#x}", mask)
}

fn validate(node: &TreeNode) -> Result<()> {
    if !node.mass.is_positive() {
        return Err(Error::InvalidTree(format!(
            "every atom needs positive mass, got {}",
            node.mass
        )));
    }
    if !node.children.is_empty() {
        let mut sum = Rational::zero();
        for child in &node.children {
            sum += &child.mass;
        }
        if sum != node.mass {
            return Err(Error::InvalidTree(format!(
                "children masses sum to {} but parent has {}",
                sum, node.mass
            )));
        }
        for child in &node.children {
            validate(child)?;
        }
    }
    Ok(())
}

fn max_depth(node: &TreeNode) -> usize {
    node.children
        .iter()
        .map(|c| 1 + max_depth(c))
        .max()
        .unwrap_or(0)
}

fn collect_leaves(node: &TreeNode, depth: usize, out: &mut Vec<(Rational, Option<u64>, usize)>) {
    if node.children.is_empty() {
        out.push((node.mass.clone(), node.leaf_id, depth));
    } else {
        for child in &node.children {
            collect_leaves(child, depth + 1, out);
        }
    }
}

fn assign_leaf_ids(explicit: &[Option<u64>]) -> Result<Vec<u64>> {
    let given = explicit.iter().filter(|id| id.is_some()).count();
    if given == 0 {
        return Ok((0..explicit.len() as u64).collect());
    }
    if given != explicit.len() {
        return Err(Error::InvalidTree(
            "either all leaves carry leaf_id or none do".into(),
        ));
    }
    let ids: Vec<u64> = explicit.iter().map(|id| id.unwrap()).collect();
    let mut seen = BTreeMap::new();
    for &id in &ids {
        if id as usize >= ids.len() {
            return Err(Error::InvalidTree(format!(
                "leaf_id {id} out of range for {} leaves",
                ids.len()
            )));
        }
        if seen.insert(id, ()).is_some() {
            return Err(Error::InvalidTree(format!("duplicate leaf_id {id}")));
        }
    }
    Ok(ids)
}

/// Atoms of level n: a node at depth n (or an original leaf shallower than
/// n, padded by its unary chain) covers one contiguous leaf range.
fn atoms_at_level(
    node: &TreeNode,
    depth: usize,
    target: usize,
    cursor: &mut usize,
    atoms: &mut Vec<Atom>,
) {
    if depth == target || node.children.is_empty() {
        let start = *cursor;
        *cursor += count_leaves(node);
        atoms.push(Atom {
            start,
            end: *cursor,
            mass: node.mass.clone(),
        });
    } else {
        for child in &node.children {
            atoms_at_level(child, depth + 1, target, cursor, atoms);
        }
    }
}

fn count_leaves(node: &TreeNode) -> usize {
    if node.children.is_empty() {
        1
    } else {
        node.children.iter().map(count_leaves).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn scalar(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_rational(rat(n, d))
    }

    /// Two equal leaves under the root: the running example.
    fn two_leaf_tree() -> FiltrationTree {
        FiltrationTree::equal_split_binary(1)
    }

    #[test]
    fn conditional_expectation_at_leaf_level_resolves_v() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[0]);
        let f = tree.indicator(&v);
        let fl = tree.conditional_expectation(&f, 1).unwrap();
        assert_eq!(fl, f);
    }

    #[test]
    fn conditional_expectation_at_root_is_mean() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[0]);
        let f = tree.indicator(&v);
        let f0 = tree.conditional_expectation(&f, 0).unwrap();
        assert_eq!(f0, StepFunction::constant(&tree, scalar(1, 2)));
    }

    #[test]
    fn conditional_expectation_of_constant() {
        let tree = FiltrationTree::equal_split_binary(3);
        let c = StepFunction::constant(&tree, scalar(7, 5));
        for n in 0..=3 {
            assert_eq!(tree.conditional_expectation(&c, n).unwrap(), c);
        }
    }

    #[test]
    fn conditional_expectation_level_out_of_range() {
        let tree = two_leaf_tree();
        let f = tree.indicator(&LeafSet::all(&tree));
        assert!(matches!(
            tree.conditional_expectation(&f, 2),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn differences_two_leaf_example() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[0]);
        let d = tree.differences(&v, true);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], StepFunction::constant(&tree, scalar(1, 2)));
        assert_eq!(
            d[1],
            StepFunction::from_values(vec![scalar(1, 2), scalar(-1, 2)])
        );
    }

    #[test]
    fn differences_of_full_set() {
        let tree = FiltrationTree::equal_split_binary(3);
        let v = LeafSet::all(&tree);
        let d = tree.differences(&v, true);
        assert_eq!(d[0], StepFunction::constant(&tree, ExactScalar::one()));
        for dn in &d[1..] {
            assert!(dn.is_zero());
        }
    }

    #[test]
    fn differences_telescope_to_indicator() {
        let tree = FiltrationTree::equal_split_binary(3);
        let v = LeafSet::from_positions(&tree, &[1, 4, 5]);
        let d = tree.differences(&v, true);
        let mut sum = StepFunction::constant(&tree, ExactScalar::zero());
        for dn in &d {
            sum = StepFunction::from_values(
                sum.values()
                    .iter()
                    .zip(dn.values())
                    .map(|(a, b)| a + b)
                    .collect(),
            );
        }
        assert_eq!(sum, tree.indicator(&v));
    }

    #[test]
    fn square_function_two_leaf_example() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[0]);
        let sq = tree.square_function(&v, true);
        assert_eq!(sq, StepFunction::constant(&tree, scalar(1, 2)));
    }

    #[test]
    fn square_function_full_set_is_one() {
        let tree = FiltrationTree::equal_split_binary(2);
        let sq = tree.square_function(&LeafSet::all(&tree), true);
        assert_eq!(sq, StepFunction::constant(&tree, ExactScalar::one()));
    }

    #[test]
    fn square_function_depth_two_first_cell() {
        // Dyadic [0,1) at depth 2, V = [0,1/4): S^2 = 3/8 on V.
        let tree = FiltrationTree::equal_split_binary(2);
        let v = LeafSet::from_positions(&tree, &[0]);
        let sq = tree.square_function(&v, true);
        assert_eq!(sq.value(0), &scalar(3, 8));
    }

    #[test]
    fn local_energy_two_leaf_example() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[0]);
        let le = tree.local_energy(&v, true).unwrap();
        assert_eq!(le.energy, scalar(1, 4));
        assert_eq!(le.pv, rat(1, 2));
        assert_eq!(le.ratio, scalar(1, 2));
    }

    #[test]
    fn local_energy_depth_two_first_cell() {
        let tree = FiltrationTree::equal_split_binary(2);
        let v = LeafSet::from_positions(&tree, &[0]);
        let le = tree.local_energy(&v, true).unwrap();
        assert_eq!(le.energy, scalar(3, 32));
        assert_eq!(le.ratio, scalar(3, 8));
    }

    #[test]
    fn local_energy_full_set_ratio_one() {
        let tree = FiltrationTree::equal_split_binary(3);
        let le = tree.local_energy(&LeafSet::all(&tree), true).unwrap();
        assert_eq!(le.ratio, ExactScalar::one());
    }

    #[test]
    fn local_energy_empty_set_rejected() {
        let tree = two_leaf_tree();
        let v = LeafSet::from_positions(&tree, &[]);
        assert!(matches!(
            tree.local_energy(&v, true),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn unary_padding_produces_zero_differences() {
        // Root -> [leaf mass 1/2, branch mass 1/2 -> two leaves 1/4].
        let root = TreeNode::branch(
            Rational::one(),
            vec![
                TreeNode::leaf(rat(1, 2)),
                TreeNode::branch(rat(1, 2), vec![TreeNode::leaf(rat(1, 4)), TreeNode::leaf(rat(1, 4))]),
            ],
        );
        let tree = FiltrationTree::from_root(root).unwrap();
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.leaf_count(), 3);
        // V = the shallow leaf; its padded chain must contribute no
        // difference at level 2.
        let v = LeafSet::from_positions(&tree, &[0]);
        let d = tree.differences(&v, true);
        assert!(d[2].value(0).is_zero());
        // Plancherel still holds.
        let le = tree.local_energy(&v, true).unwrap();
        assert_eq!(le.pv, rat(1, 2));
    }

    #[test]
    fn invalid_trees_rejected() {
        let bad_root_mass = TreeNode::leaf(rat(1, 2));
        assert!(FiltrationTree::from_root(bad_root_mass).is_err());

        let bad_sum = TreeNode::branch(
            Rational::one(),
            vec![TreeNode::leaf(rat(1, 2)), TreeNode::leaf(rat(1, 3))],
        );
        assert!(FiltrationTree::from_root(bad_sum).is_err());

        let bad_mass = TreeNode::branch(
            Rational::one(),
            vec![TreeNode::leaf(rat(3, 2)), TreeNode::leaf(rat(-1, 2))],
        );
        assert!(FiltrationTree::from_root(bad_mass).is_err());
    }

    #[test]
    fn leaf_set_specs() {
        let tree = FiltrationTree::equal_split_binary(2);
        let by_list = LeafSet::from_spec(&tree, "leaves=0,3").unwrap();
        let by_mask = LeafSet::from_spec(&tree, "mask=0x9").unwrap();
        assert_eq!(by_list, by_mask);
        assert!(LeafSet::from_spec(&tree, "mask=0x1F").is_err());
        assert!(LeafSet::from_spec(&tree, "cells=1").is_err());
    }

    #[test]
    fn tree_json_round_trip() {
        let root = TreeNode::branch(
            Rational::one(),
            vec![
                TreeNode {
                    mass: rat(1, 3),
                    children: vec![],
                    leaf_id: Some(1),
                },
                TreeNode {
                    mass: rat(2, 3),
                    children: vec![],
                    leaf_id: Some(0),
                },
            ],
        );
        let json = serde_json::to_string(&root).unwrap();
        let parsed: TreeNode = serde_json::from_str(&json).unwrap();
        let tree = FiltrationTree::from_root(parsed).unwrap();
        // leaf_id 0 is the second position.
        let v = LeafSet::from_leaf_ids(&tree, &[0]).unwrap();
        assert_eq!(tree.pv(&v), rat(2, 3));
    }

    #[test]
    fn local_energy_agrees_with_stepwise_route() {
        // The atomwise accumulation must match E 1_V (S 1_V)^2 computed
        // through the leafwise square function, on random trees.
        let mut rng = crate::gen::rng_from_seed(19);
        for _ in 0..25 {
            let tree = crate::gen::random_tree(&mut rng, 4);
            let v = crate::gen::random_leafset(&mut rng, &tree);
            for include_root in [true, false] {
                let fast = tree.local_energy(&v, include_root).unwrap();
                let sq = tree.square_function(&v, include_root);
                let slow = tree.expectation_over(&v, &sq);
                assert_eq!(fast.energy, slow);
                assert_eq!(fast.pv, tree.pv(&v));
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn martingale_property_of_differences() {
        let tree = FiltrationTree::equal_split_binary(3);
        let v = LeafSet::from_positions(&tree, &[0, 2, 5]);
        let d = tree.differences(&v, true);
        for n in 1..d.len() {
            let prev = tree.conditional_expectation(&d[n], n - 1).unwrap();
            assert!(prev.is_zero(), "E(d_{n} | F_{}) must vanish", n - 1);
        }
    }

    #[test]
    fn measurability_tags() {
        let tree = FiltrationTree::equal_split_binary(2);
        let v = LeafSet::from_positions(&tree, &[0, 1]);
        let f = tree.indicator(&v);
        let f1 = tree.conditional_expectation(&f, 1).unwrap();
        assert!(tree.is_level_measurable(&f1, 1));
        assert!(tree.is_level_measurable(&f1, 2));
        assert!(!tree.is_level_measurable(&f1, 0));
    }
}
