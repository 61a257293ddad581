//! Bisimilarity on equation systems, computed by partition refinement.
//!
//! Two nodes are bisimilar when their infinite unfoldings are equal as
//! trees: leaves carry the same payoffs, branches agree on head (and chosen
//! move, for profiles) and have bisimilar children. On finite systems this
//! greatest fixed point is reached by refining a partition of the node set
//! until it stabilizes, which takes at most `|nodes|` rounds.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::system::{Choice, EquationSystem, Head, Kind, Node, NodeId, PayoffMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("kind mismatch: {left} vs {right}")]
    KindMismatch { left: Kind, right: Kind },
}

/// Initial splitting key: everything observable at a node without looking
/// at the children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Signature {
    Leaf(PayoffMap),
    Branch(Head, Option<Choice>),
}

fn signature(node: &Node) -> Signature {
    match node {
        Node::Leaf(p) => Signature::Leaf(p.clone()),
        Node::Branch { head, chosen, .. } => Signature::Branch(head.clone(), *chosen),
    }
}

/// Joint partition of the nodes of several systems into bisimilarity
/// classes. Returned maps are indexed like the input slice; block ids are
/// shared across systems.
fn refine(systems: &[&EquationSystem]) -> Vec<BTreeMap<NodeId, usize>> {
    // Moore-style refinement: split on local signature, then repeatedly on
    // (block, down-block, right-block) until the block count is stable.
    let mut blocks: Vec<BTreeMap<NodeId, usize>> = Vec::with_capacity(systems.len());
    {
        let mut by_sig: BTreeMap<Signature, usize> = BTreeMap::new();
        for sys in systems {
            let mut map = BTreeMap::new();
            for (id, node) in sys.equations() {
                let next = by_sig.len();
                let block = *by_sig.entry(signature(node)).or_insert(next);
                map.insert(id.clone(), block);
            }
            blocks.push(map);
        }
    }

    loop {
        let mut by_key: BTreeMap<(usize, Option<(usize, usize)>), usize> = BTreeMap::new();
        let mut next_blocks: Vec<BTreeMap<NodeId, usize>> = Vec::with_capacity(systems.len());
        let mut count_before = 0usize;
        for map in &blocks {
            for b in map.values() {
                count_before = count_before.max(b + 1);
            }
        }
        for (idx, sys) in systems.iter().enumerate() {
            let mut map = BTreeMap::new();
            for (id, node) in sys.equations() {
                let children = node
                    .children()
                    .map(|(d, r)| (blocks[idx][d], blocks[idx][r]));
                let key = (blocks[idx][id], children);
                let next = by_key.len();
                let block = *by_key.entry(key).or_insert(next);
                map.insert(id.clone(), block);
            }
            next_blocks.push(map);
        }
        let stable = by_key.len() == count_before;
        blocks = next_blocks;
        if stable {
            return blocks;
        }
    }
}

/// Bisimilarity classes of a single system.
pub fn classes(sys: &EquationSystem) -> BTreeMap<NodeId, usize> {
    refine(&[sys]).pop().expect("one partition per system")
}

/// Joint bisimilarity classes of two systems; block ids are shared, so
/// nodes of different systems compare by block equality.
pub(crate) fn joint_classes(
    left: &EquationSystem,
    right: &EquationSystem,
) -> (BTreeMap<NodeId, usize>, BTreeMap<NodeId, usize>) {
    let mut parts = refine(&[left, right]);
    let r = parts.pop().expect("two partitions");
    let l = parts.pop().expect("two partitions");
    (l, r)
}

/// True iff the unfoldings of `l` (in `left`) and `r` (in `right`) are
/// equal as infinite trees.
pub fn bisimilar(
    left: &EquationSystem,
    l: &NodeId,
    right: &EquationSystem,
    r: &NodeId,
) -> Result<bool, BisimError> {
    if left.kind() != right.kind() {
        return Err(BisimError::KindMismatch {
            left: left.kind(),
            right: right.kind(),
        });
    }
    let parts = refine(&[left, right]);
    Ok(parts[0][l] == parts[1][r])
}

/// Roots compared; convenience over [`bisimilar`].
pub fn bisimilar_roots(left: &EquationSystem, right: &EquationSystem) -> Result<bool, BisimError> {
    bisimilar(left, left.root(), right, right.root())
}

/// Subprofile test: true iff some node reachable from `sup` (in `supsys`)
/// is bisimilar to `sub` (in `subsys`). Because trees may be infinite, a
/// profile can be a strict subprofile of itself.
pub fn subprofile(
    subsys: &EquationSystem,
    sub: &NodeId,
    supsys: &EquationSystem,
    sup: &NodeId,
) -> Result<bool, BisimError> {
    if subsys.kind() != Kind::Profile || supsys.kind() != Kind::Profile {
        return Err(BisimError::KindMismatch {
            left: subsys.kind(),
            right: supsys.kind(),
        });
    }
    let parts = refine(&[subsys, supsys]);
    let target = parts[0][sub];
    Ok(supsys
        .reachable(sup)
        .iter()
        .any(|n| parts[1][n] == target))
}

/// Quotient of the part of `sys` reachable from its root by bisimilarity.
/// Each class is represented by its least node id; the result is the
/// smallest presentation of the same tree.
pub fn minimize(sys: &EquationSystem) -> EquationSystem {
    let classes = classes(sys);
    let reachable = sys.reachable(sys.root());

    let mut representative: BTreeMap<usize, NodeId> = BTreeMap::new();
    for id in &reachable {
        let block = classes[id];
        representative
            .entry(block)
            .and_modify(|rep| {
                if id < rep {
                    *rep = id.clone();
                }
            })
            .or_insert_with(|| id.clone());
    }
    let rep_of = |id: &NodeId| representative[&classes[id]].clone();

    let mut raw = crate::system::RawSystem {
        name: sys.name().to_string(),
        kind: sys.kind(),
        agents: sys.agents().clone(),
        equations: Vec::new(),
        root: rep_of(sys.root()),
    };
    let mut done: BTreeSet<NodeId> = BTreeSet::new();
    for id in &reachable {
        let rep = rep_of(id);
        if !done.insert(rep.clone()) {
            continue;
        }
        let body = match sys.node(id) {
            Node::Leaf(p) => crate::system::RawNode::Leaf(p.clone()),
            Node::Branch {
                head,
                chosen,
                down,
                right,
            } => crate::system::RawNode::Branch {
                head: head.clone(),
                chosen: *chosen,
                down: rep_of(down),
                right: rep_of(right),
            },
        };
        raw.equations.push((rep, body));
    }
    raw.validate()
        .expect("quotient of a valid system stays valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Kind, RawSystem};
    use crate::zero_one;

    #[test]
    fn bisimilar_is_reflexive_on_canonical_profiles() {
        let p = zero_one::canonical_profiles();
        for sys in [&p.s10a, &p.s10b, &p.s01a, &p.s01b] {
            assert_eq!(bisimilar_roots(sys, sys), Ok(true));
        }
    }

    #[test]
    fn differently_owned_roots_are_not_bisimilar() {
        let p = zero_one::canonical_profiles();
        assert_eq!(bisimilar_roots(&p.s10a, &p.s10b), Ok(false));
    }

    #[test]
    fn double_unrolling_is_bisimilar_to_two_node_cycle() {
        let small = zero_one::build_01_game();
        let big = RawSystem::new("g01x2", Kind::Game, ["A", "B"], "a0")
            .branch("a0", "A", None, "l01", "b0")
            .branch("b0", "B", None, "l10", "a1")
            .branch("a1", "A", None, "l01", "b1")
            .branch("b1", "B", None, "l10", "a0")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        assert_eq!(bisimilar_roots(&small, &big), Ok(true));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let g = zero_one::build_01_game();
        let p = zero_one::canonical_profiles().s10a;
        assert!(bisimilar_roots(&g, &p).is_err());
    }

    #[test]
    fn infinite_profile_can_be_strict_subprofile_of_itself() {
        let p = zero_one::canonical_profiles();
        // s10b is reachable inside s10a and vice versa, yet the roots differ.
        let s10b_in_a = p.s10a.with_root(NodeId::new("s10b"));
        assert_eq!(
            subprofile(&s10b_in_a, s10b_in_a.root(), &p.s10a, p.s10a.root()),
            Ok(true)
        );
        assert_eq!(
            subprofile(&p.s10a, p.s10a.root(), &s10b_in_a, s10b_in_a.root()),
            Ok(true)
        );
        assert_eq!(bisimilar_roots(&p.s10a, &s10b_in_a), Ok(false));
    }

    #[test]
    fn subprofile_is_reflexive() {
        let p = zero_one::canonical_profiles().s10a;
        assert_eq!(subprofile(&p, p.root(), &p, p.root()), Ok(true));
    }

    #[test]
    fn foreign_leaf_is_not_a_subprofile() {
        let leaf = RawSystem::new("nines", Kind::Profile, ["A", "B"], "x")
            .leaf("x", [("A", 9, 1), ("B", 9, 1)])
            .validate()
            .unwrap();
        let p = zero_one::canonical_profiles().s10a;
        assert_eq!(subprofile(&leaf, leaf.root(), &p, p.root()), Ok(false));
    }

    #[test]
    fn minimize_collapses_the_double_unrolling() {
        let big = RawSystem::new("g01x2", Kind::Game, ["A", "B"], "a0")
            .branch("a0", "A", None, "l01", "b0")
            .branch("b0", "B", None, "l10", "a1")
            .branch("a1", "A", None, "l01", "b1")
            .branch("b1", "B", None, "l10", "a0")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let min = minimize(&big);
        assert_eq!(min.len(), 4);
        assert_eq!(bisimilar_roots(&min, &big), Ok(true));
    }
}
