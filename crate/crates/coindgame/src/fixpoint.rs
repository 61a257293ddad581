//! Least/greatest fixed-point engine and the predicate library built on it.
//!
//! Inductive predicates (convergence, eventual stopping) are least fixed
//! points, iterated up from all-false; coinductive predicates (strong
//! convergence, the always modality, the 0,1-shape classifiers) are
//! greatest fixed points, iterated down from all-true. Computing a greatest
//! fixed point over the node set of an equation system is sound exactly
//! because the system presents a rational tree: the finitely many nodes
//! stand for all subtrees of the infinite unfolding, so stabilization on
//! the graph decides the predicate on the tree.
//!
//! Iteration is chaotic with a worklist keyed on reverse references and a
//! deterministic node order, so runs are reproducible.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::system::{Choice, EquationSystem, Head, Kind, Node, NodeId};
use crate::zero_one;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Least fixed point (inductive definition).
    Least,
    /// Greatest fixed point (coinductive definition).
    Greatest,
    /// Node-wise evaluation that is not itself a fixed point (used when a
    /// predicate such as local payoff optimality feeds the always modality).
    Direct,
}

/// A boolean labelling of all nodes of one system, with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    predicate: String,
    polarity: Polarity,
    iterations: usize,
    values: BTreeMap<NodeId, bool>,
}

impl Valuation {
    pub fn direct(predicate: impl Into<String>, values: BTreeMap<NodeId, bool>) -> Self {
        Valuation {
            predicate: predicate.into(),
            polarity: Polarity::Direct,
            iterations: 1,
            values,
        }
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Value at a node. Panics on ids outside the system the valuation was
    /// computed for.
    pub fn get(&self, id: &NodeId) -> bool {
        *self
            .values
            .get(id)
            .unwrap_or_else(|| panic!("valuation `{}` has no node `{id}`", self.predicate))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &bool)> {
        self.values.iter()
    }
}

/// A named monotone transfer rule: the truth of a node given the current
/// valuation of (at least) its children.
pub trait TransferRule {
    fn name(&self) -> String;

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixpointError {
    #[error("transfer rule `{rule}` is not monotone at `{node}` (flipping child `{child}` lowered the result)")]
    NonMonotoneDetected {
        rule: String,
        node: NodeId,
        child: NodeId,
    },
}

fn solve(sys: &EquationSystem, rule: &dyn TransferRule, polarity: Polarity) -> Valuation {
    let init = matches!(polarity, Polarity::Greatest);
    // Work on integer indices; node ids stay in a side table so the rule
    // closure can still answer by-id lookups.
    let ids: Vec<&NodeId> = sys.node_ids().collect();
    let index: BTreeMap<&NodeId, usize> = ids.iter().copied().zip(0..).collect();
    let n = ids.len();
    let mut values = vec![init; n];
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, id) in ids.iter().enumerate() {
        if let Some((down, right)) = sys.node(id).children() {
            parents[index[down]].push(i);
            parents[index[right]].push(i);
        }
    }

    let mut work: BTreeSet<usize> = (0..n).collect();
    let mut iterations = 0usize;
    while let Some(i) = work.pop_first() {
        iterations += 1;
        let new = rule.eval(sys, ids[i], &|m| values[index[m]]);
        if new != values[i] {
            values[i] = new;
            work.extend(parents[i].iter().copied());
        }
    }

    Valuation {
        predicate: rule.name(),
        polarity,
        iterations,
        values: ids
            .iter()
            .zip(&values)
            .map(|(id, v)| ((*id).clone(), *v))
            .collect(),
    }
}

/// Least fixed point of a monotone rule, from all-false upward.
pub fn lfp(sys: &EquationSystem, rule: &dyn TransferRule) -> Valuation {
    solve(sys, rule, Polarity::Least)
}

/// Greatest fixed point of a monotone rule, from all-true downward.
pub fn gfp(sys: &EquationSystem, rule: &dyn TransferRule) -> Valuation {
    solve(sys, rule, Polarity::Greatest)
}

/// Spot-checks monotonicity of `rule` around `values`: raising one child
/// from false to true must never lower a node's value.
pub fn probe_monotonicity(
    sys: &EquationSystem,
    rule: &dyn TransferRule,
    values: &BTreeMap<NodeId, bool>,
) -> Result<(), FixpointError> {
    for (id, node) in sys.equations() {
        let Some((down, right)) = node.children() else {
            continue;
        };
        if !rule.eval(sys, id, &|n| values[n]) {
            continue;
        }
        for child in [down, right] {
            if values[child] {
                continue;
            }
            let flipped = rule.eval(sys, id, &|n| {
                if n == child {
                    true
                } else {
                    values[n]
                }
            });
            if !flipped {
                return Err(FixpointError::NonMonotoneDetected {
                    rule: rule.name(),
                    node: id.clone(),
                    child: child.clone(),
                });
            }
        }
    }
    Ok(())
}

fn solve_checked(
    sys: &EquationSystem,
    rule: &dyn TransferRule,
    polarity: Polarity,
) -> Result<Valuation, FixpointError> {
    let init = matches!(polarity, Polarity::Greatest);
    let start: BTreeMap<NodeId, bool> = sys.node_ids().map(|id| (id.clone(), init)).collect();
    probe_monotonicity(sys, rule, &start)?;
    let result = solve(sys, rule, polarity);
    probe_monotonicity(sys, rule, &result.values)?;
    Ok(result)
}

/// [`lfp`] with the monotonicity probe at the initial and final valuations.
pub fn lfp_checked(sys: &EquationSystem, rule: &dyn TransferRule) -> Result<Valuation, FixpointError> {
    solve_checked(sys, rule, Polarity::Least)
}

/// [`gfp`] with the monotonicity probe at the initial and final valuations.
pub fn gfp_checked(sys: &EquationSystem, rule: &dyn TransferRule) -> Result<Valuation, FixpointError> {
    solve_checked(sys, rule, Polarity::Greatest)
}

fn assert_profile(sys: &EquationSystem, what: &str) {
    assert!(
        sys.kind() == Kind::Profile,
        "{what} is defined on profiles, got a {}",
        sys.kind()
    );
}

/// Convergence: an ending position, or a branch whose chosen child
/// converges. Inductive, so a chosen-move cycle never converges.
pub struct ConvergesRule;

impl TransferRule for ConvergesRule {
    fn name(&self) -> String {
        "converges".to_string()
    }

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
        let node = sys.node(id);
        match node {
            Node::Leaf(_) => true,
            Node::Branch { chosen, .. } => {
                let c = chosen.expect("profile branch carries a chosen move");
                val(node.child(c).expect("branch"))
            }
        }
    }
}

/// Strong convergence: convergent here, and both children strongly
/// convergent. Coinductive over the precomputed convergence valuation.
pub struct StronglyConvergesRule<'a> {
    pub converges: &'a Valuation,
}

impl TransferRule for StronglyConvergesRule<'_> {
    fn name(&self) -> String {
        "strongly_converges".to_string()
    }

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
        match sys.node(id) {
            Node::Leaf(_) => true,
            Node::Branch { down, right, .. } => {
                self.converges.get(id) && val(down) && val(right)
            }
        }
    }
}

/// The always modality: `base` here and at both children, forever.
pub struct AlwaysRule<'a> {
    pub base: &'a Valuation,
}

impl TransferRule for AlwaysRule<'_> {
    fn name(&self) -> String {
        format!("always({})", self.base.predicate())
    }

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
        let local = self.base.get(id);
        match sys.node(id) {
            Node::Leaf(_) => local,
            Node::Branch { down, right, .. } => local && val(down) && val(right),
        }
    }
}

pub fn converges_valuation(sys: &EquationSystem) -> Valuation {
    assert_profile(sys, "converges");
    lfp(sys, &ConvergesRule)
}

/// The chosen-move path from `node` reaches an ending position.
pub fn converges(sys: &EquationSystem, node: &NodeId) -> bool {
    converges_valuation(sys).get(node)
}

pub fn strongly_converges_valuation(sys: &EquationSystem) -> Valuation {
    assert_profile(sys, "strongly_converges");
    let conv = converges_valuation(sys);
    gfp(sys, &StronglyConvergesRule { converges: &conv })
}

/// Every subprofile below `node` (including itself) converges.
pub fn strongly_converges(sys: &EquationSystem, node: &NodeId) -> bool {
    strongly_converges_valuation(sys).get(node)
}

pub fn always_valuation(sys: &EquationSystem, base: &Valuation) -> Valuation {
    gfp(sys, &AlwaysRule { base })
}

/// `base` holds at every node reachable from `node`.
pub fn always(sys: &EquationSystem, base: &Valuation, node: &NodeId) -> bool {
    always_valuation(sys, base).get(node)
}

/// Shape classification of profiles over the 0,1-game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroOneClass {
    /// Root owned by A, stop leaf pays (0,1), continuation is S1.
    S0,
    /// Root owned by B, stop leaf pays (1,0), continuation is S0.
    S1,
    Neither,
}

/// One rule for the mutually coinductive S0/S1 pair, dispatching on the
/// owner. Alternation is enforced through the right child's owner.
pub struct ZeroOneRule;

impl TransferRule for ZeroOneRule {
    fn name(&self) -> String {
        "zero_one_shape".to_string()
    }

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
        let Node::Branch {
            head: Head::Agent(owner),
            down,
            right,
            ..
        } = sys.node(id)
        else {
            return false;
        };
        let (stop_payoff, next_owner) = if *owner == zero_one::agent_a() {
            (zero_one::f_01(), zero_one::agent_b())
        } else if *owner == zero_one::agent_b() {
            (zero_one::f_10(), zero_one::agent_a())
        } else {
            return false;
        };
        let stop_ok = sys.node(down).payoff() == Some(&stop_payoff);
        let next_ok = sys.node(right).owner() == Some(&next_owner);
        stop_ok && next_ok && val(right)
    }
}

pub fn classify_01(sys: &EquationSystem, node: &NodeId) -> ZeroOneClass {
    assert_profile(sys, "classify_01");
    let shape = gfp(sys, &ZeroOneRule);
    if !shape.get(node) {
        return ZeroOneClass::Neither;
    }
    match sys.node(node).owner() {
        Some(a) if *a == zero_one::agent_a() => ZeroOneClass::S0,
        Some(b) if *b == zero_one::agent_b() => ZeroOneClass::S1,
        _ => ZeroOneClass::Neither,
    }
}

/// Which agent keeps continuing and which one eventually stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcbesVariant {
    /// A continues and B eventually stops.
    AcBes,
    /// B continues and A eventually stops.
    BcAes,
}

/// Inductive eventual-stopping rule on 0,1-shaped profiles. The rule only
/// constrains branches whose stop child is an ending position; any other
/// shape satisfies it vacuously.
pub struct AcbesRule {
    pub variant: AcbesVariant,
}

impl TransferRule for AcbesRule {
    fn name(&self) -> String {
        match self.variant {
            AcbesVariant::AcBes => "acbes".to_string(),
            AcbesVariant::BcAes => "bcaes".to_string(),
        }
    }

    fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
        let Node::Branch {
            head: Head::Agent(owner),
            chosen,
            down,
            right,
        } = sys.node(id)
        else {
            return true;
        };
        let Some(stop_payoff) = sys.node(down).payoff() else {
            return true;
        };
        let chosen = chosen.expect("profile branch carries a chosen move");
        let (continuer, stopper) = (zero_one::agent_a(), zero_one::agent_b());
        let (continuer, stopper) = match self.variant {
            AcbesVariant::AcBes => (continuer, stopper),
            AcbesVariant::BcAes => (stopper, continuer),
        };
        let continuer_leaf = if continuer == zero_one::agent_a() {
            zero_one::f_01()
        } else {
            zero_one::f_10()
        };
        let stopper_leaf = if stopper == zero_one::agent_a() {
            zero_one::f_01()
        } else {
            zero_one::f_10()
        };
        if *owner == continuer {
            *stop_payoff == continuer_leaf && chosen == Choice::Right && val(right)
        } else if *owner == stopper {
            *stop_payoff == stopper_leaf && (chosen == Choice::Down || val(right))
        } else {
            false
        }
    }
}

pub fn acbes_valuation(sys: &EquationSystem, variant: AcbesVariant) -> Valuation {
    assert_profile(sys, "acbes");
    lfp(sys, &AcbesRule { variant })
}

/// Eventual stopping at one node.
pub fn acbes(sys: &EquationSystem, node: &NodeId, variant: AcbesVariant) -> bool {
    acbes_valuation(sys, variant).get(node)
}

/// Boxed form: eventual stopping at every reachable node (SAcBes/SBcAes).
pub fn acbes_boxed(sys: &EquationSystem, node: &NodeId, variant: AcbesVariant) -> bool {
    let base = acbes_valuation(sys, variant);
    always(sys, &base, node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Kind, RawSystem};
    use crate::zero_one;

    fn leaf_profile() -> EquationSystem {
        RawSystem::new("l", Kind::Profile, ["A", "B"], "x")
            .leaf("x", [("A", 0, 1), ("B", 0, 1)])
            .validate()
            .unwrap()
    }

    #[test]
    fn escalation_profile_does_not_converge() {
        let s = zero_one::escalation_profile();
        assert!(!converges(&s, s.root()));
    }

    #[test]
    fn leaf_profile_converges() {
        let s = leaf_profile();
        assert!(converges(&s, s.root()));
        assert!(strongly_converges(&s, s.root()));
    }

    #[test]
    fn canonical_profiles_converge_everywhere() {
        let p = zero_one::canonical_profiles();
        let conv = converges_valuation(&p.s10a);
        assert!(conv.iter().all(|(_, v)| *v));
        assert!(strongly_converges(&p.s10a, p.s10a.root()));
        assert!(converges(&p.s01a, p.s01a.root()));
    }

    #[test]
    fn convergent_root_with_divergent_sibling_is_not_strongly_convergent() {
        // Root stops immediately, but the unplayed right subtree loops.
        let s = RawSystem::new("s", Kind::Profile, ["A", "B"], "root")
            .branch_p("root", "A", Choice::Down, "ok", "loop_")
            .branch_p("loop_", "B", Choice::Right, "other", "loop_")
            .leaf("ok", [("A", 1, 1), ("B", 1, 1)])
            .leaf("other", [("A", 0, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        assert!(converges(&s, s.root()));
        assert!(!strongly_converges(&s, s.root()));
        // And the boxed formulation agrees.
        let conv = converges_valuation(&s);
        assert!(!always(&s, &conv, s.root()));
    }

    #[test]
    fn always_on_a_leaf_is_the_base_value() {
        let s = leaf_profile();
        let conv = converges_valuation(&s);
        assert_eq!(always(&s, &conv, s.root()), conv.get(s.root()));
    }

    #[test]
    fn always_converges_fails_on_escalation() {
        let s = zero_one::escalation_profile();
        let conv = converges_valuation(&s);
        assert!(!always(&s, &conv, s.root()));
    }

    #[test]
    fn classify_canonical_profiles() {
        let p = zero_one::canonical_profiles();
        assert_eq!(classify_01(&p.s10a, p.s10a.root()), ZeroOneClass::S0);
        assert_eq!(classify_01(&p.s01a, p.s01a.root()), ZeroOneClass::S0);
        assert_eq!(classify_01(&p.s10b, p.s10b.root()), ZeroOneClass::S1);
        assert_eq!(classify_01(&p.s01b, p.s01b.root()), ZeroOneClass::S1);
        let l = leaf_profile();
        assert_eq!(classify_01(&l, l.root()), ZeroOneClass::Neither);
    }

    #[test]
    fn wrong_stop_payoff_breaks_the_01_shape() {
        let s = RawSystem::new("s", Kind::Profile, ["A", "B"], "a")
            .branch_p("a", "A", Choice::Right, "bad", "b")
            .branch_p("b", "B", Choice::Down, "l10", "a")
            .leaf("bad", [("A", 2, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        assert_eq!(classify_01(&s, s.root()), ZeroOneClass::Neither);
    }

    #[test]
    fn owner_alternation_is_required() {
        // A-over-A cycle with the right stop leaves is still not 0,1-shaped.
        let s = RawSystem::new("s", Kind::Profile, ["A", "B"], "a0")
            .branch_p("a0", "A", Choice::Right, "l01", "a1")
            .branch_p("a1", "A", Choice::Right, "l01", "a0")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .validate()
            .unwrap();
        assert_eq!(classify_01(&s, s.root()), ZeroOneClass::Neither);
    }

    #[test]
    fn acbes_on_canonical_profiles() {
        let p = zero_one::canonical_profiles();
        assert!(acbes_boxed(&p.s10a, p.s10a.root(), AcbesVariant::AcBes));
        assert!(acbes_boxed(&p.s10b, p.s10b.root(), AcbesVariant::AcBes));
        assert!(acbes_boxed(&p.s01a, p.s01a.root(), AcbesVariant::BcAes));
        assert!(acbes_boxed(&p.s01b, p.s01b.root(), AcbesVariant::BcAes));
        // The all-continue profile never stops.
        let s = zero_one::escalation_profile();
        assert!(!acbes(&s, s.root(), AcbesVariant::AcBes));
        assert!(!acbes(&s, s.root(), AcbesVariant::BcAes));
    }

    #[test]
    fn acbes_is_vacuous_on_leaves() {
        let l = leaf_profile();
        assert!(acbes(&l, l.root(), AcbesVariant::AcBes));
    }

    #[test]
    fn worklist_needs_at_most_node_count_rounds() {
        let p = zero_one::canonical_profiles().s10a;
        let v = converges_valuation(&p);
        assert!(v.iterations() <= p.len() * p.len() + p.len());
        assert_eq!(v.polarity(), Polarity::Least);
    }

    /// A rule that negates its right child: not monotone.
    struct NegatingRule;

    impl TransferRule for NegatingRule {
        fn name(&self) -> String {
            "negation".to_string()
        }

        fn eval(&self, sys: &EquationSystem, id: &NodeId, val: &dyn Fn(&NodeId) -> bool) -> bool {
            match sys.node(id) {
                Node::Leaf(_) => true,
                Node::Branch { right, .. } => !val(right),
            }
        }
    }

    #[test]
    fn monotonicity_probe_catches_negation() {
        let p = zero_one::canonical_profiles().s10a;
        assert!(matches!(
            lfp_checked(&p, &NegatingRule),
            Err(FixpointError::NonMonotoneDetected { .. })
        ));
        assert!(lfp_checked(&p, &ConvergesRule).is_ok());
        let conv = converges_valuation(&p);
        assert!(gfp_checked(&p, &AlwaysRule { base: &conv }).is_ok());
    }

    #[test]
    fn gfp_of_constant_true_is_all_true() {
        struct ConstTrue;
        impl TransferRule for ConstTrue {
            fn name(&self) -> String {
                "true".to_string()
            }
            fn eval(&self, _: &EquationSystem, _: &NodeId, _: &dyn Fn(&NodeId) -> bool) -> bool {
                true
            }
        }
        let p = zero_one::canonical_profiles().s10a;
        let v = gfp(&p, &ConstTrue);
        assert!(v.iter().all(|(_, b)| *b));
    }
}
