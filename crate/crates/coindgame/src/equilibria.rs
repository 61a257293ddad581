//! Payoff evaluation and equilibrium checking on profiles.
//!
//! The payoff of a profile follows the chosen moves; it is partial, and
//! partiality is represented in the result rather than as an error. On top
//! of it sit local payoff optimality ([`local_pe`]), subgame perfection
//! ([`is_spe`] — optimality at every reachable node), deviation-based Nash
//! checking ([`nash`]) with the underlying [`convertible`] relation, and
//! the finite-tree backward-induction pair [`is_bi`] / [`enumerate_bi`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::bisim;
use crate::fixpoint::{self, Valuation};
use crate::system::{
    AgentId, Choice, EquationSystem, Head, Kind, Node, NodeId, PayoffMap, Rational, RawNode,
    RawSystem, Tree,
};

/// Result of following the chosen moves from a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayoffResult {
    Defined(PayoffMap),
    /// The chosen-move path loops; `cycle` lists the nodes of the loop in
    /// play order.
    Undefined { cycle: Vec<NodeId> },
}

impl PayoffResult {
    pub fn defined(&self) -> Option<&PayoffMap> {
        match self {
            PayoffResult::Defined(p) => Some(p),
            PayoffResult::Undefined { .. } => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.defined().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriaError {
    #[error("kind mismatch: {left} vs {right}")]
    KindMismatch { left: Kind, right: Kind },
    #[error("payoff at the root is undefined: play loops through {}", cycle.iter().map(|n| n.name()).collect::<Vec<_>>().join(" -> "))]
    UndefinedRootPayoff { cycle: Vec<NodeId> },
    #[error("input is not a finite tree: cycle through {}", cycle.iter().map(|n| n.name()).collect::<Vec<_>>().join(" -> "))]
    NotFinite { cycle: Vec<NodeId> },
}

fn assert_profile(sys: &EquationSystem, what: &str) {
    assert!(
        sys.kind() == Kind::Profile,
        "{what} is defined on profiles, got a {}",
        sys.kind()
    );
}

/// Payoff results for every node of the system, memoized in one pass.
pub fn payoff_map(sys: &EquationSystem) -> BTreeMap<NodeId, PayoffResult> {
    assert_profile(sys, "payoff");
    let mut memo: BTreeMap<NodeId, PayoffResult> = BTreeMap::new();
    for start in sys.node_ids() {
        if memo.contains_key(start) {
            continue;
        }
        let mut path: Vec<NodeId> = Vec::new();
        let mut position: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut current = start.clone();
        let result = loop {
            if let Some(known) = memo.get(&current) {
                break known.clone();
            }
            if let Some(&i) = position.get(&current) {
                break PayoffResult::Undefined {
                    cycle: path[i..].to_vec(),
                };
            }
            let node = sys.node(&current);
            match node {
                Node::Leaf(p) => {
                    memo.insert(current.clone(), PayoffResult::Defined(p.clone()));
                    break PayoffResult::Defined(p.clone());
                }
                Node::Branch { chosen, .. } => {
                    position.insert(current.clone(), path.len());
                    path.push(current.clone());
                    let c = chosen.expect("profile branch carries a chosen move");
                    current = node.child(c).expect("branch").clone();
                }
            }
        };
        for id in path {
            memo.insert(id, result.clone());
        }
    }
    memo
}

/// Payoff of a single node.
pub fn payoff(sys: &EquationSystem, node: &NodeId) -> PayoffResult {
    payoff_map(sys)
        .remove(node)
        .unwrap_or_else(|| panic!("undefined node `{node}`"))
}

/// Local payoff optimality at every node, as a valuation usable with the
/// always modality. A node is optimal when it is strongly convergent and
/// its chosen move's payoff for the owner is at least the alternative's.
pub fn pe_valuation(sys: &EquationSystem) -> Valuation {
    assert_profile(sys, "local_pe");
    let strong = fixpoint::strongly_converges_valuation(sys);
    let payoffs = payoff_map(sys);
    let values = sys
        .node_ids()
        .map(|id| {
            let holds = match sys.node(id) {
                Node::Leaf(_) => true,
                Node::Branch {
                    head: Head::Agent(owner),
                    chosen,
                    down,
                    right,
                } => {
                    strong.get(id) && {
                        // Strong convergence makes both child payoffs defined.
                        let own = |child: &NodeId| {
                            payoffs[child]
                                .defined()
                                .expect("strongly convergent child has a defined payoff")
                                .get(owner)
                                .expect("payoff domain covers the owner")
                        };
                        match chosen.expect("profile branch carries a chosen move") {
                            Choice::Down => own(down) >= own(right),
                            Choice::Right => own(right) >= own(down),
                        }
                    }
                }
                Node::Branch {
                    head: Head::Move(_),
                    ..
                } => unreachable!("profiles have agent heads"),
            };
            (id.clone(), holds)
        })
        .collect();
    Valuation::direct("pe", values)
}

/// Local payoff optimality at one node.
pub fn local_pe(sys: &EquationSystem, node: &NodeId) -> bool {
    pe_valuation(sys).get(node)
}

/// Subgame perfection: local optimality at every reachable node.
pub fn is_spe(sys: &EquationSystem, node: &NodeId) -> bool {
    let pe = pe_valuation(sys);
    fixpoint::always(sys, &pe, node)
}

/// How a pair of nodes relates in the convertibility product graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairState {
    Bisimilar,
    Compatible,
    Incompatible,
}

/// The deviation relation for `agent`: true iff `r` is obtainable from `l`
/// by changing the chosen moves at finitely many positions owned by
/// `agent`, keeping everything else intact.
///
/// Decided over the product of reachable node pairs: pairs of bisimilar
/// nodes are the base; other pairs must agree on constructor, owner, and —
/// at nodes not owned by `agent` — the chosen move, and must lead back to
/// the base in finitely many steps (a least fixed point over the finite
/// pair graph).
pub fn convertible(
    lsys: &EquationSystem,
    l: &NodeId,
    rsys: &EquationSystem,
    r: &NodeId,
    agent: &AgentId,
) -> Result<bool, EquilibriaError> {
    if lsys.kind() != Kind::Profile || rsys.kind() != Kind::Profile {
        return Err(EquilibriaError::KindMismatch {
            left: lsys.kind(),
            right: rsys.kind(),
        });
    }
    let (lclasses, rclasses) = bisim::joint_classes(lsys, rsys);

    let mut states: BTreeMap<(NodeId, NodeId), PairState> = BTreeMap::new();
    let mut stack = vec![(l.clone(), r.clone())];
    while let Some(pair) = stack.pop() {
        if states.contains_key(&pair) {
            continue;
        }
        let (a, b) = &pair;
        if lclasses[a] == rclasses[b] {
            states.insert(pair, PairState::Bisimilar);
            continue;
        }
        let state = match (lsys.node(a), rsys.node(b)) {
            (
                Node::Branch {
                    head: ha,
                    chosen: ca,
                    down: da,
                    right: ra,
                },
                Node::Branch {
                    head: hb,
                    chosen: cb,
                    down: db,
                    right: rb,
                },
            ) if ha == hb => {
                let owner = ha.agent().expect("profiles have agent heads");
                if owner != agent && ca != cb {
                    PairState::Incompatible
                } else {
                    stack.push((da.clone(), db.clone()));
                    stack.push((ra.clone(), rb.clone()));
                    PairState::Compatible
                }
            }
            // Leaves with equal payoffs are bisimilar, so any leaf pair
            // left over here differs; branch/leaf pairs differ trivially.
            _ => PairState::Incompatible,
        };
        states.insert(pair, state);
    }

    // Least fixed point: a compatible pair derives once both child pairs do.
    let mut derivable: BTreeSet<(NodeId, NodeId)> = states
        .iter()
        .filter(|(_, s)| **s == PairState::Bisimilar)
        .map(|(p, _)| p.clone())
        .collect();
    loop {
        let mut changed = false;
        for (pair, state) in &states {
            if *state != PairState::Compatible || derivable.contains(pair) {
                continue;
            }
            let (a, b) = pair;
            let (da, ra) = lsys.node(a).children().expect("compatible pairs are branches");
            let (db, rb) = rsys.node(b).children().expect("compatible pairs are branches");
            if derivable.contains(&(da.clone(), db.clone()))
                && derivable.contains(&(ra.clone(), rb.clone()))
            {
                derivable.insert(pair.clone());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(derivable.contains(&(l.clone(), r.clone())))
}

/// Certificate that a profile is not a Nash equilibrium.
#[derive(Debug, Clone)]
pub struct DeviationWitness {
    pub agent: AgentId,
    /// Profile convertible from the original for `agent`, with a defined
    /// payoff improving on the original.
    pub deviant_profile: EquationSystem,
    /// The choice flips applied, in play order: only positions owned by
    /// `agent` along one improving path.
    pub flips: Vec<(NodeId, Choice)>,
    pub payoff_before: Rational,
    pub payoff_after: Rational,
}

#[derive(Debug, Clone)]
pub struct NashOutcome {
    pub is_nash: bool,
    pub witness: Option<DeviationWitness>,
}

/// Nash check by deviation search. For each agent the chosen moves of all
/// other agents are fixed and her own nodes are relaxed to both children;
/// the profile is Nash iff no ending position reachable under that
/// relaxation pays her more than the current payoff. Deviations whose play
/// never ends impose no constraint.
///
/// Requires a defined payoff at `node`.
pub fn nash(sys: &EquationSystem, node: &NodeId) -> Result<NashOutcome, EquilibriaError> {
    assert_profile(sys, "nash");
    let payoffs = payoff_map(sys);
    let root_payoff = match &payoffs[node] {
        PayoffResult::Defined(p) => p.clone(),
        PayoffResult::Undefined { cycle } => {
            return Err(EquilibriaError::UndefinedRootPayoff {
                cycle: cycle.clone(),
            })
        }
    };

    for agent in sys.agents() {
        let current = root_payoff.get(agent).expect("payoff domain covers agents");
        // Breadth-first search of the relaxed graph; parent pointers give a
        // shortest (hence flip-minimal along one path) improving deviation.
        let mut parent: BTreeMap<NodeId, (NodeId, Choice)> = BTreeMap::new();
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(node.clone());
        queue.push_back(node.clone());
        let mut improving: Option<NodeId> = None;
        'bfs: while let Some(id) = queue.pop_front() {
            let body = sys.node(&id);
            match body {
                Node::Leaf(p) => {
                    let value = p.get(agent).expect("payoff domain covers agents");
                    if value > current {
                        improving = Some(id);
                        break 'bfs;
                    }
                }
                Node::Branch { head, chosen, .. } => {
                    let moves: &[Choice] = if head.agent() == Some(agent) {
                        &Choice::BOTH
                    } else {
                        match chosen.expect("profile branch carries a chosen move") {
                            Choice::Down => &[Choice::Down],
                            Choice::Right => &[Choice::Right],
                        }
                    };
                    for &c in moves {
                        let child = body.child(c).expect("branch").clone();
                        if seen.insert(child.clone()) {
                            parent.insert(child.clone(), (id.clone(), c));
                            queue.push_back(child);
                        }
                    }
                }
            }
        }
        if let Some(leaf) = improving {
            let mut steps: Vec<(NodeId, Choice)> = Vec::new();
            let mut at = leaf.clone();
            while at != *node {
                let (from, c) = parent[&at].clone();
                steps.push((from.clone(), c));
                at = from;
            }
            steps.reverse();
            let (deviant, flips) = build_deviant(sys, &steps, &leaf, agent);
            let after = sys
                .node(&leaf)
                .payoff()
                .expect("improving node is a leaf")
                .get(agent)
                .expect("payoff domain covers agents");
            return Ok(NashOutcome {
                is_nash: false,
                witness: Some(DeviationWitness {
                    agent: agent.clone(),
                    deviant_profile: deviant,
                    flips,
                    payoff_before: current,
                    payoff_after: after,
                }),
            });
        }
    }
    Ok(NashOutcome {
        is_nash: true,
        witness: None,
    })
}

/// Builds the deviation profile realizing one improving path: fresh spine
/// nodes carry the (possibly flipped) choices along the path, everything
/// off the path keeps pointing into the original system.
fn build_deviant(
    sys: &EquationSystem,
    steps: &[(NodeId, Choice)],
    leaf: &NodeId,
    agent: &AgentId,
) -> (EquationSystem, Vec<(NodeId, Choice)>) {
    let taken: BTreeSet<&NodeId> = sys.node_ids().collect();
    let fresh = |i: usize, base: &NodeId| -> NodeId {
        let mut candidate = format!("dev{}_{}", i, base.name());
        while taken.contains(&NodeId::new(candidate.clone())) {
            candidate.push('\'');
        }
        NodeId::new(candidate)
    };

    let spine: Vec<NodeId> = steps
        .iter()
        .enumerate()
        .map(|(i, (id, _))| fresh(i, id))
        .collect();
    let mut raw = RawSystem {
        name: format!("{}_deviation", sys.name()),
        kind: Kind::Profile,
        agents: sys.agents().clone(),
        equations: sys
            .equations()
            .map(|(id, node)| {
                let body = match node {
                    Node::Leaf(p) => RawNode::Leaf(p.clone()),
                    Node::Branch {
                        head,
                        chosen,
                        down,
                        right,
                    } => RawNode::Branch {
                        head: head.clone(),
                        chosen: *chosen,
                        down: down.clone(),
                        right: right.clone(),
                    },
                };
                (id.clone(), body)
            })
            .collect(),
        root: spine.first().cloned().unwrap_or_else(|| leaf.clone()),
    };

    let mut flips = Vec::new();
    for (i, (id, choice)) in steps.iter().enumerate() {
        let node = sys.node(id);
        let (down, right) = node.children().expect("path steps are branches");
        let next = spine
            .get(i + 1)
            .cloned()
            .unwrap_or_else(|| leaf.clone());
        let (d, r) = match choice {
            Choice::Down => (next, right.clone()),
            Choice::Right => (down.clone(), next),
        };
        let head = Head::Agent(node.owner().expect("profiles have agent heads").clone());
        if node.owner() == Some(agent) && node.chosen() != Some(*choice) {
            flips.push((id.clone(), *choice));
        }
        raw.equations.push((
            spine[i].clone(),
            RawNode::Branch {
                head,
                chosen: Some(*choice),
                down: d,
                right: r,
            },
        ));
    }
    let deviant = raw
        .validate()
        .expect("deviation of a valid profile stays valid");
    (deviant, flips)
}

/// Cycle detection on the reachable part; `Ok` means finite tree below
/// `node` (sharing allowed, cycles not).
fn check_acyclic(sys: &EquationSystem, node: &NodeId) -> Result<(), EquilibriaError> {
    // Iterative three-color DFS returning the offending cycle.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        Active,
        Done,
    }
    let mut color: BTreeMap<NodeId, Color> = BTreeMap::new();
    let mut stack: Vec<(NodeId, bool)> = vec![(node.clone(), false)];
    let mut path: Vec<NodeId> = Vec::new();
    while let Some((id, exiting)) = stack.pop() {
        if exiting {
            color.insert(id.clone(), Color::Done);
            path.pop();
            continue;
        }
        match color.get(&id) {
            Some(Color::Done) => continue,
            Some(Color::Active) => {
                let start = path.iter().position(|n| n == &id).expect("on path");
                return Err(EquilibriaError::NotFinite {
                    cycle: path[start..].to_vec(),
                });
            }
            None => {}
        }
        color.insert(id.clone(), Color::Active);
        path.push(id.clone());
        stack.push((id.clone(), true));
        if let Some((down, right)) = sys.node(&id).children() {
            stack.push((right.clone(), false));
            stack.push((down.clone(), false));
        }
    }
    Ok(())
}

/// Backward-induction check for finite profiles: payoff optimality of the
/// chosen move at every node of the tree.
pub fn is_bi(sys: &EquationSystem, node: &NodeId) -> Result<bool, EquilibriaError> {
    assert_profile(sys, "is_bi");
    check_acyclic(sys, node)?;
    let payoffs = payoff_map(sys);
    let own = |child: &NodeId, owner: &AgentId| {
        payoffs[child]
            .defined()
            .expect("acyclic profiles have defined payoffs")
            .get(owner)
            .expect("payoff domain covers the owner")
    };
    Ok(sys.reachable(node).iter().all(|id| match sys.node(id) {
        Node::Leaf(_) => true,
        Node::Branch {
            head: Head::Agent(owner),
            chosen,
            down,
            right,
        } => match chosen.expect("profile branch carries a chosen move") {
            Choice::Down => own(down, owner) >= own(right, owner),
            Choice::Right => own(right, owner) >= own(down, owner),
        },
        Node::Branch {
            head: Head::Move(_),
            ..
        } => unreachable!("profiles have agent heads"),
    }))
}

/// All backward-induction profiles of a finite game, leaf to root. Ties
/// keep both choices, ordered Down before Right, so the result is the
/// complete (and deterministically ordered) equilibrium set.
pub fn enumerate_bi(sys: &EquationSystem) -> Result<Vec<EquationSystem>, EquilibriaError> {
    assert!(
        sys.kind() == Kind::Game,
        "enumerate_bi takes a game, got a {}",
        sys.kind()
    );
    check_acyclic(sys, sys.root())?;

    fn labelings(
        sys: &EquationSystem,
        id: &NodeId,
        memo: &mut BTreeMap<NodeId, Vec<(Tree, PayoffMap)>>,
    ) -> Vec<(Tree, PayoffMap)> {
        if let Some(done) = memo.get(id) {
            return done.clone();
        }
        let result = match sys.node(id) {
            Node::Leaf(p) => vec![(Tree::Leaf(p.clone()), p.clone())],
            Node::Branch {
                head, down, right, ..
            } => {
                let owner = head.agent().expect("games have agent heads").clone();
                let downs = labelings(sys, down, memo);
                let rights = labelings(sys, right, memo);
                let mut out = Vec::new();
                for (dt, dp) in &downs {
                    for (rt, rp) in &rights {
                        let dv = dp.get(&owner).expect("domain");
                        let rv = rp.get(&owner).expect("domain");
                        for choice in Choice::BOTH {
                            let optimal = match choice {
                                Choice::Down => dv >= rv,
                                Choice::Right => rv >= dv,
                            };
                            if optimal {
                                out.push((
                                    Tree::Branch {
                                        head: head.clone(),
                                        chosen: Some(choice),
                                        down: Box::new(dt.clone()),
                                        right: Box::new(rt.clone()),
                                    },
                                    match choice {
                                        Choice::Down => dp.clone(),
                                        Choice::Right => rp.clone(),
                                    },
                                ));
                            }
                        }
                    }
                }
                out
            }
        };
        memo.insert(id.clone(), result.clone());
        result
    }

    let mut memo = BTreeMap::new();
    let all = labelings(sys, sys.root(), &mut memo);
    Ok(all
        .into_iter()
        .enumerate()
        .map(|(i, (tree, _))| {
            tree_to_profile(&tree, sys, &format!("{}_bi{}", sys.name(), i))
        })
        .collect())
}

/// Converts a finite cut-free profile tree to a system with path-derived
/// node names (`n`, `nd`, `nr`, `ndd`, ...).
pub fn tree_to_profile(tree: &Tree, origin: &EquationSystem, name: &str) -> EquationSystem {
    fn walk(tree: &Tree, path: String, eqs: &mut Vec<(NodeId, RawNode)>) {
        match tree {
            Tree::Leaf(p) => eqs.push((NodeId::new(path), RawNode::Leaf(p.clone()))),
            Tree::Branch {
                head,
                chosen,
                down,
                right,
            } => {
                let down_id = format!("{path}d");
                let right_id = format!("{path}r");
                eqs.push((
                    NodeId::new(path),
                    RawNode::Branch {
                        head: head.clone(),
                        chosen: *chosen,
                        down: NodeId::new(down_id.clone()),
                        right: NodeId::new(right_id.clone()),
                    },
                ));
                walk(down, down_id, eqs);
                walk(right, right_id, eqs);
            }
            Tree::Cut => panic!("tree_to_profile requires a cut-free tree"),
        }
    }
    let mut equations = Vec::new();
    walk(tree, "n".to_string(), &mut equations);
    RawSystem {
        name: name.to_string(),
        kind: Kind::Profile,
        agents: origin.agents().clone(),
        equations,
        root: NodeId::new("n"),
    }
    .validate()
    .expect("finite labeled tree is a valid profile")
}
