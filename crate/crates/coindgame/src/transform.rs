//! Structure maps between games, profiles, and strategies.
//!
//! - [`underlying_game`]: forget the chosen moves of a profile.
//! - [`strategy_to_game`]: read a strategy back as a game by crediting its
//!   committed moves to a given agent.
//! - [`is_full`]: a strategy is full for an agent when that agent never
//!   appears as a head — every decision of hers has been replaced by a
//!   committed move.
//! - [`sum_strategies`]: combine one full strategy per agent into the
//!   strategy profile they jointly play.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bisim;
use crate::system::{
    AgentId, Choice, EquationSystem, Head, Kind, Node, NodeId, RawNode, RawSystem,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("expected a {expected}, got a {found}")]
    KindMismatch { expected: Kind, found: Kind },
    #[error("unknown agent `{agent}`")]
    UnknownAgent { agent: AgentId },
}

/// Forgets chosen moves. Profiles become their underlying game; games pass
/// through unchanged, so the map is idempotent.
///
/// Panics when handed a strategy: strategies are turned into games with
/// [`strategy_to_game`], which needs to know the owning agent.
pub fn underlying_game(sys: &EquationSystem) -> EquationSystem {
    assert!(
        sys.kind() != Kind::Strategy,
        "underlying_game takes a profile or a game"
    );
    let mut raw = RawSystem {
        name: sys.name().to_string(),
        kind: Kind::Game,
        agents: sys.agents().clone(),
        equations: Vec::new(),
        root: sys.root().clone(),
    };
    for (id, node) in sys.equations() {
        let body = match node {
            Node::Leaf(p) => RawNode::Leaf(p.clone()),
            Node::Branch {
                head, down, right, ..
            } => RawNode::Branch {
                head: head.clone(),
                chosen: None,
                down: down.clone(),
                right: right.clone(),
            },
        };
        raw.equations.push((id.clone(), body));
    }
    raw.validate().expect("stripping choices preserves validity")
}

/// Reads a strategy as a game: agent heads stay as owners, committed moves
/// become decision points of `agent`.
pub fn strategy_to_game(
    sys: &EquationSystem,
    agent: &AgentId,
) -> Result<EquationSystem, TransformError> {
    if sys.kind() != Kind::Strategy {
        return Err(TransformError::KindMismatch {
            expected: Kind::Strategy,
            found: sys.kind(),
        });
    }
    if !sys.agents().contains(agent) {
        return Err(TransformError::UnknownAgent {
            agent: agent.clone(),
        });
    }
    let mut raw = RawSystem {
        name: format!("{}_as_game", sys.name()),
        kind: Kind::Game,
        agents: sys.agents().clone(),
        equations: Vec::new(),
        root: sys.root().clone(),
    };
    for (id, node) in sys.equations() {
        let body = match node {
            Node::Leaf(p) => RawNode::Leaf(p.clone()),
            Node::Branch {
                head, down, right, ..
            } => {
                let owner = match head {
                    Head::Agent(a) => a.clone(),
                    Head::Move(_) => agent.clone(),
                };
                RawNode::Branch {
                    head: Head::Agent(owner),
                    chosen: None,
                    down: down.clone(),
                    right: right.clone(),
                }
            }
        };
        raw.equations.push((id.clone(), body));
    }
    Ok(raw.validate().expect("head rewriting preserves validity"))
}

/// True iff no branch reachable from the root has `agent` as its head.
/// Leaves are full for everyone.
pub fn is_full(sys: &EquationSystem, agent: &AgentId) -> Result<bool, TransformError> {
    if sys.kind() != Kind::Strategy {
        return Err(TransformError::KindMismatch {
            expected: Kind::Strategy,
            found: sys.kind(),
        });
    }
    if !sys.agents().contains(agent) {
        return Err(TransformError::UnknownAgent {
            agent: agent.clone(),
        });
    }
    Ok(sys
        .reachable(sys.root())
        .iter()
        .all(|id| match sys.node(id) {
            Node::Leaf(_) => true,
            Node::Branch { head, .. } => head.agent() != Some(agent),
        }))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SumError {
    #[error("cannot sum an empty strategy family")]
    EmptyFamily,
    #[error("strategy for `{agent}` is a {found}, not a strategy")]
    KindMismatch { agent: AgentId, found: Kind },
    #[error("strategy family must contain exactly one strategy per declared agent")]
    FamilyAgentsMismatch,
    #[error("strategy for `{agent}` is not full: the agent still appears as a head")]
    NotFull { agent: AgentId },
    #[error("strategies of `{left}` and `{right}` do not underlie the same game")]
    GamesDiffer { left: AgentId, right: AgentId },
    #[error("inconsistent heads at product position {position}: expected exactly one committed move")]
    HeadClash { position: String },
}

/// Sums a family of strategies, one per agent, into the profile they play
/// together. Requires every strategy to be full for its agent and all of
/// them to underlie one common game; the product is memoized on tuples of
/// node ids, so the output is again a finite system.
pub fn sum_strategies(
    family: &BTreeMap<AgentId, EquationSystem>,
) -> Result<EquationSystem, SumError> {
    if family.is_empty() {
        return Err(SumError::EmptyFamily);
    }
    let agents = family
        .values()
        .next()
        .expect("non-empty family")
        .agents()
        .clone();
    for (agent, sys) in family {
        if sys.kind() != Kind::Strategy {
            return Err(SumError::KindMismatch {
                agent: agent.clone(),
                found: sys.kind(),
            });
        }
        if sys.agents() != &agents {
            return Err(SumError::FamilyAgentsMismatch);
        }
    }
    if family.keys().cloned().collect::<std::collections::BTreeSet<_>>() != agents {
        return Err(SumError::FamilyAgentsMismatch);
    }
    for (agent, sys) in family {
        let full = is_full(sys, agent).expect("kind and agent checked above");
        if !full {
            return Err(SumError::NotFull {
                agent: agent.clone(),
            });
        }
    }
    let games: Vec<(&AgentId, EquationSystem)> = family
        .iter()
        .map(|(agent, sys)| {
            let game = strategy_to_game(sys, agent).expect("kind and agent checked above");
            (agent, game)
        })
        .collect();
    for window in games.windows(2) {
        let (left, lg) = &window[0];
        let (right, rg) = &window[1];
        let same = bisim::bisimilar_roots(lg, rg).expect("both are games");
        if !same {
            return Err(SumError::GamesDiffer {
                left: (*left).clone(),
                right: (*right).clone(),
            });
        }
    }
    product_profile(family)
}

/// Synchronized product over node-id tuples. Precondition checks live in
/// [`sum_strategies`]; this reports [`SumError::HeadClash`] if the inputs
/// are structurally inconsistent anyway.
fn product_profile(
    family: &BTreeMap<AgentId, EquationSystem>,
) -> Result<EquationSystem, SumError> {
    let agents: Vec<&AgentId> = family.keys().collect();
    let systems: Vec<&EquationSystem> = family.values().collect();
    let agent_set = systems[0].agents().clone();

    // Canonical product-node names: per-system node indices joined in
    // agent-name order. Indices are stable because node ids are sorted.
    let index: Vec<BTreeMap<&NodeId, usize>> = systems
        .iter()
        .map(|sys| sys.node_ids().enumerate().map(|(i, id)| (id, i)).collect())
        .collect();
    let name_of = |tuple: &[NodeId]| -> NodeId {
        let parts: Vec<String> = tuple
            .iter()
            .enumerate()
            .map(|(i, id)| index[i][id].to_string())
            .collect();
        NodeId::new(format!("q_{}", parts.join("_")))
    };
    let describe = |tuple: &[NodeId]| -> String {
        tuple
            .iter()
            .enumerate()
            .map(|(i, id)| format!("{}: {}", agents[i], id))
            .collect::<Vec<_>>()
            .join(", ")
    };

    let start: Vec<NodeId> = systems.iter().map(|sys| sys.root().clone()).collect();
    let mut raw = RawSystem {
        name: "sum".to_string(),
        kind: Kind::Profile,
        agents: agent_set,
        equations: Vec::new(),
        root: name_of(&start),
    };
    let mut seen: BTreeMap<Vec<NodeId>, NodeId> = BTreeMap::new();
    let mut queue = vec![start];
    while let Some(tuple) = queue.pop() {
        let product_id = name_of(&tuple);
        if seen.insert(tuple.clone(), product_id.clone()).is_some() {
            continue;
        }
        let bodies: Vec<&Node> = tuple
            .iter()
            .enumerate()
            .map(|(i, id)| systems[i].node(id))
            .collect();

        if bodies.iter().all(|n| n.is_leaf()) {
            let payoff = bodies[0].payoff().expect("leaf");
            if bodies.iter().any(|n| n.payoff() != Some(payoff)) {
                return Err(SumError::HeadClash {
                    position: describe(&tuple),
                });
            }
            raw.equations.push((product_id, RawNode::Leaf(payoff.clone())));
            continue;
        }
        if bodies.iter().any(|n| n.is_leaf()) {
            return Err(SumError::HeadClash {
                position: describe(&tuple),
            });
        }

        // Exactly one strategy commits to a move here; it belongs to the
        // owner, and everyone else must name the owner as head.
        let mut committed: Option<(usize, Choice)> = None;
        for (i, node) in bodies.iter().enumerate() {
            if let Node::Branch {
                head: Head::Move(c),
                ..
            } = node
            {
                if committed.replace((i, *c)).is_some() {
                    return Err(SumError::HeadClash {
                        position: describe(&tuple),
                    });
                }
            }
        }
        let Some((owner_idx, chosen)) = committed else {
            return Err(SumError::HeadClash {
                position: describe(&tuple),
            });
        };
        let owner = agents[owner_idx].clone();
        for node in &bodies {
            if let Node::Branch {
                head: Head::Agent(a),
                ..
            } = node
            {
                if a != &owner {
                    return Err(SumError::HeadClash {
                        position: describe(&tuple),
                    });
                }
            }
        }

        let child_tuple = |choice: Choice| -> Vec<NodeId> {
            bodies
                .iter()
                .map(|n| n.child(choice).expect("all branches here").clone())
                .collect()
        };
        let down = child_tuple(Choice::Down);
        let right = child_tuple(Choice::Right);
        raw.equations.push((
            product_id,
            RawNode::Branch {
                head: Head::Agent(owner),
                chosen: Some(chosen),
                down: name_of(&down),
                right: name_of(&right),
            },
        ));
        if !seen.contains_key(&down) {
            queue.push(down);
        }
        if !seen.contains_key(&right) {
            queue.push(right);
        }
    }

    Ok(raw.validate().expect("product of valid systems is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria;
    use crate::system::{PayoffMap, RawSystem};
    use crate::zero_one;

    #[test]
    fn underlying_game_of_canonical_profile_is_the_01_game() {
        let p = zero_one::canonical_profiles().s10a;
        let g = underlying_game(&p);
        assert_eq!(bisim::bisimilar_roots(&g, &zero_one::build_01_game()), Ok(true));
    }

    #[test]
    fn underlying_game_of_leaf_profile_is_the_leaf() {
        let p = RawSystem::new("l", Kind::Profile, ["A"], "x")
            .leaf("x", [("A", 3, 4)])
            .validate()
            .unwrap();
        let g = underlying_game(&p);
        assert!(g.node(g.root()).is_leaf());
        // Re-stripping changes nothing.
        assert_eq!(underlying_game(&g), g);
    }

    #[test]
    fn strategy_to_game_rewrites_committed_moves_to_the_agent() {
        let st = RawSystem::new("st", Kind::Strategy, ["A", "B"], "x")
            .move_branch("x", Choice::Right, "l", "l")
            .leaf("l", [("A", 0, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let g = strategy_to_game(&st, &AgentId::new("A")).unwrap();
        assert_eq!(g.node(g.root()).owner(), Some(&AgentId::new("A")));

        let leaf = RawSystem::new("l", Kind::Strategy, ["A"], "x")
            .leaf("x", [("A", 1, 2)])
            .validate()
            .unwrap();
        let g = strategy_to_game(&leaf, &AgentId::new("A")).unwrap();
        assert!(g.node(g.root()).is_leaf());

        assert!(matches!(
            strategy_to_game(&st, &AgentId::new("Z")),
            Err(TransformError::UnknownAgent { .. })
        ));
    }

    #[test]
    fn escalation_strategies_are_full_for_their_own_agent_only() {
        let (st_a, st_b) = zero_one::escalation_strategies();
        let a = AgentId::new("A");
        let b = AgentId::new("B");
        assert_eq!(is_full(&st_a, &a), Ok(true));
        assert_eq!(is_full(&st_a, &b), Ok(false));
        assert_eq!(is_full(&st_b, &b), Ok(true));
        assert_eq!(is_full(&st_b, &a), Ok(false));
    }

    #[test]
    fn leaf_strategy_is_full_for_everyone() {
        let leaf = RawSystem::new("l", Kind::Strategy, ["A", "B"], "x")
            .leaf("x", [("A", 0, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        assert_eq!(is_full(&leaf, &AgentId::new("A")), Ok(true));
        assert_eq!(is_full(&leaf, &AgentId::new("B")), Ok(true));
    }

    #[test]
    fn sum_of_escalation_strategies_is_the_escalation_profile() {
        let (st_a, st_b) = zero_one::escalation_strategies();
        let family = BTreeMap::from([
            (AgentId::new("A"), st_a),
            (AgentId::new("B"), st_b),
        ]);
        let sum = sum_strategies(&family).unwrap();
        let s_a_inf = zero_one::escalation_profile();
        assert_eq!(bisim::bisimilar_roots(&sum, &s_a_inf), Ok(true));
        // The profile's underlying game is the common game of the family.
        let g = underlying_game(&sum);
        assert_eq!(bisim::bisimilar_roots(&g, &zero_one::build_01_game()), Ok(true));
    }

    #[test]
    fn sum_of_leaf_strategies_is_the_leaf_profile() {
        let leaf = |name: &str| {
            RawSystem::new(name, Kind::Strategy, ["A", "B"], "x")
                .leaf("x", [("A", 2, 1), ("B", 5, 1)])
                .validate()
                .unwrap()
        };
        let family = BTreeMap::from([
            (AgentId::new("A"), leaf("sa")),
            (AgentId::new("B"), leaf("sb")),
        ]);
        let sum = sum_strategies(&family).unwrap();
        assert_eq!(
            sum.node(sum.root()).payoff(),
            Some(&PayoffMap::from_triples([("A", 2, 1), ("B", 5, 1)]))
        );
    }

    #[test]
    fn sum_with_immediately_stopping_opponent_reaches_f10() {
        // A keeps continuing, B commits to stopping at its first node.
        let (st_a, _) = zero_one::escalation_strategies();
        let st_b_stop = RawSystem::new("stBstop", Kind::Strategy, ["A", "B"], "x")
            .branch("x", "A", None, "l01", "y")
            .move_branch("y", Choice::Down, "l10", "x")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let family = BTreeMap::from([
            (AgentId::new("A"), st_a),
            (AgentId::new("B"), st_b_stop),
        ]);
        let sum = sum_strategies(&family).unwrap();
        let root = sum.node(sum.root());
        assert_eq!(root.owner(), Some(&AgentId::new("A")));
        assert_eq!(root.chosen(), Some(Choice::Right));
        let next = sum.node(root.child(Choice::Right).unwrap());
        assert_eq!(next.owner(), Some(&AgentId::new("B")));
        assert_eq!(next.chosen(), Some(Choice::Down));
        match equilibria::payoff(&sum, sum.root()) {
            equilibria::PayoffResult::Defined(p) => {
                assert_eq!(p, PayoffMap::from_triples([("A", 1, 1), ("B", 0, 1)]));
            }
            other => panic!("expected defined payoff, got {other:?}"),
        }
    }

    #[test]
    fn sum_rejects_non_full_strategies() {
        let (st_a, _) = zero_one::escalation_strategies();
        let family = BTreeMap::from([
            (AgentId::new("A"), st_a.clone()),
            (AgentId::new("B"), st_a),
        ]);
        // A's escalation strategy mentions B as a head, so it is not full
        // for B.
        assert!(matches!(
            sum_strategies(&family),
            Err(SumError::NotFull { agent }) if agent == AgentId::new("B")
        ));
    }

    #[test]
    fn sum_rejects_strategies_over_different_games() {
        let (st_a, _) = zero_one::escalation_strategies();
        // B's strategy over a game with swapped stop payoffs.
        let st_b_other = RawSystem::new("stBother", Kind::Strategy, ["A", "B"], "x")
            .branch("x", "A", None, "l10", "y")
            .move_branch("y", Choice::Down, "l01", "x")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let family = BTreeMap::from([
            (AgentId::new("A"), st_a),
            (AgentId::new("B"), st_b_other),
        ]);
        assert!(matches!(
            sum_strategies(&family),
            Err(SumError::GamesDiffer { .. })
        ));
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(matches!(
            sum_strategies(&BTreeMap::new()),
            Err(SumError::EmptyFamily)
        ));
    }

    #[test]
    fn product_reports_head_clashes_on_inconsistent_inputs() {
        // Bypass the public precondition checks to exercise the defensive
        // error: two strategies both committing a move at the root.
        let st = |name: &str, c: Choice| {
            RawSystem::new(name, Kind::Strategy, ["A", "B"], "x")
                .move_branch("x", c, "l", "l")
                .leaf("l", [("A", 0, 1), ("B", 0, 1)])
                .validate()
                .unwrap()
        };
        let family = BTreeMap::from([
            (AgentId::new("A"), st("sa", Choice::Down)),
            (AgentId::new("B"), st("sb", Choice::Right)),
        ]);
        assert!(matches!(
            product_profile(&family),
            Err(SumError::HeadClash { .. })
        ));
    }
}
