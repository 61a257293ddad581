//! Seeded random equation systems for property tests.
//!
//! Shapes are unconstrained within validity: nodes pick their children
//! uniformly (cycles included), payoffs are small rationals so ties occur.

use std::ops::RangeInclusive;

use rand::Rng;

use crate::system::{Choice, EquationSystem, Kind, RawSystem};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_nodes: usize,
    pub leaf_probability: f64,
    pub numerators: RangeInclusive<i64>,
    pub denominators: RangeInclusive<i64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_nodes: 12,
            leaf_probability: 0.3,
            numerators: -4..=4,
            denominators: 1..=3,
        }
    }
}

const AGENTS: [&str; 2] = ["A", "B"];

fn random_system(rng: &mut impl Rng, cfg: &GenConfig, kind: Kind) -> EquationSystem {
    let n = rng.random_range(1..=cfg.max_nodes.max(1));
    let mut raw = RawSystem::new(format!("random_{kind}"), kind, AGENTS, "n0");
    for i in 0..n {
        let id = format!("n{i}");
        // The last node is forced to be a leaf only when nothing else
        // exists to point at; otherwise shape is up to the dice.
        let is_leaf = rng.random_bool(cfg.leaf_probability) || n == 1;
        if is_leaf {
            let payoffs: Vec<(&str, i64, i64)> = AGENTS
                .iter()
                .map(|a| {
                    (
                        *a,
                        rng.random_range(cfg.numerators.clone()),
                        rng.random_range(cfg.denominators.clone()),
                    )
                })
                .collect();
            raw = raw.leaf(&id, payoffs);
        } else {
            let down = format!("n{}", rng.random_range(0..n));
            let right = format!("n{}", rng.random_range(0..n));
            let owner = AGENTS[rng.random_range(0..AGENTS.len())];
            raw = match kind {
                Kind::Game => raw.branch(&id, owner, None, &down, &right),
                Kind::Profile => {
                    let chosen = if rng.random_bool(0.5) {
                        Choice::Down
                    } else {
                        Choice::Right
                    };
                    raw.branch_p(&id, owner, chosen, &down, &right)
                }
                Kind::Strategy => {
                    if rng.random_bool(0.4) {
                        let committed = if rng.random_bool(0.5) {
                            Choice::Down
                        } else {
                            Choice::Right
                        };
                        raw.move_branch(&id, committed, &down, &right)
                    } else {
                        raw.branch(&id, owner, None, &down, &right)
                    }
                }
            };
        }
    }
    raw.validate().expect("generated systems are valid")
}

pub fn profile(rng: &mut impl Rng, cfg: &GenConfig) -> EquationSystem {
    random_system(rng, cfg, Kind::Profile)
}

pub fn game(rng: &mut impl Rng, cfg: &GenConfig) -> EquationSystem {
    random_system(rng, cfg, Kind::Game)
}

pub fn strategy(rng: &mut impl Rng, cfg: &GenConfig) -> EquationSystem {
    random_system(rng, cfg, Kind::Strategy)
}

/// Tree-shaped profile of bounded depth: all references point forward, so
/// the system is finite as a tree and every payoff is defined.
pub fn acyclic_profile(rng: &mut impl Rng, max_depth: usize, cfg: &GenConfig) -> EquationSystem {
    use crate::system::{AgentId, Head, NodeId, PayoffMap, RawNode};

    fn build(
        rng: &mut impl Rng,
        cfg: &GenConfig,
        equations: &mut Vec<(NodeId, RawNode)>,
        depth: usize,
        max_depth: usize,
    ) -> NodeId {
        let id = NodeId::new(format!("n{}", equations.len()));
        // Reserve the slot so children get fresh names.
        equations.push((id.clone(), RawNode::Alias(id.clone())));
        let slot = equations.len() - 1;
        if depth >= max_depth || rng.random_bool(cfg.leaf_probability) {
            let payoff = PayoffMap::new(AGENTS.iter().map(|a| {
                (
                    AgentId::new(*a),
                    crate::system::Rational::new(
                        rng.random_range(cfg.numerators.clone()),
                        rng.random_range(cfg.denominators.clone()),
                    ),
                )
            }));
            equations[slot].1 = RawNode::Leaf(payoff);
        } else {
            let down = build(rng, cfg, equations, depth + 1, max_depth);
            let right = build(rng, cfg, equations, depth + 1, max_depth);
            let owner = AGENTS[rng.random_range(0..AGENTS.len())];
            let chosen = if rng.random_bool(0.5) {
                Choice::Down
            } else {
                Choice::Right
            };
            equations[slot].1 = RawNode::Branch {
                head: Head::Agent(AgentId::new(owner)),
                chosen: Some(chosen),
                down,
                right,
            };
        }
        id
    }

    let mut equations = Vec::new();
    build(rng, cfg, &mut equations, 0, max_depth);
    RawSystem {
        name: "random_finite".to_string(),
        kind: Kind::Profile,
        agents: AGENTS.iter().map(|a| crate::system::AgentId::new(*a)).collect(),
        equations,
        root: crate::system::NodeId::new("n0"),
    }
    .validate()
    .expect("generated trees are valid")
}
