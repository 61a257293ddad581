//! Guarded equation systems over two-choice sequential games.
//!
//! An [`EquationSystem`] is a finite set of mutually recursive equations
//! whose unique solution is a (generally infinite) game tree, strategy
//! profile, or strategy. Guardedness — every right-hand side starts with a
//! constructor — guarantees the solution exists and is unique, and finite
//! presentability is what makes every predicate in this crate decidable:
//! computations run over the node set instead of the infinite unfolding.
//! Only rational trees (finitely many distinct subtrees) are representable;
//! that fragment contains every object this crate analyses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational number used for payoffs. Equilibrium checks compare
/// payoffs with `>=`, and ties are meaningful, so floats are not an option.
pub type Rational = Ratio<i64>;

/// Words that the text format claims for itself; they cannot be used as
/// agent or node names.
pub const RESERVED_WORDS: &[&str] = &[
    "agents", "game", "profile", "strategy", "of", "leaf", "move", "d", "r",
];

/// True iff `s` is usable as an agent or node name: an identifier of the
/// form `[A-Za-z_][A-Za-z0-9_']*` that is not a reserved word.
pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && !RESERVED_WORDS.contains(&s)
}

/// Agent (player) identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId::new(s)
    }
}

/// One of the two moves available at a branch node: stop (`Down`) or
/// continue (`Right`). `Down < Right` fixes the tie-breaking order used by
/// every enumeration in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Down,
    Right,
}

impl Choice {
    pub fn flip(self) -> Choice {
        match self {
            Choice::Down => Choice::Right,
            Choice::Right => Choice::Down,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Choice::Down => 'd',
            Choice::Right => 'r',
        }
    }

    pub const BOTH: [Choice; 2] = [Choice::Down, Choice::Right];
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Exact payoff assignment, one rational per agent. The domain must equal
/// the agent set of the enclosing system.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct PayoffMap {
    entries: BTreeMap<AgentId, Rational>,
}

impl PayoffMap {
    pub fn new(entries: impl IntoIterator<Item = (AgentId, Rational)>) -> Self {
        PayoffMap {
            entries: entries.into_iter().collect(),
        }
    }

    /// Convenience constructor from `(name, numer, denom)` triples.
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, i64, i64)>) -> Self {
        PayoffMap::new(
            triples
                .into_iter()
                .map(|(a, n, d)| (AgentId::new(a), Rational::new(n, d))),
        )
    }

    pub fn get(&self, agent: &AgentId) -> Option<Rational> {
        self.entries.get(agent).copied()
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentId> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &Rational)> {
        self.entries.iter()
    }

    pub fn values(&self) -> impl Iterator<Item = &Rational> {
        self.entries.values()
    }
}

impl fmt::Display for PayoffMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (agent, value) in &self.entries {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{agent}: {value}")?;
            first = false;
        }
        Ok(())
    }
}

/// Name of one equation (one node) inside a system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

/// Head of a branch node: the owning agent, or — in strategies only — the
/// move the strategy commits to at a node its own agent controls.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Head {
    Agent(AgentId),
    Move(Choice),
}

impl Head {
    pub fn agent(&self) -> Option<&AgentId> {
        match self {
            Head::Agent(a) => Some(a),
            Head::Move(_) => None,
        }
    }
}

/// Right-hand side of one equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Ending position distributing payoffs.
    Leaf(PayoffMap),
    /// Interior position with a `down` (stop) and `right` (continue) child.
    /// `chosen` is present exactly on profile nodes.
    Branch {
        head: Head,
        chosen: Option<Choice>,
        down: NodeId,
        right: NodeId,
    },
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    pub fn payoff(&self) -> Option<&PayoffMap> {
        match self {
            Node::Leaf(p) => Some(p),
            Node::Branch { .. } => None,
        }
    }

    /// Owning agent of a branch, when the head names one.
    pub fn owner(&self) -> Option<&AgentId> {
        match self {
            Node::Leaf(_) => None,
            Node::Branch { head, .. } => head.agent(),
        }
    }

    pub fn chosen(&self) -> Option<Choice> {
        match self {
            Node::Leaf(_) => None,
            Node::Branch { chosen, .. } => *chosen,
        }
    }

    pub fn children(&self) -> Option<(&NodeId, &NodeId)> {
        match self {
            Node::Leaf(_) => None,
            Node::Branch { down, right, .. } => Some((down, right)),
        }
    }

    pub fn child(&self, choice: Choice) -> Option<&NodeId> {
        self.children().map(|(d, r)| match choice {
            Choice::Down => d,
            Choice::Right => r,
        })
    }
}

/// What a system's trees are: plain games, profiles (games plus a chosen
/// move per node), or single-agent strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Game,
    Profile,
    Strategy,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Game => "game",
            Kind::Profile => "profile",
            Kind::Strategy => "strategy",
        })
    }
}

/// A validated, closed, guarded equation system. Immutable after
/// validation; every operation in the crate is a pure function of one or
/// more systems, so values can be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSystem {
    name: String,
    kind: Kind,
    agents: BTreeSet<AgentId>,
    equations: BTreeMap<NodeId, Node>,
    root: NodeId,
}

impl EquationSystem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn agents(&self) -> &BTreeSet<AgentId> {
        &self.agents
    }

    pub fn root(&self) -> &NodeId {
        &self.root
    }

    pub fn get(&self, id: &NodeId) -> Option<&Node> {
        self.equations.get(id)
    }

    /// Body of a defined node. Panics on an undefined id; validation
    /// guarantees all internal references resolve.
    pub fn node(&self, id: &NodeId) -> &Node {
        self.equations
            .get(id)
            .unwrap_or_else(|| panic!("undefined node `{id}` in system `{}`", self.name))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.equations.keys()
    }

    pub fn equations(&self) -> impl Iterator<Item = (&NodeId, &Node)> {
        self.equations.iter()
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// All nodes reachable from `from` through both children.
    pub fn reachable(&self, from: &NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from.clone()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            if let Some((down, right)) = self.node(&id).children() {
                stack.push(down.clone());
                stack.push(right.clone());
            }
        }
        seen
    }

    /// Same equations, different root. Panics if `root` is undefined.
    pub fn with_root(&self, root: NodeId) -> EquationSystem {
        assert!(
            self.equations.contains_key(&root),
            "with_root: undefined node `{root}`"
        );
        EquationSystem {
            root,
            ..self.clone()
        }
    }

    pub fn with_name(&self, name: impl Into<String>) -> EquationSystem {
        EquationSystem {
            name: name.into(),
            ..self.clone()
        }
    }
}

/// Unvalidated right-hand side; aliases are permitted here and resolved
/// away by [`validate_system`].
#[derive(Debug, Clone)]
pub enum RawNode {
    Alias(NodeId),
    Leaf(PayoffMap),
    Branch {
        head: Head,
        chosen: Option<Choice>,
        down: NodeId,
        right: NodeId,
    },
}

/// Unvalidated equation set, as produced by the parser or built in code.
#[derive(Debug, Clone)]
pub struct RawSystem {
    pub name: String,
    pub kind: Kind,
    pub agents: BTreeSet<AgentId>,
    pub equations: Vec<(NodeId, RawNode)>,
    pub root: NodeId,
}

impl RawSystem {
    pub fn new<'a>(
        name: impl Into<String>,
        kind: Kind,
        agents: impl IntoIterator<Item = &'a str>,
        root: &str,
    ) -> Self {
        RawSystem {
            name: name.into(),
            kind,
            agents: agents.into_iter().map(AgentId::new).collect(),
            equations: Vec::new(),
            root: NodeId::new(root),
        }
    }

    pub fn leaf<'a>(mut self, id: &str, payoffs: impl IntoIterator<Item = (&'a str, i64, i64)>) -> Self {
        self.equations
            .push((NodeId::new(id), RawNode::Leaf(PayoffMap::from_triples(payoffs))));
        self
    }

    /// Branch owned by an agent; `chosen` only for profiles.
    pub fn branch(mut self, id: &str, owner: &str, chosen: Option<Choice>, down: &str, right: &str) -> Self {
        self.equations.push((
            NodeId::new(id),
            RawNode::Branch {
                head: Head::Agent(AgentId::new(owner)),
                chosen,
                down: NodeId::new(down),
                right: NodeId::new(right),
            },
        ));
        self
    }

    /// Profile branch: owner plus chosen move.
    pub fn branch_p(self, id: &str, owner: &str, chosen: Choice, down: &str, right: &str) -> Self {
        self.branch(id, owner, Some(chosen), down, right)
    }

    /// Strategy branch committing to a move.
    pub fn move_branch(mut self, id: &str, committed: Choice, down: &str, right: &str) -> Self {
        self.equations.push((
            NodeId::new(id),
            RawNode::Branch {
                head: Head::Move(committed),
                chosen: None,
                down: NodeId::new(down),
                right: NodeId::new(right),
            },
        ));
        self
    }

    pub fn alias(mut self, id: &str, target: &str) -> Self {
        self.equations
            .push((NodeId::new(id), RawNode::Alias(NodeId::new(target))));
        self
    }

    pub fn validate(self) -> Result<EquationSystem, ValidateError> {
        validate_system(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("reference to undefined node `{missing}` (from `{referenced_from}`)")]
    UnresolvedReference { missing: NodeId, referenced_from: NodeId },
    #[error("unguarded alias cycle: {}", chain.iter().map(|n| n.name()).collect::<Vec<_>>().join(" = "))]
    UnguardedCycle { chain: Vec<NodeId> },
    #[error("payoff domain at `{node}` does not match the declared agent set")]
    PayoffDomainMismatch { node: NodeId },
    #[error("profile branch `{node}` is missing its chosen move")]
    MissingChoice { node: NodeId },
    #[error("{kind} branch `{node}` must not carry a chosen move")]
    StrayChoice { node: NodeId, kind: Kind },
    #[error("move head on `{node}` is only allowed in strategies")]
    MoveHeadForbidden { node: NodeId },
    #[error("unknown agent `{agent}` at `{node}`")]
    UnknownAgent { node: NodeId, agent: AgentId },
    #[error("duplicate equation for `{node}`")]
    DuplicateEquation { node: NodeId },
    #[error("invalid name `{name}` (names are identifiers and may not be reserved words)")]
    InvalidName { name: String },
}

/// Checks closure, guardedness, kind shape, and payoff-domain uniformity,
/// resolving aliases away. The result denotes a unique element of the
/// corresponding tree space.
pub fn validate_system(raw: RawSystem) -> Result<EquationSystem, ValidateError> {
    for agent in &raw.agents {
        if !is_valid_name(agent.name()) {
            return Err(ValidateError::InvalidName {
                name: agent.name().to_string(),
            });
        }
    }

    let mut bodies: BTreeMap<NodeId, RawNode> = BTreeMap::new();
    for (id, body) in raw.equations {
        if !is_valid_name(id.name()) {
            return Err(ValidateError::InvalidName {
                name: id.name().to_string(),
            });
        }
        if bodies.insert(id.clone(), body).is_some() {
            return Err(ValidateError::DuplicateEquation { node: id });
        }
    }

    // Resolve alias chains to their constructor equation; a chain that
    // never reaches a constructor is an unguarded cycle.
    let resolve = |start: &NodeId| -> Result<NodeId, ValidateError> {
        let mut chain = vec![start.clone()];
        let mut current = start.clone();
        loop {
            match bodies.get(&current) {
                None => {
                    let from = if chain.len() >= 2 {
                        chain[chain.len() - 2].clone()
                    } else {
                        current.clone()
                    };
                    return Err(ValidateError::UnresolvedReference {
                        missing: current,
                        referenced_from: from,
                    });
                }
                Some(RawNode::Alias(target)) => {
                    current = target.clone();
                    if chain.contains(&current) {
                        chain.push(current);
                        return Err(ValidateError::UnguardedCycle { chain });
                    }
                    chain.push(current.clone());
                }
                Some(_) => return Ok(current),
            }
        }
    };

    let mut resolution: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for id in bodies.keys().cloned().collect::<Vec<_>>() {
        resolution.insert(id.clone(), resolve(&id)?);
    }
    let root = resolve(&raw.root)?;

    let mut equations: BTreeMap<NodeId, Node> = BTreeMap::new();
    for (id, body) in &bodies {
        let node = match body {
            RawNode::Alias(_) => continue,
            RawNode::Leaf(payoff) => {
                let domain: BTreeSet<AgentId> = payoff.agents().cloned().collect();
                if domain != raw.agents {
                    return Err(ValidateError::PayoffDomainMismatch { node: id.clone() });
                }
                Node::Leaf(payoff.clone())
            }
            RawNode::Branch {
                head,
                chosen,
                down,
                right,
            } => {
                match head {
                    Head::Agent(agent) => {
                        if !raw.agents.contains(agent) {
                            return Err(ValidateError::UnknownAgent {
                                node: id.clone(),
                                agent: agent.clone(),
                            });
                        }
                    }
                    Head::Move(_) => {
                        if raw.kind != Kind::Strategy {
                            return Err(ValidateError::MoveHeadForbidden { node: id.clone() });
                        }
                    }
                }
                match (raw.kind, chosen) {
                    (Kind::Profile, None) => {
                        return Err(ValidateError::MissingChoice { node: id.clone() })
                    }
                    (Kind::Game | Kind::Strategy, Some(_)) => {
                        return Err(ValidateError::StrayChoice {
                            node: id.clone(),
                            kind: raw.kind,
                        })
                    }
                    _ => {}
                }
                let follow = |child: &NodeId| -> Result<NodeId, ValidateError> {
                    match resolution.get(child) {
                        Some(target) => Ok(target.clone()),
                        None => Err(ValidateError::UnresolvedReference {
                            missing: child.clone(),
                            referenced_from: id.clone(),
                        }),
                    }
                };
                Node::Branch {
                    head: head.clone(),
                    chosen: *chosen,
                    down: follow(down)?,
                    right: follow(right)?,
                }
            }
        };
        equations.insert(id.clone(), node);
    }

    Ok(EquationSystem {
        name: raw.name,
        kind: raw.kind,
        agents: raw.agents,
        equations,
        root,
    })
}

/// Finite truncation of a system's solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tree {
    Leaf(PayoffMap),
    Branch {
        head: Head,
        chosen: Option<Choice>,
        down: Box<Tree>,
        right: Box<Tree>,
    },
    /// A position cut by the depth limit. Distinct from [`Tree::Leaf`]:
    /// a cut marks unknown continuation, not an ending position.
    Cut,
}

impl Tree {
    pub fn height(&self) -> usize {
        match self {
            Tree::Leaf(_) | Tree::Cut => 0,
            Tree::Branch { down, right, .. } => 1 + down.height().max(right.height()),
        }
    }

    pub fn contains_cut(&self) -> bool {
        match self {
            Tree::Cut => true,
            Tree::Leaf(_) => false,
            Tree::Branch { down, right, .. } => down.contains_cut() || right.contains_cut(),
        }
    }

    /// Drops chosen-move labels, turning a profile truncation into the
    /// truncation of its underlying game.
    pub fn strip_choices(&self) -> Tree {
        match self {
            Tree::Leaf(p) => Tree::Leaf(p.clone()),
            Tree::Cut => Tree::Cut,
            Tree::Branch {
                head, down, right, ..
            } => Tree::Branch {
                head: head.clone(),
                chosen: None,
                down: Box::new(down.strip_choices()),
                right: Box::new(right.strip_choices()),
            },
        }
    }
}

/// Unrolls the solution below `node` to height at most `depth`. Leaves are
/// kept as leaves at any depth; branch positions at the limit become cuts.
pub fn unfold(sys: &EquationSystem, node: &NodeId, depth: usize) -> Tree {
    match sys.node(node) {
        Node::Leaf(payoff) => Tree::Leaf(payoff.clone()),
        Node::Branch {
            head,
            chosen,
            down,
            right,
        } => {
            if depth == 0 {
                Tree::Cut
            } else {
                Tree::Branch {
                    head: head.clone(),
                    chosen: *chosen,
                    down: Box::new(unfold(sys, down, depth - 1)),
                    right: Box::new(unfold(sys, right, depth - 1)),
                }
            }
        }
    }
}
