//! The 0,1-game laboratory.
//!
//! The 0,1-game is the two-agent comb game in which stopping pays the
//! stopper 0 and the opponent 1: A's stop leaf pays (0,1), B's pays (1,0),
//! and continuing hands the same situation to the other agent, forever. It
//! is small enough to present in two equations yet rich enough to exhibit
//! infinitely many subgame perfect equilibria and a rational escalation.
//!
//! This module builds the game, its canonical equilibria and escalation
//! strategies, converts eventually-periodic profiles to and from compact
//! words, enumerates equilibria within bounds, and compares the infinite
//! game against its finite truncations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::equilibria;
use crate::fixpoint::{self, AcbesVariant};
use crate::system::{
    AgentId, Choice, EquationSystem, Kind, NodeId, PayoffMap, Rational, RawSystem,
};
use crate::transform::{self, SumError};

pub fn agent_a() -> AgentId {
    AgentId::new("A")
}

pub fn agent_b() -> AgentId {
    AgentId::new("B")
}

/// Payoff of A's stop leaf: A gets 0, B gets 1.
pub fn f_01() -> PayoffMap {
    PayoffMap::from_triples([("A", 0, 1), ("B", 1, 1)])
}

/// Payoff of B's stop leaf: A gets 1, B gets 0.
pub fn f_10() -> PayoffMap {
    PayoffMap::from_triples([("A", 1, 1), ("B", 0, 1)])
}

/// The 0,1-game itself: `g01 = <A, (0,1), g10>`, `g10 = <B, (1,0), g01>`.
pub fn build_01_game() -> EquationSystem {
    RawSystem::new("g01", Kind::Game, ["A", "B"], "g01")
        .branch("g01", "A", None, "l01", "g10")
        .branch("g10", "B", None, "l10", "g01")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("the 0,1-game is valid")
}

/// The four canonical equilibrium profiles of the 0,1-game. In `s10a`/
/// `s10b` agent A continues and B stops (payoff (1,0)); in `s01a`/`s01b`
/// agent B continues and A stops (payoff (0,1)). The `a` variants are
/// rooted at A's node, the `b` variants at B's.
pub struct CanonicalProfiles {
    pub s10a: EquationSystem,
    pub s10b: EquationSystem,
    pub s01a: EquationSystem,
    pub s01b: EquationSystem,
}

pub fn canonical_profiles() -> CanonicalProfiles {
    let s10 = RawSystem::new("s10a", Kind::Profile, ["A", "B"], "s10a")
        .branch_p("s10a", "A", Choice::Right, "l01", "s10b")
        .branch_p("s10b", "B", Choice::Down, "l10", "s10a")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("valid");
    let s01 = RawSystem::new("s01a", Kind::Profile, ["A", "B"], "s01a")
        .branch_p("s01a", "A", Choice::Down, "l01", "s01b")
        .branch_p("s01b", "B", Choice::Right, "l10", "s01a")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("valid");
    CanonicalProfiles {
        s10b: s10.with_root(NodeId::new("s10b")).with_name("s10b"),
        s10a: s10,
        s01b: s01.with_root(NodeId::new("s01b")).with_name("s01b"),
        s01a: s01,
    }
}

/// The escalation strategies: each agent plans to continue at every one of
/// her own nodes, leaving the opponent's nodes open.
pub fn escalation_strategies() -> (EquationSystem, EquationSystem) {
    let st_a = RawSystem::new("stAinf", Kind::Strategy, ["A", "B"], "stAinf")
        .move_branch("stAinf", Choice::Right, "l01", "stAinf'")
        .branch("stAinf'", "B", None, "l10", "stAinf")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("valid");
    let st_b = RawSystem::new("stBinf", Kind::Strategy, ["A", "B"], "stBinf")
        .branch("stBinf", "A", None, "l01", "stBinf'")
        .move_branch("stBinf'", Choice::Right, "l10", "stBinf")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("valid");
    (st_a, st_b)
}

/// The profile both escalation strategies play together: everyone always
/// continues, so play never reaches a leaf.
pub fn escalation_profile() -> EquationSystem {
    RawSystem::new("sAinf", Kind::Profile, ["A", "B"], "sAinf")
        .branch_p("sAinf", "A", Choice::Right, "l01", "sBinf")
        .branch_p("sBinf", "B", Choice::Right, "l10", "sAinf")
        .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
        .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
        .validate()
        .expect("valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZeroOneError {
    #[error("profile is not an A-rooted 0,1-comb profile")]
    NotCombShaped,
}

/// Finite presentation of an eventually periodic profile over the
/// 0,1-game: the choice at position `i` (A's positions are even, B's odd)
/// is `prefix[i]` while `i < prefix.len()`, then cycles through `cycle`.
///
/// Construction canonicalizes: the cycle is reduced to its primitive
/// period and the prefix is shortened as far as possible, so two words are
/// equal exactly when their profiles are bisimilar.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CombProfileWord {
    prefix: Vec<Choice>,
    cycle: Vec<Choice>,
}

impl CombProfileWord {
    pub fn new(prefix: Vec<Choice>, cycle: Vec<Choice>) -> Self {
        assert!(!cycle.is_empty(), "cycle must be non-empty");
        let mut word = CombProfileWord { prefix, cycle };
        word.canonicalize();
        word
    }

    fn canonicalize(&mut self) {
        // Reduce the cycle to its primitive period.
        let k = self.cycle.len();
        for period in 1..=k {
            if !k.is_multiple_of(period) {
                continue;
            }
            if (period..k).all(|i| self.cycle[i] == self.cycle[i % period]) {
                self.cycle.truncate(period);
                break;
            }
        }
        // Absorb the prefix tail into the cycle: p·x·(c·x)^w = p·(x·c)^w.
        while self.prefix.last() == self.cycle.last() && !self.prefix.is_empty() {
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[Choice] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Choice] {
        &self.cycle
    }

    /// Choice at comb position `i`.
    pub fn choice_at(&self, i: usize) -> Choice {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }
}

impl std::fmt::Display for CombProfileWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.prefix {
            write!(f, "{c}")?;
        }
        write!(f, "(")?;
        for c in &self.cycle {
            write!(f, "{c}")?;
        }
        write!(f, ")*")
    }
}

/// Builds the profile a word denotes. Cycle nodes are duplicated when the
/// cycle length is odd, so owners keep alternating when the cycle wraps.
pub fn word_to_profile(word: &CombProfileWord) -> EquationSystem {
    let m = word.prefix.len();
    let k = word.cycle.len();
    let cycle_nodes = if k.is_multiple_of(2) { k } else { 2 * k };

    let owner = |position: usize| if position.is_multiple_of(2) { "A" } else { "B" };
    let stop_leaf = |position: usize| if position.is_multiple_of(2) { "l01" } else { "l10" };

    let mut raw = RawSystem::new(
        format!("word_{word}"),
        Kind::Profile,
        ["A", "B"],
        if m > 0 { "p0" } else { "c0" },
    )
    .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
    .leaf("l10", [("A", 1, 1), ("B", 0, 1)]);

    for i in 0..m {
        let next = if i + 1 < m {
            format!("p{}", i + 1)
        } else {
            "c0".to_string()
        };
        raw = raw.branch_p(
            &format!("p{i}"),
            owner(i),
            word.prefix[i],
            stop_leaf(i),
            &next,
        );
    }
    for j in 0..cycle_nodes {
        let position = m + j;
        let next = format!("c{}", (j + 1) % cycle_nodes);
        raw = raw.branch_p(
            &format!("c{j}"),
            owner(position),
            word.cycle[j % k],
            stop_leaf(position),
            &next,
        );
    }
    raw.validate().expect("word profiles are valid")
}

/// Reads an A-rooted 0,1-comb profile back as a canonical word.
pub fn profile_to_word(sys: &EquationSystem) -> Result<CombProfileWord, ZeroOneError> {
    if fixpoint::classify_01(sys, sys.root()) != fixpoint::ZeroOneClass::S0 {
        return Err(ZeroOneError::NotCombShaped);
    }
    // Walk the continuation spine; the shape classification guarantees it
    // never reaches a leaf, so it must revisit a node.
    let mut seen: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut choices: Vec<Choice> = Vec::new();
    let mut at = sys.root().clone();
    loop {
        if let Some(&i) = seen.get(&at) {
            let cycle = choices.split_off(i);
            return Ok(CombProfileWord::new(choices, cycle));
        }
        let node = sys.node(&at);
        seen.insert(at.clone(), choices.len());
        choices.push(node.chosen().expect("comb spine nodes are branches"));
        at = node.child(Choice::Right).expect("comb spine continues").clone();
    }
}

/// Result of combining a family of strategies and asking whether play ever
/// stops.
#[derive(Debug, Clone)]
pub struct EscalationOutcome {
    /// True iff the combined play never reaches an ending position.
    pub escalates: bool,
    pub profile: EquationSystem,
}

/// Sums the family and checks convergence of the combined profile.
pub fn escalation_check(
    family: &BTreeMap<AgentId, EquationSystem>,
) -> Result<EscalationOutcome, SumError> {
    let profile = transform::sum_strategies(family)?;
    let escalates = !fixpoint::converges(&profile, profile.root());
    Ok(EscalationOutcome { escalates, profile })
}

/// Equilibrium flags of one enumerated word.
#[derive(Debug, Clone)]
pub struct WordFlags {
    pub word: CombProfileWord,
    pub spe: bool,
    pub sacbes: bool,
    pub sbcaes: bool,
}

fn enumerate_words(max_prefix: usize, max_cycle: usize) -> Vec<CombProfileWord> {
    assert!(max_cycle >= 1, "cycle bound must be at least 1");
    let seq = |len: usize, bits: usize| -> Vec<Choice> {
        (0..len)
            .map(|i| {
                if bits >> i & 1 == 0 {
                    Choice::Down
                } else {
                    Choice::Right
                }
            })
            .collect()
    };
    let mut words = Vec::new();
    for m in 0..=max_prefix {
        for pbits in 0..1usize << m {
            let prefix = seq(m, pbits);
            for k in 1..=max_cycle {
                for cbits in 0..1usize << k {
                    let cycle = seq(k, cbits);
                    let word = CombProfileWord::new(prefix.clone(), cycle.clone());
                    // Keep only words that are already canonical; their
                    // variants reduce to them within the same bounds.
                    if word.prefix() == prefix.as_slice() && word.cycle() == cycle.as_slice() {
                        words.push(word);
                    }
                }
            }
        }
    }
    words.sort();
    words
}

/// Enumerates all canonical words within the bounds and evaluates subgame
/// perfection and the two eventual-stopping flags on each.
pub fn spe_enumerate_01(max_prefix: usize, max_cycle: usize) -> Vec<WordFlags> {
    enumerate_words(max_prefix, max_cycle)
        .into_iter()
        .map(|word| {
            let sys = word_to_profile(&word);
            let root = sys.root();
            WordFlags {
                spe: equilibria::is_spe(&sys, root),
                sacbes: fixpoint::acbes_boxed(&sys, root, AcbesVariant::AcBes),
                sbcaes: fixpoint::acbes_boxed(&sys, root, AcbesVariant::BcAes),
                word,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjectureVerdict {
    /// No disagreement found within the bounds. Says nothing beyond them:
    /// the profile space is uncountable and this search covers only
    /// eventually periodic profiles up to the given sizes.
    ConsistentAtBound,
    Refuted,
}

/// Outcome of testing "subgame perfect == one side continues while the
/// other eventually stops" over all words within bounds.
#[derive(Debug, Clone)]
pub struct ConjectureReport {
    pub max_prefix: usize,
    pub max_cycle: usize,
    pub profiles_checked: usize,
    pub counterexamples: Vec<CombProfileWord>,
    pub verdict: ConjectureVerdict,
}

/// [`conjecture_check`] with a replaceable subgame-perfection checker, so
/// tests can verify that a broken checker is caught.
pub fn conjecture_check_with(
    max_prefix: usize,
    max_cycle: usize,
    spe: &dyn Fn(&EquationSystem) -> bool,
) -> ConjectureReport {
    let mut checked = 0usize;
    let mut counterexamples = Vec::new();
    for word in enumerate_words(max_prefix, max_cycle) {
        let sys = word_to_profile(&word);
        let root = sys.root();
        let is_spe = spe(&sys);
        let stops = fixpoint::acbes_boxed(&sys, root, AcbesVariant::AcBes)
            || fixpoint::acbes_boxed(&sys, root, AcbesVariant::BcAes);
        checked += 1;
        if is_spe != stops {
            counterexamples.push(word);
        }
    }
    let verdict = if counterexamples.is_empty() {
        ConjectureVerdict::ConsistentAtBound
    } else {
        ConjectureVerdict::Refuted
    };
    ConjectureReport {
        max_prefix,
        max_cycle,
        profiles_checked: checked,
        counterexamples,
        verdict,
    }
}

pub fn conjecture_check(max_prefix: usize, max_cycle: usize) -> ConjectureReport {
    conjecture_check_with(max_prefix, max_cycle, &|sys| {
        equilibria::is_spe(sys, sys.root())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TruncationFamily {
    /// Cut after B: full A/B blocks, tail leaf (0,1).
    F,
    /// Cut after A: the last block keeps only its A node, tail leaf (1,0).
    K,
}

impl std::fmt::Display for TruncationFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TruncationFamily::F => "F",
            TruncationFamily::K => "K",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    pub family: TruncationFamily,
    /// Number of blocks, at least 1. A block is one A node plus one B node;
    /// the K family truncates the last block after its A node.
    pub blocks: usize,
}

/// Builds the finite approximation game.
pub fn truncate_family(spec: &TruncationSpec) -> EquationSystem {
    assert!(spec.blocks >= 1, "truncations need at least one block");
    let n = spec.blocks;
    let mut raw = RawSystem::new(
        format!("{}{}", spec.family, n),
        Kind::Game,
        ["A", "B"],
        "a1",
    )
    .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
    .leaf("l10", [("A", 1, 1), ("B", 0, 1)]);
    match spec.family {
        TruncationFamily::F => {
            for i in 1..=n {
                let b_next = if i < n { format!("a{}", i + 1) } else { "l01".to_string() };
                raw = raw
                    .branch(&format!("a{i}"), "A", None, "l01", &format!("b{i}"))
                    .branch(&format!("b{i}"), "B", None, "l10", &b_next);
            }
        }
        TruncationFamily::K => {
            for i in 1..=n {
                let a_next = if i < n { format!("b{i}") } else { "l10".to_string() };
                raw = raw.branch(&format!("a{i}"), "A", None, "l01", &a_next);
                if i < n {
                    raw = raw.branch(&format!("b{i}"), "B", None, "l10", &format!("a{}", i + 1));
                }
            }
        }
    }
    raw.validate().expect("truncations are valid finite games")
}

/// One line of the truncation table.
#[derive(Debug, Clone)]
pub struct TruncationRow {
    pub family: TruncationFamily,
    pub blocks: usize,
    pub equilibrium_count: usize,
    /// The agent whose continuation the cut position forces.
    pub continuer: AgentId,
    /// True iff every backward-induction equilibrium has the continuer
    /// choosing `r` at all her nodes.
    pub continuer_always_continues: bool,
    /// Payoff shared by all equilibria of this instance, when they agree.
    pub common_payoff: Option<PayoffMap>,
}

/// Truncation comparison across both families.
#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    /// True iff the two families' equilibrium payoffs disagree: what the
    /// finite approximations predict depends on where the game was cut, so
    /// extrapolating from truncations is unsound.
    pub parity_dependent: bool,
}

pub fn truncation_report(max_blocks: usize) -> TruncationReport {
    let mut rows = Vec::new();
    for family in [TruncationFamily::F, TruncationFamily::K] {
        for blocks in 1..=max_blocks {
            let game = truncate_family(&TruncationSpec { family, blocks });
            let equilibria_set =
                equilibria::enumerate_bi(&game).expect("truncations are finite");
            let continuer = match family {
                TruncationFamily::F => agent_b(),
                TruncationFamily::K => agent_a(),
            };
            let continuer_always_continues = equilibria_set.iter().all(|profile| {
                profile.equations().all(|(_, node)| {
                    node.owner() != Some(&continuer) || node.chosen() == Some(Choice::Right)
                })
            });
            let mut payoffs = equilibria_set.iter().map(|profile| {
                equilibria::payoff(profile, profile.root())
                    .defined()
                    .expect("finite profiles have defined payoffs")
                    .clone()
            });
            let common_payoff = payoffs
                .next()
                .filter(|first| payoffs.all(|p| p == *first));
            rows.push(TruncationRow {
                family,
                blocks,
                equilibrium_count: equilibria_set.len(),
                continuer,
                continuer_always_continues,
                common_payoff,
            });
        }
    }
    let f_payoffs: Vec<_> = rows
        .iter()
        .filter(|r| r.family == TruncationFamily::F)
        .map(|r| r.common_payoff.clone())
        .collect();
    let k_payoffs: Vec<_> = rows
        .iter()
        .filter(|r| r.family == TruncationFamily::K)
        .map(|r| r.common_payoff.clone())
        .collect();
    let parity_dependent = f_payoffs
        .iter()
        .zip(k_payoffs.iter())
        .any(|(f, k)| f.is_some() && k.is_some() && f != k);
    TruncationReport {
        rows,
        parity_dependent,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayrollVerdict {
    /// All payoffs fit under the bound, yet escalation still occurs:
    /// capping the stakes does not stop endless play in this game.
    BoundDoesNotPreventEscalation,
    /// The bound is below some payoff, so the premise does not apply.
    BoundBelowPayoffs,
}

/// Mechanical check that a payoff cap changes nothing about escalation.
#[derive(Debug, Clone)]
pub struct PayrollNote {
    pub bound: Rational,
    pub max_payoff: Rational,
    pub payoffs_within_bound: bool,
    pub escalates: bool,
    pub verdict: PayrollVerdict,
}

pub fn bounded_payroll_note(bound: Rational) -> PayrollNote {
    let game = build_01_game();
    let max_payoff = game
        .equations()
        .filter_map(|(_, node)| node.payoff())
        .flat_map(|p| p.values().copied().collect::<Vec<_>>())
        .max()
        .expect("the 0,1-game has leaves");
    let payoffs_within_bound = max_payoff <= bound;
    let (st_a, st_b) = escalation_strategies();
    let family = BTreeMap::from([(agent_a(), st_a), (agent_b(), st_b)]);
    let escalates = escalation_check(&family)
        .expect("escalation strategies satisfy the sum preconditions")
        .escalates;
    let verdict = if payoffs_within_bound {
        PayrollVerdict::BoundDoesNotPreventEscalation
    } else {
        PayrollVerdict::BoundBelowPayoffs
    };
    PayrollNote {
        bound,
        max_payoff,
        payoffs_within_bound,
        escalates,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim;
    use crate::equilibria::PayoffResult;

    #[test]
    fn the_01_game_matches_its_equations() {
        let g = build_01_game();
        let root = g.node(g.root());
        assert_eq!(root.owner(), Some(&agent_a()));
        let down = root.child(Choice::Down).unwrap();
        assert_eq!(g.node(down).payoff(), Some(&f_01()));
        let right = g.node(root.child(Choice::Right).unwrap());
        assert_eq!(right.owner(), Some(&agent_b()));
        assert_eq!(g.node(right.child(Choice::Down).unwrap()).payoff(), Some(&f_10()));
    }

    #[test]
    fn canonical_s10b_root_stops_onto_f10() {
        let p = canonical_profiles().s10b;
        let root = p.node(p.root());
        assert_eq!(root.owner(), Some(&agent_b()));
        assert_eq!(root.chosen(), Some(Choice::Down));
        assert_eq!(p.node(root.child(Choice::Down).unwrap()).payoff(), Some(&f_10()));
    }

    #[test]
    fn escalation_strategy_heads_match_their_equations() {
        let (st_a, st_b) = escalation_strategies();
        use crate::system::Head;
        match st_a.node(st_a.root()) {
            crate::system::Node::Branch { head, right, .. } => {
                assert_eq!(head, &Head::Move(Choice::Right));
                assert_eq!(st_a.node(right).owner(), Some(&agent_b()));
            }
            other => panic!("unexpected root {other:?}"),
        }
        match st_b.node(st_b.root()) {
            crate::system::Node::Branch { head, .. } => {
                assert_eq!(head, &Head::Agent(agent_a()));
            }
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn word_round_trips() {
        let w = CombProfileWord::new(vec![], vec![Choice::Right, Choice::Down]);
        let sys = word_to_profile(&w);
        assert_eq!(
            bisim::bisimilar_roots(&sys, &canonical_profiles().s10a),
            Ok(true)
        );
        assert_eq!(profile_to_word(&sys), Ok(w));

        let w = CombProfileWord::new(vec![], vec![Choice::Down, Choice::Right]);
        let sys = word_to_profile(&w);
        assert_eq!(
            bisim::bisimilar_roots(&sys, &canonical_profiles().s01a),
            Ok(true)
        );

        assert_eq!(
            profile_to_word(&canonical_profiles().s10a),
            Ok(CombProfileWord::new(vec![], vec![Choice::Right, Choice::Down]))
        );
    }

    #[test]
    fn canonicalization_minimizes_cycle_and_prefix() {
        // (rd)(rd) reduces to (rd); a prefix ending like the cycle rotates in.
        let doubled = CombProfileWord::new(
            vec![],
            vec![Choice::Right, Choice::Down, Choice::Right, Choice::Down],
        );
        assert_eq!(doubled.cycle(), &[Choice::Right, Choice::Down]);
        let absorbable = CombProfileWord::new(
            vec![Choice::Down],
            vec![Choice::Right, Choice::Down],
        );
        assert_eq!(absorbable.prefix(), &[] as &[Choice]);
        assert_eq!(absorbable.cycle(), &[Choice::Down, Choice::Right]);
    }

    #[test]
    fn odd_cycles_keep_owners_alternating() {
        let w = CombProfileWord::new(vec![], vec![Choice::Right]);
        let sys = word_to_profile(&w);
        assert_eq!(
            bisim::bisimilar_roots(&sys, &escalation_profile()),
            Ok(true)
        );
        assert_eq!(profile_to_word(&sys), Ok(w));
    }

    #[test]
    fn non_comb_profiles_are_rejected() {
        let leaf = RawSystem::new("l", Kind::Profile, ["A", "B"], "x")
            .leaf("x", [("A", 9, 1), ("B", 9, 1)])
            .validate()
            .unwrap();
        assert_eq!(profile_to_word(&leaf), Err(ZeroOneError::NotCombShaped));
    }

    #[test]
    fn all_canonical_profiles_live_on_the_01_game() {
        let p = canonical_profiles();
        let g01 = build_01_game();
        // The `b` variants are rooted at B's node, so their underlying game
        // is the 0,1-game seen from there.
        let g10 = g01.with_root(NodeId::new("g10"));
        for sys in [&p.s10a, &p.s01a, &escalation_profile()] {
            let under = crate::transform::underlying_game(sys);
            assert_eq!(bisim::bisimilar_roots(&under, &g01), Ok(true), "{}", sys.name());
        }
        for sys in [&p.s10b, &p.s01b] {
            let under = crate::transform::underlying_game(sys);
            assert_eq!(bisim::bisimilar_roots(&under, &g10), Ok(true), "{}", sys.name());
        }
    }

    #[test]
    fn escalation_check_on_the_escalation_strategies() {
        let (st_a, st_b) = escalation_strategies();
        let family = BTreeMap::from([(agent_a(), st_a), (agent_b(), st_b)]);
        let outcome = escalation_check(&family).unwrap();
        assert!(outcome.escalates);
        assert_eq!(
            bisim::bisimilar_roots(&outcome.profile, &escalation_profile()),
            Ok(true)
        );
    }

    #[test]
    fn stopping_strategies_do_not_escalate() {
        // Both agents stop at their first opportunity.
        let st_a = RawSystem::new("sa", Kind::Strategy, ["A", "B"], "x")
            .move_branch("x", Choice::Down, "l01", "y")
            .branch("y", "B", None, "l10", "x")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let st_b = RawSystem::new("sb", Kind::Strategy, ["A", "B"], "x")
            .branch("x", "A", None, "l01", "y")
            .move_branch("y", Choice::Down, "l10", "x")
            .leaf("l01", [("A", 0, 1), ("B", 1, 1)])
            .leaf("l10", [("A", 1, 1), ("B", 0, 1)])
            .validate()
            .unwrap();
        let family = BTreeMap::from([(agent_a(), st_a.clone()), (agent_b(), st_b.clone())]);
        let outcome = escalation_check(&family).unwrap();
        assert!(!outcome.escalates);

        // A continues but B stops at her first node: still no escalation,
        // and play ends on B's stop leaf.
        let (st_a_inf, _) = escalation_strategies();
        let family = BTreeMap::from([(agent_a(), st_a_inf), (agent_b(), st_b)]);
        let outcome = escalation_check(&family).unwrap();
        assert!(!outcome.escalates);
        assert_eq!(
            equilibria::payoff(&outcome.profile, outcome.profile.root()),
            PayoffResult::Defined(f_10())
        );
    }

    #[test]
    fn enumeration_at_minimal_bounds() {
        let words = enumerate_words(1, 1);
        // Canonical words with prefix length <= 1 and cycle length 1:
        // (d)*, (r)*, d(r)*, r(d)*. The mixed-prefix ones are canonical
        // because their last prefix letter differs from the cycle letter.
        assert_eq!(words.len(), 4);
        assert!(words.contains(&CombProfileWord::new(vec![], vec![Choice::Down])));
        assert!(words.contains(&CombProfileWord::new(vec![], vec![Choice::Right])));
    }

    #[test]
    fn enumerated_flags_match_the_known_equilibria() {
        let flags = spe_enumerate_01(2, 2);
        let find = |prefix: Vec<Choice>, cycle: Vec<Choice>| {
            let w = CombProfileWord::new(prefix, cycle);
            flags
                .iter()
                .find(|f| f.word == w)
                .unwrap_or_else(|| panic!("word {w} not enumerated"))
                .clone()
        };
        // Continue/stop alternation: subgame perfect via eventual stopping.
        let f = find(vec![], vec![Choice::Right, Choice::Down]);
        assert!(f.spe && f.sacbes && !f.sbcaes);
        let f = find(vec![], vec![Choice::Down, Choice::Right]);
        assert!(f.spe && !f.sacbes && f.sbcaes);
        // Everyone always continues: not subgame perfect.
        let f = find(vec![], vec![Choice::Right]);
        assert!(!f.spe && !f.sacbes && !f.sbcaes);
    }

    #[test]
    fn conjecture_consistent_at_small_bounds() {
        let report = conjecture_check(3, 3);
        assert_eq!(report.verdict, ConjectureVerdict::ConsistentAtBound);
        assert!(report.counterexamples.is_empty());
        assert!(report.profiles_checked > 0);
    }

    #[test]
    fn broken_spe_checker_is_refuted() {
        // Mutation: "subgame perfect" replaced by mere strong convergence.
        let report = conjecture_check_with(3, 3, &|sys| {
            fixpoint::strongly_converges(sys, sys.root())
        });
        assert_eq!(report.verdict, ConjectureVerdict::Refuted);
        assert!(!report.counterexamples.is_empty());
    }

    #[test]
    fn truncation_shapes() {
        let f2 = truncate_family(&TruncationSpec {
            family: TruncationFamily::F,
            blocks: 2,
        });
        // a1 b1 a2 b2 plus two leaves.
        assert_eq!(f2.len(), 6);
        let k2 = truncate_family(&TruncationSpec {
            family: TruncationFamily::K,
            blocks: 2,
        });
        // a1 b1 a2 plus two leaves.
        assert_eq!(k2.len(), 5);
    }

    #[test]
    fn truncation_report_flags_the_parity_dependence() {
        let report = truncation_report(3);
        assert!(report.parity_dependent);
        for row in &report.rows {
            assert!(row.continuer_always_continues);
            match row.family {
                TruncationFamily::F => assert_eq!(row.common_payoff, Some(f_01())),
                TruncationFamily::K => assert_eq!(row.common_payoff, Some(f_10())),
            }
        }
    }

    #[test]
    fn payroll_bound_of_one_does_not_prevent_escalation() {
        let note = bounded_payroll_note(Rational::new(1, 1));
        assert!(note.payoffs_within_bound);
        assert!(note.escalates);
        assert_eq!(note.verdict, PayrollVerdict::BoundDoesNotPreventEscalation);

        let generous = bounded_payroll_note(Rational::new(1000, 1));
        assert_eq!(generous.verdict, PayrollVerdict::BoundDoesNotPreventEscalation);

        let tight = bounded_payroll_note(Rational::new(1, 2));
        assert!(!tight.payoffs_within_bound);
        assert_eq!(tight.verdict, PayrollVerdict::BoundBelowPayoffs);
        assert_eq!(tight.max_payoff, Rational::new(1, 1));
    }
}
