//! JSON export of systems, valuations, and analysis reports.
//!
//! Every exported document carries `"schema": "coindgame/1"`. Rationals
//! are rendered as exact strings (`"1"`, `"-2/3"`), never as floats.

use serde_json::{json, Map, Value};

use crate::equilibria::{DeviationWitness, NashOutcome, PayoffResult};
use crate::fixpoint::{Polarity, Valuation};
use crate::system::{EquationSystem, Head, Node, Rational, Tree};
use crate::zero_one::{
    CombProfileWord, ConjectureReport, ConjectureVerdict, EscalationOutcome, PayrollNote,
    PayrollVerdict, TruncationReport,
};

pub const SCHEMA: &str = "coindgame/1";

fn document(doc_type: &str) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("type".into(), json!(doc_type));
    map
}

pub fn rational_json(r: &Rational) -> Value {
    if *r.denom() == 1 {
        json!(r.numer().to_string())
    } else {
        json!(format!("{}/{}", r.numer(), r.denom()))
    }
}

pub fn payoff_map_json(p: &crate::system::PayoffMap) -> Value {
    Value::Object(
        p.iter()
            .map(|(a, v)| (a.name().to_string(), rational_json(v)))
            .collect(),
    )
}

fn head_json(head: &Head) -> Value {
    match head {
        Head::Agent(a) => json!(a.name()),
        Head::Move(c) => json!({ "move": c.to_string() }),
    }
}

fn node_json(node: &Node) -> Value {
    match node {
        Node::Leaf(p) => json!({ "leaf": payoff_map_json(p) }),
        Node::Branch {
            head,
            chosen,
            down,
            right,
        } => {
            let mut map = Map::new();
            map.insert("head".into(), head_json(head));
            if let Some(c) = chosen {
                map.insert("chosen".into(), json!(c.to_string()));
            }
            map.insert("down".into(), json!(down.name()));
            map.insert("right".into(), json!(right.name()));
            Value::Object(map)
        }
    }
}

pub fn system_json(sys: &EquationSystem) -> Value {
    let mut map = document("system");
    map.insert("name".into(), json!(sys.name()));
    map.insert("kind".into(), json!(sys.kind().to_string()));
    map.insert(
        "agents".into(),
        Value::Array(sys.agents().iter().map(|a| json!(a.name())).collect()),
    );
    map.insert("root".into(), json!(sys.root().name()));
    map.insert(
        "equations".into(),
        Value::Object(
            sys.equations()
                .map(|(id, node)| (id.name().to_string(), node_json(node)))
                .collect(),
        ),
    );
    Value::Object(map)
}

pub fn tree_json(tree: &Tree) -> Value {
    match tree {
        Tree::Leaf(p) => json!({ "leaf": payoff_map_json(p) }),
        Tree::Cut => json!("cut"),
        Tree::Branch {
            head,
            chosen,
            down,
            right,
        } => {
            let mut map = Map::new();
            map.insert("head".into(), head_json(head));
            if let Some(c) = chosen {
                map.insert("chosen".into(), json!(c.to_string()));
            }
            map.insert("down".into(), tree_json(down));
            map.insert("right".into(), tree_json(right));
            Value::Object(map)
        }
    }
}

pub fn valuation_json(v: &Valuation) -> Value {
    let mut map = document("valuation");
    map.insert("predicate".into(), json!(v.predicate()));
    map.insert(
        "polarity".into(),
        json!(match v.polarity() {
            Polarity::Least => "least",
            Polarity::Greatest => "greatest",
            Polarity::Direct => "direct",
        }),
    );
    map.insert("iterations".into(), json!(v.iterations()));
    map.insert(
        "values".into(),
        Value::Object(
            v.iter()
                .map(|(id, b)| (id.name().to_string(), json!(b)))
                .collect(),
        ),
    );
    Value::Object(map)
}

pub fn payoff_result_json(r: &PayoffResult) -> Value {
    let mut map = document("payoff");
    match r {
        PayoffResult::Defined(p) => {
            map.insert("defined".into(), json!(true));
            map.insert("payoff".into(), payoff_map_json(p));
        }
        PayoffResult::Undefined { cycle } => {
            map.insert("defined".into(), json!(false));
            map.insert(
                "cycle".into(),
                Value::Array(cycle.iter().map(|n| json!(n.name())).collect()),
            );
        }
    }
    Value::Object(map)
}

pub fn witness_json(w: &DeviationWitness) -> Value {
    json!({
        "agent": w.agent.name(),
        "payoff_before": rational_json(&w.payoff_before),
        "payoff_after": rational_json(&w.payoff_after),
        "flips": w.flips.iter()
            .map(|(id, c)| json!({ "node": id.name(), "to": c.to_string() }))
            .collect::<Vec<_>>(),
        "deviant_profile": system_json(&w.deviant_profile),
    })
}

pub fn nash_json(outcome: &NashOutcome) -> Value {
    let mut map = document("nash");
    map.insert("holds".into(), json!(outcome.is_nash));
    if let Some(w) = &outcome.witness {
        map.insert("witness".into(), witness_json(w));
    }
    Value::Object(map)
}

pub fn word_json(w: &CombProfileWord) -> Value {
    let text = |cs: &[crate::system::Choice]| cs.iter().map(|c| c.letter()).collect::<String>();
    json!({
        "prefix": text(w.prefix()),
        "cycle": text(w.cycle()),
    })
}

pub fn conjecture_json(report: &ConjectureReport) -> Value {
    let mut map = document("conjecture_report");
    map.insert("max_prefix".into(), json!(report.max_prefix));
    map.insert("max_cycle".into(), json!(report.max_cycle));
    map.insert("profiles_checked".into(), json!(report.profiles_checked));
    map.insert(
        "counterexamples".into(),
        Value::Array(report.counterexamples.iter().map(word_json).collect()),
    );
    map.insert(
        "verdict".into(),
        json!(match report.verdict {
            ConjectureVerdict::ConsistentAtBound => "consistent-at-bound",
            ConjectureVerdict::Refuted => "refuted",
        }),
    );
    Value::Object(map)
}

pub fn truncation_report_json(report: &TruncationReport) -> Value {
    let mut map = document("truncation_report");
    map.insert(
        "rows".into(),
        Value::Array(
            report
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "family": row.family.to_string(),
                        "blocks": row.blocks,
                        "equilibria": row.equilibrium_count,
                        "continuer": row.continuer.name(),
                        "continuer_always_continues": row.continuer_always_continues,
                        "common_payoff": row.common_payoff.as_ref().map(payoff_map_json),
                    })
                })
                .collect(),
        ),
    );
    map.insert("parity_dependent".into(), json!(report.parity_dependent));
    Value::Object(map)
}

pub fn escalation_json(outcome: &EscalationOutcome) -> Value {
    let mut map = document("escalation");
    map.insert("escalates".into(), json!(outcome.escalates));
    map.insert("profile".into(), system_json(&outcome.profile));
    Value::Object(map)
}

pub fn payroll_json(note: &PayrollNote) -> Value {
    let mut map = document("payroll_note");
    map.insert("bound".into(), rational_json(&note.bound));
    map.insert("max_payoff".into(), rational_json(&note.max_payoff));
    map.insert("payoffs_within_bound".into(), json!(note.payoffs_within_bound));
    map.insert("escalates".into(), json!(note.escalates));
    map.insert(
        "verdict".into(),
        json!(match note.verdict {
            PayrollVerdict::BoundDoesNotPreventEscalation => "bound-does-not-prevent-escalation",
            PayrollVerdict::BoundBelowPayoffs => "bound-below-payoffs",
        }),
    );
    Value::Object(map)
}

/// Pretty string with a trailing newline, the form written to stdout.
pub fn to_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zero_one;

    #[test]
    fn system_json_has_schema_and_sorted_keys() {
        let v = system_json(&zero_one::build_01_game());
        assert_eq!(v["schema"], json!(SCHEMA));
        assert_eq!(v["kind"], json!("game"));
        assert_eq!(v["equations"]["g01"]["head"], json!("A"));
    }

    #[test]
    fn rationals_export_as_exact_strings() {
        assert_eq!(rational_json(&Rational::new(1, 1)), json!("1"));
        assert_eq!(rational_json(&Rational::new(-2, 3)), json!("-2/3"));
    }

    #[test]
    fn conjecture_report_matches_golden_file() {
        let report = zero_one::conjecture_check(2, 2);
        let rendered = to_text(&conjecture_json(&report));
        let golden = include_str!("../tests/golden/conjecture_2_2.json");
        assert_eq!(rendered, golden);
    }
}
