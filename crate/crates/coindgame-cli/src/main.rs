//! Command-line front end.
//!
//! Exit codes: 0 when the queried property holds (or the command simply
//! succeeded), 1 when the property fails, 2 for usage/parse/validation
//! errors, 3 for semantic errors such as an undefined root payoff or a
//! non-full strategy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coindgame::dsl::{self, Declaration, SourceFile};
use coindgame::equilibria::{self, PayoffResult};
use coindgame::system::{AgentId, EquationSystem, Kind, Rational, Tree};
use coindgame::zero_one::{self, TruncationFamily, TruncationSpec};
use coindgame::{bisim, fixpoint, json as export, transform, unfold};

#[derive(Parser)]
#[command(name = "coindgame", version, about = "Analyses of infinite two-choice sequential games presented as finite equation systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for reports on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for randomized subcommands. The current subcommands are all
    /// deterministic; the flag is accepted for interface stability.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Converges,
    Strong,
    Spe,
    Nash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalWhat {
    Payoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
enum FamilyArg {
    F,
    K,
}

#[derive(Subcommand)]
enum Command {
    /// Check a predicate of a named profile; the verdict is the exit code.
    Check {
        #[arg(value_enum)]
        property: Property,
        file: PathBuf,
        /// Declaration to analyse.
        #[arg(long)]
        name: String,
    },
    /// Evaluate the payoff of a named profile.
    Eval {
        #[arg(value_enum)]
        what: EvalWhat,
        file: PathBuf,
        #[arg(long)]
        name: String,
    },
    /// Compare two declarations of the same kind for bisimilarity.
    Bisim {
        file: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Sum named strategies (declared with `of <agent>`) into a profile.
    Sum {
        file: PathBuf,
        /// Comma-separated strategy declaration names.
        #[arg(long, value_delimiter = ',', required = true)]
        strategies: Vec<String>,
        /// Also write the resulting profile to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sum named strategies and report whether play escalates.
    Escalate {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        strategies: Vec<String>,
    },
    /// Analyses specific to the 0,1-game.
    ZeroOne {
        #[command(subcommand)]
        analysis: ZeroOneCommand,
    },
    /// Unfold a declaration to a finite depth.
    Unfold {
        file: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum ZeroOneCommand {
    /// Enumerate eventually periodic profiles within bounds and compare
    /// subgame perfection against the eventual-stopping characterization.
    Conjecture {
        #[arg(long)]
        max_prefix: usize,
        #[arg(long)]
        max_cycle: usize,
    },
    /// Build a finite truncation and enumerate its backward-induction
    /// equilibria.
    Truncate {
        #[arg(long, value_enum, ignore_case = true)]
        family: FamilyArg,
        #[arg(long)]
        blocks: usize,
    },
}

enum CliError {
    /// Bad invocation, unreadable file, parse or validation failure.
    Usage(String),
    /// The inputs are well-formed but the question does not apply.
    Semantic(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Semantic(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Semantic(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Check {
            property,
            file,
            name,
        } => check(property, &file, &name, cli.format),
        Command::Eval { what, file, name } => eval(what, &file, &name, cli.format),
        Command::Bisim { file, left, right } => bisim_cmd(&file, &left, &right, cli.format),
        Command::Sum {
            file,
            strategies,
            out,
        } => sum_cmd(&file, &strategies, out.as_deref(), cli.format),
        Command::Escalate { file, strategies } => escalate_cmd(&file, &strategies, cli.format),
        Command::ZeroOne { analysis } => zero_one_cmd(analysis, cli.format),
        Command::Unfold { file, name, depth } => unfold_cmd(&file, &name, depth, cli.format),
    }
}

fn load(path: &Path) -> Result<SourceFile, CliError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    dsl::parse(&source).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn lookup<'a>(file: &'a SourceFile, name: &str) -> Result<&'a Declaration, CliError> {
    let found = file.find(name);
    match found.len() {
        0 => Err(CliError::Usage(format!("no declaration named `{name}`"))),
        1 => Ok(found[0]),
        _ => Err(CliError::Usage(format!(
            "`{name}` is declared more than once; rename one declaration"
        ))),
    }
}

fn require_profile(decl: &Declaration) -> Result<&EquationSystem, CliError> {
    if decl.kind != Kind::Profile {
        return Err(CliError::Usage(format!(
            "`{}` is a {}, but this command needs a profile",
            decl.name, decl.kind
        )));
    }
    Ok(&decl.system)
}

fn emit(format: Format, text: &str, json: &Value) {
    match format {
        Format::Text => println!("{text}"),
        Format::Json => print!("{}", export::to_text(json)),
    }
}

fn verdict_code(holds: bool) -> ExitCode {
    if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn check(
    property: Property,
    path: &Path,
    name: &str,
    format: Format,
) -> Result<ExitCode, CliError> {
    let file = load(path)?;
    let decl = lookup(&file, name)?;
    let sys = require_profile(decl)?;
    let root = sys.root();
    let label = match property {
        Property::Converges => "converges",
        Property::Strong => "strongly_converges",
        Property::Spe => "spe",
        Property::Nash => "nash",
    };

    if property == Property::Nash {
        let outcome = equilibria::nash(sys, root).map_err(|e| CliError::Semantic(e.to_string()))?;
        let mut text = format!("{label}({name}): {}", outcome.is_nash);
        if let Some(w) = &outcome.witness {
            write!(
                text,
                "\n  agent {} improves {} -> {} by flipping:",
                w.agent,
                fmt_rational(&w.payoff_before),
                fmt_rational(&w.payoff_after)
            )
            .expect("string write");
            for (node, to) in &w.flips {
                write!(text, "\n    {node} -> {to}").expect("string write");
            }
        }
        let mut doc = export::nash_json(&outcome);
        annotate(&mut doc, name);
        emit(format, &text, &doc);
        return Ok(verdict_code(outcome.is_nash));
    }

    let holds = match property {
        Property::Converges => fixpoint::converges(sys, root),
        Property::Strong => fixpoint::strongly_converges(sys, root),
        Property::Spe => equilibria::is_spe(sys, root),
        Property::Nash => unreachable!("handled above"),
    };
    let doc = json!({
        "schema": export::SCHEMA,
        "type": "check",
        "property": label,
        "name": name,
        "holds": holds,
    });
    emit(format, &format!("{label}({name}): {holds}"), &doc);
    Ok(verdict_code(holds))
}

fn eval(what: EvalWhat, path: &Path, name: &str, format: Format) -> Result<ExitCode, CliError> {
    let EvalWhat::Payoff = what;
    let file = load(path)?;
    let decl = lookup(&file, name)?;
    let sys = require_profile(decl)?;
    let result = equilibria::payoff(sys, sys.root());
    let text = match &result {
        PayoffResult::Defined(p) => format!("payoff({name}) = {p}"),
        PayoffResult::Undefined { cycle } => format!(
            "payoff({name}) undefined; play cycles: {}",
            cycle
                .iter()
                .map(|n| n.name())
                .collect::<Vec<_>>()
                .join(" -> ")
        ),
    };
    let mut doc = export::payoff_result_json(&result);
    annotate(&mut doc, name);
    emit(format, &text, &doc);
    Ok(ExitCode::SUCCESS)
}

fn bisim_cmd(path: &Path, left: &str, right: &str, format: Format) -> Result<ExitCode, CliError> {
    let file = load(path)?;
    let l = lookup(&file, left)?;
    let r = lookup(&file, right)?;
    let same = bisim::bisimilar_roots(&l.system, &r.system)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let doc = json!({
        "schema": export::SCHEMA,
        "type": "bisim",
        "left": left,
        "right": right,
        "bisimilar": same,
    });
    emit(format, &format!("bisimilar({left}, {right}): {same}"), &doc);
    Ok(verdict_code(same))
}

fn strategy_family(
    file: &SourceFile,
    names: &[String],
) -> Result<BTreeMap<AgentId, EquationSystem>, CliError> {
    let mut family = BTreeMap::new();
    for name in names {
        let decl = lookup(file, name)?;
        if decl.kind != Kind::Strategy {
            return Err(CliError::Usage(format!(
                "`{name}` is a {}, but summation needs strategies",
                decl.kind
            )));
        }
        let Some(agent) = decl.of.clone() else {
            return Err(CliError::Semantic(format!(
                "strategy `{name}` has no `of <agent>` annotation, so its owner is unknown"
            )));
        };
        if family.insert(agent.clone(), decl.system.clone()).is_some() {
            return Err(CliError::Semantic(format!(
                "two strategies declared for agent `{agent}`"
            )));
        }
    }
    Ok(family)
}

fn sum_cmd(
    path: &Path,
    names: &[String],
    out: Option<&Path>,
    format: Format,
) -> Result<ExitCode, CliError> {
    let file = load(path)?;
    let family = strategy_family(&file, names)?;
    let profile = transform::sum_strategies(&family)
        .map_err(|e| CliError::Semantic(e.to_string()))?;
    let rendered = dsl::render(&profile);
    if let Some(out) = out {
        std::fs::write(out, &rendered)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    }
    emit(
        format,
        rendered.trim_end(),
        &export::system_json(&profile),
    );
    Ok(ExitCode::SUCCESS)
}

fn escalate_cmd(path: &Path, names: &[String], format: Format) -> Result<ExitCode, CliError> {
    let file = load(path)?;
    let family = strategy_family(&file, names)?;
    let outcome =
        zero_one::escalation_check(&family).map_err(|e| CliError::Semantic(e.to_string()))?;
    let mut text = format!("escalates: {}", outcome.escalates);
    if !outcome.escalates {
        if let PayoffResult::Defined(p) =
            equilibria::payoff(&outcome.profile, outcome.profile.root())
        {
            write!(text, "\npayoff = {p}").expect("string write");
        }
    }
    emit(format, &text, &export::escalation_json(&outcome));
    Ok(verdict_code(outcome.escalates))
}

fn zero_one_cmd(analysis: ZeroOneCommand, format: Format) -> Result<ExitCode, CliError> {
    match analysis {
        ZeroOneCommand::Conjecture {
            max_prefix,
            max_cycle,
        } => {
            if max_cycle == 0 {
                return Err(CliError::Usage("--max-cycle must be at least 1".into()));
            }
            let report = zero_one::conjecture_check(max_prefix, max_cycle);
            let mut text = format!(
                "bounds: prefix <= {max_prefix}, cycle <= {max_cycle}\nprofiles checked: {}\nverdict: {}",
                report.profiles_checked,
                match report.verdict {
                    zero_one::ConjectureVerdict::ConsistentAtBound => "consistent-at-bound",
                    zero_one::ConjectureVerdict::Refuted => "refuted",
                }
            );
            for word in &report.counterexamples {
                write!(text, "\ncounterexample: {word}").expect("string write");
            }
            let ok = report.counterexamples.is_empty();
            emit(format, &text, &export::conjecture_json(&report));
            Ok(verdict_code(ok))
        }
        ZeroOneCommand::Truncate { family, blocks } => {
            if blocks == 0 {
                return Err(CliError::Usage("--blocks must be at least 1".into()));
            }
            let family = match family {
                FamilyArg::F => TruncationFamily::F,
                FamilyArg::K => TruncationFamily::K,
            };
            let game = zero_one::truncate_family(&TruncationSpec { family, blocks });
            let equilibria_set = equilibria::enumerate_bi(&game)
                .expect("truncations are finite games");
            let mut text = dsl::render(&game);
            writeln!(text, "\nbackward-induction equilibria: {}", equilibria_set.len())
                .expect("string write");
            let mut eq_docs = Vec::new();
            for profile in &equilibria_set {
                let choices: Vec<String> = profile
                    .equations()
                    .filter_map(|(id, node)| node.chosen().map(|c| format!("{id}={c}")))
                    .collect();
                let payoff = equilibria::payoff(profile, profile.root());
                let payoff_map = payoff.defined().expect("finite profile").clone();
                writeln!(text, "  {} with payoff {}", choices.join(" "), payoff_map)
                    .expect("string write");
                eq_docs.push(json!({
                    "choices": Value::Object(
                        profile
                            .equations()
                            .filter_map(|(id, node)| {
                                node.chosen().map(|c| (id.name().to_string(), json!(c.to_string())))
                            })
                            .collect()
                    ),
                    "payoff": export::payoff_map_json(&payoff_map),
                }));
            }
            let doc = json!({
                "schema": export::SCHEMA,
                "type": "truncation",
                "family": family.to_string(),
                "blocks": blocks,
                "game": export::system_json(&game),
                "equilibria": eq_docs,
            });
            emit(format, text.trim_end(), &doc);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn unfold_cmd(path: &Path, name: &str, depth: usize, format: Format) -> Result<ExitCode, CliError> {
    let file = load(path)?;
    let decl = lookup(&file, name)?;
    let tree = unfold(&decl.system, decl.system.root(), depth);
    let mut text = String::new();
    render_tree(&tree, 0, None, &mut text);
    let doc = json!({
        "schema": export::SCHEMA,
        "type": "unfold",
        "name": name,
        "depth": depth,
        "tree": export::tree_json(&tree),
    });
    emit(format, text.trim_end(), &doc);
    Ok(ExitCode::SUCCESS)
}

fn render_tree(tree: &Tree, indent: usize, label: Option<&str>, out: &mut String) {
    let pad = "  ".repeat(indent);
    let prefix = label.map(|l| format!("{l}: ")).unwrap_or_default();
    match tree {
        Tree::Leaf(p) => {
            writeln!(out, "{pad}{prefix}leaf{{{p}}}").expect("string write");
        }
        Tree::Cut => {
            writeln!(out, "{pad}{prefix}<cut>").expect("string write");
        }
        Tree::Branch {
            head,
            chosen,
            down,
            right,
        } => {
            let head_text = match head {
                coindgame::system::Head::Agent(a) => a.name().to_string(),
                coindgame::system::Head::Move(c) => format!("move[{c}]"),
            };
            let chosen_text = chosen
                .map(|c| format!(" !{c}"))
                .unwrap_or_default();
            writeln!(out, "{pad}{prefix}{head_text}{chosen_text}").expect("string write");
            render_tree(down, indent + 1, Some("d"), out);
            render_tree(right, indent + 1, Some("r"), out);
        }
    }
}

fn fmt_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn annotate(doc: &mut Value, name: &str) {
    if let Value::Object(map) = doc {
        map.insert("name".into(), json!(name));
    }
}
