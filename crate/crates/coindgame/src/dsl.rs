//! Text format for equation systems.
//!
//! ```text
//! # the 0,1-game and one of its equilibria
//! agents A B
//!
//! game g01 =
//!   g01: A(d -> l01, r -> g10),
//!   g10: B(d -> l10, r -> g01),
//!   l01: leaf{A: 0, B: 1},
//!   l10: leaf{A: 1, B: 0}
//!
//! profile s10a =
//!   s10a: A(d -> l01, r! -> s10b),
//!   s10b: B(d! -> l10, r -> s10a),
//!   l01: leaf{A: 0, B: 1},
//!   l10: leaf{A: 1, B: 0}
//! ```
//!
//! Profiles mark exactly one child per branch with `!` (the chosen move).
//! Strategies use an agent head for the opponent's nodes and the head
//! `move` for committed nodes, where `!` marks the committed child. Games
//! carry no markers. Payoffs are exact rationals (`3`, `-1/2`); decimal
//! notation is rejected. The first equation of a declaration is its root.
//! `#` starts a line comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::system::{
    validate_system, AgentId, Choice, EquationSystem, Head, Kind, Node, NodeId, PayoffMap,
    Rational, RawNode, RawSystem, ValidateError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("unknown agent `{name}` at {line}:{col}")]
    UnknownAgent { line: u32, col: u32, name: String },
    #[error("duplicate name `{name}` at {line}:{col}")]
    DuplicateName { line: u32, col: u32, name: String },
    #[error("missing choice marker at {line}:{col}: exactly one child must be marked with `!`")]
    MissingChoiceMarker { line: u32, col: u32 },
    #[error("stray choice marker at {line}:{col}")]
    StrayChoiceMarker { line: u32, col: u32 },
    #[error("invalid {kind} `{name}` at {line}:{col}: {source}")]
    Invalid {
        line: u32,
        col: u32,
        kind: Kind,
        name: String,
        source: ValidateError,
    },
}

impl ParseError {
    /// Line and column (both 1-based) the diagnostic points at.
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownAgent { line, col, .. }
            | ParseError::DuplicateName { line, col, .. }
            | ParseError::MissingChoiceMarker { line, col }
            | ParseError::StrayChoiceMarker { line, col }
            | ParseError::Invalid { line, col, .. } => (*line, *col),
        }
    }
}

/// One named declaration from a source file.
#[derive(Debug, Clone)]
pub struct Declaration {
    pub kind: Kind,
    pub name: String,
    /// The `of` annotation; names the agent a strategy belongs to.
    pub of: Option<AgentId>,
    pub system: EquationSystem,
    pub line: u32,
    pub col: u32,
}

/// A parsed source file: the accumulated agent set and the declarations in
/// order of appearance.
#[derive(Debug, Clone, Default)]
pub struct SourceFile {
    pub agents: BTreeSet<AgentId>,
    pub declarations: Vec<Declaration>,
}

impl SourceFile {
    pub fn find(&self, name: &str) -> Vec<&Declaration> {
        self.declarations
            .iter()
            .filter(|d| d.name == name)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    KwAgents,
    KwGame,
    KwProfile,
    KwStrategy,
    KwOf,
    KwLeaf,
    KwMove,
    KwD,
    KwR,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Bang,
    Equals,
    Arrow,
    Slash,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::KwAgents => "`agents`".into(),
            Tok::KwGame => "`game`".into(),
            Tok::KwProfile => "`profile`".into(),
            Tok::KwStrategy => "`strategy`".into(),
            Tok::KwOf => "`of`".into(),
            Tok::KwLeaf => "`leaf`".into(),
            Tok::KwMove => "`move`".into(),
            Tok::KwD => "`d`".into(),
            Tok::KwR => "`r`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = source.chars().peekable();

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let (tline, tcol) = (line, col);
        let Some(&c) = chars.peek() else { break };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' | '}' | '(' | ')' | ':' | ',' | '!' | '=' | '/' => {
                bump!();
                tokens.push(Token {
                    tok: match c {
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ':' => Tok::Colon,
                        ',' => Tok::Comma,
                        '!' => Tok::Bang,
                        '=' => Tok::Equals,
                        _ => Tok::Slash,
                    },
                    line: tline,
                    col: tcol,
                });
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('>') => {
                        bump!();
                        tokens.push(Token {
                            tok: Tok::Arrow,
                            line: tline,
                            col: tcol,
                        });
                    }
                    Some(d) if d.is_ascii_digit() => {
                        let mut digits = String::from("-");
                        while let Some(&d) = chars.peek() {
                            if !d.is_ascii_digit() {
                                break;
                            }
                            digits.push(d);
                            bump!();
                        }
                        let value = digits.parse::<i64>().map_err(|_| ParseError::Syntax {
                            line: tline,
                            col: tcol,
                            message: format!("integer literal `{digits}` out of range"),
                        })?;
                        tokens.push(Token {
                            tok: Tok::Int(value),
                            line: tline,
                            col: tcol,
                        });
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            line: tline,
                            col: tcol,
                            message: "expected `->` or a number after `-`".into(),
                        })
                    }
                }
            }
            d if d.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    digits.push(d);
                    bump!();
                }
                // Reject decimal notation outright; payoffs are rationals.
                if chars.peek() == Some(&'.') {
                    return Err(ParseError::Syntax {
                        line: tline,
                        col: tcol,
                        message: "decimal numbers are not supported; use p/q rationals".into(),
                    });
                }
                let value = digits.parse::<i64>().map_err(|_| ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("integer literal `{digits}` out of range"),
                })?;
                tokens.push(Token {
                    tok: Tok::Int(value),
                    line: tline,
                    col: tcol,
                });
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let mut word = String::new();
                while let Some(&a) = chars.peek() {
                    if !(a.is_ascii_alphanumeric() || a == '_' || a == '\'') {
                        break;
                    }
                    word.push(a);
                    bump!();
                }
                let tok = match word.as_str() {
                    "agents" => Tok::KwAgents,
                    "game" => Tok::KwGame,
                    "profile" => Tok::KwProfile,
                    "strategy" => Tok::KwStrategy,
                    "of" => Tok::KwOf,
                    "leaf" => Tok::KwLeaf,
                    "move" => Tok::KwMove,
                    "d" => Tok::KwD,
                    "r" => Tok::KwR,
                    _ => Tok::Ident(word),
                };
                tokens.push(Token {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_line: u32,
    last_col: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if let Some(t) = &t {
            self.last_line = t.line;
            self.last_col = t.col;
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (u32, u32) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => (self.last_line, self.last_col),
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: &Tok) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if &t.tok == want => Ok(self.next().expect("peeked")),
            Some(t) => Err(self.syntax(format!(
                "expected {}, found {}",
                want.describe(),
                t.tok.describe()
            ))),
            None => Err(self.syntax(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, u32, u32), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(_), ..
            }) => {
                let t = self.next().expect("peeked");
                let Tok::Ident(name) = t.tok else { unreachable!() };
                Ok((name, t.line, t.col))
            }
            Some(t) => Err(self.syntax(format!("expected {what}, found {}", t.tok.describe()))),
            None => Err(self.syntax(format!("expected {what}, found end of input"))),
        }
    }
}

/// Parsed branch child: target and whether it carried a `!` marker.
struct ChildRef {
    target: String,
    marked: bool,
    mark_line: u32,
    mark_col: u32,
}

/// Parses a source file into validated systems.
pub fn parse(source: &str) -> Result<SourceFile, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last_line: 1,
        last_col: 1,
    };
    let mut file = SourceFile::default();
    let mut names: BTreeMap<Kind, BTreeSet<String>> = BTreeMap::new();

    if p.peek().is_none() {
        return Err(p.syntax("expected at least one declaration"));
    }

    while let Some(token) = p.peek() {
        match token.tok {
            Tok::KwAgents => {
                p.next();
                let (first, line, col) = p.expect_ident("an agent name")?;
                let mut batch = vec![(first, line, col)];
                while let Some(Token {
                    tok: Tok::Ident(_), ..
                }) = p.peek()
                {
                    let (name, line, col) = p.expect_ident("an agent name")?;
                    batch.push((name, line, col));
                }
                for (name, line, col) in batch {
                    if !file.agents.insert(AgentId::new(name.clone())) {
                        return Err(ParseError::DuplicateName { line, col, name });
                    }
                }
            }
            Tok::KwGame | Tok::KwProfile | Tok::KwStrategy => {
                let decl = parse_declaration(&mut p, &file.agents)?;
                let taken = names.entry(decl.kind).or_default();
                if !taken.insert(decl.name.clone()) {
                    return Err(ParseError::DuplicateName {
                        line: decl.line,
                        col: decl.col,
                        name: decl.name,
                    });
                }
                file.declarations.push(decl);
            }
            _ => {
                return Err(p.syntax(format!(
                    "expected a declaration, found {}",
                    token.tok.describe()
                )))
            }
        }
    }
    Ok(file)
}

fn parse_declaration(
    p: &mut Parser,
    agents: &BTreeSet<AgentId>,
) -> Result<Declaration, ParseError> {
    let kind_token = p.next().expect("caller peeked a kind keyword");
    let kind = match kind_token.tok {
        Tok::KwGame => Kind::Game,
        Tok::KwProfile => Kind::Profile,
        Tok::KwStrategy => Kind::Strategy,
        _ => unreachable!(),
    };
    let (name, name_line, name_col) = p.expect_ident("a declaration name")?;

    let mut of = None;
    if let Some(Token { tok: Tok::KwOf, .. }) = p.peek() {
        p.next();
        let (agent, line, col) = p.expect_ident("an agent name")?;
        if !agents.contains(&AgentId::new(agent.clone())) {
            return Err(ParseError::UnknownAgent {
                line,
                col,
                name: agent,
            });
        }
        of = Some(AgentId::new(agent));
    }
    p.expect(&Tok::Equals)?;

    let mut equations: Vec<(NodeId, RawNode)> = Vec::new();
    loop {
        let (eq_name, eq_line, eq_col) = p.expect_ident("an equation name")?;
        p.expect(&Tok::Colon)?;
        let body = parse_node(p, kind, agents, eq_line, eq_col)?;
        equations.push((NodeId::new(eq_name), body));
        match p.peek() {
            Some(Token {
                tok: Tok::Comma, ..
            }) => {
                p.next();
            }
            _ => break,
        }
    }

    let root = equations
        .first()
        .map(|(id, _)| id.clone())
        .expect("at least one equation was parsed");
    let raw = RawSystem {
        name: name.clone(),
        kind,
        agents: agents.clone(),
        equations,
        root,
    };
    let system = validate_system(raw).map_err(|source| ParseError::Invalid {
        line: name_line,
        col: name_col,
        kind,
        name: name.clone(),
        source,
    })?;
    Ok(Declaration {
        kind,
        name,
        of,
        system,
        line: name_line,
        col: name_col,
    })
}

fn parse_node(
    p: &mut Parser,
    kind: Kind,
    agents: &BTreeSet<AgentId>,
    node_line: u32,
    node_col: u32,
) -> Result<RawNode, ParseError> {
    match p.peek().map(|t| t.tok.clone()) {
        Some(Tok::KwLeaf) => {
            p.next();
            p.expect(&Tok::LBrace)?;
            let mut entries: Vec<(AgentId, Rational)> = Vec::new();
            loop {
                let (agent, line, col) = p.expect_ident("an agent name")?;
                let agent_id = AgentId::new(agent.clone());
                if !agents.contains(&agent_id) {
                    return Err(ParseError::UnknownAgent {
                        line,
                        col,
                        name: agent,
                    });
                }
                if entries.iter().any(|(a, _)| a == &agent_id) {
                    return Err(ParseError::DuplicateName {
                        line,
                        col,
                        name: agent,
                    });
                }
                p.expect(&Tok::Colon)?;
                let value = parse_rational(p)?;
                entries.push((agent_id, value));
                match p.peek() {
                    Some(Token {
                        tok: Tok::Comma, ..
                    }) => {
                        p.next();
                    }
                    _ => break,
                }
            }
            p.expect(&Tok::RBrace)?;
            Ok(RawNode::Leaf(PayoffMap::new(entries)))
        }
        Some(Tok::Ident(_)) | Some(Tok::KwMove) => {
            let is_move = matches!(p.peek().map(|t| &t.tok), Some(Tok::KwMove));
            let (head_name, head_line, head_col) = if is_move {
                let t = p.next().expect("peeked");
                ("move".to_string(), t.line, t.col)
            } else {
                p.expect_ident("a branch head")?
            };
            if is_move && kind != Kind::Strategy {
                return Err(ParseError::Syntax {
                    line: head_line,
                    col: head_col,
                    message: "head `move` is only allowed in strategies".into(),
                });
            }
            if !is_move && !agents.contains(&AgentId::new(head_name.clone())) {
                return Err(ParseError::UnknownAgent {
                    line: head_line,
                    col: head_col,
                    name: head_name,
                });
            }
            p.expect(&Tok::LParen)?;
            let down = parse_child(p, &Tok::KwD)?;
            p.expect(&Tok::Comma)?;
            let right = parse_child(p, &Tok::KwR)?;
            p.expect(&Tok::RParen)?;

            let marked = |c: &ChildRef| c.marked;
            let marked_choice = match (marked(&down), marked(&right)) {
                (false, false) => None,
                (true, false) => Some(Choice::Down),
                (false, true) => Some(Choice::Right),
                (true, true) => {
                    return Err(ParseError::StrayChoiceMarker {
                        line: right.mark_line,
                        col: right.mark_col,
                    })
                }
            };

            let needs_marker = kind == Kind::Profile || (kind == Kind::Strategy && is_move);
            let (head, chosen) = if needs_marker {
                let c = marked_choice.ok_or(ParseError::MissingChoiceMarker {
                    line: node_line,
                    col: node_col,
                })?;
                if is_move {
                    (Head::Move(c), None)
                } else {
                    (Head::Agent(AgentId::new(head_name)), Some(c))
                }
            } else {
                if let Some(c) = marked_choice {
                    let (line, col) = if c == Choice::Down {
                        (down.mark_line, down.mark_col)
                    } else {
                        (right.mark_line, right.mark_col)
                    };
                    return Err(ParseError::StrayChoiceMarker { line, col });
                }
                (Head::Agent(AgentId::new(head_name)), None)
            };
            Ok(RawNode::Branch {
                head,
                chosen,
                down: NodeId::new(down.target),
                right: NodeId::new(right.target),
            })
        }
        Some(other) => Err(p.syntax(format!(
            "expected `leaf` or a branch head, found {}",
            other.describe()
        ))),
        None => Err(p.syntax("expected a node, found end of input")),
    }
}

fn parse_child(p: &mut Parser, label: &Tok) -> Result<ChildRef, ParseError> {
    p.expect(label)?;
    let mut marked = false;
    let (mut mark_line, mut mark_col) = (0, 0);
    if let Some(Token { tok: Tok::Bang, .. }) = p.peek() {
        let t = p.next().expect("peeked");
        marked = true;
        mark_line = t.line;
        mark_col = t.col;
    }
    p.expect(&Tok::Arrow)?;
    let (target, _, _) = p.expect_ident("a node name")?;
    Ok(ChildRef {
        target,
        marked,
        mark_line,
        mark_col,
    })
}

fn parse_rational(p: &mut Parser) -> Result<Rational, ParseError> {
    let numer = match p.peek() {
        Some(Token { tok: Tok::Int(_), .. }) => {
            let t = p.next().expect("peeked");
            let Tok::Int(n) = t.tok else { unreachable!() };
            n
        }
        Some(t) => {
            return Err(p.syntax(format!(
                "expected an integer, found {}",
                t.tok.describe()
            )))
        }
        None => return Err(p.syntax("expected an integer, found end of input")),
    };
    if let Some(Token { tok: Tok::Slash, .. }) = p.peek() {
        p.next();
        let (line, col) = p.here();
        match p.peek() {
            Some(Token { tok: Tok::Int(d), .. }) if *d > 0 => {
                let d = *d;
                p.next();
                Ok(Rational::new(numer, d))
            }
            Some(Token { tok: Tok::Int(d), .. }) => Err(ParseError::Syntax {
                line,
                col,
                message: format!("denominator must be positive, found `{d}`"),
            }),
            _ => Err(p.syntax("expected a positive denominator")),
        }
    } else {
        Ok(Rational::new(numer, 1))
    }
}

fn fmt_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn render_node(node: &Node, kind: Kind) -> String {
    match node {
        Node::Leaf(p) => {
            let entries: Vec<String> = p
                .iter()
                .map(|(a, v)| format!("{a}: {}", fmt_rational(v)))
                .collect();
            format!("leaf{{{}}}", entries.join(", "))
        }
        Node::Branch {
            head,
            chosen,
            down,
            right,
        } => {
            let (head_text, committed) = match head {
                Head::Agent(a) => (a.name().to_string(), None),
                Head::Move(c) => ("move".to_string(), Some(*c)),
            };
            let marked = match kind {
                Kind::Profile => *chosen,
                Kind::Strategy => committed,
                Kind::Game => None,
            };
            let mark = |c: Choice| if marked == Some(c) { "!" } else { "" };
            format!(
                "{head_text}(d{} -> {down}, r{} -> {right})",
                mark(Choice::Down),
                mark(Choice::Right)
            )
        }
    }
}

/// Deterministic text form: one `agents` line, then the system with its
/// root equation first and the remaining equations in name order.
/// `parse(render(s))` yields a system bisimilar to `s`.
pub fn render(sys: &EquationSystem) -> String {
    let mut out = String::new();
    let agents: Vec<&str> = sys.agents().iter().map(|a| a.name()).collect();
    writeln!(out, "agents {}", agents.join(" ")).expect("string write");
    writeln!(out).expect("string write");
    writeln!(out, "{} {} =", sys.kind(), sys.name()).expect("string write");
    let mut ids: Vec<&NodeId> = vec![sys.root()];
    ids.extend(sys.node_ids().filter(|id| *id != sys.root()));
    let lines: Vec<String> = ids
        .iter()
        .map(|id| format!("  {id}: {}", render_node(sys.node(id), sys.kind())))
        .collect();
    writeln!(out, "{}", lines.join(",\n")).expect("string write");
    out
}
