//! Text format for systems: action rules per agent plus one initial state.
//!
//! ```text
//! # chain of attacks
//! agent1 {
//!   g(a) & n(a) => pub+ a(a) & priv- n(a);
//! }
//! agent2 {
//!   a(a) & n(b) & e(b,a) => pub+ a(b,a) & priv- n(b);
//! }
//! initial {
//!   private1: g(a), n(a);
//!   public: ;
//!   private2: n(b), e(b,a);
//! }
//! ```
//!
//! Tokens: `&` conjunction, `|` disjunction, `!` classical negation (a
//! formula connective in conditions, a literal sign in state lists and action
//! units), `~` object-level negation inside terms, `priv+ priv- pub+ pub-`
//! the four action operators, `=>` between condition and head, `#` line
//! comments. Precedence `!` over `&` over `|`; parentheses allowed anywhere.
//! The grammar in EBNF:
//!
//! ```text
//! document   = [ "name" string ";" ] [ agent1 ] [ agent2 ] initial ;
//! agent1     = "agent1" "{" { rule } "}" ;
//! agent2     = "agent2" "{" { rule } "}" ;
//! rule       = condition "=>" action "；" ;
//! condition  = cand { "|" cand } ;
//! cand       = cprim { "&" cprim } ;
//! cprim      = "!" cprim | "(" condition ")" | atom ;
//! action     = aand { "|" aand } ;
//! aand       = aprim { "&" aprim } ;
//! aprim      = ( "priv+" | "priv-" | "pub+" | "pub-" ) literal
//!            | "(" action ")" ;
//! initial    = "initial" "{" "private1" ":" literals ";"
//!                            "public"   ":" literals ";"
//!                            "private2" ":" literals ";" "}" ;
//! literals   = [ literal { "," literal } ] ;
//! literal    = [ "!" ] atom ;
//! atom       = ident [ "(" term { "," term } ")" ] ;
//! term       = [ "~" ] ident ;
//! ```

use std::fmt;

use thiserror::Error;

use crate::model::{
    ActionFormula, ActionOp, ActionRule, ActionUnit, Atom, ConditionFormula, ExecutionState,
    Literal, StateSet, System, Term,
};

/// A parsed document: one system with exactly one initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub system: System,
    pub initial: ExecutionState,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("{line}:{col}: {message}")]
    Semantic { line: usize, col: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::Semantic { line, col, .. } => {
                (*line, *col)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Op(ActionOp),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    Amp,
    Pipe,
    Bang,
    Tilde,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Op(op) => write!(f, "`{op}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Arrow => write!(f, "`=>`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = input.chars().peekable();
    macro_rules! push {
        ($t:expr) => {
            toks.push(Spanned { tok: $t, line, col })
        };
    }
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' | '}' | '(' | ')' | ',' | ';' | ':' | '&' | '|' | '!' | '~' => {
                push!(match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '!' => Tok::Bang,
                    _ => Tok::Tilde,
                });
                chars.next();
                col += 1;
            }
            '=' => {
                let start = col;
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    toks.push(Spanned { tok: Tok::Arrow, line, col: start });
                } else {
                    return Err(ParseError::Syntax {
                        line,
                        col: start,
                        expected: "`=>`".into(),
                        found: "`=`".into(),
                    });
                }
            }
            '"' => {
                let start = col;
                chars.next();
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            col += 1;
                            break;
                        }
                        Some('\n') | None => {
                            return Err(ParseError::Syntax {
                                line,
                                col: start,
                                expected: "closing `\"`".into(),
                                found: "end of line".into(),
                            });
                        }
                        Some(ch) => {
                            col += 1;
                            s.push(ch);
                        }
                    }
                }
                toks.push(Spanned { tok: Tok::Str(s), line, col: start });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = col;
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        s.push(ch);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                // `priv`/`pub` fuse with a following sign into an action operator
                let tok = match (s.as_str(), chars.peek()) {
                    ("priv", Some('+')) => {
                        chars.next();
                        col += 1;
                        Tok::Op(ActionOp::PrivAdd)
                    }
                    ("priv", Some('-')) => {
                        chars.next();
                        col += 1;
                        Tok::Op(ActionOp::PrivDel)
                    }
                    ("pub", Some('+')) => {
                        chars.next();
                        col += 1;
                        Tok::Op(ActionOp::PubAdd)
                    }
                    ("pub", Some('-')) => {
                        chars.next();
                        col += 1;
                        Tok::Op(ActionOp::PubDel)
                    }
                    _ => Tok::Ident(s),
                };
                toks.push(Spanned { tok, line, col: start });
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    expected: "a token".into(),
                    found: format!("`{other}`"),
                });
            }
        }
    }
    toks.push(Spanned { tok: Tok::Eof, line, col });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: expected.into(),
            found: t.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            _ => Err(self.err(&format!("`{kw}`"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn document(&mut self) -> Result<SpecDocument, ParseError> {
        let mut name = None;
        if self.at_keyword("name") {
            self.next();
            match &self.peek().tok {
                Tok::Str(s) => {
                    name = Some(s.clone());
                    self.next();
                }
                _ => return Err(self.err("a quoted string")),
            }
            self.expect(Tok::Semi, "`;` after name")?;
        }
        let rules1 = if self.at_keyword("agent1") { self.agent_block("agent1")? } else { Vec::new() };
        let rules2 = if self.at_keyword("agent2") { self.agent_block("agent2")? } else { Vec::new() };
        if !self.at_keyword("initial") {
            let t = self.peek();
            return Err(ParseError::Semantic {
                line: t.line,
                col: t.col,
                message: "missing initial section".into(),
            });
        }
        self.next();
        self.expect(Tok::LBrace, "`{`")?;
        self.keyword("private1")?;
        self.expect(Tok::Colon, "`:`")?;
        let s1 = self.literal_list()?;
        self.expect(Tok::Semi, "`;`")?;
        self.keyword("public")?;
        self.expect(Tok::Colon, "`:`")?;
        let p = self.literal_list()?;
        self.expect(Tok::Semi, "`;`")?;
        self.keyword("private2")?;
        self.expect(Tok::Colon, "`:`")?;
        let s2 = self.literal_list()?;
        self.expect(Tok::Semi, "`;`")?;
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::Eof, "end of input")?;
        let initial = ExecutionState::initial(
            StateSet::from_literals(s1),
            StateSet::from_literals(p),
            StateSet::from_literals(s2),
        );
        Ok(SpecDocument {
            system: System { rules1, rules2, initials: vec![initial.clone()] },
            initial,
            name,
        })
    }

    fn agent_block(&mut self, kw: &str) -> Result<Vec<ActionRule>, ParseError> {
        self.keyword(kw)?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut rules = Vec::new();
        while !self.eat(Tok::RBrace) {
            let condition = self.condition()?;
            self.expect(Tok::Arrow, "`=>`")?;
            let head = self.action_formula()?;
            self.expect(Tok::Semi, "`;` after rule")?;
            rules.push(ActionRule { condition, head });
        }
        Ok(rules)
    }

    fn condition(&mut self) -> Result<ConditionFormula, ParseError> {
        let mut f = self.cond_and()?;
        while self.eat(Tok::Pipe) {
            let r = self.cond_and()?;
            f = ConditionFormula::Or(Box::new(f), Box::new(r));
        }
        Ok(f)
    }

    fn cond_and(&mut self) -> Result<ConditionFormula, ParseError> {
        let mut f = self.cond_prim()?;
        while self.eat(Tok::Amp) {
            let r = self.cond_prim()?;
            f = ConditionFormula::And(Box::new(f), Box::new(r));
        }
        Ok(f)
    }

    fn cond_prim(&mut self) -> Result<ConditionFormula, ParseError> {
        if self.eat(Tok::Bang) {
            return Ok(ConditionFormula::Not(Box::new(self.cond_prim()?)));
        }
        if self.eat(Tok::LParen) {
            let f = self.condition()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        Ok(ConditionFormula::Atom(self.atom()?))
    }

    fn action_formula(&mut self) -> Result<ActionFormula, ParseError> {
        let mut f = self.action_and()?;
        while self.eat(Tok::Pipe) {
            let r = self.action_and()?;
            f = ActionFormula::Or(Box::new(f), Box::new(r));
        }
        Ok(f)
    }

    fn action_and(&mut self) -> Result<ActionFormula, ParseError> {
        let mut f = self.action_prim()?;
        while self.eat(Tok::Amp) {
            let r = self.action_prim()?;
            f = ActionFormula::And(Box::new(f), Box::new(r));
        }
        Ok(f)
    }

    fn action_prim(&mut self) -> Result<ActionFormula, ParseError> {
        if self.eat(Tok::LParen) {
            let f = self.action_formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        match self.peek().tok.clone() {
            Tok::Op(op) => {
                self.next();
                let literal = self.literal()?;
                Ok(ActionFormula::Unit(ActionUnit::new(op, literal)))
            }
            _ => Err(self.err("an action operator (`priv+`, `priv-`, `pub+`, `pub-`) or `(`")),
        }
    }

    fn literal_list(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut lits = Vec::new();
        if matches!(self.peek().tok, Tok::Semi) {
            return Ok(lits);
        }
        lits.push(self.literal()?);
        while self.eat(Tok::Comma) {
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = self.eat(Tok::Bang);
        let atom = self.atom()?;
        Ok(if negated { Literal::negative(atom) } else { Literal::positive(atom) })
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let predicate = self.ident("an atom")?;
        let mut args = Vec::new();
        if self.eat(Tok::LParen) {
            args.push(self.term()?);
            while self.eat(Tok::Comma) {
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(Atom::new(predicate, args))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat(Tok::Tilde) {
            Ok(Term::Neg(self.ident("a constant")?))
        } else {
            Ok(Term::Const(self.ident("a constant or `~`")?))
        }
    }
}

/// Parse a full document.
pub fn parse_spec(text: &str) -> Result<SpecDocument, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.document()
}

/// Parse a single literal, e.g. `!b(~a)`.
pub fn parse_literal(text: &str) -> Result<Literal, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let lit = p.literal()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(lit)
}

/// Parse a single action unit, e.g. `pub+ a(b,a)`.
pub fn parse_action_unit(text: &str) -> Result<ActionUnit, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    match p.peek().tok.clone() {
        Tok::Op(op) => {
            p.next();
            let literal = p.literal()?;
            p.expect(Tok::Eof, "end of input")?;
            Ok(ActionUnit::new(op, literal))
        }
        _ => Err(p.err("an action operator")),
    }
}

// ---------------------------------------------------------------------------
// Canonical serialization

fn fmt_condition(f: &ConditionFormula) -> String {
    match f {
        ConditionFormula::Atom(a) => a.to_string(),
        ConditionFormula::Not(inner) => {
            let s = fmt_condition(inner);
            if matches!(**inner, ConditionFormula::And(..) | ConditionFormula::Or(..)) {
                format!("!({s})")
            } else {
                format!("!{s}")
            }
        }
        ConditionFormula::And(..) => {
            let mut parts: Vec<String> = Vec::new();
            flatten_cond_and(f, &mut parts);
            parts.sort();
            parts.join(" & ")
        }
        ConditionFormula::Or(l, r) => {
            format!("{} | {}", fmt_condition(l), fmt_condition(r))
        }
    }
}

fn flatten_cond_and(f: &ConditionFormula, out: &mut Vec<String>) {
    match f {
        ConditionFormula::And(l, r) => {
            flatten_cond_and(l, out);
            flatten_cond_and(r, out);
        }
        ConditionFormula::Or(..) => out.push(format!("({})", fmt_condition(f))),
        other => out.push(fmt_condition(other)),
    }
}

fn fmt_action(f: &ActionFormula) -> String {
    match f {
        ActionFormula::Unit(u) => u.to_string(),
        ActionFormula::And(..) => {
            let mut parts: Vec<String> = Vec::new();
            flatten_action_and(f, &mut parts);
            parts.sort();
            parts.join(" & ")
        }
        ActionFormula::Or(l, r) => format!("{} | {}", fmt_action(l), fmt_action(r)),
    }
}

fn flatten_action_and(f: &ActionFormula, out: &mut Vec<String>) {
    match f {
        ActionFormula::And(l, r) => {
            flatten_action_and(l, out);
            flatten_action_and(r, out);
        }
        ActionFormula::Or(..) => out.push(format!("({})", fmt_action(f))),
        other => out.push(fmt_action(other)),
    }
}

fn fmt_literals(state: &StateSet) -> String {
    state.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

/// Emit the canonical text form: one rule per line, conjuncts sorted
/// lexicographically within each disjunct, sections in fixed order.
pub fn serialize_spec(doc: &SpecDocument) -> String {
    let mut out = String::new();
    if let Some(name) = &doc.name {
        out.push_str(&format!("name \"{name}\";\n"));
    }
    for (kw, rules) in [("agent1", &doc.system.rules1), ("agent2", &doc.system.rules2)] {
        out.push_str(kw);
        out.push_str(" {\n");
        for rule in rules.iter() {
            out.push_str(&format!(
                "  {} => {};\n",
                fmt_condition(&rule.condition),
                fmt_action(&rule.head)
            ));
        }
        out.push_str("}\n");
    }
    out.push_str("initial {\n");
    out.push_str(&format!("  private1: {};\n", fmt_literals(&doc.initial.s1)));
    out.push_str(&format!("  public: {};\n", fmt_literals(&doc.initial.p)));
    out.push_str(&format!("  private2: {};\n", fmt_literals(&doc.initial.s2)));
    out.push_str("}\n");
    out
}
