//! The transducer file format.
//!
//! ```text
//! input  { sym:rank ... }
//! output { sym:rank ... }
//! lookahead {
//!   states p1 p2 ... ;
//!   delta { sym(p,...) -> p ; ... }        # rank-0: sym -> p ;
//! }
//! states q1 q2 ... ;
//! axiom p = term ;                         # term over output symbols and q(x0)
//! rule q(sym(x1:p1, ..., xk:pk)) -> term ; # term over output symbols and q'(xi)
//! ```
//!
//! Terms follow `term := ident | ident "(" term ("," term)* ")" | "_"`.
//! Identifiers are `[A-Za-z_][A-Za-z0-9_'@.]*`; names matching `x<digits>`
//! are reserved for variables inside terms. `#` starts a line comment and
//! whitespace is insignificant.

use std::collections::HashMap;
use std::fmt;

use crate::transducer::{Certified, Dtla, LookaheadAutomaton, RuleKey};
use crate::trees::{name, Label, Name, RankedAlphabet, Tree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone)]
pub struct SyntaxError {
    pub kind: SyntaxErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SyntaxErrorKind::Syntax => "syntax error",
            SyntaxErrorKind::Semantic => "semantic error",
        };
        write!(f, "{kind} at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for SyntaxError {}

pub type PResult<T> = std::result::Result<T, SyntaxError>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Arrow,
    Equals,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Nat(n) => write!(f, "{n}"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Colon => write!(f, ":"),
            Tok::Semi => write!(f, ";"),
            Tok::Comma => write!(f, ","),
            Tok::Arrow => write!(f, "->"),
            Tok::Equals => write!(f, "="),
        }
    }
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> PResult<Vec<Sp>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, co) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                bump(&mut chars);
                if c == '\n' {
                    break;
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Sp {
                tok: Tok::Nat(s.parse().unwrap()),
                line: l,
                col: co,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '@' | '.') {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Sp {
                tok: Tok::Ident(s),
                line: l,
                col: co,
            });
            continue;
        }
        let tok = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = tok {
            bump(&mut chars);
            out.push(Sp { tok, line: l, col: co });
            continue;
        }
        if c == '-' {
            bump(&mut chars);
            if chars.peek() == Some(&'>') {
                bump(&mut chars);
                out.push(Sp {
                    tok: Tok::Arrow,
                    line: l,
                    col: co,
                });
                continue;
            }
            return Err(syntax(l, co, "expected '->'".into()));
        }
        return Err(syntax(l, co, format!("unexpected character {c:?}")));
    }
    Ok(out)
}

fn syntax(line: usize, col: usize, message: String) -> SyntaxError {
    SyntaxError {
        kind: SyntaxErrorKind::Syntax,
        line,
        col,
        message,
    }
}

fn semantic(line: usize, col: usize, message: String) -> SyntaxError {
    SyntaxError {
        kind: SyntaxErrorKind::Semantic,
        line,
        col,
        message,
    }
}

struct Parser {
    toks: Vec<Sp>,
    pos: usize,
}

#[derive(Debug, Clone)]
pub struct RawTerm {
    pub head: Option<String>, // None = the hole `_`
    pub args: Vec<RawTerm>,
    pub line: usize,
    pub col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Sp> {
        self.toks.get(self.pos)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .map(|s| (s.line, s.col))
            .or_else(|| self.toks.last().map(|s| (s.line, s.col + 1)))
            .unwrap_or((1, 1))
    }

    fn next(&mut self) -> PResult<Sp> {
        let (l, c) = self.here();
        let sp = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| syntax(l, c, "unexpected end of input".into()))?;
        self.pos += 1;
        Ok(sp)
    }

    fn expect(&mut self, tok: Tok) -> PResult<Sp> {
        let sp = self.next()?;
        if sp.tok == tok {
            Ok(sp)
        } else {
            Err(syntax(
                sp.line,
                sp.col,
                format!("expected '{tok}', found '{}'", sp.tok),
            ))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, usize, usize)> {
        let sp = self.next()?;
        match sp.tok {
            Tok::Ident(s) => Ok((s, sp.line, sp.col)),
            other => Err(syntax(sp.line, sp.col, format!("expected identifier, found '{other}'"))),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if let Some(sp) = self.peek() {
            if &sp.tok == tok {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn term(&mut self) -> PResult<RawTerm> {
        let sp = self.next()?;
        match sp.tok {
            Tok::Ident(head) => {
                if head == "_" {
                    return Ok(RawTerm {
                        head: None,
                        args: vec![],
                        line: sp.line,
                        col: sp.col,
                    });
                }
                let mut args = Vec::new();
                if self.eat(&Tok::LParen)
                    && !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.term()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma)?;
                        }
                    }
                Ok(RawTerm {
                    head: Some(head),
                    args,
                    line: sp.line,
                    col: sp.col,
                })
            }
            other => Err(syntax(sp.line, sp.col, format!("expected a term, found '{other}'"))),
        }
    }
}

fn is_var(s: &str) -> Option<u32> {
    let rest = s.strip_prefix('x')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

struct FileBuilder {
    input: Option<RankedAlphabet>,
    output: Option<RankedAlphabet>,
    la_states: Vec<Name>,
    delta: HashMap<(Name, Vec<Name>), Name>,
    states: Vec<Name>,
    axioms: Vec<(Name, RawTerm, usize, usize)>,
    rules: Vec<(Name, Name, Vec<Name>, RawTerm, usize, usize)>,
}

/// Parses the file format into a validated transducer.
pub fn parse(text: &str) -> PResult<Dtla> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut b = FileBuilder {
        input: None,
        output: None,
        la_states: Vec::new(),
        delta: HashMap::new(),
        states: Vec::new(),
        axioms: Vec::new(),
        rules: Vec::new(),
    };

    while !p.at_end() {
        let (word, l, c) = p.expect_ident()?;
        match word.as_str() {
            "input" => b.input = Some(alphabet_block(&mut p, l, c)?),
            "output" => b.output = Some(alphabet_block(&mut p, l, c)?),
            "lookahead" => lookahead_block(&mut p, &mut b)?,
            "states" => {
                while !p.eat(&Tok::Semi) {
                    let (s, sl, sc) = p.expect_ident()?;
                    if is_var(&s).is_some() {
                        return Err(semantic(sl, sc, format!("{s} is reserved for variables")));
                    }
                    b.states.push(name(&s));
                }
            }
            "axiom" => {
                let (pn, pl, pc) = p.expect_ident()?;
                p.expect(Tok::Equals)?;
                let t = p.term()?;
                p.expect(Tok::Semi)?;
                b.axioms.push((name(&pn), t, pl, pc));
            }
            "rule" => {
                let (q, ql, qc) = p.expect_ident()?;
                p.expect(Tok::LParen)?;
                let (sym, _, _) = p.expect_ident()?;
                let mut la = Vec::new();
                if p.eat(&Tok::LParen) {
                    let mut idx = 1u32;
                    if !p.eat(&Tok::RParen) {
                        loop {
                            let (v, vl, vc) = p.expect_ident()?;
                            match is_var(&v) {
                                Some(i) if i == idx => {}
                                _ => {
                                    return Err(syntax(
                                        vl,
                                        vc,
                                        format!("expected variable x{idx}, found {v}"),
                                    ))
                                }
                            }
                            p.expect(Tok::Colon)?;
                            let (pn, _, _) = p.expect_ident()?;
                            la.push(name(&pn));
                            idx += 1;
                            if p.eat(&Tok::RParen) {
                                break;
                            }
                            p.expect(Tok::Comma)?;
                        }
                    }
                }
                p.expect(Tok::RParen)?;
                p.expect(Tok::Arrow)?;
                let t = p.term()?;
                p.expect(Tok::Semi)?;
                b.rules.push((name(&q), name(&sym), la, t, ql, qc));
            }
            other => {
                return Err(syntax(
                    l,
                    c,
                    format!("expected a section keyword, found '{other}'"),
                ))
            }
        }
    }

    assemble(b)
}

fn alphabet_block(p: &mut Parser, l: usize, c: usize) -> PResult<RankedAlphabet> {
    p.expect(Tok::LBrace)?;
    let mut symbols = Vec::new();
    while !p.eat(&Tok::RBrace) {
        let (s, sl, sc) = p.expect_ident()?;
        if is_var(&s).is_some() {
            return Err(semantic(sl, sc, format!("{s} is reserved for variables")));
        }
        p.expect(Tok::Colon)?;
        let sp = p.next()?;
        let Tok::Nat(r) = sp.tok else {
            return Err(syntax(sp.line, sp.col, "expected a rank".into()));
        };
        symbols.push((name(&s), r));
    }
    RankedAlphabet::new(symbols).map_err(|e| semantic(l, c, e.to_string()))
}

fn lookahead_block(p: &mut Parser, b: &mut FileBuilder) -> PResult<()> {
    p.expect(Tok::LBrace)?;
    while !p.eat(&Tok::RBrace) {
        let (word, l, c) = p.expect_ident()?;
        match word.as_str() {
            "states" => {
                while !p.eat(&Tok::Semi) {
                    let (s, sl, sc) = p.expect_ident()?;
                    if is_var(&s).is_some() {
                        return Err(semantic(sl, sc, format!("{s} is reserved for variables")));
                    }
                    b.la_states.push(name(&s));
                }
            }
            "delta" => {
                p.expect(Tok::LBrace)?;
                while !p.eat(&Tok::RBrace) {
                    let (sym, sl, sc) = p.expect_ident()?;
                    let mut args = Vec::new();
                    if p.eat(&Tok::LParen)
                        && !p.eat(&Tok::RParen) {
                            loop {
                                let (pn, _, _) = p.expect_ident()?;
                                args.push(name(&pn));
                                if p.eat(&Tok::RParen) {
                                    break;
                                }
                                p.expect(Tok::Comma)?;
                            }
                        }
                    p.expect(Tok::Arrow)?;
                    let (target, _, _) = p.expect_ident()?;
                    p.expect(Tok::Semi)?;
                    let key = (name(&sym), args);
                    if b.delta.insert(key, name(&target)).is_some() {
                        return Err(semantic(sl, sc, format!("duplicate delta entry for {sym}")));
                    }
                }
            }
            other => {
                return Err(syntax(
                    l,
                    c,
                    format!("expected 'states' or 'delta', found '{other}'"),
                ))
            }
        }
    }
    Ok(())
}

fn assemble(b: FileBuilder) -> PResult<Dtla> {
    let input = b
        .input
        .ok_or_else(|| semantic(1, 1, "missing input alphabet".into()))?;
    let output = b
        .output
        .ok_or_else(|| semantic(1, 1, "missing output alphabet".into()))?;
    let la = LookaheadAutomaton::new(b.la_states, b.delta);

    let mut axioms = HashMap::new();
    for (p, raw, l, c) in &b.axioms {
        let t = resolve_output_term(raw, &output, &b.states, 0)?;
        if axioms.insert(p.clone(), t).is_some() {
            return Err(semantic(*l, *c, format!("duplicate axiom for {p}")));
        }
    }
    let mut rules = HashMap::new();
    for (q, sym, la_vec, raw, l, c) in &b.rules {
        let k = input
            .rank(sym)
            .ok_or_else(|| semantic(*l, *c, format!("unknown input symbol {sym}")))?;
        if k != la_vec.len() {
            return Err(semantic(
                *l,
                *c,
                format!("rule for {sym} annotates {} children, rank is {k}", la_vec.len()),
            ));
        }
        let t = resolve_output_term(raw, &output, &b.states, k as u32)?;
        let key = RuleKey::new(q.clone(), sym.clone(), la_vec.clone());
        if rules.insert(key, t).is_some() {
            return Err(semantic(*l, *c, format!("duplicate rule for {q}/{sym}")));
        }
    }

    let m = Dtla {
        input,
        output,
        states: b.states,
        la,
        axioms,
        rules,
        certified: Certified::default(),
    };
    let report = m.validate();
    if let Some(f) = report.findings.first() {
        return Err(semantic(0, 0, f.message.clone()));
    }
    Ok(m)
}

fn resolve_output_term(
    raw: &RawTerm,
    output: &RankedAlphabet,
    states: &[Name],
    max_var: u32,
) -> PResult<Tree> {
    let Some(head) = &raw.head else {
        return Err(semantic(
            raw.line,
            raw.col,
            "the hole '_' is not allowed here".into(),
        ));
    };
    if let Some(i) = is_var(head) {
        let _ = i;
        return Err(semantic(
            raw.line,
            raw.col,
            format!("variable {head} may only appear under a state"),
        ));
    }
    if states.iter().any(|q| &**q == head.as_str()) {
        if raw.args.len() != 1 {
            return Err(semantic(
                raw.line,
                raw.col,
                format!("state {head} takes exactly one variable argument"),
            ));
        }
        let arg = &raw.args[0];
        let v = arg
            .head
            .as_deref()
            .and_then(is_var)
            .ok_or_else(|| semantic(arg.line, arg.col, "expected a variable".into()))?;
        if !arg.args.is_empty() {
            return Err(semantic(arg.line, arg.col, "variables take no arguments".into()));
        }
        let ok = if max_var == 0 { v == 0 } else { (1..=max_var).contains(&v) };
        if !ok {
            return Err(semantic(
                arg.line,
                arg.col,
                format!("variable x{v} out of range here"),
            ));
        }
        return Ok(Tree::new(
            Label::StateCall(name(head)),
            vec![Tree::var(v)],
        ));
    }
    match output.rank(head) {
        Some(r) => {
            if r != raw.args.len() {
                return Err(semantic(
                    raw.line,
                    raw.col,
                    format!("symbol {head} has rank {r}, used with {} arguments", raw.args.len()),
                ));
            }
            let children = raw
                .args
                .iter()
                .map(|a| resolve_output_term(a, output, states, max_var))
                .collect::<PResult<_>>()?;
            Ok(Tree::new(Label::Sym(name(head)), children))
        }
        None => Err(semantic(
            raw.line,
            raw.col,
            format!("unknown output symbol or state {head}"),
        )),
    }
}

/// Parses an input tree for `run`; with `extended`, look-ahead state names
/// may appear as rank-0 leaves.
pub fn parse_input_tree(m: &Dtla, text: &str, extended: bool) -> PResult<Tree> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let raw = p.term()?;
    if !p.at_end() {
        let (l, c) = p.here();
        return Err(syntax(l, c, "trailing input after term".into()));
    }
    fn resolve(m: &Dtla, raw: &RawTerm, extended: bool) -> PResult<Tree> {
        let Some(head) = &raw.head else {
            return Err(semantic(raw.line, raw.col, "the hole '_' is not allowed here".into()));
        };
        if extended && m.la.contains(head) {
            if !raw.args.is_empty() {
                return Err(semantic(
                    raw.line,
                    raw.col,
                    format!("look-ahead leaf {head} takes no arguments"),
                ));
            }
            return Ok(Tree::new(Label::LaLeaf(name(head)), vec![]));
        }
        match m.input.rank(head) {
            Some(r) if r == raw.args.len() => Ok(Tree::new(
                Label::Sym(name(head)),
                raw.args
                    .iter()
                    .map(|a| resolve(m, a, extended))
                    .collect::<PResult<_>>()?,
            )),
            Some(r) => Err(semantic(
                raw.line,
                raw.col,
                format!("symbol {head} has rank {r}, used with {} arguments", raw.args.len()),
            )),
            None => Err(semantic(raw.line, raw.col, format!("unknown input symbol {head}"))),
        }
    }
    resolve(m, &raw, extended)
}

/// Parses a context for the difference analysis: an input tree with exactly
/// one `_`.
pub fn parse_context(m: &Dtla, text: &str) -> PResult<crate::trees::Context> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let raw = p.term()?;
    fn resolve(m: &Dtla, raw: &RawTerm) -> PResult<Tree> {
        let Some(head) = &raw.head else {
            return Ok(Tree::hole());
        };
        match m.input.rank(head) {
            Some(r) if r == raw.args.len() => Ok(Tree::new(
                Label::Sym(name(head)),
                raw.args.iter().map(|a| resolve(m, a)).collect::<PResult<_>>()?,
            )),
            Some(r) => Err(semantic(
                raw.line,
                raw.col,
                format!("symbol {head} has rank {r}, used with {} arguments", raw.args.len()),
            )),
            None => Err(semantic(raw.line, raw.col, format!("unknown input symbol {head}"))),
        }
    }
    let t = resolve(m, &raw)?;
    crate::trees::Context::new(t).map_err(|e| semantic(raw.line, raw.col, e.to_string()))
}

/// Serializes in the file format; `parse(unparse(m))` reconstructs an equal
/// transducer.
pub fn unparse(m: &Dtla) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let alpha = |a: &RankedAlphabet| -> String {
        a.iter()
            .map(|(n, r)| format!("{n}:{r}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(s, "input  {{ {} }}", alpha(&m.input)).unwrap();
    writeln!(s, "output {{ {} }}", alpha(&m.output)).unwrap();
    writeln!(s, "lookahead {{").unwrap();
    writeln!(
        s,
        "  states {} ;",
        m.la.states
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    writeln!(s, "  delta {{").unwrap();
    let mut entries: Vec<(&(Name, Vec<Name>), &Name)> = m.la.delta.iter().collect();
    entries.sort_by_key(|((a, v), _)| {
        (
            m.input.decl_index(a).unwrap_or(usize::MAX),
            v.iter()
                .map(|p| m.la.state_index(p).unwrap_or(usize::MAX))
                .collect::<Vec<_>>(),
        )
    });
    for ((a, v), p) in entries {
        if v.is_empty() {
            writeln!(s, "    {a} -> {p} ;").unwrap();
        } else {
            writeln!(
                s,
                "    {a}({}) -> {p} ;",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            )
            .unwrap();
        }
    }
    writeln!(s, "  }}").unwrap();
    writeln!(s, "}}").unwrap();
    writeln!(
        s,
        "states {} ;",
        m.states
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    for p in &m.la.states {
        if let Some(t) = m.axioms.get(p) {
            writeln!(s, "axiom {p} = {t} ;").unwrap();
        }
    }
    for key in m.rule_keys_sorted() {
        let rhs = &m.rules[&key];
        if key.la.is_empty() {
            writeln!(s, "rule {}({}) -> {rhs} ;", key.state, key.symbol).unwrap();
        } else {
            let anns = key
                .la
                .iter()
                .enumerate()
                .map(|(i, p)| format!("x{}:{p}", i + 1))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(s, "rule {}({}({anns})) -> {rhs} ;", key.state, key.symbol).unwrap();
        }
    }
    s
}
