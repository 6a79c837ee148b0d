//! Text formats for queries (`.cq`), databases (`.db`), polynomials
//! (`.poly`), query expressions (`.qx`), counts (`.count`) and Hilbert
//! instances (`.json-lines`).
//!
//! Names that are not plain tokens are written as JSON string literals, so
//! every value the core can build survives a round trip.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bagcq_core::polyreduce::{HilbertInstance, Intermediates, Monomial, Polynomial};
use bagcq_core::{Count, Database, Query, QueryExpr, Schema, Term};
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bagcq_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Punct(char),
}

const PUNCT: &[char] = &['(', ')', ',', '=', '@'];

fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !PUNCT.contains(&c) && !matches!(c, '"' | ';' | '#')
}

/// A name as written in files: bare when possible, otherwise a JSON string.
pub fn name_token(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_bare_char) {
        s.to_string()
    } else {
        serde_json::to_string(s).expect("strings serialize")
    }
}

fn lex(line: usize, s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
        } else if PUNCT.contains(&c) {
            out.push(Tok::Punct(c));
            rest = &rest[1..];
        } else if c == '"' {
            let mut de = serde_json::Deserializer::from_str(rest).into_iter::<String>();
            let word = de
                .next()
                .ok_or_else(|| syntax(line, "unterminated string"))?
                .map_err(|e| syntax(line, format!("bad string literal: {e}")))?;
            rest = &rest[de.byte_offset()..];
            out.push(Tok::Word(word));
        } else if is_bare_char(c) {
            let end = rest.find(|c| !is_bare_char(c)).unwrap_or(rest.len());
            out.push(Tok::Word(rest[..end].to_string()));
            rest = &rest[end..];
        } else {
            return Err(syntax(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Cursor {
    line: usize,
    toks: Vec<Tok>,
    pos: usize,
}

impl Cursor {
    fn new(line: usize, toks: Vec<Tok>) -> Cursor {
        Cursor { line, toks, pos: 0 }
    }

    fn done(&self) -> bool {
        self.pos == self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.toks.get(self.pos) {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(w.clone())
            }
            _ => Err(syntax(self.line, format!("expected {what}"))),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.line, format!("expected `{c}`")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> Result<Term> {
        if self.eat('@') {
            Ok(Term::constant(self.word("constant name")?))
        } else {
            Ok(Term::var(self.word("variable")?))
        }
    }

    fn constant(&mut self) -> Result<String> {
        self.punct('@')?;
        self.word("constant name")
    }

    fn tuple<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.punct('(')?;
        let mut out = vec![item(self)?];
        while self.eat(',') {
            out.push(item(self)?);
        }
        self.punct(')')?;
        Ok(out)
    }

    fn end(&self) -> Result<()> {
        if self.done() {
            Ok(())
        } else {
            Err(syntax(self.line, "trailing input"))
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let w = self.word(what)?;
        w.parse().map_err(|_| syntax(self.line, format!("expected {what}, found `{w}`")))
    }
}

// Non-empty, non-comment clauses with their line numbers; `;` separates
// clauses within a line unless it occurs in a string literal.
fn split_clauses(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let mut cur = String::new();
        let mut in_str = false;
        let mut escaped = false;
        for c in line.chars() {
            if in_str {
                cur.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == '"' {
                    in_str = false;
                }
            } else if c == ';' {
                out.push((i + 1, std::mem::take(&mut cur)));
            } else {
                if c == '"' {
                    in_str = true;
                }
                cur.push(c);
            }
        }
        out.push((i + 1, cur));
    }
    out.into_iter()
        .map(|(l, s)| (l, s.trim().to_string()))
        .filter(|(_, s)| !s.is_empty() && !s.starts_with('#'))
        .collect()
}

enum QClause {
    Atom(String, Vec<Term>),
    Neq(Term, Term),
    Var(Vec<String>),
    Rel(String, usize),
    Const(String),
}

fn add_relation(schema: &mut Schema, line: usize, rel: &str, arity: usize) -> Result<()> {
    schema
        .add_relation(rel, arity)
        .map_err(|e| syntax(line, e.to_string()))
}

/// Parses a `.cq` query. Relation arities are fixed by their first use.
///
/// Clauses: `atom R(t, …)`, `neq t t`, `var x …`, `rel R k`, `const @c`;
/// `@name` terms are constants, other terms variables.
pub fn parse_query(text: &str) -> Result<Query> {
    let mut parsed = Vec::new();
    for (line, clause) in split_clauses(text) {
        let mut cur = Cursor::new(line, lex(line, &clause)?);
        let kw = cur.word("clause keyword")?;
        let c = match kw.as_str() {
            "atom" => {
                let rel = cur.word("relation name")?;
                QClause::Atom(rel, cur.tuple(Cursor::term)?)
            }
            "neq" => QClause::Neq(cur.term()?, cur.term()?),
            "var" => {
                let mut vs = Vec::new();
                while !cur.done() {
                    vs.push(cur.word("variable")?);
                }
                QClause::Var(vs)
            }
            "rel" => QClause::Rel(cur.word("relation name")?, cur.usize("arity")?),
            "const" => QClause::Const(cur.constant()?),
            other => return Err(syntax(line, format!("unknown clause `{other}`"))),
        };
        cur.end()?;
        parsed.push((line, c));
    }
    let mut schema = Schema::new();
    let note = |schema: &mut Schema, t: &Term| {
        if let Term::Const(c) = t {
            schema.add_constant(c);
        }
    };
    for (line, c) in &parsed {
        match c {
            QClause::Atom(rel, args) => {
                add_relation(&mut schema, *line, rel, args.len())?;
                args.iter().for_each(|t| note(&mut schema, t));
            }
            QClause::Neq(a, b) => {
                note(&mut schema, a);
                note(&mut schema, b);
            }
            QClause::Rel(rel, k) => add_relation(&mut schema, *line, rel, *k)?,
            QClause::Const(c) => schema.add_constant(c),
            QClause::Var(_) => {}
        }
    }
    let mut q = Query::new(schema);
    for (line, c) in parsed {
        let at = |e: bagcq_core::Error| syntax(line, e.to_string());
        match c {
            QClause::Atom(rel, args) => q.atom(&rel, args).map_err(at)?,
            QClause::Neq(a, b) => q.push_neq(a, b).map_err(at)?,
            QClause::Var(vs) => vs.iter().for_each(|v| q.push_var(v)),
            QClause::Rel(..) | QClause::Const(_) => {}
        }
    }
    Ok(q)
}

fn term_token(t: &Term) -> String {
    match t {
        Term::Var(v) => name_token(v),
        Term::Const(c) => format!("@{}", name_token(c)),
    }
}

fn query_clauses(q: &Query) -> Vec<String> {
    let mut out = Vec::new();
    let used = q.relations_used();
    for (rel, k) in q.schema().relations() {
        if !used.contains_key(rel) {
            out.push(format!("rel {} {k}", name_token(rel)));
        }
    }
    let consts: BTreeSet<String> = q.constants_used().into_iter().collect();
    for c in q.schema().constants() {
        if !consts.contains(c) && c != bagcq_core::MARS && c != bagcq_core::VENUS {
            out.push(format!("const @{}", name_token(c)));
        }
    }
    for a in q.atoms() {
        let args: Vec<String> = a.args.iter().map(term_token).collect();
        out.push(format!("atom {}({})", name_token(&a.relation), args.join(", ")));
    }
    for (a, b) in q.inequalities() {
        out.push(format!("neq {} {}", term_token(a), term_token(b)));
    }
    if !q.declared_vars().is_empty() {
        let vs: Vec<String> = q.declared_vars().iter().map(|v| name_token(v)).collect();
        out.push(format!("var {}", vs.join(" ")));
    }
    out
}

pub fn write_query(q: &Query) -> String {
    let mut s = String::new();
    for c in query_clauses(q) {
        s.push_str(&c);
        s.push('\n');
    }
    s
}

/// One-line form with `;` between clauses.
pub fn write_query_inline(q: &Query) -> String {
    query_clauses(q).join("; ")
}

/// Parses a `.db` database.
///
/// Clauses: `elem e …`, `fact R(e, …)`, `const @c = e`, `const @c`, `rel R k`.
/// Elements named in facts or constants are added on first mention.
pub fn parse_database(text: &str) -> Result<Database> {
    let mut d = Database::new(Schema::new());
    for (line, clause) in split_clauses(text) {
        let mut cur = Cursor::new(line, lex(line, &clause)?);
        let at = |e: bagcq_core::Error| syntax(line, e.to_string());
        match cur.word("clause keyword")?.as_str() {
            "elem" => {
                while !cur.done() {
                    d.add_element(&cur.word("element")?);
                }
            }
            "fact" => {
                let rel = cur.word("relation name")?;
                let elems = cur.tuple(|c| c.word("element"))?;
                if d.schema().arity(&rel).is_none() {
                    let s = Schema::new().with_relation(&rel, elems.len()).map_err(at)?;
                    d.extend_schema(&s).map_err(at)?;
                }
                let ids = elems.iter().map(|e| d.add_element(e)).collect();
                d.add_fact_ids(&rel, ids).map_err(at)?;
            }
            "const" => {
                let c = cur.constant()?;
                d.extend_schema(&Schema::new().with_constant(&c)).map_err(at)?;
                if cur.eat('=') {
                    let e = cur.word("element")?;
                    let id = d.add_element(&e);
                    d.set_constant(&c, id).map_err(at)?;
                }
            }
            "rel" => {
                let rel = cur.word("relation name")?;
                let k = cur.usize("arity")?;
                let s = Schema::new().with_relation(&rel, k).map_err(at)?;
                d.extend_schema(&s).map_err(at)?;
            }
            other => return Err(syntax(line, format!("unknown clause `{other}`"))),
        }
        cur.end()?;
    }
    Ok(d)
}

pub fn write_database(d: &Database) -> String {
    let mut s = String::new();
    for chunk in d.elements().chunks(16) {
        let names: Vec<String> = chunk.iter().map(|e| name_token(e)).collect();
        let _ = writeln!(s, "elem {}", names.join(" "));
    }
    for (rel, k) in d.schema().relations() {
        if d.num_facts_of(rel) == 0 {
            let _ = writeln!(s, "rel {} {k}", name_token(rel));
        }
    }
    for c in d.schema().constants() {
        match d.interp(c) {
            Some(e) => {
                let _ = writeln!(s, "const @{} = {}", name_token(c), name_token(d.element_name(e)));
            }
            None if c != bagcq_core::MARS && c != bagcq_core::VENUS => {
                let _ = writeln!(s, "const @{}", name_token(c));
            }
            None => {}
        }
    }
    for (rel, t) in d.facts() {
        let args: Vec<String> = t.iter().map(|&e| name_token(d.element_name(e))).collect();
        let _ = writeln!(s, "fact {}({})", name_token(rel), args.join(", "));
    }
    s
}

/// Parses a `.poly` polynomial: `vars N`, then `term C i …` per term.
pub fn parse_polynomial(text: &str) -> Result<Polynomial> {
    let mut vars = None;
    let mut terms = Vec::new();
    for (line, clause) in split_clauses(text) {
        let words: Vec<&str> = clause.split_whitespace().collect();
        let num = |w: &str| w.parse::<usize>().map_err(|_| syntax(line, format!("bad index `{w}`")));
        match words[0] {
            "vars" if words.len() == 2 && vars.is_none() => vars = Some(num(words[1])?),
            "vars" => return Err(syntax(line, "expected a single `vars N` header")),
            "term" if words.len() >= 2 => {
                let c: BigInt = words[1]
                    .parse()
                    .map_err(|_| syntax(line, format!("bad coefficient `{}`", words[1])))?;
                let idx = words[2..].iter().map(|w| num(w)).collect::<Result<Vec<_>>>()?;
                terms.push((c, Monomial::new(idx)));
            }
            other => return Err(syntax(line, format!("unknown clause `{other}`"))),
        }
    }
    let n = vars.ok_or_else(|| syntax(0, "missing `vars N` header"))?;
    Ok(Polynomial::new(n, terms)?)
}

pub fn write_polynomial(p: &Polynomial) -> String {
    let mut s = format!("vars {}\n", p.num_vars());
    for (c, m) in p.terms() {
        let _ = write!(s, "term {c}");
        for i in m.vars() {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_count(text: &str) -> Result<Count> {
    Ok(text.trim().parse()?)
}

pub fn write_count(c: &Count) -> String {
    format!("{c}\n")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sx {
    Atom(String),
    Str(String),
    List(Vec<Sx>),
}

fn parse_sx(text: &str) -> Result<Sx> {
    let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
    let mut rest = text;
    let line_of = |rest: &str| text[..text.len() - rest.len()].lines().count().max(1);
    while let Some(c) = rest.chars().next() {
        match c {
            c if c.is_whitespace() => rest = &rest[c.len_utf8()..],
            '#' => rest = rest.find('\n').map_or("", |i| &rest[i..]),
            '(' => {
                stack.push(Vec::new());
                rest = &rest[1..];
            }
            ')' => {
                let items = stack.pop().expect("nonempty");
                let top = stack.last_mut().ok_or_else(|| syntax(line_of(rest), "unbalanced `)`"))?;
                top.push(Sx::List(items));
                rest = &rest[1..];
            }
            '"' => {
                let mut de = serde_json::Deserializer::from_str(rest).into_iter::<String>();
                let s = de
                    .next()
                    .ok_or_else(|| syntax(line_of(rest), "unterminated string"))?
                    .map_err(|e| syntax(line_of(rest), format!("bad string literal: {e}")))?;
                rest = &rest[de.byte_offset()..];
                stack.last_mut().expect("nonempty").push(Sx::Str(s));
            }
            _ => {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == '"')
                    .unwrap_or(rest.len());
                stack.last_mut().expect("nonempty").push(Sx::Atom(rest[..end].to_string()));
                rest = &rest[end..];
            }
        }
        if stack.is_empty() {
            return Err(syntax(line_of(rest), "unbalanced `)`"));
        }
    }
    if stack.len() != 1 {
        return Err(syntax(line_of(rest), "unbalanced `(`"));
    }
    let mut top = stack.pop().expect("one frame");
    if top.len() != 1 {
        return Err(syntax(1, "expected exactly one expression"));
    }
    Ok(top.pop().expect("one item"))
}

fn looks_inline(s: &str) -> bool {
    let first = s.trim_start().split(|c: char| c.is_whitespace() || c == '(').next().unwrap_or("");
    s.trim().is_empty() || matches!(first, "atom" | "neq" | "var" | "rel" | "const") || s.contains(';') || s.contains('\n')
}

fn sx_to_expr(sx: &Sx, base: Option<&Path>) -> Result<QueryExpr> {
    let Sx::List(items) = sx else {
        return Err(syntax(0, "expected a parenthesized expression"));
    };
    let head = match items.first() {
        Some(Sx::Atom(h)) => h.as_str(),
        _ => return Err(syntax(0, "expected `leaf`, `dand` or `pow`")),
    };
    match (head, &items[1..]) {
        ("leaf", [Sx::Str(s)]) => {
            if looks_inline(s) {
                Ok(QueryExpr::leaf(parse_query(s)?))
            } else {
                let path = base.map_or_else(|| PathBuf::from(s), |b| b.join(s));
                Ok(QueryExpr::leaf(parse_query(&read_file(&path)?)?))
            }
        }
        ("dand", rest) => Ok(QueryExpr::dand(
            rest.iter().map(|e| sx_to_expr(e, base)).collect::<Result<_>>()?,
        )),
        ("pow", [e, Sx::Atom(k)]) => {
            let k: Count = k.parse()?;
            Ok(QueryExpr::Power(Box::new(sx_to_expr(e, base)?), k.to_biguint()))
        }
        _ => Err(syntax(0, format!("malformed `{head}` expression"))),
    }
}

/// Parses a `.qx` expression; leaf paths are resolved against `base`.
pub fn parse_query_expr(text: &str, base: Option<&Path>) -> Result<QueryExpr> {
    sx_to_expr(&parse_sx(text)?, base)
}

fn write_expr_into(e: &QueryExpr, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match e {
        QueryExpr::Leaf(q) => {
            let inline = serde_json::to_string(&write_query_inline(q)).expect("strings serialize");
            let _ = write!(out, "{pad}(leaf {inline})");
        }
        QueryExpr::DisjointAnd(items) => {
            let _ = write!(out, "{pad}(dand");
            for i in items {
                out.push('\n');
                write_expr_into(i, indent + 1, out);
            }
            out.push(')');
        }
        QueryExpr::Power(inner, k) => {
            let _ = writeln!(out, "{pad}(pow");
            write_expr_into(inner, indent + 1, out);
            let _ = write!(out, " {})", exponent_literal(k));
        }
    }
}

// Factored literal when `k` is smooth over small primes and that is shorter.
fn exponent_literal(k: &BigUint) -> String {
    let dec = k.to_string();
    if dec.len() <= 20 {
        return dec;
    }
    let mut rest = k.clone();
    let mut parts = Vec::new();
    for p in 2u32..1000 {
        let bp = BigUint::from(p);
        let mut e = 0u64;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        match e {
            0 => {}
            1 => parts.push(p.to_string()),
            _ => parts.push(format!("{p}^{e}")),
        }
    }
    let factored = parts.join("*");
    if rest == BigUint::from(1u32) && factored.len() < dec.len() {
        factored
    } else {
        dec
    }
}

pub fn write_query_expr(e: &QueryExpr) -> String {
    let mut s = String::new();
    write_expr_into(e, 0, &mut s);
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize, Debug, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum InstanceLine {
    Polynomial {
        name: String,
        vars: usize,
        /// `(coefficient, variable indices)` with decimal coefficients.
        terms: Vec<(String, Vec<usize>)>,
    },
    Constant {
        name: String,
        value: String,
    },
}

fn poly_line(name: &str, p: &Polynomial) -> InstanceLine {
    InstanceLine::Polynomial {
        name: name.to_string(),
        vars: p.num_vars(),
        terms: p.terms().iter().map(|(c, m)| (c.to_string(), m.vars().to_vec())).collect(),
    }
}

/// One JSON object per line: the polynomials of the instance (and of the
/// normalization steps, when recorded) and the constant `ƈ`.
pub fn write_instance(inst: &HilbertInstance) -> String {
    let mut lines = Vec::new();
    if let Some(i) = &inst.intermediates {
        lines.push(poly_line("q", &i.q));
        lines.push(poly_line("p1", &i.p1));
        lines.push(poly_line("p2", &i.p2));
        lines.push(poly_line("p1_prime", &i.p1_prime));
        lines.push(poly_line("p2_prime", &i.p2_prime));
    }
    lines.push(poly_line("p_s", &inst.p_s));
    lines.push(poly_line("p_b", &inst.p_b));
    lines.push(InstanceLine::Constant {
        name: "c_frak".into(),
        value: inst.c_frak.to_string(),
    });
    let mut s = String::new();
    for l in lines {
        s.push_str(&serde_json::to_string(&l).expect("plain data serializes"));
        s.push('\n');
    }
    s
}

pub fn parse_instance(text: &str) -> Result<HilbertInstance> {
    let mut polys = std::collections::BTreeMap::new();
    let mut c_frak = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<InstanceLine>(line)? {
            InstanceLine::Polynomial { name, vars, terms } => {
                let terms = terms
                    .into_iter()
                    .map(|(c, m)| {
                        c.parse::<BigInt>()
                            .map(|c| (c, Monomial::new(m)))
                            .map_err(|_| syntax(i + 1, format!("bad coefficient `{c}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                polys.insert(name, Polynomial::new(vars, terms)?);
            }
            InstanceLine::Constant { name, value } if name == "c_frak" => {
                c_frak = Some(value.parse::<BigUint>().map_err(|_| syntax(i + 1, "bad constant"))?);
            }
            InstanceLine::Constant { name, .. } => return Err(syntax(i + 1, format!("unknown constant `{name}`"))),
        }
    }
    let mut take = |name: &str| polys.remove(name);
    let p_s = take("p_s").ok_or_else(|| syntax(0, "missing p_s"))?;
    let p_b = take("p_b").ok_or_else(|| syntax(0, "missing p_b"))?;
    let c_frak = c_frak.ok_or_else(|| syntax(0, "missing c_frak"))?;
    let mut inst = HilbertInstance::from_parts(p_s, p_b, c_frak);
    if let (Some(q), Some(p1), Some(p2), Some(p1_prime), Some(p2_prime)) =
        (take("q"), take("p1"), take("p2"), take("p1_prime"), take("p2_prime"))
    {
        inst.intermediates = Some(Intermediates {
            q,
            p1,
            p2,
            p1_prime,
            p2_prime,
        });
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bagcq_core::gadgets::{alpha_witness, build_alpha};
    use bagcq_core::polyreduce::normalize_hilbert;
    use bagcq_core::qalgebra::{blowup, power};

    #[test]
    fn query_text() {
        let q = parse_query("# pair\natom R(x, @mars)\natom R(x,y); neq x y\nvar z\n").unwrap();
        assert_eq!(q.atoms().len(), 2);
        assert_eq!(q.inequalities().len(), 1);
        assert_eq!(q.variables(), vec!["x", "y", "z"]);
        assert_eq!(q.schema().arity("R"), Some(2));
        assert_eq!(parse_query(&write_query(&q)).unwrap(), q);
        assert_eq!(parse_query(&write_query_inline(&q)).unwrap(), q);
    }

    #[test]
    fn query_errors() {
        let e = parse_query("atom R(x)\natom R(x, y)").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, .. }), "{e}");
        assert!(parse_query("atom R(x").is_err());
        assert!(parse_query("frob x").is_err());
        assert!(parse_query("neq x").is_err());
        assert!(parse_query("atom R()").is_err());
    }

    #[test]
    fn quoted_names() {
        let d = blowup(&alpha_witness(2).unwrap(), 2).unwrap();
        assert!(d.elements().iter().any(|e| e.contains(',')));
        assert_eq!(parse_database(&write_database(&d)).unwrap(), d);
        let mut q = Query::new(Schema::new().with_relation("R", 1).unwrap());
        q.atom("R", vec![Term::var("x;\"y")]).unwrap();
        assert_eq!(parse_query(&write_query(&q)).unwrap(), q);
        assert_eq!(parse_query(&write_query_inline(&q)).unwrap(), q);
    }

    #[test]
    fn database_text() {
        let d = parse_database("elem e1 e2\nconst @mars = e1\nconst @venus = e2\nfact E(e1, e2)\nfact E(e2, e3)\nrel U 1\n").unwrap();
        assert_eq!(d.num_elements(), 3);
        assert_eq!(d.num_facts(), 2);
        assert!(d.is_nontrivial().unwrap());
        assert_eq!(d.schema().arity("U"), Some(1));
        assert_eq!(parse_database(&write_database(&d)).unwrap(), d);
        assert!(parse_database("fact E(a)\nfact E(a, b)").is_err());
    }

    #[test]
    fn polynomial_text() {
        let p = parse_polynomial("vars 3\nterm 1 2 3\nterm -6\n").unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(parse_polynomial(&write_polynomial(&p)).unwrap(), p);
        assert!(parse_polynomial("term 1 2").is_err());
        assert!(parse_polynomial("vars 2\nterm 1 3").is_err());
    }

    #[test]
    fn expression_text() {
        let g = build_alpha(2).unwrap();
        let e = QueryExpr::dand(vec![QueryExpr::leaf(g.q_s.clone()), power(QueryExpr::leaf(g.q_b), 3u32)]);
        let text = write_query_expr(&e);
        assert_eq!(parse_query_expr(&text, None).unwrap(), e);
        let big = power(QueryExpr::leaf(g.q_s), "3^22*5^21".parse::<Count>().unwrap().to_biguint());
        let text = write_query_expr(&big);
        assert!(text.contains("3^22*5^21"), "{text}");
        assert_eq!(parse_query_expr(&text, None).unwrap(), big);
        assert!(parse_query_expr("(pow (leaf \"\") 2", None).is_err());
        assert!(parse_query_expr("(frob)", None).is_err());
    }

    #[test]
    fn leaf_paths() {
        let dir = tempfile::tempdir().unwrap();
        write_file(&dir.path().join("q.cq"), "atom R(x, x)\n").unwrap();
        let e = parse_query_expr("(pow (leaf \"q.cq\") 2)", Some(dir.path())).unwrap();
        let QueryExpr::Power(inner, _) = &e else { panic!() };
        let QueryExpr::Leaf(q) = inner.as_ref() else { panic!() };
        assert_eq!(q.atoms().len(), 1);
    }

    #[test]
    fn instance_lines() {
        let q = parse_polynomial("vars 3\nterm 1 2 3\nterm -6\n").unwrap();
        let inst = normalize_hilbert(&q).unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
        let mut bare = inst.clone();
        bare.intermediates = None;
        assert_eq!(parse_instance(&write_instance(&bare)).unwrap(), bare);
    }

    #[test]
    fn count_text() {
        let c: Count = "3^22*5^21".parse().unwrap();
        assert_eq!(parse_count(&write_count(&c)).unwrap(), c);
        assert!(parse_count("x").is_err());
    }
}
