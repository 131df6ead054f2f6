//! Concrete syntax for expression documents.
//!
//! ```text
//! #mcw k=3
//! ; comments run to end of line
//! ;name 0 left        <- optional vertex-name directive (creation index)
//! (eta 1 2 (join (v 1 1) (v 1 2)))
//! ```
//!
//! Atoms: `(v m l1 l2 ...)` with zero or more labels. Operations:
//! `(eta i j E)`, `(rho i (l1 ...) E)` with `()` for the empty target,
//! `(eps i E)`, and `(join E1 E2 ...)` with two or more operands. Nested
//! joins are accepted and flattened into one node.

use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, ExprBuilder, InvalidExpr, Label, LabelSet, Node, NodeId};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: {source}")]
    Invalid {
        line: u32,
        col: u32,
        #[source]
        source: InvalidExpr,
    },
    #[error("missing `#mcw k=<width>` header")]
    MissingHeader,
    #[error("name directive targets vertex {index}, but only {count} vertices are created")]
    NameOutOfRange { index: u64, count: u64 },
}

fn syn(pos: (u32, u32), msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line: pos.0, col: pos.1, msg: msg.into() }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
}

impl std::fmt::Display for Tok<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Open => write!(f, "("),
            Tok::Close => write!(f, ")"),
            Tok::Word(w) => write!(f, "{w}"),
        }
    }
}

struct Lexer<'a> {
    tokens: Vec<(Tok<'a>, (u32, u32))>,
    comments: Vec<String>,
}

fn lex(text: &str, line_offset: u32) -> Lexer<'_> {
    let mut tokens = Vec::new();
    let mut comments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.split_once(';') {
            Some((code, comment)) => {
                comments.push(comment.trim().to_string());
                code
            }
            None => line,
        };
        let mut rest = line;
        let mut col = 0u32;
        while !rest.is_empty() {
            let c = rest.chars().next().unwrap();
            let pos = (line_offset + lineno as u32 + 1, col + 1);
            match c {
                '(' => tokens.push((Tok::Open, pos)),
                ')' => tokens.push((Tok::Close, pos)),
                c if c.is_whitespace() => {}
                _ => {
                    let end = rest
                        .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                        .unwrap_or(rest.len());
                    tokens.push((Tok::Word(&rest[..end]), pos));
                    col += end as u32;
                    rest = &rest[end..];
                    continue;
                }
            }
            col += 1;
            rest = &rest[c.len_utf8()..];
        }
    }
    Lexer { tokens, comments }
}

struct Cursor<'a> {
    toks: &'a [(Tok<'a>, (u32, u32))],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<(Tok<'a>, (u32, u32))> {
        self.toks.get(self.at).copied()
    }

    fn next(&mut self) -> Option<(Tok<'a>, (u32, u32))> {
        let t = self.peek();
        self.at += 1;
        t
    }

    fn last_pos(&self) -> (u32, u32) {
        self.toks.last().map_or((1, 1), |t| t.1)
    }

    fn expect_open(&mut self, what: &str) -> Result<(u32, u32), ParseError> {
        match self.next() {
            Some((Tok::Open, pos)) => Ok(pos),
            Some((t, pos)) => Err(syn(pos, format!("expected `(` to start {what}, got `{t}`"))),
            None => Err(syn(self.last_pos(), format!("unexpected end of input, expected {what}"))),
        }
    }

    fn expect_close(&mut self, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((Tok::Close, _)) => Ok(()),
            Some((t, pos)) => Err(syn(pos, format!("expected `)` to close {what}, got `{t}`"))),
            None => Err(syn(self.last_pos(), format!("unterminated {what}"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(&'a str, (u32, u32)), ParseError> {
        match self.next() {
            Some((Tok::Word(w), pos)) => Ok((w, pos)),
            Some((t, pos)) => Err(syn(pos, format!("expected {what}, got `{t}`"))),
            None => Err(syn(self.last_pos(), format!("unexpected end of input, expected {what}"))),
        }
    }

    fn uint(&mut self, what: &str) -> Result<(u64, (u32, u32)), ParseError> {
        let (w, pos) = self.word(what)?;
        let v = w.parse::<u64>().map_err(|_| syn(pos, format!("expected {what}, got `{w}`")))?;
        Ok((v, pos))
    }

    fn label(&mut self, what: &str) -> Result<(Label, (u32, u32)), ParseError> {
        let (v, pos) = self.uint(what)?;
        if v == 0 || v > u32::MAX as u64 {
            return Err(syn(pos, format!("{what} must be in 1..=k, got {v}")));
        }
        Ok((Label::new(v as u32), pos))
    }
}

fn parse_header(text: &str) -> Result<u32, ParseError> {
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with(';') {
            continue;
        }
        let rest = t.strip_prefix("#mcw").ok_or(ParseError::MissingHeader)?;
        let k = rest
            .trim()
            .strip_prefix("k=")
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or(ParseError::MissingHeader)?;
        return Ok(k);
    }
    Err(ParseError::MissingHeader)
}

/// Body after the header line, plus the number of lines skipped.
fn strip_header(text: &str) -> (&str, u32) {
    let mut offset = 0;
    let mut lines = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        offset += line.len();
        lines += 1;
        if !t.is_empty() && !t.starts_with(';') {
            return (&text[offset..], lines);
        }
    }
    ("", lines)
}

/// Label-set members up to the closing `)`.
fn parse_label_list(cur: &mut Cursor) -> Result<LabelSet, ParseError> {
    let mut labels = Vec::new();
    loop {
        match cur.peek() {
            Some((Tok::Close, _)) => {
                cur.next();
                return Ok(LabelSet::from_indices(labels));
            }
            Some((Tok::Word(_), _)) => {
                let (l, _) = cur.label("label")?;
                labels.push(l.index());
            }
            Some((Tok::Open, pos)) => return Err(syn(pos, "expected label or `)`")),
            None => return Err(syn(cur.last_pos(), "unterminated label list")),
        }
    }
}

enum Frame {
    Eta { i: Label, j: Label, pos: (u32, u32) },
    Rho { i: Label, to: LabelSet, pos: (u32, u32) },
    Eps { i: Label, pos: (u32, u32) },
    Join { children: Vec<NodeId>, pos: (u32, u32) },
}

/// Parses a full document: header, optional `;name` directives, one body
/// expression. `print`/`parse` round-trip structurally.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let width = parse_header(text)?;
    let (body, skipped) = strip_header(text);
    let lexer = lex(body, skipped);
    let mut cur = Cursor { toks: &lexer.tokens, at: 0 };
    let mut builder = ExprBuilder::new(width);

    let inv = |pos: (u32, u32)| {
        move |e: InvalidExpr| ParseError::Invalid { line: pos.0, col: pos.1, source: e }
    };

    let mut stack: Vec<Frame> = Vec::new();
    // Most recently completed subexpression, waiting to feed a frame.
    let mut done: Option<NodeId> = None;
    loop {
        if let Some(node) = done.take() {
            match stack.last_mut() {
                None => {
                    if let Some((_, pos)) = cur.peek() {
                        return Err(syn(pos, "trailing input after expression"));
                    }
                    let expr = builder.finish(node).expect("parser consumes every node");
                    return apply_names(expr, &lexer.comments);
                }
                Some(Frame::Join { children, .. }) => {
                    children.push(node);
                }
                Some(_) => {
                    let frame = stack.pop().unwrap();
                    let id = match frame {
                        Frame::Eta { i, j, pos } => {
                            let id = builder.eta(i, j, node).map_err(inv(pos))?;
                            cur.expect_close("eta")?;
                            id
                        }
                        Frame::Rho { i, to, pos } => {
                            let id = builder.rho(i, to, node).map_err(inv(pos))?;
                            cur.expect_close("rho")?;
                            id
                        }
                        Frame::Eps { i, pos } => {
                            let id = builder.eps(i, node).map_err(inv(pos))?;
                            cur.expect_close("eps")?;
                            id
                        }
                        Frame::Join { .. } => unreachable!(),
                    };
                    done = Some(id);
                }
            }
            continue;
        }

        // A `)` here can only close an open join operand list.
        if let (Some((Tok::Close, pos)), Some(Frame::Join { .. })) = (cur.peek(), stack.last()) {
            cur.next();
            let Some(Frame::Join { children, pos: jpos }) = stack.pop() else { unreachable!() };
            if children.len() < 2 {
                return Err(ParseError::Invalid {
                    line: jpos.0,
                    col: jpos.1,
                    source: InvalidExpr::JoinTooSmall(children.len()),
                });
            }
            let _ = pos;
            match stack.last_mut() {
                // A join operand that is itself a join melts into its parent.
                Some(Frame::Join { children: parent, .. }) => parent.extend(children),
                _ => done = Some(builder.join(children).map_err(inv(jpos))?),
            }
            continue;
        }

        let pos = cur.expect_open("an expression")?;
        let (head, hpos) = cur.word("operator")?;
        match head {
            "v" => {
                let (m, mpos) = cur.uint("vertex count")?;
                let labels = parse_label_list(&mut cur)?;
                done = Some(builder.create(m, labels).map_err(inv(mpos))?);
            }
            "eta" => {
                let (i, _) = cur.label("eta label i")?;
                let (j, _) = cur.label("eta label j")?;
                stack.push(Frame::Eta { i, j, pos });
            }
            "rho" => {
                let (i, _) = cur.label("rho source label")?;
                cur.expect_open("rho target label set")?;
                let to = parse_label_list(&mut cur)?;
                stack.push(Frame::Rho { i, to, pos });
            }
            "eps" => {
                let (i, _) = cur.label("eps label")?;
                stack.push(Frame::Eps { i, pos });
            }
            "join" => stack.push(Frame::Join { children: Vec::new(), pos }),
            other => return Err(syn(hpos, format!("unknown operator `{other}`"))),
        }
    }
}

/// `;name <index> <name>` directives attach names to created vertices by
/// creation order.
fn apply_names(expr: Expr, comments: &[String]) -> Result<Expr, ParseError> {
    let mut directives: Vec<(u64, String)> = Vec::new();
    for c in comments {
        if let Some(rest) = c.strip_prefix("name ") {
            let mut it = rest.split_whitespace();
            if let (Some(idx), Some(name)) = (it.next(), it.next()) {
                if let Ok(idx) = idx.parse::<u64>() {
                    directives.push((idx, name.to_string()));
                }
            }
        }
    }
    if directives.is_empty() {
        return Ok(expr);
    }
    let total = expr.vertex_count();
    let offsets = expr.vertex_offsets();
    let counts = expr.vertex_counts();
    // (start, node) for every atom, sorted by start offset.
    let mut atoms: Vec<(u64, NodeId)> = (0..expr.node_count())
        .map(|i| NodeId(i as u32))
        .filter(|id| matches!(expr.node(*id), Node::Create { .. }))
        .map(|id| (offsets[id.index()], id))
        .collect();
    atoms.sort_unstable();

    let mut named: HashMap<NodeId, Vec<Option<String>>> = HashMap::new();
    for (index, name) in directives {
        if index >= total {
            return Err(ParseError::NameOutOfRange { index, count: total });
        }
        let slot = atoms.partition_point(|&(start, _)| start <= index) - 1;
        let (start, id) = atoms[slot];
        let count = counts[id.index()] as usize;
        let names = named.entry(id).or_insert_with(|| vec![None; count]);
        names[(index - start) as usize] = Some(name);
    }

    let mut expr = expr;
    for (id, names) in named {
        if let Node::Create { names: slot, .. } = &mut expr.nodes[id.index()] {
            *slot = names;
        }
    }
    Ok(expr)
}
