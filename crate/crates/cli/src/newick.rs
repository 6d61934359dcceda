//! Newick reading and writing.
//!
//! Every non-root node must carry a branch length (`label:length`). Labels
//! may be quoted with single quotes (`''` escapes a quote); `[...]` comments
//! are skipped. Species are numbered in order of appearance.
//!
//! Writing is canonical: children are ordered by the smallest species index
//! they contain and lengths use the shortest decimal form that reads back to
//! the same `f64`.

use std::fmt::Write as _;

use epd_core::{NodeId, Phylogeny, TreeSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("newick {line}:{column}: {message}")]
pub struct NewickError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    parents: Vec<Option<NodeId>>,
    lengths: Vec<Option<f64>>,
    labels: Vec<Option<String>>,
    // byte offset where each node ends, for error reporting
    ends: Vec<usize>,
}

impl<'a> Parser<'a> {
    fn error_at(&self, pos: usize, message: impl Into<String>) -> NewickError {
        let before = &self.text[..pos.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        NewickError {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> NewickError {
        self.error_at(self.pos, message)
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_blank(&mut self) -> Result<(), NewickError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.pos += c.len_utf8(),
                Some('[') => {
                    let start = self.pos;
                    match self.text[self.pos..].find(']') {
                        Some(off) => self.pos += off + 1,
                        None => return Err(self.error_at(start, "unterminated comment")),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn new_node(&mut self, parent: Option<NodeId>) -> NodeId {
        self.parents.push(parent);
        self.lengths.push(None);
        self.labels.push(None);
        self.ends.push(self.pos);
        self.parents.len() - 1
    }

    fn label(&mut self) -> Result<Option<String>, NewickError> {
        self.skip_blank()?;
        if self.peek() == Some('\'') {
            let start = self.pos;
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.peek() {
                    None => return Err(self.error_at(start, "unterminated quoted label")),
                    Some('\'') => {
                        self.pos += 1;
                        if self.peek() == Some('\'') {
                            out.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(Some(out));
                        }
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += c.len_utf8();
                    }
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "():;,[]'".contains(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        Ok((self.pos > start).then(|| self.text[start..self.pos].replace('_', " ")))
    }

    fn length(&mut self) -> Result<Option<f64>, NewickError> {
        self.skip_blank()?;
        if self.peek() != Some(':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_blank()?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || "+-.eE".contains(c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Some(v)),
            Ok(_) => Err(self.error_at(start, format!("invalid branch length `{token}`"))),
            Err(_) if token.is_empty() => Err(self.error_at(start, "expected a branch length")),
            Err(_) => Err(self.error_at(start, format!("malformed number `{token}`"))),
        }
    }

    /// Label and length after a node.
    fn suffix(&mut self, node: NodeId) -> Result<(), NewickError> {
        self.labels[node] = self.label()?;
        self.lengths[node] = self.length()?;
        self.ends[node] = self.pos;
        Ok(())
    }

    fn parse(mut self) -> Result<Phylogeny, NewickError> {
        self.skip_blank()?;
        let mut open: Vec<(NodeId, usize)> = Vec::new();
        // Expecting the start of a node.
        let mut expect_node = true;
        loop {
            self.skip_blank()?;
            if expect_node {
                let parent = open.last().map(|&(v, _)| v);
                if self.peek() == Some('(') {
                    let node = self.new_node(parent);
                    open.push((node, 0));
                    self.pos += 1;
                    continue;
                }
                let start = self.pos;
                let node = self.new_node(parent);
                self.suffix(node)?;
                if self.labels[node].is_none() && self.lengths[node].is_none() && self.pos == start {
                    return Err(self.error("expected `(` or a species label"));
                }
                if let Some(top) = open.last_mut() {
                    top.1 += 1;
                } else {
                    return Err(self.error_at(start, "a tree needs at least two species"));
                }
                expect_node = false;
                continue;
            }
            match self.peek() {
                Some(',') if !open.is_empty() => {
                    self.pos += 1;
                    expect_node = true;
                }
                Some(')') if !open.is_empty() => {
                    let close = self.pos;
                    self.pos += 1;
                    let (node, kids) = open.pop().expect("checked");
                    if kids < 2 {
                        return Err(self.error_at(
                            close,
                            format!("node with {kids} child; internal nodes need at least two"),
                        ));
                    }
                    self.suffix(node)?;
                    match open.last_mut() {
                        Some(top) => top.1 += 1,
                        None => {
                            self.skip_blank()?;
                            if self.peek() != Some(';') {
                                return Err(self.error("expected `;` after the root"));
                            }
                            self.pos += 1;
                            self.skip_blank()?;
                            if self.pos != self.text.len() {
                                return Err(self.error("unexpected text after `;`"));
                            }
                            return self.finish();
                        }
                    }
                }
                None => return Err(self.error("unexpected end of input")),
                Some(c) => return Err(self.error(format!("unexpected `{c}`"))),
            }
        }
    }

    fn finish(self) -> Result<Phylogeny, NewickError> {
        let mut lengths = Vec::with_capacity(self.lengths.len());
        for (v, len) in self.lengths.iter().enumerate() {
            match (self.parents[v], len) {
                (None, _) => lengths.push(0.0),
                (Some(_), Some(l)) => lengths.push(*l),
                (Some(_), None) => {
                    let what = self.labels[v].as_deref().unwrap_or("unnamed node");
                    return Err(self.error_at(
                        self.ends[v],
                        format!("missing branch length for `{what}`"),
                    ));
                }
            }
        }
        Phylogeny::build(TreeSpec {
            parents: self.parents,
            lengths,
            labels: self.labels,
        })
        .map_err(|e| NewickError {
            line: 0,
            column: 0,
            message: e.to_string(),
        })
    }
}

/// Parses one semicolon-terminated Newick tree.
pub fn parse_newick(text: &str) -> Result<Phylogeny, NewickError> {
    Parser {
        text,
        pos: 0,
        parents: Vec::new(),
        lengths: Vec::new(),
        labels: Vec::new(),
        ends: Vec::new(),
    }
    .parse()
}

/// Label used for a species with no display label: its index.
pub fn species_name(tree: &Phylogeny, species: usize) -> String {
    tree.species_label(species)
        .map_or_else(|| species.to_string(), str::to_owned)
}

fn write_label(out: &mut String, label: &str) {
    let needs_quotes = label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || "():;,[]'_".contains(c));
    if needs_quotes {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    } else {
        out.push_str(label);
    }
}

/// Canonical Newick text of `tree`, terminated by `;`.
pub fn write_newick(tree: &Phylogeny) -> String {
    let n = tree.node_count();
    let mut min_species = vec![usize::MAX; n];
    for &v in tree.preorder().iter().rev() {
        min_species[v] = match tree.node_species(v) {
            Some(s) => s,
            None => tree.children(v).iter().map(|&c| min_species[c]).min().unwrap_or(usize::MAX),
        };
    }

    enum Step {
        Open(NodeId),
        Close(NodeId),
        Comma,
    }
    let mut out = String::new();
    let mut stack = vec![Step::Open(tree.root())];
    while let Some(step) = stack.pop() {
        match step {
            Step::Comma => out.push(','),
            Step::Open(v) => {
                if let Some(s) = tree.node_species(v) {
                    write_label(&mut out, &species_name(tree, s));
                    let _ = write!(out, ":{}", tree.lengths()[v]);
                    continue;
                }
                out.push('(');
                let mut kids = tree.children(v).to_vec();
                kids.sort_by_key(|&c| min_species[c]);
                stack.push(Step::Close(v));
                for (i, &c) in kids.iter().enumerate().rev() {
                    stack.push(Step::Open(c));
                    if i > 0 {
                        stack.push(Step::Comma);
                    }
                }
            }
            Step::Close(v) => {
                out.push(')');
                if let Some(label) = tree.node_label(v) {
                    write_label(&mut out, label);
                }
                if v != tree.root() {
                    let _ = write!(out, ":{}", tree.lengths()[v]);
                }
            }
        }
    }
    out.push(';');
    out
}
