//! Sequential binary partitions over the levels of one factor.
//!
//! Concrete syntax is nested binary grouping:
//!
//! ```text
//! node  := LEVEL | "(" node "," node ")"
//! LEVEL := any run of characters other than '(', ')' and ','
//! ```
//!
//! Whitespace around tokens is ignored. The left member of a pair is the
//! `+` (numerator) group, the right member the `-` (denominator) group.
//! Steps are numbered by a pre-order walk of the internal nodes, so step 1
//! always splits the full level set.

use std::collections::HashSet;
use std::fmt;

use crate::contrast::{ContrastMatrix, CoordinateKey, FactorSubset};
use crate::error::{CodaError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SbpTree {
    Leaf(String),
    Node(Box<SbpTree>, Box<SbpTree>),
}

impl SbpTree {
    pub fn node(left: SbpTree, right: SbpTree) -> Self {
        SbpTree::Node(Box::new(left), Box::new(right))
    }

    pub fn leaf(name: impl Into<String>) -> Self {
        SbpTree::Leaf(name.into())
    }

    /// Leaf names in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SbpTree::Leaf(name) => out.push(name),
            SbpTree::Node(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn internal_nodes(&self) -> usize {
        match self {
            SbpTree::Leaf(_) => 0,
            SbpTree::Node(l, r) => 1 + l.internal_nodes() + r.internal_nodes(),
        }
    }
}

impl fmt::Display for SbpTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbpTree::Leaf(name) => f.write_str(name),
            SbpTree::Node(l, r) => write!(f, "({l},{r})"),
        }
    }
}

/// One partition step: `plus` and `minus` hold level names in tree order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SbpStep {
    /// 1-based ordinal in pre-order.
    pub index: usize,
    pub plus: Vec<String>,
    pub minus: Vec<String>,
}

impl SbpStep {
    pub fn p(&self) -> usize {
        self.plus.len()
    }

    pub fn q(&self) -> usize {
        self.minus.len()
    }
}

/// Parses `text` and checks that its leaves are exactly `levels`.
pub fn parse_sbp<S: AsRef<str>>(text: &str, levels: &[S]) -> Result<SbpTree> {
    let tree = parse_tree(text)?;
    check_leaves(&tree, levels)?;
    Ok(tree)
}

/// Parses without checking the leaf set.
pub fn parse_tree(text: &str) -> Result<SbpTree> {
    let mut parser = Parser { text, pos: 0 };
    let tree = parser.node()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        return Err(parser.error(format!(
            "unexpected `{}` after complete partition",
            parser.peek().unwrap()
        )));
    }
    Ok(tree)
}

fn check_leaves<S: AsRef<str>>(tree: &SbpTree, levels: &[S]) -> Result<()> {
    let known: HashSet<&str> = levels.iter().map(|l| l.as_ref()).collect();
    let mut seen = HashSet::new();
    for leaf in tree.leaves() {
        if !known.contains(leaf) {
            return Err(CodaError::UnknownLevel(leaf.to_string()));
        }
        if !seen.insert(leaf) {
            return Err(CodaError::DuplicateLevel(leaf.to_string()));
        }
    }
    for level in levels {
        if !seen.contains(level.as_ref()) {
            return Err(CodaError::MissingLevel(level.as_ref().to_string()));
        }
    }
    Ok(())
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn error(&self, message: String) -> CodaError {
        CodaError::SbpSyntax {
            position: (self.pos < self.text.len()).then_some(self.pos),
            message,
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`"))),
        }
    }

    fn node(&mut self) -> Result<SbpTree> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected a level or `(`".to_string())),
            Some('(') => {
                self.pos += 1;
                let left = self.node()?;
                self.expect(',')?;
                let right = self.node()?;
                self.expect(')')?;
                Ok(SbpTree::node(left, right))
            }
            Some(c @ (')' | ',')) => Err(self.error(format!("expected a level, found `{c}`"))),
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if matches!(c, '(' | ')' | ',') {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                Ok(SbpTree::Leaf(self.text[start..self.pos].trim().to_string()))
            }
        }
    }
}

/// Steps in pre-order of the internal nodes.
pub fn sbp_steps(tree: &SbpTree) -> Vec<SbpStep> {
    fn walk(tree: &SbpTree, out: &mut Vec<SbpStep>) {
        if let SbpTree::Node(l, r) = tree {
            out.push(SbpStep {
                index: out.len() + 1,
                plus: l.leaves().into_iter().map(String::from).collect(),
                minus: r.leaves().into_iter().map(String::from).collect(),
            });
            walk(l, out);
            walk(r, out);
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut out);
    out
}

/// Per-level weights of the plain mean log-ratio of a step: `1/p` on the
/// plus group, `-1/q` on the minus group, zero elsewhere.
pub fn mean_pattern<S: AsRef<str>>(step: &SbpStep, levels: &[S]) -> Vec<f64> {
    let (p, q) = (step.p() as f64, step.q() as f64);
    levels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            if step.plus.iter().any(|x| x == l) {
                1.0 / p
            } else if step.minus.iter().any(|x| x == l) {
                -1.0 / q
            } else {
                0.0
            }
        })
        .collect()
}

/// Balance normalizer `sqrt(pq / (p + q))`.
pub fn balance_scale(step: &SbpStep) -> f64 {
    let (p, q) = (step.p() as f64, step.q() as f64);
    (p * q / (p + q)).sqrt()
}

/// Orthonormal log-contrast coefficients of one step: `sqrt(q/(p(p+q)))` on
/// the plus group and `-sqrt(p/(q(p+q)))` on the minus group.
pub fn balance_coefficients<S: AsRef<str>>(step: &SbpStep, levels: &[S]) -> Vec<f64> {
    let scale = balance_scale(step);
    mean_pattern(step, levels)
        .into_iter()
        .map(|w| w * scale)
        .collect()
}

/// A named factor with ordered levels and a partition tree over them.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    name: String,
    code: Option<String>,
    levels: Vec<String>,
    sbp: SbpTree,
    steps: Vec<SbpStep>,
}

impl FactorSpec {
    pub fn new<S: AsRef<str>>(name: &str, levels: &[S], sbp_text: &str) -> Result<Self> {
        let levels: Vec<String> = levels.iter().map(|l| l.as_ref().to_string()).collect();
        validate_levels(name, &levels)?;
        let sbp = parse_sbp(sbp_text, &levels)?;
        Ok(Self::assemble(name, levels, sbp))
    }

    pub fn from_tree<S: AsRef<str>>(name: &str, levels: &[S], sbp: SbpTree) -> Result<Self> {
        let levels: Vec<String> = levels.iter().map(|l| l.as_ref().to_string()).collect();
        validate_levels(name, &levels)?;
        check_leaves(&sbp, &levels)?;
        Ok(Self::assemble(name, levels, sbp))
    }

    fn assemble(name: &str, levels: Vec<String>, sbp: SbpTree) -> Self {
        let steps = sbp_steps(&sbp);
        Self {
            name: name.to_string(),
            code: None,
            levels,
            sbp,
            steps,
        }
    }

    /// Short label used when composing coordinate keys (`r`, `c`, `s`, ...).
    pub fn with_code(mut self, code: impl Into<String>) -> Self {
        self.code = Some(code.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn code(&self) -> Option<&str> {
        self.code.as_deref()
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    pub fn sbp(&self) -> &SbpTree {
        &self.sbp
    }

    pub fn steps(&self) -> &[SbpStep] {
        &self.steps
    }

    /// +1 / -1 / 0 per step (rows) and level (columns).
    pub fn sign_matrix(&self) -> Vec<Vec<i8>> {
        self.steps
            .iter()
            .map(|s| {
                mean_pattern(s, &self.levels)
                    .into_iter()
                    .map(|w| w.partial_cmp(&0.0).map_or(0, |o| o as i8))
                    .collect()
            })
            .collect()
    }
}

fn validate_levels(name: &str, levels: &[String]) -> Result<()> {
    let invalid = |reason: String| CodaError::InvalidFactor {
        factor: name.to_string(),
        reason,
    };
    if name.trim().is_empty() {
        return Err(invalid("empty factor name".to_string()));
    }
    if levels.len() < 2 {
        return Err(invalid(format!(
            "needs at least 2 levels, got {}",
            levels.len()
        )));
    }
    let mut seen = HashSet::new();
    for level in levels {
        if level.is_empty() || level.trim() != level {
            return Err(invalid(format!(
                "level `{level}` is empty or padded with whitespace"
            )));
        }
        if level.contains(['(', ')', ',']) {
            return Err(invalid(format!(
                "level `{level}` contains a reserved character"
            )));
        }
        if !seen.insert(level.as_str()) {
            return Err(CodaError::DuplicateLevel(level.clone()));
        }
    }
    Ok(())
}

/// The (L-1) x L balance matrix of a single factor.
pub fn vector_contrast_matrix(spec: &FactorSpec) -> ContrastMatrix {
    let rows = spec
        .steps()
        .iter()
        .map(|s| balance_coefficients(s, spec.levels()))
        .collect::<Vec<_>>();
    let keys = spec
        .steps()
        .iter()
        .map(|s| CoordinateKey::new(FactorSubset::single(0), vec![s.index]))
        .collect();
    let scales = spec.steps().iter().map(balance_scale).collect();
    ContrastMatrix::from_rows(vec![spec.level_count()], rows, keys, scales)
}
