//! Guard expressions attached to scene transitions.
//!
//! The storyboard format writes single comparisons such as `&score>15`. This
//! module accepts that form and extends it with `&&`, `||`, `!` and
//! parentheses:
//!
//! ```text
//! cond := or
//! or   := and ("||" and)*
//! and  := atom ("&&" atom)*
//! atom := "!" atom | "(" cond ")" | "&" ident cmp number
//! cmp  := "<" | ">" | "<=" | ">=" | "==" | "!="
//! ```
//!
//! Besides evaluation, [`satisfiable`] gives a sound three-valued answer to
//! "can this guard ever fire / never fail" over declared variable ranges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: Decimal, rhs: Decimal) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConditionExpr {
    Compare {
        var: String,
        op: CmpOp,
        value: Decimal,
    },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
}

impl ConditionExpr {
    pub fn compare(var: impl Into<String>, op: CmpOp, value: Decimal) -> Self {
        ConditionExpr::Compare {
            var: var.into(),
            op,
            value,
        }
    }

    pub fn and(lhs: ConditionExpr, rhs: ConditionExpr) -> Self {
        ConditionExpr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: ConditionExpr, rhs: ConditionExpr) -> Self {
        ConditionExpr::Or(Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: ConditionExpr) -> Self {
        ConditionExpr::Not(Box::new(inner))
    }
}

/// Precedence levels used when printing: or < and < unary.
fn precedence(e: &ConditionExpr) -> u8 {
    match e {
        ConditionExpr::Or(..) => 0,
        ConditionExpr::And(..) => 1,
        ConditionExpr::Not(..) | ConditionExpr::Compare { .. } => 2,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &ConditionExpr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionExpr::Compare { var, op, value } => {
                write!(f, "&{var}{}{value}", op.symbol())
            }
            // Left-nested chains print flat; a right operand of the same
            // precedence gets parentheses so reparsing rebuilds the same tree.
            ConditionExpr::And(l, r) => {
                write_operand(f, l, 1)?;
                f.write_str(" && ")?;
                write_operand(f, r, 2)
            }
            ConditionExpr::Or(l, r) => {
                write_operand(f, l, 0)?;
                f.write_str(" || ")?;
                write_operand(f, r, 1)
            }
            ConditionExpr::Not(inner) => {
                f.write_str("!")?;
                write_operand(f, inner, 2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown comparison operator `{op}` at offset {offset}")]
    UnknownOperator { offset: usize, op: String },
}

impl ConditionError {
    pub fn offset(&self) -> usize {
        match self {
            ConditionError::Syntax { offset, .. } | ConditionError::UnknownOperator { offset, .. } => {
                *offset
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ConditionError {
        ConditionError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn parse_or(&mut self) -> Result<ConditionExpr, ConditionError> {
        let mut lhs = self.parse_and()?;
        while self.eat("||") {
            let rhs = self.parse_and()?;
            lhs = ConditionExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<ConditionExpr, ConditionError> {
        let mut lhs = self.parse_atom()?;
        while self.eat("&&") {
            let rhs = self.parse_atom()?;
            lhs = ConditionExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_atom(&mut self) -> Result<ConditionExpr, ConditionError> {
        self.skip_ws();
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(ConditionExpr::not(self.parse_atom()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_or()?;
                if !self.eat(")") {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(b'&') => {
                self.pos += 1;
                let var = self.parse_ident()?;
                let op = self.parse_cmp()?;
                let value = self.parse_number()?;
                Ok(ConditionExpr::Compare { var, op, value })
            }
            Some(_) => Err(self.syntax("expected `&variable`, `!` or `(`")),
            None => Err(self.syntax("unexpected end of condition")),
        }
    }

    fn parse_ident(&mut self) -> Result<String, ConditionError> {
        let start = self.pos;
        let bytes = self.bytes();
        match bytes.get(self.pos) {
            Some(b) if b.is_ascii_alphabetic() || *b == b'_' => self.pos += 1,
            _ => return Err(self.syntax("expected variable name after `&`")),
        }
        while let Some(b) = bytes.get(self.pos) {
            if b.is_ascii_alphanumeric() || *b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn parse_cmp(&mut self) -> Result<CmpOp, ConditionError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.bytes();
        let mut end = start;
        while end < bytes.len() && b"<>=!".contains(&bytes[end]) {
            end += 1;
        }
        let text = &self.src[start..end];
        let op = match text {
            "<" => CmpOp::Lt,
            ">" => CmpOp::Gt,
            "<=" => CmpOp::Le,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "" => return Err(self.syntax("expected comparison operator")),
            other => {
                return Err(ConditionError::UnknownOperator {
                    offset: start,
                    op: other.to_string(),
                })
            }
        };
        self.pos = end;
        Ok(op)
    }

    fn parse_number(&mut self) -> Result<Decimal, ConditionError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.bytes();
        let mut end = start;
        if bytes.get(end) == Some(&b'-') {
            end += 1;
        }
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        let text = &self.src[start..end];
        if text.is_empty() || text == "-" {
            return Err(self.syntax("expected number"));
        }
        let value = text.parse::<Decimal>().map_err(|e| ConditionError::Syntax {
            offset: start,
            message: e.to_string(),
        })?;
        self.pos = end;
        Ok(value)
    }
}

/// Parses a guard. Errors carry the byte offset of the offending token.
pub fn parse_condition(text: &str) -> Result<ConditionExpr, ConditionError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    if p.pos == text.len() {
        return Err(p.syntax("empty condition"));
    }
    let expr = p.parse_or()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

/// Variable bindings a guard is evaluated against.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableEnv(BTreeMap<String, Decimal>);

impl VariableEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: Decimal) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<Decimal> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Decimal)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<K: Into<String>> FromIterator<(K, Decimal)> for VariableEnv {
    fn from_iter<I: IntoIterator<Item = (K, Decimal)>>(iter: I) -> Self {
        VariableEnv(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable `{0}` is not bound")]
pub struct UnboundVariable(pub String);

pub fn eval_condition(expr: &ConditionExpr, env: &VariableEnv) -> Result<bool, UnboundVariable> {
    Ok(match expr {
        ConditionExpr::Compare { var, op, value } => {
            let current = env.get(var).ok_or_else(|| UnboundVariable(var.clone()))?;
            op.apply(current, *value)
        }
        ConditionExpr::And(l, r) => eval_condition(l, env)? && eval_condition(r, env)?,
        ConditionExpr::Or(l, r) => eval_condition(l, env)? || eval_condition(r, env)?,
        ConditionExpr::Not(inner) => !eval_condition(inner, env)?,
    })
}

pub fn free_vars(expr: &ConditionExpr) -> BTreeSet<String> {
    fn walk(e: &ConditionExpr, out: &mut BTreeSet<String>) {
        match e {
            ConditionExpr::Compare { var, .. } => {
                out.insert(var.clone());
            }
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => {
                walk(l, out);
                walk(r, out);
            }
            ConditionExpr::Not(inner) => walk(inner, out),
        }
    }
    let mut out = BTreeSet::new();
    walk(expr, &mut out);
    out
}

/// Closed numeric interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Decimal,
    pub hi: Decimal,
}

impl Interval {
    pub fn new(lo: Decimal, hi: Decimal) -> Self {
        Interval { lo, hi }
    }

    pub fn ints(lo: i64, hi: i64) -> Self {
        Interval::new(Decimal::from_int(lo), Decimal::from_int(hi))
    }

    pub fn is_valid(&self) -> bool {
        self.lo <= self.hi
    }

    pub fn contains(&self, v: Decimal) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn midpoint(&self) -> Decimal {
        self.lo.midpoint(self.hi)
    }

    pub fn width(&self) -> Decimal {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Satisfiability {
    Always,
    Never,
    Sometimes,
}

impl Satisfiability {
    fn negate(self) -> Self {
        match self {
            Satisfiability::Always => Satisfiability::Never,
            Satisfiability::Never => Satisfiability::Always,
            Satisfiability::Sometimes => Satisfiability::Sometimes,
        }
    }

    fn and(self, other: Self) -> Self {
        use Satisfiability::*;
        match (self, other) {
            (Never, _) | (_, Never) => Never,
            (Always, Always) => Always,
            _ => Sometimes,
        }
    }

    fn or(self, other: Self) -> Self {
        use Satisfiability::*;
        match (self, other) {
            (Always, _) | (_, Always) => Always,
            (Never, Never) => Never,
            _ => Sometimes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no declared range for variable `{0}`")]
pub struct MissingRange(pub String);

/// Set of grid points (raw decimal units) as sorted, disjoint, non-adjacent
/// closed intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PointSet(Vec<(i64, i64)>);

impl PointSet {
    fn span(lo: i64, hi: i64) -> Self {
        if lo > hi {
            PointSet(Vec::new())
        } else {
            PointSet(vec![(lo, hi)])
        }
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn intersect(&self, other: &PointSet) -> PointSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a_lo, a_hi) = self.0[i];
            let (b_lo, b_hi) = other.0[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a_hi < b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        PointSet(out)
    }

    fn union(&self, other: &PointSet) -> PointSet {
        let mut all: Vec<(i64, i64)> = self.0.iter().chain(other.0.iter()).copied().collect();
        all.sort_unstable();
        let mut out: Vec<(i64, i64)> = Vec::with_capacity(all.len());
        for (lo, hi) in all {
            match out.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        PointSet(out)
    }

    /// Complement relative to `[lo, hi]`.
    fn complement_within(&self, lo: i64, hi: i64) -> PointSet {
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.0 {
            if b < lo || a > hi {
                continue;
            }
            if a > cursor {
                out.push((cursor, a - 1));
            }
            if b >= hi {
                return PointSet(out);
            }
            cursor = cursor.max(b + 1);
        }
        if cursor <= hi {
            out.push((cursor, hi));
        }
        PointSet(out)
    }
}

fn comparison_points(op: CmpOp, value: Decimal, lo: i64, hi: i64) -> PointSet {
    let c = value.raw();
    let raw = match op {
        CmpOp::Lt => PointSet::span(lo, hi.min(c.saturating_sub(1))),
        CmpOp::Le => PointSet::span(lo, hi.min(c)),
        CmpOp::Gt => PointSet::span(lo.max(c.saturating_add(1)), hi),
        CmpOp::Ge => PointSet::span(lo.max(c), hi),
        CmpOp::Eq => PointSet::span(lo.max(c), hi.min(c)),
        CmpOp::Ne => PointSet::span(c, c).complement_within(lo, hi),
    };
    raw.intersect(&PointSet::span(lo, hi))
}

/// Exact satisfying set of a guard that mentions only `var`.
fn single_var_points(expr: &ConditionExpr, lo: i64, hi: i64) -> PointSet {
    match expr {
        ConditionExpr::Compare { op, value, .. } => comparison_points(*op, *value, lo, hi),
        ConditionExpr::And(l, r) => single_var_points(l, lo, hi).intersect(&single_var_points(r, lo, hi)),
        ConditionExpr::Or(l, r) => single_var_points(l, lo, hi).union(&single_var_points(r, lo, hi)),
        ConditionExpr::Not(inner) => single_var_points(inner, lo, hi).complement_within(lo, hi),
    }
}

fn verdict_of(points: &PointSet, lo: i64, hi: i64) -> Satisfiability {
    if points.is_empty() {
        Satisfiability::Never
    } else if points.0 == [(lo, hi)] {
        Satisfiability::Always
    } else {
        Satisfiability::Sometimes
    }
}

fn flatten<'e>(expr: &'e ConditionExpr, conj: bool, out: &mut Vec<&'e ConditionExpr>) {
    match (expr, conj) {
        (ConditionExpr::And(l, r), true) | (ConditionExpr::Or(l, r), false) => {
            flatten(l, conj, out);
            flatten(r, conj, out);
        }
        _ => out.push(expr),
    }
}

fn analyze(
    expr: &ConditionExpr,
    ranges: &BTreeMap<String, Interval>,
) -> Satisfiability {
    let vars = free_vars(expr);
    if vars.len() == 1 {
        let var = vars.iter().next().expect("one variable");
        let range = ranges[var];
        let (lo, hi) = (range.lo.raw(), range.hi.raw());
        return verdict_of(&single_var_points(expr, lo, hi), lo, hi);
    }
    match expr {
        ConditionExpr::Not(inner) => analyze(inner, ranges).negate(),
        ConditionExpr::And(..) | ConditionExpr::Or(..) => {
            let conj = matches!(expr, ConditionExpr::And(..));
            let mut parts = Vec::new();
            flatten(expr, conj, &mut parts);
            // Same-variable operands are combined exactly; the groups are then
            // joined with three-valued logic, which is sound for independent
            // operands.
            let mut by_var: BTreeMap<&str, Vec<&ConditionExpr>> = BTreeMap::new();
            let mut mixed = Vec::new();
            for part in parts {
                let fv = free_vars(part);
                if fv.len() == 1 {
                    let name = fv.into_iter().next().expect("one variable");
                    let key = ranges
                        .get_key_value(&name)
                        .map(|(k, _)| k.as_str())
                        .expect("range checked");
                    by_var.entry(key).or_default().push(part);
                } else {
                    mixed.push(part);
                }
            }
            let mut acc: Option<Satisfiability> = None;
            let mut combine = |v: Satisfiability| {
                acc = Some(match acc {
                    None => v,
                    Some(a) if conj => a.and(v),
                    Some(a) => a.or(v),
                });
            };
            for (var, group) in by_var {
                let range = ranges[var];
                let (lo, hi) = (range.lo.raw(), range.hi.raw());
                let mut set = single_var_points(group[0], lo, hi);
                for g in &group[1..] {
                    let other = single_var_points(g, lo, hi);
                    set = if conj { set.intersect(&other) } else { set.union(&other) };
                }
                combine(verdict_of(&set, lo, hi));
            }
            for part in mixed {
                combine(analyze(part, ranges));
            }
            acc.unwrap_or(Satisfiability::Sometimes)
        }
        // A comparison always has exactly one variable.
        ConditionExpr::Compare { .. } => Satisfiability::Sometimes,
    }
}

/// Three-valued satisfiability of `expr` when every variable ranges over its
/// declared interval (on the fixed decimal grid).
///
/// `Never` and `Always` are exact claims; `Sometimes` may be returned
/// conservatively when operands mention several variables.
pub fn satisfiable(
    expr: &ConditionExpr,
    ranges: &BTreeMap<String, Interval>,
) -> Result<Satisfiability, MissingRange> {
    for var in free_vars(expr) {
        match ranges.get(&var) {
            Some(r) if r.is_valid() => {}
            // An empty range admits no assignment at all.
            Some(_) => return Ok(Satisfiability::Never),
            None => return Err(MissingRange(var)),
        }
    }
    Ok(analyze(expr, ranges))
}
