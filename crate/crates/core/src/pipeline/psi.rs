//! Helper strings: repetition groups and functional dependencies between the
//! sensitive tokens of one prompt.
//!
//! Token indices are positions in the prompt's typed sequence (0-based).
//! JSON form:
//!
//! ```json
//! {
//!   "repeat": [[0, 2]],
//!   "derive": [
//!     {"target": 1, "rule": "scale", "from": 0, "factor": "12"},
//!     {"target": 3, "rule": "difference", "minuend": 1, "subtrahend": 2},
//!     {"target": 4, "rule": "year_from_age", "from": 0},
//!     {"target": 5, "rule": "custom", "inputs": [0, 2], "expr": "x0 * 2 + x1"}
//!   ]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::{Category, SensitiveType, TypedSequence};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsiError {
    #[error("helper string refers to token {index}, but the prompt has {len} sensitive tokens")]
    Dangling { index: usize, len: usize },
    #[error("dependencies form a cycle through token {0}")]
    Cycle(usize),
    #[error("token {0} has more than one derivation")]
    MultipleRules(usize),
    #[error("token {index}: {reason}")]
    TypeMismatch { index: usize, reason: String },
    #[error("malformed helper string: {0}")]
    Malformed(String),
}

/// Rational factor written as `"12"` or `"1/12"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor(pub Ratio<i64>);

impl FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: i64 = n.parse().map_err(|_| format!("bad factor {s:?}"))?;
        let d: i64 = d.parse().map_err(|_| format!("bad factor {s:?}"))?;
        if d == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Self(Ratio::new(n, d)))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Factor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// How a dependent token is computed from sanitized determinants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Transform {
    Identity { from: usize },
    /// `reference_year - age`.
    YearFromAge { from: usize },
    Scale { from: usize, factor: Factor },
    Difference { minuend: usize, subtrahend: usize },
    /// Arithmetic over `x0, x1, …`, bound to `inputs` in order.
    Custom { inputs: Vec<usize>, expr: String },
}

impl Transform {
    pub fn inputs(&self) -> Vec<usize> {
        match self {
            Transform::Identity { from } | Transform::YearFromAge { from } | Transform::Scale { from, .. } => {
                vec![*from]
            }
            Transform::Difference { minuend, subtrahend } => vec![*minuend, *subtrahend],
            Transform::Custom { inputs, .. } => inputs.clone(),
        }
    }

    /// Applies the rule to the determinant values, in `inputs()` order.
    pub fn apply(&self, values: &[Decimal], reference_year: i64) -> Result<Decimal, String> {
        match self {
            Transform::Identity { .. } => Ok(values[0]),
            Transform::YearFromAge { .. } => Ok(Decimal::from(reference_year) - values[0]),
            Transform::Scale { factor, .. } => {
                let r = factor.0;
                Ok(values[0] * Decimal::from(*r.numer()) / Decimal::from(*r.denom()))
            }
            Transform::Difference { .. } => Ok(values[0] - values[1]),
            Transform::Custom { expr, .. } => eval_expr(expr, values),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    pub target: usize,
    #[serde(flatten)]
    pub transform: Transform,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperString {
    /// Sets of tokens sharing one true value; the smallest index is the
    /// representative.
    #[serde(default)]
    pub repeat: Vec<Vec<usize>>,
    #[serde(default)]
    pub derive: Vec<Dependency>,
}

impl HelperString {
    pub fn is_empty(&self) -> bool {
        self.repeat.is_empty() && self.derive.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self, PsiError> {
        serde_json::from_str(text).map_err(|e| PsiError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("helper string serializes")
    }
}

/// A validated helper string with the evaluation plan derived from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub psi: HelperString,
    /// Group representative of every grouped token (including itself).
    pub representative: BTreeMap<usize, usize>,
    /// Dependencies in an order where determinants come first.
    pub order: Vec<Dependency>,
    /// Category II tokens that receive fresh noise.
    pub roots: Vec<usize>,
}

impl Plan {
    pub fn t(&self) -> usize {
        self.roots.len()
    }
}

fn check_index(index: usize, len: usize) -> Result<(), PsiError> {
    if index >= len {
        Err(PsiError::Dangling { index, len })
    } else {
        Ok(())
    }
}

/// Validates `user` against `seq`, adds repetition groups for category II
/// tokens of equal type and value, and counts the noised roots.
pub fn preprocess(seq: &TypedSequence, user: Option<&HelperString>) -> Result<Plan, PsiError> {
    let tokens = seq.tokens();
    let n = tokens.len();
    let user = user.cloned().unwrap_or_default();
    let numeric = |i: usize| super::numeric::parse_number(&tokens[i].text).map(|(v, _)| v);

    let mut targets = BTreeSet::new();
    for dep in &user.derive {
        check_index(dep.target, n)?;
        if !targets.insert(dep.target) {
            return Err(PsiError::MultipleRules(dep.target));
        }
        let inputs = dep.transform.inputs();
        if inputs.is_empty() {
            return Err(PsiError::Malformed(format!("rule for token {} has no inputs", dep.target)));
        }
        for &i in inputs.iter().chain(std::iter::once(&dep.target)) {
            check_index(i, n)?;
            if tokens[i].category != Category::II || numeric(i).is_none() {
                return Err(PsiError::TypeMismatch { index: i, reason: "dependencies relate numeric category II tokens".into() });
            }
        }
        if let Transform::YearFromAge { from } = dep.transform {
            if tokens[from].ty != SensitiveType::Age {
                return Err(PsiError::TypeMismatch { index: from, reason: "year_from_age needs an Age input".into() });
            }
        }
        if let Transform::Custom { inputs, expr } = &dep.transform {
            check_expr(expr, inputs.len()).map_err(|e| PsiError::Malformed(format!("expression {expr:?}: {e}")))?;
        }
    }

    // Union-find over user groups plus automatic duplicates.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    fn union(p: &mut [usize], a: usize, b: usize) {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            p[hi] = lo;
        }
    }
    for group in &user.repeat {
        for &i in group {
            check_index(i, n)?;
            if targets.contains(&i) {
                return Err(PsiError::MultipleRules(i));
            }
        }
        if let Some(&first) = group.first() {
            for &i in group {
                if tokens[i].ty != tokens[first].ty {
                    return Err(PsiError::TypeMismatch { index: i, reason: "repetition group mixes types".into() });
                }
                union(&mut parent, first, i);
            }
        }
    }
    let mut seen: BTreeMap<(SensitiveType, Decimal), usize> = BTreeMap::new();
    for (i, token) in tokens.iter().enumerate() {
        if token.category != Category::II || targets.contains(&i) {
            continue;
        }
        if let Some(v) = numeric(i) {
            match seen.get(&(token.ty.clone(), v.normalize())) {
                Some(&j) => union(&mut parent, j, i),
                None => {
                    seen.insert((token.ty.clone(), v.normalize()), i);
                }
            }
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        members.entry(r).or_default().push(i);
    }
    let mut representative = BTreeMap::new();
    let mut repeat = Vec::new();
    for (r, group) in members {
        if group.len() > 1 {
            for &i in &group {
                representative.insert(i, r);
            }
            repeat.push(group);
        }
    }

    // Topological order of dependencies (Kahn).
    let mut pending: Vec<Dependency> = user.derive.clone();
    let mut order = Vec::with_capacity(pending.len());
    let mut resolved: BTreeSet<usize> = (0..n).filter(|i| !targets.contains(i)).collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|dep| {
            if dep.transform.inputs().iter().all(|i| resolved.contains(i)) {
                resolved.insert(dep.target);
                order.push(dep.clone());
                false
            } else {
                true
            }
        });
        if pending.len() == before {
            return Err(PsiError::Cycle(pending[0].target));
        }
    }

    let roots = (0..n)
        .filter(|&i| tokens[i].category == Category::II && !targets.contains(&i))
        .filter(|i| representative.get(i).is_none_or(|r| r == i))
        .collect();
    Ok(Plan { psi: HelperString { repeat, derive: user.derive }, representative, order, roots })
}

/// Evaluates `+ - * /` and parentheses over decimals and variables `x0…`.
pub fn eval_expr(expr: &str, vars: &[Decimal]) -> Result<Decimal, String> {
    run_expr(expr, vars, false)
}

/// Syntax and variable check without arithmetic.
pub fn check_expr(expr: &str, n_vars: usize) -> Result<(), String> {
    run_expr(expr, &vec![Decimal::ZERO; n_vars], true).map(drop)
}

fn run_expr(expr: &str, vars: &[Decimal], dry: bool) -> Result<Decimal, String> {
    let tokens = lex(expr)?;
    let mut p = ExprParser { tokens: &tokens, pos: 0, vars, dry };
    let v = p.sum()?;
    if p.pos != tokens.len() {
        return Err(format!("unexpected input at token {}", p.pos));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Decimal),
    Var(usize),
    Op(char),
}

fn lex(expr: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| format!("bad number {s:?}"))?));
        } else if c == 'x' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Var(s.parse().map_err(|_| "variable needs an index, like x0".to_owned())?));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    vars: &'a [Decimal],
    dry: bool,
}

impl ExprParser<'_> {
    fn next_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Decimal, String> {
        let mut acc = self.product()?;
        while let Some(op @ ('+' | '-')) = self.next_op() {
            self.pos += 1;
            let rhs = self.product()?;
            if self.dry {
                continue;
            }
            acc = if op == '+' { acc.checked_add(rhs) } else { acc.checked_sub(rhs) }.ok_or("overflow")?;
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Decimal, String> {
        let mut acc = self.atom()?;
        while let Some(op @ ('*' | '/')) = self.next_op() {
            self.pos += 1;
            let rhs = self.atom()?;
            if self.dry {
                continue;
            }
            acc = if op == '*' {
                acc.checked_mul(rhs).ok_or("overflow")?
            } else {
                acc.checked_div(rhs).ok_or("division by zero")?
            };
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Decimal, String> {
        let tok = self.tokens.get(self.pos).cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(v),
            Tok::Var(i) => self.vars.get(i).copied().ok_or_else(|| format!("x{i} is not bound")),
            Tok::Op('-') => Ok(-self.atom()?),
            Tok::Op('(') => {
                let v = self.sum()?;
                if self.next_op() != Some(')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Tok::Op(c) => Err(format!("unexpected {c:?}")),
        }
    }
}
