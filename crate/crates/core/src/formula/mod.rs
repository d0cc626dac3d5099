//! Formulas of modal logic with dependence, independence and generalized
//! atoms, kept in negation normal form.
//!
//! Negation only appears directly on propositions. Formulas are immutable
//! trees compared node by node.

mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse, parse_with, ParseError, ParseErrorKind};

/// A propositional variable name: a letter followed by letters, digits or `_`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VarId(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid variable name {0:?}")]
pub struct InvalidVarName(pub String);

impl VarId {
    pub fn new(name: &str) -> Result<Self, InvalidVarName> {
        if is_identifier(name) {
            Ok(VarId(Arc::from(name)))
        } else {
            Err(InvalidVarName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for VarId {
    type Err = InvalidVarName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VarId::new(s)
    }
}

impl TryFrom<String> for VarId {
    type Error = InvalidVarName;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        VarId::new(&s)
    }
}

impl From<VarId> for String {
    fn from(v: VarId) -> String {
        v.0.to_string()
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for building variables from literals known to be valid.
///
/// Panics on an invalid name.
pub fn var(name: &str) -> VarId {
    VarId::new(name).expect("valid variable name")
}

pub fn vars(names: &[&str]) -> Vec<VarId> {
    names.iter().map(|n| var(n)).collect()
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Prop(VarId),
    NegProp(VarId),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Diamond(Box<Formula>),
    Box(Box<Formula>),
    /// `dep(determiners ; determined)`
    Dep {
        determiners: Vec<VarId>,
        determined: VarId,
    },
    /// `indep(left ; cond ; right)`: left and right are independent for each
    /// fixed value of cond. `cond` may be empty.
    Indep {
        left: Vec<VarId>,
        cond: Vec<VarId>,
        right: Vec<VarId>,
    },
    /// A registered generalized dependence atom applied to its arguments.
    GenAtom { atom: String, args: Vec<VarId> },
}

impl Formula {
    pub fn prop(v: &str) -> Formula {
        Formula::Prop(var(v))
    }

    pub fn neg(v: &str) -> Formula {
        Formula::NegProp(var(v))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn diamond(f: Formula) -> Formula {
        Formula::Diamond(Box::new(f))
    }

    pub fn boxed(f: Formula) -> Formula {
        Formula::Box(Box::new(f))
    }

    pub fn dep(determiners: Vec<VarId>, determined: VarId) -> Formula {
        Formula::Dep {
            determiners,
            determined,
        }
    }

    pub fn indep(left: Vec<VarId>, cond: Vec<VarId>, right: Vec<VarId>) -> Formula {
        Formula::Indep { left, cond, right }
    }

    pub fn gen_atom(atom: &str, args: Vec<VarId>) -> Formula {
        Formula::GenAtom {
            atom: atom.to_string(),
            args,
        }
    }

    /// Left-nested conjunction of a nonempty sequence.
    ///
    /// Panics on an empty iterator.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::and)
            .expect("conjunction of at least one formula")
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => vec![l, r],
            Formula::Diamond(f) | Formula::Box(f) => vec![f],
            _ => vec![],
        }
    }

    /// Maximal nesting of modal operators.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => l.modal_depth().max(r.modal_depth()),
            Formula::Diamond(f) | Formula::Box(f) => f.modal_depth() + 1,
            _ => 0,
        }
    }

    /// True iff the formula is pure modal logic: no dependence,
    /// independence or generalized atom anywhere.
    pub fn is_flat(&self) -> bool {
        match self {
            Formula::Prop(_) | Formula::NegProp(_) => true,
            Formula::And(l, r) | Formula::Or(l, r) => l.is_flat() && r.is_flat(),
            Formula::Diamond(f) | Formula::Box(f) => f.is_flat(),
            Formula::Dep { .. } | Formula::Indep { .. } | Formula::GenAtom { .. } => false,
        }
    }

    /// Replaces every `dep(d ; q)` by the equivalent `indep(q ; d ; q)`.
    pub fn rewrite_dep_to_indep(&self) -> Formula {
        match self {
            Formula::Dep {
                determiners,
                determined,
            } => Formula::Indep {
                left: vec![determined.clone()],
                cond: determiners.clone(),
                right: vec![determined.clone()],
            },
            Formula::And(l, r) => Formula::and(l.rewrite_dep_to_indep(), r.rewrite_dep_to_indep()),
            Formula::Or(l, r) => Formula::or(l.rewrite_dep_to_indep(), r.rewrite_dep_to_indep()),
            Formula::Diamond(f) => Formula::diamond(f.rewrite_dep_to_indep()),
            Formula::Box(f) => Formula::boxed(f.rewrite_dep_to_indep()),
            other => other.clone(),
        }
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Prop(v) | Formula::NegProp(v) => {
                out.insert(v.clone());
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
            Formula::Diamond(f) | Formula::Box(f) => f.collect_variables(out),
            Formula::Dep {
                determiners,
                determined,
            } => {
                out.extend(determiners.iter().cloned());
                out.insert(determined.clone());
            }
            Formula::Indep { left, cond, right } => {
                out.extend(left.iter().chain(cond).chain(right).cloned());
            }
            Formula::GenAtom { args, .. } => out.extend(args.iter().cloned()),
        }
    }

    /// Names of generalized atoms used anywhere in the formula.
    pub fn atom_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if let Formula::GenAtom { atom, .. } = f {
                out.insert(atom.clone());
            }
            stack.extend(f.children());
        }
        out
    }

    pub fn contains_dep(&self) -> bool {
        match self {
            Formula::Dep { .. } => true,
            _ => self.children().into_iter().any(Formula::contains_dep),
        }
    }

    /// Symbol count: one per node plus one per atom argument.
    pub fn size(&self) -> usize {
        match self {
            Formula::Prop(_) | Formula::NegProp(_) => 1,
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
            Formula::Diamond(f) | Formula::Box(f) => 1 + f.size(),
            Formula::Dep { determiners, .. } => 2 + determiners.len(),
            Formula::Indep { left, cond, right } => 1 + left.len() + cond.len() + right.len(),
            Formula::GenAtom { args, .. } => 1 + args.len(),
        }
    }

    /// Number of `◇` occurrences.
    pub fn diamond_count(&self) -> usize {
        let own = usize::from(matches!(self, Formula::Diamond(_)));
        own + self
            .children()
            .into_iter()
            .map(Formula::diamond_count)
            .sum::<usize>()
    }

    /// Concrete syntax; binary connectives are always parenthesized so the
    /// output parses back to the same tree.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, vs: &[VarId]) -> fmt::Result {
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Prop(v) => write!(f, "{v}"),
            Formula::NegProp(v) => write!(f, "~{v}"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::Diamond(g) => write!(f, "<>{g}"),
            Formula::Box(g) => write!(f, "[]{g}"),
            Formula::Dep {
                determiners,
                determined,
            } => {
                f.write_str("dep(")?;
                write_list(f, determiners)?;
                if determiners.is_empty() {
                    write!(f, "; {determined})")
                } else {
                    write!(f, " ; {determined})")
                }
            }
            Formula::Indep { left, cond, right } => {
                f.write_str("indep(")?;
                write_list(f, left)?;
                f.write_str(" ; ")?;
                write_list(f, cond)?;
                if !cond.is_empty() {
                    f.write_str(" ")?;
                }
                f.write_str("; ")?;
                write_list(f, right)?;
                f.write_str(")")
            }
            Formula::GenAtom { atom, args }
                if (atom == "inc" || atom == "exc") && !args.is_empty() && args.len() % 2 == 0 =>
            {
                let (p, q) = args.split_at(args.len() / 2);
                write!(f, "{atom}(")?;
                write_list(f, p)?;
                f.write_str(" ; ")?;
                write_list(f, q)?;
                f.write_str(")")
            }
            Formula::GenAtom { atom, args } => {
                write!(f, "D[{atom}](")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}
