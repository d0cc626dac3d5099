//! First-order and existential second-order sentences over a relational
//! vocabulary: unary `T`, `A_p`, `Y_i`, column predicates `A_i` in atom
//! definitions, and the binary edge relation `E`.

use std::fmt;

use crate::formula::VarId;

/// First-order variable. In translated sentences `0` is `x`, `1` is `y` and
/// `k ≥ 2` is `z_{k-1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FoVar(pub usize);

pub const X: FoVar = FoVar(0);
pub const Y: FoVar = FoVar(1);

impl FoVar {
    pub fn z(i: usize) -> FoVar {
        FoVar(i + 1)
    }
}

impl fmt::Display for FoVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("x"),
            1 => f.write_str("y"),
            k => write!(f, "z{}", k - 1),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Pred {
    /// The team.
    Team,
    /// The accessibility relation (binary).
    Edge,
    /// `A_p`: worlds where proposition `p` holds.
    Prop(VarId),
    /// `A_i`: the i-th column of a truth matrix (0-based). Only meaningful in
    /// generalized-atom definitions.
    Column(usize),
    /// `Y_i`: an existentially quantified unary predicate.
    Aux(usize),
}

impl Pred {
    pub fn arity(&self) -> usize {
        match self {
            Pred::Edge => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Team => f.write_str("T"),
            Pred::Edge => f.write_str("E"),
            Pred::Prop(p) => write!(f, "A_{p}"),
            Pred::Column(i) => write!(f, "A{}", i + 1),
            Pred::Aux(i) => write!(f, "Y{i}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FoFormula {
    True,
    False,
    Atom(Pred, Vec<FoVar>),
    Eq(FoVar, FoVar),
    Not(Box<FoFormula>),
    And(Vec<FoFormula>),
    Or(Vec<FoFormula>),
    Implies(Box<FoFormula>, Box<FoFormula>),
    Iff(Box<FoFormula>, Box<FoFormula>),
    Forall(FoVar, Box<FoFormula>),
    Exists(FoVar, Box<FoFormula>),
}

impl FoFormula {
    pub fn atom(p: Pred, v: FoVar) -> FoFormula {
        FoFormula::Atom(p, vec![v])
    }

    pub fn edge(a: FoVar, b: FoVar) -> FoFormula {
        FoFormula::Atom(Pred::Edge, vec![a, b])
    }

    pub fn not(f: FoFormula) -> FoFormula {
        FoFormula::Not(Box::new(f))
    }

    pub fn implies(a: FoFormula, b: FoFormula) -> FoFormula {
        FoFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: FoFormula, b: FoFormula) -> FoFormula {
        FoFormula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction, flattening nested conjunctions; the empty conjunction is `True`.
    pub fn and(parts: Vec<FoFormula>) -> FoFormula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                FoFormula::And(inner) => flat.extend(inner),
                FoFormula::True => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => FoFormula::True,
            1 => flat.pop().unwrap(),
            _ => FoFormula::And(flat),
        }
    }

    pub fn or(parts: Vec<FoFormula>) -> FoFormula {
        match parts.len() {
            0 => FoFormula::False,
            1 => parts.into_iter().next().unwrap(),
            _ => FoFormula::Or(parts),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            FoFormula::Forall(..) | FoFormula::Exists(..) => false,
            FoFormula::Not(f) => f.is_quantifier_free(),
            FoFormula::And(fs) | FoFormula::Or(fs) => fs.iter().all(Self::is_quantifier_free),
            FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            _ => true,
        }
    }

    /// Calls `visit` on every atomic subformula, equalities included.
    pub fn for_each_atomic<'a>(&'a self, visit: &mut impl FnMut(&'a FoFormula)) {
        match self {
            FoFormula::True | FoFormula::False => {}
            FoFormula::Atom(..) | FoFormula::Eq(..) => visit(self),
            FoFormula::Not(f) | FoFormula::Forall(_, f) | FoFormula::Exists(_, f) => {
                f.for_each_atomic(visit)
            }
            FoFormula::And(fs) | FoFormula::Or(fs) => {
                fs.iter().for_each(|f| f.for_each_atomic(visit))
            }
            FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                a.for_each_atomic(visit);
                b.for_each_atomic(visit);
            }
        }
    }

    pub fn contains_equality(&self) -> bool {
        let mut found = false;
        self.for_each_atomic(&mut |a| found |= matches!(a, FoFormula::Eq(..)));
        found
    }

    /// Rewrites every atomic predicate symbol and variable.
    pub fn map_atoms(&self, pred: &impl Fn(&Pred) -> Pred, var: &impl Fn(FoVar) -> FoVar) -> FoFormula {
        match self {
            FoFormula::True => FoFormula::True,
            FoFormula::False => FoFormula::False,
            FoFormula::Atom(p, args) => {
                FoFormula::Atom(pred(p), args.iter().map(|v| var(*v)).collect())
            }
            FoFormula::Eq(a, b) => FoFormula::Eq(var(*a), var(*b)),
            FoFormula::Not(f) => FoFormula::not(f.map_atoms(pred, var)),
            FoFormula::And(fs) => FoFormula::And(fs.iter().map(|f| f.map_atoms(pred, var)).collect()),
            FoFormula::Or(fs) => FoFormula::Or(fs.iter().map(|f| f.map_atoms(pred, var)).collect()),
            FoFormula::Implies(a, b) => {
                FoFormula::implies(a.map_atoms(pred, var), b.map_atoms(pred, var))
            }
            FoFormula::Iff(a, b) => FoFormula::iff(a.map_atoms(pred, var), b.map_atoms(pred, var)),
            FoFormula::Forall(v, f) => FoFormula::Forall(var(*v), Box::new(f.map_atoms(pred, var))),
            FoFormula::Exists(v, f) => FoFormula::Exists(var(*v), Box::new(f.map_atoms(pred, var))),
        }
    }

    /// Number of connectives, quantifiers and atoms.
    pub fn size(&self) -> usize {
        match self {
            FoFormula::True | FoFormula::False | FoFormula::Atom(..) | FoFormula::Eq(..) => 1,
            FoFormula::Not(f) | FoFormula::Forall(_, f) | FoFormula::Exists(_, f) => 1 + f.size(),
            FoFormula::And(fs) | FoFormula::Or(fs) => 1 + fs.iter().map(Self::size).sum::<usize>(),
            FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<FoVar> {
        fn go(f: &FoFormula, bound: &mut Vec<FoVar>, out: &mut Vec<FoVar>) {
            let note = |v: FoVar, bound: &Vec<FoVar>, out: &mut Vec<FoVar>| {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            };
            match f {
                FoFormula::True | FoFormula::False => {}
                FoFormula::Atom(_, args) => args.iter().for_each(|v| note(*v, bound, out)),
                FoFormula::Eq(a, b) => {
                    note(*a, bound, out);
                    note(*b, bound, out);
                }
                FoFormula::Not(g) => go(g, bound, out),
                FoFormula::And(gs) | FoFormula::Or(gs) => gs.iter().for_each(|g| go(g, bound, out)),
                FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                FoFormula::Forall(v, g) | FoFormula::Exists(v, g) => {
                    bound.push(*v);
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every predicate symbol used, in first-occurrence order.
    pub fn predicates(&self) -> Vec<Pred> {
        let mut out: Vec<Pred> = Vec::new();
        self.for_each_atomic(&mut |a| {
            if let FoFormula::Atom(p, _) = a {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        });
        out
    }
}

impl fmt::Display for FoFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[FoFormula], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")
        };
        match self {
            FoFormula::True => f.write_str("⊤"),
            FoFormula::False => f.write_str("⊥"),
            FoFormula::Atom(p, args) => {
                write!(f, "{p}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            FoFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            FoFormula::Not(g) => write!(f, "¬{g}"),
            FoFormula::And(fs) => join(f, fs, "∧"),
            FoFormula::Or(fs) => join(f, fs, "∨"),
            FoFormula::Implies(a, b) => write!(f, "({a} → {b})"),
            FoFormula::Iff(a, b) => write!(f, "({a} ↔ {b})"),
            FoFormula::Forall(v, g) => write!(f, "∀{v} {g}"),
            FoFormula::Exists(v, g) => write!(f, "∃{v} {g}"),
        }
    }
}

/// A first-order sentence in prenex form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FoSentence {
    pub prefix: Vec<(Quant, FoVar)>,
    pub matrix: FoFormula,
}

impl FoSentence {
    /// The equivalent non-prenex formula, for evaluation.
    pub fn to_formula(&self) -> FoFormula {
        self.prefix
            .iter()
            .rev()
            .fold(self.matrix.clone(), |acc, (q, v)| match q {
                Quant::Forall => FoFormula::Forall(*v, Box::new(acc)),
                Quant::Exists => FoFormula::Exists(*v, Box::new(acc)),
            })
    }

    pub fn size(&self) -> usize {
        self.prefix.len() + self.matrix.size()
    }
}

impl fmt::Display for FoSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            match q {
                Quant::Forall => write!(f, "∀{v}")?,
                Quant::Exists => write!(f, "∃{v}")?,
            }
        }
        if !self.prefix.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "{}", self.matrix)
    }
}

/// `∃Y_1…Y_m` followed by a first-order body of shape `∀x∀y∃z̄ θ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EsoSentence {
    /// Indices of the quantified unary predicates, in quantification order.
    pub aux: Vec<usize>,
    pub body: FoSentence,
}

impl EsoSentence {
    pub fn size(&self) -> usize {
        self.aux.len() + self.body.size()
    }
}

impl fmt::Display for EsoSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.aux {
            write!(f, "∃Y{i}")?;
        }
        if !self.aux.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "{}", self.body)
    }
}
