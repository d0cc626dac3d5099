//! Translation of team satisfaction into existential second-order logic.
//!
//! For a formula `φ` the sentence `φ*` has the shape
//! `∃Y_0…Y_m ∀x∀y∃z_1…z_k θ` and holds in the structure `(W, {A_p}, E, T)`
//! encoding a model and a team exactly when the team satisfies `φ`. Every
//! subformula gets a unary predicate standing for the team it is evaluated
//! on; each clause below is a closed `∀x∀y∃z̄ θ_j` sentence and the clauses
//! are conjoined and prenexed together:
//!
//! | subformula on `P` | clauses |
//! |---|---|
//! | `p` | `P(x) → A_p(x)` |
//! | `~p` | `P(x) → ¬A_p(x)` |
//! | `ψ ∨ χ` | `P(x) ↔ (Y1(x) ∨ Y2(x))`, then `ψ` on `Y1`, `χ` on `Y2` |
//! | `[]ψ` | `(P(x) ∧ E(x,y)) → Y(y)`, `Y(y) → (P(z) ∧ E(z,y))`, then `ψ` on `Y` |
//! | `<>ψ` | `P(x) → (Y(z) ∧ E(x,z))`, `Y(x) → (P(z') ∧ E(z',x))`, then `ψ` on `Y` |
//! | `indep(l ; c ; r)` | `(P(x) ∧ P(y) ∧ EQ_c(x,y)) → (P(z) ∧ EQ_c(x,z) ∧ EQ_l(x,z) ∧ EQ_r(y,z))` |
//!
//! The `∨` and `[]` clauses pin the new predicates inside `P` and inside
//! `R[P]` from both sides; a one-sided version admits predicates that are
//! not legal splits or successor teams. `dep` is rewritten to `indep` first
//! and generalized atoms are translated through their definitions.

pub mod eval;
mod export;
pub mod syntax;

use thiserror::Error;

pub use eval::{encode_structure, eval_eso, EsoError, FoStructure};
pub use export::{export, ExportFormat, UnsupportedFormat};
use syntax::{EsoSentence, FoFormula, FoSentence, FoVar, Pred, Quant, X, Y};

use crate::atoms::{builtin_registry, AtomRegistry, GeneralizedAtom};
use crate::formula::{Formula, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("unknown atom {0}")]
    UnknownAtom(String),
    #[error("atom {atom} has no first-order definition at width {width}")]
    NoDefinition { atom: String, width: usize },
    #[error("definition of atom {atom} at width {width} is outside ∀≤2∃* without equality: {reason}")]
    InadmissibleDefinition {
        atom: String,
        width: usize,
        reason: String,
    },
}

/// Fresh-name supply shared by a whole translation run.
#[derive(Default)]
struct Fresh {
    aux: usize,
    z: usize,
}

impl Fresh {
    fn aux(&mut self) -> Pred {
        let p = Pred::Aux(self.aux);
        self.aux += 1;
        p
    }

    fn z(&mut self) -> FoVar {
        self.z += 1;
        FoVar::z(self.z)
    }
}

struct Translator<'a> {
    registry: &'a AtomRegistry,
    fresh: Fresh,
    clauses: Vec<FoFormula>,
}

fn holds(p: &Pred, v: FoVar) -> FoFormula {
    FoFormula::atom(p.clone(), v)
}

fn prop(p: &VarId, v: FoVar) -> FoFormula {
    FoFormula::atom(Pred::Prop(p.clone()), v)
}

/// `EQ_vars(a, b)`: `a` and `b` agree on every listed proposition.
fn eq_props(vars: &[VarId], a: FoVar, b: FoVar) -> FoFormula {
    FoFormula::and(vars.iter().map(|p| FoFormula::iff(prop(p, a), prop(p, b))).collect())
}

impl Translator<'_> {
    fn go(&mut self, f: &Formula, team: &Pred) -> Result<(), TranslateError> {
        match f {
            Formula::Prop(p) => self
                .clauses
                .push(FoFormula::implies(holds(team, X), prop(p, X))),
            Formula::NegProp(p) => self.clauses.push(FoFormula::implies(
                holds(team, X),
                FoFormula::not(prop(p, X)),
            )),
            Formula::And(l, r) => {
                self.go(l, team)?;
                self.go(r, team)?;
            }
            Formula::Or(l, r) => {
                let (y1, y2) = (self.fresh.aux(), self.fresh.aux());
                self.clauses.push(FoFormula::iff(
                    holds(team, X),
                    FoFormula::or(vec![holds(&y1, X), holds(&y2, X)]),
                ));
                self.go(l, &y1)?;
                self.go(r, &y2)?;
            }
            Formula::Box(g) => {
                let y = self.fresh.aux();
                let z = self.fresh.z();
                self.clauses.push(FoFormula::implies(
                    FoFormula::and(vec![holds(team, X), FoFormula::edge(X, Y)]),
                    holds(&y, Y),
                ));
                self.clauses.push(FoFormula::implies(
                    holds(&y, Y),
                    FoFormula::and(vec![holds(team, z), FoFormula::edge(z, Y)]),
                ));
                self.go(g, &y)?;
            }
            Formula::Diamond(g) => {
                let y = self.fresh.aux();
                let (z1, z2) = (self.fresh.z(), self.fresh.z());
                self.clauses.push(FoFormula::implies(
                    holds(team, X),
                    FoFormula::and(vec![holds(&y, z1), FoFormula::edge(X, z1)]),
                ));
                self.clauses.push(FoFormula::implies(
                    holds(&y, X),
                    FoFormula::and(vec![holds(team, z2), FoFormula::edge(z2, X)]),
                ));
                self.go(g, &y)?;
            }
            Formula::Dep { .. } => self.go(&f.rewrite_dep_to_indep(), team)?,
            Formula::Indep { left, cond, right } => {
                let z = self.fresh.z();
                self.clauses.push(FoFormula::implies(
                    FoFormula::and(vec![holds(team, X), holds(team, Y), eq_props(cond, X, Y)]),
                    FoFormula::and(vec![
                        holds(team, z),
                        eq_props(cond, X, z),
                        eq_props(left, X, z),
                        eq_props(right, Y, z),
                    ]),
                ));
            }
            Formula::GenAtom { atom, args } => {
                let a = self
                    .registry
                    .get(atom)
                    .ok_or_else(|| TranslateError::UnknownAtom(atom.clone()))?
                    .clone();
                let clause = translate_with(&a, args, team, &mut self.fresh)?;
                self.clauses.push(clause);
            }
        }
        Ok(())
    }
}

/// Translates with the built-in atoms.
pub fn translate(f: &Formula) -> Result<EsoSentence, TranslateError> {
    translate_with_registry(f, builtin_registry())
}

pub fn translate_with_registry(f: &Formula, registry: &AtomRegistry) -> Result<EsoSentence, TranslateError> {
    let mut tr = Translator {
        registry,
        fresh: Fresh::default(),
        clauses: Vec::new(),
    };
    tr.go(f, &Pred::Team)?;
    if tr.fresh.z == 0 {
        // dummy so the prefix is always ∀x∀y∃z̄ with z̄ nonempty
        tr.fresh.z();
    }
    let mut prefix = vec![(Quant::Forall, X), (Quant::Forall, Y)];
    prefix.extend((1..=tr.fresh.z).map(|i| (Quant::Exists, FoVar::z(i))));
    Ok(EsoSentence {
        aux: (0..tr.fresh.aux).collect(),
        body: FoSentence {
            prefix,
            matrix: FoFormula::and(tr.clauses),
        },
    })
}

/// The definition of `a` at width `args.len()`, relativized to `team` and
/// with column `i` read as proposition `args[i]`, as a quantifier-free clause
/// over `x`, `y` and fresh `z`s (implicitly `∀x∀y∃z̄`).
///
/// Fresh `z` names come from a private counter starting at 1; use
/// [`translate`] for whole formulas.
pub fn translate_atom_definition(a: &GeneralizedAtom, args: &[VarId], team: &Pred) -> Result<FoFormula, TranslateError> {
    translate_with(a, args, team, &mut Fresh::default())
}

fn translate_with(a: &GeneralizedAtom, args: &[VarId], team: &Pred, fresh: &mut Fresh) -> Result<FoFormula, TranslateError> {
    let width = args.len();
    let inadmissible = |reason: &str| TranslateError::InadmissibleDefinition {
        atom: a.name().to_string(),
        width,
        reason: reason.to_string(),
    };
    let def = a.fo_definition(width).ok_or_else(|| TranslateError::NoDefinition {
        atom: a.name().to_string(),
        width,
    })?;
    if !def.matrix.is_quantifier_free() {
        return Err(inadmissible("matrix is not quantifier-free"));
    }
    if def.matrix.contains_equality() {
        return Err(inadmissible("uses equality"));
    }
    let universals = def
        .prefix
        .iter()
        .take_while(|(q, _)| *q == Quant::Forall)
        .count();
    if def.prefix[universals..].iter().any(|(q, _)| *q == Quant::Forall) {
        return Err(inadmissible("a universal quantifier follows an existential one"));
    }
    if universals > 2 {
        return Err(inadmissible("more than two universal quantifiers"));
    }
    let bound: Vec<FoVar> = def.prefix.iter().map(|(_, v)| *v).collect();
    if def.matrix.free_vars().iter().any(|v| !bound.contains(v)) {
        return Err(inadmissible("free variable in matrix"));
    }
    for p in def.matrix.predicates() {
        match p {
            Pred::Column(i) if i < width => {}
            Pred::Column(_) => return Err(inadmissible("column index beyond the width")),
            _ => return Err(inadmissible("predicate other than a column")),
        }
    }
    let mut rename: Vec<(FoVar, FoVar)> = Vec::new();
    for (i, (_, v)) in def.prefix.iter().enumerate() {
        let target = match i {
            0 if universals > 0 => X,
            1 if universals > 1 => Y,
            _ => fresh.z(),
        };
        rename.push((*v, target));
    }
    let lookup = |v: FoVar| {
        rename
            .iter()
            .find(|(from, _)| *from == v)
            .map(|(_, to)| *to)
            .expect("matrix variables are bound")
    };
    let body = def.matrix.map_atoms(
        &|p| match p {
            Pred::Column(i) => Pred::Prop(args[*i].clone()),
            other => other.clone(),
        },
        &lookup,
    );
    let guard_all: Vec<FoFormula> = rename[..universals].iter().map(|(_, v)| holds(team, *v)).collect();
    let mut conclusion: Vec<FoFormula> = rename[universals..].iter().map(|(_, v)| holds(team, *v)).collect();
    conclusion.push(body);
    let conclusion = FoFormula::and(conclusion);
    Ok(if guard_all.is_empty() {
        conclusion
    } else {
        FoFormula::implies(FoFormula::and(guard_all), conclusion)
    })
}

/// Shape check for the decidable prefix class: body prenex `∀x∀y∃z̄` with
/// distinct variables, quantifier-free relational matrix, no equality,
/// predicates used at their arity and no free first-order variable.
pub fn verify_prefix(s: &EsoSentence) -> bool {
    let prefix = &s.body.prefix;
    if prefix.len() < 2 || prefix[0].0 != Quant::Forall || prefix[1].0 != Quant::Forall {
        return false;
    }
    if prefix[2..].iter().any(|(q, _)| *q != Quant::Exists) {
        return false;
    }
    let bound: Vec<FoVar> = prefix.iter().map(|(_, v)| *v).collect();
    for (i, v) in bound.iter().enumerate() {
        if bound[..i].contains(v) {
            return false;
        }
    }
    let m = &s.body.matrix;
    if !m.is_quantifier_free() || m.contains_equality() {
        return false;
    }
    if m.free_vars().iter().any(|v| !bound.contains(v)) {
        return false;
    }
    let mut ok = true;
    m.for_each_atomic(&mut |a| {
        if let FoFormula::Atom(p, args) = a {
            ok &= !matches!(p, Pred::Column(_)) && p.arity() == args.len();
        }
    });
    ok
}

/// The first-order part: the `∃Y` block is dropped and the `Y`s become
/// uninterpreted predicates.
pub fn fo_part(s: &EsoSentence) -> FoSentence {
    s.body.clone()
}
