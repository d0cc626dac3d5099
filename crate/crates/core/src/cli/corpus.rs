//! Seeded random formulas and models for the property suites.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{var, Formula, VarId};
use crate::kripke::{model_to_json, KripkeModel, Team};

/// Which kind of atom a generated formula is built around.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    /// Literals only.
    None,
    Dep,
    Indep,
    Inc,
    Exc,
    Zero,
}

impl AtomKind {
    pub const ALL: [AtomKind; 6] = [
        AtomKind::None,
        AtomKind::Dep,
        AtomKind::Indep,
        AtomKind::Inc,
        AtomKind::Exc,
        AtomKind::Zero,
    ];

    /// The kinds that belong to modal independence logic proper.
    pub const MIL: [AtomKind; 3] = [AtomKind::None, AtomKind::Dep, AtomKind::Indep];
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AtomKind::None => "none",
            AtomKind::Dep => "dep",
            AtomKind::Indep => "indep",
            AtomKind::Inc => "inc",
            AtomKind::Exc => "exc",
            AtomKind::Zero => "zero",
        };
        f.write_str(s)
    }
}

pub fn default_vars() -> Vec<VarId> {
    ["p", "q", "r"].iter().map(|v| var(v)).collect()
}

fn pick(rng: &mut ChaCha8Rng, vars: &[VarId]) -> VarId {
    vars.choose(rng).expect("at least one variable").clone()
}

fn subset(rng: &mut ChaCha8Rng, vars: &[VarId], min: usize) -> Vec<VarId> {
    let len = rng.gen_range(min..=vars.len().min(min + 1));
    let mut out: Vec<VarId> = vars.choose_multiple(rng, len).cloned().collect();
    out.sort();
    out
}

pub fn random_literal(rng: &mut ChaCha8Rng, vars: &[VarId]) -> Formula {
    let v = pick(rng, vars);
    if rng.gen_bool(0.5) {
        Formula::Prop(v)
    } else {
        Formula::NegProp(v)
    }
}

pub fn random_atom(rng: &mut ChaCha8Rng, kind: AtomKind, vars: &[VarId]) -> Formula {
    match kind {
        AtomKind::None => random_literal(rng, vars),
        AtomKind::Dep => Formula::dep(subset(rng, vars, 0), pick(rng, vars)),
        AtomKind::Indep => Formula::indep(subset(rng, vars, 1), subset(rng, vars, 0), subset(rng, vars, 1)),
        AtomKind::Inc | AtomKind::Exc => {
            let width = if rng.gen_bool(0.75) { 1 } else { 2 };
            let mut args: Vec<VarId> = (0..width).map(|_| pick(rng, vars)).collect();
            args.extend((0..width).map(|_| pick(rng, vars)));
            Formula::gen_atom(&kind.to_string(), args)
        }
        AtomKind::Zero => Formula::gen_atom("zero", vec![pick(rng, vars)]),
    }
}

fn grow(rng: &mut ChaCha8Rng, depth: usize, size: usize, kind: AtomKind, vars: &[VarId]) -> Formula {
    if size == 0 {
        return if kind != AtomKind::None && rng.gen_bool(0.4) {
            random_atom(rng, kind, vars)
        } else {
            random_literal(rng, vars)
        };
    }
    let modal = depth > 0 && rng.gen_bool(0.45);
    if modal {
        let inner = grow(rng, depth - 1, size - 1, kind, vars);
        return if rng.gen_bool(0.5) {
            Formula::diamond(inner)
        } else {
            Formula::boxed(inner)
        };
    }
    let left = rng.gen_range(0..size);
    let l = grow(rng, depth, left, kind, vars);
    let r = grow(rng, depth, size - 1 - left, kind, vars);
    if rng.gen_bool(0.5) {
        Formula::and(l, r)
    } else {
        Formula::or(l, r)
    }
}

fn has_kind(f: &Formula, kind: AtomKind) -> bool {
    match (f, kind) {
        (_, AtomKind::None) => true,
        (Formula::Dep { .. }, AtomKind::Dep) | (Formula::Indep { .. }, AtomKind::Indep) => true,
        (Formula::GenAtom { atom, .. }, k) if *atom == k.to_string() => true,
        _ => f.children().into_iter().any(|g| has_kind(g, kind)),
    }
}

/// A formula of modal depth exactly `depth` with at least one atom of
/// `kind` (none for [`AtomKind::None`]).
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, kind: AtomKind, vars: &[VarId]) -> Formula {
    let size = rng.gen_range(depth..=depth + 4);
    let mut f = grow(rng, depth, size, kind, vars);
    if !has_kind(&f, kind) {
        let a = random_atom(rng, kind, vars);
        f = if rng.gen_bool(0.5) {
            Formula::and(f, a)
        } else {
            Formula::or(a, f)
        };
    }
    while f.modal_depth() < depth {
        f = if rng.gen_bool(0.5) {
            Formula::diamond(f)
        } else {
            Formula::boxed(f)
        };
    }
    f
}

/// A model with `1..=max_worlds` worlds over `vars` and a random team.
pub fn random_model(rng: &mut ChaCha8Rng, max_worlds: usize, vars: &[VarId]) -> (KripkeModel, Team) {
    let n = rng.gen_range(1..=max_worlds);
    let labels = (0..n)
        .map(|_| vars.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect())
        .collect();
    let density = rng.gen_range(0.2..0.7);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    let m = KripkeModel::new(labels, edges).expect("edges are in range");
    let mask = rng.gen_range(0..1u64 << n);
    let t = m.full_team().select(mask);
    (m, t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusFormula {
    pub kind: AtomKind,
    pub depth: usize,
    pub formula: Formula,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub formulas: Vec<CorpusFormula>,
    pub models: Vec<(KripkeModel, Team)>,
}

pub const MAX_CORPUS_DEPTH: usize = 2;

/// `size` formulas cycling through depths `0..=2` and every atom kind, and
/// `size` models of at most 4 worlds over `p, q, r`.
pub fn gen_corpus(seed: u64, size: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = default_vars();
    let strata = MAX_CORPUS_DEPTH + 1;
    let formulas = (0..size)
        .map(|j| {
            let depth = j % strata;
            let kind = AtomKind::ALL[(j / strata) % AtomKind::ALL.len()];
            let nvars = rng.gen_range(1..=vars.len());
            CorpusFormula {
                kind,
                depth,
                formula: random_formula(&mut rng, depth, kind, &vars[..nvars]),
            }
        })
        .collect();
    let models = (0..size).map(|_| random_model(&mut rng, 4, &vars)).collect();
    Corpus { formulas, models }
}

impl Corpus {
    /// Tab-separated formula lines, then one compact JSON model per line.
    pub fn render(&self) -> String {
        let mut out = String::from("# formulas: kind, depth, formula\n");
        for f in &self.formulas {
            out.push_str(&format!("{}\t{}\t{}\n", f.kind, f.depth, f.formula));
        }
        out.push_str("# models\n");
        for (m, t) in &self.models {
            out.push_str(&compact_model(m, t));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn compact_model(m: &KripkeModel, t: &Team) -> String {
    let v: serde_json::Value = serde_json::from_str(&model_to_json(m, t)).expect("model json is valid");
    v.to_string()
}
