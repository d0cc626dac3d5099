//! Generalized dependence atoms: team predicates given by a set of Boolean
//! matrices closed under row permutation.
//!
//! A team is handed to an atom as the matrix with one row per team world and
//! one column per argument variable. Built-ins are `dep`, `indep`, `inc`,
//! `exc` and `zero` (the relation `{(0)}`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fo_translate::eval::{eval_sentence, Interpretation};
use crate::fo_translate::syntax::{FoFormula, FoSentence, FoVar, Pred, Quant, X, Y};
use crate::formula::{is_identifier, VarId};
use crate::kripke::{KripkeModel, Team};

/// Row-major Boolean matrix; rows follow the canonical (ascending) team order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl TruthMatrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> TruthMatrix {
        assert_eq!(cells.len(), rows * cols, "matrix is not rectangular");
        TruthMatrix { rows, cols, cells }
    }

    /// Builds from explicit rows; `cols` is needed for the 0-row case.
    pub fn from_rows(cols: usize, rows: &[Vec<bool>]) -> TruthMatrix {
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "matrix is not rectangular");
            cells.extend(r);
        }
        TruthMatrix::new(rows.len(), cols, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[bool]> {
        (0..self.rows).map(|r| self.row(r))
    }

    /// Values of row `row` at the given columns.
    pub fn project(&self, row: usize, cols: &[usize]) -> Vec<bool> {
        cols.iter().map(|&c| self.get(row, c)).collect()
    }

    /// Rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> TruthMatrix {
        assert_eq!(perm.len(), self.rows);
        let mut cells = Vec::with_capacity(self.cells.len());
        for &r in perm {
            cells.extend_from_slice(self.row(r));
        }
        TruthMatrix::new(self.rows, self.cols, cells)
    }
}

impl fmt::Debug for TruthMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, r) in self.iter_rows().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for b in r {
                f.write_str(if *b { "1" } else { "0" })?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// The matrix `⟨T(p1), …, T(pn)⟩` of a team: one row per world.
pub fn team_matrix(m: &KripkeModel, t: &Team, vars: &[VarId]) -> TruthMatrix {
    let idx: Vec<Option<usize>> = vars.iter().map(|v| m.var_index(v)).collect();
    let mut cells = Vec::with_capacity(t.len() * vars.len());
    for w in t.iter() {
        cells.extend(idx.iter().map(|i| i.is_some_and(|i| m.holds_index(w, i))));
    }
    TruthMatrix::new(t.len(), vars.len(), cells)
}

/// The rows of a matrix as a structure over column predicates `A_i`.
impl Interpretation for TruthMatrix {
    fn universe(&self) -> usize {
        self.rows
    }

    fn holds(&self, pred: &Pred, args: &[usize]) -> bool {
        match pred {
            Pred::Column(i) => *i < self.cols && self.get(args[0], *i),
            _ => false,
        }
    }
}

/// The widths at which an atom may be applied.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Arity {
    Fixed(usize),
    AtLeast(usize),
    /// Positive multiples of `of` that are at least `min`.
    Multiple { of: usize, min: usize },
}

impl Arity {
    pub fn admits(self, width: usize) -> bool {
        match self {
            Arity::Fixed(n) => width == n,
            Arity::AtLeast(n) => width >= n,
            Arity::Multiple { of, min } => width >= min && width > 0 && width.is_multiple_of(of),
        }
    }

    /// Admissible widths up to `max`, ascending.
    pub fn widths_up_to(self, max: usize) -> Vec<usize> {
        (0..=max).filter(|w| self.admits(*w)).collect()
    }
}

type Evaluator = dyn Fn(&TruthMatrix) -> bool + Send + Sync;
type Definition = dyn Fn(usize) -> Option<FoSentence> + Send + Sync;

/// A named family of team predicates, one per admissible width, with an
/// optional first-order definition over the columns `A_1 … A_n`.
#[derive(Clone)]
pub struct GeneralizedAtom {
    name: String,
    arity: Arity,
    evaluate: Arc<Evaluator>,
    definition: Option<Arc<Definition>>,
}

impl GeneralizedAtom {
    pub fn new(
        name: &str,
        arity: Arity,
        evaluate: impl Fn(&TruthMatrix) -> bool + Send + Sync + 'static,
    ) -> GeneralizedAtom {
        GeneralizedAtom {
            name: name.to_string(),
            arity,
            evaluate: Arc::new(evaluate),
            definition: None,
        }
    }

    /// Attaches a generator from width to defining sentence. Variables of the
    /// sentence range over team worlds; `Pred::Column(i)` is the i-th argument.
    pub fn with_definition(
        mut self,
        def: impl Fn(usize) -> Option<FoSentence> + Send + Sync + 'static,
    ) -> GeneralizedAtom {
        self.definition = Some(Arc::new(def));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn has_definition(&self) -> bool {
        self.definition.is_some()
    }

    pub fn fo_definition(&self, width: usize) -> Option<FoSentence> {
        if !self.arity.admits(width) {
            return None;
        }
        self.definition.as_ref().and_then(|d| d(width))
    }

    /// Raw evaluator call; no width check.
    pub fn evaluate(&self, mat: &TruthMatrix) -> bool {
        (self.evaluate)(mat)
    }
}

impl fmt::Debug for GeneralizedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedAtom")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("definition", &self.definition.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("atom {atom} does not accept width {width}")]
    WidthMismatch { atom: String, width: usize },
    #[error("atom name {0:?} is already registered")]
    DuplicateName(String),
    #[error("invalid atom name {0:?}")]
    InvalidName(String),
    #[error("atom {atom} depends on row order: {matrix} and a row permutation disagree")]
    NotPermutationInvariant { atom: String, matrix: String },
    #[error("atom {atom} disagrees with its first-order definition on {matrix}")]
    DefinitionMismatch { atom: String, matrix: String },
}

pub fn eval_atom(a: &GeneralizedAtom, mat: &TruthMatrix) -> Result<bool, AtomError> {
    if !a.arity.admits(mat.cols) {
        return Err(AtomError::WidthMismatch {
            atom: a.name.clone(),
            width: mat.cols,
        });
    }
    Ok(a.evaluate(mat))
}

/// Named atoms available to the parser and checker.
#[derive(Clone, Debug, Default)]
pub struct AtomRegistry {
    atoms: BTreeMap<String, Arc<GeneralizedAtom>>,
}

/// Seed for the registration-time sampling; fixed so registration is
/// reproducible.
const VALIDATION_SEED: u64 = 0x5eed_a70b;
const VALIDATION_MAX_ROWS: usize = 6;
const VALIDATION_SAMPLES: usize = 40;

impl AtomRegistry {
    pub fn new() -> AtomRegistry {
        AtomRegistry::default()
    }

    /// A fresh registry holding the built-in atoms.
    pub fn with_builtins() -> AtomRegistry {
        builtin_registry().clone()
    }

    pub fn get(&self, name: &str) -> Option<&Arc<GeneralizedAtom>> {
        self.atoms.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.atoms.keys().map(String::as_str)
    }

    /// Adds an atom after sampling matrices of up to six rows for
    /// row-permutation invariance and, where a definition is attached,
    /// agreement with it.
    pub fn register(&mut self, atom: GeneralizedAtom) -> Result<(), AtomError> {
        if !is_identifier(&atom.name) {
            return Err(AtomError::InvalidName(atom.name));
        }
        if self.atoms.contains_key(&atom.name) {
            return Err(AtomError::DuplicateName(atom.name));
        }
        validate(&atom)?;
        self.atoms.insert(atom.name.clone(), Arc::new(atom));
        Ok(())
    }

    fn insert_trusted(&mut self, atom: GeneralizedAtom) {
        self.atoms.insert(atom.name.clone(), Arc::new(atom));
    }
}

fn validate(atom: &GeneralizedAtom) -> Result<(), AtomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let widths: Vec<usize> = atom.arity.widths_up_to(6).into_iter().take(3).collect();
    for &width in &widths {
        let def = atom.fo_definition(width);
        for rows in 0..=VALIDATION_MAX_ROWS {
            for _ in 0..VALIDATION_SAMPLES {
                let cells = (0..rows * width).map(|_| rng.gen_bool(0.5)).collect();
                let mat = TruthMatrix::new(rows, width, cells);
                let verdict = atom.evaluate(&mat);
                let mut perm: Vec<usize> = (0..rows).collect();
                perm.shuffle(&mut rng);
                if atom.evaluate(&mat.permute_rows(&perm)) != verdict {
                    return Err(AtomError::NotPermutationInvariant {
                        atom: atom.name.clone(),
                        matrix: format!("{mat:?}"),
                    });
                }
                if let Some(def) = &def {
                    if eval_sentence(def, &mat) != verdict {
                        return Err(AtomError::DefinitionMismatch {
                            atom: atom.name.clone(),
                            matrix: format!("{mat:?}"),
                        });
                    }
                }
                if rows == 0 {
                    break;
                }
            }
        }
    }
    Ok(())
}

/// `left ⊥_cond right` on a matrix: for all rows `a`, `b` agreeing on `cond`
/// some row agrees with `a` on `cond` and `left` and with `b` on `right`.
pub fn independence_holds(mat: &TruthMatrix, left: &[usize], cond: &[usize], right: &[usize]) -> bool {
    let mut present: HashSet<(Vec<bool>, Vec<bool>, Vec<bool>)> = HashSet::new();
    let mut by_cond: HashMap<Vec<bool>, (HashSet<Vec<bool>>, HashSet<Vec<bool>>)> = HashMap::new();
    for r in 0..mat.rows {
        let c = mat.project(r, cond);
        let l = mat.project(r, left);
        let rt = mat.project(r, right);
        let entry = by_cond.entry(c.clone()).or_default();
        entry.0.insert(l.clone());
        entry.1.insert(rt.clone());
        present.insert((c, l, rt));
    }
    by_cond.into_iter().all(|(c, (ls, rs))| {
        ls.iter()
            .all(|l| rs.iter().all(|r| present.contains(&(c.clone(), l.clone(), r.clone()))))
    })
}

/// `cols[..n-1]` functionally determine `cols[n-1]`.
fn dependence_holds(mat: &TruthMatrix) -> bool {
    let n = mat.cols;
    let det: Vec<usize> = (0..n - 1).collect();
    let mut seen: HashMap<Vec<bool>, bool> = HashMap::new();
    (0..mat.rows).all(|r| {
        let v = mat.get(r, n - 1);
        *seen.entry(mat.project(r, &det)).or_insert(v) == v
    })
}

fn halves(mat: &TruthMatrix) -> (Vec<usize>, Vec<usize>) {
    let k = mat.cols / 2;
    ((0..k).collect(), (k..2 * k).collect())
}

fn col(i: usize, v: FoVar) -> FoFormula {
    FoFormula::atom(Pred::Column(i), v)
}

/// `⋀_{i ∈ cols} (A_i(a) ↔ A_i(b))`.
fn eq_on(cols: impl IntoIterator<Item = usize>, a: FoVar, b: FoVar) -> FoFormula {
    FoFormula::and(
        cols.into_iter()
            .map(|i| FoFormula::iff(col(i, a), col(i, b)))
            .collect(),
    )
}

fn dep_definition(n: usize) -> FoSentence {
    FoSentence {
        prefix: vec![(Quant::Forall, X), (Quant::Forall, Y)],
        matrix: FoFormula::implies(eq_on(0..n - 1, X, Y), eq_on([n - 1], X, Y)),
    }
}

fn indep_definition(n: usize) -> FoSentence {
    let k = n / 3;
    let z = FoVar::z(1);
    FoSentence {
        prefix: vec![(Quant::Forall, X), (Quant::Forall, Y), (Quant::Exists, z)],
        matrix: FoFormula::implies(
            eq_on(k..2 * k, X, Y),
            FoFormula::and(vec![
                eq_on(k..2 * k, X, z),
                eq_on(0..k, X, z),
                eq_on(2 * k..3 * k, Y, z),
            ]),
        ),
    }
}

fn inc_definition(n: usize) -> FoSentence {
    let k = n / 2;
    let z = FoVar::z(1);
    FoSentence {
        prefix: vec![(Quant::Forall, X), (Quant::Exists, z)],
        matrix: FoFormula::and(
            (0..k)
                .map(|i| FoFormula::iff(col(i, X), col(k + i, z)))
                .collect(),
        ),
    }
}

fn exc_definition(n: usize) -> FoSentence {
    let k = n / 2;
    FoSentence {
        prefix: vec![(Quant::Forall, X), (Quant::Forall, Y)],
        matrix: FoFormula::or(
            (0..k)
                .map(|i| FoFormula::iff(col(i, X), FoFormula::not(col(k + i, Y))))
                .collect(),
        ),
    }
}

pub fn builtin_atoms() -> Vec<GeneralizedAtom> {
    vec![
        GeneralizedAtom::new("dep", Arity::AtLeast(1), dependence_holds)
            .with_definition(|n| Some(dep_definition(n))),
        GeneralizedAtom::new("indep", Arity::Multiple { of: 3, min: 3 }, |mat| {
            let k = mat.cols / 3;
            let idx: Vec<usize> = (0..mat.cols).collect();
            independence_holds(mat, &idx[..k], &idx[k..2 * k], &idx[2 * k..])
        })
        .with_definition(|n| Some(indep_definition(n))),
        GeneralizedAtom::new("inc", Arity::Multiple { of: 2, min: 2 }, |mat| {
            let (p, q) = halves(mat);
            let qs: HashSet<Vec<bool>> = (0..mat.rows).map(|r| mat.project(r, &q)).collect();
            (0..mat.rows).all(|r| qs.contains(&mat.project(r, &p)))
        })
        .with_definition(|n| Some(inc_definition(n))),
        GeneralizedAtom::new("exc", Arity::Multiple { of: 2, min: 2 }, |mat| {
            let (p, q) = halves(mat);
            let qs: HashSet<Vec<bool>> = (0..mat.rows).map(|r| mat.project(r, &q)).collect();
            (0..mat.rows).all(|r| !qs.contains(&mat.project(r, &p)))
        })
        .with_definition(|n| Some(exc_definition(n))),
        // D = {(0)}: exactly one world, where the argument is false.
        GeneralizedAtom::new("zero", Arity::Fixed(1), |mat| {
            mat.rows == 1 && !mat.get(0, 0)
        }),
    ]
}

pub fn builtin_registry() -> &'static AtomRegistry {
    static REGISTRY: OnceLock<AtomRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut r = AtomRegistry::new();
        for a in builtin_atoms() {
            r.insert_trusted(a);
        }
        r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::vars;

    fn mat(rows: &[&[u8]]) -> TruthMatrix {
        let cols = rows.first().map_or(1, |r| r.len());
        let rows: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|b| *b == 1).collect()).collect();
        TruthMatrix::from_rows(cols, &rows)
    }

    fn builtin(name: &str) -> Arc<GeneralizedAtom> {
        builtin_registry().get(name).unwrap().clone()
    }

    #[test]
    fn team_matrix_rows() {
        let m = KripkeModel::builder(3)
            .label(0, &["p"])
            .label(2, &["p"])
            .build()
            .unwrap();
        let t = team_matrix(&m, &Team::from_indices([0, 1]), &vars(&["p"]));
        assert_eq!(t, mat(&[&[1], &[0]]));
        let e = team_matrix(&m, &Team::empty(), &vars(&["p"]));
        assert_eq!((e.rows(), e.cols()), (0, 1));
        let d = team_matrix(&m, &Team::from_indices([0, 2]), &vars(&["p"]));
        assert_eq!(d, mat(&[&[1], &[1]]));
    }

    #[test]
    fn builtin_verdicts() {
        let dep = builtin("dep");
        assert!(!eval_atom(&dep, &mat(&[&[1, 1], &[1, 0]])).unwrap());
        assert!(eval_atom(&dep, &mat(&[&[1, 1], &[0, 0]])).unwrap());

        let indep = builtin("indep");
        assert!(!independence_holds(&mat(&[&[0, 0], &[1, 1]]), &[0], &[], &[1]));
        assert!(independence_holds(
            &mat(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]),
            &[0],
            &[],
            &[1]
        ));
        assert!(!eval_atom(&indep, &mat(&[&[0, 0, 0], &[1, 0, 1]])).unwrap());
        assert!(eval_atom(&indep, &mat(&[&[0, 0, 0], &[1, 1, 1]])).unwrap());

        let zero = builtin("zero");
        assert!(eval_atom(&zero, &mat(&[&[0]])).unwrap());
        assert!(!eval_atom(&zero, &mat(&[&[0], &[0]])).unwrap());
        assert!(!eval_atom(&zero, &mat(&[&[1]])).unwrap());
        assert!(matches!(
            eval_atom(&zero, &mat(&[&[0, 0]])),
            Err(AtomError::WidthMismatch { width: 2, .. })
        ));
    }

    #[test]
    fn empty_matrix() {
        for name in ["dep", "indep", "inc", "exc"] {
            let a = builtin(name);
            let w = a.arity().widths_up_to(6)[0];
            assert!(a.evaluate(&TruthMatrix::new(0, w, vec![])), "{name}");
        }
        assert!(!builtin("zero").evaluate(&TruthMatrix::new(0, 1, vec![])));
    }

    #[test]
    fn builtins_pass_validation() {
        for a in builtin_atoms() {
            validate(&a).unwrap();
        }
        assert!(builtin("zero").fo_definition(1).is_none());
        assert!(builtin("inc").fo_definition(3).is_none());
        let dep = builtin("dep").fo_definition(2).unwrap();
        assert_eq!(dep.to_string(), "∀x∀y ((A1(x) ↔ A1(y)) → (A2(x) ↔ A2(y)))");
        let inc = builtin("inc").fo_definition(2).unwrap();
        assert_eq!(inc.to_string(), "∀x∃z1 (A1(x) ↔ A2(z1))");
    }

    #[test]
    fn registration_errors() {
        let mut r = AtomRegistry::with_builtins();
        let dup = GeneralizedAtom::new("dep", Arity::Fixed(1), |_| true);
        assert_eq!(r.register(dup), Err(AtomError::DuplicateName("dep".into())));
        let row0 = GeneralizedAtom::new("first", Arity::Fixed(1), |m| m.rows() == 0 || m.get(0, 0));
        assert!(matches!(
            r.register(row0),
            Err(AtomError::NotPermutationInvariant { .. })
        ));
        let wrong = GeneralizedAtom::new("liar", Arity::Fixed(1), |_| true)
            .with_definition(|_| Some(dep_definition(1)));
        assert!(matches!(
            r.register(wrong),
            Err(AtomError::DefinitionMismatch { .. })
        ));
        let some = GeneralizedAtom::new("some", Arity::Fixed(1), |m| m.iter_rows().any(|r| r[0]));
        r.register(some).unwrap();
        assert!(r.get("some").is_some());
        assert!(builtin_registry().get("some").is_none());
    }
}
