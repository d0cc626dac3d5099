//! Direct evaluation of first-order formulas over finite structures and of
//! ESO sentences by search over the quantified predicates.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::syntax::{EsoSentence, FoFormula, FoSentence, FoVar, Pred, Quant};
use crate::formula::VarId;
use crate::kripke::{KripkeModel, Team};

/// A finite structure: universe `{0, …, n-1}` plus an interpretation of the
/// predicate symbols.
pub trait Interpretation {
    fn universe(&self) -> usize;
    fn holds(&self, pred: &Pred, args: &[usize]) -> bool;
}

fn max_var(f: &FoFormula) -> usize {
    let mut m = 0;
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        match g {
            FoFormula::True | FoFormula::False => {}
            FoFormula::Atom(_, args) => m = args.iter().fold(m, |m, v| m.max(v.0)),
            FoFormula::Eq(a, b) => m = m.max(a.0).max(b.0),
            FoFormula::Not(h) => stack.push(h),
            FoFormula::And(hs) | FoFormula::Or(hs) => stack.extend(hs),
            FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            FoFormula::Forall(v, h) | FoFormula::Exists(v, h) => {
                m = m.max(v.0);
                stack.push(h);
            }
        }
    }
    m
}

/// Evaluates a sentence (no free variables) by nested loops.
pub fn eval_closed(f: &FoFormula, it: &impl Interpretation) -> bool {
    let mut env = vec![usize::MAX; max_var(f) + 1];
    eval_in(f, it, &mut env)
}

fn eval_in(f: &FoFormula, it: &impl Interpretation, env: &mut [usize]) -> bool {
    match f {
        FoFormula::True => true,
        FoFormula::False => false,
        FoFormula::Atom(p, args) => {
            let vals: Vec<usize> = args.iter().map(|v| env[v.0]).collect();
            debug_assert!(vals.iter().all(|&v| v != usize::MAX), "free variable in {f}");
            it.holds(p, &vals)
        }
        FoFormula::Eq(a, b) => env[a.0] == env[b.0],
        FoFormula::Not(g) => !eval_in(g, it, env),
        FoFormula::And(gs) => gs.iter().all(|g| eval_in(g, it, env)),
        FoFormula::Or(gs) => gs.iter().any(|g| eval_in(g, it, env)),
        FoFormula::Implies(a, b) => !eval_in(a, it, env) || eval_in(b, it, env),
        FoFormula::Iff(a, b) => eval_in(a, it, env) == eval_in(b, it, env),
        FoFormula::Forall(v, g) => {
            let saved = env[v.0];
            let r = (0..it.universe()).all(|e| {
                env[v.0] = e;
                eval_in(g, it, env)
            });
            env[v.0] = saved;
            r
        }
        FoFormula::Exists(v, g) => {
            let saved = env[v.0];
            let r = (0..it.universe()).any(|e| {
                env[v.0] = e;
                eval_in(g, it, env)
            });
            env[v.0] = saved;
            r
        }
    }
}

pub fn eval_sentence(s: &FoSentence, it: &impl Interpretation) -> bool {
    eval_closed(&s.to_formula(), it)
}

/// The first-order structure `(W, {A_p}, E, T)` encoding a model and a team.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoStructure {
    pub universe: usize,
    pub team: Vec<bool>,
    pub edges: Vec<Vec<bool>>,
    pub props: BTreeMap<VarId, Vec<bool>>,
}

impl FoStructure {
    pub fn team_members(&self) -> Vec<usize> {
        (0..self.universe).filter(|&w| self.team[w]).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().filter(|b| **b).count()
    }

    /// Extent of `A_p`; empty if `p` is nowhere true.
    pub fn prop_extent(&self, p: &VarId) -> Vec<usize> {
        self.props
            .get(p)
            .map(|row| (0..self.universe).filter(|&w| row[w]).collect())
            .unwrap_or_default()
    }
}

pub fn encode_structure(m: &KripkeModel, t: &Team) -> FoStructure {
    let n = m.world_count();
    let mut team = vec![false; n];
    for w in t.iter() {
        team[w.index()] = true;
    }
    let mut edges = vec![vec![false; n]; n];
    for (a, b) in m.edges() {
        edges[a.index()][b.index()] = true;
    }
    let props = m
        .vocabulary()
        .iter()
        .map(|v| (v.clone(), m.worlds().map(|w| m.holds(w, v)).collect()))
        .collect();
    FoStructure {
        universe: n,
        team,
        edges,
        props,
    }
}

/// A structure together with an interpretation of some `Y_i` predicates.
pub struct Expanded<'a> {
    pub base: &'a FoStructure,
    /// `Y_i` extent as a bitmask over the universe.
    pub aux: &'a HashMap<usize, u64>,
}

impl Interpretation for Expanded<'_> {
    fn universe(&self) -> usize {
        self.base.universe
    }

    fn holds(&self, pred: &Pred, args: &[usize]) -> bool {
        match pred {
            Pred::Team => self.base.team[args[0]],
            Pred::Edge => self.base.edges[args[0]][args[1]],
            Pred::Prop(p) => self.base.props.get(p).is_some_and(|row| row[args[0]]),
            Pred::Aux(i) => self.aux.get(i).is_some_and(|m| m >> args[0] & 1 == 1),
            Pred::Column(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EsoError {
    #[error("ESO evaluation budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("universe of {0} elements is too large for predicate enumeration")]
    UniverseTooLarge(usize),
}

/// Piece of the first-order body that can be checked on its own.
struct Group {
    formula: FoFormula,
    /// Position in the `∃Y` block after which every predicate it uses is fixed.
    ready_at: Option<usize>,
}

/// Splits `∀ū∃v̄ (θ_1 ∧ … ∧ θ_k)` into independently checkable sentences:
/// the universal block distributes over `∧`, and an existential variable is
/// shared only by the conjuncts that mention it.
fn split_body(s: &EsoSentence) -> Vec<Group> {
    let position: HashMap<usize, usize> = s.aux.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let split_point = s
        .body
        .prefix
        .iter()
        .position(|(q, _)| *q == Quant::Exists)
        .unwrap_or(s.body.prefix.len());
    let prenex_ae = s.body.prefix[split_point..]
        .iter()
        .all(|(q, _)| *q == Quant::Exists);
    let ready = |f: &FoFormula| {
        f.predicates()
            .iter()
            .filter_map(|p| match p {
                Pred::Aux(i) => Some(position.get(i).copied().unwrap_or(usize::MAX)),
                _ => None,
            })
            .max()
    };
    let conjuncts: Vec<FoFormula> = match (&s.body.matrix, prenex_ae) {
        (FoFormula::And(cs), true) => cs.clone(),
        _ => {
            let f = s.body.to_formula();
            let r = ready(&f);
            return vec![Group {
                formula: f,
                ready_at: r,
            }];
        }
    };
    let universals: Vec<FoVar> = s.body.prefix[..split_point].iter().map(|(_, v)| *v).collect();
    let existentials: Vec<FoVar> = s.body.prefix[split_point..].iter().map(|(_, v)| *v).collect();

    // union-find over conjuncts sharing an existential variable
    let mut parent: Vec<usize> = (0..conjuncts.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut owner: HashMap<FoVar, usize> = HashMap::new();
    let frees: Vec<Vec<FoVar>> = conjuncts.iter().map(FoFormula::free_vars).collect();
    for (ci, fv) in frees.iter().enumerate() {
        for v in fv.iter().filter(|v| existentials.contains(v)) {
            match owner.get(v) {
                Some(&o) => {
                    let (a, b) = (find(&mut parent, o), find(&mut parent, ci));
                    parent[a] = b;
                }
                None => {
                    owner.insert(*v, ci);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ci in 0..conjuncts.len() {
        let r = find(&mut parent, ci);
        groups.entry(r).or_default().push(ci);
    }
    groups
        .into_values()
        .map(|members| {
            let body = FoFormula::and(members.iter().map(|&c| conjuncts[c].clone()).collect());
            let mut used: Vec<FoVar> = Vec::new();
            for &c in &members {
                for v in &frees[c] {
                    if !used.contains(v) {
                        used.push(*v);
                    }
                }
            }
            let mut f = body;
            for v in existentials.iter().rev().filter(|v| used.contains(v)) {
                f = FoFormula::Exists(*v, Box::new(f));
            }
            for v in universals.iter().rev() {
                f = FoFormula::Forall(*v, Box::new(f));
            }
            let r = ready(&f);
            Group {
                formula: f,
                ready_at: r,
            }
        })
        .collect()
}

/// Decides `st ⊨ s` by searching interpretations of the `∃Y` block.
///
/// Predicates are assigned in quantification order and every piece of the
/// body is checked as soon as its predicates are fixed. `budget` bounds the
/// number of predicate assignments plus piece evaluations.
pub fn eval_eso(s: &EsoSentence, st: &FoStructure, budget: Option<u64>) -> Result<bool, EsoError> {
    if st.universe >= 63 {
        return Err(EsoError::UniverseTooLarge(st.universe));
    }
    let groups = split_body(s);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); s.aux.len()];
    let mut immediate = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        match g.ready_at {
            None => immediate.push(gi),
            Some(p) if p < s.aux.len() => by_level[p].push(gi),
            // uses a Y outside the block: treated as empty, check up front
            Some(_) => immediate.push(gi),
        }
    }
    let mut search = EsoSearch {
        st,
        aux_order: &s.aux,
        groups: &groups,
        by_level: &by_level,
        assignment: HashMap::new(),
        steps: 0,
        budget,
    };
    for gi in immediate {
        if !search.check(gi)? {
            return Ok(false);
        }
    }
    search.dfs(0)
}

struct EsoSearch<'a> {
    st: &'a FoStructure,
    aux_order: &'a [usize],
    groups: &'a [Group],
    by_level: &'a [Vec<usize>],
    assignment: HashMap<usize, u64>,
    steps: u64,
    budget: Option<u64>,
}

impl EsoSearch<'_> {
    fn tick(&mut self) -> Result<(), EsoError> {
        self.steps += 1;
        match self.budget {
            Some(b) if self.steps > b => Err(EsoError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    fn check(&mut self, gi: usize) -> Result<bool, EsoError> {
        self.tick()?;
        let it = Expanded {
            base: self.st,
            aux: &self.assignment,
        };
        Ok(eval_closed(&self.groups[gi].formula, &it))
    }

    fn dfs(&mut self, level: usize) -> Result<bool, EsoError> {
        if level == self.aux_order.len() {
            return Ok(true);
        }
        let y = self.aux_order[level];
        for mask in 0..1u64 << self.st.universe {
            self.tick()?;
            self.assignment.insert(y, mask);
            let mut ok = true;
            for &gi in &self.by_level[level] {
                if !self.check(gi)? {
                    ok = false;
                    break;
                }
            }
            if ok && self.dfs(level + 1)? {
                return Ok(true);
            }
        }
        self.assignment.remove(&y);
        Ok(false)
    }
}
