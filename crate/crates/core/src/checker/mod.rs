//! Team-semantics model checking.
//!
//! `M, T ⊨ φ` is decided by recursion on `φ`, with the existential choices
//! of the semantics (the split of a team for `∨` and the successor team for
//! `◇`) enumerated exhaustively. Verdicts for (subformula, team) pairs are
//! memoized. Subformulas without dependence atoms are flat: they hold on a
//! team iff they hold at every member, so they are decided world by world.

mod certificate;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

pub use certificate::{replay, replay_with_registry, Certificate};

use crate::atoms::{builtin_registry, independence_holds, team_matrix, AtomRegistry, GeneralizedAtom};
use crate::formula::{Formula, VarId};
use crate::kripke::{succ_team, successor_teams, KripkeModel, ModelError, Team, WorldId};

fn validate(m: &KripkeModel, t: &Team) -> Result<(), CheckError> {
    match m.validate_team(t) {
        Err(ModelError::TeamOutOfRange(w)) => Err(CheckError::InvalidTeam(w)),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    /// Decide flat subformulas world by world.
    pub enable_flat_shortcut: bool,
    pub enable_memo: bool,
    /// Bound on search steps (subformula evaluations plus enumerated
    /// candidate teams). `None` is unbounded.
    pub max_enumeration_budget: Option<u64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            enable_flat_shortcut: true,
            enable_memo: true,
            max_enumeration_budget: None,
        }
    }
}

impl CheckConfig {
    pub fn with_budget(budget: u64) -> Self {
        CheckConfig {
            max_enumeration_budget: Some(budget),
            ..CheckConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("search budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("unknown atom {0}")]
    UnknownAtom(String),
    #[error("atom {atom} applied to {width} arguments")]
    ArityMismatch { atom: String, width: usize },
    #[error("formula is not flat")]
    NotFlat,
    #[error("team mentions world {0}, which is not in the model")]
    InvalidTeam(u32),
}

type NodeId = usize;

#[derive(Debug)]
enum Node {
    Prop(VarId),
    NegProp(VarId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Diamond(NodeId),
    Box(NodeId),
    Dep(Vec<VarId>, VarId),
    Indep(Vec<VarId>, Vec<VarId>, Vec<VarId>),
    Atom(Arc<GeneralizedAtom>, Vec<VarId>),
}

/// A formula flattened into an arena, children before parents.
struct Compiled {
    nodes: Vec<Node>,
    flat: Vec<bool>,
    root: NodeId,
}

impl Compiled {
    fn new(f: &Formula, registry: &AtomRegistry) -> Result<Compiled, CheckError> {
        let mut c = Compiled {
            nodes: Vec::new(),
            flat: Vec::new(),
            root: 0,
        };
        c.root = c.add(f, registry)?;
        Ok(c)
    }

    fn add(&mut self, f: &Formula, registry: &AtomRegistry) -> Result<NodeId, CheckError> {
        let (node, flat) = match f {
            Formula::Prop(v) => (Node::Prop(v.clone()), true),
            Formula::NegProp(v) => (Node::NegProp(v.clone()), true),
            Formula::And(l, r) => {
                let (a, b) = (self.add(l, registry)?, self.add(r, registry)?);
                (Node::And(a, b), self.flat[a] && self.flat[b])
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.add(l, registry)?, self.add(r, registry)?);
                (Node::Or(a, b), self.flat[a] && self.flat[b])
            }
            Formula::Diamond(g) => {
                let a = self.add(g, registry)?;
                (Node::Diamond(a), self.flat[a])
            }
            Formula::Box(g) => {
                let a = self.add(g, registry)?;
                (Node::Box(a), self.flat[a])
            }
            Formula::Dep {
                determiners,
                determined,
            } => (Node::Dep(determiners.clone(), determined.clone()), false),
            Formula::Indep { left, cond, right } => (
                Node::Indep(left.clone(), cond.clone(), right.clone()),
                false,
            ),
            Formula::GenAtom { atom, args } => {
                let a = registry
                    .get(atom)
                    .ok_or_else(|| CheckError::UnknownAtom(atom.clone()))?;
                if !a.arity().admits(args.len()) {
                    return Err(CheckError::ArityMismatch {
                        atom: atom.clone(),
                        width: args.len(),
                    });
                }
                (Node::Atom(a.clone(), args.clone()), false)
            }
        };
        self.nodes.push(node);
        self.flat.push(flat);
        Ok(self.nodes.len() - 1)
    }
}

/// Functional dependence of `determined` on `determiners` across `t`.
pub fn dependence_on_team(m: &KripkeModel, t: &Team, determiners: &[VarId], determined: &VarId) -> bool {
    let mut seen: HashMap<Vec<bool>, bool> = HashMap::new();
    t.iter().all(|w| {
        let key: Vec<bool> = determiners.iter().map(|v| m.holds(w, v)).collect();
        let val = m.holds(w, determined);
        *seen.entry(key).or_insert(val) == val
    })
}

/// `left ⊥_cond right` on `t`.
pub fn independence_on_team(m: &KripkeModel, t: &Team, left: &[VarId], cond: &[VarId], right: &[VarId]) -> bool {
    let all: Vec<VarId> = left.iter().chain(cond).chain(right).cloned().collect();
    let mat = team_matrix(m, t, &all);
    let (l, c) = (left.len(), cond.len());
    let idx: Vec<usize> = (0..all.len()).collect();
    independence_holds(&mat, &idx[..l], &idx[l..l + c], &idx[l + c..])
}

/// Search state for one (model, formula) pair.
struct Search<'a> {
    m: &'a KripkeModel,
    c: &'a Compiled,
    cfg: CheckConfig,
    memo: HashMap<(NodeId, Team), bool>,
    /// Classical extensions of flat nodes, filled on demand.
    ext: Vec<Option<Vec<bool>>>,
    steps: u64,
}

impl<'a> Search<'a> {
    fn new(m: &'a KripkeModel, c: &'a Compiled, cfg: CheckConfig) -> Self {
        Search {
            m,
            c,
            cfg,
            memo: HashMap::new(),
            ext: vec![None; c.nodes.len()],
            steps: 0,
        }
    }

    fn tick(&mut self) -> Result<(), CheckError> {
        self.steps += 1;
        match self.cfg.max_enumeration_budget {
            Some(b) if self.steps > b => Err(CheckError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    /// Worlds where a flat node holds classically.
    fn extension(&mut self, n: NodeId) -> &[bool] {
        if self.ext[n].is_none() {
            let e = self.compute_extension(n);
            self.ext[n] = Some(e);
        }
        self.ext[n].as_deref().unwrap()
    }

    fn compute_extension(&mut self, n: NodeId) -> Vec<bool> {
        let m = self.m;
        match &self.c.nodes[n] {
            Node::Prop(v) => m.worlds().map(|w| m.holds(w, v)).collect(),
            Node::NegProp(v) => m.worlds().map(|w| !m.holds(w, v)).collect(),
            Node::And(a, b) | Node::Or(a, b) => {
                let is_and = matches!(self.c.nodes[n], Node::And(..));
                let (a, b) = (*a, *b);
                let ea = self.extension(a).to_vec();
                let eb = self.extension(b);
                ea.iter()
                    .zip(eb)
                    .map(|(x, y)| if is_and { *x && *y } else { *x || *y })
                    .collect()
            }
            Node::Diamond(a) => {
                let ea = self.extension(*a);
                m.worlds()
                    .map(|w| m.successors(w).iter().any(|s| ea[s.index()]))
                    .collect()
            }
            Node::Box(a) => {
                let ea = self.extension(*a);
                m.worlds()
                    .map(|w| m.successors(w).iter().all(|s| ea[s.index()]))
                    .collect()
            }
            _ => unreachable!("extension of a non-flat node"),
        }
    }

    fn flat_here(&self, n: NodeId) -> bool {
        self.cfg.enable_flat_shortcut && self.c.flat[n]
    }

    fn check(&mut self, n: NodeId, t: &Team) -> Result<bool, CheckError> {
        self.tick()?;
        if self.flat_here(n) {
            let e = self.extension(n);
            return Ok(t.iter().all(|w| e[w.index()]));
        }
        if self.cfg.enable_memo {
            if let Some(v) = self.memo.get(&(n, t.clone())) {
                return Ok(*v);
            }
        }
        let v = self.compute(n, t)?;
        if self.cfg.enable_memo {
            self.memo.insert((n, t.clone()), v);
        }
        Ok(v)
    }

    fn compute(&mut self, n: NodeId, t: &Team) -> Result<bool, CheckError> {
        let m = self.m;
        match &self.c.nodes[n] {
            Node::Prop(v) => Ok(t.iter().all(|w| m.holds(w, v))),
            Node::NegProp(v) => Ok(t.iter().all(|w| !m.holds(w, v))),
            Node::And(a, b) => {
                let (a, b) = (*a, *b);
                Ok(self.check(a, t)? && self.check(b, t)?)
            }
            Node::Or(a, b) => {
                let (a, b) = (*a, *b);
                Ok(self.find_split(a, b, t)?.is_some())
            }
            Node::Diamond(a) => {
                let a = *a;
                Ok(self.find_successor(a, t)?.is_some())
            }
            Node::Box(a) => {
                let a = *a;
                self.check(a, &succ_team(m, t))
            }
            Node::Dep(d, q) => Ok(dependence_on_team(m, t, d, q)),
            Node::Indep(l, c, r) => Ok(independence_on_team(m, t, l, c, r)),
            Node::Atom(atom, args) => Ok(atom.evaluate(&team_matrix(m, t, args))),
        }
    }

    /// A cover `t = t1 ∪ t2` with `t1 ⊨ a` and `t2 ⊨ b`.
    fn find_split(&mut self, a: NodeId, b: NodeId, t: &Team) -> Result<Option<(Team, Team)>, CheckError> {
        let size = t.len();
        if size >= 63 {
            // 3^63 candidates: beyond any budget
            return Err(CheckError::BudgetExhausted(self.cfg.max_enumeration_budget.unwrap_or(u64::MAX)));
        }
        let full: u64 = (1u64 << size) - 1;
        // a flat side may take every member that satisfies it; the other
        // side then has to cover the rest
        for (flat, other, flat_left) in [(a, b, true), (b, a, false)] {
            if self.flat_here(flat) {
                let e = self.extension(flat);
                let good: u64 = t
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| e[w.index()])
                    .fold(0, |acc, (i, _)| acc | 1 << i);
                let rest = full & !good;
                let mut sub = 0u64;
                loop {
                    self.tick()?;
                    let other_team = t.select(rest | sub);
                    if self.check(other, &other_team)? {
                        let flat_team = t.select(good);
                        return Ok(Some(if flat_left {
                            (flat_team, other_team)
                        } else {
                            (other_team, flat_team)
                        }));
                    }
                    if sub == good {
                        return Ok(None);
                    }
                    sub = (sub.wrapping_sub(good)) & good;
                }
            }
        }
        for left_mask in 0..=full {
            self.tick()?;
            let left = t.select(left_mask);
            if !self.check(a, &left)? {
                continue;
            }
            let rest = full & !left_mask;
            let mut sub = 0u64;
            loop {
                self.tick()?;
                let right = t.select(rest | sub);
                if self.check(b, &right)? {
                    return Ok(Some((left, right)));
                }
                if sub == left_mask {
                    break;
                }
                sub = (sub.wrapping_sub(left_mask)) & left_mask;
            }
        }
        Ok(None)
    }

    /// A legal successor team of `t` satisfying `a`, smallest first.
    fn find_successor(&mut self, a: NodeId, t: &Team) -> Result<Option<Team>, CheckError> {
        if self.flat_here(a) {
            // one satisfying successor per member is enough
            let e = self.extension(a).to_vec();
            let mut chosen = Vec::with_capacity(t.len());
            for w in t.iter() {
                match self.m.successors(w).iter().find(|s| e[s.index()]) {
                    Some(s) => chosen.push(*s),
                    None => return Ok(None),
                }
            }
            return Ok(Some(Team::from_worlds(chosen)));
        }
        for cand in successor_teams(self.m, t) {
            self.tick()?;
            if self.check(a, &cand)? {
                return Ok(Some(cand));
            }
        }
        Ok(None)
    }

    /// Certificate for a node already known to hold on `t`.
    fn certify(&mut self, n: NodeId, t: &Team) -> Result<Certificate, CheckError> {
        let m = self.m;
        Ok(match &self.c.nodes[n] {
            Node::Prop(_) | Node::NegProp(_) => Certificate::Literal,
            Node::Dep(..) | Node::Indep(..) | Node::Atom(..) => Certificate::Atom,
            Node::And(a, b) => {
                let (a, b) = (*a, *b);
                Certificate::And(Box::new(self.certify(a, t)?), Box::new(self.certify(b, t)?))
            }
            Node::Or(a, b) => {
                let (a, b) = (*a, *b);
                let (left, right) = if self.flat_here(n) {
                    let e = self.extension(a).to_vec();
                    let left = Team::from_worlds(t.iter().filter(|w| e[w.index()]));
                    let right = Team::from_worlds(t.iter().filter(|w| !e[w.index()]));
                    (left, right)
                } else {
                    self.find_split(a, b, t)?.expect("split exists for a true disjunction")
                };
                Certificate::Or {
                    left: Box::new(self.certify(a, &left)?),
                    right: Box::new(self.certify(b, &right)?),
                    left_team: left,
                    right_team: right,
                }
            }
            Node::Diamond(a) => {
                let a = *a;
                let witness = self
                    .find_successor(a, t)?
                    .expect("successor team exists for a true diamond");
                Certificate::Diamond {
                    inner: Box::new(self.certify(a, &witness)?),
                    witness,
                }
            }
            Node::Box(a) => {
                let a = *a;
                Certificate::Box(Box::new(self.certify(a, &succ_team(m, t))?))
            }
        })
    }
}

/// Decides `M, T ⊨ φ` with the built-in atoms.
pub fn check(m: &KripkeModel, t: &Team, f: &Formula, cfg: CheckConfig) -> Result<bool, CheckError> {
    check_with_registry(m, t, f, cfg, builtin_registry())
}

pub fn check_with_registry(
    m: &KripkeModel,
    t: &Team,
    f: &Formula,
    cfg: CheckConfig,
    registry: &AtomRegistry,
) -> Result<bool, CheckError> {
    Ok(check_with_stats(m, t, f, cfg, registry)?.0)
}

/// Verdict plus the number of search steps spent.
pub fn check_with_stats(
    m: &KripkeModel,
    t: &Team,
    f: &Formula,
    cfg: CheckConfig,
    registry: &AtomRegistry,
) -> Result<(bool, u64), CheckError> {
    validate(m, t)?;
    let c = Compiled::new(f, registry)?;
    let mut s = Search::new(m, &c, cfg);
    let v = s.check(c.root, t)?;
    Ok((v, s.steps))
}

/// The verdict and, when it is true, a certificate that [`replay`] accepts.
pub fn check_with_certificate(
    m: &KripkeModel,
    t: &Team,
    f: &Formula,
    cfg: CheckConfig,
) -> Result<(bool, Option<Certificate>), CheckError> {
    validate(m, t)?;
    let c = Compiled::new(f, builtin_registry())?;
    let mut s = Search::new(m, &c, cfg);
    if !s.check(c.root, t)? {
        return Ok((false, None));
    }
    let cert = s.certify(c.root, t)?;
    Ok((true, Some(cert)))
}

/// Classical satisfaction at a single world; only for flat formulas.
pub fn holds_at(m: &KripkeModel, w: WorldId, f: &Formula) -> Result<bool, CheckError> {
    Ok(match f {
        Formula::Prop(v) => m.holds(w, v),
        Formula::NegProp(v) => !m.holds(w, v),
        Formula::And(l, r) => holds_at(m, w, l)? && holds_at(m, w, r)?,
        Formula::Or(l, r) => holds_at(m, w, l)? || holds_at(m, w, r)?,
        Formula::Diamond(g) => {
            let mut any = false;
            for s in m.successors(w) {
                any |= holds_at(m, *s, g)?;
            }
            any
        }
        Formula::Box(g) => {
            let mut all = true;
            for s in m.successors(w) {
                all &= holds_at(m, *s, g)?;
            }
            all
        }
        _ => return Err(CheckError::NotFlat),
    })
}

/// `M, T ⊨ φ` for flat `φ`, read off pointwise.
pub fn check_flat(m: &KripkeModel, t: &Team, f: &Formula) -> Result<bool, CheckError> {
    if !f.is_flat() {
        return Err(CheckError::NotFlat);
    }
    validate(m, t)?;
    for w in t.iter() {
        if !holds_at(m, w, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}
