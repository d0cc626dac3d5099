//! The dining cryptographers protocol as a Kripke model, the anonymity
//! formulas over it, a direct check of the anonymity condition, and the
//! formula families used for the succinctness experiment.
//!
//! Layout of a model for `n` cryptographers:
//!
//! - world 0 is the start state `q0`, with no variables true;
//! - world 1 is the state where the NSA pays (`p_NSA`);
//! - worlds `2..n+2` are the states where cryptographer `i` pays (`p_i`);
//! - the remaining `(n+1)·2^n` worlds are final, one per payer and bit
//!   vector. Bit `i` of the vector is the coin shared by cryptographers `i`
//!   and `i+1` (`bit_i_{i+1}`, indices mod `n`).
//!
//! The payer variable also holds in the payer's final worlds, and
//! `announce_i` holds in a final world iff `p_i ⊕ bit_{i-1}_i ⊕ bit_i_{i+1}`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::atoms::builtin_registry;
use crate::bounded_sat::{canonical_enumeration, MAX_WORLDS};
use crate::checker::{check, check_with_stats, CheckConfig, CheckError};
use crate::formula::{var, Formula, VarId};
use crate::kripke::{succ_team, KripkeModel, Team, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DcError {
    #[error("the protocol needs at least 3 cryptographers, got {0}")]
    TooFewCryptographers(usize),
    #[error("cryptographer {0} out of range for n = {1}")]
    OutOfRange(usize, usize),
    #[error("observer and payer must differ (both {0})")]
    SameCryptographer(usize),
    #[error("search budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("bound must be between 1 and {MAX_WORLDS}, got {0}")]
    InvalidBound(usize),
    #[error(transparent)]
    Check(CheckError),
}

impl From<CheckError> for DcError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::BudgetExhausted(b) => DcError::BudgetExhausted(b),
            other => DcError::Check(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payer {
    Nsa,
    Cryptographer(usize),
}

pub fn p_nsa() -> VarId {
    var("p_NSA")
}

pub fn p(i: usize) -> VarId {
    var(&format!("p_{i}"))
}

/// The coin shared by `i` and `i+1`.
pub fn bit(n: usize, i: usize) -> VarId {
    var(&format!("bit_{}_{}", i % n, (i + 1) % n))
}

pub fn announce(i: usize) -> VarId {
    var(&format!("announce_{i}"))
}

fn check_index(n: usize, i: usize) -> Result<(), DcError> {
    if i < n {
        Ok(())
    } else {
        Err(DcError::OutOfRange(i, n))
    }
}

/// What cryptographer `i` observes, in chain order: own payment bit, the
/// two coins shared with the neighbours, then the other announcements.
pub fn knowledge_set(n: usize, i: usize) -> Vec<VarId> {
    let mut out = vec![p(i), bit(n, i + n - 1), bit(n, i)];
    out.extend((0..n).filter(|&j| j != i).map(announce));
    out
}

#[derive(Clone, Debug)]
pub struct DcInstance {
    pub n: usize,
    pub model: KripkeModel,
    pub root: WorldId,
}

impl DcInstance {
    pub fn world_count_for(n: usize) -> usize {
        1 + (n + 1) + (n + 1) * (1 << n)
    }

    pub fn payers(&self) -> Vec<Payer> {
        std::iter::once(Payer::Nsa)
            .chain((0..self.n).map(Payer::Cryptographer))
            .collect()
    }

    /// Index of the payer world in an unmutated model.
    pub fn payer_world(&self, payer: Payer) -> WorldId {
        WorldId::from(1 + payer_slot(payer))
    }

    /// Index of a final world in an unmutated model.
    pub fn final_world(&self, payer: Payer, bits: u32) -> WorldId {
        WorldId::from(self.n + 2 + payer_slot(payer) * (1 << self.n) + bits as usize)
    }

    /// `R(R({q0}))`.
    pub fn final_layer(&self) -> Team {
        let root = Team::singleton(self.root);
        succ_team(&self.model, &succ_team(&self.model, &root))
    }

    /// The instance with one world removed; the root keeps index 0.
    pub fn without_world(&self, w: WorldId) -> DcInstance {
        assert_ne!(w, self.root, "the root cannot be removed");
        let (model, _) = self.model.without_world(w).expect("model has more than one world");
        DcInstance {
            n: self.n,
            model,
            root: self.root,
        }
    }
}

fn payer_slot(payer: Payer) -> usize {
    match payer {
        Payer::Nsa => 0,
        Payer::Cryptographer(i) => i + 1,
    }
}

pub fn build_model(n: usize) -> Result<DcInstance, DcError> {
    if n < 3 {
        return Err(DcError::TooFewCryptographers(n));
    }
    let payers: Vec<Payer> = std::iter::once(Payer::Nsa)
        .chain((0..n).map(Payer::Cryptographer))
        .collect();
    let mut labels: Vec<BTreeSet<VarId>> = vec![BTreeSet::new()];
    let mut edges = Vec::new();
    let payer_var = |payer: Payer| match payer {
        Payer::Nsa => p_nsa(),
        Payer::Cryptographer(i) => p(i),
    };
    for &payer in &payers {
        edges.push((0, labels.len()));
        labels.push([payer_var(payer)].into());
    }
    for &payer in &payers {
        let from = 1 + payer_slot(payer);
        for bits in 0..1u32 << n {
            let coin = |i: usize| bits >> (i % n) & 1 == 1;
            let mut label: BTreeSet<VarId> = [payer_var(payer)].into();
            for i in 0..n {
                if coin(i) {
                    label.insert(bit(n, i));
                }
                let paid = payer == Payer::Cryptographer(i);
                if paid ^ coin(i + n - 1) ^ coin(i) {
                    label.insert(announce(i));
                }
            }
            edges.push((from, labels.len()));
            labels.push(label);
        }
    }
    let model = KripkeModel::new(labels, edges).expect("edges are in range");
    Ok(DcInstance {
        n,
        model,
        root: WorldId(0),
    })
}

fn dd(f: Formula) -> Formula {
    Formula::diamond(Formula::diamond(f))
}

fn lit(v: &VarId, positive: bool) -> Formula {
    if positive {
        Formula::Prop(v.clone())
    } else {
        Formula::NegProp(v.clone())
    }
}

/// Every value combination of each coin or announcement with each payment
/// bit is possible, and so is every combination of two payment bits except
/// both being true.
pub fn phi_global(n: usize) -> Formula {
    let observed: Vec<VarId> = (0..n).map(|i| bit(n, i)).chain((0..n).map(announce)).collect();
    let mut parts = Vec::new();
    for v in &observed {
        for k in 0..n {
            for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
                parts.push(dd(Formula::and(lit(v, a), lit(&p(k), b))));
            }
        }
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            for (a, b) in [(true, false), (false, true), (false, false)] {
                parts.push(dd(Formula::and(lit(&p(i), a), lit(&p(j), b))));
            }
        }
    }
    Formula::conjunction(parts)
}

/// `□□` of the chain `V_1 ⊥_{p_k} V_2`, `V_1 V_2 ⊥_{p_k} V_3`, … over the
/// ordered knowledge set of `i`.
pub fn phi_local(n: usize, i: usize, k: usize) -> Result<Formula, DcError> {
    check_index(n, i)?;
    check_index(n, k)?;
    if i == k {
        return Err(DcError::SameCryptographer(i));
    }
    let ks = knowledge_set(n, i);
    let chain = (1..ks.len()).map(|j| Formula::indep(ks[..j].to_vec(), vec![p(k)], vec![ks[j].clone()]));
    Ok(Formula::boxed(Formula::boxed(Formula::conjunction(chain))))
}

/// `φ_g` followed by `φ^{i,k}` for all `i ≠ k`, in lexicographic order.
pub fn anonymity_formula(n: usize) -> Formula {
    let mut parts = vec![phi_global(n)];
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            parts.push(phi_local(n, i, k).expect("indices are valid"));
        }
    }
    Formula::conjunction(parts)
}

/// A consistent assignment for which one of the two required witnesses is
/// missing from the final layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub observer: usize,
    pub payer: usize,
    pub assignment: Vec<(VarId, bool)>,
    /// The witness value of `p_payer` that was not found.
    pub missing: bool,
}

/// Every assignment to `k_i ∪ {announce_i}` that follows the protocol, has
/// `p_i` false and an odd number of announcements.
fn consistent_assignments(n: usize, i: usize) -> Vec<Vec<(VarId, bool)>> {
    let ks = knowledge_set(n, i);
    let mut out = Vec::new();
    for left in [false, true] {
        for right in [false, true] {
            for others in 0..1u32 << (n - 1) {
                let others: Vec<bool> = (0..n - 1).map(|j| others >> j & 1 == 1).collect();
                let own = left ^ right;
                if others.iter().fold(own, |acc, &a| acc ^ a) {
                    let mut a = vec![(ks[0].clone(), false), (ks[1].clone(), left), (ks[2].clone(), right)];
                    a.extend(ks[3..].iter().cloned().zip(others));
                    a.push((announce(i), own));
                    out.push(a);
                }
            }
        }
    }
    out
}

/// The first assignment, by observer, payer and enumeration order, that
/// lacks a witness in `R(R({q0}))`.
pub fn first_violation(inst: &DcInstance) -> Option<Violation> {
    let n = inst.n;
    let layer = inst.final_layer();
    let m = &inst.model;
    for i in 0..n {
        let assignments = consistent_assignments(n, i);
        for k in (0..n).filter(|&k| k != i) {
            for a in &assignments {
                for want in [true, false] {
                    let found = layer.iter().any(|w| {
                        m.holds(w, &p(k)) == want && a.iter().all(|(v, b)| m.holds(w, v) == *b)
                    });
                    if !found {
                        return Some(Violation {
                            observer: i,
                            payer: k,
                            assignment: a.clone(),
                            missing: want,
                        });
                    }
                }
            }
        }
    }
    None
}

pub fn verify_proposition(inst: &DcInstance) -> bool {
    first_violation(inst).is_none()
}

/// Verdicts of every check at `{q0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DcReport {
    pub global: bool,
    /// `((i, k), verdict)` for every `i ≠ k`.
    pub local: Vec<((usize, usize), bool)>,
    pub proposition: bool,
}

impl DcReport {
    pub fn anonymity(&self) -> bool {
        self.global && self.local.iter().all(|&(_, v)| v)
    }

    /// Names of the checks that hold here but not in `other`.
    pub fn lost_in(&self, other: &DcReport) -> Vec<String> {
        let mut out = Vec::new();
        if self.global && !other.global {
            out.push("phi_g".to_string());
        }
        for (&((i, k), a), &(_, b)) in self.local.iter().zip(&other.local) {
            if a && !b {
                out.push(format!("phi_{i}_{k}"));
            }
        }
        if self.proposition && !other.proposition {
            out.push("proposition".to_string());
        }
        out
    }

    /// Whether any check fails.
    pub fn any_false(&self) -> bool {
        !self.anonymity() || !self.proposition
    }
}

pub fn evaluate(inst: &DcInstance, cfg: CheckConfig) -> Result<DcReport, DcError> {
    let n = inst.n;
    let root = Team::singleton(inst.root);
    let global = check(&inst.model, &root, &phi_global(n), cfg)?;
    let mut local = Vec::new();
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            let f = phi_local(n, i, k)?;
            local.push(((i, k), check(&inst.model, &root, &f, cfg)?));
        }
    }
    Ok(DcReport {
        global,
        local,
        proposition: verify_proposition(inst),
    })
}

fn collapse(f: &Formula) -> Formula {
    match f {
        Formula::Diamond(g) => match &**g {
            Formula::Diamond(h) => Formula::diamond(collapse(h)),
            _ => Formula::diamond(collapse(g)),
        },
        Formula::Box(g) => match &**g {
            Formula::Box(h) => Formula::boxed(collapse(h)),
            _ => Formula::boxed(collapse(g)),
        },
        Formula::And(l, r) => Formula::and(collapse(l), collapse(r)),
        Formula::Or(l, r) => Formula::or(collapse(l), collapse(r)),
        leaf => leaf.clone(),
    }
}

/// The anonymity formula for `i` cryptographers with `◇◇` collapsed to `◇`
/// and `□□` to `□`, so that it speaks about one step instead of two.
pub fn succinct_family(i: usize) -> Result<Formula, DcError> {
    if i < 3 {
        return Err(DcError::TooFewCryptographers(i));
    }
    Ok(collapse(&anonymity_formula(i)))
}

/// A depth-one fragment in the same style for `i` variables `x_0..`: each
/// `x_j` takes both values at some successor, and the successors satisfy
/// the chain `x_0 ⊥ x_1`, `x_0 x_1 ⊥ x_2`, …. Together these force all
/// `2^i` assignments among the successors, while the length is quadratic.
pub fn independence_family(i: usize) -> Formula {
    assert!(i >= 1, "the family starts at one variable");
    let xs: Vec<VarId> = (0..i).map(|j| var(&format!("x_{j}"))).collect();
    let mut parts: Vec<Formula> = xs
        .iter()
        .map(|x| Formula::and(Formula::diamond(lit(x, true)), Formula::diamond(lit(x, false))))
        .collect();
    if i > 1 {
        let chain = (1..i).map(|j| Formula::indep(xs[..j].to_vec(), vec![], vec![xs[j].clone()]));
        parts.push(Formula::boxed(Formula::conjunction(chain)));
    }
    Formula::conjunction(parts)
}

/// Variables occurring outside every modality.
fn top_level_vars(f: &Formula, out: &mut BTreeSet<VarId>) {
    match f {
        Formula::Diamond(_) | Formula::Box(_) => {}
        Formula::And(l, r) | Formula::Or(l, r) => {
            top_level_vars(l, out);
            top_level_vars(r, out);
        }
        other => out.extend(other.variables()),
    }
}

/// Whether every atom has a first-order definition at the width used, so
/// that verdicts cannot depend on repeated assignments.
fn duplicate_insensitive(f: &Formula) -> bool {
    match f {
        Formula::GenAtom { atom, args } => builtin_registry()
            .get(atom)
            .is_some_and(|a| a.fo_definition(args.len()).is_some()),
        other => other.children().into_iter().all(duplicate_insensitive),
    }
}

type Visit<'a, T> = dyn FnMut(&[usize]) -> Result<Option<T>, DcError> + 'a;

/// Calls `visit` on every `d`-element selection from `0..values`, as a
/// strictly increasing sequence or, with `repeat`, a nondecreasing one.
/// Stops early when `visit` returns `Some`.
fn selections<T>(
    d: usize,
    values: usize,
    repeat: bool,
    visit: &mut Visit<'_, T>,
) -> Result<Option<T>, DcError> {
    fn go<T>(
        d: usize,
        values: usize,
        repeat: bool,
        from: usize,
        cur: &mut Vec<usize>,
        visit: &mut Visit<'_, T>,
    ) -> Result<Option<T>, DcError> {
        if cur.len() == d {
            return visit(cur);
        }
        for v in from..values {
            cur.push(v);
            let next = if repeat { v } else { v + 1 };
            if let Some(t) = go(d, values, repeat, next, cur, visit)? {
                return Ok(Some(t));
            }
            cur.pop();
        }
        Ok(None)
    }
    go(d, values, repeat, 0, &mut Vec::with_capacity(d), visit)
}

fn labels_from_mask(vars: &[VarId], mask: usize) -> BTreeSet<VarId> {
    vars.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, v)| v.clone())
        .collect()
}

struct Spend {
    spent: u64,
    budget: Option<u64>,
}

impl Spend {
    fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.spent))
    }

    fn charge(&mut self, steps: u64) -> Result<(), DcError> {
        self.spent += steps;
        match self.budget {
            Some(b) if self.spent > b => Err(DcError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    fn check(&mut self, m: &KripkeModel, t: &Team, f: &Formula) -> Result<bool, DcError> {
        self.charge(1)?;
        let cfg = CheckConfig {
            max_enumeration_budget: self.remaining(),
            ..CheckConfig::default()
        };
        let (v, steps) = check_with_stats(m, t, f, cfg, builtin_registry()).map_err(|e| match e {
            CheckError::BudgetExhausted(_) => DcError::BudgetExhausted(self.budget.unwrap_or(u64::MAX)),
            other => DcError::Check(other),
        })?;
        self.charge(steps)?;
        Ok(v)
    }
}

/// The least out-degree of `w` over pointed models `(M, w)` with at most
/// `bound` worlds and `M, {w} ⊨ f`, or `None` if there is none.
///
/// For modal depth at most one only `w` and its successors matter, so the
/// search runs over star models by increasing number of leaves. Deeper
/// formulas go through the canonical model enumeration.
pub fn min_branching(f: &Formula, bound: usize, budget: Option<u64>) -> Result<Option<usize>, DcError> {
    if !(1..=MAX_WORLDS).contains(&bound) {
        return Err(DcError::InvalidBound(bound));
    }
    let mut spend = Spend { spent: 0, budget };
    if f.modal_depth() <= 1 {
        star_search(f, bound, &mut spend)
    } else {
        general_search(f, bound, &mut spend)
    }
}

fn star_search(f: &Formula, bound: usize, spend: &mut Spend) -> Result<Option<usize>, DcError> {
    let vars: Vec<VarId> = f.variables().into_iter().collect();
    let mut root_vars = BTreeSet::new();
    top_level_vars(f, &mut root_vars);
    let root_vars: Vec<VarId> = root_vars.into_iter().collect();
    let repeat = !duplicate_insensitive(f);
    let root = Team::singleton(WorldId(0));
    for d in 0..bound {
        for root_mask in 0..1usize << root_vars.len() {
            let root_label = labels_from_mask(&root_vars, root_mask);
            let hit = selections(d, 1 << vars.len(), repeat, &mut |leaves| {
                let mut labels = vec![root_label.clone()];
                labels.extend(leaves.iter().map(|&mask| labels_from_mask(&vars, mask)));
                let m = KripkeModel::new(labels, (1..=d).map(|j| (0, j))).expect("star edges are in range");
                Ok(spend.check(&m, &root, f)?.then_some(()))
            })?;
            if hit.is_some() {
                return Ok(Some(d));
            }
        }
    }
    Ok(None)
}

fn general_search(f: &Formula, bound: usize, spend: &mut Spend) -> Result<Option<usize>, DcError> {
    let vars: Vec<VarId> = f.variables().into_iter().collect();
    let mut best: Option<usize> = None;
    for n in 1..=bound {
        for m in canonical_enumeration(n, &vars) {
            for w in m.worlds() {
                let degree = m.successors(w).len();
                if best.is_some_and(|b| degree >= b) {
                    continue;
                }
                if spend.check(&m, &Team::singleton(w), f)? {
                    best = Some(degree);
                }
            }
        }
    }
    Ok(best)
}

/// One point of the succinctness trend: family parameter, formula size and
/// least branching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrendPoint {
    pub i: usize,
    pub size: usize,
    pub branching: Option<usize>,
}

/// [`min_branching`] of [`independence_family`] for `i` in `1..=max_i`.
pub fn succinctness_trend(max_i: usize, budget: Option<u64>) -> Result<Vec<TrendPoint>, DcError> {
    (1..=max_i)
        .map(|i| {
            let f = independence_family(i);
            let bound = (1usize << i) + 1;
            Ok(TrendPoint {
                i,
                size: f.size(),
                branching: star_min_branching(&f, bound, budget)?,
            })
        })
        .collect()
}

/// [`min_branching`] for depth-one formulas without the world-count limit of
/// the general enumeration.
pub fn star_min_branching(f: &Formula, bound: usize, budget: Option<u64>) -> Result<Option<usize>, DcError> {
    assert!(f.modal_depth() <= 1, "star search needs modal depth at most one");
    if bound == 0 {
        return Err(DcError::InvalidBound(bound));
    }
    star_search(f, bound, &mut Spend { spent: 0, budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn three_cryptographers_layout() {
        let inst = build_model(3).unwrap();
        let m = &inst.model;
        assert_eq!(m.world_count(), 37);
        assert_eq!(m.edge_count(), 36);
        assert!(m.label(inst.root).is_empty());
        assert_eq!(m.successors(inst.root).len(), 4);
        let w = inst.final_world(Payer::Cryptographer(1), 0b001);
        // c1 pays, only the coin shared by 0 and 1 shows heads
        assert!(m.holds(w, &p(1)) && m.holds(w, &bit(3, 0)));
        assert!(m.holds(w, &announce(0)));
        assert!(!m.holds(w, &announce(1)));
        assert!(!m.holds(w, &announce(2)));
        assert_eq!(bit(3, 2), var("bit_2_0"));
        assert_eq!(build_model(2).unwrap_err(), DcError::TooFewCryptographers(2));
    }

    #[test]
    fn knowledge_and_formulas() {
        assert_eq!(
            knowledge_set(3, 0),
            crate::formula::vars(&["p_0", "bit_2_0", "bit_0_1", "announce_1", "announce_2"])
        );
        let g = phi_global(3).render();
        assert!(g.contains(&parse("<><>(bit_0_1 & p_2)").unwrap().render()));
        assert!(!g.contains(&parse("<><>(p_0 & p_1)").unwrap().render()));
        let l = phi_local(3, 0, 1).unwrap();
        assert_eq!(l.modal_depth(), 2);
        assert_eq!(phi_local(3, 1, 1), Err(DcError::SameCryptographer(1)));
        assert_eq!(phi_local(3, 0, 3), Err(DcError::OutOfRange(3, 3)));
    }

    #[test]
    fn branching_examples() {
        assert_eq!(min_branching(&parse("<>p").unwrap(), 3, None), Ok(Some(1)));
        assert_eq!(min_branching(&parse("<>p & <>~p").unwrap(), 3, None), Ok(Some(2)));
        assert_eq!(min_branching(&parse("<><>p & <>~p").unwrap(), 3, None), Ok(Some(1)));
        assert_eq!(min_branching(&parse("p & ~p").unwrap(), 2, None), Ok(None));
        assert_eq!(
            min_branching(&parse("<>p & <>~p").unwrap(), 3, Some(2)),
            Err(DcError::BudgetExhausted(2))
        );
    }
}
