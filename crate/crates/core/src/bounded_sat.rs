//! Bounded satisfiability: search all models up to a given number of worlds,
//! one representative per isomorphism class, for a team satisfying a formula.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::atoms::builtin_registry;
use crate::checker::{check_with_stats, CheckConfig, CheckError};
use crate::formula::{Formula, VarId};
use crate::kripke::{KripkeModel, Team};

/// Largest world count the enumeration supports (adjacency fits in 64 bits).
pub const MAX_WORLDS: usize = 8;

#[derive(Clone, Debug)]
pub struct SatQuery {
    pub formula: Formula,
    pub max_worlds: usize,
    pub require_nonempty_team: bool,
    /// Bound on candidate (model, team) pairs plus checker steps.
    pub budget: Option<u64>,
}

impl SatQuery {
    pub fn new(formula: Formula, max_worlds: usize) -> SatQuery {
        SatQuery {
            formula,
            max_worlds,
            require_nonempty_team: true,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("search budget of {0} steps exhausted")]
    BudgetExhausted(u64),
    #[error("max_worlds must be between 1 and {MAX_WORLDS}, got {0}")]
    InvalidBound(usize),
    #[error(transparent)]
    Check(CheckError),
}

/// Nondecreasing sequences of length `n` over `0..values`.
fn sorted_sequences(n: usize, values: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn go(n: usize, values: u32, from: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in from..values {
            cur.push(v);
            go(n, values, v, cur, out);
            cur.pop();
        }
    }
    go(n, values, 0, &mut cur, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            p.swap(j, k - 1);
        }
    }
    heap(n, &mut p, &mut out);
    out.sort();
    out.dedup();
    out
}

/// Adjacency code with edge `(i, j)` at bit `n*n - 1 - (i*n + j)`, so that
/// numeric order is row-major lexicographic order.
fn edge_bit(n: usize, i: usize, j: usize) -> u64 {
    1u64 << (n * n - 1 - (i * n + j))
}

fn permute_code(n: usize, code: u64, perm: &[usize]) -> u64 {
    let mut out = 0;
    for i in 0..n {
        for j in 0..n {
            if code & edge_bit(n, perm[i], perm[j]) != 0 {
                out |= edge_bit(n, i, j);
            }
        }
    }
    out
}

fn build(n: usize, vars: &[VarId], labels: &[u32], code: u64) -> KripkeModel {
    let labels: Vec<BTreeSet<VarId>> = labels
        .iter()
        .map(|mask| {
            vars.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| code & edge_bit(n, i, j) != 0);
    KripkeModel::new(labels, edges).expect("generated model is well formed")
}

/// Every model with exactly `n` worlds over `vars`, one per isomorphism
/// class: the representative is the one whose label sequence, then
/// adjacency matrix, is lexicographically least over all world renamings.
///
/// A least code has its labels sorted, so only renamings that keep the
/// sorted label sequence need to be compared.
pub fn canonical_enumeration(n: usize, vars: &[VarId]) -> impl Iterator<Item = KripkeModel> {
    assert!((1..=MAX_WORLDS).contains(&n), "world count out of range");
    assert!(vars.len() < 32, "too many variables");
    let vars = vars.to_vec();
    let perms = permutations(n);
    let bits = n * n;
    sorted_sequences(n, 1u32 << vars.len())
        .into_iter()
        .flat_map(move |labels| {
            let stabilizer: Vec<Vec<usize>> = perms
                .iter()
                .filter(|p| p.iter().enumerate().all(|(i, &j)| labels[i] == labels[j]))
                .filter(|p| p.iter().enumerate().any(|(i, &j)| i != j))
                .cloned()
                .collect();
            let vars = vars.clone();
            let limit: u64 = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
            (0..=limit)
                .filter(move |&code| stabilizer.iter().all(|p| permute_code(n, code, p) >= code))
                .map(move |code| build(n, &vars, &labels, code))
        })
}

/// Searches models of `1..=max_worlds` worlds in turn and returns the first
/// (model, team) that satisfies the formula, re-verified by the checker.
/// Teams are tried by increasing membership bitmask.
pub fn bounded_sat(q: &SatQuery) -> Result<Option<(KripkeModel, Team)>, SatError> {
    if !(1..=MAX_WORLDS).contains(&q.max_worlds) {
        return Err(SatError::InvalidBound(q.max_worlds));
    }
    let vars: Vec<VarId> = q.formula.variables().into_iter().collect();
    let registry = builtin_registry();
    let mut spent: u64 = 0;
    for n in 1..=q.max_worlds {
        let first_team: u64 = if q.require_nonempty_team { 1 } else { 0 };
        for m in canonical_enumeration(n, &vars) {
            for mask in first_team..1u64 << n {
                spent += 1;
                let remaining = match q.budget {
                    Some(b) if spent > b => return Err(SatError::BudgetExhausted(b)),
                    Some(b) => Some(b - spent),
                    None => None,
                };
                let t = m.full_team().select(mask);
                let cfg = CheckConfig {
                    max_enumeration_budget: remaining,
                    ..CheckConfig::default()
                };
                match check_with_stats(&m, &t, &q.formula, cfg, registry) {
                    Ok((true, _)) => {
                        // independent re-check without shortcuts or memo
                        let plain = CheckConfig {
                            enable_flat_shortcut: false,
                            enable_memo: false,
                            max_enumeration_budget: None,
                        };
                        let again = check_with_stats(&m, &t, &q.formula, plain, registry)
                            .map_err(SatError::Check)?;
                        assert!(again.0, "witness failed re-verification");
                        return Ok(Some((m, t)));
                    }
                    Ok((false, steps)) => spent += steps,
                    Err(CheckError::BudgetExhausted(_)) => {
                        return Err(SatError::BudgetExhausted(q.budget.unwrap_or(u64::MAX)))
                    }
                    Err(e) => return Err(SatError::Check(e)),
                }
            }
        }
    }
    Ok(None)
}
