//! Modal bisimulations between finite models, Z-bisimilarity of teams, tree
//! unfoldings, and the invariance harness built on them.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::atoms::builtin_registry;
use crate::checker::{check, CheckConfig, CheckError};
use crate::formula::{Formula, VarId};
use crate::kripke::{KripkeModel, Team, WorldId};

/// A relation between the worlds of two models.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Bisimulation {
    pairs: BTreeSet<(WorldId, WorldId)>,
}

impl Bisimulation {
    pub fn from_pairs<I: IntoIterator<Item = (WorldId, WorldId)>>(pairs: I) -> Bisimulation {
        Bisimulation {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn contains(&self, w: WorldId, w2: WorldId) -> bool {
        self.pairs.contains(&(w, w2))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (WorldId, WorldId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Label agreement on `vars` plus the forward and backward conditions,
    /// checked pair by pair.
    pub fn is_bisimulation(&self, m: &KripkeModel, m2: &KripkeModel, vars: &[VarId]) -> bool {
        self.pairs.iter().all(|&(w, w2)| {
            vars.iter().all(|v| m.holds(w, v) == m2.holds(w2, v))
                && m.successors(w)
                    .iter()
                    .all(|&s| m2.successors(w2).iter().any(|&s2| self.contains(s, s2)))
                && m2
                    .successors(w2)
                    .iter()
                    .all(|&s2| m.successors(w).iter().any(|&s| self.contains(s, s2)))
        })
    }
}

/// The greatest bisimulation between `m` and `m2` with respect to `vars`.
///
/// Starts from all label-agreeing pairs and removes, in synchronous rounds,
/// every pair violating the forward or backward condition against the
/// relation of the previous round.
pub fn largest_bisimulation(m: &KripkeModel, m2: &KripkeModel, vars: &[VarId]) -> Bisimulation {
    let (n, n2) = (m.world_count(), m2.world_count());
    let mut z: Vec<Vec<bool>> = m
        .worlds()
        .map(|w| {
            m2.worlds()
                .map(|w2| vars.iter().all(|v| m.holds(w, v) == m2.holds(w2, v)))
                .collect()
        })
        .collect();
    loop {
        let mut next = z.clone();
        let mut changed = false;
        for i in 0..n {
            for j in 0..n2 {
                if !z[i][j] {
                    continue;
                }
                let (w, w2) = (WorldId::from(i), WorldId::from(j));
                let forth = m
                    .successors(w)
                    .iter()
                    .all(|s| m2.successors(w2).iter().any(|s2| z[s.index()][s2.index()]));
                let back = m2
                    .successors(w2)
                    .iter()
                    .all(|s2| m.successors(w).iter().any(|s| z[s.index()][s2.index()]));
                if !(forth && back) {
                    next[i][j] = false;
                    changed = true;
                }
            }
        }
        z = next;
        if !changed {
            break;
        }
    }
    Bisimulation::from_pairs((0..n).flat_map(|i| {
        let row = &z[i];
        (0..n2)
            .filter(move |&j| row[j])
            .map(move |j| (WorldId::from(i), WorldId::from(j)))
    }))
}

/// Every member of each team has a `z`-partner in the other.
pub fn teams_bisimilar(z: &Bisimulation, t: &Team, t2: &Team) -> bool {
    t.iter().all(|w| t2.iter().any(|w2| z.contains(w, w2)))
        && t2.iter().all(|w2| t.iter().any(|w| z.contains(w, w2)))
}

/// The tree of paths from `w` of length at most `depth`; the root is world 0.
pub fn unfold(m: &KripkeModel, w: WorldId, depth: usize) -> (KripkeModel, WorldId) {
    let mut labels: Vec<BTreeSet<VarId>> = vec![m.label(w).clone()];
    let mut edges = Vec::new();
    // (node in the tree, world it copies)
    let mut frontier = vec![(0usize, w)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (node, world) in frontier {
            for &s in m.successors(world) {
                labels.push(m.label(s).clone());
                let child = labels.len() - 1;
                edges.push((node, child));
                next.push((child, s));
            }
        }
        frontier = next;
    }
    let tree = KripkeModel::new(labels, edges).expect("tree edges are in range");
    (tree, WorldId(0))
}

/// Adds a copy of `w` with the same label and successors, reachable from
/// every predecessor of `w`. Returns the new model and the copy's id. The
/// identity plus `(w, copy)` is a bisimulation between old and new model.
pub fn duplicate_world(m: &KripkeModel, w: WorldId) -> (KripkeModel, WorldId) {
    let copy = m.world_count();
    let mut labels: Vec<BTreeSet<VarId>> = m.worlds().map(|v| m.label(v).clone()).collect();
    labels.push(m.label(w).clone());
    let mut edges: Vec<(usize, usize)> = m.edges().map(|(a, b)| (a.index(), b.index())).collect();
    for (a, b) in m.edges() {
        if b == w {
            edges.push((a.index(), copy));
        }
        if a == w {
            edges.push((copy, b.index()));
        }
    }
    if m.has_edge(w, w) {
        edges.push((copy, copy));
    }
    let out = KripkeModel::new(labels, edges).expect("copy edges are in range");
    (out, WorldId::from(copy))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvarianceVerdict {
    /// Both sides give the same verdict.
    Invariant(bool),
    /// The verdicts differ, and the formula uses atoms without a first-order
    /// definition, which are not expected to be invariant.
    ExpectedNonInvariance { atoms: Vec<String>, left: bool, right: bool },
    /// The verdicts differ although every atom is first-order definable.
    Counterexample { left: bool, right: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvarianceError {
    #[error("the teams are not bisimilar over the formula's variables")]
    NotBisimilar,
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Atoms in `f` that lack a first-order definition at the width used.
fn undefinable_atoms(f: &Formula) -> Vec<String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if let Formula::GenAtom { atom, args } = g {
            let definable = builtin_registry()
                .get(atom)
                .is_some_and(|a| a.fo_definition(args.len()).is_some());
            if !definable {
                out.insert(atom.clone(), ());
            }
        }
        stack.extend(g.children());
    }
    out.into_keys().collect()
}

/// Checks `f` on both sides of a pair of teams that are bisimilar over the
/// variables of `f`.
pub fn check_invariance(
    m: &KripkeModel,
    t: &Team,
    m2: &KripkeModel,
    t2: &Team,
    f: &Formula,
) -> Result<InvarianceVerdict, InvarianceError> {
    let vars: Vec<VarId> = f.variables().into_iter().collect();
    let z = largest_bisimulation(m, m2, &vars);
    if !teams_bisimilar(&z, t, t2) {
        return Err(InvarianceError::NotBisimilar);
    }
    let left = check(m, t, f, CheckConfig::default())?;
    let right = check(m2, t2, f, CheckConfig::default())?;
    if left == right {
        return Ok(InvarianceVerdict::Invariant(left));
    }
    let atoms = undefinable_atoms(f);
    Ok(if atoms.is_empty() {
        InvarianceVerdict::Counterexample { left, right }
    } else {
        InvarianceVerdict::ExpectedNonInvariance { atoms, left, right }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, vars};

    fn chain() -> KripkeModel {
        KripkeModel::builder(2).edge(0, 1).build().unwrap()
    }

    fn fork() -> KripkeModel {
        KripkeModel::builder(3).edge(0, 1).edge(0, 2).build().unwrap()
    }

    fn w(i: u32) -> WorldId {
        WorldId(i)
    }

    #[test]
    fn example_pair() {
        let z = largest_bisimulation(&chain(), &fork(), &vars(&["x"]));
        for (a, b) in [(0, 0), (1, 1), (1, 2)] {
            assert!(z.contains(w(a), w(b)));
        }
        assert!(z.is_bisimulation(&chain(), &fork(), &vars(&["x"])));
        assert!(teams_bisimilar(&z, &Team::from_indices([0]), &Team::from_indices([0])));
        assert!(teams_bisimilar(&z, &Team::empty(), &Team::empty()));
        assert!(!teams_bisimilar(&z, &Team::empty(), &Team::from_indices([0])));

        let f = parse("[]D[zero](x)").unwrap();
        let v = check_invariance(&chain(), &Team::from_indices([0]), &fork(), &Team::from_indices([0]), &f).unwrap();
        assert_eq!(
            v,
            InvarianceVerdict::ExpectedNonInvariance {
                atoms: vec!["zero".into()],
                left: true,
                right: false
            }
        );
    }

    #[test]
    fn identity_and_label_mismatch() {
        let m = fork();
        let z = largest_bisimulation(&m, &m, &[]);
        assert!(m.worlds().all(|v| z.contains(v, v)));
        let a = KripkeModel::builder(1).label(0, &["p"]).build().unwrap();
        let b = KripkeModel::builder(1).build().unwrap();
        assert!(largest_bisimulation(&a, &b, &vars(&["p"])).is_empty());
    }

    #[test]
    fn unfold_loop() {
        let m = KripkeModel::builder(1).label(0, &["p"]).edge(0, 0).build().unwrap();
        let (t, root) = unfold(&m, w(0), 2);
        assert_eq!(t.world_count(), 3);
        assert_eq!(t.edges().count(), 2);
        assert!(t.worlds().all(|v| t.holds(v, &crate::formula::var("p"))));
        assert_eq!(root, w(0));
        let (single, _) = unfold(&m, w(0), 0);
        assert_eq!(single.world_count(), 1);
        assert_eq!(single.edge_count(), 0);
    }

    #[test]
    fn duplication_is_bisimilar() {
        let m = KripkeModel::builder(3)
            .label(1, &["p"])
            .edge(0, 1)
            .edge(1, 1)
            .edge(1, 2)
            .build()
            .unwrap();
        let (d, copy) = duplicate_world(&m, w(1));
        let z = largest_bisimulation(&m, &d, &vars(&["p"]));
        assert!(z.contains(w(1), copy));
        assert!(m.worlds().all(|v| z.contains(v, v)));
        let f = parse("<>(p & <>~p) & []indep(p ; ; p)").unwrap();
        assert!(matches!(
            check_invariance(&m, &Team::from_indices([0]), &d, &Team::from_indices([0]), &f),
            Ok(InvarianceVerdict::Invariant(_))
        ));
        assert_eq!(
            check_invariance(&m, &Team::from_indices([0]), &d, &Team::from_indices([2]), &f),
            Err(InvarianceError::NotBisimilar)
        );
    }
}
