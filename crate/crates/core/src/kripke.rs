//! Finite Kripke structures, teams, and the successor-team algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::VarId;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldId(pub u32);

impl WorldId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for WorldId {
    fn from(i: usize) -> Self {
        WorldId(u32::try_from(i).expect("world index fits in u32"))
    }
}

impl fmt::Debug for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    NoWorlds,
    #[error("world id {0} declared twice")]
    DuplicateWorld(u32),
    #[error("world ids must be 0..{count}; {missing} is missing")]
    MissingWorld { count: usize, missing: u32 },
    #[error("edge ({from}, {to}) references an undeclared world")]
    DanglingEdge { from: u32, to: u32 },
    #[error("team member {0} is not a world of the model")]
    TeamOutOfRange(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A finite Kripke structure `(W, R, π)` with `W = {0, …, n-1}`.
///
/// Labels are kept both as name sets and as bit rows over the sorted
/// vocabulary of all names that occur in some label.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KripkeModel {
    labels: Vec<BTreeSet<VarId>>,
    succ: Vec<Vec<WorldId>>,
    pred_count: usize,
    vocab: Vec<VarId>,
    bits: Vec<Vec<u64>>,
}

impl KripkeModel {
    pub fn new<E>(labels: Vec<BTreeSet<VarId>>, edges: E) -> Result<Self, ModelError>
    where
        E: IntoIterator<Item = (usize, usize)>,
    {
        let n = labels.len();
        if n == 0 {
            return Err(ModelError::NoWorlds);
        }
        let mut succ = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::DanglingEdge {
                    from: a as u32,
                    to: b as u32,
                });
            }
            succ[a].push(WorldId::from(b));
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let vocab: Vec<VarId> = labels
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let words = vocab.len().div_ceil(64).max(1);
        let bits = labels
            .iter()
            .map(|l| {
                let mut row = vec![0u64; words];
                for v in l {
                    let i = vocab.binary_search(v).expect("vocab covers labels");
                    row[i / 64] |= 1 << (i % 64);
                }
                row
            })
            .collect();
        let pred_count = succ.iter().map(Vec::len).sum();
        Ok(KripkeModel {
            labels,
            succ,
            pred_count,
            vocab,
            bits,
        })
    }

    pub fn builder(worlds: usize) -> ModelBuilder {
        ModelBuilder {
            labels: vec![BTreeSet::new(); worlds],
            edges: Vec::new(),
        }
    }

    pub fn world_count(&self) -> usize {
        self.labels.len()
    }

    pub fn worlds(&self) -> impl Iterator<Item = WorldId> {
        (0..self.labels.len()).map(WorldId::from)
    }

    pub fn contains_world(&self, w: WorldId) -> bool {
        w.index() < self.labels.len()
    }

    pub fn successors(&self, w: WorldId) -> &[WorldId] {
        &self.succ[w.index()]
    }

    pub fn has_edge(&self, from: WorldId, to: WorldId) -> bool {
        self.succ[from.index()].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.pred_count
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (WorldId, WorldId)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (WorldId::from(a), b)))
    }

    pub fn label(&self, w: WorldId) -> &BTreeSet<VarId> {
        &self.labels[w.index()]
    }

    pub fn holds(&self, w: WorldId, v: &VarId) -> bool {
        self.labels[w.index()].contains(v)
    }

    /// Sorted set of all variables true somewhere in the model.
    pub fn vocabulary(&self) -> &[VarId] {
        &self.vocab
    }

    /// Position of `v` in [`Self::vocabulary`]; `None` means `v` is false everywhere.
    pub fn var_index(&self, v: &VarId) -> Option<usize> {
        self.vocab.binary_search(v).ok()
    }

    pub fn holds_index(&self, w: WorldId, index: usize) -> bool {
        self.bits[w.index()][index / 64] >> (index % 64) & 1 == 1
    }

    /// `w ≡ w2` over `vars`: both worlds make the same members of `vars` true.
    pub fn agree(&self, w: WorldId, w2: WorldId, vars: &[VarId]) -> bool {
        vars.iter().all(|v| self.holds(w, v) == self.holds(w2, v))
    }

    pub fn validate_team(&self, t: &Team) -> Result<(), ModelError> {
        match t.iter().find(|w| !self.contains_world(*w)) {
            Some(w) => Err(ModelError::TeamOutOfRange(w.0)),
            None => Ok(()),
        }
    }

    pub fn full_team(&self) -> Team {
        Team::from_sorted_unchecked(self.worlds().collect())
    }

    /// A copy of this model with `removed` deleted and the remaining worlds
    /// renumbered densely in their original order. Returns `None` if that
    /// would leave no world.
    pub fn without_world(&self, removed: WorldId) -> Option<(KripkeModel, Vec<Option<WorldId>>)> {
        if self.world_count() <= 1 {
            return None;
        }
        let mut remap = Vec::with_capacity(self.world_count());
        let mut next = 0usize;
        for w in self.worlds() {
            if w == removed {
                remap.push(None);
            } else {
                remap.push(Some(WorldId::from(next)));
                next += 1;
            }
        }
        let labels = self
            .worlds()
            .filter(|&w| w != removed)
            .map(|w| self.label(w).clone())
            .collect();
        let edges = self.edges().filter_map(|(a, b)| {
            Some((remap[a.index()]?.index(), remap[b.index()]?.index()))
        });
        let m = KripkeModel::new(labels, edges).expect("remapped edges stay in range");
        Some((m, remap))
    }
}

pub struct ModelBuilder {
    labels: Vec<BTreeSet<VarId>>,
    edges: Vec<(usize, usize)>,
}

impl ModelBuilder {
    pub fn label(mut self, w: usize, props: &[&str]) -> Self {
        self.labels[w].extend(props.iter().map(|p| crate::formula::var(p)));
        self
    }

    pub fn label_vars<I: IntoIterator<Item = VarId>>(mut self, w: usize, props: I) -> Self {
        self.labels[w].extend(props);
        self
    }

    pub fn edge(mut self, from: usize, to: usize) -> Self {
        self.edges.push((from, to));
        self
    }

    pub fn build(self) -> Result<KripkeModel, ModelError> {
        KripkeModel::new(self.labels, self.edges)
    }
}

/// A set of worlds, stored sorted and without duplicates so equal teams have
/// equal representations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<WorldId>", into = "Vec<WorldId>")]
pub struct Team(Vec<WorldId>);

impl From<Vec<WorldId>> for Team {
    fn from(v: Vec<WorldId>) -> Self {
        Team::from_worlds(v)
    }
}

impl From<Team> for Vec<WorldId> {
    fn from(t: Team) -> Self {
        t.0
    }
}

impl FromIterator<WorldId> for Team {
    fn from_iter<I: IntoIterator<Item = WorldId>>(iter: I) -> Self {
        Team::from_worlds(iter)
    }
}

impl Team {
    pub fn empty() -> Team {
        Team(Vec::new())
    }

    pub fn singleton(w: WorldId) -> Team {
        Team(vec![w])
    }

    pub fn from_worlds<I: IntoIterator<Item = WorldId>>(ws: I) -> Team {
        let mut v: Vec<WorldId> = ws.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Team(v)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(ws: I) -> Team {
        Team::from_worlds(ws.into_iter().map(WorldId::from))
    }

    pub(crate) fn from_sorted_unchecked(v: Vec<WorldId>) -> Team {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Team(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn members(&self) -> &[WorldId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = WorldId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, w: WorldId) -> bool {
        self.0.binary_search(&w).is_ok()
    }

    pub fn is_subset_of(&self, other: &Team) -> bool {
        self.0.iter().all(|w| other.contains(*w))
    }

    pub fn union(&self, other: &Team) -> Team {
        Team::from_worlds(self.iter().chain(other.iter()))
    }

    /// Sub-team selected by a bitmask over member positions.
    pub fn select(&self, mask: u64) -> Team {
        Team(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, w)| *w)
                .collect(),
        )
    }

    /// All sub-teams, in order of their membership bitmask.
    pub fn subteams(&self) -> impl Iterator<Item = Team> + '_ {
        assert!(self.len() < 64, "team too large to enumerate sub-teams");
        (0..1u64 << self.len()).map(move |m| self.select(m))
    }
}

impl fmt::Debug for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", w.0)?;
        }
        write!(f, "}}")
    }
}

/// `R[T]`: every world with a predecessor in `t`.
pub fn succ_team(m: &KripkeModel, t: &Team) -> Team {
    Team::from_worlds(t.iter().flat_map(|w| m.successors(w).iter().copied()))
}

/// Lazily enumerates the legal successor teams of `t`: the sub-teams `T'` of
/// `R[t]` in which every member of `t` has at least one successor.
///
/// Teams come out by increasing size, lexicographically within a size.
pub fn successor_teams<'a>(m: &'a KripkeModel, t: &Team) -> SuccessorTeams<'a> {
    SuccessorTeams::new(m, t)
}

pub struct SuccessorTeams<'a> {
    _model: &'a KripkeModel,
    candidates: Vec<WorldId>,
    /// For each candidate, the set of team positions it is a successor of.
    covers: Vec<Vec<u64>>,
    full: Vec<u64>,
    size: usize,
    combo: Vec<usize>,
    fresh: bool,
    exhausted: bool,
}

impl<'a> SuccessorTeams<'a> {
    fn new(m: &'a KripkeModel, t: &Team) -> Self {
        let candidates: Vec<WorldId> = succ_team(m, t).0;
        let words = t.len().div_ceil(64).max(1);
        let mut full = vec![0u64; words];
        for i in 0..t.len() {
            full[i / 64] |= 1 << (i % 64);
        }
        let index: BTreeMap<WorldId, usize> =
            candidates.iter().enumerate().map(|(i, w)| (*w, i)).collect();
        let mut covers = vec![vec![0u64; words]; candidates.len()];
        let mut stuck = false;
        for (pos, w) in t.iter().enumerate() {
            let succ = m.successors(w);
            if succ.is_empty() {
                stuck = true;
            }
            for s in succ {
                covers[index[s]][pos / 64] |= 1 << (pos % 64);
            }
        }
        let size = usize::from(!t.is_empty());
        SuccessorTeams {
            _model: m,
            candidates,
            covers,
            full,
            size,
            combo: Vec::new(),
            fresh: true,
            exhausted: stuck,
        }
    }

    fn covered(&self) -> bool {
        let mut acc = vec![0u64; self.full.len()];
        for &c in &self.combo {
            for (a, b) in acc.iter_mut().zip(&self.covers[c]) {
                *a |= *b;
            }
        }
        acc == self.full
    }

    /// Steps `combo` to the next `size`-combination, moving to the next size
    /// when the current one is used up.
    fn advance(&mut self) -> bool {
        let n = self.candidates.len();
        if self.fresh {
            self.fresh = false;
            if self.size > n {
                return false;
            }
            self.combo = (0..self.size).collect();
            return true;
        }
        let k = self.size;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.combo[i] < n - k + i {
                self.combo[i] += 1;
                for j in i + 1..k {
                    self.combo[j] = self.combo[j - 1] + 1;
                }
                return true;
            }
        }
        self.size += 1;
        if self.size > n {
            return false;
        }
        self.combo = (0..self.size).collect();
        true
    }
}

impl Iterator for SuccessorTeams<'_> {
    type Item = Team;

    fn next(&mut self) -> Option<Team> {
        if self.exhausted {
            return None;
        }
        loop {
            if !self.advance() {
                self.exhausted = true;
                return None;
            }
            if self.covered() {
                return Some(Team::from_sorted_unchecked(
                    self.combo.iter().map(|&i| self.candidates[i]).collect(),
                ));
            }
        }
    }
}

/// `π(w) ∩ vars = π(w2) ∩ vars`.
pub fn agree(m: &KripkeModel, w: WorldId, w2: WorldId, vars: &[VarId]) -> bool {
    m.agree(w, w2, vars)
}

#[derive(Serialize, Deserialize)]
struct WorldEntry {
    id: u32,
    props: Vec<VarId>,
}

/// On-disk model document: `{"worlds": [{"id", "props"}], "edges": [[from, to]], "team": [ids]}`.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    worlds: Vec<WorldEntry>,
    #[serde(default)]
    edges: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    team: Option<Vec<u32>>,
}

/// Reads a model document. A missing `team` field selects every world.
pub fn parse_model(text: &str) -> Result<(KripkeModel, Team), ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let n = file.worlds.len();
    let mut by_id: BTreeMap<u32, BTreeSet<VarId>> = BTreeMap::new();
    for entry in file.worlds {
        if by_id.insert(entry.id, entry.props.into_iter().collect()).is_some() {
            return Err(ModelError::DuplicateWorld(entry.id));
        }
    }
    let labels: Vec<BTreeSet<VarId>> = (0..n as u32)
        .map(|i| {
            by_id.remove(&i).ok_or(ModelError::MissingWorld {
                count: n,
                missing: i,
            })
        })
        .collect::<Result<_, _>>()?;
    let m = KripkeModel::new(
        labels,
        file.edges.iter().map(|&(a, b)| (a as usize, b as usize)),
    )?;
    let team = match file.team {
        Some(ids) => {
            let t = Team::from_worlds(ids.into_iter().map(WorldId));
            m.validate_team(&t)?;
            t
        }
        None => m.full_team(),
    };
    Ok((m, team))
}

/// Renders a model document; output is deterministic for equal inputs.
pub fn model_to_json(m: &KripkeModel, t: &Team) -> String {
    let file = ModelFile {
        worlds: m
            .worlds()
            .map(|w| WorldEntry {
                id: w.0,
                props: m.label(w).iter().cloned().collect(),
            })
            .collect(),
        edges: m.edges().map(|(a, b)| (a.0, b.0)).collect(),
        team: Some(t.iter().map(|w| w.0).collect()),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(KripkeModel, Team), ModelError> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub fn save_model(m: &KripkeModel, t: &Team, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut text = model_to_json(m, t);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
