//! EFX feasibility graph over the working bundles, robust demand, and the
//! prioritized matching shared by both donation algorithms.
//!
//! Agent `i` and slot `j` are adjacent when `Z_j` clears every EFX threshold
//! of `i` (the value of any bundle minus `i`'s least valued item in it), and,
//! off the diagonal, when `i` strictly prefers `Z_j` to `Z_i`.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::efx_threshold;
use crate::model::{AgentId, Allocation, Bundle, Instance, ItemId};
use crate::rational::Rational;

/// The evolving bundles `Z`, tied to the allocation they started from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingBundles {
    bundles: Vec<Bundle>,
    origin: Allocation,
    removed: Vec<Vec<ItemId>>,
}

impl WorkingBundles {
    pub fn new(origin: &Allocation) -> Self {
        WorkingBundles {
            bundles: origin.bundles().to_vec(),
            origin: origin.clone(),
            removed: vec![Vec::new(); origin.agents()],
        }
    }

    pub fn slots(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, slot: usize) -> &Bundle {
        &self.bundles[slot]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn origin(&self) -> &Allocation {
        &self.origin
    }

    pub fn removed(&self, slot: usize) -> &[ItemId] {
        &self.removed[slot]
    }

    pub fn is_touched(&self, slot: usize) -> bool {
        !self.removed[slot].is_empty()
    }

    pub fn touched(&self) -> Vec<usize> {
        (0..self.slots()).filter(|&j| self.is_touched(j)).collect()
    }

    pub fn remove(&mut self, slot: usize, item: ItemId) -> Result<()> {
        if !self.bundles[slot].remove(item) {
            return Err(Error::invalid(format!("item {item} is not in slot {slot}")));
        }
        self.removed[slot].push(item);
        Ok(())
    }

    pub fn total_items(&self) -> usize {
        self.bundles.iter().map(Bundle::len).sum()
    }

    /// The bundles as an allocation where slot `j` goes to agent `j`.
    pub fn as_allocation(&self) -> Allocation {
        Allocation::new(self.bundles.clone(), self.origin.items())
            .expect("working bundles stay disjoint")
    }

    /// The bundles reassigned along a perfect matching.
    pub fn assign(&self, matching: &Matching) -> Allocation {
        let bundles = (0..self.slots())
            .map(|agent| {
                matching
                    .slot_of(agent)
                    .map(|s| self.bundles[s].clone())
                    .unwrap_or_default()
            })
            .collect();
        Allocation::new(bundles, self.origin.items()).expect("matching is injective")
    }
}

/// Per-agent views of the working bundles, computed once per round.
struct Valuations {
    /// `values[i][j] = v_i(Z_j)`
    values: Vec<Vec<Rational>>,
    /// `thresholds[i] = max_k max_{g in Z_k} v_i(Z_k \ {g})`
    thresholds: Vec<Rational>,
}

impl Valuations {
    fn new(inst: &Instance, z: &WorkingBundles) -> Self {
        let n = z.slots();
        let mut values = Vec::with_capacity(n);
        let mut thresholds = Vec::with_capacity(n);
        for i in 0..n {
            values.push(
                z.bundles
                    .iter()
                    .map(|b| inst.value_of(i, b))
                    .collect::<Vec<_>>(),
            );
            thresholds.push(
                z.bundles
                    .iter()
                    .map(|b| efx_threshold(inst, i, b.items()))
                    .max()
                    .unwrap_or_default(),
            );
        }
        Valuations { values, thresholds }
    }

    fn edge(&self, i: AgentId, j: usize) -> bool {
        self.values[i][j] >= self.thresholds[i] && (i == j || self.values[i][j] > self.values[i][i])
    }
}

pub fn efx_feasible(inst: &Instance, z: &WorkingBundles, agent: AgentId, slot: usize) -> bool {
    let value = inst.value_of(agent, z.bundle(slot));
    z.bundles
        .iter()
        .all(|b| value >= efx_threshold(inst, agent, b.items()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityGraph {
    n: usize,
    adjacency: Vec<Vec<bool>>,
}

impl FeasibilityGraph {
    pub fn from_edges(n: usize, edges: &[(AgentId, usize)]) -> Self {
        let mut adjacency = vec![vec![false; n]; n];
        for &(i, j) in edges {
            adjacency[i][j] = true;
        }
        FeasibilityGraph { n, adjacency }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, agent: AgentId, slot: usize) -> bool {
        self.adjacency[agent][slot]
    }

    pub fn edges(&self) -> Vec<(AgentId, usize)> {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[i][j])
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&e| e).count()
    }
}

pub fn build_graph(inst: &Instance, z: &WorkingBundles) -> FeasibilityGraph {
    let n = z.slots();
    let vals = Valuations::new(inst, z);
    FeasibilityGraph {
        n,
        adjacency: (0..n)
            .map(|i| (0..n).map(|j| vals.edge(i, j)).collect())
            .collect(),
    }
}

/// Partial injective agent-to-slot assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    slot_of: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching {
            slot_of: vec![None; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(AgentId, usize)]) -> Result<Self> {
        let mut m = Matching::empty(n);
        for &(a, s) in pairs {
            if a >= n || s >= n || m.slot_of[a].is_some() || m.agent_of(s).is_some() {
                return Err(Error::invalid(format!(
                    "pair ({a}, {s}) breaks injectivity"
                )));
            }
            m.slot_of[a] = Some(s);
        }
        Ok(m)
    }

    pub fn slot_of(&self, agent: AgentId) -> Option<usize> {
        self.slot_of[agent]
    }

    pub fn agent_of(&self, slot: usize) -> Option<AgentId> {
        self.slot_of.iter().position(|&s| s == Some(slot))
    }

    /// Pairs sorted by agent.
    pub fn pairs(&self) -> Vec<(AgentId, usize)> {
        self.slot_of
            .iter()
            .enumerate()
            .filter_map(|(a, s)| s.map(|s| (a, s)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.slot_of.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_perfect(&self) -> bool {
        self.slot_of.iter().all(Option::is_some)
    }

    pub fn is_identity(&self) -> bool {
        self.slot_of.iter().enumerate().all(|(a, &s)| s == Some(a))
    }

    /// Number of pairs `(i, i)`.
    pub fn identity_pairs(&self) -> usize {
        self.pairs().iter().filter(|(a, s)| a == s).count()
    }

    pub fn unmatched_agents(&self) -> Vec<AgentId> {
        (0..self.slot_of.len())
            .filter(|&a| self.slot_of[a].is_none())
            .collect()
    }

    pub fn unmatched_slots(&self) -> Vec<usize> {
        let n = self.slot_of.len();
        (0..n).filter(|&s| self.agent_of(s).is_none()).collect()
    }

    pub fn unassign(&mut self, agent: AgentId) {
        self.slot_of[agent] = None;
    }

    pub fn assign(&mut self, agent: AgentId, slot: usize) {
        debug_assert!(self.agent_of(slot).is_none());
        self.slot_of[agent] = Some(slot);
    }

    pub fn is_subgraph_of(&self, g: &FeasibilityGraph) -> bool {
        self.pairs().iter().all(|&(a, s)| g.has_edge(a, s))
    }
}

/// Robust demand of `agent`: the slot maximizing `max_c v_i(Z_j \ {c})`
/// (lowest slot on ties) and the agent's least valued item in it (lowest id
/// on ties). Empty bundles are never demanded.
pub fn robust_demand(
    inst: &Instance,
    z: &WorkingBundles,
    agent: AgentId,
) -> Result<(usize, ItemId)> {
    let mut best: Option<(usize, Rational)> = None;
    for (j, b) in z.bundles.iter().enumerate() {
        if b.is_empty() {
            continue;
        }
        let score = efx_threshold(inst, agent, b.items());
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((j, score));
        }
    }
    let (slot, _) = best.ok_or(Error::NoDemand { agent })?;
    let bundle = z.bundle(slot);
    let mut least = bundle.items()[0];
    for &g in &bundle.items()[1..] {
        if inst.value(agent, g) < inst.value(agent, least) {
            least = g;
        }
    }
    Ok((slot, least))
}

/// Edge weight realizing the priorities: cover touched slots, then keep
/// agents on their own slots, then maximize size.
fn weight(n: usize, agent: AgentId, slot: usize, touched: &[bool]) -> i64 {
    let n = n as i64;
    let mut w = 1;
    if agent == slot {
        w += n * n;
    }
    if touched[slot] {
        w += n * n * n * n;
    }
    w
}

/// Maximum-weight matching with the lexicographically smallest pair list
/// among all maximum-weight matchings. Errors when touched slots cannot all
/// be covered.
pub fn priority_matching(g: &FeasibilityGraph, touched: &[usize]) -> Result<Matching> {
    let n = g.size();
    let mut is_touched = vec![false; n];
    for &s in touched {
        is_touched[s] = true;
    }
    let w: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if g.has_edge(i, j) {
                        weight(n, i, j, &is_touched)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();

    let target = constrained_max(&w, &[], &vec![false; n]);
    let mut chosen: Vec<(AgentId, usize)> = Vec::new();
    let mut banned = vec![false; n];
    let mut next_agent = 0;
    #[allow(clippy::mut_range_bound)] // the labeled continue restarts the scan
    'extend: while next_agent < n {
        for a in next_agent..n {
            for s in 0..n {
                if w[a][s] == 0 || chosen.iter().any(|&(_, t)| t == s) {
                    continue;
                }
                chosen.push((a, s));
                if constrained_max(&w, &chosen, &banned) == target {
                    next_agent = a + 1;
                    continue 'extend;
                }
                chosen.pop();
            }
            // No optimal matching extends the prefix with agent `a` matched.
            banned[a] = true;
        }
        break;
    }

    let matching = Matching::from_pairs(n, &chosen)?;
    let uncovered: Vec<usize> = touched
        .iter()
        .copied()
        .filter(|&s| matching.agent_of(s).is_none())
        .collect();
    if !uncovered.is_empty() {
        return Err(Error::Uncoverable { uncovered });
    }
    Ok(matching)
}

/// Best total weight of a matching containing `forced` and avoiding
/// `banned` agents. Non-edges carry weight 0, so an optimal assignment of
/// the remaining square matrix is an optimal matching once zero entries are
/// dropped.
fn constrained_max(w: &[Vec<i64>], forced: &[(AgentId, usize)], banned: &[bool]) -> i64 {
    let n = w.len();
    let fixed: i64 = forced.iter().map(|&(a, s)| w[a][s]).sum();
    let agents: Vec<usize> = (0..n)
        .filter(|a| !forced.iter().any(|f| f.0 == *a))
        .collect();
    let slots: Vec<usize> = (0..n)
        .filter(|s| !forced.iter().any(|f| f.1 == *s))
        .collect();
    if agents.is_empty() {
        return fixed;
    }
    let rows: Vec<Vec<i64>> = agents
        .iter()
        .map(|&a| {
            slots
                .iter()
                .map(|&s| if banned[a] { 0 } else { w[a][s] })
                .collect()
        })
        .collect();
    let matrix = Matrix::from_rows(rows).expect("square weight matrix");
    let (total, _) = kuhn_munkres(&matrix);
    fixed + total
}
