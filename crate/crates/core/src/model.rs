//! Instances, bundles and (partial) allocations.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, Rational};

pub type AgentId = usize;
pub type ItemId = usize;

/// `n` agents with additive, strictly positive valuations over `m` items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<Vec<Rational>>,
    items: usize,
}

impl Instance {
    pub fn new(values: Vec<Vec<Rational>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("an instance needs at least one agent"));
        }
        let items = values[0].len();
        for (agent, row) in values.iter().enumerate() {
            if row.len() != items {
                return Err(Error::invalid(format!(
                    "agent {agent} values {} items, expected {items}",
                    row.len()
                )));
            }
            if let Some(item) = row.iter().position(|v| !v.is_positive()) {
                return Err(Error::invalid(format!(
                    "value of agent {agent} for item {item} is not strictly positive"
                )));
            }
        }
        Ok(Instance { values, items })
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| int(v)).collect())
                .collect(),
        )
    }

    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn value(&self, agent: AgentId, item: ItemId) -> &Rational {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: AgentId) -> &[Rational] {
        &self.values[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    /// Additive value of `items` for `agent`. Ids are assumed in range.
    pub fn value_of<'a, I>(&self, agent: AgentId, items: I) -> Rational
    where
        I: IntoIterator<Item = &'a ItemId>,
    {
        let row = &self.values[agent];
        items
            .into_iter()
            .fold(Rational::zero(), |acc, &g| acc + &row[g])
    }

    pub fn total_value(&self, agent: AgentId) -> Rational {
        self.values[agent].iter().sum()
    }

    pub fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent >= self.agents() {
            return Err(Error::invalid(format!(
                "agent {agent} out of range for {} agents",
                self.agents()
            )));
        }
        Ok(())
    }

    pub fn check_bundle(&self, bundle: &Bundle) -> Result<()> {
        match bundle.items().last() {
            Some(&g) if g >= self.items => Err(Error::invalid(format!(
                "item {g} out of range for {} items",
                self.items
            ))),
            _ => Ok(()),
        }
    }

    pub fn check_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.agents() != self.agents() || alloc.items() != self.items {
            return Err(Error::invalid(format!(
                "allocation shape {}x{} does not match instance {}x{}",
                alloc.agents(),
                alloc.items(),
                self.agents(),
                self.items
            )));
        }
        Ok(())
    }
}

/// A set of items, kept as a strictly increasing list of ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Bundle(Vec<ItemId>);

impl Bundle {
    /// Sorts `items`; duplicates are rejected.
    pub fn new(mut items: Vec<ItemId>) -> Result<Self> {
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("item {} listed twice", w[0])));
        }
        Ok(Bundle(items))
    }

    pub fn empty() -> Self {
        Bundle(Vec::new())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ItemId> {
        self.0.iter()
    }

    pub fn insert(&mut self, item: ItemId) -> bool {
        match self.0.binary_search(&item) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, item);
                true
            }
        }
    }

    pub fn remove(&mut self, item: ItemId) -> bool {
        match self.0.binary_search(&item) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        let mut items: Vec<ItemId> = self.0.iter().chain(other.0.iter()).copied().collect();
        items.sort_unstable();
        items.dedup();
        Bundle(items)
    }

    pub fn difference(&self, other: &Bundle) -> Bundle {
        Bundle(
            self.0
                .iter()
                .copied()
                .filter(|&g| !other.contains(g))
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &Bundle) -> bool {
        self.0.iter().all(|&g| other.contains(g))
    }
}

impl TryFrom<Vec<ItemId>> for Bundle {
    type Error = Error;

    fn try_from(items: Vec<ItemId>) -> Result<Self> {
        Bundle::new(items)
    }
}

impl From<Bundle> for Vec<ItemId> {
    fn from(b: Bundle) -> Self {
        b.0
    }
}

impl FromIterator<ItemId> for Bundle {
    fn from_iter<T: IntoIterator<Item = ItemId>>(iter: T) -> Self {
        let mut items: Vec<ItemId> = iter.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Bundle(items)
    }
}

impl<'a> IntoIterator for &'a Bundle {
    type Item = &'a ItemId;
    type IntoIter = std::slice::Iter<'a, ItemId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, g) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "}}")
    }
}

/// Ordered, pairwise-disjoint bundles over a subset of `[0, m)`; the items
/// no agent holds are the donated set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<Bundle>,
    items: usize,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>, items: usize) -> Result<Self> {
        let mut owner = vec![None; items];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &g in bundle {
                if g >= items {
                    return Err(Error::invalid(format!(
                        "item {g} in bundle {agent} is out of range for {items} items"
                    )));
                }
                if let Some(prev) = owner[g].replace(agent) {
                    return Err(Error::invalid(format!(
                        "item {g} is held by both agent {prev} and agent {agent}"
                    )));
                }
            }
        }
        Ok(Allocation { bundles, items })
    }

    pub fn from_lists<L: AsRef<[ItemId]>>(lists: &[L], items: usize) -> Result<Self> {
        let bundles = lists
            .iter()
            .map(|l| Bundle::new(l.as_ref().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bundles, items)
    }

    pub fn empty(agents: usize, items: usize) -> Self {
        Allocation {
            bundles: vec![Bundle::empty(); agents],
            items,
        }
    }

    /// Builds an allocation from an owner vector (`None` = donated).
    pub fn from_owners(owners: &[Option<AgentId>], agents: usize) -> Self {
        let mut bundles = vec![Vec::new(); agents];
        for (g, owner) in owners.iter().enumerate() {
            if let Some(a) = owner {
                bundles[*a].push(g);
            }
        }
        Allocation {
            bundles: bundles.into_iter().map(Bundle).collect(),
            items: owners.len(),
        }
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn bundle(&self, agent: AgentId) -> &Bundle {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn into_bundles(self) -> Vec<Bundle> {
        self.bundles
    }

    pub fn owner_of(&self, item: ItemId) -> Option<AgentId> {
        self.bundles.iter().position(|b| b.contains(item))
    }

    pub fn owners(&self) -> Vec<Option<AgentId>> {
        let mut owners = vec![None; self.items];
        for (a, b) in self.bundles.iter().enumerate() {
            for &g in b {
                owners[g] = Some(a);
            }
        }
        owners
    }

    pub fn allocated(&self) -> Bundle {
        self.bundles
            .iter()
            .flat_map(|b| b.iter().copied())
            .collect()
    }

    pub fn donated(&self) -> Bundle {
        let owners = self.owners();
        (0..self.items).filter(|&g| owners[g].is_none()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.bundles.iter().map(Bundle::len).sum::<usize>() == self.items
    }

    pub fn value(&self, inst: &Instance, agent: AgentId) -> Rational {
        inst.value_of(agent, self.bundles[agent].iter())
    }

    /// `true` iff every bundle here is a subset of the matching bundle in `other`.
    pub fn is_sub_allocation_of(&self, other: &Allocation) -> bool {
        self.bundles.len() == other.bundles.len()
            && self
                .bundles
                .iter()
                .zip(&other.bundles)
                .all(|(a, b)| a.is_subset(b))
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.bundles.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn instance_rejects_non_positive_and_ragged_rows() {
        assert!(Instance::from_integers(&[[1, 0]]).is_err());
        assert!(Instance::from_integers(&[[1, -2]]).is_err());
        assert!(Instance::new(vec![vec![int(1)], vec![int(1), int(2)]]).is_err());
        assert!(Instance::new(vec![]).is_err());
        let zero_items = Instance::new(vec![vec![], vec![]]).unwrap();
        assert_eq!((zero_items.agents(), zero_items.items()), (2, 0));
    }

    #[test]
    fn bundle_sorts_and_rejects_duplicates() {
        assert_eq!(Bundle::new(vec![3, 1, 2]).unwrap().items(), &[1, 2, 3]);
        assert!(Bundle::new(vec![1, 1]).is_err());
    }

    #[test]
    fn allocation_tracks_donated_items() {
        let a = Allocation::from_lists(&[vec![1], vec![0], vec![3]], 4).unwrap();
        assert_eq!(a.donated().items(), &[2]);
        assert_eq!(a.allocated().items(), &[0, 1, 3]);
        assert!(!a.is_complete());
        assert_eq!(a.owner_of(3), Some(2));
        assert!(Allocation::from_lists(&[vec![0], vec![0]], 2).is_err());
        assert!(Allocation::from_lists(&[vec![5]], 2).is_err());
    }

    #[test]
    fn value_of_sums_row_entries() {
        let inst = Instance::new(vec![vec![ratio(1, 2), ratio(1, 3)]]).unwrap();
        assert_eq!(inst.value_of(0, &[0, 1]), ratio(5, 6));
        assert_eq!(inst.total_value(0), ratio(5, 6));
    }
}
