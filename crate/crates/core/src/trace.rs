use serde::{Deserialize, Serialize};

use crate::model::{AgentId, ItemId};

/// One donated item: `agent`'s robust demand was `slot`, and `item` left it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub agent: AgentId,
    pub slot: usize,
    pub item: ItemId,
}

/// A matching edge `(released, slot)` replaced by `(taker, slot)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Swap {
    pub released: AgentId,
    pub taker: AgentId,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub edges: usize,
    /// `(agent, slot)` pairs as computed at the start of the round.
    pub matching: Vec<(AgentId, usize)>,
    pub touched: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swaps: Vec<Swap>,
    pub removal: Option<Removal>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn removals(&self) -> impl Iterator<Item = &Removal> {
        self.rounds.iter().filter_map(|r| r.removal.as_ref())
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}
