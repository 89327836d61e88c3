//! EF, EF1 and EFX checks with lexicographically first witnesses.
//!
//! An empty envied bundle contributes threshold 0 for EF1 and EFX. Donated
//! items are ignored; only the bundles are compared.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::model::{AgentId, Allocation, Instance, ItemId};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fairness {
    Ef,
    Ef1,
    Efx,
}

/// `envier` prefers `envied`'s bundle even after `item` is taken out of it
/// (no item for EF).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub envier: AgentId,
    pub envied: AgentId,
    pub item: Option<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl FairnessVerdict {
    fn pass() -> Self {
        FairnessVerdict {
            holds: true,
            witness: None,
        }
    }

    fn fail(witness: Witness) -> Self {
        FairnessVerdict {
            holds: false,
            witness: Some(witness),
        }
    }
}

impl Witness {
    /// Re-evaluates the defining inequality at this witness.
    pub fn reproduces(&self, inst: &Instance, alloc: &Allocation, notion: Fairness) -> bool {
        let own = alloc.value(inst, self.envier);
        let bundle = alloc.bundle(self.envied);
        let envied_value = inst.value_of(self.envier, bundle);
        match (notion, self.item) {
            (Fairness::Ef, None) => own < envied_value,
            (Fairness::Ef1, Some(g)) => {
                // `g` must be the envier's most valued item in the bundle, so
                // removing any item leaves the envy in place.
                bundle.contains(g)
                    && bundle
                        .iter()
                        .all(|&h| inst.value(self.envier, h) <= inst.value(self.envier, g))
                    && own < envied_value - inst.value(self.envier, g)
            }
            (Fairness::Efx, Some(g)) => {
                bundle.contains(g) && own < envied_value - inst.value(self.envier, g)
            }
            _ => false,
        }
    }
}

pub fn check(inst: &Instance, alloc: &Allocation, notion: Fairness) -> FairnessVerdict {
    let n = alloc.agents();
    for i in 0..n {
        let own = alloc.value(inst, i);
        for j in (0..n).filter(|&j| j != i) {
            let bundle = alloc.bundle(j);
            if bundle.is_empty() {
                continue;
            }
            let envied = inst.value_of(i, bundle);
            if own >= envied {
                continue;
            }
            match notion {
                Fairness::Ef => {
                    return FairnessVerdict::fail(Witness {
                        envier: i,
                        envied: j,
                        item: None,
                    })
                }
                Fairness::Ef1 => {
                    let best = most_valued(inst, i, bundle.items());
                    if own < &envied - inst.value(i, best) {
                        return FairnessVerdict::fail(Witness {
                            envier: i,
                            envied: j,
                            item: Some(best),
                        });
                    }
                }
                Fairness::Efx => {
                    let gap: Rational = &envied - &own;
                    if let Some(&g) = bundle.iter().find(|&&g| inst.value(i, g) < &gap) {
                        return FairnessVerdict::fail(Witness {
                            envier: i,
                            envied: j,
                            item: Some(g),
                        });
                    }
                }
            }
        }
    }
    FairnessVerdict::pass()
}

pub fn check_ef(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    check(inst, alloc, Fairness::Ef)
}

pub fn check_ef1(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    check(inst, alloc, Fairness::Ef1)
}

pub fn check_efx(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    check(inst, alloc, Fairness::Efx)
}

/// Highest-valued item of a nonempty list for `agent`, lowest id on ties.
fn most_valued(inst: &Instance, agent: AgentId, items: &[ItemId]) -> ItemId {
    let mut best = items[0];
    for &g in &items[1..] {
        if inst.value(agent, g) > inst.value(agent, best) {
            best = g;
        }
    }
    best
}

/// Largest `v_i(B \ {g})` over `g` in `B`; zero for an empty bundle.
pub fn efx_threshold(inst: &Instance, agent: AgentId, items: &[ItemId]) -> Rational {
    match items.iter().map(|&g| inst.value(agent, g)).min() {
        Some(least) => inst.value_of(agent, items) - least,
        None => Rational::zero(),
    }
}
