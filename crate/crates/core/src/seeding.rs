//! Starting allocations: exact optima, a round-robin draft, a hill climber on
//! Nash welfare, and a deliberate degradation of a given allocation.

use serde::{Deserialize, Serialize};

use crate::alg1::require_complete;
use crate::error::Result;
use crate::model::{AgentId, Allocation, Instance, ItemId};
use crate::oracle::{opt_bruteforce, OracleConfig};
use crate::rational::Rational;
use crate::welfare::nw_pow_n;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMethod {
    Oracle,
    LocalSearch,
    RoundRobin,
    Perturbed,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedReport {
    pub allocation: Allocation,
    pub pow_n: Rational,
    pub method: SeedMethod,
    pub moves: usize,
}

impl SeedReport {
    pub fn new(inst: &Instance, allocation: Allocation, method: SeedMethod, moves: usize) -> Self {
        SeedReport {
            pow_n: nw_pow_n(inst, &allocation),
            allocation,
            method,
            moves,
        }
    }
}

pub fn oracle_seed(inst: &Instance, cfg: OracleConfig) -> Result<SeedReport> {
    let all = (0..inst.items()).collect();
    let best = opt_bruteforce(inst, &all, cfg)?;
    Ok(SeedReport {
        allocation: best.argmax,
        pow_n: best.best_pow_n,
        method: SeedMethod::Oracle,
        moves: 0,
    })
}

/// Agents pick in turn `0, 1, ..., n-1, 0, ...`, each taking its most valued
/// remaining item (lowest id on ties).
pub fn round_robin_seed(inst: &Instance) -> SeedReport {
    let n = inst.agents();
    let m = inst.items();
    let mut owners: Vec<Option<AgentId>> = vec![None; m];
    for turn in 0..m {
        let agent = turn % n;
        let mut pick: Option<ItemId> = None;
        for g in (0..m).filter(|&g| owners[g].is_none()) {
            if pick.is_none_or(|p| inst.value(agent, g) > inst.value(agent, p)) {
                pick = Some(g);
            }
        }
        owners[pick.expect("an item remains on every turn")] = Some(agent);
    }
    SeedReport::new(
        inst,
        Allocation::from_owners(&owners, n),
        SeedMethod::RoundRobin,
        0,
    )
}

/// First-improvement hill climbing on `nw_pow_n`. Neighbors are scanned in
/// a fixed order: single-item moves `(item, new owner)` first, then swaps
/// `(item, item')` of items held by different agents.
pub fn local_search_seed(inst: &Instance, start: &Allocation) -> Result<SeedReport> {
    require_complete(inst, start)?;
    let n = inst.agents();
    let m = inst.items();
    let mut owners: Vec<AgentId> = start
        .owners()
        .into_iter()
        .map(|o| o.expect("complete"))
        .collect();
    let mut current = product(inst, &owners);
    let mut moves = 0;
    'climb: loop {
        for g in 0..m {
            for a in 0..n {
                if a == owners[g] {
                    continue;
                }
                let old = owners[g];
                owners[g] = a;
                let p = product(inst, &owners);
                if p > current {
                    current = p;
                    moves += 1;
                    continue 'climb;
                }
                owners[g] = old;
            }
        }
        for g in 0..m {
            for h in g + 1..m {
                if owners[g] == owners[h] {
                    continue;
                }
                owners.swap(g, h);
                let p = product(inst, &owners);
                if p > current {
                    current = p;
                    moves += 1;
                    continue 'climb;
                }
                owners.swap(g, h);
            }
        }
        break;
    }
    Ok(SeedReport {
        allocation: to_allocation(&owners, n),
        pow_n: current,
        method: SeedMethod::LocalSearch,
        moves,
    })
}

/// Applies up to `steps` single-item moves, each time choosing the move
/// that lowers `nw_pow_n` the most while keeping it positive (first in scan
/// order on ties). Stops early when no such move exists.
pub fn perturbed_seed(inst: &Instance, start: &Allocation, steps: usize) -> Result<SeedReport> {
    require_complete(inst, start)?;
    let n = inst.agents();
    let m = inst.items();
    let mut owners: Vec<AgentId> = start
        .owners()
        .into_iter()
        .map(|o| o.expect("complete"))
        .collect();
    let mut current = product(inst, &owners);
    let mut moves = 0;
    for _ in 0..steps {
        let mut best: Option<(ItemId, AgentId, Rational)> = None;
        for g in 0..m {
            for a in 0..n {
                if a == owners[g] {
                    continue;
                }
                let old = owners[g];
                owners[g] = a;
                let p = product(inst, &owners);
                owners[g] = old;
                let positive = p > Rational::default();
                if positive && p < current && best.as_ref().is_none_or(|(_, _, b)| p < *b) {
                    best = Some((g, a, p));
                }
            }
        }
        let Some((g, a, p)) = best else { break };
        owners[g] = a;
        current = p;
        moves += 1;
    }
    Ok(SeedReport {
        allocation: to_allocation(&owners, n),
        pow_n: current,
        method: SeedMethod::Perturbed,
        moves,
    })
}

fn to_allocation(owners: &[AgentId], n: usize) -> Allocation {
    let owners: Vec<Option<AgentId>> = owners.iter().map(|&a| Some(a)).collect();
    Allocation::from_owners(&owners, n)
}

fn product(inst: &Instance, owners: &[AgentId]) -> Rational {
    let mut values = vec![Rational::default(); inst.agents()];
    for (g, &a) in owners.iter().enumerate() {
        values[a] += inst.value(a, g);
    }
    values.into_iter().product()
}
