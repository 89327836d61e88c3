//! Instance generators, large-market conditions, and EF1 completion of
//! donated items by envy-cycle elimination.
//!
//! Random values come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. Each value in `1..=max_value` is drawn from
//! `next_u64` by rejection: draws at or above the largest multiple of
//! `max_value` are discarded, the rest map to `1 + x % max_value`. Rows are
//! drawn agent by agent, items in increasing order.

use num_traits::{One, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alg1::require_complete;
use crate::error::{Error, Result};
use crate::model::{AgentId, Allocation, Bundle, Instance, ItemId};
use crate::rational::{int, Rational};

pub const LARGE_MARKET_MAX_VALUE: u64 = 20;
pub const LARGE_MARKET_ATTEMPTS: usize = 10_000;

/// Items `1..n-1` (0-based `0..n-2`) are worth 1 to everyone; agent `i`
/// (1-based) values item `2n-i` at `1-eps`; every other value is
/// `eps/(2n)`.
pub fn lower_bound_instance(n: usize, eps: &Rational) -> Result<Instance> {
    if n < 2 {
        return Err(Error::invalid(
            "the lower-bound family needs at least two agents",
        ));
    }
    if eps <= &Rational::zero() || eps >= &Rational::one() {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let m = 2 * n - 1;
    let small = eps / int(2 * n as i64);
    let big = Rational::one() - eps;
    let rows = (1..=n)
        .map(|i| {
            (1..=m)
                .map(|g| {
                    if g < n {
                        Rational::one()
                    } else if g == 2 * n - i {
                        big.clone()
                    } else {
                        small.clone()
                    }
                })
                .collect()
        })
        .collect();
    Instance::new(rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LargeMarketCheck {
    pub holds: bool,
    pub tightest_eps: Rational,
    /// `(agent, item)` attaining `tightest_eps`, first in scan order.
    pub witness: Option<(AgentId, ItemId)>,
    /// Agents with an empty bundle while other items are allocated.
    pub flagged_empty: Vec<AgentId>,
}

/// Largest `v_i(g) / v_i(M)` scaled by `n`.
pub fn check_large_market(inst: &Instance, eps: &Rational) -> LargeMarketCheck {
    let n = int(inst.agents() as i64);
    let all: Vec<ItemId> = (0..inst.items()).collect();
    let mut tightest = Rational::zero();
    let mut witness = None;
    for i in 0..inst.agents() {
        let total = inst.value_of(i, &all);
        for &g in &all {
            let r = &n * inst.value(i, g) / &total;
            if witness.is_none() || r > tightest {
                tightest = r;
                witness = Some((i, g));
            }
        }
    }
    LargeMarketCheck {
        holds: &tightest <= eps,
        tightest_eps: tightest,
        witness,
        flagged_empty: Vec::new(),
    }
}

/// Largest `v_i(g) / v_i(X_i)` over `g` in `X_i`. Empty bundles carry no
/// constraint and are flagged when other items are allocated.
pub fn check_large_market_wrt(
    inst: &Instance,
    x: &Allocation,
    eps: &Rational,
) -> Result<LargeMarketCheck> {
    require_complete(inst, x)?;
    let mut tightest = Rational::zero();
    let mut witness = None;
    let mut flagged_empty = Vec::new();
    for i in 0..x.agents() {
        let b = x.bundle(i);
        if b.is_empty() {
            if inst.items() > 0 {
                flagged_empty.push(i);
            }
            continue;
        }
        let own = inst.value_of(i, b);
        for &g in b {
            let r = inst.value(i, g) / &own;
            if witness.is_none() || r > tightest {
                tightest = r;
                witness = Some((i, g));
            }
        }
    }
    Ok(LargeMarketCheck {
        holds: &tightest <= eps,
        tightest_eps: tightest,
        witness,
        flagged_empty,
    })
}

/// `eps / (1 - ((n-1)/n) eps)`: the per-bundle parameter implied by the
/// per-total condition at an optimal allocation.
pub fn eps_convert(eps: &Rational, n: usize) -> Result<Rational> {
    if eps <= &Rational::zero() || eps > &Rational::one() || n == 0 {
        return Err(Error::Domain(format!(
            "eps_convert needs 0 < eps <= 1 and n >= 1, got {eps}, {n}"
        )));
    }
    let n = int(n as i64);
    let denom = Rational::one() - (&n - Rational::one()) / &n * eps;
    if denom <= Rational::zero() {
        return Err(Error::Domain("non-positive denominator".into()));
    }
    Ok(eps / denom)
}

/// Uniform draw from `1..=bound` by rejection on `next_u64`.
pub fn draw_value(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let limit = u64::MAX - u64::MAX % bound;
    loop {
        let x = rng.next_u64();
        if x < limit {
            return 1 + x % bound;
        }
    }
}

fn draw_row(rng: &mut ChaCha8Rng, m: usize, max_value: u64) -> Vec<Rational> {
    (0..m)
        .map(|_| Rational::from_integer(draw_value(rng, max_value).into()))
        .collect()
}

pub fn random_instance(n: usize, m: usize, max_value: u64, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 || max_value == 0 {
        return Err(Error::invalid("random instances need n, m, max_value >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance::new((0..n).map(|_| draw_row(&mut rng, m, max_value)).collect())
}

pub fn random_large_market_instance(
    n: usize,
    m: usize,
    eps: &Rational,
    seed: u64,
) -> Result<Instance> {
    random_large_market_instance_with(n, m, eps, LARGE_MARKET_MAX_VALUE, seed)
}

/// Rows are redrawn independently until each meets the per-total condition.
pub fn random_large_market_instance_with(
    n: usize,
    m: usize,
    eps: &Rational,
    max_value: u64,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || m == 0 || max_value == 0 {
        return Err(Error::invalid("random instances need n, m, max_value >= 1"));
    }
    if eps * int(m as i64) < int(n as i64) {
        return Err(Error::Generation(format!(
            "no valuation of {m} items satisfies the condition at {eps} for {n} agents"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr = int(n as i64);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut found = None;
        for _ in 0..LARGE_MARKET_ATTEMPTS {
            let row = draw_row(&mut rng, m, max_value);
            let total: Rational = row.iter().sum();
            let max = row.iter().max().expect("m >= 1");
            if &nr * max <= eps * &total {
                found = Some(row);
                break;
            }
        }
        match found {
            Some(row) => rows.push(row),
            None => {
                return Err(Error::Generation(format!(
                    "agent {i}: no row met the condition at {eps} in {LARGE_MARKET_ATTEMPTS} draws"
                )))
            }
        }
    }
    Instance::new(rows)
}

/// Gives every donated item away, lowest id first, each to the lowest-index
/// agent nobody envies, after rotating bundles along envy cycles until none
/// remain.
pub fn ef1_complete(inst: &Instance, y: &Allocation) -> Result<Allocation> {
    inst.check_allocation(y)?;
    let n = y.agents();
    let mut bundles: Vec<Bundle> = y.bundles().to_vec();
    for &g in y.donated().items() {
        while let Some(cycle) = envy_cycle(inst, &bundles) {
            let taken: Vec<Bundle> = cycle.iter().map(|&(_, j)| bundles[j].clone()).collect();
            for (&(i, _), b) in cycle.iter().zip(taken) {
                bundles[i] = b;
            }
        }
        let envied = envy_edges(inst, &bundles);
        let source = (0..n)
            .find(|&j| !(0..n).any(|i| envied[i][j]))
            .ok_or_else(|| Error::invariant("acyclic envy graph without a source", None))?;
        bundles[source].insert(g);
    }
    Allocation::new(bundles, y.items())
}

fn envy_edges(inst: &Instance, bundles: &[Bundle]) -> Vec<Vec<bool>> {
    let n = bundles.len();
    (0..n)
        .map(|i| {
            let own = inst.value_of(i, &bundles[i]);
            (0..n)
                .map(|j| j != i && inst.value_of(i, &bundles[j]) > own)
                .collect()
        })
        .collect()
}

/// A directed envy cycle as `(envier, envied)` edges, found by depth-first
/// search from agent 0 with neighbors in increasing order.
fn envy_cycle(inst: &Instance, bundles: &[Bundle]) -> Option<Vec<(AgentId, AgentId)>> {
    let edges = envy_edges(inst, bundles);
    let n = bundles.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack: Vec<AgentId> = Vec::new();

    fn dfs(
        v: AgentId,
        edges: &[Vec<bool>],
        state: &mut [u8],
        stack: &mut Vec<AgentId>,
    ) -> Option<Vec<(AgentId, AgentId)>> {
        state[v] = 1;
        stack.push(v);
        for w in 0..edges.len() {
            if !edges[v][w] {
                continue;
            }
            if state[w] == 1 {
                let at = stack.iter().position(|&u| u == w).expect("on stack");
                let cycle = &stack[at..];
                return Some(
                    cycle
                        .iter()
                        .enumerate()
                        .map(|(k, &u)| (u, cycle[(k + 1) % cycle.len()]))
                        .collect(),
                );
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, edges, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }

    (0..n).find_map(|s| {
        if state[s] == 0 {
            dfs(s, &edges, &mut state, &mut stack)
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::check_ef1;
    use crate::fixtures::*;
    use crate::rational::ratio;

    #[test]
    fn lower_bound_rows() {
        let inst = lower_bound_instance(2, &ratio(1, 10)).unwrap();
        assert_eq!(inst.row(0), &[int(1), ratio(1, 40), ratio(9, 10)]);
        assert_eq!(inst.row(1), &[int(1), ratio(9, 10), ratio(1, 40)]);

        let inst = lower_bound_instance(3, &ratio(1, 10)).unwrap();
        assert_eq!(inst.items(), 5);
        assert_eq!(inst.value(0, 4), &ratio(9, 10));
        assert_eq!(inst.value(1, 3), &ratio(9, 10));
        assert_eq!(inst.value(2, 2), &ratio(9, 10));
        for i in 0..3 {
            assert_eq!(inst.value(i, 0), &int(1));
            assert_eq!(inst.value(i, 1), &int(1));
        }
        assert!(lower_bound_instance(1, &ratio(1, 10)).is_err());
        assert!(lower_bound_instance(2, &int(1)).is_err());
    }

    #[test]
    fn large_market_on_inheritance() {
        let inst = inheritance();
        let c = check_large_market(&inst, &int(1));
        assert_eq!(c.tightest_eps, ratio(30, 29));
        assert!(!c.holds);
        let w = check_large_market_wrt(&inst, &inheritance_max_nash(), &int(1)).unwrap();
        assert_eq!(w.tightest_eps, int(1));
        assert!(w.holds);
    }

    #[test]
    fn large_market_uniform_and_single_item() {
        let inst = Instance::from_integers(&[[3, 3, 3, 3, 3, 3], [3, 3, 3, 3, 3, 3]]).unwrap();
        assert_eq!(check_large_market(&inst, &int(1)).tightest_eps, ratio(2, 6));
        let x = Allocation::from_lists(&[vec![0, 1, 2], vec![3, 4, 5]], 6).unwrap();
        assert_eq!(
            check_large_market_wrt(&inst, &x, &int(1))
                .unwrap()
                .tightest_eps,
            ratio(1, 3)
        );
        let one = Instance::from_integers(&[[5], [7]]).unwrap();
        assert_eq!(check_large_market(&one, &int(1)).tightest_eps, int(2));
        let x = Allocation::from_lists(&[vec![0], vec![]], 1).unwrap();
        let w = check_large_market_wrt(&one, &x, &int(1)).unwrap();
        assert_eq!(w.flagged_empty, vec![1]);
        assert_eq!(w.tightest_eps, int(1));
    }

    #[test]
    fn witness_reproduces_tightest_eps() {
        let inst = random_instance(3, 6, 20, 4).unwrap();
        let c = check_large_market(&inst, &int(1));
        let (i, g) = c.witness.unwrap();
        assert_eq!(
            int(3) * inst.value(i, g) / inst.total_value(i),
            c.tightest_eps
        );
    }

    #[test]
    fn eps_conversion_table() {
        assert_eq!(eps_convert(&ratio(1, 2), 2).unwrap(), ratio(2, 3));
        assert_eq!(eps_convert(&ratio(1, 1000), 5).unwrap(), ratio(5, 4996));
        assert_eq!(eps_convert(&int(1), 1).unwrap(), int(1));
        assert!(eps_convert(&int(0), 3).is_err());
        assert!(eps_convert(&int(2), 3).is_err());
    }

    #[test]
    fn random_instances_are_deterministic() {
        let a = random_instance(2, 3, 10, 1).unwrap();
        assert_eq!(a, random_instance(2, 3, 10, 1).unwrap());
        assert_ne!(a, random_instance(2, 3, 10, 2).unwrap());
        assert!(a
            .rows()
            .iter()
            .flatten()
            .all(|v| v >= &int(1) && v <= &int(10)));
    }

    #[test]
    fn random_instance_golden_value() {
        let a = random_instance(2, 3, 10, 1).unwrap();
        let got: Vec<Vec<String>> = a
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        assert_eq!(got, GOLDEN);
    }

    const GOLDEN: [[&str; 3]; 2] = [["2", "6", "6"], ["7", "4", "5"]];

    #[test]
    fn large_market_generation() {
        let inst = random_large_market_instance(3, 30, &ratio(1, 4), 9).unwrap();
        assert!(check_large_market(&inst, &ratio(1, 4)).holds);
        assert!(matches!(
            random_large_market_instance(3, 5, &ratio(1, 4), 9),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn ef1_completion_of_inheritance() {
        let inst = inheritance();
        let y = Allocation::from_lists(&[vec![RING], vec![CAR], vec![NECKLACE]], 4).unwrap();
        let full = ef1_complete(&inst, &y).unwrap();
        assert_eq!(
            full,
            Allocation::from_lists(&[vec![RING, PAINTING], vec![CAR], vec![NECKLACE]], 4).unwrap()
        );
        assert!(check_ef1(&inst, &full).holds);
        let done = inheritance_max_nash();
        assert_eq!(ef1_complete(&inst, &done).unwrap(), done);
    }

    #[test]
    fn ef1_completion_from_nothing() {
        let inst = inheritance();
        let full = ef1_complete(&inst, &Allocation::empty(3, 4)).unwrap();
        assert!(full.is_complete());
        assert!(check_ef1(&inst, &full).holds);
    }

    #[test]
    fn envy_cycles_are_rotated() {
        // Each agent prefers the other's item.
        let inst = Instance::from_integers(&[[1, 5, 1], [5, 1, 1]]).unwrap();
        let y = Allocation::from_lists(&[vec![0], vec![1]], 3).unwrap();
        let full = ef1_complete(&inst, &y).unwrap();
        assert_eq!(full.bundle(0).items(), &[1, 2]);
        assert_eq!(full.bundle(1).items(), &[0]);
    }
}
