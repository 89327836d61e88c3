//! Exact optimum for instances whose items come in a few types.
//!
//! Items with identical value columns are interchangeable, so an allocation
//! is determined (up to Nash welfare) by how many items of each type every
//! agent receives. All splits of every type but the largest are enumerated;
//! the largest type is then placed greedily, one item at a time, on the agent
//! with the best marginal ratio. Each `log(u_i + w_i * b)` is concave in `b`,
//! so the greedy placement is optimal for separable concave objectives over
//! a fixed total.

use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, ItemId};
use crate::oracle::{integer_rows, narrow_rows};
use crate::rational::Rational;
use crate::welfare::nw_pow_n;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedOptimum {
    pub best_pow_n: Rational,
    pub argmax: Allocation,
    /// Item ids of each type, each list increasing.
    pub types: Vec<Vec<ItemId>>,
    /// Number of splits enumerated (the greedy type is not counted).
    pub splits: u128,
}

/// Groups items with identical value columns, ordered by first item id.
pub fn item_types(inst: &Instance) -> Vec<Vec<ItemId>> {
    let mut groups: BTreeMap<Vec<&Rational>, Vec<ItemId>> = BTreeMap::new();
    for g in 0..inst.items() {
        let column: Vec<&Rational> = (0..inst.agents()).map(|i| inst.value(i, g)).collect();
        groups.entry(column).or_default().push(g);
    }
    let mut types: Vec<Vec<ItemId>> = groups.into_values().collect();
    types.sort_by_key(|t| t[0]);
    types
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn opt_by_item_types(inst: &Instance, cap: u128) -> Result<TypedOptimum> {
    let n = inst.agents();
    let types = item_types(inst);
    if types.is_empty() {
        return Ok(TypedOptimum {
            best_pow_n: Rational::zero(),
            argmax: Allocation::empty(n, 0),
            types,
            splits: 1,
        });
    }
    let greedy_type = (0..types.len())
        .max_by_key(|&t| (types[t].len(), std::cmp::Reverse(t)))
        .expect("nonempty");
    let enumerated_types: Vec<usize> = (0..types.len()).filter(|&t| t != greedy_type).collect();
    let mut splits: u128 = 1;
    for &t in &enumerated_types {
        let c = types[t].len() as u128;
        let ways = binomial(c + n as u128 - 1, n as u128 - 1);
        splits = match ways.and_then(|w| splits.checked_mul(w)) {
            Some(s) if s <= cap => s,
            _ => {
                return Err(Error::CapExceeded {
                    required: BigUint::from(u128::MAX),
                    cap,
                })
            }
        };
    }

    let big = integer_rows(inst);
    // Per-type weights w[t][i] = scaled value of one item of type t for agent i.
    let counts = match narrow_rows(&big) {
        Some(small) => search(&small, &types, &enumerated_types, greedy_type),
        None => search(&big, &types, &enumerated_types, greedy_type),
    };

    let mut bundles = vec![Vec::new(); n];
    for (t, items) in types.iter().enumerate() {
        let mut next = items.iter();
        for (agent, bundle) in bundles.iter_mut().enumerate() {
            bundle.extend(next.by_ref().take(counts[t][agent]));
        }
    }
    let argmax = Allocation::from_lists(&bundles, inst.items())?;
    Ok(TypedOptimum {
        best_pow_n: nw_pow_n(inst, &argmax),
        argmax,
        types,
        splits,
    })
}

/// Returns per-type, per-agent counts of a maximizer.
fn search<T>(
    rows: &[Vec<T>],
    types: &[Vec<ItemId>],
    enumerated: &[usize],
    greedy_type: usize,
) -> Vec<Vec<usize>>
where
    T: Clone + Ord + Zero + One + for<'a> AddAssign<&'a T>,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let n = rows.len();
    let weight = |t: usize, i: usize| rows[i][types[t][0]].clone();
    let greedy_w: Vec<T> = (0..n).map(|i| weight(greedy_type, i)).collect();
    let greedy_c = types[greedy_type].len();

    let mut best: Option<(T, Vec<Vec<usize>>)> = None;
    let mut counts = vec![vec![0usize; n]; types.len()];
    let mut base = vec![T::zero(); n];

    // Depth-first over compositions of each enumerated type.
    fn walk<T, F>(
        depth: usize,
        enumerated: &[usize],
        types: &[Vec<ItemId>],
        counts: &mut Vec<Vec<usize>>,
        visit: &mut F,
    ) where
        F: FnMut(&Vec<Vec<usize>>),
    {
        if depth == enumerated.len() {
            visit(counts);
            return;
        }
        let t = enumerated[depth];
        let total = types[t].len();
        let n = counts[t].len();
        let mut split = vec![0usize; n];
        split[n - 1] = total;
        loop {
            counts[t].copy_from_slice(&split);
            walk::<T, F>(depth + 1, enumerated, types, counts, visit);
            if !next_composition(&mut split) {
                break;
            }
        }
    }

    let mut visit = |counts: &Vec<Vec<usize>>| {
        for (i, b) in base.iter_mut().enumerate() {
            *b = T::zero();
            for &t in enumerated {
                for _ in 0..counts[t][i] {
                    *b += &weight(t, i);
                }
            }
        }
        let placed = greedy_fill(&base, &greedy_w, greedy_c);
        let mut product = T::one();
        for i in 0..n {
            let mut v = base[i].clone();
            for _ in 0..placed[i] {
                v += &greedy_w[i];
            }
            product = &product * &v;
        }
        if best.as_ref().is_none_or(|(b, _)| product > *b) {
            let mut c = counts.clone();
            c[greedy_type] = placed;
            best = Some((product, c));
        }
    };
    walk::<T, _>(0, enumerated, types, &mut counts, &mut visit);
    best.expect("at least one split").1
}

/// Places `total` identical items one at a time on the agent whose value
/// ratio `(cur + w) / cur` is largest (infinite when `cur` is zero), lowest
/// agent on ties.
fn greedy_fill<T>(base: &[T], w: &[T], total: usize) -> Vec<usize>
where
    T: Clone + Ord + Zero + for<'a> AddAssign<&'a T>,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    let n = base.len();
    let mut cur: Vec<T> = base.to_vec();
    let mut placed = vec![0usize; n];
    for _ in 0..total {
        let mut pick = 0;
        for a in 1..n {
            if better_ratio(&cur[a], &w[a], &cur[pick], &w[pick]) {
                pick = a;
            }
        }
        cur[pick] += &w[pick];
        placed[pick] += 1;
    }
    placed
}

/// Is `(ca + wa) / ca` strictly larger than `(cb + wb) / cb`?
fn better_ratio<T>(ca: &T, wa: &T, cb: &T, wb: &T) -> bool
where
    T: Clone + Ord + Zero + for<'a> AddAssign<&'a T>,
    for<'a> &'a T: Mul<&'a T, Output = T>,
{
    match (ca.is_zero(), cb.is_zero()) {
        (true, _) => !cb.is_zero(),
        (false, true) => false,
        // (ca + wa) * cb > (cb + wb) * ca  <=>  wa * cb > wb * ca
        (false, false) => wa * cb > wb * ca,
    }
}

/// Next composition of a fixed total in lexicographic order; `false` when done.
fn next_composition(split: &mut [usize]) -> bool {
    let n = split.len();
    let mut tail = 0;
    for k in (0..n.saturating_sub(1)).rev() {
        tail += split[k + 1];
        if tail > 0 {
            split[k] += 1;
            for x in &mut split[k + 1..] {
                *x = 0;
            }
            split[n - 1] = tail - 1;
            return true;
        }
    }
    false
}
