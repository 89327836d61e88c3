//! Exhaustive ground truth for small instances.
//!
//! Assignments are enumerated as a mixed-radix counter whose most
//! significant digit is the lowest item id, so scanning order is the
//! lexicographic order of assignment vectors and the first strict maximum is
//! the lexicographically smallest maximizer. The space is cut into
//! contiguous prefix blocks that may run in parallel; blocks are merged in
//! order, which reproduces the sequential tie-break exactly.
//!
//! Values are scaled to integers by one common factor, and products run in
//! `u128` when the largest possible product fits, `BigUint` otherwise.
//!
//! Maximization ranks assignments first by the number of agents with
//! positive value and then by the product of those values, so instances
//! with fewer items than agents still get a meaningful optimum. When some
//! assignment serves every agent this is plain `NW^n` order.

use std::ops::{AddAssign, MulAssign};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AgentId, Allocation, Bundle, Instance, ItemId};
use crate::rational::Rational;
use crate::welfare::nw_pow_n;

pub mod typed;

pub const DEFAULT_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest number of assignments a search may examine.
    pub cap: u128,
    pub parallel: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            cap: DEFAULT_CAP,
            parallel: true,
        }
    }
}

impl OracleConfig {
    pub fn with_cap(cap: u128) -> Self {
        OracleConfig {
            cap,
            ..Default::default()
        }
    }

    pub fn sequential(self) -> Self {
        OracleConfig {
            parallel: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub best_pow_n: Rational,
    pub argmax: Allocation,
    pub enumerated: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoCertificate {
    pub optimal: bool,
    pub dominator: Option<Allocation>,
    pub enumerated: u128,
}

/// Maximum Nash welfare (as `NW^n`) over all complete assignments of `items`.
pub fn opt_bruteforce(inst: &Instance, items: &Bundle, cfg: OracleConfig) -> Result<OracleResult> {
    inst.check_bundle(items)?;
    let n = inst.agents();
    let enumerated = space_size(n, items.len(), cfg.cap)?;
    let slots = items.items();
    let digits = with_int_rows(inst, |rows| {
        let eval = |assign: &[usize]| Some(product_of(rows, assign, slots));
        scan_max(n, slots.len(), cfg.parallel, eval)
    });
    let argmax = to_allocation(&digits, slots, n, inst.items());
    Ok(OracleResult {
        best_pow_n: nw_pow_n(inst, &argmax),
        argmax,
        enumerated,
    })
}

/// All maximizers of `NW^n` over complete assignments of `items`, in
/// lexicographic order of assignment vectors. Always sequential.
pub fn optimal_allocations(
    inst: &Instance,
    items: &Bundle,
    cfg: OracleConfig,
) -> Result<(Rational, Vec<Allocation>)> {
    inst.check_bundle(items)?;
    let n = inst.agents();
    space_size(n, items.len(), cfg.cap)?;
    let slots = items.items();
    let winners = with_int_rows(inst, |rows| {
        let mut best: Option<Welfare> = None;
        let mut winners = Vec::new();
        let mut assign = vec![0; slots.len()];
        loop {
            let p = product_of(rows, &assign, slots);
            match best.as_ref().map(|b| p.cmp(b)) {
                Some(std::cmp::Ordering::Less) => {}
                Some(std::cmp::Ordering::Equal) => winners.push(assign.clone()),
                _ => {
                    best = Some(p);
                    winners = vec![assign.clone()];
                }
            }
            if !increment(&mut assign, n) {
                break;
            }
        }
        winners
    });
    let allocs: Vec<Allocation> = winners
        .iter()
        .map(|d| to_allocation(d, slots, n, inst.items()))
        .collect();
    Ok((nw_pow_n(inst, &allocs[0]), allocs))
}

/// Best `NW^n` among EFX partial allocations: every item goes to an agent or
/// is donated, `(n+1)^m` assignments in all.
pub fn best_efx_bruteforce(inst: &Instance, cfg: OracleConfig) -> Result<OracleResult> {
    let n = inst.agents();
    let m = inst.items();
    let enumerated = space_size(n + 1, m, cfg.cap)?;
    let all: Vec<ItemId> = (0..m).collect();
    let digits = with_int_rows(inst, |rows| {
        let eval = |assign: &[usize]| {
            if is_efx_assignment(rows, assign, n) {
                Some(product_of(rows, assign, &all))
            } else {
                None
            }
        };
        scan_max(n + 1, m, cfg.parallel, eval)
    });
    let owners: Vec<Option<AgentId>> = digits.iter().map(|&d| (d < n).then_some(d)).collect();
    let argmax = Allocation::from_owners(&owners, n);
    Ok(OracleResult {
        best_pow_n: nw_pow_n(inst, &argmax),
        argmax,
        enumerated,
    })
}

/// Is `alloc` Pareto-optimal among allocations of its own item set?
/// Returns the lexicographically first dominator when it is not.
pub fn pareto_optimal_bruteforce(
    inst: &Instance,
    alloc: &Allocation,
    cfg: OracleConfig,
) -> Result<ParetoCertificate> {
    inst.check_allocation(alloc)?;
    let n = inst.agents();
    let items = alloc.allocated();
    let enumerated = space_size(n, items.len(), cfg.cap)?;
    let slots = items.items();
    let owners = alloc.owners();
    let current: Vec<usize> = slots.iter().map(|&g| owners[g].unwrap_or(0)).collect();
    let found = with_int_rows(inst, |rows| {
        let base = agent_values(rows, &current, slots, n);
        let dominates = |assign: &[usize]| {
            let vals = agent_values(rows, assign, slots, n);
            vals.iter().zip(&base).all(|(a, b)| a >= b)
                && vals.iter().zip(&base).any(|(a, b)| a > b)
        };
        find_first(n, slots.len(), cfg.parallel, dominates)
    });
    let dominator = found.map(|d| to_allocation(&d, slots, n, inst.items()));
    Ok(ParetoCertificate {
        optimal: dominator.is_none(),
        dominator,
        enumerated,
    })
}

/// `radix^len`, or a cap error naming the required count.
pub fn space_size(radix: usize, len: usize, cap: u128) -> Result<u128> {
    let required = BigUint::from(radix).pow(len as u32);
    match required.to_u128() {
        Some(r) if r <= cap => Ok(r),
        _ => Err(Error::CapExceeded { required, cap }),
    }
}

fn to_allocation(digits: &[usize], slots: &[ItemId], n: usize, m: usize) -> Allocation {
    let mut owners = vec![None; m];
    for (&g, &a) in slots.iter().zip(digits) {
        owners[g] = Some(a);
    }
    Allocation::from_owners(&owners, n)
}

// ---------------------------------------------------------------------------
// Integer arithmetic behind the searches.

pub(crate) trait Exact:
    Clone + Ord + Zero + One + Send + Sync + for<'a> AddAssign<&'a Self> + for<'a> MulAssign<&'a Self>
{
}

impl<T> Exact for T where
    T: Clone + Ord + Zero + One + Send + Sync + for<'a> AddAssign<&'a T> + for<'a> MulAssign<&'a T>
{
}

/// Either integer width; products compare correctly within one search.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Scaled {
    Small(u128),
    Big(BigUint),
}

trait IntoScaled: Exact {
    fn into_scaled(self) -> Scaled;
}

impl IntoScaled for u128 {
    fn into_scaled(self) -> Scaled {
        Scaled::Small(self)
    }
}

impl IntoScaled for BigUint {
    fn into_scaled(self) -> Scaled {
        Scaled::Big(self)
    }
}

/// Integer rows: every value times the lcm of all denominators. One common
/// factor keeps products over different agent sets comparable.
pub(crate) fn integer_rows(inst: &Instance) -> Vec<Vec<BigUint>> {
    let lcm = inst
        .rows()
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    inst.rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    (v.numer() * (&lcm / v.denom()))
                        .to_biguint()
                        .expect("values are positive")
                })
                .collect()
        })
        .collect()
}

/// Narrows the integer rows to `u128` when the product of row totals fits.
pub(crate) fn narrow_rows(rows: &[Vec<BigUint>]) -> Option<Vec<Vec<u128>>> {
    let bound = rows
        .iter()
        .map(|r| r.iter().sum::<BigUint>())
        .fold(BigUint::one(), |acc, s| acc * s.max(BigUint::one()));
    // Room for the additions in the EFX check as well.
    bound.to_u128().filter(|b| *b <= u128::MAX / 4)?;
    Some(
        rows.iter()
            .map(|r| r.iter().map(|v| v.to_u128().expect("bounded")).collect())
            .collect(),
    )
}

fn with_int_rows<R>(inst: &Instance, run: impl FnOnce(&dyn RowsAny) -> R) -> R {
    let big = integer_rows(inst);
    match narrow_rows(&big) {
        Some(small) => run(&TypedRows(&small)),
        None => run(&TypedRows(&big)),
    }
}

/// Number of agents with positive value, then the product of those values.
/// With every agent positive this orders by `NW^n`; otherwise it ranks
/// zero-welfare assignments by how many agents they serve.
type Welfare = (usize, Scaled);

/// Object-safe view of integer rows, yielding `Scaled` results.
trait RowsAny: Sync {
    fn product(&self, assign: &[usize], slots: &[ItemId]) -> Welfare;
    fn values(&self, assign: &[usize], slots: &[ItemId], n: usize) -> Vec<Scaled>;
    fn efx(&self, assign: &[usize], n: usize) -> bool;
}

struct TypedRows<'a, T>(&'a [Vec<T>]);

impl<T: IntoScaled> RowsAny for TypedRows<'_, T> {
    fn product(&self, assign: &[usize], slots: &[ItemId]) -> Welfare {
        let n = self.0.len();
        let mut sums = vec![T::zero(); n];
        for (&g, &a) in slots.iter().zip(assign) {
            if a < n {
                sums[a] += &self.0[a][g];
            }
        }
        let mut positive = 0;
        let mut p = T::one();
        for s in sums.iter().filter(|s| !s.is_zero()) {
            positive += 1;
            p *= s;
        }
        (positive, p.into_scaled())
    }

    fn values(&self, assign: &[usize], slots: &[ItemId], n: usize) -> Vec<Scaled> {
        let mut sums = vec![T::zero(); n];
        for (&g, &a) in slots.iter().zip(assign) {
            sums[a] += &self.0[a][g];
        }
        sums.into_iter().map(IntoScaled::into_scaled).collect()
    }

    fn efx(&self, assign: &[usize], n: usize) -> bool {
        // sums[i][j] = v_i(X_j), least[i][j] = min_{g in X_j} v_i(g).
        let mut sums = vec![vec![T::zero(); n]; n];
        let mut least: Vec<Vec<Option<&T>>> = vec![vec![None; n]; n];
        for (g, &owner) in assign.iter().enumerate() {
            if owner == n {
                continue;
            }
            for i in 0..n {
                let v = &self.0[i][g];
                sums[i][owner] += v;
                let slot = &mut least[i][owner];
                if slot.is_none_or(|l| v < l) {
                    *slot = Some(v);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(l) = least[i][j] {
                    let mut lhs = sums[i][i].clone();
                    lhs += l;
                    if lhs < sums[i][j] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn product_of(rows: &dyn RowsAny, assign: &[usize], slots: &[ItemId]) -> Welfare {
    rows.product(assign, slots)
}

fn agent_values(rows: &dyn RowsAny, assign: &[usize], slots: &[ItemId], n: usize) -> Vec<Scaled> {
    rows.values(assign, slots, n)
}

fn is_efx_assignment(rows: &dyn RowsAny, assign: &[usize], n: usize) -> bool {
    rows.efx(assign, n)
}

// ---------------------------------------------------------------------------
// Lexicographic enumeration.

/// Advances `digits` as a base-`radix` counter (last digit fastest).
/// Returns `false` after wrapping past the last vector.
pub(crate) fn increment(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Number of leading digits fixed per block.
fn split_digits(radix: usize, len: usize, parallel: bool) -> usize {
    if !parallel || radix < 2 {
        return 0;
    }
    let mut blocks = 1usize;
    let mut split = 0;
    while split < len && blocks < 256 {
        blocks *= radix;
        split += 1;
    }
    split
}

fn block_prefix(mut index: usize, radix: usize, split: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for k in (0..split).rev() {
        digits[k] = index % radix;
        index /= radix;
    }
    digits
}

fn scan_max<F>(radix: usize, len: usize, parallel: bool, eval: F) -> Vec<usize>
where
    F: Fn(&[usize]) -> Option<Welfare> + Sync,
{
    let split = split_digits(radix, len, parallel);
    let blocks = radix.pow(split as u32);
    let scan_block = |b: usize| {
        let mut digits = block_prefix(b, radix, split, len);
        let mut best: Option<(Welfare, Vec<usize>)> = None;
        loop {
            if let Some(v) = eval(&digits) {
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, digits.clone()));
                }
            }
            if !increment(&mut digits[split..], radix) {
                break;
            }
        }
        best
    };
    let per_block: Vec<Option<(Welfare, Vec<usize>)>> = if parallel {
        (0..blocks).into_par_iter().map(scan_block).collect()
    } else {
        (0..blocks).map(scan_block).collect()
    };
    per_block
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(Welfare, Vec<usize>)>, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .map(|(_, d)| d)
        // Every search here admits at least the all-donated or some complete
        // assignment, so this is unreachable for valid inputs.
        .unwrap_or_else(|| vec![0; len])
}

fn find_first<F>(radix: usize, len: usize, parallel: bool, pred: F) -> Option<Vec<usize>>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    let split = split_digits(radix, len, parallel);
    let blocks = radix.pow(split as u32);
    let scan_block = |b: usize| {
        let mut digits = block_prefix(b, radix, split, len);
        loop {
            if pred(&digits) {
                return Some(digits);
            }
            if !increment(&mut digits[split..], radix) {
                return None;
            }
        }
    };
    if parallel {
        (0..blocks).into_par_iter().find_map_first(scan_block)
    } else {
        (0..blocks).find_map(scan_block)
    }
}
