//! Donation from an arbitrary complete allocation. A run either ends in an
//! EFX allocation or finds a complete allocation with Nash welfare larger
//! by a fixed factor, from which the driver restarts.

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::alg1::{matching_round, require_complete};
use crate::error::{Error, Result};
use crate::fairness::check_efx;
use crate::graph::{robust_demand, FeasibilityGraph, Matching, WorkingBundles};
use crate::model::{AgentId, Allocation, Bundle, Instance};
use crate::rational::{int, Rational};
use crate::trace::{Removal, RoundRecord, RunTrace, Swap};
use crate::welfare::nw_pow_n;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSchedule {
    delta: Rational,
    delta1: Rational,
}

impl DeltaSchedule {
    pub fn new(delta: Rational) -> Result<Self> {
        if delta <= Rational::zero() || delta >= Rational::one() {
            return Err(Error::Domain(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        let delta1 = int(2) * &delta / (Rational::one() - &delta);
        let s = DeltaSchedule { delta, delta1 };
        debug_assert_eq!(
            (int(2) + int(2) * &s.delta1) / (int(2) + &s.delta1),
            Rational::one() + &s.delta
        );
        Ok(s)
    }

    /// `delta = 1/(2n+1)`, which makes `delta1 = 1/n`.
    pub fn for_agents(n: usize) -> Self {
        DeltaSchedule::new(Rational::new(1.into(), (2 * n as i64 + 1).into()))
            .expect("1/(2n+1) lies in (0, 1)")
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn delta1(&self) -> &Rational {
        &self.delta1
    }

    /// Guaranteed welfare gain of an improvement, on n-th powers.
    pub fn gain(&self) -> Rational {
        Rational::one() + &self.delta
    }
}

/// Alternating path from an unmatched slot along identity edges and matching
/// edges, ending at the first agent the matching leaves unmatched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugPath {
    pub agents: Vec<AgentId>,
    pub slots: Vec<usize>,
    /// `(j_i, slot j_{i+1})` for consecutive agents on the path.
    pub m_edges: Vec<(AgentId, usize)>,
}

impl AugPath {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn start(&self) -> usize {
        self.slots[0]
    }

    pub fn end(&self) -> AgentId {
        *self.agents.last().expect("paths are nonempty")
    }
}

pub fn augmenting_path(m: &Matching, start_slot: usize) -> Result<AugPath> {
    if let Some(a) = m.agent_of(start_slot) {
        return Err(Error::invalid(format!(
            "slot {start_slot} is already matched to agent {a}"
        )));
    }
    let mut path = AugPath {
        agents: Vec::new(),
        slots: Vec::new(),
        m_edges: Vec::new(),
    };
    let mut current = start_slot;
    loop {
        path.agents.push(current);
        path.slots.push(current);
        match m.slot_of(current) {
            None => return Ok(path),
            Some(next) => {
                path.m_edges.push((current, next));
                current = next;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alg2Outcome {
    Efx {
        allocation: Allocation,
        matching: Matching,
        trace: RunTrace,
    },
    Improved {
        allocation: Allocation,
        path: AugPath,
        /// Slot whose owner's loss triggered the improvement.
        demanded: usize,
        trace: RunTrace,
    },
}

impl Alg2Outcome {
    pub fn trace(&self) -> &RunTrace {
        match self {
            Alg2Outcome::Efx { trace, .. } | Alg2Outcome::Improved { trace, .. } => trace,
        }
    }

    pub fn allocation(&self) -> &Allocation {
        match self {
            Alg2Outcome::Efx { allocation, .. } | Alg2Outcome::Improved { allocation, .. } => {
                allocation
            }
        }
    }
}

pub fn alg2_step(inst: &Instance, x: &Allocation, sched: &DeltaSchedule) -> Result<Alg2Outcome> {
    require_complete(inst, x)?;
    let mut z = WorkingBundles::new(x);
    let mut trace = RunTrace::default();
    let mut previous: Option<(FeasibilityGraph, usize)> = None;
    let factor = int(2) + sched.delta1();

    loop {
        let round = trace.len() + 1;
        if round > inst.items() + 1 {
            return Err(Error::invariant("more than m + 1 rounds", Some(&trace)));
        }
        let (g, mut m) = matching_round(inst, &z, previous.as_ref().map(|(g, s)| (g, *s)), &trace)?;
        let mut record = RoundRecord {
            round,
            edges: g.edge_count(),
            matching: m.pairs(),
            touched: z.touched(),
            swaps: Vec::new(),
            removal: None,
        };
        if m.is_perfect() {
            trace.rounds.push(record);
            let allocation = z.assign(&m);
            verify_efx_outcome(inst, x, &z, &allocation, &factor, &trace)?;
            return Ok(Alg2Outcome::Efx {
                allocation,
                matching: m,
                trace,
            });
        }

        let j1 = m.unmatched_slots()[0];
        if z.is_touched(j1) {
            return Err(Error::invariant(
                format!("unmatched slot {j1} is touched"),
                Some(&trace),
            ));
        }
        let mut path = augmenting_path(&m, j1)?;
        let (demanded, item) = loop {
            let jk = path.end();
            let (slot, item) = robust_demand(inst, &z, jk)?;
            if !path.slots[1..].contains(&slot) {
                break (slot, item);
            }
            let released = m
                .agent_of(slot)
                .expect("path slots past the start are matched");
            if !g.has_edge(jk, slot) {
                trace.rounds.push(record);
                return Err(Error::invariant(
                    format!("swapped-in edge ({jk}, {slot}) is not in the feasibility graph"),
                    Some(&trace),
                ));
            }
            m.unassign(released);
            m.assign(jk, slot);
            record.swaps.push(Swap {
                released,
                taker: jk,
                slot,
            });
            let shorter = augmenting_path(&m, j1)?;
            if shorter.len() >= path.len() || shorter.end() != released {
                trace.rounds.push(record);
                return Err(Error::invariant(
                    "swap did not shorten the augmenting path",
                    Some(&trace),
                ));
            }
            path = shorter;
        };

        let jk = path.end();
        z.remove(demanded, item)?;
        record.removal = Some(Removal {
            agent: jk,
            slot: demanded,
            item,
        });
        trace.rounds.push(record);

        let kept = inst.value_of(demanded, z.bundle(demanded));
        let original = x.value(inst, demanded);
        if &factor * &kept < original {
            let improved = transfer(x, &z, &path, demanded)?;
            let before = nw_pow_n(inst, x);
            let after = nw_pow_n(inst, &improved);
            if after < sched.gain() * &before {
                return Err(Error::invariant(
                    format!("improvement from {before} to {after} is below the guaranteed factor"),
                    Some(&trace),
                ));
            }
            return Ok(Alg2Outcome::Improved {
                allocation: improved,
                path,
                demanded,
                trace,
            });
        }
        previous = Some((g, demanded));
    }
}

/// Lemma-style guarantees of an EFX outcome relative to its input.
fn verify_efx_outcome(
    inst: &Instance,
    x: &Allocation,
    z: &WorkingBundles,
    y: &Allocation,
    factor: &Rational,
    trace: &RunTrace,
) -> Result<()> {
    let verdict = check_efx(inst, y);
    if !verdict.holds {
        return Err(Error::invariant(
            format!("output is not EFX: {:?}", verdict.witness),
            Some(trace),
        ));
    }
    let mut kept = false;
    for i in 0..x.agents() {
        let before = x.value(inst, i);
        let after = y.value(inst, i);
        if factor * &after < before {
            return Err(Error::invariant(
                format!("agent {i} dropped below the per-agent bound"),
                Some(trace),
            ));
        }
        kept |= after >= before;
    }
    if !kept || z.touched().len() == x.agents() {
        return Err(Error::invariant(
            "no agent kept its full value",
            Some(trace),
        ));
    }
    Ok(())
}

/// Shifts bundles along the path. Agent `j_i` receives `Z_{j_{i+1}}`, the
/// endpoint receives `Z_{j*}`, and every agent whose working bundle moves
/// keeps the items that were removed from it. This also covers the
/// single-agent path and the case where `j*` closes a cycle at the start.
fn transfer(
    x: &Allocation,
    z: &WorkingBundles,
    path: &AugPath,
    demanded: usize,
) -> Result<Allocation> {
    let n = x.agents();
    let mut given = vec![false; n];
    let mut receives: Vec<Option<usize>> = vec![None; n];
    for w in path.agents.windows(2) {
        receives[w[0]] = Some(w[1]);
        given[w[1]] = true;
    }
    receives[path.end()] = Some(demanded);
    given[demanded] = true;

    let bundles: Vec<Bundle> = (0..n)
        .map(|a| {
            let mut b = if given[a] {
                x.bundle(a).difference(z.bundle(a))
            } else {
                x.bundle(a).clone()
            };
            if let Some(s) = receives[a] {
                b = b.union(z.bundle(s));
            }
            b
        })
        .collect();
    let out = Allocation::new(bundles, x.items())?;
    if !out.is_complete() {
        return Err(Error::invariant(
            "improved allocation is not complete",
            None,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverConfig {
    /// Constant `c` in the restart cap `ceil(c * n^2 * max(rho, 1))`.
    pub restart_factor: u64,
    /// Known approximation factor of the starting allocation.
    pub rho_hint: Option<Rational>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            restart_factor: 1000,
            rho_hint: None,
        }
    }
}

impl DriverConfig {
    pub fn restart_cap(&self, n: usize) -> u64 {
        let rho = match &self.rho_hint {
            Some(r) if r > &Rational::one() => r.clone(),
            _ => Rational::one(),
        };
        let cap = Rational::from_integer(self.restart_factor.into()) * int((n * n) as i64) * rho;
        cap.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alg2Run {
    pub output: Allocation,
    pub restarts: usize,
    pub schedule: DeltaSchedule,
    /// The allocation the last, EFX-producing step started from.
    pub final_input: Allocation,
    /// `nw_pow_n` of every step's input, in order.
    pub welfare: Vec<Rational>,
    pub traces: Vec<RunTrace>,
    pub restart_cap: u64,
}

pub fn alg2_driver(inst: &Instance, x0: &Allocation, delta: Option<Rational>) -> Result<Alg2Run> {
    alg2_driver_with(inst, x0, delta, &DriverConfig::default())
}

pub fn alg2_driver_with(
    inst: &Instance,
    x0: &Allocation,
    delta: Option<Rational>,
    cfg: &DriverConfig,
) -> Result<Alg2Run> {
    let n = x0.agents();
    let schedule = match delta {
        Some(d) => DeltaSchedule::new(d)?,
        None => DeltaSchedule::for_agents(n),
    };
    let restart_cap = cfg.restart_cap(n);
    let mut x = x0.clone();
    let mut welfare = Vec::new();
    let mut traces = Vec::new();
    loop {
        welfare.push(nw_pow_n(inst, &x));
        match alg2_step(inst, &x, &schedule)? {
            Alg2Outcome::Efx {
                allocation, trace, ..
            } => {
                traces.push(trace);
                return Ok(Alg2Run {
                    output: allocation,
                    restarts: welfare.len() - 1,
                    schedule,
                    final_input: x,
                    welfare,
                    traces,
                    restart_cap,
                });
            }
            Alg2Outcome::Improved {
                allocation, trace, ..
            } => {
                traces.push(trace);
                if welfare.len() as u64 > restart_cap {
                    return Err(Error::invariant(
                        format!("more than {restart_cap} restarts"),
                        traces.last(),
                    ));
                }
                x = allocation;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alg1::run_alg1;
    use crate::fixtures::*;
    use crate::rational::ratio;

    #[test]
    fn default_schedule_gives_delta1_one_over_n() {
        for n in 1..8 {
            let s = DeltaSchedule::for_agents(n);
            assert_eq!(s.delta1(), &ratio(1, n as i64));
        }
        assert_eq!(
            DeltaSchedule::new(ratio(1, 5)).unwrap().delta1(),
            &ratio(1, 2)
        );
        assert!(DeltaSchedule::new(int(1)).is_err());
        assert!(DeltaSchedule::new(int(0)).is_err());
    }

    #[test]
    fn paths() {
        let empty = Matching::empty(3);
        let p = augmenting_path(&empty, 2).unwrap();
        assert_eq!(p.agents, vec![2]);
        assert!(p.m_edges.is_empty());

        let m = Matching::from_pairs(3, &[(0, 1)]).unwrap();
        let p = augmenting_path(&m, 0).unwrap();
        assert_eq!(p.agents, vec![0, 1]);
        assert_eq!(p.m_edges, vec![(0, 1)]);

        let perfect = Matching::from_pairs(2, &[(0, 0), (1, 1)]).unwrap();
        assert!(augmenting_path(&perfect, 0).is_err());
    }

    #[test]
    fn optimal_input_matches_alg1() {
        let inst = inheritance();
        let x = inheritance_max_nash();
        let a1 = run_alg1(&inst, &x, true).unwrap();
        let out = alg2_step(&inst, &x, &DeltaSchedule::for_agents(3)).unwrap();
        assert_eq!(out.allocation(), &a1.output);
        assert!(matches!(out, Alg2Outcome::Efx { .. }));
        let run = alg2_driver(&inst, &x, None).unwrap();
        assert_eq!(run.restarts, 0);
        assert_eq!(run.output, a1.output);
    }

    #[test]
    fn efx_input_returns_immediately() {
        let inst = Instance::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let x = Allocation::from_lists(&[vec![0], vec![1]], 2).unwrap();
        let out = alg2_step(&inst, &x, &DeltaSchedule::for_agents(2)).unwrap();
        assert_eq!(out.allocation(), &x);
    }

    #[test]
    fn swapped_preferences_improve_or_stay_bounded() {
        let inst = Instance::from_integers(&[[1, 100], [100, 1]]).unwrap();
        let x = Allocation::from_lists(&[vec![0], vec![1]], 2).unwrap();
        let sched = DeltaSchedule::for_agents(2);
        match alg2_step(&inst, &x, &sched).unwrap() {
            Alg2Outcome::Improved { allocation, .. } => {
                assert!(nw_pow_n(&inst, &allocation) >= sched.gain());
            }
            Alg2Outcome::Efx { allocation, .. } => {
                assert!(check_efx(&inst, &allocation).holds);
            }
        }
        let run = alg2_driver(&inst, &x, None).unwrap();
        assert!(run.welfare.windows(2).all(|w| w[1] >= sched.gain() * &w[0]));
        assert!(check_efx(&inst, &run.output).holds);
        // Singletons are EFX already: the identity matching is perfect.
        assert_eq!(run.output, x);
        assert_eq!(run.restarts, 0);
    }

    #[test]
    fn restart_cap_scales_with_rho() {
        let cfg = DriverConfig {
            restart_factor: 2,
            rho_hint: Some(ratio(3, 2)),
        };
        assert_eq!(cfg.restart_cap(3), 27);
        assert_eq!(DriverConfig::default().restart_cap(2), 4000);
    }
}
