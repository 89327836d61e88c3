//! Donation from a Nash-optimal allocation until the feasibility graph has a
//! perfect matching.

use crate::error::{Error, Result};
use crate::fairness::check_efx;
use crate::graph::{
    build_graph, efx_feasible, priority_matching, robust_demand, FeasibilityGraph, Matching,
    WorkingBundles,
};
use crate::model::{Allocation, Instance};
use crate::oracle::{opt_bruteforce, OracleConfig};
use crate::rational::int;
use crate::trace::{Removal, RoundRecord, RunTrace};
use crate::welfare::positive_welfare;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alg1Result {
    /// `Y`; items outside every bundle are the donated set.
    pub output: Allocation,
    pub trace: RunTrace,
    pub rounds: usize,
    pub matching: Matching,
    /// Slots that never lost an item.
    pub untouched: Vec<usize>,
    /// Efficiency conditions that failed on an input not certified optimal.
    pub warnings: Vec<String>,
}

pub(crate) fn require_complete(inst: &Instance, x: &Allocation) -> Result<()> {
    inst.check_allocation(x)?;
    if !x.is_complete() {
        return Err(Error::invalid(format!(
            "allocation leaves items {} unassigned",
            x.donated()
        )));
    }
    Ok(())
}

/// Builds this round's graph and matching. Edges away from the slot that
/// just lost an item must survive from the previous round, and touched slots
/// must all be matched.
pub(crate) fn matching_round(
    inst: &Instance,
    z: &WorkingBundles,
    previous: Option<(&FeasibilityGraph, usize)>,
    trace: &RunTrace,
) -> Result<(FeasibilityGraph, Matching)> {
    let g = build_graph(inst, z);
    if let Some((old, changed)) = previous {
        if let Some(&(i, j)) = old
            .edges()
            .iter()
            .find(|&&(i, j)| j != changed && !g.has_edge(i, j))
        {
            return Err(Error::invariant(
                format!("edge ({i}, {j}) vanished although slot {j} was not modified"),
                Some(trace),
            ));
        }
    }
    let m = match priority_matching(&g, &z.touched()) {
        Ok(m) => m,
        Err(Error::Uncoverable { uncovered }) => {
            return Err(Error::invariant(
                format!("touched slots {uncovered:?} cannot all be matched"),
                Some(trace),
            ))
        }
        Err(e) => return Err(e),
    };
    Ok((g, m))
}

pub fn run_alg1(inst: &Instance, x: &Allocation, assert_optimal: bool) -> Result<Alg1Result> {
    require_complete(inst, x)?;
    let n = x.agents();
    if assert_optimal {
        let opt = opt_bruteforce(inst, &x.allocated(), OracleConfig::default())?;
        if positive_welfare(inst, x) != positive_welfare(inst, &opt.argmax) {
            return Err(Error::invalid(
                "input allocation is not Nash-welfare optimal",
            ));
        }
    }

    let mut z = WorkingBundles::new(x);
    let mut trace = RunTrace::default();
    let mut previous: Option<(FeasibilityGraph, usize)> = None;
    let matching = loop {
        let round = trace.len() + 1;
        if round > inst.items() + 1 {
            return Err(Error::invariant("more than m + 1 rounds", Some(&trace)));
        }
        let (g, m) = matching_round(inst, &z, previous.as_ref().map(|(g, s)| (g, *s)), &trace)?;
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
            if !m.is_identity() {
                return Err(Error::invariant(
                    "perfect matching is not the identity",
                    Some(&trace),
                ));
            }
            break m;
        }
        let agent = m.unmatched_agents()[0];
        let (slot, item) = robust_demand(inst, &z, agent)?;
        let before = z.total_items();
        z.remove(slot, item)?;
        record.removal = Some(Removal { agent, slot, item });
        trace.rounds.push(record);
        if z.total_items() >= before {
            return Err(Error::invariant("round made no progress", Some(&trace)));
        }
        if !efx_feasible(inst, &z, agent, slot) {
            return Err(Error::invariant(
                format!(
                    "agent {agent} finds its demanded slot {slot} infeasible after the removal"
                ),
                Some(&trace),
            ));
        }
        previous = Some((g, slot));
    };

    let output = z.assign(&matching);
    let untouched: Vec<usize> = (0..n).filter(|&j| !z.is_touched(j)).collect();
    let verdict = check_efx(inst, &output);
    if !verdict.holds {
        return Err(Error::invariant(
            format!("output is not EFX: {:?}", verdict.witness),
            Some(&trace),
        ));
    }
    if !output.is_sub_allocation_of(x) {
        return Err(Error::invariant(
            "output bundle is not a subset of the input",
            Some(&trace),
        ));
    }
    if untouched.is_empty() {
        return Err(Error::invariant("every bundle lost an item", Some(&trace)));
    }

    let warnings = efficiency_gaps(inst, x, &output);
    if assert_optimal && !warnings.is_empty() {
        return Err(Error::invariant(warnings.join("; "), Some(&trace)));
    }
    Ok(Alg1Result {
        output,
        rounds: trace.len(),
        trace,
        matching,
        untouched,
        warnings,
    })
}

/// Per-agent halving bound and the existence of an agent that kept its value.
fn efficiency_gaps(inst: &Instance, x: &Allocation, y: &Allocation) -> Vec<String> {
    let mut out = Vec::new();
    let two = int(2);
    let mut kept = false;
    for i in 0..x.agents() {
        let before = x.value(inst, i);
        let after = y.value(inst, i);
        if &two * &after < before {
            out.push(format!("agent {i} lost more than half of its value"));
        }
        kept |= after >= before;
    }
    if !kept {
        out.push("no agent kept its full value".to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::rational::ratio;
    use crate::welfare::nw_pow_n;

    #[test]
    fn inheritance_trace() {
        let inst = inheritance();
        let r = run_alg1(&inst, &inheritance_max_nash(), true).unwrap();
        assert_eq!(r.rounds, 2);
        assert_eq!(
            r.output,
            Allocation::from_lists(&[vec![RING], vec![CAR], vec![NECKLACE]], 4).unwrap()
        );
        assert_eq!(r.output.donated().items(), &[PAINTING]);
        assert_eq!(
            r.trace.removals().copied().collect::<Vec<_>>(),
            vec![Removal {
                agent: ALICE,
                slot: BOB,
                item: PAINTING
            }]
        );
        assert_eq!(r.trace.rounds[0].edges, 3);
        assert_eq!(r.trace.rounds[0].matching, vec![(BOB, BOB)]);
        assert_eq!(r.trace.rounds[1].touched, vec![BOB]);
        assert_eq!(nw_pow_n(&inst, &r.output), int(810));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn efx_input_is_returned_unchanged() {
        let inst = Instance::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let x = Allocation::from_lists(&[vec![0], vec![1]], 2).unwrap();
        let r = run_alg1(&inst, &x, true).unwrap();
        assert_eq!(r.output, x);
        assert_eq!(r.rounds, 1);
        assert!(r.output.donated().is_empty());
    }

    #[test]
    fn lower_bound_family_at_two_agents() {
        let inst = Instance::new(vec![
            vec![int(1), ratio(1, 40), ratio(9, 10)],
            vec![int(1), ratio(9, 10), ratio(1, 40)],
        ])
        .unwrap();
        let x = Allocation::from_lists(&[vec![0, 2], vec![1]], 3).unwrap();
        let r = run_alg1(&inst, &x, true).unwrap();
        assert!(check_efx(&inst, &r.output).holds);
        assert!(int(2) * nw_pow_n(&inst, &r.output) >= ratio(171, 100));
    }

    #[test]
    fn zero_welfare_gate_uses_the_number_of_served_agents() {
        let inst = Instance::from_integers(&[[1, 1], [4, 1], [1, 4]]).unwrap();
        let hoard = Allocation::from_lists(&[vec![0, 1], vec![], vec![]], 2).unwrap();
        assert!(matches!(
            run_alg1(&inst, &hoard, true),
            Err(Error::InvalidInput(_))
        ));
        let spread = Allocation::from_lists(&[vec![], vec![0], vec![1]], 2).unwrap();
        assert_eq!(run_alg1(&inst, &spread, true).unwrap().output, spread);
    }

    #[test]
    fn partial_input_is_rejected() {
        let inst = inheritance();
        let x = Allocation::from_lists(&[vec![RING], vec![CAR], vec![NECKLACE]], 4).unwrap();
        assert!(matches!(
            run_alg1(&inst, &x, false),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn non_optimal_input_fails_the_optimality_gate_only_when_asked() {
        let inst = inheritance();
        let x =
            Allocation::from_lists(&[vec![NECKLACE], vec![RING], vec![CAR, PAINTING]], 4).unwrap();
        assert!(matches!(
            run_alg1(&inst, &x, true),
            Err(Error::InvalidInput(_))
        ));
        let r = run_alg1(&inst, &x, false).unwrap();
        assert!(check_efx(&inst, &r.output).holds);
    }
}
