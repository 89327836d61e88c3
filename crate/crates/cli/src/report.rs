//! JSON reports. Every rational is a `"p/q"` string and every id is 0-based,
//! except in `trace_text`, which numbers agents, bundles and items from 1.

use efx_core::fairness::{FairnessVerdict, Witness};
use efx_core::model::Instance;
use efx_core::rational::{format_rational, parse_rational, Rational};
use efx_core::trace::RunTrace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{render_instance, AllocationDoc};

pub const FORMAT: &str = "efx-report/1";
pub const INDICES: &str = "ids are 0-based; trace_text numbers from 1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub agents: usize,
    pub items: usize,
    pub valuations: Vec<Vec<String>>,
}

impl InstanceRecord {
    pub fn new(inst: &Instance) -> Self {
        InstanceRecord {
            agents: inst.agents(),
            items: inst.items(),
            valuations: inst
                .rows()
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance, String> {
        let rows = self
            .valuations
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| parse_rational(v).map_err(|e| e.to_string()))
                    .collect()
            })
            .collect::<Result<Vec<Vec<Rational>>, String>>()?;
        let inst = Instance::new(rows).map_err(|e| e.to_string())?;
        if inst.agents() != self.agents || inst.items() != self.items {
            return Err("recorded shape does not match the valuations".into());
        }
        Ok(inst)
    }
}

/// SHA-256 over the canonical TOML rendering of the instance, followed by
/// any extra documents.
pub fn digest(inst: &Instance, extra: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(render_instance(inst).as_bytes());
    for e in extra {
        h.update(e.as_bytes());
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

pub fn rat(r: &Rational) -> String {
    format_rational(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveParams {
    pub algorithm: String,
    pub seed_method: String,
    pub delta: Option<String>,
    pub oracle_cap: String,
    pub trace: bool,
    /// The seed allocation for the `file` method, embedded so the report is
    /// self-contained.
    pub seed_allocation: Option<AllocationDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub method: String,
    pub allocation: AllocationDoc,
    pub pow_n: String,
    pub moves: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WelfareRecord {
    pub seed: String,
    pub output: String,
    pub oracle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    /// The inequality the algorithm guarantees, on n-th powers.
    pub bound: String,
    pub alpha_pow_n: String,
    pub guaranteed: bool,
    pub bound_holds: Option<bool>,
    /// `NW^n(seed) / NW^n(Y)`
    pub ratio_vs_seed: Option<String>,
    /// `opt / NW^n(Y)`
    pub ratio_vs_oracle: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessRecord {
    pub ef: FairnessVerdict,
    pub ef1: FairnessVerdict,
    pub efx: FairnessVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub format: String,
    pub indices: String,
    pub command: String,
    pub input_digest: String,
    pub instance: InstanceRecord,
    pub pipeline: SolveParams,
    pub seed: SeedRecord,
    pub output: AllocationDoc,
    /// Allocation the final run started from, when restarts replaced the seed.
    pub final_input: Option<AllocationDoc>,
    pub welfare: WelfareRecord,
    pub efficiency: EfficiencyRecord,
    pub fairness: FairnessRecord,
    pub subset_of_input: bool,
    pub rounds: usize,
    pub restarts: Option<usize>,
    pub restart_cap: Option<u64>,
    pub warnings: Vec<String>,
    pub trace: Option<Vec<RunTrace>>,
    pub trace_text: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub checks: Vec<String>,
    pub eps: Option<String>,
    pub alpha_pow_n: Option<String>,
    pub oracle_cap: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format: String,
    pub indices: String,
    pub command: String,
    pub input_digest: String,
    pub instance: InstanceRecord,
    pub allocation: AllocationDoc,
    pub params: VerifyParams,
    pub checks: Vec<CheckRecord>,
    pub all_pass: bool,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// Human-readable trace lines with 1-based ids.
pub fn trace_text(traces: &[RunTrace]) -> Vec<String> {
    let mut out = Vec::new();
    for (run, t) in traces.iter().enumerate() {
        for r in &t.rounds {
            let matching: Vec<String> = r
                .matching
                .iter()
                .map(|(a, s)| format!("{}->{}", a + 1, s + 1))
                .collect();
            let touched: Vec<String> = r.touched.iter().map(|s| (s + 1).to_string()).collect();
            let mut line = format!(
                "run {} round {}: {} edges; matching {{{}}}; touched {{{}}}",
                run + 1,
                r.round,
                r.edges,
                matching.join(", "),
                touched.join(", ")
            );
            for s in &r.swaps {
                line.push_str(&format!(
                    "; agent {} takes bundle {} from agent {}",
                    s.taker + 1,
                    s.slot + 1,
                    s.released + 1
                ));
            }
            match &r.removal {
                Some(x) => line.push_str(&format!(
                    "; agent {} demands bundle {}, item {} donated",
                    x.agent + 1,
                    x.slot + 1,
                    x.item + 1
                )),
                None => line.push_str("; perfect matching"),
            }
            out.push(line);
        }
    }
    out
}
