//! The pipelines behind each subcommand, as pure functions from inputs to
//! reports.

use std::str::FromStr;

use efx_core::fairness::{check, Fairness};
use efx_core::instances::random_large_market_instance_with;
use efx_core::model::{Allocation, Instance};
use efx_core::oracle::{opt_bruteforce, pareto_optimal_bruteforce, OracleConfig, OracleResult};
use efx_core::rational::{int, parse_rational, pow, Rational};
use efx_core::seeding::{local_search_seed, oracle_seed, round_robin_seed, SeedMethod, SeedReport};
use efx_core::welfare::{nw_pow_n, positive_welfare};
use efx_core::{
    alg2_driver, check_large_market, check_large_market_wrt, lower_bound_instance, random_instance,
    run_alg1, Error,
};
use num_traits::Zero;

use crate::error::{CliError, CliResult};
use crate::formats::{render_allocation, AllocationDoc};
use crate::report::{
    digest, rat, trace_text, CheckRecord, EfficiencyRecord, FairnessRecord, InstanceRecord,
    SeedRecord, SolveParams, SolveReport, VerifyParams, VerifyReport, WelfareRecord, FORMAT,
    INDICES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Alg1,
    Alg2,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            _ => Err(format!("unknown algorithm {s:?} (expected alg1 or alg2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedChoice {
    Oracle,
    LocalSearch,
    File(Allocation),
}

impl SeedChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SeedChoice::Oracle => "oracle",
            SeedChoice::LocalSearch => "local-search",
            SeedChoice::File(_) => "file",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub algorithm: Algorithm,
    pub seed: SeedChoice,
    pub delta: Option<Rational>,
    pub oracle_cap: u128,
    pub trace: bool,
}

fn seed_method_name(m: SeedMethod) -> &'static str {
    match m {
        SeedMethod::Oracle => "oracle",
        SeedMethod::LocalSearch => "local-search",
        SeedMethod::RoundRobin => "round-robin",
        SeedMethod::Perturbed => "perturbed",
        SeedMethod::File => "file",
    }
}

/// The oracle optimum, or `None` when the search exceeds the cap.
fn try_oracle(inst: &Instance, cap: u128) -> CliResult<Option<OracleResult>> {
    let all = (0..inst.items()).collect();
    match opt_bruteforce(inst, &all, OracleConfig::with_cap(cap)) {
        Ok(r) => Ok(Some(r)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn fairness(inst: &Instance, y: &Allocation) -> FairnessRecord {
    FairnessRecord {
        ef: check(inst, y, Fairness::Ef),
        ef1: check(inst, y, Fairness::Ef1),
        efx: check(inst, y, Fairness::Efx),
    }
}

pub fn solve(inst: &Instance, req: &SolveRequest) -> CliResult<SolveReport> {
    let n = inst.agents();
    let cfg = OracleConfig::with_cap(req.oracle_cap);
    let seed: SeedReport = match &req.seed {
        SeedChoice::Oracle => oracle_seed(inst, cfg)?,
        SeedChoice::LocalSearch => local_search_seed(inst, &round_robin_seed(inst).allocation)?,
        SeedChoice::File(a) => SeedReport::new(inst, a.clone(), SeedMethod::File, 0),
    };
    let oracle = match &req.seed {
        SeedChoice::Oracle => Some(OracleResult {
            best_pow_n: seed.pow_n.clone(),
            argmax: seed.allocation.clone(),
            enumerated: 0,
        }),
        _ => try_oracle(inst, req.oracle_cap)?,
    };
    let seed_is_optimal = oracle
        .as_ref()
        .map(|o| positive_welfare(inst, &o.argmax) == positive_welfare(inst, &seed.allocation));

    let mut warnings = Vec::new();
    let (output, final_input, rounds, restarts, restart_cap, traces, alpha_pow_n, bound, reference) =
        match req.algorithm {
            Algorithm::Alg1 => {
                let r = run_alg1(inst, &seed.allocation, false)?;
                if seed_is_optimal == Some(true) && !r.warnings.is_empty() {
                    return Err(Error::Invariant {
                        message: r.warnings.join("; "),
                        trace: Some(Box::new(r.trace)),
                    }
                    .into());
                }
                warnings.extend(r.warnings);
                let alpha = pow(&int(2), n.saturating_sub(1));
                (
                    r.output,
                    seed.allocation.clone(),
                    r.rounds,
                    None,
                    None,
                    vec![r.trace],
                    alpha,
                    "2^(n-1) * NW^n(output) >= opt".to_string(),
                    oracle.as_ref().map(|o| o.best_pow_n.clone()),
                )
            }
            Algorithm::Alg2 => {
                let run = alg2_driver(inst, &seed.allocation, req.delta.clone())?;
                let alpha = pow(&(int(2) + run.schedule.delta1()), n.saturating_sub(1));
                let rounds = run.traces.iter().map(|t| t.len()).sum();
                (
                    run.output,
                    run.final_input,
                    rounds,
                    Some(run.restarts),
                    Some(run.restart_cap),
                    run.traces,
                    alpha,
                    "(2 + delta1)^(n-1) * NW^n(output) >= NW^n(seed)".to_string(),
                    Some(seed.pow_n.clone()),
                )
            }
        };

    let out_pow_n = nw_pow_n(inst, &output);
    let guaranteed = match req.algorithm {
        Algorithm::Alg1 => seed_is_optimal == Some(true),
        Algorithm::Alg2 => true,
    };
    let note = match (req.algorithm, seed_is_optimal) {
        (Algorithm::Alg1, Some(false)) => {
            Some("efficiency bound not guaranteed: the seed is not Nash-welfare optimal".to_string())
        }
        (Algorithm::Alg1, None) => {
            Some("efficiency bound not guaranteed: seed optimality could not be certified within the oracle cap".to_string())
        }
        _ => None,
    };
    let ratio = |num: &Rational| (!out_pow_n.is_zero()).then(|| rat(&(num / &out_pow_n)));
    let efficiency = EfficiencyRecord {
        bound,
        alpha_pow_n: rat(&alpha_pow_n),
        guaranteed,
        bound_holds: reference.map(|r| &alpha_pow_n * &out_pow_n >= r),
        ratio_vs_seed: ratio(&seed.pow_n),
        ratio_vs_oracle: oracle.as_ref().and_then(|o| ratio(&o.best_pow_n)),
        note,
    };

    let subset_of_input = output.is_sub_allocation_of(&final_input);
    let final_input =
        (final_input != seed.allocation).then(|| AllocationDoc::from_allocation(&final_input));
    Ok(SolveReport {
        format: FORMAT.into(),
        indices: INDICES.into(),
        command: "solve".into(),
        input_digest: digest(inst, &[]),
        instance: InstanceRecord::new(inst),
        pipeline: SolveParams {
            algorithm: req.algorithm.name().into(),
            seed_method: req.seed.name().into(),
            delta: req.delta.as_ref().map(rat),
            oracle_cap: req.oracle_cap.to_string(),
            trace: req.trace,
            seed_allocation: match &req.seed {
                SeedChoice::File(a) => Some(AllocationDoc::from_allocation(a)),
                _ => None,
            },
        },
        seed: SeedRecord {
            method: seed_method_name(seed.method).into(),
            allocation: AllocationDoc::from_allocation(&seed.allocation),
            pow_n: rat(&seed.pow_n),
            moves: seed.moves,
        },
        output: AllocationDoc::from_allocation(&output),
        final_input,
        welfare: WelfareRecord {
            seed: rat(&seed.pow_n),
            output: rat(&out_pow_n),
            oracle: oracle.as_ref().map(|o| rat(&o.best_pow_n)),
        },
        efficiency,
        fairness: fairness(inst, &output),
        subset_of_input,
        rounds,
        restarts,
        restart_cap,
        warnings,
        trace_text: req.trace.then(|| trace_text(&traces)),
        trace: req.trace.then_some(traces),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Ef,
    Ef1,
    Efx,
    Pareto,
    LargeMarket,
    Ratio,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Ef => "ef",
            CheckKind::Ef1 => "ef1",
            CheckKind::Efx => "efx",
            CheckKind::Pareto => "pareto",
            CheckKind::LargeMarket => "large-market",
            CheckKind::Ratio => "ratio",
        }
    }
}

impl FromStr for CheckKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "ef" => CheckKind::Ef,
            "ef1" => CheckKind::Ef1,
            "efx" => CheckKind::Efx,
            "pareto" => CheckKind::Pareto,
            "large-market" => CheckKind::LargeMarket,
            "ratio" => CheckKind::Ratio,
            _ => return Err(format!("unknown check {s:?}")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRequest {
    pub checks: Vec<CheckKind>,
    pub eps: Option<Rational>,
    /// Defaults to `2^(n-1)`.
    pub alpha_pow_n: Option<Rational>,
    pub oracle_cap: u128,
}

pub fn verify(inst: &Instance, alloc: &Allocation, req: &VerifyRequest) -> CliResult<VerifyReport> {
    let n = inst.agents();
    let cfg = OracleConfig::with_cap(req.oracle_cap);
    let mut checks = Vec::new();
    for &kind in &req.checks {
        let record = match kind {
            CheckKind::Ef | CheckKind::Ef1 | CheckKind::Efx => {
                let notion = match kind {
                    CheckKind::Ef => Fairness::Ef,
                    CheckKind::Ef1 => Fairness::Ef1,
                    _ => Fairness::Efx,
                };
                let v = check(inst, alloc, notion);
                CheckRecord {
                    name: kind.name().into(),
                    pass: v.holds,
                    detail: match &v.witness {
                        None => "holds".into(),
                        Some(w) => format!("agent {} envies agent {}", w.envier, w.envied),
                    },
                    witness: v.witness,
                }
            }
            CheckKind::Pareto => {
                let c = pareto_optimal_bruteforce(inst, alloc, cfg)?;
                CheckRecord {
                    name: kind.name().into(),
                    pass: c.optimal,
                    detail: match &c.dominator {
                        None => format!(
                            "no dominating allocation among {} assignments",
                            c.enumerated
                        ),
                        Some(d) => format!("dominated by {}", render_allocation(d).trim_end()),
                    },
                    witness: None,
                }
            }
            CheckKind::LargeMarket => {
                let eps = req
                    .eps
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("the large-market check needs --eps".into()))?;
                let c = check_large_market(inst, eps);
                let mut detail = format!("per-total tightest eps {}", rat(&c.tightest_eps));
                if alloc.is_complete() {
                    let w = check_large_market_wrt(inst, alloc, eps)?;
                    detail.push_str(&format!(
                        "; per-bundle tightest eps {} ({})",
                        rat(&w.tightest_eps),
                        if w.holds { "holds" } else { "fails" }
                    ));
                }
                CheckRecord {
                    name: kind.name().into(),
                    pass: c.holds,
                    detail,
                    witness: None,
                }
            }
            CheckKind::Ratio => {
                let alpha = req
                    .alpha_pow_n
                    .clone()
                    .unwrap_or_else(|| pow(&int(2), n.saturating_sub(1)));
                let all = (0..inst.items()).collect();
                let opt = opt_bruteforce(inst, &all, cfg)?;
                let value = nw_pow_n(inst, alloc);
                CheckRecord {
                    name: kind.name().into(),
                    pass: &alpha * &value >= opt.best_pow_n,
                    detail: format!(
                        "alpha^n = {}, NW^n = {}, opt = {}",
                        rat(&alpha),
                        rat(&value),
                        rat(&opt.best_pow_n)
                    ),
                    witness: None,
                }
            }
        };
        checks.push(record);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        format: FORMAT.into(),
        indices: INDICES.into(),
        command: "verify".into(),
        input_digest: digest(inst, &[&render_allocation(alloc)]),
        instance: InstanceRecord::new(inst),
        allocation: AllocationDoc::from_allocation(alloc),
        params: VerifyParams {
            checks: req.checks.iter().map(|c| c.name().to_string()).collect(),
            eps: req.eps.as_ref().map(rat),
            alpha_pow_n: req.alpha_pow_n.as_ref().map(rat),
            oracle_cap: req.oracle_cap.to_string(),
        },
        checks,
        all_pass,
    })
}

#[derive(Debug, Clone)]
pub enum GenerateRequest {
    LowerBound {
        n: usize,
        eps: Rational,
    },
    Random {
        n: usize,
        m: usize,
        max_value: u64,
        seed: u64,
    },
    LargeMarket {
        n: usize,
        m: usize,
        eps: Rational,
        max_value: u64,
        seed: u64,
    },
}

pub fn generate(req: &GenerateRequest) -> CliResult<Instance> {
    Ok(match req {
        GenerateRequest::LowerBound { n, eps } => lower_bound_instance(*n, eps)?,
        GenerateRequest::Random {
            n,
            m,
            max_value,
            seed,
        } => random_instance(*n, *m, *max_value, *seed)?,
        GenerateRequest::LargeMarket {
            n,
            m,
            eps,
            max_value,
            seed,
        } => random_large_market_instance_with(*n, *m, eps, *max_value, *seed)?,
    })
}

fn field<'a>(v: &'a serde_json::Value, key: &str) -> CliResult<&'a serde_json::Value> {
    v.get(key)
        .ok_or_else(|| CliError::parse("report", format!("missing field {key:?}")))
}

/// Re-runs the pipeline recorded in a report and renders the new report.
pub fn replay(text: &str) -> CliResult<String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::parse("report", e.to_string()))?;
    let command = field(&value, "command")?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let bad = |e: String| CliError::parse("report", e);
    match command.as_str() {
        "solve" => {
            let r: SolveReport = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
            let inst = r.instance.to_instance().map_err(bad)?;
            let p = &r.pipeline;
            let seed = match p.seed_method.as_str() {
                "oracle" => SeedChoice::Oracle,
                "local-search" => SeedChoice::LocalSearch,
                "file" => {
                    let doc = p
                        .seed_allocation
                        .as_ref()
                        .ok_or_else(|| bad("file seed without an embedded allocation".into()))?;
                    SeedChoice::File(doc.to_allocation(&inst).map_err(bad)?)
                }
                other => return Err(bad(format!("unknown seed method {other:?}"))),
            };
            let req = SolveRequest {
                algorithm: p.algorithm.parse().map_err(bad)?,
                seed,
                delta: p
                    .delta
                    .as_deref()
                    .map(parse_rational)
                    .transpose()
                    .map_err(|e| bad(e.to_string()))?,
                oracle_cap: p
                    .oracle_cap
                    .parse()
                    .map_err(|_| bad("bad oracle cap".into()))?,
                trace: p.trace,
            };
            Ok(crate::report::to_json(&solve(&inst, &req)?))
        }
        "verify" => {
            let r: VerifyReport = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
            let inst = r.instance.to_instance().map_err(bad)?;
            let alloc = r.allocation.to_allocation(&inst).map_err(bad)?;
            let p = &r.params;
            let parse_opt = |s: &Option<String>| {
                s.as_deref()
                    .map(parse_rational)
                    .transpose()
                    .map_err(|e| bad(e.to_string()))
            };
            let req = VerifyRequest {
                checks: p
                    .checks
                    .iter()
                    .map(|c| c.parse())
                    .collect::<Result<_, _>>()
                    .map_err(bad)?,
                eps: parse_opt(&p.eps)?,
                alpha_pow_n: parse_opt(&p.alpha_pow_n)?,
                oracle_cap: p
                    .oracle_cap
                    .parse()
                    .map_err(|_| bad("bad oracle cap".into()))?,
            };
            Ok(crate::report::to_json(&verify(&inst, &alloc, &req)?))
        }
        other => Err(bad(format!("unknown command {other:?}"))),
    }
}
