//! TOML instance and allocation files.
//!
//! ```toml
//! agents = 2
//! items = 3
//! valuations = [["1", "1/40", "0.9"], ["1", "9/10", "1/40"]]
//! ```
//!
//! ```toml
//! bundles = [[0, 2], []]
//! donated = [1]
//! ```
//!
//! Indices are 0-based.

use efx_core::model::{Allocation, Instance};
use efx_core::rational::{parse_rational, Rational};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    agents: usize,
    items: usize,
    valuations: Vec<Vec<Spanned<String>>>,
}

#[derive(Debug, Serialize)]
struct InstanceOut<'a> {
    agents: usize,
    items: usize,
    valuations: &'a [Vec<String>],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationDoc {
    pub bundles: Vec<Vec<usize>>,
    #[serde(default)]
    pub donated: Vec<usize>,
}

impl AllocationDoc {
    pub fn from_allocation(a: &Allocation) -> Self {
        AllocationDoc {
            bundles: a.bundles().iter().map(|b| b.items().to_vec()).collect(),
            donated: a.donated().items().to_vec(),
        }
    }

    pub fn to_allocation(&self, inst: &Instance) -> Result<Allocation, String> {
        if self.bundles.len() != inst.agents() {
            return Err(format!(
                "{} bundles for {} agents",
                self.bundles.len(),
                inst.agents()
            ));
        }
        let alloc =
            Allocation::from_lists(&self.bundles, inst.items()).map_err(|e| e.to_string())?;
        if alloc.donated().items() != self.donated.as_slice() {
            let mut listed = self.donated.clone();
            listed.sort_unstable();
            if alloc.donated().items() != listed.as_slice() {
                return Err(format!(
                    "donated list {:?} does not match the unallocated items {}",
                    self.donated,
                    alloc.donated()
                ));
            }
        }
        Ok(alloc)
    }
}

/// Decimal rendering for integers, `p/q` otherwise.
pub fn literal(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, col)
}

fn toml_error(path: &str, text: &str, e: toml::de::Error) -> CliError {
    let message = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            CliError::parse(path, format!("line {line}, column {col}: {message}"))
        }
        None => CliError::parse(path, message),
    }
}

pub fn parse_instance(path: &str, text: &str) -> CliResult<Instance> {
    let doc: InstanceDoc = toml::from_str(text).map_err(|e| toml_error(path, text, e))?;
    if doc.valuations.len() != doc.agents {
        return Err(CliError::parse(
            path,
            format!(
                "agents = {} but valuations has {} rows",
                doc.agents,
                doc.valuations.len()
            ),
        ));
    }
    let mut rows = Vec::with_capacity(doc.agents);
    for (i, row) in doc.valuations.iter().enumerate() {
        if row.len() != doc.items {
            return Err(CliError::parse(
                path,
                format!(
                    "items = {} but valuation row {i} has {} entries",
                    doc.items,
                    row.len()
                ),
            ));
        }
        let mut parsed = Vec::with_capacity(row.len());
        for (g, cell) in row.iter().enumerate() {
            let (line, col) = line_col(text, cell.span().start);
            let at = format!("line {line}, column {col} (agent {i}, item {g})");
            let v = parse_rational(cell.get_ref())
                .map_err(|e| CliError::parse(path, format!("{at}: {e}")))?;
            if v <= Rational::default() {
                return Err(CliError::parse(
                    path,
                    format!("{at}: value {} is not positive", cell.get_ref()),
                ));
            }
            parsed.push(v);
        }
        rows.push(parsed);
    }
    Instance::new(rows).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn render_instance(inst: &Instance) -> String {
    let valuations: Vec<Vec<String>> = inst
        .rows()
        .iter()
        .map(|r| r.iter().map(literal).collect())
        .collect();
    toml::to_string(&InstanceOut {
        agents: inst.agents(),
        items: inst.items(),
        valuations: &valuations,
    })
    .expect("instance documents serialize")
}

pub fn parse_allocation(path: &str, text: &str, inst: &Instance) -> CliResult<Allocation> {
    let doc: AllocationDoc = toml::from_str(text).map_err(|e| toml_error(path, text, e))?;
    doc.to_allocation(inst)
        .map_err(|m| CliError::parse(path, m))
}

pub fn render_allocation(alloc: &Allocation) -> String {
    toml::to_string(&AllocationDoc::from_allocation(alloc)).expect("allocation documents serialize")
}

pub fn read_instance(path: &str) -> CliResult<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(path, e.to_string()))?;
    parse_instance(path, &text)
}

pub fn read_allocation(path: &str, inst: &Instance) -> CliResult<Allocation> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(path, e.to_string()))?;
    parse_allocation(path, &text, inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use efx_core::fixtures::*;
    use efx_core::rational::ratio;

    #[test]
    fn instance_round_trip() {
        let inst = Instance::new(vec![
            vec![ratio(1, 1), ratio(1, 40), ratio(9, 10)],
            vec![ratio(1, 1), ratio(9, 10), ratio(1, 40)],
        ])
        .unwrap();
        let text = render_instance(&inst);
        assert_eq!(parse_instance("x", &text).unwrap(), inst);
        assert_eq!(render_instance(&parse_instance("x", &text).unwrap()), text);
    }

    #[test]
    fn decimals_are_exact() {
        let text = "agents = 1\nitems = 2\nvaluations = [[\"0.1\", \"2.50\"]]\n";
        let inst = parse_instance("x", text).unwrap();
        assert_eq!(inst.row(0), &[ratio(1, 10), ratio(5, 2)]);
    }

    #[test]
    fn bad_value_reports_position() {
        let text = "agents = 1\nitems = 2\nvaluations = [\n  [\"1\", \"-3\"],\n]\n";
        let err = parse_instance("inst.toml", text).unwrap_err().to_string();
        assert!(err.contains("line 4, column 9"), "{err}");
        assert!(err.contains("agent 0, item 1"), "{err}");
        let text = "agents = 1\nitems = 1\nvaluations = [[\"abc\"]]\n";
        let err = parse_instance("inst.toml", text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let text = "agents = 2\nitems = 1\nvaluations = [[\"1\"]]\n";
        assert!(parse_instance("x", text).is_err());
    }

    #[test]
    fn allocation_round_trip() {
        let inst = inheritance();
        let y = Allocation::from_lists(&[vec![RING], vec![CAR], vec![NECKLACE]], 4).unwrap();
        let text = render_allocation(&y);
        assert!(text.contains("donated = [2]"), "{text}");
        assert_eq!(parse_allocation("y", &text, &inst).unwrap(), y);
    }

    #[test]
    fn inconsistent_donated_list_is_rejected() {
        let inst = inheritance();
        let text = "bundles = [[1], [0], [3]]\ndonated = []\n";
        assert!(parse_allocation("y", text, &inst).is_err());
        let text = "bundles = [[1], [0], [3]]\n";
        assert!(parse_allocation("y", text, &inst).is_err());
    }
}
