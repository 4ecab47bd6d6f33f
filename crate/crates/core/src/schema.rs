//! JSON instance format: parsing with structured diagnostics, canonical
//! serialization (sorted maps, sorted bundle lists), and renderers for
//! allocations, traces, and audit reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::axioms::AxiomReport;
use crate::error::{Error, Result};
use crate::prefs::{
    BundleOrder, Comparator, LpNode, LpTree, MarginalPreference, Preference, ResponsivePref,
};
use crate::problem::{Allocation, Endowment, ObjSet, Problem};
use crate::ttc::{MechanismTrace, TradingCycle};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub agents: Vec<String>,
    pub objects: Vec<String>,
    pub endowment: BTreeMap<String, Vec<String>>,
    pub preferences: BTreeMap<String, PreferenceFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PreferenceFile {
    Lex {
        order: Vec<String>,
    },
    Responsive {
        marginal: Vec<String>,
        comparator: ComparatorFile,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overrides: Vec<(Vec<String>, Vec<String>)>,
    },
    Cl {
        tree: TreeFile,
    },
    Table {
        order: Vec<Vec<String>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum ComparatorFile {
    Additive { utilities: BTreeMap<String, f64> },
    Table { order: Vec<Vec<String>> },
}

/// Nested `{object, in, out}` record; leaves carry only the object.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeFile {
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "in")]
    pub in_child: Option<Box<TreeFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<Box<TreeFile>>,
}

/// A standalone bundle-order file (input of the efficiency-gap witness).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BundleOrderFile {
    pub objects: Vec<String>,
    pub order: Vec<Vec<String>>,
}

fn objset_from_labels(
    labels: &[String],
    bundle: &[String],
    path: &str,
) -> Result<ObjSet> {
    let mut set = ObjSet::EMPTY;
    for l in bundle {
        let idx = labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::Invalid(format!("{path}: unknown object '{l}'")))?;
        if set.contains(idx) {
            return Err(Error::Invalid(format!("{path}: duplicate object '{l}'")));
        }
        set = set.with(idx);
    }
    Ok(set)
}

fn marginal_from_labels(
    labels: &[String],
    order: &[String],
    path: &str,
) -> Result<MarginalPreference> {
    let mut idxs = Vec::with_capacity(order.len());
    for l in order {
        let idx = labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::Invalid(format!("{path}: unknown object '{l}'")))?;
        idxs.push(idx);
    }
    MarginalPreference::new(idxs, labels.len())
        .map_err(|e| Error::Invalid(format!("{path}: {e}")))
}

fn bundle_order_from_labels(
    labels: &[String],
    order: &[Vec<String>],
    path: &str,
) -> Result<BundleOrder> {
    let mut bundles = Vec::with_capacity(order.len());
    for (i, b) in order.iter().enumerate() {
        bundles.push(objset_from_labels(labels, b, &format!("{path}/{i}"))?);
    }
    BundleOrder::new(bundles, labels.len()).map_err(|e| Error::Invalid(format!("{path}: {e}")))
}

fn tree_from_file(
    labels: &[String],
    file: &TreeFile,
    nodes: &mut Vec<LpNode>,
    path: &str,
) -> Result<usize> {
    let label = labels
        .iter()
        .position(|x| x == &file.object)
        .ok_or_else(|| Error::Invalid(format!("{path}: unknown object '{}'", file.object)))?;
    let in_child = file
        .in_child
        .as_ref()
        .map(|t| tree_from_file(labels, t, nodes, &format!("{path}/in")))
        .transpose()?;
    let out_child = file
        .out
        .as_ref()
        .map(|t| tree_from_file(labels, t, nodes, &format!("{path}/out")))
        .transpose()?;
    nodes.push(LpNode { label, in_child, out_child });
    Ok(nodes.len() - 1)
}

fn preference_from_file(
    labels: &[String],
    file: &PreferenceFile,
    path: &str,
) -> Result<Preference> {
    match file {
        PreferenceFile::Lex { order } => {
            Ok(Preference::Lex(marginal_from_labels(labels, order, &format!("{path}/order"))?))
        }
        PreferenceFile::Responsive { marginal, comparator, overrides } => {
            let marginal = marginal_from_labels(labels, marginal, &format!("{path}/marginal"))?;
            let comparator = match comparator {
                ComparatorFile::Additive { utilities } => {
                    let mut u = vec![f64::NAN; labels.len()];
                    for (l, &v) in utilities {
                        let idx = labels.iter().position(|x| x == l).ok_or_else(|| {
                            Error::Invalid(format!(
                                "{path}/comparator/utilities: unknown object '{l}'"
                            ))
                        })?;
                        u[idx] = v;
                    }
                    if u.iter().any(|v| v.is_nan()) {
                        return Err(Error::Invalid(format!(
                            "{path}/comparator/utilities: every object needs a utility"
                        )));
                    }
                    Comparator::Additive { utilities: u }
                }
                ComparatorFile::Table { order } => Comparator::Table(bundle_order_from_labels(
                    labels,
                    order,
                    &format!("{path}/comparator/order"),
                )?),
            };
            let mut pairs = Vec::new();
            for (i, (above, below)) in overrides.iter().enumerate() {
                pairs.push((
                    objset_from_labels(labels, above, &format!("{path}/overrides/{i}/0"))?,
                    objset_from_labels(labels, below, &format!("{path}/overrides/{i}/1"))?,
                ));
            }
            Ok(Preference::Responsive(
                ResponsivePref::new(marginal, comparator, pairs)
                    .map_err(|e| Error::Invalid(format!("{path}: {e}")))?,
            ))
        }
        PreferenceFile::Cl { tree } => {
            let mut nodes = Vec::new();
            let root = tree_from_file(labels, tree, &mut nodes, &format!("{path}/tree"))?;
            Ok(Preference::Cl(
                LpTree::new(nodes, root, labels.len())
                    .map_err(|e| Error::Invalid(format!("{path}/tree: {e}")))?,
            ))
        }
        PreferenceFile::Table { order } => Ok(Preference::Table(bundle_order_from_labels(
            labels,
            order,
            &format!("{path}/order"),
        )?)),
    }
}

/// Parse and validate a problem instance from JSON bytes. All structural
/// invariants are enforced here; diagnostics carry JSON-pointer-like paths.
pub fn parse_problem(bytes: &[u8]) -> Result<Problem> {
    let file: ProblemFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::Invalid(format!("instance JSON: {e}")))?;
    problem_from_file(&file)
}

pub fn problem_from_file(file: &ProblemFile) -> Result<Problem> {
    let labels = &file.objects;
    let mut parts = Vec::with_capacity(file.agents.len());
    for agent in &file.agents {
        let bundle = file.endowment.get(agent).ok_or_else(|| {
            Error::Invalid(format!("/endowment: missing entry for agent '{agent}'"))
        })?;
        parts.push(objset_from_labels(labels, bundle, &format!("/endowment/{agent}"))?);
    }
    for agent in file.endowment.keys() {
        if !file.agents.contains(agent) {
            return Err(Error::Invalid(format!("/endowment: unknown agent '{agent}'")));
        }
    }
    let endowment = Endowment::new(parts, labels.len())
        .map_err(|e| Error::Invalid(format!("/endowment: {e}")))?;
    let mut prefs = Vec::with_capacity(file.agents.len());
    for agent in &file.agents {
        let pref = file.preferences.get(agent).ok_or_else(|| {
            Error::Invalid(format!("/preferences: missing entry for agent '{agent}'"))
        })?;
        prefs.push(preference_from_file(labels, pref, &format!("/preferences/{agent}"))?);
    }
    for agent in file.preferences.keys() {
        if !file.agents.contains(agent) {
            return Err(Error::Invalid(format!("/preferences: unknown agent '{agent}'")));
        }
    }
    Problem::new(file.agents.clone(), file.objects.clone(), endowment, prefs)
}

fn tree_to_file(prob: &Problem, tree: &LpTree, id: usize) -> TreeFile {
    let node = tree.node(id);
    TreeFile {
        object: prob.object_label(node.label).to_string(),
        in_child: node.in_child.map(|c| Box::new(tree_to_file(prob, tree, c))),
        out: node.out_child.map(|c| Box::new(tree_to_file(prob, tree, c))),
    }
}

fn preference_to_file(prob: &Problem, pref: &Preference) -> PreferenceFile {
    let label = |o: usize| prob.object_label(o).to_string();
    let order_labels =
        |m: &MarginalPreference| -> Vec<String> { m.order().iter().map(|&o| label(o)).collect() };
    let bundles =
        |b: &BundleOrder| -> Vec<Vec<String>> { b.order().iter().map(|&s| prob.labels_of(s)).collect() };
    match pref {
        Preference::Lex(m) => PreferenceFile::Lex { order: order_labels(m) },
        Preference::Responsive(r) => PreferenceFile::Responsive {
            marginal: order_labels(r.marginal()),
            comparator: match r.comparator() {
                Comparator::Additive { utilities } => ComparatorFile::Additive {
                    utilities: utilities
                        .iter()
                        .enumerate()
                        .map(|(o, &u)| (label(o), u))
                        .collect(),
                },
                Comparator::Table(t) => ComparatorFile::Table { order: bundles(t) },
            },
            overrides: r
                .overrides()
                .iter()
                .map(|&(a, b)| (prob.labels_of(a), prob.labels_of(b)))
                .collect(),
        },
        Preference::Cl(t) => PreferenceFile::Cl { tree: tree_to_file(prob, t, t.root()) },
        Preference::Table(b) => PreferenceFile::Table { order: bundles(b) },
    }
}

/// Canonical file form of a problem (sorted maps, sorted bundle lists).
pub fn problem_to_file(prob: &Problem) -> ProblemFile {
    ProblemFile {
        agents: prob.agent_labels().to_vec(),
        objects: prob.object_labels().to_vec(),
        endowment: (0..prob.num_agents())
            .map(|i| (prob.agent_label(i).to_string(), prob.labels_of(prob.endowment().part(i))))
            .collect(),
        preferences: (0..prob.num_agents())
            .map(|i| {
                (prob.agent_label(i).to_string(), preference_to_file(prob, prob.preference(i)))
            })
            .collect(),
    }
}

/// Parse a standalone bundle-order file.
pub fn parse_bundle_order(bytes: &[u8]) -> Result<(Vec<String>, BundleOrder)> {
    let file: BundleOrderFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::Invalid(format!("preference JSON: {e}")))?;
    let order = bundle_order_from_labels(&file.objects, &file.order, "/order")?;
    Ok((file.objects, order))
}

/// Allocation as a sorted agent -> sorted bundle map.
pub fn allocation_json(prob: &Problem, alloc: &Allocation) -> Value {
    let map: BTreeMap<String, Vec<String>> = (0..prob.num_agents())
        .map(|i| (prob.agent_label(i).to_string(), prob.labels_of(alloc.part(i))))
        .collect();
    json!(map)
}

fn cycle_json(prob: &Problem, cycle: &TradingCycle) -> Value {
    // flat alternating sequence o_1, i_1, o_2, i_2, ... (closing edge implied)
    let mut seq = Vec::new();
    for l in 0..cycle.len() {
        seq.push(prob.object_label(cycle.objects()[l]).to_string());
        seq.push(prob.agent_label(cycle.agents()[l]).to_string());
    }
    json!(seq)
}

/// Full trace rendering: one record per step.
pub fn trace_json(prob: &Problem, trace: &MechanismTrace) -> Value {
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(t, step)| {
            let targets: BTreeMap<String, String> = step
                .targets
                .iter()
                .map(|&(a, o)| {
                    (prob.agent_label(a).to_string(), prob.object_label(o).to_string())
                })
                .collect();
            let owners: BTreeMap<String, String> = step
                .remaining
                .iter()
                .map(|o| {
                    (
                        prob.object_label(o).to_string(),
                        prob.agent_label(prob.endowment().owner(o)).to_string(),
                    )
                })
                .collect();
            let partial: BTreeMap<String, Vec<String>> = (0..prob.num_agents())
                .map(|i| (prob.agent_label(i).to_string(), prob.labels_of(step.partial[i])))
                .collect();
            json!({
                "step": t + 1,
                "remaining": prob.labels_of(step.remaining),
                "pointing": targets,
                "owners": owners,
                "arising_cycles": step.arising.iter().map(|c| cycle_json(prob, c)).collect::<Vec<_>>(),
                "executed_cycles": step.executed.iter().map(|c| cycle_json(prob, c)).collect::<Vec<_>>(),
                "partial": partial,
            })
        })
        .collect();
    json!({
        "steps": steps,
        "allocation": allocation_json(prob, &trace.allocation),
    })
}

/// Audit report rendering.
pub fn report_json(prob: &Problem, report: &AxiomReport) -> Value {
    json!({
        "axiom": report.axiom.name(),
        "verdict": if report.holds { "holds" } else { "fails" },
        "witness": if report.holds {
            Value::Null
        } else {
            Value::String(crate::rules::describe_witness(prob, report))
        },
    })
}

/// Deterministic pretty serialization (two-space indent, trailing newline).
pub fn to_canonical_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suites;

    #[test]
    fn fixture_problems_round_trip_through_the_file_format() {
        for prob in [
            suites::responsive_swap_problem(),
            suites::responsive_drop_problem(),
            suites::comparator_gap_problem(),
            suites::branching_cl_problem(),
        ] {
            let file = problem_to_file(&prob);
            let bytes = serde_json::to_vec(&file).unwrap();
            let parsed = parse_problem(&bytes).unwrap();
            let file2 = problem_to_file(&parsed);
            assert_eq!(file, file2);
            // serialization is byte-stable
            assert_eq!(serde_json::to_vec(&file2).unwrap(), bytes);
        }
    }

    #[test]
    fn duplicate_objects_in_a_marginal_order_are_rejected() {
        let bad = r#"{
            "agents": ["1", "2"],
            "objects": ["a", "b", "c"],
            "endowment": {"1": ["a", "b"], "2": ["c"]},
            "preferences": {
                "1": {"kind": "lex", "order": ["a", "a", "b"]},
                "2": {"kind": "lex", "order": ["a", "b", "c"]}
            }
        }"#;
        let err = parse_problem(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("/preferences/1/order"), "{err}");
    }

    #[test]
    fn responsive_override_fixture_parses_and_ranks_the_override_pair() {
        let text = r#"{
            "agents": ["1", "2", "3"],
            "objects": ["a", "b", "c", "d"],
            "endowment": {"1": ["a", "b"], "2": ["c"], "3": ["d"]},
            "preferences": {
                "1": {"kind": "responsive", "marginal": ["d", "b", "c", "a"],
                       "comparator": {"scheme": "additive",
                                      "utilities": {"a": 1.0, "b": 9.0, "c": 8.0, "d": 10.0}},
                       "overrides": [[["b", "c"], ["a", "d"]]]},
                "2": {"kind": "lex", "order": ["d", "b", "c", "a"]},
                "3": {"kind": "lex", "order": ["b", "a", "c", "d"]}
            }
        }"#;
        let prob = parse_problem(text.as_bytes()).unwrap();
        let bc = ObjSet::from_iter([1, 2]);
        let ad = ObjSet::from_iter([0, 3]);
        assert_eq!(
            prob.preference(0).cmp_bundles(bc, ad),
            std::cmp::Ordering::Greater
        );
    }

    #[test]
    fn missing_endowment_entries_are_diagnosed() {
        let bad = r#"{
            "agents": ["1", "2"],
            "objects": ["a", "b"],
            "endowment": {"1": ["a", "b"]},
            "preferences": {
                "1": {"kind": "lex", "order": ["a", "b"]},
                "2": {"kind": "lex", "order": ["a", "b"]}
            }
        }"#;
        let err = parse_problem(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("/endowment"), "{err}");
    }
}
