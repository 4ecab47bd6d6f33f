//! Manipulation-strategy generators (truncation, drop, subset-drop, and
//! the LP-tree drop surgery), incentive auditors, opportunity sets, and the
//! obvious-manipulability audit.

use std::cmp::Ordering;

use crate::axioms::{Axiom, AxiomReport, Witness};
use crate::error::{Error, Result};
use crate::prefs::{Comparator, LpTree, MarginalPreference, Preference, ResponsivePref};
use crate::problem::{AgentIdx, ObjIdx, ObjSet, Problem};
use crate::rules::Rule;
use crate::suites::all_marginals;

/// The audited manipulation classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyClass {
    Truncation,
    Drop,
    SubsetDrop,
    /// Every marginal misreport (lexicographic domain only).
    Any,
}

impl StrategyClass {
    pub fn axiom(self) -> Axiom {
        match self {
            StrategyClass::Truncation => Axiom::Tp,
            StrategyClass::Drop => Axiom::Dsp,
            StrategyClass::SubsetDrop => Axiom::Sdsp,
            StrategyClass::Any => Axiom::Sp,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyClass::Truncation => "truncation",
            StrategyClass::Drop => "drop",
            StrategyClass::SubsetDrop => "subset-drop",
            StrategyClass::Any => "any",
        }
    }
}

/// How a misreport was produced (for witnesses and rendering).
#[derive(Clone, Debug)]
pub enum Misreport {
    /// A marginal-order misreport (possibly a drop/truncation of the truth).
    Marginal(Vec<ObjIdx>),
    /// An LP-tree drop of the named object.
    ClDrop(ObjIdx),
}

/// A successful manipulation: the misreport yields a strictly better
/// assignment under the agent's true preference.
#[derive(Clone, Debug)]
pub struct ManipulationWitness {
    pub agent: AgentIdx,
    pub class: StrategyClass,
    pub misreport: Misreport,
    pub truthful: ObjSet,
    pub manipulated: ObjSet,
    pub note: String,
}

/// All subset-drop strategies of a marginal order: one per subset `X` of
/// the non-endowed objects, moving `X` below everything else while keeping
/// the relative order inside and outside `X`. The family has exactly
/// `2^|O \ endow|` members (distinct marginals may coincide when a dropped
/// tail was already at the bottom); the identity is the `X = ∅` member.
pub fn gen_subset_drops(
    m: &MarginalPreference,
    endow: ObjSet,
) -> Vec<(ObjSet, MarginalPreference)> {
    let outside = ObjSet::full(m.num_objects()).minus(endow);
    outside.subsets().map(|x| (x, m.with_dropped(x))).collect()
}

/// Drop strategies: the singleton subset-drops, plus the identity.
pub fn gen_drops(m: &MarginalPreference, endow: ObjSet) -> Vec<(ObjSet, MarginalPreference)> {
    let outside = ObjSet::full(m.num_objects()).minus(endow);
    let mut out = vec![(ObjSet::EMPTY, m.clone())];
    out.extend(outside.iter().map(|o| {
        let x = ObjSet::singleton(o);
        (x, m.with_dropped(x))
    }));
    out
}

/// Truncation strategies: drops of tail subsets of the non-endowed objects.
/// Both the strict form (everything strictly below a cutoff) and the weak
/// form (cutoff included) are generated, so the family contains the
/// identity as well as the full drop of every non-endowed object.
/// Deduplicated by dropped set; ordered by increasing drop size.
pub fn gen_truncations(
    m: &MarginalPreference,
    endow: ObjSet,
) -> Vec<(ObjSet, MarginalPreference)> {
    let outside = ObjSet::full(m.num_objects()).minus(endow);
    let mut seen: Vec<ObjSet> = Vec::new();
    for &y in m.order() {
        for strict in [true, false] {
            let cut = m.rank(y);
            let tail = ObjSet::from_iter(outside.iter().filter(|&o| {
                if strict {
                    m.rank(o) > cut
                } else {
                    m.rank(o) >= cut
                }
            }));
            if !seen.contains(&tail) {
                seen.push(tail);
            }
        }
    }
    seen.sort_by_key(|t| (t.len(), t.0));
    seen.into_iter().map(|x| (x, m.with_dropped(x))).collect()
}

/// The drop strategy on the conditionally lexicographic domain: splice
/// every `x`-vertex out of the tree and append `x` below every leaf. The
/// result ranks any nonempty bundle avoiding `x` above `{x}` and agrees
/// with the original on bundle pairs avoiding `x`.
pub fn drop_cl(tree: &LpTree, x: ObjIdx, endow: ObjSet) -> Result<LpTree> {
    if endow.contains(x) {
        return Err(Error::Domain(
            "drop strategies only demote objects outside the endowment".into(),
        ));
    }
    tree.drop_object(x)
}

fn misreports(
    pref: &Preference,
    endow: ObjSet,
    cls: StrategyClass,
) -> Result<Vec<(Misreport, Preference)>> {
    let m = pref.num_objects();
    let wrap = |order: MarginalPreference| -> Result<Preference> {
        match pref {
            Preference::Lex(_) => Ok(Preference::Lex(order)),
            Preference::Responsive(_) => {
                // same-kind extension: generic additive utilities by rank
                let utilities: Vec<f64> = {
                    let mut u = vec![0.0; m];
                    for (pos, &o) in order.order().iter().enumerate() {
                        u[o] = (1u64 << (m - pos)) as f64;
                    }
                    u
                };
                Ok(Preference::Responsive(ResponsivePref::new(
                    order,
                    Comparator::Additive { utilities },
                    vec![],
                )?))
            }
            _ => unreachable!("marginal misreports are only built for marginal-bearing kinds"),
        }
    };
    match pref {
        Preference::Lex(_) | Preference::Responsive(_) => {
            let base = pref.marginal();
            let family: Vec<(Misreport, MarginalPreference)> = match cls {
                StrategyClass::Truncation => gen_truncations(&base, endow)
                    .into_iter()
                    .map(|(_, o)| (Misreport::Marginal(o.order().to_vec()), o))
                    .collect(),
                StrategyClass::Drop => gen_drops(&base, endow)
                    .into_iter()
                    .map(|(_, o)| (Misreport::Marginal(o.order().to_vec()), o))
                    .collect(),
                StrategyClass::SubsetDrop => gen_subset_drops(&base, endow)
                    .into_iter()
                    .map(|(_, o)| (Misreport::Marginal(o.order().to_vec()), o))
                    .collect(),
                StrategyClass::Any => {
                    if matches!(pref, Preference::Responsive(_)) {
                        return Err(Error::Domain(
                            "the full misreport audit is offered only on the lexicographic \
                             domain; responsive comparator spaces are unbounded"
                                .into(),
                        ));
                    }
                    all_marginals(m)
                        .into_iter()
                        .map(|o| (Misreport::Marginal(o.order().to_vec()), o))
                        .collect()
                }
            };
            let mut out = Vec::new();
            for (descr, order) in family {
                if order.order() == base.order() {
                    continue; // the identity never manipulates
                }
                out.push((descr, wrap(order)?));
            }
            Ok(out)
        }
        Preference::Cl(tree) => match cls {
            StrategyClass::Drop => {
                let mut out = Vec::new();
                for x in ObjSet::full(m).minus(endow).iter() {
                    out.push((Misreport::ClDrop(x), Preference::Cl(drop_cl(tree, x, endow)?)));
                }
                Ok(out)
            }
            other => Err(Error::Domain(format!(
                "only drop strategies are defined on the conditionally lexicographic domain \
                 (requested {})",
                other.name()
            ))),
        },
        other => Err(Error::Domain(format!(
            "incentive audits are not defined for preference kind '{}'",
            other.kind_name()
        ))),
    }
}

/// Audit a rule for manipulability within a strategy class: holds iff no
/// agent and no strategy in the class yields a strictly better assignment
/// under her true preference. Misreports are evaluated against the agent's
/// true comparator; the first witness in canonical order is returned.
pub fn audit_incentives(
    rule: &Rule,
    prob: &Problem,
    cls: StrategyClass,
) -> Result<AxiomReport> {
    let truth = rule.apply(prob)?;
    for agent in 0..prob.num_agents() {
        let true_pref = prob.preference(agent).clone();
        let endow = prob.endowment().part(agent);
        for (descr, report) in misreports(&true_pref, endow, cls)? {
            let misreported = prob.with_preference(agent, report)?;
            let outcome = rule.apply(&misreported)?;
            if true_pref.cmp_bundles(outcome.part(agent), truth.part(agent))
                == Ordering::Greater
            {
                return Ok(AxiomReport::fails(
                    cls.axiom(),
                    Witness::Manipulation(ManipulationWitness {
                        agent,
                        class: cls,
                        misreport: descr,
                        truthful: truth.part(agent),
                        manipulated: outcome.part(agent),
                        note: String::new(),
                    }),
                ));
            }
        }
    }
    Ok(AxiomReport::holds(cls.axiom()))
}

/// Everything an agent can receive from a marginal rule under a fixed
/// report, as the other agents' marginal profiles range over all strict
/// orders. Sorted and deduplicated.
pub fn opportunity_set(
    rule: &Rule,
    prob: &Problem,
    agent: AgentIdx,
    report: &MarginalPreference,
) -> Result<Vec<ObjSet>> {
    if !rule.is_marginal() {
        return Err(Error::Domain(format!(
            "opportunity sets are defined for marginal rules; '{}' is not marginal",
            rule.name()
        )));
    }
    let m = prob.num_objects();
    let n = prob.num_agents();
    let factorial: usize = (1..=m).product();
    if factorial.checked_pow((n - 1) as u32).is_none_or(|c| c > 1_000_000) {
        return Err(Error::Cap("opportunity-set enumeration is too large".into()));
    }
    let marginals = all_marginals(m);
    let mut outcomes = Vec::new();
    let others: Vec<AgentIdx> = (0..n).filter(|&j| j != agent).collect();
    let mut choice = vec![0usize; others.len()];
    loop {
        let mut prob2 = prob.with_preference(agent, Preference::Lex(report.clone()))?;
        for (slot, &j) in others.iter().enumerate() {
            prob2 = prob2.with_preference(j, Preference::Lex(marginals[choice[slot]].clone()))?;
        }
        outcomes.push(rule.apply(&prob2)?.part(agent));
        let mut k = others.len();
        loop {
            if k == 0 {
                outcomes.sort();
                outcomes.dedup();
                return Ok(outcomes);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < marginals.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Obvious-manipulability audit: holds iff for every profitable misreport,
/// the best and worst bundles of the truthful opportunity set weakly
/// dominate those of the misreport's opportunity set under the agent's
/// true preference.
pub fn audit_nom(rule: &Rule, prob: &Problem) -> Result<AxiomReport> {
    let truth_outcome = rule.apply(prob)?;
    let marginals = all_marginals(prob.num_objects());
    for agent in 0..prob.num_agents() {
        let true_pref = prob.preference(agent).clone();
        let best = |set: &[ObjSet]| -> ObjSet {
            *set.iter()
                .max_by(|&&a, &&b| true_pref.cmp_bundles(a, b))
                .expect("opportunity sets are nonempty")
        };
        let worst = |set: &[ObjSet]| -> ObjSet {
            *set.iter()
                .min_by(|&&a, &&b| true_pref.cmp_bundles(a, b))
                .expect("opportunity sets are nonempty")
        };
        let truthful_marginal = true_pref.marginal();
        let opp_truth = opportunity_set(rule, prob, agent, &truthful_marginal)?;
        let (b_truth, w_truth) = (best(&opp_truth), worst(&opp_truth));
        for report in &marginals {
            if report.order() == truthful_marginal.order() {
                continue;
            }
            let misreported =
                prob.with_preference(agent, Preference::Lex(report.clone()))?;
            let outcome = rule.apply(&misreported)?;
            let profitable = true_pref
                .cmp_bundles(outcome.part(agent), truth_outcome.part(agent))
                == Ordering::Greater;
            if !profitable {
                continue;
            }
            let opp_mis = opportunity_set(rule, prob, agent, report)?;
            let (b_mis, w_mis) = (best(&opp_mis), worst(&opp_mis));
            if true_pref.cmp_bundles(b_truth, b_mis) == Ordering::Less {
                return Ok(AxiomReport::fails(
                    Axiom::Nom,
                    Witness::Manipulation(ManipulationWitness {
                        agent,
                        class: StrategyClass::Any,
                        misreport: Misreport::Marginal(report.order().to_vec()),
                        truthful: b_truth,
                        manipulated: b_mis,
                        note: "best-case assignment improves under the misreport".into(),
                    }),
                ));
            }
            if true_pref.cmp_bundles(w_truth, w_mis) == Ordering::Less {
                return Ok(AxiomReport::fails(
                    Axiom::Nom,
                    Witness::Manipulation(ManipulationWitness {
                        agent,
                        class: StrategyClass::Any,
                        misreport: Misreport::Marginal(report.order().to_vec()),
                        truthful: w_truth,
                        manipulated: w_mis,
                        note: "worst-case assignment improves under the misreport".into(),
                    }),
                ));
            }
        }
    }
    Ok(AxiomReport::holds(Axiom::Nom))
}
