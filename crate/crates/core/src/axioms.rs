//! Auditors for allocation properties (balancedness, individual
//! rationality, worst-endowment lower bound, Pareto efficiency,
//! individual-good efficiency), trace diagnostics (size and divergence),
//! and the constructor separating individual-good efficiency from Pareto
//! efficiency outside the conditionally lexicographic domain.

use std::cmp::Ordering;

use crate::attc::run_attc;
use crate::error::{Error, Result};
use crate::prefs::{
    check_conditionally_lexicographic, check_monotonic, BundleOrder, MarginalPreference,
    Preference,
};
use crate::problem::{
    enumerate_allocations, AgentIdx, Allocation, Endowment, ObjIdx, ObjSet, Problem,
};
use crate::ttc::{run_ttc, MechanismTrace, TradingCycle};

/// The audited axioms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    Bal,
    Ir,
    Welb,
    Pe,
    Ige,
    Mar,
    Tp,
    Dsp,
    Sdsp,
    Sp,
    Nom,
    StrongElb,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::Bal => "bal",
            Axiom::Ir => "ir",
            Axiom::Welb => "welb",
            Axiom::Pe => "pe",
            Axiom::Ige => "ige",
            Axiom::Mar => "mar",
            Axiom::Tp => "tp",
            Axiom::Dsp => "dsp",
            Axiom::Sdsp => "sdsp",
            Axiom::Sp => "sp",
            Axiom::Nom => "nom",
            Axiom::StrongElb => "strong-elb",
        }
    }
}

/// Evidence for a failed audit; independently checkable.
#[derive(Clone, Debug)]
pub enum Witness {
    Agent { agent: AgentIdx },
    AgentObject { agent: AgentIdx, object: ObjIdx },
    DominatingAllocation(Allocation),
    ImprovingCycle(TradingCycle),
    Manipulation(crate::strategies::ManipulationWitness),
    /// Two profiles with equal marginals but different outcomes (marginality).
    ProfilePair { first: Allocation, second: Allocation, description: String },
}

/// Outcome of a single audit.
#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl AxiomReport {
    pub fn holds(axiom: Axiom) -> AxiomReport {
        AxiomReport { axiom, holds: true, witness: None }
    }

    pub fn fails(axiom: Axiom, witness: Witness) -> AxiomReport {
        AxiomReport { axiom, holds: false, witness: Some(witness) }
    }
}

/// Balancedness of an allocation against the endowment.
pub fn check_bal(alloc: &Allocation, endow: &Endowment) -> Result<AxiomReport> {
    if alloc.num_agents() != endow.num_agents() {
        return Err(Error::Invalid("allocation and endowment disagree on agents".into()));
    }
    for i in 0..alloc.num_agents() {
        if alloc.part(i).len() != endow.part(i).len() {
            return Ok(AxiomReport::fails(Axiom::Bal, Witness::Agent { agent: i }));
        }
    }
    Ok(AxiomReport::holds(Axiom::Bal))
}

/// Individual rationality: every agent weakly prefers her assignment to her
/// endowment under her full bundle preference.
pub fn check_ir(alloc: &Allocation, prob: &Problem) -> Result<AxiomReport> {
    for i in 0..prob.num_agents() {
        let mine = alloc.part(i);
        let endowed = prob.endowment().part(i);
        if prob.preference(i).cmp_bundles(mine, endowed) == Ordering::Less {
            return Ok(AxiomReport::fails(Axiom::Ir, Witness::Agent { agent: i }));
        }
    }
    Ok(AxiomReport::holds(Axiom::Ir))
}

/// Worst-endowment lower bound. For marginal-bearing preferences, each
/// assigned object must rank weakly above the worst endowed object; for
/// conditionally lexicographic preferences the comparison runs in the
/// conditional marginal order given the assigned bundle.
pub fn check_welb(alloc: &Allocation, prob: &Problem) -> Result<AxiomReport> {
    for i in 0..prob.num_agents() {
        let mine = alloc.part(i);
        let endowed = prob.endowment().part(i);
        let order: MarginalPreference = match prob.preference(i) {
            Preference::Cl(tree) => tree.path_order(mine),
            other => other.marginal(),
        };
        let floor = order.worst_in(endowed).expect("endowments are nonempty");
        for o in mine.iter() {
            if order.rank(o) > order.rank(floor) {
                return Ok(AxiomReport::fails(Axiom::Welb, Witness::AgentObject {
                    agent: i,
                    object: o,
                }));
            }
        }
    }
    Ok(AxiomReport::holds(Axiom::Welb))
}

/// Strong endowment lower bound: each agent's assignment pairwise dominates
/// her endowment in her marginal order (greedy matching on sorted ranks).
/// Optional auditor; not part of any property table.
pub fn check_strong_elb(alloc: &Allocation, prob: &Problem) -> Result<AxiomReport> {
    for i in 0..prob.num_agents() {
        let marginal = prob.preference(i).marginal();
        if !marginal.rank_dominates(alloc.part(i), prob.endowment().part(i)) {
            return Ok(AxiomReport::fails(Axiom::StrongElb, Witness::Agent { agent: i }));
        }
    }
    Ok(AxiomReport::holds(Axiom::StrongElb))
}

fn dominates(prob: &Problem, better: &Allocation, worse: &Allocation) -> bool {
    let mut strict = false;
    for i in 0..prob.num_agents() {
        match prob.preference(i).cmp_bundles(better.part(i), worse.part(i)) {
            Ordering::Less => return false,
            Ordering::Greater => strict = true,
            Ordering::Equal => {}
        }
    }
    strict
}

/// Pareto efficiency by brute force: no enumerated allocation weakly
/// improves every agent and strictly improves one. The witness is the first
/// dominating allocation in canonical enumeration order, scanning balanced
/// allocations before unbalanced ones.
pub fn check_pareto_efficient(alloc: &Allocation, prob: &Problem) -> Result<AxiomReport> {
    for candidate in enumerate_allocations(prob, true)? {
        if dominates(prob, &candidate, alloc) {
            return Ok(AxiomReport::fails(Axiom::Pe, Witness::DominatingAllocation(candidate)));
        }
    }
    for candidate in enumerate_allocations(prob, false)? {
        if crate::problem::is_balanced(&candidate, prob.endowment())? {
            continue;
        }
        if dominates(prob, &candidate, alloc) {
            return Ok(AxiomReport::fails(Axiom::Pe, Witness::DominatingAllocation(candidate)));
        }
    }
    Ok(AxiomReport::holds(Axiom::Pe))
}

/// Individual-good efficiency: no trading cycle at the allocation is Pareto
/// improving under the single-swap comparison. Depth-first search over the
/// swap-improvement graph with distinct agents and cycle length at most
/// `|O|`; the witness is the first improving cycle in canonical order.
pub fn find_improving_cycle(alloc: &Allocation, prob: &Problem) -> Result<AxiomReport> {
    let cap = crate::problem::enumeration_cap();
    if prob.num_objects() > cap {
        return Err(Error::Cap(format!(
            "improving-cycle search over {} objects exceeds the cap of {cap}",
            prob.num_objects()
        )));
    }
    let improves = |agent: AgentIdx, give: ObjIdx, get: ObjIdx| -> bool {
        let mine = alloc.part(agent);
        let swapped = mine.without(give).with(get);
        prob.preference(agent).cmp_bundles(swapped, mine) == Ordering::Greater
    };
    // nodes in canonical order: (agent, relinquished object)
    let mut nodes: Vec<(AgentIdx, ObjIdx)> = Vec::new();
    for i in 0..prob.num_agents() {
        for o in alloc.part(i).iter() {
            nodes.push((i, o));
        }
    }
    // DFS over node indices; a cycle is only reported from its smallest node
    fn dfs(
        nodes: &[(AgentIdx, ObjIdx)],
        improves: &dyn Fn(AgentIdx, ObjIdx, ObjIdx) -> bool,
        start: usize,
        path: &mut Vec<usize>,
        used_agents: &mut Vec<AgentIdx>,
    ) -> Option<Vec<usize>> {
        let &(last_agent, last_obj) = &nodes[*path.last().unwrap()];
        // close the cycle
        if path.len() >= 2 && improves(last_agent, last_obj, nodes[start].1) {
            return Some(path.clone());
        }
        for next in (start + 1)..nodes.len() {
            let (agent, _obj) = nodes[next];
            if used_agents.contains(&agent) {
                continue;
            }
            if !improves(last_agent, last_obj, nodes[next].1) {
                continue;
            }
            path.push(next);
            used_agents.push(agent);
            if let Some(cycle) = dfs(nodes, improves, start, path, used_agents) {
                return Some(cycle);
            }
            used_agents.pop();
            path.pop();
        }
        None
    }
    for start in 0..nodes.len() {
        let mut path = vec![start];
        let mut used = vec![nodes[start].0];
        if let Some(cycle) = dfs(&nodes, &improves, start, &mut path, &mut used) {
            let objects: Vec<ObjIdx> = cycle.iter().map(|&k| nodes[k].1).collect();
            let agents: Vec<AgentIdx> = cycle.iter().map(|&k| nodes[k].0).collect();
            return Ok(AxiomReport::fails(
                Axiom::Ige,
                Witness::ImprovingCycle(TradingCycle::new(objects, agents)),
            ));
        }
    }
    Ok(AxiomReport::holds(Axiom::Ige))
}

/// Step index of the earliest divergence between an allocation and a
/// mechanism trace, or the marker that they agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divergence {
    /// 1-based step whose arising cycles are not all executed.
    Step(usize),
    /// The allocation executes every traced cycle (it equals the outcome).
    Matches,
}

/// The proof-machinery diagnostics: a profile size and the earliest point
/// of divergence from the mechanism run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeSimilarity {
    pub size: u64,
    pub divergence: Divergence,
}

/// Compute the size function and the divergence step of `alloc` against the
/// mechanism trace (marginal engine for marginal-bearing profiles, the
/// augmented engine with the bundle-conditioned size sum when any
/// preference is an LP tree).
pub fn divergence_and_size(alloc: &Allocation, prob: &Problem) -> Result<SizeSimilarity> {
    let any_cl = prob.preferences().iter().any(|p| matches!(p, Preference::Cl(_)));
    let (trace, size): (MechanismTrace, u64) = if any_cl {
        if prob.num_objects() > 6 {
            return Err(Error::Cap(
                "bundle-conditioned size sums are capped at 6 objects".into(),
            ));
        }
        let mut size = 0u64;
        for i in 0..prob.num_agents() {
            let endowed = prob.endowment().part(i);
            for held in prob.all_objects().subsets() {
                let order = prob.preference(i).conditional_marginal(held)?;
                let floor = order.worst_in(endowed).expect("nonempty endowment");
                size += order.rank(floor) as u64 + 1;
            }
        }
        (run_attc(prob)?, size)
    } else {
        let mut size = 0u64;
        for i in 0..prob.num_agents() {
            let marginal = prob.preference(i).marginal();
            let floor = marginal.worst_in(prob.endowment().part(i)).expect("nonempty");
            size += marginal.rank(floor) as u64 + 1;
        }
        (run_ttc(prob)?, size)
    };
    for (t, step) in trace.steps.iter().enumerate() {
        if !step.arising.iter().all(|c| c.executed_by(alloc)) {
            return Ok(SizeSimilarity { size, divergence: Divergence::Step(t + 1) });
        }
    }
    Ok(SizeSimilarity { size, divergence: Divergence::Matches })
}

/// Construct, from a monotonic but not conditionally lexicographic bundle
/// order, a problem and an allocation that passes the improving-cycle audit
/// yet fails Pareto efficiency. Agent 1 carries the given order; a
/// lexicographic companion (and, when objects remain, a third agent
/// absorbing them) completes the instance, with the endowment equal to the
/// returned allocation.
pub fn ige_pe_gap_witness(
    object_labels: &[String],
    order: &BundleOrder,
) -> Result<(Problem, Allocation)> {
    let m = order.num_objects();
    if object_labels.len() != m {
        return Err(Error::Invalid("one label per object required".into()));
    }
    if !check_monotonic(order) {
        return Err(Error::Domain("the given order is not monotonic".into()));
    }
    let (is_cl, witness) = check_conditionally_lexicographic(order);
    if is_cl {
        return Err(Error::Domain(
            "the given order is conditionally lexicographic; no gap exists".into(),
        ));
    }
    let (x, y) = witness.expect("failing orders carry a witness");
    // best single addition to Y from X
    let x_star = x
        .iter()
        .max_by(|&p, &q| order.cmp_bundles(y.with(p), y.with(q)))
        .expect("X is nonempty");
    let full = ObjSet::full(m);
    let outside = full.minus(x.union(y));
    let part1 = y.with(x_star);
    let part2 = x.without(x_star);
    debug_assert!(!part2.is_empty(), "monotone witnesses have |X| >= 3");

    let mut agents: Vec<String> = vec!["1".into(), "2".into()];
    let mut parts = vec![part1, part2];
    // companion: x* on top, then the rest of X, then everything else
    let mut order2: Vec<ObjIdx> = vec![x_star];
    order2.extend(x.without(x_star).iter());
    order2.extend(full.minus(x).iter());
    let mut prefs = vec![
        Preference::Table(order.clone()),
        Preference::Lex(MarginalPreference::new(order2, m)?),
    ];
    if !outside.is_empty() {
        agents.push("3".into());
        parts.push(outside);
        let mut order3: Vec<ObjIdx> = outside.iter().collect();
        order3.extend(full.minus(outside).iter());
        prefs.push(Preference::Lex(MarginalPreference::new(order3, m)?));
    }
    let endowment = Endowment::new(parts.clone(), m)?;
    let prob = Problem::new(agents, object_labels.to_vec(), endowment, prefs)?;
    Ok((prob, Allocation::new(parts)))
}
