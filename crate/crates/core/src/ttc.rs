//! The generalized Top Trading Cycles engine over marginal preferences,
//! with full per-step tracing.

use crate::error::{Error, Result};
use crate::prefs::MarginalPreference;
use crate::problem::{AgentIdx, Allocation, ObjIdx, ObjSet, Problem};

/// A trading cycle `(o_1, i_1, o_2, i_2, ..., o_k, i_k, o_1)`: object `o_l`
/// points to its owner `i_l = agents[l]`, who points to (and receives)
/// `o_{l+1}`. Objects and agents are distinct within a cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradingCycle {
    objects: Vec<ObjIdx>,
    agents: Vec<AgentIdx>,
}

impl TradingCycle {
    pub fn new(objects: Vec<ObjIdx>, agents: Vec<AgentIdx>) -> TradingCycle {
        debug_assert_eq!(objects.len(), agents.len());
        debug_assert!(!objects.is_empty());
        TradingCycle { objects, agents }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> &[ObjIdx] {
        &self.objects
    }

    pub fn agents(&self) -> &[AgentIdx] {
        &self.agents
    }

    pub fn object_set(&self) -> ObjSet {
        ObjSet::from_iter(self.objects.iter().copied())
    }

    pub fn involves(&self, agent: AgentIdx) -> bool {
        self.agents.contains(&agent)
    }

    /// The object received by `agents[l]`, i.e. `objects[(l+1) % k]`.
    pub fn received(&self, l: usize) -> ObjIdx {
        self.objects[(l + 1) % self.objects.len()]
    }

    /// Rotate the cycle so the minimal object under `key` leads.
    #[must_use]
    pub fn canonical_by<K: Ord>(&self, key: impl Fn(ObjIdx) -> K) -> TradingCycle {
        let lead = (0..self.objects.len())
            .min_by_key(|&l| key(self.objects[l]))
            .expect("cycles are nonempty");
        let rotate = |v: &[usize]| -> Vec<usize> {
            (0..v.len()).map(|l| v[(lead + l) % v.len()]).collect()
        };
        TradingCycle { objects: rotate(&self.objects), agents: rotate(&self.agents) }
    }

    /// Equality as cyclic sequences (i.e. up to rotation).
    pub fn same_cycle(&self, other: &TradingCycle) -> bool {
        self.canonical_by(|o| o) == other.canonical_by(|o| o)
    }

    /// True iff `alloc` executes this cycle: every agent on it is assigned
    /// the object she points to.
    pub fn executed_by(&self, alloc: &Allocation) -> bool {
        (0..self.len()).all(|l| alloc.part(self.agents[l]).contains(self.received(l)))
    }
}

/// One step of a TTC/ATTC run.
#[derive(Clone, Debug)]
pub struct TraceStep {
    /// Objects still in play at the start of the step (`O^t`).
    pub remaining: ObjSet,
    /// Pointing map: every agent's target this step.
    pub targets: Vec<(AgentIdx, ObjIdx)>,
    /// Cycles arising in the pointing graph.
    pub arising: Vec<TradingCycle>,
    /// Cycles actually executed (equals `arising` except under deferral).
    pub executed: Vec<TradingCycle>,
    /// Partial allocation after the step (`μ^t`).
    pub partial: Vec<ObjSet>,
}

/// Per-step record of a TTC/ATTC run plus the final allocation.
#[derive(Clone, Debug)]
pub struct MechanismTrace {
    pub steps: Vec<TraceStep>,
    pub allocation: Allocation,
}

impl MechanismTrace {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }
}

/// All trading cycles of the functional pointing digraph given by
/// `agent_targets` (agent -> live object) and `object_owners`
/// (live object -> agent). Cycles are node-disjoint; at least one exists.
/// Each returned cycle is rotated so its smallest object index leads.
pub fn pointing_cycles(
    agent_targets: &[(AgentIdx, ObjIdx)],
    object_owners: &[(ObjIdx, AgentIdx)],
) -> Result<Vec<TradingCycle>> {
    let target: std::collections::BTreeMap<AgentIdx, ObjIdx> =
        agent_targets.iter().copied().collect();
    let owner: std::collections::BTreeMap<ObjIdx, AgentIdx> =
        object_owners.iter().copied().collect();
    for (&a, &o) in &target {
        if !owner.contains_key(&o) {
            return Err(Error::Invalid(format!("agent {a} targets non-live object {o}")));
        }
    }
    for (&o, &a) in &owner {
        if !target.contains_key(&a) {
            return Err(Error::Invalid(format!("object {o} is owned by non-live agent {a}")));
        }
    }

    // walk agent -> target object -> owner agent; every cycle alternates
    // agents and objects, so it suffices to track agents
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        New,
        Active,
        Done,
    }
    let mut state: std::collections::BTreeMap<AgentIdx, State> =
        target.keys().map(|&a| (a, State::New)).collect();
    let mut cycles = Vec::new();
    for &start in target.keys() {
        if state[&start] != State::New {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            match state[&cur] {
                State::Done => break,
                State::Active => {
                    // close the cycle at the first repeated agent
                    let at = chain.iter().position(|&a| a == cur).expect("active agent on chain");
                    let members: Vec<AgentIdx> = chain[at..].to_vec();
                    // cycle as (o_1, i_1, ...): o_l is owned by i_l, and
                    // i_l points to o_{l+1}; reconstruct objects from targets
                    let k = members.len();
                    let objects: Vec<ObjIdx> =
                        (0..k).map(|l| target[&members[(l + k - 1) % k]]).collect();
                    cycles.push(
                        TradingCycle::new(objects, members).canonical_by(|o| o),
                    );
                    break;
                }
                State::New => {
                    state.insert(cur, State::Active);
                    chain.push(cur);
                    cur = owner[&target[&cur]];
                }
            }
        }
        for a in chain {
            state.insert(a, State::Done);
        }
    }
    if cycles.is_empty() {
        return Err(Error::Invalid("functional pointing graph without a cycle".into()));
    }
    cycles.sort_by_key(|c| c.objects[0]);
    Ok(cycles)
}

/// How an engine step picks each agent's target.
pub(crate) trait Pointing {
    fn target(&mut self, agent: AgentIdx, held: ObjSet, remaining: ObjSet) -> Result<ObjIdx>;
}

pub(crate) struct StaticMarginals(pub Vec<MarginalPreference>);

impl Pointing for StaticMarginals {
    fn target(&mut self, agent: AgentIdx, _held: ObjSet, remaining: ObjSet) -> Result<ObjIdx> {
        Ok(self.0[agent].best_in(remaining).expect("remaining nonempty"))
    }
}

/// Which arising cycles a step executes.
pub(crate) enum Execution {
    All,
    /// Defer cycles involving the given agent whenever another cycle arises.
    Defer(AgentIdx),
}

pub(crate) fn run_engine(
    prob: &Problem,
    pointing: &mut dyn Pointing,
    execution: Execution,
) -> Result<MechanismTrace> {
    let n = prob.num_agents();
    let mut remaining = prob.all_objects();
    let mut partial = vec![ObjSet::EMPTY; n];
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let step_remaining = remaining;
        let mut targets = Vec::with_capacity(n);
        for agent in 0..n {
            targets.push((agent, pointing.target(agent, partial[agent], remaining)?));
        }
        let owners: Vec<(ObjIdx, AgentIdx)> =
            remaining.iter().map(|o| (o, prob.endowment().owner(o))).collect();
        let arising: Vec<TradingCycle> = pointing_cycles(&targets, &owners)?
            .into_iter()
            .map(|c| c.canonical_by(|o| prob.object_label(o)))
            .collect();
        let executed: Vec<TradingCycle> = match execution {
            Execution::All => arising.clone(),
            Execution::Defer(agent) => {
                if arising.len() >= 2 {
                    arising.iter().filter(|c| !c.involves(agent)).cloned().collect()
                } else {
                    arising.clone()
                }
            }
        };
        debug_assert!(!executed.is_empty());
        for cycle in &executed {
            for (l, &agent) in cycle.agents().iter().enumerate() {
                partial[agent] = partial[agent].with(cycle.received(l));
            }
            remaining = remaining.minus(cycle.object_set());
        }
        steps.push(TraceStep {
            remaining: step_remaining,
            targets,
            arising,
            executed,
            partial: partial.clone(),
        });
    }
    Ok(MechanismTrace { steps, allocation: Allocation::new(partial) })
}

/// Run the generalized Top Trading Cycles algorithm: at each step every
/// agent points to her best remaining object by her marginal preference,
/// every remaining object points to its owner, and all arising cycles trade.
pub fn run_ttc(prob: &Problem) -> Result<MechanismTrace> {
    let marginals: Vec<MarginalPreference> =
        prob.preferences().iter().map(|p| p.marginal()).collect();
    run_engine(prob, &mut StaticMarginals(marginals), Execution::All)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::Preference;
    use crate::suites;

    fn lex_problem(base: &Problem, orders: &[&[ObjIdx]]) -> Problem {
        let prefs: Vec<Preference> = orders
            .iter()
            .map(|o| {
                Preference::Lex(
                    MarginalPreference::new(o.to_vec(), base.num_objects()).unwrap(),
                )
            })
            .collect();
        Problem::new(
            base.agent_labels().to_vec(),
            base.object_labels().to_vec(),
            base.endowment().clone(),
            prefs,
        )
        .unwrap()
    }

    /// The worked three-agent instance: marginals c,a,d,b / a,b,c,d / a,c,b,d.
    fn worked_example() -> Problem {
        lex_problem(&suites::instance_n3_abcd(), &[&[2, 0, 3, 1], &[0, 1, 2, 3], &[0, 2, 1, 3]])
    }

    fn set(objs: &[ObjIdx]) -> ObjSet {
        ObjSet::from_iter(objs.iter().copied())
    }

    #[test]
    fn self_pointing_yields_one_self_cycle_per_agent() {
        let targets = vec![(0, 0), (1, 1), (2, 2)];
        let owners = vec![(0, 0), (1, 1), (2, 2)];
        let cycles = pointing_cycles(&targets, &owners).unwrap();
        assert_eq!(cycles.len(), 3);
        assert!(cycles.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn worked_example_step_graphs_have_the_expected_cycles() {
        // step 1: agents point c,a,a; owners a,b->1, c->2, d->3
        let cycles = pointing_cycles(
            &[(0, 2), (1, 0), (2, 0)],
            &[(0, 0), (1, 0), (2, 1), (3, 2)],
        )
        .unwrap();
        assert_eq!(cycles.len(), 1);
        // (c,2,a,1,c) as a cyclic sequence
        assert!(cycles[0].same_cycle(&TradingCycle::new(vec![2, 0], vec![1, 0])));
        // step 2 on {b,d}: agents point d,b,b
        let cycles = pointing_cycles(&[(0, 3), (1, 1), (2, 1)], &[(1, 0), (3, 2)]).unwrap();
        assert_eq!(cycles.len(), 1);
        assert!(cycles[0].same_cycle(&TradingCycle::new(vec![3, 1], vec![2, 0])));
    }

    #[test]
    fn dangling_targets_are_input_errors() {
        assert!(pointing_cycles(&[(0, 5)], &[(0, 0)]).is_err());
        assert!(pointing_cycles(&[(0, 0)], &[(0, 0), (1, 7)]).is_err());
    }

    #[test]
    fn worked_example_runs_in_two_steps_to_the_documented_allocation() {
        let trace = run_ttc(&worked_example()).unwrap();
        assert_eq!(trace.num_steps(), 2);
        assert_eq!(
            trace.allocation.parts(),
            &[set(&[2, 3]), set(&[0]), set(&[1])] // ({c,d},{a},{b})
        );
        assert_eq!(trace.steps[0].executed.len(), 1);
        assert!(trace.steps[0].executed[0]
            .same_cycle(&TradingCycle::new(vec![2, 0], vec![1, 0]))); // (c,2,a,1,c)
        assert!(trace.steps[1].executed[0]
            .same_cycle(&TradingCycle::new(vec![3, 1], vec![2, 0]))); // (d,3,b,1,d)
    }

    #[test]
    fn drop_manipulation_example_truthful_and_misreported_runs() {
        // marginals d,b,c,a / d,b,c,a / b,a,c,d with endowment ({a,b},{c},{d})
        let base = suites::instance_n3_abcd();
        let truthful =
            lex_problem(&base, &[&[3, 1, 2, 0], &[3, 1, 2, 0], &[1, 0, 2, 3]]);
        let trace = run_ttc(&truthful).unwrap();
        assert_eq!(trace.allocation.parts(), &[set(&[0, 3]), set(&[2]), set(&[1])]);
        // agent 1 drops d, reporting b,c,a,d
        let dropped = lex_problem(&base, &[&[1, 2, 0, 3], &[3, 1, 2, 0], &[1, 0, 2, 3]]);
        let trace = run_ttc(&dropped).unwrap();
        assert_eq!(trace.allocation.parts(), &[set(&[1, 2]), set(&[3]), set(&[0])]);
    }

    #[test]
    fn ttc_terminates_within_object_count_and_is_balanced_and_marginal_welb() {
        let base = suites::instance_n3_abcd();
        suites::for_each_lex_profile(&base, |prob| {
            let trace = run_ttc(prob).unwrap();
            assert!(trace.num_steps() <= prob.num_objects());
            let removed: usize = trace
                .steps
                .iter()
                .map(|s| s.executed.iter().map(|c| c.len()).sum::<usize>())
                .sum();
            assert_eq!(removed, prob.num_objects());
            assert!(crate::problem::is_balanced(&trace.allocation, prob.endowment()).unwrap());
            for i in 0..prob.num_agents() {
                let marginal = prob.preference(i).marginal();
                let floor = marginal.worst_in(prob.endowment().part(i)).unwrap();
                for o in trace.allocation.part(i).iter() {
                    assert!(marginal.rank(o) <= marginal.rank(floor));
                }
            }
        });
    }

    #[test]
    fn traces_depend_only_on_marginals() {
        use crate::prefs::{Comparator, ResponsivePref};
        let worked = worked_example();
        let lex_trace = run_ttc(&worked).unwrap();
        // same marginals, responsive kind with assorted utilities
        let utilities = [
            vec![3.0, 1.0, 4.0, 2.0], // marginal c,a,d,b
            vec![4.0, 3.0, 2.0, 1.0],
            vec![4.0, 2.0, 3.0, 1.0],
        ];
        let prefs: Vec<Preference> = worked
            .preferences()
            .iter()
            .zip(utilities)
            .map(|(p, u)| {
                Preference::Responsive(
                    ResponsivePref::new(p.marginal(), Comparator::Additive { utilities: u }, vec![])
                        .unwrap(),
                )
            })
            .collect();
        let responsive = Problem::new(
            worked.agent_labels().to_vec(),
            worked.object_labels().to_vec(),
            worked.endowment().clone(),
            prefs,
        )
        .unwrap();
        let resp_trace = run_ttc(&responsive).unwrap();
        assert_eq!(resp_trace.allocation, lex_trace.allocation);
        assert_eq!(resp_trace.num_steps(), lex_trace.num_steps());
        for (a, b) in resp_trace.steps.iter().zip(&lex_trace.steps) {
            assert_eq!(a.targets, b.targets);
            assert_eq!(a.executed, b.executed);
        }
    }
}
