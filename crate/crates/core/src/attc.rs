//! Augmented Top Trading Cycles over conditionally lexicographic
//! preferences, plus the deferred variant that postpones one agent's cycles.

use crate::error::{Error, Result};
use crate::problem::{AgentIdx, ObjIdx, ObjSet, Problem};
use crate::ttc::{run_engine, Execution, MechanismTrace, Pointing};

struct ConditionalPointing<'a> {
    prob: &'a Problem,
}

impl Pointing for ConditionalPointing<'_> {
    fn target(&mut self, agent: AgentIdx, held: ObjSet, remaining: ObjSet) -> Result<ObjIdx> {
        let conditional = self.prob.preference(agent).conditional_marginal(held)?;
        Ok(conditional.best_in(remaining).expect("remaining nonempty"))
    }
}

fn require_cl(prob: &Problem) -> Result<()> {
    for (i, p) in prob.preferences().iter().enumerate() {
        if !p.is_conditionally_lexicographic() {
            return Err(Error::Domain(format!(
                "augmented algorithm needs conditionally lexicographic preferences; \
                 agent '{}' reports kind '{}'",
                prob.agent_label(i),
                p.kind_name()
            )));
        }
    }
    Ok(())
}

/// Run the augmented algorithm: at step `t` each agent points to her best
/// remaining object *conditional on the bundle already assigned to her*,
/// and all arising cycles trade.
pub fn run_attc(prob: &Problem) -> Result<MechanismTrace> {
    require_cl(prob)?;
    run_engine(prob, &mut ConditionalPointing { prob }, Execution::All)
}

/// The deferred variant used to analyze drop manipulations: whenever two or
/// more cycles arise, only those avoiding `agent` execute; a cycle through
/// `agent` executes only once it is the unique arising cycle. The final
/// allocation equals [`run_attc`]'s; the trace keeps arising and executed
/// cycle sets apart.
pub fn run_attc_deferred(prob: &Problem, agent: AgentIdx) -> Result<MechanismTrace> {
    require_cl(prob)?;
    if agent >= prob.num_agents() {
        return Err(Error::Invalid(format!("no agent #{agent}")));
    }
    run_engine(prob, &mut ConditionalPointing { prob }, Execution::Defer(agent))
}
