//! Problem instances, allocations, and their structural validation, plus the
//! exhaustive allocation enumeration that backs every brute-force oracle.

use std::fmt;

use crate::error::{Error, Result};
use crate::prefs::Preference;

pub type AgentIdx = usize;
pub type ObjIdx = usize;

/// Object sets are fixed-width bitmasks; instances above this are rejected.
pub const MAX_OBJECTS: usize = 64;

/// Default cap on `|O|` for exhaustive allocation enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

/// Enumeration cap, overridable through the `TTCLAB_CAP` environment variable.
pub fn enumeration_cap() -> usize {
    std::env::var("TTCLAB_CAP")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_ENUMERATION_CAP)
        .min(MAX_OBJECTS)
}

/// A set of objects, by index, packed into a `u64`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ObjSet(pub u64);

impl ObjSet {
    pub const EMPTY: ObjSet = ObjSet(0);

    pub fn singleton(o: ObjIdx) -> ObjSet {
        ObjSet(1u64 << o)
    }

    /// The full set `{0, .., m-1}`.
    pub fn full(m: usize) -> ObjSet {
        if m == 64 {
            ObjSet(u64::MAX)
        } else {
            ObjSet((1u64 << m) - 1)
        }
    }

    pub fn from_iter<I: IntoIterator<Item = ObjIdx>>(iter: I) -> ObjSet {
        let mut s = ObjSet::EMPTY;
        for o in iter {
            s = s.with(o);
        }
        s
    }

    pub fn contains(self, o: ObjIdx) -> bool {
        self.0 & (1u64 << o) != 0
    }

    #[must_use]
    pub fn with(self, o: ObjIdx) -> ObjSet {
        ObjSet(self.0 | (1u64 << o))
    }

    #[must_use]
    pub fn without(self, o: ObjIdx) -> ObjSet {
        ObjSet(self.0 & !(1u64 << o))
    }

    pub fn union(self, other: ObjSet) -> ObjSet {
        ObjSet(self.0 | other.0)
    }

    pub fn inter(self, other: ObjSet) -> ObjSet {
        ObjSet(self.0 & other.0)
    }

    pub fn minus(self, other: ObjSet) -> ObjSet {
        ObjSet(self.0 & !other.0)
    }

    pub fn sym_diff(self, other: ObjSet) -> ObjSet {
        ObjSet(self.0 ^ other.0)
    }

    pub fn is_subset_of(self, other: ObjSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Object indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = ObjIdx> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let o = bits.trailing_zeros() as ObjIdx;
                bits &= bits - 1;
                Some(o)
            }
        })
    }

    /// All subsets of `self`, in ascending packed-index order (the empty set
    /// first, `self` last). Deterministic; used for canonical witness order.
    pub fn subsets(self) -> impl Iterator<Item = ObjSet> {
        let bits: Vec<ObjIdx> = self.iter().collect();
        let k = bits.len();
        (0u64..(1u64 << k)).map(move |code| {
            let mut s = ObjSet::EMPTY;
            for (j, &o) in bits.iter().enumerate() {
                if code & (1 << j) != 0 {
                    s = s.with(o);
                }
            }
            s
        })
    }
}

impl fmt::Debug for ObjSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// The initial allocation: one nonempty bundle per agent, pairwise disjoint,
/// jointly covering the object set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endowment {
    parts: Vec<ObjSet>,
    owner: Vec<AgentIdx>,
}

impl Endowment {
    pub fn new(parts: Vec<ObjSet>, num_objects: usize) -> Result<Endowment> {
        let mut owner = vec![usize::MAX; num_objects];
        let mut seen = ObjSet::EMPTY;
        for (i, &part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::Invalid(format!("endowment: agent #{i} owns nothing")));
            }
            if !part.inter(seen).is_empty() {
                return Err(Error::Invalid(format!(
                    "endowment: agent #{i} overlaps an earlier part"
                )));
            }
            if !part.is_subset_of(ObjSet::full(num_objects)) {
                return Err(Error::Invalid(format!(
                    "endowment: agent #{i} owns an unknown object"
                )));
            }
            for o in part.iter() {
                owner[o] = i;
            }
            seen = seen.union(part);
        }
        if seen != ObjSet::full(num_objects) {
            return Err(Error::Invalid("endowment: not every object is owned".into()));
        }
        Ok(Endowment { parts, owner })
    }

    pub fn part(&self, agent: AgentIdx) -> ObjSet {
        self.parts[agent]
    }

    pub fn parts(&self) -> &[ObjSet] {
        &self.parts
    }

    pub fn owner(&self, o: ObjIdx) -> AgentIdx {
        self.owner[o]
    }

    pub fn num_agents(&self) -> usize {
        self.parts.len()
    }
}

/// An assignment of bundles to agents. Construction does not validate; run
/// [`validate_allocation`] to obtain a structured verdict.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    parts: Vec<ObjSet>,
}

impl Allocation {
    pub fn new(parts: Vec<ObjSet>) -> Allocation {
        Allocation { parts }
    }

    pub fn part(&self, agent: AgentIdx) -> ObjSet {
        self.parts[agent]
    }

    pub fn parts(&self) -> &[ObjSet] {
        &self.parts
    }

    pub fn num_agents(&self) -> usize {
        self.parts.len()
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.parts.iter()).finish()
    }
}

/// A single structural defect of a candidate allocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Wrong number of parts for the problem's agent set.
    ShapeMismatch { expected: usize, got: usize },
    EmptyPart { agent: AgentIdx },
    /// Two parts share `object`.
    Overlap { first: AgentIdx, second: AgentIdx, object: ObjIdx },
    /// An object of the problem appears in no part.
    Uncovered { object: ObjIdx },
    /// A part contains an object outside the problem's object set.
    Foreign { agent: AgentIdx, object: ObjIdx },
}

/// Verdict of [`validate_allocation`]: ok iff no violations.
#[derive(Clone, Debug, Default)]
pub struct AllocationVerdict {
    pub violations: Vec<Violation>,
}

impl AllocationVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A reallocation problem: agents, objects, endowment, one preference per
/// agent. Public APIs speak labels; internals speak dense indices.
#[derive(Clone, Debug)]
pub struct Problem {
    agents: Vec<String>,
    objects: Vec<String>,
    endowment: Endowment,
    preferences: Vec<Preference>,
}

impl Problem {
    pub fn new(
        agents: Vec<String>,
        objects: Vec<String>,
        endowment: Endowment,
        preferences: Vec<Preference>,
    ) -> Result<Problem> {
        let n = agents.len();
        let m = objects.len();
        if n < 2 {
            return Err(Error::Invalid(format!("need at least 2 agents, got {n}")));
        }
        if m < n {
            return Err(Error::Invalid(format!(
                "need at least as many objects ({m}) as agents ({n})"
            )));
        }
        if m > MAX_OBJECTS {
            return Err(Error::Cap(format!("at most {MAX_OBJECTS} objects, got {m}")));
        }
        check_labels("agent", &agents)?;
        check_labels("object", &objects)?;
        if endowment.num_agents() != n {
            return Err(Error::Invalid("endowment does not match the agent set".into()));
        }
        if !endowment
            .parts()
            .iter()
            .fold(ObjSet::EMPTY, |acc, &p| acc.union(p))
            .is_subset_of(ObjSet::full(m))
        {
            return Err(Error::Invalid("endowment references unknown objects".into()));
        }
        if preferences.len() != n {
            return Err(Error::Invalid(format!(
                "expected one preference per agent ({n}), got {}",
                preferences.len()
            )));
        }
        for (i, p) in preferences.iter().enumerate() {
            if p.num_objects() != m {
                return Err(Error::Invalid(format!(
                    "preference of agent #{i} covers {} objects, problem has {m}",
                    p.num_objects()
                )));
            }
        }
        Ok(Problem { agents, objects, endowment, preferences })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn all_objects(&self) -> ObjSet {
        ObjSet::full(self.num_objects())
    }

    pub fn agent_labels(&self) -> &[String] {
        &self.agents
    }

    pub fn object_labels(&self) -> &[String] {
        &self.objects
    }

    pub fn agent_label(&self, i: AgentIdx) -> &str {
        &self.agents[i]
    }

    pub fn object_label(&self, o: ObjIdx) -> &str {
        &self.objects[o]
    }

    pub fn agent_index(&self, label: &str) -> Option<AgentIdx> {
        self.agents.iter().position(|a| a == label)
    }

    pub fn object_index(&self, label: &str) -> Option<ObjIdx> {
        self.objects.iter().position(|o| o == label)
    }

    pub fn endowment(&self) -> &Endowment {
        &self.endowment
    }

    pub fn preference(&self, i: AgentIdx) -> &Preference {
        &self.preferences[i]
    }

    pub fn preferences(&self) -> &[Preference] {
        &self.preferences
    }

    /// A copy of the problem with agent `i` reporting `pref` instead.
    pub fn with_preference(&self, i: AgentIdx, pref: Preference) -> Result<Problem> {
        if pref.num_objects() != self.num_objects() {
            return Err(Error::Invalid("replacement preference has wrong object count".into()));
        }
        let mut p = self.clone();
        p.preferences[i] = pref;
        Ok(p)
    }

    /// Render an object set as sorted labels (for diagnostics and JSON).
    pub fn labels_of(&self, set: ObjSet) -> Vec<String> {
        let mut v: Vec<String> = set.iter().map(|o| self.objects[o].clone()).collect();
        v.sort();
        v
    }
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if l.is_empty() {
            return Err(Error::Invalid(format!("{kind} #{i} has an empty label")));
        }
        if labels[..i].contains(l) {
            return Err(Error::Invalid(format!("duplicate {kind} label '{l}'")));
        }
    }
    Ok(())
}

/// Check the three allocation conditions (nonempty parts, disjointness,
/// exact cover of the object set). Never aborts; collects every violation.
pub fn validate_allocation(alloc: &Allocation, prob: &Problem) -> AllocationVerdict {
    let mut v = AllocationVerdict::default();
    let n = prob.num_agents();
    if alloc.num_agents() != n {
        v.violations.push(Violation::ShapeMismatch { expected: n, got: alloc.num_agents() });
        return v;
    }
    let all = prob.all_objects();
    let mut seen = ObjSet::EMPTY;
    let mut first_holder = vec![usize::MAX; MAX_OBJECTS];
    for (i, &part) in alloc.parts().iter().enumerate() {
        if part.is_empty() {
            v.violations.push(Violation::EmptyPart { agent: i });
        }
        for o in part.minus(all).iter() {
            v.violations.push(Violation::Foreign { agent: i, object: o });
        }
        for o in part.inter(all).iter() {
            if seen.contains(o) {
                v.violations.push(Violation::Overlap { first: first_holder[o], second: i, object: o });
            } else {
                first_holder[o] = i;
            }
        }
        seen = seen.union(part.inter(all));
    }
    for o in all.minus(seen).iter() {
        v.violations.push(Violation::Uncovered { object: o });
    }
    v
}

/// True iff every agent's assigned count equals her endowed count.
pub fn is_balanced(alloc: &Allocation, endow: &Endowment) -> Result<bool> {
    if alloc.num_agents() != endow.num_agents() {
        return Err(Error::Invalid(format!(
            "allocation has {} parts, endowment has {}",
            alloc.num_agents(),
            endow.num_agents()
        )));
    }
    Ok(alloc
        .parts()
        .iter()
        .zip(endow.parts())
        .all(|(a, e)| a.len() == e.len()))
}

/// Deterministic stream of all allocations of the problem's objects to its
/// agents (every part nonempty), optionally restricted to balanced ones.
///
/// Canonical order: assignment vectors `(owner of object 0, owner of object
/// 1, ...)` enumerated lexicographically with agent indices ascending.
pub fn enumerate_allocations(
    prob: &Problem,
    balanced_only: bool,
) -> Result<impl Iterator<Item = Allocation> + '_> {
    let m = prob.num_objects();
    let n = prob.num_agents();
    let cap = enumeration_cap();
    if m > cap {
        return Err(Error::Cap(format!(
            "allocation enumeration over {m} objects exceeds the cap of {cap} \
             (override with TTCLAB_CAP)"
        )));
    }
    let sizes: Vec<usize> = prob.endowment().parts().iter().map(|p| p.len()).collect();
    let mut digits = vec![0usize; m];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        while !done {
            let mut parts = vec![ObjSet::EMPTY; n];
            for (o, &a) in digits.iter().enumerate() {
                parts[a] = parts[a].with(o);
            }
            // advance (object m-1 is the fastest digit)
            let mut k = m;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < n {
                    break;
                }
                digits[k] = 0;
            }
            let ok_shape = parts.iter().all(|p| !p.is_empty());
            let ok_bal = !balanced_only
                || parts.iter().zip(&sizes).all(|(p, &s)| p.len() == s);
            if ok_shape && ok_bal {
                return Some(Allocation::new(parts));
            }
        }
        None
    }))
}
