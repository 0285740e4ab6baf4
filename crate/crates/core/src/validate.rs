//! One-stop report of which structural assumptions an instance meets.

use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::instance::{is_collective, is_ido, is_ratio_bounded, CostFunction, Instance, AGENTS, TABULAR_MAX_M};
use crate::rat::Rat;

/// Outcome of the exhaustive distinct-subset-costs check.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NonDegeneracy {
    Distinct,
    Tied,
    Unchecked,
}

impl Serialize for NonDegeneracy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NonDegeneracy::Distinct => s.serialize_bool(true),
            NonDegeneracy::Tied => s.serialize_bool(false),
            NonDegeneracy::Unchecked => s.serialize_str("unchecked"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AgentReport {
    pub additive: bool,
    /// Every subset has a cost (always true for additive functions).
    pub complete: bool,
    pub normalized: bool,
    pub monotone: bool,
    /// `None` when the check does not apply (tabular input).
    pub collective: Option<bool>,
    /// `None` for tabular input or when a zero-cost chore makes the ratio
    /// undefined; see `notes`.
    pub ratio_bounded_2: Option<bool>,
    pub non_degenerate: NonDegeneracy,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ValidationReport {
    pub m: usize,
    pub agents: [AgentReport; AGENTS],
    /// Identical ordering of agents 1 and 2; `None` unless both are additive.
    pub ido_12: Option<bool>,
}

fn report_agent(f: &CostFunction) -> AgentReport {
    let m = f.m();
    let mut notes = Vec::new();
    let (complete, normalized, monotone) = match f {
        // Costs are nonnegative rationals by construction.
        CostFunction::Additive(_) => (true, true, true),
        CostFunction::Tabular(table) => {
            let complete = table.iter().all(Option::is_some);
            if !complete {
                let missing = table.iter().filter(|e| e.is_none()).count();
                notes.push(format!("{missing} subset(s) missing from table"));
            }
            let normalized = matches!(&table[0], Some(z) if z.is_zero());
            let mut monotone = true;
            'scan: for s in 0..table.len() {
                for b in 0..m {
                    let t = s | (1 << b);
                    if t != s {
                        if let (Some(lo), Some(hi)) = (&table[s], &table[t]) {
                            if lo > hi {
                                notes.push(format!("cost of mask {s} exceeds cost of superset {t}"));
                                monotone = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            (complete, normalized, monotone)
        }
    };
    let collective = is_collective(f).ok();
    let ratio_bounded_2 = match is_ratio_bounded(f, &Rat::from_integer(2)) {
        Ok(v) => Some(v),
        Err(Error::ZeroCostChore(b)) => {
            notes.push(format!("{b} has zero cost"));
            None
        }
        Err(_) => None,
    };
    let non_degenerate = if m > TABULAR_MAX_M || !complete {
        NonDegeneracy::Unchecked
    } else {
        let mut all = f.subset_table().expect("complete table within scale");
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            NonDegeneracy::Tied
        } else {
            NonDegeneracy::Distinct
        }
    };
    AgentReport { additive: f.is_additive(), complete, normalized, monotone, collective, ratio_bounded_2, non_degenerate, notes }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let agents = inst.agents().each_ref().map(report_agent);
    let ido_12 = is_ido(inst.agent(0), inst.agent(1)).ok();
    ValidationReport { m: inst.m(), agents, ido_12 }
}

impl ValidationReport {
    /// Agent 3 (or any tabular agent) is a well-formed monotone set function.
    fn well_formed(&self) -> Result<(), String> {
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.complete && a.normalized && a.monotone) {
                return Err(format!("agent {} is not a complete, normalized, monotone cost function", i + 1));
            }
        }
        Ok(())
    }

    /// Agents 1 and 2 additive, collective and identically ordered.
    pub fn efx_assumptions(&self) -> Result<(), String> {
        self.well_formed()?;
        for i in 0..2 {
            if !self.agents[i].additive {
                return Err(format!("agent {} must be additive", i + 1));
            }
            if self.agents[i].collective != Some(true) {
                return Err(format!("agent {} is not collective", i + 1));
            }
        }
        if self.ido_12 != Some(true) {
            return Err("agents 1 and 2 do not order the chores identically".into());
        }
        Ok(())
    }

    /// Agents 1 and 2 additive with max/min chore cost at most 2.
    pub fn tefx_assumptions(&self) -> Result<(), String> {
        self.well_formed()?;
        for i in 0..2 {
            if !self.agents[i].additive {
                return Err(format!("agent {} must be additive", i + 1));
            }
            if self.agents[i].ratio_bounded_2 != Some(true) {
                return Err(format!("agent {} is not 2-ratio-bounded", i + 1));
            }
        }
        Ok(())
    }

    pub fn non_degenerate(&self) -> bool {
        self.agents.iter().all(|a| a.non_degenerate == NonDegeneracy::Distinct)
    }
}
