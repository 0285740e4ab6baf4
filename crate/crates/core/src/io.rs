//! JSON file formats: instances, allocations and JSON-lines traces.
//!
//! Parse errors name the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{DeserializeOwned, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fairness::FairnessCertificate;
use crate::instance::{Allocation, Bundle, CostFunction, Instance, AGENTS, TABULAR_MAX_M};
use crate::rat::Rat;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    m: usize,
    agents: Vec<AgentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Value>,
}

#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AgentKind {
    Additive,
    Tabular,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    #[serde(rename = "type")]
    kind: AgentKind,
    costs: Costs,
}

/// Either a cost per chore or a cost per subset mask (decimal-string keys).
/// Read by a streaming visitor so error paths reach into the costs.
#[derive(Serialize)]
#[serde(untagged)]
enum Costs {
    List(Vec<Rat>),
    Table(BTreeMap<String, Rat>),
}

impl<'de> Deserialize<'de> for Costs {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct CostsVisitor;
        impl<'de> Visitor<'de> for CostsVisitor {
            type Value = Costs;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of chore costs or a map from subset mask to cost")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Costs, A::Error> {
                let mut out = Vec::new();
                while let Some(c) = seq.next_element()? {
                    out.push(c);
                }
                Ok(Costs::List(out))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Costs, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = map.next_entry()? {
                    out.insert(k, v);
                }
                Ok(Costs::Table(out))
            }
        }
        d.deserialize_any(CostsVisitor)
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("at {path}: {}", e.into_inner()))
    })
}

/// An instance file plus its free-form `metadata` field.
#[derive(Clone, PartialEq, Debug)]
pub struct InstanceDoc {
    pub instance: Instance,
    pub metadata: Option<Value>,
}

pub fn parse_instance_doc(text: &str) -> Result<InstanceDoc> {
    let file: InstanceFile = parse_json(text)?;
    let m = file.m;
    if file.agents.len() != AGENTS {
        return Err(Error::Parse(format!("at agents: expected {AGENTS} agents, found {}", file.agents.len())));
    }
    let mut agents = Vec::with_capacity(AGENTS);
    for (i, agent) in file.agents.into_iter().enumerate() {
        agents.push(match (agent.kind, agent.costs) {
            (AgentKind::Additive, Costs::List(costs)) => {
                if costs.len() != m {
                    return Err(Error::Parse(format!("at agents[{i}].costs: expected {m} costs, found {}", costs.len())));
                }
                CostFunction::Additive(costs)
            }
            (AgentKind::Tabular, Costs::Table(costs)) => {
                if m > TABULAR_MAX_M {
                    return Err(Error::Parse(format!("at agents[{i}]: tabular costs need m <= {TABULAR_MAX_M}")));
                }
                let mut table = vec![None; 1 << m];
                for (key, cost) in costs {
                    let mask: usize = key
                        .parse()
                        .map_err(|_| Error::Parse(format!("at agents[{i}].costs.{key}: not a decimal subset mask")))?;
                    let slot = table
                        .get_mut(mask)
                        .ok_or_else(|| Error::Parse(format!("at agents[{i}].costs.{mask}: mask outside 2^{m}")))?;
                    *slot = Some(cost);
                }
                CostFunction::Tabular(table)
            }
            (AgentKind::Additive, Costs::Table(_)) => {
                return Err(Error::Parse(format!("at agents[{i}].costs: additive costs must be a list")));
            }
            (AgentKind::Tabular, Costs::List(_)) => {
                return Err(Error::Parse(format!("at agents[{i}].costs: tabular costs must be a mask-keyed map")));
            }
        });
    }
    let agents: [CostFunction; AGENTS] = agents.try_into().expect("length checked");
    let mut instance = Instance::new(agents).map_err(|e| Error::Parse(format!("at agents: {e}")))?;
    instance.label = file.label;
    Ok(InstanceDoc { instance, metadata: file.metadata })
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_doc(text).map(|d| d.instance)
}

pub fn instance_json(inst: &Instance, metadata: Option<Value>) -> String {
    let agents = inst
        .agents()
        .iter()
        .map(|f| match f {
            CostFunction::Additive(c) => AgentFile { kind: AgentKind::Additive, costs: Costs::List(c.clone()) },
            CostFunction::Tabular(t) => AgentFile {
                kind: AgentKind::Tabular,
                costs: Costs::Table(t.iter().enumerate().filter_map(|(s, c)| c.clone().map(|c| (s.to_string(), c))).collect()),
            },
        })
        .collect();
    let file = InstanceFile { m: inst.m(), agents, label: inst.label.clone(), metadata };
    serde_json::to_string_pretty(&file).expect("instance serializes")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationFile {
    bundles: [Bundle; AGENTS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignment: Option<BTreeMap<usize, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    certificate: Option<FairnessCertificate>,
}

/// An allocation file. Without an assignment, bundle `k` is agent `k`'s.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AllocationDoc {
    pub bundles: Allocation,
    /// `assignment[agent]` is the index of the bundle that agent holds.
    pub assignment: Option<[usize; AGENTS]>,
    pub certificate: Option<FairnessCertificate>,
}

impl AllocationDoc {
    pub fn owned(&self) -> Allocation {
        match &self.assignment {
            Some(a) => self.bundles.assigned(a),
            None => self.bundles.clone(),
        }
    }
}

pub fn parse_allocation(text: &str) -> Result<AllocationDoc> {
    let file: AllocationFile = parse_json(text)?;
    let assignment = match file.assignment {
        None => None,
        Some(map) => {
            let mut out = [usize::MAX; AGENTS];
            for (agent, k) in map {
                if !(1..=AGENTS).contains(&agent) {
                    return Err(Error::Parse(format!("at assignment.{agent}: agents are numbered 1 to {AGENTS}")));
                }
                if k >= AGENTS {
                    return Err(Error::Parse(format!("at assignment.{agent}: bundle index {k} out of range")));
                }
                out[agent - 1] = k;
            }
            let mut seen = out;
            seen.sort_unstable();
            if seen != [0, 1, 2] {
                return Err(Error::Parse("at assignment: must give each agent a different bundle".into()));
            }
            Some(out)
        }
    };
    Ok(AllocationDoc { bundles: Allocation::new(file.bundles), assignment, certificate: file.certificate })
}

pub fn allocation_json(doc: &AllocationDoc) -> String {
    let file = AllocationFile {
        bundles: doc.bundles.bundles.clone(),
        assignment: doc.assignment.map(|a| a.iter().enumerate().map(|(agent, &k)| (agent + 1, k)).collect()),
        certificate: doc.certificate.clone(),
    };
    serde_json::to_string_pretty(&file).expect("allocation serializes")
}

/// One compact JSON object per line.
pub fn trace_lines<R: Serialize>(records: &[R]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_trace<R: DeserializeOwned>(text: &str) -> Result<Vec<R>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_json(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}
