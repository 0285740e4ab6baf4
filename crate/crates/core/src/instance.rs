//! Chores, cost functions, instances and allocations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Largest chore count a [`CostFunction::Tabular`] table may cover.
pub const TABULAR_MAX_M: usize = 16;

/// Number of agents. Everything in this crate is specific to three.
pub const AGENTS: usize = 3;

/// Dense chore index in `0..m`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoreId(pub usize);

impl fmt::Display for ChoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

pub type Bundle = BTreeSet<ChoreId>;

/// Builds a bundle from raw indices.
pub fn bundle<I: IntoIterator<Item = usize>>(ids: I) -> Bundle {
    ids.into_iter().map(ChoreId).collect()
}

/// Bitmask with chore `i` at bit `i`. Only meaningful for `m <= 32`.
pub fn bundle_mask(bundle: &Bundle) -> u32 {
    bundle.iter().fold(0u32, |acc, b| acc | (1u32 << b.0))
}

pub fn mask_bundle(mask: u32) -> Bundle {
    (0..32).filter(|i| mask & (1 << i) != 0).map(ChoreId).collect()
}

/// A set function over the chores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CostFunction {
    /// Per-chore costs; the cost of a set is the sum of its members.
    Additive(Vec<Rat>),
    /// One entry per subset bitmask. A `None` entry is a subset the input
    /// left unspecified; validation reports it and evaluation fails on it.
    Tabular(Vec<Option<Rat>>),
}

impl CostFunction {
    pub fn additive<I: IntoIterator<Item = u64>>(costs: I) -> Self {
        CostFunction::Additive(costs.into_iter().map(Rat::from_integer).collect())
    }

    /// Chore count this function is defined over.
    pub fn m(&self) -> usize {
        match self {
            CostFunction::Additive(costs) => costs.len(),
            CostFunction::Tabular(table) => table.len().trailing_zeros() as usize,
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, CostFunction::Additive(_))
    }

    pub fn per_chore(&self) -> Option<&[Rat]> {
        match self {
            CostFunction::Additive(costs) => Some(costs),
            CostFunction::Tabular(_) => None,
        }
    }

    pub(crate) fn expect_additive(&self) -> Result<&[Rat]> {
        self.per_chore().ok_or(Error::UnsupportedCostKind)
    }

    fn check_chore(&self, b: ChoreId) -> Result<()> {
        let m = self.m();
        if b.0 >= m {
            return Err(Error::InvalidChore { chore: b, m });
        }
        Ok(())
    }

    /// Cost of a single chore.
    pub fn chore_cost(&self, b: ChoreId) -> Result<Rat> {
        self.check_chore(b)?;
        match self {
            CostFunction::Additive(costs) => Ok(costs[b.0].clone()),
            CostFunction::Tabular(_) => self.mask_cost(1 << b.0),
        }
    }

    /// Cost of a bundle.
    pub fn cost(&self, bundle: &Bundle) -> Result<Rat> {
        if let Some(&last) = bundle.iter().next_back() {
            self.check_chore(last)?;
        }
        match self {
            CostFunction::Additive(costs) => Ok(bundle.iter().map(|b| &costs[b.0]).sum()),
            CostFunction::Tabular(_) => self.mask_cost(bundle_mask(bundle)),
        }
    }

    /// Cost of the subset encoded by `mask`.
    pub fn mask_cost(&self, mask: u32) -> Result<Rat> {
        match self {
            CostFunction::Additive(costs) => {
                if costs.len() < 32 && mask >> costs.len() != 0 {
                    return Err(Error::InvalidChore {
                        chore: ChoreId(31 - mask.leading_zeros() as usize),
                        m: costs.len(),
                    });
                }
                Ok((0..costs.len().min(32))
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| &costs[i])
                    .sum())
            }
            CostFunction::Tabular(table) => {
                let entry = table.get(mask as usize).ok_or_else(|| Error::InvalidChore {
                    chore: ChoreId(31 - mask.leading_zeros() as usize),
                    m: self.m(),
                })?;
                entry
                    .clone()
                    .ok_or_else(|| Error::ShapeMismatch(format!("subset mask {mask} missing from table")))
            }
        }
    }

    /// All `2^m` subset costs indexed by mask.
    pub fn subset_table(&self) -> Result<Vec<Rat>> {
        let m = self.m();
        if m > TABULAR_MAX_M {
            return Err(Error::ScaleLimit { what: "subset enumeration", m, limit: TABULAR_MAX_M });
        }
        match self {
            CostFunction::Additive(costs) => {
                let mut table = vec![Rat::zero(); 1 << m];
                for mask in 1usize..(1 << m) {
                    let low = mask.trailing_zeros() as usize;
                    table[mask] = &table[mask & (mask - 1)] + &costs[low];
                }
                Ok(table)
            }
            CostFunction::Tabular(_) => (0..1u32 << m).map(|s| self.mask_cost(s)).collect(),
        }
    }
}

/// True iff every set of at least two chores costs more than any single
/// chore. For additive functions this is: the two smallest costs sum to
/// more than the largest.
pub fn is_collective(f: &CostFunction) -> Result<bool> {
    let costs = f.expect_additive()?;
    if costs.len() <= 1 {
        return Ok(true);
    }
    let mut sorted: Vec<&Rat> = costs.iter().collect();
    sorted.sort();
    Ok(sorted[0] + sorted[1] > *sorted[sorted.len() - 1])
}

/// True iff the largest chore cost is at most `alpha` times the smallest.
pub fn is_ratio_bounded(f: &CostFunction, alpha: &Rat) -> Result<bool> {
    let costs = f.expect_additive()?;
    if costs.len() <= 1 {
        return Ok(true);
    }
    if let Some(i) = costs.iter().position(Rat::is_zero) {
        return Err(Error::ZeroCostChore(ChoreId(i)));
    }
    let max = costs.iter().max().expect("nonempty");
    let min = costs.iter().min().expect("nonempty");
    Ok(*max <= alpha * min)
}

/// True iff both functions order the chores identically:
/// `a(b) > a(b')` exactly when `b(b) > b(b')`.
pub fn is_ido(a: &CostFunction, b: &CostFunction) -> Result<bool> {
    let ca = a.expect_additive()?;
    let cb = b.expect_additive()?;
    if ca.len() != cb.len() {
        return Err(Error::ShapeMismatch(format!(
            "cost vectors of length {} and {}",
            ca.len(),
            cb.len()
        )));
    }
    // Along `a`'s sorted order, ties in `a` must be ties in `b` and strict
    // steps in `a` strict steps in `b`; transitivity covers the rest.
    let mut order: Vec<usize> = (0..ca.len()).collect();
    order.sort_by(|&i, &j| ca[i].cmp(&ca[j]));
    Ok(order
        .windows(2)
        .all(|w| ca[w[0]].cmp(&ca[w[1]]) == cb[w[0]].cmp(&cb[w[1]])))
}

/// Three agents' cost functions over `m` chores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    m: usize,
    agents: [CostFunction; AGENTS],
    pub label: Option<String>,
}

impl Instance {
    pub fn new(agents: [CostFunction; AGENTS]) -> Result<Self> {
        let m = agents[0].m();
        for (i, f) in agents.iter().enumerate() {
            if f.m() != m {
                return Err(Error::ShapeMismatch(format!(
                    "agent {} is defined over {} chores, agent 1 over {m}",
                    i + 1,
                    f.m()
                )));
            }
            if let CostFunction::Tabular(table) = f {
                if !table.len().is_power_of_two() {
                    return Err(Error::ShapeMismatch(format!(
                        "agent {} table has {} entries, not a power of two",
                        i + 1,
                        table.len()
                    )));
                }
            }
            if !f.is_additive() && m > TABULAR_MAX_M {
                return Err(Error::ScaleLimit { what: "tabular cost function", m, limit: TABULAR_MAX_M });
            }
        }
        Ok(Instance { m, agents, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Cost function of agent `i` (0-based).
    pub fn agent(&self, i: usize) -> &CostFunction {
        &self.agents[i]
    }

    pub fn agents(&self) -> &[CostFunction; AGENTS] {
        &self.agents
    }

    pub fn chores(&self) -> impl Iterator<Item = ChoreId> {
        (0..self.m).map(ChoreId)
    }
}

/// Ordered triple of bundles. Bundle `k` belongs to agent `k` unless a
/// solver reports a separate assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Allocation {
    pub bundles: [Bundle; AGENTS],
}

impl Allocation {
    pub fn new(bundles: [Bundle; AGENTS]) -> Self {
        Allocation { bundles }
    }

    pub fn from_indices(b0: &[usize], b1: &[usize], b2: &[usize]) -> Self {
        Allocation::new([bundle(b0.iter().copied()), bundle(b1.iter().copied()), bundle(b2.iter().copied())])
    }

    /// Allocation where chore `i` goes to bundle `owner[i]`.
    pub fn from_owners(owner: &[usize]) -> Result<Self> {
        let mut bundles: [Bundle; AGENTS] = Default::default();
        for (i, &k) in owner.iter().enumerate() {
            if k >= AGENTS {
                return Err(Error::InvalidAllocation(format!("chore {i} assigned to bundle {k}")));
            }
            bundles[k].insert(ChoreId(i));
        }
        Ok(Allocation { bundles })
    }

    /// Base-3 code: chore `i`'s digit is the index of its bundle.
    pub fn code(&self) -> u64 {
        let mut code = 0u64;
        let mut place = 1u64;
        let m = self.bundles.iter().flat_map(|b| b.iter()).map(|b| b.0 + 1).max().unwrap_or(0);
        for i in 0..m {
            let digit = self.bundle_of(ChoreId(i)).unwrap_or(0) as u64;
            code += digit * place;
            place *= 3;
        }
        code
    }

    pub fn from_code(mut code: u64, m: usize) -> Self {
        let mut bundles: [Bundle; AGENTS] = Default::default();
        for i in 0..m {
            bundles[(code % 3) as usize].insert(ChoreId(i));
            code /= 3;
        }
        Allocation { bundles }
    }

    pub fn bundle_of(&self, b: ChoreId) -> Option<usize> {
        self.bundles.iter().position(|x| x.contains(&b))
    }

    /// Checks that the bundles partition `0..m`.
    pub fn check(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        for (k, bundle) in self.bundles.iter().enumerate() {
            for b in bundle {
                if b.0 >= m {
                    return Err(Error::InvalidAllocation(format!("bundle {k} holds {b}, but m = {m}")));
                }
                if std::mem::replace(&mut seen[b.0], true) {
                    return Err(Error::InvalidAllocation(format!("{b} appears in more than one bundle")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidAllocation(format!("chore b{i} is unallocated")));
        }
        Ok(())
    }

    /// Bundles reordered so that agent `a` holds `self.bundles[assignment[a]]`.
    pub fn assigned(&self, assignment: &[usize; AGENTS]) -> Allocation {
        Allocation { bundles: assignment.map(|k| self.bundles[k].clone()) }
    }
}
