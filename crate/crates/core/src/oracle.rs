//! Brute-force ground truth over all `3^m` allocations.
//!
//! Subset costs are tabulated once per agent and replaced by their ranks,
//! so each allocation is checked with integer comparisons only. This is a
//! separate encoding from [`crate::fairness`]; the two are cross-checked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{verify, Mode};
use crate::init::{LabeledState, PERMUTATIONS};
use crate::instance::{mask_bundle, Allocation, CostFunction, Instance, AGENTS};
use crate::perturb::lex_cost;
use crate::tally::Scale;

pub const ORACLE_MAX_M: usize = 12;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    pub mode: Mode,
    pub exists: bool,
    pub count: u64,
    /// Passing allocation with the lowest base-3 code.
    pub sample_witness: Option<Allocation>,
}

/// One agent's subset costs as ranks: equal costs share a rank.
struct Ranks {
    raw: Vec<u32>,
    /// Ranks of `(cost, mask)`, the symbolic order; all distinct.
    lex: Vec<u32>,
}

impl Ranks {
    fn new(f: &CostFunction) -> Result<Self> {
        let table = f.subset_table()?;
        let mut order: Vec<usize> = (0..table.len()).collect();
        // Weight order equals mask order, so (cost, mask) is the symbolic order.
        order.sort_by(|&a, &b| table[a].cmp(&table[b]).then(a.cmp(&b)));
        let mut raw = vec![0u32; table.len()];
        let mut lex = vec![0u32; table.len()];
        let mut rank = 0u32;
        for (pos, &s) in order.iter().enumerate() {
            if pos > 0 && table[order[pos - 1]] != table[s] {
                rank += 1;
            }
            raw[s] = rank;
            lex[s] = pos as u32;
        }
        Ok(Ranks { raw, lex })
    }

    fn get(&self, scale: Scale) -> &[u32] {
        match scale {
            Scale::Raw => &self.raw,
            Scale::Symbolic => &self.lex,
        }
    }
}

struct Table {
    ranks: [Ranks; AGENTS],
}

impl Table {
    fn new(inst: &Instance) -> Result<Self> {
        let m = inst.m();
        if m > ORACLE_MAX_M {
            return Err(Error::ScaleLimit { what: "exhaustive enumeration", m, limit: ORACLE_MAX_M });
        }
        Ok(Table { ranks: [Ranks::new(inst.agent(0))?, Ranks::new(inst.agent(1))?, Ranks::new(inst.agent(2))?] })
    }

    fn cost(&self, agent: usize, mask: u32, scale: Scale) -> u32 {
        self.ranks[agent].get(scale)[mask as usize]
    }

    /// Would `agent` accept bundle `k` of `masks` under `mode`.
    fn feasible(&self, agent: usize, masks: &[u32; AGENTS], k: usize, mode: Mode, scale: Scale) -> bool {
        let c = self.ranks[agent].get(scale);
        let own = masks[k];
        let others = (0..AGENTS).filter(move |&l| l != k);
        let chores = (0..32).map(|i| 1u32 << i).filter(|bit| own & bit != 0);
        match mode {
            Mode::Efx => chores.clone().all(|bit| others.clone().all(|l| c[(own & !bit) as usize] <= c[masks[l] as usize])),
            Mode::Tefx => {
                chores.clone().all(|bit| others.clone().all(|l| c[(own & !bit) as usize] <= c[(masks[l] | bit) as usize]))
            }
            Mode::Ef1 => {
                own == 0 || others.clone().all(|l| chores.clone().any(|bit| c[(own & !bit) as usize] <= c[masks[l] as usize]))
            }
        }
    }

    fn passes(&self, masks: &[u32; AGENTS], mode: Mode) -> bool {
        (0..AGENTS).all(|a| self.feasible(a, masks, a, mode, Scale::Raw))
    }
}

/// Calls `visit(code, masks)` for every allocation of `m` chores, in
/// increasing base-3 code.
fn for_each_allocation(m: usize, mut visit: impl FnMut(u64, &[u32; AGENTS])) {
    let mut digits = vec![0u8; m];
    let mut masks = [if m == 0 { 0 } else { (1u32 << m) - 1 }, 0, 0];
    let total = 3u64.pow(m as u32);
    for code in 0..total {
        visit(code, &masks);
        for (i, digit) in digits.iter_mut().enumerate() {
            let bit = 1u32 << i;
            masks[*digit as usize] &= !bit;
            *digit = (*digit + 1) % 3;
            masks[*digit as usize] |= bit;
            if *digit != 0 {
                break;
            }
        }
    }
}

fn allocation_of(masks: &[u32; AGENTS]) -> Allocation {
    Allocation::new(masks.map(mask_bundle))
}

/// Base-3 codes of every allocation passing `mode`, ascending.
pub fn passing_codes(inst: &Instance, mode: Mode) -> Result<Vec<u64>> {
    let table = Table::new(inst)?;
    let mut out = Vec::new();
    for_each_allocation(inst.m(), |code, masks| {
        if table.passes(masks, mode) {
            out.push(code);
        }
    });
    Ok(out)
}

pub fn enumerate_check(inst: &Instance, mode: Mode) -> Result<OracleResult> {
    let codes = passing_codes(inst, mode)?;
    let sample_witness = codes.first().map(|&c| Allocation::from_code(c, inst.m()));
    Ok(OracleResult { mode, exists: !codes.is_empty(), count: codes.len() as u64, sample_witness })
}

/// Whether `x` (bundle `a` held by agent `a`) is in the enumerated passing
/// set, after confirming the enumeration and the fairness predicates agree
/// on it.
pub fn assert_solver_output(inst: &Instance, x: &Allocation, mode: Mode) -> Result<bool> {
    x.check(inst.m())?;
    let codes = passing_codes(inst, mode)?;
    let member = codes.binary_search(&x.code()).is_ok();
    let verdict = verify(inst, x, mode)?.verdict;
    if member != verdict {
        return Err(Error::ContractViolated(format!(
            "enumeration says {member} but the {mode} verifier says {verdict} for {:?}",
            x.bundles
        )));
    }
    Ok(member)
}

/// Every labeled state a solver for `mode` may get stuck in: its working
/// invariant holds, agent 1 finds `X_1` costlier than `X_2`, and no
/// assignment gives every agent a feasible bundle.
///
/// EFX states use the symbolic order throughout; tEFX states use raw
/// feasibility with `X_3` agent 2's raw cheapest bundle, as the solvers do.
pub fn stuck_states(inst: &Instance, mode: Mode) -> Result<Vec<LabeledState>> {
    let table = Table::new(inst)?;
    let mut out = Vec::new();
    let mut masks_found = Vec::new();
    for_each_allocation(inst.m(), |_, masks| {
        if table.cost(0, masks[0], Scale::Symbolic) <= table.cost(0, masks[1], Scale::Symbolic) {
            return;
        }
        let (scale, ok) = match mode {
            Mode::Efx => (
                Scale::Symbolic,
                table.feasible(0, masks, 0, Mode::Efx, Scale::Symbolic)
                    && table.feasible(0, masks, 1, Mode::Efx, Scale::Symbolic)
                    && table.feasible(1, masks, 2, Mode::Efx, Scale::Symbolic),
            ),
            Mode::Tefx => (
                Scale::Raw,
                table.feasible(0, masks, 0, Mode::Tefx, Scale::Raw)
                    && table.feasible(0, masks, 1, Mode::Tefx, Scale::Raw)
                    && (0..2).all(|k| table.cost(1, masks[2], Scale::Raw) <= table.cost(1, masks[k], Scale::Raw)),
            ),
            Mode::Ef1 => (Scale::Raw, false),
        };
        if !ok {
            return;
        }
        let assignable = PERMUTATIONS.iter().any(|p| (0..AGENTS).all(|a| table.feasible(a, masks, p[a], mode, scale)));
        if !assignable {
            masks_found.push(*masks);
        }
    });
    for masks in masks_found {
        let allocation = allocation_of(&masks);
        let potential = lex_cost(inst.agent(0), &allocation.bundles[0])?;
        out.push(LabeledState { allocation, potential });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, Agent3Kind, GenSpec, Regime};
    use crate::instance::CostFunction;

    fn identical(costs: &[u64]) -> Instance {
        let f = CostFunction::additive(costs.iter().copied());
        Instance::new([f.clone(), f.clone(), f]).unwrap()
    }

    #[test]
    fn single_chore_always_passes() {
        let inst = identical(&[5]);
        for mode in [Mode::Efx, Mode::Tefx, Mode::Ef1] {
            let r = enumerate_check(&inst, mode).unwrap();
            assert!(r.exists);
            assert_eq!(r.count, 3);
            assert_eq!(r.sample_witness, Some(Allocation::from_indices(&[0], &[], &[])));
        }
    }

    #[test]
    fn two_chores_split_or_fail() {
        let inst = identical(&[1, 2]);
        let r = enumerate_check(&inst, Mode::Efx).unwrap();
        assert_eq!(r.count, 6);
        // Independent count: allocations of two chores to distinct bundles.
        let split = (0..9u64).filter(|c| c % 3 != c / 3).count();
        assert_eq!(r.count as usize, split);
    }

    #[test]
    fn empty_instance_has_one_allocation() {
        let inst = identical(&[]);
        let r = enumerate_check(&inst, Mode::Efx).unwrap();
        assert_eq!((r.exists, r.count), (true, 1));
        assert!(assert_solver_output(&inst, &Allocation::default(), Mode::Efx).unwrap());
    }

    #[test]
    fn scale_guard() {
        let inst = identical(&[1; 13]);
        assert!(matches!(enumerate_check(&inst, Mode::Efx), Err(Error::ScaleLimit { .. })));
    }

    #[test]
    fn enumeration_visits_codes_in_order() {
        let mut seen = Vec::new();
        for_each_allocation(3, |code, masks| {
            assert_eq!(allocation_of(masks), Allocation::from_code(code, 3));
            seen.push(code);
        });
        assert_eq!(seen, (0..27).collect::<Vec<_>>());
    }

    #[test]
    fn enumeration_agrees_with_verifier() {
        for seed in 0..6 {
            let inst = generate(&GenSpec::new(5, Regime::Unconstrained, Agent3Kind::TabularMonotone, seed)).unwrap();
            for mode in [Mode::Efx, Mode::Tefx, Mode::Ef1] {
                let codes = passing_codes(&inst, mode).unwrap();
                for code in 0..243u64 {
                    let x = Allocation::from_code(code, 5);
                    assert_eq!(codes.binary_search(&code).is_ok(), verify(&inst, &x, mode).unwrap().verdict);
                }
            }
        }
    }

    #[test]
    fn corrupted_allocation_is_rejected() {
        let inst = identical(&[3, 4, 5, 6]);
        let good = enumerate_check(&inst, Mode::Efx).unwrap().sample_witness.unwrap();
        assert!(assert_solver_output(&inst, &good, Mode::Efx).unwrap());
        let mut bad = good.clone();
        let moved: Vec<_> = bad.bundles[1].iter().copied().collect();
        for b in moved {
            bad.bundles[1].remove(&b);
            bad.bundles[0].insert(b);
        }
        assert!(!assert_solver_output(&inst, &bad, Mode::Efx).unwrap());
    }

    #[test]
    fn stuck_states_are_really_stuck() {
        let f = CostFunction::additive([70, 90, 100, 110, 120, 128, 64]);
        let g = CostFunction::additive([64, 80, 100, 128, 70, 90, 125]);
        let inst = Instance::new([f, g.clone(), g]).unwrap();
        let states = stuck_states(&inst, Mode::Tefx).unwrap();
        assert!(!states.is_empty());
        for s in &states {
            let x = &s.allocation;
            for a in 1..3 {
                for k in 0..2 {
                    assert!(!crate::fairness::is_tefx_feasible(&inst, x, a, k).unwrap());
                }
            }
        }
    }
}
