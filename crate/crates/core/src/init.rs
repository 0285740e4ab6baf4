//! Starting allocation and the shared finalization step.
//!
//! Working states are labeled so that `X_1` (index 0) is agent 1's costlier
//! bundle of the first two and `X_3` (index 2) is the bundle kept feasible
//! for agent 2. The solvers maintain: `X_1` and `X_2` feasible for agent 1,
//! `X_3` feasible for agent 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::Mode;
use crate::instance::{Allocation, ChoreId, CostFunction, Instance, AGENTS};
use crate::perturb::{lex_chore, PerturbedCost};
use crate::tally::{Scale, Tally};

/// Snapshot of a labeled working allocation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LabeledState {
    pub allocation: Allocation,
    /// Agent 1's symbolic cost of `X_1`, the larger of `X_1` and `X_2`.
    pub potential: PerturbedCost,
}

/// All six agent-to-bundle assignments in lexicographic order.
pub const PERMUTATIONS: [[usize; AGENTS]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Longest-processing-time greedy: chores in decreasing symbolic cost, each to
/// the currently cheapest bundle (lowest index on ties, which only occur
/// between empty bundles). Every resulting bundle is EFX-feasible under `f`:
/// the last chore a bundle received is its cheapest, and when it arrived
/// that bundle was the least loaded.
pub fn lpt_partition(f: &CostFunction) -> Result<Allocation> {
    let m = f.m();
    let mut chores: Vec<(PerturbedCost, ChoreId)> =
        (0..m).map(|i| Ok((lex_chore(f, ChoreId(i))?, ChoreId(i)))).collect::<Result<_>>()?;
    chores.sort_by(|a, b| b.0.cmp(&a.0));
    let mut loads: [PerturbedCost; AGENTS] = Default::default();
    let mut bundles: [crate::instance::Bundle; AGENTS] = Default::default();
    for (cost, b) in chores {
        let target = (0..AGENTS).min_by(|&x, &y| loads[x].cmp(&loads[y]).then(x.cmp(&y))).expect("three bundles");
        loads[target] = &loads[target] + &cost;
        bundles[target].insert(b);
    }
    Ok(Allocation::new(bundles))
}

/// Orders positions 0 and 1 so that agent 1 finds `X_1` costlier.
pub(crate) fn relabel(t: &mut Tally<'_>) {
    if t.lex(0, 0) < t.lex(0, 1) {
        t.swap(0, 1);
    }
}

pub(crate) fn snapshot(t: &Tally<'_>) -> LabeledState {
    LabeledState { allocation: t.allocation(), potential: t.lex(0, 0) }
}

/// Agent 2 takes her favorite bundle as `X_3`; the other two are ordered by
/// agent 1. Requires every bundle of `partition` to be EFX-feasible for
/// agent 1.
pub fn label_initial(inst: &Instance, partition: &Allocation) -> Result<LabeledState> {
    partition.check(inst.m())?;
    let mut t = Tally::new(inst, partition);
    if let Some(k) = (0..AGENTS).find(|&k| !t.feasible(0, k, Mode::Efx, Scale::Symbolic)) {
        return Err(Error::InvariantBroken(format!("initial bundle {k} is not EFX-feasible for agent 1")));
    }
    let fav = t.favorite(1, Scale::Symbolic);
    t.swap(fav, 2);
    // Keep the two remaining bundles in their original relative order
    // before ordering them by agent 1.
    if fav == 0 {
        t.swap(0, 1);
    }
    relabel(&mut t);
    Ok(snapshot(&t))
}

/// First permutation (lexicographic) that gives every agent a bundle she
/// finds feasible according to `matrix[agent][bundle]`.
pub fn assign_from_matrix(matrix: &[[bool; AGENTS]; AGENTS]) -> Option<[usize; AGENTS]> {
    PERMUTATIONS.iter().copied().find(|p| (0..AGENTS).all(|a| matrix[a][p[a]]))
}

/// Assignment `agent -> bundle index` in which every agent gets a
/// `mode`-feasible bundle, or `None` when none exists. Under the working
/// invariant `None` means `X_3` is the only feasible bundle for both
/// agents 2 and 3.
pub fn try_finalize(inst: &Instance, state: &LabeledState, mode: Mode, scale: Scale) -> Result<Option<[usize; AGENTS]>> {
    state.allocation.check(inst.m())?;
    let t = Tally::new(inst, &state.allocation);
    Ok(assign_from_matrix(&t.matrix(mode, scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::is_efx_feasible;
    use crate::instance::bundle;
    use proptest::prelude::*;

    fn identical(costs: &[u64]) -> Instance {
        let f = CostFunction::additive(costs.iter().copied());
        Instance::new([f.clone(), f.clone(), f]).unwrap()
    }

    #[test]
    fn lpt_fixture() {
        let f = CostFunction::additive([9, 8, 7, 6, 5]);
        let p = lpt_partition(&f).unwrap();
        assert_eq!(p, Allocation::from_indices(&[0], &[1, 4], &[2, 3]));
        let inst = identical(&[9, 8, 7, 6, 5]);
        for k in 0..3 {
            assert!(is_efx_feasible(&inst, &p, 0, k).unwrap());
        }
    }

    #[test]
    fn lpt_small_cases() {
        assert_eq!(lpt_partition(&CostFunction::additive([4])).unwrap(), Allocation::from_indices(&[0], &[], &[]));
        assert_eq!(lpt_partition(&CostFunction::additive([])).unwrap(), Allocation::default());
    }

    #[test]
    fn label_initial_fixture() {
        let inst = identical(&[4, 5, 6, 7]);
        let p = lpt_partition(inst.agent(0)).unwrap();
        assert_eq!(p, Allocation::from_indices(&[3], &[2], &[0, 1]));
        let s = label_initial(&inst, &p).unwrap();
        assert_eq!(s.allocation, Allocation::from_indices(&[0, 1], &[3], &[2]));
        assert_eq!(s.potential.base, crate::rat::Rat::from_integer(9));
    }

    #[test]
    fn label_initial_empty() {
        let inst = identical(&[]);
        let s = label_initial(&inst, &Allocation::default()).unwrap();
        assert_eq!(s.allocation, Allocation::default());
    }

    #[test]
    fn label_initial_rejects_infeasible_start() {
        let inst = identical(&[4, 1]);
        let p = Allocation::from_indices(&[0, 1], &[], &[]);
        assert!(matches!(label_initial(&inst, &p), Err(Error::InvariantBroken(_))));
    }

    #[test]
    fn permutation_search_fixtures() {
        assert_eq!(assign_from_matrix(&[[true; 3]; 3]), Some([0, 1, 2]));
        let sole = [[true; 3], [false, false, true], [false, false, true]];
        assert_eq!(assign_from_matrix(&sole), None);
        // Agent 3 takes X_1, agent 2 X_3, agent 1 the remaining X_2.
        let m = [[true; 3], [false, false, true], [true, false, false]];
        assert_eq!(assign_from_matrix(&m), Some([1, 2, 0]));
    }

    #[test]
    fn try_finalize_on_identical_costs() {
        let inst = identical(&[4, 5, 6, 7]);
        let s = label_initial(&inst, &lpt_partition(inst.agent(0)).unwrap()).unwrap();
        let a = try_finalize(&inst, &s, Mode::Efx, Scale::Symbolic).unwrap();
        assert_eq!(a, Some([0, 1, 2]));
        let _ = bundle([0]);
    }

    proptest! {
        #[test]
        fn lpt_bundles_are_all_efx_feasible(costs in prop::collection::vec(0u64..20, 0..12)) {
            let inst = identical(&costs);
            let p = lpt_partition(inst.agent(0)).unwrap();
            p.check(costs.len()).unwrap();
            for k in 0..3 {
                prop_assert!(is_efx_feasible(&inst, &p, 0, k).unwrap());
            }
        }

        #[test]
        fn permutation_search_is_exhaustive(bits in 0u16..512) {
            let matrix: [[bool; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|k| bits & (1 << (3 * a + k)) != 0));
            let found = assign_from_matrix(&matrix);
            let exists = PERMUTATIONS.iter().any(|p| (0..3).all(|a| matrix[a][p[a]]));
            prop_assert_eq!(found.is_some(), exists);
            if let Some(p) = found {
                prop_assert!((0..3).all(|a| matrix[a][p[a]]));
            }
        }
    }
}
