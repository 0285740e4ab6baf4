//! EFX for three agents when agents 1 and 2 are additive, collective and
//! identically ordered.
//!
//! The working state keeps `X_1`, `X_2` feasible for agent 1 and `X_3`
//! feasible for agent 2. While no assignment gives every agent a feasible
//! bundle, one transfer step strictly lowers agent 1's cost of the costlier
//! working bundle. Every step re-checks the facts the termination argument
//! rests on and fails loudly if one breaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::Mode;
use crate::init::{assign_from_matrix, label_initial, lpt_partition, relabel, LabeledState};
use crate::instance::{Allocation, ChoreId, Instance, AGENTS};
use crate::perturb::PerturbedCost;
use crate::solve::{Solution, SolveOptions};
use crate::tally::{Scale, Tally};
use crate::validate::validate_instance;

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum EfxCase {
    Finalize,
    /// Swap `d` with the cheaper `b` from `X_3`.
    Case1,
    /// The cheapest chore overall is `d`; it moves to `X_3`.
    Case2_1,
    /// The cheapest chore overall sits in `X_2`; moving `d` to `X_3` suffices.
    Case2_2a,
    /// As above, but `X_2` also hands its cheapest chore `d'` to `X_1`.
    Case2_2b,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EfxStepRecord {
    pub iteration: usize,
    pub case: EfxCase,
    /// Cheapest chore of `X_1` for agents 1 and 2.
    pub d: Option<ChoreId>,
    /// Cheapest chore of `X_2`, when it takes part.
    pub d_prime: Option<ChoreId>,
    /// Cheapest chore of `X_3`, in case 1.
    pub b: Option<ChoreId>,
    pub potential_before: PerturbedCost,
    pub potential_after: PerturbedCost,
    pub before: Allocation,
    pub after: Allocation,
    /// Agent-to-bundle assignment, for the finalize record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<[usize; AGENTS]>,
}

/// Result of one transfer, before relabeling.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EfxTransfer {
    pub case: EfxCase,
    pub d: ChoreId,
    pub d_prime: Option<ChoreId>,
    pub b: Option<ChoreId>,
    pub allocation: Allocation,
}

fn contract(msg: String) -> Error {
    Error::ContractViolated(msg)
}

/// Applies the transfer rule in place; returns `(case, d, d', b)`.
fn transfer(t: &mut Tally<'_>, scale: Scale) -> Result<(EfxCase, ChoreId, Option<ChoreId>, Option<ChoreId>)> {
    let d = t.min_chore(0, 0).ok_or_else(|| Error::InvariantBroken("X_1 is empty".into()))?;
    if let Some(b) = t.min_chore(0, 2) {
        let below_1 = t.chore_lex(0, b) < t.chore_lex(0, d);
        let below_2 = t.chore_lex(1, b) < t.chore_lex(1, d);
        if below_1 != below_2 {
            return Err(Error::InvariantBroken(format!("agents 1 and 2 order {b} and {d} differently")));
        }
        if below_1 {
            t.move_chore(d, 0, 2);
            t.move_chore(b, 2, 0);
            return Ok((EfxCase::Case1, d, None, Some(b)));
        }
    }
    let g = t.global_min_chore(0).expect("X_1 is nonempty");
    if t.bundle(0).contains(&g) {
        debug_assert_eq!(g, d);
        t.move_chore(d, 0, 2);
        return Ok((EfxCase::Case2_1, d, None, None));
    }
    if !t.bundle(1).contains(&g) {
        return Err(contract(format!("cheapest chore {g} lies in X_3 although case 1 failed")));
    }
    let d_prime = t.min_chore(0, 1).expect("X_2 holds the cheapest chore");
    t.move_chore(d, 0, 2);
    if t.feasible(0, 1, Mode::Efx, scale) {
        return Ok((EfxCase::Case2_2a, d, Some(d_prime), None));
    }
    t.move_chore(d_prime, 1, 0);
    Ok((EfxCase::Case2_2b, d, Some(d_prime), None))
}

/// The transfer rule alone, on any allocation with nonempty `X_1`. No
/// pre- or postconditions are checked.
pub fn efx_transfer(inst: &Instance, x: &Allocation, scale: Scale) -> Result<EfxTransfer> {
    x.check(inst.m())?;
    let mut t = Tally::new(inst, x);
    let (case, d, d_prime, b) = transfer(&mut t, scale)?;
    Ok(EfxTransfer { case, d, d_prime, b, allocation: t.allocation() })
}

/// Why the working invariant fails, if it does.
fn invariant_failure(t: &Tally<'_>, scale: Scale) -> Option<String> {
    for (agent, k) in [(0, 0), (0, 1), (1, 2)] {
        if !t.feasible(agent, k, Mode::Efx, scale) {
            return Some(format!("X_{} is not EFX-feasible for agent {}", k + 1, agent + 1));
        }
    }
    None
}

/// `X_3` costs agent `a` less than `X_j` after dropping `a`'s cheapest chore of `X_j`.
fn below_after_removal(t: &Tally<'_>, a: usize, j: usize, scale: Scale) -> bool {
    let b = t.min_chore(a, j).expect("stuck bundles hold two chores");
    match scale {
        Scale::Symbolic => t.lex(a, 2) < &t.lex(a, j) - &t.chore_lex(a, b),
        Scale::Raw => {
            let cb = t.instance().agent(a).chore_cost(b).expect("chore in range");
            t.raw(a, 2) < &(t.raw(a, j) - &cb)
        }
    }
}

/// Facts that hold whenever finalization fails.
fn check_stuck(t: &Tally<'_>, scale: Scale) -> Result<()> {
    for k in 0..2 {
        if t.bundle(k).len() < 2 {
            return Err(contract(format!("finalization failed with |X_{}| = {}", k + 1, t.bundle(k).len())));
        }
    }
    for a in 1..AGENTS {
        let cheapest = match scale {
            Scale::Symbolic => t.favorite(a, scale) == 2,
            Scale::Raw => (0..2).all(|k| t.raw(a, 2) <= t.raw(a, k)),
        };
        if !cheapest {
            return Err(contract(format!("X_3 is not the cheapest bundle for agent {}", a + 1)));
        }
        if t.instance().agent(a).is_additive() {
            for j in 0..2 {
                if !below_after_removal(t, a, j, scale) {
                    return Err(contract(format!(
                        "X_3 is not cheaper for agent {} than X_{} minus its cheapest chore",
                        a + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

fn step(t: &mut Tally<'_>, iteration: usize, scale: Scale) -> Result<EfxStepRecord> {
    if let Some(why) = invariant_failure(t, scale) {
        return Err(Error::InvariantBroken(why));
    }
    if t.lex(0, 0) < t.lex(0, 1) {
        return Err(Error::InvariantBroken("X_1 is cheaper than X_2 for agent 1".into()));
    }
    if assign_from_matrix(&t.matrix(Mode::Efx, scale)).is_some() {
        return Err(Error::InvariantBroken("state can already be finalized".into()));
    }
    check_stuck(t, scale)?;
    let before = t.allocation();
    let potential_before = t.lex(0, 0);
    let (case, d, d_prime, b) = transfer(t, scale)?;
    relabel(t);
    let potential_after = t.lex(0, 0);
    if let Some(why) = invariant_failure(t, scale) {
        return Err(contract(format!("after {case:?} at iteration {iteration}: {why}")));
    }
    if potential_after >= potential_before {
        return Err(contract(format!(
            "potential did not drop at iteration {iteration}: {potential_before} -> {potential_after}"
        )));
    }
    Ok(EfxStepRecord {
        iteration,
        case,
        d: Some(d),
        d_prime,
        b,
        potential_before,
        potential_after,
        before,
        after: t.allocation(),
        assignment: None,
    })
}

/// One checked step from a stuck labeled state.
pub fn efx_step(inst: &Instance, state: &LabeledState, scale: Scale) -> Result<(LabeledState, EfxStepRecord)> {
    state.allocation.check(inst.m())?;
    let mut t = Tally::new(inst, &state.allocation);
    let record = step(&mut t, 0, scale)?;
    Ok((crate::init::snapshot(&t), record))
}

/// Iteration cap `3^m + 1`, saturating.
fn iteration_guard(m: usize) -> u128 {
    u32::try_from(m).ok().and_then(|m| 3u128.checked_pow(m)).map_or(u128::MAX, |g| g + 1)
}

pub fn solve_efx(inst: &Instance, opts: &SolveOptions) -> Result<Solution<EfxStepRecord>> {
    let scale = check_assumptions(inst, opts)?;
    if inst.m() == 0 {
        return Solution::certify(inst, Allocation::default(), [0, 1, 2], Mode::Efx, Vec::new());
    }
    let start = label_initial(inst, &lpt_partition(inst.agent(0))?)?;
    run(Tally::new(inst, &start.allocation), scale)
}

/// Runs the loop from a caller-supplied state instead of the greedy start.
/// Positions 0 and 1 are relabeled first if needed.
pub fn solve_efx_from(inst: &Instance, start: &LabeledState, opts: &SolveOptions) -> Result<Solution<EfxStepRecord>> {
    let scale = check_assumptions(inst, opts)?;
    start.allocation.check(inst.m())?;
    let mut t = Tally::new(inst, &start.allocation);
    relabel(&mut t);
    if let Some(why) = invariant_failure(&t, scale) {
        return Err(Error::InvariantBroken(why));
    }
    run(t, scale)
}

fn check_assumptions(inst: &Instance, opts: &SolveOptions) -> Result<Scale> {
    let report = validate_instance(inst);
    report.efx_assumptions().map_err(Error::AssumptionViolated)?;
    opts.scale(&report)
}

fn run(mut t: Tally<'_>, scale: Scale) -> Result<Solution<EfxStepRecord>> {
    let inst = t.instance();
    let guard = iteration_guard(inst.m());
    let mut trace = Vec::new();
    for iteration in 0usize.. {
        if iteration as u128 > guard {
            return Err(contract(format!("no EFX allocation after {iteration} iterations")));
        }
        if let Some(assignment) = assign_from_matrix(&t.matrix(Mode::Efx, scale)) {
            let potential = t.lex(0, 0);
            let x = t.allocation();
            trace.push(EfxStepRecord {
                iteration,
                case: EfxCase::Finalize,
                d: None,
                d_prime: None,
                b: None,
                potential_before: potential.clone(),
                potential_after: potential,
                before: x.clone(),
                after: x.clone(),
                assignment: Some(assignment),
            });
            return Solution::certify(inst, x, assignment, Mode::Efx, trace);
        }
        trace.push(step(&mut t, iteration, scale)?);
    }
    unreachable!("the loop returns")
}
