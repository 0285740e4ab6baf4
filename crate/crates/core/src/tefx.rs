//! tEFX for three agents when agents 1 and 2 are additive with every chore
//! cost within a factor of two of every other.
//!
//! The working state keeps `X_1`, `X_2` tEFX-feasible for agent 1 and `X_3`
//! agent 2's cheapest bundle. Each stuck iteration moves agent 2's cheapest
//! chore of `X_1` into `X_3`; `X_3` only ever grows, so there are at most
//! `m` transfers.
//!
//! Feasibility is judged on the raw costs. The factor-two bound that the
//! transfer argument relies on can be broken by symbolic tie-breaking when
//! a ratio is exactly two, so only orderings (labels, cheapest chores, the
//! continue/finish test) use the symbolic order, which refines the raw one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::Mode;
use crate::init::{assign_from_matrix, label_initial, lpt_partition, relabel, snapshot, LabeledState};
use crate::instance::{Allocation, ChoreId, Instance, AGENTS};
use crate::solve::{Solution, SolveOptions};
use crate::tally::{Scale, Tally};
use crate::validate::validate_instance;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TefxOutcome {
    /// `X_3 ∪ d'` is still agent 2's cheapest bundle; keep going.
    Continue,
    /// Some assignment already gives everyone a feasible bundle.
    FinalizeByMatrix,
    /// The transfer made `X_2` agent 2's cheapest bundle and left
    /// `X_3 ∪ d'` acceptable to her, so the transferred state is final.
    FinalizeByTransfer,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TefxStepRecord {
    pub iteration: usize,
    /// Agent 2's cheapest chore of `X_1`.
    pub d_prime: Option<ChoreId>,
    /// Agent 1's cheapest chore of `X_2`.
    pub q: Option<ChoreId>,
    pub outcome: TefxOutcome,
    pub sizes_before: [usize; AGENTS],
    pub sizes_after: [usize; AGENTS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<[usize; AGENTS]>,
}

/// What a single step leaves behind.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TefxStepResult {
    Continue(LabeledState),
    Final { bundles: Allocation, assignment: [usize; AGENTS] },
}

fn contract(msg: String) -> Error {
    Error::ContractViolated(msg)
}

fn sizes(t: &Tally<'_>) -> [usize; AGENTS] {
    std::array::from_fn(|k| t.bundle(k).len())
}

fn invariant_failure(t: &Tally<'_>) -> Option<String> {
    for k in 0..2 {
        if !t.feasible(0, k, Mode::Tefx, Scale::Raw) {
            return Some(format!("X_{} is not tEFX-feasible for agent 1", k + 1));
        }
    }
    if (0..2).any(|k| t.raw(1, k) < t.raw(1, 2)) {
        return Some("X_3 is not agent 2's cheapest bundle".into());
    }
    None
}

/// One transfer from a stuck state. Returns the record and, when the
/// transferred state is final, its assignment.
fn step(t: &mut Tally<'_>, iteration: usize) -> Result<(TefxStepRecord, Option<[usize; AGENTS]>)> {
    let sizes_before = sizes(t);
    if sizes_before[0] < 2 || sizes_before[1] < 2 {
        return Err(contract(format!("finalization failed with bundle sizes {sizes_before:?}")));
    }
    let d_prime = t.min_chore(1, 0).expect("X_1 is nonempty");
    let q = t.min_chore(0, 1).expect("X_2 is nonempty");
    t.move_chore(d_prime, 0, 2);
    if (0..2).all(|k| t.lex(1, 2) < t.lex(1, k)) {
        for k in 0..2 {
            if !t.feasible(0, k, Mode::Tefx, Scale::Raw) {
                return Err(contract(format!(
                    "moving {d_prime} at iteration {iteration} left X_{} tEFX-infeasible for agent 1",
                    k + 1
                )));
            }
        }
        relabel(t);
        let record = TefxStepRecord {
            iteration,
            d_prime: Some(d_prime),
            q: Some(q),
            outcome: TefxOutcome::Continue,
            sizes_before,
            sizes_after: sizes(t),
            assignment: None,
        };
        return Ok((record, None));
    }
    if t.lex(1, 0) < t.lex(1, 1) {
        return Err(contract(format!(
            "X_1 minus {d_prime} is agent 2's cheapest bundle, yet X_1 was infeasible for her"
        )));
    }
    if !t.feasible(1, 2, Mode::Tefx, Scale::Raw) {
        let f = t.min_chore(1, 2).expect("X_3 just grew");
        return Err(contract(format!("X_3 plus {d_prime} is tEFX-infeasible for agent 2 (cheapest chore {f})")));
    }
    let assignment = assign_from_matrix(&t.matrix(Mode::Tefx, Scale::Raw))
        .ok_or_else(|| contract(format!("no feasible assignment after moving {d_prime}")))?;
    let record = TefxStepRecord {
        iteration,
        d_prime: Some(d_prime),
        q: Some(q),
        outcome: TefxOutcome::FinalizeByTransfer,
        sizes_before,
        sizes_after: sizes(t),
        assignment: Some(assignment),
    };
    Ok((record, Some(assignment)))
}

/// One checked step from a stuck labeled state.
pub fn tefx_step(inst: &Instance, state: &LabeledState) -> Result<(TefxStepResult, TefxStepRecord)> {
    state.allocation.check(inst.m())?;
    let mut t = Tally::new(inst, &state.allocation);
    if let Some(why) = invariant_failure(&t) {
        return Err(Error::InvariantBroken(why));
    }
    if t.lex(0, 0) < t.lex(0, 1) {
        return Err(Error::InvariantBroken("X_1 is cheaper than X_2 for agent 1".into()));
    }
    if assign_from_matrix(&t.matrix(Mode::Tefx, Scale::Raw)).is_some() {
        return Err(Error::InvariantBroken("state can already be finalized".into()));
    }
    let (record, done) = step(&mut t, 0)?;
    let result = match done {
        Some(assignment) => TefxStepResult::Final { bundles: t.allocation(), assignment },
        None => TefxStepResult::Continue(snapshot(&t)),
    };
    Ok((result, record))
}

pub fn solve_tefx(inst: &Instance, opts: &SolveOptions) -> Result<Solution<TefxStepRecord>> {
    check_assumptions(inst, opts)?;
    if inst.m() == 0 {
        return Solution::certify(inst, Allocation::default(), [0, 1, 2], Mode::Tefx, Vec::new());
    }
    let start = label_initial(inst, &lpt_partition(inst.agent(0))?)?;
    run(Tally::new(inst, &start.allocation))
}

/// Runs the loop from a caller-supplied state instead of the greedy start.
/// Positions 0 and 1 are relabeled first if needed.
pub fn solve_tefx_from(inst: &Instance, start: &LabeledState, opts: &SolveOptions) -> Result<Solution<TefxStepRecord>> {
    check_assumptions(inst, opts)?;
    start.allocation.check(inst.m())?;
    let mut t = Tally::new(inst, &start.allocation);
    relabel(&mut t);
    if let Some(why) = invariant_failure(&t) {
        return Err(Error::InvariantBroken(why));
    }
    run(t)
}

fn check_assumptions(inst: &Instance, opts: &SolveOptions) -> Result<()> {
    let report = validate_instance(inst);
    report.tefx_assumptions().map_err(Error::AssumptionViolated)?;
    // Feasibility is raw either way; this only gates the option.
    opts.scale(&report).map(drop)
}

fn run(mut t: Tally<'_>) -> Result<Solution<TefxStepRecord>> {
    let inst = t.instance();
    let m = inst.m();
    let mut trace = Vec::new();
    let mut transfers = 0usize;
    for iteration in 0usize.. {
        if let Some(why) = invariant_failure(&t) {
            return Err(contract(format!("iteration {iteration}: {why}")));
        }
        if let Some(assignment) = assign_from_matrix(&t.matrix(Mode::Tefx, Scale::Raw)) {
            let s = sizes(&t);
            trace.push(TefxStepRecord {
                iteration,
                d_prime: None,
                q: None,
                outcome: TefxOutcome::FinalizeByMatrix,
                sizes_before: s,
                sizes_after: s,
                assignment: Some(assignment),
            });
            return Solution::certify(inst, t.allocation(), assignment, Mode::Tefx, trace);
        }
        let (record, done) = step(&mut t, iteration)?;
        trace.push(record);
        if let Some(assignment) = done {
            return Solution::certify(inst, t.allocation(), assignment, Mode::Tefx, trace);
        }
        transfers += 1;
        if transfers > m {
            return Err(contract(format!("{transfers} transfers exceed m = {m}")));
        }
    }
    unreachable!("the loop returns")
}
