//! Incrementally maintained bundle costs for the solvers.
//!
//! A [`Tally`] owns the three working bundles and keeps, for every agent,
//! each bundle's cost and (for additive agents) the bundle's chores sorted
//! by `(cost, index)`. Moving a chore costs `O(log m)` for additive agents;
//! tabular agents are looked up by mask.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::fairness::Mode;
use crate::instance::{bundle_mask, Allocation, Bundle, ChoreId, CostFunction, Instance, AGENTS};
use crate::perturb::{chore_weight, lex_chore, PerturbedCost};
use crate::rat::Rat;

/// Which order the solver compares costs in.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// The instance's own costs; ties stay ties.
    Raw,
    /// Costs with weight-sum tie-breaking; no two distinct bundles tie.
    Symbolic,
}

/// One agent's chores of each bundle, ordered by cost then index.
type SortedBundles = [BTreeSet<(Rat, ChoreId)>; AGENTS];

#[derive(Clone, Debug)]
pub(crate) struct Tally<'a> {
    inst: &'a Instance,
    bundles: [Bundle; AGENTS],
    weights: [BigUint; AGENTS],
    totals: [[Rat; AGENTS]; AGENTS],
    masks: [u32; AGENTS],
    sorted: [Option<SortedBundles>; AGENTS],
}

impl<'a> Tally<'a> {
    pub fn new(inst: &'a Instance, x: &Allocation) -> Self {
        let bundles = x.bundles.clone();
        let weights = bundles.each_ref().map(crate::perturb::bundle_weight);
        let masks = if inst.m() <= 32 { bundles.each_ref().map(bundle_mask) } else { [0; AGENTS] };
        let totals = std::array::from_fn(|a| {
            std::array::from_fn(|k| inst.agent(a).cost(&bundles[k]).expect("allocation checked against m"))
        });
        let sorted = std::array::from_fn(|a| {
            inst.agent(a).per_chore().map(|c| {
                bundles.each_ref().map(|b| b.iter().map(|&ch| (c[ch.0].clone(), ch)).collect())
            })
        });
        Tally { inst, bundles, weights, totals, masks, sorted }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn bundle(&self, k: usize) -> &Bundle {
        &self.bundles[k]
    }

    pub fn allocation(&self) -> Allocation {
        Allocation::new(self.bundles.clone())
    }

    pub fn raw(&self, agent: usize, k: usize) -> &Rat {
        &self.totals[agent][k]
    }

    pub fn lex(&self, agent: usize, k: usize) -> PerturbedCost {
        PerturbedCost::new(self.totals[agent][k].clone(), self.weights[k].clone())
    }

    pub fn chore_lex(&self, agent: usize, b: ChoreId) -> PerturbedCost {
        lex_chore(self.inst.agent(agent), b).expect("chore in range")
    }

    /// Agent's cheapest chore in bundle `k` under `(cost, index)` order.
    pub fn min_chore(&self, agent: usize, k: usize) -> Option<ChoreId> {
        match &self.sorted[agent] {
            Some(sets) => sets[k].first().map(|(_, b)| *b),
            None => self.bundles[k].iter().copied().min_by(|&x, &y| self.chore_lex(agent, x).cmp(&self.chore_lex(agent, y))),
        }
    }

    /// Agent's cheapest chore among all chores.
    pub fn global_min_chore(&self, agent: usize) -> Option<ChoreId> {
        (0..AGENTS)
            .filter_map(|k| self.min_chore(agent, k))
            .min_by(|&x, &y| self.chore_lex(agent, x).cmp(&self.chore_lex(agent, y)))
    }

    pub fn move_chore(&mut self, b: ChoreId, from: usize, to: usize) {
        assert!(self.bundles[from].remove(&b), "{b} not in bundle {from}");
        self.bundles[to].insert(b);
        self.weights[from].set_bit(b.0 as u64 + 1, false);
        self.weights[to].set_bit(b.0 as u64 + 1, true);
        if self.inst.m() <= 32 {
            self.masks[from] &= !(1 << b.0);
            self.masks[to] |= 1 << b.0;
        }
        for a in 0..AGENTS {
            match self.inst.agent(a) {
                CostFunction::Additive(c) => {
                    let cost = &c[b.0];
                    self.totals[a][from] = &self.totals[a][from] - cost;
                    self.totals[a][to] += cost;
                    let sets = self.sorted[a].as_mut().expect("additive agent keeps sorted sets");
                    sets[from].remove(&(cost.clone(), b));
                    sets[to].insert((cost.clone(), b));
                }
                f @ CostFunction::Tabular(_) => {
                    self.totals[a][from] = f.mask_cost(self.masks[from]).expect("complete table");
                    self.totals[a][to] = f.mask_cost(self.masks[to]).expect("complete table");
                }
            }
        }
    }

    /// Exchanges the contents of two bundle positions.
    pub fn swap(&mut self, k: usize, l: usize) {
        self.bundles.swap(k, l);
        self.weights.swap(k, l);
        self.masks.swap(k, l);
        for a in 0..AGENTS {
            self.totals[a].swap(k, l);
            if let Some(sets) = self.sorted[a].as_mut() {
                sets.swap(k, l);
            }
        }
    }

    /// Would `agent` accept bundle `k` under `mode` (EFX or tEFX) in `scale`.
    pub fn feasible(&self, agent: usize, k: usize, mode: Mode, scale: Scale) -> bool {
        if self.bundles[k].len() <= 1 {
            return true;
        }
        let others = (0..AGENTS).filter(|&l| l != k);
        match (self.inst.agent(agent), scale) {
            (CostFunction::Additive(c), Scale::Raw) => {
                let b = self.min_chore(agent, k).expect("nonempty");
                let cb = &c[b.0];
                let total = &self.totals[agent][k];
                others.into_iter().all(|l| {
                    let bound = match mode {
                        Mode::Efx => &self.totals[agent][l] + cb,
                        Mode::Tefx => &self.totals[agent][l] + &cb.double(),
                        Mode::Ef1 => unreachable!("solver never asks about EF1"),
                    };
                    *total <= bound
                })
            }
            (CostFunction::Additive(_), Scale::Symbolic) => {
                let b = self.min_chore(agent, k).expect("nonempty");
                let lb = self.chore_lex(agent, b);
                let rest = &self.lex(agent, k) - &lb;
                others.into_iter().all(|l| {
                    let target = self.lex(agent, l);
                    match mode {
                        Mode::Efx => rest <= target,
                        Mode::Tefx => rest <= &target + &lb,
                        Mode::Ef1 => unreachable!("solver never asks about EF1"),
                    }
                })
            }
            (f @ CostFunction::Tabular(_), scale) => {
                let lookup = |mask: u32| f.mask_cost(mask).expect("complete table");
                self.bundles[k].iter().all(|&b| {
                    let bit = 1u32 << b.0;
                    let rest_base = lookup(self.masks[k] & !bit);
                    (0..AGENTS).filter(|&l| l != k).all(|l| {
                        let (target_mask, target_weight) = match mode {
                            Mode::Efx => (self.masks[l], self.weights[l].clone()),
                            Mode::Tefx => (self.masks[l] | bit, &self.weights[l] + chore_weight(b)),
                            Mode::Ef1 => unreachable!("solver never asks about EF1"),
                        };
                        let target_base = lookup(target_mask);
                        match scale {
                            Scale::Raw => rest_base <= target_base,
                            Scale::Symbolic => {
                                let rest = PerturbedCost::new(rest_base.clone(), &self.weights[k] - chore_weight(b));
                                rest <= PerturbedCost::new(target_base, target_weight)
                            }
                        }
                    })
                })
            }
        }
    }

    pub fn matrix(&self, mode: Mode, scale: Scale) -> [[bool; AGENTS]; AGENTS] {
        std::array::from_fn(|a| std::array::from_fn(|k| self.feasible(a, k, mode, scale)))
    }

    /// Bundle index with the smallest cost for `agent` in `scale`; lowest
    /// index on ties.
    pub fn favorite(&self, agent: usize, scale: Scale) -> usize {
        let mut best = 0;
        for k in 1..AGENTS {
            let better = match scale {
                Scale::Raw => self.totals[agent][k] < self.totals[agent][best],
                Scale::Symbolic => self.lex(agent, k) < self.lex(agent, best),
            };
            if better {
                best = k;
            }
        }
        best
    }
}
