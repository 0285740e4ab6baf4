//! Envy-based fairness predicates evaluated straight from their definitions.
//!
//! Feasibility of bundle `k` for an agent is counterfactual: the agent is
//! imagined holding `X_k` and compared against the other two bundles of
//! `X` as they stand.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{bundle_mask, Allocation, Bundle, ChoreId, CostFunction, Instance, AGENTS};
use crate::rat::Rat;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "EFX")]
    Efx,
    #[serde(rename = "tEFX")]
    Tefx,
    #[serde(rename = "EF1")]
    Ef1,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Efx => "EFX",
            Mode::Tefx => "tEFX",
            Mode::Ef1 => "EF1",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "efx" => Ok(Mode::Efx),
            "tefx" => Ok(Mode::Tefx),
            "ef1" => Ok(Mode::Ef1),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// A violated pair: `envier` holding its own bundle still envies `envied`
/// with respect to `chore`. Agents are 1-based here, as in the emitted JSON.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub envier: usize,
    pub envied: usize,
    pub chore: ChoreId,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FairnessCertificate {
    pub mode: Mode,
    pub verdict: bool,
    /// `matrix[agent][bundle]`: would `agent` accept `bundle` under `mode`.
    pub matrix: [[bool; AGENTS]; AGENTS],
    pub witnesses: Vec<Witness>,
}

/// Costs of one agent's view of an allocation, with removal and insertion
/// evaluated without re-summing whole bundles.
struct View<'a> {
    f: &'a CostFunction,
    totals: [Rat; AGENTS],
    masks: [u32; AGENTS],
}

impl<'a> View<'a> {
    fn new(f: &'a CostFunction, x: &Allocation) -> Result<Self> {
        let totals = [f.cost(&x.bundles[0])?, f.cost(&x.bundles[1])?, f.cost(&x.bundles[2])?];
        let masks = if f.is_additive() {
            [0; AGENTS]
        } else {
            [bundle_mask(&x.bundles[0]), bundle_mask(&x.bundles[1]), bundle_mask(&x.bundles[2])]
        };
        Ok(View { f, totals, masks })
    }

    fn without(&self, k: usize, b: ChoreId) -> Rat {
        match self.f {
            CostFunction::Additive(c) => &self.totals[k] - &c[b.0],
            CostFunction::Tabular(_) => self.f.mask_cost(self.masks[k] & !(1 << b.0)).expect("validated mask"),
        }
    }

    fn with(&self, l: usize, b: ChoreId) -> Rat {
        match self.f {
            CostFunction::Additive(c) => &self.totals[l] + &c[b.0],
            CostFunction::Tabular(_) => self.f.mask_cost(self.masks[l] | (1 << b.0)).expect("validated mask"),
        }
    }
}

fn others(k: usize) -> impl Iterator<Item = usize> {
    (0..AGENTS).filter(move |&l| l != k)
}

/// `(a - b)` compared with `(c - d)` without leaving the nonnegatives.
fn cmp_diff(a: &Rat, b: &Rat, c: &Rat, d: &Rat) -> Ordering {
    (a + d).cmp(&(c + b))
}

/// For holder `h` imagined on bundle `k`, the witnessing chore against
/// each other bundle it fails, if any. Deterministic: the largest
/// violation wins, ties go to the lowest chore index.
fn violations(view: &View<'_>, x: &Allocation, k: usize, mode: Mode) -> Vec<(usize, ChoreId)> {
    let own: &Bundle = &x.bundles[k];
    let mut out = Vec::new();
    if own.is_empty() {
        return out;
    }
    for l in others(k) {
        let target = &view.totals[l];
        match mode {
            Mode::Efx => {
                let mut best: Option<(ChoreId, Rat)> = None;
                for &b in own {
                    let rest = view.without(k, b);
                    if best.as_ref().is_none_or(|(_, r)| rest > *r) {
                        best = Some((b, rest));
                    }
                }
                let (b, rest) = best.expect("nonempty");
                if rest > *target {
                    out.push((l, b));
                }
            }
            Mode::Tefx => {
                let mut best: Option<(ChoreId, Rat, Rat)> = None;
                for &b in own {
                    let rest = view.without(k, b);
                    let grown = view.with(l, b);
                    let better = match &best {
                        None => true,
                        Some((_, r, g)) => cmp_diff(&rest, &grown, r, g) == Ordering::Greater,
                    };
                    if better {
                        best = Some((b, rest, grown));
                    }
                }
                let (b, rest, grown) = best.expect("nonempty");
                if rest > grown {
                    out.push((l, b));
                }
            }
            Mode::Ef1 => {
                let mut best: Option<(ChoreId, Rat)> = None;
                for &b in own {
                    let rest = view.without(k, b);
                    if best.as_ref().is_none_or(|(_, r)| rest < *r) {
                        best = Some((b, rest));
                    }
                }
                let (b, rest) = best.expect("nonempty");
                if rest > *target {
                    out.push((l, b));
                }
            }
        }
    }
    out
}

fn checked<'a>(inst: &'a Instance, x: &Allocation, agent: usize) -> Result<View<'a>> {
    x.check(inst.m())?;
    if agent >= AGENTS {
        return Err(Error::InvalidAllocation(format!("agent index {agent} out of range")));
    }
    View::new(inst.agent(agent), x)
}

/// A chore `b` in agent `i`'s bundle with `c_i(X_i \ b) > c_i(X_j)`, taking
/// the `b` that leaves the costliest remainder.
pub fn strongly_envies(inst: &Instance, x: &Allocation, i: usize, j: usize) -> Result<Option<ChoreId>> {
    let view = checked(inst, x, i)?;
    if i == j || j >= AGENTS {
        return Err(Error::InvalidAllocation(format!("cannot compare agent {i} with bundle {j}")));
    }
    Ok(violations(&view, x, i, Mode::Efx)
        .into_iter()
        .find(|&(l, _)| l == j)
        .map(|(_, b)| b))
}

/// Whether `holder` would accept bundle `k` under `mode`.
pub fn is_feasible(inst: &Instance, x: &Allocation, holder: usize, k: usize, mode: Mode) -> Result<bool> {
    let view = checked(inst, x, holder)?;
    if k >= AGENTS {
        return Err(Error::InvalidAllocation(format!("bundle index {k} out of range")));
    }
    Ok(violations(&view, x, k, mode).is_empty())
}

pub fn is_efx_feasible(inst: &Instance, x: &Allocation, holder: usize, k: usize) -> Result<bool> {
    is_feasible(inst, x, holder, k, Mode::Efx)
}

pub fn is_tefx_feasible(inst: &Instance, x: &Allocation, holder: usize, k: usize) -> Result<bool> {
    is_feasible(inst, x, holder, k, Mode::Tefx)
}

/// Full 3x3 feasibility matrix plus the diagonal's witnesses.
pub fn verify(inst: &Instance, x: &Allocation, mode: Mode) -> Result<FairnessCertificate> {
    x.check(inst.m())?;
    let mut matrix = [[false; AGENTS]; AGENTS];
    let mut witnesses = Vec::new();
    for (agent, row) in matrix.iter_mut().enumerate() {
        let view = View::new(inst.agent(agent), x)?;
        for (k, cell) in row.iter_mut().enumerate() {
            let v = violations(&view, x, k, mode);
            *cell = v.is_empty();
            if k == agent {
                witnesses.extend(v.into_iter().map(|(l, chore)| Witness { envier: agent + 1, envied: l + 1, chore }));
            }
        }
    }
    let verdict = witnesses.is_empty();
    Ok(FairnessCertificate { mode, verdict, matrix, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CostFunction;
    use proptest::prelude::*;

    fn identical(costs: &[u64]) -> Instance {
        let f = CostFunction::additive(costs.iter().copied());
        Instance::new([f.clone(), f.clone(), f]).unwrap()
    }

    #[test]
    fn strong_envy_fixtures() {
        let inst = identical(&[4, 1]);
        let x = Allocation::from_indices(&[0, 1], &[], &[]);
        assert_eq!(strongly_envies(&inst, &x, 0, 1).unwrap(), Some(ChoreId(1)));
        assert_eq!(strongly_envies(&inst, &x, 1, 0).unwrap(), None);
        let inst = identical(&[2, 2]);
        let x = Allocation::from_indices(&[0], &[1], &[]);
        assert_eq!(strongly_envies(&inst, &x, 0, 1).unwrap(), None);
        assert!(strongly_envies(&inst, &x, 0, 0).is_err());
    }

    #[test]
    fn efx_feasibility_fixtures() {
        let inst = identical(&[20, 22, 24, 25, 13, 14]);
        let x = Allocation::from_indices(&[2, 3], &[1, 5], &[0, 4]);
        // 49 - 24 = 25 <= min(36, 33)
        assert!(is_efx_feasible(&inst, &x, 0, 0).unwrap());
        let inst = identical(&[4, 1]);
        let x = Allocation::from_indices(&[0, 1], &[], &[]);
        assert!(!is_efx_feasible(&inst, &x, 0, 0).unwrap());
        assert!(is_efx_feasible(&inst, &x, 0, 1).unwrap());
    }

    #[test]
    fn two_equal_chores_are_tefx_but_not_efx() {
        let inst = identical(&[2, 2]);
        let x = Allocation::from_indices(&[0, 1], &[], &[]);
        assert!(is_tefx_feasible(&inst, &x, 0, 0).unwrap());
        assert!(!is_efx_feasible(&inst, &x, 0, 0).unwrap());
    }

    #[test]
    fn singletons_are_tefx_feasible() {
        let inst = identical(&[10, 1, 1]);
        let x = Allocation::from_indices(&[0], &[1], &[2]);
        for agent in 0..3 {
            for k in 0..3 {
                assert!(is_tefx_feasible(&inst, &x, agent, k).unwrap());
                assert!(is_efx_feasible(&inst, &x, agent, k).unwrap());
            }
        }
    }

    #[test]
    fn verify_fixtures() {
        let inst = identical(&[1, 2]);
        let ok = Allocation::from_indices(&[0], &[1], &[]);
        assert!(verify(&inst, &ok, Mode::Efx).unwrap().verdict);

        let bad = Allocation::from_indices(&[0, 1], &[], &[]);
        let cert = verify(&inst, &bad, Mode::Efx).unwrap();
        assert!(!cert.verdict);
        // Removing chore 0 leaves 2, the costliest remainder.
        assert_eq!(cert.witnesses[0], Witness { envier: 1, envied: 2, chore: ChoreId(0) });
        assert_eq!(cert.witnesses.len(), 2);
        // Either removal leaves a positive cost against an empty bundle.
        assert!(!verify(&inst, &bad, Mode::Ef1).unwrap().verdict);
        // 2 <= 0 + 1 fails for the transfer of chore 0 as well.
        assert!(!verify(&inst, &bad, Mode::Tefx).unwrap().verdict);

        let empty = identical(&[]);
        for mode in [Mode::Efx, Mode::Tefx, Mode::Ef1] {
            let cert = verify(&empty, &Allocation::default(), mode).unwrap();
            assert!(cert.verdict);
            assert_eq!(cert.matrix, [[true; 3]; 3]);
        }
    }

    #[test]
    fn malformed_allocation_rejected() {
        let inst = identical(&[1, 2]);
        let x = Allocation::from_indices(&[0], &[], &[]);
        assert!(matches!(verify(&inst, &x, Mode::Efx), Err(Error::InvalidAllocation(_))));
    }

    #[test]
    fn tabular_agent_uses_table_values() {
        // Agent 3 hates chores 0 and 1 together far more than apart.
        let table: Vec<Option<Rat>> = [0u64, 1, 1, 10].iter().map(|&v| Some(Rat::from_integer(v))).collect();
        let f = CostFunction::additive([1, 1]);
        let inst = Instance::new([f.clone(), f, CostFunction::Tabular(table)]).unwrap();
        let x = Allocation::from_indices(&[], &[], &[0, 1]);
        assert!(!is_efx_feasible(&inst, &x, 2, 2).unwrap());
        // Moving either chore to an empty bundle costs exactly what is left.
        assert!(is_tefx_feasible(&inst, &x, 2, 2).unwrap());
    }

    /// Removal costs recomputed from scratch for every chore and bundle.
    fn naive_feasible(inst: &Instance, x: &Allocation, h: usize, k: usize, mode: Mode) -> bool {
        let f = inst.agent(h);
        let c = |s: &Bundle| f.cost(s).unwrap();
        others(k).all(|l| {
            let fits = |b: &ChoreId| {
                let mut rest = x.bundles[k].clone();
                rest.remove(b);
                match mode {
                    Mode::Efx | Mode::Ef1 => c(&rest) <= c(&x.bundles[l]),
                    Mode::Tefx => {
                        let mut grown = x.bundles[l].clone();
                        grown.insert(*b);
                        c(&rest) <= c(&grown)
                    }
                }
            };
            match mode {
                Mode::Ef1 => x.bundles[k].is_empty() || x.bundles[k].iter().any(fits),
                _ => x.bundles[k].iter().all(fits),
            }
        })
    }

    fn arb_case() -> impl Strategy<Value = (Instance, Allocation)> {
        (1usize..7).prop_flat_map(|m| {
            (
                prop::collection::vec(prop::collection::vec(0u64..6, m), 3),
                prop::collection::vec(0usize..3, m),
            )
                .prop_map(|(costs, owners)| {
                    let fs = costs.into_iter().map(CostFunction::additive).collect::<Vec<_>>();
                    let inst = Instance::new([fs[0].clone(), fs[1].clone(), fs[2].clone()]).unwrap();
                    (inst, Allocation::from_owners(&owners).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn matches_naive_definitions((inst, x) in arb_case()) {
            for mode in [Mode::Efx, Mode::Tefx, Mode::Ef1] {
                let cert = verify(&inst, &x, mode).unwrap();
                for h in 0..3 {
                    for k in 0..3 {
                        prop_assert_eq!(cert.matrix[h][k], naive_feasible(&inst, &x, h, k, mode));
                    }
                }
                prop_assert_eq!(cert.verdict, (0..3).all(|a| cert.matrix[a][a]));
                prop_assert_eq!(cert.verdict, cert.witnesses.is_empty());
            }
        }

        #[test]
        fn efx_implies_tefx((inst, x) in arb_case()) {
            let efx = verify(&inst, &x, Mode::Efx).unwrap();
            let tefx = verify(&inst, &x, Mode::Tefx).unwrap();
            if efx.verdict {
                prop_assert!(tefx.verdict);
            }
            for h in 0..3 {
                for k in 0..3 {
                    prop_assert!(!efx.matrix[h][k] || tefx.matrix[h][k]);
                }
            }
        }

        #[test]
        fn no_strong_envy_iff_own_bundle_feasible((inst, x) in arb_case()) {
            for i in 0..3 {
                let none = others(i).all(|j| strongly_envies(&inst, &x, i, j).unwrap().is_none());
                prop_assert_eq!(none, is_efx_feasible(&inst, &x, i, i).unwrap());
            }
        }
    }
}
