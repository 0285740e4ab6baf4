//! Tie removal by perturbation.
//!
//! Chore `b_j` (1-based `j`, so `ChoreId(i)` has `j = i + 1`) carries the
//! weight `2^j`. The explicit mode adds `epsilon * 2^j` to every chore's
//! cost; for `epsilon * 2^(m+1) < delta` this keeps every strict
//! inequality between subset costs and makes all subset costs distinct.
//! The symbolic mode is the `epsilon -> 0` limit of the same construction:
//! a [`PerturbedCost`] compares the exact cost first and the weight sum
//! second. Solvers run on the symbolic order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Bundle, ChoreId, CostFunction, Instance, TABULAR_MAX_M};
use crate::rat::Rat;

/// `(cost, sum of 2^j over members)` under lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct PerturbedCost {
    pub base: Rat,
    #[serde(with = "biguint_string")]
    pub weight: BigUint,
}

impl PartialOrd for PerturbedCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PerturbedCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.base.cmp(&other.base).then_with(|| self.weight.cmp(&other.weight))
    }
}

impl fmt::Display for PerturbedCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (+{}e)", self.base, self.weight)
    }
}

impl PerturbedCost {
    pub fn new(base: Rat, weight: BigUint) -> Self {
        PerturbedCost { base, weight }
    }

    pub fn zero() -> Self {
        PerturbedCost::default()
    }

    pub fn double(&self) -> Self {
        PerturbedCost { base: self.base.double(), weight: &self.weight << 1 }
    }

    /// Value of `base + epsilon * weight` for a concrete epsilon.
    pub fn at(&self, epsilon: &Rat) -> Rat {
        &self.base + &epsilon.mul_biguint(&self.weight)
    }
}

impl<'a> Add<&'a PerturbedCost> for &'a PerturbedCost {
    type Output = PerturbedCost;
    fn add(self, rhs: &'a PerturbedCost) -> PerturbedCost {
        PerturbedCost { base: &self.base + &rhs.base, weight: &self.weight + &rhs.weight }
    }
}

/// Panics when `rhs` is not dominated in both coordinates, which only
/// happens if a caller removes a chore the bundle does not hold.
impl<'a> Sub<&'a PerturbedCost> for &'a PerturbedCost {
    type Output = PerturbedCost;
    fn sub(self, rhs: &'a PerturbedCost) -> PerturbedCost {
        PerturbedCost { base: &self.base - &rhs.base, weight: &self.weight - &rhs.weight }
    }
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `2^j` for chore `b_j`, with `j = index + 1`.
pub fn chore_weight(b: ChoreId) -> BigUint {
    BigUint::one() << (b.0 + 1)
}

pub fn bundle_weight(bundle: &Bundle) -> BigUint {
    let mut w = BigUint::zero();
    for b in bundle {
        w.set_bit(b.0 as u64 + 1, true);
    }
    w
}

/// Symbolically perturbed cost of a bundle.
pub fn lex_cost(f: &CostFunction, bundle: &Bundle) -> Result<PerturbedCost> {
    Ok(PerturbedCost { base: f.cost(bundle)?, weight: bundle_weight(bundle) })
}

/// Symbolically perturbed cost of one chore.
pub fn lex_chore(f: &CostFunction, b: ChoreId) -> Result<PerturbedCost> {
    Ok(PerturbedCost { base: f.chore_cost(b)?, weight: chore_weight(b) })
}

fn check_scale(inst: &Instance) -> Result<()> {
    if inst.m() > TABULAR_MAX_M {
        return Err(Error::ScaleLimit { what: "exhaustive subset scan", m: inst.m(), limit: TABULAR_MAX_M });
    }
    Ok(())
}

/// Smallest nonzero gap between two subset costs of the same agent, or
/// `None` when no agent distinguishes any two subsets.
pub fn delta(inst: &Instance) -> Result<Option<Rat>> {
    check_scale(inst)?;
    let mut best: Option<Rat> = None;
    for f in inst.agents() {
        let mut values = f.subset_table()?;
        values.sort();
        values.dedup();
        for w in values.windows(2) {
            let gap = &w[1] - &w[0];
            if best.as_ref().is_none_or(|b| gap < *b) {
                best = Some(gap);
            }
        }
    }
    Ok(best)
}

/// `delta / 2^(m+2)`. When `delta` is undefined every epsilon is valid and
/// `1 / 2^(m+2)` is returned.
pub fn auto_epsilon(inst: &Instance) -> Result<Rat> {
    let delta = delta(inst)?.unwrap_or_else(Rat::one);
    Ok(delta.checked_div(&Rat::pow2(inst.m() as u32 + 2)).expect("nonzero power of two"))
}

/// The instance with every subset cost raised by `epsilon * sum 2^j`.
pub fn perturb_explicit(inst: &Instance, epsilon: &Rat) -> Result<Instance> {
    check_scale(inst)?;
    if epsilon.is_zero() {
        return Err(Error::EpsilonTooLarge { epsilon: epsilon.to_string(), delta: "epsilon must be positive".into() });
    }
    let m = inst.m();
    if let Some(delta) = delta(inst)? {
        if epsilon.mul_biguint(&(BigUint::one() << (m + 1))) >= delta {
            return Err(Error::EpsilonTooLarge { epsilon: epsilon.to_string(), delta: delta.to_string() });
        }
    }
    let agents = inst.agents().clone().map(|f| match f {
        CostFunction::Additive(costs) => CostFunction::Additive(
            costs
                .iter()
                .enumerate()
                .map(|(i, c)| c + &epsilon.mul_biguint(&chore_weight(ChoreId(i))))
                .collect(),
        ),
        CostFunction::Tabular(table) => CostFunction::Tabular(
            table
                .iter()
                .enumerate()
                .map(|(mask, c)| {
                    c.as_ref().map(|c| c + &epsilon.mul_biguint(&(BigUint::from(mask as u64) << 1)))
                })
                .collect(),
        ),
    });
    let mut out = Instance::new(agents)?;
    out.label = inst.label.clone();
    Ok(out)
}
