//! Options and output shared by both solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{verify, FairnessCertificate, Mode};
use crate::instance::{Allocation, Instance, AGENTS};
use crate::tally::Scale;
use crate::validate::ValidationReport;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Break ties symbolically. Turning this off is only accepted on
    /// instances certified non-degenerate, where it changes nothing.
    pub perturb: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { perturb: true }
    }
}

impl SolveOptions {
    pub(crate) fn scale(&self, report: &ValidationReport) -> Result<Scale> {
        if self.perturb {
            return Ok(Scale::Symbolic);
        }
        if !report.non_degenerate() {
            return Err(Error::AssumptionViolated(
                "solving without perturbation needs an instance certified non-degenerate".into(),
            ));
        }
        Ok(Scale::Raw)
    }
}

/// Solver output: the final labeled bundles, which agent takes which, the
/// certificate for the owned allocation and the step trace.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Solution<R> {
    pub bundles: Allocation,
    /// `assignment[agent]` is the index of the bundle that agent receives.
    pub assignment: [usize; AGENTS],
    pub certificate: FairnessCertificate,
    pub trace: Vec<R>,
}

impl<R> Solution<R> {
    /// Bundles reordered so that bundle `a` is agent `a`'s.
    pub fn owned(&self) -> Allocation {
        self.bundles.assigned(&self.assignment)
    }

    pub(crate) fn certify(inst: &Instance, bundles: Allocation, assignment: [usize; AGENTS], mode: Mode, trace: Vec<R>) -> Result<Self> {
        let certificate = verify(inst, &bundles.assigned(&assignment), mode)?;
        if !certificate.verdict {
            return Err(Error::ContractViolated(format!(
                "final allocation fails {mode} verification: {:?}",
                certificate.witnesses
            )));
        }
        Ok(Solution { bundles, assignment, certificate, trace })
    }
}
