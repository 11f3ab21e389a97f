//! Dörfler marking with the Dirichlet-oscillation switch.
//!
//! If `osc_D² ≤ ϑ ϱ²`, a minimal set of elements with `θ₁ ϱ² ≤ Σ ϱ(T)²` is
//! marked. Otherwise a minimal set of Dirichlet facets with
//! `θ₂ osc_D² ≤ Σ osc_D(E)²` is selected and their owner elements are marked.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::EstimatorBreakdown;
use crate::mesh::MarkedSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkingParams {
    pub theta1: f64,
    pub theta2: f64,
    pub vartheta: f64,
}

impl MarkingParams {
    pub fn new(theta1: f64, theta2: f64, vartheta: f64) -> Result<Self> {
        for (name, v) in [
            ("theta1", theta1),
            ("theta2", theta2),
            ("vartheta", vartheta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Input(format!(
                    "{name} = {v} must lie strictly inside (0, 1)"
                )));
            }
        }
        Ok(Self {
            theta1,
            theta2,
            vartheta,
        })
    }

    /// θ₁ = θ₂ = ϑ = θ.
    pub fn uniform(theta: f64) -> Result<Self> {
        Self::new(theta, theta, theta)
    }
}

impl Default for MarkingParams {
    fn default() -> Self {
        Self {
            theta1: 0.25,
            theta2: 0.25,
            vartheta: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingBranch {
    Element,
    Dirichlet,
}

impl MarkingBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkingBranch::Element => "element",
            MarkingBranch::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkingOutcome {
    pub branch: MarkingBranch,
    pub marked_elements: MarkedSet,
    /// Indices into the breakdown's Dirichlet facet list; empty for the element branch.
    pub marked_dirichlet_facets: Vec<usize>,
}

/// Marking rule selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkingStrategy {
    /// Two-branch rule switching on the Dirichlet oscillations.
    #[default]
    DoerflerModified,
    /// Plain Dörfler marking with θ₁ on the element-localized η(T)².
    DoerflerSimple,
}

impl MarkingStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkingStrategy::DoerflerModified => "doerfler-modified",
            MarkingStrategy::DoerflerSimple => "doerfler-simple",
        }
    }

    pub fn apply(
        self,
        breakdown: &EstimatorBreakdown,
        params: &MarkingParams,
    ) -> Result<MarkingOutcome> {
        match self {
            MarkingStrategy::DoerflerModified => mark(breakdown, params),
            MarkingStrategy::DoerflerSimple => mark_simple(breakdown, params.theta1),
        }
    }
}

impl fmt::Display for MarkingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MarkingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doerfler-modified" => Ok(MarkingStrategy::DoerflerModified),
            "doerfler-simple" => Ok(MarkingStrategy::DoerflerSimple),
            other => Err(Error::Input(format!(
                "unknown marking `{other}` (expected `doerfler-modified` or `doerfler-simple`)"
            ))),
        }
    }
}

/// Minimum-cardinality index set with `θ Σ v ≤ Σ_{i∈M} v_i`, chosen greedily by
/// descending value (ties by ascending index). Returned in selection order.
pub fn doerfler_minimal(values: &[f64], theta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let total: f64 = order.iter().map(|&i| values[i]).sum();
    let goal = theta * total;
    let mut sum = 0.0;
    let mut taken = 0;
    for &i in &order {
        if sum >= goal {
            break;
        }
        sum += values[i];
        taken += 1;
    }
    order.truncate(taken);
    debug_assert!(goal <= sum || taken == values.len());
    assert!(
        taken == 0 || sum - values[order[taken - 1]] < goal,
        "greedy set is minimal"
    );
    order
}

/// Two-branch marking on ϱ(T)² and osc_D(E)².
pub fn mark(breakdown: &EstimatorBreakdown, params: &MarkingParams) -> Result<MarkingOutcome> {
    let rho = breakdown.rho_total();
    let osc = breakdown.osc_d_total();
    if breakdown.rho_sq.is_empty() {
        return Err(Error::Input("cannot mark an empty estimator".into()));
    }
    if !(rho > 0.0 || osc > 0.0) {
        return Err(Error::Input("estimator vanishes; nothing to mark".into()));
    }
    if osc <= params.vartheta * rho {
        let ids = doerfler_minimal(&breakdown.rho_sq, params.theta1);
        Ok(MarkingOutcome {
            branch: MarkingBranch::Element,
            marked_elements: ids.into_iter().collect(),
            marked_dirichlet_facets: Vec::new(),
        })
    } else {
        let mut facets = doerfler_minimal(&breakdown.osc_d_sq, params.theta2);
        let marked_elements = facets
            .iter()
            .map(|&k| breakdown.dirichlet_owners[k])
            .collect();
        facets.sort_unstable();
        Ok(MarkingOutcome {
            branch: MarkingBranch::Dirichlet,
            marked_elements,
            marked_dirichlet_facets: facets,
        })
    }
}

/// Plain Dörfler marking on η(T)² = ϱ(T)² + Σ_{E ⊆ ∂T ∩ Γ_D} osc_D(E)².
pub fn mark_simple(breakdown: &EstimatorBreakdown, theta: f64) -> Result<MarkingOutcome> {
    let localized = breakdown.localized_eta_sq();
    if localized.is_empty() || !(localized.iter().sum::<f64>() > 0.0) {
        return Err(Error::Input("estimator vanishes; nothing to mark".into()));
    }
    let ids: BTreeSet<usize> = doerfler_minimal(&localized, theta).into_iter().collect();
    Ok(MarkingOutcome {
        branch: MarkingBranch::Element,
        marked_elements: ids.into_iter().collect(),
        marked_dirichlet_facets: Vec::new(),
    })
}
