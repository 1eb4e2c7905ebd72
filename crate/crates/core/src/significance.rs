//! Event statistics and the normalized causal effect (NCE).

use std::collections::BTreeSet;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::sv::{CsvId, Model, SvState};

/// Counters for one (CSV, target) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NceStats {
    pub n_observed: u64,
    pub n_incidence: u64,
    pub n_ss: u64,
    pub n_concurrence: u64,
}

impl NceStats {
    /// Records one step. Steps where the target is unobserved are ignored.
    pub fn record(&mut self, ss: bool, target: SvState) {
        if !target.is_observed() {
            return;
        }
        let inc = target.is_active();
        self.n_observed += 1;
        self.n_incidence += inc as u64;
        self.n_ss += ss as u64;
        self.n_concurrence += (ss && inc) as u64;
    }

    pub fn merge(&mut self, other: &NceStats) {
        self.n_observed += other.n_observed;
        self.n_incidence += other.n_incidence;
        self.n_ss += other.n_ss;
        self.n_concurrence += other.n_concurrence;
    }

    /// `(P(I|SS) - P(I)) / P(I)`, or `None` when any denominator is zero.
    pub fn nce<T: Num + Copy + FromPrimitive>(&self) -> Option<T> {
        nce(self)
    }
}

pub fn nce<T: Num + Copy + FromPrimitive>(s: &NceStats) -> Option<T> {
    if s.n_observed == 0 || s.n_ss == 0 || s.n_incidence == 0 {
        return None;
    }
    let p_i = T::from_u64(s.n_incidence)? / T::from_u64(s.n_observed)?;
    let p_iss = T::from_u64(s.n_concurrence)? / T::from_u64(s.n_ss)?;
    Some((p_iss - p_i) / p_i)
}

/// Marks CSVs blocked when any target has a defined `|NCE| < threshold`;
/// unblocks the rest. Returns the blocked set.
pub fn apply_significance_policy(model: &mut Model, threshold: f64) -> BTreeSet<CsvId> {
    let mut blocked = BTreeSet::new();
    for c in model.csvs.values_mut() {
        c.blocked = c
            .stats
            .values()
            .filter_map(|s| nce::<f64>(s))
            .any(|v| v.abs() < threshold);
        if c.blocked {
            blocked.insert(c.id);
        }
    }
    blocked
}
