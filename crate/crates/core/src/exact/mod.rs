//! Exact (rational) moments and laws by exhaustive enumeration, and the checks built on them.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

pub mod enumerate;
pub mod joint;
pub mod law;
pub mod rational;
pub mod single;
pub mod verify;

pub use enumerate::{fold_configurations, Configuration, ENUMERATION_BUDGET};
pub use joint::{exact_joint_moments, joint_moments, JointMoments};
pub use law::{convolved_law, enumerated_law, exact_law, exact_law_feasible, ExactLaw};
pub use rational::Rational;
pub use single::{single_trial_moments, SingleTrialLaw};
pub use verify::{verify_index_decomposition, verify_inequalities, verify_lemma_formulas, verify_remark13};

pub(crate) fn serialize_rational<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

/// Labelled exact expectations for one `r` (and `n`, for joint moments).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMomentTable {
    pub r: usize,
    pub n: Option<usize>,
    pub entries: BTreeMap<String, Rational>,
}

impl ExactMomentTable {
    pub fn get(&self, key: &str) -> Option<&Rational> {
        self.entries.get(key)
    }
}

impl Serialize for ExactMomentTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let entries: BTreeMap<&str, String> = self.entries.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect();
        let mut st = s.serialize_struct("ExactMomentTable", 3)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}
