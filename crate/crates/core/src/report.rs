//! Pass/fail records shared by every verifier.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Informational: a recorded observation that is not a check.
    Note,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub identity: String,
    pub r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub status: Status,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for CheckEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Note => "NOTE",
        };
        write!(f, "{status} {} r={}", self.identity, self.r)?;
        if let Some(n) = self.n {
            write!(f, " n={n}")?;
        }
        write!(f, ": {} vs {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        identity: impl Into<String>,
        r: usize,
        n: Option<usize>,
        ok: bool,
        lhs: impl fmt::Display,
        rhs: impl fmt::Display,
    ) {
        self.entries.push(CheckEntry {
            identity: identity.into(),
            r,
            n,
            status: if ok { Status::Pass } else { Status::Fail },
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        });
    }

    pub fn note(&mut self, identity: impl Into<String>, r: usize, n: Option<usize>, lhs: impl fmt::Display, rhs: impl fmt::Display) {
        self.entries.push(CheckEntry {
            identity: identity.into(),
            r,
            n,
            status: Status::Note,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    /// True when no entry failed. Notes do not count as failures.
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }
}
