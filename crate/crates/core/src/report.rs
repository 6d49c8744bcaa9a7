//! Machine-readable verifier output: one JSON line per bound check.

use serde::{Deserialize, Serialize};

/// Result of one empirical bound verification: the measured quantity,
/// the explicit bound it is compared against, and the witness achieving
/// the maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub p: u64,
    pub phi1: Vec<u64>,
    pub phi2: Vec<u64>,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub witness: Vec<i64>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

impl BoundReport {
    pub fn new(
        name: impl Into<String>,
        p: u64,
        phi1: &[u64],
        phi2: &[u64],
        measured: f64,
        bound: f64,
        witness: Vec<i64>,
    ) -> Self {
        let ratio = if bound != 0.0 { measured / bound } else { f64::INFINITY };
        BoundReport {
            name: name.into(),
            p,
            phi1: phi1.to_vec(),
            phi2: phi2.to_vec(),
            measured,
            bound,
            ratio,
            witness,
            params: serde_json::Value::Null,
        }
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    /// Whether the measured quantity respects the bound, up to float slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.measured <= self.bound + slack
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization")
    }
}

/// Evidence that the set of exceeding pairs looks like a generalized
/// diagonal: every listed pair exceeds the threshold, and the per-row /
/// per-column multiplicities stay O(1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralizedDiagonalCertificate {
    pub exceed_set: Vec<(u64, u64)>,
    pub row_max: u64,
    pub col_max: u64,
    pub threshold: f64,
}

impl GeneralizedDiagonalCertificate {
    pub fn from_pairs(pairs: Vec<(u64, u64)>, threshold: f64) -> Self {
        let mut rows = std::collections::HashMap::new();
        let mut cols = std::collections::HashMap::new();
        for &(a, b) in &pairs {
            *rows.entry(a).or_insert(0u64) += 1;
            *cols.entry(b).or_insert(0u64) += 1;
        }
        GeneralizedDiagonalCertificate {
            row_max: rows.values().copied().max().unwrap_or(0),
            col_max: cols.values().copied().max().unwrap_or(0),
            exceed_set: pairs,
            threshold,
        }
    }
}
