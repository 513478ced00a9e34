//! Check reports and their JSON form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One line of a suite run. `pass` holds exactly when `max_abs_error ≤ tolerance`;
/// a check that aborted reports an infinite error, written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub target: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(deserialize_with = "nullable_error")]
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

fn nullable_error<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl CheckReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<34} {:<24} max_abs_error={:.3e} tol={:.1e} seed={} n={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check_name,
            self.target,
            self.max_abs_error,
            self.tolerance,
            self.seed,
            self.n_samples
        )
    }
}

pub fn to_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}

/// JSON schema of the report array.
pub const REPORT_SCHEMA: &str = include_str!("../schema/check_report.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aborted_checks_serialize_as_null() {
        let r = CheckReport {
            check_name: "lift/error".into(),
            target: "segre:1:1".into(),
            parameters: BTreeMap::new(),
            n_samples: 1,
            seed: 0,
            max_abs_error: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
            runtime_ms: 0,
        };
        let json = to_json(&[r.clone()]);
        assert!(json.contains("\"max_abs_error\": null"));
        let back: Vec<CheckReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![r]);
    }
}
