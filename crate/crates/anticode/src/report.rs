//! Machine-readable check results: one JSON object per line, with a
//! stable field order so equal runs produce identical bytes.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The checked property holds (or the requested object was produced).
    Pass,
    /// The check ran to completion and the property failed.
    Finding,
    /// A search or budget limit prevented a definite answer.
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub params: Value,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Value::is_null", default)]
    pub witness: Value,
    #[serde(skip_serializing_if = "Value::is_null", default)]
    pub ledger: Value,
}

impl Report {
    pub fn new(kind: impl Into<String>, params: Value, verdict: Verdict) -> Report {
        Report { kind: kind.into(), params, verdict, witness: Value::Null, ledger: Value::Null }
    }

    pub fn with_witness(mut self, witness: Value) -> Report {
        self.witness = witness;
        self
    }

    pub fn with_ledger(mut self, ledger: Value) -> Report {
        self.ledger = ledger;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization is infallible")
    }
}

/// Exit code the CLI maps each verdict to.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.contains(&Verdict::Unknown) {
        3
    } else if verdicts.contains(&Verdict::Finding) {
        2
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn serializes_in_declaration_order() {
        let r = Report::new("ball", json!({"m": 3, "n": 3, "t": 1, "r": 1}), Verdict::Pass)
            .with_witness(json!({"size": 7}));
        let line = r.to_json_line();
        assert!(line.starts_with("{\"kind\":\"ball\""));
        assert!(line.contains("\"verdict\":\"pass\""));
        let back: Report = serde_json::from_str(&line).unwrap();
        assert_eq!(back.verdict, Verdict::Pass);
    }

    #[test]
    fn exit_codes() {
        use Verdict::*;
        assert_eq!(exit_code(&[Pass, Pass]), 0);
        assert_eq!(exit_code(&[Pass, Finding]), 2);
        assert_eq!(exit_code(&[Finding, Unknown]), 3);
        assert_eq!(exit_code(&[]), 0);
    }
}
