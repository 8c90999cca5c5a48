use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "flag")]
    Flag,
}

/// One pass/fail check: `value relation tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub instantiates: String,
    pub stage: String,
    pub passed: bool,
    #[serde(with = "crate::report::json::real")]
    pub value: f64,
    pub relation: Relation,
    #[serde(with = "crate::report::json::real")]
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Certificate {
    pub fn at_most(stage: &str, name: &str, instantiates: &str, value: f64, tolerance: f64) -> Certificate {
        Certificate {
            name: name.into(),
            instantiates: instantiates.into(),
            stage: stage.into(),
            passed: value <= tolerance,
            value,
            relation: Relation::AtMost,
            tolerance,
            detail: None,
        }
    }

    pub fn at_least(stage: &str, name: &str, instantiates: &str, value: f64, tolerance: f64) -> Certificate {
        Certificate {
            name: name.into(),
            instantiates: instantiates.into(),
            stage: stage.into(),
            passed: value >= tolerance,
            value,
            relation: Relation::AtLeast,
            tolerance,
            detail: None,
        }
    }

    pub fn flag(stage: &str, name: &str, instantiates: &str, passed: bool) -> Certificate {
        Certificate {
            name: name.into(),
            instantiates: instantiates.into(),
            stage: stage.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            relation: Relation::Flag,
            tolerance: 1.0,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Certificate {
        self.detail = Some(detail.into());
        self
    }
}

pub fn all_passed(certs: &[Certificate]) -> bool {
    certs.iter().all(|c| c.passed)
}
