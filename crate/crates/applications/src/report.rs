//! Shared report plumbing: hypothesis checklists and JSON emission.

use crate::Result;
use serde::Serialize;

/// One verified precondition: name, outcome, and the measured value or
/// reason behind it.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl HypothesisCheck {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        HypothesisCheck { name: name.to_owned(), pass, detail }
    }
}

/// Pretty JSON with a trailing newline; key order follows the struct
/// definitions, so identical runs serialize identically.
///
/// # Errors
/// Serialization failures propagate.
pub fn report_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}
