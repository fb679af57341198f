use ahlab_core::diagnostic::{Diagnostic, Level};
use serde::Serialize;
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The JSON document every subcommand prints.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<Value>,
    pub version: String,
    pub seed: u64,
    pub results: Value,
    pub diagnostics: Vec<Diagnostic>,
    /// Names of failed assertions; the exit code is 0 iff this is empty.
    pub failures: Vec<String>,
    pub wall_time: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Indented rendering of the same document followed by a digest of the
    /// diagnostics and failures.
    pub fn to_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        for d in &self.diagnostics {
            let tag = match d.level {
                Level::Info => "INFO",
                Level::Warn => "WARN",
            };
            out.push_str(&format!("{tag:5} {}\n", d.message));
        }
        for f in &self.failures {
            out.push_str(&format!("FAIL  {f}\n"));
        }
        out
    }
}
