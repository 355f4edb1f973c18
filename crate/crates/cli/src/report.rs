use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use spsys::Verdict;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check_id: String,
    /// Inclusive range of levels the residual is valid on.
    pub window: Option<[usize; 2]>,
    pub residual: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl Check {
    /// Verdict from `residual <= threshold`.
    pub fn threshold(id: impl Into<String>, window: Option<[usize; 2]>, residual: f64, threshold: f64) -> Self {
        let verdict = if residual <= threshold { Verdict::Pass } else { Verdict::Fail };
        Check { check_id: id.into(), window, residual, threshold, verdict }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub input_digest: String,
    pub checks: Vec<Check>,
    pub result: Value,
}

/// SHA-256 over the input files, each prefixed by its byte length.
#[derive(Default)]
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn add(&mut self, bytes: &[u8]) {
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl Report {
    pub fn new(command: &str, inputs: Inputs, checks: Vec<Check>, result: Value) -> Self {
        Report {
            tool: "spsys",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input_digest: inputs.digest(),
            checks,
            result,
        }
    }

    /// 0 all pass, 1 any fail, 2 only inconclusive left.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            1
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
            2
        } else {
            0
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let window = c.window.map_or(String::new(), |[lo, hi]| format!(" levels {lo}..={hi}"));
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Inconclusive => "inconclusive",
            };
            out.push_str(&format!(
                "{verdict:<12} {}{window}: residual {:.3e} (threshold {:.1e})\n",
                c.check_id, c.residual, c.threshold
            ));
        }
        let failed = self.checks.iter().filter(|c| c.verdict == Verdict::Fail).count();
        out.push_str(&format!("{}: {} checks, {failed} failed", self.command, self.checks.len()));
        out
    }
}
