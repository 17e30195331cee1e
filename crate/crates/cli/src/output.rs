//! Artifact and summary emission. Floats in CSV artifacts are printed
//! with 17 significant digits so reruns are byte-identical; JSON floats
//! use the shortest round-trip form.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use crate::CliError;

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the artifact to the path or standard output.
pub fn write_artifact(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

/// Per-run summary, printed to stderr as one JSON line. Wall time lives
/// here, never in the artifact, so artifacts stay reproducible.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub wall_time: f64,
    pub key_metrics: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            schema_version: 1,
            command: command.to_string(),
            seed,
            wall_time: 0.0,
            key_metrics: BTreeMap::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.key_metrics.insert(key.to_string(), value);
        self
    }

    pub fn emit(&self) -> Result<(), CliError> {
        let line = serde_json::to_string(self)
            .map_err(|e| entrodyn::Error::Validation(format!("summary serialization: {e}")))?;
        eprintln!("{line}");
        Ok(())
    }
}

/// Row-major [re, im] pairs of a complex matrix, the JSON wire form.
pub fn matrix_pairs(m: &entrodyn::CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_stable_and_lossless() {
        for &x in &[0.5, 2.0_f64.ln(), 1.0 / 3.0, 6.02e23, -1.6e-19] {
            let s = fmt_f64(x);
            assert_eq!(s, fmt_f64(x));
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn summary_round_trips() {
        let mut s = RunSummary::new("measure", 7);
        s.wall_time = 0.012345;
        s.metric("s2", 2.0_f64.ln()).metric("p_up", 0.5);
        let text = serde_json::to_string(&s).unwrap();
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
