//! Machine-readable result files: solutions and reference lists as JSON
//! with complex numbers as `[re, im]` pairs, and the per-iteration
//! convergence history as CSV.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nepv_core::arnoldi::LogRecord;
use nepv_core::oracle::{ReferenceSpectrum, ScfResult};
use nepv_core::problem::{CandidateSolution, Classification};
use nepv_core::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

pub const SOLUTIONS_FILE: &str = "solutions.json";
pub const REFERENCE_FILE: &str = "reference.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

pub const CSV_HEADER: &str = "iter,track_id,lambda_re,lambda_im,abs_error_vs_final,residual_estimate";

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// One candidate in serialized form. Residuals are undefined for some
/// spurious classes; those are stored as `null` and read back as NaN.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    pub residual_nepv: Option<f64>,
    pub residual_mu: Option<f64>,
    pub classification: String,
    pub v: Vec<[f64; 2]>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl SolutionRecord {
    pub fn from_candidate(c: &CandidateSolution) -> Self {
        SolutionRecord {
            lambda: pair(c.lambda),
            mu: pair(c.mu),
            residual_nepv: finite(c.residual_nepv),
            residual_mu: finite(c.residual_mu),
            classification: c.classification.to_string(),
            v: c.v.iter().copied().map(pair).collect(),
        }
    }

    pub fn to_candidate(&self) -> Option<CandidateSolution> {
        let classification = parse_classification(&self.classification)?;
        Some(CandidateSolution {
            lambda: unpair(self.lambda),
            mu: unpair(self.mu),
            v: self.v.iter().copied().map(unpair).collect(),
            residual_nepv: self.residual_nepv.unwrap_or(f64::NAN),
            residual_mu: self.residual_mu.unwrap_or(f64::NAN),
            classification,
        })
    }
}

fn parse_classification(name: &str) -> Option<Classification> {
    let all = [
        Classification::Genuine,
        Classification::SpuriousRightRmep,
        Classification::SpuriousLeftRmep,
        Classification::SpuriousComplex,
        Classification::RejectedDefiniteness,
        Classification::Unverified,
    ];
    all.into_iter().find(|c| c.as_str() == name)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionsFile {
    pub schema_version: u32,
    pub algorithm: String,
    pub shift: [f64; 2],
    pub seed: u64,
    pub candidates: Vec<SolutionRecord>,
}

impl SolutionsFile {
    pub fn new(
        algorithm: &str,
        shift: Complex64,
        seed: u64,
        candidates: &[CandidateSolution],
    ) -> Self {
        SolutionsFile {
            schema_version: SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            shift: pair(shift),
            seed,
            candidates: candidates.iter().map(SolutionRecord::from_candidate).collect(),
        }
    }

    pub fn genuine(&self) -> Vec<CandidateSolution> {
        self.candidates
            .iter()
            .filter(|r| r.classification == Classification::Genuine.as_str())
            .filter_map(SolutionRecord::to_candidate)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub schema_version: u32,
    /// Complete dense spectrum, every entry classified. Empty when the
    /// dense oracle was skipped (problem too large).
    pub dense: Vec<SolutionRecord>,
    pub deflated: usize,
    /// Fixed-point solutions, genuine by construction.
    pub scf: Vec<SolutionRecord>,
    pub scf_attempts: usize,
    pub scf_converged: usize,
}

impl ReferenceFile {
    pub fn new(dense: Option<&ReferenceSpectrum>, scf: &ScfResult) -> Self {
        ReferenceFile {
            schema_version: SCHEMA_VERSION,
            dense: dense
                .map(|s| {
                    s.entries
                        .iter()
                        .map(|e| SolutionRecord::from_candidate(&e.candidate))
                        .collect()
                })
                .unwrap_or_default(),
            deflated: dense.map_or(0, |s| s.deflated),
            scf: scf.solutions.iter().map(SolutionRecord::from_candidate).collect(),
            scf_attempts: scf.attempts,
            scf_converged: scf.converged,
        }
    }

    /// The list `verify` matches against: the dense genuine entries when the
    /// dense oracle ran, otherwise the SCF findings.
    pub fn reference_set(&self) -> Vec<CandidateSolution> {
        let dense: Vec<CandidateSolution> = self
            .dense
            .iter()
            .filter(|r| r.classification == Classification::Genuine.as_str())
            .filter_map(SolutionRecord::to_candidate)
            .collect();
        if !dense.is_empty() {
            return dense;
        }
        self.scf.iter().filter_map(SolutionRecord::to_candidate).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerifyReport {
    pub matched: usize,
    pub missing: Vec<[f64; 2]>,
    pub extra: Vec<[f64; 2]>,
}

impl VerifyReport {
    pub fn from_cross_validation(cv: &nepv_core::oracle::CrossValidation) -> Self {
        VerifyReport {
            matched: cv.matched,
            missing: cv.missing.iter().copied().map(pair).collect(),
            extra: cv.extra.iter().copied().map(pair).collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Serializes the tracked convergence history. One row per observed Ritz
/// value; the header row is always present, even for an empty history.
pub fn convergence_csv(records: &[LogRecord]) -> String {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iteration,
            r.history_id,
            r.lambda.re,
            r.lambda.im,
            r.abs_error_vs_final,
            r.residual_estimate,
        ));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_candidate() -> CandidateSolution {
        CandidateSolution {
            lambda: Complex64::new(1.5, -0.25),
            mu: Complex64::new(0.75, 0.0),
            v: vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8)],
            residual_nepv: 3e-12,
            residual_mu: 1e-13,
            classification: Classification::Genuine,
        }
    }

    #[test]
    fn solution_record_round_trips() {
        let candidate = sample_candidate();
        let record = SolutionRecord::from_candidate(&candidate);
        let back = record.to_candidate().expect("classification parses");
        assert_eq!(back.lambda, candidate.lambda);
        assert_eq!(back.mu, candidate.mu);
        assert_eq!(back.v, candidate.v);
        assert_eq!(back.classification, candidate.classification);

        let mut broken = record;
        broken.classification = "imaginary".into();
        assert!(broken.to_candidate().is_none());
    }

    #[test]
    fn csv_has_stable_header_and_one_row_per_record() {
        assert_eq!(convergence_csv(&[]), format!("{CSV_HEADER}\n"));
        let records = vec![LogRecord {
            iteration: 3,
            history_id: 0,
            lambda: Complex64::new(2.0, 0.0),
            residual_estimate: 1e-9,
            abs_error_vs_final: f64::NAN,
        }];
        let text = convergence_csv(&records);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().expect("one data row");
        assert!(row.starts_with("3,0,"));
        assert!(row.contains("NaN"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn solutions_json_is_deterministic() {
        let file = SolutionsFile::new("filtering", Complex64::new(0.0, 0.0), 7, &[sample_candidate()]);
        let first = serde_json::to_string_pretty(&file).expect("serialize");
        let second = serde_json::to_string_pretty(&file).expect("serialize");
        assert_eq!(first, second);
        let parsed: SolutionsFile = serde_json::from_str(&first).expect("parse");
        assert_eq!(parsed.genuine().len(), 1);
    }
}
