//! The per-problem, per-iteration correctness matrix.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogError {
    #[error("a correctness log needs at least one problem")]
    NoProblems,
    #[error("log is not rectangular: problem '{problem}' has {got} iteration(s), expected {expected}")]
    Ragged { problem: String, expected: usize, got: usize },
    #[error("duplicate problem id '{0}'")]
    DuplicateId(String),
    #[error("confidence {value} for problem '{problem}' at iteration {iteration} is outside [1, 10]")]
    ConfidenceRange { problem: String, iteration: usize, value: f64 },
    #[error("iteration {iteration} out of range (log has iterations 0..={max})")]
    IterationOutOfRange { iteration: usize, max: usize },
    #[error("logs are not aligned: {0}")]
    Misaligned(String),
}

/// N problems by (K+1) iterations of correctness flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectnessLog {
    problem_ids: Vec<String>,
    correct: Vec<Vec<bool>>,
    confidence: Vec<Vec<Option<f64>>>,
    /// Free-form labels (model, dataset, prompt variant, run, ...).
    pub metadata: BTreeMap<String, String>,
}

impl CorrectnessLog {
    /// `rows[i][k]` is the correctness of problem `i` at iteration `k`.
    pub fn new(problem_ids: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self, LogError> {
        let confidence = rows.iter().map(|r| vec![None; r.len()]).collect();
        Self::with_confidence(problem_ids, rows, confidence)
    }

    pub fn with_confidence(
        problem_ids: Vec<String>,
        rows: Vec<Vec<bool>>,
        confidence: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, LogError> {
        if problem_ids.is_empty() || rows.is_empty() {
            return Err(LogError::NoProblems);
        }
        if problem_ids.len() != rows.len() || confidence.len() != rows.len() {
            return Err(LogError::Misaligned(format!(
                "{} ids, {} correctness rows, {} confidence rows",
                problem_ids.len(),
                rows.len(),
                confidence.len()
            )));
        }
        let width = rows[0].len();
        let mut seen = HashSet::with_capacity(problem_ids.len());
        for ((id, row), conf) in problem_ids.iter().zip(&rows).zip(&confidence) {
            if !seen.insert(id.as_str()) {
                return Err(LogError::DuplicateId(id.clone()));
            }
            if row.len() != width || row.is_empty() {
                return Err(LogError::Ragged { problem: id.clone(), expected: width.max(1), got: row.len() });
            }
            if conf.len() != width {
                return Err(LogError::Ragged { problem: id.clone(), expected: width, got: conf.len() });
            }
            for (k, c) in conf.iter().enumerate() {
                if let Some(v) = *c {
                    if !(1.0..=10.0).contains(&v) {
                        return Err(LogError::ConfidenceRange { problem: id.clone(), iteration: k, value: v });
                    }
                }
            }
        }
        Ok(Self { problem_ids, correct: rows, confidence, metadata: BTreeMap::new() })
    }

    /// Ids `p0000`, `p0001`, ... for generated logs.
    pub fn numbered_ids(n: usize) -> Vec<String> {
        let width = n.saturating_sub(1).to_string().len().max(4);
        (0..n).map(|i| format!("p{i:0width$}")).collect()
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn n_problems(&self) -> usize {
        self.problem_ids.len()
    }

    /// K, the number of refinement iterations after the initial answer.
    pub fn n_iterations(&self) -> usize {
        self.correct[0].len() - 1
    }

    pub fn problem_ids(&self) -> &[String] {
        &self.problem_ids
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.correct
    }

    pub fn confidence_rows(&self) -> &[Vec<Option<f64>>] {
        &self.confidence
    }

    pub fn has_confidence(&self) -> bool {
        self.confidence.iter().flatten().any(Option::is_some)
    }

    pub fn is_correct(&self, problem: usize, iteration: usize) -> bool {
        self.correct[problem][iteration]
    }

    pub fn column(&self, iteration: usize) -> Result<Vec<bool>, LogError> {
        self.check_iteration(iteration)?;
        Ok(self.correct.iter().map(|r| r[iteration]).collect())
    }

    pub fn correct_count(&self, iteration: usize) -> Result<usize, LogError> {
        self.check_iteration(iteration)?;
        Ok(self.correct.iter().filter(|r| r[iteration]).count())
    }

    pub fn accuracy(&self, iteration: usize) -> Result<f64, LogError> {
        Ok(self.correct_count(iteration)? as f64 / self.n_problems() as f64)
    }

    /// Accuracy at every iteration 0..=K.
    pub fn accuracies(&self) -> Vec<f64> {
        (0..=self.n_iterations()).map(|k| self.accuracy(k).expect("in range")).collect()
    }

    /// Run label, if the log came from a multi-run file.
    pub fn run_label(&self) -> Option<&str> {
        self.metadata.get("run").map(String::as_str)
    }

    pub(crate) fn check_iteration(&self, iteration: usize) -> Result<(), LogError> {
        if iteration > self.n_iterations() {
            Err(LogError::IterationOutOfRange { iteration, max: self.n_iterations() })
        } else {
            Ok(())
        }
    }

    /// Fails unless both logs list the same problems in the same order.
    pub fn ensure_aligned(&self, other: &CorrectnessLog) -> Result<(), LogError> {
        if self.problem_ids != other.problem_ids {
            let detail = match self
                .problem_ids
                .iter()
                .zip(&other.problem_ids)
                .position(|(a, b)| a != b)
            {
                Some(i) => format!("problem {i} is '{}' vs '{}'", self.problem_ids[i], other.problem_ids[i]),
                None => format!("{} vs {} problems", self.n_problems(), other.n_problems()),
            };
            return Err(LogError::Misaligned(detail));
        }
        Ok(())
    }
}
