//! A backend that replays a fixed script, for tests and offline runs.
//!
//! Scenario files are JSON:
//!
//! ```json
//! {
//!   "version": 1,
//!   "problems": [
//!     { "id": "p1", "question": "2+2?",
//!       "steps": [ { "answer": "5", "confidence": 4, "correct": false },
//!                  { "answer": "4", "confidence": 9, "correct": true } ] }
//!   ]
//! }
//! ```
//!
//! Step 0 is what `generate` returns, step `k` what the `k`-th `refine`
//! returns. `confidence` reports the score of the step last handed out.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Answer, BackendError, Labeler, Problem, RefinementBackend};
use crate::log::CorrectnessLog;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub answer: String,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProblem {
    pub id: String,
    #[serde(default)]
    pub question: String,
    pub steps: Vec<ScenarioStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub problems: Vec<ScenarioProblem>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported scenario version {0} (expected {SCENARIO_VERSION})")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCENARIO_VERSION {
            return Err(ScenarioError::Version(self.version));
        }
        if self.problems.is_empty() {
            return Err(ScenarioError::Invalid("no problems".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.problems {
            if !seen.insert(p.id.as_str()) {
                return Err(ScenarioError::Invalid(format!("duplicate problem id '{}'", p.id)));
            }
            if p.steps.is_empty() {
                return Err(ScenarioError::Invalid(format!("problem '{}' has no steps", p.id)));
            }
            if let Some(s) = p.steps.iter().find(|s| !(1.0..=10.0).contains(&s.confidence)) {
                return Err(ScenarioError::Invalid(format!(
                    "problem '{}': confidence {} outside [1, 10]",
                    p.id, s.confidence
                )));
            }
        }
        Ok(())
    }

    /// One scripted step per logged iteration. Answers are `ok` or
    /// `err-<k>`; confidence comes from the log when present, else `confidence`.
    pub fn from_log(log: &CorrectnessLog, confidence: f64) -> Result<Self, ScenarioError> {
        let problems = log
            .problem_ids()
            .iter()
            .zip(log.rows())
            .zip(log.confidence_rows())
            .map(|((id, row), conf)| ScenarioProblem {
                id: id.clone(),
                question: String::new(),
                steps: row
                    .iter()
                    .zip(conf)
                    .enumerate()
                    .map(|(k, (&c, g))| ScenarioStep {
                        answer: if c { "ok".to_string() } else { format!("err-{k}") },
                        confidence: g.unwrap_or(confidence),
                        correct: Some(c),
                    })
                    .collect(),
            })
            .collect();
        let s = Scenario { version: SCENARIO_VERSION, metadata: log.metadata.clone(), problems };
        s.validate()?;
        Ok(s)
    }

    pub fn problems(&self) -> Vec<Problem> {
        self.problems.iter().map(|p| Problem { id: p.id.clone(), question: p.question.clone() }).collect()
    }

    /// Whether every step carries a correctness label.
    pub fn fully_labelled(&self) -> bool {
        self.problems.iter().all(|p| p.steps.iter().all(|s| s.correct.is_some()))
    }
}

/// Replays a [`Scenario`]; fails once a problem's script is exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    scripts: HashMap<String, Vec<ScenarioStep>>,
    cursor: HashMap<String, usize>,
}

impl ScriptedBackend {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            scripts: scenario.problems.iter().map(|p| (p.id.clone(), p.steps.clone())).collect(),
            cursor: HashMap::new(),
        }
    }

    fn script(&self, problem: &Problem) -> Result<&[ScenarioStep], BackendError> {
        self.scripts
            .get(&problem.id)
            .map(Vec::as_slice)
            .ok_or_else(|| BackendError(format!("no script for problem '{}'", problem.id)))
    }

    fn hand_out(&mut self, problem: &Problem, step: usize) -> Result<Answer, BackendError> {
        let script = self.script(problem)?;
        let s = script.get(step).ok_or_else(|| {
            BackendError(format!("script for '{}' exhausted after {} steps", problem.id, script.len()))
        })?;
        let answer = Answer(s.answer.clone());
        self.cursor.insert(problem.id.clone(), step);
        Ok(answer)
    }
}

impl RefinementBackend for ScriptedBackend {
    fn generate(&mut self, problem: &Problem) -> Result<Answer, BackendError> {
        self.hand_out(problem, 0)
    }

    fn refine(&mut self, problem: &Problem, _previous: &Answer) -> Result<Answer, BackendError> {
        let next = self
            .cursor
            .get(&problem.id)
            .map(|c| c + 1)
            .ok_or_else(|| BackendError(format!("refine before generate on '{}'", problem.id)))?;
        self.hand_out(problem, next)
    }

    fn confidence(&mut self, problem: &Problem, _answer: &Answer) -> Result<f64, BackendError> {
        let at = *self
            .cursor
            .get(&problem.id)
            .ok_or_else(|| BackendError(format!("confidence before generate on '{}'", problem.id)))?;
        Ok(self.script(problem)?[at].confidence)
    }
}

impl Labeler for ScriptedBackend {
    /// Label of the first scripted step with this answer.
    fn is_correct(&self, problem: &Problem, answer: &Answer) -> Option<bool> {
        self.scripts.get(&problem.id)?.iter().find(|s| s.answer == answer.0)?.correct
    }
}
