//! Task-set file format.
//!
//! A task set is a JSON document:
//!
//! ```json
//! { "tasks": [ { "id": 1, "period": 15,
//!                "vertices": [ { "id": 1, "wcet": 2 } ],
//!                "edges": [ { "src": 1, "dst": 2 } ] } ] }
//! ```
//!
//! The canonical form sorts tasks, vertices and edges by id, omits synthetic
//! head/tail vertices, and is pretty-printed with a trailing newline, so
//! load → save reproduces a canonical file byte for byte.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate, DagTask, ModelError, RawTask, TaskId, TaskSet, ValidationError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSetFile {
    pub tasks: Vec<RawTask>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskError {
    pub task: TaskId,
    pub error: ValidationError,
}

impl fmt::Display for TaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task {}: {}", self.task, self.error)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed task-set document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{} validation error(s):\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<TaskError>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl LoadError {
    /// One message per problem found.
    pub fn messages(&self) -> Vec<String> {
        match self {
            LoadError::Invalid(errors) => errors.iter().map(ToString::to_string).collect(),
            other => vec![other.to_string()],
        }
    }
}

/// Validates and normalizes every task, collecting all errors across tasks.
pub fn from_file(file: &TaskSetFile) -> Result<TaskSet, LoadError> {
    let mut tasks = Vec::with_capacity(file.tasks.len());
    let mut errors = Vec::new();
    for raw in &file.tasks {
        match validate(raw) {
            Ok(task) => tasks.push(task.normalize()),
            Err(found) => errors.extend(found.into_iter().map(|error| TaskError { task: raw.id, error })),
        }
    }
    if !errors.is_empty() {
        return Err(LoadError::Invalid(errors));
    }
    Ok(TaskSet::new(tasks)?)
}

pub fn parse_taskset(text: &str) -> Result<TaskSet, LoadError> {
    let file: TaskSetFile = serde_json::from_str(text)?;
    from_file(&file)
}

pub fn read_taskset(path: impl AsRef<Path>) -> Result<TaskSet, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_taskset(&text)
}

pub fn to_file(set: &TaskSet) -> TaskSetFile {
    let mut tasks: Vec<RawTask> = set.tasks().iter().map(DagTask::to_raw).collect();
    tasks.sort_by_key(|t| t.id);
    TaskSetFile { tasks }
}

pub fn to_canonical_string(set: &TaskSet) -> String {
    let mut text = serde_json::to_string_pretty(&to_file(set)).expect("task sets always serialize");
    text.push('\n');
    text
}

pub fn write_taskset(set: &TaskSet, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, to_canonical_string(set))
}
