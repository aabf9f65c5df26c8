//! Small hand-built tasks used by tests, examples and the CLI docs.

use crate::model::{DagTask, Time};

/// Seven-vertex task with C = 18, L = 10 (critical path v1, v3, v5, v7) and
/// period 15, so u = 6/5 and γ = 2/3.
pub fn fig2_task() -> DagTask {
    DagTask::new(
        1,
        &[(1, 2), (2, 3), (3, 4), (4, 3), (5, 2), (6, 2), (7, 2)],
        &[(1, 2), (1, 3), (1, 4), (2, 5), (3, 5), (4, 6), (5, 7), (6, 7)],
        15,
    )
    .expect("fixture is valid")
}

pub fn single_vertex(wcet: Time, period: Time) -> DagTask {
    DagTask::new(1, &[(1, wcet)], &[], period).expect("fixture is valid")
}

/// a(1) -> {b(2), c(3)} -> d(1), period 10.
pub fn diamond() -> DagTask {
    DagTask::new(1, &[(1, 1), (2, 2), (3, 3), (4, 1)], &[(1, 2), (1, 3), (2, 4), (3, 4)], 10)
        .expect("fixture is valid")
}

pub fn chain(wcets: &[Time], period: Time) -> DagTask {
    let vertices: Vec<_> = wcets.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)).collect();
    let edges: Vec<_> = (1..wcets.len() as u32).map(|i| (i, i + 1)).collect();
    DagTask::new(1, &vertices, &edges, period).expect("fixture is valid")
}

/// Returns `task` with its id replaced.
pub fn with_id(mut task: DagTask, id: u32) -> DagTask {
    task.id = id;
    task
}
