//! DAG task model: structural validation, normalization, and derived metrics.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Rational;

pub type VertexId = u32;
pub type TaskId = u32;
/// Discrete time and work, in unit-speed time units.
pub type Time = u64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub id: VertexId,
    pub wcet: Time,
    /// Zero-WCET head/tail inserted by [`DagTask::normalize`].
    pub synthetic: bool,
}

/// Unvalidated task description, as read from a task-set file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTask {
    pub id: TaskId,
    pub period: i64,
    pub vertices: Vec<RawVertex>,
    pub edges: Vec<RawEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVertex {
    pub id: VertexId,
    pub wcet: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEdge {
    pub src: VertexId,
    pub dst: VertexId,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("CYCLE_DETECTED: vertices {0:?} lie on a cycle")]
    CycleDetected(Vec<VertexId>),
    #[error("DANGLING_EDGE: edge {src}->{dst} references a missing vertex")]
    DanglingEdge { src: VertexId, dst: VertexId },
    #[error("NONPOSITIVE_WCET: vertex {vertex} has wcet {wcet}")]
    NonpositiveWcet { vertex: VertexId, wcet: i64 },
    #[error("NONPOSITIVE_PERIOD: period {0}")]
    NonpositivePeriod(i64),
    #[error("SELF_LOOP: edge {0}->{0}")]
    SelfLoop(VertexId),
    #[error("DUPLICATE_EDGE: edge {src}->{dst} listed more than once")]
    DuplicateEdge { src: VertexId, dst: VertexId },
    #[error("DUPLICATE_VERTEX: vertex id {0} listed more than once")]
    DuplicateVertex(VertexId),
    #[error("EMPTY_GRAPH: task has no vertices")]
    EmptyGraph,
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::CycleDetected(_) => "CYCLE_DETECTED",
            ValidationError::DanglingEdge { .. } => "DANGLING_EDGE",
            ValidationError::NonpositiveWcet { .. } => "NONPOSITIVE_WCET",
            ValidationError::NonpositivePeriod(_) => "NONPOSITIVE_PERIOD",
            ValidationError::SelfLoop(_) => "SELF_LOOP",
            ValidationError::DuplicateEdge { .. } => "DUPLICATE_EDGE",
            ValidationError::DuplicateVertex(_) => "DUPLICATE_VERTEX",
            ValidationError::EmptyGraph => "EMPTY_GRAPH",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("task id {0} appears more than once")]
    DuplicateTaskId(TaskId),
    #[error("task set is empty")]
    EmptyTaskSet,
    #[error("processor count must be at least 1")]
    ZeroProcessors,
}

/// A validated, acyclic precedence graph. Vertices are kept sorted by id, so
/// vertex indices follow id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    vertices: Vec<Vertex>,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    /// Builds a graph, reporting every structural violation found.
    ///
    /// Synthetic vertices may carry a zero WCET; every other vertex needs
    /// `wcet >= 1`.
    pub fn new(
        vertices: Vec<Vertex>,
        edges: &[(VertexId, VertexId)],
    ) -> Result<Dag, Vec<ValidationError>> {
        let mut errors = Vec::new();
        if vertices.is_empty() {
            errors.push(ValidationError::EmptyGraph);
        }
        let mut vertices = vertices;
        vertices.sort_by_key(|v| v.id);
        for (i, v) in vertices.iter().enumerate() {
            if i > 0 && vertices[i - 1].id == v.id {
                errors.push(ValidationError::DuplicateVertex(v.id));
            }
            if v.wcet == 0 && !v.synthetic {
                errors.push(ValidationError::NonpositiveWcet { vertex: v.id, wcet: 0 });
            }
        }
        vertices.dedup_by_key(|v| v.id);
        let index: BTreeMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();

        let mut seen = HashSet::new();
        let mut resolved = Vec::with_capacity(edges.len());
        for &(src, dst) in edges {
            if src == dst {
                errors.push(ValidationError::SelfLoop(src));
                continue;
            }
            match (index.get(&src), index.get(&dst)) {
                (Some(&a), Some(&b)) => {
                    if seen.insert((a, b)) {
                        resolved.push((a, b));
                    } else {
                        errors.push(ValidationError::DuplicateEdge { src, dst });
                    }
                }
                _ => errors.push(ValidationError::DanglingEdge { src, dst }),
            }
        }
        resolved.sort_unstable();

        let n = vertices.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &resolved {
            succs[a].push(b);
            preds[b].push(a);
        }

        // Kahn's algorithm, smallest index first so the order is canonical.
        let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &s in &succs[v] {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        if topo.len() < n {
            let cyclic = (0..n).filter(|&i| indegree[i] > 0).map(|i| vertices[i].id).collect();
            errors.push(ValidationError::CycleDetected(cyclic));
        }

        if errors.is_empty() {
            Ok(Dag { vertices, edges: resolved, preds, succs, topo })
        } else {
            Err(errors)
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index]
    }

    pub fn wcet(&self, index: usize) -> Time {
        self.vertices[index].wcet
    }

    /// Edges as index pairs, sorted.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges as vertex-id pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().map(|&(a, b)| (self.vertices[a].id, self.vertices[b].id))
    }

    pub fn preds(&self, index: usize) -> &[usize] {
        &self.preds[index]
    }

    pub fn succs(&self, index: usize) -> &[usize] {
        &self.succs[index]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.preds[i].is_empty()).collect()
    }

    pub fn sinks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.succs[i].is_empty()).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.sources().len() == 1 && self.sinks().len() == 1
    }

    pub fn volume(&self) -> Time {
        self.vertices.iter().map(|v| v.wcet).sum()
    }

    /// Longest path length, by dynamic programming over the topological order.
    pub fn critical_path(&self) -> Time {
        let mut finish = vec![0; self.len()];
        let mut best = 0;
        for &v in &self.topo {
            let start = self.preds[v].iter().map(|&p| finish[p]).max().unwrap_or(0);
            finish[v] = start + self.vertices[v].wcet;
            best = best.max(finish[v]);
        }
        best
    }

    /// Adds zero-WCET synthetic head/tail vertices where the graph has more
    /// than one source or sink. A graph that already has both unique is
    /// returned unchanged.
    pub fn normalize(&self) -> Dag {
        let sources = self.sources();
        let sinks = self.sinks();
        if sources.len() <= 1 && sinks.len() <= 1 {
            return self.clone();
        }
        let mut next_id = self.vertices.iter().map(|v| v.id).max().unwrap_or(0) + 1;
        let mut vertices = self.vertices.clone();
        let mut edges: Vec<(VertexId, VertexId)> = self.edges().collect();
        if sources.len() > 1 {
            let head = next_id;
            next_id += 1;
            vertices.push(Vertex { id: head, wcet: 0, synthetic: true });
            edges.extend(sources.iter().map(|&s| (head, self.vertices[s].id)));
        }
        if sinks.len() > 1 {
            let tail = next_id;
            vertices.push(Vertex { id: tail, wcet: 0, synthetic: true });
            edges.extend(sinks.iter().map(|&s| (self.vertices[s].id, tail)));
        }
        Dag::new(vertices, &edges).expect("adding a fresh head/tail keeps the graph valid")
    }
}

/// A sporadic DAG task with implicit deadline equal to its period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagTask {
    pub id: TaskId,
    pub dag: Dag,
    pub period: Time,
}

impl DagTask {
    /// Builds a task from `(id, wcet)` pairs and `(src, dst)` edges.
    pub fn new(
        id: TaskId,
        vertices: &[(VertexId, Time)],
        edges: &[(VertexId, VertexId)],
        period: Time,
    ) -> Result<DagTask, Vec<ValidationError>> {
        let raw = RawTask {
            id,
            period: i64::try_from(period).unwrap_or(i64::MAX),
            vertices: vertices
                .iter()
                .map(|&(id, wcet)| RawVertex { id, wcet: i64::try_from(wcet).unwrap_or(i64::MAX) })
                .collect(),
            edges: edges.iter().map(|&(src, dst)| RawEdge { src, dst }).collect(),
        };
        validate(&raw)
    }

    pub fn normalize(&self) -> DagTask {
        DagTask { id: self.id, dag: self.dag.normalize(), period: self.period }
    }

    pub fn metrics(&self) -> TaskMetrics {
        let volume = self.dag.volume();
        let critical_path = self.dag.critical_path();
        TaskMetrics {
            volume,
            critical_path,
            utilization: ratio(volume, self.period),
            tensity: ratio(critical_path, self.period),
        }
    }

    /// The file representation: synthetic vertices and their edges are
    /// dropped, everything sorted by id.
    pub fn to_raw(&self) -> RawTask {
        let dag = &self.dag;
        let vertices = dag
            .vertices()
            .iter()
            .filter(|v| !v.synthetic)
            .map(|v| RawVertex { id: v.id, wcet: v.wcet as i64 })
            .collect();
        let mut edges: Vec<RawEdge> = dag
            .edge_indices()
            .iter()
            .filter(|&&(a, b)| !dag.vertex(a).synthetic && !dag.vertex(b).synthetic)
            .map(|&(a, b)| RawEdge { src: dag.vertex(a).id, dst: dag.vertex(b).id })
            .collect();
        edges.sort();
        RawTask { id: self.id, period: self.period as i64, vertices, edges }
    }
}

fn ratio(numer: Time, denom: Time) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Checks a raw description and returns the task, or every violation found.
pub fn validate(raw: &RawTask) -> Result<DagTask, Vec<ValidationError>> {
    let mut errors = Vec::new();
    if raw.period < 1 {
        errors.push(ValidationError::NonpositivePeriod(raw.period));
    }
    let mut vertices = Vec::with_capacity(raw.vertices.len());
    for v in &raw.vertices {
        if v.wcet < 1 {
            errors.push(ValidationError::NonpositiveWcet { vertex: v.id, wcet: v.wcet });
        }
        vertices.push(Vertex { id: v.id, wcet: v.wcet.max(1) as Time, synthetic: false });
    }
    let edges: Vec<_> = raw.edges.iter().map(|e| (e.src, e.dst)).collect();
    match Dag::new(vertices, &edges) {
        Ok(dag) if errors.is_empty() => Ok(DagTask { id: raw.id, dag, period: raw.period as Time }),
        Ok(_) => Err(errors),
        Err(structural) => {
            errors.extend(structural);
            Err(errors)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskMetrics {
    /// C: total WCET.
    pub volume: Time,
    /// L: longest path length.
    pub critical_path: Time,
    /// u = C / T.
    pub utilization: Rational,
    /// γ = L / T.
    pub tensity: Rational,
}

impl TaskMetrics {
    pub fn is_heavy(&self) -> bool {
        self.utilization > Rational::from_integer(BigInt::from(1))
    }
}

impl fmt::Display for TaskMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C={} L={} u={} γ={}",
            self.volume, self.critical_path, self.utilization, self.tensity
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TaskSet {
    tasks: Vec<DagTask>,
}

impl TaskSet {
    pub fn new(tasks: Vec<DagTask>) -> Result<TaskSet, ModelError> {
        let mut ids = HashSet::new();
        for t in &tasks {
            if !ids.insert(t.id) {
                return Err(ModelError::DuplicateTaskId(t.id));
            }
        }
        Ok(TaskSet { tasks })
    }

    pub fn tasks(&self) -> &[DagTask] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: TaskId) -> Option<&DagTask> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn normalize(&self) -> TaskSet {
        TaskSet { tasks: self.tasks.iter().map(DagTask::normalize).collect() }
    }

    pub fn total_utilization(&self) -> Rational {
        self.tasks.iter().map(|t| t.metrics().utilization).sum()
    }

    pub fn hyperperiod(&self) -> Option<Time> {
        self.tasks.iter().try_fold(1u64, |acc, t| {
            let g = num_integer::gcd(acc, t.period);
            (acc / g).checked_mul(t.period)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetMetrics {
    /// U_Σ.
    pub total_utilization: Rational,
    /// U = U_Σ / m.
    pub normalized_utilization: Rational,
    pub gamma_max: Rational,
}

pub fn set_metrics(set: &TaskSet, m: u32) -> Result<SetMetrics, ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTaskSet);
    }
    if m == 0 {
        return Err(ModelError::ZeroProcessors);
    }
    let metrics: Vec<_> = set.tasks().iter().map(DagTask::metrics).collect();
    Ok(SetMetrics::from_task_metrics(&metrics, m))
}

impl SetMetrics {
    pub(crate) fn from_task_metrics(metrics: &[TaskMetrics], m: u32) -> SetMetrics {
        let total: Rational = metrics.iter().map(|t| t.utilization.clone()).sum();
        let gamma_max = metrics
            .iter()
            .map(|t| t.tensity.clone())
            .max()
            .unwrap_or_else(|| Rational::from_integer(BigInt::from(0)));
        SetMetrics {
            normalized_utilization: &total / Rational::from_integer(BigInt::from(m)),
            total_utilization: total,
            gamma_max,
        }
    }
}

/// Enumerates every source-to-sink path; exponential, for small graphs and
/// cross-checks only.
pub fn longest_path_by_enumeration(dag: &Dag) -> Time {
    let mut best = 0;
    let mut stack: VecDeque<(usize, Time)> = dag.sources().into_iter().map(|s| (s, dag.wcet(s))).collect();
    while let Some((v, len)) = stack.pop_back() {
        if dag.succs(v).is_empty() {
            best = best.max(len);
        }
        for &s in dag.succs(v) {
            stack.push_back((s, len + dag.wcet(s)));
        }
    }
    best
}
