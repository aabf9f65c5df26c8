//! Discrete-time preemptive global scheduler (G-RM, G-EDF).
//!
//! Semantics are those of a unit-step simulation: at every integer instant the
//! active jobs are ranked, the `m` processors go to eligible vertices in rank
//! order (vertex-id order inside a job), and each executing vertex loses one
//! unit of remaining work. The assignment can only change at a release, a
//! vertex completion or a deadline, so the loop jumps straight to the next
//! such event and applies the whole stretch at once. The per-step trace is
//! still available through [`write_trace`].
//!
//! The simulator checks a necessary condition only. Synchronous release is
//! not known to be the worst case for DAG tasks, so [`falsify`] also tries
//! random release offsets; finding no miss proves nothing.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

use crate::model::{TaskId, TaskSet, Time, VertexId};
use crate::taskgen::{derive_seed, rng_for};

/// Default upper limit on a simulation horizon.
pub const HORIZON_CAP: Time = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("HORIZON_NONPOSITIVE: horizon must be at least 1")]
    HorizonNonpositive,
    #[error("processor count must be at least 1")]
    ZeroProcessors,
    #[error("release pattern does not match the task set: {0}")]
    InvalidReleases(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    Rm,
    Edf,
}

impl Policy {
    pub fn from_name(name: &str) -> Option<Policy> {
        match name {
            "rm" => Some(Policy::Rm),
            "edf" => Some(Policy::Edf),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReleasePattern {
    /// Every task releases at 0 and then exactly every period.
    Synchronous,
    /// Task `i` (in set order) releases at `offsets[i]` and then every period.
    Offsets(Vec<Time>),
    /// Explicit release times per task, in set order; consecutive releases
    /// must be at least one period apart.
    Explicit(Vec<Vec<Time>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub policy: Policy,
    pub pattern: ReleasePattern,
    /// Jobs are released in `[0, horizon)`; each is followed to its deadline.
    pub horizon: Time,
    pub stop_at_first_miss: bool,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(policy: Policy, horizon: Time) -> SimConfig {
        SimConfig {
            policy,
            pattern: ReleasePattern::Synchronous,
            horizon,
            stop_at_first_miss: true,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobRecord {
    pub task: TaskId,
    /// Index of the job among its task's releases.
    pub index: u32,
    pub release: Time,
    pub deadline: Time,
    pub finish: Option<Time>,
    pub completed_work: Time,
}

impl JobRecord {
    pub fn response_time(&self) -> Option<Time> {
        self.finish.map(|f| f - self.release)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadlineMiss {
    pub task: TaskId,
    pub job: u32,
    pub deadline: Time,
    pub unfinished: Time,
}

impl fmt::Display for DeadlineMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "job {}.{} missed its deadline at t={} with {} unit(s) unfinished",
            self.task, self.job, self.deadline, self.unfinished
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub processor: u32,
    pub task: TaskId,
    pub job: u32,
    pub vertex: VertexId,
}

/// A stretch of `len` steps starting at `start` with a fixed assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Time,
    pub len: Time,
    /// Eligible, unfinished, nonzero-work vertices during the stretch.
    pub eligible: usize,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub horizon: Time,
    /// Time at which the simulation stopped.
    pub end: Time,
    pub first_miss: Option<DeadlineMiss>,
    pub misses: usize,
    pub jobs: Vec<JobRecord>,
    /// Busy time per processor.
    pub busy: Vec<Time>,
    pub executed_work: Time,
    pub trace: Option<Vec<Segment>>,
}

impl SimResult {
    pub fn schedulable(&self) -> bool {
        self.first_miss.is_none()
    }
}

struct ActiveJob {
    record: usize,
    task: usize,
    key: (Time, TaskId, Time),
    deadline: Time,
    remaining: Vec<Time>,
    waiting_on: Vec<u32>,
    /// Bitset of eligible vertices with work left.
    ready: Vec<u64>,
    unfinished: usize,
    completed_work: Time,
    missed: bool,
}

impl ActiveJob {
    fn ready_count(&self) -> usize {
        self.ready.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Per-task data copied into or consulted by every job.
struct Template {
    wcet: Vec<Time>,
    in_degree: Vec<u32>,
    sources: Vec<usize>,
    /// Successors of `v` are `succ[succ_at[v]..succ_at[v + 1]]`.
    succ_at: Vec<usize>,
    succ: Vec<usize>,
}

impl Template {
    fn new(dag: &crate::model::Dag) -> Template {
        let mut succ_at = vec![0];
        let mut succ = Vec::new();
        for v in 0..dag.len() {
            succ.extend_from_slice(dag.succs(v));
            succ_at.push(succ.len());
        }
        Template {
            wcet: (0..dag.len()).map(|v| dag.wcet(v)).collect(),
            in_degree: (0..dag.len()).map(|v| dag.preds(v).len() as u32).collect(),
            sources: dag.sources(),
            succ_at,
            succ,
        }
    }
}

fn release_times(set: &TaskSet, pattern: &ReleasePattern, horizon: Time) -> Result<Vec<Vec<Time>>, SimError> {
    let tasks = set.tasks();
    let periodic = |offset: Time, period: Time| -> Vec<Time> {
        (0..).map(|k| offset + k * period).take_while(|&r| r < horizon).collect()
    };
    match pattern {
        ReleasePattern::Synchronous => Ok(tasks.iter().map(|t| periodic(0, t.period)).collect()),
        ReleasePattern::Offsets(offsets) => {
            if offsets.len() != tasks.len() {
                return Err(SimError::InvalidReleases(format!(
                    "{} offsets for {} tasks",
                    offsets.len(),
                    tasks.len()
                )));
            }
            Ok(tasks.iter().zip(offsets).map(|(t, &o)| periodic(o, t.period)).collect())
        }
        ReleasePattern::Explicit(lists) => {
            if lists.len() != tasks.len() {
                return Err(SimError::InvalidReleases(format!(
                    "{} release lists for {} tasks",
                    lists.len(),
                    tasks.len()
                )));
            }
            for (task, list) in tasks.iter().zip(lists) {
                if list.windows(2).any(|w| w[1] < w[0] + task.period) {
                    return Err(SimError::InvalidReleases(format!(
                        "task {} releases closer than its period {}",
                        task.id, task.period
                    )));
                }
            }
            Ok(lists.iter().map(|l| l.iter().copied().filter(|&r| r < horizon).collect()).collect())
        }
    }
}

pub fn simulate(set: &TaskSet, m: u32, cfg: &SimConfig) -> Result<SimResult, SimError> {
    if m == 0 {
        return Err(SimError::ZeroProcessors);
    }
    if cfg.horizon == 0 {
        return Err(SimError::HorizonNonpositive);
    }
    let m = m as usize;
    let tasks = set.tasks();
    let releases = release_times(set, &cfg.pattern, cfg.horizon)?;
    let end = releases
        .iter()
        .zip(tasks)
        .filter_map(|(list, t)| list.last().map(|&r| r + t.period))
        .max()
        .unwrap_or(0)
        .max(cfg.horizon);

    let mut next = vec![0usize; tasks.len()];
    let mut jobs: Vec<JobRecord> = Vec::new();
    let mut active: Vec<ActiveJob> = Vec::new();
    // busy_for[k]: time during which exactly k processors were busy.
    let mut busy_for: Vec<Time> = vec![0; m + 1];
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut first_miss = None;
    let mut misses = 0;
    let mut now: Time = 0;
    let mut assigned: Vec<(usize, usize)> = Vec::with_capacity(m);
    let templates: Vec<Template> = tasks.iter().map(|t| Template::new(&t.dag)).collect();
    let next_release = |next: &[usize]| -> Option<Time> {
        releases.iter().zip(next).filter_map(|(list, &k)| list.get(k).copied()).min()
    };
    let next_deadline = |active: &[ActiveJob]| -> Time {
        active.iter().filter(|j| !j.missed).map(|j| j.deadline).min().unwrap_or(Time::MAX)
    };
    let mut upcoming = next_release(&next);
    let mut deadline_at = Time::MAX;

    loop {
        if upcoming == Some(now) {
            for (i, task) in tasks.iter().enumerate() {
                while next[i] < releases[i].len() && releases[i][next[i]] == now {
                    let release = now;
                    let deadline = release + task.period;
                    let key = match cfg.policy {
                        Policy::Rm => (task.period, task.id, release),
                        Policy::Edf => (deadline, task.id, release),
                    };
                    jobs.push(JobRecord {
                        task: task.id,
                        index: next[i] as u32,
                        release,
                        deadline,
                        finish: None,
                        completed_work: 0,
                    });
                    let template = &templates[i];
                    let mut job = ActiveJob {
                        record: jobs.len() - 1,
                        task: i,
                        key,
                        deadline,
                        remaining: template.wcet.clone(),
                        waiting_on: template.in_degree.clone(),
                        ready: vec![0; template.wcet.len().div_ceil(64)],
                        unfinished: template.wcet.len(),
                        completed_work: 0,
                        missed: false,
                    };
                    for &v in &template.sources {
                        make_eligible(&mut job, template, v);
                    }
                    if job.unfinished == 0 {
                        jobs[job.record].finish = Some(now);
                    } else {
                        // Keys never change, so keeping the list sorted on insert
                        // replaces a sort per event.
                        let at = active.partition_point(|a| a.key < job.key);
                        deadline_at = deadline_at.min(job.deadline);
                        active.insert(at, job);
                    }
                    next[i] += 1;
                }
            }
            upcoming = next_release(&next);
        }

        if deadline_at <= now {
            for job in active.iter_mut().filter(|j| !j.missed && j.deadline <= now) {
                job.missed = true;
                misses += 1;
                if first_miss.is_none() {
                    let record = &jobs[job.record];
                    first_miss = Some(DeadlineMiss {
                        task: record.task,
                        job: record.index,
                        deadline: job.deadline,
                        unfinished: job.remaining.iter().sum(),
                    });
                }
            }
            deadline_at = next_deadline(&active);
        }
        if first_miss.is_some() && cfg.stop_at_first_miss {
            break;
        }
        // Past the horizon only overdue jobs remain; they run to completion
        // when misses do not stop the run.
        if now >= end && (cfg.stop_at_first_miss || active.is_empty()) {
            break;
        }

        let mut delta = if now < end { end - now } else { Time::MAX };
        if let Some(r) = upcoming {
            delta = delta.min(r - now);
        }
        if deadline_at != Time::MAX {
            delta = delta.min(deadline_at - now);
        }
        assigned.clear();
        'fill: for (j, job) in active.iter().enumerate() {
            for (w, &word) in job.ready.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    if assigned.len() == m {
                        break 'fill;
                    }
                    let v = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    delta = delta.min(job.remaining[v]);
                    assigned.push((j, v));
                }
            }
        }
        debug_assert!(delta > 0);

        if let Some(trace) = trace.as_mut() {
            let slots = assigned
                .iter()
                .enumerate()
                .map(|(p, &(j, v))| {
                    let record = &jobs[active[j].record];
                    Slot {
                        processor: p as u32,
                        task: record.task,
                        job: record.index,
                        vertex: tasks[active[j].task].dag.vertex(v).id,
                    }
                })
                .collect();
            let eligible = active.iter().map(ActiveJob::ready_count).sum();
            trace.push(Segment { start: now, len: delta, eligible, slots });
        }

        busy_for[assigned.len()] += delta;
        now += delta;

        let mut job_done = false;
        for &(j, v) in &assigned {
            let job = &mut active[j];
            job.completed_work += delta;
            job.remaining[v] -= delta;
            if job.remaining[v] == 0 {
                job.ready[v / 64] &= !(1 << (v % 64));
                complete_vertex(job, &templates[job.task], v);
                job_done |= job.unfinished == 0;
            }
        }
        if !job_done {
            continue;
        }
        active.retain(|job| {
            if job.unfinished == 0 {
                let record = &mut jobs[job.record];
                record.finish = Some(now);
                record.completed_work = job.completed_work;
                false
            } else {
                true
            }
        });
        deadline_at = next_deadline(&active);
    }
    for job in &active {
        jobs[job.record].completed_work = job.completed_work;
    }

    // Processors fill in index order, so processor p is busy whenever more
    // than p processors are.
    let mut busy = vec![0; m];
    let mut running = 0;
    for p in (0..m).rev() {
        running += busy_for[p + 1];
        busy[p] = running;
    }
    let executed = (1..=m).map(|k| k as Time * busy_for[k]).sum();

    Ok(SimResult {
        horizon: cfg.horizon,
        end: now,
        first_miss,
        misses,
        jobs,
        busy,
        executed_work: executed,
        trace,
    })
}

/// Marks `v` eligible; zero-work vertices complete immediately.
fn make_eligible(job: &mut ActiveJob, template: &Template, v: usize) {
    if job.remaining[v] == 0 {
        complete_vertex(job, template, v);
    } else {
        job.ready[v / 64] |= 1 << (v % 64);
    }
}

fn complete_vertex(job: &mut ActiveJob, template: &Template, v: usize) {
    job.unfinished -= 1;
    for &s in &template.succ[template.succ_at[v]..template.succ_at[v + 1]] {
        job.waiting_on[s] -= 1;
        if job.waiting_on[s] == 0 {
            make_eligible(job, template, s);
        }
    }
}

/// One line per time step: `t` followed by `(processor,task.job,vertex)`
/// triples, processors in ascending order. Idle steps list nothing.
pub fn write_trace(trace: &[Segment], out: &mut impl Write) -> io::Result<()> {
    for seg in trace {
        let slots: Vec<String> =
            seg.slots.iter().map(|s| format!("({},{}.{},{})", s.processor, s.task, s.job, s.vertex)).collect();
        let line = slots.join(" ");
        for t in seg.start..seg.start + seg.len {
            if line.is_empty() {
                writeln!(out, "{t}")?;
            } else {
                writeln!(out, "{t} {line}")?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub pattern: ReleasePattern,
    pub horizon: Time,
    pub miss: DeadlineMiss,
    pub trace: Vec<Segment>,
}

/// Synchronous run, then `trials` runs with offsets uniform in `[0, T_i)`.
/// Horizons are the hyperperiod (plus the largest offset), capped at `cap`.
pub fn falsify(
    set: &TaskSet,
    m: u32,
    policy: Policy,
    trials: u32,
    seed: u64,
    cap: Time,
) -> Result<Option<Counterexample>, SimError> {
    if m == 0 {
        return Err(SimError::ZeroProcessors);
    }
    if cap == 0 {
        return Err(SimError::HorizonNonpositive);
    }
    let base = set.hyperperiod().unwrap_or(cap).min(cap);
    let mut patterns = vec![(ReleasePattern::Synchronous, base)];
    for trial in 0..trials {
        let mut rng = rng_for(derive_seed(seed, u64::from(trial)));
        let offsets: Vec<Time> = set.tasks().iter().map(|t| rng.gen_range(0..t.period)).collect();
        let horizon = base.saturating_add(offsets.iter().copied().max().unwrap_or(0)).min(cap);
        patterns.push((ReleasePattern::Offsets(offsets), horizon));
    }
    for (pattern, horizon) in patterns {
        let cfg = SimConfig { policy, pattern: pattern.clone(), horizon, stop_at_first_miss: true, record_trace: false };
        let result = simulate(set, m, &cfg)?;
        if let Some(miss) = result.first_miss {
            // Rerun with tracing only for the failing pattern.
            let traced = simulate(set, m, &SimConfig { record_trace: true, ..cfg })?;
            return Ok(Some(Counterexample { pattern, horizon, miss, trace: traced.trace.unwrap_or_default() }));
        }
    }
    Ok(None)
}
