//! The greedy infinite-processor schedule S∞,s and the work functions
//! evaluated on it.
//!
//! `q(t, s)` is the work S∞,s completes within `t` time units of a job's
//! release. `work(t, s)` bounds the work, from jobs with deadlines inside a
//! window of length `t`, that S∞,s performs inside that window:
//!
//! ```text
//! work(t, s) = C - q(T - t, s)                       for t <= T
//!            = floor(t / T) * C + work(t mod T, s)   for t >  T
//! ```
//!
//! Two routes compute these. [`WorkProfile`] is generic over [`Scalar`] and
//! handles any speed `s >= 1`. [`UnitWorkProfile`] specialises to `s = 1`,
//! where every start time is an integer and `q` on the integer grid can be
//! built with a difference array; the exact schedulability test uses it.

use thiserror::Error;

use crate::model::{Dag, DagTask, Time};
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WorkError {
    #[error("SPEED_BELOW_ONE: S∞ speed must be at least 1")]
    SpeedBelowOne,
    #[error("SPEED_NOT_ABOVE_ONE: speed must be strictly greater than 1")]
    SpeedNotAboveOne,
    #[error("DEGENERATE_TENSITY: bound is undefined for this tensity")]
    DegenerateTensity,
}

/// Start and finish time of every vertex when each vertex starts as soon as
/// all of its immediate predecessors have finished.
#[derive(Clone, Debug, PartialEq)]
pub struct SInftySchedule<S> {
    speed: S,
    wcet: Vec<S>,
    start: Vec<S>,
    finish: Vec<S>,
    makespan: S,
}

impl<S: Scalar> SInftySchedule<S> {
    pub fn new(dag: &Dag, speed: S) -> Result<Self, WorkError> {
        if speed < S::one() {
            return Err(WorkError::SpeedBelowOne);
        }
        let n = dag.len();
        let wcet: Vec<S> = (0..n).map(|i| S::from_u64(dag.wcet(i))).collect();
        let mut start = vec![S::zero(); n];
        let mut finish = vec![S::zero(); n];
        let mut makespan = S::zero();
        for &v in dag.topological_order() {
            let begin = dag
                .preds(v)
                .iter()
                .map(|&p| finish[p].clone())
                .fold(S::zero(), S::max_of);
            finish[v] = begin.clone() + wcet[v].clone() / speed.clone();
            start[v] = begin;
            makespan = S::max_of(makespan, finish[v].clone());
        }
        Ok(SInftySchedule { speed, wcet, start, finish, makespan })
    }

    pub fn speed(&self) -> &S {
        &self.speed
    }

    pub fn start(&self, vertex: usize) -> &S {
        &self.start[vertex]
    }

    pub fn finish(&self, vertex: usize) -> &S {
        &self.finish[vertex]
    }

    /// Completion time of the last vertex, `L / s`.
    pub fn makespan(&self) -> &S {
        &self.makespan
    }

    /// `q(t, s) = Σ_v min(c(v), s · max(0, t - start(v)))`.
    pub fn completed_work(&self, t: &S) -> S {
        let mut total = S::zero();
        for (c, start) in self.wcet.iter().zip(&self.start) {
            if t > start {
                let done = self.speed.clone() * (t.clone() - start.clone());
                total = total + S::min_of(c.clone(), done);
            }
        }
        total
    }
}

/// Convenience wrapper around [`SInftySchedule::new`] for a whole task.
pub fn sinfty_schedule<S: Scalar>(task: &DagTask, speed: S) -> Result<SInftySchedule<S>, WorkError> {
    SInftySchedule::new(&task.dag, speed)
}

/// S∞,s schedule of one task plus `q` memoized on the integer grid.
#[derive(Clone, Debug)]
pub struct WorkProfile<S> {
    period: Time,
    volume: S,
    schedule: SInftySchedule<S>,
    /// `q(t)` for integer `t` in `0..=L`; `q(t) = C` beyond.
    grid: Vec<S>,
}

impl<S: Scalar> WorkProfile<S> {
    pub fn new(task: &DagTask, speed: S) -> Result<Self, WorkError> {
        let schedule = SInftySchedule::new(&task.dag, speed)?;
        let horizon = task.dag.critical_path();
        let grid = (0..=horizon).map(|t| schedule.completed_work(&S::from_u64(t))).collect();
        Ok(WorkProfile { period: task.period, volume: S::from_u64(task.dag.volume()), schedule, grid })
    }

    pub fn schedule(&self) -> &SInftySchedule<S> {
        &self.schedule
    }

    pub fn period(&self) -> Time {
        self.period
    }

    /// `q(t, s)` at an arbitrary nonnegative time.
    pub fn q(&self, t: &S) -> S {
        self.schedule.completed_work(t)
    }

    /// `q(t, s)` at an integer time, from the memo.
    pub fn q_at(&self, t: Time) -> S {
        match self.grid.get(t as usize) {
            Some(q) => q.clone(),
            None => self.volume.clone(),
        }
    }

    pub fn work(&self, t: Time) -> S {
        let period = self.period;
        if t <= period {
            self.volume.clone() - self.q_at(period - t)
        } else {
            let jobs = t / period;
            S::from_u64(jobs) * self.volume.clone() + self.work(t - jobs * period)
        }
    }
}

/// Integer-valued `q(t, 1)` and `work(t, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitWorkProfile {
    period: Time,
    volume: Time,
    critical_path: Time,
    /// `q(t, 1)` for `t` in `0..=L`.
    grid: Vec<Time>,
}

/// Maximum of `(work(t, 1) + delta) / t` and the first grid point attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupRatio {
    pub value: Rational,
    pub at: Time,
}

impl UnitWorkProfile {
    pub fn new(task: &DagTask) -> Self {
        let dag = &task.dag;
        let n = dag.len();
        let mut finish = vec![0; n];
        let mut critical_path = 0;
        let mut slope = vec![0i64; 1];
        let mut spans = Vec::with_capacity(n);
        for &v in dag.topological_order() {
            let start = dag.preds(v).iter().map(|&p| finish[p]).max().unwrap_or(0);
            finish[v] = start + dag.wcet(v);
            critical_path = critical_path.max(finish[v]);
            spans.push((start, finish[v]));
        }
        slope.resize(critical_path as usize + 1, 0);
        for (start, end) in spans {
            if end > start {
                slope[start as usize] += 1;
                slope[end as usize] -= 1;
            }
        }
        let mut grid = Vec::with_capacity(critical_path as usize + 1);
        let (mut running, mut q) = (0i64, 0u64);
        grid.push(0);
        for rate in slope.iter().take(critical_path as usize) {
            running += rate;
            q += running as u64;
            grid.push(q);
        }
        UnitWorkProfile { period: task.period, volume: dag.volume(), critical_path, grid }
    }

    pub fn period(&self) -> Time {
        self.period
    }

    pub fn volume(&self) -> Time {
        self.volume
    }

    pub fn critical_path(&self) -> Time {
        self.critical_path
    }

    pub fn q(&self, t: Time) -> Time {
        self.grid.get(t as usize).copied().unwrap_or(self.volume)
    }

    pub fn work(&self, t: Time) -> Time {
        let (period, volume) = (self.period, self.volume);
        let jobs = t / period;
        if t <= period {
            volume - self.q(period - t)
        } else {
            jobs * volume + volume - self.q(period - (t - jobs * period))
        }
    }

    /// `max over integer t in [T, 2T] of (work(t, 1) + delta) / t`, which is
    /// also the supremum over all `t >= T`.
    ///
    /// On `[T, 2T - L]` the work stays at `C`, so the ratio is largest at
    /// `t = T`; only `T` and `[2T - L, 2T]` need scanning.
    pub fn sup_ratio(&self, delta: Time) -> SupRatio {
        let period = self.period;
        let mut best = (self.work(period) + delta, period);
        let from = (2 * period).saturating_sub(self.critical_path).max(period + 1);
        for t in from..=2 * period {
            let candidate = self.work(t) + delta;
            // candidate / t > best.0 / best.1
            if (candidate as u128) * (best.1 as u128) > (best.0 as u128) * (t as u128) {
                best = (candidate, t);
            }
        }
        SupRatio { value: Rational::new(best.0.into(), best.1.into()), at: best.1 }
    }
}

/// `sup over t >= T of (work(t, 1) + delta) / t` for one task.
pub fn sup_work_ratio(task: &DagTask, delta: Time) -> Rational {
    UnitWorkProfile::new(task).sup_ratio(delta).value
}
