//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls the library's work or analysis code.

#![allow(dead_code)]

use dagsched::model::Dag;
use dagsched::{rat, DagTask, Rational};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

pub fn int(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Longest path by depth-first enumeration of every source-to-sink path.
pub fn longest_path_dfs(dag: &Dag) -> u64 {
    fn walk(dag: &Dag, v: usize) -> u64 {
        dag.wcet(v) + dag.succs(v).iter().map(|&s| walk(dag, s)).max().unwrap_or(0)
    }
    (0..dag.len()).filter(|&v| dag.preds(v).is_empty()).map(|v| walk(dag, v)).max().unwrap_or(0)
}

/// Work completed after each unit of "speed-scaled" time on infinitely many
/// processors, by stepping: in every step each eligible vertex executes one
/// unit. `done[k]` is the total after `k` steps.
pub fn unit_steps(dag: &Dag) -> Vec<u64> {
    let n = dag.len();
    let mut remaining: Vec<u64> = (0..n).map(|v| dag.wcet(v)).collect();
    let mut finished = vec![false; n];
    let mut done = vec![0u64];
    let mut total = 0;
    loop {
        // Zero-work vertices finish as soon as their predecessors do.
        loop {
            let mut changed = false;
            for v in 0..n {
                if !finished[v] && remaining[v] == 0 && dag.preds(v).iter().all(|&p| finished[p]) {
                    finished[v] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if finished.iter().all(|&f| f) {
            return done;
        }
        let running: Vec<usize> =
            (0..n).filter(|&v| !finished[v] && dag.preds(v).iter().all(|&p| finished[p])).collect();
        for &v in &running {
            remaining[v] -= 1;
            total += 1;
        }
        for &v in &running {
            if remaining[v] == 0 {
                finished[v] = true;
            }
        }
        done.push(total);
    }
}

/// `q(t, s)` from the step table: speed `s` runs `s·t` unit steps in time
/// `t`, and completed work is linear between integer step counts.
pub fn q_oracle(steps: &[u64], t: &Rational, speed: &Rational) -> Rational {
    let x = t * speed;
    if x <= Rational::zero() {
        return Rational::zero();
    }
    let k = x.floor().to_integer().to_usize().unwrap_or(usize::MAX);
    let last = *steps.last().unwrap();
    if k + 1 >= steps.len() {
        return int(last);
    }
    let frac = &x - Rational::from_integer(BigInt::from(k));
    int(steps[k]) + frac * int(steps[k + 1] - steps[k])
}

/// Maximum work from jobs of `task` with deadlines in a window of length
/// `t`, found by trying every integer deadline `d` of the earliest such job:
/// that job contributes what S∞,s leaves after time `T - d` and every later
/// job contributes all of `C`.
pub fn work_oracle(task: &DagTask, steps: &[u64], t: u64, speed: &Rational) -> Rational {
    let period = task.period;
    let volume = int(task.dag.volume());
    let mut best = Rational::zero();
    for d in 1..=t.min(period) {
        let first = &volume - q_oracle(steps, &int(period - d), speed);
        let later = int((t - d) / period) * &volume;
        let total = first + later;
        if total > best {
            best = total;
        }
    }
    best
}

pub fn utilization(task: &DagTask) -> Rational {
    rat(task.dag.volume() as i64, task.period as i64)
}

pub fn tensity(task: &DagTask) -> Rational {
    rat(longest_path_dfs(&task.dag) as i64, task.period as i64)
}

/// Unit-step G-RM / G-EDF reference simulator under synchronous periodic
/// release. Runs every job to completion and returns
/// `(task id, job index, release, finish)` in release order, plus the first
/// `(task id, job index)` found unfinished at its deadline.
pub fn naive_sim(set: &dagsched::TaskSet, m: usize, edf: bool, horizon: u64) -> (Vec<(u32, u32, u64, u64)>, Option<(u32, u32)>) {
    struct Job {
        task: usize,
        index: u32,
        release: u64,
        remaining: Vec<u64>,
        done: Vec<bool>,
        finish: Option<u64>,
    }
    let tasks = set.tasks();
    let mut jobs: Vec<Job> = Vec::new();
    let mut first_miss = None;
    let settle = |job: &mut Job, dag: &Dag| loop {
        let mut changed = false;
        for v in 0..dag.len() {
            if !job.done[v] && job.remaining[v] == 0 && dag.preds(v).iter().all(|&p| job.done[p]) {
                job.done[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    };
    let mut t = 0;
    loop {
        for (i, task) in tasks.iter().enumerate() {
            if t < horizon && t % task.period == 0 {
                let dag = &task.dag;
                let mut job = Job {
                    task: i,
                    index: (t / task.period) as u32,
                    release: t,
                    remaining: (0..dag.len()).map(|v| dag.wcet(v)).collect(),
                    done: vec![false; dag.len()],
                    finish: None,
                };
                settle(&mut job, dag);
                if job.done.iter().all(|&d| d) {
                    job.finish = Some(t);
                }
                jobs.push(job);
            }
        }
        for job in &jobs {
            let task = &tasks[job.task];
            if job.finish.is_none() && job.release + task.period == t && first_miss.is_none() {
                first_miss = Some((task.id, job.index));
            }
        }
        if t >= horizon && jobs.iter().all(|j| j.finish.is_some()) {
            break;
        }
        let mut order: Vec<usize> = (0..jobs.len()).filter(|&j| jobs[j].finish.is_none()).collect();
        order.sort_by_key(|&j| {
            let task = &tasks[jobs[j].task];
            let primary = if edf { jobs[j].release + task.period } else { task.period };
            (primary, task.id, jobs[j].release)
        });
        let mut free = m;
        let mut running = Vec::new();
        for &j in &order {
            let dag = &tasks[jobs[j].task].dag;
            for v in 0..dag.len() {
                if free == 0 {
                    break;
                }
                let job = &jobs[j];
                if !job.done[v] && job.remaining[v] > 0 && dag.preds(v).iter().all(|&p| job.done[p]) {
                    running.push((j, v));
                    free -= 1;
                }
            }
        }
        for &(j, v) in &running {
            jobs[j].remaining[v] -= 1;
        }
        t += 1;
        for &(j, _) in &running {
            let dag = &tasks[jobs[j].task].dag;
            settle(&mut jobs[j], dag);
            if jobs[j].finish.is_none() && jobs[j].done.iter().all(|&d| d) {
                jobs[j].finish = Some(t);
            }
        }
    }
    let rows = jobs.iter().map(|j| (tasks[j.task].id, j.index, j.release, j.finish.unwrap())).collect();
    (rows, first_miss)
}

fn sum(values: impl Iterator<Item = Rational>) -> Rational {
    values.fold(Rational::zero(), |a, b| a + b)
}

pub fn total_utilization(set: &dagsched::TaskSet) -> Rational {
    sum(set.tasks().iter().map(utilization))
}

pub fn gamma_max(set: &dagsched::TaskSet) -> Rational {
    set.tasks().iter().map(tensity).max().unwrap()
}

fn feasible_so_far(set: &dagsched::TaskSet, m: u32) -> bool {
    gamma_max(set) <= int(1) && total_utilization(set) <= int(m as u64)
}

pub fn oracle_rm_ut(set: &dagsched::TaskSet, m: u32) -> bool {
    let g = gamma_max(set);
    let u = total_utilization(set) / int(m as u64);
    feasible_so_far(set, m) && u * (int(4) - &g) <= (int(1) - &g) * (int(2) - &g)
}

pub fn oracle_rm_tighter(set: &dagsched::TaskSet, m: u32) -> bool {
    if !feasible_so_far(set, m) {
        return false;
    }
    let lhs = sum(set.tasks().iter().map(|t| {
        let (u, g) = (utilization(t), tensity(t));
        if u > int(1) {
            (int(2) * u - &g) / (int(2) - g)
        } else {
            u
        }
    }));
    let mm = int(m as u64);
    lhs <= &mm - gamma_max(set) * (&mm - int(2)) - total_utilization(set)
}

/// Exact work test with the supremum taken over the grid `[T, 5T]` and work
/// from [`work_oracle`].
pub fn oracle_rm_work(set: &dagsched::TaskSet, m: u32) -> bool {
    if !feasible_so_far(set, m) {
        return false;
    }
    let one = int(1);
    let sup = |task: &DagTask, delta: u64| -> Rational {
        let steps = unit_steps(&task.dag);
        (task.period..=5 * task.period)
            .map(|t| (work_oracle(task, &steps, t, &one) + int(delta)) / int(t))
            .max()
            .unwrap()
    };
    set.tasks().iter().all(|k| {
        let lhs = sum(set.tasks().iter().filter(|i| i.period <= k.period).map(|i| {
            if i.id == k.id {
                sup(i, 0)
            } else {
                sup(i, i.dag.volume())
            }
        }));
        lhs <= int(m as u64) - tensity(k) * int(m as u64 - 1)
    })
}

/// `x <= 1/ρ` decided exactly for `ρ = (a + √r) / d`, i.e. `√r·x <= d - a·x`.
fn below_inverse(x: &Rational, a: u64, r: u64, d: u64) -> bool {
    let rhs = int(d) - int(a) * x;
    rhs >= Rational::zero() && int(r) * x * x <= &rhs * &rhs
}

/// Capacity augmentation test with `ρ = (a + √r) / d`.
pub fn oracle_cab(set: &dagsched::TaskSet, m: u32, a: u64, r: u64, d: u64) -> bool {
    feasible_so_far(set, m)
        && set.tasks().iter().all(|t| below_inverse(&tensity(t), a, r, d))
        && below_inverse(&(total_utilization(set) / int(m as u64)), a, r, d)
}
