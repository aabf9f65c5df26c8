mod common;

use common::naive_sim;
use dagsched::analysis::{SetAnalysis, TestKind};
use dagsched::model::Dag;
use dagsched::sim::{falsify, simulate, write_trace, Policy, ReleasePattern, SimConfig};
use dagsched::taskgen::{derive_seed, gen_taskset, GenConfig, IntRange, Preset};
use dagsched::{DagTask, TaskSet};
use proptest::prelude::*;

fn small_task(id: u32) -> impl Strategy<Value = DagTask> {
    (1..=6usize)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(1..=4u64, n),
                proptest::collection::vec(prop::bool::weighted(0.35), n * (n - 1) / 2),
                0u64..12,
            )
        })
        .prop_map(move |(wcets, mask, slack)| {
            let n = wcets.len();
            let vertices: Vec<_> = wcets.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)).collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if mask[k] {
                        edges.push((a as u32 + 1, b as u32 + 1));
                    }
                    k += 1;
                }
            }
            let probe = DagTask::new(id, &vertices, &edges, 1).unwrap().normalize();
            let period = probe.dag.critical_path() + slack;
            DagTask { period, ..probe }
        })
}

fn small_set() -> impl Strategy<Value = TaskSet> {
    (small_task(1), small_task(2), small_task(3), 1..=3usize).prop_map(|(a, b, c, n)| {
        TaskSet::new(vec![a, b, c].into_iter().take(n).collect()).unwrap()
    })
}

/// Largest set of pairwise unreachable vertices, by brute force.
fn max_antichain(dag: &Dag) -> usize {
    let n = dag.len();
    let mut reach = vec![vec![false; n]; n];
    for &v in dag.topological_order().iter().rev() {
        for &s in dag.succs(v) {
            reach[v][s] = true;
            for w in 0..n {
                if reach[s][w] {
                    reach[v][w] = true;
                }
            }
        }
    }
    (0u32..1 << n)
        .filter(|mask| {
            let members: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            members.iter().all(|&a| members.iter().all(|&b| a == b || !reach[a][b]))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn event_simulation_matches_unit_steps(set in small_set(), m in 1u32..=4, edf in any::<bool>(), horizon in 1u64..60) {
        let policy = if edf { Policy::Edf } else { Policy::Rm };
        let mut cfg = SimConfig::new(policy, horizon);
        cfg.stop_at_first_miss = false;
        let result = simulate(&set, m, &cfg).unwrap();
        let (expected, first_miss) = naive_sim(&set, m as usize, edf, horizon);
        let got: Vec<_> = result.jobs.iter().map(|j| (j.task, j.index, j.release, j.finish.unwrap())).collect();
        prop_assert_eq!(got, expected);
        prop_assert_eq!(result.first_miss.map(|f| (f.task, f.job)), first_miss);

        // Conservation audit.
        let per_job: u64 = result.jobs.iter().map(|j| j.completed_work).sum();
        prop_assert_eq!(result.executed_work, per_job);
        prop_assert_eq!(result.busy.iter().sum::<u64>(), per_job);
        let demand: u64 = result.jobs.iter().map(|j| set.task(j.task).unwrap().dag.volume()).sum();
        prop_assert_eq!(per_job, demand);
    }

    #[test]
    fn work_conserving_and_deterministic(set in small_set(), m in 1u32..=4, horizon in 1u64..60) {
        let mut cfg = SimConfig::new(Policy::Rm, horizon);
        cfg.record_trace = true;
        let a = simulate(&set, m, &cfg).unwrap();
        prop_assert_eq!(&a, &simulate(&set, m, &cfg).unwrap());
        for seg in a.trace.as_ref().unwrap() {
            prop_assert_eq!(seg.slots.len(), seg.eligible.min(m as usize));
        }
    }

    #[test]
    fn alone_with_enough_processors_takes_critical_path(task in small_task(1)) {
        let width = max_antichain(&task.dag) as u32;
        let l = task.dag.critical_path();
        let set = TaskSet::new(vec![task]).unwrap();
        let result = simulate(&set, width.max(1), &SimConfig::new(Policy::Rm, 1)).unwrap();
        prop_assert_eq!(result.jobs[0].finish, Some(l));
    }

    #[test]
    fn verdicts_ignore_task_ids(set in small_set(), m in 1u32..=4) {
        // Relabel ids in reverse; priorities among equal periods change but
        // the miss / no-miss outcome of an accepted set must not.
        let n = set.len() as u32;
        let relabeled = TaskSet::new(set.tasks().iter().map(|t| DagTask { id: n + 1 - t.id, ..t.clone() }).collect()).unwrap();
        let ctx = SetAnalysis::new(&set).unwrap();
        let ctx2 = SetAnalysis::new(&relabeled).unwrap();
        for kind in TestKind::ALL {
            prop_assert_eq!(kind.run(&ctx, m).decision, kind.run(&ctx2, m).decision);
        }
        if TestKind::RmWork.run(&ctx, m).accepts() {
            let h = set.hyperperiod().unwrap().min(2000);
            prop_assert!(simulate(&set, m, &SimConfig::new(Policy::Rm, h)).unwrap().schedulable());
            prop_assert!(simulate(&relabeled, m, &SimConfig::new(Policy::Rm, h)).unwrap().schedulable());
        }
    }
}

#[test]
fn trace_has_one_line_per_step() {
    let set = TaskSet::new(vec![dagsched::fixtures::fig2_task()]).unwrap();
    let mut cfg = SimConfig::new(Policy::Rm, 15);
    cfg.record_trace = true;
    let result = simulate(&set, 3, &cfg).unwrap();
    let mut out = Vec::new();
    write_trace(result.trace.as_ref().unwrap(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 15);
    assert_eq!(lines[0], "0 (0,1.0,1)");
    assert_eq!(lines[2], "2 (0,1.0,2) (1,1.0,3) (2,1.0,4)");
    assert_eq!(lines[9], "9 (0,1.0,7)");
    assert_eq!(lines[10], "10");
}

#[test]
fn offsets_and_explicit_releases() {
    let set = TaskSet::new(vec![dagsched::fixtures::single_vertex(3, 5)]).unwrap();
    let mut cfg = SimConfig::new(Policy::Rm, 20);
    cfg.pattern = ReleasePattern::Offsets(vec![2]);
    let result = simulate(&set, 1, &cfg).unwrap();
    let releases: Vec<_> = result.jobs.iter().map(|j| j.release).collect();
    assert_eq!(releases, vec![2, 7, 12, 17]);
    cfg.pattern = ReleasePattern::Explicit(vec![vec![0, 9, 30]]);
    let result = simulate(&set, 1, &cfg).unwrap();
    let releases: Vec<_> = result.jobs.iter().map(|j| j.release).collect();
    assert_eq!(releases, vec![0, 9]);
    assert!(result.jobs.iter().all(|j| j.response_time() == Some(3)));
}

#[test]
fn accepted_desk_sets_survive_falsification() {
    let mut cfg = GenConfig::preset(Preset::Desk, 0);
    cfg.n_vertices = IntRange::new(5, 12);
    let mut checked = 0;
    for i in 0..60 {
        let generated = gen_taskset(derive_seed(2024, i), &cfg).unwrap();
        let ctx = SetAnalysis::new(&generated.set).unwrap();
        if TestKind::RmWork.run(&ctx, generated.processors).accepts() {
            let found = falsify(&generated.set, generated.processors, Policy::Rm, 2, i, 20_000).unwrap();
            assert!(found.is_none(), "set {i}: {:?}", found.map(|c| c.miss));
            checked += 1;
        }
    }
    assert!(checked > 10);
}
