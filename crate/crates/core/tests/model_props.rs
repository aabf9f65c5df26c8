mod common;

use common::longest_path_dfs;
use dagsched::io::{parse_taskset, to_canonical_string};
use dagsched::model::{longest_path_by_enumeration, RawEdge, RawTask, RawVertex};
use dagsched::{validate, DagTask, TaskSet};
use proptest::prelude::*;

/// Raw task over ids `1..=n` with forward edges only (so always acyclic),
/// then relabeled through `perm`.
fn raw_task() -> impl Strategy<Value = (RawTask, Vec<u32>)> {
    (1..=10usize)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(1..=20i64, n),
                proptest::collection::vec(prop::bool::weighted(0.3), n * (n - 1) / 2),
                Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle(),
                1..500i64,
            )
        })
        .prop_map(|(wcets, mask, perm, period)| {
            let n = wcets.len();
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if mask[k] {
                        edges.push(RawEdge { src: a as u32 + 1, dst: b as u32 + 1 });
                    }
                    k += 1;
                }
            }
            let vertices = wcets.iter().enumerate().map(|(i, &w)| RawVertex { id: i as u32 + 1, wcet: w }).collect();
            (RawTask { id: 1, period, vertices, edges }, perm)
        })
}

fn relabel(raw: &RawTask, perm: &[u32]) -> RawTask {
    let map = |id: u32| perm[id as usize - 1];
    RawTask {
        id: raw.id,
        period: raw.period,
        vertices: raw.vertices.iter().map(|v| RawVertex { id: map(v.id), wcet: v.wcet }).collect(),
        edges: raw.edges.iter().map(|e| RawEdge { src: map(e.src), dst: map(e.dst) }).collect(),
    }
}

proptest! {
    #[test]
    fn metrics_match_enumeration((raw, _) in raw_task()) {
        let task = validate(&raw).unwrap();
        let dag = &task.dag;
        let volume: i64 = raw.vertices.iter().map(|v| v.wcet).sum();
        prop_assert_eq!(dag.volume() as i64, volume);
        prop_assert!(dag.critical_path() <= dag.volume());
        prop_assert_eq!(dag.critical_path(), longest_path_dfs(dag));
        prop_assert_eq!(longest_path_by_enumeration(dag), longest_path_dfs(dag));
    }

    #[test]
    fn normalize_is_idempotent_and_preserves_metrics((raw, _) in raw_task()) {
        let task = validate(&raw).unwrap();
        let once = task.normalize();
        prop_assert!(once.dag.is_normalized());
        prop_assert_eq!(once.dag.sources().len(), 1);
        prop_assert_eq!(once.dag.sinks().len(), 1);
        prop_assert_eq!(&once.normalize(), &once);
        prop_assert_eq!(once.metrics(), task.metrics());
        prop_assert!(once.dag.len() <= task.dag.len() + 2);
    }

    #[test]
    fn relabeling_keeps_metrics((raw, perm) in raw_task()) {
        let a = validate(&raw).unwrap();
        let b = validate(&relabel(&raw, &perm)).unwrap();
        prop_assert_eq!(a.metrics(), b.metrics());
        prop_assert_eq!(a.normalize().metrics(), b.normalize().metrics());
    }

    #[test]
    fn reversed_edge_closes_a_cycle((raw, _) in raw_task()) {
        prop_assume!(!raw.edges.is_empty());
        let mut cyclic = raw.clone();
        let e = &raw.edges[0];
        cyclic.edges.push(RawEdge { src: e.dst, dst: e.src });
        let errors = validate(&cyclic).unwrap_err();
        prop_assert!(errors.iter().any(|e| e.code() == "CYCLE_DETECTED"));
    }

    #[test]
    fn file_round_trip((raw, perm) in raw_task()) {
        let tasks: Vec<DagTask> = vec![validate(&raw).unwrap().normalize(), DagTask { id: 2, ..validate(&relabel(&raw, &perm)).unwrap().normalize() }];
        let set = TaskSet::new(tasks).unwrap();
        let text = to_canonical_string(&set);
        let back = parse_taskset(&text).unwrap();
        prop_assert_eq!(to_canonical_string(&back), text);
        for (x, y) in set.tasks().iter().zip(back.tasks()) {
            prop_assert_eq!(x.metrics(), y.metrics());
        }
    }
}

#[test]
fn validation_errors_carry_codes() {
    let raw = RawTask {
        id: 3,
        period: -1,
        vertices: vec![RawVertex { id: 1, wcet: 0 }, RawVertex { id: 2, wcet: 4 }],
        edges: vec![RawEdge { src: 1, dst: 9 }],
    };
    let codes: Vec<_> = validate(&raw).unwrap_err().iter().map(|e| e.code()).collect();
    for code in ["NONPOSITIVE_PERIOD", "NONPOSITIVE_WCET", "DANGLING_EDGE"] {
        assert!(codes.contains(&code), "{code} missing from {codes:?}");
    }
    let empty = RawTask { id: 1, period: 5, vertices: vec![], edges: vec![] };
    assert!(validate(&empty).unwrap_err().iter().any(|e| e.code() == "EMPTY_GRAPH"));
}
