//! Seeded random task-set generation.
//!
//! Graphs are Erdős–Rényi `G(n, p)` over a random vertex permutation: every
//! pair `(a, b)` with `a` before `b` in the permutation gets the edge `a -> b`
//! with probability `p`, so the result is acyclic by construction. Weakly
//! connected components are then chained with one forward edge each, and the
//! graph is normalized. A task's period comes from a sampled tensity target,
//! `T = ceil(L / γ)`.
//!
//! # Reproducibility
//!
//! All randomness comes from ChaCha8 (`rand_chacha`). A task set is drawn from
//! a set-level stream seeded with `seed`; task `i` (0-based) uses its own
//! stream seeded with [`derive_seed`]`(seed, i + 1)`. Draw order inside each
//! stream is fixed and does not depend on overrides, so two sets that share a
//! seed but differ in, say, the tensity upper bound share their graphs.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Dag, DagTask, ModelError, TaskId, TaskSet, Time, Vertex, VertexId};
use crate::Rational;

/// Denominator of every sampled tensity bound and utilization.
pub const MILLI: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("normalized utilization must be positive")]
    NonpositiveUtilization,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntRange {
    pub lo: u64,
    pub hi: u64,
}

impl IntRange {
    pub const fn new(lo: u64, hi: u64) -> IntRange {
        IntRange { lo, hi }
    }

    pub const fn single(value: u64) -> IntRange {
        IntRange { lo: value, hi: value }
    }

    pub fn contains(&self, value: u64) -> bool {
        self.lo <= value && value <= self.hi
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// 50–150 vertices, WCETs 20–50, 2–10 tasks.
    Paper,
    /// 10–30 vertices, WCETs 5–15, 2–6 tasks.
    Desk,
}

impl Preset {
    pub fn from_name(name: &str) -> Option<Preset> {
        match name {
            "paper" => Some(Preset::Paper),
            "desk" => Some(Preset::Desk),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub n_tasks: IntRange,
    pub n_vertices: IntRange,
    pub wcet: IntRange,
    pub edge_prob: Ratio<u64>,
    /// Upper bound of per-task tensity, in thousandths.
    pub gamma_up_milli: IntRange,
    /// Target normalized utilization U, in thousandths; drives `m`.
    pub utilization_milli: IntRange,
}

impl GenConfig {
    pub fn preset(preset: Preset, seed: u64) -> GenConfig {
        let (n_tasks, n_vertices, wcet) = match preset {
            Preset::Paper => (IntRange::new(2, 10), IntRange::new(50, 150), IntRange::new(20, 50)),
            Preset::Desk => (IntRange::new(2, 6), IntRange::new(10, 30), IntRange::new(5, 15)),
        };
        GenConfig {
            seed,
            n_tasks,
            n_vertices,
            wcet,
            edge_prob: Ratio::new(1, 10),
            gamma_up_milli: IntRange::new(100, 600),
            utilization_milli: IntRange::new(100, 600),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: &str| Err(GenError::InvalidConfig(msg.to_string()));
        for (name, r) in [("n_tasks", self.n_tasks), ("n_vertices", self.n_vertices), ("wcet", self.wcet)] {
            if r.lo > r.hi || r.lo == 0 {
                return bad(&format!("{name} range must be nonempty and positive"));
            }
        }
        if self.edge_prob.is_zero() || self.edge_prob >= Ratio::one() {
            return bad("edge probability must lie in (0, 1)");
        }
        let g = self.gamma_up_milli;
        if g.lo == 0 || g.lo > g.hi || g.hi > MILLI {
            return bad("gamma_up range must lie in (0, 1]");
        }
        let u = self.utilization_milli;
        if u.lo == 0 || u.lo > u.hi {
            return bad("utilization range must be nonempty and positive");
        }
        Ok(())
    }
}

/// SplitMix64 finalizer applied to `seed` mixed with `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact Bernoulli trial with rational probability.
fn bernoulli(rng: &mut impl Rng, p: &Ratio<u64>) -> bool {
    rng.gen_range(0..*p.denom()) < *p.numer()
}

/// Draws one normalized graph (no period yet).
pub fn gen_dag(rng: &mut impl Rng, cfg: &GenConfig) -> Dag {
    let n = cfg.n_vertices.sample(rng) as usize;
    let vertices: Vec<Vertex> = (0..n)
        .map(|i| Vertex { id: i as VertexId + 1, wcet: cfg.wcet.sample(rng), synthetic: false })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut edges = Vec::new();
    let mut components = DisjointSets::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if bernoulli(rng, &cfg.edge_prob) {
                edges.push((order[a], order[b]));
                components.union(order[a], order[b]);
            }
        }
    }
    // Position of the earliest vertex of each component, in permutation order.
    let mut firsts = Vec::new();
    let mut seen = vec![false; n];
    for &v in &order {
        let root = components.find(v);
        if !seen[root] {
            seen[root] = true;
            firsts.push(v);
        }
    }
    for pair in firsts.windows(2) {
        edges.push((pair[0], pair[1]));
    }

    let edges: Vec<_> = edges.iter().map(|&(a, b)| (vertices[a].id, vertices[b].id)).collect();
    Dag::new(vertices, &edges).expect("forward edges over a permutation are acyclic").normalize()
}

/// `T = ceil(L / γ)`, so the realized tensity never exceeds `gamma_target`.
pub fn assign_period(dag: Dag, id: TaskId, gamma_target: &Rational) -> DagTask {
    assert!(
        *gamma_target > Rational::zero() && *gamma_target <= Rational::one(),
        "tensity target must lie in (0, 1]"
    );
    let length = BigInt::from(dag.critical_path().max(1));
    let period = (length * gamma_target.denom()).div_ceil(gamma_target.numer());
    let period = period.to_u64().expect("period fits in u64");
    DagTask { id, dag, period }
}

/// `m = ceil(U_Σ / U)`, at least 1.
pub fn processors_for(set: &TaskSet, utilization: &Rational) -> Result<u32, GenError> {
    if *utilization <= Rational::zero() {
        return Err(GenError::NonpositiveUtilization);
    }
    let m = (set.total_utilization() / utilization).ceil().to_integer();
    Ok(m.to_u32().unwrap_or(u32::MAX).max(1))
}

/// Values that replace a sampled quantity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub n_tasks: Option<u64>,
    pub gamma_up: Option<Rational>,
    pub utilization: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedSet {
    pub set: TaskSet,
    pub gamma_up: Rational,
    pub utilization: Rational,
    pub processors: u32,
}

fn milli(value: u64) -> Rational {
    Rational::new(value.into(), MILLI.into())
}

pub fn gen_taskset(seed: u64, cfg: &GenConfig) -> Result<GeneratedSet, GenError> {
    gen_taskset_with(seed, cfg, &Overrides::default())
}

pub fn gen_taskset_with(seed: u64, cfg: &GenConfig, overrides: &Overrides) -> Result<GeneratedSet, GenError> {
    cfg.validate()?;
    let mut rng = rng_for(seed);
    let n_sampled = cfg.n_tasks.sample(&mut rng);
    let gamma_sampled = milli(cfg.gamma_up_milli.sample(&mut rng));
    let util_sampled = milli(cfg.utilization_milli.sample(&mut rng));

    let n = overrides.n_tasks.unwrap_or(n_sampled);
    let gamma_up = overrides.gamma_up.clone().unwrap_or(gamma_sampled);
    let utilization = overrides.utilization.clone().unwrap_or(util_sampled);
    if gamma_up <= Rational::zero() || gamma_up > Rational::one() {
        return Err(GenError::InvalidConfig("gamma_up must lie in (0, 1]".into()));
    }

    let tasks = (0..n)
        .map(|i| {
            let mut task_rng = rng_for(derive_seed(seed, i + 1));
            let dag = gen_dag(&mut task_rng, cfg);
            // γ uniform on the grid {γ_up/1000, 2γ_up/1000, ..., γ_up}.
            let share = milli(task_rng.gen_range(1..=MILLI));
            assign_period(dag, i as TaskId + 1, &(&gamma_up * share))
        })
        .collect();
    let set = TaskSet::new(tasks)?;
    let processors = processors_for(&set, &utilization)?;
    Ok(GeneratedSet { set, gamma_up, utilization, processors })
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb.max(ra)] = ra.min(rb);
        }
    }
}

/// Period of a single task whose critical path is `length` under target `γ`.
pub fn period_for(length: Time, gamma_target: &Rational) -> Time {
    let dag = Dag::new(vec![Vertex { id: 1, wcet: length.max(1), synthetic: false }], &[])
        .expect("single vertex is valid");
    assign_period(dag, 0, gamma_target).period
}
