//! Schedulability tests for G-RM (and G-EDF, for comparison).
//!
//! Every test is sufficient only: [`Decision::Schedulable`] is a guarantee,
//! [`Decision::Unknown`] claims nothing. The one exception is
//! [`necessary_conditions`], which can prove a set infeasible.
//!
//! All comparisons are exact. Irrational constants enter through
//! [`CabConstant::threshold`], which rounds towards rejection.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bounds::{self, CabConstant};
use crate::model::{DagTask, SetMetrics, TaskMetrics, TaskSet};
use crate::work::UnitWorkProfile;
use crate::Rational;

/// Largest processor count tried by the minimum-`m` search.
pub const MIN_M_SEARCH_CAP: u32 = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("task set is empty")]
    EmptyTaskSet,
    #[error("processor count must be at least 1")]
    ZeroProcessors,
    #[error("UNKNOWN_TEST_NAME: no test named `{0}`")]
    UnknownTest(String),
    #[error("no tests requested")]
    NoTests,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Schedulable,
    Unknown,
    /// Necessary conditions hold; says nothing about a particular scheduler.
    FeasibleSoFar,
    Infeasible,
}

impl Decision {
    pub fn accepts(self) -> bool {
        matches!(self, Decision::Schedulable | Decision::FeasibleSoFar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Schedulable => "SCHEDULABLE",
            Decision::Unknown => "UNKNOWN",
            Decision::FeasibleSoFar => "FEASIBLE-SO-FAR",
            Decision::Infeasible => "INFEASIBLE",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One inequality `lhs <= rhs` that a test checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub label: String,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl Check {
    pub fn new(label: impl Into<String>, lhs: Rational, rhs: Rational) -> Check {
        Check { label: label.into(), lhs, rhs }
    }

    pub fn margin(&self) -> Rational {
        &self.rhs - &self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub test: String,
    pub decision: Decision,
    /// Smallest `rhs - lhs` over all checks.
    pub margin: Rational,
    pub checks: Vec<Check>,
    pub reason: Option<String>,
}

impl Verdict {
    fn from_checks(test: &str, checks: Vec<Check>) -> Verdict {
        let margin = checks.iter().map(Check::margin).min().unwrap_or_else(Rational::zero);
        let decision = if checks.iter().all(Check::holds) { Decision::Schedulable } else { Decision::Unknown };
        Verdict { test: test.to_string(), decision, margin, checks, reason: None }
    }

    pub fn accepts(&self) -> bool {
        self.decision.accepts()
    }
}

fn int(value: impl Into<BigInt>) -> Rational {
    Rational::from_integer(value.into())
}

/// Per-set data shared by every test: metrics, and the work-ratio suprema
/// needed by the exact test (computed on first use).
pub struct SetAnalysis<'a> {
    set: &'a TaskSet,
    metrics: Vec<TaskMetrics>,
    summary: SetMetrics,
    suprema: OnceLock<Vec<(Rational, Rational)>>,
}

impl<'a> SetAnalysis<'a> {
    pub fn new(set: &'a TaskSet) -> Result<Self, AnalysisError> {
        if set.is_empty() {
            return Err(AnalysisError::EmptyTaskSet);
        }
        let metrics: Vec<_> = set.tasks().iter().map(DagTask::metrics).collect();
        let summary = SetMetrics::from_task_metrics(&metrics, 1);
        Ok(SetAnalysis { set, metrics, summary, suprema: OnceLock::new() })
    }

    pub fn set(&self) -> &TaskSet {
        self.set
    }

    pub fn metrics(&self) -> &[TaskMetrics] {
        &self.metrics
    }

    pub fn total_utilization(&self) -> &Rational {
        &self.summary.total_utilization
    }

    pub fn gamma_max(&self) -> &Rational {
        &self.summary.gamma_max
    }

    pub fn normalized_utilization(&self, m: u32) -> Rational {
        self.total_utilization() / int(m)
    }

    /// `(sup (work+0)/t, sup (work+C)/t)` over `t >= T` for each task.
    pub fn suprema(&self) -> &[(Rational, Rational)] {
        self.suprema.get_or_init(|| {
            self.set
                .tasks()
                .iter()
                .map(|task| {
                    let profile = UnitWorkProfile::new(task);
                    (profile.sup_ratio(0).value, profile.sup_ratio(profile.volume()).value)
                })
                .collect()
        })
    }

    fn tensity_checks(&self, limit: &Rational, label: &str) -> Vec<Check> {
        self.set
            .tasks()
            .iter()
            .zip(&self.metrics)
            .map(|(task, m)| Check::new(format!("task {}: γ ≤ {label}", task.id), m.tensity.clone(), limit.clone()))
            .collect()
    }
}

/// Lemma-1 style necessary conditions: every `L_i <= T_i` and `U_Σ <= m`.
pub fn necessary_conditions(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let mut checks = ctx.tensity_checks(&Rational::one(), "1");
    checks.push(Check::new("U_Σ ≤ m", ctx.total_utilization().clone(), int(m)));
    let mut verdict = Verdict::from_checks("necessary", checks);
    verdict.decision = if verdict.decision == Decision::Schedulable {
        Decision::FeasibleSoFar
    } else {
        Decision::Infeasible
    };
    if verdict.decision == Decision::Infeasible {
        let failed: Vec<_> = verdict.checks.iter().filter(|c| !c.holds()).map(|c| c.label.clone()).collect();
        verdict.reason = Some(format!("violated: {}", failed.join(", ")));
    }
    verdict
}

/// Returns an UNKNOWN verdict carrying the reason when the necessary
/// conditions already fail.
fn infeasible_guard(ctx: &SetAnalysis<'_>, m: u32, test: &str) -> Option<Verdict> {
    let nec = necessary_conditions(ctx, m);
    if nec.decision == Decision::Infeasible {
        Some(Verdict {
            test: test.to_string(),
            decision: Decision::Unknown,
            margin: nec.margin,
            reason: nec.reason.map(|r| format!("necessary conditions {r}")),
            checks: nec.checks,
        })
    } else {
        None
    }
}

fn threshold_test(ctx: &SetAnalysis<'_>, m: u32, test: &str, threshold: Rational, label: &str) -> Verdict {
    if let Some(v) = infeasible_guard(ctx, m, test) {
        return v;
    }
    let mut checks = ctx.tensity_checks(&Rational::one(), "1");
    checks.push(Check::new(format!("U ≤ {label}"), ctx.normalized_utilization(m), threshold));
    Verdict::from_checks(test, checks)
}

/// `U <= (1-γ_max)(2-γ_max)/(4-γ_max)` and every `L_i <= T_i`.
pub fn rm_ut(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let threshold = bounds::rm_ut_threshold(ctx.gamma_max());
    threshold_test(ctx, m, TestKind::RmUt.name(), threshold, "(1-γ)(2-γ)/(4-γ)")
}

/// `U <= (1-γ_max)^2 / 2` and every `L_i <= T_i`.
pub fn rm_basic(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let threshold = bounds::rm_basic_threshold(ctx.gamma_max());
    threshold_test(ctx, m, TestKind::RmBasic.name(), threshold, "(1-γ)²/2")
}

/// G-EDF: `U <= (1-γ_max)^2` and every `L_i <= T_i`.
pub fn edf_ut(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let threshold = bounds::edf_ut_threshold(ctx.gamma_max());
    threshold_test(ctx, m, TestKind::EdfUt.name(), threshold, "(1-γ)²")
}

/// Heavy tasks contribute `(2u-γ)/(2-γ)`, light ones `u`; the sum must not
/// exceed `m - γ_max(m-2) - U_Σ`.
pub fn rm_tighter(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let test = TestKind::RmTighter.name();
    if let Some(v) = infeasible_guard(ctx, m, test) {
        return v;
    }
    let lhs: Rational = ctx
        .metrics()
        .iter()
        .map(|t| bounds::geq_period_work_bound(&t.utilization, &t.tensity).expect("γ ≤ 1 after the guard"))
        .sum();
    let rhs = int(m) - ctx.gamma_max() * (int(m) - int(2)) - ctx.total_utilization();
    Verdict::from_checks(test, vec![Check::new("Σ heavy/light bound ≤ m-γ(m-2)-U_Σ", lhs, rhs)])
}

/// The polynomial work-function test: for every task `k`,
/// `Σ_{T_i <= T_k} sup_{t >= T_i} λ_ik(t)/t <= m - γ_k(m-1)`, where
/// `λ_ik = work_i(t, 1) + C_i` for `i != k` and `λ_kk = work_k(t, 1)`.
pub fn rm_work_exact(ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
    let test = TestKind::RmWork.name();
    if let Some(v) = infeasible_guard(ctx, m, test) {
        return v;
    }
    let tasks = ctx.set().tasks();
    let suprema = ctx.suprema();
    let checks = tasks
        .iter()
        .enumerate()
        .map(|(k, task_k)| {
            let lhs: Rational = tasks
                .iter()
                .enumerate()
                .filter(|(_, task_i)| task_i.period <= task_k.period)
                .map(|(i, _)| if i == k { suprema[i].0.clone() } else { suprema[i].1.clone() })
                .sum();
            let rhs = int(m) - &ctx.metrics()[k].tensity * int(m - 1);
            Check::new(format!("task {}: Σ sup λ/t ≤ m-γ(m-1)", task_k.id), lhs, rhs)
        })
        .collect();
    Verdict::from_checks(test, checks)
}

/// Capacity augmentation test: every `γ_i <= 1/ρ` and `U <= 1/ρ`.
pub fn cab(ctx: &SetAnalysis<'_>, m: u32, which: CabConstant, test: &str) -> Verdict {
    if let Some(v) = infeasible_guard(ctx, m, test) {
        return v;
    }
    let limit = which.threshold();
    let mut checks = ctx.tensity_checks(&limit, "1/ρ");
    checks.push(Check::new("U ≤ 1/ρ", ctx.normalized_utilization(m), limit));
    Verdict::from_checks(test, checks)
}

/// Built-in tests, by CLI name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    RmUt,
    RmTighter,
    RmWork,
    RmBasic,
    CabNew,
    CabLi,
    EdfUt,
    EdfCab,
}

impl TestKind {
    pub const ALL: [TestKind; 8] = [
        TestKind::RmUt,
        TestKind::RmTighter,
        TestKind::RmWork,
        TestKind::RmBasic,
        TestKind::CabNew,
        TestKind::CabLi,
        TestKind::EdfUt,
        TestKind::EdfCab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::RmUt => "rm-ut",
            TestKind::RmTighter => "rm-tighter",
            TestKind::RmWork => "rm-work",
            TestKind::RmBasic => "rm-basic",
            TestKind::CabNew => "cab-new",
            TestKind::CabLi => "cab-li",
            TestKind::EdfUt => "edf-ut",
            TestKind::EdfCab => "edf-cab",
        }
    }

    pub fn from_name(name: &str) -> Option<TestKind> {
        TestKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn run(self, ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
        match self {
            TestKind::RmUt => rm_ut(ctx, m),
            TestKind::RmTighter => rm_tighter(ctx, m),
            TestKind::RmWork => rm_work_exact(ctx, m),
            TestKind::RmBasic => rm_basic(ctx, m),
            TestKind::CabNew => cab(ctx, m, CabConstant::RmNew, self.name()),
            TestKind::CabLi => cab(ctx, m, CabConstant::RmLi, self.name()),
            TestKind::EdfUt => edf_ut(ctx, m),
            TestKind::EdfCab => cab(ctx, m, CabConstant::Edf, self.name()),
        }
    }
}

/// Extension point for tests beyond the built-ins.
pub trait SchedulabilityTest: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, ctx: &SetAnalysis<'_>, m: u32) -> Verdict;
}

impl SchedulabilityTest for TestKind {
    fn name(&self) -> &str {
        TestKind::name(*self)
    }

    fn run(&self, ctx: &SetAnalysis<'_>, m: u32) -> Verdict {
        TestKind::run(*self, ctx, m)
    }
}

/// Named-test registry.
#[derive(Clone)]
pub struct TestRegistry {
    tests: Vec<Arc<dyn SchedulabilityTest>>,
}

impl Default for TestRegistry {
    fn default() -> Self {
        TestRegistry::builtin()
    }
}

impl TestRegistry {
    pub fn builtin() -> TestRegistry {
        TestRegistry {
            tests: TestKind::ALL.into_iter().map(|k| Arc::new(k) as Arc<dyn SchedulabilityTest>).collect(),
        }
    }

    /// Adds `test`, replacing any existing test with the same name.
    pub fn register(&mut self, test: Arc<dyn SchedulabilityTest>) {
        self.tests.retain(|t| t.name() != test.name());
        self.tests.push(test);
    }

    pub fn names(&self) -> Vec<&str> {
        self.tests.iter().map(|t| t.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SchedulabilityTest>, AnalysisError> {
        self.tests
            .iter()
            .find(|t| t.name() == name)
            .cloned()
            .ok_or_else(|| AnalysisError::UnknownTest(name.to_string()))
    }

    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn SchedulabilityTest>>, AnalysisError> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestRow {
    pub verdict: Verdict,
    /// Smallest `m <= MIN_M_SEARCH_CAP` at which the test accepts.
    pub min_m: Option<u32>,
}

/// Smallest `m` in `1..=cap` for which `test` accepts.
pub fn min_processors(ctx: &SetAnalysis<'_>, test: &dyn SchedulabilityTest, cap: u32) -> Option<u32> {
    (1..=cap).find(|&m| test.run(ctx, m).accepts())
}

/// Runs every test at `m` and searches each one's minimum `m`.
pub fn run_all(
    set: &TaskSet,
    m: u32,
    tests: &[Arc<dyn SchedulabilityTest>],
) -> Result<Vec<TestRow>, AnalysisError> {
    if tests.is_empty() {
        return Err(AnalysisError::NoTests);
    }
    if m == 0 {
        return Err(AnalysisError::ZeroProcessors);
    }
    let ctx = SetAnalysis::new(set)?;
    Ok(tests
        .iter()
        .map(|test| TestRow {
            verdict: test.run(&ctx, m),
            min_m: min_processors(&ctx, test.as_ref(), MIN_M_SEARCH_CAP),
        })
        .collect())
}

/// Runs one built-in test on a task set.
pub fn run_test(set: &TaskSet, m: u32, kind: TestKind) -> Result<Verdict, AnalysisError> {
    if m == 0 {
        return Err(AnalysisError::ZeroProcessors);
    }
    Ok(kind.run(&SetAnalysis::new(set)?, m))
}
