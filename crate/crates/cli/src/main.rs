//! `dagsched`: schedulability analysis, generation, simulation and
//! experiments for DAG task sets.
//!
//! Exit codes: 0 success (or every requested test accepts / no deadline miss),
//! 2 analysis completed without acceptance (or a deadline miss was found),
//! 1 error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde_json::json;

use dagsched::analysis::{run_all, TestRegistry, MIN_M_SEARCH_CAP};
use dagsched::bounds::speed_work_bound;
use dagsched::experiments::{
    acceptance_curve, bound_curve, emit_csv, emit_svg, uniform_grid, Axis, ExpConfig, CURVE_TESTS,
};
use dagsched::io::{read_taskset, to_canonical_string, write_taskset, LoadError};
use dagsched::model::set_metrics;
use dagsched::scalar::{format_exact, parse_rational};
use dagsched::sim::{falsify, simulate, write_trace, Policy, SimConfig, HORIZON_CAP};
use dagsched::taskgen::{gen_taskset_with, GenConfig, Overrides, Preset};
use dagsched::work::WorkProfile;
use dagsched::{Rational, TaskSet, Time};

const ALL_TESTS: &str = "rm-ut,rm-tighter,rm-work,rm-basic,cab-new,cab-li,edf-ut,edf-cab";

#[derive(Parser)]
#[command(name = "dagsched", version, about = "Schedulability analysis for parallel DAG tasks under G-RM and G-EDF")]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-task and set metrics. Exit 1 on an invalid file.
    Analyze {
        file: PathBuf,
        /// Also report U = U_Σ / m.
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Run schedulability tests. Exit 0 if all accept, 2 otherwise.
    Test {
        file: PathBuf,
        #[arg(long)]
        m: u32,
        /// Comma-separated test names.
        #[arg(long, default_value = ALL_TESTS)]
        tests: String,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate q(t, s) and work(t, s) for one task.
    Work {
        file: PathBuf,
        #[arg(long)]
        task: u32,
        #[arg(long)]
        t: Time,
        /// Processor speed s ≥ 1, e.g. `1`, `3/2`, `2.5`.
        #[arg(long, default_value = "1")]
        speed: String,
    },
    /// Generate a random task set in the canonical file format.
    Generate(GenerateArgs),
    /// Simulate global scheduling. Exit 0 without a deadline miss, 2 with one.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value = "rm", value_parser = ["rm", "edf"])]
        policy: String,
        #[arg(long)]
        horizon: Time,
        /// Write a per-step trace of (processor, task.job, vertex) triples.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Keep simulating after the first deadline miss.
        #[arg(long = "continue")]
        keep_going: bool,
    },
    /// Search for deadline misses under synchronous and random-offset
    /// releases. Exit 0 if none is found, 2 otherwise.
    Falsify {
        file: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value = "rm", value_parser = ["rm", "edf"])]
        policy: String,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, env = "DAGSCHED_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = HORIZON_CAP)]
        horizon_cap: Time,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sweep one generator parameter and tally acceptance ratios.
    Experiment {
        #[arg(long, value_parser = ["utilization", "gamma", "ntasks"])]
        axis: String,
        /// Comma-separated ascending axis values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 200)]
        sets_per_point: u32,
        #[arg(long, default_value = ALL_TESTS)]
        tests: String,
        #[arg(long, env = "DAGSCHED_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk", value_parser = ["desk", "paper"])]
        preset: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Emit closed-form threshold curves over γ_max as CSV.
    BoundCurve {
        #[arg(long, default_value = "rm-ut,rm-basic,edf-ut,cab-new,cab-li,edf-cab")]
        tests: String,
        /// Grid 0, 1/steps, ..., 1.
        #[arg(long, default_value_t = 20)]
        steps: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, env = "DAGSCHED_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "desk", value_parser = ["desk", "paper"])]
    preset: String,
    /// Edge probability in (0, 1).
    #[arg(long)]
    p: Option<String>,
    /// Tensity upper bound in (0, 1].
    #[arg(long)]
    gamma_up: Option<String>,
    /// Number of tasks.
    #[arg(long)]
    n: Option<u64>,
    /// Target normalized utilization used to report m.
    #[arg(long)]
    utilization: Option<String>,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn rational_arg(name: &str, text: &str) -> Result<Rational> {
    parse_rational(text).ok_or_else(|| anyhow!("--{name}: cannot parse {text:?} as a rational"))
}

fn approx(value: &Rational) -> String {
    format!("{:.4}", value.to_f64().unwrap_or(f64::NAN))
}

fn names(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn load(path: &PathBuf) -> Result<TaskSet> {
    read_taskset(path).map_err(|err| match err {
        LoadError::Invalid(_) => anyhow!("{}: {}", path.display(), err.messages().join("\n")),
        other => anyhow!("{}: {other}", path.display()),
    })
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn preset(name: &str) -> Preset {
    Preset::from_name(name).expect("clap restricts preset names")
}

fn policy(name: &str) -> Policy {
    Policy::from_name(name).expect("clap restricts policy names")
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("thread pool")?;
    }
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Analyze { file, m, json } => {
            let set = load(&file)?;
            let summary = set_metrics(&set, m.unwrap_or(1))?;
            if json {
                let tasks: Vec<_> = set
                    .tasks()
                    .iter()
                    .map(|t| {
                        let mt = t.metrics();
                        json!({
                            "id": t.id,
                            "period": t.period,
                            "volume": mt.volume,
                            "critical_path": mt.critical_path,
                            "utilization": format_exact(&mt.utilization),
                            "tensity": format_exact(&mt.tensity),
                            "heavy": mt.is_heavy(),
                        })
                    })
                    .collect();
                let mut doc = json!({
                    "tasks": tasks,
                    "total_utilization": format_exact(&summary.total_utilization),
                    "gamma_max": format_exact(&summary.gamma_max),
                });
                if let Some(m) = m {
                    doc["m"] = json!(m);
                    doc["normalized_utilization"] = json!(format_exact(&summary.normalized_utilization));
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                for t in set.tasks() {
                    let mt = t.metrics();
                    writeln!(
                        out,
                        "task {:<4} T={:<8} {}  (u≈{} γ≈{})",
                        t.id,
                        t.period,
                        mt,
                        approx(&mt.utilization),
                        approx(&mt.tensity)
                    )?;
                }
                writeln!(
                    out,
                    "set      U_Σ={} (≈{}) γ_max={} (≈{})",
                    summary.total_utilization,
                    approx(&summary.total_utilization),
                    summary.gamma_max,
                    approx(&summary.gamma_max)
                )?;
                if let Some(m) = m {
                    writeln!(
                        out,
                        "m={m}      U={} (≈{})",
                        summary.normalized_utilization,
                        approx(&summary.normalized_utilization)
                    )?;
                }
            }
            Ok(0)
        }
        Command::Test { file, m, tests, json } => {
            let set = load(&file)?;
            let tests = TestRegistry::builtin().resolve(&names(&tests))?;
            let rows = run_all(&set, m, &tests)?;
            let all_accept = rows.iter().all(|r| r.verdict.accepts());
            let min_m = |v: Option<u32>| v.map_or(format!(">{MIN_M_SEARCH_CAP}"), |m| m.to_string());
            if json {
                let rows: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "test": r.verdict.test,
                            "decision": r.verdict.decision.as_str(),
                            "margin": format_exact(&r.verdict.margin),
                            "min_m": r.min_m,
                            "reason": r.verdict.reason,
                        })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "m": m, "rows": rows }))?)?;
            } else {
                writeln!(out, "{:<11} {:<14} {:>10}  {:<6} margin", "test", "decision", "≈margin", "min-m")?;
                for r in &rows {
                    let v = &r.verdict;
                    writeln!(
                        out,
                        "{:<11} {:<14} {:>10}  {:<6} {}{}",
                        v.test,
                        v.decision.as_str(),
                        approx(&v.margin),
                        min_m(r.min_m),
                        v.margin,
                        v.reason.as_ref().map(|s| format!("  ({s})")).unwrap_or_default()
                    )?;
                }
            }
            Ok(if all_accept { 0 } else { 2 })
        }
        Command::Work { file, task, t, speed } => {
            let set = load(&file)?;
            let task = set.task(task).ok_or_else(|| anyhow!("no task with id {task}"))?;
            let speed = rational_arg("speed", &speed)?;
            let profile = WorkProfile::new(task, speed.clone())?;
            let q = profile.q(&Rational::from_integer(t.into()));
            let work = profile.work(t);
            writeln!(out, "q({t}, {speed}) = {q}")?;
            writeln!(out, "work({t}, {speed}) = {work}")?;
            if t > 0 {
                let ratio = &work / Rational::from_integer(t.into());
                writeln!(out, "work/t = {ratio} (≈{})", approx(&ratio))?;
            }
            if let Ok(bound) = speed_work_bound(&task.metrics().utilization, &speed) {
                writeln!(out, "speed-{speed} bound on work/t = {bound}")?;
            }
            Ok(0)
        }
        Command::Generate(args) => {
            let mut cfg = GenConfig::preset(preset(&args.preset), args.seed);
            if let Some(p) = &args.p {
                let p = rational_arg("p", p)?;
                let (n, d) = (p.numer().to_u64(), p.denom().to_u64());
                let (Some(n), Some(d)) = (n, d) else { bail!("--p must lie in (0, 1)") };
                cfg.edge_prob = num_rational::Ratio::new(n, d);
            }
            let overrides = Overrides {
                n_tasks: args.n,
                gamma_up: args.gamma_up.as_deref().map(|g| rational_arg("gamma-up", g)).transpose()?,
                utilization: args.utilization.as_deref().map(|u| rational_arg("utilization", u)).transpose()?,
            };
            let generated = gen_taskset_with(args.seed, &cfg, &overrides)?;
            match &args.output {
                Some(path) => {
                    write_taskset(&generated.set, path).with_context(|| format!("cannot write {}", path.display()))?;
                    writeln!(
                        out,
                        "wrote {} task(s) to {}: γ_up={} U={} m={}",
                        generated.set.len(),
                        path.display(),
                        format_exact(&generated.gamma_up),
                        format_exact(&generated.utilization),
                        generated.processors
                    )?;
                }
                None => write!(out, "{}", to_canonical_string(&generated.set))?,
            }
            Ok(0)
        }
        Command::Simulate { file, m, policy: name, horizon, trace, keep_going } => {
            let set = load(&file)?;
            let mut cfg = SimConfig::new(policy(&name), horizon);
            cfg.stop_at_first_miss = !keep_going;
            cfg.record_trace = trace.is_some();
            let result = simulate(&set, m, &cfg)?;
            if let (Some(path), Some(segments)) = (&trace, &result.trace) {
                let mut w = output(Some(path))?;
                write_trace(segments, &mut w)?;
                w.flush()?;
            }
            for t in set.tasks() {
                let jobs: Vec<_> = result.jobs.iter().filter(|j| j.task == t.id).collect();
                let worst = jobs.iter().filter_map(|j| j.response_time()).max();
                writeln!(
                    out,
                    "task {:<4} jobs={:<6} worst-response={}",
                    t.id,
                    jobs.len(),
                    worst.map_or("-".into(), |r| r.to_string())
                )?;
            }
            writeln!(out, "busy per processor: {:?}", result.busy)?;
            match &result.first_miss {
                Some(miss) => {
                    writeln!(out, "MISS: {miss} ({} miss(es) total)", result.misses)?;
                    Ok(2)
                }
                None => {
                    writeln!(out, "no deadline miss up to t={}", result.end)?;
                    Ok(0)
                }
            }
        }
        Command::Falsify { file, m, policy: name, trials, seed, horizon_cap, trace } => {
            let set = load(&file)?;
            match falsify(&set, m, policy(&name), trials, seed, horizon_cap)? {
                Some(found) => {
                    writeln!(out, "MISS under {:?} (horizon {}): {}", found.pattern, found.horizon, found.miss)?;
                    if let Some(path) = &trace {
                        let mut w = output(Some(path))?;
                        write_trace(&found.trace, &mut w)?;
                        w.flush()?;
                    }
                    Ok(2)
                }
                None => {
                    writeln!(out, "no deadline miss in {} release pattern(s)", trials + 1)?;
                    Ok(0)
                }
            }
        }
        Command::Experiment { axis, values, sets_per_point, tests, seed, preset: p, output: path, svg } => {
            let axis = Axis::from_name(&axis).expect("clap restricts axis names");
            let values = names(&values).iter().map(|v| rational_arg("values", v)).collect::<Result<Vec<_>>>()?;
            let cfg = ExpConfig {
                axis,
                values,
                sets_per_point,
                generator: GenConfig::preset(preset(&p), seed),
                tests: names(&tests),
                seed,
            };
            let points = acceptance_curve(&cfg)?;
            emit_csv(&points, &path)?;
            if let Some(svg) = svg {
                emit_svg(&points, axis.name(), svg)?;
            }
            writeln!(out, "wrote {} point(s) to {}", points.len(), path.display())?;
            Ok(0)
        }
        Command::BoundCurve { tests, steps, output: path } => {
            if steps == 0 {
                bail!("--steps must be at least 1");
            }
            let tests = names(&tests);
            if let Some(bad) = tests.iter().find(|t| !CURVE_TESTS.contains(&t.as_str())) {
                bail!("UNKNOWN_TEST_NAME: {bad} has no closed-form curve (choose from {})", CURVE_TESTS.join(","));
            }
            let grid = uniform_grid(steps);
            let mut w = output(path.as_ref())?;
            writeln!(w, "gamma,test,threshold,approx")?;
            for test in &tests {
                for (g, u) in bound_curve(test, &grid)? {
                    writeln!(w, "{},{test},{},{}", format_exact(&g), format_exact(&u), approx(&u))?;
                }
            }
            w.flush()?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
