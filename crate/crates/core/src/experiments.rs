//! Acceptance-ratio sweeps and closed-form bound curves.
//!
//! Set `j` of every axis point is generated from the same derived seed, so
//! points differ only in the swept parameter. Sets within a point are
//! evaluated in parallel and tallied in index order; output never depends on
//! the thread count.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{AnalysisError, SchedulabilityTest, SetAnalysis, TestRegistry};
use crate::bounds::{edf_ut_threshold, rm_basic_threshold, rm_ut_threshold, CabConstant};
use crate::scalar::{format_exact, parse_rational};
use crate::taskgen::{derive_seed, gen_taskset_with, GenConfig, GenError, Overrides, Preset};
use crate::Rational;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed curve CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Utilization,
    GammaUp,
    NTasks,
}

impl Axis {
    pub fn from_name(name: &str) -> Option<Axis> {
        match name {
            "utilization" => Some(Axis::Utilization),
            "gamma" => Some(Axis::GammaUp),
            "ntasks" => Some(Axis::NTasks),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Utilization => "utilization",
            Axis::GammaUp => "gamma",
            Axis::NTasks => "ntasks",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExpConfig {
    pub axis: Axis,
    pub values: Vec<Rational>,
    pub sets_per_point: u32,
    /// Ranges for the off-axis parameters.
    pub generator: GenConfig,
    pub tests: Vec<String>,
    pub seed: u64,
}

impl ExpConfig {
    pub fn desk(axis: Axis, values: Vec<Rational>, tests: Vec<String>, seed: u64) -> ExpConfig {
        ExpConfig { axis, values, sets_per_point: 200, generator: GenConfig::preset(Preset::Desk, seed), tests, seed }
    }

    fn validate(&self) -> Result<(), ExpError> {
        let bad = |msg: &str| Err(ExpError::InvalidConfig(msg.to_string()));
        if self.sets_per_point == 0 {
            return bad("sets_per_point must be at least 1");
        }
        if self.values.is_empty() {
            return bad("at least one axis value is required");
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("axis values must be strictly ascending");
        }
        let lowest = &self.values[0];
        let highest = &self.values[self.values.len() - 1];
        match self.axis {
            Axis::Utilization if !lowest.is_positive() => bad("utilization values must be positive"),
            Axis::GammaUp if !lowest.is_positive() || *highest > Rational::one() => {
                bad("gamma values must lie in (0, 1]")
            }
            Axis::NTasks if self.values.iter().any(|v| !v.is_integer() || !v.is_positive()) => {
                bad("task counts must be positive integers")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvePoint {
    pub axis_value: Rational,
    pub test: String,
    pub accepted: u32,
    pub total: u32,
}

impl CurvePoint {
    pub fn ratio(&self) -> Rational {
        Rational::new(self.accepted.into(), self.total.max(1).into())
    }
}

fn overrides_for(axis: Axis, value: &Rational) -> Overrides {
    match axis {
        Axis::Utilization => Overrides { utilization: Some(value.clone()), ..Default::default() },
        Axis::GammaUp => Overrides { gamma_up: Some(value.clone()), ..Default::default() },
        Axis::NTasks => Overrides { n_tasks: value.to_integer().to_u64(), ..Default::default() },
    }
}

pub fn acceptance_curve(cfg: &ExpConfig) -> Result<Vec<CurvePoint>, ExpError> {
    acceptance_curve_with(cfg, &TestRegistry::builtin())
}

/// Points ordered by axis value, then by the order of `cfg.tests`.
pub fn acceptance_curve_with(cfg: &ExpConfig, registry: &TestRegistry) -> Result<Vec<CurvePoint>, ExpError> {
    let tests = registry.resolve(&cfg.tests)?;
    if tests.is_empty() {
        return Err(AnalysisError::NoTests.into());
    }
    cfg.validate()?;
    cfg.generator.validate()?;

    let mut points = Vec::with_capacity(cfg.values.len() * tests.len());
    for value in &cfg.values {
        let overrides = overrides_for(cfg.axis, value);
        let outcomes: Vec<Vec<bool>> = (0..cfg.sets_per_point)
            .into_par_iter()
            .map(|j| evaluate_set(cfg, &tests, &overrides, j))
            .collect::<Result<_, _>>()?;
        for (t, test) in tests.iter().enumerate() {
            let accepted = outcomes.iter().filter(|row| row[t]).count() as u32;
            points.push(CurvePoint {
                axis_value: value.clone(),
                test: test.name().to_string(),
                accepted,
                total: cfg.sets_per_point,
            });
        }
    }
    Ok(points)
}

fn evaluate_set(
    cfg: &ExpConfig,
    tests: &[Arc<dyn SchedulabilityTest>],
    overrides: &Overrides,
    index: u32,
) -> Result<Vec<bool>, ExpError> {
    let generated = gen_taskset_with(derive_seed(cfg.seed, u64::from(index)), &cfg.generator, overrides)?;
    let ctx = SetAnalysis::new(&generated.set)?;
    Ok(tests.iter().map(|t| t.run(&ctx, generated.processors).accepts()).collect())
}

pub const CSV_HEADER: [&str; 5] = ["axis", "test", "accepted", "total", "ratio"];

pub fn write_csv(points: &[CurvePoint], out: impl io::Write) -> Result<(), ExpError> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| ExpError::Csv(e.to_string());
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for p in points {
        writer
            .write_record([
                format_exact(&p.axis_value),
                p.test.clone(),
                p.accepted.to_string(),
                p.total.to_string(),
                format_exact(&p.ratio()),
            ])
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_csv_string(points: &[CurvePoint]) -> String {
    let mut buf = Vec::new();
    write_csv(points, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn emit_csv(points: &[CurvePoint], path: impl AsRef<Path>) -> Result<(), ExpError> {
    std::fs::write(path, to_csv_string(points))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<CurvePoint>, ExpError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| ExpError::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(ExpError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ExpError::Csv(e.to_string()))?;
        let bad = |what: &str| ExpError::Csv(format!("row {}: bad {what}", line + 1));
        let axis_value = parse_rational(&record[0]).ok_or_else(|| bad("axis value"))?;
        let accepted: u32 = record[2].parse().map_err(|_| bad("accepted count"))?;
        let total: u32 = record[3].parse().map_err(|_| bad("total count"))?;
        let point = CurvePoint { axis_value, test: record[1].to_string(), accepted, total };
        if accepted > total || parse_rational(&record[4]) != Some(point.ratio()) {
            return Err(bad("ratio"));
        }
        points.push(point);
    }
    Ok(points)
}

/// One polyline per test, in first-appearance order, plus a legend.
pub fn to_svg_string(points: &[CurvePoint], x_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

    let mut tests: Vec<&str> = Vec::new();
    for p in points {
        if !tests.contains(&p.test.as_str()) {
            tests.push(&p.test);
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.axis_value.to_f64().unwrap_or(0.0)).collect();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| PAD + (x - if x_min.is_finite() { x_min } else { 0.0 }) / span * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">acceptance ratio</text>"#, H / 2.0, H / 2.0);
    for (i, test) in tests.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = points
            .iter()
            .zip(&xs)
            .filter(|(p, _)| p.test == *test)
            .map(|(p, &x)| format!("{:.2},{:.2}", px(x), py(p.ratio().to_f64().unwrap_or(0.0))))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        let y = PAD + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" fill="{color}">{test}</text>"#,
            W - PAD - 90.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_svg(points: &[CurvePoint], x_label: &str, path: impl AsRef<Path>) -> Result<(), ExpError> {
    std::fs::write(path, to_svg_string(points, x_label))?;
    Ok(())
}

/// Tests with a closed-form curve over γ_max.
pub const CURVE_TESTS: [&str; 6] = ["rm-ut", "rm-basic", "edf-ut", "cab-new", "cab-li", "edf-cab"];

fn cab_for(test: &str) -> Option<CabConstant> {
    match test {
        "cab-new" => Some(CabConstant::RmNew),
        "cab-li" => Some(CabConstant::RmLi),
        "edf-cab" => Some(CabConstant::Edf),
        _ => None,
    }
}

/// `(γ_max, threshold on U)` at every grid point. Capacity augmentation tests
/// give a step: `1/ρ` up to `γ = 1/ρ`, then 0.
pub fn bound_curve(test: &str, grid: &[Rational]) -> Result<Vec<(Rational, Rational)>, ExpError> {
    if grid.iter().any(|g| *g < Rational::zero() || *g > Rational::one()) {
        return Err(ExpError::InvalidConfig("gamma grid must lie in [0, 1]".into()));
    }
    let f: Box<dyn Fn(&Rational) -> Rational> = match test {
        "rm-ut" => Box::new(rm_ut_threshold),
        "rm-basic" => Box::new(rm_basic_threshold),
        "edf-ut" => Box::new(edf_ut_threshold),
        other => match cab_for(other) {
            Some(which) => {
                let corner = which.threshold();
                Box::new(move |g| if *g <= corner { corner.clone() } else { Rational::zero() })
            }
            None => return Err(AnalysisError::UnknownTest(other.to_string()).into()),
        },
    };
    Ok(grid.iter().map(|g| (g.clone(), f(g))).collect())
}

/// Corner `(γ_max, U)` of a capacity augmentation rectangle.
pub fn cab_rectangle(which: CabConstant) -> (Rational, Rational) {
    let t = which.threshold();
    (t.clone(), t)
}

/// `0, 1/steps, ..., 1`.
pub fn uniform_grid(steps: u32) -> Vec<Rational> {
    (0..=steps).map(|i| Rational::new(i.into(), steps.max(1).into())).collect()
}
