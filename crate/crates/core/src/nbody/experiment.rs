use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::evaluator::{reference_with_ranges, run_reference, run_tuned, Bindings, EvalConfig, EvalError, SampleSeries, Trace};
use crate::frontend::{parse, ParseError};
use crate::numerics::MpFloat;
use crate::tuner::{solve_program, TuneError, TuningConfig};

use super::{build_nbody_program, energy, position_vars, t_max_for_years, NbodyConstants, NbodyError};

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub constants: NbodyConstants,
    /// Requirements applied to every position.
    pub nsb: Vec<u32>,
    /// Horizons in years of 365.24 time units.
    pub years: Vec<f64>,
    pub dt: f64,
    pub tuning: TuningConfig,
    /// Directory for `summary.csv` and the per-cell series; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    /// Series resolution in loop iterations; 0 disables series.
    pub sample_every: u64,
    /// Cells of one horizon run on this many threads.
    pub jobs: usize,
}

impl ExperimentPlan {
    pub fn new(nsb: Vec<u32>, years: Vec<f64>) -> Self {
        ExperimentPlan {
            constants: NbodyConstants::standard(),
            nsb,
            years,
            dt: 0.01,
            tuning: TuningConfig::default(),
            out_dir: None,
            sample_every: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("plan: {0}")]
    Plan(String),
    #[error("program: {0}")]
    Program(#[from] NbodyError),
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("reference: {0}")]
    Reference(EvalError),
    #[error("nsb {nsb}, {years} years: {source}")]
    Tune {
        nsb: u32,
        years: f64,
        #[source]
        source: TuneError,
    },
    #[error("nsb {nsb}, {years} years: tuned run: {source}")]
    Run {
        nsb: u32,
        years: f64,
        #[source]
        source: EvalError,
    },
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// One (nsb, horizon) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub nsb: u32,
    pub years: f64,
    /// Final-position distance to the reference per moving body, in AU.
    pub distances: Vec<(String, f64)>,
    pub total_bits: i64,
    /// Range analysis of the horizon plus this cell's constraint solving.
    pub tune_seconds: f64,
    pub run_seconds: f64,
    pub reference_iterations: u64,
    pub tuned_iterations: u64,
    /// `(step, body, distance)` at the sampled iterations both runs reached.
    pub series: Vec<(u64, String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub cells: Vec<CellResult>,
    /// Seconds of the 500-bit reference run per horizon.
    pub reference_seconds: Vec<(f64, f64)>,
    /// `(horizon, initial, final)` total energy of the reference run.
    pub reference_energy: Vec<(f64, f64, f64)>,
}

impl ExperimentSummary {
    /// Largest relative energy change of the reference over any horizon.
    pub fn energy_drift(&self) -> f64 {
        self.reference_energy
            .iter()
            .map(|(_, e0, e1)| ((e1 - e0) / e0).abs())
            .fold(0.0, f64::max)
    }
}

impl ExperimentSummary {
    pub fn distance(&self, nsb: u32, years: f64, body: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.nsb == nsb && c.years == years)
            .and_then(|c| c.distances.iter().find(|(b, _)| b == body).map(|(_, d)| *d))
    }

    /// `nsb,horizon_years,body,distance_au,tune_seconds,run_seconds` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        for c in &self.cells {
            out.push_str(&summary_rows(c));
        }
        out
    }
}

const SUMMARY_HEADER: &str = "nsb,horizon_years,body,distance_au,tune_seconds,run_seconds\n";

fn summary_rows(c: &CellResult) -> String {
    let mut out = String::new();
    for (body, d) in &c.distances {
        writeln!(out, "{},{},{body},{d:e},{:.3},{:.3}", c.nsb, c.years, c.tune_seconds, c.run_seconds).unwrap();
    }
    out
}

fn series_csv(c: &CellResult) -> String {
    let mut out = String::from("step,body,distance_au\n");
    for (step, body, d) in &c.series {
        writeln!(out, "{step},{body},{d:e}").unwrap();
    }
    out
}

fn distance(a: &Trace<MpFloat>, b: &Trace<MpFloat>, body: &str) -> f64 {
    position_vars(body)
        .iter()
        .map(|v| a.env[v].sub(&b.env[v], 2048).to_f64().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn series(planets: &[String], r: &SampleSeries, t: &SampleSeries) -> Vec<(u64, String, f64)> {
    let mut out = Vec::new();
    for ((sr, rr), (st, rt)) in r.steps.iter().zip(&r.rows).zip(t.steps.iter().zip(&t.rows)) {
        if sr != st {
            break;
        }
        for (k, body) in planets.iter().enumerate() {
            let d = (0..3).map(|c| (rr[3 * k + c] - rt[3 * k + c]).powi(2)).sum::<f64>().sqrt();
            out.push((*sr, body.clone(), d));
        }
    }
    out
}

/// Tunes and runs every (nsb, horizon) cell against a shared reference per horizon.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary, ExperimentError> {
    plan.tuning.check().map_err(|e| ExperimentError::Plan(e.to_string()))?;
    if let Some(&n) = plan.nsb.iter().find(|&&n| n == 0 || n > plan.tuning.p_max) {
        return Err(ExperimentError::Plan(format!("nsb {n} outside [1, {}]", plan.tuning.p_max)));
    }
    if plan.years.iter().any(|y| !(y.is_finite() && *y >= 0.0)) || !(plan.dt > 0.0) {
        return Err(ExperimentError::Plan("horizons must be non-negative and dt positive".into()));
    }
    let planets: Vec<String> = plan.constants.planets().into_iter().map(String::from).collect();
    let sample_vars: Vec<String> = planets.iter().flat_map(|b| position_vars(b)).collect();
    let eval = EvalConfig {
        iteration_cap: plan.tuning.iteration_cap,
        sample_vars: if plan.sample_every > 0 { sample_vars } else { Vec::new() },
        sample_every: plan.sample_every.max(1),
        ..Default::default()
    };
    let summary_file = match &plan.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::File::create(dir.join("summary.csv"))?;
            f.write_all(SUMMARY_HEADER.as_bytes())?;
            Some(Mutex::new(f))
        }
        None => None,
    };

    let mut summary = ExperimentSummary {
        cells: Vec::new(),
        reference_seconds: Vec::new(),
        reference_energy: Vec::new(),
    };
    let energy_of = |t: &Trace<MpFloat>| energy(&plan.constants, |v| t.env[v].to_f64());
    let initial = parse(&build_nbody_program(&plan.constants, plan.dt, t_max_for_years(0.0, plan.dt), 1)?)?;
    let e0 = energy_of(
        &run_reference(&initial, plan.tuning.pref, &Bindings::new(), &EvalConfig::default()).map_err(ExperimentError::Reference)?,
    );
    for &years in &plan.years {
        let t_max = t_max_for_years(years, plan.dt);
        let base = parse(&build_nbody_program(&plan.constants, plan.dt, t_max, plan.nsb.first().copied().unwrap_or(1))?)?;
        let start = Instant::now();
        let (reference, ranges) =
            reference_with_ranges(&base, plan.tuning.pref, &Bindings::new(), &eval).map_err(ExperimentError::Reference)?;
        let range_seconds = start.elapsed().as_secs_f64();
        summary.reference_seconds.push((years, range_seconds));
        summary.reference_energy.push((years, e0, energy_of(&reference)));

        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Result<CellResult, ExperimentError>>> = Mutex::new(Vec::new());
        let cell = |nsb: u32| -> Result<CellResult, ExperimentError> {
            let p = parse(&build_nbody_program(&plan.constants, plan.dt, t_max, nsb)?)?;
            let start = Instant::now();
            let (a, _) = solve_program(&p, &ranges, &plan.tuning).map_err(|source| ExperimentError::Tune { nsb, years, source })?;
            let tune_seconds = range_seconds + start.elapsed().as_secs_f64();
            let start = Instant::now();
            let tuned = run_tuned(&p, &a.point_widths(p.num_points()), &Bindings::new(), &eval)
                .map_err(|source| ExperimentError::Run { nsb, years, source })?;
            let run_seconds = start.elapsed().as_secs_f64();
            let c = CellResult {
                nsb,
                years,
                distances: planets.iter().map(|b| (b.clone(), distance(&reference, &tuned, b))).collect(),
                total_bits: a.total(),
                tune_seconds,
                run_seconds,
                reference_iterations: reference.iterations,
                tuned_iterations: tuned.iterations,
                series: series(&planets, &reference.samples, &tuned.samples),
            };
            if let Some(dir) = &plan.out_dir {
                if plan.sample_every > 0 {
                    std::fs::write(dir.join(format!("series_nsb{nsb}_{years}y.csv")), series_csv(&c))?;
                }
            }
            if let Some(f) = &summary_file {
                let mut f = f.lock().unwrap();
                f.write_all(summary_rows(&c).as_bytes())?;
                f.flush()?;
            }
            Ok(c)
        };
        std::thread::scope(|s| {
            for _ in 0..plan.jobs.clamp(1, plan.nsb.len().max(1)) {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&nsb) = plan.nsb.get(k) else { break };
                    let r = cell(nsb);
                    results.lock().unwrap().push(r);
                });
            }
        });
        let mut cells = results.into_inner().unwrap().into_iter().collect::<Result<Vec<_>, _>>()?;
        cells.sort_by_key(|c| plan.nsb.iter().position(|&n| n == c.nsb));
        summary.cells.extend(cells);
    }
    if let Some(dir) = &plan.out_dir {
        // rows were appended as cells finished; rewrite them in plan order
        std::fs::write(dir.join("summary.csv"), summary.to_csv())?;
    }
    Ok(summary)
}
