use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsbtune::constraints::{gen_ilp, gen_refined, LoopModel};
use nsbtune::evaluator::{run_reference, Bindings, EvalConfig};
use nsbtune::frontend::{compute_def_use, parse_with, ParseOptions};
use nsbtune::nbody::{run_experiment, ExperimentPlan};
use nsbtune::solver::{export_lp, policy_iterate, Policy};
use nsbtune::tuner::{analyze, tune_source, verify_against, Method, TuningConfig, TuningReport};

/// Bit-level precision tuning of numeric programs.
///
/// Programs use the statements `v = e;`, `while (a < b) { ... }`, `if (a < b) { ... } else { ... }`
/// and `require_nsb(v, n);` over + - * / sqrt and decimal literals.
///
/// Files written by `tune` next to SOURCE: SOURCE.annotated.pop (every token suffixed with
/// |nsb|), SOURCE.mp.txt (the program with each value wrapped in mp(e, nsb), rounding e to
/// nsb bits) and SOURCE.report.json. `bench` writes summary.csv with columns
/// nsb,horizon_years,body,distance_au,tune_seconds,run_seconds and, with --sample-every,
/// series_nsb<N>_<Y>y.csv with columns step,body,distance_au.
///
/// Exit status: 0 success, 1 analysis error or failed verification, 2 usage error.
#[derive(Parser, Debug)]
#[command(name = "nsbtune", version, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tune a program and write the annotated source, mp code and report.
    Tune {
        source: PathBuf,
        #[command(flatten)]
        opts: TuneOpts,
        /// Also write the solved system as an LP file here.
        #[arg(long)]
        emit_lp: Option<PathBuf>,
        /// Report path (default: SOURCE.report.json).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include the analysis time in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Tune (or load widths from a report), then compare the tuned run with the reference.
    Verify {
        source: PathBuf,
        #[command(flatten)]
        opts: TuneOpts,
        /// Use the per-point widths of this report instead of tuning.
        #[arg(long)]
        widths: Option<PathBuf>,
        /// Write the table here as well as to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the N-body distance experiments.
    Bench {
        /// Requirements on every position.
        #[arg(long, value_delimiter = ',', default_value = "11,18,24,34,43,53")]
        nsb: Vec<u32>,
        /// Horizons in years.
        #[arg(long, value_delimiter = ',', default_value = "10")]
        years: Vec<f64>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = Method::Ilp)]
        method: Method,
        #[arg(long, default_value_t = 500)]
        pref: u32,
        #[arg(long = "cond-nsb", default_value_t = 53)]
        cond_nsb: u32,
        #[arg(long, default_value_t = 500)]
        pmax: u32,
        /// Output directory.
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
        /// Write per-step distance series every N iterations (0: none).
        #[arg(long, default_value_t = 0)]
        sample_every: u64,
        /// Cells run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write the constraint system as a CPLEX-LP file.
    ExportLp {
        source: PathBuf,
        #[command(flatten)]
        opts: TuneOpts,
        /// Output path (default: SOURCE.lp).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a program with every operation at one precision and print the final values.
    Run {
        source: PathBuf,
        #[arg(long, default_value_t = 53)]
        prec: u32,
        /// JSON array of input binding objects; the first one is used.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Loop iteration cap.
        #[arg(long, default_value_t = 10_000_000)]
        iteration_cap: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct TuneOpts {
    #[arg(long, value_enum, default_value_t = Method::Ilp)]
    method: Method,
    /// Width of the reference and range-analysis runs.
    #[arg(long, default_value_t = 500)]
    pref: u32,
    /// Minimum width of comparison operands.
    #[arg(long = "cond-nsb", default_value_t = 53)]
    cond_nsb: u32,
    /// Largest width any value may get.
    #[arg(long, default_value_t = 500)]
    pmax: u32,
    #[arg(long = "loop-model", value_enum, default_value_t = LoopModelArg::CarriedSkew)]
    loop_model: LoopModelArg,
    /// JSON array of input binding objects, e.g. [{"x": "0.5"}, {"x": "2.0"}].
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Verification tolerance in units of the required last place.
    #[arg(long, default_value_t = 100.0)]
    tolerance: f64,
    /// Loop iteration cap per run.
    #[arg(long, default_value_t = 10_000_000)]
    iteration_cap: u64,
    /// Branch-and-bound node limit.
    #[arg(long, default_value_t = 100_000)]
    node_limit: usize,
    /// Policy-iteration round limit.
    #[arg(long, default_value_t = 100)]
    pi_cap: usize,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum LoopModelArg {
    Plain,
    ExitSkew,
    CarriedSkew,
}

impl TuneOpts {
    fn config(&self, verify: bool) -> TuningConfig {
        let mut cfg = TuningConfig {
            method: self.method,
            pref: self.pref,
            cond_nsb: self.cond_nsb,
            p_max: self.pmax,
            iteration_cap: self.iteration_cap,
            loop_model: match self.loop_model {
                LoopModelArg::Plain => LoopModel::Plain,
                LoopModelArg::ExitSkew => LoopModel::ExitSkew,
                LoopModelArg::CarriedSkew => LoopModel::CarriedSkew,
            },
            verify,
            tolerance: self.tolerance,
            ..Default::default()
        };
        cfg.solver.node_limit = self.node_limit;
        cfg.solver.pi_cap = self.pi_cap;
        cfg
    }
}

/// Error with the stage that produced it.
struct Failure {
    stage: &'static str,
    message: String,
}

fn fail(stage: &'static str, e: impl std::fmt::Display) -> Failure {
    Failure {
        stage,
        message: e.to_string(),
    }
}

fn from_tune(e: nsbtune::tuner::TuneError) -> Failure {
    let stage = e.stage();
    let text = e.to_string();
    let message = text.strip_prefix(&format!("{stage}: ")).unwrap_or(&text).to_string();
    Failure { stage, message }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn with_suffix(source: &Path, suffix: &str) -> PathBuf {
    let mut s = source.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Input names and binding sets from a samples file.
fn load_samples(path: Option<&Path>) -> Result<(Vec<String>, Vec<Bindings>), Failure> {
    let Some(path) = path else {
        return Ok((Vec::new(), vec![Bindings::new()]));
    };
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| fail("samples", e))?;
    let runs = value
        .as_array()
        .ok_or_else(|| fail("samples", "expected a JSON array of objects"))?;
    let mut out = Vec::new();
    for run in runs {
        let obj = run
            .as_object()
            .ok_or_else(|| fail("samples", "expected a JSON array of objects"))?;
        let mut b = Bindings::new();
        for (k, v) in obj {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(fail("samples", format!("`{k}`: {other} is not a number"))),
            };
            b.insert(k.clone(), text);
        }
        out.push(b);
    }
    if out.is_empty() {
        return Err(fail("samples", "no binding sets"));
    }
    let inputs: Vec<String> = out[0].keys().cloned().collect();
    if let Some(bad) = out.iter().find(|b| b.keys().ne(inputs.iter())) {
        return Err(fail("samples", format!("binding sets name different inputs: {:?}", bad.keys().collect::<Vec<_>>())));
    }
    Ok((inputs, out))
}

fn cmd_tune(source: &Path, opts: &TuneOpts, emit_lp: Option<&Path>, report: Option<&Path>, timings: bool) -> Result<bool, Failure> {
    let text = read(source)?;
    let (inputs, runs) = load_samples(opts.samples.as_deref())?;
    let cfg = opts.config(true);
    let mut t = tune_source(&text, &inputs, &runs, &cfg).map_err(from_tune)?;
    if !timings {
        t.report.analysis_seconds = None;
    }
    write(&with_suffix(source, ".annotated.pop"), &t.annotated().map_err(from_tune)?)?;
    write(&with_suffix(source, ".mp.txt"), &t.mp_code().map_err(from_tune)?)?;
    let report_path = report.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(source, ".report.json"));
    write(&report_path, &t.report.to_json())?;
    if let Some(lp) = emit_lp {
        write(lp, &lp_text(&t.program, &runs, &cfg)?)?;
    }
    print!("{}", t.report.to_text());
    Ok(true)
}

fn lp_text(p: &nsbtune::frontend::LabeledProgram, runs: &[Bindings], cfg: &TuningConfig) -> Result<String, Failure> {
    let (ranges, _) = analyze(p, runs, cfg).map_err(from_tune)?;
    let links = compute_def_use(p);
    let gen = nsbtune::constraints::GenConfig {
        cond_nsb: cfg.cond_nsb,
        p_max: cfg.p_max,
        loop_model: cfg.loop_model,
    };
    match cfg.method {
        Method::Ilp => {
            let s = gen_ilp(p, &ranges, &links, &gen).map_err(|e| fail("constraints", e))?;
            export_lp(&s, None).map_err(|e| fail("export", e))
        }
        Method::Pi => {
            let s = gen_refined(p, &ranges, &links, &gen).map_err(|e| fail("constraints", e))?;
            let policy: Policy = policy_iterate(&s, &cfg.solver).map_err(|e| fail("solve", e))?.policy;
            export_lp(&s, Some(&policy)).map_err(|e| fail("export", e))
        }
    }
}

fn cmd_verify(source: &Path, opts: &TuneOpts, widths: Option<&Path>, out: Option<&Path>) -> Result<bool, Failure> {
    let text = read(source)?;
    let (inputs, runs) = load_samples(opts.samples.as_deref())?;
    let cfg = opts.config(true);
    let rows = match widths {
        None => tune_source(&text, &inputs, &runs, &cfg).map_err(from_tune)?.report.verification,
        Some(path) => {
            let report = TuningReport::from_json(&read(path)?).map_err(|e| fail("report", e))?;
            let p = parse_with(
                &text,
                &ParseOptions {
                    inputs: inputs.clone(),
                    p_max: cfg.p_max,
                },
            )
            .map_err(|e| fail("parse", e))?;
            if report.points.len() != p.num_points() {
                return Err(fail(
                    "report",
                    format!("{} widths for {} control points", report.points.len(), p.num_points()),
                ));
            }
            let w: Vec<u32> = report.points.iter().map(|r| r.nsb.max(1) as u32).collect();
            let mut rows = Vec::new();
            for (k, b) in runs.iter().enumerate() {
                let reference = run_reference(&p, cfg.pref, b, &cfg.eval()).map_err(|e| fail("verify", e))?;
                let t = verify_against(&p, &w, b, &reference, &cfg).map_err(from_tune)?;
                rows.extend(t.rows.into_iter().map(|mut r| {
                    r.run = k;
                    r
                }));
            }
            rows
        }
    };
    let table = nsbtune::tuner::VerificationTable {
        tolerance: cfg.tolerance,
        rows,
    };
    let text = table.to_text();
    print!("{text}");
    if let Some(out) = out {
        write(out, &text)?;
    }
    Ok(table.passed())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    nsb: Vec<u32>,
    years: Vec<f64>,
    dt: f64,
    method: Method,
    pref: u32,
    cond_nsb: u32,
    pmax: u32,
    out: PathBuf,
    sample_every: u64,
    jobs: usize,
) -> Result<bool, Failure> {
    let mut plan = ExperimentPlan::new(nsb, years);
    plan.dt = dt;
    plan.tuning.method = method;
    plan.tuning.pref = pref;
    plan.tuning.cond_nsb = cond_nsb;
    plan.tuning.p_max = pmax;
    plan.out_dir = Some(out.clone());
    plan.sample_every = sample_every;
    plan.jobs = jobs;
    let summary = run_experiment(&plan).map_err(|e| fail("bench", e))?;
    print!("{}", summary.to_csv());
    eprintln!("wrote {}", out.join("summary.csv").display());
    Ok(true)
}

fn cmd_export(source: &Path, opts: &TuneOpts, out: Option<&Path>) -> Result<bool, Failure> {
    let text = read(source)?;
    let (inputs, runs) = load_samples(opts.samples.as_deref())?;
    let cfg = opts.config(false);
    let p = parse_with(
        &text,
        &ParseOptions {
            inputs,
            p_max: cfg.p_max,
        },
    )
    .map_err(|e| fail("parse", e))?;
    let lp = lp_text(&p, &runs, &cfg)?;
    write(&out.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(source, ".lp")), &lp)?;
    Ok(true)
}

fn cmd_run(source: &Path, prec: u32, samples: Option<&Path>, iteration_cap: u64) -> Result<bool, Failure> {
    let text = read(source)?;
    let (inputs, runs) = load_samples(samples)?;
    let p = parse_with(
        &text,
        &ParseOptions {
            inputs,
            p_max: prec.max(nsbtune::numerics::DEFAULT_P_MAX),
        },
    )
    .map_err(|e| fail("parse", e))?;
    let cfg = EvalConfig {
        iteration_cap,
        ..Default::default()
    };
    let t = run_reference(&p, prec, &runs[0], &cfg).map_err(|e| fail("run", e))?;
    for (name, v) in &t.env {
        println!("{name} = {}", v.to_decimal_digits(((prec as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1));
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tune {
            source,
            opts,
            emit_lp,
            report,
            timings,
        } => cmd_tune(&source, &opts, emit_lp.as_deref(), report.as_deref(), timings),
        Command::Verify {
            source,
            opts,
            widths,
            out,
        } => cmd_verify(&source, &opts, widths.as_deref(), out.as_deref()),
        Command::Bench {
            nsb,
            years,
            dt,
            method,
            pref,
            cond_nsb,
            pmax,
            out,
            sample_every,
            jobs,
        } => cmd_bench(nsb, years, dt, method, pref, cond_nsb, pmax, out, sample_every, jobs),
        Command::ExportLp { source, opts, out } => cmd_export(&source, &opts, out.as_deref()),
        Command::Run {
            source,
            prec,
            samples,
            iteration_cap,
        } => cmd_run(&source, prec, samples.as_deref(), iteration_cap),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("{}: {}", f.stage, f.message);
            ExitCode::from(1)
        }
    }
}
