//! Command-line interface to the sbm-mldeg library.
//!
//! Every command prints one JSON document on stdout (the `matrix` command can
//! print CSV instead) and diagnostics on stderr. Exit codes: 0 success or
//! agreement, 1 disagreement or failed check, 2 usage or input error,
//! 3 numeric instability.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sbm_mldeg::binomials::{count_by_kind, enumerate_binomials, MoveKind};
use sbm_mldeg::blockmodel::{design_matrix, sufficient_statistic, BlockSpec, Graph};
use sbm_mldeg::factorization::{verify_factorization, FactorizationReport, Verdict};
use sbm_mldeg::homotopy::solve;
use sbm_mldeg::likelihood::{assemble, kernel_chart, sample_generic_u, square_up};
use sbm_mldeg::mldeg::{mldeg_formula, mldeg_numeric, MLDegreeReport, NumericConfig, TrialSeeds, DEFAULT_MAX_CODIM};
use sbm_mldeg::mle::{fit, MleConfig};
use sbm_mldeg::Error;

const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Parser)]
#[command(name = "sbm-mldeg", version, about = "ML degree of the beta-stochastic blockmodel")]
struct Cli {
    /// Worker threads for path tracking (default: all cores).
    #[arg(long, global = true, env = "SBM_MLDEG_THREADS")]
    threads: Option<usize>,

    /// Human-readable output instead of compact JSON.
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sizes {
    /// Block sizes n_1 ... n_k.
    #[arg(required = true, value_parser = clap::value_parser!(u64).range(1..))]
    sizes: Vec<u64>,
}

impl Sizes {
    fn spec(&self) -> Result<BlockSpec, Error> {
        BlockSpec::new(self.sizes.iter().map(|&n| n as usize).collect())
    }
}

#[derive(Args)]
struct Numeric {
    /// First trial seed; trial i uses seed + i.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,

    /// Full-system residual filter.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Largest kernel dimension solved without --allow-large.
    #[arg(long, default_value_t = DEFAULT_MAX_CODIM)]
    max_codim: usize,

    #[arg(long)]
    allow_large: bool,
}

impl Numeric {
    fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|i| self.seed.wrapping_add(i)).collect()
    }

    fn config(&self) -> NumericConfig {
        NumericConfig { residual_tol: self.tol, max_codim: self.max_codim, allow_large: self.allow_large, ..Default::default() }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form ML degree.
    Formula(Sizes),
    /// Numeric count of complex solutions compared with the formula.
    Count {
        #[command(flatten)]
        sizes: Sizes,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Quadratic binomials with counts by kind.
    Basis(Sizes),
    /// Design matrix.
    Matrix {
        #[command(flatten)]
        sizes: Sizes,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Json)]
        format: MatrixFormat,
    },
    /// Sufficient statistic of a graph file.
    Stats { graph: PathBuf },
    /// Maximum likelihood fit to a graph file.
    Mle {
        graph: PathBuf,
        /// Added to every dyad indicator so the data is strictly positive.
        #[arg(long, default_value_t = 1.0)]
        pseudocount: f64,
    },
    /// Check the last-block factorization of the solution set.
    VerifyFactor {
        #[command(flatten)]
        sizes: Sizes,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Likelihood equations for generic data drawn from a seed.
    System {
        #[command(flatten)]
        sizes: Sizes,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Solver report for the squared-up system of one trial.
    Solve {
        #[command(flatten)]
        sizes: Sizes,
        #[command(flatten)]
        numeric: Numeric,
        /// Include wall-clock time (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
}

/// Outcome of a command: a payload to print and an exit code.
struct Outcome {
    payload: Payload,
    code: u8,
}

enum Payload {
    Json(Value),
    Text(String),
}

impl Outcome {
    fn ok(v: Value) -> Self {
        Self { payload: Payload::Json(v), code: 0 }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::NonGeneric(_) => 3,
        Error::EulerianRange { .. } => 1,
        _ => 2,
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn read_graph(path: &PathBuf) -> Result<Graph, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidGraph(format!("{}: {e}", path.display())))?;
    Graph::from_json(&text).map_err(|e| match e {
        Error::InvalidGraph(m) => Error::InvalidGraph(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn count_table(r: &MLDegreeReport) -> String {
    let mut s = format!("model        M({})\nformula      {}\n", join(&r.blocks), r.formula);
    s += &format!("kernel dim   {}\n", r.codim);
    s += "seed         count  paths  diverged  failed  filtered\n";
    for t in &r.trials {
        s += &format!(
            "{:<12} {:>5}  {:>5}  {:>8}  {:>6}  {:>8}\n",
            t.seed, t.count, t.paths_tracked, t.diverged, t.failed, t.filtered_out
        );
    }
    let numeric = r.numeric_count.map_or("unstable".to_string(), |n| n.to_string());
    let agree = match r.agreement {
        Some(true) => "yes",
        Some(false) => "NO",
        None => "n/a",
    };
    s += &format!("numeric      {numeric}\nagreement    {agree}\n");
    for w in &r.warnings {
        s += &format!("warning      {w}\n");
    }
    s
}

fn factor_table(r: &FactorizationReport) -> String {
    let mut s = format!("model  M({})  =  M({}) x M({})\n", join(&r.blocks), join(&r.m1), join(&r.m2));
    s += "seed         |S|  |S1|  |S2|  bijection  membership  round-trip  passed\n";
    for t in &r.trials {
        s += &format!(
            "{:<12} {:>3}  {:>4}  {:>4}  {:>9}  {:>10.1e}  {:>10.1e}  {}\n",
            t.seed,
            t.size_s,
            t.size_s1,
            t.size_s2,
            t.injective && t.surjective,
            t.max_membership_residual,
            t.max_round_trip_s.max(t.max_round_trip_pairs),
            t.passed
        );
    }
    s += &format!("verdict {}\n", to_value(&r.verdict).as_str().unwrap_or("?"));
    s
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn run(command: &Command, pretty: bool) -> Result<Outcome, Error> {
    match command {
        Command::Formula(sizes) => {
            let spec = sizes.spec()?;
            let value = mldeg_formula(&spec);
            // Decimal digits are a valid JSON number of any size.
            let payload =
                Payload::Text(if pretty { format!("MLdeg {spec} = {value}\n") } else { format!("{value}\n") });
            Ok(Outcome { payload, code: 0 })
        }
        Command::Count { sizes, numeric } => {
            let spec = sizes.spec()?;
            let report = mldeg_numeric(&spec, &numeric.seeds(), &numeric.config())?;
            let code = match report.agreement {
                Some(true) => 0,
                Some(false) => 1,
                None => 3,
            };
            let payload = if pretty { Payload::Text(count_table(&report)) } else { Payload::Json(to_value(&report)) };
            Ok(Outcome { payload, code })
        }
        Command::Basis(sizes) => {
            let spec = sizes.spec()?;
            let binomials = enumerate_binomials(&spec);
            let counts = count_by_kind(&binomials);
            let kinds: serde_json::Map<String, Value> =
                MoveKind::ALL.iter().zip(counts).map(|(k, c)| (k.label().to_string(), json!(c))).collect();
            Ok(Outcome::ok(json!({
                "blocks": spec.sizes(),
                "count": binomials.len(),
                "kinds": kinds,
                "binomials": binomials,
            })))
        }
        Command::Matrix { sizes, format } => {
            let a = design_matrix(&sizes.spec()?);
            match format {
                MatrixFormat::Json => Ok(Outcome::ok(to_value(&a.to_json()))),
                MatrixFormat::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let mut header = vec!["row".to_string()];
                    header.extend(a.column_labels());
                    w.write_record(&header).expect("in-memory write");
                    for (label, row) in a.row_labels().iter().zip(a.rows()) {
                        let mut rec = vec![label.to_string()];
                        rec.extend(row.iter().map(u8::to_string));
                        w.write_record(&rec).expect("in-memory write");
                    }
                    let bytes = w.into_inner().expect("in-memory flush");
                    Ok(Outcome { payload: Payload::Text(String::from_utf8(bytes).expect("utf-8")), code: 0 })
                }
            }
        }
        Command::Stats { graph } => {
            let g = read_graph(graph)?;
            let s = sufficient_statistic(&g);
            Ok(Outcome::ok(json!({
                "blocks": g.spec().sizes(),
                "statistic": s.to_vec(),
                "degrees": s.degrees,
                "block_counts": s.block_counts,
            })))
        }
        Command::Mle { graph, pseudocount } => {
            if !(*pseudocount > 0.0) {
                return Err(Error::NonPositiveData { index: 0, value: *pseudocount });
            }
            let g = read_graph(graph)?;
            let u: Vec<f64> = g.indicator().iter().map(|&x| f64::from(x) + pseudocount).collect();
            let f = fit::<f64>(g.spec(), &u, &MleConfig::default())?;
            Ok(Outcome::ok(to_value(&f.to_json(&u))))
        }
        Command::VerifyFactor { sizes, numeric } => {
            let spec = sizes.spec()?;
            let report = verify_factorization(&spec, &numeric.seeds(), &numeric.config())?;
            let code = match report.verdict {
                Verdict::Verified => 0,
                Verdict::Failed => 1,
                Verdict::Inconclusive => 3,
            };
            let payload = if pretty { Payload::Text(factor_table(&report)) } else { Payload::Json(to_value(&report)) };
            Ok(Outcome { payload, code })
        }
        Command::System { sizes, seed } => {
            let spec = sizes.spec()?;
            let data = sample_generic_u(&spec, TrialSeeds::derive(*seed).data);
            let system = assemble(&spec, &data.u)?;
            let chart = kernel_chart(&system);
            Ok(Outcome::ok(to_value(&system.export(&chart))))
        }
        Command::Solve { sizes, numeric, timing } => {
            let spec = sizes.spec()?;
            let config = numeric.config();
            sbm_mldeg::mldeg::check_gate(&spec, &config)?;
            let seeds = TrialSeeds::derive(numeric.seed);
            let system = assemble(&spec, &sample_generic_u(&spec, seeds.data).u)?;
            let chart = kernel_chart(&system);
            let square = square_up::<f64>(&system, &chart, seeds.squaring)?;
            let set = solve(&square, &config.tracker.reseeded(seeds.gamma));
            let code = if set.failed > 0 { 3 } else { 0 };
            Ok(Outcome { payload: Payload::Json(to_value(&set.report(*timing))), code })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli.command, cli.pretty) {
        Ok(outcome) => {
            let text = match outcome.payload {
                Payload::Json(v) if cli.pretty => serde_json::to_string_pretty(&v).expect("json") + "\n",
                Payload::Json(v) => v.to_string() + "\n",
                Payload::Text(t) => t,
            };
            let mut out = io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
