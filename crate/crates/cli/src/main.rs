use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tiling_cli::{
    classify_many, render, scan_inputs, Cache, ClassFilter, CliError, Format, CACHE_ENV, EXIT_BUDGET, EXIT_MISMATCH,
    EXIT_OK, EXIT_UNSUPPORTED,
};
use tiling_core::crosscheck::{self, DensityConfig, IdentityConfig, SuiteReport};
use tiling_core::densitylab::{
    exhaustive_probability, monte_carlo, seven_mod_24_constraints, three_mod_4_constraints, Constraint, DensityError,
    Predicate,
};

#[derive(Parser)]
#[command(name = "tiling", version, about = "Selmer, genus-parity and density computations for E^(n): y^2 = x(x-n)(x+3n)")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Jsonl,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Jsonl => Format::Jsonl,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityMode {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify one square-free n.
    #[command(allow_negative_numbers = true)]
    Classify {
        n: i64,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: OutFormat,
    },
    /// Classify every square-free n in a range.
    Scan {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        /// Residue filter such as "3 mod 24" or "3,7 mod 24".
        #[arg(long = "class")]
        class: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: OutFormat,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Exact or Monte Carlo probability of a predicate on the matrix model.
    Density {
        #[arg(value_enum)]
        mode: DensityMode,
        #[arg(long)]
        k: usize,
        /// Comma-separated symbols, starting with -1.
        #[arg(long, allow_hyphen_values = true, default_value = "-1,2,3")]
        sigma: String,
        /// always, corank_eq:D:M, det_cond_pos7, det_cond_neg7, joint_7, det_xor7, cond_q:J:V
        #[arg(long)]
        pred: String,
        /// Sum constraints D:PARITY, comma-separated; "none" for no constraints.
        #[arg(long, allow_hyphen_values = true)]
        constraints: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a consistency suite and list the first counterexamples.
    Crosscheck {
        /// theorem-A, comparison-7, oracle-equiv, descent-non-trivial, identities, density, rednei-oracle, root-table
        suite: String,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn open_cache(flag: Option<PathBuf>) -> Result<Option<Cache>, CliError> {
    flag.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from)).map(|p| Cache::open(&p)).transpose()
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.clone(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn records_exit(records: &[tiling_cli::ClassifyRecord]) -> i32 {
    if records.iter().any(|r| r.mismatch) {
        for r in records.iter().filter(|r| r.mismatch) {
            eprintln!("mismatch at n = {}: {}", r.n, r.mismatches.join("; "));
        }
        EXIT_MISMATCH
    } else {
        EXIT_OK
    }
}

fn parse_sigma(s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| CliError::Unsupported(format!("bad sigma entry {t:?}"))))
        .collect()
}

/// Without `--constraints`: the `7 mod 24` class when `2, 3` are in sigma, else `sum(z_-1) = 1`.
fn parse_constraints(s: Option<&str>, sigma: &[i64]) -> Result<Vec<Constraint>, CliError> {
    match s {
        None if sigma.contains(&2) && sigma.contains(&3) => Ok(seven_mod_24_constraints()),
        None => Ok(three_mod_4_constraints()),
        Some("none") => Ok(Vec::new()),
        Some(list) => list
            .split(',')
            .map(|t| {
                let bad = || CliError::Unsupported(format!("bad constraint {t:?}; expected D:PARITY"));
                let (d, p) = t.trim().rsplit_once(':').ok_or_else(bad)?;
                let d: i64 = d.parse().map_err(|_| bad())?;
                match p {
                    "0" => Ok(Constraint::new(d, false)),
                    "1" => Ok(Constraint::new(d, true)),
                    _ => Err(bad()),
                }
            })
            .collect(),
    }
}

fn density_error(e: DensityError) -> CliError {
    match e {
        DensityError::SpaceTooLarge { .. } => CliError::Budget(e.to_string()),
        _ => CliError::Unsupported(e.to_string()),
    }
}

fn print_suite(r: &SuiteReport) -> i32 {
    println!(
        "suite {}: {} ({} checked, {} violations)",
        r.suite,
        if r.passed() { "pass" } else { "FAIL" },
        r.checked,
        r.violations.len()
    );
    for n in &r.notes {
        println!("  {n}");
    }
    for v in r.violations.iter().take(10) {
        println!("  counterexample {}: {}", v.input, v.detail);
    }
    if r.passed() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    }
}

fn run_suite(name: &str, bound: Option<u64>, samples: Option<u64>, seed: Option<u64>) -> Result<SuiteReport, CliError> {
    Ok(match name {
        "theorem-A" => crosscheck::theorem_a(bound.unwrap_or(20_000)),
        "comparison-7" => crosscheck::comparison_seven(bound.unwrap_or(20_000)),
        "oracle-equiv" => crosscheck::oracle_equiv(bound.unwrap_or(1000) as i64),
        "descent-non-trivial" => crosscheck::nontrivial_example(bound.unwrap_or(10_000)),
        "identities" => {
            let d = IdentityConfig::default();
            crosscheck::identities(IdentityConfig {
                samples: samples.map_or(d.samples, |s| s as usize),
                bound: bound.unwrap_or(d.bound),
                seed: seed.unwrap_or(d.seed),
            })
        }
        "density" => {
            let d = DensityConfig::default();
            let gerth_bound = match bound {
                Some(b) if b > u64::from(u32::MAX) => {
                    return Err(CliError::Budget(format!("sieve bound {b} too large")))
                }
                Some(b) => b as u32,
                None => d.gerth_bound,
            };
            crosscheck::density(DensityConfig {
                mc_samples: samples.unwrap_or(d.mc_samples),
                seed: seed.unwrap_or(d.seed),
                gerth_bound,
                ..d
            })
        }
        "rednei-oracle" | "redei-oracle" => crosscheck::redei_oracle(bound.unwrap_or(20_000)),
        "root-table" => crosscheck::root_table(),
        other => return Err(CliError::Unsupported(format!("unknown suite {other:?}"))),
    })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Classify { n, cache, format } => {
            let mut cache = open_cache(cache)?;
            let records = classify_many(&[n], cache.as_mut())?;
            emit(&render(&records, format.into()), None)?;
            Ok(records_exit(&records))
        }
        Cmd::Scan { from, to, class, jobs, out, format, cache } => {
            let filter = class.as_deref().map(ClassFilter::parse).transpose()?;
            let inputs = scan_inputs(from, to, filter.as_ref())?;
            let mut cache = open_cache(cache)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Budget(e.to_string()))?;
            let records = pool.install(|| classify_many(&inputs, cache.as_mut()))?;
            emit(&render(&records, format.into()), out.as_ref())?;
            Ok(records_exit(&records))
        }
        Cmd::Density { mode, k, sigma, pred, constraints, samples, seed } => {
            let sigma = parse_sigma(&sigma)?;
            let cons = parse_constraints(constraints.as_deref(), &sigma)?;
            let p = Predicate::parse(&pred).map_err(density_error)?;
            let est = match mode {
                DensityMode::Exact => exhaustive_probability(k, &sigma, &cons, p),
                DensityMode::Mc => monte_carlo(k, &sigma, &cons, p, samples, seed),
            }
            .map_err(density_error)?;
            let sigma_s: Vec<String> = sigma.iter().map(i64::to_string).collect();
            let cons_s: Vec<String> = cons.iter().map(|c| format!("{}:{}", c.d, u8::from(c.parity))).collect();
            println!(
                "mode={} k={k} sigma={} constraints={} pred={} p_hat={:.6} stderr={:.6} exact={} n_samples={} n_given={} seed={}",
                match mode {
                    DensityMode::Exact => "exact",
                    DensityMode::Mc => "mc",
                },
                sigma_s.join(","),
                if cons_s.is_empty() { "none".to_string() } else { cons_s.join(",") },
                p.name(),
                est.p_hat,
                est.stderr,
                est.ratio.map_or_else(|| "-".to_string(), |r| r.to_string()),
                est.n_samples,
                est.n_given,
                est.seed,
            );
            Ok(EXIT_OK)
        }
        Cmd::Crosscheck { suite, bound, samples, seed } => Ok(print_suite(&run_suite(&suite, bound, samples, seed)?)),
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!([EXIT_OK, EXIT_MISMATCH, EXIT_UNSUPPORTED, EXIT_BUDGET].contains(&code));
    ExitCode::from(code as u8)
}
