//! Command-line front end: tensor generation, best rank-1 and rank-R
//! decomposition runs with CSV traces, and the experiment harness.
//!
//! Exit codes: 0 when the run converged, 2 when the iteration budget ran
//! out without convergence, 1 on any error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parocp::exec::Execution;
use parocp::experiments::{
    parse_rank1_algo, parse_rank1_init, parse_schedule, parse_spec, run_convergence,
    run_success_ratio, ExperimentKind,
};
use parocp::generators::{mult_tensor, random_kruskal, Collinearity, MultTensorSpec};
use parocp::paro::{
    cpd_als, epc_init, paro_decompose, random_init, AlsOptions, CpdInit, ParoOptions,
};
use parocp::rank1::{solve_rank1, Rank1Init, SolveOptions};
use parocp::tensor::DenseTensor;

#[derive(Parser)]
#[command(
    name = "parocp",
    version,
    about = "Dense-tensor CP decomposition via parallel rank-one updates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate benchmark tensors in the .ten text format
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Best rank-1 tensor approximation of a .ten file
    Rank1(Rank1Args),
    /// Rank-R CP decomposition of a .ten file
    Cpd(CpdArgs),
    /// Run an experiment described by a spec file
    Experiment {
        /// success-ratio | convergence
        kind: String,
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Matrix-multiplication tensor for (M x N) * (N x P)
    Mult {
        m: usize,
        n: usize,
        p: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Seeded random Kruskal tensor, optionally with collinear blocks
    Random {
        /// Comma-separated extents, e.g. 5,5,5
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        /// Pairwise-cosine range LO,HI inside each block
        #[arg(long, value_delimiter = ',')]
        collinear: Option<Vec<f64>>,
        /// Comma-separated block sizes summing to the rank
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additive Gaussian noise level in dB (omit for noise-free)
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Rank1Args {
    #[arg(short, long)]
    input: PathBuf,
    /// als | r1lm | roro
    #[arg(long, default_value = "roro")]
    algo: String,
    /// svd | ttsvd | ttsvd:P0,P1,... | ttsvd-best
    #[arg(long, default_value = "svd")]
    init: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Per-iteration relative-error CSV
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Disable the rayon pool
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CpdArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    /// als | paro
    #[arg(long, default_value = "paro")]
    algo: String,
    /// fixed:G | regular:K:ETA | adaptive:K:ETA:G0 (gamma R values)
    #[arg(long, default_value = "adaptive:20:1.4142135623730951:5")]
    schedule: String,
    /// Inner rank-1 solver for paro: als | r1lm | roro
    #[arg(long, default_value = "roro")]
    inner: String,
    #[arg(long, default_value_t = 1)]
    inner_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop at this relative error
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Stop when consecutive errors change less than this
    #[arg(long, default_value_t = 1e-12)]
    delta_tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Apply the error-preserving norm correction to the random init
    #[arg(long)]
    epc: bool,
    /// Per-iteration CSV: iter,relative_error,mu,gamma_r,elapsed_ms
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Disable the rayon pool
    #[arg(long)]
    sequential: bool,
}

fn write_named<W: FnOnce(&mut dyn Write) -> parocp::Result<()>>(
    path: &PathBuf,
    w: W,
) -> parocp::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    w(&mut f)
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Gen { what } => {
            match what {
                GenCmd::Mult { m, n, p, out } => {
                    let spec = MultTensorSpec::new(m, n, p).map_err(|e| e.to_string())?;
                    let t = mult_tensor(spec);
                    t.save(&out).map_err(|e| e.to_string())?;
                    match parocp::generators::known_rank(spec) {
                        Some(r) => println!(
                            "wrote {} ({:?}, known rank {})",
                            out.display(),
                            t.shape(),
                            r
                        ),
                        None => println!("wrote {} ({:?})", out.display(), t.shape()),
                    }
                }
                GenCmd::Random {
                    dims,
                    rank,
                    collinear,
                    blocks,
                    seed,
                    snr_db,
                    out,
                } => {
                    let coll = match collinear {
                        Some(range) => {
                            if range.len() != 2 {
                                return Err("--collinear needs LO,HI".into());
                            }
                            Some(Collinearity {
                                lo: range[0],
                                hi: range[1],
                                blocks: blocks.unwrap_or_else(|| vec![rank]),
                            })
                        }
                        None => None,
                    };
                    let (_, mut t) = random_kruskal(&dims, rank, seed, coll.as_ref())
                        .map_err(|e| e.to_string())?;
                    if let Some(snr) = snr_db {
                        t = parocp::generators::add_noise(&t, snr, seed ^ 0x5eed)
                            .map_err(|e| e.to_string())?;
                    }
                    t.save(&out).map_err(|e| e.to_string())?;
                    println!(
                        "wrote {} ({:?}, rank {}, seed {})",
                        out.display(),
                        t.shape(),
                        rank,
                        seed
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Rank1(args) => {
            let t = DenseTensor::load(&args.input).map_err(|e| e.to_string())?;
            let algo = parse_rank1_algo(&args.algo).map_err(|e| e.to_string())?;
            let init = match parse_rank1_init(&args.init).map_err(|e| e.to_string())? {
                Rank1Init::Ttsvd(p) if p.is_empty() => Rank1Init::Ttsvd((0..t.order()).collect()),
                other => other,
            };
            let opts = SolveOptions {
                tol: args.tol,
                max_iters: args.max_iters,
                exec: if args.sequential {
                    Execution::Sequential
                } else {
                    Execution::Parallel
                },
            };
            let (_, trace) = solve_rank1(&t, algo, init, &opts).map_err(|e| e.to_string())?;
            println!(
                "final relative error {:.6e} | scaling factor {:.6} | {} iterations",
                trace.final_error(),
                trace.scaling_factor,
                trace.iterations
            );
            if let Some(path) = args.trace {
                write_named(&path, |w| {
                    writeln!(w, "iter,relative_error")?;
                    for (k, e) in trace.errors.iter().enumerate() {
                        writeln!(w, "{},{:.16e}", k, e)?;
                    }
                    Ok(())
                })
                .map_err(|e| e.to_string())?;
            }
            Ok(if trace.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Cmd::Cpd(args) => {
            let t = DenseTensor::load(&args.input).map_err(|e| e.to_string())?;
            let exec = if args.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let mut init = random_init(t.shape(), args.rank, args.seed);
            if args.epc {
                init = epc_init(&t, &init).map_err(|e| e.to_string())?;
            }
            let (converged, final_error, rows): (bool, f64, Vec<(f64, String, String, f64)>) =
                match args.algo.as_str() {
                    "als" => {
                        let opts = AlsOptions {
                            tol: args.tol,
                            delta_tol: args.delta_tol,
                            max_iters: args.max_iters,
                        };
                        let (_, trace) = cpd_als(&t, args.rank, CpdInit::Model(init), &opts)
                            .map_err(|e| e.to_string())?;
                        let rows = trace
                            .relative_errors
                            .iter()
                            .zip(&trace.elapsed_ms)
                            .map(|(&e, &ms)| (e, String::new(), String::new(), ms))
                            .collect();
                        (trace.converged, trace.final_error(), rows)
                    }
                    "paro" => {
                        let opts = ParoOptions {
                            schedule: parse_schedule(&args.schedule).map_err(|e| e.to_string())?,
                            inner: parse_rank1_algo(&args.inner).map_err(|e| e.to_string())?,
                            inner_steps: args.inner_steps,
                            tol: args.tol,
                            delta_tol: args.delta_tol,
                            max_iters: args.max_iters,
                            exec,
                            seed: args.seed,
                            record_state: false,
                        };
                        let (_, trace) = paro_decompose(&t, args.rank, CpdInit::Model(init), &opts)
                            .map_err(|e| e.to_string())?;
                        let rows = trace
                            .iters
                            .iter()
                            .map(|s| {
                                (
                                    s.relative_error,
                                    format!("{:.16e}", s.mu),
                                    format!("{:.16e}", s.gamma_r),
                                    s.elapsed_ms,
                                )
                            })
                            .collect();
                        (trace.converged, trace.final_error(), rows)
                    }
                    other => return Err(format!("unknown cpd algorithm '{}'", other)),
                };
            println!(
                "final relative error {:.6e} after {} recorded iterations",
                final_error,
                rows.len().saturating_sub(1)
            );
            if let Some(path) = args.trace {
                write_named(&path, |w| {
                    writeln!(w, "iter,relative_error,mu,gamma_r,elapsed_ms")?;
                    for (k, (e, mu, gr, ms)) in rows.iter().enumerate() {
                        writeln!(w, "{},{:.16e},{},{},{:.3}", k, e, mu, gr, ms)?;
                    }
                    Ok(())
                })
                .map_err(|e| e.to_string())?;
            }
            Ok(if converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Cmd::Experiment { kind, spec } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| e.to_string())?;
            let parsed = parse_spec(&text).map_err(|e| e.to_string())?;
            let expected_kind = match kind.as_str() {
                "success-ratio" => ExperimentKind::SuccessRatio,
                "convergence" => ExperimentKind::Convergence,
                other => return Err(format!("unknown experiment kind '{}'", other)),
            };
            if parsed.kind != expected_kind {
                return Err(format!(
                    "spec file declares a different experiment kind than '{}'",
                    kind
                ));
            }
            match expected_kind {
                ExperimentKind::SuccessRatio => {
                    let report = run_success_ratio(&parsed, Execution::Parallel)
                        .map_err(|e| e.to_string())?;
                    let mut summary = Vec::new();
                    report
                        .write_summary_csv(&mut summary)
                        .map_err(|e| e.to_string())?;
                    print!("{}", String::from_utf8_lossy(&summary));
                    if let Some(out) = &parsed.out {
                        write_named(out, |w| report.write_csv(w)).map_err(|e| e.to_string())?;
                        println!("raw errors written to {}", out.display());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                ExperimentKind::Convergence => {
                    let outcome = match &parsed.out {
                        Some(out) => {
                            let mut f = std::io::BufWriter::new(
                                std::fs::File::create(out).map_err(|e| e.to_string())?,
                            );
                            let o = run_convergence(&parsed, &mut f).map_err(|e| e.to_string())?;
                            println!("trace written to {}", out.display());
                            o
                        }
                        None => {
                            let mut stdout = std::io::stdout();
                            run_convergence(&parsed, &mut stdout).map_err(|e| e.to_string())?
                        }
                    };
                    println!(
                        "final relative error {:.6e} after {} iterations (converged: {})",
                        outcome.final_error, outcome.iterations, outcome.converged
                    );
                    Ok(if outcome.converged {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    })
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::FAILURE
        }
    }
}
