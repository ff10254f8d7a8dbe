use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use svcplan_automl::domain::Portfolio;
use svcplan_automl::learners;
use svcplan_automl::mlsplan::{self, pipeline_name, RunConfig, RunError, DEFAULT_ENDPOINT};
use svcplan_gsm::conformance::{self, Corpus};
use svcplan_gsm::server::{start, GsmConfig};
use svcplan_gsm::Client;
use svcplan_gsm::service::class;
use svcplan_gsm::testsvc;

const NO_SOLUTION: u8 = 3;
const CONFIG_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "svcplan", version, about = "Service composition planner and GSM runtime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the best pipeline on a dataset.
    Run {
        /// CSV file with a header row; the last column is the label.
        #[arg(long)]
        dataset: PathBuf,
        /// Overall budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        /// Budget per candidate evaluation in seconds.
        #[arg(long, default_value_t = 30.0)]
        eval_timeout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random completions per search node.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// GSM endpoints: the primary first, optionally a second one.
        #[arg(long = "endpoint")]
        endpoints: Vec<String>,
        #[arg(long, default_value = "all")]
        portfolio: Portfolio,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Domain file to use instead of the shipped pipeline domain.
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Write the evaluation trace (JSON lines) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the best-so-far curve of a trace.
    Report {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Start the primary GSM with the toy portfolio. Flags override the
    /// GSM_BIND, GSM_PORT, GSM_STORE and GSM_PUBLIC_URL variables.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        public_url: Option<String>,
        /// Also enable the echo, arith, accumulator and fail test services.
        #[arg(long)]
        test_services: bool,
        /// Serve only the secondary learners (gnb, knn3).
        #[arg(long)]
        secondary: bool,
    },
    /// Replay the golden protocol corpus against a GSM started on a fresh store.
    Conformance {
        #[arg(long)]
        endpoint: String,
        /// Corpus file; defaults to the shipped one.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Record a new corpus from the endpoint into this file instead.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            dataset,
            timeout,
            eval_timeout,
            seed,
            k,
            endpoints,
            portfolio,
            parallelism,
            domain,
            trace,
            json,
        } => {
            let seconds = |v: f64, flag: &str| {
                Duration::try_from_secs_f64(v)
                    .ok()
                    .filter(|d| !d.is_zero())
                    .ok_or_else(|| format!("--{flag} must be a positive number of seconds"))
            };
            let (timeout, eval_timeout) = match (seconds(timeout, "timeout"), seconds(eval_timeout, "eval-timeout")) {
                (Ok(t), Ok(e)) => (t, e),
                (Err(m), _) | (_, Err(m)) => {
                    eprintln!("error: {m}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            let config = RunConfig {
                dataset,
                timeout,
                eval_timeout,
                seed,
                k,
                endpoints: if endpoints.is_empty() { vec![DEFAULT_ENDPOINT.into()] } else { endpoints },
                portfolio,
                parallelism,
                domain,
            };
            run(&config, trace, json)
        }
        Command::Report { trace } => match mlsplan::read_trace(&trace) {
            Ok(events) => {
                println!("{:>9}  {:>8}  pipeline", "seconds", "loss");
                for (t, loss, plan) in mlsplan::best_so_far(&events) {
                    println!("{t:>9.3}  {loss:>8.4}  {plan}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", trace.display());
                ExitCode::from(CONFIG_ERROR)
            }
        },
        Command::Conformance { endpoint, corpus, record } => conformance(&endpoint, corpus, record),
        Command::Serve {
            port,
            store,
            bind,
            public_url,
            test_services,
            secondary,
        } => {
            let mut config = match GsmConfig::from_env() {
                Ok(c) => c,
                Err(m) => {
                    eprintln!("error: {m}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            config.port = port.unwrap_or(config.port);
            config.store = store.unwrap_or(config.store);
            config.bind = bind.unwrap_or(config.bind);
            config.public_url = public_url.or(config.public_url);
            let mut registry = if secondary { learners::secondary_registry() } else { learners::registry() };
            if test_services {
                registry = registry
                    .with(class::<testsvc::Echo>())
                    .with(class::<testsvc::Arith>())
                    .with(class::<testsvc::Accumulator>())
                    .with(class::<testsvc::Fail>());
            }
            match start(&config, registry) {
                Ok(server) => {
                    println!("listening on {}", server.url());
                    server.wait();
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: cannot serve on {}:{}: {e}", config.bind, config.port);
                    ExitCode::from(CONFIG_ERROR)
                }
            }
        }
    }
}

fn conformance(endpoint: &str, corpus: Option<PathBuf>, record: Option<PathBuf>) -> ExitCode {
    let client = Client::with_timeout(Duration::from_secs(30));
    if let Some(path) = record {
        return match conformance::record(&client, endpoint, &svcplan_automl::conformance::probes()) {
            Ok(c) => match std::fs::write(&path, c.to_pretty()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    ExitCode::FAILURE
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_ERROR)
            }
        };
    }
    let corpus = match corpus {
        Some(path) => match Corpus::load(&path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(CONFIG_ERROR);
            }
        },
        None => svcplan_automl::conformance::golden(),
    };
    let outcomes = conformance::check(&client, endpoint, &corpus);
    for o in &outcomes {
        match &o.detail {
            None => println!("PASS {}", o.name),
            Some(d) => println!("FAIL {}: {d}", o.name),
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} cases passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(config: &RunConfig, trace: Option<PathBuf>, json: bool) -> ExitCode {
    let outcome = match mlsplan::run(config) {
        Ok(o) => o,
        Err(RunError::Config(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(CONFIG_ERROR);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(path) = trace {
        if let Err(e) = mlsplan::write_trace(&path, &outcome) {
            eprintln!("error: cannot write trace {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    let stats = &outcome.search.stats;
    if json {
        let summary = serde_json::json!({
            "best": outcome.best,
            "elapsedMs": outcome.elapsed.as_millis() as u64,
            "evaluations": stats.evaluations_run,
            "solutionLog": outcome.search.solution_log,
        });
        println!("{summary}");
    }
    match &outcome.best {
        Some(best) => {
            if !json {
                println!("pipeline: {}", pipeline_name(&best.composition));
                println!("validation 0-1 loss: {:.4}", best.report.zero_one_loss);
                println!(
                    "evaluations: {} ({} failed, {} timed out) in {:.1}s",
                    stats.evaluations_run,
                    stats.evaluations_failed,
                    stats.evaluations_timed_out,
                    outcome.elapsed.as_secs_f64()
                );
            }
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("no solution found");
            ExitCode::from(NO_SOLUTION)
        }
    }
}
