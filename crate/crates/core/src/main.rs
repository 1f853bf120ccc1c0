use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pelcr::canon::canonical_dump;
use pelcr::engine::EngineOptions;
use pelcr::metrics::{merged_trace, run_source, speedup, upm_csv};
use pelcr::net::Net;
use pelcr::oracle::{self, ExLimits};
use pelcr::runtime::{AggPolicy, RuntimeConfig};
use pelcr::translate::parse;
use pelcr::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Parser, Debug)]
#[command(name = "pelcr", version, about = "Parallel optimal reduction of lambda terms")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Independent checkers.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Print the execution formula of a dumped net.
    Ex {
        netdump: PathBuf,
        /// Treat every edge as already combusted (for final nets).
        #[arg(long)]
        reduced: bool,
        #[arg(long, default_value_t = 200)]
        max_edges: usize,
    },
    /// Check acyclicity, splitness and square-freeness of a dumped net.
    Validate { netdump: PathBuf },
    /// Normal-order beta normal form of a term.
    Beta {
        term: String,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Term to reduce, given inline.
    term: Option<String>,
    /// Read the term from a file instead.
    #[arg(long, short)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_parser = parse_agg, default_value = "vab")]
    agg: AggPolicy,
    #[arg(long, default_value_t = 4)]
    max_age: u32,
    #[arg(long, default_value_t = 32)]
    age_cap: u32,
    /// Drain the incoming channel every K processed items.
    #[arg(long, default_value_t = 64)]
    drain: usize,
    #[arg(long, value_enum, default_value = "on")]
    gc: Switch,
    #[arg(long, value_enum, default_value = "on")]
    opt_one: Switch,
    #[arg(long, value_enum, default_value = "on")]
    slot_skip: Switch,
    /// Comma-separated free variables of the term.
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    /// Write the final net here.
    #[arg(long)]
    dump_net: Option<PathBuf>,
    /// Relabel the dumped net canonically.
    #[arg(long)]
    canonical: bool,
    /// Write run metrics as CSV here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write the upm trace as CSV here.
    #[arg(long)]
    trace_upm: Option<PathBuf>,
    /// Run once per listed worker count and print speedups.
    #[arg(long, value_delimiter = ',')]
    speedup: Vec<usize>,
}

fn parse_agg(s: &str) -> Result<AggPolicy, String> {
    s.parse()
}

fn config(a: &RunArgs) -> Result<RuntimeConfig, String> {
    if a.workers == 0 {
        return Err("--workers must be at least 1".into());
    }
    if a.max_age == 0 {
        return Err("--max-age must be at least 1".into());
    }
    if a.age_cap < a.max_age {
        return Err("--age-cap must be at least --max-age".into());
    }
    if a.drain == 0 {
        return Err("--drain must be at least 1".into());
    }
    Ok(RuntimeConfig {
        workers: a.workers,
        agg: a.agg,
        max_age: a.max_age,
        age_cap: a.age_cap,
        drain_every: a.drain,
        engine: EngineOptions {
            opt_one: a.opt_one.on(),
            slot_skip: a.slot_skip.on(),
            gc: a.gc.on(),
        },
        trace_upm: a.trace_upm.is_some(),
        ..RuntimeConfig::default()
    })
}

fn read_net(path: &PathBuf) -> Result<Net, Error> {
    Ok(Net::parse_dump(&fs::read_to_string(path)?)?)
}

fn oracle_cmd(cmd: OracleCmd) -> Result<(), Error> {
    match cmd {
        OracleCmd::Ex {
            netdump,
            reduced,
            max_edges,
        } => {
            let net = read_net(&netdump)?;
            let flags = vec![reduced; net.edges.len()];
            let limits = ExLimits {
                max_edges,
                ..ExLimits::default()
            };
            print!("{}", oracle::execution_formula(&net, &flags, limits)?);
        }
        OracleCmd::Validate { netdump } => {
            let r = oracle::check_net_validity(&read_net(&netdump)?);
            for v in &r.cycles {
                println!("cycle through {v}");
            }
            for t in &r.split_violations {
                println!("split violation on edges {t:?}");
            }
            for s in &r.square_violations {
                println!("square violation on {s:?}");
            }
            println!("{}", if r.is_valid() { "valid" } else { "invalid" });
        }
        OracleCmd::Beta { term, fuel } => {
            let t = parse(&term).map_err(pelcr::translate::TranslateError::from)?;
            println!("{}", oracle::beta_normal_form(&t, fuel)?);
        }
    }
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<(), Error> {
    let src = match (&a.term, &a.file) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => fs::read_to_string(p)?,
        _ => {
            return Err(Error::Usage(
                "give a term inline or with --file, not both".into(),
            ))
        }
    };
    let cfg = config(&a).map_err(Error::Usage)?;
    if !a.speedup.is_empty() {
        println!("workers,wall_seconds,speedup,aas");
        for r in speedup(&src, &a.free, &cfg, &a.speedup)? {
            println!("{},{:.6},{:.3},{:.3}", r.workers, r.wall.as_secs_f64(), r.speedup, r.aas);
        }
        return Ok(());
    }
    let run = run_source(&src, &a.free, &cfg)?;
    let r = &run.report;
    println!(
        "workers={} wall={:.3}s nodes_created={} compositions={} final_nodes={} final_edges={} aas={:.2}",
        r.workers,
        r.wall.as_secs_f64(),
        r.stats.nodes_created,
        r.stats.compositions,
        r.final_nodes,
        r.final_edges,
        r.aas
    );
    if let Some(p) = &a.dump_net {
        let text = if a.canonical {
            canonical_dump(run.net())
        } else {
            run.net().dump()
        };
        fs::write(p, text)?;
    }
    if let Some(p) = &a.metrics {
        fs::write(p, r.to_csv())?;
    }
    if let Some(p) = &a.trace_upm {
        fs::write(p, upm_csv(&merged_trace(&run.outcome)))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Some(Command::Oracle(cmd)) => oracle_cmd(cmd),
        None => run_cmd(cli.run),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pelcr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
