//! The `uavpki` command line.
//!
//! Exit codes: 0 on success or when every expectation is met, 1 for a
//! negative domain answer (no path, failed verification, unmet
//! expectation), 2 for usage and input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use crate::crypto::AccountId;
use crate::ledger::{
    read_chain_file, write_chain_file, Chain, ChainBuilder, ChainFileError, GenesisConfig, Schedule,
};
use crate::lightclient::{make_bundle, Bundle, LightClient};
use crate::selection::ViewSpec;
use crate::simnet::{run_scenario, Scenario};
use crate::trustgraph::{build_trust_graph, find_valid_path, TrustGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "uavpki", version, about = "Blockchain-backed PKI for UAV swarms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or check a chain file.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// Write a provisioning bundle for one UAV.
    Provision(ProvisionArgs),
    /// Check a provisioning bundle.
    #[command(subcommand)]
    Bundle(BundleCommand),
    /// Find the shortest valid trust path between two entities.
    Path(PathArgs),
    /// Run a simulation scenario.
    Sim(SimArgs),
}

#[derive(Debug, Subcommand)]
pub enum ChainCommand {
    Build {
        #[arg(long)]
        genesis: PathBuf,
        /// JSON schedule of transactions grouped into blocks.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ProvisionArgs {
    #[arg(long)]
    pub chain: PathBuf,
    /// Entity name or hex account id.
    #[arg(long)]
    pub owner: String,
    #[arg(long = "k-out")]
    pub k_out: u8,
    #[arg(long = "k-in")]
    pub k_in: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BundleCommand {
    Verify {
        #[arg(long)]
        bundle: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Replaces the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print only the report digest.
    #[arg(long = "digest-only")]
    pub digest_only: bool,
    /// Also write the full report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: error.into(),
    }
}

fn negative(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_NEGATIVE,
        error: error.into(),
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Chain(ChainCommand::Build {
            genesis,
            schedule,
            out: path,
        }) => chain_build(genesis, schedule.as_deref(), path, out),
        Command::Chain(ChainCommand::Verify { chain }) => chain_verify(chain, out),
        Command::Provision(args) => provision(args, out),
        Command::Bundle(BundleCommand::Verify { bundle }) => bundle_verify(bundle, out),
        Command::Path(args) => path(args, out),
        Command::Sim(args) => sim(args, out),
    }
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(input)
}

fn chain_build(genesis: &Path, schedule: Option<&Path>, path: &Path, out: &mut dyn Write) -> CmdResult {
    let config = GenesisConfig::load(genesis).map_err(input)?;
    let schedule: Schedule = match schedule {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(input)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(input)?
        }
        None => Schedule::default(),
    };
    let mut builder = ChainBuilder::new(config).map_err(input)?;
    for (i, block) in schedule.blocks.iter().enumerate() {
        for item in block {
            builder.queue(item).map_err(input)?;
        }
        builder
            .seal()
            .map_err(|e| input(anyhow!("schedule block {}: {e:?}", i + 1)))?;
    }
    let chain = builder.into_chain();
    write_chain_file(&chain, path).map_err(input)?;
    emit(
        out,
        format_args!("height {} tip {}", chain.height(), chain.tip_hash()),
    )?;
    Ok(EXIT_OK)
}

fn load_chain(path: &Path) -> Result<Chain, Failure> {
    read_chain_file(path).map_err(|e| match e {
        ChainFileError::Io(_) => input(anyhow!("{}: {e}", path.display())),
        other => negative(anyhow!("{}: {other}", path.display())),
    })
}

fn chain_verify(path: &Path, out: &mut dyn Write) -> CmdResult {
    let chain = load_chain(path)?;
    emit(
        out,
        format_args!("ok height {} tip {}", chain.height(), chain.tip_hash()),
    )?;
    Ok(EXIT_OK)
}

/// Resolves an entity by registered name, falling back to a hex account id.
pub fn resolve(graph: &TrustGraph, name: &str) -> anyhow::Result<AccountId> {
    match graph.find_by_name(name).as_slice() {
        [one] => return Ok(one.id),
        [] => {}
        _ => return Err(anyhow!("name `{name}` is ambiguous; use the account id")),
    }
    name.parse::<AccountId>()
        .ok()
        .filter(|id| graph.contains(id))
        .ok_or_else(|| anyhow!("unknown node `{name}`"))
}

fn provision(args: &ProvisionArgs, out: &mut dyn Write) -> CmdResult {
    let chain = load_chain(&args.chain).map_err(|f| input(f.error))?;
    let graph = build_trust_graph(chain.state());
    let owner = resolve(&graph, &args.owner).map_err(input)?;
    let spec = ViewSpec {
        owner,
        k_out: args.k_out,
        k_in: args.k_in,
    };
    let bundle = make_bundle(&chain, spec).map_err(input)?;
    let bytes = bundle.to_file_bytes().map_err(input)?;
    std::fs::write(&args.out, &bytes)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(input)?;
    let view = LightClient::from_bundle(&bundle).map_err(negative)?;
    emit(
        out,
        format_args!(
            "nodes {} edges {} txs {} bytes {}",
            view.view().graph.node_count(),
            view.view().graph.edge_count(),
            bundle.txs.len(),
            bytes.len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn bundle_verify(path: &Path, out: &mut dyn Write) -> CmdResult {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    let bundle = Bundle::from_file_bytes(&bytes).map_err(negative)?;
    let client = LightClient::from_bundle(&bundle).map_err(negative)?;
    let view = client.view();
    emit(
        out,
        format_args!(
            "ok owner {} as_of {} nodes {} edges {}",
            view.graph.display_name(&view.owner()),
            view.as_of_height,
            view.graph.node_count(),
            view.graph.edge_count()
        ),
    )?;
    Ok(EXIT_OK)
}

fn path(args: &PathArgs, out: &mut dyn Write) -> CmdResult {
    let chain = load_chain(&args.chain).map_err(|f| input(f.error))?;
    let graph = build_trust_graph(chain.state());
    let from = resolve(&graph, &args.from).map_err(input)?;
    let to = resolve(&graph, &args.to).map_err(input)?;
    match find_valid_path(&graph, &from, &to).map_err(input)? {
        Some(p) => {
            emit(out, format_args!("{}", p.display(&graph)))?;
            Ok(EXIT_OK)
        }
        None => {
            emit(out, format_args!("none"))?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn sim(args: &SimArgs, out: &mut dyn Write) -> CmdResult {
    let mut scenario = Scenario::load(&args.scenario).map_err(input)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let report = run_scenario(&scenario).map_err(input)?;
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json_pretty() + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(input)?;
    }
    if args.digest_only {
        emit(out, format_args!("{}", report.digest))?;
    } else {
        emit(out, format_args!("{}", report.to_json_pretty()))?;
    }
    Ok(if report.all_matched() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}
