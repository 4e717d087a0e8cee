use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use qkdnet::experiment::{
    rate_curve, run_rho_c_vs_n, run_scan_to, write_rate_csv, write_rho_c_csv, ExperimentConfig,
    CSV_SCHEMA_VERSION,
};
use qkdnet::netgen::{generate, GeneratedNetwork, ModelParams, NetworkSnapshot};
use qkdnet::qkdnet::{weigh_and_prune, ProtocolKind, ProtocolPolicy, QkdNetworkSnapshot};
use qkdnet::routing::widest_path;

#[derive(Debug, Parser)]
#[command(name = "qkdnet", version, about = "QKD over synthetic Internet-like networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON experiment or model/policy file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the master seed (scans) or network seed (generate).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "QKDNET_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one network and write it as JSON.
    Generate {
        #[arg(long)]
        n: Option<usize>,
        /// Real-space density, nodes per km².
        #[arg(long)]
        rho: Option<f64>,
        /// Also rate and prune the links with this protocol.
        #[arg(long)]
        protocol: Option<ProtocolKind>,
        #[arg(long)]
        k_min: Option<f64>,
    },
    /// Tabulate link key rate against fiber length.
    Rates {
        #[arg(long, default_value = "hybrid")]
        protocol: ProtocolKind,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 400.0)]
        to: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
    /// Run the scan described by --config.
    Scan,
    /// Critical density for each size in the config's scan.sizes.
    Rhoc,
    /// Widest path between two nodes of a saved network.
    Route {
        /// Network JSON from `generate`.
        #[arg(long)]
        network: PathBuf,
        /// Node ids as `a,b`.
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        /// Protocol for networks saved without rated links.
        #[arg(long)]
        protocol: Option<ProtocolKind>,
        #[arg(long)]
        k_min: Option<f64>,
    },
    /// Print version information.
    Version,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad node id `{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
    Partial(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(_) | Failure::Partial(_) => 2,
        }
    }
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn run_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Run(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("configuration error: {e:#}"),
                Failure::Run(e) => eprintln!("error: {e:#}"),
                Failure::Partial(msg) => eprintln!("partial failure: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(config_err)?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Version => {
            println!("qkdnet {} (csv schema v{CSV_SCHEMA_VERSION})", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Generate { n, rho, protocol, k_min } => {
            let (mut model, mut policy) = load_model_policy(g.config.as_deref())?;
            if let Some(n) = n {
                model.n_nodes = n;
            }
            if let Some(rho) = rho {
                model.rho = rho;
            }
            if let Some(seed) = g.seed {
                model.seed = seed;
            }
            model.validate().map_err(config_err)?;
            let net = generate(&model).map_err(run_err)?;
            log::info!(
                "generated N = {} with {} edges in {} rounds",
                net.n_nodes(),
                net.graph().edge_count(),
                net.stats.rounds
            );
            let mut w = output(g.out.as_deref())?;
            match protocol {
                Some(kind) => {
                    policy.kind = kind;
                    if let Some(k) = k_min {
                        policy.k_min = k;
                    }
                    policy.validate().map_err(config_err)?;
                    weigh_and_prune(&net, &policy).write_json(Some(&policy), &mut w)
                }
                None => net.write_json(&mut w),
            }
            .map_err(run_err)?;
            writeln!(w).and_then(|_| w.flush()).map_err(run_err)
        }
        Command::Rates { protocol, from, to, step } => {
            if !(step > 0.0) || !(to >= from) || from < 0.0 {
                return Err(config_err(anyhow!("need 0 <= from <= to and step > 0")));
            }
            let (_, mut policy) = load_model_policy(g.config.as_deref())?;
            policy.kind = protocol;
            policy.validate().map_err(config_err)?;
            let count = ((to - from) / step + 1e-9).floor() as usize + 1;
            let lengths: Vec<f64> = (0..count).map(|i| from + step * i as f64).collect();
            let w = output(g.out.as_deref())?;
            write_rate_csv(w, &rate_curve(&policy, &lengths)).map_err(run_err)
        }
        Command::Scan => {
            let cfg = load_experiment(g)?;
            let w = output(g.out.as_deref().or(cfg.output.as_deref()))?;
            let res = run_scan_to(&cfg, w).map_err(run_err)?;
            let failed = res.error_count();
            if failed > 0 {
                return Err(Failure::Partial(format!(
                    "{failed} of {} rows failed; grid points with no successful realization: {:?}",
                    res.rows.len(),
                    res.failed_grid_points()
                )));
            }
            Ok(())
        }
        Command::Rhoc => {
            let cfg = load_experiment(g)?;
            if cfg.scan.sizes.as_ref().is_none() {
                return Err(config_err(anyhow!("rhoc needs scan.sizes in the config")));
            }
            let rows = run_rho_c_vs_n(&cfg).map_err(classify)?;
            let w = output(g.out.as_deref().or(cfg.output.as_deref()))?;
            write_rho_c_csv(&cfg, w, &rows).map_err(run_err)
        }
        Command::Route { network, pair, protocol, k_min } => {
            let rates = load_rate_graph(&network, g.config.as_deref(), protocol, k_min)?;
            let res = widest_path(&rates, pair.0, pair.1).map_err(config_err)?;
            let mut w = output(g.out.as_deref())?;
            serde_json::to_writer(&mut w, &res).map_err(run_err)?;
            writeln!(w).and_then(|_| w.flush()).map_err(run_err)
        }
    }
}

fn classify(e: qkdnet::Error) -> Failure {
    match e {
        qkdnet::Error::Config(_) | qkdnet::Error::InvalidParameter { .. } => config_err(e),
        other => run_err(other),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(config_err)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_experiment(g: &Global) -> Result<ExperimentConfig, Failure> {
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| config_err(anyhow!("--config is required")))?;
    let mut cfg = ExperimentConfig::from_path(path).map_err(config_err)?;
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Reads the `model` and `policy` sections of a JSON file, ignoring the rest.
fn load_model_policy(path: Option<&Path>) -> Result<(ModelParams, ProtocolPolicy), Failure> {
    let Some(path) = path else {
        return Ok(Default::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(config_err)?;
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(config_err)?;
    let mut take = |key: &str| doc.get_mut(key).map(serde_json::Value::take);
    let model = match take("model") {
        Some(v) => serde_json::from_value(v).context("in `model`").map_err(config_err)?,
        None => ModelParams::default(),
    };
    let policy = match take("policy") {
        Some(v) => serde_json::from_value(v).context("in `policy`").map_err(config_err)?,
        None => ProtocolPolicy::default(),
    };
    Ok((model, policy))
}

fn load_rate_graph(
    path: &Path,
    config: Option<&Path>,
    protocol: Option<ProtocolKind>,
    k_min: Option<f64>,
) -> Result<qkdnet::routing::RateGraph, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(config_err)?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(config_err)?;
    let overridden = protocol.is_some() || k_min.is_some();
    let net = if doc.get("qkd_edges").is_some() {
        let snap: QkdNetworkSnapshot = serde_json::from_value(doc).map_err(config_err)?;
        if !overridden {
            return snap.rate_graph().map_err(config_err);
        }
        GeneratedNetwork::from_snapshot(NetworkSnapshot {
            params: snap.params,
            seed: snap.seed,
            nodes: snap.nodes,
            edges: snap.edges,
        })
    } else {
        serde_json::from_value::<NetworkSnapshot>(doc)
            .map_err(qkdnet::Error::from)
            .and_then(GeneratedNetwork::from_snapshot)
    }
    .map_err(config_err)?;
    let (_, mut policy) = load_model_policy(config)?;
    if let Some(kind) = protocol {
        policy.kind = kind;
    }
    if let Some(k) = k_min {
        policy.k_min = k;
    }
    policy.validate().map_err(config_err)?;
    Ok(weigh_and_prune(&net, &policy).rate_graph().clone())
}
