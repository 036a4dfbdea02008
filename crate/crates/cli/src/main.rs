//! `bns`: runs one experiment per invocation and writes CSV rows plus a JSON
//! summary.
//!
//! Exit status: 0 when every invariant held, 1 when one failed, 2 on a usage
//! or configuration error. `NSB_THREADS` sets the worker thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use bilinear_ns::experiments::{parse_pairs, run, ExperimentConfig, ExperimentKind};
use bilinear_ns::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bns", version, about = "Bilinear Navier-Stokes spectral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every experiment; each flag overrides the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    /// Grid points per axis.
    #[arg(long)]
    points: Option<String>,
    /// Box period, e.g. `6.283` or `2pi`.
    #[arg(long)]
    period: Option<String>,
    #[arg(long)]
    ensemble_size: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// flat_binf, white_l2, divfree_vector or divfree_flat_bminus1.
    #[arg(long)]
    profile: Option<String>,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
    #[arg(long)]
    output: Option<String>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition-of-unity residual of the dyadic profile.
    PartitionCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<String>,
        /// Multiply the profile by `1 + eps` (fault injection).
        #[arg(long)]
        psi_eps: Option<String>,
    },
    /// Besov norms of an ensemble.
    Besov {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
    },
    /// Embedding chain constants of an ensemble.
    Embeddings {
        #[command(flatten)]
        common: Common,
    },
    /// Ratio `‖B(f,g)‖ / (‖f‖‖g‖)` over an ensemble of pairs.
    Boundedness {
        #[command(flatten)]
        common: Common,
        /// mu, nu, gaussian, t1 or t2.
        #[arg(long)]
        operator: Option<String>,
        /// l2, linf, lp:P, besov:S:P:Q or bmo.
        #[arg(long)]
        in1: Option<String>,
        #[arg(long)]
        in2: Option<String>,
        #[arg(long)]
        out: Option<String>,
        /// Profile of the second argument.
        #[arg(long)]
        profile2: Option<String>,
    },
    /// Symbol decomposition residuals.
    SymbolCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Picard iterate of a divergence-free field.
    Iterate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        steps: Option<String>,
        /// Input field (`.json` or binary).
        #[arg(long)]
        input: Option<String>,
        /// Where to save the iterate.
        #[arg(long)]
        output_field: Option<String>,
    },
    /// Norm inflation of the second iterate.
    Inflation {
        #[command(flatten)]
        common: Common,
        /// sqrt (`k^{-1/2}`) or inv (`k^{-1}`).
        #[arg(long)]
        alpha: Option<String>,
        /// Comma-separated top indices.
        #[arg(long = "Ns")]
        ns: Option<String>,
        #[arg(long)]
        zeta_eps: Option<String>,
        #[arg(long)]
        nodes: Option<String>,
    },
    /// Heat decay of dyadic blocks.
    Chemin {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        j_lo: Option<String>,
        #[arg(long)]
        j_hi: Option<String>,
        #[arg(long)]
        t: Option<String>,
    },
}

type Overrides = Vec<(&'static str, Option<String>)>;

impl Command {
    fn split(self) -> (ExperimentKind, Common, Overrides) {
        match self {
            Command::PartitionCheck { common, samples, psi_eps } => {
                (ExperimentKind::PartitionCheck, common, vec![("samples", samples), ("psi_eps", psi_eps)])
            }
            Command::Besov { common, s, p, q } => (ExperimentKind::Besov, common, vec![("s", s), ("p", p), ("q", q)]),
            Command::Embeddings { common } => (ExperimentKind::Embeddings, common, vec![]),
            Command::Boundedness { common, operator, in1, in2, out, profile2 } => (
                ExperimentKind::Boundedness,
                common,
                vec![("operator", operator), ("in1", in1), ("in2", in2), ("out", out), ("profile2", profile2)],
            ),
            Command::SymbolCheck { common, samples } => (ExperimentKind::SymbolCheck, common, vec![("samples", samples)]),
            Command::Iterate { common, n, t, steps, input, output_field } => (
                ExperimentKind::Iterate,
                common,
                vec![("n", n), ("t", t), ("steps", steps), ("input", input), ("output_field", output_field)],
            ),
            Command::Inflation { common, alpha, ns, zeta_eps, nodes } => (
                ExperimentKind::Inflation,
                common,
                vec![("alpha", alpha), ("ns", ns), ("zeta_eps", zeta_eps), ("nodes", nodes)],
            ),
            Command::Chemin { common, j_lo, j_hi, t } => {
                (ExperimentKind::Chemin, common, vec![("j_lo", j_lo), ("j_hi", j_hi), ("t", t)])
            }
        }
    }
}

fn build_config(kind: ExperimentKind, common: &Common, specific: Overrides) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::new(kind);
    if let Some(path) = &common.config {
        for (k, v) in parse_pairs(&std::fs::read_to_string(path)?)? {
            cfg.set(&k, &v)?;
        }
    }
    let shared = [
        ("dim", &common.dim),
        ("points", &common.points),
        ("period", &common.period),
        ("ensemble_size", &common.ensemble_size),
        ("seed", &common.seed),
        ("profile", &common.profile),
        ("output", &common.output),
    ];
    for (k, v) in shared {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    for (k, v) in specific {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set '{kv}': expected KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("NSB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| Error::Config(format!("NSB_THREADS = '{v}' is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::Unsupported(_))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, common, specific) = cli.command.split();
    let outcome = configure_threads().and_then(|_| build_config(kind, &common, specific)).and_then(|cfg| {
        if common.print_config {
            print!("{}", cfg.to_text());
            return Ok(None);
        }
        log::info!("running {kind} with seed {}", cfg.seed);
        let report = run(&cfg)?;
        if cfg.output.is_none() {
            print!("{}", report.to_csv());
        }
        Ok(Some(report))
    });
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            for (k, v) in &report.summary {
                eprintln!("{k} = {v:e}");
            }
            if report.passed() {
                eprintln!("{kind}: ok");
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("{kind}: FAILED: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("bns {kind}: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
