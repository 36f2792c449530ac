use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use steernet_cli::commands::{self, ArchSpec};
use steernet_cli::config::RunConfig;
use steernet_cli::CliError;

/// Fixed spatial-filter networks: generate filter banks, initialize and
/// train desk-scale models, explain their spectra, and prune channels.
#[derive(Parser)]
#[command(name = "steernet", version, max_term_width = 100)]
struct Cli {
    /// Base seed for every random draw (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Optional key = value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a fixed spatial filter bank (blob + SVG preview).
    GenFilters {
        /// ones | dct2 | ghaar | psine | unchanged-random
        #[arg(long)]
        method: String,
        /// Kernel shape, e.g. 3x3.
        #[arg(long, default_value = "3x3")]
        shape: String,
        #[arg(long, default_value_t = 16)]
        count: usize,
    },
    /// Generate a synthetic dataset container.
    GenData {
        /// shapes-seg | blobs-cls5
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 64)]
        count: usize,
        /// Square image size; must be a multiple of 16.
        #[arg(long, default_value_t = 16)]
        size: usize,
    },
    /// Build a reference network and install a fixed spatial initializer.
    Init {
        /// unetd | tinyresnet | tinydensenet
        #[arg(long, default_value = "unetd")]
        arch: String,
        /// ones | dct2 | ghaar | psine | unchanged-random | unchanged-guide | guidedsteer
        #[arg(long)]
        method: String,
        /// Guide network (.nfg or its directory) for guide-based methods.
        #[arg(long)]
        guide: Option<PathBuf>,
        /// U-NetD level widths.
        #[arg(long, default_value = "3,8,16,32,64")]
        widths: String,
        #[arg(long, default_value_t = 6)]
        expansion: usize,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long, default_value_t = 4)]
        growth: usize,
    },
    /// Train the learnable (non-fixed) parameters with Adam.
    Train {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        lr: f32,
        /// Learning-rate multiplier; pruned networks want 2.
        #[arg(long, default_value_t = 1.0)]
        lr_mult: f32,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
    },
    /// Emit energy spectra (CSV) and the per-layer heatmap (SVG).
    Explain {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Weight the spectra with gradient-times-weight saliency.
        #[arg(long, default_value_t = false)]
        saliency: bool,
        #[arg(long, default_value_t = 15)]
        saliency_batches: usize,
        #[arg(long, default_value_t = 4)]
        batch_size: usize,
        /// Score with |gradient| alone.
        #[arg(long, default_value_t = false)]
        grad_only: bool,
    },
    /// Zero the least salient kernels, prune zero channels, repair, and
    /// optionally FillZero.
    Prune {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long, default_value_t = false)]
        fillzero: bool,
        /// Labeled data for saliency scores; weight magnitudes otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        saliency_batches: usize,
        #[arg(long, default_value_t = 4)]
        batch_size: usize,
    },
    /// Evaluate loss and metric on a dataset.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Progressive zeroing curves, least- and most-salient first.
    ZeroSweep {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated fractions.
        #[arg(long, default_value = "0,0.1,0.25,0.5,0.75,0.9")]
        fractions: String,
        #[arg(long, default_value_t = 15)]
        saliency_batches: usize,
        #[arg(long, default_value_t = 4)]
        batch_size: usize,
    },
}

fn parse_shape(s: &str) -> Result<(usize, usize), CliError> {
    let (h, w) = s
        .split_once('x')
        .ok_or_else(|| CliError::Config(format!("bad shape '{s}', expected HxW")))?;
    let parse = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| CliError::Config(format!("bad shape component '{v}'")))
    };
    Ok((parse(h)?, parse(w)?))
}

fn parse_widths(s: &str) -> Result<[usize; 5], CliError> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad width '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    if parts.len() != 5 {
        return Err(CliError::Config(format!(
            "widths needs exactly five values, got {}",
            parts.len()
        )));
    }
    Ok([parts[0], parts[1], parts[2], parts[3], parts[4]])
}

fn run(cli: Cli) -> Result<(), CliError> {
    // precedence: explicit flag, then config file, then built-in default
    let (file_seed, file_out) = match &cli.config {
        Some(path) => {
            let file = RunConfig::from_file(path)?;
            (file.parsed::<u64>("seed")?, file.get("out").map(PathBuf::from))
        }
        None => (None, None),
    };
    let seed = cli.seed.or(file_seed).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or(file_out)
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::GenFilters {
            method,
            shape,
            count,
        } => commands::cmd_gen_filters(&method, parse_shape(&shape)?, count, seed, &out),
        Command::GenData { kind, count, size } => {
            commands::cmd_gen_data(&kind, count, size, seed, &out)
        }
        Command::Init {
            arch,
            method,
            guide,
            widths,
            expansion,
            stages,
            width,
            blocks,
            growth,
        } => {
            let spec = ArchSpec {
                arch,
                widths: parse_widths(&widths)?,
                expansion,
                stages,
                width,
                blocks,
                growth,
            };
            commands::cmd_init(&spec, &method, seed, guide.as_deref(), &out)
        }
        Command::Train {
            net,
            data,
            lr,
            lr_mult,
            epochs,
            batch_size,
        } => commands::cmd_train(&net, &data, lr, lr_mult, epochs, batch_size, seed, &out),
        Command::Explain {
            net,
            data,
            saliency,
            saliency_batches,
            batch_size,
            grad_only,
        } => commands::cmd_explain(
            &net,
            data.as_deref(),
            saliency,
            saliency_batches,
            batch_size,
            grad_only,
            &out,
        ),
        Command::Prune {
            net,
            fraction,
            fillzero,
            data,
            saliency_batches,
            batch_size,
        } => commands::cmd_prune(
            &net,
            fraction,
            fillzero,
            seed,
            data.as_deref(),
            saliency_batches,
            batch_size,
            &out,
        ),
        Command::Eval { net, data } => commands::cmd_eval(&net, &data, &out),
        Command::ZeroSweep {
            net,
            data,
            fractions,
            saliency_batches,
            batch_size,
        } => {
            let fr: Vec<f64> = fractions
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad fraction '{p}'")))
                })
                .collect::<Result<_, _>>()?;
            commands::cmd_zero_sweep(&net, &data, &fr, saliency_batches, batch_size, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("steernet: {e}");
            e.exit_code()
        }
    }
}
