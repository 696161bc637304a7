//! Command-line front end: run experiments, rank methods, generate
//! synthetic corpora and validate datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use keydyn::harness::{
    cmd_rank, cmd_run, cmd_synth, cmd_validate, DatasetFormat, ExperimentConfig, SynthParams,
    UpdateThresholdMode,
};
use keydyn::evaluation::Pooling;
use keydyn::Error;

#[derive(Parser)]
#[command(
    name = "keydyn",
    about = "Online template-update evaluation for keystroke-dynamics authentication",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset CSV file
    #[arg(long)]
    dataset: PathBuf,

    /// Dataset layout
    #[arg(long, value_parser = ["dsl2009", "generic"], default_value = "dsl2009")]
    format: String,

    /// Field delimiter: comma, semicolon or tab
    #[arg(long, value_parser = ["comma", "semicolon", "tab"], default_value = "comma")]
    delimiter: String,

    /// Tolerate duplicated (user, session, rep) triples
    #[arg(long)]
    lenient: bool,

    /// User-id column (generic format)
    #[arg(long, default_value = "user")]
    user_col: String,

    /// Session column (generic format)
    #[arg(long, default_value = "session")]
    session_col: String,

    /// Repetition column (generic format)
    #[arg(long, default_value = "rep")]
    rep_col: String,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the update methods over the dataset and write result CSVs
    Run {
        #[command(flatten)]
        dataset: DatasetArgs,

        /// Comma-separated catalog method names, or "all"
        #[arg(long, default_value = "all")]
        methods: String,

        /// Acceptance threshold on the fused centered score
        #[arg(long, default_value_t = 0.0)]
        accept_threshold: f64,

        /// Update threshold (must not exceed the accept threshold)
        #[arg(long, default_value_t = -0.1)]
        update_threshold: f64,

        /// Share of impostor queries in each session stream, in [0, 1)
        #[arg(long, default_value_t = 0.3)]
        impostor_ratio: f64,

        /// Number of randomized runs to average over
        #[arg(long, default_value_t = 100)]
        runs: usize,

        /// Master seed; all per-(run,user,session) streams derive from it
        #[arg(long, default_value_t = 1)]
        seed: u64,

        /// Per-session aggregation across users
        #[arg(long, value_parser = ["pooled", "per-user"], default_value = "pooled")]
        pooling: String,

        /// Where the update threshold comes from
        #[arg(long, value_parser = ["fixed", "eer-half"], default_value = "fixed")]
        update_threshold_mode: String,

        /// Draw impostors with replacement when the candidate pool is small
        #[arg(long)]
        impostor_with_replacement: bool,

        /// Output directory for summary.csv and runs.csv
        #[arg(long)]
        out: PathBuf,
    },

    /// Rank methods from a summary.csv written by `run`
    Rank {
        /// Path to summary.csv
        results: PathBuf,

        /// Also write the rank table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Generate a synthetic drift corpus as generic CSV
    Synth {
        #[arg(long)]
        users: usize,

        #[arg(long)]
        sessions: u32,

        #[arg(long)]
        reps: usize,

        #[arg(long)]
        dimension: usize,

        /// Per-session drift of each user's timing center
        #[arg(long, default_value_t = 0.02)]
        drift: f64,

        /// Per-feature sample noise
        #[arg(long, default_value_t = 0.02)]
        noise: f64,

        #[arg(long, default_value_t = 1)]
        seed: u64,

        /// Output CSV file
        #[arg(long)]
        out: PathBuf,
    },

    /// Load a dataset and report its shape
    Validate {
        #[command(flatten)]
        dataset: DatasetArgs,
    },
}

fn dataset_config(args: &DatasetArgs) -> Result<ExperimentConfig, Error> {
    let format = DatasetFormat::parse(&args.format)?;
    let mut config = ExperimentConfig::new(&args.dataset, format, ".");
    config.delimiter = match args.delimiter.as_str() {
        "semicolon" => b';',
        "tab" => b'\t',
        _ => b',',
    };
    config.lenient = args.lenient;
    config.user_col = args.user_col.clone();
    config.session_col = args.session_col.clone();
    config.rep_col = args.rep_col.clone();
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), (i32, Error)> {
    match cli.command {
        Command::Run {
            dataset,
            methods,
            accept_threshold,
            update_threshold,
            impostor_ratio,
            runs,
            seed,
            pooling,
            update_threshold_mode,
            impostor_with_replacement,
            out,
        } => {
            let run = || -> Result<(), Error> {
                let mut config = dataset_config(&dataset)?;
                config.out_dir = out;
                config.set_methods(&methods)?;
                config.accept_threshold = accept_threshold;
                config.update_threshold = update_threshold;
                config.impostor_ratio = impostor_ratio;
                config.runs = runs;
                config.master_seed = seed;
                config.pooling = match pooling.as_str() {
                    "per-user" => Pooling::PerUser,
                    _ => Pooling::Pooled,
                };
                config.update_threshold_mode = UpdateThresholdMode::parse(&update_threshold_mode)?;
                config.impostor_with_replacement = impostor_with_replacement;

                let output = cmd_run(&config)?;
                println!(
                    "wrote {} and {} (update threshold {:.6})",
                    output.summary_path.display(),
                    output.runs_path.display(),
                    output.effective_update_threshold
                );
                Ok(())
            };
            run().map_err(|e| (e.exit_code(), e))
        }
        Command::Rank { results, out } => match cmd_rank(&results, out.as_deref()) {
            Ok((_, human)) => {
                print!("{human}");
                Ok(())
            }
            // Any failure here means the results file is unusable.
            Err(e) => Err((3, e)),
        },
        Command::Synth {
            users,
            sessions,
            reps,
            dimension,
            drift,
            noise,
            seed,
            out,
        } => {
            let params = SynthParams {
                users,
                sessions,
                reps,
                dimension,
                drift_per_session: drift,
                noise_scale: noise,
                seed,
                out,
            };
            match cmd_synth(&params) {
                Ok(()) => {
                    println!("wrote {}", params.out.display());
                    Ok(())
                }
                Err(e) => Err((e.exit_code(), e)),
            }
        }
        Command::Validate { dataset } => {
            let run = || -> Result<(), Error> {
                let config = dataset_config(&dataset)?;
                println!("{}", cmd_validate(&config)?);
                Ok(())
            };
            run().map_err(|e| (e.exit_code(), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, error)) => {
            eprintln!("keydyn: {error}");
            ExitCode::from(code as u8)
        }
    }
}
