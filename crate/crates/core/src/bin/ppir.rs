use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ppir_core::bench::{
    regenerate_reports, run_bench, run_register, Fixture, FixtureKind, RunConfig, BENCH_TITLE, REGISTER_TITLE,
};
use ppir_core::error::{Error, Result};

#[derive(Parser)]
#[command(name = "ppir", version, about = "Two-party privacy-preserving image registration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic image pair with ground truth.
    Synth {
        /// blob2d, warped-pair or mi-pair-3d
        #[arg(long)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Register one image pair with the configured backend.
    Register(RunArgs),
    /// Run every backend × sampling cell of the configured matrix.
    Bench(RunArgs),
    /// Rebuild the CSV and markdown reports from a stored raw.tsv.
    Report {
        /// raw.tsv written by register or bench
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report heading; `bench` and `register` match the original titles.
        #[arg(long, default_value = "bench")]
        title: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides [run] out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the sampling seed in [registration].
    #[arg(long)]
    seed: Option<u64>,
    /// loopback, tcp or tcp:<host:port>
    #[arg(long)]
    transport: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.optimizer.seed = seed;
        }
        if let Some(t) = &self.transport {
            cfg.transport = t.parse()?;
        }
        if let Some(r) = self.repeats {
            cfg.repeats = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { kind, seed, out } => {
            let f = Fixture::generate(kind, seed)?;
            print_files(&f.save(&out)?);
        }
        Command::Register(args) => {
            let cfg = args.load()?;
            let out = run_register(&cfg)?;
            print_files(&out.files);
            if let Some(r) = &out.result {
                let theta: Vec<String> = r.theta().iter().take(12).map(|v| format!("{v:.6}")).collect();
                println!("iterations {:?}; theta {}", r.iterations, theta.join(" "));
            }
            if let Some(e) = out.first_error {
                return Err(e);
            }
        }
        Command::Bench(args) => {
            let cfg = args.load()?;
            let (records, files) = run_bench(&cfg)?;
            print_files(&files);
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} runs failed; see report.md", records.len());
            }
        }
        Command::Report { raw, out, title } => {
            let title = match title.as_str() {
                "bench" => BENCH_TITLE.to_string(),
                "register" => REGISTER_TITLE.to_string(),
                other => other.to_string(),
            };
            print_files(&regenerate_reports(&raw, &out, &title)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code().clamp(1, 255) as u8
}
