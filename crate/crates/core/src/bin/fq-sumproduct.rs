use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fq_sumproduct::harness::{
    self, parse_checks, ExperimentSpec, HarnessError, Mode, RunReport, SizeRange, EXIT_BAD_SPEC, EXIT_OK,
};

#[derive(Parser)]
#[command(name = "fq-sumproduct", version, about = "Dot-product and dA^2 coverage experiments over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field axioms and Fourier identities on a fixed field roster.
    Selftest(Output),
    /// Every subset A above the size threshold, checked for F_q^* in dA^2.
    CoverExhaustive(Experiment),
    /// Seeded random subsets (or structured families with --mode structured).
    CoverSample(Experiment),
    /// Subfield closure and the largest non-covering structured sets.
    Sharpness(Experiment),
    /// Point-set checks in F_q^d: threshold, remainder bound, identities.
    Geometry(Experiment),
    /// Summand counts for the size exponent 1/2 + eps.
    DOfEps {
        /// Exact rational such as 1/10.
        eps: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Experiment {
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Inclusive size range `a..b`.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of cover,remainder,keylowerbound,identities,second_moment,bilinear.
    #[arg(long)]
    checks: Option<String>,
    /// exhaustive, sample or structured.
    #[arg(long)]
    mode: Option<String>,
    /// Largest number of summands for the subfield closure check.
    #[arg(long, default_value_t = 6)]
    max_d: usize,
    /// Worker threads; reports do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the nu profile of the worst remainder set as CSV (geometry only).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

impl Experiment {
    fn spec(&self, default_mode: Mode) -> Result<ExperimentSpec, HarnessError> {
        let workers = self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Ok(ExperimentSpec {
            p: self.p,
            n: self.n,
            d: self.d,
            mode: self.mode.as_deref().map(str::parse).transpose()?.unwrap_or(default_mode),
            sizes: self.sizes.as_deref().map(str::parse::<SizeRange>).transpose()?,
            samples: self.samples,
            seed: self.seed,
            checks: self.checks.as_deref().map(parse_checks).transpose()?.unwrap_or_default(),
            max_d: self.max_d,
            workers,
        })
    }

    fn no_csv(&self, command: &str) -> Result<(), HarnessError> {
        match self.csv {
            Some(_) => Err(HarnessError::BadSpec(format!("--csv is only produced by geometry, not {command}"))),
            None => Ok(()),
        }
    }
}

fn run(command: Command) -> Result<(RunReport, Output), HarnessError> {
    let start = Instant::now();
    let (mut report, output) = match command {
        Command::Selftest(output) => (harness::cmd_selftest()?, output),
        Command::CoverExhaustive(x) => {
            x.no_csv("cover-exhaustive")?;
            (harness::cmd_cover_exhaustive(&x.spec(Mode::Exhaustive)?)?, x.output)
        }
        Command::CoverSample(x) => {
            x.no_csv("cover-sample")?;
            (harness::cmd_cover_sample(&x.spec(Mode::Sample)?)?, x.output)
        }
        Command::Sharpness(x) => {
            x.no_csv("sharpness")?;
            (harness::cmd_sharpness(&x.spec(Mode::Structured)?)?, x.output)
        }
        Command::Geometry(x) => {
            let mut csv = String::new();
            let report = harness::cmd_geometry(&x.spec(Mode::Sample)?, x.csv.as_ref().map(|_| &mut csv))?;
            if let Some(path) = &x.csv {
                std::fs::write(path, csv)?;
            }
            (report, x.output)
        }
        Command::DOfEps { eps, output } => (harness::cmd_d_of_eps(&eps)?, output),
    };
    if output.timing {
        report.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok((report, output))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_BAD_SPEC as u8 } else { EXIT_OK as u8 });
        }
    };
    let (report, output) = match run(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let json = report.to_json();
    let written = match &output.out {
        Some(path) => std::fs::write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_BAD_SPEC as u8);
    }
    ExitCode::from(report.exit_code() as u8)
}
