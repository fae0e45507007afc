use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geomest::{ConstantsFile, HarnessError, Report, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "geomest", version, about = "Seeded numerical verification of geometric estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite and write its report.
    Run {
        /// riemann, transport, complexlin, sobolev, elliptic or all; overrides the config.
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; overrides `output` of the config. Stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Constants file; overrides `constants` of the config.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Fit the constants of a suite and merge them into a constants file.
    Calibrate {
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Constants file to write; overrides `constants` of the config.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Print a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn config(path: Option<&PathBuf>, suite: Option<Suite>) -> geomest::Result<SuiteConfig> {
    let mut cfg = match path {
        Some(p) => SuiteConfig::load(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = suite {
        cfg.suite = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> geomest::Result<bool> {
    match cli.command {
        Command::Run { suite, config: path, out, constants } => {
            let mut cfg = config(path.as_ref(), suite)?;
            if constants.is_some() {
                cfg.constants = constants;
            }
            let report = geomest::run(&cfg)?;
            let s = &report.summary;
            match out.or(cfg.output.clone()) {
                Some(p) => report.save(&p)?,
                None => print!("{}", report.to_json()),
            }
            match &s.worst {
                Some(w) => eprintln!(
                    "{} records, {} failed, worst ratio {} ({}), {} ms",
                    s.total, s.failed, w.ratio, w.lemma_id, s.wall_ms
                ),
                None => eprintln!("{} records, {} failed, {} ms", s.total, s.failed, s.wall_ms),
            }
            Ok(report.passed())
        }
        Command::Calibrate { suite, config: path, constants } => {
            let cfg = config(path.as_ref(), suite)?;
            let target = constants.or(cfg.constants.clone()).ok_or_else(|| {
                HarnessError::Config("calibrate needs --constants or `constants` in the config".into())
            })?;
            let fresh = geomest::calibrate(&cfg)?;
            let merged = if target.exists() { ConstantsFile::load(&target)?.merge(fresh) } else { fresh };
            merged.save(&target)?;
            for (name, e) in &merged.constants {
                match (&e.value, &e.buckets) {
                    (Some(v), _) => eprintln!("{name} = {v}"),
                    (None, Some(b)) => {
                        let vals: Vec<String> = b.iter().map(|b| b.value.to_string()).collect();
                        eprintln!("{name} = [{}]", vals.join(", "));
                    }
                    _ => {}
                }
            }
            eprintln!("wrote {} (version {})", target.display(), merged.version);
            Ok(true)
        }
        Command::Report { input, format } => {
            let report = Report::load(&input)?;
            match format {
                Format::Json => print!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()?),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("geomest: {e}");
            ExitCode::from(2)
        }
    }
}
