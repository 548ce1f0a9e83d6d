use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsphere::harness::{emit_report, parse_config_file, run, Command, RunConfig};
use qsphere::Error;

#[derive(Parser)]
#[command(name = "qsphere", version, about = "Point-sphere incidences over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check sphere sizes, intersection tables and bisectors against enumeration.
    VerifyTables(Common),
    /// Check the incidence bounds on seeded random instances.
    VerifyBounds(Common),
    /// Build and evaluate a tightness construction.
    Construct(Common),
    /// Hill-climb for instances close to the simple bound.
    Search(Common),
}

#[derive(Args)]
struct Common {
    /// Field orders, comma separated.
    #[arg(long)]
    q: Option<String>,
    /// Dimensions, comma separated.
    #[arg(long)]
    d: Option<String>,
    /// Forms: Q1,Q2,Q3,Q4,norm.
    #[arg(long)]
    forms: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// single-point, isotropic or odd-critical.
    #[arg(long)]
    which: Option<String>,
    /// json, csv or text.
    #[arg(long)]
    format: Option<String>,
    /// Report file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Instance file for constructions and search results.
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long = "enum-cap")]
    enum_cap: Option<String>,
    #[arg(long = "max-points")]
    max_points: Option<String>,
    #[arg(long = "max-spheres")]
    max_spheres: Option<String>,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        [
            ("q", self.q.clone()),
            ("d", self.d.clone()),
            ("forms", self.forms.clone()),
            ("trials", self.trials.clone()),
            ("seed", self.seed.clone()),
            ("steps", self.steps.clone()),
            ("which", self.which.clone()),
            ("format", self.format.clone()),
            ("out", path(&self.out)),
            ("export", path(&self.export)),
            ("enum-cap", self.enum_cap.clone()),
            ("max-points", self.max_points.clone()),
            ("max-spheres", self.max_spheres.clone()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

fn configure(command: Command, args: &Common) -> Result<RunConfig, Error> {
    let mut config = RunConfig::new(command);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for (k, v) in parse_config_file(&text)? {
            config.apply(&k, &v)?;
        }
    }
    config.apply_env()?;
    for (k, v) in args.flags() {
        config.apply(k, &v)?;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::VerifyTables(a) => (Command::VerifyTables, a),
        Cmd::VerifyBounds(a) => (Command::VerifyBounds, a),
        Cmd::Construct(a) => (Command::Construct, a),
        Cmd::Search(a) => (Command::Search, a),
    };
    let outcome = configure(command, args).and_then(|config| {
        let report = run(&config)?;
        let text = emit_report(&report, config.format)?;
        match &config.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        Ok(report.exit_code())
    });
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
