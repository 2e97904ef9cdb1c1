use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sldg::config::{RunConfig, HELP};
use sldg::{dispatch, CliError};

/// Symplectic LDG experiments for the stochastic linear Schrödinger equation.
///
/// Every flag mirrors the config key of the same name; flags override the
/// config file, which overrides the command defaults.
#[derive(Debug, Parser)]
#[command(name = "sldg", version, after_long_help = HELP)]
struct Cli {
    /// Subcommand; may also be set with `cmd` in the config file.
    command: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long)]
    left: Option<String>,
    #[arg(long)]
    right: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    j: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    decay: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    u0: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Falls back to `SLDG_SEED` when neither the file nor the flag sets it.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    flux: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    costs: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "moment-steps")]
    moment_steps: Option<String>,
    #[arg(long = "dump-noise")]
    dump_noise: bool,
    #[arg(long = "noise-file")]
    noise_file: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let fields = [
            ("left", &self.left),
            ("right", &self.right),
            ("k", &self.k),
            ("j", &self.j),
            ("dt", &self.dt),
            ("t_final", &self.t_final),
            ("q", &self.q),
            ("modes", &self.modes),
            ("decay", &self.decay),
            ("amplitude", &self.amplitude),
            ("noise", &self.noise),
            ("u0", &self.u0),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("out", &self.out),
            ("flux", &self.flux),
            ("levels", &self.levels),
            ("mesh", &self.mesh),
            ("costs", &self.costs),
            ("points", &self.points),
            ("space", &self.space),
            ("reference", &self.reference),
            ("mode", &self.mode),
            ("moment_steps", &self.moment_steps),
            ("noise_file", &self.noise_file),
        ];
        let mut out: Vec<_> = fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if let Some(cmd) = &self.command {
            out.push(("cmd", cmd.clone()));
        }
        if self.dump_noise {
            out.push(("dump_noise", "true".into()));
        }
        out
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Ok(seed) = std::env::var("SLDG_SEED") {
        pairs.push(("seed".into(), seed));
    }
    if let Some(file) = &cli.config {
        let text = fs::read_to_string(file).map_err(|source| CliError::Io {
            path: file.clone(),
            source,
        })?;
        pairs.extend(RunConfig::parse_pairs(&text)?);
    }
    pairs.extend(cli.flags().into_iter().map(|(k, v)| (k.to_string(), v)));
    RunConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error: {err}");
    let code = err.exit_code();
    println!("RESULT status=error exit={code}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            println!("RESULT status=error exit=1");
            return ExitCode::from(1);
        }
    };
    let cfg = match configure(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    eprintln!("{}", cfg.describe());
    match dispatch(&cfg) {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("warning: {note}");
            }
            println!("{}", outcome.summary.line());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => fail(e),
    }
}
