use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scatdecay::cli::{
    cmd_compare, cmd_curve, cmd_effmed, parse_method, parse_prescription, parse_real, CliError, RepChoice, RunConfig,
    EXIT_MISMATCH, EXIT_OK, EXIT_SELFCHECK,
};
use scatdecay::intrep::Method;
use scatdecay::effmed::Prescription;
use scatdecay::selfcheck::{self, Level, Options};

#[derive(Parser)]
#[command(name = "scatdecay", version, about = "Atomic decay-rate corrections near an aggregate of dielectric spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correction functions and rates on a grid of atomic positions (CSV)
    Curve(RunArgs),
    /// Triple sum against the integral representation
    Compare(RunArgs),
    /// Discrete scatterers against the effective medium (CSV)
    Effmed(RunArgs),
    /// Identity and consistency suites
    Selfcheck {
        #[arg(value_enum, default_value = "quick")]
        level: LevelArg,
        /// Scale all checked amplitudes (fault injection)
        #[arg(long, hide = true, default_value_t = 1.0, allow_hyphen_values = true)]
        amplitude_factor: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_im: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    /// beta*hbar*omega, or `inf` for cold scatterers
    #[arg(long, value_parser = parse_real)]
    beta_hw: Option<f64>,
    #[arg(long)]
    zeta_min: Option<f64>,
    #[arg(long)]
    zeta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Amplitude order; 0 selects it automatically
    #[arg(long)]
    lmax: Option<usize>,
    /// sum | integral | both
    #[arg(long)]
    rep: Option<RepChoice>,
    /// closed | quadrature
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// dipole | mg
    #[arg(long, value_parser = parse_prescription)]
    prescription: Option<Prescription>,
    /// fig1 .. fig7
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut c = RunConfig::default();
        c.apply_layers(self.preset.as_deref(), &text)?;
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        over!(rho, q, eps_re, eps_im, f, beta_hw, zeta_max, points, lmax, rep, method, prescription);
        if let Some(v) = self.zeta_min {
            c.zeta_min = Some(v);
        }
        if let Some(p) = &self.out {
            c.out = Some(p.clone());
        }
        Ok(c)
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Curve(a) => {
            let c = a.resolve()?;
            emit(&c, &cmd_curve(&c)?)?;
            Ok(EXIT_OK)
        }
        Command::Effmed(a) => {
            let c = a.resolve()?;
            emit(&c, &cmd_effmed(&c)?)?;
            Ok(EXIT_OK)
        }
        Command::Compare(a) => {
            let c = a.resolve()?;
            let r = cmd_compare(&c)?;
            emit(&c, &r.render())?;
            Ok(if r.passed() { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Selfcheck { level, amplitude_factor } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let checks = selfcheck::run(&Options { level, amplitude_factor });
            let mut failed = Vec::new();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
                if !c.passed {
                    failed.push(c.id);
                }
            }
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                eprintln!("failed checks: {}", failed.join(", "));
                Ok(EXIT_SELFCHECK)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
