mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "wavetrain", version, about = "Periodic wave trains: profiles, Bloch spectra, linear decay and nonlinear modulation runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a periodic wave-train profile.
    Profile(ProfileArgs),
    /// Bloch spectrum scan and diffusive stability verdict.
    Spectrum(SpectrumArgs),
    /// Spectral gap on the N-periodic domain, for one N or a list.
    Gap(GapArgs),
    /// Decay of the linear semigroup pieces for a random localized perturbation.
    LinearDecay(LinearDecayArgs),
    /// Lattice sums against their continuum bound, plus crossover probes.
    SumBounds(SumBoundsArgs),
    /// Nonlinear run with modulation extraction and the full report.
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize)]
pub struct ProfileArgs {
    /// Model id: rgl, cgl, brusselator or nagumo.
    #[arg(long)]
    pub model: String,
    /// Model parameter override, e.g. q=0.3 (repeatable).
    #[arg(long = "param", value_name = "KEY=VAL", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Fourier truncation M_F.
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    /// Starting guess: auto, analytic, or file:PATH.
    #[arg(long, default_value = "auto", value_parser = parse_guess)]
    pub guess: Guess,
    #[arg(long = "solve-for", value_enum, default_value_t = SolveFor::C)]
    pub solve_for: SolveFor,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,
    /// Output directory (profile.json + manifest.json); prints the profile when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Guess {
    Auto,
    Analytic,
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum SolveFor {
    /// Speed at fixed wavenumber.
    C,
    /// Wavenumber at fixed speed.
    K,
}

#[derive(Args, Serialize)]
pub struct SpectrumArgs {
    /// Profile file, or a directory holding profile.json.
    #[arg(long)]
    pub profile: PathBuf,
    /// Number of scan frequencies on [-pi, pi).
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub scan: u32,
    /// Half-width of the critical-curve sample interval.
    #[arg(long = "xi-max", default_value_t = 0.5, value_parser = parse_xi_max)]
    pub xi_max: f64,
    /// Critical-curve samples per side.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(3..))]
    pub samples: u32,
    /// Bloch truncation (defaults to the profile's).
    #[arg(long = "m-f")]
    pub m_f: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// Period counts: a list like 2,4,8 and/or ranges like 4..16.
    #[arg(long = "N", value_parser = parse_periods)]
    pub n: Periods,
    #[arg(long = "m-f")]
    pub m_f: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct LinearDecayArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long = "N", default_value = "4,8,16,32,64", value_parser = parse_periods)]
    pub n: Periods,
    #[arg(long, default_value_t = 409.6)]
    pub tmax: f64,
    /// Log-spaced sample times on [0.01, tmax] (t = 0 is always added).
    #[arg(long, default_value_t = 80, value_parser = clap::value_parser!(u32).range(10..))]
    pub samples: u32,
    /// Spatial derivative order of the s_p series.
    #[arg(long, default_value_t = 0)]
    pub l: u32,
    /// Time derivative order of the s_p series.
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Grid points per unit cell.
    #[arg(long = "m-x", default_value_t = 8)]
    pub m_x: usize,
    /// Start of the fit window; its end is N^2/10 for the largest N unless --fit-end is given.
    #[arg(long = "fit-start", default_value_t = 10.0)]
    pub fit_start: f64,
    #[arg(long = "fit-end")]
    pub fit_end: Option<f64>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SumBoundsArgs {
    /// Diffusion coefficient (> 0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_positive)]
    pub d: f64,
    #[arg(long = "r", default_value = "0,1,2", value_delimiter = ',')]
    pub r: Vec<u32>,
    #[arg(long = "N", default_value = "4..256", value_parser = parse_periods)]
    pub n: Periods,
    #[arg(long, default_value_t = 1e4, value_parser = parse_positive)]
    pub tmax: f64,
    /// Log-spaced sample times on [0.01, tmax] (t = 0 is always added).
    #[arg(long, default_value_t = 240, value_parser = clap::value_parser!(u32).range(2..))]
    pub samples: u32,
    /// Periods to probe for the crossover to exponential decay.
    #[arg(long = "probe-N", default_value = "8,16", value_parser = parse_periods)]
    pub probe_n: Periods,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// Experiment document (TOML); built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Profile file or directory; overrides the config.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, value_parser = ["projection", "duhamel", "both"])]
    pub extract: Option<String>,
    /// Perturbation seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output_dir.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

/// Sorted, de-duplicated list of period counts.
#[derive(Clone, Debug, Serialize)]
pub struct Periods(pub Vec<usize>);

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("parameter {k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_guess(s: &str) -> Result<Guess, String> {
    match s {
        "auto" => Ok(Guess::Auto),
        "analytic" => Ok(Guess::Analytic),
        _ => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(Guess::File(p.into())),
            _ => Err(format!("expected auto, analytic or file:PATH, got '{s}'")),
        },
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn parse_xi_max(s: &str) -> Result<f64, String> {
    let x = parse_positive(s)?;
    if x <= std::f64::consts::PI {
        Ok(x)
    } else {
        Err(format!("must lie in (0, pi], got {s}"))
    }
}

fn parse_periods(s: &str) -> Result<Periods, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let one = |x: &str| -> Result<usize, String> {
            let n: usize = x.trim().parse().map_err(|e| format!("period count '{x}': {e}"))?;
            if n == 0 {
                return Err("period counts must be at least 1".into());
            }
            Ok(n)
        };
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (one(a)?, one(b.trim_start_matches('='))?);
                if b < a {
                    return Err(format!("empty range {item}"));
                }
                out.extend(a..=b);
            }
            None => out.push(one(item)?),
        }
    }
    if out.is_empty() {
        return Err("no period counts given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(Periods(out))
}

fn main() -> ExitCode {
    manifest::start_clock();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Profile(a) => commands::profile(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Gap(a) => commands::gap(&a),
        Command::LinearDecay(a) => commands::linear_decay(&a),
        Command::SumBounds(a) => commands::sum_bounds(&a),
        Command::Simulate(a) => commands::simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_lists_and_ranges() {
        assert_eq!(parse_periods("32,64").unwrap().0, vec![32, 64]);
        assert_eq!(parse_periods("4..6, 2, 5").unwrap().0, vec![2, 4, 5, 6]);
        assert_eq!(parse_periods("1..=3").unwrap().0, vec![1, 2, 3]);
        assert!(parse_periods("0").is_err());
        assert!(parse_periods("8..4").is_err());
        assert!(parse_periods("").is_err());
    }

    #[test]
    fn params_and_guesses() {
        assert_eq!(parse_param("q = 0.3").unwrap(), ("q".to_string(), 0.3));
        assert!(parse_param("q").is_err());
        assert!(matches!(parse_guess("file:a/b.json").unwrap(), Guess::File(p) if p == PathBuf::from("a/b.json")));
        assert!(parse_guess("file:").is_err());
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
