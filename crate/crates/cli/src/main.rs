//! `dustcycle`: experiments with the combinatorial cocycle on the Cantor dust.
//!
//! Exit status: 0 on success, 1 when a checked assertion fails, 2 on a usage
//! error (bad arguments, unknown preset, level over budget).

mod commands;
mod report;

use clap::{Args, Parser, Subcommand};
use report::Format;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "dustcycle", version, about = "Combinatorial Fredholm-module cocycle on the Cantor dust")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Worker threads (defaults to the logical CPU count).
    #[arg(long, env = "DUSTCYCLE_WORKERS", global = true)]
    pub workers: Option<usize>,
    /// Output format (tables default to csv, single values to text).
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Lift the default level budgets (12 for scalars, 10 for matrices).
    #[arg(long, global = true)]
    pub allow_large: bool,
    /// Report 0 for wall times so reports are byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

/// Evaluation mode override for a function triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Pullback,
    Direct,
}

#[derive(Args, Debug, Clone)]
pub struct TripleArgs {
    /// IFS preset: cantor-dust, sierpinski-carpet or full-subdivision-3.
    #[arg(long, default_value = "cantor-dust")]
    pub preset: String,
    /// Function triple: a torus preset (bott-flux, stokes-null, mixed-mode,
    /// cyclic-probe) or a direct triple (coords, sum-coords, sines).
    #[arg(long, default_value = "bott-flux")]
    pub functions: String,
    /// Evaluate the triple in this mode instead of its own.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate phi_n for one level.
    Phi {
        #[command(flatten)]
        triple: TripleArgs,
        #[arg(long, default_value_t = 6)]
        n: u32,
    },
    /// Table of phi_n over a level range, against the closed-form limit.
    Converge {
        #[command(flatten)]
        triple: TripleArgs,
        /// Level range `a..b` (inclusive) or a single level.
        #[arg(long, default_value = "4..10", value_parser = parse_range)]
        n: RangeInclusive<u32>,
        /// Also compute |phi(f,g,h) - phi(h,f,g)|.
        #[arg(long)]
        cyclicity: bool,
        /// Also compute the Hochschild residual of this quadruple.
        #[arg(long)]
        hochschild: Option<String>,
        /// Fail (exit 1) unless the final error and every error ratio are in bounds.
        #[arg(long)]
        check: bool,
        /// Bound on the final absolute error for --check.
        #[arg(long, default_value_t = 0.25)]
        max_final_err: f64,
        /// Window `lo..hi` for successive error ratios under --check.
        #[arg(long, default_value = "0.3..0.7", value_parser = parse_window)]
        ratio_window: (f64, f64),
    },
    /// Decay table with the Lipschitz bound 8 |f| Lip(g) Lip(h) (4/9)^n.
    Lipschitz {
        #[command(flatten)]
        triple: LipschitzTriple,
        #[arg(long, default_value = "1..8", value_parser = parse_range)]
        n: RangeInclusive<u32>,
    },
    /// Pairing with the Bott projection of a given degree, against quadrature.
    Pairing {
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        degree: i32,
        #[arg(long, default_value = "6..10", value_parser = parse_range)]
        n: RangeInclusive<u32>,
        /// Quadrature grid for the oracle.
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Fail (exit 1) if any level differs from the oracle by more than --tolerance.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Cantor function at p / 3^n, exactly.
    Cantor {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
    },
    /// Similarity dimension of an IFS preset.
    Dimension {
        #[arg(long, default_value = "cantor-dust")]
        preset: String,
    },
    /// Torus quadrature of 2 int f dg ^ dh for a preset triple.
    Oracle {
        #[arg(long, default_value = "bott-flux")]
        functions: String,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Fail (exit 1) if quadrature and closed form differ by more than --tolerance.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Operator identities and invariant checks.
    Selftest,
}

#[derive(Args, Debug, Clone)]
pub struct LipschitzTriple {
    #[arg(long, default_value = "cantor-dust")]
    pub preset: String,
    #[arg(long, default_value = "coords")]
    pub functions: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("`{t}`: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = parse(s)?;
            (n, n)
        }
    };
    if a > b {
        return Err(format!("empty level range `{s}`"));
    }
    Ok(a..=b)
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected `lo..hi`, got `{s}`"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    if lo > hi {
        return Err(format!("empty window `{s}`"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 2 } else { 0 });
        }
    };
    let common = commands::Context::new(cli.common, argv[1..].to_vec());
    let result = match cli.command {
        Command::Phi { triple, n } => commands::phi(&common, &triple, n),
        Command::Converge { triple, n, cyclicity, hochschild, check, max_final_err, ratio_window } => {
            commands::converge(
                &common,
                &triple,
                commands::ConvergeOptions { levels: n, cyclicity, hochschild, check, max_final_err, ratio_window },
            )
        }
        Command::Lipschitz { triple, n } => commands::lipschitz(&common, &triple, n),
        Command::Pairing { degree, n, grid, check, tolerance } => {
            commands::pairing(&common, degree, n, grid, check, tolerance)
        }
        Command::Cantor { p, n } => commands::cantor(&common, p, n),
        Command::Dimension { preset } => commands::dimension(&common, &preset),
        Command::Oracle { functions, grid, check, tolerance } => {
            commands::oracle(&common, &functions, grid, check, tolerance)
        }
        Command::Selftest => commands::selftest(&common),
    };
    match result {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed(msg)) => {
            eprintln!("dustcycle: check failed: {msg}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("dustcycle: error: {err:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("4..10").unwrap(), 4..=10);
        assert_eq!(parse_range("4..=10").unwrap(), 4..=10);
        assert_eq!(parse_range("7").unwrap(), 7..=7);
        assert!(parse_range("5..4").is_err());
        assert!(parse_range("a..4").is_err());
        assert_eq!(parse_window("0.3..0.7").unwrap(), (0.3, 0.7));
        assert!(parse_window("0.7..0.3").is_err());
    }
}
