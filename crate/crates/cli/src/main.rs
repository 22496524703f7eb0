mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orbispec::lattice::DEFAULT_ENUM_CAP;
use orbispec::linalg::{parse_rational, Rational};

#[derive(Parser, Debug)]
#[command(name = "orbispec", version, about = "Spectra, strata and heat invariants of flat orbifolds")]
pub struct Cli {
    /// Worker threads (default: number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Maximum number of dual lattice vectors to enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUM_CAP)]
    enum_cap: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a group file and report its dimension and holonomy order.
    Validate { file: PathBuf },
    /// Multiplicities of the p-form spectrum up to a dual norm bound.
    Spectrum {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long, value_parser = rational)]
        max_norm2: Rational,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Compare two p-spectra exactly up to a bound.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long, value_parser = rational)]
        max_norm2: Rational,
    },
    /// Singular strata of the quotient.
    Strata {
        #[arg(long)]
        group: PathBuf,
    },
    /// Heat expansion, parity invariants and the manifold test.
    Heat {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        p: usize,
    },
    /// Truncated heat trace against the expansion.
    TraceCheck {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long, num_args = 1.., required = true)]
        t: Vec<f64>,
        /// Starting bound; enlarged until the tail is certified small.
        #[arg(long, value_parser = rational, default_value = "1")]
        max_norm2: Rational,
    },
    /// Binary Krawtchouk polynomial values and integer zeros.
    Krawtchouk {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Built-in examples.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct CatalogArgs {
    /// List entry names with their claims.
    #[arg(long)]
    list: bool,
    /// Print the group file of an entry.
    #[arg(long, value_name = "NAME")]
    emit: Option<String>,
    /// Check the claims of one entry, or of all entries.
    #[arg(long, value_name = "NAME", num_args = 0..=1, default_missing_value = "")]
    verify: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", output::to_json(&e.report()));
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
