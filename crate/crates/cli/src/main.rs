//! `fraisse`: command-line front end.
//!
//! Exit status: 0 success or the property holds, 1 a definite negative
//! answer, 2 inconclusive (a search budget ran out), 64 usage errors, 65
//! malformed or inconsistent data, 66 unreadable input files.

mod args;
mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "fraisse",
    version,
    about = "Workbench for metric Fraïssé classes of finite structures"
)]
pub struct Cli {
    /// Report format
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a structure file against the axioms
    Validate { file: PathBuf },
    /// Enumerate Emb(A, B)
    Embs {
        a: PathBuf,
        b: PathBuf,
        /// Generator labels of A, comma separated (default: all points)
        #[arg(long)]
        gens: Option<String>,
    },
    /// Generator metric between two embeddings A -> B
    Rho {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        gens: Option<String>,
        /// Map as `a:x,b:y`
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
    },
    /// Free amalgam of B0 and B1 over A
    Amalgamate {
        a: PathBuf,
        b0: PathBuf,
        b1: PathBuf,
        #[arg(long)]
        phi0: String,
        #[arg(long)]
        phi1: String,
    },
    /// Joint embedding of two structures
    Jep {
        b0: PathBuf,
        b1: PathBuf,
        /// Cross distance used when the formula gives zero
        #[arg(long)]
        separation: Option<String>,
    },
    /// Pseudometric between two pointed structures
    Dist {
        x: PathBuf,
        y: PathBuf,
        #[arg(long)]
        gens_x: Option<String>,
        #[arg(long)]
        gens_y: Option<String>,
    },
    /// Add one point with prescribed distances and predicate values
    Extend {
        base: PathBuf,
        #[arg(long)]
        label: String,
        /// Distances as `x:1/2,y:1`
        #[arg(long)]
        dist: String,
        /// Predicate values as `P:1/2`
        #[arg(long)]
        pred: Option<String>,
    },
    /// Normalized ℓ1 power
    Power {
        b: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Decide an approximate-Ramsey instance
    RamseyCheck(RamseyArgs),
    /// Worst-case coloring of an approximate-Ramsey instance
    WorstColoring(RamseyArgs),
    /// Best copy of B for a given or random coloring
    BestBeta {
        #[command(flatten)]
        instance: RamseyArgs,
        /// Coloring values in enumeration order of Emb(A, C), comma separated
        #[arg(long, conflicts_with = "seed")]
        coloring: Option<String>,
        /// Draw a random coloring with this seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Concentration exponent
    ConcN {
        #[arg(long)]
        diam: String,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        k: u64,
    },
    /// Empirical concentration along a chain of powers
    LevySim {
        carrier: PathBuf,
        /// Generating automorphisms, `;` separated maps `x:y,y:x`
        #[arg(long)]
        auts: String,
        /// Powers, comma separated
        #[arg(long)]
        ns: String,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Search a diagonal witness for a random coloring of a power
    Witness {
        carrier: PathBuf,
        /// The one point of A
        #[arg(long)]
        point: String,
        #[arg(long)]
        auts: String,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 100)]
        budget: u64,
        /// Power to use (default: the concentration exponent)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Seed of the coloring (default: --seed)
        #[arg(long)]
        coloring_seed: Option<u64>,
    },
    /// Search a superstructure extending every partial isomorphism
    Eppa {
        a: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Weak-extension witness for maps of A into a fragment
    Wep {
        a: PathBuf,
        fragment: PathBuf,
        #[arg(long)]
        gens: Option<String>,
        /// Maps A -> fragment, `;` separated
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        caps: CapArgs,
    },
}

#[derive(Debug, clap::Args)]
pub struct RamseyArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
    #[arg(long)]
    pub gens: Option<String>,
    /// Embeddings A -> B, `;` separated maps `a:x,b:y`
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value = "1")]
    pub eps: String,
}

#[derive(Debug, clap::Args)]
pub struct CapArgs {
    #[arg(long, default_value_t = 2)]
    pub max_extra: usize,
    #[arg(long, default_value_t = 12)]
    pub max_denominator: u64,
    #[arg(long, default_value_t = 200_000)]
    pub max_candidates: u64,
}

/// Exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Negative = 1,
    Inconclusive = 2,
    Usage = 64,
    Data = 65,
    NoInput = 66,
}

#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn usage(m: impl Into<String>) -> Self {
        Failure {
            status: Status::Usage,
            message: m.into(),
        }
    }

    pub fn data(m: impl std::fmt::Display) -> Self {
        Failure {
            status: Status::Data,
            message: m.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => Status::Usage as u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(Status::Usage as u8);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match commands::run(&cli) {
        Ok((status, report)) => {
            let written = match &cli.out {
                Some(p) => std::fs::write(p, &report).map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => std::io::stdout()
                    .write_all(report.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::from(status as u8),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(Status::Data as u8)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status as u8)
        }
    }
}
