use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hypercells::io::emit::{to_json, to_svg};
use hypercells::io::run::run;
use hypercells::io::spec::{load_spec, Algorithm};

const EXIT_CERTIFICATE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgorithmArg {
    Ep,
    Cutlocus,
    Both,
}

/// Canonical cell decompositions of cusped hyperbolic manifolds and of
/// manifolds with totally geodesic boundary.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Manifold description (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// Maximal word length in the orbit enumeration.
    #[arg(long)]
    word_bound: Option<usize>,
    /// Maximal height x0 of enumerated horoball centres.
    #[arg(long)]
    height_bound: Option<f64>,
    /// Initial bound on return-path length.
    #[arg(long)]
    length_bound: Option<f64>,
    /// Minimal distance between decorations and boundary walls.
    #[arg(long)]
    margin: Option<f64>,
    /// Coplanarity tolerance of the hull.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Draw the decomposition in the Klein disk (dimension 2 only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Decide hull orientations with rational arithmetic.
    #[arg(long)]
    exact: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut spec = match load_spec(&cli.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let o = &mut spec.options;
    if let Some(a) = cli.algorithm {
        o.algorithm = match a {
            AlgorithmArg::Ep => Algorithm::Ep,
            AlgorithmArg::Cutlocus => Algorithm::Cutlocus,
            AlgorithmArg::Both => Algorithm::Both,
        };
    }
    o.word_bound = cli.word_bound.unwrap_or(o.word_bound);
    o.height_bound = cli.height_bound.unwrap_or(o.height_bound);
    o.length_bound = cli.length_bound.unwrap_or(o.length_bound);
    o.margin = cli.margin.unwrap_or(o.margin);
    o.tol = cli.tol.unwrap_or(o.tol);
    o.exact |= cli.exact;
    if cli.svg.is_some() && spec.dimension != 2 {
        eprintln!("error: svg output needs dimension 2, got {}", spec.dimension);
        return ExitCode::from(EXIT_INPUT);
    }

    let report = match run(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    for c in &report.certificates {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.stage, c.detail);
    }
    eprintln!("finished in {:.3} s", report.timing.as_secs_f64());

    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, to_json(&report)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if let Some(path) = &cli.svg {
        let written = to_svg(&report).map_err(|e| e.to_string()).and_then(|s| std::fs::write(path, s).map_err(|e| e.to_string()));
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CERTIFICATE)
    }
}
