use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tev::report::{format_sig, run_experiment, RunConfig};
use tev::Error;

/// Transmission eigenvalues by multigrid correction on Bogner-Fox-Schmit elements.
#[derive(Parser)]
#[command(name = "tev", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSV/SVG results.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// unit_square or l_shape.
    #[arg(long)]
    domain: Option<String>,
    /// Constant index of refraction.
    #[arg(long, conflicts_with = "n_affine", allow_hyphen_values = true)]
    n: Option<String>,
    /// Affine index of refraction a + b1 x + b2 y.
    #[arg(long, num_args = 3, value_names = ["A", "B1", "B2"], allow_hyphen_values = true)]
    n_affine: Option<Vec<String>>,
    /// Cells per unit length of the coarsest mesh.
    #[arg(long)]
    coarse_div: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// Number of eigenvalues tracked.
    #[arg(long)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    shift_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    shift_im: Option<f64>,
    #[arg(long)]
    quad_order: Option<String>,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

fn build_config(args: &RunArgs) -> tev::Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let pairs = [
        ("domain", args.domain.clone()),
        ("n", args.n.clone()),
        ("n", args.n_affine.as_ref().map(|v| format!("affine {}", v.join(" ")))),
        ("coarse_div", args.coarse_div.clone()),
        ("levels", args.levels.clone()),
        ("q", args.q.clone()),
        ("quad_order", args.quad_order.clone()),
        ("tol", args.tol.clone()),
        ("out", args.out.clone()),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    if let Some(re) = args.shift_re {
        config.shift.re = re;
    }
    if let Some(im) = args.shift_im {
        config.shift.im = im;
    }
    config.validate()?;
    Ok(config)
}

fn report(err: &Error) -> ExitCode {
    eprintln!("tev: {err}");
    if err.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Command::Run(args) = cli.command;
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    match run_experiment(&config) {
        Ok(bundle) => {
            println!("level  h             j  k");
            for r in &bundle.eigenvalues {
                let sign = if r.k.im < 0.0 { '-' } else { '+' };
                println!(
                    "{:<6} {:<13} {:<2} {} {} {}i",
                    r.level,
                    format_sig(r.h),
                    r.j,
                    format_sig(r.k.re),
                    sign,
                    format_sig(r.k.im.abs())
                );
            }
            for (j, slope) in &bundle.orders {
                println!("order k{j}: {slope:.3}");
            }
            println!("results written to {}", config.out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("partial results written to {}", config.out);
            report(&e)
        }
    }
}
