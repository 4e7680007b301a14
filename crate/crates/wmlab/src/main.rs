use clap::{Args, Parser, Subcommand};

use wmlab::cli::{self, Command as RunCommand, RunConfig, Shape};
use wmlab::evolution::GaugeHandling;

/// Numerical laboratory for self-similar blowup of co-rotational wave maps.
#[derive(Parser)]
#[command(name = "wmlab", version, about)]
struct Cli {
    /// Load the full run configuration from a JSON document instead of flags.
    #[arg(long, global = true)]
    config: Option<String>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Space dimensions (odd, ≥ 3).
    #[arg(long = "d", value_delimiter = ',', default_values_t = vec![3u32])]
    dims: Vec<u32>,
    /// Grid size.
    #[arg(long, default_value_t = 48)]
    n: usize,
    /// Output root directory (defaults to $WMLAB_OUT or ./runs).
    #[arg(long)]
    out: Option<String>,
    /// Seed for randomized states.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Commands {
    /// Evolve a perturbation of the blowup profile in similarity coordinates.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Time step (defaults to the calibrated stable step).
        #[arg(long)]
        dtau: Option<f64>,
        /// Final similarity time.
        #[arg(long, default_value_t = 8.0)]
        tau_max: f64,
        /// Include the quadratic nonlinearity.
        #[arg(long)]
        nonlinear: bool,
        /// Gauge handling: none, project, or adjust-t.
        #[arg(long, default_value = "none")]
        gauge: String,
        /// Initial perturbation shape: zero, gauge, random, or bump.
        #[arg(long, default_value = "random")]
        shape: String,
        /// Perturbation amplitude.
        #[arg(long, default_value_t = 1e-3)]
        amplitude: f64,
    },
    /// Eigenvalue search for the linearized operator.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Search region, e.g. "re>=0,abs<=15".
        #[arg(long, default_value = "re>=0,abs<=15")]
        region: String,
        /// Also write |W| samples over the seed lattice.
        #[arg(long)]
        emit_samples: bool,
    },
    /// Appendix certificates (nonanalyticity, SUSY residuals, identities).
    Appendix {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Norm-scaling exponent fits for the blowup profile.
    Norms {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full acceptance suite.
    VerifyAll {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_gauge(s: &str) -> Result<GaugeHandling, String> {
    match s {
        "none" => Ok(GaugeHandling::None),
        "project" => Ok(GaugeHandling::Project),
        "adjust-t" | "adjust_t" => Ok(GaugeHandling::AdjustT),
        _ => Err(format!("unknown gauge handling '{s}'")),
    }
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    match s {
        "zero" => Ok(Shape::Zero),
        "gauge" => Ok(Shape::Gauge),
        "random" => Ok(Shape::Random),
        "bump" => Ok(Shape::Bump),
        _ => Err(format!("unknown shape '{s}'")),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        return serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"));
    }
    let apply_common = |cfg: &mut RunConfig, common: &CommonArgs| {
        cfg.dims = common.dims.clone();
        cfg.n = common.n;
        cfg.out_dir = common.out.clone();
        cfg.seed = common.seed;
    };
    let cfg = match &cli.command {
        Commands::Simulate {
            common,
            dtau,
            tau_max,
            nonlinear,
            gauge,
            shape,
            amplitude,
        } => {
            let mut cfg = RunConfig::defaults(RunCommand::Simulate);
            apply_common(&mut cfg, common);
            cfg.dtau = *dtau;
            cfg.tau_max = *tau_max;
            cfg.nonlinear = *nonlinear;
            cfg.gauge = parse_gauge(gauge)?;
            cfg.shape = parse_shape(shape)?;
            cfg.amplitude = *amplitude;
            cfg
        }
        Commands::Spectrum {
            common,
            region,
            emit_samples,
        } => {
            let mut cfg = RunConfig::defaults(RunCommand::Spectrum);
            apply_common(&mut cfg, common);
            cfg.region = Some(cli::parse_region(region).map_err(|e| e.to_string())?);
            cfg.emit_samples = *emit_samples;
            cfg
        }
        Commands::Appendix { common } => {
            let mut cfg = RunConfig::defaults(RunCommand::Appendix);
            apply_common(&mut cfg, common);
            cfg
        }
        Commands::Norms { common } => {
            let mut cfg = RunConfig::defaults(RunCommand::Norms);
            apply_common(&mut cfg, common);
            cfg
        }
        Commands::VerifyAll { common } => {
            let mut cfg = RunConfig::defaults(RunCommand::VerifyAll);
            apply_common(&mut cfg, common);
            cfg
        }
    };
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            std::process::exit(2);
        }
    };
    let result = cli::run(&config);
    match &result {
        Ok(rec) => {
            if !rec.pass {
                eprintln!("one or more criteria failed");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(cli::exit_code(&result));
}
