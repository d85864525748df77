use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geohop_cli::precompute::{precompute, Scope};
use geohop_cli::stimulus::{render_stimulus, Endpoints};
use geohop_cli::validate::validate;
use geohop_cli::{baseline, parse_latlon, CliError};
use geohop_core::graph::GeoGraph;
use geohop_core::pipeline::{load_features, AssetStore, FeatureSet};
use geohop_core::transition::ProjectionMode;
use geohop_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "geohop", version, about = "Ego-perspective navigation of geo-referenced graphs")]
struct Cli {
    /// Service configuration file (TOML); flags override its paths.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Projection {
    Mercator,
    Tpeqd,
    Azeqd,
}

impl From<Projection> for ProjectionMode {
    fn from(p: Projection) -> Self {
        match p {
            Projection::Mercator => ProjectionMode::Mercator,
            Projection::Tpeqd => ProjectionMode::Tpeqd,
            Projection::Azeqd => ProjectionMode::Azeqd,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph and basemaps; exit 0 if clean, 1 on violations, 2 on I/O errors.
    Validate {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long = "basemap")]
        basemaps: Vec<PathBuf>,
    },
    /// Write asset bundles for every edge (or every vertex pair).
    Precompute {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long = "basemap")]
        basemaps: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        all_pairs: bool,
        #[arg(long, value_enum, default_value = "tpeqd")]
        projection: Projection,
    },
    /// Render a hop as SVG frames with metadata.
    RenderStimulus {
        #[arg(long, value_enum)]
        projection: Projection,
        #[arg(long, conflicts_with_all = ["from", "to"], required_unless_present_all = ["from", "to"])]
        bin: Option<u8>,
        /// lat,lon
        #[arg(long, requires = "to", allow_hyphen_values = true)]
        from: Option<String>,
        /// lat,lon
        #[arg(long, requires = "from", allow_hyphen_values = true)]
        to: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "basemap")]
        basemaps: Vec<PathBuf>,
    },
    /// Largest tpeqd vs Mercator displacement near the baseline, in pixels.
    BaselineCompare {
        /// lat,lon
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// lat,lon
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        radius_km: f64,
    },
    /// Run the HTTP service.
    Serve,
}

fn load_config(path: Option<&PathBuf>) -> Result<ServiceConfig, CliError> {
    Ok(match path {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    })
}

fn basemaps_or(cfg: &ServiceConfig, flags: Vec<PathBuf>) -> Vec<PathBuf> {
    if flags.is_empty() {
        cfg.basemaps.clone()
    } else {
        flags
    }
}

fn load_basemaps(paths: &[PathBuf]) -> Result<FeatureSet, CliError> {
    let mut fs = FeatureSet::default();
    for p in paths {
        fs.extend(load_features(p)?);
    }
    Ok(fs)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serialisable"));
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    match cli.command {
        Command::Validate { graph, basemaps } => {
            let graph = graph
                .or(cfg.graph.clone())
                .ok_or_else(|| CliError::InvalidArgument("no graph given".into()))?;
            let report = validate(&graph, &basemaps_or(&cfg, basemaps));
            for n in &report.notes {
                println!("ok: {n}");
            }
            for v in &report.violations {
                println!("violation: {v}");
            }
            for e in &report.io_errors {
                println!("io error: {e}");
            }
            Ok(report.exit_code())
        }
        Command::Precompute {
            graph,
            basemaps,
            out,
            all_pairs,
            projection,
        } => {
            let graph = graph
                .or(cfg.graph.clone())
                .ok_or_else(|| CliError::InvalidArgument("no graph given".into()))?;
            let out = out
                .or(cfg.asset_dir.clone())
                .ok_or_else(|| CliError::InvalidArgument("no output directory given".into()))?;
            let g = GeoGraph::load(&graph)?;
            let fs = load_basemaps(&basemaps_or(&cfg, basemaps))?;
            let scope = if all_pairs { Scope::AllPairs } else { Scope::Edges };
            let report = precompute(
                &g,
                &fs,
                &AssetStore::new(out),
                scope,
                projection.into(),
                &cfg.transition,
                &cfg.assets,
            )?;
            tracing::info!(
                written = report.written.len(),
                unchanged = report.unchanged.len(),
                skipped = report.skipped.len(),
                "precompute done"
            );
            print_json(&report);
            Ok(0)
        }
        Command::RenderStimulus {
            projection,
            bin,
            from,
            to,
            seed,
            out,
            basemaps,
        } => {
            let endpoints = match (bin, from, to) {
                (Some(k), _, _) => Endpoints::Bin(k),
                (None, Some(f), Some(t)) => Endpoints::Explicit {
                    from: parse_latlon(&f)?,
                    to: parse_latlon(&t)?,
                },
                _ => return Err(CliError::InvalidArgument("give --bin or both --from and --to".into())),
            };
            let fs = load_basemaps(&basemaps_or(&cfg, basemaps))?;
            let s = render_stimulus(projection.into(), endpoints, seed, &fs, &cfg.transition, &cfg.assets)?;
            s.write(&out)?;
            print_json(&s.metadata);
            Ok(0)
        }
        Command::BaselineCompare { from, to, radius_km } => {
            let r = baseline::baseline_compare(
                parse_latlon(&from)?,
                parse_latlon(&to)?,
                radius_km,
                cfg.assets.screen_pixels,
            )?;
            print_json(&r);
            Ok(0)
        }
        Command::Serve => {
            let rt = tokio::runtime::Runtime::new().map_err(CliError::io("tokio runtime"))?;
            rt.block_on(geohop_service::serve(cfg))
                .map_err(CliError::io("listener"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
