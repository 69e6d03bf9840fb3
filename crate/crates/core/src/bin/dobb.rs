use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use dobb::bench::{load_scene, run_benchmark, sweep_rotation_sets, BenchConfig, ModeSelection, SceneSource};
use dobb::{convert, BuildConfig, ConversionConfig, ConversionMode, RotationSet, WideBvh};

#[derive(Parser)]
#[command(name = "dobb", version, about = "Wide BVHs with discrete oriented bounding boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, convert and trace; write CSV report and heatmaps.
    Run(RunArgs),
    /// Brute-force SAH over a grid of rotation sets.
    Sweep(SweepArgs),
    /// Dump a rotation set and its encoding tables as JSON.
    Rotations(RotationArgs),
    /// Dump the per-node conversion decisions as JSON.
    Annotate(AnnotateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `hairball`, `grid` or a path to an OBJ file.
    #[arg(long)]
    scene: Option<String>,
    /// Node width (2, 4, 6 or 8).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// aabb, heuristic, brute or all.
    #[arg(long)]
    mode: Option<ModeSelection>,
    #[arg(long)]
    axes: Option<usize>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    max_levels: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SceneArgs {
    /// `hairball`, `grid` or a path to an OBJ file.
    #[arg(long, default_value = "hairball")]
    scene: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Node width.
    #[arg(long, default_value_t = 8)]
    n: usize,
}

impl SceneArgs {
    fn build(&self) -> dobb::Result<WideBvh> {
        let scene = load_scene(&SceneSource::from_flag(&self.scene), self.seed)?;
        WideBvh::build(
            &scene,
            &BuildConfig {
                width: self.n,
                ..BuildConfig::default()
            },
        )
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_delimiter = ',', default_value = "3,7,13")]
    axes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    m: Vec<u32>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RotationArgs {
    #[arg(long, default_value_t = 13)]
    axes: usize,
    #[arg(long, default_value_t = 4)]
    m: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnotateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value = "heuristic")]
    mode: ModeSelection,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    max_levels: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> dobb::Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn run(args: RunArgs) -> dobb::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = &args.scene {
        cfg.scene = SceneSource::from_flag(s);
    }
    if let Some(n) = args.n {
        cfg.width = n;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(a) = args.axes {
        cfg.axes = a;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if args.max_levels.is_some() {
        cfg.max_levels = args.max_levels;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    let output = run_benchmark(&cfg)?;
    output.write(&cfg.out)?;
    emit(&output.csv, None)
}

fn sweep(args: SweepArgs) -> dobb::Result<()> {
    let tree = args.scene.build()?;
    let table = sweep_rotation_sets(&tree, &args.axes, &args.m)?;
    emit(&table.to_csv(), args.out.as_ref())
}

fn rotations(args: RotationArgs) -> dobb::Result<()> {
    let set = RotationSet::new(args.axes, args.m)?;
    let json = serde_json::to_string_pretty(&set.dump()).expect("dump serializes");
    emit(&(json + "\n"), args.out.as_ref())
}

fn annotate(args: AnnotateArgs) -> dobb::Result<()> {
    let mode = match args.mode {
        ModeSelection::Heuristic => ConversionMode::Heuristic,
        ModeSelection::Brute => ConversionMode::BruteForce,
        other => {
            return Err(dobb::Error::Config(format!(
                "annotate needs mode heuristic or brute, got {other:?}"
            )))
        }
    };
    let tree = args.scene.build()?;
    let ann = convert(
        &tree,
        Arc::new(RotationSet::standard()),
        &ConversionConfig {
            alpha: args.alpha,
            max_levels_from_leaf: args.max_levels,
            mode,
        },
    )?;
    let json = serde_json::to_string_pretty(&ann.dump()).expect("dump serializes");
    emit(&(json + "\n"), args.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Rotations(a) => rotations(a),
        Command::Annotate(a) => annotate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
