use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relsom::evaluation::neighbor_cell_distances;
use relsom::experiment::{self, ExperimentConfig};
use relsom::som::Variant;
use relsom::{bench, generators, io, plot, Error};

/// Relational self-organizing maps for dissimilarity data.
#[derive(Parser)]
#[command(name = "relsom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dissimilarity matrix (or validate one) and write dissimilarity.csv.
    Dissim(RunArgs),
    /// Train a map and write assignments, prototypes, history, report and plots.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Report how many assignment distances came out negative.
        #[arg(long)]
        warn_indefinite: bool,
    },
    /// Recompute the report of a saved map.
    Eval(MapArgs),
    /// Redraw the plots of a saved map.
    Plot(MapArgs),
    /// Time one online iteration or one batch epoch at several sizes.
    Bench(BenchArgs),
    /// Write a synthetic data set.
    Gen(GenArgs),
}

/// Experiment settings. `--config` is read first, then `--set` pairs, then
/// the individual flags.
#[derive(Args, Default)]
struct RunArgs {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value setting; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// csv-points, matrix, edge-list, fasta, uniform-square or swiss-roll.
    #[arg(long)]
    input_kind: Option<String>,
    #[arg(long)]
    input: Option<String>,
    /// Skip the first line of a point CSV.
    #[arg(long)]
    header: bool,
    /// Node ids in the edge list and label file start at 1.
    #[arg(long)]
    one_based: bool,
    /// Number of generated points.
    #[arg(long)]
    n: Option<String>,
    /// node_id,label file.
    #[arg(long)]
    labels: Option<String>,
    /// auto, squared-euclidean or geodesic.
    #[arg(long)]
    dissim: Option<String>,
    /// Neighbors per point for geodesic distances.
    #[arg(long)]
    k: Option<String>,
    /// online-relational, batch-relational, euclidean-online or batch-median.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    /// hard or gaussian.
    #[arg(long)]
    kernel: Option<String>,
    /// Online iterations.
    #[arg(long = "iterations", short = 'T')]
    iterations: Option<String>,
    #[arg(long)]
    alpha0: Option<String>,
    #[arg(long)]
    plateaus: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    /// Starting radius of batch runs.
    #[arg(long)]
    batch_radius: Option<String>,
    /// one-hot-sample or random-convex.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// uniform or epoch-shuffle.
    #[arg(long)]
    sampling: Option<String>,
    /// recompute or incremental.
    #[arg(long)]
    quadratic: Option<String>,
    /// cached or per-pair.
    #[arg(long)]
    assignment: Option<String>,
    /// Comma-separated iterations or epochs for grid_snapshots.svg.
    #[arg(long)]
    snapshots: Option<String>,
    /// Also write dissimilarity.csv when training.
    #[arg(long)]
    write_matrix: bool,
    /// Output directory.
    #[arg(long, short = 'o')]
    output: Option<String>,
}

impl RunArgs {
    fn pairs(&self, base: Option<&Path>) -> Result<Vec<(String, String)>, Error> {
        let mut pairs = Vec::new();
        for file in base.into_iter().chain(self.config.as_deref()) {
            pairs.extend(io::parse_key_values(&io::read_to_string(file)?, &file.display().to_string())?);
        }
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("--set expects KEY=VALUE, got `{s}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flags: [(&str, &Option<String>); 22] = [
            ("input.kind", &self.input_kind),
            ("input.path", &self.input),
            ("input.n", &self.n),
            ("input.labels", &self.labels),
            ("dissim.kind", &self.dissim),
            ("dissim.k", &self.k),
            ("som.variant", &self.variant),
            ("grid.rows", &self.rows),
            ("grid.cols", &self.cols),
            ("kernel.kind", &self.kernel),
            ("schedule.T", &self.iterations),
            ("schedule.alpha0", &self.alpha0),
            ("schedule.plateaus", &self.plateaus),
            ("batch.epochs", &self.epochs),
            ("batch.radius", &self.batch_radius),
            ("init.mode", &self.init),
            ("seed", &self.seed),
            ("train.sampling", &self.sampling),
            ("train.quadratic", &self.quadratic),
            ("train.assignment", &self.assignment),
            ("plot.snapshots", &self.snapshots),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                pairs.push((key.to_string(), v.clone()));
            }
        }
        for (key, on) in [("input.header", self.header), ("input.one_based", self.one_based), ("output.matrix", self.write_matrix)] {
            if on {
                pairs.push((key.to_string(), "true".to_string()));
            }
        }
        Ok(pairs)
    }

    fn config(&self, base: Option<&Path>) -> Result<ExperimentConfig, Error> {
        ExperimentConfig::from_pairs(&self.pairs(base)?)
    }
}

#[derive(Args)]
struct MapArgs {
    /// Directory written by `train`; its config.txt supplies the defaults.
    #[arg(long)]
    map: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "online-relational")]
    variant: String,
    /// Comma-separated, ascending.
    #[arg(long, default_value = "250,500,1000")]
    n: String,
    #[arg(long, default_value_t = 100)]
    units: usize,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    UniformSquare,
    SwissRoll,
    Sequences,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: Generator,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sequence length.
    #[arg(long, default_value_t = 600)]
    length: usize,
    /// Number of sequence clades.
    #[arg(long, default_value_t = 4)]
    clades: usize,
    /// Points as CSV or sequences as FASTA; stdout when absent.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Also write `id,label` lines: roll quartiles or sequence clades.
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) => io::write_string(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn label_lines<T: std::fmt::Display>(labels: &[T]) -> String {
    labels.iter().enumerate().map(|(i, l)| format!("{i},{l}\n")).collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Dissim(args) => {
            let config = args.config(None)?;
            let data = experiment::load_dataset(&config)?;
            let d = &data.dissimilarity;
            std::fs::create_dir_all(&config.output)?;
            io::write_string(&config.output.join("dissimilarity.csv"), &io::format_matrix_csv(d))?;
            println!("n={} max={}", d.n(), d.max_value());
        }
        Command::Train { run, warn_indefinite } => {
            let config = run.config(None)?;
            let out = experiment::run_experiment(&config)?;
            print!("{}", io::format_report(&out.report));
            if warn_indefinite && out.map.negative_distances > 0 {
                eprintln!(
                    "warning: {} assignment distances were negative (the dissimilarity is not Euclidean)",
                    out.map.negative_distances
                );
            }
        }
        Command::Eval(args) => {
            let config = args.run.config(Some(&args.map.join("config.txt")))?;
            let data = experiment::load_dataset(&config)?;
            let saved = io::read_map(&args.map)?;
            let report = relsom::evaluation::evaluate(
                match (saved.variant, &data.points) {
                    (Variant::EuclideanOnline, Some(p)) => p.into(),
                    _ => (&data.dissimilarity).into(),
                },
                &saved.grid,
                &saved.prototypes,
                &saved.assignment,
                data.labels.as_deref(),
            )?;
            let ndm = neighbor_cell_distances(&data.dissimilarity, &saved.grid, &saved.assignment)?;
            io::write_string(&args.map.join("report.txt"), &io::format_report(&report))?;
            io::write_string(&args.map.join("units.csv"), &io::format_unit_table(&saved.grid, &report))?;
            io::write_string(&args.map.join("neighbor_distances.csv"), &io::format_neighbor_distances(&ndm))?;
            print!("{}", io::format_report(&report));
        }
        Command::Plot(args) => {
            let config = args.run.config(Some(&args.map.join("config.txt")))?;
            let data = experiment::load_dataset(&config)?;
            let saved = io::read_map(&args.map)?;
            let ndm = neighbor_cell_distances(&data.dissimilarity, &saved.grid, &saved.assignment)?;
            io::write_string(&args.map.join("neighbor_distances.svg"), &plot::emit_polygon_distance_plot(&ndm))?;
            if let Some(points) = data.points.as_ref().filter(|p| p.dim() == 2) {
                let protos = saved.prototypes.embed(points)?;
                io::write_string(&args.map.join("grid_final.svg"), &plot::emit_grid_plot(points, &protos, &saved.grid)?)?;
                println!("lattice_crossings={}", plot::lattice_crossings(&protos, &saved.grid)?);
            }
            if let Some(labels) = &data.labels {
                io::write_string(
                    &args.map.join("labels.svg"),
                    &plot::emit_label_distribution_plot(&saved.grid, &saved.assignment, labels)?,
                )?;
            }
        }
        Command::Bench(args) => {
            let variant: Variant = args.variant.parse()?;
            let ns = args
                .n
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad size `{v}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = bench::benchmark_scaling(variant, &ns, args.units, args.repetitions, args.seed)?;
            emit(args.output.as_deref(), &bench::format_scaling_csv(&rows))?;
            for (label, a, b, ratio) in bench::successive_ratios(&rows) {
                eprintln!("{label}: t({b})/t({a}) = {ratio:.2}");
            }
        }
        Command::Gen(args) => match args.kind {
            Generator::UniformSquare => {
                let p = generators::generate_uniform_square(args.n, args.seed)?;
                emit(args.output.as_deref(), &io::format_points_csv(&p))?;
            }
            Generator::SwissRoll => {
                let (p, t) = generators::generate_swiss_roll_with_t(args.n, args.seed)?;
                emit(args.output.as_deref(), &io::format_points_csv(&p))?;
                if let Some(path) = &args.labels {
                    let q: Vec<String> = generators::quartile_labels(&t).iter().map(|q| format!("q{}", q + 1)).collect();
                    io::write_string(path, &label_lines(&q))?;
                }
            }
            Generator::Sequences => {
                let (s, clades) = generators::generate_sequences(args.n, args.length, args.clades, 0.15, 0.02, args.seed)?;
                emit(args.output.as_deref(), &io::format_fasta(&s))?;
                if let Some(path) = &args.labels {
                    let c: Vec<String> = clades.iter().map(|c| format!("clade{c}")).collect();
                    io::write_string(path, &label_lines(&c))?;
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
