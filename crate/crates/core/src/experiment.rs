//! Configurable end-to-end runs: load or generate data, build the
//! dissimilarity, train, evaluate, and write results and plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dissimilarity::{
    geodesic_dissimilarity, graph_shortest_path_dissimilarity, kimura2p_dissimilarity, squared_euclidean,
    DissimilarityMatrix, PointCloud,
};
use crate::evaluation::{evaluate, neighbor_cell_distances, MapReport, NeighborDistanceMap};
use crate::generators::{generate_swiss_roll_with_t, generate_uniform_square, quartile_labels};
use crate::io;
use crate::plot;
use crate::som::{
    train_batch_median, train_batch_relational, train_online_euclidean, train_online_relational, AssignmentStrategy,
    Data, InitMode, Initialization, QuadraticUpdate, Sampling, TrainOptions, TrainedMap, Variant,
};
use crate::topology::{BatchSchedule, MapGrid, NeighborhoodKernel, TrainingSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    CsvPoints { path: PathBuf, header: bool },
    Matrix { path: PathBuf },
    EdgeList { path: PathBuf, one_based: bool },
    Fasta { path: PathBuf },
    UniformSquare { n: usize },
    SwissRoll { n: usize },
}

/// How point inputs become a dissimilarity matrix. Graphs, sequences and
/// matrices have a single natural choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DissimilarityKind {
    #[default]
    Auto,
    SquaredEuclidean,
    Geodesic,
}

impl FromStr for DissimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "squared-euclidean" => Ok(Self::SquaredEuclidean),
            "geodesic" => Ok(Self::Geodesic),
            other => Err(Error::InvalidParameter(format!("unknown dissimilarity `{other}`"))),
        }
    }
}

impl DissimilarityKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::SquaredEuclidean => "squared-euclidean",
            Self::Geodesic => "geodesic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    /// Optional `id,label` file for observation labels.
    pub labels: Option<PathBuf>,
    pub dissimilarity: DissimilarityKind,
    pub k: usize,
    pub variant: Variant,
    pub rows: usize,
    pub cols: usize,
    pub kernel: NeighborhoodKernel,
    pub iterations: usize,
    pub alpha0: f64,
    /// Radius plateaus of online runs; `None` gives one plateau per integer
    /// radius, `rows + cols + 1`.
    pub plateaus: Option<usize>,
    pub epochs: usize,
    /// Starting radius of batch runs; `None` uses half the longer grid side.
    pub batch_radius: Option<f64>,
    pub init: InitMode,
    pub seed: u64,
    pub sampling: Sampling,
    pub quadratic_update: QuadraticUpdate,
    pub assignment: AssignmentStrategy,
    /// Iterations (online) or epochs (batch) drawn in `grid_snapshots.svg`.
    pub snapshots: Option<Vec<usize>>,
    /// Also write the dissimilarity matrix as `dissimilarity.csv`.
    pub write_matrix: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: InputSource::UniformSquare { n: 500 },
            labels: None,
            dissimilarity: DissimilarityKind::Auto,
            k: 10,
            variant: Variant::OnlineRelational,
            rows: 10,
            cols: 10,
            kernel: NeighborhoodKernel::Hard,
            iterations: 2500,
            alpha0: 0.5,
            plateaus: None,
            epochs: 20,
            batch_radius: None,
            init: InitMode::RandomConvex,
            seed: 0,
            sampling: Sampling::Uniform,
            quadratic_update: QuadraticUpdate::Recompute,
            assignment: AssignmentStrategy::Cached,
            snapshots: None,
            write_matrix: false,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("{key}: expected true or false, got `{value}`"))),
    }
}

/// Every key accepted by [`ExperimentConfig::from_pairs`].
pub const CONFIG_KEYS: &[&str] = &[
    "input.kind",
    "input.path",
    "input.header",
    "input.one_based",
    "input.n",
    "input.labels",
    "dissim.kind",
    "dissim.k",
    "som.variant",
    "grid.rows",
    "grid.cols",
    "kernel.kind",
    "schedule.T",
    "schedule.alpha0",
    "schedule.plateaus",
    "batch.epochs",
    "batch.radius",
    "init.mode",
    "seed",
    "train.sampling",
    "train.quadratic",
    "train.assignment",
    "plot.snapshots",
    "output.matrix",
    "output",
];

impl ExperimentConfig {
    /// Builds a config from `key=value` pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut c = Self::default();
        let mut kind: Option<String> = None;
        let mut path: Option<PathBuf> = None;
        let (mut header, mut one_based, mut n) = (false, false, None::<usize>);
        for (key, value) in pairs {
            let (key, value) = (key.as_str(), value.as_str());
            match key {
                "input.kind" => kind = Some(value.to_string()),
                "input.path" => path = Some(PathBuf::from(value)),
                "input.header" => header = parse_bool(key, value)?,
                "input.one_based" => one_based = parse_bool(key, value)?,
                "input.n" => n = Some(parse_value(key, value)?),
                "input.labels" => c.labels = Some(PathBuf::from(value)),
                "dissim.kind" => c.dissimilarity = value.parse()?,
                "dissim.k" => c.k = parse_value(key, value)?,
                "som.variant" => c.variant = value.parse()?,
                "grid.rows" => c.rows = parse_value(key, value)?,
                "grid.cols" => c.cols = parse_value(key, value)?,
                "kernel.kind" => c.kernel = value.parse()?,
                "schedule.T" => c.iterations = parse_value(key, value)?,
                "schedule.alpha0" => c.alpha0 = parse_value(key, value)?,
                "schedule.plateaus" => c.plateaus = Some(parse_value(key, value)?),
                "batch.epochs" => c.epochs = parse_value(key, value)?,
                "batch.radius" => c.batch_radius = Some(parse_value(key, value)?),
                "init.mode" => c.init = value.parse()?,
                "seed" => c.seed = parse_value(key, value)?,
                "train.sampling" => c.sampling = value.parse()?,
                "train.quadratic" => c.quadratic_update = value.parse()?,
                "train.assignment" => c.assignment = value.parse()?,
                "plot.snapshots" => {
                    c.snapshots = Some(
                        value
                            .split(',')
                            .map(|v| parse_value(key, v.trim()))
                            .collect::<Result<Vec<usize>>>()?,
                    )
                }
                "output.matrix" => c.write_matrix = parse_bool(key, value)?,
                "output" => c.output = PathBuf::from(value),
                other => return Err(Error::InvalidParameter(format!("unknown config key `{other}`"))),
            }
        }
        let need_path = |what: &str| path.clone().ok_or_else(|| Error::InvalidParameter(format!("{what} input needs input.path")));
        c.input = match kind.as_deref().unwrap_or("uniform-square") {
            "csv-points" => InputSource::CsvPoints { path: need_path("csv-points")?, header },
            "matrix" => InputSource::Matrix { path: need_path("matrix")? },
            "edge-list" => InputSource::EdgeList { path: need_path("edge-list")?, one_based },
            "fasta" => InputSource::Fasta { path: need_path("fasta")? },
            "uniform-square" | "generator:uniform-square" => InputSource::UniformSquare { n: n.unwrap_or(500) },
            "swiss-roll" | "generator:swiss-roll" => InputSource::SwissRoll { n: n.unwrap_or(1000) },
            other => return Err(Error::InvalidParameter(format!("unknown input.kind `{other}`"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        Self::from_pairs(&io::parse_key_values(text, source)?)
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.variant.is_batch() {
            self.batch_schedule(&grid)?;
        } else {
            self.online_schedule(&grid)?;
        }
        if matches!(self.input, InputSource::UniformSquare { n: 0 } | InputSource::SwissRoll { n: 0 }) {
            return Err(Error::InvalidParameter("input.n must be at least 1".into()));
        }
        if self.dissimilarity == DissimilarityKind::Geodesic && self.k == 0 {
            return Err(Error::InvalidParameter("dissim.k must be at least 1".into()));
        }
        let points_input = matches!(
            self.input,
            InputSource::CsvPoints { .. } | InputSource::UniformSquare { .. } | InputSource::SwissRoll { .. }
        );
        if self.dissimilarity != DissimilarityKind::Auto && !points_input {
            return Err(Error::InvalidParameter(format!(
                "dissim.kind = {} only applies to point inputs",
                self.dissimilarity.name()
            )));
        }
        if self.variant == Variant::EuclideanOnline && !points_input {
            return Err(Error::InvalidParameter("euclidean-online needs point input".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<MapGrid> {
        MapGrid::new(self.rows, self.cols)
    }

    pub fn online_schedule(&self, grid: &MapGrid) -> Result<TrainingSchedule> {
        let plateaus = self.plateaus.unwrap_or(grid.rows() + grid.cols() + 1);
        TrainingSchedule::annealed(self.iterations, self.alpha0, plateaus, grid)
    }

    pub fn batch_schedule(&self, grid: &MapGrid) -> Result<BatchSchedule> {
        let start = self.batch_radius.unwrap_or(grid.rows().max(grid.cols()) as f64 / 2.0);
        BatchSchedule::linear(self.epochs, start)
    }

    /// Iterations or epochs drawn in the snapshot plot.
    pub fn snapshot_points(&self) -> Vec<usize> {
        if let Some(s) = &self.snapshots {
            return s.clone();
        }
        if self.variant.is_batch() {
            // 0, 5, 9, 13, 17, 20 for 20 epochs
            [0.0, 0.25, 0.45, 0.65, 0.85, 1.0].iter().map(|f| (f * self.epochs as f64).round() as usize).collect()
        } else {
            (0..=5).map(|k| k * self.iterations / 5).collect()
        }
    }

    /// The resolved configuration as `key=value` text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        match &self.input {
            InputSource::CsvPoints { path, header } => {
                kv("input.kind", "csv-points".into());
                kv("input.path", path.display().to_string());
                kv("input.header", header.to_string());
            }
            InputSource::Matrix { path } => {
                kv("input.kind", "matrix".into());
                kv("input.path", path.display().to_string());
            }
            InputSource::EdgeList { path, one_based } => {
                kv("input.kind", "edge-list".into());
                kv("input.path", path.display().to_string());
                kv("input.one_based", one_based.to_string());
            }
            InputSource::Fasta { path } => {
                kv("input.kind", "fasta".into());
                kv("input.path", path.display().to_string());
            }
            InputSource::UniformSquare { n } => {
                kv("input.kind", "uniform-square".into());
                kv("input.n", n.to_string());
            }
            InputSource::SwissRoll { n } => {
                kv("input.kind", "swiss-roll".into());
                kv("input.n", n.to_string());
            }
        }
        if let Some(l) = &self.labels {
            kv("input.labels", l.display().to_string());
        }
        kv("dissim.kind", self.dissimilarity.name().into());
        kv("dissim.k", self.k.to_string());
        kv("som.variant", self.variant.name().into());
        kv("grid.rows", self.rows.to_string());
        kv("grid.cols", self.cols.to_string());
        kv("kernel.kind", self.kernel.name().into());
        kv("schedule.T", self.iterations.to_string());
        kv("schedule.alpha0", self.alpha0.to_string());
        if let Some(p) = self.plateaus {
            kv("schedule.plateaus", p.to_string());
        }
        kv("batch.epochs", self.epochs.to_string());
        if let Some(r) = self.batch_radius {
            kv("batch.radius", r.to_string());
        }
        kv("init.mode", self.init.name().into());
        kv("seed", self.seed.to_string());
        kv("train.sampling", match self.sampling {
            Sampling::Uniform => "uniform".into(),
            Sampling::EpochShuffle => "epoch-shuffle".into(),
        });
        kv("train.quadratic", match self.quadratic_update {
            QuadraticUpdate::Recompute => "recompute".into(),
            QuadraticUpdate::Incremental => "incremental".into(),
        });
        kv("train.assignment", match self.assignment {
            AssignmentStrategy::Cached => "cached".into(),
            AssignmentStrategy::PerPair => "per-pair".into(),
        });
        if let Some(s) = &self.snapshots {
            kv("plot.snapshots", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        }
        kv("output.matrix", self.write_matrix.to_string());
        kv("output", self.output.display().to_string());
        out
    }
}

/// Data loaded for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Coordinates, when the input is a point cloud.
    pub points: Option<PointCloud>,
    pub dissimilarity: DissimilarityMatrix,
    pub labels: Option<Vec<String>>,
}

fn read_label_file(path: &Path, n: usize) -> Result<Vec<String>> {
    io::read_labels(&io::read_to_string(path)?, &path.display().to_string(), n, false)
}

/// Loads or generates the input and builds its dissimilarity matrix.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let name = |p: &Path| p.display().to_string();
    let points_matrix = |points: &PointCloud, auto: DissimilarityKind| -> Result<DissimilarityMatrix> {
        match if config.dissimilarity == DissimilarityKind::Auto { auto } else { config.dissimilarity } {
            DissimilarityKind::Geodesic => geodesic_dissimilarity(points, config.k),
            _ => Ok(squared_euclidean(points)),
        }
    };
    let mut data = match &config.input {
        InputSource::CsvPoints { path, header } => {
            let points = io::read_points_csv(&io::read_to_string(path)?, &name(path), *header)?;
            let d = points_matrix(&points, DissimilarityKind::SquaredEuclidean)?;
            Dataset { points: Some(points), dissimilarity: d, labels: None }
        }
        InputSource::Matrix { path } => Dataset {
            points: None,
            dissimilarity: io::read_matrix_csv(&io::read_to_string(path)?, &name(path))?,
            labels: None,
        },
        InputSource::EdgeList { path, one_based } => {
            let (nodes, edges) = io::read_edge_list(&io::read_to_string(path)?, &name(path), *one_based)?;
            let mut g = crate::dissimilarity::SimpleGraph::new(nodes, &edges)?;
            let mut labels = None;
            if let Some(lp) = &config.labels {
                let l = io::read_labels(&io::read_to_string(lp)?, &name(lp), nodes, *one_based)?;
                g = g.with_labels(l.clone())?;
                labels = Some(l);
            }
            Dataset { points: None, dissimilarity: graph_shortest_path_dissimilarity(&g)?, labels }
        }
        InputSource::Fasta { path } => {
            let seqs = io::read_fasta(&io::read_to_string(path)?, &name(path))?;
            Dataset { points: None, dissimilarity: kimura2p_dissimilarity(&seqs)?, labels: None }
        }
        InputSource::UniformSquare { n } => {
            let points = generate_uniform_square(*n, config.seed)?;
            let d = points_matrix(&points, DissimilarityKind::SquaredEuclidean)?;
            Dataset { points: Some(points), dissimilarity: d, labels: None }
        }
        InputSource::SwissRoll { n } => {
            let (points, t) = generate_swiss_roll_with_t(*n, config.seed)?;
            let d = points_matrix(&points, DissimilarityKind::Geodesic)?;
            let labels = quartile_labels(&t).iter().map(|q| format!("q{}", q + 1)).collect();
            Dataset { points: Some(points), dissimilarity: d, labels: Some(labels) }
        }
    };
    if data.labels.is_none() {
        if let Some(lp) = &config.labels {
            data.labels = Some(read_label_file(lp, data.dissimilarity.n())?);
        }
    }
    Ok(data)
}

/// Trains the configured variant on a loaded dataset.
pub fn train(config: &ExperimentConfig, data: &Dataset, keep_snapshots: bool) -> Result<TrainedMap> {
    let grid = config.grid()?;
    let init = Initialization::Draw(config.init);
    let mut checkpoints: Vec<usize> = if config.variant.is_batch() {
        (0..=config.epochs).collect()
    } else {
        (0..=10).map(|k| k * config.iterations / 10).collect()
    };
    if keep_snapshots {
        checkpoints.extend(config.snapshot_points());
    }
    let options = TrainOptions {
        checkpoints: Some(checkpoints),
        keep_snapshots,
        sampling: config.sampling,
        quadratic_update: config.quadratic_update,
        assignment: config.assignment,
        ..TrainOptions::default()
    };
    let d = &data.dissimilarity;
    match config.variant {
        Variant::OnlineRelational => {
            train_online_relational(d, &grid, config.kernel, &config.online_schedule(&grid)?, &init, config.seed, &options)
        }
        Variant::EuclideanOnline => {
            let points = data
                .points
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("euclidean-online needs point input".into()))?;
            train_online_euclidean(points, &grid, config.kernel, &config.online_schedule(&grid)?, &init, config.seed, &options)
        }
        Variant::BatchRelational => {
            train_batch_relational(d, &grid, config.kernel, &config.batch_schedule(&grid)?, &init, config.seed, &options)
        }
        Variant::BatchMedian => {
            train_batch_median(d, &grid, config.kernel, &config.batch_schedule(&grid)?, &init, config.seed, &options)
        }
    }
}

/// Quality report of a map on its dataset.
pub fn report(data: &Dataset, map: &TrainedMap) -> Result<MapReport> {
    let eval_data: Data<'_> = match (&map.variant, &data.points) {
        (Variant::EuclideanOnline, Some(p)) => p.into(),
        _ => (&data.dissimilarity).into(),
    };
    evaluate(eval_data, &map.grid, &map.prototypes, &map.assignment, data.labels.as_deref())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub map: TrainedMap,
    pub report: MapReport,
    pub neighbor_distances: NeighborDistanceMap,
    /// Files written, relative to the output directory, in write order.
    pub files: Vec<String>,
}

/// Runs a full experiment and writes its outputs under `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let data = load_dataset(config)?;
    let map = train(config, &data, true)?;
    let report = report(&data, &map)?;
    let ndm = neighbor_cell_distances(&data.dissimilarity, &map.grid, &map.assignment)?;

    let dir = &config.output;
    io::write_map(dir, &map)?;
    let mut files: Vec<String> = vec![
        "assignments.csv".into(),
        io::format_prototypes(&map.prototypes).0.into(),
        "history.csv".into(),
        "meta.txt".into(),
    ];
    let mut put = |name: &str, contents: &str| -> Result<()> {
        io::write_string(&dir.join(name), contents)?;
        files.push(name.to_string());
        Ok(())
    };
    put("config.txt", &config.to_text())?;
    put("report.txt", &io::format_report(&report))?;
    put("units.csv", &io::format_unit_table(&map.grid, &report))?;
    put("neighbor_distances.csv", &io::format_neighbor_distances(&ndm))?;
    put("neighbor_distances.svg", &plot::emit_polygon_distance_plot(&ndm))?;
    if config.write_matrix {
        put("dissimilarity.csv", &io::format_matrix_csv(&data.dissimilarity))?;
    }
    if let Some(points) = data.points.as_ref().filter(|p| p.dim() == 2) {
        let wanted = config.snapshot_points();
        let mut snaps = Vec::new();
        for s in map.snapshots.iter().filter(|s| wanted.contains(&s.iteration)) {
            snaps.push((s.iteration, s.prototypes.embed(points)?));
        }
        put("grid_snapshots.svg", &plot::emit_snapshot_panels(points, &snaps, &map.grid)?)?;
        put("grid_final.svg", &plot::emit_grid_plot(points, &map.prototypes.embed(points)?, &map.grid)?)?;
    }
    if let Some(labels) = &data.labels {
        put("labels.svg", &plot::emit_label_distribution_plot(&map.grid, &map.assignment, labels)?)?;
    }
    Ok(ExperimentOutcome { map, report, neighbor_distances: ndm, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        io::parse_key_values(text, "test").unwrap()
    }

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::from_pairs(&pairs("grid.rows=3\ngrid.rows=4\nkernel.kind=gaussian\n")).unwrap();
        assert_eq!(c.rows, 4);
        assert_eq!(c.kernel, NeighborhoodKernel::Gaussian);
        assert_eq!(c.input, InputSource::UniformSquare { n: 500 });
        let back = ExperimentConfig::from_text(&c.to_text(), "t").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_configs_fail_before_compute() {
        for text in [
            "grid.rows=0",
            "schedule.alpha0=1.5",
            "input.kind=matrix",
            "input.kind=nope",
            "bogus=1",
            "input.kind=edge-list\ninput.path=x\ndissim.kind=geodesic",
            "input.kind=fasta\ninput.path=x\nsom.variant=euclidean-online",
            "seed=-1",
        ] {
            assert!(ExperimentConfig::from_pairs(&pairs(text)).is_err(), "{text}");
        }
    }

    #[test]
    fn snapshot_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.snapshot_points(), vec![0, 500, 1000, 1500, 2000, 2500]);
        let b = ExperimentConfig { variant: Variant::BatchRelational, ..c };
        assert_eq!(b.snapshot_points(), vec![0, 5, 9, 13, 17, 20]);
    }

    #[test]
    fn small_run_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::from_pairs(&pairs(&format!(
            "input.n=40\ngrid.rows=3\ngrid.cols=3\nschedule.T=200\noutput={}\n",
            dir.path().display()
        )))
        .unwrap();
        let out = run_experiment(&config).unwrap();
        for f in &out.files {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(out.files.contains(&"grid_snapshots.svg".to_string()));
        let saved = io::read_map(dir.path()).unwrap();
        assert_eq!(saved.assignment, out.map.assignment);
        assert_eq!(saved.prototypes, out.map.prototypes);
        let snaps: Vec<usize> = out.map.snapshots.iter().map(|s| s.iteration).collect();
        for t in [0, 40, 80, 120, 160, 200] {
            assert!(snaps.contains(&t));
        }
    }
}
