//! Training algorithms: online relational SOM, batch relational SOM, the
//! classical Euclidean online SOM and batch median SOM.
//!
//! Relational prototypes are convex combinations of the observations,
//! `p_u = sum_i beta_ui x_i`, stored as one coefficient row per unit. The
//! squared distance from observation `i` to such a prototype only needs the
//! dissimilarity matrix:
//!
//! ```text
//! ||x_i - p_u||^2 = (D beta_u)_i - 1/2 beta_u' D beta_u
//! ```

mod batch;
mod online;

pub use batch::{train_batch_median, train_batch_relational, AssignmentStrategy};
pub use online::{train_online_euclidean, train_online_relational, QuadraticUpdate, Sampling};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dissimilarity::{squared_distance, DissimilarityMatrix, PointCloud};
use crate::error::{Error, Result};
use crate::exec::{dot, Execution};
use crate::topology::{MapGrid, NeighborhoodKernel};

/// Which algorithm produced a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    OnlineRelational,
    BatchRelational,
    EuclideanOnline,
    BatchMedian,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::OnlineRelational => "online-relational",
            Variant::BatchRelational => "batch-relational",
            Variant::EuclideanOnline => "euclidean-online",
            Variant::BatchMedian => "batch-median",
        }
    }

    pub fn is_batch(self) -> bool {
        matches!(self, Variant::BatchRelational | Variant::BatchMedian)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "online-relational" | "online" => Ok(Variant::OnlineRelational),
            "batch-relational" | "batch" => Ok(Variant::BatchRelational),
            "euclidean-online" | "euclidean" => Ok(Variant::EuclideanOnline),
            "batch-median" | "median" => Ok(Variant::BatchMedian),
            other => Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// `U x n` row-stochastic coefficient matrix; row `u` holds the convex
/// weights of prototype `u` over the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeCoefficients {
    units: usize,
    n: usize,
    values: Vec<f64>,
}

impl PrototypeCoefficients {
    /// Checks that every row is non-negative and sums to 1 within `1e-10`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let units = rows.len();
        let n = rows.first().map(|r| r.len()).ok_or(Error::Empty("coefficients"))?;
        if n == 0 {
            return Err(Error::Empty("coefficients"));
        }
        for (u, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!("coefficient row {u} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
                return Err(Error::InvalidParameter(format!("coefficient row {u} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!("coefficient row {u} sums to {sum}")));
            }
        }
        Ok(Self { units, n, values: rows.concat() })
    }

    /// Row `u` set to the indicator of observation `i`, for each `(u, i)` pair given.
    pub fn one_hot(n: usize, picks: &[usize]) -> Result<Self> {
        if n == 0 || picks.is_empty() {
            return Err(Error::Empty("coefficients"));
        }
        if let Some(&i) = picks.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch(format!("observation {i} out of range 0..{n}")));
        }
        let mut values = vec![0.0; picks.len() * n];
        for (u, &i) in picks.iter().enumerate() {
            values[u * n + i] = 1.0;
        }
        Ok(Self { units: picks.len(), n, values })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.n..(u + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    /// Largest deviation from the simplex over all rows: the most negative
    /// entry magnitude or the largest `|sum - 1|`, whichever is bigger.
    pub fn simplex_violation(&self) -> f64 {
        self.rows()
            .map(|r| {
                let neg = r.iter().fold(0.0f64, |m, &b| m.max(-b));
                let sum: f64 = r.iter().sum();
                neg.max((sum - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Explicit prototypes `sum_i beta_ui x_i` in coordinate space.
    pub fn embed(&self, points: &PointCloud) -> Result<Vec<Vec<f64>>> {
        if points.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients per row for {} points",
                self.n,
                points.len()
            )));
        }
        Ok(self
            .rows()
            .map(|beta| {
                let mut p = vec![0.0; points.dim()];
                for (b, x) in beta.iter().zip(points.iter()) {
                    if *b != 0.0 {
                        for (pk, xk) in p.iter_mut().zip(x) {
                            *pk += b * xk;
                        }
                    }
                }
                p
            })
            .collect())
    }
}

/// How initial coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Each prototype starts on an observation, picked without replacement
    /// when there are at least as many observations as units.
    OneHotSample,
    /// Each row is uniform(0, 1) draws normalized to sum to 1.
    #[default]
    RandomConvex,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-hot-sample" | "one-hot" => Ok(InitMode::OneHotSample),
            "random-convex" => Ok(InitMode::RandomConvex),
            other => Err(Error::InvalidParameter(format!("unknown init mode `{other}`"))),
        }
    }
}

impl InitMode {
    pub fn name(self) -> &'static str {
        match self {
            InitMode::OneHotSample => "one-hot-sample",
            InitMode::RandomConvex => "random-convex",
        }
    }
}

/// Draws initial coefficients for `units` prototypes over `n` observations.
pub fn init_coefficients(n: usize, units: usize, mode: InitMode, seed: u64) -> Result<PrototypeCoefficients> {
    if n == 0 || units == 0 {
        return Err(Error::InvalidParameter(format!("cannot initialize {units} prototypes over {n} observations")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        InitMode::OneHotSample => {
            let picks: Vec<usize> = if units <= n {
                sample(&mut rng, n, units).into_vec()
            } else {
                (0..units).map(|_| rng.gen_range(0..n)).collect()
            };
            PrototypeCoefficients::one_hot(n, &picks)
        }
        InitMode::RandomConvex => {
            let mut values = Vec::with_capacity(units * n);
            for _ in 0..units {
                // open interval keeps every weight strictly positive
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(f64::EPSILON..1.0)).collect();
                let sum: f64 = row.iter().sum();
                values.extend(row.into_iter().map(|b| b / sum));
            }
            Ok(PrototypeCoefficients { units, n, values })
        }
    }
}

/// Initial state of a run: a draw mode or explicit coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    Draw(InitMode),
    Given(PrototypeCoefficients),
}

impl Initialization {
    pub(crate) fn resolve(&self, n: usize, units: usize, seed: u64) -> Result<PrototypeCoefficients> {
        match self {
            Initialization::Draw(mode) => init_coefficients(n, units, *mode, seed),
            Initialization::Given(c) => {
                if c.n() != n || c.units() != units {
                    return Err(Error::DimensionMismatch(format!(
                        "initial coefficients are {}x{}, expected {units}x{n}",
                        c.units(),
                        c.n()
                    )));
                }
                Ok(c.clone())
            }
        }
    }
}

impl From<InitMode> for Initialization {
    fn from(m: InitMode) -> Self {
        Initialization::Draw(m)
    }
}

/// `beta' D beta`, skipping zero weights.
pub fn quadratic_form(d: &DissimilarityMatrix, beta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            acc += b * dot(d.row(j), beta);
        }
    }
    acc
}

/// [`quadratic_form`] of the listed units with one pass over `D` per worker
/// instead of one per unit. Each value is summed in the same order as
/// [`quadratic_form`], so the results are bit-identical to it.
pub(crate) fn quadratic_forms(d: &DissimilarityMatrix, coef: &PrototypeCoefficients, units: &[usize], exec: Execution) -> Vec<f64> {
    if units.is_empty() {
        return Vec::new();
    }
    let chunk = units.len().div_ceil(exec.workers());
    let parts: Vec<&[usize]> = units.chunks(chunk).collect();
    exec.map_range(parts.len(), |p| {
        let part = parts[p];
        let mut acc = vec![0.0; part.len()];
        for j in 0..d.n() {
            let row = d.row(j);
            for (a, &u) in acc.iter_mut().zip(part) {
                let beta = coef.row(u);
                if beta[j] != 0.0 {
                    *a += beta[j] * dot(row, beta);
                }
            }
        }
        acc
    })
    .concat()
}

/// Squared distance between observation `i` and the prototype with
/// coefficients `beta`, computed from dissimilarities only:
/// `(D beta)_i - 1/2 beta' D beta`.
///
/// For a non-Euclidean `D` the value can be negative; only its ordering
/// across prototypes is meaningful.
pub fn implicit_distance(d: &DissimilarityMatrix, beta: &[f64], i: usize) -> Result<f64> {
    if beta.len() != d.n() {
        return Err(Error::DimensionMismatch(format!("{} coefficients for {} observations", beta.len(), d.n())));
    }
    if i >= d.n() {
        return Err(Error::DimensionMismatch(format!("observation {i} out of range 0..{}", d.n())));
    }
    Ok(dot(d.row(i), beta) - 0.5 * quadratic_form(d, beta))
}

/// Index of the smallest value; the lowest index wins ties.
#[inline]
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (u, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = u;
        }
    }
    best
}

/// Best and second-best indices with the same tie-break. The second is
/// `None` when there is a single unit.
#[inline]
pub(crate) fn best_two(values: &[f64]) -> (usize, Option<usize>) {
    let best = argmin(values);
    let mut second: Option<usize> = None;
    for (u, &v) in values.iter().enumerate() {
        if u != best && second.is_none_or(|s| v < values[s]) {
            second = Some(u);
        }
    }
    (best, second)
}

/// Trained (or initial) prototypes of a map.
#[derive(Debug, Clone, PartialEq)]
pub enum Prototypes {
    Coefficients(PrototypeCoefficients),
    /// Explicit vectors, `units x dim`, row-major.
    Vectors { dim: usize, values: Vec<f64> },
    /// One observation index per unit.
    Medoids(Vec<usize>),
}

impl Prototypes {
    pub fn units(&self) -> usize {
        match self {
            Prototypes::Coefficients(c) => c.units(),
            Prototypes::Vectors { dim, values } => values.len() / dim,
            Prototypes::Medoids(m) => m.len(),
        }
    }

    /// Prototype coordinates in data space, for plotting.
    pub fn embed(&self, points: &PointCloud) -> Result<Vec<Vec<f64>>> {
        match self {
            Prototypes::Coefficients(c) => c.embed(points),
            Prototypes::Vectors { dim, values } => Ok(values.chunks(*dim).map(|p| p.to_vec()).collect()),
            Prototypes::Medoids(m) => Ok(m.iter().map(|&i| points.point(i).to_vec()).collect()),
        }
    }
}

/// The data a map is evaluated against.
#[derive(Debug, Clone, Copy)]
pub enum Data<'a> {
    Dissimilarity(&'a DissimilarityMatrix),
    Points(&'a PointCloud),
}

impl<'a> Data<'a> {
    pub fn n(&self) -> usize {
        match self {
            Data::Dissimilarity(d) => d.n(),
            Data::Points(p) => p.len(),
        }
    }
}

impl<'a> From<&'a DissimilarityMatrix> for Data<'a> {
    fn from(d: &'a DissimilarityMatrix) -> Self {
        Data::Dissimilarity(d)
    }
}

impl<'a> From<&'a PointCloud> for Data<'a> {
    fn from(p: &'a PointCloud) -> Self {
        Data::Points(p)
    }
}

/// Precomputed per-unit terms for evaluating observation-to-prototype
/// distances.
pub struct Assigner<'a> {
    kind: AssignerKind<'a>,
}

enum AssignerKind<'a> {
    Relational { d: &'a DissimilarityMatrix, coef: &'a PrototypeCoefficients, half_quad: Vec<f64> },
    Vectors { points: &'a PointCloud, dim: usize, values: &'a [f64] },
    Medoids { d: &'a DissimilarityMatrix, medoids: &'a [usize] },
}

impl<'a> Assigner<'a> {
    pub fn new(data: Data<'a>, prototypes: &'a Prototypes, exec: Execution) -> Result<Self> {
        let n = data.n();
        let kind = match (data, prototypes) {
            (Data::Dissimilarity(d), Prototypes::Coefficients(coef)) => {
                if coef.n() != n {
                    return Err(Error::DimensionMismatch(format!("coefficients over {} observations, data has {n}", coef.n())));
                }
                let half_quad = exec.map_range(coef.units(), |u| 0.5 * quadratic_form(d, coef.row(u)));
                AssignerKind::Relational { d, coef, half_quad }
            }
            (Data::Points(points), Prototypes::Vectors { dim, values }) => {
                if points.dim() != *dim {
                    return Err(Error::DimensionMismatch(format!("prototypes have dimension {dim}, points {}", points.dim())));
                }
                AssignerKind::Vectors { points, dim: *dim, values }
            }
            (Data::Dissimilarity(d), Prototypes::Medoids(m)) => {
                if let Some(&i) = m.iter().find(|&&i| i >= n) {
                    return Err(Error::DimensionMismatch(format!("medoid {i} out of range 0..{n}")));
                }
                AssignerKind::Medoids { d, medoids: m }
            }
            _ => {
                return Err(Error::DimensionMismatch(
                    "prototype kind does not match the data (relational and median maps need a dissimilarity matrix, Euclidean maps need points)".into(),
                ))
            }
        };
        Ok(Self { kind })
    }

    pub fn units(&self) -> usize {
        match &self.kind {
            AssignerKind::Relational { coef, .. } => coef.units(),
            AssignerKind::Vectors { dim, values, .. } => values.len() / dim,
            AssignerKind::Medoids { medoids, .. } => medoids.len(),
        }
    }

    /// Distances from observation `i` to every unit, written into `out`.
    pub fn distances(&self, i: usize, out: &mut [f64]) {
        match &self.kind {
            AssignerKind::Relational { d, coef, half_quad } => {
                let row = d.row(i);
                for (u, o) in out.iter_mut().enumerate() {
                    *o = dot(row, coef.row(u)) - half_quad[u];
                }
            }
            AssignerKind::Vectors { points, dim, values } => {
                let x = points.point(i);
                for (o, p) in out.iter_mut().zip(values.chunks(*dim)) {
                    *o = squared_distance(x, p);
                }
            }
            AssignerKind::Medoids { d, medoids } => {
                for (o, &m) in out.iter_mut().zip(medoids.iter()) {
                    *o = d.get(i, m);
                }
            }
        }
    }

    /// Best unit and its distance for every observation.
    pub fn assign(&self, n: usize, exec: Execution) -> (Vec<usize>, Vec<f64>) {
        let units = self.units();
        let pairs = exec.map_range(n, |i| {
            let mut buf = vec![0.0; units];
            self.distances(i, &mut buf);
            let u = argmin(&buf);
            (u, buf[u])
        });
        pairs.into_iter().unzip()
    }
}

/// Nearest unit for every observation, lowest unit index on ties.
pub fn assign_all(data: Data<'_>, prototypes: &Prototypes) -> Result<Vec<usize>> {
    let exec = Execution::default();
    Ok(Assigner::new(data, prototypes, exec)?.assign(data.n(), exec).0)
}

/// Mean distance from each observation to its nearest prototype.
pub fn quantization_error(data: Data<'_>, prototypes: &Prototypes) -> Result<f64> {
    let exec = Execution::default();
    let (_, dist) = Assigner::new(data, prototypes, exec)?.assign(data.n(), exec);
    Ok(mean(&dist))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Quantization error recorded at one iteration (online) or epoch (batch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub quantization_error: f64,
}

/// Prototype state captured at a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub prototypes: Prototypes,
}

/// Knobs shared by all trainers that do not change the algorithm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainOptions {
    /// Iterations (online) or epochs (batch) at which the quantization error
    /// is recorded. `None` picks 11 evenly spaced points for online runs and
    /// every epoch for batch runs. Iteration 0 is the initial state.
    pub checkpoints: Option<Vec<usize>>,
    /// Also keep a copy of the prototypes at every checkpoint.
    pub keep_snapshots: bool,
    pub sampling: Sampling,
    pub quadratic_update: QuadraticUpdate,
    pub assignment: AssignmentStrategy,
    pub execution: Execution,
}

impl TrainOptions {
    pub(crate) fn checkpoint_set(&self, total: usize, batch: bool) -> Vec<usize> {
        let mut cps = match &self.checkpoints {
            Some(c) => c.iter().copied().filter(|&t| t <= total).collect(),
            None if batch => (0..=total).collect(),
            None => (0..=10).map(|k| k * total / 10).collect::<Vec<_>>(),
        };
        cps.sort_unstable();
        cps.dedup();
        cps
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMap {
    pub variant: Variant,
    pub grid: MapGrid,
    pub kernel: NeighborhoodKernel,
    pub prototypes: Prototypes,
    /// Nearest unit of each observation under the final prototypes.
    pub assignment: Vec<usize>,
    pub history: Vec<Checkpoint>,
    pub snapshots: Vec<Snapshot>,
    /// Online runs: the observation drawn at each iteration.
    pub samples: Vec<usize>,
    /// Online runs: the winning unit at each iteration.
    pub winners: Vec<usize>,
    pub seed: u64,
    pub schedule: String,
    /// Online runs: iterations whose winning distance was negative, which
    /// only happens for non-Euclidean dissimilarities.
    pub negative_distances: usize,
    /// Batch runs: (epoch, unit) updates skipped for lack of kernel mass.
    pub empty_kernel_mass: usize,
    /// Batch runs: first epoch after which the state no longer changed.
    pub converged_epoch: Option<usize>,
}

impl TrainedMap {
    pub fn units(&self) -> usize {
        self.grid.units()
    }

    pub fn final_quantization_error(&self) -> Option<f64> {
        self.history.last().map(|c| c.quantization_error)
    }
}
