use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    argmin, quadratic_form, quadratic_forms, Assigner, Checkpoint, Data, Initialization, Prototypes, Snapshot, TrainOptions,
    TrainedMap, Variant,
};
use crate::dissimilarity::{squared_distance, DissimilarityMatrix, PointCloud};
use crate::error::Result;
use crate::exec::dot;
use crate::topology::{MapGrid, NeighborhoodKernel, TrainingSchedule};

/// Order in which online runs visit observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Independent uniform draw at every iteration.
    #[default]
    Uniform,
    /// A fresh random permutation of all observations every `n` iterations.
    EpochShuffle,
}

impl std::str::FromStr for Sampling {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::Uniform),
            "shuffle" | "epoch-shuffle" => Ok(Sampling::EpochShuffle),
            other => Err(crate::Error::InvalidParameter(format!("unknown sampling `{other}`"))),
        }
    }
}

/// How the online relational trainer keeps `beta_u' D beta_u` up to date
/// after a unit moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadraticUpdate {
    /// Recompute the full quadratic form of every updated unit, `O(n^2)` each.
    #[default]
    Recompute,
    /// Closed-form update from the value before the move, `O(1)` each:
    /// `q' = (1-s)^2 q + 2 s (1-s) (D beta)_i + s^2 d_ii`.
    Incremental,
}

impl std::str::FromStr for QuadraticUpdate {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recompute" => Ok(QuadraticUpdate::Recompute),
            "incremental" => Ok(QuadraticUpdate::Incremental),
            other => Err(crate::Error::InvalidParameter(format!("unknown quadratic update `{other}`"))),
        }
    }
}

/// The observation stream shared by both online trainers; the same seed
/// gives the same sequence whatever the prototype representation.
pub(crate) struct Sampler {
    rng: ChaCha8Rng,
    mode: Sampling,
    n: usize,
    order: Vec<usize>,
    pos: usize,
}

impl Sampler {
    pub(crate) fn new(n: usize, seed: u64, mode: Sampling) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // stream 0 is reserved for initialization
        rng.set_stream(1);
        Self { rng, mode, n, order: (0..n).collect(), pos: n }
    }

    pub(crate) fn next_index(&mut self) -> usize {
        match self.mode {
            Sampling::Uniform => self.rng.gen_range(0..self.n),
            Sampling::EpochShuffle => {
                if self.pos == self.n {
                    self.order.shuffle(&mut self.rng);
                    self.pos = 0;
                }
                self.pos += 1;
                self.order[self.pos - 1]
            }
        }
    }
}

/// Kernel weight from a winner to every unit, at one radius.
pub(crate) fn kernel_row(grid: &MapGrid, kernel: NeighborhoodKernel, winner: usize, radius: f64, out: &mut [f64]) {
    for (u, k) in out.iter_mut().enumerate() {
        *k = kernel.weight(grid.distance(winner, u), radius);
    }
}

/// Online relational SOM.
///
/// Each iteration draws one observation `i`, picks the unit whose implicit
/// distance to it is smallest, and moves every unit's coefficients toward the
/// indicator of `i`:
///
/// ```text
/// beta_u <- beta_u + alpha(t) K_t(winner, u) (1_i - beta_u)
/// ```
///
/// The step `alpha K` lies in `[0, 1]`, so rows stay on the simplex.
pub fn train_online_relational(
    d: &DissimilarityMatrix,
    grid: &MapGrid,
    kernel: NeighborhoodKernel,
    schedule: &TrainingSchedule,
    init: &Initialization,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainedMap> {
    let n = d.n();
    let units = grid.units();
    let exec = options.execution;
    let mut coef = init.resolve(n, units, seed)?;
    let total = schedule.iterations();
    let checkpoints = options.checkpoint_set(total, false);
    let mut next_cp = 0;

    let mut quad: Vec<f64> = exec.map_range(units, |u| quadratic_form(d, coef.row(u)));
    let mut along = vec![0.0; units];
    let mut scores = vec![0.0; units];
    let mut steps = vec![0.0; units];
    let mut moved = Vec::with_capacity(units);
    let mut sampler = Sampler::new(n, seed, options.sampling);

    let mut history = Vec::with_capacity(checkpoints.len());
    let mut snapshots = Vec::new();
    let mut samples = Vec::with_capacity(total);
    let mut winners = Vec::with_capacity(total);
    let mut negative_distances = 0;

    let record = |t: usize, coef: &super::PrototypeCoefficients, history: &mut Vec<Checkpoint>, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        let protos = Prototypes::Coefficients(coef.clone());
        let (_, dist) = Assigner::new(Data::Dissimilarity(d), &protos, exec)?.assign(n, exec);
        history.push(Checkpoint { iteration: t, quantization_error: super::mean(&dist) });
        if options.keep_snapshots {
            snapshots.push(Snapshot { iteration: t, prototypes: protos });
        }
        Ok(())
    };

    if checkpoints.first() == Some(&0) {
        record(0, &coef, &mut history, &mut snapshots)?;
        next_cp = 1;
    }

    for t in 1..=total {
        let i = sampler.next_index();
        let (alpha, radius) = schedule.at_unchecked(t);
        let row = d.row(i);
        for u in 0..units {
            along[u] = dot(row, coef.row(u));
            scores[u] = along[u] - 0.5 * quad[u];
        }
        let winner = argmin(&scores);
        if scores[winner] < 0.0 {
            negative_distances += 1;
        }
        samples.push(i);
        winners.push(winner);

        kernel_row(grid, kernel, winner, radius, &mut steps);
        steps.iter_mut().for_each(|s| *s *= alpha);
        let mode = options.quadratic_update;
        let (steps, along) = (&steps, &along);
        exec.for_each_chunk_zip_mut(coef.values_mut(), n, &mut quad, |u, beta, q| {
            let s = steps[u];
            if s == 0.0 {
                return;
            }
            let keep = 1.0 - s;
            beta.iter_mut().for_each(|b| *b *= keep);
            beta[i] += s;
            if mode == QuadraticUpdate::Incremental {
                *q = keep * keep * *q + 2.0 * s * keep * along[u] + s * s * d.get(i, i);
            }
        });
        if mode == QuadraticUpdate::Recompute {
            moved.clear();
            moved.extend((0..units).filter(|&u| steps[u] != 0.0));
            for (&u, q) in moved.iter().zip(quadratic_forms(d, &coef, &moved, exec)) {
                quad[u] = q;
            }
        }

        if checkpoints.get(next_cp) == Some(&t) {
            record(t, &coef, &mut history, &mut snapshots)?;
            next_cp += 1;
        }
    }

    let prototypes = Prototypes::Coefficients(coef);
    let assignment = Assigner::new(Data::Dissimilarity(d), &prototypes, exec)?.assign(n, exec).0;
    Ok(TrainedMap {
        variant: Variant::OnlineRelational,
        grid: *grid,
        kernel,
        prototypes,
        assignment,
        history,
        snapshots,
        samples,
        winners,
        seed,
        schedule: schedule.describe(),
        negative_distances,
        empty_kernel_mass: 0,
        converged_epoch: None,
    })
}

/// Classical online SOM on explicit vectors.
///
/// Prototypes start at `sum_i beta_ui x_i` for the same coefficient draw the
/// relational trainer would use, and observations are visited in the same
/// order for the same seed, so the two trainers can be compared step by step.
pub fn train_online_euclidean(
    points: &PointCloud,
    grid: &MapGrid,
    kernel: NeighborhoodKernel,
    schedule: &TrainingSchedule,
    init: &Initialization,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainedMap> {
    let n = points.len();
    let dim = points.dim();
    let units = grid.units();
    let exec = options.execution;
    let coef = init.resolve(n, units, seed)?;
    let mut protos: Vec<f64> = coef.embed(points)?.concat();
    let total = schedule.iterations();
    let checkpoints = options.checkpoint_set(total, false);
    let mut next_cp = 0;

    let mut scores = vec![0.0; units];
    let mut steps = vec![0.0; units];
    let mut sampler = Sampler::new(n, seed, options.sampling);
    let mut history = Vec::with_capacity(checkpoints.len());
    let mut snapshots = Vec::new();
    let mut samples = Vec::with_capacity(total);
    let mut winners = Vec::with_capacity(total);

    let record = |t: usize, protos: &[f64], history: &mut Vec<Checkpoint>, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        let p = Prototypes::Vectors { dim, values: protos.to_vec() };
        let (_, dist) = Assigner::new(Data::Points(points), &p, exec)?.assign(n, exec);
        history.push(Checkpoint { iteration: t, quantization_error: super::mean(&dist) });
        if options.keep_snapshots {
            snapshots.push(Snapshot { iteration: t, prototypes: p });
        }
        Ok(())
    };

    if checkpoints.first() == Some(&0) {
        record(0, &protos, &mut history, &mut snapshots)?;
        next_cp = 1;
    }

    for t in 1..=total {
        let i = sampler.next_index();
        let (alpha, radius) = schedule.at_unchecked(t);
        let x = points.point(i);
        for (s, p) in scores.iter_mut().zip(protos.chunks(dim)) {
            *s = squared_distance(x, p);
        }
        let winner = argmin(&scores);
        samples.push(i);
        winners.push(winner);

        kernel_row(grid, kernel, winner, radius, &mut steps);
        for (p, &k) in protos.chunks_mut(dim).zip(steps.iter()) {
            let s = alpha * k;
            if s == 0.0 {
                continue;
            }
            for (pk, xk) in p.iter_mut().zip(x) {
                *pk += s * (xk - *pk);
            }
        }

        if checkpoints.get(next_cp) == Some(&t) {
            record(t, &protos, &mut history, &mut snapshots)?;
            next_cp += 1;
        }
    }

    let prototypes = Prototypes::Vectors { dim, values: protos };
    let assignment = Assigner::new(Data::Points(points), &prototypes, exec)?.assign(n, exec).0;
    Ok(TrainedMap {
        variant: Variant::EuclideanOnline,
        grid: *grid,
        kernel,
        prototypes,
        assignment,
        history,
        snapshots,
        samples,
        winners,
        seed,
        schedule: schedule.describe(),
        negative_distances: 0,
        empty_kernel_mass: 0,
        converged_epoch: None,
    })
}
