use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use relsom::dissimilarity::{
    geodesic_dissimilarity_with, graph_shortest_path_dissimilarity_with, squared_euclidean, squared_euclidean_with,
    SimpleGraph,
};
use relsom::exec::Execution;
use relsom::generators::{generate_swiss_roll, generate_uniform_square};
use relsom::som::{
    init_coefficients, train_batch_median, train_batch_relational, train_online_relational, Assigner, Data, InitMode,
    Initialization, Prototypes, TrainOptions,
};
use relsom::topology::{BatchSchedule, MapGrid, NeighborhoodKernel, TrainingSchedule};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn options(execution: Execution) -> TrainOptions {
    TrainOptions { checkpoints: Some(Vec::new()), execution, ..TrainOptions::default() }
}

fn dissimilarities(c: &mut Criterion) {
    let mut group = c.benchmark_group("dissimilarity");
    group.sample_size(10);
    let square = generate_uniform_square(1000, 0).unwrap();
    let roll = generate_swiss_roll(1000, 0).unwrap();
    // 20 x 15 lattice graph
    let edges: Vec<(usize, usize)> = (0..300)
        .flat_map(|v| [(v % 20 < 19).then(|| (v, v + 1)), (v + 20 < 300).then(|| (v, v + 20))])
        .flatten()
        .collect();
    let graph = SimpleGraph::new(300, &edges).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("squared_euclidean/1000", name), |b| {
            b.iter(|| squared_euclidean_with(black_box(&square), exec))
        });
        group.bench_function(BenchmarkId::new("geodesic_k10/1000", name), |b| {
            b.iter(|| geodesic_dissimilarity_with(black_box(&roll), 10, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("graph_bfs/300", name), |b| {
            b.iter(|| graph_shortest_path_dissimilarity_with(black_box(&graph), exec).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    let points = generate_uniform_square(500, 0).unwrap();
    let d = squared_euclidean(&points);
    let grid = MapGrid::new(10, 10).unwrap();
    let init = Initialization::Draw(InitMode::RandomConvex);
    let online = TrainingSchedule::annealed(200, 0.5, 21, &grid).unwrap();
    let batch = BatchSchedule::fixed(1, 3.0).unwrap();
    for (name, exec) in MODES {
        let opts = options(exec);
        group.bench_function(BenchmarkId::new("online_200_iterations/500", name), |b| {
            b.iter(|| train_online_relational(black_box(&d), &grid, NeighborhoodKernel::Hard, &online, &init, 0, &opts).unwrap())
        });
        group.bench_function(BenchmarkId::new("batch_relational_epoch/500", name), |b| {
            b.iter(|| train_batch_relational(black_box(&d), &grid, NeighborhoodKernel::Hard, &batch, &init, 0, &opts).unwrap())
        });
        group.bench_function(BenchmarkId::new("batch_median_epoch/500", name), |b| {
            b.iter(|| train_batch_median(black_box(&d), &grid, NeighborhoodKernel::Hard, &batch, &init, 0, &opts).unwrap())
        });
    }
    group.finish();
}

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("assignment");
    let points = generate_uniform_square(1000, 1).unwrap();
    let d = squared_euclidean(&points);
    let protos = Prototypes::Coefficients(init_coefficients(1000, 100, InitMode::RandomConvex, 1).unwrap());
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("relational/1000x100", name), |b| {
            b.iter(|| {
                let a = Assigner::new(Data::Dissimilarity(black_box(&d)), &protos, exec).unwrap();
                a.assign(1000, exec)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, dissimilarities, training, assignment);
criterion_main!(benches);
