//! Sequential against parallel execution of the data-parallel loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use feaslift::algorithms::{parallel_gdr_reduced, reduced_averaged_projections, GdrParams, History, StopRule};
use feaslift::diagnostics::{linear_regularity_sample, Sampling};
use feaslift::lifting::SubspaceIntersection;
use feaslift::rng::{normal_matrix, normal_vector, stream};
use feaslift::spaces::embed_diagonal;
use feaslift::{Exec, MatrixPoint, Point, ReducedLift, SetDescriptor};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

/// Signal-compression sets with the box as coordinator, plus extra boxes so
/// the lift has several blocks to spread over threads.
fn compression_lift(n: usize, m: usize, d: usize, extra_boxes: usize) -> (Vec<SetDescriptor>, Point) {
    let w = normal_matrix(&mut stream(7, 0), n, m);
    let u0 = normal_matrix(&mut stream(7, 1), d, m);
    let mut sets = vec![
        SetDescriptor::affine_row_space(w, d).unwrap(),
        SetDescriptor::orthonormal_rows(d, m).unwrap(),
    ];
    for i in 0..extra_boxes {
        sets.push(SetDescriptor::inf_box_matrix(0.1 + 0.05 * i as f64, d, m).unwrap());
    }
    sets.push(SetDescriptor::inf_box_matrix(0.1, d, m).unwrap());
    let x0 = MatrixPoint::from_matrix(&u0).unwrap().into_point();
    (sets, x0)
}

fn bench_iterations(c: &mut Criterion) {
    let (sets, x0) = compression_lift(128, 512, 8, 4);
    let last = sets.len() - 1;
    let stop = StopRule::new(f64::MIN_POSITIVE, 10).unwrap().with_history(History::None);
    let mut group = c.benchmark_group("reduced_iterations");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let lift = ReducedLift::with_coordinator(sets.clone(), last).unwrap().with_exec(exec);
        group.bench_function(BenchmarkId::new("averaged_projections", name), |b| {
            b.iter(|| reduced_averaged_projections(&lift, &x0, &stop).unwrap())
        });
        let z0 = embed_diagonal(&x0, lift.block_count()).unwrap();
        group.bench_function(BenchmarkId::new("parallel_gdr", name), |b| {
            b.iter(|| parallel_gdr_reduced(&lift, GdrParams::default(), &z0, &stop).unwrap())
        });
    }
    group.finish();
}

fn bench_kappa(c: &mut Criterion) {
    let n = 24;
    let mut rng = stream(11, 0);
    let sets: Vec<SetDescriptor> = (0..4)
        .map(|_| {
            let vs: Vec<Point> = (0..n - 2).map(|_| Point::from_vector(normal_vector(&mut rng, n)).unwrap()).collect();
            SetDescriptor::span(n, &vs).unwrap()
        })
        .collect();
    let oracle = SubspaceIntersection::new(&sets).unwrap();
    let xbar = Point::zeros(n);
    let mut group = c.benchmark_group("kappa_sampling");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let sampling = Sampling::new(1.0, 20_000, 3).unwrap().with_exec(exec);
        group.bench_function(name, |b| b.iter(|| linear_regularity_sample(&sets, &oracle, &xbar, &sampling).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_iterations, bench_kappa);
criterion_main!(benches);
