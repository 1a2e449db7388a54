use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use riskalign::models::gbt::{self, GbtParams};
use riskalign::shapley::{Game, PlayerMap};
use riskalign::smote::{self, SmoteConfig};
use riskalign::trees::{fit_tree, Targets, TreeConfig};
use riskalign::{metrics, models, Hyperparameters};
use riskalign_bench::{imbalanced, labeled_problem};

fn bench_tree(c: &mut Criterion) {
    let (x, y) = labeled_problem(5_000, 10, 0.2, 1);
    let labels: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let config = TreeConfig {
        max_depth: 10,
        ..TreeConfig::default()
    };
    c.bench_function("gini tree, 5000x10, depth 10", |b| {
        b.iter(|| {
            fit_tree(
                black_box(&x),
                Targets::Labels {
                    labels: &labels,
                    weights: None,
                },
                &config,
            )
            .unwrap()
        })
    });
}

fn bench_gbt(c: &mut Criterion) {
    let (x, y) = labeled_problem(5_000, 10, 0.1, 2);
    let params = GbtParams {
        n_estimators: 20,
        ..GbtParams::default()
    };
    c.bench_function("gbt 20 rounds, 5000x10, depth 10", |b| {
        b.iter(|| gbt::fit(black_box(&x), &y, &params, 0).unwrap())
    });
}

fn bench_smote(c: &mut Criterion) {
    let (x, y) = imbalanced(10_000, 100, 15, 3);
    let config = SmoteConfig::default();
    c.bench_function("smote k=10, 100 minority / 10000 majority", |b| {
        b.iter(|| smote::resample_matrix(black_box(&x), &y, &config).unwrap())
    });
}

fn bench_shapley(c: &mut Criterion) {
    let (x, y) = labeled_problem(2_000, 10, 0.2, 4);
    let names: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
    let hp = Hyperparameters::Gbt(GbtParams {
        n_estimators: 50,
        max_depth: 6,
        ..GbtParams::default()
    });
    let model = models::fit_matrix(&x, &y, names.clone(), &hp, 0).unwrap();
    let players = PlayerMap::identity(&names);
    let background = riskalign::shapley::sample_background(&x, 50, 0).unwrap();
    let game = Game::new(&model, &background, &players, 20).unwrap();
    c.bench_function("exact shapley, 10 players, 50 background rows", |b| {
        b.iter(|| game.shapley_values(black_box(x.row(0))).unwrap())
    });
}

fn bench_auc(c: &mut Criterion) {
    let (x, y) = labeled_problem(100_000, 2, 0.1, 5);
    let scores: Vec<f64> = (0..x.n_rows())
        .map(|i| (x.get(i, 0) * 100.0).round())
        .collect();
    c.bench_function("auc, 100000 rows with ties", |b| {
        b.iter(|| metrics::auc(black_box(&y), &scores))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_tree, bench_gbt, bench_smote, bench_shapley, bench_auc
}
criterion_main!(benches);
