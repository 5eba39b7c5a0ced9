use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mriclass::classifiers::svm::smo_solve;
use mriclass::classifiers::{AdaBoostParams, DecisionTreeModel, ForestParams, RandomForestModel, SvmParams, TreeParams};
use mriclass::{AdaBoostModel, PcaModel};
use mriclass_bench::synthetic;

fn pca(c: &mut Criterion) {
    let mut group = c.benchmark_group("pca_fit");
    group.sample_size(10);
    for d in [2_500, 22_500] {
        let (x, _) = synthetic(160, d, 1);
        group.bench_with_input(BenchmarkId::from_parameter(d), &x, |b, x| {
            b.iter(|| PcaModel::fit(x.view(), 60).unwrap())
        });
    }
    group.finish();
}

fn classifiers(c: &mut Criterion) {
    let (raw, y) = synthetic(200, 400, 2);
    let x = PcaModel::fit(raw.view(), 60).unwrap().transform(raw.view()).unwrap();
    let mut group = c.benchmark_group("fit_200x60");
    group.sample_size(20);
    group.bench_function("tree", |b| b.iter(|| DecisionTreeModel::fit(x.view(), &y, TreeParams::default()).unwrap()));
    group.bench_function("forest_100", |b| {
        b.iter(|| RandomForestModel::fit(x.view(), &y, ForestParams::default(), 7).unwrap())
    });
    group.bench_function("adaboost_50", |b| {
        b.iter(|| AdaBoostModel::fit(x.view(), &y, AdaBoostParams::default()).unwrap())
    });
    group.bench_function("smo_rbf", |b| b.iter(|| smo_solve(x.view(), &y, SvmParams::default(), |_| {}).unwrap()));
    group.finish();
}

criterion_group!(benches, pca, classifiers);
criterion_main!(benches);
