use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use posearrange_bench::{desk_params, office, office_model};
use posearrange_core::densities::PreparedParams;
use posearrange_core::dp::{estimate_marginals, run_chain, ArrangementModel, Chain, DpConfig};
use posearrange_core::scene::generate_placement_candidates;
use posearrange_core::skeleton::generate_pose_candidates;
use posearrange_core::SkeletonLibrary;

fn candidates(c: &mut Criterion) {
    let lib = SkeletonLibrary::bundled();
    let scene = office();
    c.bench_function("placement candidates (keyboard)", |b| {
        b.iter(|| generate_placement_candidates(black_box(&scene), "keyboard").unwrap())
    });
    c.bench_function("pose candidates", |b| b.iter(|| generate_pose_candidates(black_box(&scene), &lib).unwrap()));
}

fn potentials(c: &mut Criterion) {
    let lib = SkeletonLibrary::bundled();
    let model = office_model(&["keyboard"], &lib);
    let prepared = PreparedParams::new(&desk_params().params_for("keyboard")).unwrap();
    let pa = desk_params().pose_activity;
    let placement = model.target_candidates(0)[0].placement();
    let poses = model.poses();
    c.bench_function("log potential over all poses", |b| {
        b.iter(|| poses.iter().map(|h| prepared.log_potential(black_box(&placement), h, &pa)).sum::<f64>())
    });
    let t = model.target_object(0);
    let mut acc = vec![0.0; model.num_poses()];
    c.bench_function("pose scores for one placement", |b| {
        b.iter(|| {
            acc.iter_mut().for_each(|a| *a = 0.0);
            model.add_pose_scores(t, 0, &mut acc);
            black_box(acc[0])
        })
    });
}

fn sampler(c: &mut Criterion) {
    let lib = SkeletonLibrary::bundled();
    let model = office_model(&["keyboard", "mouse"], &lib);
    let mut chain = Chain::new(&model, &DpConfig::default()).unwrap();
    c.bench_function("Gibbs sweep (office, 2 targets)", |b| b.iter(|| chain.sweep().unwrap()));
    let cfg = DpConfig { sweeps: 100, burn_in: 20, ..DpConfig::default() };
    let mut group = c.benchmark_group("chain");
    group.sample_size(10);
    group.bench_function("100 sweeps + marginals", |b| {
        b.iter(|| estimate_marginals(&run_chain(&model, &cfg).unwrap(), &model))
    });
    group.finish();
}

criterion_group!(benches, candidates, potentials, sampler);
criterion_main!(benches);
