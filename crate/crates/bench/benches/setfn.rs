use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dspn_core::data::{gen_synthetic, SyntheticSpec};
use dspn_core::loss::{total_loss, PairSets};
use dspn_core::opt::greedy_max;
use dspn_core::setfn::median_heuristic_gamma;
use dspn_core::{
    DspnModel, DspnObjective, FacilityLocation, GroundSet, LossKind, ModelConfig, PeripteralHyper,
    SetFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ground(per_cluster: usize) -> GroundSet {
    gen_synthetic(&SyntheticSpec {
        clusters: 5,
        points_per_cluster: per_cluster,
        dim: 2,
        cluster_spread: 1.0,
        center_spread: 10.0,
        seed: 1,
    })
    .unwrap()
}

fn model() -> DspnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    DspnModel::random(&ModelConfig::new(2), &mut rng).unwrap()
}

fn eval(c: &mut Criterion) {
    let g = ground(100);
    let m = model();
    let obj = DspnObjective::new(&m, &g).unwrap();
    let fl = FacilityLocation::rbf(&g, median_heuristic_gamma(g.embeddings()).unwrap()).unwrap();
    let mut group = c.benchmark_group("eval");
    for k in [5usize, 20, 50] {
        let set: Vec<usize> = (0..k).map(|i| i * 7 % g.n()).collect();
        group.bench_with_input(BenchmarkId::new("dspn", k), &set, |b, s| {
            b.iter(|| black_box(obj.eval(s)))
        });
        group.bench_with_input(BenchmarkId::new("facility-location", k), &set, |b, s| {
            b.iter(|| black_box(fl.eval(s)))
        });
    }
    group.finish();
}

fn greedy(c: &mut Criterion) {
    let g = ground(40);
    let m = model();
    let obj = DspnObjective::new(&m, &g).unwrap();
    let pool: Vec<usize> = (0..g.n()).collect();
    let mut group = c.benchmark_group("greedy");
    group.sample_size(20);
    for lazy in [true, false] {
        let name = if lazy { "lazy" } else { "naive" };
        group.bench_function(name, |b| {
            b.iter(|| black_box(greedy_max(&obj, &pool, 20, lazy).unwrap()))
        });
    }
    group.finish();
}

fn loss_gradient(c: &mut Criterion) {
    let g = ground(20);
    let m = model();
    let h = PeripteralHyper::default();
    let e: Vec<usize> = (0..10).collect();
    let mm: Vec<usize> = (20..30).collect();
    let sets = PairSets {
        e: &e,
        m: &mm,
        e_aug: &e,
        m_aug: &mm,
    };
    c.bench_function("total_loss_with_grads", |b| {
        b.iter(|| black_box(total_loss(&m, &g, sets, 0.3, &h, LossKind::Peripteral, true).unwrap()))
    });
}

criterion_group!(benches, eval, greedy, loss_gradient);
criterion_main!(benches);
