use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use bpve_bench::{critical_power_tail, power_tail, power_tail_table};
use bpve_core::construct::{build_schedule, ConstantRetention};
use bpve_core::simulate::{simulate_bpve, McConfig};
use bpve_core::survival::SurvivalTable;
use rand::SeedableRng;

fn bench_pgf_complement(c: &mut Criterion) {
    let g = critical_power_tail();
    let mut group = c.benchmark_group("pgf_complement");
    for s in [1e-10, 1e-6, 1e-2, 0.5] {
        group.bench_function(format!("s={s:e}"), |b| {
            b.iter(|| g.pgf_complement_bounded(black_box(s)))
        });
    }
    group.finish();
}

fn bench_survival_table(c: &mut Criterion) {
    let g = critical_power_tail();
    c.bench_function("survival_table/powertail_h2000", |b| {
        b.iter(|| SurvivalTable::build(black_box(&g), 2_000, 1e-9).unwrap())
    });
}

fn bench_build_schedule(c: &mut Criterion) {
    let f = power_tail();
    let table = power_tail_table(10_000);
    c.bench_function("build_schedule/3_blocks", |b| {
        b.iter(|| build_schedule(black_box(&f), &table, 3).unwrap())
    });
}

fn bench_sampler(c: &mut Criterion) {
    let law = power_tail();
    let sampler = law.sampler();
    c.bench_function("sampler/powertail_draw", |b| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        b.iter(|| black_box(sampler.sample(&mut rng)))
    });
}

fn bench_simulate(c: &mut Criterion) {
    let f = power_tail();
    c.bench_function("simulate_bpve/1000x20", |b| {
        b.iter_batched(
            || McConfig::new(1_000, 42, 20),
            |cfg| simulate_bpve(black_box(&f), &ConstantRetention(2.0 / 3.0), &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_pgf_complement,
    bench_survival_table,
    bench_build_schedule,
    bench_sampler,
    bench_simulate
);
criterion_main!(benches);
