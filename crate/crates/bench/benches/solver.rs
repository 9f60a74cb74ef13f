use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use unitdemand::generate::{self, ALL_FAMILIES};
use unitdemand::{solve_both, solve_lowest, Market, SolverConfig};

fn square_quasilinear(n: usize) -> Market {
    let values = generate::integer_values(&mut generate::rng(n as u64), n, n, 10);
    Market::quasilinear(&values).unwrap()
}

fn solve_sizes(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_lowest/quasilinear");
    for n in [2, 3, 4, 5, 6, 7] {
        let market = square_quasilinear(n);
        group.bench_with_input(BenchmarkId::from_parameter(2 * n), &market, |b, m| {
            b.iter(|| solve_lowest(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn solve_mixed(c: &mut Criterion) {
    let mut rng = generate::rng(42);
    let markets: Vec<Market> = (0..20)
        .map(|_| generate::mixed_market(&mut rng, 8, &ALL_FAMILIES))
        .collect();
    c.bench_function("solve_both/mixed_x20", |b| {
        b.iter(|| {
            for m in &markets {
                black_box(solve_both(m, SolverConfig::default()).unwrap());
            }
        })
    });
}

criterion_group!(benches, solve_sizes, solve_mixed);
criterion_main!(benches);
