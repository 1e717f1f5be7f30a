use criterion::{criterion_group, criterion_main, Criterion};
use cuspbase::verify::{run, Suite};
use cuspbase::{default_precision, BasisEngine, Catalog, SpaceKind};

fn ladders(c: &mut Criterion) {
    let catalog = Catalog::standard();
    let mut g = c.benchmark_group("cusp basis");
    g.sample_size(10);
    for (n, k) in [(1, 24), (2, 16), (7, 12), (10, 12)] {
        g.bench_function(format!("N={n} weight {}", 2 * k), |b| {
            b.iter(|| {
                BasisEngine::new(catalog)
                    .basis(n, k, SpaceKind::Cusp, default_precision(n, 2 * k))
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn suites(c: &mut Criterion) {
    let catalog = Catalog::standard();
    let levels = catalog.level_numbers();
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("catalog checks, all levels", |b| b.iter(|| run(catalog, &levels, Suite::Paper)));
    g.bench_function("structure, all levels", |b| b.iter(|| run(catalog, &levels, Suite::Structure)));
    g.finish();
}

criterion_group!(benches, ladders, suites);
criterion_main!(benches);
