use cuspbase::verify::{run, Suite};
use cuspbase::dimensions::group_invariants;
use cuspbase::{dim_m, dim_s, BasisEngine, Catalog, SpaceKind};

#[test]
fn full_suite_passes_on_every_level() {
    let catalog = Catalog::standard();
    let report = run(catalog, &catalog.level_numbers(), Suite::All);
    let failures: Vec<String> = report.failures().map(|l| l.to_string()).collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(report.lines.len() > 150);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let catalog = Catalog::standard();
    let levels = [2, 7, 10];
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| run(catalog, &levels, Suite::All).to_string());
    let b = run(catalog, &levels, Suite::All).to_string();
    assert_eq!(a, b);
}

#[test]
fn bases_are_bit_identical_across_engines() {
    let catalog = Catalog::standard();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for (n, k) in [(3, 7), (6, 5), (10, 6), (1, 12)] {
        let a = BasisEngine::new(catalog).basis(n, k, SpaceKind::Cusp, 60).unwrap();
        let b = pool.install(|| BasisEngine::new(catalog).basis(n, k, SpaceKind::Cusp, 60).unwrap());
        assert_eq!(a, b, "N={n} k={k}");
    }
}

#[test]
fn level_invariants() {
    for n in 1..=10u32 {
        let p = group_invariants(n).unwrap();
        assert_eq!(p.genus, 0, "N={n}");
        for w in (4..=60).step_by(2) {
            assert_eq!(dim_m(n, w).unwrap() - dim_s(n, w).unwrap(), p.cusps);
        }
        let lc = Catalog::standard().level(n).unwrap();
        let want_seeds = if n == 7 || n == 10 { 3 } else { 1 };
        assert_eq!(lc.seeds().len(), want_seeds, "N={n}");
    }
    let six = group_invariants(6).unwrap();
    assert_eq!((six.index, six.eps2, six.eps3, six.cusps), (12, 0, 0, 4));
    let one = group_invariants(1).unwrap();
    assert_eq!((one.index, one.eps2, one.eps3, one.cusps), (1, 1, 1, 1));
}
