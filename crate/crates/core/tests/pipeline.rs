use braid_core::bench::{evaluate_policy, rcompliant_baseline};
use braid_core::domains::{build_spaceship_repair, load_domain, DomainKind, SpaceshipRepairConfig};
use braid_core::oracle::{build_tree, oracle_optimum, DEFAULT_NODE_BUDGET};
use braid_core::prs::{prs_solve, Selector, SolverConfig};
use braid_core::{IntervalSet, ParamBox};
use proptest::prelude::*;
use rand::SeedableRng;

fn small_sr() -> SpaceshipRepairConfig {
    SpaceshipRepairConfig {
        station_distance: 2,
        horizon: 3,
        ..Default::default()
    }
}

#[test]
fn prs_partition_agrees_with_oracle() {
    let (m, p) = build_spaceship_repair::<f64>(&small_sr()).unwrap();
    let tree = build_tree(&m, &p, 3, DEFAULT_NODE_BUDGET).unwrap();
    let braids = tree.enumerate_braids();
    let opt = oracle_optimum(&braids).unwrap();
    let cfg = SolverConfig {
        selector: Selector::MaxConfidence,
        iterations: Some(10_000),
        seconds: None,
        workers: 1,
        seed: 7,
        ..Default::default()
    };
    let r = prs_solve(&m, &p, 3, &cfg).unwrap();
    let theta = r.sample_best(7).unwrap();
    let (cost, _) = tree.exact_expected_cost(&theta).unwrap();
    assert!((cost - opt.expected_cost).abs() < 1e-9);
}

#[test]
fn multi_worker_solve_tiles() {
    let d = load_domain::<f64>(DomainKind::GraphRockSample, None, None, None).unwrap();
    let cfg = SolverConfig {
        iterations: Some(4000),
        seconds: None,
        workers: 3,
        seed: 1,
        verify_tiling: true,
        ..Default::default()
    };
    let r = prs_solve(&d.model, &d.pref, d.model.horizon, &cfg).unwrap();
    let vol: f64 = r.partitions.iter().map(|p| p.interval.volume()).sum();
    assert!((vol - d.pref.space.volume()).abs() < 1e-9);
    assert_eq!(r.total_samples, 4000);
}

#[test]
fn evaluation_is_reproducible() {
    let d = load_domain::<f64>(DomainKind::StoreVisit, None, None, None).unwrap();
    let theta = d
        .pref
        .space
        .full()
        .sample_uniform(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5))
        .unwrap();
    let a = evaluate_policy(&d.model, &d.pref, &theta, d.model.horizon, 200, 3).unwrap();
    let b = evaluate_policy(&d.model, &d.pref, &theta, d.model.horizon, 200, 3).unwrap();
    assert_eq!(a.mean_cost, b.mean_cost);
    assert_eq!(a.goal_rate, b.goal_rate);
    let base = rcompliant_baseline(&d.model, &d.pref, d.model.horizon, 3, 100, 3).unwrap();
    assert_eq!(base.trials.len(), 3);
    assert_eq!(base.aggregate.runs, 300);
}

fn unit_box() -> impl Strategy<Value = ParamBox<f64>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 2).prop_map(|v| {
        let (lo, hi) = v.into_iter().map(|(a, b)| (a.min(b), a.max(b))).unzip();
        ParamBox::new(lo, hi)
    })
}

proptest! {
    #[test]
    fn intersection_and_difference_split_volume(a in unit_box(), b in unit_box()) {
        let (a, b) = (IntervalSet::from_box(a), IntervalSet::from_box(b));
        let inter = a.intersect(&b).unwrap();
        let diff = a.subtract(&b).unwrap();
        prop_assert!(inter.intersect(&diff).unwrap().is_empty());
        prop_assert!((inter.volume() + diff.volume() - a.volume()).abs() < 1e-12);
    }
}
