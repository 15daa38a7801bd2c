//! Acceptance suite. Prints one PASS/FAIL line per criterion on stdout and
//! per-case detail on stderr. Exits 0 unless `ACCEPTANCE_STRICT=1` is set and
//! something failed.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use braid_core::bench::{
    evaluate_policy, heatmap_sweep, rcompliant_baseline, EvalReport, HeatmapGrid,
};
use braid_core::domains::{
    build_spaceship_repair, filter_check, load_domain, DomainKind, SpaceshipRepairConfig,
};
use braid_core::oracle::{build_tree, oracle_optimum, pruned_fraction, DEFAULT_NODE_BUDGET};
use braid_core::pomdp::{rollout, Belief};
use braid_core::prs::{prs_solve, refine, Partition, Selector, SolverConfig};
use braid_core::{parse_preference, simulate_with_interval, IntervalSet, ParamBox, ParamSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Result<Outcome, String>;

fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn c1_filter() -> Result<Outcome, String> {
    let t = Instant::now();
    let r = filter_check(&SpaceshipRepairConfig::default(), 10).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    Ok(outcome(
        r.max_abs_error < 1e-9 && dt < Duration::from_secs(5),
        format!(
            "{} sequences, max |error| {:.2e}, {:.2}s",
            r.sequences,
            r.max_abs_error,
            dt.as_secs_f64()
        ),
    ))
}

fn c2_partitions() -> Result<Outcome, String> {
    let t = Instant::now();
    let (m, p) = build_spaceship_repair::<f64>(&SpaceshipRepairConfig::default())
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut notes = Vec::new();
    let mut ok = true;
    for h in [2, 3, 4] {
        let tree = build_tree(&m, &p, h, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let parts = tree.enumerate_braids();
        let volume: f64 = parts.iter().map(|q| q.interval.volume()).sum();
        let mut disjoint = true;
        let mut nested = false;
        for i in 0..parts.len() {
            for j in 0..i {
                let x = parts[i]
                    .interval
                    .intersect(&parts[j].interval)
                    .map_err(|e| e.to_string())?;
                disjoint &= x.is_empty();
                let (a, b): (HashSet<_>, HashSet<_>) = (
                    parts[i].leaves.iter().collect(),
                    parts[j].leaves.iter().collect(),
                );
                nested |= (a.is_subset(&b) || b.is_subset(&a)) && a != b;
            }
        }
        let mut spread: f64 = 0.0;
        for q in &parts {
            for _ in 0..10 {
                let theta = q
                    .interval
                    .sample_uniform(&mut rng)
                    .map_err(|e| e.to_string())?;
                let (c, _) = tree
                    .exact_expected_cost(&theta)
                    .map_err(|e| e.to_string())?;
                spread = spread.max((c - q.expected_cost).abs());
            }
        }
        ok &= disjoint && !nested && (volume - 1.0).abs() <= 1e-9 && spread <= 1e-12;
        notes.push(format!(
            "H={h}: {} braids, volume {volume:.12}, disjoint {disjoint}, nested {nested}, cost spread {spread:.1e}",
            parts.len()
        ));
    }
    let dt = t.elapsed();
    ok &= dt < Duration::from_secs(120);
    notes.push(format!("{:.2}s", dt.as_secs_f64()));
    Ok(outcome(ok, notes.join("; ")))
}

fn c3_pruning() -> Result<Outcome, String> {
    let (m, p) = build_spaceship_repair::<f64>(&SpaceshipRepairConfig::default())
        .map_err(|e| e.to_string())?;
    let f = pruned_fraction(&m, &p, 2, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
    Ok(outcome(
        (f - 1.0 / 3.0).abs() <= 0.02,
        format!("pruned fraction {f:.4}"),
    ))
}

/// Connected components of equal-cost cells (4-neighbourhood) whose every
/// neighbouring cell costs strictly more.
fn local_min_plateaus(g: &HeatmapGrid) -> Vec<(f64, Vec<usize>)> {
    let xs = g.axis(0);
    let ys = g.axis(1);
    let (nx, ny) = (xs.len(), ys.len());
    let cost = |i: usize| g.cells[i].mean_cost;
    let nbrs = |i: usize| {
        let (x, y) = (i / ny, i % ny);
        let mut v = Vec::with_capacity(4);
        if x > 0 {
            v.push(i - ny);
        }
        if x + 1 < nx {
            v.push(i + ny);
        }
        if y > 0 {
            v.push(i - 1);
        }
        if y + 1 < ny {
            v.push(i + 1);
        }
        v
    };
    let mut seen = vec![false; g.cells.len()];
    let mut out = Vec::new();
    for start in 0..g.cells.len() {
        if seen[start] {
            continue;
        }
        let c0 = cost(start);
        let mut comp = Vec::new();
        let mut is_min = true;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            for j in nbrs(i) {
                if (cost(j) - c0).abs() <= 1e-9 {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                } else if cost(j) < c0 {
                    is_min = false;
                }
            }
        }
        if is_min {
            out.push((c0, comp));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Brackets `[x_k, x_{k+1}]` where the cost sequence turns, using moves of
/// more than three combined standard errors.
fn turning_points(xs: &[f64], r: &[EvalReport]) -> Vec<(f64, f64)> {
    let sig = |a: usize, b: usize| {
        (r[a].mean_cost - r[b].mean_cost).abs()
            > 3.0 * combined_se(r[a].cost_stderr(), r[b].cost_stderr())
    };
    let c = |i: usize| r[i].mean_cost;
    let (mut dir, mut hi, mut lo) = (0i8, 0usize, 0usize);
    let mut turns = Vec::new();
    for i in 1..r.len() {
        if c(i) >= c(hi) {
            hi = i;
        }
        if c(i) <= c(lo) {
            lo = i;
        }
        match dir {
            0 if c(i) > c(lo) && sig(i, lo) => (dir, hi) = (1, i),
            0 if c(i) < c(hi) && sig(i, hi) => (dir, lo) = (-1, i),
            1 if c(i) < c(hi) && sig(i, hi) => {
                turns.push((xs[hi], xs[hi + 1]));
                (dir, lo) = (-1, i);
            }
            -1 if c(i) > c(lo) && sig(i, lo) => {
                turns.push((xs[lo], xs[lo + 1]));
                (dir, hi) = (1, i);
            }
            _ => {}
        }
    }
    turns
}

fn c4_heatmap() -> Result<Outcome, String> {
    const RUNS: u64 = 2000;
    let t = Instant::now();
    let d = load_domain::<f64>(DomainKind::SpaceshipRepair, None, None, Some(12))
        .map_err(|e| e.to_string())?;
    let g = heatmap_sweep(&d.model, &d.pref, 12, 0.02, RUNS, SEED).map_err(|e| e.to_string())?;
    let in_a = |c: usize| g.cells[c].theta1 <= 0.16 + 1e-9;
    let in_b = |c: usize| g.cells[c].theta1 >= 0.83 - 1e-9 && g.cells[c].theta2 <= 0.1 + 1e-9;
    let plateaus = local_min_plateaus(&g);
    if plateaus.len() < 2 {
        return Ok(outcome(
            false,
            format!("{} local-minimum plateaus", plateaus.len()),
        ));
    }
    let (p0, p1) = (&plateaus[0], &plateaus[1]);
    let placed = (p0.1.iter().all(|&c| in_a(c)) && p1.1.iter().all(|&c| in_b(c)))
        || (p0.1.iter().all(|&c| in_b(c)) && p1.1.iter().all(|&c| in_a(c)));

    // Fine transect along theta2 = theta1 - 0.25 with the same episode set.
    let xs: Vec<f64> = (0..=375).map(|k| 0.25 + 0.002 * k as f64).collect();
    let line = xs
        .iter()
        .map(|&x| evaluate_policy(&d.model, &d.pref, &[x, x - 0.25], 12, RUNS, SEED))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let central: Vec<&EvalReport> = xs
        .iter()
        .zip(&line)
        .filter(|(x, _)| **x < 0.83)
        .map(|(_, r)| r)
        .collect();
    let c_mean = central.iter().map(|r| r.mean_cost).sum::<f64>() / central.len() as f64;
    let c_se = central
        .iter()
        .map(|r| r.cost_stderr().powi(2))
        .sum::<f64>()
        .sqrt()
        / central.len() as f64;
    let margin_ok = [p0, p1].iter().all(|p| {
        let cell = &g.cells[p.1[0]];
        c_mean - cell.mean_cost > 3.0 * combined_se(cell.stdev / (RUNS as f64).sqrt(), c_se)
    });
    let turns = turning_points(&xs, &line);
    let near = |target: f64| {
        turns
            .iter()
            .any(|&(a, b)| b >= target - 0.05 - 1e-9 && a <= target + 0.05 + 1e-9)
    };
    let dt = t.elapsed();
    let ok = placed && margin_ok && near(0.6) && near(0.8) && dt < Duration::from_secs(1800);
    let describe = |p: &(f64, Vec<usize>)| {
        let t1: Vec<f64> = p.1.iter().map(|&c| g.cells[c].theta1).collect();
        let t2: Vec<f64> = p.1.iter().map(|&c| g.cells[c].theta2).collect();
        let (a, b) = (
            t1.iter().cloned().fold(f64::INFINITY, f64::min),
            t1.iter().cloned().fold(0.0, f64::max),
        );
        let (c, e) = (
            t2.iter().cloned().fold(f64::INFINITY, f64::min),
            t2.iter().cloned().fold(0.0, f64::max),
        );
        format!("{:.3} on t1 [{a:.2},{b:.2}] t2 [{c:.2},{e:.2}]", p.0)
    };
    let turn_text: Vec<String> = turns
        .iter()
        .map(|(a, b)| format!("[{a:.3},{b:.3}]"))
        .collect();
    Ok(outcome(
        ok,
        format!(
            "plateaus {} and {}; central line mean {c_mean:.3} +- {c_se:.3}; turns {}; {:.1}s",
            describe(p0),
            describe(p1),
            turn_text.join(" "),
            dt.as_secs_f64()
        ),
    ))
}

fn c5_convergence() -> Result<Outcome, String> {
    let cfg = SpaceshipRepairConfig {
        station_distance: 2,
        horizon: 3,
        ..Default::default()
    };
    let (m, p) = build_spaceship_repair::<f64>(&cfg).map_err(|e| e.to_string())?;
    let tree = build_tree(&m, &p, 3, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
    let opt = oracle_optimum(&tree.enumerate_braids())
        .map_err(|e| e.to_string())?
        .expected_cost;
    let mut ok = true;
    let mut notes = vec![format!("optimum {opt:.6}")];
    for s in Selector::ALL {
        let t = Instant::now();
        let mut hits = 0;
        for seed in 0..10 {
            let c = SolverConfig {
                selector: s,
                iterations: Some(20_000),
                seconds: None,
                workers: 1,
                seed: SEED + seed,
                ..Default::default()
            };
            let r = prs_solve(&m, &p, 3, &c).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all = true;
            for _ in 0..5 {
                let theta = r
                    .best
                    .interval
                    .sample_uniform(&mut rng)
                    .map_err(|e| e.to_string())?;
                let (cost, _) = tree
                    .exact_expected_cost(&theta)
                    .map_err(|e| e.to_string())?;
                all &= (cost - opt).abs() <= 1e-9;
            }
            hits += all as u32;
        }
        let dt = t.elapsed();
        ok &= hits >= 9 && dt < Duration::from_secs(120);
        notes.push(format!("{s} {hits}/10 in {:.1}s", dt.as_secs_f64()));
    }
    Ok(outcome(ok, notes.join(", ")))
}

fn desk_config(selector: Selector, seed: u64) -> SolverConfig {
    SolverConfig {
        selector,
        iterations: Some(100_000),
        seconds: Some(60.0),
        workers: 8,
        seed,
        ..Default::default()
    }
}

fn c6_dominance() -> Result<Outcome, String> {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in DomainKind::ALL {
        let d = load_domain::<f64>(kind, None, None, None).map_err(|e| e.to_string())?;
        let h = d.model.horizon;
        let base = rcompliant_baseline(&d.model, &d.pref, h, 10, 2000, SEED)
            .map_err(|e| e.to_string())?
            .aggregate;
        eprintln!(
            "C6 {kind} H={h} rcompliant cost {:.3} +- {:.3}, goal {:.4} +- {:.4}",
            base.mean_cost,
            base.cost_stderr(),
            base.goal_rate,
            base.goal_stderr()
        );
        let mut wins = 0;
        for s in Selector::ALL {
            let r = prs_solve(&d.model, &d.pref, h, &desk_config(s, SEED))
                .map_err(|e| e.to_string())?;
            let theta = r.sample_best(SEED).map_err(|e| e.to_string())?;
            let e = evaluate_policy(&d.model, &d.pref, &theta, h, 2000, SEED)
                .map_err(|e| e.to_string())?;
            let cost_margin =
                (base.mean_cost - e.mean_cost) / combined_se(base.cost_stderr(), e.cost_stderr());
            let goal_margin =
                (e.goal_rate - base.goal_rate) / combined_se(base.goal_stderr(), e.goal_stderr());
            let win = cost_margin > 3.0 && goal_margin > 3.0;
            wins += win as u32;
            eprintln!(
                "C6 {kind} {s}: cost {:.3} +- {:.3} ({cost_margin:+.1} SE), goal {:.4} +- {:.4} ({goal_margin:+.1} SE), {} samples, {}",
                e.mean_cost,
                e.cost_stderr(),
                e.goal_rate,
                e.goal_stderr(),
                r.total_samples,
                if win { "ok" } else { "not dominant" }
            );
        }
        ok &= wins == 5;
        notes.push(format!("{} {wins}/5", kind.short()));
    }
    Ok(outcome(
        ok,
        format!("selectors dominating RCompliant: {}", notes.join(", ")),
    ))
}

fn c7_anchor() -> Result<Outcome, String> {
    let d = load_domain::<f64>(DomainKind::SpaceshipRepair, None, None, Some(100))
        .map_err(|e| e.to_string())?;
    let base = rcompliant_baseline(&d.model, &d.pref, 100, 10, 2000, SEED)
        .map_err(|e| e.to_string())?
        .aggregate;
    let r = prs_solve(
        &d.model,
        &d.pref,
        100,
        &desk_config(Selector::EpsilonGreedy, SEED),
    )
    .map_err(|e| e.to_string())?;
    let theta = r.sample_best(SEED).map_err(|e| e.to_string())?;
    let e =
        evaluate_policy(&d.model, &d.pref, &theta, 100, 2000, SEED).map_err(|e| e.to_string())?;
    let goal_ok = (0.70..=0.75).contains(&e.goal_rate);
    let cost_ok = e.mean_cost <= 0.9 * base.mean_cost;
    Ok(outcome(
        goal_ok && cost_ok,
        format!(
            "solution {:?}: cost {:.3} goal {:.4}; rcompliant cost {:.3} goal {:.4}; cost ratio {:.3}",
            theta,
            e.mean_cost,
            e.goal_rate,
            base.mean_cost,
            base.goal_rate,
            e.mean_cost / base.mean_cost
        ),
    ))
}

fn random_set<R: Rng>(rng: &mut R, dims: usize) -> IntervalSet<f64> {
    let n = rng.random_range(1..4);
    let boxes = (0..n)
        .map(|_| {
            let (lo, hi): (Vec<f64>, Vec<f64>) = (0..dims)
                .map(|_| {
                    let a: f64 = rng.random();
                    let b: f64 = rng.random();
                    (a.min(b), a.max(b))
                })
                .unzip();
            ParamBox::new(lo, hi)
        })
        .collect();
    IntervalSet::from_boxes(dims, boxes).expect("same dims")
}

fn c8_fuzz() -> Result<Outcome, String> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // Random refinements of a live pool, as the solver performs them.
    let mut worst: f64 = 0.0;
    let mut pool = vec![Partition::new(ParamSpace::<f64>::unit(3).full())];
    let mut refines = 0;
    while refines < 10_000 {
        let i = rng.random_range(0..pool.len());
        let theta = pool[i]
            .interval
            .sample_uniform(&mut rng)
            .map_err(|e| e.to_string())?;
        let mut leaf = random_set(&mut rng, 3);
        if !leaf.contains(&theta).map_err(|e| e.to_string())? {
            let w = 0.05;
            let b = ParamBox::new(
                theta.iter().map(|x| x - w).collect(),
                theta.iter().map(|x| x + w).collect(),
            );
            leaf = leaf
                .union(&IntervalSet::from_box(b))
                .map_err(|e| e.to_string())?;
        }
        let before = pool[i].interval.volume();
        let (kept, split) = refine(&pool[i], &leaf, rng.random_range(1.0..10.0), rng.random())
            .map_err(|e| e.to_string())?;
        let after = kept.interval.volume() + split.as_ref().map_or(0.0, |s| s.interval.volume());
        worst = worst.max((after - before).abs());
        pool[i] = kept;
        pool.extend(split);
        refines += 1;
        if pool.len() > 400 {
            pool = vec![Partition::new(ParamSpace::<f64>::unit(3).full())];
        }
    }
    let total: f64 = pool.iter().map(|p| p.interval.volume()).sum();
    worst = worst.max((total - 1.0).abs());

    // Lemma 1: condition truth equals membership in its interval.
    let domains: Vec<_> = DomainKind::ALL
        .iter()
        .map(|&k| load_domain::<f64>(k, None, None, None))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let d = &domains[rng.random_range(0..domains.len())];
        let n = d.model.n_states();
        let k = rng.random_range(1..6);
        let entries: Vec<(usize, f64)> = (0..k)
            .map(|_| (rng.random_range(0..n), rng.random_range(0.01..1.0)))
            .collect();
        let b = Belief::from_entries(n, entries).map_err(|e| e.to_string())?;
        let rule = &d.pref.rules[rng.random_range(0..d.pref.rules.len())];
        let theta = d
            .pref
            .space
            .full()
            .sample_uniform(&mut rng)
            .map_err(|e| e.to_string())?;
        let holds = d.pref.eval_condition(&rule.condition, &b, &theta);
        let inside = d
            .pref
            .interval_of(&rule.condition, &b)
            .contains(&theta)
            .map_err(|e| e.to_string())?;
        mismatches += (holds != inside) as u32;
    }

    // Sampled parameters stay inside the leaf interval they produce.
    let mut escapes = 0;
    for i in 0..2000 {
        let d = &domains[i % domains.len()];
        let theta = d
            .pref
            .space
            .full()
            .sample_uniform(&mut rng)
            .map_err(|e| e.to_string())?;
        let (_, leaf) =
            simulate_with_interval(&d.model, &d.pref, &theta, d.model.horizon, &mut rng)
                .map_err(|e| e.to_string())?;
        escapes += !leaf.contains(&theta).map_err(|e| e.to_string())? as u32;
    }
    let dt = t.elapsed();
    Ok(outcome(
        worst <= 1e-9 && mismatches == 0 && escapes == 0 && dt < Duration::from_secs(60),
        format!(
            "10000 refines worst volume drift {worst:.1e}; 10000 lemma-1 triples {mismatches} mismatches; 2000 rollouts {escapes} escapes; {:.1}s",
            dt.as_secs_f64()
        ),
    ))
}

fn c9_parser() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut notes = Vec::new();
    let mut ok = true;
    for kind in DomainKind::ALL {
        let d = load_domain::<f64>(kind, None, None, None).map_err(|e| e.to_string())?;
        let printed = d.pref.to_source();
        let again = parse_preference(&printed, &d.model).map_err(|e| e.to_string())?;
        let round_trip = again.rules == d.pref.rules
            && again.to_source() == printed
            && again.space == d.pref.space;
        let full = d.pref.space.volume();
        let mut beliefs = Vec::new();
        while beliefs.len() < 100 {
            let theta = d
                .pref
                .space
                .full()
                .sample_uniform(&mut rng)
                .map_err(|e| e.to_string())?;
            let rec = rollout(&d.model, d.model.horizon, &mut rng, |b| {
                d.pref.choose_rule(b, &theta)
            })
            .map_err(|e| e.to_string())?;
            if let Some(step) = rec.steps.get(rng.random_range(0..rec.steps.len().max(1))) {
                beliefs.extend(step.belief.clone());
            }
        }
        let mut tiled = 0;
        for b in &beliefs {
            let iv = d.pref.effective_intervals(b);
            let vol: f64 = iv.iter().map(|s| s.volume()).sum();
            let mut disjoint = true;
            for i in 0..iv.len() {
                for j in 0..i {
                    disjoint &= iv[i]
                        .intersect(&iv[j])
                        .map_err(|e| e.to_string())?
                        .is_empty();
                }
            }
            tiled += (disjoint && (vol - full).abs() <= 1e-9) as u32;
        }
        ok &= round_trip && tiled == 100;
        notes.push(format!(
            "{} round-trip {round_trip}, tiled {tiled}/100",
            kind.short()
        ));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn main() {
    // libtest flags such as --nocapture are passed through; there is nothing to filter.
    let checks: [(&str, &str, Check); 9] = [
        ("C1", "closed-form filter equivalence", c1_filter),
        ("C2", "partition theorems at desk scale", c2_partitions),
        ("C3", "pruning fraction at H=2", c3_pruning),
        ("C4", "non-concavity heatmap", c4_heatmap),
        (
            "C5",
            "PRS convergence to the oracle optimum",
            c5_convergence,
        ),
        ("C6", "PRS dominates RCompliant", c6_dominance),
        ("C7", "Spaceship Repair anchor at H=100", c7_anchor),
        ("C8", "structural fuzz suite", c8_fuzz),
        ("C9", "parser round-trip and tiling", c9_parser),
    ];
    let mut failed = 0;
    for (id, name, f) in checks {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let o = r.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += !o.pass as u32;
        println!(
            "{} {id} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
