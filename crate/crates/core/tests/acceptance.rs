//! One line per acceptance criterion: `acceptance <n> <name>: PASS|FAIL (<detail>)`.
//! Runs without the libtest harness so the lines appear in plain `cargo test` output.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use pcspan::density::prune_all;
use pcspan::gen::{generate, GenParams, Regime};
use pcspan::greedy::{density_lemma_check, solve_pcs, SolveConfig};
use pcspan::junction::{root_stages, JunctionConfig, Mode};
use pcspan::model::{is_feasible, is_theta_feasible, DEFAULT_HOP_CAP_CONSTANT};
use pcspan::oracle::{brute_force_opt, enumerate_feasible_walks, OracleLimits};
use pcspan::product::{equivalence_check, ProductConfig};
use pcspan::rcsp::{feasible_witness, verify_solution};
use pcspan::reductions::{
    exact_min_hopset, is_routing_feasible, rcs_shortest_feasible, rcs_to_pcs, solve_hopset, solve_rcs, verify_hopset,
    HopDemand, HopsetInstance, RcsDemand, RcsEdge, RcsInstance,
};
use pcspan::scaling::{check_scaling_claims, scale_instance, scale_lengths};
use pcspan::{PcsError, PcsInstance, Scalar, Walk, Q};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

static FAILURES: AtomicUsize = AtomicUsize::new(0);

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!(
        "acceptance {n} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        FAILURES.fetch_add(1, Ordering::SeqCst);
    }
}

fn main() {
    let criteria: [(usize, fn()); 10] = [
        (1, criterion_01_figure_scaling),
        (2, criterion_02_figure_walk),
        (3, criterion_03_pruning),
        (4, criterion_04_product_equivalence),
        (5, criterion_05_density_witness),
        (6, criterion_06_end_to_end_quality),
        (7, criterion_07_theta_soundness),
        (8, criterion_08_hopset),
        (9, criterion_09_rcs_reduction),
        (10, criterion_10_determinism),
    ];
    for (n, run) in criteria {
        if std::panic::catch_unwind(run).is_err() {
            report(n, "panicked", false, "see stderr".into());
        }
    }
    let failed = FAILURES.load(Ordering::SeqCst);
    println!("acceptance summary: {} of 10 criteria pass", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn q(n: i64) -> Q {
    Q::from_int(n)
}

fn gen(seed: u64, n: usize, k: usize, packing: usize, covering: usize, tau: i64, regime: Regime) -> PcsInstance<Q> {
    generate(&GenParams {
        n,
        k,
        packing,
        covering,
        tau,
        regime,
        seed,
        extra_edges: n,
        ..GenParams::default()
    })
    .expect("generator succeeds")
}

/// Small random instance with n ≤ 7, k ≤ 3, τ ≤ 2, m ≤ 2 drawn from `seed`.
fn small(seed: u64, regime: Regime) -> PcsInstance<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(3..=7);
    let k = rng.random_range(1..=3);
    let m = rng.random_range(0..=2usize);
    let packing = rng.random_range(0..=m);
    let tau = rng.random_range(1..=2);
    gen(seed, n, k, packing, m - packing, tau, regime)
}

/// `4·√k·2^(m+1)·ln³(size)` as a float bound.
fn quality_bound(k: usize, m: usize, size: usize) -> f64 {
    4.0 * (k as f64).sqrt() * 2f64.powi(m as i32 + 1) * (size.max(2) as f64).ln().powi(3)
}

fn criterion_01_figure_scaling() {
    let t = Instant::now();
    let lengths: Vec<Q> = [2, 3, 1, 2, 1, 2, 4, -3].iter().map(|&x| q(x)).collect();
    let units = scale_lengths(&lengths, &q(2));
    let scaled: Vec<i64> = units.iter().map(|u| u * 2).collect();
    let el = t.elapsed();
    let want = vec![2, 4, 2, 2, 2, 2, 4, -2];
    report(
        1,
        "figure scaling",
        scaled == want && el < Duration::from_millis(1),
        format!("scaled {scaled:?}, {el:?}"),
    );
}

fn criterion_02_figure_walk() {
    let t = Instant::now();
    // a b c d e f g h i
    let arcs = [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (2, 5),
        (5, 6),
        (6, 2),
        (2, 7),
        (7, 8),
        (8, 2),
    ];
    let (c, e) = (2, 4);
    let rcs = RcsInstance::<Q> {
        n: 9,
        edges: arcs
            .iter()
            .map(|&(u, v)| RcsEdge {
                tail: u,
                head: v,
                cost: q(1),
                length: 1,
            })
            .collect(),
        groups: vec![vec![7], vec![6]],
        must_visit: 2,
        demands: vec![RcsDemand {
            source: 0,
            target: e,
            ctrl: vec![12, 1, 1],
        }],
    };
    let inst = rcs_to_pcs(&rcs).unwrap();
    let walks = enumerate_feasible_walks(&inst, &inst.demands[0], 12, None, 1_000_000).unwrap();
    let revisit = walks
        .iter()
        .filter(|w| w.vertices(0, &inst).iter().filter(|&&v| v == c).count() >= 2)
        .count();
    let all_routing = walks
        .iter()
        .all(|w| is_routing_feasible(w, &rcs.demands[0], &rcs).unwrap());
    let mut simple = Vec::new();
    simple_paths(&rcs, 0, e, &mut vec![false; 9], &mut Vec::new(), &mut simple);
    let simple_ok = simple
        .iter()
        .filter(|p| is_routing_feasible(p, &rcs.demands[0], &rcs).unwrap())
        .count();
    let el = t.elapsed();
    report(
        2,
        "figure walk semantics",
        revisit > 0 && all_routing && simple_ok == 0 && el < Duration::from_secs(1),
        format!(
            "{} feasible walks, {revisit} revisit c, {} simple paths, {simple_ok} routing-feasible, {el:?}",
            walks.len(),
            simple.len()
        ),
    );
}

fn simple_paths(
    rcs: &RcsInstance<Q>,
    v: usize,
    t: usize,
    seen: &mut Vec<bool>,
    path: &mut Vec<usize>,
    out: &mut Vec<Walk>,
) {
    if v == t {
        out.push(Walk::new(path.clone()));
        return;
    }
    seen[v] = true;
    for (id, e) in rcs.edges.iter().enumerate() {
        if e.tail == v && !seen[e.head] {
            path.push(id);
            simple_paths(rcs, e.head, t, seen, path, out);
            path.pop();
        }
    }
    seen[v] = false;
}

fn criterion_03_pruning() {
    let t = Instant::now();
    let mut solutions = 0usize;
    let mut demands = 0usize;
    let mut relation_violations = 0usize;
    let mut mass_failures = 0usize;
    let mut per_m = [0usize; 3];
    let mut seed = 0u64;
    while solutions < 200 && seed < 2000 {
        let m = (seed % 3) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11);
        let n = rng.random_range(3..=6);
        let k = rng.random_range(1..=3);
        let packing = rng.random_range(0..=m);
        let inst = gen(seed, n, k, packing, m - packing, 2, Regime::Integer);
        seed += 1;
        let ids: Vec<usize> = (0..k).collect();
        for root in 0..n {
            let stages = match root_stages(&inst, &ids, root, &Mode::Integer, &JunctionConfig::default()) {
                Ok(Some(s)) => s,
                Ok(None) => continue,
                Err(e) => panic!("root stages failed: {e}"),
            };
            solutions += 1;
            per_m[m] += 1;
            let pruned = prune_all(&stages.pg, &stages.lp, &stages.solution);
            for p in &pruned {
                demands += 1;
                let j = p.demand;
                for &s in &p.sources {
                    for &tt in &p.sinks {
                        if !stages
                            .pg
                            .related(j, stages.lp.sources[s].label, stages.lp.sinks[tt].label)
                        {
                            relation_violations += 1;
                        }
                    }
                }
                let bound = p.gamma.clone() / Q::pow2(m as i64 + 1);
                if p.source_z < bound || p.sink_z < bound {
                    mass_failures += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    report(
        3,
        "pruning",
        solutions >= 200 && relation_violations == 0 && mass_failures == 0 && el < Duration::from_secs(30),
        format!(
            "{solutions} LP solutions (m=0/1/2: {per_m:?}), {demands} pruned demands, \
             {relation_violations} relation violations, {mass_failures} survivor-mass shortfalls, {el:?}"
        ),
    );
}

fn criterion_04_product_equivalence() {
    let t = Instant::now();
    let mut rows = 0usize;
    let mut mismatches = 0usize;
    let mut connected = 0usize;
    for seed in 0..30 {
        let inst = small(seed, Regime::Integer);
        for root in 0..inst.n {
            for r in equivalence_check(&inst, root, &ProductConfig::default()).unwrap() {
                rows += 1;
                connected += r.oracle_feasible as usize;
                mismatches += (r.product_connected != r.oracle_feasible) as usize;
            }
        }
    }
    let el = t.elapsed();
    report(
        4,
        "product equivalence",
        mismatches == 0 && el < Duration::from_secs(120),
        format!("30 instances, {rows} (root, demand) rows, {connected} feasible, {mismatches} mismatches, {el:?}"),
    );
}

fn criterion_05_density_witness() {
    let t = Instant::now();
    let mut holds = 0usize;
    let mut seed = 0u64;
    let mut checked = 0usize;
    let mut worst = 0f64;
    while checked < 30 {
        let inst = small(1000 + seed, Regime::Integer);
        seed += 1;
        let r = density_lemma_check(&inst, &OracleLimits::default()).unwrap();
        checked += 1;
        holds += r.holds as usize;
        if r.opt > q(0) {
            let ratio = r.min_density.as_f64() * (r.k as f64).sqrt() / r.opt.as_f64();
            worst = worst.max(ratio);
        }
    }
    let el = t.elapsed();
    report(
        5,
        "density witness",
        holds == checked && el < Duration::from_secs(300),
        format!("{holds}/{checked} instances satisfy min density ≤ OPT/√k, worst density·√k/OPT {worst:.3}, {el:?}"),
    );
}

fn criterion_06_end_to_end_quality() {
    let t = Instant::now();
    let mut ratios = Vec::new();
    let mut infeasible = 0usize;
    let mut bound_misses = 0usize;
    let mut cases = Vec::new();
    for seed in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe2e);
        let n = rng.random_range(4..=7);
        let k = rng.random_range(2..=4);
        let m = rng.random_range(0..=2usize);
        let packing = rng.random_range(0..=m);
        cases.push((
            gen(2000 + seed, n, k, packing, m - packing, 2, Regime::Integer),
            Mode::Integer,
        ));
    }
    for seed in 0..6u64 {
        let inst = gen(3000 + seed, 6, 3, 1, 0, 2, Regime::RationalNegative);
        cases.push((inst, Mode::Theta(Q::from_ratio(1, 2))));
    }
    for (inst, mode) in &cases {
        let rep = solve_pcs(inst, mode, &SolveConfig::default()).unwrap();
        let checks = verify_solution(inst, &rep.edges, mode.theta()).unwrap();
        infeasible += checks.iter().filter(|c| !c.feasible).count();
        let (opt, _) = brute_force_opt(inst, None, &OracleLimits::default()).unwrap();
        let ratio = if opt > q(0) {
            (rep.cost.clone() / opt).as_f64()
        } else if rep.cost == q(0) {
            1.0
        } else {
            f64::INFINITY
        };
        let bound = quality_bound(
            inst.demands.len(),
            inst.packing + inst.covering,
            rep.max_product_vertices,
        );
        bound_misses += (ratio > bound) as usize;
        ratios.push(ratio);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if ratios.len() % 2 == 1 {
        ratios[ratios.len() / 2]
    } else {
        (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2]) / 2.0
    };
    let el = t.elapsed();
    report(
        6,
        "end-to-end quality",
        infeasible == 0 && bound_misses == 0 && median <= 2.0 && el < Duration::from_secs(600),
        format!(
            "{} instances, {infeasible} unverified demands, {bound_misses} bound misses, \
             median cost/OPT {median:.3}, max {:.3}, {el:?}",
            ratios.len(),
            ratios.last().unwrap()
        ),
    );
}

fn criterion_07_theta_soundness() {
    let t = Instant::now();
    let mut forward = 0usize;
    let mut backward = 0usize;
    let mut violations = 0usize;
    let mut skipped_long = 0usize;
    let mut long_violations = 0usize;
    let mut negative = 0usize;
    for seed in 0..30u64 {
        let regime = if seed % 3 == 2 {
            Regime::Rational
        } else {
            Regime::RationalNegative
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7a);
        let n = rng.random_range(3..=6);
        let k = rng.random_range(1..=3);
        let inst = gen(4000 + seed, n, k, 1, 0, 2, regime);
        negative += inst.edges.iter().any(|e| e.cons.length < q(0)) as usize;
        for theta in [Q::from_ratio(1, 2), Q::from_ratio(1, 10)] {
            let scaled = scale_instance(&inst, &theta, DEFAULT_HOP_CAP_CONSTANT).unwrap();
            let sinst = scaled.scaled_instance();
            for (d, dem) in inst.demands.iter().enumerate() {
                let base = enumerate_feasible_walks(&inst, dem, 10, None, 100_000).unwrap();
                let (short, long): (Vec<Walk>, Vec<Walk>) = base.into_iter().partition(|w| w.len() < scaled.hop_bound);
                skipped_long += long.len();
                long_violations += long
                    .iter()
                    .filter(|w| !is_theta_feasible(w, &sinst.demands[d], &sinst, &theta).unwrap())
                    .count();
                for w in &short {
                    forward += 1;
                    violations += !is_theta_feasible(w, &sinst.demands[d], &sinst, &theta).unwrap() as usize;
                }
                violations += check_scaling_claims(&scaled, &short).unwrap().len();
                let relaxed = enumerate_feasible_walks(&sinst, &sinst.demands[d], 10, Some(&theta), 100_000).unwrap();
                for w in &relaxed {
                    backward += 1;
                    violations += !is_theta_feasible(w, dem, &inst, &theta).unwrap() as usize;
                }
            }
        }
    }
    let el = t.elapsed();
    report(
        7,
        "theta soundness",
        violations == 0 && forward > 0 && backward > 0 && el < Duration::from_secs(120),
        format!(
            "30 instances ({negative} with negative lengths), θ ∈ {{1/2, 1/10}}, {forward} base-feasible walks \
             within the hop bound, {backward} scaled θ-feasible walks, {violations} violations, \
             {skipped_long} base walks at or beyond the hop bound, outside the guarantee \
             ({long_violations} of them not θ-feasible after scaling), {el:?}"
        ),
    );
}

fn hopset_case(kind: usize, seed: u64) -> HopsetInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4095);
    let n = rng.random_range(4..=7);
    let mut edges = Vec::new();
    match kind {
        0 => (0..n - 1).for_each(|i| edges.push((i, i + 1, rng.random_range(1..=3)))),
        1 => (0..n).for_each(|i| edges.push((i, (i + 1) % n, rng.random_range(1..=3)))),
        _ => {
            (0..n - 1).for_each(|i| edges.push((i, i + 1, rng.random_range(1..=3))));
            for _ in 0..n {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                if u != v {
                    edges.push((u, v, rng.random_range(1..=4)));
                }
            }
        }
    }
    let dist = apsp(n, &edges);
    let mut demands = Vec::new();
    while demands.len() < 3 {
        let s = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        if s == t {
            continue;
        }
        if let Some(d) = dist[s][t] {
            demands.push(HopDemand {
                source: s,
                target: t,
                dist: d,
                beta: rng.random_range(1..=2),
            });
        }
    }
    HopsetInstance { n, edges, demands }
}

fn apsp(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<Option<i64>>> {
    let mut d = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(0);
    }
    for &(u, v, l) in edges {
        if d[u][v].is_none_or(|x| l < x) {
            d[u][v] = Some(l);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|x| a + b < x) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

fn criterion_08_hopset() {
    let t = Instant::now();
    let mut cases = 0usize;
    let mut unverified = 0usize;
    let mut bound_misses = 0usize;
    let mut exact_cases = 0usize;
    let mut optimal = 0usize;
    for kind in 0..3 {
        for seed in 0..8u64 {
            let hs = hopset_case(kind, seed * 3 + kind as u64);
            let sol = solve_hopset::<Q>(&hs, &SolveConfig::default()).unwrap();
            cases += 1;
            let ok = verify_hopset(&hs, &sol.hopset);
            unverified += ok.iter().filter(|&&b| !b).count();
            if let Ok(exact) = exact_min_hopset(&hs, 200_000) {
                exact_cases += 1;
                let bound = quality_bound(hs.demands.len(), 1, sol.report.max_product_vertices);
                optimal += (sol.hopset.len() == exact.len()) as usize;
                bound_misses += (sol.hopset.len() as f64 > bound * exact.len() as f64) as usize;
            }
        }
    }
    let el = t.elapsed();
    report(
        8,
        "hopset reduction",
        unverified == 0 && bound_misses == 0 && exact_cases > 0 && el < Duration::from_secs(300),
        format!(
            "{cases} path/cycle/random graphs, {unverified} unverified demands, {exact_cases} exhaustively solved, \
             {optimal} matched the minimum, {bound_misses} bound misses, {el:?}"
        ),
    );
}

fn random_rcs(seed: u64) -> RcsInstance<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0c5);
    let n = rng.random_range(4..=7);
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push(((i, (i + 1) % n), rng.random_range(1..=3)));
    }
    for _ in 0..n + 2 {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push(((u, v), rng.random_range(1..=3)));
        }
    }
    let groups_total = rng.random_range(1..=3);
    let must_visit = rng.random_range(0..=groups_total);
    let groups: Vec<Vec<usize>> = (0..groups_total)
        .map(|_| {
            let size = rng.random_range(1..=3usize);
            let mut g: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
            g.sort_unstable();
            g.dedup();
            g
        })
        .collect();
    let demands = (0..3)
        .map(|_| {
            let s = rng.random_range(0..n);
            let mut t = rng.random_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            let mut ctrl = vec![rng.random_range(2..=3 * n as i64)];
            for g in 0..groups_total {
                ctrl.push(match (g < must_visit, rng.random_bool(0.5)) {
                    (true, b) => b as i64,
                    (false, b) => -(b as i64),
                });
            }
            RcsDemand {
                source: s,
                target: t,
                ctrl,
            }
        })
        .collect();
    RcsInstance {
        n,
        edges: edges
            .into_iter()
            .map(|((u, v), l)| RcsEdge {
                tail: u,
                head: v,
                cost: q(rng.random_range(0..=4)),
                length: l,
            })
            .collect(),
        groups,
        must_visit,
        demands,
    }
}

fn criterion_09_rcs_reduction() {
    let t = Instant::now();
    let mut pairs = 0usize;
    let mut feasible = 0usize;
    let mut mismatches = 0usize;
    let mut solved = 0usize;
    let mut solve_failures = 0usize;
    for seed in 0..50u64 {
        let rcs = random_rcs(seed);
        let mut keep = Vec::new();
        for d in &rcs.demands {
            pairs += 1;
            let routing = rcs_shortest_feasible(&rcs, d, None);
            let single = RcsInstance {
                demands: vec![d.clone()],
                ..rcs.clone()
            };
            let pcs = match rcs_to_pcs(&single) {
                Ok(inst) => feasible_witness(&inst, &inst.demands[0], None, None).map(|w| (inst, w)),
                Err(PcsError::InfeasibleDemand { .. }) => None,
                Err(e) => panic!("reduction failed: {e}"),
            };
            match (&routing, &pcs) {
                (Some(rw), Some((inst, pw))) => {
                    feasible += 1;
                    keep.push(d.clone());
                    let cross =
                        is_feasible(rw, &inst.demands[0], inst).unwrap() && is_routing_feasible(pw, d, &rcs).unwrap();
                    mismatches += !cross as usize;
                }
                (None, None) => {}
                _ => mismatches += 1,
            }
        }
        if keep.is_empty() {
            continue;
        }
        let sub = RcsInstance { demands: keep, ..rcs };
        match solve_rcs(&sub, &SolveConfig::default()) {
            Ok(rep) => {
                solved += 1;
                let ok = rep
                    .witnesses
                    .iter()
                    .zip(&sub.demands)
                    .all(|(w, d)| is_routing_feasible(w, d, &sub).unwrap());
                solve_failures += !ok as usize;
            }
            Err(_) => solve_failures += 1,
        }
    }
    let el = t.elapsed();
    report(
        9,
        "rcs reduction",
        mismatches == 0 && solve_failures == 0 && el < Duration::from_secs(300),
        format!(
            "50 instances, {pairs} demands ({feasible} feasible), {mismatches} mismatches, \
             {solved} solved, {solve_failures} solutions not routing-feasible, {el:?}"
        ),
    );
}

fn criterion_10_determinism() {
    let mut identical = 0usize;
    let mut total = 0usize;
    for seed in 0..6u64 {
        let (inst, mode) = if seed % 2 == 0 {
            (gen(5000 + seed, 6, 3, 1, 1, 2, Regime::Integer), Mode::Integer)
        } else {
            (
                gen(5000 + seed, 5, 2, 1, 0, 2, Regime::RationalNegative),
                Mode::Theta(Q::from_ratio(1, 10)),
            )
        };
        let mut cfg = SolveConfig::default();
        cfg.junction.seed = seed * 7919;
        let a = solve_pcs(&inst, &mode, &cfg).unwrap().to_json();
        let b = solve_pcs(&inst, &mode, &cfg).unwrap().to_json();
        total += 1;
        identical += (a == b) as usize;
    }
    report(
        10,
        "determinism",
        identical == total,
        format!("{identical}/{total} report pairs byte-identical"),
    );
}
