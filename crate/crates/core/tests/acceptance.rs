use std::collections::{HashSet, VecDeque};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftbench_core::dynamics::{build_hregions, select_root};
use shiftbench_core::harness::RunOptions;
use shiftbench_core::{
    analyze_trace, emit_results, generate_database, run_on_graph, simple_traversal, sweep_h,
    BufferPool, DependencyProtocol, DynamicsState, ExperimentConfig, ObjectGraph, Outcome, Phase,
    PolicyKind, RegionalProtocol,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = fn() -> Verdict;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn database_statistics() -> Verdict {
    let t = Instant::now();
    let g = generate_database(&ExperimentConfig::default().db).unwrap();
    let elapsed = t.elapsed();
    let n = g.len();
    let sizes: Vec<u32> = (0..n as u32).map(|o| g.size_of(o)).collect();
    let in_range = sizes.iter().all(|&s| (50..=1600).contains(&s));
    let total = g.total_bytes() as f64;
    let mean = total / n as f64;
    let ok = n == 100_000
        && in_range
        && (mean - 233.0).abs() <= 0.10 * 233.0
        && (total - 23.3e6).abs() <= 0.05 * 23.3e6
        && within(elapsed, 5);
    verdict(
        ok,
        format!("objects {n}, sizes in [50,1600] {in_range}, mean {mean:.1}, total {total:.0}, {elapsed:.2?}"),
    )
}

fn hot_region_law() -> Verdict {
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    let g = generate_database(&cfg.db).unwrap();
    let opts = RunOptions {
        record_roots: true,
        record_pages: false,
    };
    let out = run_on_graph(&cfg, &g, opts).unwrap();
    let s = analyze_trace(&out.roots, &out.regions).unwrap();
    let size_ok = (s.hot_size - 0.003).abs() <= 0.0003;
    let share_ok = (s.hot_share - 0.80).abs() <= 0.02;

    // Uniform-weight control: every region equally likely.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let universe: Vec<u32> = (0..g.len() as u32).collect();
    let mut regions = build_hregions(&cfg.regional, &universe, &g, &mut rng).unwrap();
    for r in &mut regions {
        r.weight = 1.0;
    }
    let n = regions.len();
    let draws = 100_000;
    let mut counts = vec![0u64; n];
    for _ in 0..draws {
        counts[select_root(&regions, &mut rng).unwrap().0] += 1;
    }
    let e = draws as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let critical = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.99);
    let elapsed = t.elapsed();
    verdict(
        size_ok && share_ok && chi2 <= critical && within(elapsed, 10),
        format!(
            "hot size {:.5}, hot share {:.4}, uniform chi2 {chi2:.1} <= {critical:.1} (df {}), {elapsed:.2?}",
            s.hot_size,
            s.hot_share,
            n - 1
        ),
    )
}

fn change_cadence() -> Verdict {
    let mut cfg = ExperimentConfig::default();
    let g = generate_database(&cfg.db).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    // Change periods ceil(1/h) worked out by hand.
    for (h, period) in [(1.0, 1u64), (0.01, 100), (0.0006, 1667)] {
        cfg.regional.h = h;
        let m = run_on_graph(&cfg, &g, RunOptions::default())
            .unwrap()
            .metrics;
        let expected = 10_000 / period;
        ok &= m.change_steps == expected;
        details.push(format!("h={h}: {} (expected {expected})", m.change_steps));
    }
    verdict(ok, details.join(", "))
}

/// Recency-list LRU over a plain vector.
fn reference_lru(string: &[u32], capacity: usize) -> Vec<bool> {
    let mut frames: VecDeque<u32> = VecDeque::new();
    string
        .iter()
        .map(|&p| {
            if let Some(i) = frames.iter().position(|&f| f == p) {
                frames.remove(i);
                frames.push_front(p);
                true
            } else {
                if frames.len() == capacity {
                    frames.pop_back();
                }
                frames.push_front(p);
                false
            }
        })
        .collect()
}

fn lru_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let pages = rng.gen_range(1..=26u32);
        let capacity = rng.gen_range(1..=8usize);
        let len = rng.gen_range(0..=200);
        let string: Vec<u32> = (0..len).map(|_| rng.gen_range(0..pages)).collect();
        let mut pool = BufferPool::new(capacity);
        let got: Vec<bool> = string
            .iter()
            .map(|&p| pool.touch(p) == Outcome::Hit)
            .collect();
        if got != reference_lru(&string, capacity) {
            mismatches += 1;
        }
    }
    let elapsed = t.elapsed();
    verdict(
        mismatches == 0 && within(elapsed, 5),
        format!("{mismatches} mismatching strings of 1000, {elapsed:.2?}"),
    )
}

fn static_pattern_benefit() -> Verdict {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.seeds = (1..=5).collect();
    let rows = sweep_h(
        &cfg,
        &[0.0],
        &[PolicyKind::NoClustering, PolicyKind::Prp, PolicyKind::Gp],
    )
    .unwrap();
    let half = |p: PolicyKind, seed: u64| {
        rows.iter()
            .find(|r| r.policy == p && r.seed == seed)
            .unwrap()
            .metrics
            .second_half_io(cfg.num_transactions)
    };
    let mut wins = [0; 2];
    let mut details = Vec::new();
    for seed in 1..=5 {
        let none = half(PolicyKind::NoClustering, seed);
        let prp = half(PolicyKind::Prp, seed);
        let gp = half(PolicyKind::Gp, seed);
        wins[0] += usize::from(prp <= none);
        wins[1] += usize::from(gp <= none);
        details.push(format!("seed {seed}: none {none} prp {prp} gp {gp}"));
    }
    let elapsed = t.elapsed();
    verdict(
        wins[0] >= 4 && wins[1] >= 4 && within(elapsed, 120),
        format!(
            "prp wins {}/5, gp wins {}/5 ({}), {elapsed:.2?}",
            wins[0],
            wins[1],
            details.join("; ")
        ),
    )
}

fn robustness_trend() -> Verdict {
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    let hs = [0.0, 1e-4, 6e-4, 1e-2, 1.0];
    let rows = sweep_h(
        &cfg,
        &hs,
        &[
            PolicyKind::NoClustering,
            PolicyKind::Gp,
            PolicyKind::Aggressive,
        ],
    )
    .unwrap();
    let total = |p: PolicyKind, h: f64| {
        rows.iter()
            .find(|r| r.policy == p && r.h == h)
            .unwrap()
            .metrics
            .total_io as i64
    };
    let gap = |p: PolicyKind, h: f64| total(p, h) - total(PolicyKind::NoClustering, h);
    let aggr_0 = gap(PolicyKind::Aggressive, 0.0);
    let aggr_1 = gap(PolicyKind::Aggressive, 1.0);
    let gp_1 = gap(PolicyKind::Gp, 1.0);
    let elapsed = t.elapsed();
    verdict(
        aggr_1 > aggr_0 && aggr_1 > gp_1 && within(elapsed, 600),
        format!("aggressive gap h=0 {aggr_0}, h=1 {aggr_1}; gp gap h=1 {gp_1}, {elapsed:.2?}"),
    )
}

/// Window crossfade written out directly: the outgoing region falls and
/// the incoming one rises by `incr` per step, both clamped, until both sit
/// on their bounds; then the window moves one region on.
struct StaircaseReference {
    weights: Vec<f64>,
    pos: usize,
    low: f64,
    high: f64,
    incr: f64,
}

impl StaircaseReference {
    fn new(n: usize, low: f64, high: f64, incr: f64) -> Self {
        let mut weights = vec![low; n];
        weights[0] = high;
        Self {
            weights,
            pos: 0,
            low,
            high,
            incr,
        }
    }

    fn step(&mut self) {
        let n = self.weights.len();
        let next = (self.pos + 1) % n;
        let down = self.weights[self.pos] - self.incr;
        self.weights[self.pos] = if down <= self.low + 1e-12 {
            self.low
        } else {
            down
        };
        let up = self.weights[next] + self.incr;
        self.weights[next] = if up >= self.high - 1e-12 {
            self.high
        } else {
            up
        };
        if self.weights[self.pos] == self.low && self.weights[next] == self.high {
            self.pos = next;
        }
    }
}

fn gradual_staircase() -> Verdict {
    let mut cfg = ExperimentConfig::default();
    cfg.regional.protocol = RegionalProtocol::GradualMovingWindow;
    cfg.regional.h = 0.01;
    let g = generate_database(&cfg.db).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dynamics = DynamicsState::new(
        &g,
        cfg.regional.clone(),
        cfg.dependency.clone(),
        false,
        &mut rng,
    )
    .unwrap();
    let n = dynamics.regions().len();
    let r = &cfg.regional;
    let mut reference =
        StaircaseReference::new(n, r.lowest_prob_w, r.highest_prob_w, r.prob_w_incr_size);
    let mut ok = dynamics.regional().weights() == reference.weights;
    let mut steps = 0;
    let mut distinct = HashSet::new();
    for _ in 0..cfg.num_transactions {
        dynamics.next_root(&g, &mut rng).unwrap();
        if dynamics.advance() {
            reference.step();
            steps += 1;
            let w = dynamics.regional().weights();
            ok &= w
                .iter()
                .zip(&reference.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            distinct.extend(w.iter().map(|x| x.to_bits()));
        }
    }
    verdict(
        ok && steps == 100,
        format!(
            "{steps} steps over {n} regions, {} distinct weight values, exact match {ok}",
            distinct.len()
        ),
    )
}

fn hybrid_trace(g: &ObjectGraph, protocol: DependencyProtocol) -> (usize, usize, usize) {
    let mut cfg = ExperimentConfig::default();
    cfg.dependency.protocol = protocol;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut dynamics = DynamicsState::new(
        g,
        cfg.regional.clone(),
        cfg.dependency.clone(),
        false,
        &mut rng,
    )
    .unwrap();
    let mut prev: Option<u32> = None;
    let (mut violations, mut dependent, mut fallbacks) = (0, 0, 0);
    for _ in 0..10_000 {
        let c = dynamics.next_root(g, &mut rng).unwrap();
        if let Some(p) = prev {
            let sound = match protocol {
                DependencyProtocol::ByReference => g.refs(p).iter().any(|r| r.target == c.root),
                _ => g.class_of(p) == g.class_of(c.root),
            };
            if c.phase == Phase::Dependency {
                dependent += 1;
                violations += usize::from(!sound);
            }
            if c.fallback {
                fallbacks += 1;
                let allowed = match protocol {
                    DependencyProtocol::ByReference => g.refs(p).is_empty(),
                    _ => false,
                };
                violations += usize::from(!allowed);
            }
        }
        dynamics.record_traversal(simple_traversal(g, c.root, cfg.traversal_depth).unwrap());
        dynamics.advance();
        prev = Some(c.root);
    }
    (violations, dependent, fallbacks)
}

fn dependency_soundness() -> Verdict {
    let g = generate_database(&ExperimentConfig::default().db).unwrap();
    let (v_ref, d_ref, f_ref) = hybrid_trace(&g, DependencyProtocol::ByReference);
    let (v_cls, d_cls, f_cls) = hybrid_trace(&g, DependencyProtocol::SameClass);
    verdict(
        v_ref == 0 && v_cls == 0 && d_ref > 0 && d_cls > 0,
        format!(
            "by-reference: {d_ref} dependent roots, {f_ref} fallbacks, {v_ref} violations; same-class: {d_cls} dependent roots, {f_cls} fallbacks, {v_cls} violations"
        ),
    )
}

fn sweep_determinism() -> Verdict {
    let cfg = ExperimentConfig::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let files: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let rows = sweep_h(&cfg, &cfg.sweep.h_values, &cfg.sweep.policies).unwrap();
            emit_results(&rows, d.path()).unwrap();
            std::fs::read(d.path().join("results.csv")).unwrap()
        })
        .collect();
    let lines = files[0].iter().filter(|&&b| b == b'\n').count();
    verdict(
        files[0] == files[1],
        format!("{lines} lines, byte-identical {}", files[0] == files[1]),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("database statistics", database_statistics),
        ("hot-region law", hot_region_law),
        ("change cadence", change_cadence),
        ("lru oracle", lru_oracle),
        ("static-pattern clustering benefit", static_pattern_benefit),
        ("robustness trend", robustness_trend),
        ("gradual staircase", gradual_staircase),
        ("dependency soundness", dependency_soundness),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.ok);
        println!(
            "{} {}. {name}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
