use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shiftbench_core::dynamics::{select_root, HRegionSpec, HRegionState};
use shiftbench_core::harness::RunOptions;
use shiftbench_core::objectbase::{dump_graph, load_graph};
use shiftbench_core::{
    analyze_trace, generate_database, run_on_graph, AssignMethod, DependencyProtocol, Direction,
    ExperimentConfig, ObjectGraph, PolicyKind, RegionalProtocol,
};

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.db.num_objects = 4_000;
    c.storage.buffer_bytes = 48 * 4096;
    c.regional.hr_size = 0.02;
    c.num_transactions = 1_200;
    c
}

fn small_graph() -> ObjectGraph {
    generate_database(&small_config().db).unwrap()
}

#[test]
fn default_database_survives_text_round_trip() {
    let g = generate_database(&ExperimentConfig::default().db).unwrap();
    let back = load_graph(&dump_graph(&g)).unwrap();
    assert_eq!(dump_graph(&back), dump_graph(&g));
    assert_eq!(back.total_bytes(), g.total_bytes());
}

#[test]
fn every_protocol_combination_runs() {
    let g = small_graph();
    for protocol in [
        RegionalProtocol::MovingWindow,
        RegionalProtocol::GradualMovingWindow,
        RegionalProtocol::CyclesOfChange,
    ] {
        for dependency in [
            DependencyProtocol::RandomSel,
            DependencyProtocol::ByReference,
            DependencyProtocol::TraversedObjects,
            DependencyProtocol::SameClass,
        ] {
            for integration in [false, true] {
                let mut c = small_config();
                c.regional.protocol = protocol;
                c.regional.h = 0.01;
                c.dependency.protocol = dependency;
                c.integration = integration;
                c.policy.kind = PolicyKind::Gp;
                let m = run_on_graph(&c, &g, RunOptions::default()).unwrap().metrics;
                assert_eq!(m.total_io, m.transaction_io + m.clustering_io);
                assert_eq!(m.change_steps, 12);
            }
        }
    }
}

#[test]
fn hybrid_first_phase_hot_law() {
    let mut c = ExperimentConfig::default();
    c.dependency.protocol = DependencyProtocol::SameClass;
    c.num_transactions = 60_000;
    let g = generate_database(&c.db).unwrap();
    let opts = RunOptions {
        record_roots: true,
        record_pages: false,
    };
    let out = run_on_graph(&c, &g, opts).unwrap();
    let s = analyze_trace(&out.roots, &out.regions).unwrap();
    assert_eq!(s.total, 10_000);
    assert!(s.passes(0.03, 0.02), "{s:?}");
}

#[test]
fn two_region_shares_follow_weights() {
    let spec = HRegionSpec {
        hr_size: 0.5,
        init_prob_w: 1.0,
        lowest_prob_w: 0.0,
        highest_prob_w: 3.0,
        prob_w_incr_size: 0.0,
        object_assign_method: AssignMethod::Random,
        init_dir: Direction::Down,
    };
    let regions = vec![
        HRegionState {
            spec: spec.clone(),
            members: (0..50).collect(),
            weight: 3.0,
            dir: Direction::Down,
        },
        HRegionState {
            spec,
            members: (50..100).collect(),
            weight: 1.0,
            dir: Direction::Down,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws = 100_000;
    let hot = (0..draws)
        .filter(|_| select_root(&regions, &mut rng).unwrap().0 == 0)
        .count();
    let share = hot as f64 / draws as f64;
    // Binomial standard deviation is about 0.0014.
    assert!((share - 0.75).abs() < 0.007, "{share}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_reproducible_and_conserve_io(
        seed in 0u64..1000,
        h in prop::sample::select(vec![0.0, 0.001, 0.05, 1.0]),
        policy in prop::sample::select(PolicyKind::ALL.to_vec()),
    ) {
        let g = small_graph();
        let mut c = small_config();
        c.seed = seed;
        c.regional.h = h;
        c.policy.kind = policy;
        c.policy.min_observations = 200;
        let a = run_on_graph(&c, &g, RunOptions::default()).unwrap().metrics;
        let b = run_on_graph(&c, &g, RunOptions::default()).unwrap().metrics;
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total_io, a.transaction_io + a.clustering_io);
        prop_assert!(a.hit_rate >= 0.0 && a.hit_rate <= 1.0);
        if policy == PolicyKind::NoClustering {
            prop_assert_eq!(a.clustering_io, 0);
        }
    }
}
