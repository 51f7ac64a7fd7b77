use cyclewalk_core::breakpoint::{self, SignedGenome};
use cyclewalk_core::par;
use cyclewalk_core::permcycle::CycleIndexMode;
use cyclewalk_core::walk::{self, TimeMode, WalkConfig};

fn config(mode: CycleIndexMode, time_mode: TimeMode) -> WalkConfig {
    WalkConfig {
        seed: 17,
        index_mode: mode,
        time_mode,
        snapshots: vec![0.5, 1.0, 2.0],
        ..WalkConfig::new(300, 2.0)
    }
}

#[test]
fn replicates_do_not_depend_on_worker_order() {
    let cfg = config(CycleIndexMode::Treap, TimeMode::ContinuousPoisson);
    let pooled = walk::run_replicates(&cfg, 40).unwrap();
    let serial = par::replicate_sequential(cfg.seed, 40, |_, rng| walk::run(&cfg, rng).unwrap());
    assert_eq!(pooled, serial);
}

#[test]
fn cycle_index_modes_agree() {
    for time_mode in [TimeMode::Discrete, TimeMode::ContinuousPoisson] {
        let treap = walk::run_replicates(&config(CycleIndexMode::Treap, time_mode), 20).unwrap();
        let traversal = walk::run_replicates(&config(CycleIndexMode::Traversal, time_mode), 20).unwrap();
        assert_eq!(treap, traversal);
    }
}

#[test]
fn seeds_change_the_outcome() {
    let a = walk::run_replicates(&config(CycleIndexMode::Treap, TimeMode::Discrete), 5).unwrap();
    let cfg = WalkConfig { seed: 18, ..config(CycleIndexMode::Treap, TimeMode::Discrete) };
    let b = walk::run_replicates(&cfg, 5).unwrap();
    assert_ne!(a, b);
}

#[test]
fn reversals_sort_the_bundled_genomes() {
    for genome in breakpoint::parse_genomes(breakpoint::MOUSE_X).unwrap() {
        let moves = breakpoint::sort_by_cycle_increasing_reversals(&genome).unwrap();
        let mut g = genome.clone();
        for &(lo, hi) in &moves {
            g.reverse_in_place(lo, hi).unwrap();
        }
        assert!(g.is_identity());
        assert_eq!(moves.len(), genome.d0_lower_bound());
    }
    assert_eq!("1 -2 3".parse::<SignedGenome>().unwrap().d0_lower_bound(), 1);
}
