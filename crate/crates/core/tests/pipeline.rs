//! Cross-module checks: file round trips, simulation against exact values,
//! and weighting reports against the chain they induce.

use lipwalk::chain::{cheeger_audit, spectral_summary};
use lipwalk::graph::{generate, parse_graph, GraphKind};
use lipwalk::oracle::{exact_srw_cover_time, srw_event_prob, EventSpec};
use lipwalk::walk::{cover_run, estimate_cover_time, WalkSpec};
use lipwalk::weighting::{
    induced_chain, lipschitz_beta, parse_weighting, random_lipschitz_weighting, simple_random_walk,
    target_decay_weighting,
};
use lipwalk::VertexSet;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

fn graph(spec: &str, seed: u64) -> lipwalk::Graph {
    generate(&GraphKind::parse(spec).unwrap(), seed).unwrap()
}

#[test]
fn graph_and_weighting_files_round_trip() {
    let g = graph("random_regular:14:3", 2);
    let back = parse_graph(&g.to_text()).unwrap();
    assert_eq!(back.edges(), g.edges());
    let mut rng = SplitMix64::seed_from_u64(5);
    let (_, w) = random_lipschitz_weighting(&g, 2.0, 40, &mut rng).unwrap();
    let w2 = parse_weighting(&back, &w.to_text(&g)).unwrap();
    for (a, b) in w.weights().iter().zip(w2.weights()) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
    assert!((lipschitz_beta(&g, &w) - lipschitz_beta(&back, &w2)).abs() < 1e-9);
}

#[test]
fn simulated_cover_time_tracks_the_exact_value() {
    let g = graph("cycle:9", 0);
    let exact = exact_srw_cover_time(&g).unwrap();
    let est = estimate_cover_time(&g, &WalkSpec::Srw, 20_000, 31, Some(0)).unwrap();
    let (lo, hi) = (est.ci95_lo, est.ci95_hi);
    let slack = 0.02 * exact[0];
    assert!(
        lo - slack <= exact[0] && exact[0] <= hi + slack,
        "exact {} ci [{lo}, {hi}]",
        exact[0]
    );
}

#[test]
fn simulated_hitting_frequency_tracks_the_dp() {
    let g = graph("cycle:6", 0);
    let horizon = 5;
    let event = EventSpec::hit(6, 3, horizon).unwrap();
    let p = srw_event_prob(&g, 0, &event).unwrap();
    let trials = 40_000u64;
    let mut hits = 0u64;
    for i in 0..trials {
        let mut rng = SplitMix64::seed_from_u64(900 ^ i);
        let mut x = 0usize;
        for _ in 0..horizon {
            let nb = g.neighbours(x);
            x = nb[rand::Rng::random_range(&mut rng, 0..nb.len())];
            if x == 3 {
                hits += 1;
                break;
            }
        }
    }
    let freq = hits as f64 / trials as f64;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((freq - p).abs() < 5.0 * sd, "freq {freq} exact {p}");
}

#[test]
fn uniform_weighting_reproduces_the_simple_walk() {
    let g = graph("circulant:12:1,3", 0);
    let a = spectral_summary(&simple_random_walk(&g)).unwrap();
    let w = target_decay_weighting(&g, &VertexSet::singleton(12, 0).unwrap(), 0.0).unwrap();
    let b = spectral_summary(&induced_chain(&g, &w)).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
}

#[test]
fn decaying_weights_keep_the_cheeger_sandwich() {
    let g = graph("hypercube:3", 0);
    let targets = VertexSet::from_indices(8, [0, 7]).unwrap();
    for theta in [0.1, 0.4, 0.8] {
        let w = target_decay_weighting(&g, &targets, theta).unwrap();
        assert!(cheeger_audit(&induced_chain(&g, &w)).unwrap().holds);
    }
}

#[test]
fn cover_runs_are_reproducible() {
    let g = graph("random_regular:20:3", 8);
    let spec = WalkSpec::Srw;
    assert_eq!(
        cover_run(&g, &spec, 0, 77).unwrap(),
        cover_run(&g, &spec, 0, 77).unwrap()
    );
}
