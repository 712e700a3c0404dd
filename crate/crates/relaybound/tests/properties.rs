//! Randomized invariant checks across the library: decoded configurations
//! stay feasible, closed forms track the path oracle, filters return maximal
//! antichains, the GF(2) decoder is sound, and simulator event logs respect
//! the physical constraints they are supposed to model.

use proptest::prelude::*;
use relaybound::channel::ChannelModel;
use relaybound::coding::{Decoder, Gf2Vec, Insertion};
use relaybound::criteria::{enumerate_paths, evaluate, DEFAULT_MAX_HOPS};
use relaybound::net::{decode, NodeId, Scenario};
use relaybound::pareto::{dominates_min, optimize, pareto_filter_min, OptimizerConfig};
use relaybound::sim::{pool_estimates, simulate, BufferPolicy, EventKind, SimConfig};
use std::collections::HashMap;
use std::sync::OnceLock;

fn channel() -> &'static ChannelModel {
    static CHANNEL: OnceLock<ChannelModel> = OnceLock::new();
    CHANNEL.get_or_init(|| ChannelModel::calibrated().expect("calibration converges"))
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (0..Scenario::ALL.len()).prop_map(|i| Scenario::ALL[i])
}

/// Unit genes in `[0, 1]^8`; each scenario uses its own prefix, scaled into
/// its gene bounds.
fn unit_genome() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 8)
}

fn scale_genome(scenario: Scenario, d_sd: f64, unit: &[f64]) -> Vec<f64> {
    scenario
        .gene_bounds(d_sd)
        .iter()
        .zip(unit)
        .map(|(&(lo, hi), u)| lo + u * (hi - lo))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoded_solutions_are_feasible_and_within_bounds(
        scenario in scenario_strategy(),
        unit in unit_genome(),
        d_sd in prop_oneof![Just(310.0f64), Just(620.0f64)],
    ) {
        let genome = scale_genome(scenario, d_sd, &unit);
        let sol = decode(scenario, &genome, channel(), d_sd);
        prop_assert!(sol.feasibility.is_feasible(), "{:?}", sol.feasibility);
        prop_assert!(!sol.genome_clamped);
        for &relay in scenario.relays() {
            let (x, y) = sol.topology.position(relay);
            prop_assert!((0.0..=d_sd).contains(&x));
            prop_assert!((-d_sd / 2.0..=d_sd / 2.0).contains(&y));
        }
        for p in [
            sol.forwarding.source_to_a,
            sol.forwarding.source_to_b,
            sol.forwarding.a_to_b,
            sol.forwarding.b_to_a,
        ] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        for node in NodeId::ALL {
            prop_assert!(sol.rate(node) >= 0.0);
        }
    }

    #[test]
    fn out_of_range_genes_decode_like_their_clamped_values(
        scenario in scenario_strategy(),
        unit in prop::collection::vec(-0.5f64..=1.5, 8),
    ) {
        let d_sd = 620.0;
        let raw = scale_genome(scenario, d_sd, &unit);
        let bounds = scenario.gene_bounds(d_sd);
        let clamped: Vec<f64> = raw
            .iter()
            .zip(&bounds)
            .map(|(&g, &(lo, hi))| g.clamp(lo, hi))
            .collect();
        let a = decode(scenario, &raw, channel(), d_sd);
        let b = decode(scenario, &clamped, channel(), d_sd);
        prop_assert_eq!(a.genome_clamped, raw != clamped);
        prop_assert_eq!(a.topology, b.topology);
        prop_assert_eq!(a.forwarding, b.forwarding);
        prop_assert_eq!(a.rates, b.rates);
    }

    #[test]
    fn closed_forms_track_the_path_oracle(
        scenario in scenario_strategy(),
        unit in unit_genome(),
        d_sd in prop_oneof![Just(310.0f64), Just(620.0f64)],
    ) {
        let genome = scale_genome(scenario, d_sd, &unit);
        let sol = decode(scenario, &genome, channel(), d_sd);
        let m = evaluate(&sol);
        let o = enumerate_paths(&sol, DEFAULT_MAX_HOPS);
        let tau = sol.rate(NodeId::Source);
        prop_assert!((m.capacity - o.capacity).abs() <= 1e-9 + o.tail_capacity);
        prop_assert!((m.delay_mass - o.delay_mass).abs() <= 1e-9 + o.tail_delay_mass);
        prop_assert!((m.energy - o.energy(tau)).abs() <= 1e-9 + o.tail_relay_tx / tau);
        if let (Some(r), Some(miss)) = (m.reliability, o.miss) {
            prop_assert!((r - (1.0 - miss)).abs() <= 1e-9);
        }
    }

    #[test]
    fn reliability_never_exceeds_capacity_or_one(
        scenario in scenario_strategy(),
        unit in unit_genome(),
        d_sd in prop_oneof![Just(310.0f64), Just(620.0f64)],
    ) {
        let genome = scale_genome(scenario, d_sd, &unit);
        let sol = decode(scenario, &genome, channel(), d_sd);
        let m = evaluate(&sol);
        prop_assert_eq!(m.reliability.is_none(), scenario == Scenario::TwoRelayExchange);
        if let Some(r) = m.reliability {
            prop_assert!((0.0..=1.0).contains(&r));
            // Distinct deliveries are a subset of all deliveries; the slack
            // covers cancellation in the product form at tiny capacities.
            prop_assert!(r <= m.capacity + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pareto_filter_returns_the_maximal_antichain(
        pts in prop::collection::vec(prop::collection::vec(0..6u8, 3), 1..200),
    ) {
        let points: Vec<Vec<f64>> =
            pts.iter().map(|p| p.iter().map(|&v| f64::from(v) / 2.0).collect()).collect();
        let kept = pareto_filter_min(&points);
        for (ki, &i) in kept.iter().enumerate() {
            for &j in &kept[ki + 1..] {
                prop_assert!(!dominates_min(&points[i], &points[j]));
                prop_assert!(!dominates_min(&points[j], &points[i]));
            }
        }
        for i in 0..points.len() {
            if !kept.contains(&i) {
                prop_assert!(
                    kept.iter().any(|&k| dominates_min(&points[k], &points[i])),
                    "dropped point {i} is not dominated"
                );
            }
        }
    }

    #[test]
    fn gf2_xor_is_an_involution(
        len in 1usize..200,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let a = Gf2Vec::random_nonzero(&mut rng, len);
        let b = Gf2Vec::random_nonzero(&mut rng, len);
        let mut x = a.clone();
        x.xor_assign(&b);
        x.xor_assign(&b);
        prop_assert_eq!(&x, &a);
        x.xor_assign(&a);
        prop_assert!(x.is_zero());
        prop_assert!(a.first_set().unwrap() < len);
    }

    #[test]
    fn decoder_rank_is_monotone_and_payloads_come_back(
        k in 4usize..24,
        seed in any::<u64>(),
    ) {
        use rand::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let fragments: Vec<u64> = (0..k).map(|_| rng.next_u64()).collect();
        let mut decoder = Decoder::new(k);
        let mut last_rank = 0;
        let mut inserted = 0;
        while !decoder.is_complete() {
            let coeff = Gf2Vec::random_nonzero(&mut rng, k);
            let payload = (0..k)
                .filter(|&i| coeff.get(i))
                .fold(0u64, |acc, i| acc ^ fragments[i]);
            let outcome = decoder.insert_with_payload(coeff, payload);
            prop_assert!(decoder.rank() >= last_rank);
            prop_assert!(decoder.rank() <= k);
            if outcome == Insertion::Redundant {
                prop_assert_eq!(decoder.rank(), last_rank);
            } else {
                prop_assert_eq!(decoder.rank(), last_rank + 1);
            }
            last_rank = decoder.rank();
            inserted += 1;
            prop_assert!(inserted < 40 * k + 200, "decoder failed to complete");
        }
        prop_assert_eq!(decoder.solve_payloads().unwrap(), fragments);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn event_logs_respect_duplex_conservation_and_hop_accounting(
        scenario in scenario_strategy(),
        unit in unit_genome(),
        seed in any::<u64>(),
        single_newest in any::<bool>(),
    ) {
        let d_sd = 620.0;
        let genome = scale_genome(scenario, d_sd, &unit);
        let sol = decode(scenario, &genome, channel(), d_sd);
        let cfg = SimConfig {
            frames: 120,
            seed,
            record_events: true,
            buffer: if single_newest { BufferPolicy::SingleNewest } else { BufferPolicy::Lossless },
            ..SimConfig::default()
        };
        let run = simulate(&sol, channel(), &cfg);
        prop_assert_eq!(run.estimates.source_tx, 120);
        prop_assert!(run.estimates.reliability <= 1.0);

        let mut tx_per_pair: HashMap<(NodeId, u64), i64> = HashMap::new();
        for e in &run.events {
            match e.kind {
                EventKind::Transmit => {
                    prop_assert!(e.hops >= 1);
                    if e.node != NodeId::Source {
                        *tx_per_pair.entry((e.node, e.packet)).or_insert(0) += 1;
                    }
                }
                EventKind::Receive { from } => {
                    // Half duplex: the receiver is silent in that very slot.
                    prop_assert!(!run.events.iter().any(|t| t.kind == EventKind::Transmit
                        && t.node == e.node
                        && t.frame == e.frame
                        && t.slot == e.slot));
                    prop_assert!(from != e.node);
                }
            }
        }
        // A relay can only transmit copies it actually received.
        for (&(node, packet), &tx) in &tx_per_pair {
            let rx = run
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::Receive { .. })
                    && e.node == node
                    && e.packet == packet)
                .count() as i64;
            prop_assert!(tx <= rx, "{node:?} sent packet {packet} {tx} times, received {rx}");
        }
        if single_newest {
            // At most one packet leaves a relay per frame.
            let mut per_frame: HashMap<(NodeId, u64), u32> = HashMap::new();
            for e in &run.events {
                if e.kind == EventKind::Transmit && e.node != NodeId::Source {
                    *per_frame.entry((e.node, e.frame)).or_insert(0) += 1;
                }
            }
            prop_assert!(per_frame.values().all(|&n| n <= 1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn tiny_optimizer_runs_return_feasible_nondominated_fronts(
        scenario in scenario_strategy(),
        seed in any::<u64>(),
    ) {
        let cfg = OptimizerConfig {
            population: 12,
            generations: 4,
            seed,
            ..OptimizerConfig::default()
        };
        let front = optimize(scenario, channel(), 620.0, &cfg);
        prop_assert!(!front.is_empty());
        let bounds = scenario.gene_bounds(620.0);
        for ind in &front {
            prop_assert!(ind.feasible);
            for (g, &(lo, hi)) in ind.genome.iter().zip(&bounds) {
                prop_assert!((lo..=hi).contains(g));
            }
        }
        for (i, a) in front.iter().enumerate() {
            for (j, b) in front.iter().enumerate() {
                if i != j {
                    prop_assert!(!dominates_min(&a.objectives, &b.objectives));
                }
            }
        }
    }
}

#[test]
fn pooling_three_runs_reproduces_summed_counts() {
    let ch = channel();
    let sol = decode(Scenario::TwoRelayDedicated, &[300.0, 30.0, 320.0, -30.0, 0.8, 0.6], ch, 620.0);
    let estimates: Vec<_> = (0..3)
        .map(|s| simulate(&sol, ch, &SimConfig { frames: 500, seed: 70 + s, ..Default::default() }).estimates)
        .collect();
    let pooled = pool_estimates(&estimates);
    assert_eq!(pooled.source_tx, estimates.iter().map(|e| e.source_tx).sum::<u64>());
    assert_eq!(pooled.deliveries, estimates.iter().map(|e| e.deliveries).sum::<u64>());
    assert_eq!(pooled.frames_injected, 1500);
    assert!(pooled.capacity > 0.0);
}
