//! End-to-end acceptance gate for the toolkit. Each numbered check prints a
//! single PASS or FAIL line; the process exits nonzero if any check fails.
//!
//! The checks cover, in order: agreement between the closed-form criteria and
//! an independent path-enumeration oracle; the algebraically exact
//! relay-exchange reference point and the optimizer's ability to reach it;
//! channel calibration; known landmark points on the optimized fronts;
//! agreement between the analytic criteria and the frame simulator; fountain
//! decoding overhead; the coded-relaying bound gap; and a batch of structural
//! properties (Pareto filtering, decoder round trips, event-log conservation
//! laws, and the ordering between capacity and reliability).
//!
//! Full scale takes several minutes on one core. Set
//! `RELAYBOUND_ACCEPTANCE_FAST=1` for a reduced development run with wider
//! tolerances; the header line records which mode produced the output.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use relaybound::analysis::{generational_distance, relative_rmse, SIM_COMPARE_CAPACITY_FLOOR};
use relaybound::channel::ChannelModel;
use relaybound::child_seed;
use relaybound::coding::{
    coded_average, ideal_excess_trials, CodedConfig, CodingStrategy, Decoder, Gf2Vec,
};
use relaybound::criteria::{enumerate_paths, evaluate, DEFAULT_MAX_HOPS};
use relaybound::net::{
    decode, standard_cases, Forwarding, NodeId, Scenario, Solution, StudyCase, Topology,
    MAX_SLOTS, NODE_COUNT,
};
use relaybound::pareto::{
    derive_bounds, optimize, pareto_filter_min, Individual, OptimizerConfig,
};
use relaybound::sim::{
    pool_estimates, simulate, BufferPolicy, EventKind, SimConfig, SimEstimates,
};

/// Sampling sizes and tolerances for one run of the gate.
struct Scale {
    fast: bool,
    oracle_samples: usize,
    population: usize,
    generations: usize,
    seeds: Vec<u64>,
    /// Multiplier on the landmark tolerances (1 at full scale).
    tol: f64,
    sim_frames: u64,
    sim_seeds: u64,
    rmse_budget: f64,
    excess_trials: u64,
    excess_trials_large_k: u64,
    overhead_tol: f64,
    coding_seeds: u64,
    coding_max_solutions: usize,
    pareto_instances: usize,
    pareto_max_n: usize,
    roundtrips: usize,
    event_sims: usize,
    order_samples_per_case: usize,
}

impl Scale {
    fn from_env() -> Scale {
        let fast = std::env::var("RELAYBOUND_ACCEPTANCE_FAST")
            .is_ok_and(|v| !v.is_empty() && v != "0");
        if fast {
            Scale {
                fast,
                oracle_samples: 1_000,
                population: 100,
                generations: 250,
                seeds: vec![1, 2],
                tol: 2.0,
                sim_frames: 2_000,
                sim_seeds: 2,
                rmse_budget: 2e-2,
                excess_trials: 2_000,
                excess_trials_large_k: 500,
                overhead_tol: 1.0,
                coding_seeds: 8,
                coding_max_solutions: 40,
                pareto_instances: 20,
                pareto_max_n: 400,
                roundtrips: 100,
                event_sims: 20,
                order_samples_per_case: 400,
            }
        } else {
            Scale {
                fast,
                oracle_samples: 10_000,
                population: 300,
                generations: 1_000,
                seeds: vec![1, 2, 3],
                tol: 1.0,
                sim_frames: 10_000,
                sim_seeds: 5,
                rmse_budget: 5e-3,
                excess_trials: 10_000,
                excess_trials_large_k: 4_000,
                overhead_tol: 0.5,
                coding_seeds: 50,
                coding_max_solutions: 150,
                pareto_instances: 100,
                pareto_max_n: 2_000,
                roundtrips: 1_000,
                event_sims: 100,
                order_samples_per_case: 2_000,
            }
        }
    }
}

type Fronts = BTreeMap<(usize, u64), Vec<Individual>>;

fn random_genome(rng: &mut ChaCha12Rng, scenario: Scenario, d_sd: f64) -> Vec<f64> {
    scenario
        .gene_bounds(d_sd)
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..=hi))
        .collect()
}

/// The relay-exchange configuration specified directly by its link table:
/// no direct path, half-probability uplinks and downlinks, a perfect
/// inter-relay link, and the exchange genes throttled to 0.95.
fn exchange_reference_solution() -> Solution {
    let scenario = Scenario::TwoRelayExchange;
    let mut effective = [[[0.0; MAX_SLOTS]; NODE_COUNT]; NODE_COUNT];
    let set = |a: NodeId, b: NodeId, p: f64, t: &mut [[[f64; MAX_SLOTS]; NODE_COUNT]; NODE_COUNT]| {
        t[a.index()][b.index()][scenario.tx_slot(a).unwrap()] = p;
    };
    set(NodeId::Source, NodeId::Dest, 0.0, &mut effective);
    set(NodeId::Source, NodeId::RelayA, 0.5, &mut effective);
    set(NodeId::Source, NodeId::RelayB, 0.5, &mut effective);
    set(NodeId::RelayA, NodeId::Dest, 0.5, &mut effective);
    set(NodeId::RelayB, NodeId::Dest, 0.5, &mut effective);
    set(NodeId::RelayA, NodeId::RelayB, 1.0, &mut effective);
    set(NodeId::RelayB, NodeId::RelayA, 1.0, &mut effective);
    let mut rates = [[0.0; MAX_SLOTS]; NODE_COUNT];
    rates[NodeId::Source.index()][0] = 1.0;
    Solution {
        topology: Topology::new(scenario, 620.0, &[(100.0, 0.0), (200.0, 0.0)]),
        forwarding: Forwarding {
            source_to_a: 1.0,
            source_to_b: 1.0,
            a_to_b: 0.95,
            b_to_a: 0.95,
        },
        rates,
        effective,
        conditional: effective,
        genome_clamped: false,
        exchange_clamped: false,
        feasibility: Default::default(),
    }
}

fn compute_fronts(
    channel: &ChannelModel,
    scale: &Scale,
) -> (Fronts, BTreeMap<(usize, u64), f64>) {
    let mut fronts = Fronts::new();
    let mut durations = BTreeMap::new();
    let cases = standard_cases();
    for (ci, case) in cases.iter().enumerate() {
        for &seed in &scale.seeds {
            let cfg = OptimizerConfig {
                population: scale.population,
                generations: scale.generations,
                seed,
                ..OptimizerConfig::default()
            };
            let start = Instant::now();
            let front = optimize(case.scenario, channel, case.d_sd, &cfg);
            let secs = start.elapsed().as_secs_f64();
            eprintln!(
                "[setup] front {} seed {}: {} points in {:.1}s",
                case.label(),
                seed,
                front.len(),
                secs
            );
            durations.insert((ci, seed), secs);
            fronts.insert((ci, seed), front);
        }
    }
    (fronts, durations)
}

fn check_oracle(channel: &ChannelModel, scale: &Scale) -> Result<String, String> {
    let mut worst = f64::NEG_INFINITY;
    let mut slowest = 0.0f64;
    let mut reliability_compared = 0usize;
    for (ci, case) in standard_cases().iter().enumerate() {
        let start = Instant::now();
        let mut rng = ChaCha12Rng::seed_from_u64(child_seed(0xACC1, ci as u64));
        for _ in 0..scale.oracle_samples {
            let genome = random_genome(&mut rng, case.scenario, case.d_sd);
            let sol = decode(case.scenario, &genome, channel, case.d_sd);
            if !sol.feasibility.is_feasible() {
                return Err(format!("{}: sampled an infeasible decode", case.label()));
            }
            let m = evaluate(&sol);
            let o = enumerate_paths(&sol, DEFAULT_MAX_HOPS);
            let tau = sol.rate(NodeId::Source);
            let devs = [
                (m.capacity - o.capacity).abs() - o.tail_capacity,
                (m.delay_mass - o.delay_mass).abs() - o.tail_delay_mass,
                (m.energy - o.energy(tau)).abs() - o.tail_relay_tx / tau,
            ];
            for (axis, dev) in ["capacity", "delay mass", "energy"].iter().zip(devs) {
                worst = worst.max(dev);
                if dev > 1e-8 {
                    return Err(format!(
                        "{}: {} differs from the oracle by {:.3e} beyond the certified tail",
                        case.label(),
                        axis,
                        dev
                    ));
                }
            }
            if let (Some(r), Some(miss)) = (m.reliability, o.miss) {
                reliability_compared += 1;
                let dev = (r - (1.0 - miss)).abs();
                worst = worst.max(dev);
                if dev > 1e-8 {
                    return Err(format!(
                        "{}: reliability differs from the oracle by {:.3e}",
                        case.label(),
                        dev
                    ));
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        if secs >= 60.0 {
            return Err(format!(
                "{} took {:.1}s of a 60s per-case budget",
                case.label(),
                secs
            ));
        }
    }
    Ok(format!(
        "{} samples per case agree within 1e-8 plus tails (worst {:.1e}); {} reliability comparisons; slowest case {:.1}s",
        scale.oracle_samples, worst, reliability_compared, slowest
    ))
}

fn check_exchange_reference(scale: &Scale, fronts: &Fronts) -> Result<String, String> {
    let m = evaluate(&exchange_reference_solution());
    let exact = [(m.capacity, 10.0), (m.delay, 21.0), (m.energy, 21.0)];
    for (got, want) in exact {
        if (got - want).abs() > 1e-9 {
            return Err(format!(
                "hand-built link table gave ({:.12}, {:.12}, {:.12}), wanted (10, 21, 21) to 1e-9",
                m.capacity, m.delay, m.energy
            ));
        }
    }
    if m.reliability.is_some() {
        return Err("relay exchange unexpectedly reported a distinct-delivery rate".into());
    }

    // The optimizer should rediscover the colocated-midpoint optimum from
    // geometry alone, on every seed.
    let target = [10.16, 21.00, 21.15];
    let tol = 0.05 * scale.tol;
    let mut worst_seed = 0u64;
    let mut worst = 0.0f64;
    for &seed in &scale.seeds {
        let front = &fronts[&(4, seed)];
        let best = front
            .iter()
            .map(|ind| {
                let m = &ind.metrics;
                let rel = [
                    (m.capacity - target[0]).abs() / target[0],
                    (m.delay - target[1]).abs() / target[1],
                    (m.energy - target[2]).abs() / target[2],
                ];
                rel.into_iter().fold(0.0f64, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if best > worst {
            worst = best;
            worst_seed = seed;
        }
    }
    if worst > tol {
        return Err(format!(
            "seed {} came no closer than {:.1}% to (10.16, 21.0, 21.15); budget {:.0}%",
            worst_seed,
            worst * 100.0,
            tol * 100.0
        ));
    }
    Ok(format!(
        "link-table point exact to 1e-9; every seed within {:.1}% of (10.16, 21.0, 21.15), budget {:.0}%",
        worst * 100.0,
        tol * 100.0
    ))
}

fn check_calibration(channel: &ChannelModel) -> Result<String, String> {
    let p = |d: f64| channel.link_success(d, &[]).map_err(|e| e.to_string());
    let p310 = p(310.0)?;
    let p620 = p(620.0)?;
    let p155 = p(155.0)?;
    if (p310 - 0.504).abs() > 1e-3 {
        return Err(format!("p(310 m) = {:.6}, wanted 0.504 within 1e-3", p310));
    }
    if p620 > 0.01 {
        return Err(format!("p(620 m) = {:.3e} exceeds 0.01", p620));
    }
    if p155 < 0.99 {
        return Err(format!("p(155 m) = {:.6} is below 0.99", p155));
    }
    Ok(format!(
        "p(155 m) = {:.6}, p(310 m) = {:.6}, p(620 m) = {:.1e}",
        p155, p310, p620
    ))
}

fn near(point: [f64; 2], target: [f64; 2], tol: f64) -> bool {
    (point[0] - target[0]).abs() <= tol && (point[1] - target[1]).abs() <= tol
}

fn plane_points(plane: &[(usize, [f64; 2])]) -> Vec<[f64; 2]> {
    plane.iter().map(|&(_, p)| p).collect()
}

/// Runs one landmark family across all seeds; `Ok` means every seed holds.
fn per_seed<F>(seeds: &[u64], mut check: F) -> Result<(), String>
where
    F: FnMut(u64) -> Result<(), String>,
{
    for &seed in seeds {
        check(seed)?;
    }
    Ok(())
}

fn check_landmarks(
    channel: &ChannelModel,
    scale: &Scale,
    fronts: &Fronts,
    durations: &BTreeMap<(usize, u64), f64>,
) -> Result<String, String> {
    let cases = standard_cases();
    let mut slowest = 0.0f64;
    for (&key, &secs) in durations {
        slowest = slowest.max(secs);
        if secs > 600.0 {
            return Err(format!(
                "optimizer run {} seed {} took {:.0}s of a 600s budget",
                cases[key.0].label(),
                key.1,
                secs
            ));
        }
    }

    let t = scale.tol;
    let seeds = &scale.seeds;
    // Each family is checked on every seed; failures are collected so one
    // family cannot mask another.
    let families: Vec<(&str, Result<(), String>)> = vec![
        (
            "far single relay peak (0.25, 2, 1.5)",
            per_seed(seeds, |seed| {
                let front = &fronts[&(0, seed)];
                let best = front
                    .iter()
                    .max_by(|a, b| a.metrics.capacity.partial_cmp(&b.metrics.capacity).unwrap())
                    .ok_or_else(|| format!("seed {seed}: empty front"))?;
                let got = [best.metrics.capacity, best.metrics.delay, best.metrics.energy];
                let want = [0.25, 2.0, 1.5];
                if got.iter().zip(want).any(|(g, w)| (g - w).abs() > 0.01 * t) {
                    return Err(format!(
                        "seed {seed}: peak ({:.4}, {:.4}, {:.4}) missed by more than {}",
                        got[0], got[1], got[2], 0.01 * t
                    ));
                }
                Ok(())
            }),
        ),
        (
            "near single relay per-delivery knee (1.5, 1.5)",
            per_seed(seeds, |seed| {
                let b = derive_bounds(fronts[&(1, seed)].clone());
                if plane_points(&b.capacity_norm_optimal)
                    .iter()
                    .any(|&p| near(p, [1.5, 1.5], 0.05 * t))
                {
                    Ok(())
                } else {
                    Err(format!("seed {seed}: no point within {}", 0.05 * t))
                }
            }),
        ),
        (
            "near single relay distinct-delivery corner (2, 2)",
            per_seed(seeds, |seed| {
                let b = derive_bounds(fronts[&(1, seed)].clone());
                let br = b
                    .reliability_norm_optimal
                    .as_ref()
                    .ok_or_else(|| format!("seed {seed}: plane missing"))?;
                if plane_points(br).iter().any(|&p| near(p, [2.0, 2.0], 0.05 * t)) {
                    Ok(())
                } else {
                    Err(format!("seed {seed}: no point within {}", 0.05 * t))
                }
            }),
        ),
        (
            "shared-slot single relay silent optimum (1.98, 1.98)",
            per_seed(seeds, |seed| {
                let b = derive_bounds(fronts[&(2, seed)].clone());
                if plane_points(&b.capacity_norm_optimal)
                    .iter()
                    .any(|&p| near(p, [1.98, 1.98], 0.05 * t))
                {
                    Ok(())
                } else {
                    Err(format!("seed {seed}: no point within {}", 0.05 * t))
                }
            }),
        ),
        (
            "dedicated two-relay knee (3.93, 3.93)",
            per_seed(seeds, |seed| {
                let b = derive_bounds(fronts[&(3, seed)].clone());
                if plane_points(&b.capacity_norm_optimal)
                    .iter()
                    .any(|&p| near(p, [3.93, 3.93], 0.1 * t))
                {
                    Ok(())
                } else {
                    Err(format!("seed {seed}: no point within {}", 0.1 * t))
                }
            }),
        ),
        (
            "shared-slot two-relay fronts use one relay",
            per_seed(seeds, |seed| {
                let front = &fronts[&(5, seed)];
                let mut offenders = 0usize;
                let mut best_two = 0.0f64;
                let mut best_single = 0.0f64;
                for ind in front {
                    let sol = decode(cases[5].scenario, &ind.genome, channel, cases[5].d_sd);
                    let both = sol.rate(NodeId::RelayA) > 0.01 && sol.rate(NodeId::RelayB) > 0.01;
                    if both {
                        offenders += 1;
                        best_two = best_two.max(ind.metrics.capacity);
                    } else {
                        best_single = best_single.max(ind.metrics.capacity);
                    }
                }
                if offenders > 0 {
                    return Err(format!(
                        "seed {seed}: {offenders}/{} front points keep both relays active; \
                         two-active capacity reaches {:.4} vs {:.4} for the best \
                         single-relay point kept on this front (part-time relays \
                         collide rarely enough that the diversity gain is real, and \
                         the frame simulator confirms it)",
                        front.len(),
                        best_two,
                        best_single
                    ));
                }
                Ok(())
            }),
        ),
    ];

    let failures: Vec<String> = families
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    let held = families.len() - failures.len();
    if failures.is_empty() {
        Ok(format!(
            "all {} landmark families hold on every seed; slowest optimizer run {:.0}s of a 600s budget",
            families.len(),
            slowest
        ))
    } else {
        Err(format!(
            "{held} of {} landmark families hold; {}",
            families.len(),
            failures.join(" | ")
        ))
    }
}

fn check_simulator_agreement(
    channel: &ChannelModel,
    scale: &Scale,
    fronts: &Fronts,
) -> Result<String, String> {
    let axis_names = ["capacity", "delay", "energy"];
    // The floor keeps only entries whose pooled delivery count is large
    // enough (about fifty) for a relative comparison to mean anything; at the
    // reference budget of 5 x 10,000 frames it coincides with the library
    // constant.
    let total_frames = (scale.sim_frames * scale.sim_seeds) as f64;
    let floor = SIM_COMPARE_CAPACITY_FLOOR.max(50.0 / total_frames);
    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    let mut worst_z = 0.0f64;
    let mut worst_z_label = String::new();
    let mut shared_z_min = f64::INFINITY;
    let mut shared_z_max = f64::NEG_INFINITY;
    let mut shared_entries = 0usize;
    let mut excluded = 0usize;
    let mut excluded_rel = 0usize;
    let mut compared_entries = 0usize;
    for (ci, case) in standard_cases().iter().enumerate() {
        let front = &fronts[&(ci, scale.seeds[0])];
        // A shared slot couples the path families, so the closed-form
        // reliability is an independence approximation there, with a
        // coupling-dependent sign; see the criteria documentation. Those
        // entries are measured but not gated.
        let shared_slot = matches!(
            case.scenario,
            Scenario::OneRelayShared | Scenario::TwoRelayShared
        );
        let mut refs: [Vec<f64>; 3] = Default::default();
        let mut ests: [Vec<f64>; 3] = Default::default();
        let mut z_sq = Vec::new();
        for (ei, ind) in front.iter().enumerate() {
            if ind.metrics.capacity < floor {
                excluded += 1;
                continue;
            }
            compared_entries += 1;
            let sol = decode(case.scenario, &ind.genome, channel, case.d_sd);
            let runs: Vec<SimEstimates> = (0..scale.sim_seeds)
                .map(|s| {
                    let cfg = SimConfig {
                        frames: scale.sim_frames,
                        seed: child_seed(0xACC5 + ci as u64, (ei as u64) * 64 + s),
                        ..SimConfig::default()
                    };
                    simulate(&sol, channel, &cfg).estimates
                })
                .collect();
            let est = pool_estimates(&runs);
            refs[0].push(ind.metrics.capacity);
            ests[0].push(est.capacity);
            refs[1].push(ind.metrics.delay);
            ests[1].push(est.delay.unwrap_or(0.0));
            refs[2].push(ind.metrics.energy);
            ests[2].push(est.energy);
            // Reliability is a per-packet proportion, so a fixed relative
            // band cannot test it: at r around one half the binomial noise
            // floor over these samples already matches the budget. Where the
            // closed form is exact (every transmitter owns its slot) it is
            // gated on its z-score against the exact standard error, which
            // catches estimator bias at any scale; the distinct-delivery
            // counting is the same code everywhere, so that gate covers the
            // estimator. Shared-slot entries compare the simulator against an
            // acknowledged approximation, so their deviation range is
            // reported without a gate. Entries expecting fewer than fifty
            // deliveries or fifty misses stay out, as the normal
            // approximation has no support in a starved tail.
            if let Some(r) = ind.metrics.reliability {
                if r.min(1.0 - r) * total_frames >= 50.0 {
                    let se = (r * (1.0 - r) / total_frames).sqrt();
                    let z = (est.reliability - r) / se;
                    if shared_slot {
                        shared_entries += 1;
                        shared_z_min = shared_z_min.min(z);
                        shared_z_max = shared_z_max.max(z);
                    } else {
                        z_sq.push(z * z);
                    }
                } else {
                    excluded_rel += 1;
                }
            }
        }
        for axis in 0..3 {
            if refs[axis].is_empty() {
                continue;
            }
            let rep = relative_rmse(&refs[axis], &ests[axis]);
            if rep.rmse > worst {
                worst = rep.rmse;
                worst_label = format!("{} {}", case.label(), axis_names[axis]);
            }
            if rep.rmse > scale.rmse_budget {
                return Err(format!(
                    "{} {} rmse {:.2e} over {} entries exceeds {:.0e}",
                    case.label(),
                    axis_names[axis],
                    rep.rmse,
                    rep.compared,
                    scale.rmse_budget
                ));
            }
        }
        if !z_sq.is_empty() {
            let z_rmse = (z_sq.iter().sum::<f64>() / z_sq.len() as f64).sqrt();
            if z_rmse > worst_z {
                worst_z = z_rmse;
                worst_z_label = case.label();
            }
            if z_rmse > 2.0 {
                return Err(format!(
                    "{} reliability z-rmse {:.2} over {} entries exceeds 2.0 (an unbiased estimator concentrates near 1)",
                    case.label(),
                    z_rmse,
                    z_sq.len()
                ));
            }
        }
    }
    let shared_note = if shared_entries > 0 {
        format!(
            "{} shared-slot entries deviate from the independence approximation by z in [{:+.1}, {:+.1}] (ungated)",
            shared_entries, shared_z_min, shared_z_max
        )
    } else {
        "no shared-slot reliability entries".to_string()
    };
    Ok(format!(
        "{} front entries simulated ({} x {} frames each); worst rmse {:.1e} ({}), budget {:.0e}; exact-reliability z-rmse peaks at {:.2} ({}), budget 2.0; {}; excluded: {} entries under the {:.0e} capacity floor, {} starved reliability tails",
        compared_entries,
        scale.sim_seeds,
        scale.sim_frames,
        worst,
        worst_label,
        scale.rmse_budget,
        worst_z,
        worst_z_label,
        shared_note,
        excluded,
        floor,
        excluded_rel
    ))
}

fn check_fountain_overhead(scale: &Scale) -> Result<String, String> {
    let mean100 = ideal_excess_trials(100, scale.excess_trials, child_seed(0xACC6, 0));
    if !(1.4..=1.8).contains(&mean100) {
        return Err(format!(
            "mean excess at k = 100 is {:.3} packets, outside [1.4, 1.8]",
            mean100
        ));
    }
    let mean50 = ideal_excess_trials(50, scale.excess_trials, child_seed(0xACC6, 1));
    let mean500 = ideal_excess_trials(500, scale.excess_trials_large_k, child_seed(0xACC6, 2));
    let overheads = [
        (50u32, mean50 / 50.0 * 100.0, 3.22),
        (100, mean100 / 100.0 * 100.0, 1.61),
        (500, mean500 / 500.0 * 100.0, 0.32),
    ];
    for (k, got, want) in overheads {
        if (got - want).abs() > scale.overhead_tol {
            return Err(format!(
                "overhead at k = {} is {:.2} points, wanted {:.2} within {:.1}",
                k, got, want, scale.overhead_tol
            ));
        }
    }
    Ok(format!(
        "mean excess {:.3} packets at k = 100; overheads {:.2}% / {:.2}% / {:.2}% for k = 50 / 100 / 500",
        mean100, overheads[0].1, overheads[1].1, overheads[2].1
    ))
}

/// Mean coded operating points for an even spread of front solutions, kept
/// only where the per-delivery cost is meaningful, Pareto-filtered.
fn coded_front(
    channel: &ChannelModel,
    scale: &Scale,
    case: StudyCase,
    front: &[Individual],
    strategy: CodingStrategy,
    fragments: usize,
    seed_base: u64,
) -> Result<Vec<[f64; 2]>, String> {
    let picks: Vec<&Individual> = front
        .iter()
        .filter(|i| i.metrics.capacity >= 0.02)
        .collect();
    if picks.is_empty() {
        return Err(format!("{}: no front solution clears the capacity floor", case.label()));
    }
    let keep = scale.coding_max_solutions.min(picks.len());
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(keep);
    for j in 0..keep {
        let ind = picks[j * picks.len() / keep];
        let sol = decode(case.scenario, &ind.genome, channel, case.d_sd);
        let seeds: Vec<u64> = (0..scale.coding_seeds)
            .map(|s| child_seed(seed_base, (j as u64) * 1024 + s))
            .collect();
        let base = CodedConfig { fragments, strategy, ..CodedConfig::default() };
        if let Some(avg) = coded_average(&sol, channel, &base, &seeds) {
            pts.push(vec![avg.point[0], avg.point[1]]);
        }
    }
    if pts.is_empty() {
        return Err(format!("{}: no coded run completed", case.label()));
    }
    Ok(pareto_filter_min(&pts)
        .into_iter()
        .map(|i| [pts[i][0], pts[i][1]])
        .collect())
}

fn check_coding_bounds(
    channel: &ChannelModel,
    scale: &Scale,
    fronts: &Fronts,
) -> Result<String, String> {
    let cases = standard_cases();
    let seed = scale.seeds[0];

    // Dedicated two-relay: recombination closes most of the gap between the
    // per-distinct-delivery curve and the per-delivery bound.
    let b3 = derive_bounds(fronts[&(3, seed)].clone());
    let bc3 = plane_points(&b3.capacity_norm_optimal);
    let br3 = b3
        .reliability_norm_optimal
        .as_ref()
        .map(|p| plane_points(p))
        .ok_or("dedicated two-relay case lost its distinct-delivery bound")?;
    let uncoded_gap = generational_distance(&br3, &bc3)
        .ok_or("empty planes for the dedicated two-relay case")?;
    let coded3 = coded_front(
        channel,
        scale,
        cases[3],
        &fronts[&(3, seed)],
        CodingStrategy::Rlnc { memory: 100 },
        100,
        0xACC7_0003,
    )?;
    let gd3 = generational_distance(&coded3, &bc3)
        .ok_or("empty coded front for the dedicated two-relay case")?;
    let gd3_budget = 0.3 * scale.tol;
    if gd3 > gd3_budget {
        return Err(format!(
            "dedicated two-relay recombination gap {:.3} exceeds {:.2}",
            gd3, gd3_budget
        ));
    }
    if gd3 >= uncoded_gap {
        return Err(format!(
            "recombination gap {:.3} fails to beat the uncoded gap {:.3}",
            gd3, uncoded_gap
        ));
    }

    // Relay exchange: random recombination with deep memory beats plain
    // XOR over a short window.
    let b4 = derive_bounds(fronts[&(4, seed)].clone());
    let bc4 = plane_points(&b4.capacity_norm_optimal);
    let rlnc4 = coded_front(
        channel,
        scale,
        cases[4],
        &fronts[&(4, seed)],
        CodingStrategy::Rlnc { memory: 500 },
        500,
        0xACC7_0004,
    )?;
    let rxor4 = coded_front(
        channel,
        scale,
        cases[4],
        &fronts[&(4, seed)],
        CodingStrategy::RXor { memory: 8 },
        500,
        0xACC7_0104,
    )?;
    let gd4_rlnc = generational_distance(&rlnc4, &bc4)
        .ok_or("empty recombination front for the relay exchange")?;
    let gd4_rxor = generational_distance(&rxor4, &bc4)
        .ok_or("empty xor front for the relay exchange")?;
    if gd4_rlnc >= gd4_rxor {
        return Err(format!(
            "exchange recombination gap {:.3} is not below the xor gap {:.3}",
            gd4_rlnc, gd4_rxor
        ));
    }
    Ok(format!(
        "two-relay gap {:.3} (budget {:.2}) vs uncoded {:.3}; exchange recombination {:.3} < xor {:.3}",
        gd3, gd3_budget, uncoded_gap, gd4_rlnc, gd4_rxor
    ))
}

fn brute_force_front(points: &[Vec<f64>]) -> BTreeSet<usize> {
    let beats = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
    };
    (0..points.len())
        .filter(|&i| !points.iter().enumerate().any(|(j, p)| j != i && beats(p, &points[i])))
        .collect()
}

fn check_structural_properties(
    channel: &ChannelModel,
    scale: &Scale,
) -> Result<String, String> {
    // Pareto filtering against an independently written brute force, with
    // grid-snapped batches to exercise ties and duplicates.
    let mut rng = ChaCha12Rng::seed_from_u64(child_seed(0xACC8, 0));
    for inst in 0..scale.pareto_instances {
        let n = rng.gen_range(1..=scale.pareto_max_n);
        let dims = if rng.gen::<bool>() { 2 } else { 3 };
        let snap = rng.gen::<bool>();
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dims)
                    .map(|_| {
                        let v: f64 = rng.gen();
                        if snap {
                            (v * 8.0).round() / 8.0
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let fast: BTreeSet<usize> = pareto_filter_min(&pts).into_iter().collect();
        if fast != brute_force_front(&pts) {
            return Err(format!(
                "pareto filter disagrees with brute force on instance {} (n = {}, {} axes)",
                inst, n, dims
            ));
        }
    }

    // Decoder round trips: random full-rank batches reproduce every payload.
    for &k in &[10usize, 50, 100] {
        for run in 0..scale.roundtrips {
            let mut rng =
                ChaCha12Rng::seed_from_u64(child_seed(0xACC8_0B00 + k as u64, run as u64));
            let payloads: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
            let mut dec = Decoder::new(k);
            let mut inserts = 0u64;
            while !dec.is_complete() {
                let coeff = Gf2Vec::random_nonzero(&mut rng, k);
                let mut pay = 0u64;
                for (i, p) in payloads.iter().enumerate() {
                    if coeff.get(i) {
                        pay ^= p;
                    }
                }
                dec.insert_with_payload(coeff, pay);
                inserts += 1;
                if inserts > k as u64 * 40 + 1_000 {
                    return Err(format!("decoder failed to reach rank {} in {} inserts", k, inserts));
                }
            }
            let solved = dec
                .solve_payloads()
                .ok_or("complete decoder refused to solve")?;
            if solved != payloads {
                return Err(format!("k = {} round trip corrupted a payload", k));
            }
        }
    }

    // Event-log conservation laws on random simulations.
    let mut rng = ChaCha12Rng::seed_from_u64(child_seed(0xACC8, 2));
    for s in 0..scale.event_sims {
        let scenario = Scenario::ALL[rng.gen_range(0..Scenario::ALL.len())];
        let d_sd = if rng.gen::<bool>() { 310.0 } else { 620.0 };
        let genome = random_genome(&mut rng, scenario, d_sd);
        let sol = decode(scenario, &genome, channel, d_sd);
        let single = s % 2 == 1;
        let cfg = SimConfig {
            frames: 200,
            seed: rng.gen(),
            record_events: true,
            buffer: if single { BufferPolicy::SingleNewest } else { BufferPolicy::Lossless },
            ..SimConfig::default()
        };
        let run = simulate(&sol, channel, &cfg);
        if run.estimates.source_tx != 200 {
            return Err(format!(
                "source sent {} packets over 200 frames",
                run.estimates.source_tx
            ));
        }
        let mut tx_slots: HashSet<(NodeId, u64, usize)> = HashSet::new();
        let mut tx_per_pair: HashMap<(NodeId, u64), i64> = HashMap::new();
        let mut rx_per_pair: HashMap<(NodeId, u64), i64> = HashMap::new();
        let mut tx_per_frame: HashMap<(NodeId, u64), u32> = HashMap::new();
        for e in &run.events {
            if e.kind == EventKind::Transmit {
                if e.hops < 1 {
                    return Err("a transmission carried a zero hop count".into());
                }
                tx_slots.insert((e.node, e.frame, e.slot));
                if e.node != NodeId::Source {
                    *tx_per_pair.entry((e.node, e.packet)).or_insert(0) += 1;
                    *tx_per_frame.entry((e.node, e.frame)).or_insert(0) += 1;
                }
            }
        }
        for e in &run.events {
            if let EventKind::Receive { from } = e.kind {
                if from == e.node {
                    return Err("a node received its own transmission".into());
                }
                if tx_slots.contains(&(e.node, e.frame, e.slot)) {
                    return Err(format!(
                        "node {:?} both sent and received in frame {} slot {}",
                        e.node, e.frame, e.slot
                    ));
                }
                *rx_per_pair.entry((e.node, e.packet)).or_insert(0) += 1;
            }
        }
        for (&(node, packet), &tx) in &tx_per_pair {
            let rx = rx_per_pair.get(&(node, packet)).copied().unwrap_or(0);
            if tx > rx {
                return Err(format!(
                    "node {:?} sent packet {} {} times but received it {} times",
                    node, packet, tx, rx
                ));
            }
        }
        if single && tx_per_frame.values().any(|&n| n > 1) {
            return Err("a single-packet buffer relay sent twice in one frame".into());
        }
    }

    // Per-delivery throughput always covers distinct deliveries.
    let mut order_samples = 0usize;
    for (ci, case) in standard_cases().iter().enumerate() {
        if case.scenario == Scenario::TwoRelayExchange {
            continue;
        }
        let mut rng = ChaCha12Rng::seed_from_u64(child_seed(0xACC8_0D00, ci as u64));
        for _ in 0..scale.order_samples_per_case {
            let genome = random_genome(&mut rng, case.scenario, case.d_sd);
            let m = evaluate(&decode(case.scenario, &genome, channel, case.d_sd));
            let r = m
                .reliability
                .ok_or_else(|| format!("{} lost its distinct-delivery rate", case.label()))?;
            if r > m.capacity + 1e-12 {
                return Err(format!(
                    "{}: distinct-delivery rate {:.6e} exceeds capacity {:.6e}",
                    case.label(),
                    r,
                    m.capacity
                ));
            }
            order_samples += 1;
        }
    }

    Ok(format!(
        "pareto filter matches brute force on {} batches; {} round trips per fragment count; {} event logs law-clean; rate ordering holds on {} samples",
        scale.pareto_instances,
        scale.roundtrips,
        scale.event_sims,
        order_samples
    ))
}

fn main() {
    let scale = Scale::from_env();
    println!(
        "relay bound acceptance: {} (population {} x {} generations, seeds {:?})",
        if scale.fast { "FAST development scale, tolerances widened" } else { "full scale" },
        scale.population,
        scale.generations,
        scale.seeds
    );
    let _ = std::io::stdout().flush();

    let channel = match ChannelModel::calibrated() {
        Ok(c) => c,
        Err(e) => {
            println!("C3 channel calibration: FAIL (calibration failed outright: {e})");
            std::process::exit(1);
        }
    };
    let setup = Instant::now();
    let (fronts, durations) = compute_fronts(&channel, &scale);
    eprintln!("[setup] {} optimizer runs in {:.0}s", fronts.len(), setup.elapsed().as_secs_f64());

    type Check<'a> = Box<dyn FnOnce() -> Result<String, String> + 'a>;
    let checks: Vec<(u32, &str, Check)> = vec![
        (1, "closed forms match the path oracle", {
            let (c, s) = (&channel, &scale);
            Box::new(move || check_oracle(c, s))
        }),
        (2, "relay-exchange reference point", {
            let (s, f) = (&scale, &fronts);
            Box::new(move || check_exchange_reference(s, f))
        }),
        (3, "channel calibration", {
            let c = &channel;
            Box::new(move || check_calibration(c))
        }),
        (4, "optimized front landmarks", {
            let (c, s, f, d) = (&channel, &scale, &fronts, &durations);
            Box::new(move || check_landmarks(c, s, f, d))
        }),
        (5, "simulator agreement", {
            let (c, s, f) = (&channel, &scale, &fronts);
            Box::new(move || check_simulator_agreement(c, s, f))
        }),
        (6, "fountain overhead", {
            let s = &scale;
            Box::new(move || check_fountain_overhead(s))
        }),
        (7, "coded relaying bounds", {
            let (c, s, f) = (&channel, &scale, &fronts);
            Box::new(move || check_coding_bounds(c, s, f))
        }),
        (8, "structural properties", {
            let (c, s) = (&channel, &scale);
            Box::new(move || check_structural_properties(c, s))
        }),
    ];

    let mut passed = 0usize;
    let total = checks.len();
    for (n, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("C{n} {name}: PASS ({detail}) [{secs:.1}s]");
            }
            Err(detail) => println!("C{n} {name}: FAIL ({detail}) [{secs:.1}s]"),
        }
        let _ = std::io::stdout().flush();
    }
    println!("summary: {passed} of {total} criteria passed");
    if passed != total {
        std::process::exit(1);
    }
}
