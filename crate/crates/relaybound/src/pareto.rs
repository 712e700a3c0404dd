//! Non-dominated filtering, NSGA-II search, and bound extraction.
//!
//! The optimizer explores relay placement and forwarding probabilities for
//! one scenario at a fixed source-destination distance, maximizing capacity
//! while minimizing delay and energy. Its result, the three-objective front,
//! is then projected into the two normalized bound planes: delay and energy
//! per *delivered* packet (capacity-normalized) and per *distinct delivered*
//! packet (reliability-normalized).

use crate::channel::ChannelModel;
use crate::criteria::{evaluate, Metrics};
use crate::net::{decode, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// True if `a` is no worse than `b` on every axis and strictly better on at
/// least one, with every axis minimized.
pub fn dominates_min(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated points among `points` (all axes minimized),
/// in input order. Quadratic, which is fine for front-sized inputs.
pub fn pareto_filter_min(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && dominates_min(other, &points[i]))
        })
        .collect()
}

/// One evaluated configuration in the optimizer population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub metrics: Metrics,
    /// Minimization objectives: negated capacity, delay, energy.
    pub objectives: [f64; 3],
    pub feasible: bool,
    pub violation: f64,
    pub exchange_clamped: bool,
}

/// NSGA-II parameters. The defaults match the benchmark setup used for all
/// reported fronts.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Distribution index of simulated binary crossover.
    pub crossover_eta: f64,
    /// Distribution index of polynomial mutation.
    pub mutation_eta: f64,
    /// Per-gene mutation probability; defaults to `1 / genome_len`.
    pub mutation_prob: Option<f64>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 300,
            generations: 1000,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            mutation_prob: None,
            seed: 1,
        }
    }
}

fn evaluate_genomes(
    scenario: Scenario,
    channel: &ChannelModel,
    d_sd: f64,
    genomes: Vec<Vec<f64>>,
) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let sol = decode(scenario, &genome, channel, d_sd);
            let metrics = evaluate(&sol);
            let objectives = [-metrics.capacity, metrics.delay, metrics.energy];
            debug_assert!(objectives.iter().all(|o| o.is_finite()), "{objectives:?}");
            Individual {
                genome,
                metrics,
                objectives,
                feasible: sol.feasibility.is_feasible(),
                violation: sol.feasibility.violation(),
                exchange_clamped: sol.exchange_clamped,
            }
        })
        .collect()
}

/// Feasible individuals beat infeasible ones; infeasible ones compare by
/// total violation; feasible ones by objective dominance.
fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => dominates_min(&a.objectives, &b.objectives),
    }
}

/// Standard fast non-dominated sort; returns per-individual rank and the
/// fronts themselves (index lists).
fn sort_fronts(pop: &[Individual]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = pop.len();
    let mut dominated_by: Vec<usize> = vec![0; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&pop[i], &pop[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            } else if constrained_dominates(&pop[j], &pop[i]) {
                dominates[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut ranks = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            ranks[i] = fronts.len();
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    (ranks, fronts)
}

/// Crowding distance of each member of one front.
fn crowding_distances(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0f64; front.len()];
    if front.len() <= 2 {
        return vec![f64::INFINITY; front.len()];
    }
    let m = pop[front[0]].objectives.len();
    for axis in 0..m {
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            pop[front[a]].objectives[axis]
                .partial_cmp(&pop[front[b]].objectives[axis])
                .unwrap()
        });
        let lo = pop[front[order[0]]].objectives[axis];
        let hi = pop[front[*order.last().unwrap()]].objectives[axis];
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().unwrap()] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let span = pop[front[w[2]]].objectives[axis] - pop[front[w[0]]].objectives[axis];
            dist[w[1]] += span / (hi - lo);
        }
    }
    dist
}

/// Bounded simulated binary crossover (SBX) on one gene pair.
fn sbx_pair(rng: &mut ChaCha12Rng, eta: f64, lo: f64, hi: f64, a: f64, b: f64) -> (f64, f64) {
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    if y2 - y1 < 1e-14 {
        return (a, b);
    }
    let u: f64 = rng.gen();
    let spread = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let beta1 = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
    let beta2 = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
    let c1 = 0.5 * ((y1 + y2) - spread(beta1) * (y2 - y1));
    let c2 = 0.5 * ((y1 + y2) + spread(beta2) * (y2 - y1));
    let c1 = c1.clamp(lo, hi);
    let c2 = c2.clamp(lo, hi);
    if rng.gen::<bool>() {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

/// Bounded polynomial mutation of one gene.
fn polynomial_mutate(rng: &mut ChaCha12Rng, eta: f64, lo: f64, hi: f64, y: f64) -> f64 {
    let range = hi - lo;
    if range <= 0.0 {
        return y;
    }
    let u: f64 = rng.gen();
    let mut_pow = 1.0 / (eta + 1.0);
    let delta = if u < 0.5 {
        let xy = 1.0 - (y - lo) / range;
        (2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0)).powf(mut_pow) - 1.0
    } else {
        let xy = 1.0 - (hi - y) / range;
        1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0)).powf(mut_pow)
    };
    (y + delta * range).clamp(lo, hi)
}

/// Binary tournament on (rank, crowding).
fn tournament(rng: &mut ChaCha12Rng, ranks: &[usize], crowding: &[f64]) -> usize {
    let i = rng.gen_range(0..ranks.len());
    let j = rng.gen_range(0..ranks.len());
    if ranks[i] < ranks[j] || (ranks[i] == ranks[j] && crowding[i] > crowding[j]) {
        i
    } else {
        j
    }
}

/// Runs NSGA-II and returns the final feasible non-dominated set, deduped on
/// a 1e-6 objective grid and sorted by decreasing capacity. Variation is
/// driven by a single sequential RNG stream while evaluation fans out over
/// threads, so results depend only on the seed.
pub fn optimize(
    scenario: Scenario,
    channel: &ChannelModel,
    d_sd: f64,
    cfg: &OptimizerConfig,
) -> Vec<Individual> {
    assert!(cfg.population >= 4 && cfg.population.is_multiple_of(2));
    let bounds = scenario.gene_bounds(d_sd);
    let pm = cfg.mutation_prob.unwrap_or(1.0 / bounds.len() as f64);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let init: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect();
    let mut pop = evaluate_genomes(scenario, channel, d_sd, init);

    for _ in 0..cfg.generations {
        let (ranks, fronts) = sort_fronts(&pop);
        let mut crowding = vec![0.0f64; pop.len()];
        for front in &fronts {
            let dist = crowding_distances(&pop, front);
            for (k, &i) in front.iter().enumerate() {
                crowding[i] = dist[k];
            }
        }

        let mut offspring = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let p1 = &pop[tournament(&mut rng, &ranks, &crowding)].genome;
            let p2 = &pop[tournament(&mut rng, &ranks, &crowding)].genome;
            let mut c1 = p1.clone();
            let mut c2 = p2.clone();
            if rng.gen::<f64>() < cfg.crossover_prob {
                for (k, &(lo, hi)) in bounds.iter().enumerate() {
                    if rng.gen::<f64>() < 0.5 {
                        let (a, b) = sbx_pair(&mut rng, cfg.crossover_eta, lo, hi, c1[k], c2[k]);
                        c1[k] = a;
                        c2[k] = b;
                    }
                }
            }
            for child in [&mut c1, &mut c2] {
                for (k, &(lo, hi)) in bounds.iter().enumerate() {
                    if rng.gen::<f64>() < pm {
                        child[k] = polynomial_mutate(&mut rng, cfg.mutation_eta, lo, hi, child[k]);
                    }
                }
            }
            offspring.push(c1);
            if offspring.len() < cfg.population {
                offspring.push(c2);
            }
        }
        let mut combined = pop;
        combined.extend(evaluate_genomes(scenario, channel, d_sd, offspring));

        let (_, fronts) = sort_fronts(&combined);
        let mut next: Vec<Individual> = Vec::with_capacity(cfg.population);
        for front in &fronts {
            if next.len() + front.len() <= cfg.population {
                next.extend(front.iter().map(|&i| combined[i].clone()));
            } else {
                let dist = crowding_distances(&combined, front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| {
                    dist[b].partial_cmp(&dist[a]).unwrap().then(front[a].cmp(&front[b]))
                });
                for &k in order.iter().take(cfg.population - next.len()) {
                    next.push(combined[front[k]].clone());
                }
                break;
            }
        }
        pop = next;
    }

    let feasible: Vec<Individual> = pop.into_iter().filter(|ind| ind.feasible).collect();
    let objs: Vec<Vec<f64>> = feasible.iter().map(|i| i.objectives.to_vec()).collect();
    let mut front: Vec<Individual> =
        pareto_filter_min(&objs).into_iter().map(|i| feasible[i].clone()).collect();
    front = dedup_by_objectives(front);
    front.sort_by(|a, b| {
        b.metrics
            .capacity
            .partial_cmp(&a.metrics.capacity)
            .unwrap()
            .then(a.genome.partial_cmp(&b.genome).unwrap())
    });
    front
}

/// Collapses individuals whose objectives agree to within 1e-6 on every
/// axis, keeping the lexicographically smallest genome of each group so the
/// representative is deterministic.
pub fn dedup_by_objectives(mut front: Vec<Individual>) -> Vec<Individual> {
    front.sort_by(|a, b| a.genome.partial_cmp(&b.genome).unwrap());
    let mut seen: std::collections::HashSet<[i64; 3]> = std::collections::HashSet::new();
    front.retain(|ind| {
        let key = [
            (ind.objectives[0] / 1e-6).round() as i64,
            (ind.objectives[1] / 1e-6).round() as i64,
            (ind.objectives[2] / 1e-6).round() as i64,
        ];
        seen.insert(key)
    });
    front
}

/// A front projected into the two normalized bound planes.
#[derive(Debug, Clone, Default)]
pub struct Bounds {
    /// The three-objective front the projections come from.
    pub front: Vec<Individual>,
    /// Delay and energy per delivered packet, `(front index, [d, e])`.
    pub capacity_norm: Vec<(usize, [f64; 2])>,
    /// Front entries excluded from `capacity_norm` for having zero capacity.
    pub capacity_norm_skipped: Vec<usize>,
    /// Non-dominated subset of `capacity_norm`.
    pub capacity_norm_optimal: Vec<(usize, [f64; 2])>,
    /// Delay and energy per distinct delivered packet; `None` when the
    /// scenario's reliability has no closed form (relay exchange).
    pub reliability_norm: Option<Vec<(usize, [f64; 2])>>,
    /// Front entries excluded from `reliability_norm` for zero reliability.
    pub reliability_norm_skipped: Vec<usize>,
    /// Non-dominated subset of `reliability_norm`.
    pub reliability_norm_optimal: Option<Vec<(usize, [f64; 2])>>,
}

fn filter_2d(points: &[(usize, [f64; 2])]) -> Vec<(usize, [f64; 2])> {
    let objs: Vec<Vec<f64>> = points.iter().map(|(_, p)| p.to_vec()).collect();
    pareto_filter_min(&objs).into_iter().map(|k| points[k]).collect()
}

/// One normalized bound plane: each entry's delay and energy divided by its
/// per-entry denominator, plus the non-dominated subset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaneProjection {
    /// `(entry index, [delay, energy])` for entries with a positive divisor.
    pub points: Vec<(usize, [f64; 2])>,
    /// Entries excluded because their divisor was zero: nothing is delivered
    /// there, so the per-packet cost is undefined rather than infinite.
    pub skipped: Vec<usize>,
    /// Non-dominated subset of `points`.
    pub optimal: Vec<(usize, [f64; 2])>,
}

/// Projects `(delay, energy, divisor)` entries into a normalized plane. The
/// divisor is a delivery rate: capacity clamped to one for the per-delivered
/// plane, reliability (analytic or simulated) for the per-distinct plane.
pub fn project_plane(entries: &[(f64, f64, f64)]) -> PlaneProjection {
    let mut plane = PlaneProjection::default();
    for (i, &(delay, energy, divisor)) in entries.iter().enumerate() {
        if divisor > 0.0 {
            plane.points.push((i, [delay / divisor, energy / divisor]));
        } else {
            plane.skipped.push(i);
        }
    }
    plane.optimal = filter_2d(&plane.points);
    plane
}

/// Projects a three-objective front into the normalized bound planes.
///
/// Capacity is clamped to one in the denominator: a configuration delivering
/// more than one packet per frame cannot reduce the per-packet cost below
/// the raw delay and energy, it only saturates the frame.
pub fn derive_bounds(front: Vec<Individual>) -> Bounds {
    let cap_entries: Vec<(f64, f64, f64)> = front
        .iter()
        .map(|ind| (ind.metrics.delay, ind.metrics.energy, ind.metrics.capacity.min(1.0)))
        .collect();
    let cap = project_plane(&cap_entries);
    let mut bounds = Bounds {
        front,
        capacity_norm: cap.points,
        capacity_norm_skipped: cap.skipped,
        capacity_norm_optimal: cap.optimal,
        ..Default::default()
    };
    if bounds.front.iter().all(|ind| ind.metrics.reliability.is_some()) {
        let rel_entries: Vec<(f64, f64, f64)> = bounds
            .front
            .iter()
            .map(|ind| (ind.metrics.delay, ind.metrics.energy, ind.metrics.reliability.unwrap()))
            .collect();
        let rel = project_plane(&rel_entries);
        bounds.reliability_norm = Some(rel.points);
        bounds.reliability_norm_skipped = rel.skipped;
        bounds.reliability_norm_optimal = Some(rel.optimal);
    }
    bounds
}
