//! Binary fountain coding over the relay network.
//!
//! To turn the per-packet bounds into an achievable scheme, the source
//! splits a message into `k` fragments and streams random GF(2) combinations
//! of them, one per frame, until the destination has gathered `k` linearly
//! independent packets. Relays can forward combinations verbatim or re-mix
//! what they recently overheard, which repairs some of the redundancy that
//! duplicate deliveries would otherwise waste. [`simulate_coded`] replays a
//! configuration under such a scheme and reports delay and energy per
//! decoded fragment, directly comparable to the capacity-normalized bound.

use crate::channel::ChannelModel;
use crate::net::{NodeId, Solution};
use crate::sim::InterferenceMode;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::VecDeque;

/// Over-the-air packet size in bits; the `k`-bit coefficient header is
/// carried inside it, shrinking the useful payload.
pub const CODED_PACKET_BITS: u32 = 20_480;

/// A GF(2) coefficient vector over `len` fragments, packed into words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Vec {
    len: usize,
    words: Vec<u64>,
}

impl Gf2Vec {
    pub fn zero(len: usize) -> Gf2Vec {
        Gf2Vec { len, words: vec![0; len.div_ceil(64)] }
    }

    /// Uniformly random non-zero vector.
    pub fn random_nonzero(rng: &mut impl RngCore, len: usize) -> Gf2Vec {
        assert!(len > 0);
        loop {
            let mut v = Gf2Vec::zero(len);
            for w in &mut v.words {
                *w = rng.next_u64();
            }
            let tail = len % 64;
            if tail != 0 {
                *v.words.last_mut().unwrap() &= (1u64 << tail) - 1;
            }
            if !v.is_zero() {
                return v;
            }
        }
    }

    /// Unit vector selecting a single fragment.
    pub fn unit(len: usize, index: usize) -> Gf2Vec {
        assert!(index < len);
        let mut v = Gf2Vec::zero(len);
        v.set(index);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &Gf2Vec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Index of the lowest set coefficient, used as the elimination pivot.
    pub fn first_set(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }
}

/// Result of feeding one packet to the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// The packet increased the decoder's rank.
    Innovative,
    /// The packet was a combination of earlier ones.
    Redundant,
    /// The packet was innovative and completed the full rank.
    Complete,
}

/// Incremental Gaussian elimination over GF(2). Each accepted row is stored
/// under its pivot; payloads (one word per packet, XOR-combined alongside
/// the coefficients) ride along so tests can verify actual data recovery.
#[derive(Debug, Clone)]
pub struct Decoder {
    k: usize,
    rows: Vec<Option<(Gf2Vec, u64)>>,
    rank: usize,
}

impl Decoder {
    pub fn new(k: usize) -> Decoder {
        assert!(k > 0);
        Decoder { k, rows: (0..k).map(|_| None).collect(), rank: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.k
    }

    pub fn insert(&mut self, coeff: Gf2Vec) -> Insertion {
        self.insert_with_payload(coeff, 0)
    }

    pub fn insert_with_payload(&mut self, mut coeff: Gf2Vec, mut payload: u64) -> Insertion {
        assert_eq!(coeff.len(), self.k);
        loop {
            let Some(pivot) = coeff.first_set() else {
                return Insertion::Redundant;
            };
            match &self.rows[pivot] {
                Some((row, row_payload)) => {
                    coeff.xor_assign(row);
                    payload ^= row_payload;
                }
                None => {
                    self.rows[pivot] = Some((coeff, payload));
                    self.rank += 1;
                    return if self.is_complete() {
                        Insertion::Complete
                    } else {
                        Insertion::Innovative
                    };
                }
            }
        }
    }

    /// Back-substitutes to recover the original fragment payloads; `None`
    /// until the decoder is complete.
    pub fn solve_payloads(&self) -> Option<Vec<u64>> {
        if !self.is_complete() {
            return None;
        }
        let mut rows: Vec<(Gf2Vec, u64)> =
            self.rows.iter().map(|r| r.clone().unwrap()).collect();
        for p in (0..self.k).rev() {
            let (coeff_p, payload_p) = rows[p].clone();
            debug_assert_eq!(coeff_p.first_set(), Some(p));
            for row in rows.iter_mut().take(p) {
                if row.0.get(p) {
                    row.0.xor_assign(&coeff_p);
                    row.1 ^= payload_p;
                }
            }
        }
        Some(rows.into_iter().map(|(_, payload)| payload).collect())
    }
}

/// What a relay does with overheard coded packets before forwarding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodingStrategy {
    /// Forward the triggering packet unchanged.
    Plain,
    /// XOR the trigger with everything else in a FIFO memory of the given
    /// capacity.
    RXor { memory: usize },
    /// XOR the trigger with each other memory entry independently with
    /// probability one half (random linear recombination).
    Rlnc { memory: usize },
}

impl CodingStrategy {
    fn memory(&self) -> usize {
        match *self {
            CodingStrategy::Plain => 1,
            CodingStrategy::RXor { memory } | CodingStrategy::Rlnc { memory } => memory.max(1),
        }
    }
}

#[derive(Debug, Clone)]
struct CodedPacket {
    coeff: Gf2Vec,
    hops: u32,
}

/// Builds the outgoing combination for a relay that just stored `fifo.back()`
/// (the trigger) and decided to forward.
fn combine(
    strategy: CodingStrategy,
    fifo: &VecDeque<CodedPacket>,
    rng: &mut ChaCha12Rng,
) -> Gf2Vec {
    let trigger = fifo.back().expect("combine called with the trigger stored");
    let mut out = trigger.coeff.clone();
    let others = fifo.len() - 1;
    match strategy {
        CodingStrategy::Plain => {}
        CodingStrategy::RXor { .. } => {
            for p in fifo.iter().take(others) {
                out.xor_assign(&p.coeff);
            }
        }
        CodingStrategy::Rlnc { .. } => {
            for p in fifo.iter().take(others) {
                if rng.gen::<bool>() {
                    out.xor_assign(&p.coeff);
                }
            }
        }
    }
    if out.is_zero() {
        // A self-cancelling mix carries nothing; fall back to the trigger.
        out = trigger.coeff.clone();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedConfig {
    /// Number of fragments the message is split into.
    pub fragments: usize,
    pub strategy: CodingStrategy,
    pub seed: u64,
    pub interference: InterferenceMode,
    /// Forward when the uniform draw is at least the forwarding probability
    /// instead of below it; see the plain simulator's flag of the same name.
    pub literal_forward_threshold: bool,
    /// Abort threshold for configurations that cannot complete.
    pub frame_cap: u64,
}

impl Default for CodedConfig {
    fn default() -> Self {
        CodedConfig {
            fragments: 100,
            strategy: CodingStrategy::Plain,
            seed: 1,
            interference: InterferenceMode::Realized,
            literal_forward_threshold: false,
            frame_cap: 1_000_000,
        }
    }
}

/// Counters of one coded transfer. Counting stops at the reception that
/// completes the decoder: transmissions of later slots or frames are not
/// part of the transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedOutcome {
    pub completed: bool,
    pub frames: u64,
    pub source_tx: u64,
    pub relay_tx: u64,
    /// Packets the destination received up to and including completion.
    pub received: u64,
    /// Mean hop count over those receptions.
    pub mean_hops: f64,
    /// Extra receptions beyond the `k` strictly necessary, in percent.
    pub overhead_pct: f64,
    /// Frame slots consumed per decoded fragment, corrected for the
    /// coefficient header shrinking each packet's useful payload.
    pub norm_delay: f64,
    /// Transmissions per decoded fragment, same header correction.
    pub norm_energy: f64,
}

/// Streams one fountain-coded message over the configuration and counts what
/// the transfer cost.
pub fn simulate_coded(sol: &Solution, channel: &ChannelModel, cfg: &CodedConfig) -> CodedOutcome {
    let k = cfg.fragments;
    assert!(k > 0 && (k as u32) < CODED_PACKET_BITS);
    let scenario = sol.scenario();
    let relays = scenario.relays();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut decoder = Decoder::new(k);
    let mut memories: Vec<VecDeque<CodedPacket>> =
        vec![VecDeque::with_capacity(cfg.strategy.memory()); relays.len()];
    let mut pending: Vec<Vec<CodedPacket>> = vec![Vec::new(); relays.len()];
    let mut scheduled: Vec<Vec<CodedPacket>> = vec![Vec::new(); relays.len()];

    let mut source_tx = 0u64;
    let mut relay_tx = 0u64;
    let mut received = 0u64;
    let mut hop_sum = 0u64;
    let mut completed = false;
    let mut frame = 0u64;
    let mut tx_buf: Vec<(NodeId, Vec<CodedPacket>)> = Vec::new();

    'frames: while frame < cfg.frame_cap {
        for slot in 0..scenario.slot_count() {
            tx_buf.clear();
            if slot == 0 {
                tx_buf.push((
                    NodeId::Source,
                    vec![CodedPacket { coeff: Gf2Vec::random_nonzero(&mut rng, k), hops: 1 }],
                ));
            }
            for (ri, &relay) in relays.iter().enumerate() {
                if scenario.tx_slot(relay) == Some(slot) && !pending[ri].is_empty() {
                    tx_buf.push((relay, std::mem::take(&mut pending[ri])));
                }
            }
            if tx_buf.is_empty() {
                continue;
            }
            for (node, packets) in &tx_buf {
                if *node == NodeId::Source {
                    source_tx += packets.len() as u64;
                } else {
                    relay_tx += packets.len() as u64;
                }
            }

            for &receiver in scenario.nodes() {
                if receiver == NodeId::Source || tx_buf.iter().any(|(n, _)| *n == receiver) {
                    continue;
                }
                for (sender, packets) in &tx_buf {
                    let p_rx = match cfg.interference {
                        InterferenceMode::Realized => {
                            let others: Vec<f64> = tx_buf
                                .iter()
                                .map(|(n, _)| *n)
                                .filter(|&n| n != *sender)
                                .map(|n| sol.topology.distance(n, receiver))
                                .collect();
                            channel
                                .link_success(sol.topology.distance(*sender, receiver), &others)
                                .expect("topology distances are positive")
                        }
                        InterferenceMode::Averaged => {
                            sol.conditional[sender.index()][receiver.index()][slot]
                        }
                    };
                    for packet in packets {
                        if rng.gen::<f64>() >= p_rx {
                            continue;
                        }
                        if receiver == NodeId::Dest {
                            received += 1;
                            hop_sum += u64::from(packet.hops);
                            if decoder.insert(packet.coeff.clone()) == Insertion::Complete {
                                completed = true;
                                break 'frames;
                            }
                        } else {
                            let ri = relays.iter().position(|&r| r == receiver).unwrap();
                            let fifo = &mut memories[ri];
                            if fifo.len() == cfg.strategy.memory() {
                                fifo.pop_front();
                            }
                            fifo.push_back(packet.clone());
                            let forward = sol.forwarding.prob(*sender, receiver);
                            let accepted = forward > 0.0 && {
                                let draw = rng.gen::<f64>();
                                if cfg.literal_forward_threshold {
                                    draw >= forward
                                } else {
                                    draw < forward
                                }
                            };
                            if accepted {
                                let coeff = combine(cfg.strategy, fifo, &mut rng);
                                scheduled[ri]
                                    .push(CodedPacket { coeff, hops: packet.hops + 1 });
                            }
                        }
                    }
                }
            }
        }
        for (cur, sched) in pending.iter_mut().zip(&mut scheduled) {
            debug_assert!(cur.is_empty());
            std::mem::swap(cur, sched);
        }
        frame += 1;
    }

    let kf = k as f64;
    // The k-bit coefficient header displaces payload, so each decoded
    // fragment costs proportionally more airtime.
    let header_penalty = f64::from(CODED_PACKET_BITS) / (f64::from(CODED_PACKET_BITS) - kf);
    let mean_hops = if received > 0 { hop_sum as f64 / received as f64 } else { 0.0 };
    CodedOutcome {
        completed,
        frames: frame + u64::from(completed),
        source_tx,
        relay_tx,
        received,
        mean_hops,
        overhead_pct: (received as f64 - kf) / kf * 100.0,
        norm_delay: mean_hops * source_tx as f64 / kf * header_penalty,
        norm_energy: (source_tx + relay_tx) as f64 / kf * header_penalty,
    }
}

/// Seed-averaged coded costs for one configuration; runs that hit the frame
/// cap are excluded and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedAverage {
    /// Mean `[norm_delay, norm_energy]` over completed runs.
    pub point: [f64; 2],
    pub mean_overhead_pct: f64,
    pub completed: u64,
    pub attempted: u64,
}

pub fn coded_average(
    sol: &Solution,
    channel: &ChannelModel,
    base: &CodedConfig,
    seeds: &[u64],
) -> Option<CodedAverage> {
    let mut sum = [0.0, 0.0];
    let mut overhead = 0.0;
    let mut completed = 0u64;
    for &seed in seeds {
        let outcome = simulate_coded(sol, channel, &CodedConfig { seed, ..base.clone() });
        if outcome.completed {
            sum[0] += outcome.norm_delay;
            sum[1] += outcome.norm_energy;
            overhead += outcome.overhead_pct;
            completed += 1;
        }
    }
    (completed > 0).then(|| CodedAverage {
        point: [sum[0] / completed as f64, sum[1] / completed as f64],
        mean_overhead_pct: overhead / completed as f64,
        completed,
        attempted: seeds.len() as u64,
    })
}

/// Expected number of extra draws a perfect collector needs beyond `k` when
/// pulling uniform non-zero combinations straight from the source.
pub fn ideal_expected_excess(k: usize) -> f64 {
    // At rank r, a uniform non-zero draw is innovative with probability
    // (2^k - 2^r) / (2^k - 1); summing the geometric means of the waits
    // gives sum_r (2^r - 1) / (2^k - 2^r).
    (0..k)
        .map(|r| {
            let num = 2f64.powi(r as i32) - 1.0;
            let den = 2f64.powi(k as i32) - 2f64.powi(r as i32);
            num / den
        })
        .sum()
}

/// Empirical counterpart of [`ideal_expected_excess`]: draws random non-zero
/// combinations into a decoder until complete, averaged over `trials`.
pub fn ideal_excess_trials(k: usize, trials: u64, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0u64;
    for _ in 0..trials {
        let mut decoder = Decoder::new(k);
        let mut draws = 0u64;
        loop {
            draws += 1;
            if decoder.insert(Gf2Vec::random_nonzero(&mut rng, k)) == Insertion::Complete {
                break;
            }
        }
        total += draws - k as u64;
    }
    total as f64 / trials as f64
}
