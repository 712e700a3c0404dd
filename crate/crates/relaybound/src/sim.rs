//! Stochastic frame-by-frame simulator of the relay network.
//!
//! The simulator replays the exact process the closed forms price: one fresh
//! source packet per frame, per-slot reception draws, probabilistic
//! forwarding, and relay transmissions in the next frame's slots. Packet
//! counts then estimate the same capacity/delay/energy/reliability criteria,
//! which makes the analytic model falsifiable run by run.
//!
//! Interference can be drawn from the realized set of concurrent
//! transmitters or from the pre-averaged conditional link table; both are
//! unbiased for the effective link probabilities. Relays default to
//! scheduling every forwarded reception (a slot can carry several packets,
//! matching how the criteria count recirculating traffic); a single-packet
//! newest-wins buffer is available to measure what that restriction costs.

use crate::channel::ChannelModel;
use crate::net::{NodeId, Solution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// How reception probabilities react to concurrent transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceMode {
    /// Compute SINR from the transmitters actually active in the slot.
    Realized,
    /// Use the interference-averaged conditional link table; only the
    /// receiver's own busy state is realized.
    Averaged,
}

/// What a relay keeps when several forwarded packets target the same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferPolicy {
    /// Keep everything; the slot carries multiple packets when needed.
    Lossless,
    /// Keep only the newest packet per slot, dropping the rest.
    SingleNewest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Frames during which the source injects one packet each.
    pub frames: u64,
    pub seed: u64,
    pub interference: InterferenceMode,
    pub buffer: BufferPolicy,
    /// Record the full transmit/receive event log.
    pub record_events: bool,
    /// Forward when the uniform draw is at least the forwarding probability
    /// instead of below it. This inverts the acceptance region (probability
    /// 1 - x instead of x) and exists only to quantify what that alternate
    /// reading of the relay rule would do; leave off for the priced process.
    pub literal_forward_threshold: bool,
    /// Extra frames allowed for in-flight packets to die out after the last
    /// injection before the run is cut off.
    pub drain_frames_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            frames: 10_000,
            seed: 1,
            interference: InterferenceMode::Realized,
            buffer: BufferPolicy::Lossless,
            record_events: false,
            literal_forward_threshold: false,
            drain_frames_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Transmit,
    Receive { from: NodeId },
}

/// One transmission or reception, as recorded by the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub frame: u64,
    pub slot: usize,
    pub node: NodeId,
    pub kind: EventKind,
    /// Source packets are numbered by injection frame.
    pub packet: u64,
    /// Hop index of the transmission carrying the packet (1 = source hop).
    pub hops: u32,
}

/// Packet-count estimates of the closed-form criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimates {
    /// Deliveries (duplicates included) per source packet.
    pub capacity: f64,
    /// Mean hops over deliveries; `None` if nothing arrived.
    pub delay: Option<f64>,
    /// Transmissions (all nodes) per source packet.
    pub energy: f64,
    /// Fraction of source packets delivered at least once.
    pub reliability: f64,
    pub source_tx: u64,
    pub relay_tx: u64,
    pub deliveries: u64,
    pub distinct_delivered: u64,
    pub hop_histogram: BTreeMap<u32, u64>,
    /// Frames in which the source injected a packet.
    pub frames_injected: u64,
    /// Frames actually run, including the drain phase.
    pub frames_total: u64,
    /// False if the drain cap cut off packets still in flight.
    pub fully_drained: bool,
}

/// Merges runs of the same solution (different seeds) into one estimate by
/// pooling the underlying counts, which weighs every frame equally and keeps
/// the ratio estimators well defined as long as any run delivered packets.
pub fn pool_estimates(runs: &[SimEstimates]) -> SimEstimates {
    assert!(!runs.is_empty(), "nothing to pool");
    let mut hop_histogram: BTreeMap<u32, u64> = BTreeMap::new();
    let (mut source_tx, mut relay_tx, mut deliveries) = (0u64, 0u64, 0u64);
    let (mut distinct, mut injected, mut total) = (0u64, 0u64, 0u64);
    let mut fully_drained = true;
    for r in runs {
        for (&h, &n) in &r.hop_histogram {
            *hop_histogram.entry(h).or_insert(0) += n;
        }
        source_tx += r.source_tx;
        relay_tx += r.relay_tx;
        deliveries += r.deliveries;
        distinct += r.distinct_delivered;
        injected += r.frames_injected;
        total += r.frames_total;
        fully_drained &= r.fully_drained;
    }
    let hop_sum: u64 = hop_histogram.iter().map(|(&h, &n)| u64::from(h) * n).sum();
    SimEstimates {
        capacity: deliveries as f64 / source_tx as f64,
        delay: (deliveries > 0).then(|| hop_sum as f64 / deliveries as f64),
        energy: (source_tx + relay_tx) as f64 / source_tx as f64,
        reliability: distinct as f64 / injected as f64,
        source_tx,
        relay_tx,
        deliveries,
        distinct_delivered: distinct,
        hop_histogram,
        frames_injected: injected,
        frames_total: total,
        fully_drained,
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub estimates: SimEstimates,
    /// Empty unless `record_events` was set.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    id: u64,
    hops: u32,
}

/// Runs the frame process and estimates the criteria from its counts.
pub fn simulate(sol: &Solution, channel: &ChannelModel, cfg: &SimConfig) -> SimRun {
    assert!(cfg.frames > 0, "need at least one injection frame");
    let scenario = sol.scenario();
    let relays = scenario.relays();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    // Forwarded packets waiting for this frame's slots / the next frame's.
    let mut pending: Vec<Vec<Packet>> = vec![Vec::new(); relays.len()];
    let mut scheduled: Vec<Vec<Packet>> = vec![Vec::new(); relays.len()];

    let mut events = Vec::new();
    let mut source_tx = 0u64;
    let mut relay_tx = 0u64;
    let mut deliveries = 0u64;
    let mut hop_histogram: BTreeMap<u32, u64> = BTreeMap::new();
    let mut delivered_bits = vec![0u64; (cfg.frames as usize).div_ceil(64)];
    let mut distinct_delivered = 0u64;
    let mut fully_drained = false;

    let mut frame = 0u64;
    let mut tx_buf: Vec<(NodeId, Vec<Packet>)> = Vec::new();
    loop {
        let injecting = frame < cfg.frames;
        if !injecting {
            if pending.iter().all(|v| v.is_empty()) {
                fully_drained = true;
                break;
            }
            if frame >= cfg.frames + cfg.drain_frames_cap {
                break;
            }
        }

        for slot in 0..scenario.slot_count() {
            tx_buf.clear();
            if slot == 0 && injecting {
                tx_buf.push((NodeId::Source, vec![Packet { id: frame, hops: 1 }]));
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
                for p in packets {
                    if *node == NodeId::Source {
                        source_tx += 1;
                    } else {
                        relay_tx += 1;
                    }
                    if cfg.record_events {
                        events.push(Event {
                            frame,
                            slot,
                            node: *node,
                            kind: EventKind::Transmit,
                            packet: p.id,
                            hops: p.hops,
                        });
                    }
                }
            }

            for &receiver in scenario.nodes() {
                if receiver == NodeId::Source || tx_buf.iter().any(|(n, _)| *n == receiver) {
                    // Transmitting nodes cannot listen; the source never
                    // consumes packets.
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
                        if cfg.record_events {
                            events.push(Event {
                                frame,
                                slot,
                                node: receiver,
                                kind: EventKind::Receive { from: *sender },
                                packet: packet.id,
                                hops: packet.hops,
                            });
                        }
                        if receiver == NodeId::Dest {
                            deliveries += 1;
                            *hop_histogram.entry(packet.hops).or_insert(0) += 1;
                            let (w, b) = ((packet.id / 64) as usize, packet.id % 64);
                            if delivered_bits[w] & (1 << b) == 0 {
                                delivered_bits[w] |= 1 << b;
                                distinct_delivered += 1;
                            }
                        } else {
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
                                let ri = relays.iter().position(|&r| r == receiver).unwrap();
                                let next = Packet { id: packet.id, hops: packet.hops + 1 };
                                match cfg.buffer {
                                    BufferPolicy::Lossless => scheduled[ri].push(next),
                                    BufferPolicy::SingleNewest => {
                                        scheduled[ri].clear();
                                        scheduled[ri].push(next);
                                    }
                                }
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

    let hop_sum: u64 = hop_histogram.iter().map(|(&h, &n)| u64::from(h) * n).sum();
    let estimates = SimEstimates {
        capacity: deliveries as f64 / source_tx as f64,
        delay: (deliveries > 0).then(|| hop_sum as f64 / deliveries as f64),
        energy: (source_tx + relay_tx) as f64 / source_tx as f64,
        reliability: distinct_delivered as f64 / cfg.frames as f64,
        source_tx,
        relay_tx,
        deliveries,
        distinct_delivered,
        hop_histogram,
        frames_injected: cfg.frames,
        frames_total: frame,
        fully_drained,
    };
    SimRun { estimates, events }
}
