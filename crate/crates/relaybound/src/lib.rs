//! Pareto-optimal capacity/delay/energy bounds for small TDMA relay networks.
//!
//! A source node S streams packets toward a destination D, optionally helped by
//! one or two relays that probabilistically forward what they overhear. Slots
//! are assigned per node by a frame schedule; relays that share a slot with
//! another transmitter interfere with it and cannot listen while they transmit.
//!
//! The crate answers three questions about such a network:
//!
//! 1. **What is attainable?** [`criteria`] evaluates closed-form per-packet
//!    capacity, delay, and energy criteria for a given relay placement and
//!    forwarding policy, and [`pareto`] searches placement/policy space with
//!    NSGA-II to trace the attainable objective front.
//! 2. **Do the formulas describe a real system?** [`sim`] runs a stochastic
//!    frame-by-frame simulation of the same network and estimates the same
//!    metrics from packet counts, so model and simulation can be cross-checked.
//! 3. **How close can a practical scheme get?** [`coding`] replays front
//!    solutions with a binary fountain code at the source and XOR/random
//!    linear recombination at the relays, measuring the achieved
//!    delay/energy per decoded fragment against the theoretical bound.
//!
//! Five built-in scenarios cover the interesting slot layouts: a single relay
//! with its own slot, a single relay sharing the source slot, two relays on
//! dedicated slots with and without packet exchange between them, and two
//! relays sharing one slot. See [`net::Scenario`].

pub mod analysis;
pub mod channel;
pub mod coding;
pub mod criteria;
pub mod net;
pub mod pareto;
pub mod sim;

/// Splits one master seed into independent child seeds, stable across
/// platforms and thread schedules (SplitMix64 over the pair).
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
