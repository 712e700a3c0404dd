//! Per-packet performance criteria: closed forms and a path-enumeration
//! oracle.
//!
//! Both views price the same renewal process. Every frame the source emits
//! one packet; copies then travel over at most one relay hop per slot, maybe
//! bouncing between the relays where exchange is allowed, until they reach
//! the destination or die on a bad link. The closed forms sum the resulting
//! geometric series exactly; [`enumerate_paths`] reconstructs the same sums
//! path by path with explicit truncation remainders, which makes the two
//! independently comparable to float precision.

use crate::net::{NodeId, Solution};

/// Default truncation depth (in hops) for the path oracle. Deep enough that
/// even the maximally recirculating configuration leaves only a ~1e-9 tail.
pub const DEFAULT_MAX_HOPS: u32 = 400;

/// Closed-form criteria of a configuration, all per frame or per delivered
/// packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Expected packets delivered per frame, counting duplicates.
    pub capacity: f64,
    /// Expected hops per delivered packet.
    pub delay: f64,
    /// Hop-weighted delivery mass (`capacity * delay`); kept separately so a
    /// zero-capacity configuration still reports an exact quantity.
    pub delay_mass: f64,
    /// Expected transmissions per source packet, across all nodes.
    pub energy: f64,
    /// Probability that at least one copy of a packet ever arrives, from
    /// the product of per-path miss probabilities. Only defined when
    /// packets cannot recirculate (no relay exchange); recirculating copies
    /// are dependent, so no product form exists. The product treats the
    /// path families as independent, which is exact when every transmitter
    /// owns its slot. A shared slot couples the families in two opposing
    /// ways: a busy relay jams the direct hop in the frames it transmits,
    /// pushing the true distinct-delivery rate below this value, while
    /// simultaneous forwards of the same packet collide and annihilate the
    /// double-delivery overlap the product subtracts, pushing it above.
    /// Expected delivery counts are unaffected either way: capacity, delay,
    /// and energy stay exact in all scenarios.
    pub reliability: Option<f64>,
}

/// The per-link success/forward products the criteria are built from.
/// Absent nodes contribute zeros, which collapses the general two-relay
/// expressions to the single-relay ones.
#[derive(Debug, Clone, Copy)]
struct LinkSet {
    tau: f64,
    psd: f64,
    q_sa: f64,
    q_sb: f64,
    q_ab: f64,
    q_ba: f64,
    p_ad: f64,
    p_bd: f64,
    /// Round-trip product of the relay exchange loop.
    q: f64,
}

fn links(sol: &Solution) -> LinkSet {
    let fwd = &sol.forwarding;
    let q_sa = sol.link(NodeId::Source, NodeId::RelayA) * fwd.source_to_a;
    let q_sb = sol.link(NodeId::Source, NodeId::RelayB) * fwd.source_to_b;
    let q_ab = sol.link(NodeId::RelayA, NodeId::RelayB) * fwd.a_to_b;
    let q_ba = sol.link(NodeId::RelayB, NodeId::RelayA) * fwd.b_to_a;
    let q = q_ab * q_ba;
    debug_assert!(q < 0.999, "exchange loop must stay subcritical, got {q}");
    LinkSet {
        tau: sol.rates[NodeId::Source.index()][0],
        psd: sol.link(NodeId::Source, NodeId::Dest),
        q_sa,
        q_sb,
        q_ab,
        q_ba,
        p_ad: sol.link(NodeId::RelayA, NodeId::Dest),
        p_bd: sol.link(NodeId::RelayB, NodeId::Dest),
        q,
    }
}

/// Hop count of the shortest chain of positive links, ignoring forwarding
/// probabilities. Used as the delay of a configuration that delivers
/// nothing, so the metric stays finite.
fn structural_hops(sol: &Solution) -> f64 {
    let l = |a, b| sol.link(a, b) > 0.0;
    if l(NodeId::Source, NodeId::Dest) {
        return 1.0;
    }
    if (l(NodeId::Source, NodeId::RelayA) && l(NodeId::RelayA, NodeId::Dest))
        || (l(NodeId::Source, NodeId::RelayB) && l(NodeId::RelayB, NodeId::Dest))
    {
        return 2.0;
    }
    if (l(NodeId::Source, NodeId::RelayA)
        && l(NodeId::RelayA, NodeId::RelayB)
        && l(NodeId::RelayB, NodeId::Dest))
        || (l(NodeId::Source, NodeId::RelayB)
            && l(NodeId::RelayB, NodeId::RelayA)
            && l(NodeId::RelayA, NodeId::Dest))
    {
        return 3.0;
    }
    // No chain exists at all; any finite value serves a dead configuration.
    2.0
}

/// Evaluates the closed-form criteria.
///
/// Delivery paths terminate at relay A either directly (`q_sa`) or via the
/// other relay (`q_sb * q_ba`), then recirculate `n >= 0` times around the
/// exchange loop before the final hop to the destination; summing the
/// geometric series gives the per-relay delivery terms below. Energy counts
/// every relay transmission the same way, without the final hop factor.
pub fn evaluate(sol: &Solution) -> Metrics {
    let LinkSet { tau, psd, q_sa, q_sb, q_ab, q_ba, p_ad, p_bd, q } = links(sol);
    let loop_gain = 1.0 - q;

    let via_a = (q_sa + q_sb * q_ba) * p_ad;
    let via_b = (q_sb + q_sa * q_ab) * p_bd;
    let capacity = tau * (psd + (via_a + via_b) / loop_gain);

    // Hop-weighted mass of the same series: a path entering its final relay
    // at hop 2 (direct entry) or 3 (via the peer) and looping n times is
    // delivered after 2 + 2n or 3 + 2n hops.
    let mass_a = p_ad * (q_sb * q_ba * (3.0 - q) + 2.0 * q_sa);
    let mass_b = p_bd * (q_sa * q_ab * (3.0 - q) + 2.0 * q_sb);
    let delay_mass = tau * (mass_a + mass_b) / (loop_gain * loop_gain) + tau * psd;

    let energy = tau * (1.0 + (q_sa + q_sb * q_ba + q_sb + q_sa * q_ab) / loop_gain);

    let delay = if capacity > 0.0 {
        delay_mass / capacity
    } else {
        structural_hops(sol)
    };

    let reliability = if sol.scenario().allows_exchange() {
        None
    } else {
        // Loop-free copies travel disjoint paths and fail independently.
        let miss = (1.0 - tau * psd)
            * (1.0 - tau * q_sa * p_ad)
            * (1.0 - tau * q_sb * p_bd);
        Some(1.0 - miss)
    };

    Metrics { capacity, delay, delay_mass, energy, reliability }
}

/// Truncated path-by-path sums with exact geometric remainders, built
/// without the closed-form algebra so the two can cross-check each other.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathSums {
    /// Total delivery probability mass over enumerated paths.
    pub capacity: f64,
    /// Hop-weighted delivery mass over enumerated paths.
    pub delay_mass: f64,
    /// Expected relay transmissions per frame over enumerated path prefixes.
    pub relay_tx: f64,
    /// Product of per-path miss probabilities; only meaningful without
    /// recirculation, where paths are finitely many and independent.
    pub miss: Option<f64>,
    /// Exact remainders of the three sums beyond the hop limit.
    pub tail_capacity: f64,
    pub tail_delay_mass: f64,
    pub tail_relay_tx: f64,
}

impl PathSums {
    /// Expected transmissions per source packet implied by the enumerated
    /// relay activity.
    pub fn energy(&self, tau: f64) -> f64 {
        (tau + self.relay_tx) / tau
    }
}

/// Adds one geometric path family `base * q^n` (delivery at `h0 + 2n` hops)
/// to the running sums, splitting at the hop limit into enumerated terms and
/// an exact tail.
#[allow(clippy::too_many_arguments)]
fn geometric_family(
    base: f64,
    h0: u32,
    q: f64,
    max_hops: u32,
    sum: &mut f64,
    mass: &mut f64,
    tail_sum: &mut f64,
    tail_mass: &mut f64,
) {
    if base == 0.0 {
        return;
    }
    let included = if max_hops < h0 { 0 } else { (max_hops - h0) / 2 + 1 };
    let mut term = base;
    for n in 0..included {
        *sum += term;
        *mass += f64::from(h0 + 2 * n) * term;
        term *= q;
    }
    // First excluded index m: sum_{n>=m} base*q^n and its hop-weighted
    // counterpart have closed tails; term already holds base*q^m.
    let m = included;
    if term > 0.0 {
        let g = 1.0 - q;
        *tail_sum += term / g;
        *tail_mass += f64::from(h0 + 2 * m) * term / g + 2.0 * term * q / (g * g);
    }
}

/// Enumerates delivery paths and relay transmission events up to `max_hops`
/// hops, with exact tail remainders for what lies beyond.
pub fn enumerate_paths(sol: &Solution, max_hops: u32) -> PathSums {
    let LinkSet { tau, psd, q_sa, q_sb, q_ab, q_ba, p_ad, p_bd, q } = links(sol);
    let mut out = PathSums::default();

    // Direct delivery, one hop.
    if max_hops >= 1 {
        out.capacity += tau * psd;
        out.delay_mass += tau * psd;
    } else {
        out.tail_capacity += tau * psd;
        out.tail_delay_mass += tau * psd;
    }

    // Four delivery families: each relay is entered either straight from the
    // source (2 + 2n hops) or via the peer relay (3 + 2n hops), then loops n
    // times before the exit hop.
    let deliveries = [
        (tau * q_sa * p_ad, 2),
        (tau * q_sb * q_ba * p_ad, 3),
        (tau * q_sb * p_bd, 2),
        (tau * q_sa * q_ab * p_bd, 3),
    ];
    for (base, h0) in deliveries {
        geometric_family(
            base,
            h0,
            q,
            max_hops,
            &mut out.capacity,
            &mut out.delay_mass,
            &mut out.tail_capacity,
            &mut out.tail_delay_mass,
        );
    }

    // Relay transmission events are the same prefixes without the exit-link
    // factor: the relay transmits at hop h0 + 2n whether or not the packet
    // then survives.
    let emissions = [
        (tau * q_sa, 2),
        (tau * q_sb * q_ba, 3),
        (tau * q_sb, 2),
        (tau * q_sa * q_ab, 3),
    ];
    let mut mass_scratch = 0.0;
    let mut tail_scratch = 0.0;
    for (base, h0) in emissions {
        geometric_family(
            base,
            h0,
            q,
            max_hops,
            &mut out.relay_tx,
            &mut mass_scratch,
            &mut out.tail_relay_tx,
            &mut tail_scratch,
        );
    }

    if q == 0.0 {
        // Without recirculation there are at most five simple paths, each
        // succeeding independently.
        let path_probs = [
            tau * psd,
            tau * q_sa * p_ad,
            tau * q_sb * p_bd,
            tau * q_sa * q_ab * p_bd,
            tau * q_sb * q_ba * p_ad,
        ];
        out.miss = Some(path_probs.iter().map(|p| 1.0 - p).product());
    }
    out
}
