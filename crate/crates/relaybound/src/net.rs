//! Network scenarios, geometry, and the genome-to-configuration decoder.
//!
//! A configuration fixes where the relays sit and how eagerly they forward.
//! From those choices this module derives everything the criteria and the
//! simulator need: per-slot transmission rates, effective link probabilities
//! (interference- and busy-receiver-aware), and the feasibility checks that
//! a configuration must pass to count as attainable.

use crate::channel::{averaged_success, ChannelModel, Interferer};
use serde::{Deserialize, Serialize};

/// Maximum slots per frame across all scenarios.
pub const MAX_SLOTS: usize = 3;
/// Nodes are S, A, B, D; single-relay scenarios simply leave B unused.
pub const NODE_COUNT: usize = 4;
/// Pairwise distances are clamped to this floor so co-located nodes get a
/// (numerically) perfect link instead of a singular one.
pub const MIN_SEPARATION_M: f64 = 1e-6;
/// Cap on `p * x` per relay-exchange direction. Keeps the packet-echo loop
/// between the relays strictly subcritical, so the recirculation series the
/// criteria sum stays finite even for co-located relays with perfect links.
pub const EXCHANGE_CAP: f64 = 0.95;
/// Slack allowed by the feasibility checks, absorbing float round-off in the
/// constructions that hold with equality.
pub const FEAS_TOL: f64 = 1e-9;

/// Node identities. `RelayB` exists only in two-relay scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Source,
    RelayA,
    RelayB,
    Dest,
}

impl NodeId {
    pub const ALL: [NodeId; 4] = [NodeId::Source, NodeId::RelayA, NodeId::RelayB, NodeId::Dest];

    pub fn index(self) -> usize {
        match self {
            NodeId::Source => 0,
            NodeId::RelayA => 1,
            NodeId::RelayB => 2,
            NodeId::Dest => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeId::Source => "S",
            NodeId::RelayA => "A",
            NodeId::RelayB => "B",
            NodeId::Dest => "D",
        }
    }
}

/// The five slot/topology layouts under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// One relay transmitting in its own slot (2 slots, no interference).
    OneRelayDedicated,
    /// One relay sharing the single slot with the source: it interferes with
    /// the source and can only listen while idle.
    OneRelayShared,
    /// Two relays on dedicated slots (3 slots), no packet exchange between
    /// them.
    TwoRelayDedicated,
    /// Same slots as [`Scenario::TwoRelayDedicated`], but the relays also
    /// forward to each other, letting packets recirculate.
    TwoRelayExchange,
    /// Two relays sharing one slot (2 slots), interfering with each other.
    TwoRelayShared,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::OneRelayDedicated,
        Scenario::OneRelayShared,
        Scenario::TwoRelayDedicated,
        Scenario::TwoRelayExchange,
        Scenario::TwoRelayShared,
    ];

    /// Stable 1-based identifier used in file names and reports.
    pub fn index(self) -> u8 {
        match self {
            Scenario::OneRelayDedicated => 1,
            Scenario::OneRelayShared => 2,
            Scenario::TwoRelayDedicated => 3,
            Scenario::TwoRelayExchange => 4,
            Scenario::TwoRelayShared => 5,
        }
    }

    pub fn from_index(i: u8) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.index() == i)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Scenario::OneRelayDedicated => "one relay, own slot",
            Scenario::OneRelayShared => "one relay, shares the source slot",
            Scenario::TwoRelayDedicated => "two relays, own slots, no exchange",
            Scenario::TwoRelayExchange => "two relays, own slots, mutual exchange",
            Scenario::TwoRelayShared => "two relays, one shared slot",
        }
    }

    pub fn relay_count(self) -> usize {
        match self {
            Scenario::OneRelayDedicated | Scenario::OneRelayShared => 1,
            _ => 2,
        }
    }

    pub fn relays(self) -> &'static [NodeId] {
        match self.relay_count() {
            1 => &[NodeId::RelayA],
            _ => &[NodeId::RelayA, NodeId::RelayB],
        }
    }

    /// Nodes present in the scenario, in deterministic order.
    pub fn nodes(self) -> &'static [NodeId] {
        match self.relay_count() {
            1 => &[NodeId::Source, NodeId::RelayA, NodeId::Dest],
            _ => &[NodeId::Source, NodeId::RelayA, NodeId::RelayB, NodeId::Dest],
        }
    }

    pub fn slot_count(self) -> usize {
        match self {
            Scenario::OneRelayShared => 1,
            Scenario::OneRelayDedicated | Scenario::TwoRelayShared => 2,
            Scenario::TwoRelayDedicated | Scenario::TwoRelayExchange => 3,
        }
    }

    /// Slot (0-based) in which the node transmits, if it transmits at all.
    /// The source always owns slot 0.
    pub fn tx_slot(self, node: NodeId) -> Option<usize> {
        match (self, node) {
            (_, NodeId::Source) => Some(0),
            (_, NodeId::Dest) => None,
            (Scenario::OneRelayDedicated, NodeId::RelayA) => Some(1),
            (Scenario::OneRelayShared, NodeId::RelayA) => Some(0),
            (Scenario::TwoRelayDedicated | Scenario::TwoRelayExchange, NodeId::RelayA) => Some(1),
            (Scenario::TwoRelayDedicated | Scenario::TwoRelayExchange, NodeId::RelayB) => Some(2),
            (Scenario::TwoRelayShared, NodeId::RelayA | NodeId::RelayB) => Some(1),
            (_, NodeId::RelayB) => None,
        }
    }

    /// Whether the relays forward to each other.
    pub fn allows_exchange(self) -> bool {
        matches!(self, Scenario::TwoRelayExchange)
    }

    /// Genome layout:
    /// one relay: `[ax, ay, x_sa]`;
    /// two relays: `[ax, ay, bx, by, x_sa, x_sb]`,
    /// plus `[x_ab, x_ba]` when exchange is allowed.
    pub fn genome_len(self) -> usize {
        match self {
            Scenario::OneRelayDedicated | Scenario::OneRelayShared => 3,
            Scenario::TwoRelayDedicated | Scenario::TwoRelayShared => 6,
            Scenario::TwoRelayExchange => 8,
        }
    }

    /// Per-gene `(low, high)` bounds. Relays roam a `d_sd` x `d_sd` box
    /// centered on the source-destination axis; forwarding genes live in
    /// `[0, 1]`.
    pub fn gene_bounds(self, d_sd: f64) -> Vec<(f64, f64)> {
        let pos = [(0.0, d_sd), (-d_sd / 2.0, d_sd / 2.0)];
        let mut bounds = Vec::with_capacity(self.genome_len());
        for _ in 0..self.relay_count() {
            bounds.extend_from_slice(&pos);
        }
        for _ in 0..(self.genome_len() - 2 * self.relay_count()) {
            bounds.push((0.0, 1.0));
        }
        bounds
    }
}

/// A scenario paired with the source-destination distance it is studied at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyCase {
    pub scenario: Scenario,
    pub d_sd: f64,
}

impl StudyCase {
    pub fn label(&self) -> String {
        format!("sc{}@{:.0}m", self.scenario.index(), self.d_sd)
    }
}

/// The six standard configurations all benchmarks run on: every scenario at
/// 620 m (negligible direct link) except the shared-slot single relay, which
/// is studied at 310 m, plus the dedicated single relay also at 310 m (strong
/// direct link).
pub fn standard_cases() -> [StudyCase; 6] {
    [
        StudyCase { scenario: Scenario::OneRelayDedicated, d_sd: 620.0 },
        StudyCase { scenario: Scenario::OneRelayDedicated, d_sd: 310.0 },
        StudyCase { scenario: Scenario::OneRelayShared, d_sd: 310.0 },
        StudyCase { scenario: Scenario::TwoRelayDedicated, d_sd: 620.0 },
        StudyCase { scenario: Scenario::TwoRelayExchange, d_sd: 620.0 },
        StudyCase { scenario: Scenario::TwoRelayShared, d_sd: 620.0 },
    ]
}

/// Node positions. The source sits at the origin, the destination at
/// `(d_sd, 0)`; relay positions come from the genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub scenario: Scenario,
    pub d_sd: f64,
    positions: [(f64, f64); NODE_COUNT],
}

impl Topology {
    pub fn new(scenario: Scenario, d_sd: f64, relay_pos: &[(f64, f64)]) -> Topology {
        assert!(d_sd > 0.0, "source-destination distance must be positive");
        assert_eq!(relay_pos.len(), scenario.relay_count());
        let mut positions = [(0.0, 0.0); NODE_COUNT];
        positions[NodeId::Dest.index()] = (d_sd, 0.0);
        positions[NodeId::RelayA.index()] = relay_pos[0];
        if let Some(&b) = relay_pos.get(1) {
            positions[NodeId::RelayB.index()] = b;
        }
        Topology { scenario, d_sd, positions }
    }

    pub fn position(&self, node: NodeId) -> (f64, f64) {
        self.positions[node.index()]
    }

    /// Euclidean distance, clamped to [`MIN_SEPARATION_M`].
    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        let (ax, ay) = self.position(a);
        let (bx, by) = self.position(b);
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt().max(MIN_SEPARATION_M)
    }
}

/// Forwarding probabilities per directed relay edge; entries for edges a
/// scenario does not use stay at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Forwarding {
    pub source_to_a: f64,
    pub source_to_b: f64,
    pub a_to_b: f64,
    pub b_to_a: f64,
}

impl Forwarding {
    /// Probability that `relay` forwards a packet it received from `from`.
    pub fn prob(&self, from: NodeId, relay: NodeId) -> f64 {
        match (from, relay) {
            (NodeId::Source, NodeId::RelayA) => self.source_to_a,
            (NodeId::Source, NodeId::RelayB) => self.source_to_b,
            (NodeId::RelayA, NodeId::RelayB) => self.a_to_b,
            (NodeId::RelayB, NodeId::RelayA) => self.b_to_a,
            _ => 0.0,
        }
    }
}

/// Per-slot effective or conditional success probabilities, indexed
/// `[from][to][slot]`. Zero where `from` does not transmit in the slot.
pub type LinkTable = [[[f64; MAX_SLOTS]; NODE_COUNT]; NODE_COUNT];

/// Outcome of the three feasibility checks. Each field is the amount by
/// which the check is violated beyond [`FEAS_TOL`]; zero means it passes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Feasibility {
    /// Relay outflow exceeding its inflow (max over relays).
    pub conservation_excess: f64,
    /// Expected slot occupancy at a node exceeding one (max over node/slot).
    pub duplex_excess: f64,
    /// Mismatch between forwarded inflow and transmission rate (max over
    /// relays).
    pub consistency_error: f64,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violation() == 0.0
    }

    /// Total violation magnitude; the optimizer ranks infeasible
    /// configurations by this.
    pub fn violation(&self) -> f64 {
        self.conservation_excess + self.duplex_excess + self.consistency_error
    }
}

/// A fully decoded network configuration: geometry, forwarding policy,
/// derived transmission rates, and link probability tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub topology: Topology,
    pub forwarding: Forwarding,
    /// Expected transmissions per frame and slot, indexed `[node][slot]`.
    /// Values may exceed one when packet exchange multiplies traffic; the
    /// simulator then sends several packets in one slot.
    pub rates: [[f64; MAX_SLOTS]; NODE_COUNT],
    /// Reception probabilities including interference averaging and the
    /// chance that the receiver is busy transmitting.
    pub effective: LinkTable,
    /// Reception probabilities conditional on the receiver listening
    /// (interference averaging only); the simulator's averaged mode draws
    /// from these once the receiver's state is realized.
    pub conditional: LinkTable,
    /// True if any genome value had to be clamped into its bounds.
    pub genome_clamped: bool,
    /// True if a relay-exchange forwarding gene was reduced to respect
    /// [`EXCHANGE_CAP`].
    pub exchange_clamped: bool,
    pub feasibility: Feasibility,
}

impl Solution {
    pub fn scenario(&self) -> Scenario {
        self.topology.scenario
    }

    /// Effective success probability for `from -> to` in `from`'s own slot.
    pub fn link(&self, from: NodeId, to: NodeId) -> f64 {
        match self.scenario().tx_slot(from) {
            Some(u) => self.effective[from.index()][to.index()][u],
            None => 0.0,
        }
    }

    /// Total transmission rate of a node across slots.
    pub fn rate(&self, node: NodeId) -> f64 {
        self.rates[node.index()].iter().sum()
    }
}

fn occupancy(rate: f64) -> f64 {
    rate.min(1.0)
}

/// Decodes an optimizer genome into a configuration. Genes outside their
/// bounds are clamped (and flagged); the exchange cap may further reduce the
/// relay-exchange forwarding genes.
pub fn decode(
    scenario: Scenario,
    genome: &[f64],
    channel: &ChannelModel,
    d_sd: f64,
) -> Solution {
    assert_eq!(
        genome.len(),
        scenario.genome_len(),
        "genome length for {scenario:?}"
    );
    let bounds = scenario.gene_bounds(d_sd);
    let mut genes = genome.to_vec();
    let mut genome_clamped = false;
    for (g, &(lo, hi)) in genes.iter_mut().zip(&bounds) {
        let c = g.clamp(lo, hi);
        if c != *g {
            genome_clamped = true;
            *g = c;
        }
    }

    let nrelay = scenario.relay_count();
    let relay_pos: Vec<(f64, f64)> = (0..nrelay)
        .map(|k| (genes[2 * k], genes[2 * k + 1]))
        .collect();
    let topology = Topology::new(scenario, d_sd, &relay_pos);

    let x = &genes[2 * nrelay..];
    let mut forwarding = Forwarding {
        source_to_a: x[0],
        source_to_b: if nrelay == 2 { x[1] } else { 0.0 },
        a_to_b: 0.0,
        b_to_a: 0.0,
    };

    // Interference-free link successes used by the rate derivations; the
    // slots relays listen in are clean in every scenario (only the busy
    // receiver effect applies, handled explicitly below).
    let clean = |a: NodeId, b: NodeId| channel.link(topology.distance(a, b), &[]);
    let l_sa = clean(NodeId::Source, NodeId::RelayA);

    let mut exchange_clamped = false;
    let mut rates = [[0.0; MAX_SLOTS]; NODE_COUNT];
    rates[NodeId::Source.index()][0] = 1.0;
    match scenario {
        Scenario::OneRelayDedicated => {
            rates[NodeId::RelayA.index()][1] = l_sa * forwarding.source_to_a;
        }
        Scenario::OneRelayShared => {
            // The relay's own transmissions reduce its listening time, which
            // feeds back into how much it can forward: the rate is the fixed
            // point of t = (1 - t) * l * x.
            let lx = l_sa * forwarding.source_to_a;
            rates[NodeId::RelayA.index()][0] = lx / (1.0 + lx);
        }
        Scenario::TwoRelayDedicated | Scenario::TwoRelayShared => {
            let l_sb = clean(NodeId::Source, NodeId::RelayB);
            let slot_a = scenario.tx_slot(NodeId::RelayA).unwrap();
            let slot_b = scenario.tx_slot(NodeId::RelayB).unwrap();
            rates[NodeId::RelayA.index()][slot_a] = l_sa * forwarding.source_to_a;
            rates[NodeId::RelayB.index()][slot_b] = l_sb * forwarding.source_to_b;
        }
        Scenario::TwoRelayExchange => {
            let l_sb = clean(NodeId::Source, NodeId::RelayB);
            let l_ab = clean(NodeId::RelayA, NodeId::RelayB);
            forwarding.a_to_b = x[2];
            forwarding.b_to_a = x[3];
            if l_ab * forwarding.a_to_b > EXCHANGE_CAP {
                forwarding.a_to_b = EXCHANGE_CAP / l_ab;
                exchange_clamped = true;
            }
            if l_ab * forwarding.b_to_a > EXCHANGE_CAP {
                forwarding.b_to_a = EXCHANGE_CAP / l_ab;
                exchange_clamped = true;
            }
            // Rates solve the 2x2 linear system of mutual recirculation:
            // t_a = c_a + t_b * q_ba, t_b = c_b + t_a * q_ab.
            let c_a = l_sa * forwarding.source_to_a;
            let c_b = l_sb * forwarding.source_to_b;
            let q_ab = l_ab * forwarding.a_to_b;
            let q_ba = l_ab * forwarding.b_to_a;
            let q = q_ab * q_ba;
            rates[NodeId::RelayA.index()][1] = (c_a + c_b * q_ba) / (1.0 - q);
            rates[NodeId::RelayB.index()][2] = (c_b + c_a * q_ab) / (1.0 - q);
        }
    }

    let (effective, conditional) = link_tables(scenario, &topology, channel, &rates);
    let feasibility = check_feasibility(scenario, &rates, &effective, &forwarding);

    Solution {
        topology,
        forwarding,
        rates,
        effective,
        conditional,
        genome_clamped,
        exchange_clamped,
        feasibility,
    }
}

/// Builds the effective and conditional link tables for all present node
/// pairs from the per-slot rates.
fn link_tables(
    scenario: Scenario,
    topology: &Topology,
    channel: &ChannelModel,
    rates: &[[f64; MAX_SLOTS]; NODE_COUNT],
) -> (LinkTable, LinkTable) {
    let mut effective = [[[0.0; MAX_SLOTS]; NODE_COUNT]; NODE_COUNT];
    let mut conditional = [[[0.0; MAX_SLOTS]; NODE_COUNT]; NODE_COUNT];
    let nodes = scenario.nodes();
    for &from in nodes {
        let Some(u) = scenario.tx_slot(from) else { continue };
        for &to in nodes {
            if to == from {
                continue;
            }
            let mut interferers = Vec::new();
            for &other in nodes {
                if other == from || other == to || scenario.tx_slot(other) != Some(u) {
                    continue;
                }
                let act = occupancy(rates[other.index()][u]);
                if act > 0.0 {
                    interferers.push(Interferer {
                        distance_m: topology.distance(other, to),
                        activity: act,
                    });
                }
            }
            let cond = averaged_success(channel, topology.distance(from, to), &interferers);
            let listen = match scenario.tx_slot(to) {
                Some(v) if v == u => 1.0 - occupancy(rates[to.index()][u]),
                _ => 1.0,
            };
            conditional[from.index()][to.index()][u] = cond;
            effective[from.index()][to.index()][u] = listen * cond;
        }
    }
    (effective, conditional)
}

/// Runs the three feasibility checks against the decoded tables.
pub fn check_feasibility(
    scenario: Scenario,
    rates: &[[f64; MAX_SLOTS]; NODE_COUNT],
    effective: &LinkTable,
    forwarding: &Forwarding,
) -> Feasibility {
    let nodes = scenario.nodes();
    let mut conservation_excess = 0.0_f64;
    let mut consistency_error = 0.0_f64;
    for &relay in scenario.relays() {
        let outflow: f64 = rates[relay.index()].iter().sum();
        let mut inflow = 0.0;
        let mut forwarded = 0.0;
        for &from in nodes {
            if from == relay {
                continue;
            }
            let Some(u) = scenario.tx_slot(from) else { continue };
            let arrivals = rates[from.index()][u] * effective[from.index()][relay.index()][u];
            inflow += arrivals;
            forwarded += arrivals * forwarding.prob(from, relay);
        }
        conservation_excess = conservation_excess.max(outflow - inflow - FEAS_TOL);
        consistency_error = consistency_error.max((forwarded - outflow).abs() - FEAS_TOL);
    }

    // Expected busy fraction of each node per slot: listening to arrivals
    // plus its own transmissions must fit into the slot.
    let mut duplex_excess = 0.0_f64;
    for &node in nodes {
        for u in 0..scenario.slot_count() {
            let mut busy = occupancy(rates[node.index()][u]);
            for &from in nodes {
                if from == node || scenario.tx_slot(from) != Some(u) {
                    continue;
                }
                busy += occupancy(rates[from.index()][u])
                    * effective[from.index()][node.index()][u];
            }
            duplex_excess = duplex_excess.max(busy - 1.0 - FEAS_TOL);
        }
    }

    Feasibility {
        conservation_excess: conservation_excess.max(0.0),
        duplex_excess: duplex_excess.max(0.0),
        consistency_error: consistency_error.max(0.0),
    }
}
