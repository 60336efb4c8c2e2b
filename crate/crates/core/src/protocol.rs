//! Signaling-plane types and timing rules: header packets that precede each
//! burst, the offset budget they carry, hop prediction for sizing that
//! budget, and the acknowledgement messages that walk back to the source.

use crate::decision::{deflection_allowed, Scheme, TableEntry};
use crate::stats::StatsSample;
use crate::topology::NodeId;

/// Slack applied when comparing offset budgets, absorbing floating-point
/// dust from repeated subtraction so an exactly-budgeted burst still passes.
pub const OFFSET_SLACK_S: f64 = 1e-12;

/// Control-plane timing constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetParams {
    /// Time a node needs to process a header packet and configure its
    /// switching matrix, per hop.
    pub t_conf_s: f64,
    /// Header processing (parse/schedule) time, per hop.
    pub t_p_s: f64,
}

impl Default for OffsetParams {
    fn default() -> Self {
        OffsetParams { t_conf_s: 10e-6, t_p_s: 10e-6 }
    }
}

/// Offset a source assigns a burst expected to cross `hops` links: one
/// configuration interval plus per-hop header processing.
pub fn offset_time(p: &OffsetParams, hops: u32) -> f64 {
    p.t_conf_s + f64::from(hops) * p.t_p_s
}

/// Whether the remaining offset still covers processing over
/// `remaining_hops` links plus final configuration. Inclusive: a burst
/// whose budget exactly matches continues.
pub fn offset_sufficient(offset_remaining_s: f64, p: &OffsetParams, remaining_hops: u32) -> bool {
    offset_remaining_s + OFFSET_SLACK_S >= offset_time(p, remaining_hops)
}

/// Hop count a source should budget the offset for, given its current
/// routing table toward the destination. Schemes that may deflect budget
/// for the alternative they would deflect onto; others budget for the
/// shortest path.
///
/// `entries` must be the table's candidate list toward the destination in
/// ascending cost order. Catalog numbering orders routes by ascending
/// (hop count, node sequence), so `route == 0` is the shortest path and
/// `route == 1`, when present, is the fewest-hop alternative. This runs on
/// every injection, so each arm stops at the first entry that answers it.
pub fn predict_route_hops(
    scheme: Scheme,
    entries: &[TableEntry],
    sp_th: f64,
    deflections_used: u32,
    mlhdr_max_deflections: u32,
) -> u32 {
    let shortest = || {
        entries
            .iter()
            .find(|e| e.route == 0)
            .expect("routing table always lists the shortest path")
            .hops
    };
    match scheme {
        // Budget for the lowest-cost alternative when it would be allowed.
        Scheme::Ahdr => match entries.iter().find(|e| e.route != 0) {
            Some(e) if deflection_allowed(e.sp, sp_th) => e.hops,
            _ => shortest(),
        },
        // Budget for the fewest-hop alternative while deflections remain.
        Scheme::Mlhdr if deflections_used < mlhdr_max_deflections => {
            entries.iter().find(|e| e.route == 1).map_or_else(shortest, |e| e.hops)
        }
        Scheme::Mlhdr => shortest(),
        Scheme::RetransmitOnly => shortest(),
        Scheme::DeflectOnly => {
            entries.iter().find(|e| e.route != 0).map_or_else(shortest, |e| e.hops)
        }
    }
}

/// Identifier a source assigns each burst at first generation.
pub type BurstId = usize;

/// Burst header packet: travels one hop ahead of its burst, reserving a
/// channel at each node it crosses.
#[derive(Debug, Clone, PartialEq)]
pub struct Bhp {
    pub burst: BurstId,
    pub src: NodeId,
    pub dst: NodeId,
    pub size_bytes: f64,
    /// Intended remaining route; `path[pos]` is the node handling the
    /// header now. Replaced wholesale on deflection.
    pub path: Vec<NodeId>,
    pub pos: usize,
    /// Offset budget left between this header and its burst.
    pub offset_remaining_s: f64,
    /// Nodes the header has crossed, in order, current node last.
    pub route_taken: Vec<NodeId>,
    /// Deflections performed over the burst's lifetime.
    pub deflections: u32,
    /// Retransmissions the source has already spent on this burst.
    pub retransmissions_used: u32,
}

impl Bhp {
    pub fn current_node(&self) -> NodeId {
        self.path[self.pos]
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.path.get(self.pos + 1).copied()
    }

    pub fn remaining_hops(&self) -> u32 {
        (self.path.len() - 1 - self.pos) as u32
    }

    pub fn at_destination(&self) -> bool {
        self.current_node() == self.dst
    }

    /// Redirects the header onto a new route starting at the current node.
    pub fn deflect_onto(&mut self, new_path: Vec<NodeId>) {
        debug_assert_eq!(new_path[0], self.current_node());
        self.path = new_path;
        self.pos = 0;
        self.deflections += 1;
    }
}

/// Why a burst's reservation chain was torn down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NackReason {
    /// No output channel was free and no resolution succeeded.
    Contention,
    /// The offset budget could no longer cover the remaining hops.
    OffsetInsufficient,
}

/// Success notice walking the delivery path back to the source, carrying
/// one fresh statistics sample for every node to ingest.
#[derive(Debug, Clone, PartialEq)]
pub struct Ack {
    pub burst: BurstId,
    /// The path the burst actually took, source first.
    pub path: Vec<NodeId>,
    /// Index of the node holding the message now; walks toward zero.
    pub pos: usize,
    pub sample: StatsSample,
}

/// Failure notice walking the partial path back to the source. Transit
/// nodes release the channel they had reserved for this burst.
#[derive(Debug, Clone, PartialEq)]
pub struct Nack {
    pub burst: BurstId,
    pub path: Vec<NodeId>,
    pub pos: usize,
    pub sample: StatsSample,
    pub reason: NackReason,
}
