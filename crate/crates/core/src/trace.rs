//! Optional per-burst audit records. When tracing is enabled the engine
//! appends one record per protocol-level event, letting tests replay a
//! run's decisions, offset bookkeeping, and loss accounting.

use crate::decision::Decision;
use crate::protocol::{BurstId, NackReason};
use crate::topology::{DLinkId, NodeId};

/// Why a burst was finally counted as lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossCause {
    /// Contention at a node with no resolution left.
    Contention,
    /// The offset budget could not cover the remaining route and the
    /// retransmission budget was already spent.
    OffsetExhausted,
}

/// One protocol-level event in a traced run, in simulation order.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    /// A burst was injected at its source (first send or retransmission).
    Injected {
        time_s: f64,
        burst: BurstId,
        src: NodeId,
        dst: NodeId,
        offset_s: f64,
        predicted_hops: u32,
        retransmission: bool,
    },
    /// A header packet finished processing at a node.
    HeaderAt {
        time_s: f64,
        burst: BurstId,
        node: NodeId,
        offset_remaining_s: f64,
        remaining_hops: u32,
    },
    /// A channel was reserved on an output link.
    Reserved {
        time_s: f64,
        burst: BurstId,
        node: NodeId,
        link: DLinkId,
        start_s: f64,
        duration_s: f64,
    },
    /// A reservation was refused and the scheme picked a way out.
    ContentionResolved {
        time_s: f64,
        burst: BurstId,
        node: NodeId,
        decision: Decision,
        viable_alternatives: u32,
        sp_th: f64,
    },
    /// A failure notice was sent back toward the source.
    NackSent { time_s: f64, burst: BurstId, node: NodeId, reason: NackReason },
    /// The source scheduled the burst for another attempt.
    RetransmitScheduled { time_s: f64, burst: BurstId, resend_at_s: f64 },
    /// The burst's tail arrived at its destination.
    Delivered { time_s: f64, burst: BurstId },
    /// The burst was abandoned.
    Lost { time_s: f64, burst: BurstId, node: NodeId, cause: LossCause },
}

impl TraceRecord {
    pub fn time_s(&self) -> f64 {
        match *self {
            TraceRecord::Injected { time_s, .. }
            | TraceRecord::HeaderAt { time_s, .. }
            | TraceRecord::Reserved { time_s, .. }
            | TraceRecord::ContentionResolved { time_s, .. }
            | TraceRecord::NackSent { time_s, .. }
            | TraceRecord::RetransmitScheduled { time_s, .. }
            | TraceRecord::Delivered { time_s, .. }
            | TraceRecord::Lost { time_s, .. } => time_s,
        }
    }

    pub fn burst(&self) -> BurstId {
        match *self {
            TraceRecord::Injected { burst, .. }
            | TraceRecord::HeaderAt { burst, .. }
            | TraceRecord::Reserved { burst, .. }
            | TraceRecord::ContentionResolved { burst, .. }
            | TraceRecord::NackSent { burst, .. }
            | TraceRecord::RetransmitScheduled { burst, .. }
            | TraceRecord::Delivered { burst, .. }
            | TraceRecord::Lost { burst, .. } => burst,
        }
    }
}
