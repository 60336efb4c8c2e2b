//! Link-load measurement and the per-node view of network state.
//!
//! Each directed link is metered where it originates: every reservation
//! attempt counts as an offer (dropped or not) and every accepted
//! reservation credits busy time. Snapshots summarize a sliding window and
//! ride acknowledgement traffic back toward sources, where nodes fold them
//! into a local knowledge base keyed by directed link.

use std::collections::{BTreeMap, VecDeque};

use crate::topology::{DLinkId, Topology};

/// Loss rate and utilization of one directed link over the meter window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Fraction of offered bursts that were refused, in [0, 1].
    pub blr: f64,
    /// Fraction of channel-time reserved, in [0, 1].
    pub utilization: f64,
}

impl LinkStats {
    pub const ZERO: LinkStats = LinkStats { blr: 0.0, utilization: 0.0 };
}

/// A snapshot of one link's stats stamped with its measurement time; the
/// unit of dissemination piggybacked on ACK/NACK messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSample {
    pub link: DLinkId,
    pub stats: LinkStats,
    pub as_of: f64,
}

/// Sliding-window meter for one directed link.
#[derive(Debug, Clone)]
pub struct LinkMeter {
    window_s: f64,
    channels: u32,
    /// (time, dropped) per reservation attempt, oldest first.
    offers: VecDeque<(f64, bool)>,
    /// (start, end) of accepted reservations, in insertion (time) order.
    reservations: VecDeque<(f64, f64)>,
}

impl LinkMeter {
    pub fn new(window_s: f64, channels: u32) -> Self {
        assert!(window_s > 0.0 && channels > 0);
        LinkMeter { window_s, channels, offers: VecDeque::new(), reservations: VecDeque::new() }
    }

    /// Records one reservation attempt at time `now`.
    pub fn record_offer(&mut self, now: f64, dropped: bool) {
        self.offers.push_back((now, dropped));
        self.expire(now);
    }

    /// Credits an accepted reservation of `duration_s` starting at `start`.
    pub fn record_reservation(&mut self, start: f64, duration_s: f64) {
        self.reservations.push_back((start, start + duration_s));
    }

    /// Stats over `[now - window, now]`; all-zero when the window is empty.
    pub fn snapshot(&self, now: f64) -> LinkStats {
        let cutoff = now - self.window_s;
        let mut offered = 0u64;
        let mut dropped = 0u64;
        for &(t, d) in &self.offers {
            if t >= cutoff {
                offered += 1;
                dropped += d as u64;
            }
        }
        let blr = if offered == 0 { 0.0 } else { dropped as f64 / offered as f64 };

        let mut busy = 0.0;
        for &(start, end) in &self.reservations {
            // Clip each reservation to the window; future remainder is
            // outside [cutoff, now] and does not count yet.
            let lo = start.max(cutoff);
            let hi = end.min(now);
            if hi > lo {
                busy += hi - lo;
            }
        }
        // Intervals released early (a failure notice frees the channel for
        // someone else) stay credited here, so the raw sum can pass full
        // occupancy; clamp to keep utilization a fraction.
        let utilization = (busy / (self.window_s * self.channels as f64)).min(1.0);
        LinkStats { blr, utilization }
    }

    /// Drops history that can no longer intersect any future window.
    /// Meter times never decrease, so anything ending before the current
    /// cutoff is dead.
    fn expire(&mut self, now: f64) {
        let cutoff = now - self.window_s;
        while self.offers.front().is_some_and(|&(t, _)| t < cutoff) {
            self.offers.pop_front();
        }
        while self.reservations.front().is_some_and(|&(_, end)| end <= cutoff) {
            self.reservations.pop_front();
        }
    }
}

/// One meter per directed link, owned by the simulation core and indexed by
/// the link id; conceptually node `from` measures link `(from, to)`.
#[derive(Debug)]
pub struct MeterTable {
    meters: Vec<LinkMeter>,
}

impl MeterTable {
    pub fn new(topo: &Topology, window_s: f64) -> Self {
        let meters = topo
            .directed_links()
            .iter()
            .map(|d| LinkMeter::new(window_s, d.data_channels))
            .collect();
        MeterTable { meters }
    }

    pub fn record_offer(&mut self, link: DLinkId, now: f64, dropped: bool) {
        self.meters[link].record_offer(now, dropped);
    }

    pub fn record_reservation(&mut self, link: DLinkId, start: f64, duration_s: f64) {
        self.meters[link].record_reservation(start, duration_s);
    }

    /// The single sample an ACK carries: the delivery link into the
    /// destination, measured as of emission time.
    pub fn piggyback_for_ack(&self, final_link: DLinkId, now: f64) -> StatsSample {
        self.sample(final_link, now)
    }

    /// The single sample a NACK carries: the link where the failure
    /// occurred, measured as of emission time.
    pub fn piggyback_for_nack(&self, failed_link: DLinkId, now: f64) -> StatsSample {
        self.sample(failed_link, now)
    }

    /// Fresh sample of one link's meter, stamped `now`. Nodes use this to
    /// read their own output links directly; remote links arrive only via
    /// piggybacked samples.
    pub fn sample(&self, link: DLinkId, now: f64) -> StatsSample {
        StatsSample { link, stats: self.meters[link].snapshot(now), as_of: now }
    }
}

/// What one node currently believes about remote links, keyed by directed
/// link id. Entries refresh as samples transit on reverse paths.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    entries: BTreeMap<DLinkId, (LinkStats, f64)>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds a sample in, keeping the freshest datum per link. An equal
    /// timestamp re-ingests (the incoming sample wins), so ingestion is
    /// idempotent.
    pub fn ingest(&mut self, sample: &StatsSample) {
        match self.entries.get(&sample.link) {
            Some(&(_, as_of)) if as_of > sample.as_of => {}
            _ => {
                self.entries.insert(sample.link, (sample.stats, sample.as_of));
            }
        }
    }

    /// Stats for one link, when known.
    pub fn link(&self, link: DLinkId) -> Option<LinkStats> {
        self.entries.get(&link).map(|&(stats, _)| stats)
    }

    /// Every known (link, stats) pair in ascending link order.
    pub fn iter(&self) -> impl Iterator<Item = (DLinkId, LinkStats)> + '_ {
        self.entries.iter().map(|(&link, &(stats, _))| (link, stats))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Unweighted mean (BLR, utilization) over every known link; (0, 0)
    /// when nothing has been learned yet.
    pub fn network_aggregates(&self) -> (f64, f64) {
        if self.entries.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.entries.len() as f64;
        let (mut blr, mut util) = (0.0, 0.0);
        for (stats, _) in self.entries.values() {
            blr += stats.blr;
            util += stats.utilization;
        }
        (blr / n, util / n)
    }

    /// (link, stats, as_of) rows in link-id order, for debug dumps.
    pub fn entries(&self) -> impl Iterator<Item = (DLinkId, LinkStats, f64)> + '_ {
        self.entries.iter().map(|(&link, &(stats, as_of))| (link, stats, as_of))
    }
}
