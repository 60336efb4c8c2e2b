//! Channel reservation ledger: one interval list per data channel of every
//! directed link, claimed first-fit by ascending channel index.

use crate::topology::{DLinkId, Topology};

/// Handle to a claimed interval; releasing requires the exact handle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservationRef {
    pub link: DLinkId,
    pub channel: usize,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Occupied interval on one channel: half-open `[start, end)`.
#[derive(Debug, Clone, Copy)]
struct Interval {
    start_s: f64,
    end_s: f64,
}

#[derive(Debug, Clone, Default)]
struct Channel {
    /// Sorted by start time; intervals never overlap.
    busy: Vec<Interval>,
}

impl Channel {
    /// Index of the first interval ending after `t`.
    fn first_ending_after(&self, t: f64) -> usize {
        self.busy.partition_point(|iv| iv.end_s <= t)
    }

    fn is_free(&self, start_s: f64, end_s: f64) -> bool {
        // Only the first interval ending after `start` can overlap us; it
        // does unless it begins at or after our end.
        match self.busy.get(self.first_ending_after(start_s)) {
            Some(iv) => iv.start_s >= end_s,
            None => true,
        }
    }

    fn insert(&mut self, start_s: f64, end_s: f64) {
        let at = self.busy.partition_point(|iv| iv.start_s < start_s);
        self.busy.insert(at, Interval { start_s, end_s });
    }

    /// Drops intervals that ended at or before `horizon_s`; they can never
    /// overlap a later request.
    fn prune(&mut self, horizon_s: f64) {
        let keep_from = self.first_ending_after(horizon_s);
        if keep_from > 0 {
            self.busy.drain(..keep_from);
        }
    }

    /// Removes the interval starting exactly at `start_s`, if still present.
    fn remove(&mut self, start_s: f64) -> bool {
        let at = self.busy.partition_point(|iv| iv.start_s < start_s);
        if self.busy.get(at).is_some_and(|iv| iv.start_s == start_s) {
            self.busy.remove(at);
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone)]
struct LinkLanes {
    channels: Vec<Channel>,
}

/// Reservation state for every directed link in the network.
#[derive(Debug, Clone)]
pub struct ChannelSchedule {
    links: Vec<LinkLanes>,
}

impl ChannelSchedule {
    pub fn new(topology: &Topology) -> Self {
        let links = topology
            .directed_links()
            .iter()
            .map(|link| LinkLanes {
                channels: vec![Channel::default(); link.data_channels as usize],
            })
            .collect();
        ChannelSchedule { links }
    }

    /// Claims `[start, start + duration)` on the lowest-indexed free channel
    /// of `link`. `now_s` is the current simulation time, used to retire
    /// intervals that already ended. Returns `None` when every channel is
    /// busy somewhere in the interval.
    pub fn try_reserve(
        &mut self,
        link: DLinkId,
        start_s: f64,
        duration_s: f64,
        now_s: f64,
    ) -> Option<ReservationRef> {
        let end_s = start_s + duration_s;
        let lanes = &mut self.links[link];
        for (channel, lane) in lanes.channels.iter_mut().enumerate() {
            lane.prune(now_s);
            if lane.is_free(start_s, end_s) {
                lane.insert(start_s, end_s);
                return Some(ReservationRef { link, channel, start_s, duration_s });
            }
        }
        None
    }

    /// Frees a previously claimed interval. Returns false when the interval
    /// was already retired (it ended in the past), which is not an error.
    pub fn release(&mut self, r: &ReservationRef) -> bool {
        self.links[r.link].channels[r.channel].remove(r.start_s)
    }

    /// Number of channels on `link` free throughout `[start, start + duration)`.
    pub fn free_channels(&self, link: DLinkId, start_s: f64, duration_s: f64) -> usize {
        self.links[link]
            .channels
            .iter()
            .filter(|lane| lane.is_free(start_s, start_s + duration_s))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LinkSpec, Topology};

    fn two_channel_topology() -> Topology {
        let mut link = LinkSpec::new(0, 1);
        link.data_channels = 2;
        Topology::new(2, vec![link]).unwrap()
    }

    #[test]
    fn fills_channels_first_fit_then_refuses() {
        let topo = two_channel_topology();
        let mut sched = ChannelSchedule::new(&topo);
        let a = sched.try_reserve(0, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(a.channel, 0);
        let b = sched.try_reserve(0, 1.2, 0.5, 0.0).unwrap();
        assert_eq!(b.channel, 1);
        // Both channels busy across [1.2, 1.5): refuse.
        assert!(sched.try_reserve(0, 1.3, 0.1, 0.0).is_none());
        // After both end, the first channel is free again.
        let c = sched.try_reserve(0, 2.0, 0.5, 0.0).unwrap();
        assert_eq!(c.channel, 0);
    }

    #[test]
    fn adjacent_intervals_do_not_collide() {
        let topo = two_channel_topology();
        let mut sched = ChannelSchedule::new(&topo);
        sched.try_reserve(0, 1.0, 0.5, 0.0).unwrap();
        // Half-open intervals: [1.5, 2.0) touches [1.0, 1.5) but fits on
        // the same channel.
        let b = sched.try_reserve(0, 1.5, 0.5, 0.0).unwrap();
        assert_eq!(b.channel, 0);
        let c = sched.try_reserve(0, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(c.channel, 0);
    }

    #[test]
    fn release_frees_capacity() {
        let topo = two_channel_topology();
        let mut sched = ChannelSchedule::new(&topo);
        let a = sched.try_reserve(0, 1.0, 1.0, 0.0).unwrap();
        let _b = sched.try_reserve(0, 1.0, 1.0, 0.0).unwrap();
        assert!(sched.try_reserve(0, 1.5, 0.1, 0.0).is_none());
        assert!(sched.release(&a));
        let c = sched.try_reserve(0, 1.5, 0.1, 0.0).unwrap();
        assert_eq!(c.channel, a.channel);
        // Releasing twice is a no-op.
        assert!(!sched.release(&a));
    }

    #[test]
    fn free_channel_count_tracks_overlaps() {
        let topo = two_channel_topology();
        let mut sched = ChannelSchedule::new(&topo);
        assert_eq!(sched.free_channels(0, 1.0, 1.0), 2);
        sched.try_reserve(0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(sched.free_channels(0, 1.0, 1.0), 1);
        assert_eq!(sched.free_channels(0, 2.0, 1.0), 2);
    }

    #[test]
    fn pruning_retires_past_intervals_but_release_stays_safe() {
        let topo = two_channel_topology();
        let mut sched = ChannelSchedule::new(&topo);
        let old = sched.try_reserve(0, 0.0, 0.1, 0.0).unwrap();
        // A much later request prunes the finished interval.
        sched.try_reserve(0, 10.0, 0.1, 9.0).unwrap();
        assert!(!sched.release(&old));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// No two reservations granted on the same channel ever overlap,
            /// and a refusal really means every channel was blocked.
            #[test]
            fn granted_intervals_never_overlap(
                requests in proptest::collection::vec((0f64..10.0, 0.01f64..2.0), 1..60),
            ) {
                let topo = two_channel_topology();
                let mut sched = ChannelSchedule::new(&topo);
                let mut granted: Vec<(usize, f64, f64)> = Vec::new();
                for (start, dur) in requests {
                    match sched.try_reserve(0, start, dur, 0.0) {
                        Some(r) => {
                            for &(ch, s, e) in &granted {
                                if ch == r.channel {
                                    let disjoint = e <= start || start + dur <= s;
                                    prop_assert!(disjoint, "overlap on channel {ch}");
                                }
                            }
                            granted.push((r.channel, start, start + dur));
                        }
                        None => {
                            // Every channel must have a conflicting grant.
                            for ch in 0..2 {
                                let blocked = granted.iter().any(|&(c, s, e)| {
                                    c == ch && s < start + dur && start < e
                                });
                                prop_assert!(blocked, "refused but channel {ch} was free");
                            }
                        }
                    }
                }
            }
        }
    }
}
