//! Discrete-event simulation core: moves header packets, bursts, and
//! acknowledgements through the network, resolves contention per the
//! configured scheme, and reduces each run to one set of metrics.

pub mod schedule;
pub mod traffic;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::config::{ConfigError, SimConfig};
use crate::decision::{
    decision_threshold, rebuild_routing_table, resolve_contention, resolve_contention_fast,
    ContentionCtx, Decision, DpWeights, RoutingTable, Scheme, ThresholdWeights,
};
use crate::protocol::{
    offset_sufficient, offset_time, predict_route_hops, Ack, Bhp, BurstId, Nack, NackReason,
    OffsetParams,
};
use crate::stats::{KnowledgeBase, MeterTable};
use crate::topology::{DLinkId, NodeId, RouteCatalog, Topology};
use crate::trace::{LossCause, TraceRecord};
use schedule::{ChannelSchedule, ReservationRef};
use traffic::{Generator, RetransmitJitter};

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub scheme: Scheme,
    pub topology: String,
    pub load: f64,
    pub seed: u64,
    /// Lost bursts over all generated bursts.
    pub blr: f64,
    /// Mean generation-to-delivery time over delivered bursts.
    pub mean_delay_s: f64,
    /// Deflections over deflections plus retransmissions.
    pub deflection_ratio: f64,
    /// Mean offset assigned per injection (first sends and retries alike).
    pub mean_offset_s: f64,
    /// Deflect rulings issued by contention resolution.
    pub deflections: u64,
    /// Retransmit rulings issued by contention resolution. Resends forced
    /// by an exhausted offset are not rulings and are excluded.
    pub retransmissions: u64,
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
}

impl SimMetrics {
    /// Bursts still unresolved when the horizon was reached.
    pub fn in_flight(&self) -> u64 {
        self.generated - self.delivered - self.lost
    }
}

/// Share of contention rulings that chose deflection; zero when nothing was
/// ever resolved.
pub fn deflection_ratio(deflections: u64, retransmissions: u64) -> f64 {
    let resolved = deflections + retransmissions;
    if resolved == 0 {
        0.0
    } else {
        deflections as f64 / resolved as f64
    }
}

/// Metrics plus the optional audit trace.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub metrics: SimMetrics,
    pub trace: Vec<TraceRecord>,
}

/// Runs one simulation to completion.
pub fn run(config: &SimConfig) -> Result<SimOutcome, ConfigError> {
    config.validate()?;
    let topo = config.topology_instance()?;
    let catalog = RouteCatalog::build(&topo, config.route_stretch).map_err(|e| {
        ConfigError::Invalid { key: "route_stretch", reason: e.to_string() }
    })?;
    let mut sim = Sim::new(config, topo, catalog)?;
    sim.prime();
    while let Some(Reverse(next)) = sim.queue.pop() {
        if next.time_s >= config.duration_s {
            break;
        }
        sim.handle(next.time_s, next.event);
    }
    Ok(sim.finish())
}

#[derive(Debug)]
enum Event {
    /// A node's next burst is generated.
    NextArrival { node: NodeId },
    /// A header packet finished processing at `bhp.current_node()`.
    HeaderAt { bhp: Bhp },
    /// The burst's tail reached its destination over `final_link`.
    BurstTailAt { burst: BurstId, final_link: DLinkId, path: Vec<NodeId> },
    AckAt { ack: Ack },
    NackAt { nack: Nack },
    /// The source re-injects the burst.
    Retransmit { burst: BurstId },
    /// Periodic knowledge-base, threshold, and routing-table refresh.
    StatsRefresh,
}

#[derive(Debug)]
struct Scheduled {
    time_s: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    /// Time order; simultaneous events run in scheduling order, which keeps
    /// runs bit-for-bit reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_s.total_cmp(&other.time_s).then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BurstState {
    InFlight,
    AwaitingRetransmit,
    Delivered,
    Lost,
}

#[derive(Debug)]
struct BurstRecord {
    src: NodeId,
    dst: NodeId,
    size_bytes: f64,
    first_gen_s: f64,
    /// Times the source actually resent the burst; bounded by the budget.
    retransmissions_used: u32,
    /// Times the header was actually rerouted; bounds the per-scheme cap.
    deflections: u32,
    /// Deflect rulings issued while resolving contentions for this burst,
    /// counted whether or not the chosen alternative could be reserved.
    deflect_decisions: u64,
    /// Retransmit rulings issued while resolving contentions. A resend
    /// caused by an exhausted offset involves no such ruling and is not
    /// counted here.
    retransmit_decisions: u64,
    /// Sum of assigned offsets and number of injections, for the mean.
    offsets_assigned_s: f64,
    injections: u32,
    state: BurstState,
    delivered_at_s: f64,
    /// Channel claims of the current attempt, by reserving node.
    reservations: Vec<(NodeId, ReservationRef)>,
}

/// How a contention episode ended, carried out of the resolution loop so
/// follow-up event scheduling can borrow the simulation freely.
enum Resolved {
    /// An alternative was reserved; the header (already redirected) departs
    /// over this link.
    Forward(DLinkId),
    /// Retransmission chosen; notify the source via the reverse path.
    NackToPrev { sample_link: DLinkId },
    /// Retransmission chosen at the source itself: no signaling to send.
    FailAtSource,
    /// The burst is gone.
    Dropped,
}

struct Sim<'a> {
    config: &'a SimConfig,
    topo: Topology,
    catalog: RouteCatalog,
    scheme: Scheme,
    dp_weights: DpWeights,
    th_weights: ThresholdWeights,
    offset_params: OffsetParams,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    schedule: ChannelSchedule,
    meters: MeterTable,
    kbs: Vec<KnowledgeBase>,
    tables: Vec<RoutingTable>,
    sp_th: Vec<f64>,
    outgoing: Vec<Vec<DLinkId>>,
    generators: Vec<Generator>,
    jitter: RetransmitJitter,
    records: Vec<BurstRecord>,
    trace: Vec<TraceRecord>,
}

impl<'a> Sim<'a> {
    fn new(config: &'a SimConfig, topo: Topology, catalog: RouteCatalog) -> Result<Self, ConfigError> {
        debug_assert!(topo.is_connected());
        let node_count = topo.node_count();
        let dp_weights = config.dp_weights()?;
        let th_weights = config.threshold_weights()?;
        let offset_params = config.offset_params();

        // Offered load is split evenly across nodes: each node's arrival
        // rate in bursts per second.
        let offered_bps = config.load * topo.capacity_bps();
        let rate_hz = offered_bps / (node_count as f64 * config.mean_burst_bytes * 8.0);
        let generators = (0..node_count)
            .map(|node| {
                Generator::new(config.seed, node, node_count, rate_hz, config.mean_burst_bytes)
            })
            .collect();

        let cold_kb = KnowledgeBase::new();
        let dlink_count = topo.directed_links().len();
        let tables = (0..node_count)
            .map(|node| {
                rebuild_routing_table(node, &cold_kb, &catalog, node_count, dlink_count, &dp_weights)
            })
            .collect();
        let initial_th = config
            .pinned_sp_th
            .unwrap_or_else(|| decision_threshold(0.0, 0.0, &th_weights));

        let mut outgoing = vec![Vec::new(); node_count];
        for (id, link) in topo.directed_links().iter().enumerate() {
            outgoing[link.from].push(id);
        }

        Ok(Sim {
            scheme: config.scheme,
            dp_weights,
            th_weights,
            offset_params,
            queue: BinaryHeap::new(),
            seq: 0,
            schedule: ChannelSchedule::new(&topo),
            meters: MeterTable::new(&topo, config.stats_window_s),
            kbs: vec![KnowledgeBase::new(); node_count],
            tables,
            sp_th: vec![initial_th; node_count],
            outgoing,
            generators,
            jitter: RetransmitJitter::new(config.seed, config.max_retransmit_idle_s),
            records: Vec::new(),
            trace: Vec::new(),
            config,
            topo,
            catalog,
        })
    }

    /// Schedules the first arrival of every node and the refresh cycle.
    fn prime(&mut self) {
        for node in 0..self.topo.node_count() {
            let gap = self.generators[node].next_interarrival_s();
            self.push(gap, Event::NextArrival { node });
        }
        self.push(self.config.stats_update_period_s, Event::StatsRefresh);
    }

    fn push(&mut self, time_s: f64, event: Event) {
        self.queue.push(Reverse(Scheduled { time_s, seq: self.seq, event }));
        self.seq += 1;
    }

    fn handle(&mut self, now: f64, event: Event) {
        match event {
            Event::NextArrival { node } => self.on_next_arrival(now, node),
            Event::HeaderAt { bhp } => self.on_header(now, bhp),
            Event::BurstTailAt { burst, final_link, path } => {
                self.on_tail(now, burst, final_link, path)
            }
            Event::AckAt { ack } => self.on_ack(now, ack),
            Event::NackAt { nack } => self.on_nack(now, nack),
            Event::Retransmit { burst } => self.on_retransmit(now, burst),
            Event::StatsRefresh => self.on_stats_refresh(now),
        }
    }

    fn on_next_arrival(&mut self, now: f64, node: NodeId) {
        let dst = self.generators[node].draw_destination();
        let size_bytes = self.generators[node].draw_size_bytes();
        let gap = self.generators[node].next_interarrival_s();
        self.push(now + gap, Event::NextArrival { node });

        let burst = self.records.len();
        self.records.push(BurstRecord {
            src: node,
            dst,
            size_bytes,
            first_gen_s: now,
            retransmissions_used: 0,
            deflections: 0,
            deflect_decisions: 0,
            retransmit_decisions: 0,
            offsets_assigned_s: 0.0,
            injections: 0,
            state: BurstState::InFlight,
            delivered_at_s: 0.0,
            reservations: Vec::new(),
        });
        self.inject(now, burst, false);
    }

    /// Sends (or re-sends) a burst from its source over the shortest path,
    /// with an offset budgeted for the route the scheme may actually use.
    fn inject(&mut self, now: f64, burst: BurstId, retransmission: bool) {
        let (src, dst, size_bytes, deflections, retransmissions_used) = {
            let rec = &self.records[burst];
            (rec.src, rec.dst, rec.size_bytes, rec.deflections, rec.retransmissions_used)
        };
        let predicted_hops = predict_route_hops(
            self.scheme,
            self.tables[src].toward(dst),
            self.sp_th[src],
            deflections,
            self.config.mlhdr_max_deflections,
        );
        let offset_s = offset_time(&self.offset_params, predicted_hops);
        let path = self.catalog.routes(src, dst)[0].nodes.clone();

        let rec = &mut self.records[burst];
        rec.offsets_assigned_s += offset_s;
        rec.injections += 1;
        if self.config.collect_trace {
            self.trace.push(TraceRecord::Injected {
                time_s: now,
                burst,
                src,
                dst,
                offset_s,
                predicted_hops,
                retransmission,
            });
        }

        let bhp = Bhp {
            burst,
            src,
            dst,
            size_bytes,
            path,
            pos: 0,
            offset_remaining_s: offset_s,
            route_taken: vec![src],
            deflections,
            retransmissions_used,
        };
        // The source processes the header immediately.
        self.on_header(now, bhp);
    }

    fn on_header(&mut self, now: f64, bhp: Bhp) {
        let node = bhp.current_node();
        if self.config.collect_trace {
            self.trace.push(TraceRecord::HeaderAt {
                time_s: now,
                burst: bhp.burst,
                node,
                offset_remaining_s: bhp.offset_remaining_s,
                remaining_hops: bhp.remaining_hops(),
            });
        }

        if bhp.at_destination() {
            self.on_header_at_destination(now, bhp);
            return;
        }

        if !offset_sufficient(bhp.offset_remaining_s, &self.offset_params, bhp.remaining_hops()) {
            self.fail_offset(now, bhp);
            return;
        }

        let next = bhp.next_hop().expect("transit header always has a next hop");
        let link = self
            .topo
            .dlink_id(node, next)
            .expect("routes only cross existing links");
        let start_s = now + bhp.offset_remaining_s;
        let duration_s = self.transmission_s(bhp.size_bytes, link);
        if let Some(r) = self.schedule.try_reserve(link, start_s, duration_s, now) {
            self.meters.record_offer(link, now, false);
            self.meters.record_reservation(link, start_s, duration_s);
            self.records[bhp.burst].reservations.push((node, r));
            if self.config.collect_trace {
                self.trace.push(TraceRecord::Reserved {
                    time_s: now,
                    burst: bhp.burst,
                    node,
                    link,
                    start_s,
                    duration_s,
                });
            }
            self.forward(now, bhp, link);
        } else {
            self.meters.record_offer(link, now, true);
            self.resolve(now, bhp, link);
        }
    }

    /// Burst seconds on the wire for `size_bytes` over `link`.
    fn transmission_s(&self, size_bytes: f64, link: DLinkId) -> f64 {
        size_bytes * 8.0 / self.topo.directed_link(link).channel_rate_bps
    }

    /// Advances the header over `link` after a successful reservation.
    fn forward(&mut self, now: f64, mut bhp: Bhp, link: DLinkId) {
        let d = self.topo.directed_link(link);
        bhp.pos += 1;
        bhp.offset_remaining_s -= self.offset_params.t_p_s;
        bhp.route_taken.push(d.to);
        let arrival = now + d.prop_delay_s + self.offset_params.t_p_s;
        self.push(arrival, Event::HeaderAt { bhp });
    }

    fn on_header_at_destination(&mut self, now: f64, bhp: Bhp) {
        debug_assert!(offset_sufficient(bhp.offset_remaining_s, &self.offset_params, 0));
        let taken = bhp.route_taken;
        let prev = taken[taken.len() - 2];
        let final_link = self
            .topo
            .dlink_id(prev, bhp.dst)
            .expect("the delivery hop crossed an existing link");
        let head_s = now + bhp.offset_remaining_s;
        let tail_s = head_s + self.transmission_s(bhp.size_bytes, final_link);
        self.push(tail_s, Event::BurstTailAt { burst: bhp.burst, final_link, path: taken });
    }

    /// The offset budget no longer covers the remaining route: tear down and
    /// tell the source.
    fn fail_offset(&mut self, now: f64, bhp: Bhp) {
        let node = bhp.current_node();
        if self.config.collect_trace {
            self.trace.push(TraceRecord::NackSent {
                time_s: now,
                burst: bhp.burst,
                node,
                reason: NackReason::OffsetInsufficient,
            });
        }
        if bhp.route_taken.len() == 1 {
            // Injection offsets always cover the primary route, so this is
            // unreachable; resolve it as a source-local failure if it ever
            // happens.
            debug_assert!(false, "offset cannot be insufficient at injection");
            self.source_failure(now, bhp.burst, NackReason::OffsetInsufficient);
            return;
        }
        let prev = bhp.route_taken[bhp.route_taken.len() - 2];
        let incoming = self
            .topo
            .dlink_id(prev, node)
            .expect("the header arrived over an existing link");
        let sample = self.meters.piggyback_for_nack(incoming, now);
        let pos = bhp.route_taken.len() - 2;
        let nack = Nack {
            burst: bhp.burst,
            path: bhp.route_taken,
            pos,
            sample,
            reason: NackReason::OffsetInsufficient,
        };
        let back = self
            .topo
            .dlink_id(node, prev)
            .expect("links are bidirectional");
        let hop_s = self.topo.directed_link(back).prop_delay_s;
        self.push(now + hop_s, Event::NackAt { nack });
    }

    /// A reservation was refused: consult the scheme until the episode ends
    /// in a forward, a retransmission notice, or a loss.
    fn resolve(&mut self, now: f64, mut bhp: Bhp, contended_link: DLinkId) {
        let node = bhp.current_node();
        let sp_th = self.sp_th[node];
        let resolved = {
            let routes = self.catalog.routes(node, bhp.dst);
            // Deflection ignores the remaining offset on purpose: a burst
            // rerouted onto a path its offset cannot cover is caught by the
            // arrival-time sufficiency check at the next node, which answers
            // with an offset-insufficiency notice toward the source.
            let alternatives = self.tables[node].toward(bhp.dst);
            let mut failed_links = vec![contended_link];
            let mut tried: Vec<u32> = Vec::new();
            loop {
                let ctx = ContentionCtx {
                    alternatives,
                    routes,
                    route_taken: &bhp.route_taken,
                    failed_links: &failed_links,
                    tried_routes: &tried,
                    sp_th,
                    retransmissions_used: bhp.retransmissions_used,
                    n_ret: self.config.n_ret,
                    deflections_used: bhp.deflections,
                    mlhdr_max_deflections: self.config.mlhdr_max_deflections,
                };
                // Traced runs pay for the viable-alternative census the
                // audit record wants; plain runs take the early-exit path.
                let decision = if self.config.collect_trace {
                    let outcome = resolve_contention(self.scheme, &ctx);
                    self.trace.push(TraceRecord::ContentionResolved {
                        time_s: now,
                        burst: bhp.burst,
                        node,
                        decision: outcome.decision,
                        viable_alternatives: outcome.viable_alternatives,
                        sp_th,
                    });
                    outcome.decision
                } else {
                    resolve_contention_fast(self.scheme, &ctx)
                };
                match decision {
                    Decision::Deflect { route, next_hop } => {
                        self.records[bhp.burst].deflect_decisions += 1;
                        let link = self
                            .topo
                            .dlink_id(node, next_hop)
                            .expect("table entries cross existing links");
                        let start_s = now + bhp.offset_remaining_s;
                        let duration_s = bhp.size_bytes * 8.0
                            / self.topo.directed_link(link).channel_rate_bps;
                        if let Some(r) = self.schedule.try_reserve(link, start_s, duration_s, now)
                        {
                            self.meters.record_offer(link, now, false);
                            self.meters.record_reservation(link, start_s, duration_s);
                            bhp.deflect_onto(routes[route as usize].nodes.clone());
                            let rec = &mut self.records[bhp.burst];
                            rec.deflections += 1;
                            rec.reservations.push((node, r));
                            if self.config.collect_trace {
                                self.trace.push(TraceRecord::Reserved {
                                    time_s: now,
                                    burst: bhp.burst,
                                    node,
                                    link,
                                    start_s,
                                    duration_s,
                                });
                            }
                            break Resolved::Forward(link);
                        }
                        self.meters.record_offer(link, now, true);
                        tried.push(route);
                        failed_links.push(link);
                    }
                    Decision::Retransmit => {
                        self.records[bhp.burst].retransmit_decisions += 1;
                        break if bhp.route_taken.len() == 1 {
                            Resolved::FailAtSource
                        } else {
                            Resolved::NackToPrev { sample_link: failed_links[0] }
                        };
                    }
                    Decision::Drop => {
                        // The burst dies here; upstream channels stay
                        // claimed because the burst still crosses them.
                        let rec = &mut self.records[bhp.burst];
                        rec.state = BurstState::Lost;
                        rec.reservations.clear();
                        if self.config.collect_trace {
                            self.trace.push(TraceRecord::Lost {
                                time_s: now,
                                burst: bhp.burst,
                                node,
                                cause: LossCause::Contention,
                            });
                        }
                        break Resolved::Dropped;
                    }
                }
            }
        };

        match resolved {
            Resolved::Forward(link) => self.forward(now, bhp, link),
            Resolved::NackToPrev { sample_link } => {
                if self.config.collect_trace {
                    self.trace.push(TraceRecord::NackSent {
                        time_s: now,
                        burst: bhp.burst,
                        node,
                        reason: NackReason::Contention,
                    });
                }
                let sample = self.meters.piggyback_for_nack(sample_link, now);
                let prev = bhp.route_taken[bhp.route_taken.len() - 2];
                let pos = bhp.route_taken.len() - 2;
                let nack = Nack {
                    burst: bhp.burst,
                    path: bhp.route_taken,
                    pos,
                    sample,
                    reason: NackReason::Contention,
                };
                let back = self
                    .topo
                    .dlink_id(node, prev)
                    .expect("links are bidirectional");
                let hop_s = self.topo.directed_link(back).prop_delay_s;
                self.push(now + hop_s, Event::NackAt { nack });
            }
            Resolved::FailAtSource => self.source_failure(now, bhp.burst, NackReason::Contention),
            Resolved::Dropped => {}
        }
    }

    fn on_tail(&mut self, now: f64, burst: BurstId, final_link: DLinkId, path: Vec<NodeId>) {
        let rec = &mut self.records[burst];
        rec.state = BurstState::Delivered;
        rec.delivered_at_s = now;
        rec.reservations.clear();
        if self.config.collect_trace {
            self.trace.push(TraceRecord::Delivered { time_s: now, burst });
        }

        let sample = self.meters.piggyback_for_ack(final_link, now);
        let pos = path.len() - 2;
        let prev = path[pos];
        let dst = path[pos + 1];
        let back = self
            .topo
            .dlink_id(dst, prev)
            .expect("links are bidirectional");
        let hop_s = self.topo.directed_link(back).prop_delay_s;
        let ack = Ack { burst, path, pos, sample };
        self.push(now + hop_s, Event::AckAt { ack });
    }

    fn on_ack(&mut self, now: f64, mut ack: Ack) {
        let node = ack.path[ack.pos];
        self.kbs[node].ingest(&ack.sample);
        if ack.pos == 0 {
            return;
        }
        let prev = ack.path[ack.pos - 1];
        let back = self
            .topo
            .dlink_id(node, prev)
            .expect("links are bidirectional");
        let hop_s = self.topo.directed_link(back).prop_delay_s;
        ack.pos -= 1;
        self.push(now + hop_s, Event::AckAt { ack });
    }

    fn on_nack(&mut self, now: f64, mut nack: Nack) {
        let node = nack.path[nack.pos];
        self.kbs[node].ingest(&nack.sample);

        // Free the channel this node had claimed for the failed attempt.
        let claim = {
            let rec = &mut self.records[nack.burst];
            rec.reservations
                .iter()
                .position(|(n, _)| *n == node)
                .map(|i| rec.reservations.remove(i).1)
        };
        if let Some(r) = claim {
            self.schedule.release(&r);
        }

        if nack.pos == 0 {
            self.source_failure(now, nack.burst, nack.reason);
            return;
        }
        let prev = nack.path[nack.pos - 1];
        let back = self
            .topo
            .dlink_id(node, prev)
            .expect("links are bidirectional");
        let hop_s = self.topo.directed_link(back).prop_delay_s;
        nack.pos -= 1;
        self.push(now + hop_s, Event::NackAt { nack });
    }

    /// The source learned the attempt failed: retry after an idle delay if
    /// budget remains, otherwise the burst is lost.
    fn source_failure(&mut self, now: f64, burst: BurstId, reason: NackReason) {
        // Pure deflection never falls back to the source; every other scheme
        // may resend until its retransmission budget runs out.
        let can_retry = self.scheme != Scheme::DeflectOnly
            && self.records[burst].retransmissions_used < self.config.n_ret;
        if can_retry {
            let idle_s = self.jitter.draw_idle_s();
            let resend_at_s = now + idle_s;
            let rec = &mut self.records[burst];
            rec.retransmissions_used += 1;
            rec.state = BurstState::AwaitingRetransmit;
            if self.config.collect_trace {
                self.trace.push(TraceRecord::RetransmitScheduled {
                    time_s: now,
                    burst,
                    resend_at_s,
                });
            }
            self.push(resend_at_s, Event::Retransmit { burst });
        } else {
            let rec = &mut self.records[burst];
            rec.state = BurstState::Lost;
            rec.reservations.clear();
            let src = rec.src;
            if self.config.collect_trace {
                let cause = match reason {
                    NackReason::Contention => LossCause::Contention,
                    NackReason::OffsetInsufficient => LossCause::OffsetExhausted,
                };
                self.trace.push(TraceRecord::Lost { time_s: now, burst, node: src, cause });
            }
        }
    }

    fn on_retransmit(&mut self, now: f64, burst: BurstId) {
        self.records[burst].state = BurstState::InFlight;
        self.inject(now, burst, true);
    }

    /// Periodic refresh: every node reads its own output links, recomputes
    /// its threshold from what it knows of the whole network, and rescores
    /// its routing table.
    fn on_stats_refresh(&mut self, now: f64) {
        // Fewest-hops and retransmit-only behavior never reads the
        // score-dependent parts of the table (their route choices depend only
        // on catalog order), so rescoring is skipped for those schemes.
        let rescore_tables = matches!(self.scheme, Scheme::Ahdr | Scheme::DeflectOnly);
        let dlink_count = self.topo.directed_links().len();
        for node in 0..self.topo.node_count() {
            for i in 0..self.outgoing[node].len() {
                let link = self.outgoing[node][i];
                let sample = self.meters.sample(link, now);
                self.kbs[node].ingest(&sample);
            }
            let threshold = match self.config.pinned_sp_th {
                Some(pinned) => pinned,
                None => {
                    let (blr_topo, u_topo) = self.kbs[node].network_aggregates();
                    decision_threshold(blr_topo, u_topo, &self.th_weights)
                }
            };
            self.sp_th[node] = threshold;
            if rescore_tables {
                self.tables[node] = rebuild_routing_table(
                    node,
                    &self.kbs[node],
                    &self.catalog,
                    self.topo.node_count(),
                    dlink_count,
                    &self.dp_weights,
                );
            }
        }
        self.push(now + self.config.stats_update_period_s, Event::StatsRefresh);
    }

    /// Reduces burst records to run metrics. Only bursts first generated at
    /// or after the warmup instant count.
    fn finish(self) -> SimOutcome {
        let warmup = self.config.warmup_s;
        let mut generated = 0u64;
        let mut delivered = 0u64;
        let mut lost = 0u64;
        let mut deflections = 0u64;
        let mut retransmissions = 0u64;
        let mut delay_sum = 0.0;
        let mut offset_sum = 0.0;
        let mut injections = 0u64;
        for rec in &self.records {
            if rec.first_gen_s < warmup {
                continue;
            }
            generated += 1;
            deflections += rec.deflect_decisions;
            retransmissions += rec.retransmit_decisions;
            offset_sum += rec.offsets_assigned_s;
            injections += u64::from(rec.injections);
            match rec.state {
                BurstState::Delivered => {
                    delivered += 1;
                    delay_sum += rec.delivered_at_s - rec.first_gen_s;
                }
                BurstState::Lost => lost += 1,
                BurstState::InFlight | BurstState::AwaitingRetransmit => {}
            }
        }
        let metrics = SimMetrics {
            scheme: self.scheme,
            topology: self.config.topology.clone(),
            load: self.config.load,
            seed: self.config.seed,
            // Loss ratio over everything generated: bursts still in flight at
            // the end count against neither delivery nor loss, but they do
            // dilute the ratio rather than inflate it.
            blr: if generated == 0 { 0.0 } else { lost as f64 / generated as f64 },
            mean_delay_s: if delivered == 0 { 0.0 } else { delay_sum / delivered as f64 },
            deflection_ratio: deflection_ratio(deflections, retransmissions),
            mean_offset_s: if injections == 0 { 0.0 } else { offset_sum / injections as f64 },
            deflections,
            retransmissions,
            generated,
            delivered,
            lost,
        };
        SimOutcome { metrics, trace: self.trace }
    }
}
