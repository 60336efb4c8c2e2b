//! Contention-resolution mathematics: per-link drop probabilities, route
//! success scores, adaptive thresholds, routing tables, and the decision
//! procedure each scheme applies when a reservation is refused.

use thiserror::Error;

use crate::stats::KnowledgeBase;
use crate::topology::{CatalogRoute, DLinkId, NodeId, RouteCatalog};

/// Tolerance for weight-sum validation.
const WEIGHT_SUM_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("{0} must lie in [0, 1], got {1}")]
    OutOfRange(&'static str, f64),
    #[error("alpha_blr + alpha_u must equal 1, got {0}")]
    AlphaSum(f64),
    #[error("beta_blr + beta_u must not exceed 1, got {0}")]
    BetaSum(f64),
}

/// Weights blending loss rate and utilization into a per-link drop
/// probability. They must sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpWeights {
    alpha_blr: f64,
    alpha_u: f64,
}

impl DpWeights {
    pub fn new(alpha_blr: f64, alpha_u: f64) -> Result<Self, WeightError> {
        for (name, v) in [("alpha_blr", alpha_blr), ("alpha_u", alpha_u)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(WeightError::OutOfRange(name, v));
            }
        }
        let sum = alpha_blr + alpha_u;
        if (sum - 1.0).abs() > WEIGHT_SUM_EPS {
            return Err(WeightError::AlphaSum(sum));
        }
        Ok(DpWeights { alpha_blr, alpha_u })
    }

    pub fn alpha_blr(&self) -> f64 {
        self.alpha_blr
    }

    pub fn alpha_u(&self) -> f64 {
        self.alpha_u
    }
}

impl Default for DpWeights {
    fn default() -> Self {
        DpWeights { alpha_blr: 0.5, alpha_u: 0.5 }
    }
}

/// Weights blending network-wide loss and utilization into the adaptive
/// deflection threshold. Their sum may not exceed one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdWeights {
    beta_blr: f64,
    beta_u: f64,
}

impl ThresholdWeights {
    pub fn new(beta_blr: f64, beta_u: f64) -> Result<Self, WeightError> {
        for (name, v) in [("beta_blr", beta_blr), ("beta_u", beta_u)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(WeightError::OutOfRange(name, v));
            }
        }
        let sum = beta_blr + beta_u;
        if sum > 1.0 + WEIGHT_SUM_EPS {
            return Err(WeightError::BetaSum(sum));
        }
        Ok(ThresholdWeights { beta_blr, beta_u })
    }

    pub fn beta_blr(&self) -> f64 {
        self.beta_blr
    }

    pub fn beta_u(&self) -> f64 {
        self.beta_u
    }
}

impl Default for ThresholdWeights {
    fn default() -> Self {
        ThresholdWeights { beta_blr: 0.4, beta_u: 0.2 }
    }
}

/// Estimated probability that a burst offered to a link is dropped there:
/// a weighted blend of the link's observed loss rate and utilization.
pub fn dropping_probability(stats_blr: f64, stats_utilization: f64, w: &DpWeights) -> f64 {
    w.alpha_blr * stats_blr + w.alpha_u * stats_utilization
}

/// Probability that a burst survives every link of `route`: the product of
/// per-link success terms. Links the node knows nothing about contribute a
/// neutral factor of one.
pub fn route_success_probability(kb: &KnowledgeBase, route: &CatalogRoute, w: &DpWeights) -> f64 {
    route
        .dlinks
        .iter()
        .map(|&dl| match kb.link(dl) {
            Some(stats) => 1.0 - dropping_probability(stats.blr, stats.utilization, w),
            None => 1.0,
        })
        .product()
}

/// Minimum route success probability a deflection must clear, derived from
/// network-wide aggregates: congested networks demand better alternatives.
pub fn decision_threshold(blr_topo: f64, u_topo: f64, w: &ThresholdWeights) -> f64 {
    w.beta_blr * blr_topo + w.beta_u * u_topo
}

/// A deflection is allowed when the route's success probability reaches the
/// threshold (inclusive).
pub fn deflection_allowed(sp: f64, sp_th: f64) -> bool {
    sp >= sp_th
}

/// Route preference metric: the complement of success probability.
pub fn route_cost(sp: f64) -> f64 {
    1.0 - sp
}

/// One candidate route toward a destination, scored at the last table
/// rebuild. `route` indexes the catalog list for the (node, dst) pair, which
/// is ordered by (hop count, node sequence) — so it doubles as the tie-break.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub route: u32,
    pub next_hop: NodeId,
    pub first_link: DLinkId,
    pub hops: u32,
    pub sp: f64,
    pub cost: f64,
}

/// Per-destination candidate routes in ascending cost order.
#[derive(Debug, Clone, Default)]
pub struct RoutingTable {
    per_dst: Vec<Vec<TableEntry>>,
}

impl RoutingTable {
    pub fn toward(&self, dst: NodeId) -> &[TableEntry] {
        &self.per_dst[dst]
    }
}

/// Rescores every catalog route from `node` against the node's current
/// knowledge base. Entries per destination are sorted by ascending cost;
/// ties fall back to fewer hops, then the smaller node sequence (both
/// encoded in the catalog index). `dlink_count` sizes the per-link factor
/// table (the number of directed links in the topology).
pub fn rebuild_routing_table(
    node: NodeId,
    kb: &KnowledgeBase,
    catalog: &RouteCatalog,
    node_count: usize,
    dlink_count: usize,
    w: &DpWeights,
) -> RoutingTable {
    // Survival factor per directed link, resolved once up front: routes
    // re-read the same few links thousands of times per rebuild, and the
    // product below must see exactly the factors a direct knowledge-base
    // lookup would produce.
    let mut factor = vec![1.0f64; dlink_count];
    for (link, stats) in kb.iter() {
        if link < dlink_count {
            factor[link] = 1.0 - dropping_probability(stats.blr, stats.utilization, w);
        }
    }
    let mut per_dst = Vec::with_capacity(node_count);
    for dst in 0..node_count {
        if dst == node {
            per_dst.push(Vec::new());
            continue;
        }
        let mut entries: Vec<TableEntry> = catalog
            .routes(node, dst)
            .iter()
            .enumerate()
            .map(|(i, route)| {
                let sp: f64 = route.dlinks.iter().map(|&dl| factor[dl]).product();
                TableEntry {
                    route: i as u32,
                    next_hop: route.next_hop(),
                    first_link: route.dlinks[0],
                    hops: route.hops(),
                    sp,
                    cost: route_cost(sp),
                }
            })
            .collect();
        entries.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.route.cmp(&b.route)));
        per_dst.push(entries);
    }
    RoutingTable { per_dst }
}

/// The contention-resolution scheme in force for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Deflect onto the best-scoring alternative when it clears the adaptive
    /// threshold; otherwise fall back to retransmission.
    Ahdr,
    /// Deflect onto the fewest-hop alternative regardless of score, limited
    /// to a fixed number of deflections per burst lifetime.
    Mlhdr,
    /// Never deflect; always resolve by retransmission until the budget runs
    /// out.
    RetransmitOnly,
    /// Always deflect while alternatives remain; never retransmit.
    DeflectOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 4] =
        [Scheme::Ahdr, Scheme::Mlhdr, Scheme::RetransmitOnly, Scheme::DeflectOnly];

    /// The snake_case name used in configuration files and result tables.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Ahdr => "ahdr",
            Scheme::Mlhdr => "mlhdr",
            Scheme::RetransmitOnly => "retransmit_only",
            Scheme::DeflectOnly => "deflect_only",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| {
                format!("unknown scheme {s:?}; expected ahdr, mlhdr, retransmit_only, or deflect_only")
            })
    }
}

/// Everything a node consults when a reservation is refused.
pub struct ContentionCtx<'a> {
    /// Routing-table entries toward the burst's destination at this node.
    pub alternatives: &'a [TableEntry],
    /// The catalog routes those entries index into.
    pub routes: &'a [CatalogRoute],
    /// Nodes the header packet has already visited (current node last).
    pub route_taken: &'a [NodeId],
    /// Output links that already refused this burst's interval.
    pub failed_links: &'a [DLinkId],
    /// Alternatives already attempted during this node visit.
    pub tried_routes: &'a [u32],
    /// Current adaptive threshold at this node.
    pub sp_th: f64,
    /// Retransmissions already consumed by this burst.
    pub retransmissions_used: u32,
    /// Retransmission budget per burst.
    pub n_ret: u32,
    /// Deflections already performed across this burst's lifetime.
    pub deflections_used: u32,
    /// Deflection budget per burst lifetime (enforced only by [`Scheme::Mlhdr`]).
    pub mlhdr_max_deflections: u32,
}

/// What to do about a refused reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Forward over the alternative catalog route with this index.
    Deflect { route: u32, next_hop: NodeId },
    /// Return the burst to its source for a delayed retry.
    Retransmit,
    /// Give the burst up as lost.
    Drop,
}

/// A decision plus how many untried alternatives were still viable when it
/// was made (for diagnostics and degenerate-mode checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionOutcome {
    pub decision: Decision,
    pub viable_alternatives: u32,
}

impl ContentionCtx<'_> {
    /// An alternative is viable when it has not been tried at this visit,
    /// its output port has not already refused this interval, and it does
    /// not revisit a node the burst has already crossed.
    fn is_viable(&self, e: &TableEntry) -> bool {
        self.route_is_viable(e.route, e.first_link)
    }

    /// Same check keyed by the route's catalog index and first link, for
    /// callers scanning the catalog directly.
    fn route_is_viable(&self, route: u32, first_link: DLinkId) -> bool {
        if self.tried_routes.contains(&route) || self.failed_links.contains(&first_link) {
            return false;
        }
        let nodes = &self.routes[route as usize].nodes;
        !nodes[1..].iter().any(|n| self.route_taken.contains(n))
    }
}

/// Resolves a contention under the given scheme. Never selects the port
/// already in contention (its link is in `failed_links`) and never repeats
/// a tried alternative; callers re-invoke it after each refused reservation
/// with an updated context.
pub fn resolve_contention(scheme: Scheme, ctx: &ContentionCtx) -> DecisionOutcome {
    let viable: Vec<&TableEntry> =
        ctx.alternatives.iter().filter(|e| ctx.is_viable(e)).collect();
    let viable_alternatives = viable.len() as u32;

    let deflect_choice = match scheme {
        // Best-scoring first: table order is ascending cost. The best
        // remaining alternative decides; if it misses the threshold every
        // worse one does too.
        Scheme::Ahdr => viable
            .first()
            .filter(|e| deflection_allowed(e.sp, ctx.sp_th))
            .copied(),
        // Fewest hops first regardless of score, while lifetime budget
        // remains; ties fall back to the catalog order.
        Scheme::Mlhdr if ctx.deflections_used < ctx.mlhdr_max_deflections => {
            viable.iter().min_by_key(|e| (e.hops, e.route)).copied()
        }
        Scheme::Mlhdr => None,
        Scheme::RetransmitOnly => None,
        Scheme::DeflectOnly => viable.first().copied(),
    };

    let decision = match deflect_choice {
        Some(e) => Decision::Deflect { route: e.route, next_hop: e.next_hop },
        None if scheme == Scheme::DeflectOnly => Decision::Drop,
        None if ctx.retransmissions_used < ctx.n_ret => Decision::Retransmit,
        None => Decision::Drop,
    };
    DecisionOutcome { decision, viable_alternatives }
}

/// Ruling-only twin of [`resolve_contention`]: the same decision without the
/// viable-alternative census, scanning no further than the entry that
/// settles the outcome. Contention is the hottest path in a saturated run,
/// and most episodes settle on the first or second candidate.
///
/// The fewest-hops rule leans on catalog numbering — routes are indexed by
/// ascending (hop count, node sequence), so the first viable catalog index
/// is the fewest-hop viable alternative. `ctx.routes` must therefore come
/// straight from a route catalog, as the engine's contexts always do;
/// [`resolve_contention`] carries no such requirement.
pub fn resolve_contention_fast(scheme: Scheme, ctx: &ContentionCtx) -> Decision {
    let deflect_choice: Option<(u32, NodeId)> = match scheme {
        // First viable entry is the best-scoring one: table order is
        // ascending cost, and if it misses the threshold every worse one
        // does too.
        Scheme::Ahdr => ctx
            .alternatives
            .iter()
            .find(|e| ctx.is_viable(e))
            .filter(|e| deflection_allowed(e.sp, ctx.sp_th))
            .map(|e| (e.route, e.next_hop)),
        Scheme::Mlhdr if ctx.deflections_used < ctx.mlhdr_max_deflections => ctx
            .routes
            .iter()
            .enumerate()
            .find(|(i, r)| ctx.route_is_viable(*i as u32, r.dlinks[0]))
            .map(|(i, r)| (i as u32, r.nodes[1])),
        Scheme::Mlhdr => None,
        Scheme::RetransmitOnly => None,
        Scheme::DeflectOnly => ctx
            .alternatives
            .iter()
            .find(|e| ctx.is_viable(e))
            .map(|e| (e.route, e.next_hop)),
    };
    match deflect_choice {
        Some((route, next_hop)) => Decision::Deflect { route, next_hop },
        None if scheme == Scheme::DeflectOnly => Decision::Drop,
        None if ctx.retransmissions_used < ctx.n_ret => Decision::Retransmit,
        None => Decision::Drop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{LinkStats, StatsSample};
    use crate::topology::{LinkSpec, Topology};

    fn kb_with(entries: &[(DLinkId, f64, f64)]) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        for &(link, blr, utilization) in entries {
            kb.ingest(&StatsSample {
                link,
                stats: LinkStats { blr, utilization },
                as_of: 1.0,
            });
        }
        kb
    }

    #[test]
    fn weight_validation() {
        assert!(DpWeights::new(0.5, 0.5).is_ok());
        assert!(DpWeights::new(1.0, 0.0).is_ok());
        assert!(DpWeights::new(0.6, 0.6).is_err());
        assert!(DpWeights::new(-0.1, 1.1).is_err());
        assert!(ThresholdWeights::new(0.4, 0.2).is_ok());
        assert!(ThresholdWeights::new(0.0, 0.0).is_ok());
        assert!(ThresholdWeights::new(0.7, 0.4).is_err());
        assert!(ThresholdWeights::new(-0.1, 0.2).is_err());
    }

    #[test]
    fn dropping_probability_examples() {
        let even = DpWeights::default();
        assert_eq!(dropping_probability(0.0, 0.0, &even), 0.0);
        assert!((dropping_probability(0.2, 0.4, &even) - 0.3).abs() < 1e-12);
        let blr_only = DpWeights::new(1.0, 0.0).unwrap();
        assert!((dropping_probability(0.37, 0.9, &blr_only) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn route_success_probability_examples() {
        // Path 0-1-2; directed links (0->1) = 0, (1->2) = 2.
        let topo = Topology::new(3, vec![LinkSpec::new(0, 1), LinkSpec::new(1, 2)]).unwrap();
        let catalog = RouteCatalog::build(&topo, 2.0).unwrap();
        let route = &catalog.routes(0, 2)[0];
        let blr_only = DpWeights::new(1.0, 0.0).unwrap();

        // Unknown links are neutral.
        assert_eq!(route_success_probability(&KnowledgeBase::new(), route, &blr_only), 1.0);

        let l0 = topo.dlink_id(0, 1).unwrap();
        let l1 = topo.dlink_id(1, 2).unwrap();
        let kb = kb_with(&[(l0, 0.1, 0.0), (l1, 0.2, 0.0)]);
        assert!((route_success_probability(&kb, route, &blr_only) - 0.72).abs() < 1e-12);

        // Single known link: complement of its drop probability.
        let one = kb_with(&[(l0, 0.25, 0.0)]);
        let direct = &catalog.routes(0, 1)[0];
        assert!((route_success_probability(&one, direct, &blr_only) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let w = ThresholdWeights::default();
        assert_eq!(decision_threshold(0.0, 0.0, &w), 0.0);
        assert!((decision_threshold(0.5, 0.5, &w) - 0.3).abs() < 1e-12);
        let blr_heavy = ThresholdWeights::new(0.55, 0.0).unwrap();
        assert!((decision_threshold(0.37, 0.8, &blr_heavy) - 0.2035).abs() < 1e-12);
    }

    #[test]
    fn deflection_allowed_is_inclusive() {
        assert!(deflection_allowed(0.2, 0.2));
        assert!(deflection_allowed(0.9, 0.2));
        assert!(!deflection_allowed(0.1, 0.2));
    }

    #[test]
    fn cost_is_complement_of_success() {
        assert_eq!(route_cost(1.0), 0.0);
        assert!((route_cost(0.72) - 0.28).abs() < 1e-12);
        for sp in [0.0, 0.25, 0.5, 0.99] {
            assert!((route_cost(sp) + sp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cold_table_prefers_short_routes() {
        let topo = Topology::cost239();
        let catalog = RouteCatalog::build(&topo, 2.0).unwrap();
        let table = rebuild_routing_table(
            0,
            &KnowledgeBase::new(),
            &catalog,
            topo.node_count(),
            topo.directed_links().len(),
            &DpWeights::default(),
        );
        for dst in 1..topo.node_count() {
            let entries = table.toward(dst);
            assert!(!entries.is_empty());
            // All costs are zero, so catalog (hops, sequence) order decides.
            assert_eq!(entries[0].route, 0, "shortest path first toward {dst}");
            for pair in entries.windows(2) {
                assert!(pair[0].route < pair[1].route);
            }
        }
    }

    #[test]
    fn congested_shortest_path_loses_first_place() {
        // Square: two 2-hop routes from 0 to 3; [0,1,3] wins the cold tie.
        let topo = Topology::new(
            4,
            vec![LinkSpec::new(0, 1), LinkSpec::new(1, 3), LinkSpec::new(0, 2), LinkSpec::new(2, 3)],
        )
        .unwrap();
        let catalog = RouteCatalog::build(&topo, 2.0).unwrap();
        let w = DpWeights::default();

        let cold = rebuild_routing_table(0, &KnowledgeBase::new(), &catalog, 4, 8, &w);
        assert_eq!(catalog.routes(0, 3)[cold.toward(3)[0].route as usize].nodes, vec![0, 1, 3]);

        // Congest (0->1): the detour becomes cheaper and is listed first.
        let kb = kb_with(&[(topo.dlink_id(0, 1).unwrap(), 0.8, 0.9)]);
        let hot = rebuild_routing_table(0, &kb, &catalog, 4, 8, &w);
        let first = &catalog.routes(0, 3)[hot.toward(3)[0].route as usize];
        assert_eq!(first.nodes, vec![0, 2, 3]);
        let entries = hot.toward(3);
        assert!(entries[0].cost < entries[1].cost);
    }

    #[test]
    fn longer_detour_can_outrank_congested_direct_link() {
        // Triangle: direct 0->1 versus the 2-hop detour through 2.
        let topo = Topology::new(
            3,
            vec![LinkSpec::new(0, 1), LinkSpec::new(0, 2), LinkSpec::new(1, 2)],
        )
        .unwrap();
        let catalog = RouteCatalog::build(&topo, 2.0).unwrap();
        let kb = kb_with(&[(topo.dlink_id(0, 1).unwrap(), 0.9, 0.8)]);
        let table = rebuild_routing_table(0, &kb, &catalog, 3, 6, &DpWeights::default());
        let first = &catalog.routes(0, 1)[table.toward(1)[0].route as usize];
        assert_eq!(first.nodes, vec![0, 2, 1]);
    }

    #[test]
    fn rebuild_is_pure() {
        let topo = Topology::nsfnet();
        let catalog = RouteCatalog::build(&topo, 1.5).unwrap();
        let kb = kb_with(&[(3, 0.4, 0.6), (17, 0.1, 0.2)]);
        let a = rebuild_routing_table(2, &kb, &catalog, 14, 42, &DpWeights::default());
        let b = rebuild_routing_table(2, &kb, &catalog, 14, 42, &DpWeights::default());
        for dst in 0..14 {
            assert_eq!(a.toward(dst), b.toward(dst));
        }
    }

    // --- resolve_contention fixtures -------------------------------------

    /// Hand-built candidate set: route ids index `routes`, which use node
    /// ids small enough to craft revisit scenarios.
    struct Fixture {
        routes: Vec<CatalogRoute>,
        entries: Vec<TableEntry>,
    }

    impl Fixture {
        /// Routes from node 0 to node 9 with the given node sequences and
        /// success probabilities; table sorted by cost like a real rebuild.
        fn new(specs: &[(&[NodeId], f64)]) -> Self {
            let routes: Vec<CatalogRoute> = specs
                .iter()
                .map(|(nodes, _)| CatalogRoute {
                    nodes: nodes.to_vec(),
                    // Directed-link ids: fabricate one per (from, to) pair as
                    // from * 100 + to, unique enough for tests.
                    dlinks: nodes.windows(2).map(|w| w[0] * 100 + w[1]).collect(),
                })
                .collect();
            let mut entries: Vec<TableEntry> = specs
                .iter()
                .enumerate()
                .map(|(i, (nodes, sp))| TableEntry {
                    route: i as u32,
                    next_hop: nodes[1],
                    first_link: nodes[0] * 100 + nodes[1],
                    hops: (nodes.len() - 1) as u32,
                    sp: *sp,
                    cost: route_cost(*sp),
                })
                .collect();
            entries.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.route.cmp(&b.route)));
            Fixture { routes, entries }
        }

        fn ctx<'a>(
            &'a self,
            route_taken: &'a [NodeId],
            failed_links: &'a [DLinkId],
            tried: &'a [u32],
        ) -> ContentionCtx<'a> {
            ContentionCtx {
                alternatives: &self.entries,
                routes: &self.routes,
                route_taken,
                failed_links,
                tried_routes: tried,
                sp_th: 0.2,
                retransmissions_used: 0,
                n_ret: 1,
                deflections_used: 0,
                mlhdr_max_deflections: 1,
            }
        }
    }

    #[test]
    fn ahdr_deflects_onto_best_alternative_above_threshold() {
        // Primary [0,1,9] contended; alternative [0,2,9] scores well.
        let f = Fixture::new(&[(&[0, 1, 9], 0.5), (&[0, 2, 9], 0.9)]);
        let out = resolve_contention(Scheme::Ahdr, &f.ctx(&[0], &[1], &[]));
        assert_eq!(out.decision, Decision::Deflect { route: 1, next_hop: 2 });
        assert_eq!(out.viable_alternatives, 1);
    }

    #[test]
    fn ahdr_retransmits_when_best_alternative_misses_threshold() {
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.1), (&[0, 3, 9], 0.05)]);
        let mut ctx = f.ctx(&[0], &[1], &[]);
        ctx.sp_th = 0.5;
        let out = resolve_contention(Scheme::Ahdr, &ctx);
        assert_eq!(out.decision, Decision::Retransmit);
        assert_eq!(out.viable_alternatives, 2);
    }

    #[test]
    fn ahdr_drops_when_retransmission_budget_is_spent() {
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.1)]);
        let mut ctx = f.ctx(&[0], &[1], &[]);
        ctx.sp_th = 0.5;
        ctx.retransmissions_used = 1;
        assert_eq!(resolve_contention(Scheme::Ahdr, &ctx).decision, Decision::Drop);
    }

    #[test]
    fn contended_port_and_tried_routes_are_excluded() {
        // Route 1 shares the contended output link (0->1) with the primary.
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 1, 5, 9], 0.85), (&[0, 2, 9], 0.8)]);
        let out = resolve_contention(Scheme::Ahdr, &f.ctx(&[0], &[1], &[]));
        assert_eq!(out.decision, Decision::Deflect { route: 2, next_hop: 2 });
        assert_eq!(out.viable_alternatives, 1);

        // After route 2 also fails, nothing remains: retransmit.
        let out = resolve_contention(Scheme::Ahdr, &f.ctx(&[0], &[1, 2], &[2]));
        assert_eq!(out.decision, Decision::Retransmit);
        assert_eq!(out.viable_alternatives, 0);
    }

    #[test]
    fn alternatives_revisiting_the_path_are_excluded() {
        // The burst already crossed node 2; [0,2,9] would loop back.
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.8), (&[0, 3, 9], 0.7)]);
        let out = resolve_contention(Scheme::Ahdr, &f.ctx(&[5, 2, 0], &[1], &[]));
        assert_eq!(out.decision, Decision::Deflect { route: 2, next_hop: 3 });
        assert_eq!(out.viable_alternatives, 1);
    }

    #[test]
    fn ahdr_with_zero_threshold_prefers_any_alternative_over_retransmit() {
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.001)]);
        let mut ctx = f.ctx(&[0], &[1], &[]);
        ctx.sp_th = 0.0;
        assert!(matches!(
            resolve_contention(Scheme::Ahdr, &ctx).decision,
            Decision::Deflect { .. }
        ));
    }

    #[test]
    fn ahdr_with_threshold_above_one_never_deflects() {
        let f = Fixture::new(&[(&[0, 1, 9], 1.0), (&[0, 2, 9], 1.0)]);
        let mut ctx = f.ctx(&[0], &[1], &[]);
        ctx.sp_th = 1.1;
        assert_eq!(resolve_contention(Scheme::Ahdr, &ctx).decision, Decision::Retransmit);
    }

    #[test]
    fn mlhdr_picks_fewest_hops_regardless_of_score() {
        // The 3-hop route scores far better, but the 2-hop one is chosen.
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 5, 9], 0.95), (&[0, 3, 9], 0.1)]);
        let out = resolve_contention(Scheme::Mlhdr, &f.ctx(&[0], &[1], &[]));
        assert_eq!(out.decision, Decision::Deflect { route: 2, next_hop: 3 });
    }

    #[test]
    fn mlhdr_budget_limits_deflections_per_lifetime() {
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.9)]);
        let mut ctx = f.ctx(&[0], &[1], &[]);
        ctx.deflections_used = 1;
        assert_eq!(resolve_contention(Scheme::Mlhdr, &ctx).decision, Decision::Retransmit);
        ctx.retransmissions_used = 1;
        assert_eq!(resolve_contention(Scheme::Mlhdr, &ctx).decision, Decision::Drop);
    }

    #[test]
    fn retransmit_only_never_deflects() {
        let f = Fixture::new(&[(&[0, 1, 9], 1.0), (&[0, 2, 9], 1.0)]);
        let ctx = f.ctx(&[0], &[1], &[]);
        assert_eq!(resolve_contention(Scheme::RetransmitOnly, &ctx).decision, Decision::Retransmit);
        let mut spent = f.ctx(&[0], &[1], &[]);
        spent.retransmissions_used = 1;
        assert_eq!(resolve_contention(Scheme::RetransmitOnly, &spent).decision, Decision::Drop);
    }

    #[test]
    fn deflect_only_never_retransmits() {
        let f = Fixture::new(&[(&[0, 1, 9], 0.9), (&[0, 2, 9], 0.0)]);
        let ctx = f.ctx(&[0], &[1], &[]);
        // Score is irrelevant without a threshold scheme: deflect.
        assert_eq!(
            resolve_contention(Scheme::DeflectOnly, &ctx).decision,
            Decision::Deflect { route: 1, next_hop: 2 }
        );
        // Out of alternatives: drop immediately, never retransmit.
        let out = resolve_contention(Scheme::DeflectOnly, &f.ctx(&[0], &[1, 2], &[1]));
        assert_eq!(out.decision, Decision::Drop);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Route sets shaped like real catalogs: numbered by ascending
        /// (hop count, node sequence), no duplicate sequences. All routes
        /// run from node 0 to node 9 through distinct mid-nodes.
        fn catalog_like_specs() -> impl Strategy<Value = Vec<(Vec<NodeId>, f64)>> {
            proptest::collection::vec(
                (proptest::collection::vec(1usize..9, 0..4), 0f64..=1.0),
                1..8,
            )
            .prop_map(|raw| {
                let mut specs: Vec<(Vec<NodeId>, f64)> = raw
                    .into_iter()
                    .map(|(mids, sp)| {
                        let mut nodes = vec![0];
                        for m in mids {
                            if !nodes.contains(&m) {
                                nodes.push(m);
                            }
                        }
                        nodes.push(9);
                        (nodes, sp)
                    })
                    .collect();
                specs.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
                specs.dedup_by(|a, b| a.0 == b.0);
                specs
            })
        }

        proptest! {
            /// The early-exit resolver and the counting resolver issue the
            /// same ruling on any catalog-ordered candidate set.
            #[test]
            fn fast_resolver_agrees_with_counted_resolver(
                specs in catalog_like_specs(),
                scheme_idx in 0usize..4,
                sp_th in 0f64..1.2,
                retransmissions_used in 0u32..2,
                n_ret in 0u32..2,
                deflections_used in 0u32..2,
                mlhdr_max_deflections in 0u32..2,
                taken_extra in proptest::collection::vec(1usize..10, 0..3),
                failed_extra in proptest::collection::vec(0usize..1000, 0..3),
                tried_mask in 0u32..256,
            ) {
                let spec_refs: Vec<(&[NodeId], f64)> =
                    specs.iter().map(|(n, sp)| (n.as_slice(), *sp)).collect();
                let f = Fixture::new(&spec_refs);
                let mut route_taken = vec![0usize];
                route_taken.extend(taken_extra);
                let mut failed_links: Vec<DLinkId> = vec![f.routes[0].dlinks[0]];
                failed_links.extend(failed_extra);
                let tried: Vec<u32> = (0..specs.len() as u32)
                    .filter(|r| tried_mask & (1 << r) != 0)
                    .collect();
                let ctx = ContentionCtx {
                    alternatives: &f.entries,
                    routes: &f.routes,
                    route_taken: &route_taken,
                    failed_links: &failed_links,
                    tried_routes: &tried,
                    sp_th,
                    retransmissions_used,
                    n_ret,
                    deflections_used,
                    mlhdr_max_deflections,
                };
                let scheme = Scheme::ALL[scheme_idx];
                prop_assert_eq!(
                    resolve_contention(scheme, &ctx).decision,
                    resolve_contention_fast(scheme, &ctx)
                );
            }

            /// Extending a route by one more link can only lower (or keep)
            /// its success probability: each factor lies in [0, 1].
            #[test]
            fn success_probability_never_rises_with_extra_links(
                drops in proptest::collection::vec((0f64..=1.0, 0f64..=1.0), 1..8),
            ) {
                // Chain of nodes 0..=n with one directed-link id per hop.
                let mut kb = KnowledgeBase::new();
                for (i, &(blr, util)) in drops.iter().enumerate() {
                    kb.ingest(&StatsSample {
                        link: i,
                        stats: LinkStats { blr, utilization: util },
                        as_of: 1.0,
                    });
                }
                let w = DpWeights::default();
                let mut prev = 1.0;
                for len in 1..=drops.len() {
                    let route = CatalogRoute {
                        nodes: (0..=len).collect(),
                        dlinks: (0..len).collect(),
                    };
                    let sp = route_success_probability(&kb, &route, &w);
                    prop_assert!(sp <= prev + 1e-12);
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&sp));
                    prev = sp;
                }
            }

            /// Table entries come out in ascending (cost, route) order, and
            /// every catalog route appears exactly once.
            #[test]
            fn rebuilt_tables_are_sorted_and_complete(
                samples in proptest::collection::vec(
                    (0usize..42, 0f64..=1.0, 0f64..=1.0, 1f64..100.0),
                    0..30,
                ),
            ) {
                let topo = Topology::nsfnet();
                let catalog = RouteCatalog::build(&topo, 1.5).unwrap();
                let mut kb = KnowledgeBase::new();
                for (link, blr, util, as_of) in samples {
                    kb.ingest(&StatsSample {
                        link,
                        stats: LinkStats { blr, utilization: util },
                        as_of,
                    });
                }
                let w = DpWeights::default();
                let node = 5;
                let table = rebuild_routing_table(
                    node,
                    &kb,
                    &catalog,
                    topo.node_count(),
                    topo.directed_links().len(),
                    &w,
                );
                for dst in 0..topo.node_count() {
                    let entries = table.toward(dst);
                    if dst == node {
                        prop_assert!(entries.is_empty());
                        continue;
                    }
                    prop_assert_eq!(entries.len(), catalog.routes(node, dst).len());
                    let mut seen: Vec<u32> = entries.iter().map(|e| e.route).collect();
                    seen.sort_unstable();
                    prop_assert!(seen.iter().enumerate().all(|(i, &r)| r == i as u32));
                    for pair in entries.windows(2) {
                        let ordered = pair[0].cost < pair[1].cost
                            || (pair[0].cost == pair[1].cost && pair[0].route < pair[1].route);
                        prop_assert!(ordered);
                    }
                    // Scores agree with a direct recomputation.
                    for e in entries {
                        let sp = route_success_probability(
                            &kb,
                            &catalog.routes(node, dst)[e.route as usize],
                            &w,
                        );
                        prop_assert!((e.sp - sp).abs() < 1e-15);
                        prop_assert!((e.cost - route_cost(sp)).abs() < 1e-15);
                    }
                }
            }
        }
    }
}
