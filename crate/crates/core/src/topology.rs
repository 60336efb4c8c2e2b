//! Network graphs, directed links, and loop-free route enumeration.

use std::collections::HashMap;

use serde::Deserialize;
use thiserror::Error;

/// Dense node index into a topology.
pub type NodeId = usize;

/// Index into [`Topology::directed_links`]; each undirected link yields two.
pub type DLinkId = usize;

pub const DEFAULT_PROP_DELAY_S: f64 = 1e-3;
pub const DEFAULT_DATA_CHANNELS: u32 = 4;
pub const DEFAULT_CONTROL_CHANNELS: u32 = 2;
pub const DEFAULT_CHANNEL_RATE_BPS: f64 = 1e9;

/// Slack added to the route-length bound so exact boundary lengths survive
/// floating-point dust in `shortest * stretch`.
const LENGTH_BOUND_EPS: f64 = 1e-9;

const NSFNET_TOML: &str = include_str!("../data/nsfnet.toml");
const COST239_TOML: &str = include_str!("../data/cost239.toml");

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology must have at least one node")]
    NoNodes,
    #[error("link ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("link ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("link ({0}, {1}) appears more than once")]
    DuplicateLink(usize, usize),
    #[error("link ({0}, {1}): {2} must be positive")]
    NonPositiveAttr(usize, usize, &'static str),
    #[error("route stretch must be >= 1, got {0}")]
    InvalidStretch(f64),
    #[error("failed to parse topology file: {0}")]
    Parse(String),
    #[error("failed to read topology file: {0}")]
    Io(#[from] std::io::Error),
}

/// One direction of a bidirectional fiber link.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedLink {
    pub from: NodeId,
    pub to: NodeId,
    pub prop_delay_s: f64,
    pub data_channels: u32,
    pub control_channels: u32,
    pub channel_rate_bps: f64,
}

/// An undirected edge plus per-link channel attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub prop_delay_s: f64,
    pub data_channels: u32,
    pub control_channels: u32,
    pub channel_rate_bps: f64,
}

impl LinkSpec {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        LinkSpec {
            a,
            b,
            prop_delay_s: DEFAULT_PROP_DELAY_S,
            data_channels: DEFAULT_DATA_CHANNELS,
            control_channels: DEFAULT_CONTROL_CHANNELS,
            channel_rate_bps: DEFAULT_CHANNEL_RATE_BPS,
        }
    }
}

/// Immutable network graph with a deterministic directed-link numbering.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    links: Vec<LinkSpec>,
    directed: Vec<DirectedLink>,
    dlink_by_pair: HashMap<(NodeId, NodeId), DLinkId>,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds a graph from an edge list, rejecting malformed input.
    pub fn new(node_count: usize, links: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::NoNodes);
        }
        let mut seen = HashMap::new();
        for l in &links {
            if l.a >= node_count || l.b >= node_count {
                return Err(TopologyError::NodeOutOfRange(l.a, l.b, node_count));
            }
            if l.a == l.b {
                return Err(TopologyError::SelfLoop(l.a));
            }
            let key = (l.a.min(l.b), l.a.max(l.b));
            if seen.insert(key, ()).is_some() {
                return Err(TopologyError::DuplicateLink(key.0, key.1));
            }
            if l.prop_delay_s <= 0.0 {
                return Err(TopologyError::NonPositiveAttr(l.a, l.b, "prop_delay_s"));
            }
            if l.data_channels == 0 {
                return Err(TopologyError::NonPositiveAttr(l.a, l.b, "data_channels"));
            }
            if l.control_channels == 0 {
                return Err(TopologyError::NonPositiveAttr(l.a, l.b, "control_channels"));
            }
            if l.channel_rate_bps <= 0.0 {
                return Err(TopologyError::NonPositiveAttr(l.a, l.b, "channel_rate_bps"));
            }
        }

        let mut directed = Vec::with_capacity(links.len() * 2);
        let mut dlink_by_pair = HashMap::new();
        let mut adjacency = vec![Vec::new(); node_count];
        for l in &links {
            for (from, to) in [(l.a, l.b), (l.b, l.a)] {
                dlink_by_pair.insert((from, to), directed.len());
                directed.push(DirectedLink {
                    from,
                    to,
                    prop_delay_s: l.prop_delay_s,
                    data_channels: l.data_channels,
                    control_channels: l.control_channels,
                    channel_rate_bps: l.channel_rate_bps,
                });
                adjacency[from].push(to);
            }
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }

        Ok(Topology { node_count, links, directed, dlink_by_pair, adjacency })
    }

    /// The 14-node, 21-link NSFNET backbone.
    pub fn nsfnet() -> Self {
        Self::from_toml_str(NSFNET_TOML).expect("embedded nsfnet topology is valid")
    }

    /// The 11-node, 26-link COST239 pan-European network.
    pub fn cost239() -> Self {
        Self::from_toml_str(COST239_TOML).expect("embedded cost239 topology is valid")
    }

    /// Parses the structured-text topology format (node count, edge list,
    /// optional per-link attribute overrides).
    pub fn from_toml_str(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile =
            toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        file.build()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, TopologyError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn directed_links(&self) -> &[DirectedLink] {
        &self.directed
    }

    pub fn directed_link(&self, id: DLinkId) -> &DirectedLink {
        &self.directed[id]
    }

    pub fn dlink_id(&self, from: NodeId, to: NodeId) -> Option<DLinkId> {
        self.dlink_by_pair.get(&(from, to)).copied()
    }

    /// Neighbors of `node` in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    /// Fraction of realized node pairs: `L / (N * (N - 1) / 2)`.
    pub fn connectivity_degree(&self) -> f64 {
        let n = self.node_count as f64;
        self.links.len() as f64 / (n * (n - 1.0) / 2.0)
    }

    /// Total data capacity: sum over directed links of channels x rate.
    pub fn capacity_bps(&self) -> f64 {
        self.directed.iter().map(|d| d.data_channels as f64 * d.channel_rate_bps).sum()
    }

    /// True when every node can reach every other node.
    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|d| d.is_some())
    }

    /// Hop distances from `src` to every node (`None` when unreachable).
    pub fn bfs_distances(&self, src: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count];
        dist[src] = Some(0);
        let mut frontier = vec![src];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                let du = dist[u].unwrap();
                for &v in self.neighbors(u) {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    /// Minimum-hop route from `src` to `dst`; ties broken toward the
    /// lexicographically smallest node sequence. `None` when unreachable.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        if src == dst {
            return Some(vec![src]);
        }
        let dist_to_dst = self.bfs_distances(dst);
        dist_to_dst[src]?;
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            let remaining = dist_to_dst[cur].unwrap();
            // Neighbors are sorted, so the first hop that still makes
            // progress extends the lexicographically smallest sequence.
            let next = *self
                .neighbors(cur)
                .iter()
                .find(|&&v| dist_to_dst[v] == Some(remaining - 1))
                .expect("BFS distance decreases toward destination");
            path.push(next);
            cur = next;
        }
        Some(path)
    }

    /// All loop-free routes from `src` to `dst` with hop count at most
    /// `stretch` times the shortest, ordered by (hop count, node sequence).
    pub fn enumerate_routes(
        &self,
        src: NodeId,
        dst: NodeId,
        stretch: f64,
    ) -> Result<Vec<Vec<NodeId>>, TopologyError> {
        if !(stretch >= 1.0) {
            return Err(TopologyError::InvalidStretch(stretch));
        }
        if src == dst {
            return Ok(vec![vec![src]]);
        }
        let dist_to_dst = self.bfs_distances(dst);
        let Some(shortest) = dist_to_dst[src] else {
            return Ok(Vec::new());
        };
        let bound = shortest as f64 * stretch + LENGTH_BOUND_EPS;

        let mut routes = Vec::new();
        let mut visited = vec![false; self.node_count];
        visited[src] = true;
        let mut path = vec![src];
        self.route_dfs(dst, bound, &dist_to_dst, &mut visited, &mut path, &mut routes);
        routes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(routes)
    }

    fn route_dfs(
        &self,
        dst: NodeId,
        bound: f64,
        dist_to_dst: &[Option<u32>],
        visited: &mut Vec<bool>,
        path: &mut Vec<NodeId>,
        routes: &mut Vec<Vec<NodeId>>,
    ) {
        let cur = *path.last().unwrap();
        if cur == dst {
            routes.push(path.clone());
            return;
        }
        let hops_so_far = (path.len() - 1) as f64;
        for &v in self.neighbors(cur) {
            if visited[v] {
                continue;
            }
            // Even the best continuation through v must respect the bound.
            let floor = match dist_to_dst[v] {
                Some(d) => d as f64,
                None => continue,
            };
            if hops_so_far + 1.0 + floor > bound {
                continue;
            }
            visited[v] = true;
            path.push(v);
            self.route_dfs(dst, bound, dist_to_dst, visited, path, routes);
            path.pop();
            visited[v] = false;
        }
    }
}

/// A route fixed at catalog-build time: node sequence plus the directed
/// links it crosses.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRoute {
    pub nodes: Vec<NodeId>,
    pub dlinks: Vec<DLinkId>,
}

impl CatalogRoute {
    pub fn hops(&self) -> u32 {
        self.dlinks.len() as u32
    }

    pub fn next_hop(&self) -> NodeId {
        self.nodes[1]
    }
}

/// All qualifying routes for every ordered node pair, precomputed once per
/// (topology, stretch). Entry 0 of each pair is the shortest path.
#[derive(Debug, Clone)]
pub struct RouteCatalog {
    node_count: usize,
    stretch: f64,
    per_pair: Vec<Vec<CatalogRoute>>,
}

impl RouteCatalog {
    pub fn build(topo: &Topology, stretch: f64) -> Result<Self, TopologyError> {
        let n = topo.node_count();
        let mut per_pair = Vec::with_capacity(n * n);
        for src in 0..n {
            for dst in 0..n {
                if src == dst {
                    per_pair.push(Vec::new());
                    continue;
                }
                let routes = topo
                    .enumerate_routes(src, dst, stretch)?
                    .into_iter()
                    .map(|nodes| {
                        let dlinks = nodes
                            .windows(2)
                            .map(|w| topo.dlink_id(w[0], w[1]).expect("route follows links"))
                            .collect();
                        CatalogRoute { nodes, dlinks }
                    })
                    .collect();
                per_pair.push(routes);
            }
        }
        Ok(RouteCatalog { node_count: n, stretch, per_pair })
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Routes from `src` to `dst`, shortest first; empty when unreachable.
    pub fn routes(&self, src: NodeId, dst: NodeId) -> &[CatalogRoute] {
        &self.per_pair[src * self.node_count + dst]
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    nodes: usize,
    #[serde(default)]
    default_prop_delay_s: Option<f64>,
    #[serde(default)]
    default_data_channels: Option<u32>,
    #[serde(default)]
    default_control_channels: Option<u32>,
    #[serde(default)]
    default_channel_rate_bps: Option<f64>,
    links: Vec<LinkEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LinkEntry {
    Pair(usize, usize),
    Detailed {
        a: usize,
        b: usize,
        #[serde(default)]
        prop_delay_s: Option<f64>,
        #[serde(default)]
        data_channels: Option<u32>,
        #[serde(default)]
        control_channels: Option<u32>,
        #[serde(default)]
        channel_rate_bps: Option<f64>,
    },
}

impl TopologyFile {
    fn build(self) -> Result<Topology, TopologyError> {
        let prop = self.default_prop_delay_s.unwrap_or(DEFAULT_PROP_DELAY_S);
        let data = self.default_data_channels.unwrap_or(DEFAULT_DATA_CHANNELS);
        let control = self.default_control_channels.unwrap_or(DEFAULT_CONTROL_CHANNELS);
        let rate = self.default_channel_rate_bps.unwrap_or(DEFAULT_CHANNEL_RATE_BPS);
        let links = self
            .links
            .into_iter()
            .map(|entry| match entry {
                LinkEntry::Pair(a, b) => LinkSpec {
                    a,
                    b,
                    prop_delay_s: prop,
                    data_channels: data,
                    control_channels: control,
                    channel_rate_bps: rate,
                },
                LinkEntry::Detailed {
                    a,
                    b,
                    prop_delay_s,
                    data_channels,
                    control_channels,
                    channel_rate_bps,
                } => LinkSpec {
                    a,
                    b,
                    prop_delay_s: prop_delay_s.unwrap_or(prop),
                    data_channels: data_channels.unwrap_or(data),
                    control_channels: control_channels.unwrap_or(control),
                    channel_rate_bps: channel_rate_bps.unwrap_or(rate),
                },
            })
            .collect();
        Topology::new(self.nodes, links)
    }
}
