//! Mesh network model: nodes, radios, ranges, channel assignments, realized
//! links and the conflict graph they induce.
//!
//! Nodes are addressed internally by their index in id-sorted order. For
//! generated topologies the index and the id coincide.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied to range comparisons so that nodes sitting exactly
/// on a range boundary (grid spacing == tx range) are treated as in range.
const RANGE_SLACK: f64 = 1e-9;

/// Number of layouts `gen_random` draws before giving up.
pub const RANDOM_RETRY_BUDGET: usize = 100;

pub type Channel = u16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn distance(&self, other: &Node) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Row/column layout recorded by the grid generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

/// On-disk form of a [`Topology`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub nodes: Vec<Node>,
    pub radios_per_node: usize,
    pub tx_range: f64,
    pub interference_x: usize,
    pub channel_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridShape>,
}

/// An immutable mesh network description with derived adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TopologyFile", try_from = "TopologyFile")]
pub struct Topology {
    nodes: Vec<Node>,
    radios_per_node: usize,
    tx_range: f64,
    interference_x: usize,
    channel_count: usize,
    grid: Option<GridShape>,
    neighbors: Vec<Vec<usize>>,
    pairs: Vec<(usize, usize)>,
    // row-major n*n: endpoints within interference range (diagonal true)
    interferes: Vec<bool>,
}

impl From<Topology> for TopologyFile {
    fn from(t: Topology) -> Self {
        TopologyFile {
            nodes: t.nodes,
            radios_per_node: t.radios_per_node,
            tx_range: t.tx_range,
            interference_x: t.interference_x,
            channel_count: t.channel_count,
            grid: t.grid,
        }
    }
}

impl TryFrom<TopologyFile> for Topology {
    type Error = Error;

    fn try_from(f: TopologyFile) -> Result<Self> {
        let mut topo = Topology::new(
            f.nodes,
            f.radios_per_node,
            f.tx_range,
            f.interference_x,
            f.channel_count,
        )?;
        topo.grid = f.grid;
        Ok(topo)
    }
}

impl Topology {
    pub fn new(
        mut nodes: Vec<Node>,
        radios_per_node: usize,
        tx_range: f64,
        interference_x: usize,
        channel_count: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        if radios_per_node < 1 {
            return Err(Error::InvalidTopology("radios_per_node must be >= 1".into()));
        }
        if interference_x < 1 {
            return Err(Error::InvalidTopology("interference_x must be >= 1".into()));
        }
        if channel_count < 1 {
            return Err(Error::InvalidTopology("channel_count must be >= 1".into()));
        }
        if channel_count > Channel::MAX as usize + 1 {
            return Err(Error::InvalidTopology("channel_count too large".into()));
        }
        if !(tx_range.is_finite() && tx_range > 0.0) {
            return Err(Error::InvalidTopology("tx_range must be positive".into()));
        }
        if let Some(n) = nodes.iter().find(|n| !(n.x.is_finite() && n.y.is_finite())) {
            return Err(Error::InvalidTopology(format!(
                "node {} has a non-finite position",
                n.id
            )));
        }
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidTopology(format!("duplicate node id {}", w[0].id)));
            }
        }
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                if a.x == b.x && a.y == b.y {
                    return Err(Error::InvalidTopology(format!(
                        "nodes {} and {} share a position",
                        a.id, b.id
                    )));
                }
            }
        }

        let n = nodes.len();
        let tx_limit = tx_range * (1.0 + RANGE_SLACK);
        let if_limit = tx_range * interference_x as f64 * (1.0 + RANGE_SLACK);
        let mut neighbors = vec![Vec::new(); n];
        let mut pairs = Vec::new();
        let mut interferes = vec![false; n * n];
        for i in 0..n {
            interferes[i * n + i] = true;
            for j in i + 1..n {
                let d = nodes[i].distance(&nodes[j]);
                if d <= tx_limit {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                    pairs.push((i, j));
                }
                if d <= if_limit {
                    interferes[i * n + j] = true;
                    interferes[j * n + i] = true;
                }
            }
        }

        Ok(Topology {
            nodes,
            radios_per_node,
            tx_range,
            interference_x,
            channel_count,
            grid: None,
            neighbors,
            pairs,
            interferes,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn radios_per_node(&self) -> usize {
        self.radios_per_node
    }

    pub fn radio_count(&self) -> usize {
        self.nodes.len() * self.radios_per_node
    }

    pub fn tx_range(&self) -> f64 {
        self.tx_range
    }

    pub fn interference_x(&self) -> usize {
        self.interference_x
    }

    pub fn interference_range(&self) -> f64 {
        self.tx_range * self.interference_x as f64
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    /// Potential-communication neighbors of node index `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Adjacent node-index pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn adjacent_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Whether nodes `i` and `j` are within interference range (always true for `i == j`).
    pub fn within_interference(&self, i: usize, j: usize) -> bool {
        self.interferes[i * self.nodes.len() + j]
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    /// Whether the potential-communication graph is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Copy of this topology with a different interference ratio.
    pub fn with_interference_x(&self, interference_x: usize) -> Result<Topology> {
        let mut t = Topology::new(
            self.nodes.clone(),
            self.radios_per_node,
            self.tx_range,
            interference_x,
            self.channel_count,
        )?;
        t.grid = self.grid;
        Ok(t)
    }
}

/// Parameters shared by both generators. Missing fields deserialize to the
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    pub tx_range: f64,
    pub interference_x: usize,
    pub radios_per_node: usize,
    pub channel_count: usize,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_range: 250.0,
            interference_x: 2,
            radios_per_node: 2,
            channel_count: 3,
        }
    }
}

/// `rows * cols` nodes at `(col * spacing, row * spacing)`, id `row * cols + col`.
///
/// The transmission range must admit orthogonal neighbors only.
pub fn gen_grid(rows: usize, cols: usize, spacing: f64, params: RadioParams) -> Result<Topology> {
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidTopology(format!(
            "grid needs at least one row and column, got {rows}x{cols}"
        )));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::RangeConfig(format!("spacing must be positive, got {spacing}")));
    }
    let tx = params.tx_range;
    if !(tx >= spacing && tx < spacing * std::f64::consts::SQRT_2) {
        return Err(Error::RangeConfig(format!(
            "tx_range {tx} must lie in [spacing, spacing*sqrt(2)) = [{spacing}, {:.3})",
            spacing * std::f64::consts::SQRT_2
        )));
    }
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node {
                id: (r * cols + c) as u32,
                x: c as f64 * spacing,
                y: r as f64 * spacing,
            });
        }
    }
    let mut topo = Topology::new(
        nodes,
        params.radios_per_node,
        tx,
        params.interference_x,
        params.channel_count,
    )?;
    topo.grid = Some(GridShape { rows, cols, spacing });
    Ok(topo)
}

/// `n` nodes placed uniformly in `[0, width) x [0, height)`, redrawn until
/// the potential-communication graph is connected.
pub fn gen_random(n: usize, width: f64, height: f64, params: RadioParams, seed: u64) -> Result<Topology> {
    if n < 1 {
        return Err(Error::InvalidTopology("random topology needs at least one node".into()));
    }
    if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
        return Err(Error::InvalidTopology(format!(
            "area must be positive, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RETRY_BUDGET {
        let nodes: Vec<Node> = (0..n)
            .map(|i| Node {
                id: i as u32,
                x: rng.gen_range(0.0..width),
                y: rng.gen_range(0.0..height),
            })
            .collect();
        match Topology::new(
            nodes,
            params.radios_per_node,
            params.tx_range,
            params.interference_x,
            params.channel_count,
        ) {
            Ok(topo) if topo.is_connected() => return Ok(topo),
            // coincident positions or disconnected draw
            Ok(_) | Err(Error::InvalidTopology(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConnectivityUnreachable {
        attempts: RANDOM_RETRY_BUDGET,
    })
}

/// A total mapping from every radio to a channel, stored node-major:
/// radio `r` of node index `v` lives at `v * m + r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelAssignment {
    radios_per_node: usize,
    channels: Vec<Channel>,
}

impl ChannelAssignment {
    /// Checked constructor.
    pub fn new(topo: &Topology, channels: Vec<Channel>) -> Result<Self> {
        let ca = ChannelAssignment {
            radios_per_node: topo.radios_per_node(),
            channels,
        };
        ca.validate(topo)?;
        Ok(ca)
    }

    /// Unchecked constructor; use [`ChannelAssignment::validate`] before scoring.
    pub fn from_raw(radios_per_node: usize, channels: Vec<Channel>) -> Self {
        ChannelAssignment {
            radios_per_node,
            channels,
        }
    }

    pub fn uniform(topo: &Topology, channel: Channel) -> Self {
        ChannelAssignment {
            radios_per_node: topo.radios_per_node(),
            channels: vec![channel; topo.radio_count()],
        }
    }

    /// Build from per-node channel lists.
    pub fn from_nodes(topo: &Topology, per_node: &[&[Channel]]) -> Result<Self> {
        let channels = per_node.iter().flat_map(|c| c.iter().copied()).collect();
        Self::new(topo, channels)
    }

    pub fn validate(&self, topo: &Topology) -> Result<()> {
        let expected = topo.radio_count();
        if self.radios_per_node != topo.radios_per_node() || self.channels.len() != expected {
            return Err(Error::IncompleteAssignment {
                expected,
                got: self.channels.len(),
            });
        }
        let c = topo.channel_count();
        if let Some(pos) = self.channels.iter().position(|&ch| ch as usize >= c) {
            let m = self.radios_per_node;
            return Err(Error::ChannelOutOfRange {
                node: topo.nodes()[pos / m].id,
                radio: pos % m,
                channel: self.channels[pos],
                channel_count: c,
            });
        }
        Ok(())
    }

    pub fn radios_per_node(&self) -> usize {
        self.radios_per_node
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn as_slice(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, node: usize, radio: usize) -> Channel {
        self.channels[node * self.radios_per_node + radio]
    }

    /// Channel of the radio at flat index `radio`.
    pub fn get(&self, radio: usize) -> Channel {
        self.channels[radio]
    }

    pub fn set(&mut self, radio: usize, channel: Channel) {
        self.channels[radio] = channel;
    }

    pub fn node_channels(&self, node: usize) -> &[Channel] {
        let m = self.radios_per_node;
        &self.channels[node * m..(node + 1) * m]
    }

    /// Apply a channel relabeling `perm[old] = new`.
    pub fn relabeled(&self, perm: &[Channel]) -> Self {
        ChannelAssignment {
            radios_per_node: self.radios_per_node,
            channels: self.channels.iter().map(|&c| perm[c as usize]).collect(),
        }
    }

    /// Number of same-channel radio pairs co-located on one node.
    pub fn colocated_duplicates(&self) -> usize {
        self.channels
            .chunks(self.radios_per_node)
            .map(|radios| {
                let mut count = 0;
                for (i, a) in radios.iter().enumerate() {
                    count += radios[i + 1..].iter().filter(|b| *b == a).count();
                }
                count
            })
            .sum()
    }

    pub(crate) fn nodes_share_channel(&self, a: usize, b: usize) -> bool {
        let ca = self.node_channels(a);
        self.node_channels(b).iter().any(|ch| ca.contains(ch))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    /// Node index (id-sorted order).
    pub node: usize,
    pub radio: usize,
}

/// A link between two tuned radios; `a.node < b.node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RealizedLink {
    pub a: Endpoint,
    pub b: Endpoint,
    pub channel: Channel,
}

impl RealizedLink {
    pub fn nodes(&self) -> (usize, usize) {
        (self.a.node, self.b.node)
    }
}

/// All realized links, ordered by node indices, then radio indices.
pub fn realized_links(topo: &Topology, ca: &ChannelAssignment) -> Result<Vec<RealizedLink>> {
    ca.validate(topo)?;
    Ok(links_unchecked(topo, ca))
}

pub(crate) fn links_unchecked(topo: &Topology, ca: &ChannelAssignment) -> Vec<RealizedLink> {
    let m = topo.radios_per_node();
    let mut links = Vec::new();
    for &(u, w) in topo.adjacent_pairs() {
        for ra in 0..m {
            let ch = ca.channel(u, ra);
            for rb in 0..m {
                if ca.channel(w, rb) == ch {
                    links.push(RealizedLink {
                        a: Endpoint { node: u, radio: ra },
                        b: Endpoint { node: w, radio: rb },
                        channel: ch,
                    });
                }
            }
        }
    }
    links
}

/// Realized links as vertices, conflicting pairs as undirected edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    links: Vec<RealizedLink>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl ConflictGraph {
    pub fn build(topo: &Topology, ca: &ChannelAssignment) -> Result<Self> {
        ca.validate(topo)?;
        Ok(Self::build_unchecked(topo, ca))
    }

    pub(crate) fn build_unchecked(topo: &Topology, ca: &ChannelAssignment) -> Self {
        let links = links_unchecked(topo, ca);
        let mut by_channel: Vec<Vec<usize>> = vec![Vec::new(); topo.channel_count()];
        for (i, l) in links.iter().enumerate() {
            by_channel[l.channel as usize].push(i);
        }
        let mut adjacency = vec![Vec::new(); links.len()];
        let mut edge_count = 0;
        for bucket in &by_channel {
            for (k, &i) in bucket.iter().enumerate() {
                for &j in &bucket[k + 1..] {
                    if links_interfere(topo, &links[i], &links[j]) {
                        adjacency[i].push(j);
                        adjacency[j].push(i);
                        edge_count += 1;
                    }
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        ConflictGraph {
            links,
            adjacency,
            edge_count,
        }
    }

    /// Graph over explicit links and edges; edges are symmetrized, self-loops
    /// and duplicates dropped.
    pub fn from_edges(links: Vec<RealizedLink>, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); links.len()];
        for &(i, j) in edges {
            if i != j {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        ConflictGraph {
            links,
            adjacency,
            edge_count,
        }
    }

    pub fn links(&self) -> &[RealizedLink] {
        &self.links
    }

    pub fn vertex_count(&self) -> usize {
        self.links.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Interference degree of link `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// Same channel and some pair of endpoint nodes within interference range.
fn links_interfere(topo: &Topology, a: &RealizedLink, b: &RealizedLink) -> bool {
    if a.channel != b.channel {
        return false;
    }
    let (a0, a1) = a.nodes();
    let (b0, b1) = b.nodes();
    topo.within_interference(a0, b0)
        || topo.within_interference(a0, b1)
        || topo.within_interference(a1, b0)
        || topo.within_interference(a1, b1)
}

/// Feasibility rule an optimizer must preserve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    /// The node graph induced by realized links is connected.
    #[default]
    Global,
    /// Every adjacent node pair keeps at least one common channel.
    PerPair,
}

impl Connectivity {
    pub fn is_satisfied(self, topo: &Topology, ca: &ChannelAssignment) -> bool {
        match self {
            Connectivity::Global => connected_unchecked(topo, ca),
            Connectivity::PerPair => topo.adjacent_pairs().iter().all(|&(u, w)| ca.nodes_share_channel(u, w)),
        }
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(Connectivity::Global),
            "per-pair" | "per_pair" | "pair" => Ok(Connectivity::PerPair),
            other => Err(Error::Config(format!("unknown connectivity rule '{other}'"))),
        }
    }
}

/// Whether the node graph with an edge per adjacent pair carrying at least
/// one realized link is connected.
pub fn is_ca_connected(topo: &Topology, ca: &ChannelAssignment) -> Result<bool> {
    ca.validate(topo)?;
    Ok(connected_unchecked(topo, ca))
}

fn connected_unchecked(topo: &Topology, ca: &ChannelAssignment) -> bool {
    components(topo, ca).iter().all(|&c| c == 0)
}

/// Component label per node of the realized-link node graph; the component
/// containing node 0 is labeled 0.
pub(crate) fn components(topo: &Topology, ca: &ChannelAssignment) -> Vec<usize> {
    let n = topo.node_count();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in topo.neighbors(u) {
                if label[v] == usize::MAX && ca.nodes_share_channel(u, v) {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}
