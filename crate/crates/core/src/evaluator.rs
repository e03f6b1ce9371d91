//! Deterministic flow-level contention estimator used to compare channel
//! assignments. All throughput figures it produces are estimates from a
//! protocol-model airtime share, not packet-level measurements.
//!
//! Per flow, each hop uses the realized link with the fewest conflict
//! neighbors. A selected link gets `phy_rate / (1 + active conflicting
//! links)` of airtime, split evenly between the flows crossing it; a flow
//! runs at the minimum over its hops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{ChannelAssignment, ConflictGraph, Topology};

/// Payload per flow: 5 MiB.
pub const DEFAULT_PAYLOAD_BYTES: u64 = 5 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub source: usize,
    pub destination: usize,
    /// Node indices from source to destination.
    pub path: Vec<usize>,
    pub payload_bytes: u64,
}

impl FlowSpec {
    pub fn new(path: Vec<usize>, payload_bytes: u64) -> Self {
        FlowSpec {
            source: path[0],
            destination: *path.last().unwrap(),
            path,
            payload_bytes,
        }
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

/// One flow per row (left to right) and one per column (top to bottom);
/// rows or columns of a single node carry no flow.
pub fn build_grid_flows(topo: &Topology) -> Result<Vec<FlowSpec>> {
    let grid = topo.grid().ok_or(Error::NotAGrid)?;
    let (rows, cols) = (grid.rows, grid.cols);
    let mut flows = Vec::new();
    if cols > 1 {
        for r in 0..rows {
            flows.push(FlowSpec::new(
                (0..cols).map(|c| r * cols + c).collect(),
                DEFAULT_PAYLOAD_BYTES,
            ));
        }
    }
    if rows > 1 {
        for c in 0..cols {
            flows.push(FlowSpec::new(
                (0..rows).map(|r| r * cols + c).collect(),
                DEFAULT_PAYLOAD_BYTES,
            ));
        }
    }
    Ok(flows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEstimate {
    pub source: u32,
    pub destination: u32,
    pub throughput_mbps: f64,
    /// `None` for disconnected flows.
    pub transfer_time_s: Option<f64>,
    /// Index into [`PerfReport::links`] of the hop limiting this flow.
    pub bottleneck: Option<usize>,
    /// Active links contending with the bottleneck, itself included.
    pub contention: usize,
    pub disconnected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLink {
    pub a: u32,
    pub a_radio: usize,
    pub b: u32,
    pub b_radio: usize,
    pub channel: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub phy_rate_mbps: f64,
    pub flows: Vec<FlowEstimate>,
    pub aggregate_throughput_mbps: f64,
    /// Ids of `(source, destination)` of flows with a hop lacking any link.
    pub disconnected: Vec<(u32, u32)>,
    /// Links of the conflict graph referenced by `bottleneck`.
    pub links: Vec<ReportLink>,
}

/// Selected conflict-graph vertex per hop, or `None` if some hop has no link.
pub type Selection = Vec<Option<Vec<usize>>>;

/// Pick, for every hop of every flow, the realized link with the fewest
/// conflict neighbors (ties: lowest channel, then link order).
pub fn select_links(graph: &ConflictGraph, flows: &[FlowSpec]) -> Selection {
    flows
        .iter()
        .map(|flow| {
            flow.path
                .windows(2)
                .map(|w| {
                    let (u, v) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
                    graph
                        .links()
                        .iter()
                        .enumerate()
                        .filter(|(_, l)| l.nodes() == (u, v))
                        .min_by_key(|(i, l)| (graph.degree(*i), l.channel, *i))
                        .map(|(i, _)| i)
                })
                .collect()
        })
        .collect()
}

/// Per-flow `(throughput, bottleneck, contention)` for a fixed selection.
/// Disconnected flows get zero throughput and do not occupy airtime.
pub fn throughput_for_selection(
    graph: &ConflictGraph,
    selection: &Selection,
    phy_rate_mbps: f64,
) -> Vec<(f64, Option<usize>, usize)> {
    let mut load = vec![0usize; graph.vertex_count()];
    let mut active = vec![false; graph.vertex_count()];
    for hops in selection.iter().flatten() {
        for &l in hops {
            load[l] += 1;
            active[l] = true;
        }
    }
    let contenders = |l: usize| graph.neighbors(l).iter().filter(|&&k| active[k]).count();
    selection
        .iter()
        .map(|hops| match hops {
            None => (0.0, None, 0),
            Some(hops) if hops.is_empty() => (0.0, None, 0),
            Some(hops) => {
                let mut best: Option<(f64, usize, usize)> = None;
                for &l in hops {
                    let k = contenders(l);
                    let rate = phy_rate_mbps / (1 + k) as f64 / load[l] as f64;
                    if best.is_none_or(|(r, _, _)| rate < r) {
                        best = Some((rate, l, k + 1));
                    }
                }
                let (rate, l, k) = best.unwrap();
                (rate, Some(l), k)
            }
        })
        .collect()
}

pub fn estimate_performance(
    topo: &Topology,
    ca: &ChannelAssignment,
    flows: &[FlowSpec],
    phy_rate_mbps: f64,
) -> Result<PerfReport> {
    let graph = ConflictGraph::build(topo, ca)?;
    if !(phy_rate_mbps.is_finite() && phy_rate_mbps > 0.0) {
        return Err(Error::Config(format!("phy rate must be positive, got {phy_rate_mbps}")));
    }
    for flow in flows {
        let valid = flow.path.iter().all(|&v| v < topo.node_count())
            && flow.path.windows(2).all(|w| topo.are_adjacent(w[0], w[1]));
        if !valid {
            return Err(Error::Config(format!(
                "flow {}->{} does not follow adjacent nodes",
                flow.source, flow.destination
            )));
        }
    }
    let selection = select_links(&graph, flows);
    let per_flow = throughput_for_selection(&graph, &selection, phy_rate_mbps);
    let id = |i: usize| topo.nodes()[i].id;

    let mut estimates = Vec::with_capacity(flows.len());
    let mut disconnected = Vec::new();
    for ((flow, sel), &(thr, bottleneck, contention)) in flows.iter().zip(&selection).zip(&per_flow) {
        let is_disc = sel.is_none();
        if is_disc {
            disconnected.push((id(flow.source), id(flow.destination)));
        }
        estimates.push(FlowEstimate {
            source: id(flow.source),
            destination: id(flow.destination),
            throughput_mbps: thr,
            transfer_time_s: (thr > 0.0).then(|| flow.payload_bytes as f64 * 8.0 / (thr * 1e6)),
            bottleneck,
            contention,
            disconnected: is_disc,
        });
    }
    let aggregate = estimates.iter().map(|f| f.throughput_mbps).sum();
    let links = graph
        .links()
        .iter()
        .map(|l| ReportLink {
            a: id(l.a.node),
            a_radio: l.a.radio,
            b: id(l.b.node),
            b_radio: l.b.radio,
            channel: l.channel,
        })
        .collect();
    Ok(PerfReport {
        phy_rate_mbps,
        flows: estimates,
        aggregate_throughput_mbps: aggregate,
        disconnected,
        links,
    })
}
