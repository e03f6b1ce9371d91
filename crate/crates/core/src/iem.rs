//! Interference estimation metrics: total interference degree (TID),
//! channel distribution across links (CDAL cost) and cumulative X-link-set
//! weight (CXLS weight).
//!
//! Every metric is a pure function of `(Topology, ChannelAssignment)` and is
//! invariant under relabeling of channels. Floating-point reductions run in
//! an order that does not depend on channel labels, so relabeled inputs give
//! bit-identical values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Channel, ChannelAssignment, ConflictGraph, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Tid,
    Cdal,
    Cxls,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Tid, Metric::Cdal, Metric::Cxls];

    pub fn direction(self) -> Direction {
        match self {
            Metric::Tid | Metric::Cdal => Direction::Minimize,
            Metric::Cxls => Direction::Maximize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tid => "TID",
            Metric::Cdal => "CDAL",
            Metric::Cxls => "CXLS",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tid" => Ok(Metric::Tid),
            "cdal" | "cdal_cost" => Ok(Metric::Cdal),
            "cxls" | "cxls_wt" => Ok(Metric::Cxls),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IemScore {
    pub metric: Metric,
    pub value: f64,
    pub direction: Direction,
}

impl IemScore {
    pub fn new(metric: Metric, value: f64) -> Self {
        IemScore {
            metric,
            value,
            direction: metric.direction(),
        }
    }

    /// Strictly better than `other` in this score's direction.
    pub fn is_better_than(&self, other: &IemScore) -> bool {
        better(self, other)
    }
}

/// Whether `a` is strictly better than `b`. Values within a relative
/// 1e-12 of each other count as tied, and ties are never better.
pub fn better(a: &IemScore, b: &IemScore) -> bool {
    debug_assert_eq!(a.direction, b.direction);
    let tol = 1e-12 * a.value.abs().max(b.value.abs()).max(1.0);
    match a.direction {
        Direction::Minimize => a.value < b.value - tol,
        Direction::Maximize => a.value > b.value + tol,
    }
}

/// Sum of interference degrees over all realized links (twice the number of
/// conflict edges).
pub fn tid(topo: &Topology, ca: &ChannelAssignment) -> Result<IemScore> {
    ca.validate(topo)?;
    Ok(IemScore::new(Metric::Tid, tid_value(topo, ca)))
}

fn tid_value(topo: &Topology, ca: &ChannelAssignment) -> f64 {
    let g = ConflictGraph::build_unchecked(topo, ca);
    (2 * g.edge_count()) as f64
}

/// Fractional link count per channel: an adjacent pair with `k` realized
/// links credits `1/k` to the channel of each.
pub fn channel_loads(topo: &Topology, ca: &ChannelAssignment) -> Result<Vec<f64>> {
    ca.validate(topo)?;
    Ok(loads_unchecked(topo, ca))
}

fn loads_unchecked(topo: &Topology, ca: &ChannelAssignment) -> Vec<f64> {
    let c = topo.channel_count();
    let mut loads = vec![0.0f64; c];
    let mut counts = vec![0usize; c];
    for &(u, w) in topo.adjacent_pairs() {
        counts.iter_mut().for_each(|k| *k = 0);
        let mut total = 0;
        for &a in ca.node_channels(u) {
            for &b in ca.node_channels(w) {
                if a == b {
                    counts[a as usize] += 1;
                    total += 1;
                }
            }
        }
        if total == 0 {
            continue;
        }
        for (load, &k) in loads.iter_mut().zip(&counts) {
            if k > 0 {
                *load += k as f64 / total as f64;
            }
        }
    }
    loads
}

/// Population standard deviation of the channel loads, zero-load channels
/// included.
pub fn cdal_cost(topo: &Topology, ca: &ChannelAssignment) -> Result<IemScore> {
    ca.validate(topo)?;
    Ok(IemScore::new(Metric::Cdal, cdal_value(topo, ca)))
}

fn cdal_value(topo: &Topology, ca: &ChannelAssignment) -> f64 {
    let mut loads = loads_unchecked(topo, ca);
    loads.sort_by(f64::total_cmp);
    population_std(&loads)
}

/// Population standard deviation; exactly zero when all values are equal.
fn population_std(sorted: &[f64]) -> f64 {
    match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) if lo != hi => {
            let n = sorted.len() as f64;
            let mean = sorted.iter().sum::<f64>() / n;
            let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            var.sqrt()
        }
        _ => 0.0,
    }
}

/// All simple paths with exactly `hops` hops in the potential-communication
/// graph, each listed once with its smaller-index endpoint first. Paths are
/// ordered by DFS from ascending start nodes over ascending neighbors.
pub fn enumerate_xls(topo: &Topology, hops: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if hops == 0 {
        return out;
    }
    let n = topo.node_count();
    let mut on_path = vec![false; n];
    let mut path = Vec::with_capacity(hops + 1);
    for start in 0..n {
        path.push(start);
        on_path[start] = true;
        extend_paths(topo, hops, &mut path, &mut on_path, &mut out);
        on_path[start] = false;
        path.pop();
    }
    out
}

fn extend_paths(topo: &Topology, hops: usize, path: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if path.len() == hops + 1 {
        if path[0] < path[hops] {
            out.push(path.clone());
        }
        return;
    }
    let last = *path.last().unwrap();
    for &next in topo.neighbors(last) {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        path.push(next);
        extend_paths(topo, hops, path, on_path, out);
        path.pop();
        on_path[next] = false;
    }
}

/// An X-hop path together with the channels of the realized links on each hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XLinkSet {
    pub path: Vec<usize>,
    /// `hops[i]` lists one channel per realized link between `path[i]` and `path[i + 1]`.
    pub hops: Vec<Vec<Channel>>,
}

impl XLinkSet {
    pub fn realize(ca: &ChannelAssignment, path: &[usize]) -> Self {
        let hops = path
            .windows(2)
            .map(|w| {
                let mut opts = Vec::new();
                hop_options(ca, w[0], w[1], &mut opts);
                opts
            })
            .collect();
        XLinkSet {
            path: path.to_vec(),
            hops,
        }
    }
}

fn hop_options(ca: &ChannelAssignment, u: usize, w: usize, out: &mut Vec<Channel>) {
    out.clear();
    for &a in ca.node_channels(u) {
        for &b in ca.node_channels(w) {
            if a == b {
                out.push(a);
            }
        }
    }
}

/// Mean, over every choice of one realized link per hop, of the number of
/// hops whose channel no other hop uses. Zero if any hop has no link.
pub fn xls_weight(xls: &XLinkSet) -> f64 {
    let hops: Vec<&[Channel]> = xls.hops.iter().map(Vec::as_slice).collect();
    weight_of_hops(&hops)
}

fn weight_of_hops(hops: &[&[Channel]]) -> f64 {
    if hops.is_empty() || hops.iter().any(|h| h.is_empty()) {
        return 0.0;
    }
    let x = hops.len();
    let mut idx = vec![0usize; x];
    let mut chosen: Vec<Channel> = hops.iter().map(|h| h[0]).collect();
    let mut total: u64 = 0;
    let mut realizations: u64 = 0;
    loop {
        realizations += 1;
        total += (0..x)
            .filter(|&i| (0..x).all(|j| j == i || chosen[j] != chosen[i]))
            .count() as u64;
        // odometer, last hop fastest
        let mut k = x;
        loop {
            if k == 0 {
                return total as f64 / realizations as f64;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < hops[k].len() {
                chosen[k] = hops[k][idx[k]];
                break;
            }
            idx[k] = 0;
            chosen[k] = hops[k][0];
        }
    }
}

/// Sum of XLS weights over every `hops`-hop path.
pub fn cxls_wt(topo: &Topology, ca: &ChannelAssignment, hops: usize) -> Result<IemScore> {
    ca.validate(topo)?;
    let paths = enumerate_xls(topo, hops);
    Ok(IemScore::new(Metric::Cxls, cxls_value(ca, &paths)))
}

fn cxls_value(ca: &ChannelAssignment, paths: &[Vec<usize>]) -> f64 {
    let mut buffers: Vec<Vec<Channel>> = Vec::new();
    let mut sum = 0.0;
    for path in paths {
        let x = path.len() - 1;
        buffers.resize_with(x.max(buffers.len()), Vec::new);
        for (i, w) in path.windows(2).enumerate() {
            hop_options(ca, w[0], w[1], &mut buffers[i]);
        }
        let hops: Vec<&[Channel]> = buffers[..x].iter().map(Vec::as_slice).collect();
        sum += weight_of_hops(&hops);
    }
    sum
}

/// Dispatch to the requested metric, with CXLS using the topology's X.
pub fn score(metric: Metric, topo: &Topology, ca: &ChannelAssignment) -> Result<IemScore> {
    match metric {
        Metric::Tid => tid(topo, ca),
        Metric::Cdal => cdal_cost(topo, ca),
        Metric::Cxls => cxls_wt(topo, ca, topo.interference_x()),
    }
}

/// All three metrics for one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub tid: f64,
    pub cdal_cost: f64,
    pub cxls_wt: f64,
}

pub fn score_all(topo: &Topology, ca: &ChannelAssignment) -> Result<ScoreTriple> {
    score_all_with_hops(topo, ca, topo.interference_x())
}

/// As [`score_all`], with an explicit CXLS hop count.
pub fn score_all_with_hops(topo: &Topology, ca: &ChannelAssignment, hops: usize) -> Result<ScoreTriple> {
    ca.validate(topo)?;
    Ok(ScoreTriple {
        tid: tid_value(topo, ca),
        cdal_cost: cdal_value(topo, ca),
        cxls_wt: cxls_value(ca, &enumerate_xls(topo, hops)),
    })
}

/// A metric bound to a topology, with the XLS path list cached. Used by the
/// optimizers to score many candidate assignments.
#[derive(Debug, Clone)]
pub struct Objective {
    metric: Metric,
    xls_hops: usize,
    paths: Vec<Vec<usize>>,
}

impl Objective {
    /// `xls_hops` defaults to the topology's interference ratio.
    pub fn new(metric: Metric, topo: &Topology, xls_hops: Option<usize>) -> Self {
        let xls_hops = xls_hops.unwrap_or(topo.interference_x());
        let paths = if metric == Metric::Cxls {
            enumerate_xls(topo, xls_hops)
        } else {
            Vec::new()
        };
        Objective {
            metric,
            xls_hops,
            paths,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn xls_hops(&self) -> usize {
        self.xls_hops
    }

    pub fn evaluate(&self, topo: &Topology, ca: &ChannelAssignment) -> Result<IemScore> {
        ca.validate(topo)?;
        Ok(self.evaluate_unchecked(topo, ca))
    }

    pub(crate) fn evaluate_unchecked(&self, topo: &Topology, ca: &ChannelAssignment) -> IemScore {
        let value = match self.metric {
            Metric::Tid => tid_value(topo, ca),
            Metric::Cdal => cdal_value(topo, ca),
            Metric::Cxls => cxls_value(ca, &self.paths),
        };
        IemScore::new(self.metric, value)
    }
}
