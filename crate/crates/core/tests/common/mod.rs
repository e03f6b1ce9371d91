//! Shared fixtures and a brute-force reference implementation of the
//! metrics. The oracle works from raw coordinates and nested loops only; it
//! does not call the library's adjacency, conflict graph or path code.

#![allow(dead_code)]

use meshca::topology::{gen_grid, gen_random, Channel, ChannelAssignment, RadioParams, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params(tx: f64, x: usize, m: usize, c: usize) -> RadioParams {
    RadioParams {
        tx_range: tx,
        interference_x: x,
        radios_per_node: m,
        channel_count: c,
    }
}

/// Three-node line A-B-C, 100 m apart, X = 2.
pub fn line(m: usize, c: usize) -> Topology {
    gen_grid(1, 3, 100.0, params(100.0, 2, m, c)).unwrap()
}

pub fn e1_all_ch0() -> (Topology, ChannelAssignment) {
    let t = line(1, 2);
    let ca = ChannelAssignment::uniform(&t, 0);
    (t, ca)
}

pub fn e2_all_01() -> (Topology, ChannelAssignment) {
    let t = line(2, 2);
    let ca = ChannelAssignment::new(&t, vec![0, 1, 0, 1, 0, 1]).unwrap();
    (t, ca)
}

/// E2 with three channels, laid out so AB shares only ch0 and BC only ch2.
pub fn e2_c3_optimal() -> (Topology, ChannelAssignment) {
    let t = line(2, 3);
    let ca = ChannelAssignment::new(&t, vec![0, 1, 0, 2, 2, 1]).unwrap();
    (t, ca)
}

pub fn random_ca(topo: &Topology, rng: &mut impl Rng) -> ChannelAssignment {
    let c = topo.channel_count();
    let channels = (0..topo.radio_count())
        .map(|_| rng.gen_range(0..c) as Channel)
        .collect();
    ChannelAssignment::new(topo, channels).unwrap()
}

/// Small connected random instance: n <= 6, m <= 2, c <= 3, X in {1, 2}.
pub fn small_instance(rng: &mut ChaCha8Rng) -> Topology {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=2);
    let c = rng.gen_range(1..=3);
    let x = rng.gen_range(1..=2);
    gen_random(n, 300.0, 300.0, params(150.0, x, m, c), rng.gen()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// brute-force oracle

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveLink {
    pub u: usize,
    pub w: usize,
    pub channel: Channel,
}

fn dist(topo: &Topology, i: usize, j: usize) -> f64 {
    let (a, b) = (topo.nodes()[i], topo.nodes()[j]);
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn in_tx(topo: &Topology, i: usize, j: usize) -> bool {
    i != j && dist(topo, i, j) <= topo.tx_range() + 1e-7
}

fn chan(ca: &ChannelAssignment, m: usize, node: usize, radio: usize) -> Channel {
    ca.as_slice()[node * m + radio]
}

pub fn naive_links(topo: &Topology, ca: &ChannelAssignment) -> Vec<NaiveLink> {
    let n = topo.node_count();
    let m = topo.radios_per_node();
    let mut out = Vec::new();
    for u in 0..n {
        for w in u + 1..n {
            if !in_tx(topo, u, w) {
                continue;
            }
            for ra in 0..m {
                for rb in 0..m {
                    if chan(ca, m, u, ra) == chan(ca, m, w, rb) {
                        out.push(NaiveLink {
                            u,
                            w,
                            channel: chan(ca, m, u, ra),
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn naive_conflict(topo: &Topology, a: &NaiveLink, b: &NaiveLink) -> bool {
    let limit = topo.tx_range() * topo.interference_x() as f64 + 1e-7;
    a.channel == b.channel
        && [(a.u, b.u), (a.u, b.w), (a.w, b.u), (a.w, b.w)]
            .iter()
            .any(|&(i, j)| i == j || dist(topo, i, j) <= limit)
}

/// Sum over links of the number of other links each conflicts with.
pub fn naive_tid(topo: &Topology, ca: &ChannelAssignment) -> f64 {
    let links = naive_links(topo, ca);
    let mut total = 0usize;
    for (i, a) in links.iter().enumerate() {
        for (j, b) in links.iter().enumerate() {
            if i != j && naive_conflict(topo, a, b) {
                total += 1;
            }
        }
    }
    total as f64
}

pub fn naive_cdal(topo: &Topology, ca: &ChannelAssignment) -> f64 {
    let c = topo.channel_count();
    let links = naive_links(topo, ca);
    let mut loads = vec![0.0; c];
    for l in &links {
        let k = links.iter().filter(|o| o.u == l.u && o.w == l.w).count();
        loads[l.channel as usize] += 1.0 / k as f64;
    }
    let mean = loads.iter().sum::<f64>() / c as f64;
    (loads.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c as f64).sqrt()
}

/// Every sequence of `hops + 1` distinct nodes with consecutive nodes in
/// range, kept once per undirected path.
pub fn naive_paths(topo: &Topology, hops: usize) -> Vec<Vec<usize>> {
    fn rec(topo: &Topology, hops: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == hops + 1 {
            if cur[0] < cur[hops] {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..topo.node_count() {
            if cur.contains(&v) || !in_tx(topo, *cur.last().unwrap(), v) {
                continue;
            }
            cur.push(v);
            rec(topo, hops, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if hops == 0 {
        return out;
    }
    for s in 0..topo.node_count() {
        rec(topo, hops, &mut vec![s], &mut out);
    }
    out
}

pub fn naive_xls_weight(hop_links: &[Vec<Channel>]) -> f64 {
    fn rec(hops: &[Vec<Channel>], chosen: &mut Vec<Channel>, sum: &mut f64, count: &mut f64) {
        if chosen.len() == hops.len() {
            let unique = chosen
                .iter()
                .filter(|&&c| chosen.iter().filter(|&&d| d == c).count() == 1)
                .count();
            *sum += unique as f64;
            *count += 1.0;
            return;
        }
        for &c in &hops[chosen.len()] {
            chosen.push(c);
            rec(hops, chosen, sum, count);
            chosen.pop();
        }
    }
    let (mut sum, mut count) = (0.0, 0.0);
    rec(hop_links, &mut Vec::new(), &mut sum, &mut count);
    if count == 0.0 {
        0.0
    } else {
        sum / count
    }
}

pub fn naive_cxls(topo: &Topology, ca: &ChannelAssignment, hops: usize) -> f64 {
    let links = naive_links(topo, ca);
    naive_paths(topo, hops)
        .iter()
        .map(|path| {
            let hop_links: Vec<Vec<Channel>> = path
                .windows(2)
                .map(|w| {
                    let (u, v) = (w[0].min(w[1]), w[0].max(w[1]));
                    links
                        .iter()
                        .filter(|l| l.u == u && l.w == v)
                        .map(|l| l.channel)
                        .collect()
                })
                .collect();
            naive_xls_weight(&hop_links)
        })
        .sum()
}

/// Whether the node graph induced by realized links is connected (BFS over
/// the naive link list).
pub fn naive_connected(topo: &Topology, ca: &ChannelAssignment) -> bool {
    let links = naive_links(topo, ca);
    let n = topo.node_count();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for l in &links {
            let other = if l.u == u {
                l.w
            } else if l.w == u {
                l.u
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Brute-force optimum over all `c^(n*m)` assignments that keep the network
/// connected; ties go to the lexicographically smallest assignment.
pub fn naive_optimum(
    topo: &Topology,
    metric: impl Fn(&ChannelAssignment) -> f64,
    maximize: bool,
) -> Option<(ChannelAssignment, f64)> {
    let r = topo.radio_count();
    let c = topo.channel_count();
    let mut best: Option<(ChannelAssignment, f64)> = None;
    let mut digits = vec![0usize; r];
    loop {
        let ca = ChannelAssignment::new(topo, digits.iter().map(|&d| d as Channel).collect()).unwrap();
        if naive_connected(topo, &ca) {
            let v = metric(&ca);
            let improves = match &best {
                None => true,
                Some((_, b)) => {
                    if maximize {
                        v > *b + 1e-12
                    } else {
                        v < *b - 1e-12
                    }
                }
            };
            if improves {
                best = Some((ca, v));
            }
        }
        let mut k = r;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < c {
                break;
            }
            digits[k] = 0;
        }
    }
}
