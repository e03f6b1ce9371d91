//! Channel-assignment optimizers, each driven by an interference metric:
//!
//! * `Bio`: exhaustive enumeration of all `c^(n*m)` assignments.
//! * `Pio`: initial allocation followed by one improvement sweep.
//! * `Ko`: improvement sweeps repeated until a fixpoint.
//! * `Ho`: the `Ko` fixpoint, then co-located radio repair, then sweeps that
//!   visit elevated-interference nodes first, repeated until a fixpoint.
//!
//! The local-search move is a single-radio channel change. A move is taken
//! only when it strictly improves the metric and keeps the assignment
//! feasible under the configured [`Connectivity`] rule.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::iem::{better, IemScore, Metric, Objective};
use crate::topology::{components, Channel, ChannelAssignment, ConflictGraph, Connectivity, Topology};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_BIO_BUDGET: u64 = 10_000_000;

/// Assignments scored per exhaustive-search work unit.
const BIO_CHUNK: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Bio,
    Pio,
    Ko,
    Ho,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bio => "BIO",
            Scheme::Pio => "PIO",
            Scheme::Ko => "KO",
            Scheme::Ho => "HO",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bio" => Ok(Scheme::Bio),
            "pio" => Ok(Scheme::Pio),
            "ko" => Ok(Scheme::Ko),
            "ho" => Ok(Scheme::Ho),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub metric: Metric,
    /// Ignored by `Bio`.
    pub seed: u64,
    /// Cap on sweeps per local-search phase.
    pub max_iterations: usize,
    pub connectivity: Connectivity,
    /// Largest `c^(n*m)` that `Bio` will enumerate.
    pub bio_budget: u64,
    /// Hop count for CXLS; defaults to the topology's interference ratio.
    pub xls_hops: Option<usize>,
    pub execution: Execution,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, metric: Metric, seed: u64) -> Self {
        SchemeConfig {
            scheme,
            metric,
            seed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            connectivity: Connectivity::Global,
            bio_budget: DEFAULT_BIO_BUDGET,
            xls_hops: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sweep,
    Rci,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub phase: Phase,
    pub score: f64,
    pub moves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub metric: Metric,
    pub initial_score: f64,
    pub steps: Vec<TraceStep>,
    pub feasible: bool,
}

impl OptimizationTrace {
    fn new(initial: IemScore) -> Self {
        OptimizationTrace {
            metric: initial.metric,
            initial_score: initial.value,
            steps: Vec::new(),
            feasible: true,
        }
    }

    fn push(&mut self, phase: Phase, score: IemScore, moves: usize) {
        self.steps.push(TraceStep {
            iteration: self.steps.len() + 1,
            phase,
            score: score.value,
            moves,
        });
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// Whether no recorded score is worse than the one before it (starting
    /// from the initial score).
    pub fn is_monotone(&self) -> bool {
        let mut prev = IemScore::new(self.metric, self.initial_score);
        for step in &self.steps {
            let cur = IemScore::new(self.metric, step.score);
            if better(&prev, &cur) {
                return false;
            }
            prev = cur;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub initial: ChannelAssignment,
    pub assignment: ChannelAssignment,
    pub score: IemScore,
    pub trace: OptimizationTrace,
}

fn admissible(rule: Connectivity, topo: &Topology, candidate: &ChannelAssignment, current_feasible: bool) -> bool {
    !current_feasible || rule.is_satisfied(topo, candidate)
}

/// Round-robin allocation `(id + r) mod c`, repaired to satisfy `rule`, then
/// (for `seed > 0`) `n*m` seeded single-radio perturbation attempts that keep
/// it feasible. Returns the assignment and whether it is feasible.
pub fn initial_assignment(topo: &Topology, seed: u64, rule: Connectivity) -> (ChannelAssignment, bool) {
    let m = topo.radios_per_node();
    let c = topo.channel_count();
    let channels = topo
        .nodes()
        .iter()
        .flat_map(|n| (0..m).map(move |r| ((n.id as usize + r) % c) as Channel))
        .collect();
    let mut ca = ChannelAssignment::from_raw(m, channels);
    let mut feasible = repair(topo, &mut ca, rule);

    if seed > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radios = topo.radio_count();
        for _ in 0..radios {
            let radio = rng.gen_range(0..radios);
            let ch = rng.gen_range(0..c) as Channel;
            let old = ca.get(radio);
            if ch == old {
                continue;
            }
            ca.set(radio, ch);
            if admissible(rule, topo, &ca, feasible) {
                feasible = rule.is_satisfied(topo, &ca);
            } else {
                ca.set(radio, old);
            }
        }
    }
    (ca, feasible)
}

/// Best-effort repair toward `rule`; returns whether `ca` now satisfies it.
fn repair(topo: &Topology, ca: &mut ChannelAssignment, rule: Connectivity) -> bool {
    match rule {
        Connectivity::Global => repair_global(topo, ca),
        Connectivity::PerPair => repair_per_pair(topo, ca),
    }
}

/// Grow the component of node 0 one node at a time: the first boundary pair
/// `(inside, outside)` gets a common channel by retuning one radio of the
/// outside node. Links inside the component are never touched.
fn repair_global(topo: &Topology, ca: &mut ChannelAssignment) -> bool {
    loop {
        let label = components(topo, ca);
        if label.iter().all(|&l| l == 0) {
            return true;
        }
        let boundary = topo
            .adjacent_pairs()
            .iter()
            .find_map(|&(u, w)| match (label[u] == 0, label[w] == 0) {
                (true, false) => Some((u, w)),
                (false, true) => Some((w, u)),
                _ => None,
            });
        let Some((inside, outside)) = boundary else {
            return false;
        };
        let radio = radio_to_retune(ca, outside, |_| false);
        ca.set(outside * ca.radios_per_node() + radio, ca.channel(inside, 0));
    }
}

fn repair_per_pair(topo: &Topology, ca: &mut ChannelAssignment) -> bool {
    let rule = Connectivity::PerPair;
    for _ in 0..topo.radio_count().max(1) {
        if rule.is_satisfied(topo, ca) {
            return true;
        }
        for &(u, w) in topo.adjacent_pairs() {
            if ca.nodes_share_channel(u, w) {
                continue;
            }
            // avoid dropping the only channel w shares with another neighbor
            let needed = |ch: Channel| {
                topo.neighbors(w).iter().any(|&v| {
                    v != u && {
                        let mut shared = ca.node_channels(w).iter().filter(|x| ca.node_channels(v).contains(x));
                        shared.all(|&x| x == ch) && ca.node_channels(v).contains(&ch)
                    }
                })
            };
            let radio = radio_to_retune(ca, w, needed);
            ca.set(w * ca.radios_per_node() + radio, ca.channel(u, 0));
        }
    }
    if rule.is_satisfied(topo, ca) {
        return true;
    }
    // a single shared channel satisfies every pair
    *ca = ChannelAssignment::from_raw(ca.radios_per_node(), vec![0; ca.len()]);
    true
}

/// Prefer a radio duplicating an earlier radio's channel, then the highest
/// radio whose channel is not `needed`, then the highest radio.
fn radio_to_retune(ca: &ChannelAssignment, node: usize, needed: impl Fn(Channel) -> bool) -> usize {
    let chans = ca.node_channels(node);
    let m = chans.len();
    (1..m)
        .rev()
        .find(|&r| chans[..r].contains(&chans[r]))
        .or_else(|| (0..m).rev().find(|&r| !needed(chans[r])))
        .unwrap_or(m - 1)
}

/// Exhaustive search over all `c^(n*m)` assignments in lexicographic order.
///
/// Returns the best feasible assignment (ties: lexicographically smallest),
/// or the best infeasible one with `false` when nothing is feasible.
pub fn bio_assign(topo: &Topology, cfg: &SchemeConfig) -> Result<(ChannelAssignment, IemScore, bool)> {
    let c = topo.channel_count() as u64;
    let radios = topo.radio_count();
    let exceeded = || Error::BudgetExceeded {
        channels: c as usize,
        radios,
        budget: cfg.bio_budget,
    };
    let total = u32::try_from(radios)
        .ok()
        .and_then(|r| c.checked_pow(r))
        .filter(|&t| t <= cfg.bio_budget)
        .ok_or_else(exceeded)?;

    let objective = Objective::new(cfg.metric, topo, cfg.xls_hops);
    let chunks = total.div_ceil(BIO_CHUNK) as usize;
    let partial = cfg.execution.map_range(chunks, |k| {
        let start = k as u64 * BIO_CHUNK;
        let end = (start + BIO_CHUNK).min(total);
        best_in_range(topo, &objective, cfg.connectivity, start, end)
    });

    let mut best: Option<Candidate> = None;
    for cand in partial.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    let best = best.expect("at least one assignment is enumerated");
    let ca = decode(best.index, c, radios, topo.radios_per_node());
    Ok((ca, best.score, best.feasible))
}

struct Candidate {
    index: u64,
    score: IemScore,
    feasible: bool,
}

impl Candidate {
    /// Strict preference; equal candidates keep the earlier one.
    fn beats(&self, other: &Candidate) -> bool {
        (self.feasible && !other.feasible) || (self.feasible == other.feasible && better(&self.score, &other.score))
    }
}

fn decode(mut index: u64, c: u64, radios: usize, m: usize) -> ChannelAssignment {
    let mut channels = vec![0 as Channel; radios];
    for slot in channels.iter_mut().rev() {
        *slot = (index % c) as Channel;
        index /= c;
    }
    ChannelAssignment::from_raw(m, channels)
}

fn best_in_range(
    topo: &Topology,
    objective: &Objective,
    rule: Connectivity,
    start: u64,
    end: u64,
) -> Option<Candidate> {
    let c = topo.channel_count() as u64;
    let radios = topo.radio_count();
    let mut ca = decode(start, c, radios, topo.radios_per_node());
    let mut best: Option<Candidate> = None;
    for index in start..end {
        if index > start {
            // odometer step, last radio fastest
            for r in (0..radios).rev() {
                let next = ca.get(r) + 1;
                if (next as u64) < c {
                    ca.set(r, next);
                    break;
                }
                ca.set(r, 0);
            }
        }
        let feasible = rule.is_satisfied(topo, &ca);
        if !feasible && best.as_ref().is_some_and(|b| b.feasible) {
            continue;
        }
        let cand = Candidate {
            index,
            score: objective.evaluate_unchecked(topo, &ca),
            feasible,
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    best
}

/// One coordinate-descent pass: each radio in `order` moves to the channel
/// with the strictly best score among admissible alternatives (ties: lowest
/// channel index), or stays. Returns the number of radios moved.
pub fn improve_sweep(
    topo: &Topology,
    ca: &mut ChannelAssignment,
    objective: &Objective,
    order: &[usize],
    rule: Connectivity,
) -> usize {
    let c = topo.channel_count();
    let mut feasible = rule.is_satisfied(topo, ca);
    let mut current = objective.evaluate_unchecked(topo, ca);
    let mut moves = 0;
    for &radio in order {
        let original = ca.get(radio);
        let mut best: Option<(Channel, IemScore, bool)> = None;
        for ch in (0..c as Channel).filter(|&ch| ch != original) {
            ca.set(radio, ch);
            if !admissible(rule, topo, ca, feasible) {
                continue;
            }
            let s = objective.evaluate_unchecked(topo, ca);
            let reference = best.as_ref().map_or(&current, |b| &b.1);
            if better(&s, reference) {
                best = Some((ch, s, rule.is_satisfied(topo, ca)));
            }
        }
        match best {
            Some((ch, s, f)) => {
                ca.set(radio, ch);
                current = s;
                feasible = f;
                moves += 1;
            }
            None => ca.set(radio, original),
        }
    }
    moves
}

/// Sum of interference degrees of the realized links incident to each node.
pub fn node_interference(topo: &Topology, ca: &ChannelAssignment) -> Result<Vec<usize>> {
    ca.validate(topo)?;
    Ok(node_interference_unchecked(topo, ca))
}

fn node_interference_unchecked(topo: &Topology, ca: &ChannelAssignment) -> Vec<usize> {
    let g = ConflictGraph::build_unchecked(topo, ca);
    let mut load = vec![0usize; topo.node_count()];
    for (i, link) in g.links().iter().enumerate() {
        let (a, b) = link.nodes();
        load[a] += g.degree(i);
        load[b] += g.degree(i);
    }
    load
}

/// Elevated-interference zones: node ids whose interference exceeds
/// mean + one population standard deviation, most interfered first.
pub fn eiz_detect(topo: &Topology, ca: &ChannelAssignment) -> Result<Vec<u32>> {
    ca.validate(topo)?;
    Ok(eiz_indices(topo, ca).into_iter().map(|i| topo.nodes()[i].id).collect())
}

fn eiz_indices(topo: &Topology, ca: &ChannelAssignment) -> Vec<usize> {
    let load = node_interference_unchecked(topo, ca);
    let n = load.len() as f64;
    let mean = load.iter().sum::<usize>() as f64 / n;
    let var = load.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + var.sqrt();
    let mut hot: Vec<usize> = (0..load.len()).filter(|&i| load[i] as f64 > threshold).collect();
    // indices follow id order, so the stable sort breaks ties by id
    hot.sort_by(|&a, &b| load[b].cmp(&load[a]));
    hot
}

/// Radios of elevated-interference nodes first, then all others ascending.
fn eiz_order(topo: &Topology, ca: &ChannelAssignment) -> Vec<usize> {
    let m = topo.radios_per_node();
    let hot = eiz_indices(topo, ca);
    let mut order: Vec<usize> = hot.iter().flat_map(|&v| v * m..(v + 1) * m).collect();
    let mut seen = vec![false; topo.radio_count()];
    order.iter().for_each(|&r| seen[r] = true);
    order.extend((0..topo.radio_count()).filter(|&r| !seen[r]));
    order
}

/// Remove co-located same-channel radios: for each node in id order, every
/// radio repeating an earlier radio's channel moves to the best admissible
/// channel unused at that node, provided the metric does not get worse.
pub fn rci_mitigate(
    topo: &Topology,
    ca: &ChannelAssignment,
    objective: &Objective,
    rule: Connectivity,
) -> ChannelAssignment {
    let mut ca = ca.clone();
    rci_in_place(topo, &mut ca, objective, rule);
    ca
}

fn rci_in_place(topo: &Topology, ca: &mut ChannelAssignment, objective: &Objective, rule: Connectivity) -> usize {
    let m = topo.radios_per_node();
    let c = topo.channel_count();
    let mut feasible = rule.is_satisfied(topo, ca);
    let mut current = objective.evaluate_unchecked(topo, ca);
    let mut moves = 0;
    for node in 0..topo.node_count() {
        for r in 1..m {
            let chans = ca.node_channels(node);
            if !chans[..r].contains(&chans[r]) {
                continue;
            }
            let unused: Vec<Channel> = (0..c as Channel).filter(|ch| !chans.contains(ch)).collect();
            let radio = node * m + r;
            let original = ca.get(radio);
            let mut best: Option<(Channel, IemScore, bool)> = None;
            for ch in unused {
                ca.set(radio, ch);
                if !admissible(rule, topo, ca, feasible) {
                    continue;
                }
                let s = objective.evaluate_unchecked(topo, ca);
                let acceptable = match &best {
                    None => !better(&current, &s),
                    Some(b) => better(&s, &b.1),
                };
                if acceptable {
                    best = Some((ch, s, rule.is_satisfied(topo, ca)));
                }
            }
            match best {
                Some((ch, s, f)) => {
                    ca.set(radio, ch);
                    current = s;
                    feasible = f;
                    moves += 1;
                }
                None => ca.set(radio, original),
            }
        }
    }
    moves
}

/// Sweep until no radio moves or `max_iterations` sweeps ran. `order` is
/// recomputed before every sweep.
fn converge(
    topo: &Topology,
    ca: &mut ChannelAssignment,
    objective: &Objective,
    cfg: &SchemeConfig,
    trace: &mut OptimizationTrace,
    order: impl Fn(&ChannelAssignment) -> Vec<usize>,
) {
    for _ in 0..cfg.max_iterations {
        let moves = improve_sweep(topo, ca, objective, &order(ca), cfg.connectivity);
        trace.push(Phase::Sweep, objective.evaluate_unchecked(topo, ca), moves);
        if moves == 0 {
            break;
        }
    }
}

/// Run one scheme end to end.
pub fn run_scheme(topo: &Topology, cfg: &SchemeConfig) -> Result<Outcome> {
    if cfg.max_iterations == 0 && cfg.scheme != Scheme::Bio {
        return Err(Error::Config("max_iterations must be >= 1".into()));
    }
    let objective = Objective::new(cfg.metric, topo, cfg.xls_hops);
    let rule = cfg.connectivity;
    let seed = if cfg.scheme == Scheme::Bio { 0 } else { cfg.seed };
    let (initial, _) = initial_assignment(topo, seed, rule);
    let mut trace = OptimizationTrace::new(objective.evaluate_unchecked(topo, &initial));
    let ascending: Vec<usize> = (0..topo.radio_count()).collect();

    let assignment = match cfg.scheme {
        Scheme::Bio => {
            let (ca, score, _) = bio_assign(topo, cfg)?;
            let moves = ca
                .as_slice()
                .iter()
                .zip(initial.as_slice())
                .filter(|(a, b)| a != b)
                .count();
            trace.push(Phase::Exhaustive, score, moves);
            ca
        }
        Scheme::Pio => {
            let mut ca = initial.clone();
            let moves = improve_sweep(topo, &mut ca, &objective, &ascending, rule);
            trace.push(Phase::Sweep, objective.evaluate_unchecked(topo, &ca), moves);
            ca
        }
        Scheme::Ko => {
            let mut ca = initial.clone();
            converge(topo, &mut ca, &objective, cfg, &mut trace, |_| ascending.clone());
            ca
        }
        Scheme::Ho => {
            let mut ca = initial.clone();
            converge(topo, &mut ca, &objective, cfg, &mut trace, |_| ascending.clone());
            let moves = rci_in_place(topo, &mut ca, &objective, rule);
            trace.push(Phase::Rci, objective.evaluate_unchecked(topo, &ca), moves);
            if moves > 0 {
                converge(topo, &mut ca, &objective, cfg, &mut trace, |ca| eiz_order(topo, ca));
            }
            ca
        }
    };

    let score = objective.evaluate_unchecked(topo, &assignment);
    trace.feasible = rule.is_satisfied(topo, &assignment);
    assert!(trace.is_monotone(), "optimizer trace worsened: {trace:?}");
    Ok(Outcome {
        initial,
        assignment,
        score,
        trace,
    })
}
