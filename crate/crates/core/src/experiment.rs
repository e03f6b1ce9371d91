//! Scheme x metric x PHY rate x seed experiment matrix.
//!
//! Each `(scheme, metric, seed)` assignment is optimized once and then
//! estimated at every PHY rate (the optimizers never look at the rate).
//! Cells run through [`Execution`], and rows are sorted afterwards, so the
//! report is identical under both strategies apart from `wall_ms`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{build_grid_flows, estimate_performance, FlowSpec};
use crate::exec::Execution;
use crate::iem::{better, score_all_with_hops, IemScore, Metric};
use crate::io::{read_topology, write_json};
use crate::optimizer::{run_scheme, Scheme, SchemeConfig, DEFAULT_BIO_BUDGET, DEFAULT_MAX_ITERATIONS};
use crate::topology::{gen_grid, gen_random, Connectivity, RadioParams, Topology};

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 11] = [
    "scheme",
    "metric",
    "phy_rate_mbps",
    "seed",
    "tid",
    "cdal_cost",
    "cxls_wt",
    "est_aggregate_throughput_mbps",
    "iterations",
    "wall_ms",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologySpec {
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
        #[serde(flatten)]
        params: RadioParams,
    },
    Random {
        n: usize,
        width: f64,
        height: f64,
        #[serde(default)]
        seed: u64,
        #[serde(flatten)]
        params: RadioParams,
    },
    File {
        path: PathBuf,
    },
}

fn default_spacing() -> f64 {
    250.0
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec::Grid {
            rows: 5,
            cols: 5,
            spacing: default_spacing(),
            params: RadioParams::default(),
        }
    }
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology> {
        match self {
            TopologySpec::Grid {
                rows,
                cols,
                spacing,
                params,
            } => gen_grid(*rows, *cols, *spacing, *params),
            TopologySpec::Random {
                n,
                width,
                height,
                seed,
                params,
            } => gen_random(*n, *width, *height, *params, *seed),
            TopologySpec::File { path } => read_topology(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub schemes: Vec<Scheme>,
    pub metrics: Vec<Metric>,
    pub phy_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    /// CXLS hop count override.
    pub xls_hops: Option<usize>,
    pub max_iterations: usize,
    pub connectivity: Connectivity,
    pub bio_budget: u64,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologySpec::default(),
            schemes: vec![Scheme::Pio, Scheme::Ko, Scheme::Ho],
            metrics: Metric::ALL.to_vec(),
            phy_rates: vec![9.0, 54.0],
            seeds: (1..=5).collect(),
            xls_hops: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            connectivity: Connectivity::Global,
            bio_budget: DEFAULT_BIO_BUDGET,
            output_dir: None,
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            execution: Execution::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Err(Error::Config(format!("{name} list must not be empty")));
        if self.schemes.is_empty() {
            return empty("scheme");
        }
        if self.metrics.is_empty() {
            return empty("metric");
        }
        if self.phy_rates.is_empty() {
            return empty("phy rate");
        }
        if self.seeds.is_empty() {
            return empty("seed");
        }
        if let Some(r) = self.phy_rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Config(format!("phy rate must be positive, got {r}")));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.xls_hops == Some(0) {
            return Err(Error::Config("xls hop count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.schemes.len() * self.metrics.len() * self.phy_rates.len() * self.seeds.len()
    }
}

/// One run (`seed` set) or the mean over a `(scheme, metric, rate)` group
/// (`seed` = `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scheme: Scheme,
    pub metric: Metric,
    pub phy_rate_mbps: f64,
    pub seed: Option<u64>,
    pub tid: Option<f64>,
    pub cdal_cost: Option<f64>,
    pub cxls_wt: Option<f64>,
    pub est_aggregate_throughput_mbps: Option<f64>,
    pub iterations: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl ExperimentRow {
    /// Value of the metric this run optimized.
    pub fn optimized_value(&self) -> Option<f64> {
        match self.metric {
            Metric::Tid => self.tid,
            Metric::Cdal => self.cdal_cost,
            Metric::Cxls => self.cxls_wt,
        }
    }

    fn csv_record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.scheme.to_string(),
            self.metric.to_string(),
            self.phy_rate_mbps.to_string(),
            self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
            num(self.tid),
            num(self.cdal_cost),
            num(self.cxls_wt),
            num(self.est_aggregate_throughput_mbps),
            num(self.iterations),
            format!("{:.3}", self.wall_ms),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Informative scheme and metric comparisons over the matrix. Nothing here
/// gates success.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeSummary {
    /// Per `(metric, rate)`: mean estimated throughput satisfies HO > KO > PIO.
    pub throughput_ordering: Vec<OrderingCheck>,
    /// Per `(scheme, rate)`: CXLS-driven throughput gain over TID-driven, percent.
    pub cxls_vs_tid_gain: Vec<GainCheck>,
    /// Per `(metric, seed)` triples where HO or KO ends worse than its
    /// predecessor on the optimized metric.
    pub dominance_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub metric: Metric,
    pub phy_rate_mbps: f64,
    pub ho_gt_ko_gt_pio: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheck {
    pub scheme: Scheme,
    pub phy_rate_mbps: f64,
    pub gain_pct: f64,
    pub within_10_to_15_pct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub means: Vec<ExperimentRow>,
    pub summary: QualitativeSummary,
}

impl ExperimentReport {
    pub fn row_count(&self) -> usize {
        self.rows.len() + self.means.len()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().chain(&self.means)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS)?;
        for row in self.all_rows() {
            w.write_record(row.csv_record())?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn mean_row(&self, scheme: Scheme, metric: Metric, rate: f64) -> Option<&ExperimentRow> {
        self.means
            .iter()
            .find(|r| r.scheme == scheme && r.metric == metric && r.phy_rate_mbps == rate)
    }

    /// Grouped-bar series (`scheme x metric` per rate) for one report column.
    pub fn plot_data(&self, column: PlotColumn) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["phy_rate_mbps", "scheme", "imf", "mean", "min", "max", "runs"])?;
        for mean in &self.means {
            let members: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.scheme == mean.scheme && r.metric == mean.metric && r.phy_rate_mbps == mean.phy_rate_mbps)
                .filter_map(|r| column.get(r))
                .collect();
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let min = members.iter().copied().reduce(f64::min);
            let max = members.iter().copied().reduce(f64::max);
            w.write_record([
                mean.phy_rate_mbps.to_string(),
                mean.scheme.to_string(),
                mean.metric.to_string(),
                fmt(column.get(mean)),
                fmt(min),
                fmt(max),
                members.len().to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Write `report.csv`, `plot_<column>.csv` and/or `report.json` into `dir`.
    pub fn write(&self, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if formats.contains(&OutputFormat::Csv) {
            let path = dir.join("report.csv");
            fs::write(&path, self.to_csv()?)?;
            written.push(path);
            for column in PlotColumn::ALL {
                let path = dir.join(format!("plot_{}.csv", column.name()));
                fs::write(&path, self.plot_data(column)?)?;
                written.push(path);
            }
        }
        if formats.contains(&OutputFormat::Json) {
            let path = dir.join("report.json");
            write_json(&path, self)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotColumn {
    Tid,
    CdalCost,
    CxlsWt,
    Throughput,
}

impl PlotColumn {
    pub const ALL: [PlotColumn; 4] = [
        PlotColumn::Tid,
        PlotColumn::CdalCost,
        PlotColumn::CxlsWt,
        PlotColumn::Throughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotColumn::Tid => "tid",
            PlotColumn::CdalCost => "cdal_cost",
            PlotColumn::CxlsWt => "cxls_wt",
            PlotColumn::Throughput => "est_aggregate_throughput_mbps",
        }
    }

    fn get(self, row: &ExperimentRow) -> Option<f64> {
        match self {
            PlotColumn::Tid => row.tid,
            PlotColumn::CdalCost => row.cdal_cost,
            PlotColumn::CxlsWt => row.cxls_wt,
            PlotColumn::Throughput => row.est_aggregate_throughput_mbps,
        }
    }
}

struct CellResult {
    scheme: Scheme,
    metric: Metric,
    seed: u64,
    rows: Vec<ExperimentRow>,
}

fn run_cell(
    topo: &Topology,
    flows: Option<&[FlowSpec]>,
    cfg: &ExperimentConfig,
    scheme: Scheme,
    metric: Metric,
    seed: u64,
) -> CellResult {
    let start = Instant::now();
    let scheme_cfg = SchemeConfig {
        scheme,
        metric,
        seed,
        max_iterations: cfg.max_iterations,
        connectivity: cfg.connectivity,
        bio_budget: cfg.bio_budget,
        xls_hops: cfg.xls_hops,
        // cells already run concurrently
        execution: Execution::Sequential,
    };
    let outcome = run_scheme(topo, &scheme_cfg).and_then(|out| {
        let scores = score_all_with_hops(topo, &out.assignment, cfg.xls_hops.unwrap_or(topo.interference_x()))?;
        Ok((out, scores))
    });
    let opt_ms = start.elapsed().as_secs_f64() * 1e3;

    let rows = cfg
        .phy_rates
        .iter()
        .map(|&rate| {
            let t0 = Instant::now();
            let mut row = ExperimentRow {
                scheme,
                metric,
                phy_rate_mbps: rate,
                seed: Some(seed),
                tid: None,
                cdal_cost: None,
                cxls_wt: None,
                est_aggregate_throughput_mbps: None,
                iterations: None,
                wall_ms: 0.0,
                error: None,
            };
            match &outcome {
                Ok((out, scores)) => {
                    row.tid = Some(scores.tid);
                    row.cdal_cost = Some(scores.cdal_cost);
                    row.cxls_wt = Some(scores.cxls_wt);
                    row.iterations = Some(out.trace.iterations() as f64);
                    if let Some(flows) = flows {
                        match estimate_performance(topo, &out.assignment, flows, rate) {
                            Ok(perf) => row.est_aggregate_throughput_mbps = Some(perf.aggregate_throughput_mbps),
                            Err(e) => row.error = Some(e.to_string()),
                        }
                    }
                    if !out.trace.feasible && row.error.is_none() {
                        row.error = Some("no feasible assignment found".into());
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row.wall_ms = opt_ms + t0.elapsed().as_secs_f64() * 1e3;
            row
        })
        .collect();
    CellResult {
        scheme,
        metric,
        seed,
        rows,
    }
}

/// Run the full matrix and compute mean rows and the qualitative summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let topo = cfg.topology.build()?;
    let flows = topo.grid().map(|_| build_grid_flows(&topo)).transpose()?;

    let mut cells = Vec::new();
    for &scheme in &cfg.schemes {
        for &metric in &cfg.metrics {
            for &seed in &cfg.seeds {
                cells.push((scheme, metric, seed));
            }
        }
    }
    let results = cfg.execution.map(&cells, |&(scheme, metric, seed)| {
        run_cell(&topo, flows.as_deref(), cfg, scheme, metric, seed)
    });

    let mut rows: Vec<ExperimentRow> = results.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    rows.sort_by(|a, b| {
        (a.scheme, a.metric)
            .cmp(&(b.scheme, b.metric))
            .then(a.phy_rate_mbps.total_cmp(&b.phy_rate_mbps))
            .then(a.seed.cmp(&b.seed))
    });
    let means = mean_rows(&rows);
    let summary = summarize(&results, &means);
    Ok(ExperimentReport { rows, means, summary })
}

fn mean_rows(rows: &[ExperimentRow]) -> Vec<ExperimentRow> {
    let mut means: Vec<ExperimentRow> = Vec::new();
    for group in
        rows.chunk_by(|a, b| a.scheme == b.scheme && a.metric == b.metric && a.phy_rate_mbps == b.phy_rate_mbps)
    {
        let ok: Vec<&ExperimentRow> = group.iter().filter(|r| r.error.is_none()).collect();
        let mean = |f: fn(&ExperimentRow) -> Option<f64>| {
            let vals: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let failed = group.len() - ok.len();
        let first = &group[0];
        means.push(ExperimentRow {
            scheme: first.scheme,
            metric: first.metric,
            phy_rate_mbps: first.phy_rate_mbps,
            seed: None,
            tid: mean(|r| r.tid),
            cdal_cost: mean(|r| r.cdal_cost),
            cxls_wt: mean(|r| r.cxls_wt),
            est_aggregate_throughput_mbps: mean(|r| r.est_aggregate_throughput_mbps),
            iterations: mean(|r| r.iterations),
            wall_ms: group.iter().map(|r| r.wall_ms).sum::<f64>() / group.len() as f64,
            error: (failed > 0).then(|| format!("{failed} of {} runs failed", group.len())),
        });
    }
    means
}

fn summarize(cells: &[CellResult], means: &[ExperimentRow]) -> QualitativeSummary {
    let report = ExperimentReport {
        rows: Vec::new(),
        means: means.to_vec(),
        summary: QualitativeSummary {
            throughput_ordering: Vec::new(),
            cxls_vs_tid_gain: Vec::new(),
            dominance_violations: 0,
        },
    };
    let mut rates: Vec<f64> = means.iter().map(|r| r.phy_rate_mbps).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let thr = |s, m, r| {
        report
            .mean_row(s, m, r)
            .and_then(|row| row.est_aggregate_throughput_mbps)
    };

    let mut throughput_ordering = Vec::new();
    for metric in Metric::ALL {
        for &rate in &rates {
            if let (Some(ho), Some(ko), Some(pio)) = (
                thr(Scheme::Ho, metric, rate),
                thr(Scheme::Ko, metric, rate),
                thr(Scheme::Pio, metric, rate),
            ) {
                throughput_ordering.push(OrderingCheck {
                    metric,
                    phy_rate_mbps: rate,
                    ho_gt_ko_gt_pio: ho > ko && ko > pio,
                });
            }
        }
    }

    let mut cxls_vs_tid_gain = Vec::new();
    for scheme in [Scheme::Bio, Scheme::Pio, Scheme::Ko, Scheme::Ho] {
        for &rate in &rates {
            if let (Some(cx), Some(tid)) = (thr(scheme, Metric::Cxls, rate), thr(scheme, Metric::Tid, rate)) {
                if tid > 0.0 {
                    let gain_pct = (cx - tid) / tid * 100.0;
                    cxls_vs_tid_gain.push(GainCheck {
                        scheme,
                        phy_rate_mbps: rate,
                        gain_pct,
                        within_10_to_15_pct: (10.0..=15.0).contains(&gain_pct),
                    });
                }
            }
        }
    }

    let score_of = |scheme: Scheme, metric: Metric, seed: u64| {
        cells
            .iter()
            .find(|c| c.scheme == scheme && c.metric == metric && c.seed == seed)
            .and_then(|c| c.rows.first())
            .and_then(ExperimentRow::optimized_value)
            .map(|v| IemScore::new(metric, v))
    };
    let mut dominance_violations = 0;
    for cell in cells.iter().filter(|c| c.scheme == Scheme::Ho) {
        let (m, s) = (cell.metric, cell.seed);
        if let (Some(ho), Some(ko), Some(pio)) = (
            score_of(Scheme::Ho, m, s),
            score_of(Scheme::Ko, m, s),
            score_of(Scheme::Pio, m, s),
        ) {
            if better(&ko, &ho) || better(&pio, &ko) {
                dominance_violations += 1;
            }
        }
    }

    QualitativeSummary {
        throughput_ordering,
        cxls_vs_tid_gain,
        dominance_violations,
    }
}
