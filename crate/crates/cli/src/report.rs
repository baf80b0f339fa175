//! Report JSON: schema types, summaries and aggregation across reports.

use std::collections::BTreeMap;

use funsel::oracle::ConsistencyRow;
use funsel::search::TraceEntry;
use funsel::{ObjectiveValue, RankedSubset, SubsetIndex};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Task, SCHEMA_VERSION};

pub const TOOL: &str = "funsel";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n: usize,
    pub grid_len: usize,
    pub grid_start: f64,
    pub grid_end: f64,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_grid_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenFeature {
    pub index: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub subset: SubsetIndex,
    pub labels: Vec<String>,
    pub rescaled: f64,
    pub raw: f64,
}

impl RankedEntry {
    pub fn new(r: &RankedSubset, labels: &[String]) -> Self {
        Self {
            subset: r.subset.clone(),
            labels: names(&r.subset, labels),
            rescaled: r.value.rescaled,
            raw: r.value.raw,
        }
    }
}

pub fn names(s: &SubsetIndex, labels: &[String]) -> Vec<String> {
    s.indices().iter().map(|&i| labels[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Option<Vec<ChosenFeature>>,
    pub value: Option<ObjectiveValue>,
    pub satisfied: bool,
    pub rounds_used: usize,
    /// Best evaluated subset at each cardinality, smallest cardinality first.
    pub per_cardinality: Vec<RankedEntry>,
    /// Subsets retained when the search stopped, best first.
    pub ranking: Vec<RankedEntry>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSummary {
    Classify {
        classifier: String,
        classes: Vec<i64>,
        class_counts: Vec<usize>,
        /// Share of curves whose predicted label differs from the given one.
        resubstitution_error: f64,
        /// `confusion[a][b]`: curves predicted `classes[a]` originally and
        /// `classes[b]` after blinding with the chosen subset.
        confusion: Option<Vec<Vec<usize>>>,
    },
    Pca {
        l: usize,
        eigenvalues: Vec<f64>,
        total_variance: f64,
        explained_fraction: f64,
    },
    RegScalar {
        n_components: usize,
        intercept: f64,
        beta_l2_norm: f64,
        r_squared: f64,
        warnings: Vec<String>,
    },
    RegFun {
        j: usize,
        j_prime: usize,
        beta_l2_norm: f64,
        warnings: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyBlock {
    pub n: usize,
    pub reps: usize,
    pub median_abs_err: f64,
    pub mean_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgminCheck {
    pub d: usize,
    pub n: usize,
    pub reps: usize,
    pub population_argmin: SubsetIndex,
    pub labels: Vec<String>,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    /// Always true: the design is a test fixture, not data.
    pub synthetic: bool,
    pub design: String,
    pub subset: SubsetIndex,
    pub labels: Vec<String>,
    pub population_h: f64,
    pub by_n: Vec<ConsistencyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<ArgminCheck>,
}

/// Wall-clock seconds; the only field that differs between replays.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    #[serde(default)]
    pub fit_seconds: f64,
    #[serde(default)]
    pub search_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub tool: String,
    pub tool_version: String,
    pub task: Task,
    /// Effective configuration after command-line overrides; re-running it
    /// reproduces this report.
    pub config: RunConfig,
    pub rng: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySummary>,
    pub timing: Timing,
}

impl Report {
    pub fn new(config: RunConfig, features: Vec<String>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            tool: TOOL.into(),
            tool_version: TOOL_VERSION.into(),
            task: config.task,
            seed: config.search.seed,
            config,
            rng: funsel::search::RNG_ALGORITHM.into(),
            data: None,
            features,
            model: None,
            selection: None,
            consistency: None,
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The report with timing zeroed, for replay comparisons.
    pub fn without_timing(&self) -> Self {
        Self { timing: Timing::default(), ..self.clone() }
    }
}

/// Lowest rescaled value per cardinality across a trace.
pub fn best_per_cardinality(trace: &[TraceEntry], labels: &[String]) -> Vec<RankedEntry> {
    let mut best: BTreeMap<usize, RankedEntry> = BTreeMap::new();
    for t in trace {
        let (Some(rescaled), Some(raw)) = (t.rescaled, t.raw) else { continue };
        let e = RankedEntry { subset: t.subset.clone(), labels: names(&t.subset, labels), rescaled, raw };
        match best.get(&t.subset.len()) {
            Some(b) if (b.rescaled, b.subset.indices()) <= (rescaled, t.subset.indices()) => {}
            _ => {
                best.insert(t.subset.len(), e);
            }
        }
    }
    best.into_values().collect()
}

/// Consistency table aggregated by sample size.
pub fn summarize_rows(rows: &[ConsistencyRow]) -> Vec<ConsistencyBlock> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.abs_err).collect();
            ConsistencyBlock {
                n,
                reps: errs.len(),
                median_abs_err: funsel::oracle::median_abs_err(rows, n).unwrap_or(f64::NAN),
                mean_abs_err: errs.iter().sum::<f64>() / errs.len() as f64,
            }
        })
        .collect()
}

/// Selection histograms across reports: how often each feature was chosen
/// and how often each cardinality was.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Histogram {
    pub features: BTreeMap<(usize, String), usize>,
    pub cardinalities: BTreeMap<usize, usize>,
}

impl Histogram {
    pub fn add(&mut self, report: &Report) {
        let Some(chosen) = report.selection.as_ref().and_then(|s| s.chosen.as_ref()) else { return };
        *self.cardinalities.entry(chosen.len()).or_default() += 1;
        for c in chosen {
            *self.features.entry((c.index, c.label.clone())).or_default() += 1;
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "value", "label", "count"])?;
        for ((i, label), c) in &self.features {
            w.write_record(["feature", &i.to_string(), label, &c.to_string()])?;
        }
        for (d, c) in &self.cardinalities {
            w.write_record(["cardinality", &d.to_string(), "", &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
