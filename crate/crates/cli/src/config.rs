//! Run configuration: JSON file, command-line overrides, feature menus.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use funsel::{ClassifierKind, FeatureKind, FeatureSpec, GridF64, SearchConfig};
use serde::{Deserialize, Serialize};

/// Version written to and required from configuration and report files.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Classify,
    Pca,
    RegScalar,
    RegFun,
    Consistency,
}

impl std::str::FromStr for Task {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .with_context(|| format!("unknown task {s:?} (classify, pca, reg-scalar, reg-fun, consistency)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// PCA components; default: the 99% variance rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Scalar regression truncation K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_components: Option<usize>,
    /// X-side truncation J of the functional model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    /// Y-side truncation J′ of the functional model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_prime: Option<usize>,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierKind,
    /// Explained-variance share used for unset truncation levels.
    #[serde(default = "default_fraction")]
    pub variance_fraction: f64,
}

fn default_classifier() -> ClassifierKind {
    ClassifierKind::NearestCentroid
}

fn default_fraction() -> f64 {
    0.99
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            l: None,
            n_components: None,
            j: None,
            j_prime: None,
            classifier: default_classifier(),
            variance_fraction: default_fraction(),
        }
    }
}

/// Synthetic Karhunen–Loève design for the `consistency` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub grid_points: usize,
    pub variances: Vec<f64>,
    #[serde(default)]
    pub noise_sd: f64,
    /// Principal components compared.
    pub l: usize,
    /// Feature indices of the fixed subset `I`.
    pub subset: Vec<usize>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    /// Largest cardinality of the argmin-agreement check; 0 skips it.
    #[serde(default)]
    pub argmin_d: usize,
    /// Sample size of the argmin-agreement check; default: largest of `n_list`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin_n: Option<usize>,
    /// Per-replicate table (`task,n,rep,h_n,h,abs_err`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<PathBuf>,
    /// Labels (`classify`), responses (`reg-scalar`) or response curves
    /// (`reg-fun`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<PathBuf>,
    /// Canonical feature specs and menu macros, see [`expand_features`].
    pub features: Vec<String>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_csv: Option<PathBuf>,
}

/// A parsed configuration and whether it fixed the seed explicitly.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub seed_given: bool,
}

pub fn parse_config(text: &str) -> Result<Loaded> {
    let value: serde_json::Value = serde_json::from_str(text).context("configuration is not valid JSON")?;
    let seed_given = value.pointer("/search/seed").is_some_and(|v| !v.is_null());
    let config: RunConfig = serde_json::from_value(value).context("invalid configuration")?;
    if config.version != SCHEMA_VERSION {
        bail!("configuration version {} is not supported (expected {SCHEMA_VERSION})", config.version);
    }
    Ok(Loaded { config, seed_given })
}

pub fn load_config(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        Self {
            version: SCHEMA_VERSION,
            task,
            curves: None,
            targets: None,
            features: Vec::new(),
            search: SearchConfig::default(),
            model: ModelConfig::default(),
            consistency: None,
            output: None,
            trace_csv: None,
        }
    }

    /// Task-specific required fields.
    pub fn check(&self, seed_given: bool) -> Result<()> {
        if self.features.is_empty() {
            bail!("no features configured");
        }
        match self.task {
            Task::Consistency => {
                if self.consistency.is_none() {
                    bail!("task `consistency` needs a `consistency` section");
                }
                if !seed_given {
                    bail!("task `consistency` needs an explicit seed (--seed or search.seed)");
                }
                return Ok(());
            }
            Task::Classify | Task::RegScalar | Task::RegFun if self.targets.is_none() => {
                bail!("task `{}` needs a targets file", task_name(self.task));
            }
            _ => {}
        }
        let Some(curves) = &self.curves else { bail!("no curves file configured") };
        if !curves.exists() {
            bail!("curves file {} does not exist", curves.display());
        }
        if let Some(t) = &self.targets {
            if !t.exists() {
                bail!("targets file {} does not exist", t.display());
            }
        }
        if !self.search.is_exhaustive_only() && !seed_given {
            bail!("stochastic search (d_max > d1) needs an explicit seed (--seed or search.seed)");
        }
        Ok(())
    }
}

pub fn task_name(t: Task) -> &'static str {
    match t {
        Task::Classify => "classify",
        Task::Pca => "pca",
        Task::RegScalar => "reg-scalar",
        Task::RegFun => "reg-fun",
        Task::Consistency => "consistency",
    }
}

/// Expands the feature list against a grid.
///
/// Besides canonical specs (`point@3`, `avg[0,9]`, `occ[-5,0)`, `upx@0`,
/// `pathnorm^2`, `pathmom^3`) three menu macros are accepted:
/// - `point@*`: every grid index;
/// - `avg/w`: consecutive windows of `w` grid points (a one-point tail is
///   merged into the previous window);
/// - `occ/lo:step:hi`: bands `[lo, lo+step), ...` up to `hi`.
pub fn expand_features(items: &[String], grid: &GridF64) -> Result<Vec<FeatureSpec>> {
    let mut out = Vec::new();
    for item in items {
        let item = item.trim();
        if item == "point@*" {
            out.extend((0..grid.len()).map(|i| FeatureSpec::new(FeatureKind::PointEval(i))));
        } else if let Some(w) = item.strip_prefix("avg/") {
            let w: usize = w.parse().with_context(|| format!("bad window width in {item:?}"))?;
            if w < 2 {
                bail!("{item:?}: windows need at least 2 grid points");
            }
            let pts = grid.points();
            let n = pts.len();
            let mut starts: Vec<usize> = (0..n).step_by(w).collect();
            if starts.len() > 1 && n - starts[starts.len() - 1] < 2 {
                starts.pop();
            }
            for (k, &s) in starts.iter().enumerate() {
                let e = starts.get(k + 1).map(|&nx| nx - 1).unwrap_or(n - 1);
                out.push(FeatureSpec::new(FeatureKind::LocalAverage(pts[s], pts[e])));
            }
        } else if let Some(r) = item.strip_prefix("occ/") {
            let parts: Vec<f64> = r
                .split(':')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("bad band range in {item:?}"))?;
            let [lo, step, hi] = parts[..] else { bail!("{item:?}: expected occ/lo:step:hi") };
            if !(step > 0.0) || !(hi > lo) {
                bail!("{item:?}: need step > 0 and hi > lo");
            }
            let count = ((hi - lo) / step).round() as usize;
            for k in 0..count {
                let a = lo + step * k as f64;
                out.push(FeatureSpec::new(FeatureKind::Occupation(a, a + step)));
            }
        } else {
            let spec: FeatureSpec = item.parse().map_err(|e| anyhow::anyhow!("feature {item:?}: {e}"))?;
            out.push(spec);
        }
    }
    for (i, s) in out.iter().enumerate() {
        s.validate(grid).map_err(|e| anyhow::anyhow!("feature {i} ({}): {e}", s.label))?;
    }
    Ok(out)
}

/// `nearest_centroid`, `nearest-centroid` or `knn:k`.
pub fn parse_classifier(s: &str) -> Result<ClassifierKind> {
    match s {
        "nearest_centroid" | "nearest-centroid" | "centroid" => Ok(ClassifierKind::NearestCentroid),
        _ => match s.strip_prefix("knn:") {
            Some(k) => Ok(ClassifierKind::Knn(k.parse().with_context(|| format!("bad k in {s:?}"))?)),
            None => bail!("unknown classifier {s:?} (nearest-centroid or knn:k)"),
        },
    }
}

/// `inf`/`+inf`/`infinity` or a non-negative real.
pub fn parse_epsilon(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse().with_context(|| format!("bad epsilon {s:?}")),
    }
}
