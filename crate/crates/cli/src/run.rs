//! Command implementations shared by the binary and the tests.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use funsel::oracle::{default_r_rule, ConsistencyRow, ConsistencySetup, KlModel, PopulationTask};
use funsel::statproc::{
    classify, components_for_variance, fit_classifier, fit_fpca, fit_functional_regression, fit_scalar_regression,
};
use funsel::{
    blind_sample, build_feature_matrix, l2_norm, run_search, ClassifierKind, FeatureMatrixF64, FeatureSpec, GridF64,
    Objective, ObjectiveKindF64, SampleF64, SubsetIndex,
};

use crate::config::{expand_features, RunConfig, Task};
use crate::io;
use crate::report::{
    best_per_cardinality, names, ArgminCheck, ChosenFeature, ConsistencySummary, DataSummary, ModelSummary,
    RankedEntry, Report, Selection,
};

fn core<T>(r: funsel::Result<T>, what: &str) -> Result<T> {
    r.map_err(|e| anyhow!("{what}: {e}"))
}

pub fn labels_of(specs: &[FeatureSpec]) -> Vec<String> {
    specs.iter().map(|s| s.label.clone()).collect()
}

/// Curves and expanded feature menu.
pub fn load_inputs(curves: &Path, features: &[String]) -> Result<(SampleF64, Vec<FeatureSpec>)> {
    let sample = io::read_curves(curves)?;
    let specs = expand_features(features, sample.grid())?;
    Ok((sample, specs))
}

pub fn feature_matrix(sample: &SampleF64, specs: &[FeatureSpec]) -> Result<FeatureMatrixF64> {
    core(build_feature_matrix(sample, specs), "features")
}

pub fn blind(
    sample: &SampleF64,
    specs: &[FeatureSpec],
    subset: &SubsetIndex,
    r: usize,
    standardize: bool,
) -> Result<SampleF64> {
    let fm = feature_matrix(sample, specs)?;
    let fm = if standardize { fm.standardized() } else { fm };
    let b = core(blind_sample(sample, &fm, subset, r), "blinding")?;
    core(sample.with_curves(b.curves), "blinding")
}

/// FPCA truncation from the config, or the explained-variance rule.
fn resolve_components(x: &SampleF64, given: Option<usize>, fraction: f64, cap: usize) -> Result<usize> {
    if let Some(k) = given {
        return Ok(k);
    }
    let full = core(fit_fpca(x, cap), "fpca")?;
    let ev: Vec<f64> = full.eigenvalues.to_vec();
    Ok(components_for_variance(&ev, fraction).min(cap))
}

/// Components needed for `fraction` of the sample's variance.
pub fn explained_components(x: &SampleF64, fraction: f64) -> Result<usize> {
    resolve_components(x, None, fraction, fpca_cap(x))
}

fn fpca_cap(x: &SampleF64) -> usize {
    x.grid().len().min(x.n().saturating_sub(1).max(1))
}

/// Fits the configured procedure on the whole sample.
pub fn fit(config: &RunConfig, sample: &SampleF64) -> Result<(ObjectiveKindF64, ModelSummary, Option<usize>)> {
    let m = &config.model;
    let targets = || config.targets.as_deref().ok_or_else(|| anyhow!("no targets file configured"));
    match config.task {
        Task::Classify => {
            let labels = io::read_labels(targets()?, sample.ids())?;
            let model = core(fit_classifier(sample, &labels, m.classifier), "classifier")?;
            let counts = model.classes.iter().map(|c| labels.iter().filter(|l| *l == c).count()).collect();
            let wrong = (0..sample.n())
                .map(|j| core(classify(&model, sample.curve(j)), "classifier").map(|g| g != labels[j]))
                .collect::<Result<Vec<bool>>>()?;
            let err = wrong.iter().filter(|w| **w).count() as f64 / sample.n() as f64;
            let classifier = match m.classifier {
                ClassifierKind::NearestCentroid => "nearest-centroid".to_string(),
                ClassifierKind::Knn(k) => format!("knn:{k}"),
            };
            let summary = ModelSummary::Classify {
                classifier,
                classes: model.classes.clone(),
                class_counts: counts,
                resubstitution_error: err,
                confusion: None,
            };
            Ok((ObjectiveKindF64::Classification(model), summary, None))
        }
        Task::Pca => {
            let l = resolve_components(sample, m.l, m.variance_fraction, fpca_cap(sample))?;
            let model = core(fit_fpca(sample, l), "fpca")?;
            let ev: Vec<f64> = model.eigenvalues.to_vec();
            let explained =
                if model.total_variance > 0.0 { ev.iter().sum::<f64>() / model.total_variance } else { 0.0 };
            let summary = ModelSummary::Pca {
                l,
                eigenvalues: ev,
                total_variance: model.total_variance,
                explained_fraction: explained,
            };
            Ok((ObjectiveKindF64::Pca(model), summary, None))
        }
        Task::RegScalar => {
            let y = io::read_scalar(targets()?, sample.ids())?;
            let cap = fpca_cap(sample).min(sample.n().saturating_sub(1));
            if cap == 0 {
                bail!("scalar regression needs at least 2 curves");
            }
            let k = resolve_components(sample, m.n_components, m.variance_fraction, cap)?;
            let model = core(fit_scalar_regression(sample, &y, k), "scalar regression")?;
            let ybar = y.iter().sum::<f64>() / y.len() as f64;
            let mut ss_res = 0.0;
            let mut ss_tot = 0.0;
            for (j, yy) in y.iter().enumerate() {
                let pred = core(model.predict(sample.curve(j)), "scalar regression")?;
                ss_res += (yy - pred).powi(2);
                ss_tot += (yy - ybar).powi(2);
            }
            let summary = ModelSummary::RegScalar {
                n_components: k,
                intercept: model.intercept,
                beta_l2_norm: core(l2_norm(model.beta.view(), sample.grid()), "scalar regression")?,
                r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
                warnings: model.warnings.clone(),
            };
            Ok((ObjectiveKindF64::RegScalar(model), summary, None))
        }
        Task::RegFun => {
            let y = io::read_functional(targets()?, sample.ids())?;
            let j = resolve_components(sample, m.j, m.variance_fraction, fpca_cap(sample))?;
            let jp = resolve_components(&y, m.j_prime, m.variance_fraction, fpca_cap(&y))?;
            let model = core(fit_functional_regression(sample, &y, j, jp), "functional regression")?;
            let (wx, wy) = (sample.grid().weights(), y.grid().weights());
            let mut ss = 0.0;
            for (t, row) in model.beta_surface.rows().into_iter().enumerate() {
                for (s, v) in row.iter().enumerate() {
                    ss += wx[t] * wy[s] * v * v;
                }
            }
            let summary =
                ModelSummary::RegFun { j, j_prime: jp, beta_l2_norm: ss.sqrt(), warnings: model.warnings.clone() };
            Ok((ObjectiveKindF64::RegFunctional(model), summary, Some(y.grid().len())))
        }
        Task::Consistency => bail!("the consistency task has no fitted procedure; use `funsel consistency`"),
    }
}

/// Fits the procedure, searches for a subset and assembles the report.
pub fn select(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let curves = config.curves.as_deref().ok_or_else(|| anyhow!("no curves file configured"))?;
    let (sample, specs) = load_inputs(curves, &config.features)?;
    let labels = labels_of(&specs);
    let (kind, mut summary, y_grid_len) = fit(config, &sample)?;
    let fit_seconds = start.elapsed().as_secs_f64();

    let t_search = Instant::now();
    let result = core(run_search(&sample, &specs, &kind, &config.search), "search")?;
    let search_seconds = t_search.elapsed().as_secs_f64();

    if let (Some(chosen), ModelSummary::Classify { classes, confusion, .. }) = (&result.chosen, &mut summary) {
        let fm = feature_matrix(&sample, &specs)?;
        let fm = if config.search.standardize_features { fm.standardized() } else { fm };
        let obj = core(Objective::new(&kind, &sample, fm, config.search.r), "objective")?;
        let blinded = core(obj.blind(chosen), "blinding")?;
        let ObjectiveKindF64::Classification(model) = &kind else { unreachable!() };
        let mut table = vec![vec![0usize; classes.len()]; classes.len()];
        for j in 0..sample.n() {
            let a = core(classify(model, sample.curve(j)), "classifier")?;
            let b = core(classify(model, blinded.curve(j)), "classifier")?;
            let ia = classes.binary_search(&a).map_err(|_| anyhow!("unknown class {a}"))?;
            let ib = classes.binary_search(&b).map_err(|_| anyhow!("unknown class {b}"))?;
            table[ia][ib] += 1;
        }
        *confusion = Some(table);
    }

    let mut report = Report::new(config.clone(), labels.clone());
    report.data = Some(DataSummary {
        n: sample.n(),
        grid_len: sample.grid().len(),
        grid_start: sample.grid().start(),
        grid_end: sample.grid().end(),
        p: specs.len(),
        y_grid_len,
    });
    report.model = Some(summary);
    report.selection = Some(Selection {
        chosen: result
            .chosen
            .as_ref()
            .map(|c| c.indices().iter().map(|&i| ChosenFeature { index: i, label: labels[i].clone() }).collect()),
        value: result.value,
        satisfied: result.satisfied,
        rounds_used: result.rounds_used,
        per_cardinality: best_per_cardinality(&result.trace, &labels),
        ranking: result.ranking.iter().map(|r| RankedEntry::new(r, &labels)).collect(),
        trace: result.trace,
    });
    report.timing.fit_seconds = fit_seconds;
    report.timing.search_seconds = search_seconds;
    report.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs the synthetic consistency experiment of the configuration.
pub fn consistency(config: &RunConfig) -> Result<(Report, Vec<ConsistencyRow>)> {
    let start = Instant::now();
    let c = config.consistency.as_ref().ok_or_else(|| anyhow!("no consistency section"))?;
    let grid = core(GridF64::uniform(0.0, 1.0, c.grid_points), "grid")?;
    let model = core(KlModel::sine(grid.clone(), c.variances.clone(), c.noise_sd), "model")?;
    let specs = expand_features(&config.features, &grid)?;
    let labels = labels_of(&specs);
    let subset = SubsetIndex::new(c.subset.clone()).map_err(|e| anyhow!("subset: {e}"))?;
    core(subset.check(specs.len()), "subset")?;
    if c.n_list.is_empty() || c.reps == 0 {
        bail!("consistency needs a non-empty n_list and reps >= 1");
    }
    let setup = ConsistencySetup {
        model,
        task: PopulationTask::Pca { l: c.l },
        specs: specs.clone(),
        response_noise: 0.0,
        seed: config.search.seed,
    };
    let rows = core(setup.run(&subset, &c.n_list, c.reps, default_r_rule), "consistency")?;
    let argmin = if c.argmin_d > 0 {
        let n = c.argmin_n.unwrap_or_else(|| *c.n_list.iter().max().expect("non-empty"));
        let (target, share) = core(setup.argmin_agreement(c.argmin_d, n, c.reps, default_r_rule), "argmin check")?;
        Some(ArgminCheck {
            d: c.argmin_d,
            n,
            reps: c.reps,
            labels: names(&target, &labels),
            population_argmin: target,
            agreement: share,
        })
    } else {
        None
    };
    let population_h = rows.first().map(|r| r.h).context("no consistency rows")?;
    let mut report = Report::new(config.clone(), labels.clone());
    report.consistency = Some(ConsistencySummary {
        synthetic: true,
        design: format!(
            "synthetic Gaussian Karhunen-Loeve test fixture: sine basis on [0,1], {} grid points, variances {:?}, noise sd {}",
            c.grid_points, c.variances, c.noise_sd
        ),
        labels: names(&subset, &labels),
        subset,
        population_h,
        by_n: crate::report::summarize_rows(&rows),
        argmin,
    });
    report.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok((report, rows))
}

/// Reads a consistency table written by `funsel consistency`.
pub fn read_consistency_csv(path: &Path) -> Result<Vec<ConsistencyRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let row: ConsistencyRow = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()?).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let report: Report =
        serde_json::from_str(&text).with_context(|| format!("{} is not a funsel report", path.display()))?;
    if report.version != crate::config::SCHEMA_VERSION {
        bail!("{}: report version {} is not supported", path.display(), report.version);
    }
    Ok(report)
}
