#![allow(clippy::large_enum_variant)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use funsel::SubsetIndex;
use funsel_cli::config::{self, load_config, parse_classifier, parse_epsilon, ConsistencyConfig, RunConfig, Task};
use funsel_cli::report::Histogram;
use funsel_cli::{io, run};

#[derive(Parser)]
#[command(
    name = "funsel",
    version,
    about = "Select feature functionals that preserve a statistical procedure on functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the feature menu on every curve and write an `id,features...` CSV.
    Features(FeaturesArgs),
    /// Replace each curve by the mean of its r nearest neighbours in a feature subset.
    Blind(BlindArgs),
    /// Fit the procedure, search feature subsets and write a JSON report.
    Select(SelectArgs),
    /// Compare empirical and population objectives on a synthetic Gaussian design.
    Consistency(ConsistencyArgs),
    /// Summarise reports or consistency tables; export trace and histogram CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Run configuration (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Curve CSV: header of grid points, then `id,v1,...,vN` rows.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Feature specs or menu macros, `;`-separated (e.g. "point@*;avg[0,9]").
    #[arg(long, value_delimiter = ';', action = clap::ArgAction::Append)]
    features: Vec<String>,
}

impl InputArgs {
    fn resolve(&self, task: Task) -> Result<(RunConfig, bool)> {
        let (mut cfg, seed_given) = match &self.config {
            Some(p) => {
                let l = load_config(p)?;
                (l.config, l.seed_given)
            }
            None => (RunConfig::new(task), false),
        };
        if let Some(c) = &self.curves {
            cfg.curves = Some(c.clone());
        }
        if !self.features.is_empty() {
            cfg.features = self.features.iter().filter(|s| !s.trim().is_empty()).cloned().collect();
        }
        Ok((cfg, seed_given))
    }
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlindArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Feature indices, comma-separated (e.g. "0,3").
    #[arg(long)]
    subset: String,
    /// Neighbours per curve (default: search.r of the configuration).
    #[arg(long)]
    r: Option<usize>,
    /// z-score feature columns before the neighbour search.
    #[arg(long)]
    standardize: bool,
    /// Output curve CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Re-run the configuration embedded in an earlier report.
    #[arg(long, conflicts_with = "config")]
    replay: Option<PathBuf>,
    /// classify, pca, reg-scalar or reg-fun.
    #[arg(long)]
    task: Option<Task>,
    /// Labels, scalar responses (`id,value`) or response curves, aligned by id.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Threshold on the rescaled objective ("inf" for none).
    #[arg(long)]
    epsilon: Option<String>,
    /// Largest cardinality searched exhaustively.
    #[arg(long)]
    d1: Option<usize>,
    /// Subsets retained per round.
    #[arg(long)]
    n0: Option<usize>,
    /// Candidates drawn per retained subset.
    #[arg(long)]
    n1: Option<usize>,
    /// Neighbours per curve in the blinding step.
    #[arg(long)]
    r: Option<usize>,
    /// Largest cardinality considered.
    #[arg(long)]
    d_max: Option<usize>,
    /// Cap on stochastic rounds.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// RNG seed; required whenever stochastic rounds can run.
    #[arg(long)]
    seed: Option<u64>,
    /// z-score feature columns before the neighbour search.
    #[arg(long)]
    standardize: bool,
    /// Skip the swap pass after unsatisfied expansion rounds.
    #[arg(long)]
    no_revision: bool,
    /// FPCA components kept by the pca task.
    #[arg(long)]
    l: Option<usize>,
    /// FPCA truncation of reg-scalar (default: 99% of variance).
    #[arg(long)]
    n_components: Option<usize>,
    /// Predictor FPCA truncation of reg-fun.
    #[arg(long)]
    j: Option<usize>,
    /// Response FPCA truncation of reg-fun.
    #[arg(long)]
    j_prime: Option<usize>,
    /// nearest-centroid or knn:k
    #[arg(long)]
    classifier: Option<String>,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the search trace as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Seed of the synthetic replicates.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicates per sample size.
    #[arg(long)]
    reps: Option<usize>,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Per-replicate table CSV.
    #[arg(long)]
    table_csv: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON files or consistency CSV tables.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Trace CSV of the (single) report given.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Chosen-feature and cardinality counts across the reports.
    #[arg(long)]
    histogram_csv: Option<PathBuf>,
}

fn parse_subset(s: &str) -> Result<SubsetIndex> {
    let idx = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad subset index {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    SubsetIndex::new(idx).map_err(|e| anyhow!("subset: {e}"))
}

fn curves_of(cfg: &RunConfig) -> Result<&Path> {
    cfg.curves.as_deref().ok_or_else(|| anyhow!("no curves file (use --curves or a configuration)"))
}

fn output<'a>(path: Option<&'a Path>) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_features(a: FeaturesArgs) -> Result<()> {
    let (cfg, _) = a.input.resolve(Task::Pca)?;
    let (sample, specs) = run::load_inputs(curves_of(&cfg)?, &cfg.features)?;
    let fm = run::feature_matrix(&sample, &specs)?;
    io::write_feature_matrix(&fm, sample.ids(), output(a.out.as_deref())?)
}

fn cmd_blind(a: BlindArgs) -> Result<()> {
    let (cfg, _) = a.input.resolve(Task::Pca)?;
    let (sample, specs) = run::load_inputs(curves_of(&cfg)?, &cfg.features)?;
    let subset = parse_subset(&a.subset)?;
    let r = a.r.unwrap_or(cfg.search.r);
    let z = run::blind(&sample, &specs, &subset, r, a.standardize || cfg.search.standardize_features)?;
    io::write_curves(&z, output(a.out.as_deref())?)
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let (mut cfg, mut seed_given) = match &a.replay {
        Some(p) => {
            let report = run::read_report(p)?;
            let mut cfg = report.config;
            if let Some(c) = a.input.curves {
                cfg.curves = Some(c);
            }
            (cfg, true)
        }
        None => a.input.resolve(a.task.unwrap_or(Task::Pca))?,
    };
    if let Some(t) = a.task {
        cfg.task = t;
    }
    if cfg.task == Task::Consistency {
        bail!("use `funsel consistency` for the consistency task");
    }
    let s = &mut cfg.search;
    if let Some(e) = &a.epsilon {
        s.epsilon = parse_epsilon(e)?;
    }
    macro_rules! set {
        ($($flag:ident => $dst:expr),*) => { $(if let Some(v) = a.$flag { $dst = v; })* };
    }
    set!(d1 => s.d1, n0 => s.n0, n1 => s.n1, r => s.r, d_max => s.d_max, max_rounds => s.max_rounds);
    if let Some(seed) = a.seed {
        s.seed = seed;
        seed_given = true;
    }
    s.standardize_features |= a.standardize;
    if a.no_revision {
        s.revision = false;
    }
    if let Some(v) = a.l {
        cfg.model.l = Some(v);
    }
    if let Some(v) = a.n_components {
        cfg.model.n_components = Some(v);
    }
    if let Some(v) = a.j {
        cfg.model.j = Some(v);
    }
    if let Some(v) = a.j_prime {
        cfg.model.j_prime = Some(v);
    }
    if let Some(c) = &a.classifier {
        cfg.model.classifier = parse_classifier(c)?;
    }
    if let Some(t) = a.targets {
        cfg.targets = Some(t);
    }
    if let Some(o) = a.out {
        cfg.output = Some(o);
    }
    if let Some(t) = a.trace_csv {
        cfg.trace_csv = Some(t);
    }
    cfg.check(seed_given)?;
    let out = cfg.output.clone().ok_or_else(|| anyhow!("no report path (use --out or `output`)"))?;

    let report = run::select(&cfg)?;
    run::write_report(&report, &out)?;
    let sel = report.selection.as_ref().expect("select fills the selection");
    if let Some(t) = &cfg.trace_csv {
        let f = std::fs::File::create(t).with_context(|| format!("cannot create {}", t.display()))?;
        io::write_trace(&sel.trace, &report.features, f)?;
    }
    match (&sel.chosen, &sel.value) {
        (Some(c), Some(v)) => {
            let labels: Vec<&str> = c.iter().map(|f| f.label.as_str()).collect();
            eprintln!(
                "chosen {} (h~ = {:.6e}, {}satisfied, {} rounds) -> {}",
                labels.join(" "),
                v.rescaled,
                if sel.satisfied { "" } else { "not " },
                sel.rounds_used,
                out.display()
            );
        }
        _ => eprintln!("no subset chosen -> {}", out.display()),
    }
    Ok(())
}

/// Design menu used when neither features nor a consistency block are given.
const DEFAULT_CONSISTENCY_MENU: [&str; 3] = ["point@8", "point@25", "point@42"];

fn cmd_consistency(a: ConsistencyArgs) -> Result<()> {
    let (mut cfg, mut seed_given) = a.input.resolve(Task::Consistency)?;
    cfg.task = Task::Consistency;
    if let Some(seed) = a.seed {
        cfg.search.seed = seed;
        seed_given = true;
    }
    let default_menu = cfg.features.is_empty() && cfg.consistency.is_none();
    if default_menu {
        cfg.features = DEFAULT_CONSISTENCY_MENU.iter().map(|s| s.to_string()).collect();
    }
    let c: &mut ConsistencyConfig = cfg.consistency.get_or_insert_with(|| ConsistencyConfig {
        grid_points: 51,
        variances: vec![4.0, 2.0, 1.0],
        noise_sd: 0.1,
        l: 3,
        subset: vec![if default_menu { 1 } else { 0 }],
        n_list: vec![200, 2000],
        reps: 20,
        argmin_d: if default_menu { 3 } else { 1 },
        argmin_n: None,
        table_csv: None,
    });
    if let Some(r) = a.reps {
        c.reps = r;
    }
    if !a.n_list.is_empty() {
        c.n_list = a.n_list.clone();
    }
    if let Some(t) = a.table_csv {
        c.table_csv = Some(t);
    }
    if let Some(o) = a.out {
        cfg.output = Some(o);
    }
    cfg.check(seed_given)?;
    let (report, rows) = run::consistency(&cfg)?;
    let table = cfg.consistency.as_ref().and_then(|c| c.table_csv.clone());
    if table.is_none() && cfg.output.is_none() {
        bail!("nothing to write (use --table-csv and/or --out)");
    }
    if let Some(t) = table {
        std::fs::write(&t, funsel::oracle::consistency_csv(&rows))
            .with_context(|| format!("cannot write {}", t.display()))?;
    }
    if let Some(o) = &cfg.output {
        run::write_report(&report, o)?;
    }
    let summary = report.consistency.as_ref().expect("consistency summary");
    for b in &summary.by_n {
        eprintln!(
            "n={:>6}  reps={:>3}  median |h_n - h| = {:.4e}  mean = {:.4e}",
            b.n, b.reps, b.median_abs_err, b.mean_abs_err
        );
    }
    if let Some(am) = &summary.argmin {
        eprintln!(
            "argmin agreement at n={}: {:.0}% (population argmin {})",
            am.n,
            100.0 * am.agreement,
            am.labels.join(" ")
        );
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut hist = Histogram::default();
    let mut reports = Vec::new();
    let mut out = std::io::stdout().lock();
    for path in &a.inputs {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            let rows = run::read_consistency_csv(path)?;
            writeln!(out, "{}: consistency table, {} rows", path.display(), rows.len())?;
            let mut tasks: Vec<&str> = rows.iter().map(|r| r.task.as_str()).collect();
            tasks.dedup();
            for b in funsel_cli::report::summarize_rows(&rows) {
                writeln!(
                    out,
                    "  n={:>6} reps={:>3} median_abs_err={:.4e} mean_abs_err={:.4e}",
                    b.n, b.reps, b.median_abs_err, b.mean_abs_err
                )?;
            }
            continue;
        }
        let r = run::read_report(path)?;
        writeln!(
            out,
            "{}: task {}, seed {}, {} features",
            path.display(),
            config::task_name(r.task),
            r.seed,
            r.features.len()
        )?;
        if let Some(sel) = &r.selection {
            for e in &sel.per_cardinality {
                writeln!(out, "  d={}  {:<40} h~={:.6e}", e.subset.len(), e.labels.join(" "), e.rescaled)?;
            }
            match &sel.chosen {
                Some(c) => {
                    let labels: Vec<&str> = c.iter().map(|f| f.label.as_str()).collect();
                    writeln!(out, "  chosen: {} (satisfied: {})", labels.join(" "), sel.satisfied)?;
                }
                None => writeln!(out, "  chosen: none")?,
            }
        }
        if let Some(c) = &r.consistency {
            writeln!(out, "  {}", c.design)?;
            writeln!(out, "  population h = {:.6e}", c.population_h)?;
            for b in &c.by_n {
                writeln!(out, "  n={:>6} reps={:>3} median_abs_err={:.4e}", b.n, b.reps, b.median_abs_err)?;
            }
        }
        hist.add(&r);
        reports.push(r);
    }
    if let Some(t) = &a.trace_csv {
        let [r] = &reports[..] else { bail!("--trace-csv needs exactly one report") };
        let sel = r.selection.as_ref().ok_or_else(|| anyhow!("the report has no search trace"))?;
        let f = std::fs::File::create(t).with_context(|| format!("cannot create {}", t.display()))?;
        io::write_trace(&sel.trace, &r.features, f)?;
    }
    if let Some(h) = &a.histogram_csv {
        let f = std::fs::File::create(h).with_context(|| format!("cannot create {}", h.display()))?;
        hist.write_csv(f)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Features(a) => cmd_features(a),
        Command::Blind(a) => cmd_blind(a),
        Command::Select(a) => cmd_select(a),
        Command::Consistency(a) => cmd_consistency(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
