//! Ground truth for testing: Gaussian Karhunen–Loève test models with
//! closed-form blinded processes and population objectives, brute-force
//! subset enumeration, and a Monte Carlo consistency harness.
//!
//! Everything here is test-bed machinery on `f64`; the synthetic designs are
//! fixtures, not estimates of any real process.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blinding::SubsetIndex;
use crate::error::{Error, Result};
use crate::fdata::{inner_product, FunctionalSample, Grid};
use crate::features::{build_feature_matrix, FeatureSpec};
use crate::linalg::{cholesky, cholesky_solve, sym_eigen};
use crate::objectives::{Objective, ObjectiveKind, SubsetObjective};
use crate::search::{combinations, RankedSubset};
use crate::statproc::{fit_fpca, fit_functional_regression, fit_scalar_regression};

/// `X = mean + Σ_k ξ_k φ_k + noise`, `ξ_k ~ N(0, variances[k])`, white
/// measurement noise of sd `noise_sd` at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct KlModel {
    pub grid: Grid<f64>,
    pub basis: Array2<f64>,
    pub variances: Array1<f64>,
    pub mean: Array1<f64>,
    pub noise_sd: f64,
}

impl KlModel {
    pub fn new(
        grid: Grid<f64>,
        basis: Array2<f64>,
        variances: Vec<f64>,
        mean: Array1<f64>,
        noise_sd: f64,
    ) -> Result<Self> {
        let k = basis.nrows();
        if basis.ncols() != grid.len() || mean.len() != grid.len() {
            return Err(Error::Dimension("basis and mean must live on the model grid".into()));
        }
        if variances.len() != k || k == 0 {
            return Err(Error::Dimension(format!("{} variances for {k} basis curves", variances.len())));
        }
        if variances.iter().any(|&v| !(v >= 0.0)) || variances.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parameter("variances must be non-negative and descending".into()));
        }
        if !(noise_sd >= 0.0) {
            return Err(Error::Parameter("noise_sd must be non-negative".into()));
        }
        for a in 0..k {
            for b in a..k {
                let ip = inner_product(basis.row(a), basis.row(b), &grid)?;
                let target = if a == b { 1.0 } else { 0.0 };
                if (ip - target).abs() > 1e-8 {
                    return Err(Error::Parameter(format!("basis curves {a},{b} are not orthonormal (⟨·,·⟩ = {ip})")));
                }
            }
        }
        Ok(Self { grid, basis, variances: Array1::from(variances), mean, noise_sd })
    }

    /// Sine basis `sin(kπ(t−a)/(b−a))`, k = 1..K, orthonormalised under the
    /// grid quadrature, zero mean.
    pub fn sine(grid: Grid<f64>, variances: Vec<f64>, noise_sd: f64) -> Result<Self> {
        let k = variances.len();
        let basis = orthonormal_sines(&grid, k)?;
        let mean = Array1::zeros(grid.len());
        Self::new(grid, basis, variances, mean, noise_sd)
    }

    pub fn k(&self) -> usize {
        self.basis.nrows()
    }

    /// Grid covariance matrix `Φᵀ Λ Φ + σ² I`.
    pub fn covariance(&self) -> Array2<f64> {
        let mut scaled = self.basis.clone();
        for (mut row, &v) in scaled.axis_iter_mut(Axis(0)).zip(self.variances.iter()) {
            row *= v;
        }
        let mut c = self.basis.t().dot(&scaled);
        let s2 = self.noise_sd * self.noise_sd;
        for i in 0..c.nrows() {
            c[[i, i]] += s2;
        }
        c
    }
}

/// Gram–Schmidt (twice) of sine curves in the grid inner product.
pub fn orthonormal_sines(grid: &Grid<f64>, k: usize) -> Result<Array2<f64>> {
    let (a, span) = (grid.start(), grid.span());
    let mut basis = Array2::<f64>::zeros((k, grid.len()));
    for m in 0..k {
        let mut v = grid.points().mapv(|t| ((m + 1) as f64 * std::f64::consts::PI * (t - a) / span).sin());
        for _ in 0..2 {
            for q in 0..m {
                let ip = inner_product(v.view(), basis.row(q), grid)?;
                v.scaled_add(-ip, &basis.row(q));
            }
        }
        let nrm = inner_product(v.view(), v.view(), grid)?.sqrt();
        if !(nrm > 1e-10) {
            return Err(Error::Parameter(format!("grid too coarse for {k} sine curves")));
        }
        basis.row_mut(m).assign(&(v / nrm));
    }
    Ok(basis)
}

/// A simulated sample and the latent KL scores behind it (`n × K`).
#[derive(Debug, Clone)]
pub struct Simulation {
    pub sample: FunctionalSample<f64>,
    pub scores: Array2<f64>,
}

pub fn simulate_with_scores(model: &KlModel, n: usize, seed: u64) -> Result<Simulation> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, len) = (model.k(), model.grid.len());
    let sd: Vec<f64> = model.variances.iter().map(|v| v.sqrt()).collect();
    let mut scores = Array2::<f64>::zeros((n, k));
    let mut curves = Array2::<f64>::zeros((n, len));
    for j in 0..n {
        let mut row = curves.row_mut(j);
        row.assign(&model.mean);
        for m in 0..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            let xi = sd[m] * z;
            scores[[j, m]] = xi;
            row.scaled_add(xi, &model.basis.row(m));
        }
        if model.noise_sd > 0.0 {
            for v in row.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += model.noise_sd * e;
            }
        }
    }
    Ok(Simulation { sample: FunctionalSample::with_default_ids(model.grid.clone(), curves)?, scores })
}

pub fn simulate(model: &KlModel, n: usize, seed: u64) -> Result<FunctionalSample<f64>> {
    Ok(simulate_with_scores(model, n, seed)?.sample)
}

/// Coefficient rows (`|I| × N`) of the linear features in `subset`.
pub fn linear_feature_rows(grid: &Grid<f64>, specs: &[FeatureSpec], subset: &SubsetIndex) -> Result<Array2<f64>> {
    subset.check(specs.len())?;
    let mut rows = Array2::<f64>::zeros((subset.len(), grid.len()));
    for (r, &i) in subset.indices().iter().enumerate() {
        specs[i].validate(grid)?;
        let c = specs[i]
            .linear_weights(grid)
            .ok_or_else(|| Error::Spec(format!("{} is not a linear functional; no closed form", specs[i].label)))?;
        rows.row_mut(r).assign(&c);
    }
    Ok(rows)
}

/// Gaussian conditioning on `F X`: the regression operator `C Fᵀ (F C Fᵀ)⁻¹`
/// (`N × d`) together with the Cholesky factor of `F C Fᵀ`.
struct Conditioning {
    cov: Array2<f64>,
    cft: Array2<f64>,
    chol: Array2<f64>,
}

impl Conditioning {
    fn new(model: &KlModel, f_rows: &Array2<f64>) -> Result<Self> {
        let cov = model.covariance();
        let cft = cov.dot(&f_rows.t());
        let fcf = f_rows.dot(&cft);
        let chol = cholesky(&fcf, 1e-12)?;
        Ok(Self { cov, cft, chol })
    }

    /// `Var(a·X | F X)` for a coefficient vector `a`.
    fn conditional_variance(&self, a: &Array1<f64>) -> f64 {
        let total = a.dot(&self.cov.dot(a));
        let cross = self.cft.t().dot(a);
        let solved = cholesky_solve(&self.chol, &cross);
        (total - cross.dot(&solved)).max(0.0)
    }
}

/// `E(X | f(I))` evaluated at each curve of `sample`, computed from the
/// model's second moments. Rows align with the sample.
pub fn closed_form_blind(
    model: &KlModel,
    sample: &FunctionalSample<f64>,
    specs: &[FeatureSpec],
    subset: &SubsetIndex,
) -> Result<Array2<f64>> {
    if sample.grid() != &model.grid {
        return Err(Error::Dimension("sample and model grids differ".into()));
    }
    let f_rows = linear_feature_rows(&model.grid, specs, subset)?;
    let cond = Conditioning::new(model, &f_rows)?;
    let ef = f_rows.dot(&model.mean);
    let mut z = Array2::<f64>::zeros(sample.curves().raw_dim());
    for (j, x) in sample.curves().rows().into_iter().enumerate() {
        let dev = &f_rows.dot(&x) - &ef;
        let coef = cholesky_solve(&cond.chol, &dev);
        z.row_mut(j).assign(&(&model.mean + &cond.cft.dot(&coef)));
    }
    Ok(z)
}

/// Population eigenpairs of the model's covariance operator, top `l`.
/// Rows of the returned matrix are eigenfunctions, orthonormal in the grid
/// inner product.
pub fn population_fpca(model: &KlModel, l: usize) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = model.grid.len();
    if l == 0 || l > n {
        return Err(Error::Parameter(format!("l={l} must lie in 1..={n}")));
    }
    let sw = model.grid.weights().mapv(f64::sqrt);
    let c = model.covariance();
    let m = Array2::from_shape_fn((n, n), |(i, j)| sw[i] * c[[i, j]] * sw[j]);
    let eig = sym_eigen(&m)?;
    let mut funcs = Array2::<f64>::zeros((l, n));
    for k in 0..l {
        let v = eig.vectors.column(k);
        funcs.row_mut(k).assign(&Array1::from_iter(v.iter().zip(sw.iter()).map(|(a, s)| a / s)));
    }
    Ok((eig.values.slice(ndarray::s![..l]).to_owned(), funcs))
}

/// Procedure whose population objective is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationTask {
    /// First `l` principal components.
    Pca { l: usize },
    /// Scalar response with true coefficient β₀ on the model grid.
    RegScalar { beta: Array1<f64> },
    /// Functional response with true surface β₀(t, s).
    RegFunctional { beta_surface: Array2<f64>, y_grid: Grid<f64> },
}

impl PopulationTask {
    pub fn name(&self) -> &'static str {
        match self {
            PopulationTask::Pca { .. } => "pca",
            PopulationTask::RegScalar { .. } => "reg-scalar",
            PopulationTask::RegFunctional { .. } => "reg-fun",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationObjective {
    pub kind: &'static str,
    pub value: f64,
}

/// `h(I)` through Gaussian conditional variances of the linear outputs.
pub fn population_h(
    model: &KlModel,
    task: &PopulationTask,
    specs: &[FeatureSpec],
    subset: &SubsetIndex,
) -> Result<PopulationObjective> {
    let f_rows = linear_feature_rows(&model.grid, specs, subset)?;
    let cond = Conditioning::new(model, &f_rows)?;
    let w = model.grid.weights().to_owned();
    let value = match task {
        PopulationTask::Pca { l } => {
            let (_, alpha) = population_fpca(model, *l)?;
            alpha.rows().into_iter().map(|a| cond.conditional_variance(&(&a * &w))).sum()
        }
        PopulationTask::RegScalar { beta } => {
            model.grid.check(beta.view())?;
            cond.conditional_variance(&(beta * &w))
        }
        PopulationTask::RegFunctional { beta_surface, y_grid } => {
            if beta_surface.dim() != (model.grid.len(), y_grid.len()) {
                return Err(Error::Dimension("beta surface does not match the grids".into()));
            }
            let wy = y_grid.weights();
            (0..y_grid.len()).map(|s| wy[s] * cond.conditional_variance(&(&beta_surface.column(s) * &w))).sum()
        }
    };
    Ok(PopulationObjective { kind: task.name(), value })
}

/// Disagreement probability of the halfspace rule `⟨d, x − mean⟩ > 0`
/// between `X` and its blinded process: `arccos(ρ)/π` with `ρ` the
/// correlation of the two Gaussian projections.
pub fn halfspace_disagreement(
    model: &KlModel,
    direction: &Array1<f64>,
    specs: &[FeatureSpec],
    subset: &SubsetIndex,
) -> Result<f64> {
    let f_rows = linear_feature_rows(&model.grid, specs, subset)?;
    let cond = Conditioning::new(model, &f_rows)?;
    let a = direction * &model.grid.weights();
    let total = a.dot(&cond.cov.dot(&a));
    if !(total > 0.0) {
        return Err(Error::Degenerate("projection has zero variance".into()));
    }
    let explained = total - cond.conditional_variance(&a);
    let rho = (explained / total).max(0.0).sqrt().min(1.0);
    Ok(rho.acos() / std::f64::consts::PI)
}

/// Every subset of cardinality `<= d`, ranked by rescaled value, then
/// cardinality, then lexicographically. Degenerate subsets are left out.
pub fn enumerate_all<E: SubsetObjective>(eval: &E, p: usize, d: usize) -> Result<Vec<RankedSubset>> {
    let mut count = 0f64;
    let mut binom = 1f64;
    for c in 1..=d.min(p) {
        binom = binom * (p + 1 - c) as f64 / c as f64;
        count += binom;
    }
    if count > 1e6 {
        return Err(Error::Parameter(format!("{count} subsets is too many to enumerate")));
    }
    let mut out = Vec::new();
    for c in 1..=d.min(p) {
        for s in combinations(p, c) {
            match eval.evaluate(&s) {
                Ok(value) => out.push(RankedSubset { subset: s, value }),
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    out.sort_by(|a, b| {
        a.value
            .rescaled
            .total_cmp(&b.value.rescaled)
            .then(a.subset.len().cmp(&b.subset.len()))
            .then_with(|| a.subset.indices().cmp(b.subset.indices()))
    });
    Ok(out)
}

/// Neighbour count as a function of n.
pub type RRule = fn(usize) -> usize;

/// `⌈n^{2/3}⌉`.
pub fn default_r_rule(n: usize) -> usize {
    let r = (n as f64).powf(2.0 / 3.0).ceil() as usize;
    r.clamp(1, n)
}

/// Configuration of one consistency experiment.
#[derive(Debug, Clone)]
pub struct ConsistencySetup {
    pub model: KlModel,
    pub task: PopulationTask,
    pub specs: Vec<FeatureSpec>,
    /// Response noise sd for the regression tasks.
    pub response_noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub task: String,
    pub n: usize,
    pub rep: usize,
    pub h_n: f64,
    pub h: f64,
    pub abs_err: f64,
}

fn rep_seed(seed: u64, n: usize, rep: usize) -> u64 {
    // splitmix64 over the (seed, n, rep) triple
    let mut z =
        seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (rep as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ConsistencySetup {
    /// Draws a sample of size `n` and fits the task's procedure on it.
    pub fn fitted(&self, n: usize, seed: u64) -> Result<(FunctionalSample<f64>, ObjectiveKind<f64>)> {
        let sim = simulate_with_scores(&self.model, n, seed)?;
        let sample = sim.sample;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let kind = match &self.task {
            PopulationTask::Pca { l } => ObjectiveKind::Pca(fit_fpca(&sample, *l)?),
            PopulationTask::RegScalar { beta } => {
                let w = self.model.grid.weights();
                let y: Vec<f64> = sample
                    .curves()
                    .rows()
                    .into_iter()
                    .map(|x| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        (0..x.len()).map(|i| w[i] * beta[i] * x[i]).sum::<f64>() + self.response_noise * e
                    })
                    .collect();
                let k = self.model.k().min(n - 1).max(1);
                ObjectiveKind::RegScalar(fit_scalar_regression(&sample, &y, k)?)
            }
            PopulationTask::RegFunctional { beta_surface, y_grid } => {
                let w = self.model.grid.weights();
                let wx = sample.curves() * &w.view().insert_axis(Axis(0));
                let mut y = wx.dot(beta_surface);
                if self.response_noise > 0.0 {
                    y.mapv_inplace(|v| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        v + self.response_noise * e
                    });
                }
                let ys = FunctionalSample::with_default_ids(y_grid.clone(), y)?;
                let j = self.model.k().min(n - 1).max(1);
                let jp = j.min(y_grid.len());
                ObjectiveKind::RegFunctional(fit_functional_regression(&sample, &ys, j, jp)?)
            }
        };
        Ok((sample, kind))
    }

    /// `|h_n(I) − h(I)|` for every `n` in `n_list` and `reps` replicates.
    pub fn run(
        &self,
        subset: &SubsetIndex,
        n_list: &[usize],
        reps: usize,
        r_rule: RRule,
    ) -> Result<Vec<ConsistencyRow>> {
        let h = population_h(&self.model, &self.task, &self.specs, subset)?.value;
        let jobs: Vec<(usize, usize)> = n_list.iter().flat_map(|&n| (0..reps).map(move |rep| (n, rep))).collect();
        jobs.par_iter()
            .map(|&(n, rep)| {
                let (sample, kind) = self.fitted(n, rep_seed(self.seed, n, rep))?;
                let fm = build_feature_matrix(&sample, &self.specs)?;
                let obj = Objective::new(&kind, &sample, fm, r_rule(n))?;
                let h_n = obj.evaluate(subset)?.raw;
                Ok(ConsistencyRow { task: self.task.name().into(), n, rep, h_n, h, abs_err: (h_n - h).abs() })
            })
            .collect()
    }

    /// Population argmin over subsets of cardinality `<= d`, and the share of
    /// `reps` simulated samples of size `n` whose empirical argmin agrees.
    pub fn argmin_agreement(&self, d: usize, n: usize, reps: usize, r_rule: RRule) -> Result<(SubsetIndex, f64)> {
        let p = self.specs.len();
        let mut best: Option<(f64, SubsetIndex)> = None;
        for c in 1..=d {
            for s in combinations(p, c) {
                let v = population_h(&self.model, &self.task, &self.specs, &s)?.value;
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, s));
                }
            }
        }
        let (_, target) = best.ok_or_else(|| Error::Parameter("no subsets to rank".into()))?;
        let hits: Vec<bool> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let (sample, kind) = self.fitted(n, rep_seed(self.seed ^ 0xA5A5, n, rep))?;
                let fm = build_feature_matrix(&sample, &self.specs)?;
                let obj = Objective::new(&kind, &sample, fm, r_rule(n))?;
                let ranked = enumerate_all(&obj, p, d)?;
                Ok(ranked.first().map(|r| r.subset == target).unwrap_or(false))
            })
            .collect::<Result<_>>()?;
        let share = hits.iter().filter(|&&h| h).count() as f64 / reps.max(1) as f64;
        Ok((target, share))
    }
}

pub const CONSISTENCY_CSV_HEADER: &str = "task,n,rep,h_n,h,abs_err";

pub fn consistency_csv(rows: &[ConsistencyRow]) -> String {
    let mut s = String::from(CONSISTENCY_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:e},{:e},{:e}", r.task, r.n, r.rep, r.h_n, r.h, r.abs_err);
    }
    s
}

/// Median of `abs_err` for rows with sample size `n`.
pub fn median_abs_err(rows: &[ConsistencyRow], n: usize) -> Option<f64> {
    let mut v: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.abs_err).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}
