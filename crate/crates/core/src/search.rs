//! Subset search: exhaustive enumeration of small subsets, then randomised
//! forward expansion with a swap-based revision pass.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blinding::SubsetIndex;
use crate::error::{Error, Result};
use crate::fdata::FunctionalSample;
use crate::features::{build_feature_matrix, FeatureSpec};
use crate::objectives::{Objective, ObjectiveKind, ObjectiveValue, SubsetObjective};
use crate::scalar::Real;

/// Name of the generator behind every random draw, echoed in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), one stream per (round, retained rank, phase)";

/// Missing JSON fields take their values from [`SearchConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Threshold on the rescaled objective; `None` (JSON `null`) means +∞.
    #[serde(with = "epsilon_serde")]
    pub epsilon: f64,
    pub d1: usize,
    pub n0: usize,
    pub n1: usize,
    pub r: usize,
    pub d_max: usize,
    pub max_rounds: usize,
    pub seed: u64,
    pub standardize_features: bool,
    /// Run the swap pass after each unsatisfied expansion round.
    pub revision: bool,
}

mod epsilon_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            epsilon: f64::INFINITY,
            d1: 1,
            n0: 3,
            n1: 5,
            r: 3,
            d_max: 1,
            max_rounds: 50,
            seed: 0,
            standardize_features: false,
            revision: true,
        }
    }
}

impl SearchConfig {
    /// Pure exhaustive ranking over cardinalities `1..=d`.
    pub fn exhaustive(d: usize, r: usize) -> Self {
        Self { d1: d, d_max: d, n0: usize::MAX, n1: 0, r, ..Self::default() }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if p == 0 {
            return bad("no candidate features".into());
        }
        if self.d1 == 0 || self.d1 > self.d_max || self.d_max > p {
            return bad(format!("need 1 <= d1 <= d_max <= p, got d1={} d_max={} p={p}", self.d1, self.d_max));
        }
        if self.n0 == 0 {
            return bad("n0 must be at least 1".into());
        }
        if !self.is_exhaustive_only() && (self.n1 == 0 || self.n1 > p) {
            return bad(format!("n1={} must lie in 1..={p} when stochastic expansion is enabled", self.n1));
        }
        if self.r == 0 {
            return bad("r must be at least 1".into());
        }
        Ok(())
    }

    pub fn is_exhaustive_only(&self) -> bool {
        self.d_max == self.d1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exhaustive,
    Expand,
    Revise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: usize,
    pub phase: Phase,
    pub subset: SubsetIndex,
    /// `None` when the objective was degenerate for this subset.
    pub rescaled: Option<f64>,
    pub raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSubset {
    pub subset: SubsetIndex,
    pub value: ObjectiveValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub chosen: Option<SubsetIndex>,
    pub value: Option<ObjectiveValue>,
    pub satisfied: bool,
    pub rounds_used: usize,
    /// Subsets retained when the search stopped, best first.
    pub ranking: Vec<RankedSubset>,
    pub trace: Vec<TraceEntry>,
}

/// Candidate order: rescaled value, then cardinality, then lexicographic.
pub fn rank_order(a: &RankedSubset, b: &RankedSubset) -> Ordering {
    a.value
        .rescaled
        .total_cmp(&b.value.rescaled)
        .then(a.subset.len().cmp(&b.subset.len()))
        .then(a.subset.cmp(&b.subset))
}

/// Order used to pick among satisfying subsets: cardinality first.
fn satisfy_order(a: &RankedSubset, b: &RankedSubset) -> Ordering {
    a.subset
        .len()
        .cmp(&b.subset.len())
        .then(a.value.rescaled.total_cmp(&b.value.rescaled))
        .then(a.subset.cmp(&b.subset))
}

/// All subsets of `0..p` with cardinality `k`, lexicographic.
pub fn combinations(p: usize, k: usize) -> Vec<SubsetIndex> {
    let mut out = Vec::new();
    if k == 0 || k > p {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(SubsetIndex::new(idx.clone()).expect("strictly increasing"));
        let mut i = k;
        while i > 0 && idx[i - 1] == p - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn stream_rng(seed: u64, round: usize, rank: usize, phase: Phase) -> ChaCha8Rng {
    let tag = match phase {
        Phase::Exhaustive => 0u64,
        Phase::Expand => 1,
        Phase::Revise => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 34) | ((rank as u64) << 2) | tag);
    rng
}

/// Search state shared by the three phases: cache, trace and configuration.
pub struct Searcher<'a, E: SubsetObjective> {
    eval: &'a E,
    config: SearchConfig,
    cache: HashMap<SubsetIndex, Option<ObjectiveValue>>,
    trace: Vec<TraceEntry>,
}

impl<'a, E: SubsetObjective> Searcher<'a, E> {
    pub fn new(eval: &'a E, config: SearchConfig) -> Result<Self> {
        config.validate(eval.p())?;
        Ok(Self { eval, config, cache: HashMap::new(), trace: Vec::new() })
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    /// Evaluates a batch (duplicates removed, first occurrence kept) and logs
    /// it. Returns the usable results in batch order.
    fn batch(&mut self, candidates: Vec<SubsetIndex>, round: usize, phase: Phase) -> Result<Vec<RankedSubset>> {
        let mut seen = std::collections::HashSet::new();
        let unique: Vec<SubsetIndex> = candidates.into_iter().filter(|s| seen.insert(s.clone())).collect();
        let fresh: Vec<&SubsetIndex> = unique.iter().filter(|s| !self.cache.contains_key(*s)).collect();
        let computed: Vec<Result<Option<ObjectiveValue>>> = fresh
            .par_iter()
            .map(|s| match self.eval.evaluate(s) {
                Ok(v) => Ok(Some(v)),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect();
        let fresh: Vec<SubsetIndex> = fresh.into_iter().cloned().collect();
        for (s, v) in fresh.into_iter().zip(computed) {
            self.cache.insert(s, v?);
        }
        let mut out = Vec::with_capacity(unique.len());
        for s in unique {
            let v = self.cache[&s];
            self.trace.push(TraceEntry {
                round,
                phase,
                subset: s.clone(),
                rescaled: v.map(|v| v.rescaled),
                raw: v.map(|v| v.raw),
            });
            if let Some(value) = v {
                out.push(RankedSubset { subset: s, value });
            }
        }
        Ok(out)
    }

    fn satisfied_among(&self, evaluated: &[RankedSubset]) -> Option<RankedSubset> {
        evaluated.iter().filter(|c| c.value.rescaled < self.config.epsilon).min_by(|a, b| satisfy_order(a, b)).cloned()
    }

    fn finish(
        &self,
        chosen: Option<RankedSubset>,
        satisfied: bool,
        rounds_used: usize,
        ranking: Vec<RankedSubset>,
    ) -> SearchResult {
        SearchResult {
            chosen: chosen.as_ref().map(|c| c.subset.clone()),
            value: chosen.map(|c| c.value),
            satisfied,
            rounds_used,
            ranking,
            trace: self.trace.clone(),
        }
    }

    fn best_seen(&self) -> Option<RankedSubset> {
        self.trace
            .iter()
            .filter_map(|t| {
                let value = self.cache.get(&t.subset).copied().flatten()?;
                Some(RankedSubset { subset: t.subset.clone(), value })
            })
            .min_by(rank_order)
    }

    /// Evaluates every subset of cardinality `<= d1` and keeps the best `n0`.
    pub fn exhaustive_step(&mut self) -> Result<(Vec<RankedSubset>, Option<SearchResult>)> {
        let p = self.eval.p();
        let candidates: Vec<SubsetIndex> = (1..=self.config.d1).flat_map(|k| combinations(p, k)).collect();
        let mut evaluated = self.batch(candidates, 0, Phase::Exhaustive)?;
        if evaluated.is_empty() {
            return Err(Error::Search("every subset gave a degenerate objective".into()));
        }
        let hit = self.satisfied_among(&evaluated);
        evaluated.sort_by(rank_order);
        evaluated.truncate(self.config.n0);
        let result = hit.map(|h| self.finish(Some(h), true, 0, evaluated.clone()));
        Ok((evaluated, result))
    }

    /// Tries one random replacement per element; keeps strict improvements.
    pub fn revision_step(
        &mut self,
        start: RankedSubset,
        round: usize,
        rank: usize,
    ) -> Result<(RankedSubset, Vec<RankedSubset>)> {
        let p = self.eval.p();
        let mut rng = stream_rng(self.config.seed, round, rank, Phase::Revise);
        let mut current = start;
        let mut evaluated = Vec::new();
        let originals: Vec<usize> = current.subset.indices().to_vec();
        for old in originals {
            let comp = current.subset.complement(p);
            if comp.is_empty() {
                break;
            }
            let new = comp[rng.random_range(0..comp.len())];
            let cand = current.subset.replacing(old, new);
            let got = self.batch(vec![cand], round, Phase::Revise)?;
            if let Some(c) = got.into_iter().next() {
                evaluated.push(c.clone());
                if c.value.rescaled < current.value.rescaled {
                    current = c;
                }
            }
        }
        Ok((current, evaluated))
    }

    /// Forward expansion rounds starting from `seeds`.
    pub fn stochastic_step(&mut self, seeds: Vec<RankedSubset>) -> Result<SearchResult> {
        let p = self.eval.p();
        let cfg = self.config.clone();
        let mut retained = seeds;
        let mut round = 0;
        while round < cfg.max_rounds {
            let mut candidates = Vec::new();
            for (rank, seed) in retained.iter().enumerate() {
                if seed.subset.len() >= cfg.d_max {
                    continue;
                }
                let comp = seed.subset.complement(p);
                if comp.is_empty() {
                    continue;
                }
                let take = cfg.n1.min(comp.len());
                let mut rng = stream_rng(cfg.seed, round + 1, rank, Phase::Expand);
                for i in index::sample(&mut rng, comp.len(), take).iter() {
                    candidates.push(seed.subset.with(comp[i]));
                }
            }
            if candidates.is_empty() {
                break;
            }
            round += 1;
            let mut evaluated = self.batch(candidates, round, Phase::Expand)?;
            if evaluated.is_empty() {
                break;
            }
            let hit = self.satisfied_among(&evaluated);
            evaluated.sort_by(rank_order);
            evaluated.truncate(cfg.n0);
            retained = evaluated;
            if let Some(h) = hit {
                return Ok(self.finish(Some(h), true, round, retained));
            }
            if cfg.revision {
                let mut revised = Vec::with_capacity(retained.len());
                let mut revision_evals = Vec::new();
                for (rank, r) in retained.clone().into_iter().enumerate() {
                    let (best, evals) = self.revision_step(r, round, rank)?;
                    revised.push(best);
                    revision_evals.extend(evals);
                }
                revised.sort_by(rank_order);
                revised.dedup_by(|a, b| a.subset == b.subset);
                retained = revised;
                if let Some(h) = self.satisfied_among(&revision_evals) {
                    return Ok(self.finish(Some(h), true, round, retained));
                }
            }
        }
        let best = self.best_seen();
        Ok(self.finish(best, false, round, retained))
    }

    /// Exhaustive step, then stochastic rounds if nothing satisfied.
    pub fn run(&mut self) -> Result<SearchResult> {
        let (seeds, done) = self.exhaustive_step()?;
        if let Some(result) = done {
            return Ok(result);
        }
        if self.config.is_exhaustive_only() {
            let best = self.best_seen();
            return Ok(self.finish(best, false, 0, seeds));
        }
        self.stochastic_step(seeds)
    }
}

pub fn exhaustive_step<E: SubsetObjective>(
    eval: &E,
    config: &SearchConfig,
) -> Result<(Vec<RankedSubset>, Option<SearchResult>)> {
    Searcher::new(eval, config.clone())?.exhaustive_step()
}

pub fn stochastic_step<E: SubsetObjective>(
    seeds: Vec<RankedSubset>,
    eval: &E,
    config: &SearchConfig,
) -> Result<SearchResult> {
    if seeds.is_empty() {
        return Err(Error::Parameter("stochastic step needs at least one seed subset".into()));
    }
    Searcher::new(eval, config.clone())?.stochastic_step(seeds)
}

/// A single revision pass on `subset`, drawing from the stream of
/// (`round`, `rank`).
pub fn revision_step<E: SubsetObjective>(
    subset: RankedSubset,
    eval: &E,
    config: &SearchConfig,
    round: usize,
    rank: usize,
) -> Result<RankedSubset> {
    Ok(Searcher::new(eval, config.clone())?.revision_step(subset, round, rank)?.0)
}

pub fn search<E: SubsetObjective>(eval: &E, config: &SearchConfig) -> Result<SearchResult> {
    Searcher::new(eval, config.clone())?.run()
}

/// Builds the feature matrix once and searches with blind-then-score
/// evaluation against the frozen procedure in `kind`.
pub fn run_search<T: Real>(
    sample: &FunctionalSample<T>,
    specs: &[FeatureSpec],
    kind: &ObjectiveKind<T>,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let fm = build_feature_matrix(sample, specs)?;
    config.validate(fm.p())?;
    let fm = if config.standardize_features { fm.standardized() } else { fm };
    let objective = Objective::new(kind, sample, fm, config.r)?;
    search(&objective, config)
}
