mod common;

use funsel::oracle::enumerate_all;
use funsel::search::{combinations, exhaustive_step, rank_order, Phase};
use funsel::statproc::fit_fpca;
use funsel::{
    build_feature_matrix, run_search, search, FeatureSpec, FnObjective, Objective, ObjectiveKindF64, ObjectiveValue,
    RankedSubset, SampleF64, SearchConfig, SubsetIndex, SubsetObjective,
};
use proptest::prelude::*;

fn pca_instance(seed: u64, n: usize) -> (SampleF64, Vec<FeatureSpec>, ObjectiveKindF64) {
    let model = common::kl(41, vec![3.0, 1.5, 0.7, 0.3], 0.05);
    let sample = common::draw(&model, n, seed).sample;
    let specs = common::points(&[2, 7, 12, 17, 22, 27, 32, 38]);
    let kind = ObjectiveKindF64::Pca(fit_fpca(&sample, 3).unwrap());
    (sample, specs, kind)
}

/// Forward selection adding the best single feature each step, ties to the
/// lexicographically smallest subset.
fn greedy_path<E: SubsetObjective>(eval: &E, d_max: usize) -> Vec<SubsetIndex> {
    let p = eval.p();
    let score = |s: &SubsetIndex| eval.evaluate(s).unwrap();
    let better =
        |a: &(f64, SubsetIndex), b: &(f64, SubsetIndex)| a.0 < b.0 || (a.0 == b.0 && a.1.indices() < b.1.indices());
    let mut path = Vec::new();
    let mut current: Option<SubsetIndex> = None;
    for _ in 0..d_max {
        let candidates: Vec<SubsetIndex> = match &current {
            None => (0..p).map(SubsetIndex::singleton).collect(),
            Some(c) => c.complement(p).into_iter().map(|i| c.with(i)).collect(),
        };
        let mut best: Option<(f64, SubsetIndex)> = None;
        for c in candidates {
            let v = (score(&c).rescaled, c);
            if best.as_ref().is_none_or(|b| better(&v, b)) {
                best = Some(v);
            }
        }
        let (_, b) = best.unwrap();
        path.push(b.clone());
        current = Some(b);
    }
    path
}

/// Best subset of each expansion round, read from the trace.
fn expansion_path(trace: &[funsel::search::TraceEntry], eval: &impl SubsetObjective) -> Vec<SubsetIndex> {
    let rounds = trace.iter().map(|t| t.round).max().unwrap_or(0);
    (1..=rounds)
        .map(|r| {
            trace
                .iter()
                .filter(|t| t.round == r && t.phase == Phase::Expand)
                .map(|t| RankedSubset { subset: t.subset.clone(), value: eval.evaluate(&t.subset).unwrap() })
                .min_by(rank_order)
                .unwrap()
                .subset
        })
        .collect()
}

#[test]
fn exhaustive_ranking_equals_enumeration() {
    let (sample, specs, kind) = pca_instance(1, 120);
    let fm = build_feature_matrix(&sample, &specs).unwrap();
    let obj = Objective::new(&kind, &sample, fm, 5).unwrap();
    let cfg = SearchConfig { epsilon: f64::INFINITY, ..SearchConfig::exhaustive(3, 5) };
    let (ranked, _) = exhaustive_step(&obj, &cfg).unwrap();
    let oracle = enumerate_all(&obj, 8, 3).unwrap();
    assert_eq!(oracle.len(), 8 + 28 + 56);
    assert_eq!(ranked, oracle);
    let result = search(&obj, &cfg).unwrap();
    assert_eq!(result.ranking, oracle);
    assert!(result.satisfied);
    assert_eq!(result.chosen.unwrap().len(), 1);
}

#[test]
fn full_branching_is_greedy_forward_selection() {
    for seed in 0..5u64 {
        let (sample, specs, kind) = pca_instance(100 + seed, 90);
        let fm = build_feature_matrix(&sample, &specs).unwrap();
        let obj = Objective::new(&kind, &sample, fm, 4).unwrap();
        let greedy = greedy_path(&obj, 5);
        let cfg = SearchConfig {
            epsilon: 0.0,
            d1: 1,
            d_max: 5,
            n0: 1,
            n1: 8,
            r: 4,
            seed,
            revision: false,
            ..SearchConfig::default()
        };
        let result = search(&obj, &cfg).unwrap();
        let exhaustive_best = result
            .trace
            .iter()
            .filter(|t| t.phase == Phase::Exhaustive)
            .map(|t| RankedSubset { subset: t.subset.clone(), value: obj.evaluate(&t.subset).unwrap() })
            .min_by(rank_order)
            .unwrap()
            .subset;
        let mut path = vec![exhaustive_best];
        path.extend(expansion_path(&result.trace, &obj));
        assert_eq!(path, greedy, "instance {seed}");
        assert!(!result.satisfied);
    }
}

#[test]
fn one_round_with_revision_matches_one_greedy_step() {
    let (sample, specs, kind) = pca_instance(7, 100);
    let fm = build_feature_matrix(&sample, &specs).unwrap();
    let obj = Objective::new(&kind, &sample, fm, 4).unwrap();
    let greedy = greedy_path(&obj, 2);
    let cfg = SearchConfig {
        epsilon: 0.0,
        d1: 1,
        d_max: 4,
        n0: 1,
        n1: 8,
        r: 4,
        max_rounds: 1,
        seed: 3,
        ..SearchConfig::default()
    };
    let result = search(&obj, &cfg).unwrap();
    assert_eq!(result.rounds_used, 1);
    assert_eq!(expansion_path(&result.trace, &obj), vec![greedy[1].clone()]);
}

#[test]
fn unique_pair_satisfier_is_found() {
    let (sample, specs, kind) = pca_instance(55, 150);
    let fm = build_feature_matrix(&sample, &specs).unwrap();
    let obj = Objective::new(&kind, &sample, fm, 5).unwrap();
    let ranked = enumerate_all(&obj, 8, 2).unwrap();
    let target = &ranked[0];
    assert_eq!(target.subset.len(), 2, "design must have a pair on top");
    let eps = 0.5 * (ranked[0].value.rescaled + ranked[1].value.rescaled);
    assert_eq!(ranked.iter().filter(|r| r.value.rescaled < eps).count(), 1);

    let cfg = SearchConfig { epsilon: eps, d1: 1, d_max: 2, n0: 3, n1: 8, r: 5, seed: 42, ..SearchConfig::default() };
    let result = search(&obj, &cfg).unwrap();
    assert!(result.satisfied);
    assert_eq!(result.chosen.as_ref(), Some(&target.subset));
    assert!(result.rounds_used <= cfg.max_rounds);
}

#[test]
fn identical_config_gives_identical_result() {
    let (sample, specs, kind) = pca_instance(9, 80);
    let cfg = SearchConfig {
        epsilon: 0.0,
        d1: 1,
        d_max: 4,
        n0: 3,
        n1: 3,
        r: 4,
        max_rounds: 5,
        seed: 1234,
        ..SearchConfig::default()
    };
    let a = run_search(&sample, &specs, &kind, &cfg).unwrap();
    let b = run_search(&sample, &specs, &kind, &cfg).unwrap();
    assert_eq!(a, b);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = serial.install(|| run_search(&sample, &specs, &kind, &cfg).unwrap());
    assert_eq!(a, c);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    let other = run_search(&sample, &specs, &kind, &SearchConfig { seed: 4321, ..cfg }).unwrap();
    assert_ne!(a.trace, other.trace);
}

#[test]
fn search_never_beats_enumeration() {
    let (sample, specs, kind) = pca_instance(21, 100);
    let fm = build_feature_matrix(&sample, &specs).unwrap();
    let obj = Objective::new(&kind, &sample, fm, 4).unwrap();
    let ranked = enumerate_all(&obj, 8, 4).unwrap();
    let cfg = SearchConfig {
        epsilon: 0.0,
        d1: 1,
        d_max: 4,
        n0: 2,
        n1: 3,
        r: 4,
        max_rounds: 6,
        seed: 8,
        ..SearchConfig::default()
    };
    let result = search(&obj, &cfg).unwrap();
    for t in &result.trace {
        let floor = ranked
            .iter()
            .filter(|r| r.subset.len() == t.subset.len())
            .map(|r| r.value.rescaled)
            .fold(f64::INFINITY, f64::min);
        assert!(t.rescaled.unwrap() >= floor);
    }
}

/// Deterministic pseudo-random objective table keyed by the subset.
fn table(seed: u64) -> impl Fn(&SubsetIndex) -> funsel::Result<ObjectiveValue> + Sync {
    move |s: &SubsetIndex| {
        let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
        for &i in s.indices() {
            h = (h ^ (i as u64 + 1)).wrapping_mul(0x1000_0000_01B3);
            h ^= h >> 29;
        }
        let u = (h >> 11) as f64 / (1u64 << 53) as f64;
        let v = u / s.len() as f64;
        Ok(ObjectiveValue { raw: v, rescaled: v, denominator: 1.0 })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exhaustive_equals_enumeration_on_tables(seed in any::<u64>(), p in 1usize..=12, d in 1usize..=3) {
        let d = d.min(p);
        let obj = FnObjective::new(p, table(seed));
        let cfg = SearchConfig::exhaustive(d, 1);
        let result = search(&obj, &cfg).unwrap();
        let oracle = enumerate_all(&obj, p, d).unwrap();
        prop_assert_eq!(result.ranking, oracle);
    }

    #[test]
    fn trace_invariants(seed in any::<u64>(), p in 4usize..=10, n0 in 1usize..4, n1 in 1usize..4, eps in 0.0f64..0.3) {
        let obj = FnObjective::new(p, table(seed));
        let n1 = n1.min(p);
        let cfg = SearchConfig { epsilon: eps, d1: 1, d_max: p.min(5), n0, n1, r: 1, max_rounds: 8, seed, ..SearchConfig::default() };
        let result = search(&obj, &cfg).unwrap();
        let rounds = result.trace.iter().map(|t| t.round).max().unwrap();
        let mut best = f64::INFINITY;
        let mut prev = f64::INFINITY;
        for r in 0..=rounds {
            for t in result.trace.iter().filter(|t| t.round == r) {
                best = best.min(t.rescaled.unwrap());
            }
            prop_assert!(best <= prev);
            prev = best;
        }
        if result.satisfied {
            let chosen = result.chosen.clone().unwrap();
            let v = result.value.unwrap().rescaled;
            prop_assert!(v < eps);
            for t in &result.trace {
                let h = t.rescaled.unwrap();
                if h < eps {
                    prop_assert!(t.subset.len() >= chosen.len());
                    if t.subset.len() == chosen.len() {
                        prop_assert!(h >= v);
                    }
                }
            }
        }
        prop_assert_eq!(search(&obj, &cfg).unwrap(), result);
    }
}

#[test]
fn combinations_cover_enumeration_sizes() {
    let total: usize = (1..=3).map(|k| combinations(8, k).len()).sum();
    assert_eq!(total, 92);
}
