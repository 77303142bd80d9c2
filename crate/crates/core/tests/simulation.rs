use std::path::PathBuf;

use proptest::prelude::*;
use sgforge_core::decimal::Decimal;
use sgforge_core::model::Scenario;
use sgforge_core::sim::*;
use sgforge_core::storyboard::{load, ScenarioDefaults};

fn fixture(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let bytes = std::fs::read(&path).unwrap();
    load(&bytes, &ScenarioDefaults::default()).unwrap().scenario.unwrap()
}

fn validated(name: &str) -> ValidatedScenario {
    ValidatedScenario::new(fixture(name)).unwrap()
}

fn k(level: f64) -> KnowledgeState {
    KnowledgeState::uniform(["dashboard"], level)
}

/// Noise-free, help-free evaluation of the gate: score = round(20 k), pass
/// when score > 15, k moves toward 1 by alpha after every attempt.
fn gate_oracle(k0: f64, alpha: f64, max_steps: usize) -> (Vec<u32>, Vec<i64>, bool) {
    let mut k = k0;
    let (mut trace, mut scores) = (Vec::new(), Vec::new());
    loop {
        trace.push(1);
        let score = (20.0 * k).round() as i64;
        scores.push(score);
        k += alpha * (1.0 - k);
        if score > 15 {
            trace.push(2);
            return (trace, scores, false);
        }
        if trace.len() >= max_steps {
            return (trace, scores, true);
        }
    }
}

fn scores_of(t: &PlayTrace) -> Vec<i64> {
    t.steps
        .iter()
        .filter_map(|s| s.scores.get("dashboard"))
        .map(|d| d.to_string().parse().unwrap())
        .collect()
}

#[test]
fn gate_passes_on_first_visit_with_high_knowledge() {
    let v = validated("gate.xml");
    let t = simulate_player(&v, &BehaviorProfile::steady("t"), &k(0.9), &SimParams::default(), 1).unwrap();
    assert_eq!(t.scenes_visited, vec![1, 2]);
    assert_eq!(scores_of(&t), vec![18]);
    assert!(!t.truncated);
}

#[test]
fn gate_without_learning_loops_until_the_step_cap() {
    let v = validated("gate.xml");
    let params = SimParams { alpha: 0.0, ..Default::default() };
    let t = simulate_player(&v, &BehaviorProfile::steady("t"), &k(0.5), &params, 1).unwrap();
    let (trace, scores, truncated) = gate_oracle(0.5, 0.0, params.max_steps);
    assert!(truncated);
    assert!(t.truncated);
    assert_eq!(t.scenes_visited, trace);
    assert_eq!(scores_of(&t), scores);
    assert!(scores_of(&t).iter().all(|&s| s == 10));
    assert_eq!(t.scenes_visited.len(), 1000);
}

#[test]
fn gate_with_default_learning_rate_matches_oracle() {
    let v = validated("gate.xml");
    let t = simulate_player(&v, &BehaviorProfile::steady("t"), &k(0.5), &SimParams::default(), 1).unwrap();
    let (trace, scores, truncated) = gate_oracle(0.5, 0.3, 1000);
    assert_eq!(t.scenes_visited, trace);
    assert_eq!(scores_of(&t), scores);
    assert_eq!(t.truncated, truncated);
    assert_eq!(scores, vec![10, 13, 15, 17]);
}

#[test]
fn saturated_knowledge_scores_the_maximum_everywhere() {
    let v = validated("investigation.xml");
    let t = simulate_player(&v, &BehaviorProfile::steady("t"), &KnowledgeState::uniform(["diagnose", "report"], 1.0), &SimParams::default(), 9).unwrap();
    assert_eq!(t.scenes_visited, vec![1, 2, 4]);
    assert_eq!(t.steps[1].scores["diagnose"], Decimal::from_int(20));
    assert_eq!(t.steps[2].scores["report"], Decimal::from_int(10));
    assert_eq!(t.gain(v.scenario()), 0.0);
}

#[test]
fn unvalidated_scenario_is_rejected() {
    let err = ValidatedScenario::new(fixture("legacy-dashboard.xml")).unwrap_err();
    assert!(matches!(err, SimError::Invalid(_)));
}

fn cohort(seed: u64, groups: Vec<CohortGroup>) -> Cohort {
    Cohort {
        seed,
        params: SimParams::default(),
        groups,
    }
}

fn mixed_groups() -> Vec<CohortGroup> {
    PRESETS
        .iter()
        .enumerate()
        .map(|(i, name)| CohortGroup {
            profile: BehaviorProfile::preset(name).unwrap(),
            k0: KnowledgeDist::Uniform(vec![0.1, 0.4, 0.8]),
            count: 50 + i * 10,
        })
        .collect()
}

#[test]
fn report_is_identical_across_thread_counts() {
    let v = validated("investigation.xml");
    let c = cohort(2024, mixed_groups());
    let one = gain_summary_json_lines(&simulate_cohort_with_threads(&v, &c, 1).unwrap());
    for threads in [2, 4, 8] {
        let many = gain_summary_json_lines(&simulate_cohort_with_threads(&v, &c, threads).unwrap());
        assert_eq!(one, many, "{threads} threads");
    }
    let again = gain_summary_json_lines(&simulate_cohort(&v, &c).unwrap());
    assert_eq!(one, again);
}

#[test]
fn report_conserves_players() {
    let v = validated("investigation.xml");
    let c = cohort(5, mixed_groups());
    let r = simulate_cohort(&v, &c).unwrap();
    assert_eq!(r.n_players, c.n_players());
    assert_eq!(r.path_frequency.values().sum::<usize>(), r.n_players);
    assert!(r.truncation_count <= r.n_players);
    for a in r.attainment.values() {
        assert!(a.rate >= Decimal::ZERO && a.rate <= Decimal::ONE);
    }
}

#[test]
fn empty_cohort_reports_no_gain() {
    let v = validated("gate.xml");
    let r = simulate_cohort(&v, &cohort(1, vec![])).unwrap();
    assert_eq!(r.n_players, 0);
    assert!(r.pedagogical_gain.is_none());
    assert_eq!(gain_summary_text(&r), "no players simulated\n");
    assert!(gain_summary_json_lines(&r).contains(r#""pedagogical_gain":null"#));
}

#[test]
fn homogeneous_noise_free_cohort_has_zero_spread() {
    let v = validated("gate.xml");
    let c = cohort(3, vec![CohortGroup {
        profile: BehaviorProfile::steady("t"),
        k0: KnowledgeDist::Point(0.5),
        count: 40,
    }]);
    let r = simulate_cohort(&v, &c).unwrap();
    assert_eq!(r.pedagogical_gain.unwrap().stddev, Decimal::ZERO);
    assert_eq!(r.path_frequency.len(), 1);
}

#[test]
fn saturated_cohort_attains_everything_without_gain() {
    let v = validated("investigation.xml");
    let c = cohort(11, vec![CohortGroup {
        profile: BehaviorProfile::steady("t"),
        k0: KnowledgeDist::Point(1.0),
        count: 25,
    }]);
    let r = simulate_cohort(&v, &c).unwrap();
    let g = r.pedagogical_gain.clone().unwrap();
    assert_eq!((g.mean, g.stddev), (Decimal::ZERO, Decimal::ZERO));
    assert!(r.attainment.values().all(|a| a.attained == 25));
    let text = gain_summary_text(&r);
    assert!(text.contains("pedagogical gain: mean 0 stddev 0"), "{text}");
}

#[test]
fn binomial_branch_frequency_is_within_three_sigma() {
    let v = validated("binomial.xml");
    let n = 10_000;
    let c = cohort(20_240_601, vec![CohortGroup {
        profile: BehaviorProfile::steady("t"),
        k0: KnowledgeDist::Uniform(vec![0.5, 0.9]),
        count: n,
    }]);
    let r = simulate_cohort(&v, &c).unwrap();
    let pass = r.path_frequency.get("1>2").copied().unwrap_or(0) as f64;
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((pass - n as f64 * 0.5).abs() <= 3.0 * sigma, "pass = {pass}");
    assert_eq!(r.path_frequency.values().sum::<usize>(), n);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knowledge_never_decreases_and_scores_stay_in_bounds(
        seed in any::<u64>(),
        preset in 0usize..4,
        level in 0.0f64..=1.0,
        alpha in 0.0f64..=1.0,
    ) {
        let v = validated("investigation.xml");
        let s = v.scenario();
        let profile = BehaviorProfile::preset(PRESETS[preset]).unwrap();
        let params = SimParams { alpha, max_steps: 50, ..Default::default() };
        let k0 = KnowledgeState::uniform(["diagnose", "report"], level);
        let t = simulate_player(&v, &profile, &k0, &params, seed).unwrap();
        prop_assert_eq!(t.scenes_visited[0], 1);
        for w in t.knowledge_history.windows(2) {
            for (o, before) in w[0].iter() {
                prop_assert!(w[1].get(o) >= before);
            }
        }
        for step in &t.steps {
            prop_assert!(step.duration_s >= 0.0);
            let activity = s.scene_activity(s.scene(step.scene).unwrap());
            for (o, score) in &step.scores {
                let effect = activity.unwrap().objective_effects[o];
                prop_assert!(effect.contains(*score));
            }
        }
    }

    #[test]
    fn simulate_player_is_deterministic(seed in any::<u64>(), preset in 0usize..4) {
        let v = validated("investigation.xml");
        let profile = BehaviorProfile::preset(PRESETS[preset]).unwrap();
        let k0 = KnowledgeState::uniform(["diagnose", "report"], 0.3);
        let a = simulate_player(&v, &profile, &k0, &SimParams::default(), seed).unwrap();
        let b = simulate_player(&v, &profile, &k0, &SimParams::default(), seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
