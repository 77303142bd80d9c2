//! Seeded generators and brute-force oracles shared by the integration tests.
//! The oracles deliberately use different algorithms from the library
//! (transitive closure, breadth-first path growth, point sampling).
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgforge_core::condition::{eval_condition, parse_condition, Interval, Satisfiability, VariableEnv};
use sgforge_core::decimal::Decimal;
use sgforge_core::model::*;
use sgforge_core::quality::{Edge, EdgeKind, SceneGraph};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures"))
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- graphs

#[derive(Debug, Clone)]
pub struct RandomGraph {
    pub nodes: Vec<SceneNum>,
    pub start: SceneNum,
    /// (from, to, feasible)
    pub edges: Vec<(SceneNum, SceneNum, bool)>,
}

/// Up to 12 scenes with sparse numbering and at most 3 out-edges each; about
/// one edge in eight is marked infeasible.
pub fn random_graph(r: &mut ChaCha8Rng) -> RandomGraph {
    let n = r.random_range(1..=12usize);
    let mut nums: BTreeSet<SceneNum> = BTreeSet::new();
    while nums.len() < n {
        nums.insert(r.random_range(1..=40));
    }
    let nodes: Vec<SceneNum> = nums.into_iter().collect();
    let start = *nodes.choose(r).unwrap();
    let mut edges = Vec::new();
    for &from in &nodes {
        for _ in 0..r.random_range(0..=3) {
            let to = *nodes.choose(r).unwrap();
            edges.push((from, to, r.random_bool(0.875)));
        }
    }
    RandomGraph { nodes, start, edges }
}

impl RandomGraph {
    pub fn to_scene_graph(&self) -> SceneGraph {
        let edges = self
            .edges
            .iter()
            .map(|&(from, to, feasible)| Edge {
                from,
                to,
                guard: None,
                kind: EdgeKind::Fallback,
                feasible,
            })
            .collect();
        SceneGraph::new(self.nodes.iter().copied(), self.start, edges).unwrap()
    }

    fn index(&self, n: SceneNum) -> usize {
        self.nodes.iter().position(|&m| m == n).unwrap()
    }

    pub fn is_terminal(&self, n: SceneNum) -> bool {
        !self.edges.iter().any(|e| e.0 == n)
    }

    /// Reflexive transitive closure over feasible edges (Floyd-Warshall).
    pub fn closure(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b, feasible) in &self.edges {
            if feasible {
                reach[self.index(a)][self.index(b)] = true;
            }
        }
        for k in 0..n {
            let via = reach[k].clone();
            for row in reach.iter_mut().filter(|row| row[k]) {
                for (cell, &r) in row.iter_mut().zip(&via) {
                    *cell |= r;
                }
            }
        }
        reach
    }

    pub fn oracle_unreachable(&self) -> BTreeSet<SceneNum> {
        let reach = self.closure();
        let s = self.index(self.start);
        self.nodes.iter().enumerate().filter(|(j, _)| !reach[s][*j]).map(|(_, &n)| n).collect()
    }

    pub fn oracle_dead_ends(&self) -> BTreeSet<SceneNum> {
        let reach = self.closure();
        let s = self.index(self.start);
        let terminals: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.is_terminal(self.nodes[i])).collect();
        (0..self.nodes.len())
            .filter(|&i| reach[s][i] && !terminals.iter().any(|&t| reach[i][t]))
            .map(|i| self.nodes[i])
            .collect()
    }

    /// Every start-to-terminal path in which no scene occurs more than
    /// `1 + unrolls` times, grown breadth-first.
    pub fn oracle_paths(&self, unrolls: usize) -> Vec<Vec<SceneNum>> {
        let succ: BTreeMap<SceneNum, BTreeSet<SceneNum>> = self.nodes.iter().map(|&n| {
            (n, self.edges.iter().filter(|e| e.0 == n && e.2).map(|e| e.1).collect())
        }).collect();
        oracle_paths(self.start, &succ, |n| self.is_terminal(n), unrolls)
    }
}

pub fn oracle_paths(
    start: SceneNum,
    succ: &BTreeMap<SceneNum, BTreeSet<SceneNum>>,
    is_terminal: impl Fn(SceneNum) -> bool,
    unrolls: usize,
) -> Vec<Vec<SceneNum>> {
    let mut done = Vec::new();
    let mut queue = VecDeque::from([vec![start]]);
    while let Some(p) = queue.pop_front() {
        let last = *p.last().unwrap();
        if is_terminal(last) {
            done.push(p.clone());
        }
        for &t in succ.get(&last).into_iter().flatten() {
            if p.iter().filter(|&&x| x == t).count() <= unrolls {
                let mut q = p.clone();
                q.push(t);
                queue.push_back(q);
            }
        }
    }
    done.sort();
    done
}

// ----------------------------------------------------------- expressions

/// Random guard over the single variable `x` with integer constants near
/// `[lo, hi]`, up to `depth` levels of `&&`, `||`, `!` and parentheses.
pub fn random_expr(r: &mut ChaCha8Rng, lo: i64, hi: i64, depth: u32) -> String {
    if depth == 0 || r.random_bool(0.35) {
        let op = *["<", ">", "<=", ">=", "==", "!="].choose(r).unwrap();
        let c = r.random_range(lo - 5..=hi + 5);
        return format!("&x{op}{c}");
    }
    match r.random_range(0..4) {
        0 => format!("!({})", random_expr(r, lo, hi, depth - 1)),
        1 => format!("({}) && ({})", random_expr(r, lo, hi, depth - 1), random_expr(r, lo, hi, depth - 1)),
        2 => format!("({}) || ({})", random_expr(r, lo, hi, depth - 1), random_expr(r, lo, hi, depth - 1)),
        _ => format!(
            "{} && {} || {}",
            random_expr(r, lo, hi, 0),
            random_expr(r, lo, hi, 0),
            random_expr(r, lo, hi, depth - 1)
        ),
    }
}

/// Evaluates a single-variable guard at every integer and every half-integer
/// of `[lo, hi]`. With integer constants this visits every region where the
/// guard's truth value can change.
pub fn exhaustive_satisfiability(text: &str, lo: i64, hi: i64) -> (Satisfiability, Satisfiability) {
    let e = parse_condition(text).unwrap();
    let verdict = |points: &mut dyn Iterator<Item = Decimal>| {
        let (mut t, mut f) = (false, false);
        for p in points {
            let env: VariableEnv = [("x", p)].into_iter().collect();
            if eval_condition(&e, &env).unwrap() {
                t = true;
            } else {
                f = true;
            }
        }
        match (t, f) {
            (true, false) => Satisfiability::Always,
            (false, true) => Satisfiability::Never,
            _ => Satisfiability::Sometimes,
        }
    };
    let half = Decimal::from_raw(500_000);
    let all = verdict(&mut (lo..=hi).flat_map(|i| {
        let p = Decimal::from_int(i);
        if i < hi { vec![p, p + half] } else { vec![p] }
    }));
    let ints = verdict(&mut (lo..=hi).map(Decimal::from_int));
    (all, ints)
}

// -------------------------------------------------------------- coverage

/// A scenario of at most 8 scenes whose fallbacks always move forward, so no
/// scene is a dead end; guarded edges (`&v > c`, always satisfiable) may go
/// anywhere, including backwards.
pub fn random_coverage_scenario(r: &mut ChaCha8Rng) -> Scenario {
    let n = r.random_range(2..=8u32);
    let n_obj = r.random_range(1..=2);
    let objectives: Vec<PedagogicalObjective> = (1..=n_obj)
        .map(|i| PedagogicalObjective {
            id: format!("o{i}"),
            name: String::new(),
            threshold: Decimal::from_int(r.random_range(0..=40)),
        })
        .collect();
    let mut activities = BTreeMap::new();
    for i in 1..=r.random_range(1..=3) {
        let mut effects = BTreeMap::new();
        for o in &objectives {
            if r.random_bool(0.7) {
                let lo = r.random_range(0..=10);
                let hi = lo + r.random_range(0..=15);
                effects.insert(o.id.clone(), Interval::ints(lo, hi));
            }
        }
        let id = format!("act{i}");
        activities.insert(
            id.clone(),
            ActivitySpec {
                id,
                grain: Grain::Activity,
                expected_duration_s: Decimal::from_int(10),
                objective_effects: effects,
                variable_effects: BTreeMap::new(),
                extensions: Extensions::default(),
            },
        );
    }
    let activity_ids: Vec<String> = activities.keys().cloned().collect();
    let mut scenes: Vec<Scene> = (1..=n).map(|num| Scene::new(num, 0)).collect();
    for i in 1..=n {
        let scene = &mut scenes[i as usize - 1];
        if r.random_bool(0.6) {
            scene.activity_id = Some(activity_ids.choose(r).unwrap().clone());
        }
        if i == n || r.random_bool(0.1) {
            continue;
        }
        for _ in 0..r.random_range(0..=2) {
            let guard = parse_condition(&format!("&v>{}", r.random_range(10..=90))).unwrap();
            scene.transitions.push(Transition::guarded(guard, r.random_range(1..=n)));
        }
        scene.transitions.push(Transition::fallback(r.random_range(i + 1..=n)));
    }
    // prec: the smallest predecessor, 0 for the start.
    for j in 2..=n {
        let pred = (1..=n)
            .find(|&p| scenes[p as usize - 1].transitions.iter().any(|t| t.target == j))
            .unwrap_or(1);
        scenes[j as usize - 1].prec = i64::from(pred);
    }
    let mut s = Scenario {
        id: "cov".into(),
        principal_objectives: objectives.iter().map(|o| o.id.clone()).collect(),
        objectives,
        variables: vec![VariableDecl {
            name: "v".into(),
            initial: Decimal::ZERO,
            range: Interval::ints(0, 100),
            tracks: None,
        }],
        activities,
        acts: vec![Act {
            id: "a".into(),
            objective_id: "o1".into(),
            scenes,
            extensions: Extensions::default(),
        }],
        ..Default::default()
    };
    s.learner_profile.objectives = s.principal_objectives.clone();
    for o in &s.principal_objectives {
        s.learner_profile.score_mechanism.insert(o.clone(), ScoreMechanism::Sum);
    }
    s
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct CoverageOracle {
    /// objective -> paths whose summed maximum stays below the threshold
    pub impossible: BTreeMap<String, BTreeSet<Vec<SceneNum>>>,
    /// objective -> paths whose summed minimum is below the threshold but
    /// summed maximum reaches it
    pub unguaranteed: BTreeMap<String, BTreeSet<Vec<SceneNum>>>,
}

/// Interval summation over every path of the scenario (one cycle unroll).
pub fn coverage_oracle(s: &Scenario) -> CoverageOracle {
    let scenes: BTreeMap<SceneNum, &Scene> = s.acts.iter().flat_map(|a| &a.scenes).map(|sc| (sc.num, sc)).collect();
    let succ: BTreeMap<SceneNum, BTreeSet<SceneNum>> = scenes
        .iter()
        .map(|(&n, sc)| (n, sc.transitions.iter().chain(&sc.choice_group).map(|t| t.target).collect()))
        .collect();
    let start = scenes.values().find(|sc| sc.prec == 0).unwrap().num;
    let paths = oracle_paths(start, &succ, |n| succ[&n].is_empty(), 1);
    let mut out = CoverageOracle::default();
    for o in &s.principal_objectives {
        let threshold = s.objectives.iter().find(|x| &x.id == o).unwrap().threshold;
        let (imp, ung) = (out.impossible.entry(o.clone()).or_default(), out.unguaranteed.entry(o.clone()).or_default());
        for p in &paths {
            let (mut lo, mut hi) = (Decimal::ZERO, Decimal::ZERO);
            for n in p {
                let effect = scenes[n]
                    .activity_id
                    .as_ref()
                    .and_then(|a| s.activities.get(a))
                    .and_then(|a| a.objective_effects.get(o));
                if let Some(e) = effect {
                    lo = lo + e.lo;
                    hi = hi + e.hi;
                }
            }
            if hi < threshold {
                imp.insert(p.clone());
            } else if lo < threshold {
                ung.insert(p.clone());
            }
        }
    }
    out
}

// ------------------------------------------------------------ round trips

const TEXT_CHARS: &[char] = &['a', 'Z', ' ', '&', '<', '>', '"', '\'', 'é', '\n', '\t', '9', '-', '/', '_'];

fn random_text(r: &mut ChaCha8Rng, max: usize) -> String {
    (0..r.random_range(0..=max)).map(|_| *TEXT_CHARS.choose(r).unwrap()).collect()
}

fn random_decimal(r: &mut ChaCha8Rng, lo: i64, hi: i64) -> Decimal {
    let quarters = r.random_range(lo * 4..=hi * 4);
    Decimal::from_raw(quarters * 250_000)
}

fn random_guard(r: &mut ChaCha8Rng, vars: &[String], depth: u32) -> String {
    if depth == 0 || r.random_bool(0.5) {
        let op = *["<", ">", "<=", ">=", "==", "!="].choose(r).unwrap();
        let var = vars.choose(r).unwrap();
        return format!("&{var} {op} {}", random_decimal(r, -10, 50));
    }
    match r.random_range(0..3) {
        0 => format!("!({})", random_guard(r, vars, depth - 1)),
        1 => format!("{} && {}", random_guard(r, vars, depth - 1), random_guard(r, vars, depth - 1)),
        _ => format!("({}) || {}", random_guard(r, vars, depth - 1), random_guard(r, vars, depth - 1)),
    }
}

/// A random scenario using every canonical construct. Values are drawn so
/// that each one has exactly one canonical spelling.
pub fn random_scenario(r: &mut ChaCha8Rng) -> Scenario {
    let objectives: Vec<PedagogicalObjective> = (1..=r.random_range(1..=3))
        .map(|i| PedagogicalObjective {
            id: format!("obj-{i}"),
            name: random_text(r, 10),
            threshold: random_decimal(r, 0, 60),
        })
        .collect();
    let obj_ids: Vec<String> = objectives.iter().map(|o| o.id.clone()).collect();
    let mut variables = Vec::new();
    for i in 1..=r.random_range(1..=3) {
        let lo = random_decimal(r, -20, 20);
        let hi = lo + random_decimal(r, 0, 80);
        variables.push(VariableDecl {
            name: format!("v{i}"),
            initial: lo,
            range: Interval::new(lo, hi),
            tracks: r.random_bool(0.3).then(|| obj_ids.choose(r).unwrap().clone()),
        });
    }
    let var_names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
    let mut profile = LearnerProfileSpec::default();
    for o in &obj_ids {
        if r.random_bool(0.6) {
            profile.objectives.push(o.clone());
            profile.score_mechanism.insert(o.clone(), *ScoreMechanism::ALL.choose(r).unwrap());
        }
    }
    for ind in Indicator::ALL {
        if r.random_bool(0.5) {
            profile.indicators.insert(*ind);
        }
    }
    let mut activities = BTreeMap::new();
    for i in 1..=r.random_range(0..=3) {
        let id = format!("activity-{i}");
        let mut a = ActivitySpec {
            id: id.clone(),
            grain: *Grain::ALL.choose(r).unwrap(),
            expected_duration_s: random_decimal(r, 0, 600),
            objective_effects: BTreeMap::new(),
            variable_effects: BTreeMap::new(),
            extensions: Extensions::default(),
        };
        for o in &obj_ids {
            if r.random_bool(0.5) {
                let lo = random_decimal(r, 0, 10);
                a.objective_effects.insert(o.clone(), Interval::new(lo, lo + random_decimal(r, 0, 10)));
            }
        }
        for v in &var_names {
            if r.random_bool(0.3) {
                let lo = random_decimal(r, -5, 5);
                a.variable_effects.insert(v.clone(), Interval::new(lo, lo + random_decimal(r, 0, 5)));
            }
        }
        if r.random_bool(0.3) {
            a.extensions.attrs.push(("x-vendor".into(), random_text(r, 6)));
        }
        activities.insert(id, a);
    }
    let activity_ids: Vec<String> = activities.keys().cloned().collect();

    let n_scenes = r.random_range(1..=10u32);
    let mut nums: BTreeSet<SceneNum> = BTreeSet::new();
    while nums.len() < n_scenes as usize {
        nums.insert(r.random_range(1..=99));
    }
    let nums: Vec<SceneNum> = nums.into_iter().collect();
    let mut scenes = Vec::new();
    for (i, &num) in nums.iter().enumerate() {
        let mut sc = Scene::new(num, if i == 0 { 0 } else { i64::from(nums[i - 1]) });
        sc.asset_path = format!("scenes/{}.swf", random_text(r, 6));
        sc.description = random_text(r, 20);
        if !activity_ids.is_empty() && r.random_bool(0.5) {
            sc.activity_id = Some(activity_ids.choose(r).unwrap().clone());
        }
        sc.moment_tags = match r.random_range(0..3) {
            0 => BTreeSet::from([Moment::Learning]),
            1 => BTreeSet::from([Moment::Entertaining]),
            _ => BTreeSet::from([Moment::Learning, Moment::Entertaining]),
        };
        match r.random_range(0..4) {
            0 => {}
            1 => {
                for _ in 0..r.random_range(1..=3) {
                    sc.choice_group.push(Transition::fallback(*nums.choose(r).unwrap()));
                }
            }
            _ => {
                for _ in 0..r.random_range(0..=3) {
                    let guard = parse_condition(&random_guard(r, &var_names, 3)).unwrap();
                    sc.transitions.push(Transition::guarded(guard, *nums.choose(r).unwrap()));
                }
                sc.transitions.push(Transition::fallback(*nums.choose(r).unwrap()));
            }
        }
        if r.random_bool(0.2) {
            sc.extensions.attrs.push(("data-layout".into(), random_text(r, 5)));
        }
        scenes.push(sc);
    }
    let mut acts = Vec::new();
    let mut rest = scenes.as_slice();
    let mut k = 1;
    while !rest.is_empty() {
        let take = r.random_range(1..=rest.len());
        acts.push(Act {
            id: format!("act-{k}"),
            objective_id: obj_ids.choose(r).unwrap().clone(),
            scenes: rest[..take].to_vec(),
            extensions: Extensions::default(),
        });
        rest = &rest[take..];
        k += 1;
    }
    let toolbar = (0..r.random_range(0..=2)).map(|i| format!("tool-{i}")).collect();
    Scenario {
        id: format!("scn-{}", r.random_range(0..1000)),
        title: random_text(r, 15),
        principal_objectives: obj_ids.iter().filter(|_| r.random_bool(0.7)).cloned().collect(),
        objectives,
        variables,
        learner_profile: profile,
        activities,
        toolbar,
        acts,
        extensions: Extensions::default(),
    }
}

/// A single-act, choice-free scenario: the shape the legacy dialect holds.
pub fn random_legacy_shaped(r: &mut ChaCha8Rng) -> Scenario {
    let mut s = random_scenario(r);
    let scenes: Vec<Scene> = s
        .acts
        .drain(..)
        .flat_map(|a| a.scenes)
        .map(|mut sc| {
            if !sc.choice_group.is_empty() {
                sc.choice_group.clear();
                sc.transitions.push(Transition::fallback(sc.num));
            }
            sc.extensions = Extensions::default();
            sc
        })
        .collect();
    s.acts = vec![Act {
        id: "act-1".into(),
        objective_id: s.objectives[0].id.clone(),
        scenes,
        extensions: Extensions::default(),
    }];
    s
}
