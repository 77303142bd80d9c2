use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::condition::{satisfiable, ConditionExpr, Satisfiability};
use crate::model::{Scenario, SceneNum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Guarded,
    Fallback,
    Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: SceneNum,
    pub to: SceneNum,
    #[serde(serialize_with = "guard_text")]
    pub guard: Option<ConditionExpr>,
    pub kind: EdgeKind,
    /// False when interval analysis proves the guard can never hold.
    pub feasible: bool,
}

fn guard_text<S: serde::Serializer>(g: &Option<ConditionExpr>, s: S) -> Result<S::Ok, S::Error> {
    match g {
        Some(g) => s.collect_str(g),
        None => s.serialize_none(),
    }
}

impl Edge {
    pub fn plain(from: SceneNum, to: SceneNum) -> Self {
        Edge {
            from,
            to,
            guard: None,
            kind: EdgeKind::Fallback,
            feasible: true,
        }
    }
}

/// Scene graph of a scenario: one edge per transition or choice, in scene order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneGraph {
    pub nodes: Vec<SceneNum>,
    pub start: SceneNum,
    pub edges: Vec<Edge>,
    pub terminals: BTreeSet<SceneNum>,
    #[serde(skip)]
    adjacency: BTreeMap<SceneNum, Vec<SceneNum>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("scenario has no unique start scene")]
    NoUniqueStart,
    #[error("start scene {0} is not a node")]
    StartNotANode(SceneNum),
    #[error("edge {from}->{to} leaves the node set")]
    DanglingEdge { from: SceneNum, to: SceneNum },
}

impl SceneGraph {
    /// Builds a graph from parts; terminals are the nodes without outgoing edges.
    pub fn new(nodes: impl IntoIterator<Item = SceneNum>, start: SceneNum, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let nodes: BTreeSet<SceneNum> = nodes.into_iter().collect();
        if !nodes.contains(&start) {
            return Err(GraphError::StartNotANode(start));
        }
        if let Some(e) = edges.iter().find(|e| !nodes.contains(&e.from) || !nodes.contains(&e.to)) {
            return Err(GraphError::DanglingEdge { from: e.from, to: e.to });
        }
        let with_out: BTreeSet<SceneNum> = edges.iter().map(|e| e.from).collect();
        let terminals = nodes.difference(&with_out).copied().collect();
        let mut adjacency: BTreeMap<SceneNum, Vec<SceneNum>> = BTreeMap::new();
        for e in edges.iter().filter(|e| e.feasible) {
            let succ = adjacency.entry(e.from).or_default();
            if !succ.contains(&e.to) {
                succ.push(e.to);
            }
        }
        Ok(SceneGraph {
            nodes: nodes.into_iter().collect(),
            start,
            edges,
            terminals,
            adjacency,
        })
    }

    /// Distinct targets of feasible edges, in edge order.
    pub fn successors(&self, n: SceneNum) -> &[SceneNum] {
        self.adjacency.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_terminal(&self, n: SceneNum) -> bool {
        self.terminals.contains(&n)
    }
}

pub fn build_graph(s: &Scenario) -> Result<SceneGraph, GraphError> {
    let start = s.start_scene().ok_or(GraphError::NoUniqueStart)?.num;
    let ranges = s.variable_ranges();
    let nodes: BTreeSet<SceneNum> = s.scenes().map(|sc| sc.num).collect();
    let mut edges = Vec::new();
    for scene in s.scenes() {
        for t in &scene.transitions {
            let feasible = match &t.guard {
                None => true,
                // Guards over undeclared variables stay in play; E008 reports them.
                Some(g) => !matches!(satisfiable(g, &ranges), Ok(Satisfiability::Never)),
            };
            edges.push(Edge {
                from: scene.num,
                to: t.target,
                guard: t.guard.clone(),
                kind: if t.guard.is_some() { EdgeKind::Guarded } else { EdgeKind::Fallback },
                feasible,
            });
        }
        for c in &scene.choice_group {
            edges.push(Edge {
                from: scene.num,
                to: c.target,
                guard: None,
                kind: EdgeKind::Choice,
                feasible: true,
            });
        }
    }
    edges.retain(|e| nodes.contains(&e.to));
    SceneGraph::new(nodes, start, edges)
}

fn reachable_from(g: &SceneGraph, start: SceneNum) -> BTreeSet<SceneNum> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &m in g.successors(n) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Scenes no feasible path from the start reaches.
pub fn find_unreachable(g: &SceneGraph) -> BTreeSet<SceneNum> {
    let reached = reachable_from(g, g.start);
    g.nodes.iter().copied().filter(|n| !reached.contains(n)).collect()
}

/// Reachable scenes from which no terminal scene can be reached.
pub fn find_dead_ends(g: &SceneGraph) -> BTreeSet<SceneNum> {
    let mut reverse: BTreeMap<SceneNum, Vec<SceneNum>> = BTreeMap::new();
    for &n in &g.nodes {
        for &m in g.successors(n) {
            reverse.entry(m).or_default().push(n);
        }
    }
    let mut can_finish: BTreeSet<SceneNum> = g.terminals.clone();
    let mut queue: VecDeque<SceneNum> = g.terminals.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &p in reverse.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            if can_finish.insert(p) {
                queue.push_back(p);
            }
        }
    }
    reachable_from(g, g.start)
        .into_iter()
        .filter(|n| !can_finish.contains(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[SceneNum], edges: &[(SceneNum, SceneNum)]) -> SceneGraph {
        let edges = edges.iter().map(|&(a, b)| Edge::plain(a, b)).collect();
        SceneGraph::new(nodes.iter().copied(), nodes[0], edges).unwrap()
    }

    #[test]
    fn chain_is_clean() {
        let g = graph(&[1, 2, 3], &[(1, 2), (2, 3)]);
        assert!(find_unreachable(&g).is_empty());
        assert!(find_dead_ends(&g).is_empty());
        assert_eq!(g.terminals, BTreeSet::from([3]));
    }

    #[test]
    fn orphan_node_is_unreachable() {
        let g = graph(&[1, 2, 3, 4], &[(1, 2), (2, 3)]);
        assert_eq!(find_unreachable(&g), BTreeSet::from([4]));
        // Dead ends are only reported among reachable scenes.
        assert!(find_dead_ends(&g).is_empty());
    }

    #[test]
    fn self_loop_without_exit_is_dead() {
        let g = graph(&[1, 2], &[(1, 2), (2, 2)]);
        assert_eq!(find_dead_ends(&g), BTreeSet::from([1, 2]));
    }

    #[test]
    fn infeasible_edges_are_pruned() {
        let mut edges = vec![Edge::plain(1, 2), Edge::plain(1, 3)];
        edges[1].feasible = false;
        let g = SceneGraph::new([1, 2, 3], 1, edges).unwrap();
        assert_eq!(find_unreachable(&g), BTreeSet::from([3]));
        assert_eq!(g.successors(1), &[2]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            SceneGraph::new([1], 2, vec![]).unwrap_err(),
            GraphError::StartNotANode(2)
        );
        assert!(matches!(
            SceneGraph::new([1], 1, vec![Edge::plain(1, 5)]),
            Err(GraphError::DanglingEdge { .. })
        ));
    }
}
