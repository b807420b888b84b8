//! Node-labelled partially directed acyclic graphs.
//!
//! [`Pdag`] is the single graph type for DAGs, CPDAGs and maximal PDAGs: a
//! simple graph with directed and undirected edges and no directed cycle.
//! Values are immutable after construction; every query is read-only.

mod ancestry;
mod dsep;
mod extensions;
mod maximal;
pub(crate) mod parse;
mod paths;

pub use ancestry::{ancestry, Relation};
pub use dsep::{d_separated, PathQueryResult};
pub use extensions::{cpdag_of_dag, list_dag_extensions, DagExtensions, DEFAULT_EXTENSION_LIMIT};
pub use maximal::{is_maximal, orient_closure, MaximalityReport, Pattern, Violation};
pub use parse::parse_graph;
pub use paths::is_definite_status;

pub(crate) use ancestry::{ancestor_mask, collect, descendant_mask, possible_mask, Dir};
pub(crate) use dsep::d_separated_unchecked;
pub(crate) use maximal::quick_is_maximal;
pub(crate) use paths::{path_is_possibly_directed, triple_role, Blocking};

use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Errors from graph construction, parsing and queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid node label {0:?}: labels are non-empty strings over [A-Za-z0-9_.]")]
    BadLabel(String),
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge between {0:?} and {1:?}")]
    DuplicateEdge(String, String),
    #[error("conflicting edge declarations between {0:?} and {1:?}")]
    ConflictingEdge(String, String),
    #[error("directed edges form a cycle")]
    DirectedCycle,
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate node {0:?} in set")]
    DuplicateInSet(String),
    #[error("node sets overlap on {0:?}")]
    OverlappingSets(String),
    #[error("node sequence is not a path: {0}")]
    NotAPath(String),
    #[error("graph is not a maximal PDAG ({violations} forbidden induced subgraph(s); run orient-closure first)")]
    NotMaximal { violations: usize },
    #[error("orienting {tail} -> {head} would create a directed cycle or conflicts with required orientations")]
    OrientationConflict { tail: String, head: String },
    #[error("{undirected} undirected edges exceed the DAG-extension limit of {limit}")]
    ExtensionLimit { undirected: usize, limit: usize },
}

/// Index of a node within one particular [`Pdag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    #[inline]
    pub(crate) fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Kind of edge between an ordered node pair `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMark {
    /// `u -> v`
    To,
    /// `u <- v`
    From,
    /// `u -- v`
    Undirected,
}

/// Ordered, duplicate-free set of nodes of one graph.
///
/// Insertion order is preserved (it determines row/column order of effect
/// matrices and scan order in pruning); equality ignores order.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    ids: Vec<NodeId>,
}

impl NodeSet {
    pub fn new() -> Self {
        Self { ids: Vec::new() }
    }

    /// Builds a set from ids, rejecting duplicates.
    pub fn from_ids<I: IntoIterator<Item = NodeId>>(g: &Pdag, ids: I) -> Result<Self, GraphError> {
        let mut out = Self::new();
        for id in ids {
            if !out.insert(id) {
                return Err(GraphError::DuplicateInSet(g.label(id).to_string()));
            }
        }
        Ok(out)
    }

    /// Looks up labels in `g`, rejecting unknown nodes and duplicates.
    pub fn from_labels<S: AsRef<str>>(g: &Pdag, labels: &[S]) -> Result<Self, GraphError> {
        let mut out = Self::new();
        for l in labels {
            let id = g.node_id(l.as_ref()).ok_or_else(|| GraphError::UnknownNode(l.as_ref().to_string()))?;
            if !out.insert(id) {
                return Err(GraphError::DuplicateInSet(l.as_ref().to_string()));
            }
        }
        Ok(out)
    }

    /// Inserts at the end unless already present; returns whether inserted.
    pub fn insert(&mut self, id: NodeId) -> bool {
        if self.contains(id) {
            false
        } else {
            self.ids.push(id);
            true
        }
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        self.ids.contains(&id)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids.iter().copied()
    }

    #[inline]
    pub fn as_slice(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.ids.iter().all(|id| !other.contains(*id))
    }

    /// Union keeping `self`'s order, then `other`'s new elements.
    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut out = self.clone();
        for id in other.iter() {
            out.insert(id);
        }
        out
    }

    /// Elements of `self` not in `other`, in `self`'s order.
    pub fn minus(&self, other: &NodeSet) -> NodeSet {
        NodeSet { ids: self.ids.iter().copied().filter(|id| !other.contains(*id)).collect() }
    }

    pub fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet { ids: self.ids.iter().copied().filter(|id| other.contains(*id)).collect() }
    }

    pub fn without(&self, id: NodeId) -> NodeSet {
        NodeSet { ids: self.ids.iter().copied().filter(|x| *x != id).collect() }
    }

    pub fn labels<'g>(&self, g: &'g Pdag) -> Vec<&'g str> {
        self.ids.iter().map(|id| g.label(*id)).collect()
    }

    /// Membership mask over all `n` nodes of the graph.
    pub(crate) fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for id in &self.ids {
            m[id.idx()] = true;
        }
        m
    }

    /// Copy with elements sorted by node index (declaration order).
    pub fn sorted(&self) -> NodeSet {
        let mut ids = self.ids.clone();
        ids.sort_unstable();
        NodeSet { ids }
    }
}

impl PartialEq for NodeSet {
    fn eq(&self, other: &Self) -> bool {
        if self.ids.len() != other.ids.len() {
            return false;
        }
        let mut a = self.ids.clone();
        let mut b = other.ids.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl Eq for NodeSet {}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        let mut out = NodeSet::new();
        for id in iter {
            out.insert(id);
        }
        out
    }
}

/// Partially directed acyclic graph.
///
/// Invariants, enforced on construction: simple (at most one edge per node
/// pair, no self-loops) and free of directed cycles. Node order is
/// declaration order. Neighbor lists are sorted by node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    labels: Vec<String>,
    index: HashMap<String, u32>,
    parents: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
    undirected: Vec<Vec<u32>>,
    /// Dense pair marks: 0 none, 1 row->col, -1 col->row, 2 undirected.
    mark: Vec<i8>,
}

pub(crate) fn valid_label(l: &str) -> bool {
    !l.is_empty() && l.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.')
}

impl Pdag {
    /// Builds a graph from labels and edge lists given as label pairs.
    pub fn build<S: AsRef<str>>(
        nodes: &[S],
        directed: &[(S, S)],
        undirected: &[(S, S)],
    ) -> Result<Self, GraphError> {
        let mut g = Self::with_nodes(nodes)?;
        for (t, h) in directed {
            let t = g.require(t.as_ref())?;
            let h = g.require(h.as_ref())?;
            g.add_directed(t, h)?;
        }
        for (a, b) in undirected {
            let a = g.require(a.as_ref())?;
            let b = g.require(b.as_ref())?;
            g.add_undirected(a, b)?;
        }
        g.check_acyclic()?;
        Ok(g)
    }

    pub(crate) fn with_nodes<S: AsRef<str>>(nodes: &[S]) -> Result<Self, GraphError> {
        let mut g = Pdag {
            labels: Vec::new(),
            index: HashMap::new(),
            parents: Vec::new(),
            children: Vec::new(),
            undirected: Vec::new(),
            mark: Vec::new(),
        };
        for n in nodes {
            g.add_node(n.as_ref())?;
        }
        g.mark = vec![0; g.labels.len() * g.labels.len()];
        Ok(g)
    }

    pub(crate) fn add_node(&mut self, label: &str) -> Result<NodeId, GraphError> {
        if !valid_label(label) {
            return Err(GraphError::BadLabel(label.to_string()));
        }
        if let Some(&i) = self.index.get(label) {
            return Ok(NodeId(i));
        }
        let i = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        self.undirected.push(Vec::new());
        Ok(NodeId(i))
    }

    fn require(&self, label: &str) -> Result<NodeId, GraphError> {
        self.node_id(label).ok_or_else(|| GraphError::UnknownNode(label.to_string()))
    }

    #[inline]
    fn mark_at(&self, u: u32, v: u32) -> i8 {
        self.mark[u as usize * self.labels.len() + v as usize]
    }

    fn set_mark(&mut self, u: u32, v: u32, m: i8) {
        let n = self.labels.len();
        self.mark[u as usize * n + v as usize] = m;
        self.mark[v as usize * n + u as usize] = match m {
            0 => 0,
            2 => 2,
            x => -x,
        };
    }

    pub(crate) fn add_directed(&mut self, tail: NodeId, head: NodeId) -> Result<(), GraphError> {
        self.check_new_edge(tail, head)?;
        self.set_mark(tail.0, head.0, 1);
        insert_sorted(&mut self.children[tail.idx()], head.0);
        insert_sorted(&mut self.parents[head.idx()], tail.0);
        Ok(())
    }

    pub(crate) fn add_undirected(&mut self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        self.check_new_edge(a, b)?;
        self.set_mark(a.0, b.0, 2);
        insert_sorted(&mut self.undirected[a.idx()], b.0);
        insert_sorted(&mut self.undirected[b.idx()], a.0);
        Ok(())
    }

    fn check_new_edge(&self, a: NodeId, b: NodeId) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(self.label(a).to_string()));
        }
        match self.mark_at(a.0, b.0) {
            0 => Ok(()),
            _ => Err(GraphError::DuplicateEdge(self.label(a).to_string(), self.label(b).to_string())),
        }
    }

    pub(crate) fn check_acyclic(&self) -> Result<(), GraphError> {
        // Kahn over the directed part.
        let n = self.labels.len();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for &c in &self.children[u] {
                indeg[c as usize] -= 1;
                if indeg[c as usize] == 0 {
                    queue.push(c as usize);
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            Err(GraphError::DirectedCycle)
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).map(|&i| NodeId(i))
    }

    #[inline]
    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.idx()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn node_labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn parents_of(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parents[id.idx()].iter().map(|&i| NodeId(i))
    }

    #[inline]
    pub fn children_of(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children[id.idx()].iter().map(|&i| NodeId(i))
    }

    #[inline]
    pub fn undirected_of(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.undirected[id.idx()].iter().map(|&i| NodeId(i))
    }

    /// All neighbors regardless of edge kind, ascending by node index.
    pub fn neighbors_of(&self, id: NodeId) -> Vec<NodeId> {
        let mut v: Vec<u32> = self.parents[id.idx()]
            .iter()
            .chain(&self.undirected[id.idx()])
            .chain(&self.children[id.idx()])
            .copied()
            .collect();
        v.sort_unstable();
        v.into_iter().map(NodeId).collect()
    }

    #[inline]
    pub fn adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.mark_at(u.0, v.0) != 0
    }

    /// Edge between `u` and `v` from `u`'s perspective, if any.
    pub fn edge_mark(&self, u: NodeId, v: NodeId) -> Option<EdgeMark> {
        match self.mark_at(u.0, v.0) {
            1 => Some(EdgeMark::To),
            -1 => Some(EdgeMark::From),
            2 => Some(EdgeMark::Undirected),
            _ => None,
        }
    }

    #[inline]
    pub fn has_directed(&self, tail: NodeId, head: NodeId) -> bool {
        self.mark_at(tail.0, head.0) == 1
    }

    #[inline]
    pub fn has_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.mark_at(a.0, b.0) == 2
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.labels.len()).flat_map(move |u| {
            self.children[u].iter().map(move |&c| (NodeId(u as u32), NodeId(c)))
        })
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.labels.len()).flat_map(move |u| {
            self.undirected[u]
                .iter()
                .filter(move |&&v| v > u as u32)
                .map(move |&v| (NodeId(u as u32), NodeId(v)))
        })
    }

    pub fn directed_edge_count(&self) -> usize {
        self.children.iter().map(|c| c.len()).sum()
    }

    pub fn undirected_edge_count(&self) -> usize {
        self.undirected.iter().map(|c| c.len()).sum::<usize>() / 2
    }

    /// True iff the graph has no undirected edges.
    pub fn is_dag(&self) -> bool {
        self.undirected_edge_count() == 0
    }

    /// The whole node set, in declaration order.
    pub fn all_nodes(&self) -> NodeSet {
        self.node_ids().collect()
    }

    /// Copy of the graph with one undirected edge oriented `tail -> head`.
    pub(crate) fn with_oriented(&self, tail: NodeId, head: NodeId) -> Result<Pdag, GraphError> {
        debug_assert!(self.has_undirected(tail, head));
        let mut g = self.clone();
        g.undirected[tail.idx()].retain(|&v| v != head.0);
        g.undirected[head.idx()].retain(|&v| v != tail.0);
        g.set_mark(tail.0, head.0, 1);
        insert_sorted(&mut g.children[tail.idx()], head.0);
        insert_sorted(&mut g.parents[head.idx()], tail.0);
        Ok(g)
    }

    /// Checks that consecutive nodes are adjacent and all nodes distinct.
    pub fn validate_path(&self, path: &[NodeId]) -> Result<(), GraphError> {
        if path.is_empty() {
            return Err(GraphError::NotAPath("empty sequence".into()));
        }
        let mut seen = vec![false; self.n()];
        for (i, &v) in path.iter().enumerate() {
            if seen[v.idx()] {
                return Err(GraphError::NotAPath(format!("node {} repeats", self.label(v))));
            }
            seen[v.idx()] = true;
            if i + 1 < path.len() && !self.adjacent(v, path[i + 1]) {
                return Err(GraphError::NotAPath(format!(
                    "{} and {} are not adjacent",
                    self.label(v),
                    self.label(path[i + 1])
                )));
            }
        }
        Ok(())
    }

    /// Requires pairwise disjoint sets, naming the first overlap.
    pub fn require_disjoint(&self, sets: &[&NodeSet]) -> Result<(), GraphError> {
        let mut seen = vec![false; self.n()];
        for s in sets {
            for id in s.iter() {
                if seen[id.idx()] {
                    return Err(GraphError::OverlappingSets(self.label(id).to_string()));
                }
                seen[id.idx()] = true;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Pdag {
    /// Canonical serialization: node lines in declaration order, directed
    /// edges sorted lexicographically, then undirected edges with endpoints
    /// sorted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            writeln!(f, "node {}", l)?;
        }
        let mut dir: Vec<(&str, &str)> =
            self.directed_edges().map(|(t, h)| (self.label(t), self.label(h))).collect();
        dir.sort_unstable();
        for (t, h) in dir {
            writeln!(f, "{} -> {}", t, h)?;
        }
        let mut und: Vec<(&str, &str)> = self
            .undirected_edges()
            .map(|(a, b)| {
                let (a, b) = (self.label(a), self.label(b));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        und.sort_unstable();
        for (a, b) in und {
            writeln!(f, "{} -- {}", a, b)?;
        }
        Ok(())
    }
}

fn insert_sorted(v: &mut Vec<u32>, x: u32) {
    match v.binary_search(&x) {
        Ok(_) => {}
        Err(pos) => v.insert(pos, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Pdag {
        Pdag::build(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &[]).unwrap()
    }

    #[test]
    fn build_and_query() {
        let g = chain();
        let x = g.node_id("X").unwrap();
        let m = g.node_id("M").unwrap();
        let y = g.node_id("Y").unwrap();
        assert_eq!(g.n(), 3);
        assert!(g.has_directed(x, m));
        assert!(!g.has_directed(m, x));
        assert_eq!(g.edge_mark(m, x), Some(EdgeMark::From));
        assert_eq!(g.edge_mark(x, y), None);
        assert!(g.is_dag());
    }

    #[test]
    fn rejects_cycle() {
        let e = Pdag::build(&["A", "B"], &[("A", "B"), ("B", "A")], &[]);
        assert!(matches!(e, Err(GraphError::DuplicateEdge(..))));
        let e = Pdag::build(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")], &[]);
        assert!(matches!(e, Err(GraphError::DirectedCycle)));
    }

    #[test]
    fn rejects_self_loop_and_conflicts() {
        assert!(matches!(
            Pdag::build(&["A"], &[("A", "A")], &[]),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            Pdag::build(&["A", "B"], &[("A", "B")], &[("A", "B")]),
            Err(GraphError::DuplicateEdge(..))
        ));
    }

    #[test]
    fn node_set_order_and_equality() {
        let g = chain();
        let a = NodeSet::from_labels(&g, &["Y", "X"]).unwrap();
        let b = NodeSet::from_labels(&g, &["X", "Y"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels(&g), vec!["Y", "X"]);
        assert!(NodeSet::from_labels(&g, &["X", "X"]).is_err());
        assert!(NodeSet::from_labels(&g, &["Q"]).is_err());
    }

    #[test]
    fn canonical_display_round_trips() {
        let g = Pdag::build(
            &["B", "A", "C", "D"],
            &[("B", "A"), ("A", "C")],
            &[("D", "C")],
        )
        .unwrap();
        let text = g.to_string();
        let re = crate::graph::parse_graph(&text).unwrap();
        assert_eq!(re.to_string(), text);
        assert_eq!(re, g);
    }
}
