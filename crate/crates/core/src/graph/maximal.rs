//! Maximality of PDAGs via forbidden induced subgraphs, and the orientation
//! closure that removes them.
//!
//! A PDAG is maximally oriented iff none of four patterns occurs as an
//! induced subgraph. Each occurrence forces the orientation of one
//! undirected edge; applying forced orientations to a fixpoint yields a
//! maximal PDAG with the same skeleton.

use super::{GraphError, NodeId, Pdag};

/// The four forbidden induced subgraphs of a maximal PDAG.
///
/// Letters follow the usual presentation of the orientation rules:
/// - `A`: `a -> b -- c` with `a, c` non-adjacent (forces `b -> c`),
/// - `B`: `a -> k -> j` with `a -- j` (forces `a -> j`),
/// - `C`: `i -- j`, `i -- k`, `i -- l`, `k -> j`, `l -> j`, `k, l`
///   non-adjacent (forces `i -> j`),
/// - `D`: `i -- j`, `i -- k`, `i -- l`, `j -> l`, `l -> k`, `j, k`
///   non-adjacent (forces `i -> k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    A,
    B,
    C,
    D,
}

impl Pattern {
    pub fn id(self) -> char {
        match self {
            Pattern::A => 'a',
            Pattern::B => 'b',
            Pattern::C => 'c',
            Pattern::D => 'd',
        }
    }
}

/// One forbidden-pattern occurrence; `nodes` lists the instantiation in the
/// role order of [`Pattern`]'s documentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pattern: Pattern,
    pub nodes: Vec<NodeId>,
}

impl Violation {
    /// Undirected edge whose orientation removes this occurrence, as
    /// `(tail, head)`.
    fn forced_orientation(&self) -> (NodeId, NodeId) {
        match self.pattern {
            Pattern::A => (self.nodes[1], self.nodes[2]),
            Pattern::B => (self.nodes[0], self.nodes[2]),
            Pattern::C => (self.nodes[0], self.nodes[1]),
            Pattern::D => (self.nodes[0], self.nodes[2]),
        }
    }
}

/// Result of a maximality scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalityReport {
    pub violations: Vec<Violation>,
}

impl MaximalityReport {
    pub fn is_maximal(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans all 3- and 4-node induced subgraphs for the forbidden patterns.
pub fn is_maximal(g: &Pdag) -> MaximalityReport {
    let mut violations = Vec::new();
    if g.undirected_edge_count() == 0 {
        // Every pattern contains an undirected edge.
        return MaximalityReport { violations };
    }

    // Pattern A: a -> b -- c, a and c non-adjacent.
    for (a, b) in g.directed_edges() {
        for c in g.undirected_of(b) {
            if c != a && !g.adjacent(a, c) {
                violations.push(Violation { pattern: Pattern::A, nodes: vec![a, b, c] });
            }
        }
    }

    // Pattern B: a -> k -> j with a -- j.
    for (a, k) in g.directed_edges() {
        for j in g.children_of(k) {
            if g.has_undirected(a, j) {
                violations.push(Violation { pattern: Pattern::B, nodes: vec![a, k, j] });
            }
        }
    }

    for i in g.node_ids() {
        let und: Vec<NodeId> = g.undirected_of(i).collect();
        // Pattern C: i -- j, and non-adjacent k, l in pa(j) with i -- k, i -- l.
        for &j in &und {
            let cands: Vec<NodeId> =
                g.parents_of(j).filter(|&p| g.has_undirected(i, p)).collect();
            for (ai, &k) in cands.iter().enumerate() {
                for &l in &cands[ai + 1..] {
                    if !g.adjacent(k, l) {
                        violations.push(Violation { pattern: Pattern::C, nodes: vec![i, j, k, l] });
                    }
                }
            }
        }
        // Pattern D: i -- j, i -- k, i -- l with j -> l -> k and j, k non-adjacent.
        for &k in &und {
            for l in g.parents_of(k) {
                if !g.has_undirected(i, l) {
                    continue;
                }
                for j in g.parents_of(l) {
                    if j != k && g.has_undirected(i, j) && !g.adjacent(j, k) {
                        violations.push(Violation { pattern: Pattern::D, nodes: vec![i, j, k, l] });
                    }
                }
            }
        }
    }

    MaximalityReport { violations }
}

/// True iff `g` contains no forbidden induced pattern.
pub fn quick_is_maximal(g: &Pdag) -> bool {
    is_maximal(g).is_maximal()
}

/// Orients undirected edges until no forbidden pattern remains.
///
/// Returns a maximal PDAG with the same skeleton whose directed edges are a
/// superset of `g`'s. Fails if a forced orientation would close a directed
/// cycle.
pub fn orient_closure(g: &Pdag) -> Result<Pdag, GraphError> {
    let mut cur = g.clone();
    loop {
        let report = is_maximal(&cur);
        if report.is_maximal() {
            return Ok(cur);
        }
        let mut progressed = false;
        for v in &report.violations {
            let (tail, head) = v.forced_orientation();
            if !cur.has_undirected(tail, head) {
                // An earlier orientation in this pass already resolved it.
                continue;
            }
            if directed_path_exists(&cur, head, tail) {
                return Err(GraphError::OrientationConflict {
                    tail: cur.label(tail).to_string(),
                    head: cur.label(head).to_string(),
                });
            }
            cur = cur.with_oriented(tail, head)?;
            progressed = true;
        }
        debug_assert!(progressed, "violations reported but none applicable");
        if !progressed {
            return Ok(cur);
        }
    }
}

fn directed_path_exists(g: &Pdag, from: NodeId, to: NodeId) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![from];
    seen[from.idx()] = true;
    while let Some(u) = stack.pop() {
        for c in g.children_of(u) {
            if c == to {
                return true;
            }
            if !seen[c.idx()] {
                seen[c.idx()] = true;
                stack.push(c);
            }
        }
    }
    false
}
