//! Definite-status triples and path searches shared by d-separation and the
//! adjustment criterion.
//!
//! The boolean searches run over `(previous, current)` walk states expanding
//! only definite-status triples; an open definite-status path is such a walk,
//! so a negative search is conclusive. Positive results are certified by an
//! iterative-deepening search over simple paths, which also produces the
//! shortest witness with ties broken by node order.

use super::{GraphError, NodeId, NodeSet, Pdag};

/// Status of a non-endpoint node on a path, given its two neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TripleRole {
    Collider,
    NonCollider,
    NotDefinite,
}

/// Classifies `mid` on the subpath `(prev, mid, next)`.
pub(crate) fn triple_role(g: &Pdag, prev: NodeId, mid: NodeId, next: NodeId) -> TripleRole {
    if g.has_directed(prev, mid) && g.has_directed(next, mid) {
        TripleRole::Collider
    } else if g.has_directed(mid, prev)
        || g.has_directed(mid, next)
        || (g.has_undirected(prev, mid) && g.has_undirected(mid, next) && !g.adjacent(prev, next))
    {
        TripleRole::NonCollider
    } else {
        TripleRole::NotDefinite
    }
}

/// True iff every non-endpoint of `path` is a definite collider or definite
/// non-collider. Errors if the sequence is not a path of `g`.
pub fn is_definite_status(g: &Pdag, path: &[NodeId]) -> Result<bool, GraphError> {
    g.validate_path(path)?;
    Ok(path
        .windows(3)
        .all(|w| triple_role(g, w[0], w[1], w[2]) != TripleRole::NotDefinite))
}

/// Conditioning context: membership of Z and reflexive ancestors of Z (the
/// collider-activation table `de(v) ∩ Z ≠ ∅ ⟺ v ∈ an(Z)`).
pub(crate) struct Blocking {
    pub in_z: Vec<bool>,
    pub an_z: Vec<bool>,
}

impl Blocking {
    pub fn new(g: &Pdag, z: &NodeSet) -> Self {
        Blocking { in_z: z.mask(g.n()), an_z: super::ancestry::ancestor_mask(g, z) }
    }

    /// Whether a walk may pass `mid` in `role` under this conditioning set.
    pub fn passes(&self, mid: NodeId, role: TripleRole) -> bool {
        match role {
            TripleRole::Collider => self.an_z[mid.idx()],
            TripleRole::NonCollider => !self.in_z[mid.idx()],
            TripleRole::NotDefinite => false,
        }
    }
}

/// Whether some open definite-status walk runs from `x` to `y` given `z`.
///
/// Returns the walk length in edges if one exists. Sound for deciding
/// separation; a `Some` result is certified by [`shortest_open_path`].
pub(crate) fn open_walk_length(g: &Pdag, x: &NodeSet, y: &NodeSet, blocking: &Blocking) -> Option<usize> {
    let n = g.n();
    let y_mask = y.mask(n);
    let mut seen = vec![false; n * n];
    let mut frontier: Vec<(NodeId, NodeId)> = Vec::new();
    for v in x.iter() {
        for w in g.neighbors_of(v) {
            if y_mask[w.idx()] {
                return Some(1);
            }
            if !seen[v.idx() * n + w.idx()] {
                seen[v.idx() * n + w.idx()] = true;
                frontier.push((v, w));
            }
        }
    }
    let mut dist = 1;
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for (prev, cur) in frontier {
            for next in g.neighbors_of(cur) {
                if next == prev {
                    continue;
                }
                let role = triple_role(g, prev, cur, next);
                if !blocking.passes(cur, role) {
                    continue;
                }
                if y_mask[next.idx()] {
                    return Some(dist + 1);
                }
                if !seen[cur.idx() * n + next.idx()] {
                    seen[cur.idx() * n + next.idx()] = true;
                    next_frontier.push((cur, next));
                }
            }
        }
        frontier = next_frontier;
        dist += 1;
    }
    None
}

/// Shortest open definite-status path from `x` to `y` given the conditioning
/// context, searching depths `min_edges..=n-1`. Ties are broken by node
/// order: sources and neighbor expansions are scanned ascending.
pub(crate) fn shortest_open_path(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    blocking: &Blocking,
    min_edges: usize,
) -> Option<Vec<NodeId>> {
    let n = g.n();
    let y_mask = y.mask(n);
    let mut sources: Vec<NodeId> = x.iter().collect();
    sources.sort_unstable();
    for depth in min_edges.max(1)..n {
        for &s in &sources {
            let mut path = vec![s];
            let mut on_path = vec![false; n];
            on_path[s.idx()] = true;
            if dfs_open(g, &y_mask, blocking, depth, &mut path, &mut on_path) {
                return Some(path);
            }
        }
    }
    None
}

fn dfs_open(
    g: &Pdag,
    y_mask: &[bool],
    blocking: &Blocking,
    depth: usize,
    path: &mut Vec<NodeId>,
    on_path: &mut Vec<bool>,
) -> bool {
    let cur = *path.last().unwrap();
    if path.len() - 1 == depth {
        return y_mask[cur.idx()];
    }
    let last_step = path.len() - 1 == depth - 1;
    for next in g.neighbors_of(cur) {
        if on_path[next.idx()] {
            continue;
        }
        // An interior y-node would give a strictly shorter open path, which
        // previous depths exhausted.
        if y_mask[next.idx()] != last_step {
            continue;
        }
        if path.len() >= 2 {
            let prev = path[path.len() - 2];
            if !blocking.passes(cur, triple_role(g, prev, cur, next)) {
                continue;
            }
        }
        path.push(next);
        on_path[next.idx()] = true;
        if dfs_open(g, y_mask, blocking, depth, path, on_path) {
            return true;
        }
        on_path[next.idx()] = false;
        path.pop();
    }
    false
}

/// Raw possibly-directed check: no directed edge from a later path node to
/// an earlier one.
pub(crate) fn path_is_possibly_directed(g: &Pdag, path: &[NodeId]) -> bool {
    for j in 1..path.len() {
        for i in 0..j {
            if g.has_directed(path[j], path[i]) {
                return false;
            }
        }
    }
    true
}
