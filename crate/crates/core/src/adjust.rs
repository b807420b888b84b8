//! Adjustment-set combinatorics on maximal PDAGs: causal and forbidden
//! nodes, amenability, the generalized adjustment criterion, the `Adjust`
//! set, the asymptotically optimal set `O`, variance-reducing pruning, and
//! the qualitative comparison criterion.
//!
//! Boolean path queries follow the two-stage scheme of [`crate::graph`]:
//! a walk search over definite-status states decides the easy direction,
//! and positives are certified by an iterative-deepening search over simple
//! paths checked against the raw definitions.

use crate::graph::{
    collect, d_separated_unchecked, path_is_possibly_directed,
    possible_mask, quick_is_maximal, triple_role, Blocking, Dir, GraphError, NodeId, NodeSet,
    Pdag,
};
use thiserror::Error;

/// Errors from adjustment-set operations.
#[derive(Debug, Error)]
pub enum AdjustError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph is not amenable relative to (x, y): proper possibly causal path {} starts with an undirected edge", witness.join(" -- "))]
    NotAmenable { witness: Vec<String> },
    #[error("y-node {node:?} is not a possible descendant of x")]
    YNotPossibleDescendant { node: String },
    #[error("{which} is not a valid adjustment set relative to (x, y): {reason}")]
    NotValidAdjustmentSet { which: String, reason: String },
}

/// Which notion of causal path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalMode {
    /// Directed paths only.
    Definite,
    /// Possibly directed paths.
    Possible,
}

/// Why a candidate set fails the generalized adjustment criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailedCondition {
    /// Condition 1: a proper possibly causal path from x to y starts with
    /// an undirected edge.
    Amenability { witness: Vec<NodeId> },
    /// Condition 2: the set contains a forbidden node.
    ForbiddenOverlap { node: NodeId },
    /// Condition 3: a proper non-causal definite-status path is open.
    OpenPath { witness: Vec<NodeId> },
}

/// Outcome of the generalized adjustment criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustmentDecision {
    pub failed_condition: Option<FailedCondition>,
}

impl AdjustmentDecision {
    pub fn valid(&self) -> bool {
        self.failed_condition.is_none()
    }

    pub fn describe(&self, g: &Pdag) -> String {
        match &self.failed_condition {
            None => "valid".into(),
            Some(FailedCondition::Amenability { witness }) => format!(
                "not amenable: proper possibly causal path {} starts with an undirected edge",
                labels(g, witness).join(" ")
            ),
            Some(FailedCondition::ForbiddenOverlap { node }) => {
                format!("forbidden node {} in set", g.label(*node))
            }
            Some(FailedCondition::OpenPath { witness }) => format!(
                "open proper non-causal definite-status path {}",
                labels(g, witness).join(" ")
            ),
        }
    }
}

fn labels(g: &Pdag, ids: &[NodeId]) -> Vec<String> {
    ids.iter().map(|id| g.label(*id).to_string()).collect()
}

fn require_maximal(g: &Pdag) -> Result<(), AdjustError> {
    if quick_is_maximal(g) {
        Ok(())
    } else {
        Err(GraphError::NotMaximal {
            violations: crate::graph::is_maximal(g).violations.len(),
        }
        .into())
    }
}

/// Nodes on proper causal (`Definite`) or proper possibly causal
/// (`Possible`) paths from `x` to `y`, excluding `x`.
pub fn causal_nodes(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    mode: CausalMode,
) -> Result<NodeSet, AdjustError> {
    g.require_disjoint(&[x, y])?;
    let mask = match mode {
        CausalMode::Definite => cn_mask(g, x, y),
        CausalMode::Possible => {
            require_maximal(g)?;
            posscn_mask(g, x, y)
        }
    };
    Ok(collect(g, &mask))
}

/// Mask of cn(x, y): forward directed reach from `x` with no interior
/// x-node, intersected with backward directed reach from `y` avoiding `x`.
///
/// Both legs are directed, so a node in the intersection lies on one simple
/// proper causal path (the concatenation cannot revisit: a revisit would
/// close a directed cycle).
pub(crate) fn cn_mask(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Vec<bool> {
    let n = g.n();
    let xm = x.mask(n);
    let mut fwd = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    for xi in x.iter() {
        for c in g.children_of(xi) {
            if !xm[c.idx()] && !fwd[c.idx()] {
                fwd[c.idx()] = true;
                stack.push(c);
            }
        }
    }
    while let Some(v) = stack.pop() {
        for c in g.children_of(v) {
            if !xm[c.idx()] && !fwd[c.idx()] {
                fwd[c.idx()] = true;
                stack.push(c);
            }
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    for yj in y.iter() {
        bwd[yj.idx()] = true;
        stack.push(yj);
    }
    while let Some(v) = stack.pop() {
        for p in g.parents_of(v) {
            if !xm[p.idx()] && !bwd[p.idx()] {
                bwd[p.idx()] = true;
                stack.push(p);
            }
        }
    }
    (0..n).map(|i| fwd[i] && bwd[i]).collect()
}

/// Mask of posscn(x, y): nodes on proper possibly causal paths from `x` to
/// `y`, excluding `x`.
///
/// On a DAG this is exactly `cn(x, y)`. Otherwise a product of forward walk
/// states from `x` and backward walk states from `y` yields a complete
/// candidate set (a shortest witness through a node has chordless halves
/// and only forward cross-chords, so its states pass the rules), and each
/// candidate is then certified by an exact search over strictly possibly
/// causal paths — the walk product alone can miss a backward chord between
/// the two halves.
pub(crate) fn posscn_mask(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Vec<bool> {
    if g.is_dag() {
        return cn_mask(g, x, y);
    }
    let n = g.n();
    let xm = x.mask(n);
    let ym = y.mask(n);

    let step_fwd = |a: NodeId, b: NodeId| g.has_undirected(a, b) || g.has_directed(a, b);

    // Forward states (prev, cur): proper possibly causal walk from x.
    let mut fwd = vec![false; n * n];
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
    for xi in x.iter() {
        for w in g.neighbors_of(xi) {
            if !xm[w.idx()] && step_fwd(xi, w) && !fwd[xi.idx() * n + w.idx()] {
                fwd[xi.idx() * n + w.idx()] = true;
                stack.push((xi, w));
            }
        }
    }
    while let Some((u, v)) = stack.pop() {
        for t in g.neighbors_of(v) {
            if xm[t.idx()] || t == u || g.adjacent(u, t) || !step_fwd(v, t) {
                continue;
            }
            if !fwd[v.idx() * n + t.idx()] {
                fwd[v.idx() * n + t.idx()] = true;
                stack.push((v, t));
            }
        }
    }

    // Backward states (cur, next): forward walk continuing to y, x avoided.
    let mut bwd = vec![false; n * n];
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
    for yj in y.iter() {
        for c in g.neighbors_of(yj) {
            if !xm[c.idx()] && step_fwd(c, yj) && !bwd[c.idx() * n + yj.idx()] {
                bwd[c.idx() * n + yj.idx()] = true;
                stack.push((c, yj));
            }
        }
    }
    while let Some((v, t)) = stack.pop() {
        for u in g.neighbors_of(v) {
            if xm[u.idx()] || u == t || g.adjacent(u, t) || !step_fwd(u, v) {
                continue;
            }
            if !bwd[u.idx() * n + v.idx()] {
                bwd[u.idx() * n + v.idx()] = true;
                stack.push((u, v));
            }
        }
    }

    let mut candidates = vec![false; n];
    let mut n_candidates = 0usize;
    for v in g.node_ids() {
        if xm[v.idx()] {
            continue;
        }
        let preds: Vec<NodeId> =
            g.neighbors_of(v).into_iter().filter(|p| fwd[p.idx() * n + v.idx()]).collect();
        if preds.is_empty() {
            continue;
        }
        if ym[v.idx()] {
            candidates[v.idx()] = true;
            n_candidates += 1;
            continue;
        }
        // Join triple (p, v, t): a chord between p and t only invalidates
        // the path when it points backward (t -> p); forward or undirected
        // chords are consistent with a possibly directed path.
        'outer: for &p in &preds {
            for t in g.neighbors_of(v) {
                if bwd[v.idx() * n + t.idx()] && t != p && !g.has_directed(t, p) {
                    candidates[v.idx()] = true;
                    n_candidates += 1;
                    break 'outer;
                }
            }
        }
    }
    if n_candidates == 0 {
        return candidates;
    }

    // Certification: enumerate strictly possibly causal proper paths from x
    // (pruned to nodes that still have a suffix state), marking the nodes
    // of every path that reaches y. Stops once all candidates are seen.
    let has_suffix: Vec<bool> = (0..n)
        .map(|v| ym[v] || (0..n).any(|t| bwd[v * n + t]))
        .collect();
    let mut certified = vec![false; n];
    let mut n_certified = 0usize;
    let mut path: Vec<NodeId> = Vec::new();
    let mut on_path = vec![false; n];
    for xi in x.iter() {
        path.push(xi);
        on_path[xi.idx()] = true;
        certify_posscn(
            g,
            &xm,
            &ym,
            &has_suffix,
            &candidates,
            &mut path,
            &mut on_path,
            &mut certified,
            &mut n_certified,
            n_candidates,
        );
        on_path[xi.idx()] = false;
        path.pop();
        if n_certified == n_candidates {
            break;
        }
    }
    certified
}

#[allow(clippy::too_many_arguments)]
fn certify_posscn(
    g: &Pdag,
    xm: &[bool],
    ym: &[bool],
    has_suffix: &[bool],
    candidates: &[bool],
    path: &mut Vec<NodeId>,
    on_path: &mut [bool],
    certified: &mut [bool],
    n_certified: &mut usize,
    n_candidates: usize,
) {
    if *n_certified == n_candidates {
        return;
    }
    let cur = *path.last().unwrap();
    if path.len() >= 2 && ym[cur.idx()] {
        for &v in &path[1..] {
            if !certified[v.idx()] {
                debug_assert!(candidates[v.idx()], "certified node outside the candidate set");
                certified[v.idx()] = true;
                *n_certified += 1;
            }
        }
    }
    for t in g.neighbors_of(cur) {
        if xm[t.idx()] || on_path[t.idx()] || !has_suffix[t.idx()] {
            continue;
        }
        if !(g.has_undirected(cur, t) || g.has_directed(cur, t)) {
            continue;
        }
        // Strictness: no directed edge from t back to an earlier node.
        if path.iter().any(|&p| g.has_directed(t, p)) {
            continue;
        }
        path.push(t);
        on_path[t.idx()] = true;
        certify_posscn(
            g,
            xm,
            ym,
            has_suffix,
            candidates,
            path,
            on_path,
            certified,
            n_certified,
            n_candidates,
        );
        on_path[t.idx()] = false;
        path.pop();
        if *n_certified == n_candidates {
            return;
        }
    }
}

/// Forbidden nodes: possible descendants of the possible causal nodes,
/// plus `x`. On a DAG this is `de(cn(x, y)) ∪ x`.
pub fn forbidden(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Result<NodeSet, AdjustError> {
    g.require_disjoint(&[x, y])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    Ok(collect(g, &forbidden_mask(g, x, y)))
}

pub(crate) fn forbidden_mask(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Vec<bool> {
    let posscn = collect(g, &posscn_mask(g, x, y));
    let mut mask = possible_mask(g, &posscn, Dir::Forward);
    for xi in x.iter() {
        mask[xi.idx()] = true;
    }
    mask
}

/// Amenability: every proper possibly causal path from `x` to `y` starts
/// with a directed edge out of `x`. DAGs are always amenable.
pub fn amenable(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Result<bool, AdjustError> {
    g.require_disjoint(&[x, y])?;
    if g.is_dag() {
        return Ok(true);
    }
    require_maximal(g)?;
    Ok(nonamenable_witness(g, x, y).is_none())
}

/// A shortest proper possibly causal path from `x` to `y` starting with an
/// undirected edge, if any. Walk prefilter plus raw-definition certification.
pub(crate) fn nonamenable_witness(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Option<Vec<NodeId>> {
    if !nonamenable_walk_exists(g, x, y) {
        return None;
    }
    let n = g.n();
    let xm = x.mask(n);
    let ym = y.mask(n);
    let mut sources: Vec<NodeId> = x.iter().collect();
    sources.sort_unstable();
    for depth in 1..n {
        for &xi in &sources {
            let mut und: Vec<NodeId> = g.undirected_of(xi).collect();
            und.sort_unstable();
            for w in und {
                if xm[w.idx()] {
                    continue;
                }
                let mut path = vec![xi, w];
                if g.has_directed(w, xi) {
                    unreachable!("edge is undirected");
                }
                if path.len() - 1 == depth {
                    if ym[w.idx()] {
                        return Some(path);
                    }
                    continue;
                }
                if ym[w.idx()] {
                    continue;
                }
                if dfs_possibly_causal(g, &xm, &ym, depth, &mut path) {
                    return Some(path);
                }
            }
        }
    }
    None
}

/// DFS over strictly possibly causal proper paths of exactly `depth` edges.
fn dfs_possibly_causal(
    g: &Pdag,
    xm: &[bool],
    ym: &[bool],
    depth: usize,
    path: &mut Vec<NodeId>,
) -> bool {
    let cur = *path.last().unwrap();
    let last_step = path.len() - 1 == depth - 1;
    for t in g.neighbors_of(cur) {
        if xm[t.idx()] || path.contains(&t) {
            continue;
        }
        if !(g.has_undirected(cur, t) || g.has_directed(cur, t)) {
            continue;
        }
        // Strictness: no directed edge from t back to an earlier node. The
        // prefix ending at an interior y-node would itself be a witness, so
        // those are pruned.
        if path.iter().any(|&p| g.has_directed(t, p)) {
            continue;
        }
        if ym[t.idx()] != last_step {
            continue;
        }
        path.push(t);
        if last_step {
            return true;
        }
        if dfs_possibly_causal(g, xm, ym, depth, path) {
            return true;
        }
        path.pop();
    }
    false
}

/// Walk prefilter for non-amenability. Complete: a shortest witness path is
/// interior-chordless with x-chords directed out of x, so its triples pass
/// the rules below.
fn nonamenable_walk_exists(g: &Pdag, x: &NodeSet, y: &NodeSet) -> bool {
    let n = g.n();
    let xm = x.mask(n);
    let ym = y.mask(n);
    for xi in x.iter() {
        // Nodes with an edge into x_i can never lie on a strict witness.
        let banned: Vec<bool> = (0..n)
            .map(|i| xm[i] || g.has_directed(NodeId(i as u32), xi))
            .collect();
        let mut seen = vec![false; n * n];
        let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
        for w in g.undirected_of(xi) {
            if banned[w.idx()] {
                continue;
            }
            if ym[w.idx()] {
                return true;
            }
            seen[xi.idx() * n + w.idx()] = true;
            stack.push((xi, w));
        }
        while let Some((u, v)) = stack.pop() {
            for t in g.neighbors_of(v) {
                if banned[t.idx()] || t == u {
                    continue;
                }
                if !(g.has_undirected(v, t) || g.has_directed(v, t)) {
                    continue;
                }
                let shield_ok = if u == xi {
                    !g.adjacent(u, t) || g.has_directed(u, t)
                } else {
                    !g.adjacent(u, t)
                };
                if !shield_ok {
                    continue;
                }
                if ym[t.idx()] {
                    return true;
                }
                if !seen[v.idx() * n + t.idx()] {
                    seen[v.idx() * n + t.idx()] = true;
                    stack.push((v, t));
                }
            }
        }
    }
    false
}

/// Generalized adjustment criterion: amenability, no forbidden node in `z`,
/// and every proper non-causal definite-status path from `x` to `y` blocked
/// by `z`. Conditions are checked in that order and the first failure is
/// reported with a certificate.
pub fn is_valid_adjustment(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<AdjustmentDecision, AdjustError> {
    g.require_disjoint(&[x, y, z])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    Ok(is_valid_unchecked(g, x, y, z))
}

pub(crate) fn is_valid_unchecked(g: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> AdjustmentDecision {
    if let Some(witness) = nonamenable_witness_checked(g, x, y) {
        return AdjustmentDecision {
            failed_condition: Some(FailedCondition::Amenability { witness }),
        };
    }
    let forb = forbidden_mask(g, x, y);
    if let Some(node) = z.iter().find(|id| forb[id.idx()]) {
        return AdjustmentDecision { failed_condition: Some(FailedCondition::ForbiddenOverlap { node }) };
    }
    let witness = open_noncausal_witness(g, x, y, z);
    AdjustmentDecision {
        failed_condition: witness.map(|witness| FailedCondition::OpenPath { witness }),
    }
}

fn nonamenable_witness_checked(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Option<Vec<NodeId>> {
    if g.is_dag() {
        None
    } else {
        nonamenable_witness(g, x, y)
    }
}

/// Shortest open proper non-causal definite-status path from `x` to `y`
/// given `z`, if any.
fn open_noncausal_witness(g: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Option<Vec<NodeId>> {
    let blocking = Blocking::new(g, z);
    let min = open_flagged_walk_length(g, x, y, &blocking)?;
    let n = g.n();
    let xm = x.mask(n);
    let ym = y.mask(n);
    let mut sources: Vec<NodeId> = x.iter().collect();
    sources.sort_unstable();
    for depth in min..n {
        for &s in &sources {
            let mut path = vec![s];
            if dfs_noncausal(g, &xm, &ym, &blocking, depth, &mut path) {
                return Some(path);
            }
        }
    }
    None
}

fn dfs_noncausal(
    g: &Pdag,
    xm: &[bool],
    ym: &[bool],
    blocking: &Blocking,
    depth: usize,
    path: &mut Vec<NodeId>,
) -> bool {
    let cur = *path.last().unwrap();
    if path.len() - 1 == depth {
        return ym[cur.idx()] && !path_is_possibly_directed(g, path);
    }
    for t in g.neighbors_of(cur) {
        if xm[t.idx()] || path.contains(&t) {
            continue;
        }
        if path.len() >= 2 {
            let prev = path[path.len() - 2];
            if !blocking.passes(cur, triple_role(g, prev, cur, t)) {
                continue;
            }
        }
        path.push(t);
        if dfs_noncausal(g, xm, ym, blocking, depth, path) {
            return true;
        }
        path.pop();
    }
    false
}

/// Walk prefilter for condition 3: an open definite-status walk from `x` to
/// `y` avoiding `x` after the start, with at least one step that is not a
/// forward directed edge. Every proper non-causal definite-status open path
/// is such a walk (an all-directed path is causal).
fn open_flagged_walk_length(g: &Pdag, x: &NodeSet, y: &NodeSet, blocking: &Blocking) -> Option<usize> {
    let n = g.n();
    let xm = x.mask(n);
    let ym = y.mask(n);
    // state: (prev, cur, flag)
    let mut seen = vec![false; n * n * 2];
    let mut frontier: Vec<(NodeId, NodeId, bool)> = Vec::new();
    for xi in x.iter() {
        for w in g.neighbors_of(xi) {
            if xm[w.idx()] {
                continue;
            }
            let flag = !g.has_directed(xi, w);
            if ym[w.idx()] && flag {
                return Some(1);
            }
            let key = (xi.idx() * n + w.idx()) * 2 + flag as usize;
            if !seen[key] {
                seen[key] = true;
                frontier.push((xi, w, flag));
            }
        }
    }
    let mut dist = 1;
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for (u, v, flag) in frontier {
            for t in g.neighbors_of(v) {
                if xm[t.idx()] || t == u {
                    continue;
                }
                if !blocking.passes(v, triple_role(g, u, v, t)) {
                    continue;
                }
                let nf = flag || !g.has_directed(v, t);
                if ym[t.idx()] && nf {
                    return Some(dist + 1);
                }
                let key = (v.idx() * n + t.idx()) * 2 + nf as usize;
                if !seen[key] {
                    seen[key] = true;
                    next_frontier.push((v, t, nf));
                }
            }
        }
        frontier = next_frontier;
        dist += 1;
    }
    None
}

/// The `Adjust` set: `possan(x ∪ y) \ forb(x, y) \ (x ∪ y)`. Valid whenever
/// any valid adjustment set exists; verified before returning.
pub fn adjust_set(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Result<NodeSet, AdjustError> {
    g.require_disjoint(&[x, y])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    if let Some(witness) = nonamenable_witness_checked(g, x, y) {
        return Err(AdjustError::NotAmenable { witness: labels(g, &witness) });
    }
    let xy = x.union(y);
    let possan = possible_mask(g, &xy, Dir::Backward);
    let forb = forbidden_mask(g, x, y);
    let mut mask = vec![false; g.n()];
    for i in 0..g.n() {
        mask[i] = possan[i] && !forb[i];
    }
    for v in xy.iter() {
        mask[v.idx()] = false;
    }
    let set = collect(g, &mask);
    let decision = is_valid_unchecked(g, x, y, &set);
    if !decision.valid() {
        return Err(AdjustError::NotValidAdjustmentSet {
            which: "Adjust(x, y)".into(),
            reason: decision.describe(g),
        });
    }
    Ok(set)
}

/// The asymptotically optimal adjustment set `O = pa(cn(x, y)) \ forb(x, y)`.
///
/// Requires `y ⊆ possde(x)` and amenability; `O` is then valid iff any
/// valid adjustment set exists.
pub fn optimal_set(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Result<NodeSet, AdjustError> {
    g.require_disjoint(&[x, y])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    let possde = possible_mask(g, x, Dir::Forward);
    if let Some(yj) = y.iter().find(|yj| !possde[yj.idx()]) {
        return Err(AdjustError::YNotPossibleDescendant { node: g.label(yj).to_string() });
    }
    if let Some(witness) = nonamenable_witness_checked(g, x, y) {
        return Err(AdjustError::NotAmenable { witness: labels(g, &witness) });
    }
    Ok(optimal_set_unchecked(g, x, y))
}

pub(crate) fn optimal_set_unchecked(g: &Pdag, x: &NodeSet, y: &NodeSet) -> NodeSet {
    let cn = collect(g, &cn_mask(g, x, y));
    let forb = forbidden_mask(g, x, y);
    let mut mask = vec![false; g.n()];
    for v in cn.iter() {
        for p in g.parents_of(v) {
            if !forb[p.idx()] {
                mask[p.idx()] = true;
            }
        }
    }
    collect(g, &mask)
}

/// Pruning procedure: drops every `Z` with `y ⟂ Z | x ∪ (z' \ {Z})`.
///
/// The input must be a valid adjustment set; the output is valid, provides
/// an asymptotic variance no larger than the input's, and does not depend
/// on the scan order.
pub fn prune(g: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<NodeSet, AdjustError> {
    g.require_disjoint(&[x, y, z])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    let decision = is_valid_unchecked(g, x, y, z);
    if !decision.valid() {
        return Err(AdjustError::NotValidAdjustmentSet {
            which: "z".into(),
            reason: decision.describe(g),
        });
    }
    let mut kept = z.clone();
    for zk in z.iter() {
        let rest = kept.without(zk);
        let single: NodeSet = [zk].into_iter().collect();
        let cond = x.union(&rest);
        if d_separated_unchecked(g, y, &single, &cond).separated {
            kept = rest;
        }
    }
    Ok(kept)
}

/// Verdict of the qualitative asymptotic-variance comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `avar(z2) ≤ avar(z1)` guaranteed.
    SecondNoWorse,
    /// `avar(z1) ≤ avar(z2)` guaranteed.
    FirstNoWorse,
    /// Both directions hold; equal asymptotic variance guaranteed.
    EqualGuarantee,
    /// Neither direction holds; the graph alone cannot rank the sets.
    Incomparable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::SecondNoWorse => "SECOND_NO_WORSE",
            Verdict::FirstNoWorse => "FIRST_NO_WORSE",
            Verdict::EqualGuarantee => "EQUAL_GUARANTEE",
            Verdict::Incomparable => "INCOMPARABLE",
        }
    }
}

/// The two d-separation statements checked for one direction of the
/// criterion with moved sets `t = z1 \ z2` and `s = z2 \ z1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionCert {
    /// `y ⟂ dropped | x ∪ kept-set`
    pub y_sep: bool,
    /// `x ⟂ added | base-set`
    pub x_sep: bool,
}

impl DirectionCert {
    pub fn holds(&self) -> bool {
        self.y_sep && self.x_sep
    }
}

/// Result of [`compare`] with the certificates for both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonResult {
    pub verdict: Verdict,
    /// Certificate for `avar(z2) ≤ avar(z1)`.
    pub second_no_worse: DirectionCert,
    /// Certificate for `avar(z1) ≤ avar(z2)`.
    pub first_no_worse: DirectionCert,
}

/// Qualitative comparison of two valid adjustment sets.
///
/// With `t = z1 \ z2` and `s = z2 \ z1`: if `y ⟂ t | x ∪ z2` and
/// `x ⟂ s | z1` then `avar(z2) ≤ avar(z1)` entrywise; symmetrically for the
/// other direction. Validity of both inputs is verified first.
pub fn compare(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    z1: &NodeSet,
    z2: &NodeSet,
) -> Result<ComparisonResult, AdjustError> {
    g.require_disjoint(&[x, y, z1])?;
    g.require_disjoint(&[x, y, z2])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    for (name, z) in [("z1", z1), ("z2", z2)] {
        let decision = is_valid_unchecked(g, x, y, z);
        if !decision.valid() {
            return Err(AdjustError::NotValidAdjustmentSet {
                which: name.into(),
                reason: decision.describe(g),
            });
        }
    }
    let t = z1.minus(z2);
    let s = z2.minus(z1);
    let second_no_worse = DirectionCert {
        y_sep: d_separated_unchecked(g, y, &t, &x.union(z2)).separated,
        x_sep: d_separated_unchecked(g, x, &s, z1).separated,
    };
    let first_no_worse = DirectionCert {
        y_sep: d_separated_unchecked(g, y, &s, &x.union(z1)).separated,
        x_sep: d_separated_unchecked(g, x, &t, z2).separated,
    };
    let verdict = match (second_no_worse.holds(), first_no_worse.holds()) {
        (true, true) => Verdict::EqualGuarantee,
        (true, false) => Verdict::SecondNoWorse,
        (false, true) => Verdict::FirstNoWorse,
        (false, false) => Verdict::Incomparable,
    };
    Ok(ComparisonResult { verdict, second_no_worse, first_no_worse })
}

/// Whether a valid adjustment set relative to `(x, y)` exists.
///
/// `y` is first pruned to its possible descendants of `x` (the total effect
/// on the rest is identically zero); an empty remainder counts as `true`.
pub fn exists_vas(g: &Pdag, x: &NodeSet, y: &NodeSet) -> Result<bool, AdjustError> {
    g.require_disjoint(&[x, y])?;
    if !g.is_dag() {
        require_maximal(g)?;
    }
    let possde = possible_mask(g, x, Dir::Forward);
    let y_pruned: NodeSet = y.iter().filter(|yj| possde[yj.idx()]).collect();
    if y_pruned.is_empty() {
        return Ok(true);
    }
    if nonamenable_witness_checked(g, x, &y_pruned).is_some() {
        return Ok(false);
    }
    let o = optimal_set_unchecked(g, x, &y_pruned);
    Ok(is_valid_unchecked(g, x, &y_pruned, &o).valid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    fn set(g: &Pdag, labels: &[&str]) -> NodeSet {
        NodeSet::from_labels(g, labels).unwrap()
    }

    fn fig1() -> Pdag {
        parse_graph("V1 -> V2\nV1 -> V4\nV2 -> V5\nV3 -> V5\nV4 -> V5\nV4 -> V6\nV5 -> V6\n")
            .unwrap()
    }

    fn fig2a() -> Pdag {
        parse_graph("A -> X\nB -> X\nB -> Y\nC -> Y\nX -> Y\nX -> D\n").unwrap()
    }

    fn fig2b() -> Pdag {
        parse_graph("A -> X\nA -> B\nC -> B\nC -> Y\nD -> X\nX -> Y\n").unwrap()
    }

    #[test]
    fn causal_nodes_examples() {
        let g = fig1();
        let cn = causal_nodes(&g, &set(&g, &["V4"]), &set(&g, &["V6"]), CausalMode::Definite).unwrap();
        assert_eq!(cn, set(&g, &["V5", "V6"]));

        let g = fig2a();
        let cn = causal_nodes(&g, &set(&g, &["X"]), &set(&g, &["Y"]), CausalMode::Definite).unwrap();
        assert_eq!(cn, set(&g, &["Y"]));

        // No causal path: empty set.
        let g = parse_graph("Y -> X\n").unwrap();
        let cn = causal_nodes(&g, &set(&g, &["X"]), &set(&g, &["Y"]), CausalMode::Definite).unwrap();
        assert!(cn.is_empty());
    }

    #[test]
    fn forbidden_examples() {
        let g = fig1();
        let f = forbidden(&g, &set(&g, &["V4"]), &set(&g, &["V6"])).unwrap();
        assert_eq!(f, set(&g, &["V4", "V5", "V6"]));

        let g = fig2b();
        let f = forbidden(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap();
        assert_eq!(f, set(&g, &["X", "Y"]));
    }

    #[test]
    fn forbidden_joint_sets_fig_s2() {
        let g = parse_graph(
            "X -> M\nM -> Y\nA1 -> X\nA1 -> A2\nA2 -> Y\nB1 -> X\nB2 -> B1\nB2 -> Y\nR -> Y\nY -> F\nV -> X\nX -> D\n",
        )
        .unwrap();
        let f = forbidden(&g, &set(&g, &["X", "A2"]), &set(&g, &["Y", "F"])).unwrap();
        assert_eq!(f, set(&g, &["X", "A2", "M", "Y", "F"]));
    }

    #[test]
    fn amenability_examples() {
        let g = fig1();
        assert!(amenable(&g, &set(&g, &["V4"]), &set(&g, &["V6"])).unwrap());

        let g = parse_graph("X -- M\nM -> Y\n").unwrap();
        assert!(!amenable(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap());

        // Fig 3(b): V1 -- V2, V1 -> V3, V1 -- V4, V3 -- V4. The path
        // (V1, V4, V3) is possibly causal (the chord V1 -> V3 points
        // forward) and starts with an undirected edge.
        let g = parse_graph("V1 -- V2\nV1 -> V3\nV1 -- V4\nV3 -- V4\n").unwrap();
        assert!(!amenable(&g, &set(&g, &["V1"]), &set(&g, &["V3"])).unwrap());
    }

    #[test]
    fn validity_examples_fig2a() {
        let g = fig2a();
        let x = set(&g, &["X"]);
        let y = set(&g, &["Y"]);
        let d = is_valid_adjustment(&g, &x, &y, &set(&g, &["B", "C"])).unwrap();
        assert!(d.valid());

        let d = is_valid_adjustment(&g, &x, &y, &set(&g, &["A", "C"])).unwrap();
        match d.failed_condition {
            Some(FailedCondition::OpenPath { ref witness }) => {
                assert_eq!(witness.iter().map(|v| g.label(*v)).collect::<Vec<_>>(), vec!["X", "B", "Y"]);
            }
            other => panic!("expected open path, got {other:?}"),
        }
    }

    #[test]
    fn validity_forbidden_mediator() {
        let g = fig1();
        let d = is_valid_adjustment(&g, &set(&g, &["V4"]), &set(&g, &["V6"]), &set(&g, &["V5"]))
            .unwrap();
        match d.failed_condition {
            Some(FailedCondition::ForbiddenOverlap { node }) => assert_eq!(g.label(node), "V5"),
            other => panic!("expected forbidden overlap, got {other:?}"),
        }
    }

    #[test]
    fn adjust_set_examples() {
        let g = fig2a();
        let a = adjust_set(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap();
        assert_eq!(a, set(&g, &["A", "B", "C"]));

        let g = fig1();
        let a = adjust_set(&g, &set(&g, &["V4"]), &set(&g, &["V6"])).unwrap();
        assert_eq!(a, set(&g, &["V1", "V2", "V3"]));

        let g = parse_graph("X -> Y\n").unwrap();
        let a = adjust_set(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn optimal_set_examples() {
        let g = fig1();
        let o = optimal_set(&g, &set(&g, &["V4"]), &set(&g, &["V6"])).unwrap();
        assert_eq!(o, set(&g, &["V2", "V3"]));

        let g = fig2a();
        let o = optimal_set(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap();
        assert_eq!(o, set(&g, &["B", "C"]));

        let g = fig2b();
        let o = optimal_set(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap();
        assert_eq!(o, set(&g, &["C"]));
    }

    #[test]
    fn optimal_set_rejects_non_descendant_y() {
        let g = parse_graph("Y -> X\n").unwrap();
        let e = optimal_set(&g, &set(&g, &["X"]), &set(&g, &["Y"]));
        assert!(matches!(e, Err(AdjustError::YNotPossibleDescendant { .. })));
    }

    #[test]
    fn prune_examples() {
        let g = fig2a();
        let x = set(&g, &["X"]);
        let y = set(&g, &["Y"]);
        let p = prune(&g, &x, &y, &set(&g, &["A", "B", "C", "D"])).unwrap();
        assert_eq!(p, set(&g, &["B", "C"]));
        let p = prune(&g, &x, &y, &set(&g, &["A", "B", "D"])).unwrap();
        assert_eq!(p, set(&g, &["B"]));
        // O prunes to itself.
        let o = optimal_set(&g, &x, &y).unwrap();
        assert_eq!(prune(&g, &x, &y, &o).unwrap(), o);
    }

    #[test]
    fn prune_rejects_invalid_input() {
        let g = fig2a();
        let e = prune(&g, &set(&g, &["X"]), &set(&g, &["Y"]), &set(&g, &["A"]));
        assert!(matches!(e, Err(AdjustError::NotValidAdjustmentSet { .. })));
    }

    #[test]
    fn compare_examples() {
        let g = fig2a();
        let x = set(&g, &["X"]);
        let y = set(&g, &["Y"]);
        let r = compare(&g, &x, &y, &set(&g, &["A", "B"]), &set(&g, &["B", "C"])).unwrap();
        assert_eq!(r.verdict, Verdict::SecondNoWorse);

        let r = compare(&g, &x, &y, &set(&g, &["A", "B", "C"]), &set(&g, &["B"])).unwrap();
        assert_eq!(r.verdict, Verdict::Incomparable);

        let r = compare(&g, &x, &y, &set(&g, &["B"]), &set(&g, &["B"])).unwrap();
        assert_eq!(r.verdict, Verdict::EqualGuarantee);
    }

    #[test]
    fn exists_vas_examples() {
        let g = fig1();
        assert!(exists_vas(&g, &set(&g, &["V4"]), &set(&g, &["V6"])).unwrap());

        let g = parse_graph("X -> M\nM -> Y\nX -> Y\n").unwrap();
        assert!(exists_vas(&g, &set(&g, &["X"]), &set(&g, &["Y"])).unwrap());

        // X2 is a descendant of the causal node M, so no valid set exists.
        let g = parse_graph("X -> M\nM -> Y\nM -> X2\n").unwrap();
        assert!(!exists_vas(&g, &set(&g, &["X", "X2"]), &set(&g, &["Y"])).unwrap());
    }

    #[test]
    fn exists_vas_prunes_unreachable_y() {
        let g = parse_graph("X -> Y\nnode Q\n").unwrap();
        assert!(exists_vas(&g, &set(&g, &["X"]), &set(&g, &["Q"])).unwrap());
    }

    #[test]
    fn posscn_on_cpdag() {
        // CPDAG X -- M -- Y (chain class): M and Y are possibly causal
        // relative to ({X}, {Y}).
        let g = parse_graph("X -- M\nM -- Y\n").unwrap();
        let pc = causal_nodes(&g, &set(&g, &["X"]), &set(&g, &["Y"]), CausalMode::Possible).unwrap();
        assert_eq!(pc, set(&g, &["M", "Y"]));
        let cn = causal_nodes(&g, &set(&g, &["X"]), &set(&g, &["Y"]), CausalMode::Definite).unwrap();
        assert!(cn.is_empty());
    }
}
