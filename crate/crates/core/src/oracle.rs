//! Brute-force verifiers: intentionally slow, obviously correct
//! counterparts of the fast graph and adjustment machinery, for use on
//! small instances.
//!
//! Everything here works from first principles — exhaustive enumeration of
//! simple paths, subsets, or DAG extensions — and deliberately avoids the
//! walk-state searches used by the fast paths, so agreement between the two
//! is meaningful evidence.

use crate::adjust::{self, AdjustError};
use crate::graph::{
    is_definite_status, list_dag_extensions, path_is_possibly_directed, GraphError, NodeId,
    NodeSet, Pdag,
};
use crate::scalar::Scalar;
use crate::sem::{self, EffectMatrix, LinearSem, SemError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("instance too large for brute force: {0}")]
    TooLarge(String),
    #[error("optimality violated: {0}")]
    OptimalityViolated(String),
}

const SUBSET_CAP: usize = 16;

/// Visits every simple path starting at `from`; `visit` sees each path and
/// returns whether to extend it further.
fn walk_paths<FV: FnMut(&[NodeId]) -> bool>(g: &Pdag, from: NodeId, visit: &mut FV) {
    let mut path = vec![from];
    let mut on_path = vec![false; g.n()];
    on_path[from.idx()] = true;
    fn rec<FV: FnMut(&[NodeId]) -> bool>(
        g: &Pdag,
        path: &mut Vec<NodeId>,
        on_path: &mut [bool],
        visit: &mut FV,
    ) {
        if !visit(path) {
            return;
        }
        let cur = *path.last().unwrap();
        for next in g.neighbors_of(cur) {
            if !on_path[next.idx()] {
                on_path[next.idx()] = true;
                path.push(next);
                rec(g, path, on_path, visit);
                path.pop();
                on_path[next.idx()] = false;
            }
        }
    }
    rec(g, &mut path, &mut on_path, visit);
}

/// Possible descendants of `s` by definition: endpoints of possibly
/// directed paths (prefix-closed, so pruning non-strict prefixes is exact).
pub fn possde_by_paths(g: &Pdag, s: &NodeSet) -> NodeSet {
    let mut mask = vec![false; g.n()];
    for v in s.iter() {
        mask[v.idx()] = true;
        walk_paths(g, v, &mut |path| {
            if !path_is_possibly_directed(g, path) {
                return false;
            }
            mask[path.last().unwrap().idx()] = true;
            true
        });
    }
    crate::graph::collect(g, &mask)
}

/// Nodes on proper possibly causal paths from `x` to `y`, by enumeration.
pub fn posscn_by_paths(g: &Pdag, x: &NodeSet, y: &NodeSet) -> NodeSet {
    let mut mask = vec![false; g.n()];
    for xi in x.iter() {
        walk_paths(g, xi, &mut |path| {
            if path.len() >= 2 && x.contains(path[path.len() - 1]) {
                return false; // improper
            }
            if !path_is_possibly_directed(g, path) {
                return false;
            }
            if y.contains(*path.last().unwrap()) {
                for v in &path[1..] {
                    mask[v.idx()] = true;
                }
            }
            true
        });
    }
    crate::graph::collect(g, &mask)
}

/// Amenability by enumeration of proper possibly causal paths.
pub fn amenable_by_paths(g: &Pdag, x: &NodeSet, y: &NodeSet) -> bool {
    let mut ok = true;
    for xi in x.iter() {
        walk_paths(g, xi, &mut |path| {
            if !ok {
                return false;
            }
            if path.len() >= 2 && x.contains(path[path.len() - 1]) {
                return false;
            }
            if !path_is_possibly_directed(g, path) {
                return false;
            }
            if path.len() >= 2
                && y.contains(*path.last().unwrap())
                && g.has_undirected(path[0], path[1])
            {
                ok = false;
                return false;
            }
            true
        });
        if !ok {
            break;
        }
    }
    ok
}

/// Whether `path` is blocked by `z`: some definite non-collider in `z`, or
/// some collider with no descendant in `z`.
fn path_blocked(g: &Pdag, path: &[NodeId], z: &NodeSet) -> bool {
    let an_z = crate::graph::ancestor_mask(g, z);
    for w in path.windows(3) {
        let collider = g.has_directed(w[0], w[1]) && g.has_directed(w[2], w[1]);
        if collider {
            if !an_z[w[1].idx()] {
                return true;
            }
        } else if z.contains(w[1]) {
            return true;
        }
    }
    false
}

/// d-separation by enumeration of definite status paths.
pub fn dsep_by_paths(g: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> bool {
    let mut separated = true;
    for xi in x.iter() {
        walk_paths(g, xi, &mut |path| {
            if !separated {
                return false;
            }
            if path.len() >= 3 {
                let w = &path[path.len() - 3..];
                // Prefix must stay definite status to ever yield one.
                if !is_definite_status(g, w).unwrap_or(false) {
                    return false;
                }
            }
            if path.len() >= 2 && y.contains(*path.last().unwrap()) && !path_blocked(g, path, z) {
                separated = false;
                return false;
            }
            true
        });
        if !separated {
            break;
        }
    }
    separated
}

/// Generalized adjustment criterion by raw enumeration: amenability, the
/// forbidden-set condition and blocking of every proper non-causal definite
/// status path.
pub fn valid_by_paths(g: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> bool {
    if !amenable_by_paths(g, x, y) {
        return false;
    }
    let forb = possde_by_paths(g, &posscn_by_paths(g, x, y)).union(x);
    if !z.is_disjoint(&forb) {
        return false;
    }
    let mut blocked = true;
    for xi in x.iter() {
        walk_paths(g, xi, &mut |path| {
            if !blocked {
                return false;
            }
            if path.len() >= 2 && x.contains(path[path.len() - 1]) {
                return false;
            }
            if path.len() >= 3 {
                let w = &path[path.len() - 3..];
                if !is_definite_status(g, w).unwrap_or(false) {
                    return false;
                }
            }
            if path.len() >= 2
                && y.contains(*path.last().unwrap())
                && !path_is_possibly_directed(g, path)
                && !path_blocked(g, path, z)
            {
                blocked = false;
                return false;
            }
            true
        });
        if !blocked {
            break;
        }
    }
    blocked
}

/// Plain DAG d-separation via ancestral reduction, moralization and BFS —
/// an algorithm disjoint from the definite-status walk search.
pub fn dag_dsep(d: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> bool {
    debug_assert!(d.is_dag());
    let n = d.n();
    let seeds = x.union(y).union(z);
    let keep = crate::graph::ancestor_mask(d, &seeds);

    // Moral graph on the ancestral set.
    let mut adj = vec![vec![false; n]; n];
    let connect = |a: usize, b: usize, adj: &mut Vec<Vec<bool>>| {
        adj[a][b] = true;
        adj[b][a] = true;
    };
    for v in d.node_ids() {
        if !keep[v.idx()] {
            continue;
        }
        let pa: Vec<NodeId> = d.parents_of(v).filter(|p| keep[p.idx()]).collect();
        for p in &pa {
            connect(p.idx(), v.idx(), &mut adj);
        }
        for (i, a) in pa.iter().enumerate() {
            for b in &pa[i + 1..] {
                connect(a.idx(), b.idx(), &mut adj);
            }
        }
    }

    let zm = z.mask(n);
    let ym = y.mask(n);
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = x.iter().map(|v| v.idx()).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(u) = stack.pop() {
        if ym[u] {
            return false;
        }
        if zm[u] {
            continue; // blocked; x-nodes are never in z
        }
        for (w, &connected) in adj[u].iter().enumerate() {
            if connected && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// d-separation in a maximal PDAG as the conjunction of DAG d-separation
/// over all represented DAGs.
pub fn dsep_by_extension(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    limit: usize,
) -> Result<bool, OracleError> {
    for d in list_dag_extensions(g, limit)? {
        if !dag_dsep(&d, x, y, z) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Possible descendants as the union of descendants over all extensions.
pub fn possde_by_extension(g: &Pdag, s: &NodeSet, limit: usize) -> Result<NodeSet, OracleError> {
    let mut mask = vec![false; g.n()];
    for d in list_dag_extensions(g, limit)? {
        for (i, m) in crate::graph::descendant_mask(&d, s).into_iter().enumerate() {
            mask[i] |= m;
        }
    }
    Ok(crate::graph::collect(g, &mask))
}

/// Validity in a maximal PDAG as validity in every represented DAG, with
/// per-DAG validity decided by the backdoor-graph construction.
pub fn valid_by_extension(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    limit: usize,
) -> Result<bool, OracleError> {
    for d in list_dag_extensions(g, limit)? {
        if !dag_valid_by_backdoor(&d, x, y, z) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// DAG adjustment criterion via the proper back-door graph: `z` avoids
/// `de(cn) ∪ x` and d-separates `x` from `y` once the first edges of all
/// proper causal paths are removed.
pub fn dag_valid_by_backdoor(d: &Pdag, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> bool {
    debug_assert!(d.is_dag());
    // cn by definition: descendants of x along x-avoiding interiors that
    // reach y avoiding x.
    let cn = crate::graph::collect(d, &adjust::cn_mask(d, x, y));
    let forb = crate::graph::collect(d, &crate::graph::descendant_mask(d, &cn)).union(x);
    if !z.is_disjoint(&forb) {
        return false;
    }
    // Remove the first edge x -> c of every proper causal path: c there
    // iff c reaches y via a directed path avoiding x.
    let mut reaches = vec![false; d.n()];
    let mut stack: Vec<NodeId> = Vec::new();
    for yj in y.iter() {
        reaches[yj.idx()] = true;
        stack.push(yj);
    }
    while let Some(v) = stack.pop() {
        for p in d.parents_of(v) {
            if !x.contains(p) && !reaches[p.idx()] {
                reaches[p.idx()] = true;
                stack.push(p);
            }
        }
    }
    let labels = d.node_labels().to_vec();
    let directed: Vec<(String, String)> = d
        .directed_edges()
        .filter(|(t, h)| !(x.contains(*t) && reaches[h.idx()] && !x.contains(*h)))
        .map(|(t, h)| (d.label(t).to_string(), d.label(h).to_string()))
        .collect();
    let pbd = Pdag::build(&labels, &directed, &[]).expect("subgraph of a DAG");
    let xs = NodeSet::from_labels(&pbd, &x.labels(d)).unwrap();
    let ys = NodeSet::from_labels(&pbd, &y.labels(d)).unwrap();
    let zs = NodeSet::from_labels(&pbd, &z.labels(d)).unwrap();
    dag_dsep(&pbd, &xs, &ys, &zs)
}

/// Every valid adjustment set relative to `(x, y)`, by subset enumeration.
pub fn all_valid_adjustment_sets(
    g: &Pdag,
    x: &NodeSet,
    y: &NodeSet,
) -> Result<Vec<NodeSet>, OracleError> {
    g.require_disjoint(&[x, y])?;
    let candidates: Vec<NodeId> = g
        .node_ids()
        .filter(|v| !x.contains(*v) && !y.contains(*v))
        .collect();
    if candidates.len() > SUBSET_CAP {
        return Err(OracleError::TooLarge(format!(
            "{} candidate nodes exceed the cap of {SUBSET_CAP}",
            candidates.len()
        )));
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << candidates.len() {
        let z: NodeSet = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| *v)
            .collect();
        if adjust::is_valid_adjustment(g, x, y, &z)?.valid() {
            out.push(z);
        }
    }
    Ok(out)
}

/// Asymptotic variances of every valid adjustment set for one model.
pub struct OptimalityReport<F> {
    pub optimal: NodeSet,
    /// `(set, avar matrix)` for every valid set, enumeration order.
    pub table: Vec<(NodeSet, EffectMatrix<F>)>,
}

/// Computes the full avar table and checks that the optimal set attains the
/// entrywise minimum (within `1e-9` relative).
pub fn brute_optimality<F: Scalar>(
    sem: &LinearSem<F>,
    x: &NodeSet,
    y: &NodeSet,
) -> Result<OptimalityReport<F>, OracleError> {
    let g = sem.graph();
    let o = adjust::optimal_set(g, x, y)?;
    let sets = all_valid_adjustment_sets(g, x, y)?;
    let cov = sem.covariance();
    let xs: Vec<String> = x.iter().map(|v| g.label(v).to_string()).collect();
    let ys: Vec<String> = y.iter().map(|v| g.label(v).to_string()).collect();
    let mut table = Vec::with_capacity(sets.len());
    let mut o_avar: Option<EffectMatrix<F>> = None;
    for z in sets {
        let zs: Vec<String> = z.iter().map(|v| g.label(v).to_string()).collect();
        let a = sem::avar_from_cov(&cov, &xs, &ys, &zs)?;
        if z == o {
            o_avar = Some(a.clone());
        }
        table.push((z, a));
    }
    let o_avar = o_avar.ok_or_else(|| {
        OracleError::OptimalityViolated(format!(
            "optimal set {{{}}} is not among the valid sets",
            o.labels(g).join(", ")
        ))
    })?;
    let tol = F::of(1e-9);
    for (z, a) in &table {
        for i in 0..a.rows().len() {
            for j in 0..a.cols().len() {
                let oa = o_avar.entry(i, j);
                if oa > a.entry(i, j) * (F::one() + tol) + tol {
                    return Err(OracleError::OptimalityViolated(format!(
                        "avar(O)[{i},{j}] = {:?} exceeds avar({{{}}})[{i},{j}] = {:?} in graph:\n{}",
                        oa,
                        z.labels(g).join(", "),
                        a.entry(i, j),
                        g
                    )));
                }
            }
        }
    }
    Ok(OptimalityReport { optimal: o, table })
}
