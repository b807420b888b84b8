//! Shared generators for the integration test suites.

use adjopt::estimate::StreamRng;
use adjopt::graph::{cpdag_of_dag, orient_closure, NodeSet, Pdag};
use adjopt::sem::{ErrFamily, LinearSem};
use adjopt::simbench::{random_dag, GraphType};
use rand::Rng;
use std::collections::HashMap;

/// Random DAG with `n` in `3..=max_nodes` and a modest expected degree.
pub fn small_random_dag(rng: &mut StreamRng, max_nodes: usize) -> Pdag {
    let n = rng.rng().random_range(3..=max_nodes);
    let nbr = rng.rng().random_range(1.0..(n as f64 - 1.0).min(3.0));
    random_dag(n, nbr, GraphType::ErdosRenyi, rng).unwrap()
}

/// Random maximal PDAG obtained from a DAG's CPDAG plus a random subset of
/// the DAG's orientations as background knowledge, closed under the
/// orientation rules. Returns the DAG too (a member of the class).
pub fn random_maximal_pdag(rng: &mut StreamRng, max_nodes: usize) -> (Pdag, Pdag) {
    let dag = small_random_dag(rng, max_nodes);
    let cpdag = cpdag_of_dag(&dag).unwrap();
    let frac: f64 = rng.rng().random();
    let mut with_bg = cpdag.clone();
    let undirected: Vec<_> = cpdag.undirected_edges().collect();
    for (a, b) in undirected {
        if rng.rng().random::<f64>() < frac * 0.7 {
            // Copy this edge's orientation from the DAG.
            let (t, h) = if dag.has_directed(a, b) { (a, b) } else { (b, a) };
            let labels = with_bg.node_labels().to_vec();
            let directed: Vec<(String, String)> = with_bg
                .directed_edges()
                .map(|(x, y)| (with_bg.label(x).to_string(), with_bg.label(y).to_string()))
                .chain(std::iter::once((
                    with_bg.label(t).to_string(),
                    with_bg.label(h).to_string(),
                )))
                .collect();
            let und: Vec<(String, String)> = with_bg
                .undirected_edges()
                .filter(|(x, y)| !(*x == a && *y == b || *x == b && *y == a))
                .map(|(x, y)| (with_bg.label(x).to_string(), with_bg.label(y).to_string()))
                .collect();
            with_bg = Pdag::build(&labels, &directed, &und).unwrap();
        }
    }
    let maximal = orient_closure(&with_bg).expect("background knowledge is consistent");
    (maximal, dag)
}

/// Random disjoint node sets with the given maximum sizes (either may come
/// out empty unless `min_x`/`min_y` demand otherwise).
pub fn random_disjoint_sets(
    g: &Pdag,
    rng: &mut StreamRng,
    sizes: (usize, usize, usize),
    require_nonempty_xy: bool,
) -> Option<(NodeSet, NodeSet, NodeSet)> {
    let n = g.n();
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in (1..pool.len()).rev() {
        let j = rng.rng().random_range(0..=i);
        pool.swap(i, j);
    }
    let want_x = require_nonempty_xy && sizes.0 > 0;
    let want_y = require_nonempty_xy && sizes.1 > 0;
    let max_x = sizes.0.min(n.saturating_sub(want_y as usize));
    let kx =
        if max_x == 0 { 0 } else { rng.rng().random_range((want_x as usize).min(max_x)..=max_x) };
    if want_x && kx == 0 {
        return None;
    }
    let rem = n - kx;
    let max_y = sizes.1.min(rem);
    let ky =
        if max_y == 0 { 0 } else { rng.rng().random_range((want_y as usize).min(max_y)..=max_y) };
    if want_y && ky == 0 {
        return None;
    }
    let rem = rem - ky;
    let max_z = sizes.2.min(rem);
    let kz = if max_z == 0 { 0 } else { rng.rng().random_range(0..=max_z) };
    let ids = |r: std::ops::Range<usize>| {
        let labels: Vec<&str> =
            pool[r].iter().map(|&i| g.node_labels()[i as usize].as_str()).collect();
        NodeSet::from_labels(g, &labels).unwrap()
    };
    Some((ids(0..kx), ids(kx..kx + ky), ids(kx + ky..kx + ky + kz)))
}

/// Random linear SEM over `g` with coefficients in `[-2, -0.1] ∪ [0.1, 2]`
/// and error variances in `[0.5, 1.5]`.
pub fn random_sem(g: &Pdag, rng: &mut StreamRng) -> LinearSem<f64> {
    let mut coeff = HashMap::new();
    for (t, h) in g.directed_edges() {
        let mag: f64 = rng.rng().random_range(0.1..=2.0);
        let sign = if rng.rng().random::<bool>() { 1.0 } else { -1.0 };
        coeff.insert((t, h), mag * sign);
    }
    let mut err_var = HashMap::new();
    let mut fam = HashMap::new();
    for v in g.node_ids() {
        err_var.insert(v, rng.rng().random_range(0.5..=1.5));
        fam.insert(v, ErrFamily::Gaussian);
    }
    LinearSem::new(g.clone(), coeff, err_var, fam).unwrap()
}
