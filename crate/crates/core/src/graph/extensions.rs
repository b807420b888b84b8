//! Enumeration of the DAGs represented by a maximal PDAG, and the CPDAG of
//! a DAG.
//!
//! A DAG belongs to the class of a maximal PDAG iff it has the same skeleton
//! and v-structures and contains every directed edge of it. Enumeration
//! walks all orientations of the undirected edges and keeps the acyclic,
//! v-structure-preserving ones.

use super::dsep::require_maximal;
use super::{maximal, GraphError, NodeId, Pdag};

/// Default cap on the number of undirected edges for enumeration.
pub const DEFAULT_EXTENSION_LIMIT: usize = 16;

/// Lazy iterator over the DAGs represented by a maximal PDAG.
pub struct DagExtensions<'g> {
    g: &'g Pdag,
    und: Vec<(NodeId, NodeId)>,
    next_mask: u64,
    end: u64,
}

/// Enumerates the DAGs in the class of maximal PDAG `g`.
///
/// Errors if `g` is not maximal or has more than `limit` undirected edges.
pub fn list_dag_extensions(g: &Pdag, limit: usize) -> Result<DagExtensions<'_>, GraphError> {
    require_maximal(g)?;
    let und: Vec<(NodeId, NodeId)> = g.undirected_edges().collect();
    if und.len() > limit {
        return Err(GraphError::ExtensionLimit { undirected: und.len(), limit });
    }
    let end = 1u64 << und.len();
    Ok(DagExtensions { g, und, next_mask: 0, end })
}

impl Iterator for DagExtensions<'_> {
    type Item = Pdag;

    fn next(&mut self) -> Option<Pdag> {
        while self.next_mask < self.end {
            let mask = self.next_mask;
            self.next_mask += 1;
            if let Some(dag) = orient_by_mask(self.g, &self.und, mask) {
                return Some(dag);
            }
        }
        None
    }
}

fn orient_by_mask(g: &Pdag, und: &[(NodeId, NodeId)], mask: u64) -> Option<Pdag> {
    let mut d = g.clone();
    for (i, &(a, b)) in und.iter().enumerate() {
        let (tail, head) = if mask >> i & 1 == 0 { (a, b) } else { (b, a) };
        d = d.with_oriented(tail, head).ok()?;
    }
    if d.check_acyclic().is_err() {
        return None;
    }
    // No new v-structures: every v-structure of the candidate must already
    // be directed in g (adjacencies are shared, so it is one of g's).
    for m in d.node_ids() {
        let pa: Vec<NodeId> = d.parents_of(m).collect();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !d.adjacent(a, b) && !(g.has_directed(a, m) && g.has_directed(b, m)) {
                    return None;
                }
            }
        }
    }
    Some(d)
}

/// CPDAG of a DAG: skeleton plus v-structures, closed under orientation.
pub fn cpdag_of_dag(dag: &Pdag) -> Result<Pdag, GraphError> {
    debug_assert!(dag.is_dag());
    let labels = dag.node_labels().to_vec();
    let mut g = Pdag::with_nodes(&labels)?;
    let mut directed: Vec<(NodeId, NodeId)> = Vec::new();
    let mut undirected: Vec<(NodeId, NodeId)> = Vec::new();
    for (t, h) in dag.directed_edges() {
        let mut in_vstruct = false;
        for p in dag.parents_of(h) {
            if p != t && !dag.adjacent(p, t) {
                in_vstruct = true;
                break;
            }
        }
        if in_vstruct {
            directed.push((t, h));
        } else {
            undirected.push((t, h));
        }
    }
    for (t, h) in directed {
        g.add_directed(t, h)?;
    }
    for (a, b) in undirected {
        g.add_undirected(a, b)?;
    }
    maximal::orient_closure(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    #[test]
    fn dag_extends_to_itself() {
        let g = parse_graph("X -> Y\nY -> Z\n").unwrap();
        let dags: Vec<Pdag> = list_dag_extensions(&g, 16).unwrap().collect();
        assert_eq!(dags.len(), 1);
        assert_eq!(dags[0], g);
    }

    #[test]
    fn fig3_class_sizes() {
        // CPDAG: V1 -- V2, V1 -- V3, V1 -- V4, V3 -- V4 represents 8 DAGs.
        let c = parse_graph("V1 -- V2\nV1 -- V3\nV1 -- V4\nV3 -- V4\n").unwrap();
        assert_eq!(list_dag_extensions(&c, 16).unwrap().count(), 8);

        // Maximal PDAG (b): V1 -> V3 added, represents 5 DAGs.
        let b = parse_graph("V1 -- V2\nV1 -> V3\nV1 -- V4\nV3 -- V4\n").unwrap();
        assert_eq!(list_dag_extensions(&b, 16).unwrap().count(), 5);

        // Maximal PDAG (c): V2 -> V1, V1 -> V3, V1 -> V4, V3 -- V4
        // represents two DAGs.
        let c2 = parse_graph("V2 -> V1\nV1 -> V3\nV1 -> V4\nV3 -- V4\n").unwrap();
        assert_eq!(list_dag_extensions(&c2, 16).unwrap().count(), 2);
    }

    #[test]
    fn extensions_preserve_directed_edges_and_vstructures() {
        let g = parse_graph("V2 -> V1\nV1 -> V3\nV1 -- V4\nV3 -- V4\n").unwrap();
        let g = maximal::orient_closure(&g).unwrap();
        for d in list_dag_extensions(&g, 16).unwrap() {
            assert!(d.is_dag());
            for (t, h) in g.directed_edges() {
                assert!(d.has_directed(t, h));
            }
        }
    }

    #[test]
    fn limit_is_enforced() {
        let c = parse_graph("V1 -- V2\nV1 -- V3\nV1 -- V4\nV3 -- V4\n").unwrap();
        assert!(matches!(
            list_dag_extensions(&c, 2),
            Err(GraphError::ExtensionLimit { undirected: 4, limit: 2 })
        ));
    }

    #[test]
    fn cpdag_of_collider_keeps_vstructure() {
        let d = parse_graph("X -> C\nY -> C\n").unwrap();
        let c = cpdag_of_dag(&d).unwrap();
        assert_eq!(c, d);

        let chain = parse_graph("X -> M\nM -> Y\n").unwrap();
        let c = cpdag_of_dag(&chain).unwrap();
        assert_eq!(c.undirected_edge_count(), 2);
        assert_eq!(c.directed_edge_count(), 0);
    }

    #[test]
    fn cpdag_class_contains_the_dag() {
        let d = parse_graph("V2 -> V1\nV1 -> V3\nV1 -> V4\nV3 -> V4\n").unwrap();
        let c = cpdag_of_dag(&d).unwrap();
        let class: Vec<Pdag> = list_dag_extensions(&c, 16).unwrap().collect();
        assert_eq!(class.len(), 8);
        assert!(class.iter().any(|m| *m == d));
    }
}
