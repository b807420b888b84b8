//! Ancestral relations: parents, children, ancestors, descendants and their
//! "possible" variants on partially directed graphs.
//!
//! Ancestors and descendants follow directed edges only. Possible variants
//! follow possibly directed paths, where a path is possibly directed from
//! its first to its last node if the graph has no directed edge from a
//! later path node back to an earlier one. On maximal PDAGs a node has a
//! possibly directed path to another iff it has a chordless one, and a
//! chordless possibly directed path steps only through unshielded triples;
//! the searches below therefore extend `(previous, current)` states by
//! undirected or forward directed edges with unshielded triples.
//!
//! An/de/possan/possde are reflexive; parents/children are not.

use super::{NodeId, NodeSet, Pdag};

/// Ancestral relation selector for [`ancestry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    Ancestors,
    Descendants,
    PossibleAncestors,
    PossibleDescendants,
}

impl Relation {
    pub fn parse(s: &str) -> Option<Relation> {
        Some(match s {
            "parents" | "pa" => Relation::Parents,
            "children" | "ch" => Relation::Children,
            "ancestors" | "an" => Relation::Ancestors,
            "descendants" | "de" => Relation::Descendants,
            "possible_ancestors" | "possan" => Relation::PossibleAncestors,
            "possible_descendants" | "possde" => Relation::PossibleDescendants,
            _ => return None,
        })
    }
}

/// Nodes standing in `relation` to `s`, in declaration order.
pub fn ancestry(g: &Pdag, s: &NodeSet, relation: Relation) -> NodeSet {
    let mask = match relation {
        Relation::Parents => {
            let mut m = vec![false; g.n()];
            for v in s.iter() {
                for p in g.parents_of(v) {
                    m[p.idx()] = true;
                }
            }
            m
        }
        Relation::Children => {
            let mut m = vec![false; g.n()];
            for v in s.iter() {
                for c in g.children_of(v) {
                    m[c.idx()] = true;
                }
            }
            m
        }
        Relation::Ancestors => ancestor_mask(g, s),
        Relation::Descendants => descendant_mask(g, s),
        Relation::PossibleAncestors => possible_mask(g, s, Dir::Backward),
        Relation::PossibleDescendants => possible_mask(g, s, Dir::Forward),
    };
    collect(g, &mask)
}

pub(crate) fn collect(g: &Pdag, mask: &[bool]) -> NodeSet {
    g.node_ids().filter(|id| mask[id.idx()]).collect()
}

/// Reflexive descendant mask over directed edges.
pub(crate) fn descendant_mask(g: &Pdag, s: &NodeSet) -> Vec<bool> {
    reach(g, s, true)
}

/// Reflexive ancestor mask over directed edges.
pub(crate) fn ancestor_mask(g: &Pdag, s: &NodeSet) -> Vec<bool> {
    reach(g, s, false)
}

fn reach(g: &Pdag, s: &NodeSet, down: bool) -> Vec<bool> {
    let adj = if down { &g.children } else { &g.parents };
    let mut mask = vec![false; g.n()];
    let mut stack: Vec<usize> = Vec::new();
    for v in s.iter() {
        if !mask[v.idx()] {
            mask[v.idx()] = true;
            stack.push(v.idx());
        }
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !mask[w as usize] {
                mask[w as usize] = true;
                stack.push(w as usize);
            }
        }
    }
    mask
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dir {
    /// Possibly directed paths leaving the seed set.
    Forward,
    /// Possibly directed paths arriving at the seed set.
    Backward,
}

/// One step of a possibly directed path: undirected or directed along `dir`.
fn step_ok(g: &Pdag, from: NodeId, to: NodeId, dir: Dir) -> bool {
    g.has_undirected(from, to)
        || match dir {
            Dir::Forward => g.has_directed(from, to),
            Dir::Backward => g.has_directed(to, from),
        }
}

/// Reflexive possible-descendant (or -ancestor) mask.
pub(crate) fn possible_mask(g: &Pdag, s: &NodeSet, dir: Dir) -> Vec<bool> {
    let n = g.n();
    let mut mask = vec![false; n];
    // visited (prev, cur) states
    let mut seen = vec![false; n * n];
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
    for v in s.iter() {
        mask[v.idx()] = true;
        for w in g.neighbors_of(v) {
            if step_ok(g, v, w, dir) && !seen[v.idx() * n + w.idx()] {
                seen[v.idx() * n + w.idx()] = true;
                stack.push((v, w));
            }
        }
    }
    while let Some((prev, cur)) = stack.pop() {
        mask[cur.idx()] = true;
        for next in g.neighbors_of(cur) {
            if next == prev || g.adjacent(prev, next) {
                continue;
            }
            if step_ok(g, cur, next, dir) && !seen[cur.idx() * n + next.idx()] {
                seen[cur.idx() * n + next.idx()] = true;
                stack.push((cur, next));
            }
        }
    }
    mask
}
