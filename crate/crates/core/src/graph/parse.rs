//! Line-oriented graph file format.
//!
//! ```text
//! # comment to end of line; blank lines ignored
//! node V1          # declares an isolated node
//! V1 -> V2         # directed edge
//! V1 -> V2 : 0.5   # directed edge with weight (used by SEM files)
//! A -- B           # undirected edge
//! var V1 1.0       # SEM: error variance (ignored by the graph parser)
//! dist V1 uniform  # SEM: error family (ignored by the graph parser)
//! ```
//!
//! Node order is first-mention order.

use super::{GraphError, Pdag};

/// Raw parse of a graph or SEM file; consumers pick what they need.
#[derive(Debug, Default)]
pub(crate) struct GraphFile {
    pub nodes: Vec<String>,
    pub directed: Vec<DirectedLine>,
    pub undirected: Vec<(String, String)>,
    pub var_lines: Vec<(String, f64, usize)>,
    pub dist_lines: Vec<(String, String, usize)>,
}

#[derive(Debug)]
pub(crate) struct DirectedLine {
    pub tail: String,
    pub head: String,
    pub weight: Option<f64>,
    pub line: usize,
}

fn syntax(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Syntax { line, msg: msg.into() }
}

impl GraphFile {
    fn mention(&mut self, label: &str) {
        if !self.nodes.iter().any(|n| n == label) {
            self.nodes.push(label.to_string());
        }
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut out = GraphFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["node", label] => {
                    check_label(label, lineno)?;
                    out.mention(label);
                }
                ["var", label, value] => {
                    check_label(label, lineno)?;
                    let v: f64 = value
                        .parse()
                        .map_err(|_| syntax(lineno, format!("invalid variance {value:?}")))?;
                    out.var_lines.push((label.to_string(), v, lineno));
                }
                ["dist", label, family] => {
                    check_label(label, lineno)?;
                    out.dist_lines.push((label.to_string(), family.to_string(), lineno));
                }
                [a, "--", b] => {
                    check_label(a, lineno)?;
                    check_label(b, lineno)?;
                    out.mention(a);
                    out.mention(b);
                    out.undirected.push((a.to_string(), b.to_string()));
                }
                [a, "->", b, rest @ ..] => {
                    check_label(a, lineno)?;
                    check_label(b, lineno)?;
                    out.mention(a);
                    out.mention(b);
                    let weight = parse_weight(rest, lineno)?;
                    out.directed.push(DirectedLine {
                        tail: a.to_string(),
                        head: b.to_string(),
                        weight,
                        line: lineno,
                    });
                }
                _ => {
                    return Err(syntax(
                        lineno,
                        format!("cannot parse {line:?}; expected `node X`, `X -> Y [: w]`, `X -- Y`, `var X v` or `dist X f`"),
                    ))
                }
            }
        }
        Ok(out)
    }

    pub fn into_pdag(self) -> Result<Pdag, GraphError> {
        let mut g = Pdag::with_nodes(&self.nodes)?;
        for d in &self.directed {
            let t = g.node_id(&d.tail).expect("mentioned");
            let h = g.node_id(&d.head).expect("mentioned");
            g.add_directed(t, h).map_err(|e| match e {
                GraphError::DuplicateEdge(a, b) if self.declares_both_kinds(&a, &b) => {
                    GraphError::ConflictingEdge(a, b)
                }
                other => other,
            })?;
        }
        for (a, b) in &self.undirected {
            let ai = g.node_id(a).expect("mentioned");
            let bi = g.node_id(b).expect("mentioned");
            g.add_undirected(ai, bi).map_err(|e| match e {
                GraphError::DuplicateEdge(a, b) if self.declares_both_kinds(&a, &b) => {
                    GraphError::ConflictingEdge(a, b)
                }
                other => other,
            })?;
        }
        g.check_acyclic()?;
        Ok(g)
    }

    /// True when the pair appears as both a directed and an undirected line.
    fn declares_both_kinds(&self, a: &str, b: &str) -> bool {
        let dir = self
            .directed
            .iter()
            .any(|d| (d.tail == a && d.head == b) || (d.tail == b && d.head == a));
        let und = self
            .undirected
            .iter()
            .any(|(x, y)| (x == a && y == b) || (x == b && y == a));
        dir && und
    }
}

fn check_label(label: &str, line: usize) -> Result<(), GraphError> {
    if super::valid_label(label) {
        Ok(())
    } else {
        Err(syntax(line, format!("invalid node label {label:?}")))
    }
}

fn parse_weight(rest: &[&str], line: usize) -> Result<Option<f64>, GraphError> {
    match rest {
        [] => Ok(None),
        [":", w] => w
            .parse()
            .map(Some)
            .map_err(|_| syntax(line, format!("invalid edge weight {w:?}"))),
        _ => Err(syntax(line, format!("trailing tokens {:?}", rest.join(" ")))),
    }
}

/// Parses the graph file format, ignoring SEM-only annotations.
pub fn parse_graph(text: &str) -> Result<Pdag, GraphError> {
    GraphFile::parse(text)?.into_pdag()
}
