//! Exact population-level computations for causal linear models: covariance
//! matrices, population regressions, total effects and asymptotic variances
//! of adjusted OLS total-effect estimators.
//!
//! All quantities here are functions of the covariance matrix alone, so the
//! error distribution families carried by [`LinearSem`] play no role in this
//! module; they only drive sampling in [`crate::estimate`].

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::Float;
use thiserror::Error;

use crate::adjust::{self, AdjustError};
use crate::graph::{GraphError, NodeId, NodeSet, Pdag};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SemError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error("SEM graph must be a DAG (undirected edge between {0:?} and {1:?})")]
    NotADag(String, String),
    #[error("line {line}: directed edge {tail} -> {head} needs a weight in a SEM file")]
    MissingWeight { tail: String, head: String, line: usize },
    #[error("missing `var` line for node {0:?}")]
    MissingVariance(String),
    #[error("line {line}: duplicate `{kind}` line for node {node:?}")]
    DuplicateSpec { kind: &'static str, node: String, line: usize },
    #[error("error variance of {node:?} must be positive, got {value}")]
    NonPositiveVariance { node: String, value: f64 },
    #[error("line {line}: unknown error family {name:?} (gaussian|uniform|logistic|student_t5)")]
    UnknownFamily { name: String, line: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("covariance matrix is not symmetric")]
    NotSymmetric,
    #[error("{0} is not a valid adjustment set: {1}")]
    InvalidAdjustmentSet(String, String),
    #[error("label sets must be disjoint; {0:?} repeats")]
    OverlappingLabels(String),
    #[error("regressor set must not be empty")]
    EmptyRegressors,
    #[error("{0:?} may not appear in the excluded set")]
    ExcludedEndpoint(String),
}

/// Zero-mean error distribution families for sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrFamily {
    Gaussian,
    Uniform,
    Logistic,
    StudentT5,
}

impl ErrFamily {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gaussian" => ErrFamily::Gaussian,
            "uniform" => ErrFamily::Uniform,
            "logistic" => ErrFamily::Logistic,
            "student_t5" => ErrFamily::StudentT5,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrFamily::Gaussian => "gaussian",
            ErrFamily::Uniform => "uniform",
            ErrFamily::Logistic => "logistic",
            ErrFamily::StudentT5 => "student_t5",
        }
    }
}

/// Causal linear model: a DAG, one coefficient per directed edge, and a
/// positive error variance (plus sampling family) per node.
#[derive(Debug, Clone)]
pub struct LinearSem<F> {
    graph: Pdag,
    coeff: HashMap<(u32, u32), F>,
    err_var: Vec<F>,
    family: Vec<ErrFamily>,
    topo: Vec<NodeId>,
}

impl<F: Scalar> LinearSem<F> {
    /// Validates that `coeff` is keyed exactly by the directed edges of a
    /// DAG and that variances are positive. Families default to gaussian.
    pub fn new(
        graph: Pdag,
        coeff: HashMap<(NodeId, NodeId), F>,
        err_var: HashMap<NodeId, F>,
        family: HashMap<NodeId, ErrFamily>,
    ) -> Result<Self, SemError> {
        if let Some((a, b)) = graph.undirected_edges().next() {
            return Err(SemError::NotADag(graph.label(a).to_string(), graph.label(b).to_string()));
        }
        let mut coeffs = HashMap::new();
        for (t, h) in graph.directed_edges() {
            let alpha = coeff.get(&(t, h)).copied().ok_or_else(|| SemError::MissingWeight {
                tail: graph.label(t).to_string(),
                head: graph.label(h).to_string(),
                line: 0,
            })?;
            coeffs.insert((t.0, h.0), alpha);
        }
        let mut vars = Vec::with_capacity(graph.n());
        let mut fams = Vec::with_capacity(graph.n());
        for v in graph.node_ids() {
            let var = err_var
                .get(&v)
                .copied()
                .ok_or_else(|| SemError::MissingVariance(graph.label(v).to_string()))?;
            if var <= F::zero() {
                return Err(SemError::NonPositiveVariance {
                    node: graph.label(v).to_string(),
                    value: var.to_f64().unwrap_or(f64::NAN),
                });
            }
            vars.push(var);
            fams.push(family.get(&v).copied().unwrap_or(ErrFamily::Gaussian));
        }
        let topo = topological_order(&graph);
        Ok(LinearSem { graph, coeff: coeffs, err_var: vars, family: fams, topo })
    }

    /// Parses the SEM file format: the graph format with a mandatory weight
    /// on every directed edge, `var` lines for every node and optional
    /// `dist` lines.
    pub fn parse(text: &str) -> Result<Self, SemError> {
        let file = crate::graph::parse::GraphFile::parse(text)?;
        for d in &file.directed {
            if d.weight.is_none() {
                return Err(SemError::MissingWeight {
                    tail: d.tail.clone(),
                    head: d.head.clone(),
                    line: d.line,
                });
            }
        }
        let weights: Vec<(String, String, f64)> =
            file.directed.iter().map(|d| (d.tail.clone(), d.head.clone(), d.weight.unwrap())).collect();
        let var_lines = file.var_lines.clone();
        let dist_lines = file.dist_lines.clone();
        let graph = file.into_pdag()?;

        let mut coeff = HashMap::new();
        for (t, h, w) in weights {
            let t = graph.node_id(&t).expect("edge endpoint");
            let h = graph.node_id(&h).expect("edge endpoint");
            coeff.insert((t, h), F::of(w));
        }
        let mut err_var: HashMap<NodeId, F> = HashMap::new();
        for (node, value, line) in var_lines {
            let id = graph.node_id(&node).ok_or_else(|| SemError::UnknownLabel(node.clone()))?;
            if err_var.insert(id, F::of(value)).is_some() {
                return Err(SemError::DuplicateSpec { kind: "var", node, line });
            }
        }
        let mut family: HashMap<NodeId, ErrFamily> = HashMap::new();
        for (node, name, line) in dist_lines {
            let id = graph.node_id(&node).ok_or_else(|| SemError::UnknownLabel(node.clone()))?;
            let fam = ErrFamily::parse(&name).ok_or(SemError::UnknownFamily { name, line })?;
            if family.insert(id, fam).is_some() {
                return Err(SemError::DuplicateSpec { kind: "dist", node, line });
            }
        }
        Self::new(graph, coeff, err_var, family)
    }

    pub fn graph(&self) -> &Pdag {
        &self.graph
    }

    pub fn coefficient(&self, tail: NodeId, head: NodeId) -> Option<F> {
        self.coeff.get(&(tail.0, head.0)).copied()
    }

    pub fn err_var(&self, v: NodeId) -> F {
        self.err_var[v.idx()]
    }

    pub fn family(&self, v: NodeId) -> ErrFamily {
        self.family[v.idx()]
    }

    pub(crate) fn topo(&self) -> &[NodeId] {
        &self.topo
    }

    /// Exact covariance of all variables: with edge-coefficient matrix `A`
    /// and error-variance diagonal `D`, `Σ = (I − A)⁻¹ D (I − A)⁻ᵀ`,
    /// evaluated by forward substitution along a topological order.
    pub fn covariance(&self) -> CovMatrix<F> {
        let n = self.graph.n();
        // t[v] = row v of (I − A)⁻¹, i.e. V_v = Σ_k t[v][k] ε_k.
        let mut t = vec![vec![F::zero(); n]; n];
        for &v in &self.topo {
            t[v.idx()][v.idx()] = F::one();
            let parents: Vec<NodeId> = self.graph.parents_of(v).collect();
            for p in parents {
                let alpha = self.coeff[&(p.0, v.0)];
                let parent_row = t[p.idx()].clone();
                let row = &mut t[v.idx()];
                for k in 0..n {
                    row[k] += alpha * parent_row[k];
                }
            }
        }
        let mut m = DMatrix::<F>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = F::zero();
                for k in 0..n {
                    acc += t[i][k] * self.err_var[k] * t[j][k];
                }
                m[(i, j)] = acc;
                m[(j, i)] = acc;
            }
        }
        CovMatrix {
            labels: self.graph.node_labels().to_vec(),
            index: label_index(self.graph.node_labels()),
            m,
        }
    }
}

fn topological_order(g: &Pdag) -> Vec<NodeId> {
    let n = g.n();
    let mut indeg: Vec<usize> = g.node_ids().map(|v| g.parents_of(v).count()).collect();
    let mut queue: std::collections::VecDeque<NodeId> =
        g.node_ids().filter(|v| indeg[v.idx()] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for c in g.children_of(v) {
            indeg[c.idx()] -= 1;
            if indeg[c.idx()] == 0 {
                queue.push_back(c);
            }
        }
    }
    debug_assert_eq!(order.len(), n, "graph is acyclic by construction");
    order
}

fn label_index(labels: &[String]) -> HashMap<String, usize> {
    labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect()
}

/// Symmetric positive-definite covariance matrix indexed by node labels.
#[derive(Debug, Clone)]
pub struct CovMatrix<F> {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    m: DMatrix<F>,
}

/// Relative pivot tolerance of the positive-definiteness check.
const PD_TOL: f64 = 1e-12;

impl<F: Scalar> CovMatrix<F> {
    /// Wraps a raw matrix, checking symmetry (to `1e-12` of the largest
    /// entry) and positive definiteness.
    pub fn new(labels: Vec<String>, m: DMatrix<F>) -> Result<Self, SemError> {
        let n = labels.len();
        assert_eq!(m.nrows(), n);
        assert_eq!(m.ncols(), n);
        let mut scale = F::zero();
        for v in m.iter() {
            scale = Float::max(scale, Float::abs(*v));
        }
        let tol = F::of(1e-12) * Float::max(scale, F::one());
        for i in 0..n {
            for j in 0..i {
                if Float::abs(m[(i, j)] - m[(j, i)]) > tol {
                    return Err(SemError::NotSymmetric);
                }
            }
        }
        let cov = CovMatrix { index: label_index(&labels), labels, m };
        if cholesky_lower(&cov.m).is_none() {
            return Err(SemError::NotPositiveDefinite);
        }
        Ok(cov)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<F> {
        &self.m
    }

    pub fn pos(&self, label: &str) -> Result<usize, SemError> {
        self.index.get(label).copied().ok_or_else(|| SemError::UnknownLabel(label.to_string()))
    }

    fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>, SemError> {
        labels.iter().map(|l| self.pos(l.as_ref())).collect()
    }

    fn sub(&self, rows: &[usize], cols: &[usize]) -> DMatrix<F> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.m[(rows[i], cols[j])])
    }

    /// Conditional covariance `Σ_ss.t = Σ_ss − Σ_st Σ_tt⁻¹ Σ_ts` via a
    /// Cholesky solve; `t` may be empty.
    pub fn conditional_cov<S: AsRef<str>, T: AsRef<str>>(
        &self,
        s: &[S],
        t: &[T],
    ) -> Result<DMatrix<F>, SemError> {
        let si = self.positions(s)?;
        let ti = self.positions(t)?;
        check_disjoint(&si, &ti, &self.labels)?;
        let sss = self.sub(&si, &si);
        if ti.is_empty() {
            return Ok(sss);
        }
        let stt = self.sub(&ti, &ti);
        let sst = self.sub(&si, &ti);
        let chol = cholesky_lower(&stt).ok_or(SemError::NotPositiveDefinite)?;
        // x = Σ_tt⁻¹ Σ_ts
        let x = cholesky_solve(&chol, &sst.transpose());
        Ok(&sss - &sst * x)
    }

    /// Scalar conditional variance `σ_ss.t`.
    pub fn conditional_var<T: AsRef<str>>(&self, s: &str, t: &[T]) -> Result<F, SemError> {
        let m = self.conditional_cov(&[s], t)?;
        Ok(m[(0, 0)])
    }

    /// Population least-squares coefficients `β = Σ_yx Σ_xx⁻¹` of
    /// `targets` on `regressors`.
    pub fn regression<S: AsRef<str>, T: AsRef<str>>(
        &self,
        targets: &[S],
        regressors: &[T],
    ) -> Result<EffectMatrix<F>, SemError> {
        if regressors.is_empty() {
            return Err(SemError::EmptyRegressors);
        }
        let yi = self.positions(targets)?;
        let xi = self.positions(regressors)?;
        check_disjoint(&yi, &xi, &self.labels)?;
        let sxx = self.sub(&xi, &xi);
        let sxy = self.sub(&xi, &yi);
        let chol = cholesky_lower(&sxx).ok_or(SemError::NotPositiveDefinite)?;
        let beta_t = cholesky_solve(&chol, &sxy);
        Ok(EffectMatrix {
            rows: targets.iter().map(|l| l.as_ref().to_string()).collect(),
            cols: regressors.iter().map(|l| l.as_ref().to_string()).collect(),
            m: beta_t.transpose(),
        })
    }
}

fn check_disjoint(a: &[usize], b: &[usize], labels: &[String]) -> Result<(), SemError> {
    for i in a {
        if b.contains(i) {
            return Err(SemError::OverlappingLabels(labels[*i].clone()));
        }
    }
    Ok(())
}

/// Lower Cholesky factor with a relative pivot tolerance; `None` when some
/// pivot falls below `PD_TOL` times the largest diagonal entry.
pub(crate) fn cholesky_lower<F: Scalar>(m: &DMatrix<F>) -> Option<DMatrix<F>> {
    let n = m.nrows();
    if n == 0 {
        return Some(m.clone());
    }
    let mut max_diag = F::zero();
    for i in 0..n {
        max_diag = Float::max(max_diag, Float::abs(m[(i, i)]));
    }
    let tol = F::of(PD_TOL) * Float::max(max_diag, F::of(f64::MIN_POSITIVE));
    let mut l = DMatrix::<F>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return None;
        }
        let dj = Float::sqrt(d);
        l[(j, j)] = dj;
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some(l)
}

/// Solves `M X = B` given the lower Cholesky factor of `M`.
pub(crate) fn cholesky_solve<F: Scalar>(l: &DMatrix<F>, b: &DMatrix<F>) -> DMatrix<F> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut v = x[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for k in i + 1..n {
                v -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    x
}

/// `k_y × k_x` matrix of effects, estimates or asymptotic variances,
/// indexed by target and regressor labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectMatrix<F> {
    rows: Vec<String>,
    cols: Vec<String>,
    m: DMatrix<F>,
}

impl<F: Scalar> EffectMatrix<F> {
    pub fn new(rows: Vec<String>, cols: Vec<String>, m: DMatrix<F>) -> Self {
        assert_eq!(m.nrows(), rows.len());
        assert_eq!(m.ncols(), cols.len());
        EffectMatrix { rows, cols, m }
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn matrix(&self) -> &DMatrix<F> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> F {
        self.m[(i, j)]
    }

    pub fn get(&self, row: &str, col: &str) -> Option<F> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.m[(i, j)])
    }
}

fn to_sets<F: Scalar>(
    sem: &LinearSem<F>,
    x: &NodeSet,
    y: &NodeSet,
) -> Result<(Vec<String>, Vec<String>), SemError> {
    sem.graph.require_disjoint(&[x, y])?;
    let xs = x.iter().map(|v| sem.graph.label(v).to_string()).collect();
    let ys = y.iter().map(|v| sem.graph.label(v).to_string()).collect();
    Ok((xs, ys))
}

/// Total effect of `x` on `y`: `(τ)_{j,i}` sums the products of edge
/// coefficients over proper causal paths from `x_i` to `y_j`, i.e. paths
/// avoiding the other x-nodes. Zero whenever `y_j` is not a descendant.
pub fn total_effect<F: Scalar>(
    sem: &LinearSem<F>,
    x: &NodeSet,
    y: &NodeSet,
) -> Result<EffectMatrix<F>, SemError> {
    let (xs, ys) = to_sets(sem, x, y)?;
    let mut m = DMatrix::<F>::zeros(y.len(), x.len());
    for (i, xi) in x.iter().enumerate() {
        let excluded: Vec<bool> =
            sem.graph.node_ids().map(|v| v != xi && x.contains(v)).collect();
        let e = path_sum(sem, xi, &excluded);
        for (j, yj) in y.iter().enumerate() {
            m[(j, i)] = e[yj.idx()];
        }
    }
    Ok(EffectMatrix { rows: ys, cols: xs, m })
}

/// Partial total effect of `x` on `y`: sums over causal paths containing no
/// node of `z`.
pub fn partial_total_effect<F: Scalar>(
    sem: &LinearSem<F>,
    x: NodeId,
    y: NodeId,
    z: &NodeSet,
) -> Result<F, SemError> {
    if z.contains(x) {
        return Err(SemError::ExcludedEndpoint(sem.graph.label(x).to_string()));
    }
    if z.contains(y) {
        return Err(SemError::ExcludedEndpoint(sem.graph.label(y).to_string()));
    }
    let excluded = z.mask(sem.graph.n());
    let e = path_sum(sem, x, &excluded);
    Ok(e[y.idx()])
}

/// Sum of edge-coefficient products over directed paths from `src` that
/// avoid `excluded`, by dynamic programming along the topological order.
fn path_sum<F: Scalar>(sem: &LinearSem<F>, src: NodeId, excluded: &[bool]) -> Vec<F> {
    let mut e = vec![F::zero(); sem.graph.n()];
    e[src.idx()] = F::one();
    for &v in sem.topo() {
        if v == src || excluded[v.idx()] {
            continue;
        }
        let mut acc = F::zero();
        for p in sem.graph.parents_of(v) {
            if !excluded[p.idx()] {
                acc += sem.coeff[&(p.0, v.0)] * e[p.idx()];
            }
        }
        e[v.idx()] = acc;
    }
    e
}

/// Exact asymptotic variances of the adjusted OLS estimator: entry `(j, i)`
/// is `σ_{y_j y_j.xz} / σ_{x_i x_i.x_{−i}z}`.
///
/// `z` must be a valid adjustment set relative to `(x, y)`; without that
/// the formula has no guarantee once errors are non-Gaussian. Use
/// [`avar_unchecked`] to bypass the check.
pub fn avar<F: Scalar>(
    sem: &LinearSem<F>,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<EffectMatrix<F>, SemError> {
    sem.graph.require_disjoint(&[x, y, z])?;
    let decision = adjust::is_valid_adjustment(&sem.graph, x, y, z)?;
    if !decision.valid() {
        return Err(SemError::InvalidAdjustmentSet("z".into(), decision.describe(&sem.graph)));
    }
    avar_unchecked(sem, x, y, z)
}

/// [`avar`] without the validity check. For conditioning sets that are not
/// valid adjustment sets the returned values are not asymptotic variances
/// of a total-effect estimator unless the errors are Gaussian.
pub fn avar_unchecked<F: Scalar>(
    sem: &LinearSem<F>,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<EffectMatrix<F>, SemError> {
    sem.graph.require_disjoint(&[x, y, z])?;
    let (xs, ys) = to_sets(sem, x, y)?;
    let zs: Vec<String> = z.iter().map(|v| sem.graph.label(v).to_string()).collect();
    let cov = sem.covariance();
    avar_from_cov(&cov, &xs, &ys, &zs)
}

/// Asymptotic-variance matrix computed directly from a covariance matrix.
pub fn avar_from_cov<F: Scalar>(
    cov: &CovMatrix<F>,
    x: &[String],
    y: &[String],
    z: &[String],
) -> Result<EffectMatrix<F>, SemError> {
    let mut m = DMatrix::<F>::zeros(y.len(), x.len());
    let mut xz: Vec<String> = x.to_vec();
    xz.extend(z.iter().cloned());
    for (j, yj) in y.iter().enumerate() {
        let num = cov.conditional_var(yj, &xz)?;
        for (i, xi) in x.iter().enumerate() {
            let mut rest: Vec<String> = x.iter().filter(|l| *l != xi).cloned().collect();
            rest.extend(z.iter().cloned());
            let den = cov.conditional_var(xi, &rest)?;
            m[(j, i)] = num / den;
        }
    }
    Ok(EffectMatrix { rows: y.to_vec(), cols: x.to_vec(), m })
}
