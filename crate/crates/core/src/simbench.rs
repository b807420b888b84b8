//! Randomized benchmark comparing the mean squared error of OLS
//! total-effect estimates across adjustment-set choices: the empty set
//! (`em`), the parents of x minus forbidden nodes (`pa`), the `Adjust` set
//! (`adj`) and the optimal set (`O`), all computed from the true DAG.
//!
//! A run is a pure function of its [`SimConfig`] (seed included): graph
//! units own disjoint RNG streams and the output rows are sorted, so
//! repeated runs emit byte-identical CSV regardless of thread scheduling.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adjust::{self, AdjustError};
use crate::estimate::{self, EstimateError, StreamRng};
use crate::graph::{ancestry, cpdag_of_dag, GraphError, NodeId, NodeSet, Pdag, Relation};
use crate::sem::{ErrFamily, LinearSem, SemError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("unit {unit}: retry budget exhausted while drawing (x, y)")]
    RetryBudget { unit: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphType {
    ErdosRenyi,
    PowerLaw,
}

impl GraphType {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphType::ErdosRenyi => "erdos_renyi",
            GraphType::PowerLaw => "power_law",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "erdos_renyi" => GraphType::ErdosRenyi,
            "power_law" => GraphType::PowerLaw,
            _ => return None,
        })
    }
}

/// Adjustment-set arms of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Em,
    Pa,
    Adj,
    O,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Em, Estimator::Pa, Estimator::Adj, Estimator::O];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Em => "em",
            Estimator::Pa => "pa",
            Estimator::Adj => "adj",
            Estimator::O => "O",
        }
    }
}

/// Benchmark configuration; the paper-style defaults are in `Default`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_graphs: usize,
    pub nodes: Vec<usize>,
    pub expected_nbr: Vec<f64>,
    pub graph_types: Vec<GraphType>,
    pub sample_sizes: Vec<usize>,
    /// Probabilities of |x| = 1, 2, 3.
    pub x_size_probs: [f64; 3],
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_graphs: 100,
            nodes: vec![10, 20, 50, 100],
            expected_nbr: vec![2.0, 3.0, 4.0, 5.0],
            graph_types: vec![GraphType::ErdosRenyi, GraphType::PowerLaw],
            sample_sizes: vec![125, 500, 2000, 10000],
            x_size_probs: [0.5, 0.25, 0.25],
            replicates: 100,
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Parses `key=value` lines mirroring the struct fields; unset keys keep
    /// their defaults. Lists are comma separated.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let bad = |msg: String| SimError::Config { line: lineno, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_graphs" => cfg.n_graphs = parse_one(value, lineno)?,
                "nodes" => cfg.nodes = parse_list(value, lineno)?,
                "expected_nbr" => cfg.expected_nbr = parse_list(value, lineno)?,
                "graph_types" => {
                    cfg.graph_types = value
                        .split(',')
                        .map(|s| {
                            GraphType::parse(s.trim())
                                .ok_or_else(|| bad(format!("unknown graph type {s:?}")))
                        })
                        .collect::<Result<_, _>>()?;
                }
                "sample_sizes" => cfg.sample_sizes = parse_list(value, lineno)?,
                "x_size_probs" => {
                    let v: Vec<f64> = parse_list(value, lineno)?;
                    if v.len() != 3 {
                        return Err(bad("x_size_probs needs three values".into()));
                    }
                    cfg.x_size_probs = [v[0], v[1], v[2]];
                }
                "replicates" => cfg.replicates = parse_one(value, lineno)?,
                "seed" => cfg.seed = parse_one(value, lineno)?,
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::BadParams(m.into()));
        if self.n_graphs == 0 || self.replicates == 0 {
            return bad("n_graphs and replicates must be positive");
        }
        if self.nodes.is_empty()
            || self.expected_nbr.is_empty()
            || self.graph_types.is_empty()
            || self.sample_sizes.is_empty()
        {
            return bad("choice sets must be non-empty");
        }
        if self.nodes.iter().any(|&p| p < 2) {
            return bad("graphs need at least two nodes");
        }
        let sum: f64 = self.x_size_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.x_size_probs.iter().any(|p| *p < 0.0) {
            return bad("x_size_probs must be non-negative and sum to 1");
        }
        if self.replicates as u64 >= REPLICATE_STREAMS - 1 {
            return bad("too many replicates per unit");
        }
        for &p in &self.nodes {
            if self.expected_nbr.iter().any(|&d| d <= 0.0 || d >= p as f64) {
                return bad("expected neighborhood size must be in (0, p)");
            }
        }
        Ok(())
    }
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, SimError> {
    value.parse().map_err(|_| SimError::Config { line, msg: format!("invalid value {value:?}") })
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>, SimError> {
    value.split(',').map(|s| parse_one(s.trim(), line)).collect()
}

/// Random DAG on `p` nodes labelled `V1..Vp` with expected neighborhood
/// size `expected_nbr`.
///
/// Erdős–Rényi: each unordered pair gets an edge independently with
/// probability `expected_nbr / (p − 1)`, oriented by a uniformly random
/// topological order. Power law: preferential attachment adding
/// `round(expected_nbr / 2)` edges per arriving node, oriented old → new.
pub fn random_dag(
    p: usize,
    expected_nbr: f64,
    graph_type: GraphType,
    rng: &mut StreamRng,
) -> Result<Pdag, SimError> {
    if p < 2 || expected_nbr <= 0.0 || expected_nbr >= p as f64 {
        return Err(SimError::BadParams(format!(
            "need p >= 2 and 0 < expected_nbr < p, got p = {p}, expected_nbr = {expected_nbr}"
        )));
    }
    let labels: Vec<String> = (1..=p).map(|i| format!("V{i}")).collect();
    let rng = rng.rng();
    let mut directed: Vec<(String, String)> = Vec::new();
    match graph_type {
        GraphType::ErdosRenyi => {
            let prob = expected_nbr / (p - 1) as f64;
            // Random topological order via Fisher-Yates.
            let mut order: Vec<usize> = (0..p).collect();
            for i in (1..p).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            for i in 0..p {
                for j in i + 1..p {
                    if rng.random::<f64>() < prob {
                        directed.push((labels[order[i]].clone(), labels[order[j]].clone()));
                    }
                }
            }
        }
        GraphType::PowerLaw => {
            let m = ((expected_nbr / 2.0).round() as usize).max(1);
            // Urn of node indices weighted by degree, seeded with one token
            // per node so isolated nodes stay reachable.
            let mut urn: Vec<usize> = (0..p).collect();
            for t in 1..p {
                let k = m.min(t);
                let mut targets: Vec<usize> = Vec::with_capacity(k);
                while targets.len() < k {
                    let pick = urn[rng.random_range(0..urn.len())];
                    if pick < t && !targets.contains(&pick) {
                        targets.push(pick);
                    }
                }
                for &old in &targets {
                    directed.push((labels[old].clone(), labels[t].clone()));
                    urn.push(old);
                    urn.push(t);
                }
            }
        }
    }
    Ok(Pdag::build(&labels, &directed, &[])?)
}

/// Draws `(x, y)` with `|x|` distributed per `x_size_probs`, `y` a common
/// descendant of all x-nodes, and a valid adjustment set existing in both
/// the DAG and its CPDAG. `None` when the try budget runs out.
pub fn draw_xy(
    g: &Pdag,
    cpdag: &Pdag,
    x_size_probs: [f64; 3],
    rng: &mut StreamRng,
    max_tries: usize,
) -> Result<Option<(NodeSet, NodeId)>, SimError> {
    let p = g.n();
    for _ in 0..max_tries {
        let u: f64 = rng.rng().random();
        let kx = if u < x_size_probs[0] {
            1
        } else if u < x_size_probs[0] + x_size_probs[1] {
            2
        } else {
            3
        };
        if kx + 1 > p {
            continue;
        }
        let mut picks: Vec<u32> = Vec::with_capacity(kx);
        while picks.len() < kx {
            let c = rng.rng().random_range(0..p) as u32;
            if !picks.contains(&c) {
                picks.push(c);
            }
        }
        let x: NodeSet = picks.iter().map(|&i| NodeId(i)).collect();
        // Common descendants of every x-node, excluding x itself.
        let mut common: Option<Vec<bool>> = None;
        for xi in x.iter() {
            let single: NodeSet = [xi].into_iter().collect();
            let de = ancestry(g, &single, Relation::Descendants).mask(p);
            common = Some(match common {
                None => de,
                Some(prev) => prev.iter().zip(&de).map(|(a, b)| *a && *b).collect(),
            });
        }
        let mut pool: Vec<NodeId> = g
            .node_ids()
            .filter(|v| common.as_ref().unwrap()[v.idx()] && !x.contains(*v))
            .collect();
        if pool.is_empty() {
            continue;
        }
        pool.sort_unstable();
        let y = pool[rng.rng().random_range(0..pool.len())];
        let ys: NodeSet = [y].into_iter().collect();
        if !adjust::exists_vas(g, &x, &ys)? {
            continue;
        }
        let xc = NodeSet::from_labels(cpdag, &x.labels(g))?;
        let yc = NodeSet::from_labels(cpdag, &[g.label(y)])?;
        if !adjust::exists_vas(cpdag, &xc, &yc)? {
            continue;
        }
        return Ok(Some((x, y)));
    }
    Ok(None)
}

/// One benchmark row: the MSE of one estimator for one x-component.
#[derive(Debug, Clone)]
pub struct SimEntry {
    pub estimator: Estimator,
    pub xi_label: String,
    pub mse: f64,
    /// `mse(O) / mse(this estimator)` for the same x-component.
    pub ratio_vs_o: f64,
}

/// Results for one random graph/model unit.
#[derive(Debug, Clone)]
pub struct SimRecord {
    pub graph_id: usize,
    pub p: usize,
    pub nbr: f64,
    pub graph_type: GraphType,
    pub n: usize,
    pub kx: usize,
    pub family: ErrFamily,
    pub x_labels: Vec<String>,
    pub y_label: String,
    pub entries: Vec<SimEntry>,
}

/// Full output of a run.
#[derive(Debug)]
pub struct SimOutput {
    pub records: Vec<SimRecord>,
    pub csv: String,
    pub summary: String,
}

const REPLICATE_STREAMS: u64 = 1 << 21;
const XY_TRIES: usize = 50;
const GRAPH_TRIES: usize = 100;

/// Runs the benchmark. Deterministic given the config.
pub fn run_sim(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut records: Vec<SimRecord> = (0..cfg.n_graphs)
        .into_par_iter()
        .map(|unit| run_unit(cfg, unit))
        .collect::<Result<_, _>>()?;
    records.sort_by_key(|r| r.graph_id);
    let csv = render_csv(&records);
    let summary = render_summary(&records);
    Ok(SimOutput { records, csv, summary })
}

fn choose<'a, T>(items: &'a [T], rng: &mut StreamRng) -> &'a T {
    &items[rng.rng().random_range(0..items.len())]
}

fn draw_family(rng: &mut StreamRng) -> ErrFamily {
    let u: f64 = rng.rng().random();
    if u < 0.5 {
        ErrFamily::Gaussian
    } else if u < 2.0 / 3.0 {
        ErrFamily::Logistic
    } else if u < 5.0 / 6.0 {
        ErrFamily::Uniform
    } else {
        ErrFamily::StudentT5
    }
}

fn run_unit(cfg: &SimConfig, unit: usize) -> Result<SimRecord, SimError> {
    let base_stream = (unit as u64) * REPLICATE_STREAMS;
    let mut rng = StreamRng::new(cfg.seed, base_stream);

    for _attempt in 0..GRAPH_TRIES {
        let p = *choose(&cfg.nodes, &mut rng);
        let nbr = *choose(&cfg.expected_nbr, &mut rng);
        let graph_type = *choose(&cfg.graph_types, &mut rng);
        let n = *choose(&cfg.sample_sizes, &mut rng);
        let family = draw_family(&mut rng);
        let g = random_dag(p, nbr, graph_type, &mut rng)?;
        let cpdag = cpdag_of_dag(&g)?;
        let Some((x, y)) = draw_xy(&g, &cpdag, cfg.x_size_probs, &mut rng, XY_TRIES)? else {
            continue;
        };
        let ys: NodeSet = [y].into_iter().collect();

        // Model: coefficients uniform on [-2, -0.1] ∪ [0.1, 2], error
        // variances uniform on [0.5, 1.5], one family per model.
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
            fam.insert(v, family);
        }
        let sem = LinearSem::<f64>::new(g.clone(), coeff, err_var, fam)?;

        let truth = crate::sem::total_effect(&sem, &x, &ys)?;

        let forb = adjust::forbidden(&g, &x, &ys)?;
        let pa_set = ancestry(&g, &x, Relation::Parents).minus(&forb);
        let adj_set = adjust::adjust_set(&g, &x, &ys)?;
        let o_set = adjust::optimal_set(&g, &x, &ys)?;
        if x.len() == 1 {
            // pa(x) is itself a valid adjustment set for singleton x.
            debug_assert!(adjust::is_valid_adjustment(&g, &x, &ys, &pa_set)?.valid());
        }
        let arms: [(Estimator, &NodeSet); 4] = [
            (Estimator::Em, &NodeSet::new()),
            (Estimator::Pa, &pa_set),
            (Estimator::Adj, &adj_set),
            (Estimator::O, &o_set),
        ];

        let kx = x.len();
        let mut sq_err = vec![[0.0f64; 4]; kx];
        for r in 0..cfg.replicates {
            let mut rep_rng = StreamRng::new(cfg.seed, base_stream + 1 + r as u64);
            let data = estimate::sample(&sem, n, &mut rep_rng);
            for (a, (_, z)) in arms.iter().enumerate() {
                let est = estimate::ols_total_effect_sets(&data, &g, &x, &ys, z)?;
                for i in 0..kx {
                    let d = est.entry(0, i) - truth.entry(0, i);
                    sq_err[i][a] += d * d;
                }
            }
        }
        let reps = cfg.replicates as f64;
        let mut entries = Vec::with_capacity(4 * kx);
        for (a, (est, _)) in arms.iter().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                let mse = sq_err[i][a] / reps;
                let mse_o = sq_err[i][3] / reps;
                entries.push(SimEntry {
                    estimator: *est,
                    xi_label: g.label(xi).to_string(),
                    mse,
                    ratio_vs_o: mse_o / mse,
                });
            }
        }
        return Ok(SimRecord {
            graph_id: unit,
            p,
            nbr,
            graph_type,
            n,
            kx,
            family,
            x_labels: x.labels(&g).iter().map(|s| s.to_string()).collect(),
            y_label: g.label(y).to_string(),
            entries,
        });
    }
    Err(SimError::RetryBudget { unit })
}

fn render_csv(records: &[SimRecord]) -> String {
    let mut out = String::from("graph_id,p,nbr,graph_type,n,kx,error_family,estimator,xi_label,mse,ratio_vs_O\n");
    for r in records {
        for e in &r.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.graph_id,
                r.p,
                r.nbr,
                r.graph_type.as_str(),
                r.n,
                r.kx,
                r.family.as_str(),
                e.estimator.as_str(),
                e.xi_label,
                e.mse,
                e.ratio_vs_o
            ));
        }
    }
    out
}

/// Ratios `mse(O) / mse(alternative)` of one alternative arm.
pub fn ratios_for(records: &[SimRecord], estimator: Estimator) -> Vec<f64> {
    records
        .iter()
        .flat_map(|r| r.entries.iter())
        .filter(|e| e.estimator == estimator)
        .map(|e| e.ratio_vs_o)
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect()
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn render_summary(records: &[SimRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!("records={}\n", records.len()));
    for est in [Estimator::Em, Estimator::Pa, Estimator::Adj] {
        let mut ratios = ratios_for(records, est);
        let geo = geometric_mean(&ratios);
        let frac_hi = ratios.iter().filter(|r| **r > 1.5).count() as f64
            / ratios.len().max(1) as f64;
        let med = median(&mut ratios);
        let name = est.as_str();
        out.push_str(&format!("geomean_ratio_O_vs_{name}={geo}\n"));
        out.push_str(&format!("median_ratio_O_vs_{name}={med}\n"));
        out.push_str(&format!("frac_ratio_gt_1.5_{name}={frac_hi}\n"));
    }
    out
}
