//! Finite-sample side: reproducible sampling from causal linear models, OLS
//! estimation of total effects, and empirical mean squared errors.
//!
//! # Reproducibility
//!
//! Sampling uses ChaCha12 keyed by a 64-bit seed with an explicit 64-bit
//! stream id ([`StreamRng`]). The generator and all transformations are pure
//! Rust over IEEE doubles, so identical `(seed, stream)` pairs produce
//! identical samples on every platform. Replicates drawn on separate
//! streams may run concurrently without affecting results.

use nalgebra::DMatrix;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::sem::{EffectMatrix, ErrFamily, LinearSem};
use crate::NodeSet;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("dataset has no column {0:?}")]
    UnknownColumn(String),
    #[error("duplicate column selection {0:?}")]
    DuplicateColumn(String),
    #[error("need n > |x| + |z| + 1 = {needed} samples, got {n}")]
    TooFewSamples { n: usize, needed: usize },
    #[error("design is rank deficient; collinear column(s): {}", cols.join(", "))]
    RankDeficient { cols: Vec<String> },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("empty estimate list")]
    NoEstimates,
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// ChaCha12 stream generator; the reproducibility contract of the crate.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha12Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    pub fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.0
    }
}

/// Draws one error with the family's shape, zero mean and variance `var`.
pub fn sample_error<F: Scalar>(family: ErrFamily, var: F, rng: &mut ChaCha12Rng) -> F {
    match family {
        ErrFamily::Gaussian => F::std_normal(rng) * Float::sqrt(var),
        ErrFamily::Uniform => {
            // U(-a, a) with a = sqrt(3 var).
            let a = Float::sqrt(F::of(3.0) * var);
            let u = F::unit_uniform(rng);
            (u + u - F::one()) * a
        }
        ErrFamily::Logistic => {
            // Inverse CDF with scale sqrt(3 var) / pi.
            let s = Float::sqrt(F::of(3.0) * var) / F::of(std::f64::consts::PI);
            let u = F::open01(rng);
            s * Float::ln(u / (F::one() - u))
        }
        ErrFamily::StudentT5 => {
            // t(5) has variance 5/3; standardize, then scale.
            F::student_t5(rng) * Float::sqrt(F::of(0.6) * var)
        }
    }
}

/// Column-labelled sample matrix with one row per observation.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    labels: Vec<String>,
    /// Row-major `n × p`.
    data: Vec<F>,
    n: usize,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(labels: Vec<String>, data: Vec<F>, n: usize) -> Self {
        assert_eq!(data.len(), n * labels.len());
        Dataset { labels, data, n }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> F {
        self.data[row * self.labels.len() + col]
    }

    fn col(&self, label: &str) -> Result<usize, EstimateError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| EstimateError::UnknownColumn(label.to_string()))
    }

    /// Header line plus one comma-separated row per observation.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.labels.join(","));
        out.push('\n');
        let p = self.labels.len();
        for r in 0..self.n {
            for c in 0..p {
                if c > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.data[r * p + c].to_f64().unwrap()));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EstimateError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(EstimateError::Csv { line: 1, msg: "empty file".into() })?;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let p = labels.len();
        let mut data = Vec::new();
        let mut n = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != p {
                return Err(EstimateError::Csv {
                    line: i + 1,
                    msg: format!("expected {p} fields, got {}", fields.len()),
                });
            }
            for f in fields {
                let v: f64 = f.trim().parse().map_err(|_| EstimateError::Csv {
                    line: i + 1,
                    msg: format!("invalid number {f:?}"),
                })?;
                data.push(F::of(v));
            }
            n += 1;
        }
        Ok(Dataset { labels, data, n })
    }
}

/// Draws `n` observations from the model, generating each node from its
/// parents and a fresh error in topological order.
pub fn sample<F: Scalar>(sem: &LinearSem<F>, n: usize, rng: &mut StreamRng) -> Dataset<F> {
    let g = sem.graph();
    let p = g.n();
    let mut data = vec![F::zero(); n * p];
    let rng = rng.rng();
    for r in 0..n {
        let row = &mut data[r * p..(r + 1) * p];
        for &v in sem.topo() {
            let mut val = sample_error(sem.family(v), sem.err_var(v), rng);
            for pa in g.parents_of(v) {
                val += sem.coefficient(pa, v).expect("edge coefficient") * row[pa.idx()];
            }
            row[v.idx()] = val;
        }
    }
    Dataset { labels: g.node_labels().to_vec(), data, n }
}

/// OLS total-effect estimate: for each y-column, the coefficients on the
/// x-columns in the least-squares regression of y on `(x, z)` after mean
/// centering. Solved by QR with column pivoting; a rank-deficient design is
/// an error naming the dependent columns.
pub fn ols_total_effect<F: Scalar>(
    data: &Dataset<F>,
    x: &[String],
    y: &[String],
    z: &[String],
) -> Result<EffectMatrix<F>, EstimateError> {
    let mut seen: Vec<&String> = Vec::new();
    for l in x.iter().chain(y).chain(z) {
        if seen.contains(&l) {
            return Err(EstimateError::DuplicateColumn(l.clone()));
        }
        seen.push(l);
    }
    let needed = x.len() + z.len() + 1;
    if data.n <= needed {
        return Err(EstimateError::TooFewSamples { n: data.n, needed });
    }
    let xz: Vec<usize> = x
        .iter()
        .chain(z)
        .map(|l| data.col(l))
        .collect::<Result<_, _>>()?;
    let yi: Vec<usize> = y.iter().map(|l| data.col(l)).collect::<Result<_, _>>()?;
    let n = data.n;
    let k = xz.len();

    let mut design = DMatrix::<F>::zeros(n, k);
    for (j, &c) in xz.iter().enumerate() {
        let mut mean = F::zero();
        for r in 0..n {
            mean += data.value(r, c);
        }
        mean /= F::of(n as f64);
        for r in 0..n {
            design[(r, j)] = data.value(r, c) - mean;
        }
    }

    // Modified Gram-Schmidt over the centered columns; a column whose
    // residual collapses is linearly dependent on the earlier ones.
    {
        let tol = F::of(1e-8);
        let mut basis: Vec<nalgebra::DVector<F>> = Vec::new();
        let mut dependent: Vec<String> = Vec::new();
        for (j, label) in x.iter().chain(z).enumerate() {
            let mut v = design.column(j).clone_owned();
            let orig = v.norm();
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
            if orig == F::zero() || v.norm() <= tol * orig {
                dependent.push(label.clone());
            } else {
                let nrm = v.norm();
                basis.push(v / nrm);
            }
        }
        if !dependent.is_empty() {
            return Err(EstimateError::RankDeficient { cols: dependent });
        }
    }

    // Thin QR of the centered design, then back substitution.
    let qr = design.qr();
    let q = qr.q();
    let r = qr.r();
    let mut m = DMatrix::<F>::zeros(y.len(), x.len());
    for (row, &yc) in yi.iter().enumerate() {
        let mut mean = F::zero();
        for rr in 0..n {
            mean += data.value(rr, yc);
        }
        mean /= F::of(n as f64);
        let yv = DMatrix::<F>::from_fn(n, 1, |rr, _| data.value(rr, yc) - mean);
        let qty = q.transpose() * yv;
        let mut beta = vec![F::zero(); k];
        for i in (0..k).rev() {
            let mut v = qty[(i, 0)];
            for j in i + 1..k {
                v -= r[(i, j)] * beta[j];
            }
            beta[i] = v / r[(i, i)];
        }
        for col in 0..x.len() {
            m[(row, col)] = beta[col];
        }
    }
    Ok(EffectMatrix::new(y.to_vec(), x.to_vec(), m))
}

/// Convenience wrapper taking node sets of the model's graph.
pub fn ols_total_effect_sets<F: Scalar>(
    data: &Dataset<F>,
    g: &crate::Pdag,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<EffectMatrix<F>, EstimateError> {
    let xs: Vec<String> = x.iter().map(|v| g.label(v).to_string()).collect();
    let ys: Vec<String> = y.iter().map(|v| g.label(v).to_string()).collect();
    let zs: Vec<String> = z.iter().map(|v| g.label(v).to_string()).collect();
    ols_total_effect(data, &xs, &ys, &zs)
}

/// Entrywise mean of squared deviations from `truth`.
pub fn empirical_mse<F: Scalar>(
    estimates: &[EffectMatrix<F>],
    truth: &EffectMatrix<F>,
) -> Result<DMatrix<F>, EstimateError> {
    if estimates.is_empty() {
        return Err(EstimateError::NoEstimates);
    }
    let shape = (truth.rows().len(), truth.cols().len());
    let mut acc = DMatrix::<F>::zeros(shape.0, shape.1);
    for e in estimates {
        if (e.rows().len(), e.cols().len()) != shape {
            return Err(EstimateError::ShapeMismatch {
                expected: format!("{}x{}", shape.0, shape.1),
                got: format!("{}x{}", e.rows().len(), e.cols().len()),
            });
        }
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let d = e.entry(i, j) - truth.entry(i, j);
                acc[(i, j)] += d * d;
            }
        }
    }
    Ok(acc / F::of(estimates.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeSet;
    use approx::assert_relative_eq;

    #[test]
    fn sampling_is_reproducible() {
        let sem =
            LinearSem::<f64>::parse("X -> Y : 1\nvar X 1\nvar Y 1\ndist X uniform\n").unwrap();
        let a = sample(&sem, 5, &mut StreamRng::new(7, 0));
        let b = sample(&sem, 5, &mut StreamRng::new(7, 0));
        for r in 0..5 {
            assert_eq!(a.value(r, 0), b.value(r, 0));
            assert_eq!(a.value(r, 1), b.value(r, 1));
        }
        let c = sample(&sem, 5, &mut StreamRng::new(7, 1));
        assert_ne!(a.value(0, 0), c.value(0, 0));
    }

    #[test]
    fn uniform_errors_stay_in_range() {
        let sem = LinearSem::<f64>::parse("node E\nvar E 1\ndist E uniform\n").unwrap();
        let d = sample(&sem, 2000, &mut StreamRng::new(1, 0));
        let bound = 3f64.sqrt() + 1e-12;
        for r in 0..d.n() {
            assert!(d.value(r, 0).abs() <= bound);
        }
    }

    #[test]
    fn sample_variances_match_covariance() {
        let text = "A -> B : 0.8\nB -> C : -1.2\nvar A 1.0\nvar B 0.5\nvar C 1.5\n\
                    dist A logistic\ndist B student_t5\ndist C uniform\n";
        let sem = LinearSem::<f64>::parse(text).unwrap();
        let cov = sem.covariance();
        let n = 10000;
        let d = sample(&sem, n, &mut StreamRng::new(42, 0));
        for (i, label) in ["A", "B", "C"].iter().enumerate() {
            let mut mean = 0.0;
            for r in 0..n {
                mean += d.value(r, i);
            }
            mean /= n as f64;
            let mut var = 0.0;
            for r in 0..n {
                var += (d.value(r, i) - mean).powi(2);
            }
            var /= (n - 1) as f64;
            let truth = cov.matrix()[(cov.pos(label).unwrap(), cov.pos(label).unwrap())];
            // Within 3 standard errors, using the normal-ish approximation
            // se ≈ truth * sqrt(2/n) inflated for heavy tails.
            let se = truth * (6.0 / n as f64).sqrt();
            assert!(
                (var - truth).abs() < 3.0 * se.max(0.05),
                "node {label}: sample var {var} vs {truth}"
            );
        }
    }

    #[test]
    fn noiseless_chain_recovers_coefficient_exactly() {
        let sem = LinearSem::<f64>::parse("X -> Y : 2\nvar X 1\nvar Y 1\n").unwrap();
        let mut rng = StreamRng::new(3, 0);
        let mut d = sample(&sem, 50, &mut rng);
        // Overwrite Y with the exact structural value: no noise.
        for r in 0..d.n {
            let x = d.value(r, 0);
            d.data[r * 2 + 1] = 2.0 * x;
        }
        let est = ols_total_effect(&d, &["X".into()], &["Y".into()], &[]).unwrap();
        assert_relative_eq!(est.entry(0, 0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn centering_matches_intercept_regression() {
        // Shift a column by a constant: coefficients must be unchanged.
        let sem = LinearSem::<f64>::parse("X -> Y : 1.5\nvar X 1\nvar Y 1\n").unwrap();
        let d = sample(&sem, 500, &mut StreamRng::new(5, 0));
        let mut shifted = d.clone();
        for r in 0..shifted.n {
            shifted.data[r * 2] += 10.0;
        }
        let a = ols_total_effect(&d, &["X".into()], &["Y".into()], &[]).unwrap();
        let b = ols_total_effect(&shifted, &["X".into()], &["Y".into()], &[]).unwrap();
        assert_relative_eq!(a.entry(0, 0), b.entry(0, 0), epsilon = 1e-9);
    }

    #[test]
    fn rank_deficiency_names_collinear_columns() {
        let sem = LinearSem::<f64>::parse("X -> Y : 2\nvar X 1\nvar Y 1\n").unwrap();
        let d = sample(&sem, 100, &mut StreamRng::new(9, 0));
        // Duplicate X as a fake covariate.
        let mut labels = d.labels.clone();
        labels.push("Xcopy".into());
        let mut data = Vec::new();
        for r in 0..d.n {
            data.extend_from_slice(&[d.value(r, 0), d.value(r, 1), d.value(r, 0)]);
        }
        let dd = Dataset::new(labels, data, d.n);
        let err = ols_total_effect(&dd, &["X".into()], &["Y".into()], &["Xcopy".into()]);
        match err {
            Err(EstimateError::RankDeficient { cols }) => {
                assert!(cols.contains(&"X".to_string()) || cols.contains(&"Xcopy".to_string()));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn mse_of_exact_estimates_is_zero() {
        let truth = EffectMatrix::new(
            vec!["Y".into()],
            vec!["X".into()],
            DMatrix::from_element(1, 1, 1.0),
        );
        let mse = empirical_mse(&[truth.clone(), truth.clone()], &truth).unwrap();
        assert_eq!(mse[(0, 0)], 0.0);

        let off = EffectMatrix::new(
            vec!["Y".into()],
            vec!["X".into()],
            DMatrix::from_element(1, 1, 1.1),
        );
        let mse = empirical_mse(&[off], &truth).unwrap();
        assert_relative_eq!(mse[(0, 0)], 0.01, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let sem = LinearSem::<f64>::parse("X -> Y : 1\nvar X 1\nvar Y 1\n").unwrap();
        let d = sample(&sem, 10, &mut StreamRng::new(11, 0));
        let text = d.to_csv();
        let back = Dataset::<f64>::from_csv(&text).unwrap();
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.n(), d.n());
        for r in 0..d.n() {
            for c in 0..2 {
                assert_eq!(back.value(r, c), d.value(r, c));
            }
        }
    }

    #[test]
    fn set_wrapper_and_too_few_samples() {
        let sem = LinearSem::<f64>::parse("X -> Y : 1\nvar X 1\nvar Y 1\n").unwrap();
        let g = sem.graph().clone();
        let d = sample(&sem, 2, &mut StreamRng::new(1, 0));
        let x = NodeSet::from_labels(&g, &["X"]).unwrap();
        let y = NodeSet::from_labels(&g, &["Y"]).unwrap();
        let e = ols_total_effect_sets(&d, &g, &x, &y, &NodeSet::new());
        assert!(matches!(e, Err(EstimateError::TooFewSamples { .. })));
    }
}
