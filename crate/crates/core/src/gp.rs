//! Exact Gaussian-process regression with a squared-exponential kernel.
//!
//! The posterior at a query point x* is
//!
//! ```text
//! mean = μ0(x*) + k(x*)ᵀ K⁻¹ (y − μ0)
//! var  = k(x*, x*) − k(x*)ᵀ K⁻¹ k(x*)
//! ```
//!
//! computed through a cached Cholesky factor of K and triangular solves;
//! K is never inverted at runtime (the dense-inverse path exists only as a
//! test oracle).

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("kernel parameters invalid: {0}")]
    InvalidParams(String),
    #[error("dataset invalid: {0}")]
    InvalidDataset(String),
    #[error("kernel matrix not positive definite even with jitter {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("dataset csv: {0}")]
    Csv(String),
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Squared-exponential kernel parameters (σ_f², σ_n², per-dimension l).
///
/// Lengthscales enter only through diag(l)⁻², so their sign is inert;
/// components must merely be nonzero.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub sigma_f2: f64,
    pub sigma_n2: f64,
    pub lengthscales: Vec<f64>,
}

impl KernelParams {
    pub fn new(sigma_f2: f64, sigma_n2: f64, lengthscales: Vec<f64>) -> Result<Self, GpError> {
        let p = KernelParams {
            sigma_f2,
            sigma_n2,
            lengthscales,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if !(self.sigma_f2 > 0.0) {
            return Err(GpError::InvalidParams(format!(
                "sigma_f2 must be > 0, got {}",
                self.sigma_f2
            )));
        }
        if !(self.sigma_n2 >= 0.0) {
            return Err(GpError::InvalidParams(format!(
                "sigma_n2 must be >= 0, got {}",
                self.sigma_n2
            )));
        }
        if self.lengthscales.is_empty() || self.lengthscales.iter().any(|&l| l == 0.0) {
            return Err(GpError::InvalidParams(
                "lengthscales must be nonempty with no zero component".into(),
            ));
        }
        Ok(())
    }

    /// The empirically determined defaults for the 4-d tuning problem:
    /// σ_f² = 0.8, σ_n² = 0.17, |l| = 0.12 per dimension.
    pub fn tuning_default() -> Self {
        KernelParams {
            sigma_f2: 0.8,
            sigma_n2: 0.17,
            lengthscales: vec![0.12; 4],
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams::tuning_default()
    }
}

/// Observed (θ, f) pairs plus the constant prior mean.
#[derive(Debug, Clone, Default)]
pub struct GpDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Constant prior mean over the whole domain (0 after standardization).
    pub mu0: f64,
}

impl GpDataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, mu0: f64) -> Result<Self, GpError> {
        let d = GpDataset { x, y, mu0 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.x.len() != self.y.len() {
            return Err(GpError::InvalidDataset(format!(
                "{} input rows vs {} observations",
                self.x.len(),
                self.y.len()
            )));
        }
        if let Some(d) = self.x.first().map(Vec::len) {
            if self.x.iter().any(|r| r.len() != d) {
                return Err(GpError::InvalidDataset("ragged input rows".into()));
            }
        }
        let finite = self.x.iter().flatten().all(|v| v.is_finite())
            && self.y.iter().all(|v| v.is_finite())
            && self.mu0.is_finite();
        if !finite {
            return Err(GpError::InvalidDataset("non-finite entries".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.x.push(x);
        self.y.push(y);
    }

    /// Write as CSV: header `theta_1..theta_d,y`, one row per observation.
    pub fn to_csv(&self) -> String {
        let d = self.x.first().map_or(0, Vec::len);
        let mut out = String::new();
        for j in 1..=d {
            out.push_str(&format!("theta_{j},"));
        }
        out.push_str("y\n");
        for (row, y) in self.x.iter().zip(&self.y) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }

    /// Parse the CSV format emitted by [`GpDataset::to_csv`].
    pub fn from_csv(text: &str, mu0: f64) -> Result<Self, GpError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GpError::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.last() != Some(&"y") {
            return Err(GpError::Csv("last header column must be `y`".into()));
        }
        let d = cols.len() - 1;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(GpError::Csv(format!(
                    "row {}: expected {} fields, got {}",
                    i + 2,
                    d + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| GpError::Csv(format!("row {}: bad number `{s}`", i + 2)))
            };
            let row: Result<Vec<f64>, _> = fields[..d].iter().map(|s| parse(s)).collect();
            x.push(row?);
            y.push(parse(fields[d])?);
        }
        GpDataset::new(x, y, mu0)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), GpError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load_csv(path: &Path, mu0: f64) -> Result<Self, GpError> {
        let text = std::fs::read_to_string(path)?;
        GpDataset::from_csv(&text, mu0)
    }
}

/// Posterior mean and variance at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

/// Fitted model: dataset, kernel, Cholesky factor and cached K⁻¹(y − μ0).
#[derive(Debug, Clone)]
pub struct GpModel {
    pub dataset: GpDataset,
    pub params: KernelParams,
    /// Lower-triangular factor, row-major n×n; empty when n = 0.
    chol: Vec<f64>,
    alpha_vec: Vec<f64>,
    /// Jitter that was actually added to the diagonal (0 when none needed).
    pub jitter: f64,
}

/// Squared-exponential kernel with noise on the diagonal (`same_index`).
pub fn se_kernel(
    xi: &[f64],
    xj: &[f64],
    params: &KernelParams,
    same_index: bool,
) -> Result<f64, GpError> {
    let d = params.dim();
    if xi.len() != d || xj.len() != d {
        return Err(GpError::DimensionMismatch(format!(
            "kernel inputs of dim {}/{} vs lengthscales of dim {d}",
            xi.len(),
            xj.len()
        )));
    }
    let mut quad = 0.0;
    for k in 0..d {
        let diff = xi[k] - xj[k];
        let l = params.lengthscales[k];
        quad += diff * diff / (l * l);
    }
    let mut v = params.sigma_f2 * (-0.5 * quad).exp();
    if same_index {
        v += params.sigma_n2;
    }
    Ok(v)
}

/// Cholesky factorization of a symmetric matrix, row-major. Returns the
/// lower factor or None when a non-positive pivot appears.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve L z = b (forward substitution).
fn solve_lower(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * z[k];
        }
        z[i] = sum / l[i * n + i];
    }
    z
}

/// Solve Lᵀ x = z (backward substitution).
fn solve_lower_transpose(l: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Jitter escalation schedule for positive-definiteness repair.
const JITTERS: [f64; 6] = [0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5];

fn build_gram(dataset: &GpDataset, params: &KernelParams) -> Result<Vec<f64>, GpError> {
    let n = dataset.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = se_kernel(&dataset.x[i], &dataset.x[j], params, i == j)?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

fn factorize(dataset: &GpDataset, params: &KernelParams) -> Result<(Vec<f64>, f64), GpError> {
    let n = dataset.len();
    let gram = build_gram(dataset, params)?;
    for &jitter in &JITTERS {
        let mut k = gram.clone();
        for i in 0..n {
            k[i * n + i] += jitter;
        }
        if let Some(l) = cholesky(&k, n) {
            return Ok((l, jitter));
        }
    }
    Err(GpError::NotPositiveDefinite {
        max_jitter: *JITTERS.last().unwrap(),
    })
}

/// Fit the GP: build the Gram matrix, factorize (escalating jitter
/// 1e-9 → 1e-5 when needed) and cache K⁻¹(y − μ0).
pub fn fit(dataset: GpDataset, params: KernelParams) -> Result<GpModel, GpError> {
    dataset.validate()?;
    params.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Ok(GpModel {
            dataset,
            params,
            chol: Vec::new(),
            alpha_vec: Vec::new(),
            jitter: 0.0,
        });
    }
    let (chol, jitter) = factorize(&dataset, &params)?;
    let centered: Vec<f64> = dataset.y.iter().map(|&y| y - dataset.mu0).collect();
    let z = solve_lower(&chol, n, &centered);
    let alpha_vec = solve_lower_transpose(&chol, n, &z);
    Ok(GpModel {
        dataset,
        params,
        chol,
        alpha_vec,
        jitter,
    })
}

impl GpModel {
    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Posterior of the latent function at `xstar` (variance excludes the
    /// observation noise σ_n²); with no data this falls back to the prior
    /// (`prior_mean_at_xstar`, σ_f²).
    pub fn posterior(&self, xstar: &[f64], prior_mean_at_xstar: f64) -> Result<Posterior, GpError> {
        let n = self.dataset.len();
        if n == 0 {
            return Ok(Posterior {
                mean: prior_mean_at_xstar,
                variance: self.params.sigma_f2,
            });
        }
        let mut kvec = vec![0.0; n];
        for (i, row) in self.dataset.x.iter().enumerate() {
            kvec[i] = se_kernel(row, xstar, &self.params, false)?;
        }
        let mean: f64 = prior_mean_at_xstar
            + kvec
                .iter()
                .zip(&self.alpha_vec)
                .map(|(k, a)| k * a)
                .sum::<f64>();
        let v = solve_lower(&self.chol, n, &kvec);
        let kss = se_kernel(xstar, xstar, &self.params, false)?;
        let variance = (kss - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        Ok(Posterior { mean, variance })
    }
}

/// Log marginal likelihood of the dataset under the kernel, computed from
/// the Cholesky factor: −½(y−μ0)ᵀK⁻¹(y−μ0) − ½ log|K| − (n/2) log 2π.
pub fn log_marginal_likelihood(dataset: &GpDataset, params: &KernelParams) -> Result<f64, GpError> {
    dataset.validate()?;
    params.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Err(GpError::InvalidDataset(
            "marginal likelihood needs a nonempty dataset".into(),
        ));
    }
    let (chol, _) = factorize(dataset, params)?;
    let centered: Vec<f64> = dataset.y.iter().map(|&y| y - dataset.mu0).collect();
    let z = solve_lower(&chol, n, &centered);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let logdet: f64 = 2.0 * (0..n).map(|i| chol[i * n + i].ln()).sum::<f64>();
    Ok(-0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Mean squared error between predictions and targets.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64, GpError> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(GpError::DimensionMismatch(format!(
            "mse over {} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (t - p) * (t - p))
        .sum::<f64>()
        / predictions.len() as f64)
}

impl GpModel {
    /// Reconstruction residual max |LLᵀ − K|; exposed for validation.
    pub fn reconstruction_error(&self) -> Result<f64, GpError> {
        let n = self.dataset.len();
        let gram = build_gram(&self.dataset, &self.params)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..=i.min(j) {
                    v += self.chol[i * n + k] * self.chol[j * n + k];
                }
                let target = gram[i * n + j] + if i == j { self.jitter } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        Ok(worst)
    }
}
