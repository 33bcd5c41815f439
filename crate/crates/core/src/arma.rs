//! ARMA noise models fitted with the Hannan-Rissanen two-stage regression.
//!
//! Stage one fits a long autoregression to estimate innovations; stage two
//! regresses the series on its own lags and the lagged innovations. Pure AR
//! (q = 0) collapses to ordinary least squares on the lags. Residuals are kept
//! either as an empirical sample (bootstrap resampling) or a fitted Gaussian.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArmaError {
    #[error("degenerate series: variance {0:.3e} below 1e-12")]
    DegenerateSeries(f64),
    #[error("insufficient data: {len} points, need at least {need}")]
    InsufficientData { len: usize, need: usize },
    #[error("singular regression system")]
    Singular,
}

/// Distribution the innovations are drawn from when sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ResidualDistribution {
    /// Bootstrap: uniform resample (with replacement) of the stored residuals.
    Empirical {
        sample: Vec<f64>,
    },
    Gaussian {
        mean: f64,
        stddev: f64,
    },
}

impl ResidualDistribution {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ResidualDistribution::Empirical { sample } if sample.is_empty() => {
                Err("empty residual sample".into())
            }
            ResidualDistribution::Gaussian { stddev, .. } if *stddev <= 0.0 => {
                Err(format!("non-positive stddev {stddev}"))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ResidualDistribution::Empirical { sample } => sample[rng.gen_range(0..sample.len())],
            ResidualDistribution::Gaussian { mean, stddev } => {
                Normal::new(*mean, *stddev).map(|n| n.sample(rng)).unwrap_or(*mean)
            }
        }
    }

    /// Variance of a single innovation draw.
    pub fn variance(&self) -> f64 {
        match self {
            ResidualDistribution::Empirical { sample } => {
                let n = sample.len() as f64;
                let mean: f64 = sample.iter().sum::<f64>() / n;
                sample.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n
            }
            ResidualDistribution::Gaussian { stddev, .. } => stddev * stddev,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmaModel {
    pub p: usize,
    pub q: usize,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Level term of the fitted regression. Sampling deliberately leaves it
    /// out: noise paths are deviations to add onto a forecast.
    pub intercept: f64,
    pub residual_dist: ResidualDistribution,
}

impl ArmaModel {
    /// A model whose sampled paths are identically zero.
    pub fn silent() -> Self {
        Self {
            p: 0,
            q: 0,
            ar_coeffs: Vec::new(),
            ma_coeffs: Vec::new(),
            intercept: 0.0,
            residual_dist: ResidualDistribution::Empirical { sample: vec![0.0] },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ar_coeffs.len() != self.p {
            return Err(format!("{} AR coefficients for order {}", self.ar_coeffs.len(), self.p));
        }
        if self.ma_coeffs.len() != self.q {
            return Err(format!("{} MA coefficients for order {}", self.ma_coeffs.len(), self.q));
        }
        self.residual_dist.validate()
    }

    /// True when every reflection coefficient of the AR part is inside the
    /// unit interval, i.e. the AR polynomial has all roots outside the unit
    /// circle.
    pub fn is_stationary(&self) -> bool {
        ar_is_stationary(&self.ar_coeffs)
    }

    /// Swaps the residual representation for a Gaussian fitted to the stored
    /// empirical sample (no-op if already Gaussian).
    pub fn with_gaussian_residuals(mut self) -> Self {
        if let ResidualDistribution::Empirical { sample } = &self.residual_dist {
            let n = sample.len() as f64;
            let mean = sample.iter().sum::<f64>() / n;
            let var = sample.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
            self.residual_dist =
                ResidualDistribution::Gaussian { mean, stddev: var.sqrt().max(1e-12) };
        }
        self
    }
}

/// Step-down (inverse Levinson) stationarity test on AR coefficients.
fn ar_is_stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    for m in (1..=a.len()).rev() {
        let k = a[m - 1];
        if k.abs() >= 1.0 - 1e-12 {
            return false;
        }
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
        a = prev;
    }
    true
}

/// Ordinary least squares via normal equations with partial-pivot elimination.
fn least_squares(rows: &[(Vec<f64>, f64)], k: usize) -> Result<Vec<f64>, ArmaError> {
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for (x, y) in rows {
        for i in 0..k {
            rhs[i] += x[i] * y;
            for j in i..k {
                gram[i * k + j] += x[i] * x[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            gram[i * k + j] = gram[j * k + i];
        }
    }
    // Tiny ridge keeps near-collinear systems solvable.
    for i in 0..k {
        gram[i * k + i] += 1e-10;
    }
    solve_dense(&mut gram, &mut rhs, k).ok_or(ArmaError::Singular)?;
    Ok(rhs)
}

fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for i in 0..n {
        b[i] /= a[i * n + i];
    }
    Some(())
}

/// Fits an ARMA(p, q) model by Hannan-Rissanen and attaches the in-sample
/// residuals as an empirical innovation distribution. Emits a warning (not an
/// error) when the fitted AR part is non-stationary.
pub fn fit_arma(series: &[f64], p: usize, q: usize) -> Result<ArmaModel, ArmaError> {
    let need = 10 * (p + q + 1);
    if series.len() < need {
        return Err(ArmaError::InsufficientData { len: series.len(), need });
    }
    let n = series.len();
    let mean: f64 = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var < 1e-12 {
        return Err(ArmaError::DegenerateSeries(var));
    }

    // Innovations from a long autoregression (only needed when q > 0).
    let mut innovations = vec![0.0; n];
    if q > 0 {
        let long = (2 * (p + q)).max(20).min(n / 4);
        let rows: Vec<(Vec<f64>, f64)> = (long..n)
            .map(|t| {
                let mut x = Vec::with_capacity(long + 1);
                x.push(1.0);
                x.extend((1..=long).map(|lag| series[t - lag]));
                (x, series[t])
            })
            .collect();
        let beta = least_squares(&rows, long + 1)?;
        for t in long..n {
            let mut pred = beta[0];
            for lag in 1..=long {
                pred += beta[lag] * series[t - lag];
            }
            innovations[t] = series[t] - pred;
        }
        // Pre-long innovations stay zero; regression below starts after them.
    }

    let long = if q > 0 { (2 * (p + q)).max(20).min(n / 4) } else { 0 };
    let start = p.max(long + q);
    let k = 1 + p + q;
    let rows: Vec<(Vec<f64>, f64)> = (start..n)
        .map(|t| {
            let mut x = Vec::with_capacity(k);
            x.push(1.0);
            x.extend((1..=p).map(|lag| series[t - lag]));
            x.extend((1..=q).map(|lag| innovations[t - lag]));
            (x, series[t])
        })
        .collect();
    let beta = least_squares(&rows, k)?;

    let intercept = beta[0];
    let ar_coeffs = beta[1..1 + p].to_vec();
    let ma_coeffs = beta[1 + p..].to_vec();
    let residuals: Vec<f64> = (start..n)
        .map(|t| {
            let mut pred = intercept;
            for (lag, phi) in ar_coeffs.iter().enumerate() {
                pred += phi * series[t - 1 - lag];
            }
            for (lag, theta) in ma_coeffs.iter().enumerate() {
                pred += theta * innovations[t - 1 - lag];
            }
            series[t] - pred
        })
        .collect();

    let model = ArmaModel {
        p,
        q,
        ar_coeffs,
        ma_coeffs,
        intercept,
        residual_dist: ResidualDistribution::Empirical { sample: residuals },
    };
    if !model.is_stationary() {
        log::warn!("fitted AR part is non-stationary: {:?}", model.ar_coeffs);
    }
    Ok(model)
}

/// Simulates one zero-mean ARMA path of the given length: innovations come
/// from the residual distribution, pre-sample state is zero, and the intercept
/// is excluded so the path is a pure deviation. Deterministic per seed.
pub fn sample_noise(model: &ArmaModel, horizon: usize, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = vec![0.0; horizon];
    let mut eps = vec![0.0; horizon];
    for t in 0..horizon {
        eps[t] = model.residual_dist.draw(&mut rng);
        let mut x = eps[t];
        for (lag, phi) in model.ar_coeffs.iter().enumerate() {
            if t > lag {
                x += phi * path[t - 1 - lag];
            }
        }
        for (lag, theta) in model.ma_coeffs.iter().enumerate().take(model.q) {
            if t > lag {
                x += theta * eps[t - 1 - lag];
            }
        }
        path[t] = x;
    }
    path
}
