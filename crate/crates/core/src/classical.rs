//! Least-squares ANOVA and method-of-moments variance components for balanced
//! designs.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::design::DesignModel;
use crate::numerics::{f_upper_tail, sample_chisq, NumericsError, QuantileSummary, RngStream};
use crate::summary::{EstimateSource, IntervalEstimate, VCRow, VCSummary, Warning};

/// Default number of simulation draws for moments intervals.
pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassicalError {
    #[error("design is unbalanced: batch `{batch}` cell `{cell}` has {count} observations, expected {expected}")]
    Unbalanced { batch: String, cell: String, count: usize, expected: usize },
    #[error("batches `{0}` and `{1}` are crossed but some combination is never observed")]
    EmptyCell(String, String),
    #[error("batches `{0}` and `{1}` have non-proportional cell counts")]
    NonOrthogonal(String, String),
    #[error("response has {found} values, design has {expected} observations")]
    LengthMismatch { expected: usize, found: usize },
    #[error("at least one simulation draw is required")]
    NoDraws,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Least-squares coefficient estimates and per-batch sums of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEstimates {
    pub grand_mean: f64,
    pub beta_hat: Vec<Vec<f64>>,
    /// `Σ_i (β̂ at observation i)²`.
    pub ss: Vec<f64>,
    /// `(n/J_m) Σ_j β̂_j²`; equals `ss` for balanced designs.
    pub ss_from_coefficients: Vec<f64>,
    pub df: Vec<usize>,
    /// `SS_m / df_m`; absent when `df_m = 0`.
    pub ms: Vec<Option<f64>>,
    /// Variance of the batch's estimated coefficients, `Σ_j β̂_j² / df_m`.
    pub v: Vec<Option<f64>>,
    pub residual: usize,
}

impl BatchEstimates {
    /// Fitted contribution of batch `m` at every observation.
    pub fn fitted(&self, design: &DesignModel, m: usize) -> Vec<f64> {
        design.batch(m).cell_of.iter().map(|&c| self.beta_hat[m][c]).collect()
    }
}

/// Sequential sweep: grand mean, then batches from coarsest to finest, each
/// taking cell means of what is left. No balance check.
pub(crate) fn sweep_effects(design: &DesignModel, y: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let n = y.len() as f64;
    let grand_mean = y.iter().sum::<f64>() / n;
    let mut r: Vec<f64> = y.iter().map(|v| v - grand_mean).collect();
    let mut beta = vec![Vec::new(); design.len()];
    for &m in design.sweep_order() {
        let batch = design.batch(m);
        let mut sums = vec![0.0; batch.j()];
        for (x, &c) in r.iter().zip(&batch.cell_of) {
            sums[c] += x;
        }
        let means: Vec<f64> =
            sums.iter().zip(&batch.cell_counts).map(|(s, &k)| s / k as f64).collect();
        for (x, &c) in r.iter_mut().zip(&batch.cell_of) {
            *x -= means[c];
        }
        beta[m] = means;
    }
    (grand_mean, beta)
}

fn require_balanced(design: &DesignModel) -> Result<(), ClassicalError> {
    let report = design.balance();
    if let Some(u) = &report.first_unbalanced {
        let batch = design.batch(u.batch);
        return Err(ClassicalError::Unbalanced {
            batch: batch.label.clone(),
            cell: batch.cell_labels[u.cell].clone(),
            count: u.count,
            expected: u.expected,
        });
    }
    if let Some(pair) = &report.first_nonorthogonal {
        let (a, b) = (design.batch(pair.first).label.clone(), design.batch(pair.second).label.clone());
        return Err(if pair.empty_cell {
            ClassicalError::EmptyCell(a, b)
        } else {
            ClassicalError::NonOrthogonal(a, b)
        });
    }
    Ok(())
}

pub fn fit_effects(design: &DesignModel, y: &[f64]) -> Result<BatchEstimates, ClassicalError> {
    if y.len() != design.n() {
        return Err(ClassicalError::LengthMismatch { expected: design.n(), found: y.len() });
    }
    require_balanced(design)?;
    let (grand_mean, beta_hat) = sweep_effects(design, y);
    let n = y.len() as f64;
    let mut ss = Vec::with_capacity(design.len());
    let mut ss_coef = Vec::with_capacity(design.len());
    let mut ms = Vec::with_capacity(design.len());
    let mut v = Vec::with_capacity(design.len());
    let mut df = Vec::with_capacity(design.len());
    for (m, batch) in design.batches().iter().enumerate() {
        let b = &beta_hat[m];
        let sum_sq: f64 = b.iter().map(|x| x * x).sum();
        ss.push(batch.cell_of.iter().map(|&c| b[c] * b[c]).sum::<f64>());
        ss_coef.push(n / batch.j() as f64 * sum_sq);
        df.push(batch.df);
        if batch.df == 0 {
            ms.push(None);
            v.push(None);
        } else {
            ms.push(Some(ss[m] / batch.df as f64));
            v.push(Some(sum_sq / batch.df as f64));
        }
    }
    Ok(BatchEstimates {
        grand_mean,
        beta_hat,
        ss,
        ss_from_coefficients: ss_coef,
        df,
        ms,
        v,
        residual: design.residual(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub df: usize,
    pub ss: f64,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

/// Classical ANOVA table; every F uses the residual row's mean square.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTable {
    pub rows: Vec<TableRow>,
    pub residual: usize,
}

impl ClassicalTable {
    /// Build from `(label, df, SS)` rows.
    pub fn from_sums<I, S>(rows: I, residual: usize) -> Result<Self, ClassicalError>
    where
        I: IntoIterator<Item = (S, usize, f64)>,
        S: Into<String>,
    {
        let mut rows: Vec<TableRow> = rows
            .into_iter()
            .map(|(label, df, ss)| TableRow {
                label: label.into(),
                df,
                ss,
                ms: (df > 0).then(|| ss / df as f64),
                f: None,
                p: None,
            })
            .collect();
        let (res_ms, res_df) = (rows[residual].ms, rows[residual].df);
        if let Some(denom) = res_ms {
            for (m, row) in rows.iter_mut().enumerate() {
                if m == residual {
                    continue;
                }
                let Some(num) = row.ms else { continue };
                let f = if num == 0.0 {
                    0.0
                } else if denom == 0.0 {
                    f64::INFINITY
                } else {
                    num / denom
                };
                row.f = Some(f);
                row.p = Some(f_upper_tail(f, row.df as f64, res_df as f64)?);
            }
        }
        Ok(Self { rows, residual })
    }
}

pub fn anova_table(estimates: &BatchEstimates, design: &DesignModel) -> Result<ClassicalTable, ClassicalError> {
    ClassicalTable::from_sums(
        design
            .batches()
            .iter()
            .enumerate()
            .map(|(m, b)| (b.label.clone(), b.df, estimates.ss[m])),
        design.residual(),
    )
}

/// Expected-variance coefficients: `E V_m = σ_m² + Σ_{k∈I(m)} (J_m/J_k) σ_k²`.
pub fn ev_matrix(design: &DesignModel) -> DMatrix<f64> {
    let m = design.len();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = 1.0;
        let ji = design.batch(i).j() as f64;
        for &k in design.containment(i) {
            a[(i, k)] = ji / design.batch(k).j() as f64;
        }
    }
    a
}

/// Rows of `A` ordered so every off-diagonal entry refers to an earlier row.
fn elimination_order(a: &DMatrix<f64>) -> Result<Vec<usize>, NumericsError> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(NumericsError::DimensionMismatch { expected: m, found: a.ncols() });
    }
    let off = |i: usize| (0..m).filter(|&k| k != i && a[(i, k)] != 0.0).count();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (off(i), i));
    let mut solved = vec![false; m];
    for &i in &order {
        if a[(i, i)] == 0.0 || (0..m).any(|k| k != i && a[(i, k)] != 0.0 && !solved[k]) {
            return Err(NumericsError::SingularMatrix);
        }
        solved[i] = true;
    }
    Ok(order)
}

fn solve_moments(v: &[Option<f64>], a: &DMatrix<f64>, truncate: bool) -> Result<Vec<f64>, NumericsError> {
    if v.len() != a.nrows() {
        return Err(NumericsError::DimensionMismatch { expected: a.nrows(), found: v.len() });
    }
    let order = elimination_order(a)?;
    let mut s = vec![0.0; v.len()];
    for i in order {
        let Some(vi) = v[i] else { continue };
        let below: f64 = (0..v.len()).filter(|&k| k != i).map(|k| a[(i, k)] * s[k]).sum();
        let x = (vi - below) / a[(i, i)];
        s[i] = if truncate { x.max(0.0) } else { x };
    }
    Ok(s)
}

/// Truncated moments estimates, solved from the bottom of the table up with
/// truncated lower rows feeding the rows above. Batches with `V_m` absent
/// (no degrees of freedom) get 0.
pub fn estimate_sigma_moments(v: &[Option<f64>], a: &DMatrix<f64>) -> Result<Vec<f64>, NumericsError> {
    solve_moments(v, a, true)
}

/// Solution of `A σ² = V` without the nonnegativity constraint.
pub fn moments_untruncated(v: &[Option<f64>], a: &DMatrix<f64>) -> Result<Vec<f64>, NumericsError> {
    solve_moments(v, a, false)
}

/// `EV̂_m = Σ_{k≠m} A_mk σ_k²` for every row.
pub fn expected_below(a: &DMatrix<f64>, sigma2: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).filter(|&k| k != i).map(|k| a[(i, k)] * sigma2[k]).sum())
        .collect()
}

/// Draws of `σ²` (draw-major) and quantile summaries of `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceDraws {
    pub draws: Vec<Vec<f64>>,
    pub summary: Vec<QuantileSummary>,
}

fn summarize_columns(draws: &[Vec<f64>], m: usize, f: impl Fn(f64) -> f64) -> Vec<QuantileSummary> {
    (0..m)
        .map(|k| {
            let col: Vec<f64> = draws.iter().map(|d| f(d[k])).collect();
            QuantileSummary::from_draws(&col)
        })
        .collect()
}

/// Moments simulation with caller-supplied multipliers: draw `d` replaces
/// `V_m` with `V_m · multiplier(d, m)` before solving.
pub fn simulate_sigma_with(
    v: &[Option<f64>],
    a: &DMatrix<f64>,
    n_draws: usize,
    mut multiplier: impl FnMut(usize, usize) -> Result<f64, NumericsError>,
) -> Result<VarianceDraws, ClassicalError> {
    if n_draws == 0 {
        return Err(ClassicalError::NoDraws);
    }
    let mut draws = Vec::with_capacity(n_draws);
    for d in 0..n_draws {
        let mut vt = Vec::with_capacity(v.len());
        for (m, vm) in v.iter().enumerate() {
            vt.push(match vm {
                Some(x) => Some(x * multiplier(d, m)?),
                None => None,
            });
        }
        draws.push(estimate_sigma_moments(&vt, a)?);
    }
    let summary = summarize_columns(&draws, v.len(), libm::sqrt);
    Ok(VarianceDraws { draws, summary })
}

/// Uncertainty in `σ`: each draw scales `V_m` by `df_m/χ²_{df_m}`, solves the
/// moments system and truncates at zero. Draw `d` uses stream `rng.fork(d)`.
pub fn simulate_sigma_intervals(
    v: &[Option<f64>],
    a: &DMatrix<f64>,
    design: &DesignModel,
    n_draws: usize,
    rng: &RngStream,
) -> Result<VarianceDraws, ClassicalError> {
    let mut current = (usize::MAX, rng.rng());
    simulate_sigma_with(v, a, n_draws, |d, m| {
        if current.0 != d {
            current = (d, rng.fork(d as u64).rng());
        }
        let df = design.batch(m).df as f64;
        Ok(df / sample_chisq(df, &mut current.1)?)
    })
}

/// Finite-population standard deviations `s_m` given draws of `σ²`.
///
/// For each draw the coefficients of every batch are drawn from their
/// normal conditional given the data and `σ`: shrink factor
/// `λ = EV_m / (EV_m + σ_m²)` with `EV_m = Σ_{k∈I(m)} (J_m/J_k) σ_k²`,
/// mean `(1 − λ) β̂`, sd `sqrt(λ σ_m²)`. Draw `d` uses `rng.fork(d)`.
pub fn infer_finite_population(
    sigma2_draws: &[Vec<f64>],
    design: &DesignModel,
    estimates: &BatchEstimates,
    rng: &RngStream,
) -> VarianceDraws {
    let a = ev_matrix(design);
    let mut draws = Vec::with_capacity(sigma2_draws.len());
    let mut beta = Vec::new();
    for (d, sigma2) in sigma2_draws.iter().enumerate() {
        let mut g = rng.fork(d as u64).rng();
        let ev = expected_below(&a, sigma2);
        let mut s = Vec::with_capacity(design.len());
        for (m, batch) in design.batches().iter().enumerate() {
            let (sig2, ev_m) = (sigma2[m], ev[m]);
            if sig2 <= 0.0 || batch.df == 0 {
                s.push(0.0);
                continue;
            }
            let lambda = ev_m / (ev_m + sig2);
            let sd = libm::sqrt(lambda * sig2);
            beta.clear();
            beta.extend(estimates.beta_hat[m].iter().map(|&b| {
                let z: f64 = if sd > 0.0 { StandardNormal.sample(&mut g) } else { 0.0 };
                (1.0 - lambda) * b + sd * z
            }));
            s.push(batch.finite_population_sd(&beta));
        }
        draws.push(s);
    }
    let summary = summarize_columns(&draws, design.len(), |x| x);
    VarianceDraws { draws, summary }
}

/// Everything the moments path produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentsResult {
    pub v: Vec<Option<f64>>,
    pub a: DMatrix<f64>,
    pub sigma2_hat: Vec<f64>,
    /// Draws of `σ²` with `σ` summaries.
    pub sigma: VarianceDraws,
    /// Draws and summaries of `s`.
    pub s: VarianceDraws,
    pub warnings: Vec<Warning>,
}

impl MomentsResult {
    /// Display summary: point estimates are the truncated moments estimates.
    pub fn summary(&self, design: &DesignModel) -> VCSummary {
        let rows = design
            .batches()
            .iter()
            .enumerate()
            .map(|(m, b)| {
                let est = libm::sqrt(self.sigma2_hat[m]);
                VCRow {
                    label: b.label.clone(),
                    j: b.j(),
                    df: b.df,
                    s: IntervalEstimate::new(est, &self.s.summary[m]),
                    sigma: Some(IntervalEstimate::new(est, &self.sigma.summary[m])),
                }
            })
            .collect();
        VCSummary { rows, source: EstimateSource::Moments }
    }
}

/// Moments estimates with simulated intervals for `σ` (stream `rng.fork(0)`)
/// and `s` (stream `rng.fork(1)`).
pub fn run_moments(
    design: &DesignModel,
    estimates: &BatchEstimates,
    n_draws: usize,
    rng: &RngStream,
) -> Result<MomentsResult, ClassicalError> {
    let a = ev_matrix(design);
    let v = estimates.v.clone();
    let sigma2_hat = estimate_sigma_moments(&v, &a)?;
    let sigma = simulate_sigma_intervals(&v, &a, design, n_draws, &rng.fork(0))?;
    let s = infer_finite_population(&sigma.draws, design, estimates, &rng.fork(1));
    let warnings = design
        .batches()
        .iter()
        .filter(|b| b.df == 0)
        .map(|b| Warning::NoDegreesOfFreedom { batch: b.label.to_string() })
        .collect();
    Ok(MomentsResult { v, a, sigma2_hat, sigma, s, warnings })
}
