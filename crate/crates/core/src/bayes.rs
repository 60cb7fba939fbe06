//! Gibbs samplers for the hierarchical ANOVA model.
//!
//! Each non-residual batch has coefficients `β^(m) ~ N(0, σ_m²)`, the
//! residual batch is observation noise with variance `σ_M²`, and the grand
//! mean has a flat prior. The plain sampler alternates a normal draw of all
//! coefficients with inverse-χ² draws of the variances; the parameter-
//! expanded sampler writes `β^(m) = α_m γ^(m)`, `σ_m = |α_m| τ_m` and adds a
//! regression draw of the scale factors `α`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::classical::{ev_matrix, estimate_sigma_moments, expected_below, sweep_effects};
use crate::design::DesignModel;
use crate::numerics::{
    mean, sample_chisq, sample_uniform, sample_variance, NumericsError, QuantileSummary, RngStream,
};
use crate::summary::{EstimateSource, IntervalEstimate, VCRow, VCSummary, Warning};

/// Largest coefficient count drawn as one multivariate normal block; larger
/// models update one batch at a time.
pub const DEFAULT_JOINT_LIMIT: usize = 400;
pub const RHAT_THRESHOLD: f64 = 1.05;
const VAR_FLOOR: f64 = 1e-200;
const TRUNCATION_TRIES: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("invalid sampler configuration: {0}")]
    Config(&'static str),
    #[error("conditional covariance is not positive definite while updating {0}")]
    NumericalFailure(String),
    #[error("response has {found} values, design has {expected} observations")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Scaled inverse-χ²(ν_m, s0²_m) prior on each `σ_m²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPrior {
    pub nu: Vec<f64>,
    pub s0sq: Vec<f64>,
}

impl HyperPrior {
    /// Uniform prior on every `σ_m` (ν = −1, s0² = 0).
    pub fn uniform(batches: usize) -> Self {
        Self { nu: vec![-1.0; batches], s0sq: vec![0.0; batches] }
    }

    pub fn is_uniform(&self, m: usize) -> bool {
        self.nu[m] == -1.0 && self.s0sq[m] == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub chains: usize,
    pub iters: usize,
    pub warmup: usize,
    pub thin: usize,
    pub seed: u64,
    /// Use the parameter-expanded sampler.
    pub px: bool,
    /// Store coefficient draws (all batches but the residual).
    pub keep_beta: bool,
    /// Upper bound on `σ_m` for one-df batches; default 100 × sd(y).
    pub sigma_max: Option<f64>,
    pub joint_limit: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iters: 2000,
            warmup: 1000,
            thin: 1,
            seed: 0,
            px: true,
            keep_beta: false,
            sigma_max: None,
            joint_limit: DEFAULT_JOINT_LIMIT,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), BayesError> {
        if self.chains == 0 {
            return Err(BayesError::Config("at least one chain is required"));
        }
        if self.iters <= self.warmup {
            return Err(BayesError::Config("iterations must exceed warmup"));
        }
        if self.thin == 0 {
            return Err(BayesError::Config("thinning interval must be positive"));
        }
        if let Some(s) = self.sigma_max {
            if !(s > 0.0) {
                return Err(BayesError::Config("sigma_max must be positive"));
            }
        }
        Ok(())
    }

    /// Saved draws per chain.
    pub fn saved_per_chain(&self) -> usize {
        (self.iters - self.warmup).div_ceil(self.thin)
    }
}

/// Scale-expanded coordinates: `β^(m) = α_m γ^(m)`, `σ_m = |α_m| τ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PxState {
    pub gamma: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub mu: f64,
    /// Coefficients of every batch; the residual batch holds `y − fit`.
    pub beta: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub px: Option<PxState>,
}

impl ChainState {
    /// Largest deviation from `β = αγ` and `σ = |α|τ`; zero without PX fields.
    pub fn reconstruction_error(&self) -> f64 {
        let Some(px) = &self.px else { return 0.0 };
        let mut err: f64 = 0.0;
        for m in 0..self.beta.len() {
            for (b, g) in self.beta[m].iter().zip(&px.gamma[m]) {
                err = err.max((b - px.alpha[m] * g).abs());
            }
            err = err.max((self.sigma[m] - px.alpha[m].abs() * px.tau[m]).abs());
        }
        err
    }
}

/// Starting values derived from the sweep estimates and truncated moments.
#[derive(Debug, Clone, PartialEq)]
struct InitInfo {
    grand_mean: f64,
    beta_hat: Vec<Vec<f64>>,
    sigma2_hat: Vec<f64>,
    /// `|V_m − EV̂_m|`: range for restarting zero estimates.
    gap: Vec<f64>,
    var_y: f64,
}

pub struct Sampler<'a> {
    design: &'a DesignModel,
    y: &'a [f64],
    prior: HyperPrior,
    sigma_max: f64,
    /// Non-residual batches with positive degrees of freedom.
    active: Vec<bool>,
    ev: DMatrix<f64>,
    /// Offset of each active batch in the joint coefficient vector (grand mean at 0).
    offset: Vec<usize>,
    p: usize,
    xtx: Option<DMatrix<f64>>,
    xty: Vec<f64>,
    init: InitInfo,
}

fn fit_vector(design: &DesignModel, active: &[bool], mu: f64, coef: &[Vec<f64>], scale: &[f64]) -> Vec<f64> {
    let mut fit = vec![mu; design.n()];
    for (m, batch) in design.batches().iter().enumerate() {
        if !active[m] {
            continue;
        }
        for (f, &c) in fit.iter_mut().zip(&batch.cell_of) {
            *f += scale[m] * coef[m][c];
        }
    }
    fit
}

impl<'a> Sampler<'a> {
    pub fn new(
        design: &'a DesignModel,
        y: &'a [f64],
        prior: HyperPrior,
        config: &SamplerConfig,
    ) -> Result<Self, BayesError> {
        config.validate()?;
        if y.len() != design.n() {
            return Err(BayesError::LengthMismatch { expected: design.n(), found: y.len() });
        }
        let big_m = design.len();
        if prior.nu.len() != big_m || prior.s0sq.len() != big_m {
            return Err(BayesError::Config("prior must have one entry per batch"));
        }
        if prior.nu.iter().any(|&v| !(v >= -1.0)) || prior.s0sq.iter().any(|&v| !(v >= 0.0)) {
            return Err(BayesError::Config("prior needs nu >= -1 and s0sq >= 0"));
        }
        let res = design.residual();
        if design.batch(res).df == 0 {
            return Err(BayesError::Config("residual batch has no degrees of freedom"));
        }
        let active: Vec<bool> =
            (0..big_m).map(|m| m != res && design.batch(m).df > 0).collect();
        let var_y = sample_variance(y);
        let sigma_max = config.sigma_max.unwrap_or(100.0 * libm::sqrt(var_y).max(1e-8));

        let mut offset = vec![usize::MAX; big_m];
        let mut p = 1;
        for m in 0..big_m {
            if active[m] {
                offset[m] = p;
                p += design.batch(m).j();
            }
        }
        let cols: Vec<(usize, &[usize])> = (0..big_m)
            .filter(|&m| active[m])
            .map(|m| (offset[m], design.batch(m).cell_of.as_slice()))
            .collect();
        let idx_of = |i: usize| core::iter::once(0).chain(cols.iter().map(move |(o, c)| o + c[i]));
        let mut xty = vec![0.0; p];
        for (i, &yi) in y.iter().enumerate() {
            for k in idx_of(i) {
                xty[k] += yi;
            }
        }
        let xtx = (p <= config.joint_limit).then(|| {
            let mut xtx = DMatrix::zeros(p, p);
            let mut idx = Vec::with_capacity(big_m + 1);
            for i in 0..y.len() {
                idx.clear();
                idx.extend(idx_of(i));
                for &a in &idx {
                    for &b in &idx {
                        xtx[(a, b)] += 1.0;
                    }
                }
            }
            xtx
        });

        let ev = ev_matrix(design);
        let (grand_mean, beta_hat) = sweep_effects(design, y);
        let v: Vec<Option<f64>> = design
            .batches()
            .iter()
            .enumerate()
            .map(|(m, b)| {
                (b.df > 0).then(|| beta_hat[m].iter().map(|x| x * x).sum::<f64>() / b.df as f64)
            })
            .collect();
        let sigma2_hat = estimate_sigma_moments(&v, &ev)?;
        let below = expected_below(&ev, &sigma2_hat);
        let gap = v.iter().zip(&below).map(|(vm, e)| vm.map_or(0.0, |x| (x - e).abs())).collect();

        Ok(Self {
            design,
            y,
            prior,
            sigma_max,
            active,
            ev,
            offset,
            p,
            xtx,
            xty,
            init: InitInfo { grand_mean, beta_hat, sigma2_hat, gap, var_y },
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Whether coefficients are drawn as one block.
    pub fn is_joint(&self) -> bool {
        self.xtx.is_some()
    }

    pub fn is_active(&self, m: usize) -> bool {
        self.active[m]
    }

    /// Starting state: moments variances (zeros restarted uniformly on
    /// `(0, |V_m − EV̂_m|)`, nonzero values jittered by `U(0.8, 1.25)`) and
    /// coefficient estimates shrunk accordingly.
    pub fn init_chain<R: Rng + ?Sized>(&self, px: bool, rng: &mut R) -> ChainState {
        let design = self.design;
        let info = &self.init;
        let big_m = design.len();
        let res = design.residual();
        let mut sigma2 = vec![0.0; big_m];
        for m in 0..big_m {
            if !(self.active[m] || m == res) {
                continue;
            }
            let hat = info.sigma2_hat[m];
            let mut s2 = if hat > 0.0 {
                hat * sample_uniform(0.8, 1.25, rng)
            } else if info.gap[m] > 0.0 {
                sample_uniform(0.0, info.gap[m], rng)
            } else {
                sample_uniform(0.0, info.var_y.max(1e-12), rng)
            };
            if design.batch(m).df == 1 {
                s2 = s2.min(self.sigma_max * self.sigma_max);
            }
            sigma2[m] = s2;
        }
        let below = expected_below(&self.ev, &sigma2);
        let mut beta: Vec<Vec<f64>> = (0..big_m)
            .map(|m| {
                if !self.active[m] {
                    return vec![0.0; design.batch(m).j()];
                }
                let shrink = sigma2[m] / (sigma2[m] + below[m]);
                info.beta_hat[m].iter().map(|b| shrink * b).collect()
            })
            .collect();
        let ones = vec![1.0; big_m];
        let fit = fit_vector(design, &self.active, info.grand_mean, &beta, &ones);
        beta[res] = self.y.iter().zip(&fit).map(|(y, f)| y - f).collect();
        let sigma: Vec<f64> = sigma2.iter().map(|&s| libm::sqrt(s)).collect();
        let px = px.then(|| PxState { gamma: beta.clone(), alpha: ones, tau: sigma.clone() });
        ChainState { mu: info.grand_mean, beta, sigma, px }
    }

    /// Draw the grand mean and the coefficients `θ` of the model
    /// `y = μ + Σ_m scale_m X_m θ^(m) + ε`, `θ^(m) ~ N(0, prior_var_m)`,
    /// `ε ~ N(0, noise_var)`, writing them into `coef`.
    fn draw_coefficients<R: Rng + ?Sized>(
        &self,
        mu: &mut f64,
        coef: &mut [Vec<f64>],
        scale: &[f64],
        prior_var: &[f64],
        noise_var: f64,
        rng: &mut R,
    ) -> Result<(), BayesError> {
        let noise_var = noise_var.max(VAR_FLOOR);
        let design = self.design;
        match &self.xtx {
            Some(xtx) => {
                let p = self.p;
                let mut s = vec![1.0; p];
                for m in (0..design.len()).filter(|&m| self.active[m]) {
                    s[self.offset[m]..self.offset[m] + design.batch(m).j()].fill(scale[m]);
                }
                let mut q = DMatrix::from_fn(p, p, |i, j| xtx[(i, j)] * s[i] * s[j] / noise_var);
                for m in (0..design.len()).filter(|&m| self.active[m]) {
                    let prec = 1.0 / prior_var[m].max(VAR_FLOOR);
                    for j in 0..design.batch(m).j() {
                        q[(self.offset[m] + j, self.offset[m] + j)] += prec;
                    }
                }
                let b = DVector::from_fn(p, |i, _| s[i] * self.xty[i] / noise_var);
                let chol = Cholesky::new(q)
                    .ok_or_else(|| BayesError::NumericalFailure("the joint coefficient block".into()))?;
                let mean = chol.solve(&b);
                let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
                let dev = chol
                    .l()
                    .transpose()
                    .solve_upper_triangular(&z)
                    .ok_or_else(|| BayesError::NumericalFailure("the joint coefficient block".into()))?;
                let theta = mean + dev;
                *mu = theta[0];
                for m in (0..design.len()).filter(|&m| self.active[m]) {
                    let o = self.offset[m];
                    coef[m].copy_from_slice(theta.rows(o, design.batch(m).j()).as_slice());
                }
            }
            None => {
                let mut fit = fit_vector(design, &self.active, *mu, coef, scale);
                let n = self.y.len() as f64;
                let r_sum: f64 = self.y.iter().zip(&fit).map(|(y, f)| y - f + *mu).sum();
                let z: f64 = StandardNormal.sample(rng);
                let new_mu = r_sum / n + libm::sqrt(noise_var / n) * z;
                fit.iter_mut().for_each(|f| *f += new_mu - *mu);
                *mu = new_mu;
                for &m in design.sweep_order() {
                    if !self.active[m] {
                        continue;
                    }
                    let batch = design.batch(m);
                    let a = scale[m];
                    let mut sums = vec![0.0; batch.j()];
                    for ((y, f), &c) in self.y.iter().zip(&fit).zip(&batch.cell_of) {
                        sums[c] += y - f + a * coef[m][c];
                    }
                    let prior_prec = 1.0 / prior_var[m].max(VAR_FLOOR);
                    let mut fresh = Vec::with_capacity(batch.j());
                    for (j, &count) in batch.cell_counts.iter().enumerate() {
                        let prec = count as f64 * a * a / noise_var + prior_prec;
                        if !(prec > 0.0) || !prec.is_finite() {
                            return Err(BayesError::NumericalFailure(format!("batch `{}`", batch.label)));
                        }
                        let z: f64 = StandardNormal.sample(rng);
                        fresh.push(a * sums[j] / noise_var / prec + z / libm::sqrt(prec));
                    }
                    for (f, &c) in fit.iter_mut().zip(&batch.cell_of) {
                        *f += a * (fresh[c] - coef[m][c]);
                    }
                    coef[m] = fresh;
                }
            }
        }
        Ok(())
    }

    fn set_residual(&self, state: &mut ChainState) {
        let ones = vec![1.0; self.design.len()];
        let fit = fit_vector(self.design, &self.active, state.mu, &state.beta, &ones);
        let res = self.design.residual();
        for ((r, y), f) in state.beta[res].iter_mut().zip(self.y).zip(&fit) {
            *r = y - f;
        }
    }

    /// Variance draw for batch `m` from its scaled inverse-χ² conditional,
    /// given the coefficient sum of squares and the prior scale divided by
    /// `scale²`; one-df batches are truncated at `bound`.
    fn draw_variance<R: Rng + ?Sized>(
        &self,
        m: usize,
        sum_sq: f64,
        prior_scale: f64,
        bound: f64,
        rng: &mut R,
    ) -> Result<f64, BayesError> {
        let batch = self.design.batch(m);
        let dof = batch.j() as f64 + self.prior.nu[m];
        let numer = (self.prior.nu[m] * prior_scale + sum_sq).max(0.0);
        let mut draw = numer / sample_chisq(dof, rng)?;
        if batch.df == 1 {
            let cap = bound * bound;
            let mut tries = 0;
            while draw > cap && tries < TRUNCATION_TRIES {
                draw = numer / sample_chisq(dof, rng)?;
                tries += 1;
            }
            draw = draw.min(cap);
        }
        Ok(draw)
    }

    /// Coefficient draw of the plain sampler; the residual batch is reset to `y − fit`.
    pub fn update_beta<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<(), BayesError> {
        let big_m = self.design.len();
        let var: Vec<f64> = state.sigma.iter().map(|s| s * s).collect();
        let noise = var[self.design.residual()];
        self.draw_coefficients(&mut state.mu, &mut state.beta, &vec![1.0; big_m], &var, noise, rng)?;
        self.set_residual(state);
        Ok(())
    }

    /// Variance draws of the plain sampler, residual included.
    pub fn update_sigma<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<(), BayesError> {
        let res = self.design.residual();
        for m in 0..self.design.len() {
            if !(self.active[m] || m == res) {
                continue;
            }
            let sum_sq: f64 = state.beta[m].iter().map(|b| b * b).sum();
            let s2 = self.draw_variance(m, sum_sq, self.prior.s0sq[m], self.sigma_max, rng)?;
            state.sigma[m] = libm::sqrt(s2);
        }
        Ok(())
    }

    pub fn gibbs_step_plain<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<(), BayesError> {
        self.update_beta(state, rng)?;
        self.update_sigma(state, rng)
    }

    /// One parameter-expanded sweep: `γ` given `(α, τ)`, `α` by regression on
    /// the batch predictors `z^(m)_i = γ^(m)_{j(i)}`, then `τ` and the
    /// residual variance; `(β, σ)` are rebuilt from the expanded coordinates.
    pub fn gibbs_step_px<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<(), BayesError> {
        let design = self.design;
        let big_m = design.len();
        let res = design.residual();
        let Some(mut px) = state.px.take() else {
            return Err(BayesError::Config("state has no expanded coordinates"));
        };
        let noise = state.sigma[res] * state.sigma[res];
        let tau2: Vec<f64> = px.tau.iter().map(|t| t * t).collect();
        self.draw_coefficients(&mut state.mu, &mut px.gamma, &px.alpha, &tau2, noise, rng)?;

        let act: Vec<usize> = (0..big_m).filter(|&m| self.active[m]).collect();
        if !act.is_empty() {
            let k = act.len();
            let mut ztz = DMatrix::<f64>::zeros(k, k);
            let mut ztr = DVector::<f64>::zeros(k);
            let mut z = vec![0.0; k];
            for (i, &yi) in self.y.iter().enumerate() {
                for (a, &m) in act.iter().enumerate() {
                    z[a] = px.gamma[m][design.batch(m).cell_of[i]];
                }
                let r = yi - state.mu;
                for a in 0..k {
                    ztr[a] += z[a] * r;
                    for b in 0..k {
                        ztz[(a, b)] += z[a] * z[b];
                    }
                }
            }
            let chol = Cholesky::new(ztz)
                .ok_or_else(|| BayesError::NumericalFailure("the batch scale factors".into()))?;
            let mean = chol.solve(&ztr);
            let e = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
            let dev = chol
                .l()
                .transpose()
                .solve_upper_triangular(&e)
                .ok_or_else(|| BayesError::NumericalFailure("the batch scale factors".into()))?;
            let sd = libm::sqrt(noise.max(VAR_FLOOR));
            for (a, &m) in act.iter().enumerate() {
                px.alpha[m] = mean[a] + sd * dev[a];
            }
        }

        for &m in &act {
            let alpha = px.alpha[m];
            state.beta[m] = px.gamma[m].iter().map(|g| alpha * g).collect();
        }
        self.set_residual(state);

        for &m in &act {
            let alpha = px.alpha[m];
            let sum_sq: f64 = px.gamma[m].iter().map(|g| g * g).sum();
            let t2 = self.draw_variance(
                m,
                sum_sq,
                self.prior.s0sq[m] / (alpha * alpha),
                self.sigma_max / alpha.abs(),
                rng,
            )?;
            px.tau[m] = libm::sqrt(t2);
            state.sigma[m] = alpha.abs() * px.tau[m];
        }
        let sum_sq: f64 = state.beta[res].iter().map(|b| b * b).sum();
        let s2 = self.draw_variance(res, sum_sq, self.prior.s0sq[res], self.sigma_max, rng)?;
        state.sigma[res] = libm::sqrt(s2);
        px.gamma[res].clone_from(&state.beta[res]);
        px.tau[res] = state.sigma[res];
        state.px = Some(px);
        Ok(())
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<(), BayesError> {
        if state.px.is_some() {
            self.gibbs_step_px(state, rng)
        } else {
            self.gibbs_step_plain(state, rng)
        }
    }

    /// Finite-population sd of every batch at the current coefficients.
    pub fn finite_population(&self, state: &ChainState) -> Vec<f64> {
        self.design
            .batches()
            .iter()
            .enumerate()
            .map(|(m, b)| if self.active[m] || b.is_residual { b.finite_population_sd(&state.beta[m]) } else { 0.0 })
            .collect()
    }

    /// Run chain `chain` on stream `fork(chain)` of the configured seed.
    pub fn run_chain(&self, config: &SamplerConfig, chain: usize) -> Result<ChainDraws, BayesError> {
        config.validate()?;
        let mut rng = RngStream::new(config.seed).fork(chain as u64).rng();
        let mut state = self.init_chain(config.px, &mut rng);
        let saved = config.saved_per_chain();
        let mut out = ChainDraws {
            chain,
            iterations: Vec::with_capacity(saved),
            sigma: Vec::with_capacity(saved),
            s: Vec::with_capacity(saved),
            mu: Vec::with_capacity(saved),
            beta: config.keep_beta.then(|| Vec::with_capacity(saved)),
            max_reconstruction_error: 0.0,
        };
        let res = self.design.residual();
        for it in 0..config.iters {
            self.step(&mut state, &mut rng)?;
            if it >= config.warmup && (it - config.warmup).is_multiple_of(config.thin) {
                out.iterations.push(it);
                out.sigma.push(state.sigma.clone());
                out.s.push(self.finite_population(&state));
                out.mu.push(state.mu);
                if let Some(b) = out.beta.as_mut() {
                    let mut kept = state.beta.clone();
                    kept[res] = Vec::new();
                    b.push(kept);
                }
                out.max_reconstruction_error = out.max_reconstruction_error.max(state.reconstruction_error());
            }
        }
        Ok(out)
    }

    /// Convergence diagnostics and warnings for a finished run.
    pub fn diagnose(&self, draws: &PosteriorDraws) -> Diagnostics {
        let design = self.design;
        let big_m = design.len();
        let mut warnings = Vec::new();
        for (m, b) in design.batches().iter().enumerate() {
            if b.df == 0 {
                warnings.push(Warning::NoDegreesOfFreedom { batch: b.label.to_string() });
            } else if b.df == 1 && self.prior.is_uniform(m) {
                warnings.push(Warning::ImproperPosterior { batch: b.label.to_string(), sigma_max: self.sigma_max });
            }
        }
        let per_chain = |f: &dyn Fn(&ChainDraws) -> Vec<f64>| draws.chains.iter().map(f).collect::<Vec<_>>();
        let mut rhat_sigma = Vec::with_capacity(big_m);
        let mut ess_sigma = Vec::with_capacity(big_m);
        let mut rhat_s = Vec::with_capacity(big_m);
        let mut ess_s = Vec::with_capacity(big_m);
        for m in 0..big_m {
            let sig = per_chain(&|c: &ChainDraws| c.sigma.iter().map(|d| d[m]).collect());
            let s = per_chain(&|c: &ChainDraws| c.s.iter().map(|d| d[m]).collect());
            let (r, e) = (split_rhat(&sig), effective_sample_size(&sig));
            if let Some(r) = r {
                if r > RHAT_THRESHOLD && (self.active[m] || m == design.residual()) {
                    warnings.push(Warning::NotConverged {
                        quantity: format!("sigma[{}]", design.batch(m).label),
                        rhat: r,
                    });
                }
            }
            rhat_sigma.push(r);
            ess_sigma.push(e);
            rhat_s.push(split_rhat(&s));
            ess_s.push(effective_sample_size(&s));
        }
        Diagnostics { rhat_sigma, ess_sigma, rhat_s, ess_s, warnings }
    }
}

/// Saved draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub chain: usize,
    pub iterations: Vec<usize>,
    /// Draw-major `σ` vectors.
    pub sigma: Vec<Vec<f64>>,
    /// Draw-major finite-population sds.
    pub s: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    /// Coefficients per draw; the residual batch is left empty.
    pub beta: Option<Vec<Vec<Vec<f64>>>>,
    pub max_reconstruction_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.chains.iter().map(|c| c.sigma.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All draws of `σ_m`, chain after chain.
    pub fn sigma(&self, m: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.sigma.iter().map(move |d| d[m])).collect()
    }

    pub fn s(&self, m: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.s.iter().map(move |d| d[m])).collect()
    }

    pub fn max_reconstruction_error(&self) -> f64 {
        self.chains.iter().map(|c| c.max_reconstruction_error).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub rhat_sigma: Vec<Option<f64>>,
    pub ess_sigma: Vec<Option<f64>>,
    pub rhat_s: Vec<Option<f64>>,
    pub ess_s: Vec<Option<f64>>,
    pub warnings: Vec<Warning>,
}

/// Halves of every chain, trimmed to a common even length.
fn split_chains(chains: &[Vec<f64>]) -> Option<Vec<&[f64]>> {
    let n = chains.iter().map(Vec::len).min()? / 2;
    if n < 2 {
        return None;
    }
    Some(chains.iter().flat_map(|c| [&c[..n], &c[n..2 * n]]).collect())
}

/// Split-chain potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let parts = split_chains(chains)?;
    let n = parts[0].len() as f64;
    let means: Vec<f64> = parts.iter().map(|p| mean(p)).collect();
    let w = mean(&parts.iter().map(|p| sample_variance(p)).collect::<Vec<_>>());
    let b = n * sample_variance(&means);
    if w == 0.0 {
        return (b == 0.0).then_some(1.0);
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Some(libm::sqrt(var_plus / w))
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let n = x.len();
    (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
}

/// Effective sample size over split chains, with Geyer's initial monotone
/// sequence truncation of the combined autocorrelations.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Option<f64> {
    let parts = split_chains(chains)?;
    let k = parts.len() as f64;
    let n = parts[0].len();
    let means: Vec<f64> = parts.iter().map(|p| mean(p)).collect();
    let w = mean(&parts.iter().map(|p| sample_variance(p)).collect::<Vec<_>>());
    let var_plus = (n as f64 - 1.0) / n as f64 * w + sample_variance(&means);
    let total = k * n as f64;
    if !(var_plus > 0.0) {
        return Some(total);
    }
    let rho = |lag: usize| {
        let acov = mean(&parts.iter().map(|p| autocovariance(p, lag)).collect::<Vec<_>>());
        1.0 - (w - acov) / var_plus
    };
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        t += 2;
    }
    Some(total / tau.max(1.0 / libm::log10(total.max(10.0))))
}

/// Run every chain in turn and diagnose.
pub fn run_chains(
    design: &DesignModel,
    y: &[f64],
    prior: HyperPrior,
    config: &SamplerConfig,
) -> Result<(PosteriorDraws, Diagnostics), BayesError> {
    let sampler = Sampler::new(design, y, prior, config)?;
    let chains = (0..config.chains).map(|c| sampler.run_chain(config, c)).collect::<Result<Vec<_>, _>>()?;
    let draws = PosteriorDraws { chains };
    let diagnostics = sampler.diagnose(&draws);
    Ok((draws, diagnostics))
}

/// Posterior medians with 50% and 95% intervals for `σ_m` and `s_m`.
pub fn summarize_posterior(draws: &PosteriorDraws, design: &DesignModel) -> VCSummary {
    let rows = design
        .batches()
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let qs = QuantileSummary::from_draws(&draws.s(m));
            let qg = QuantileSummary::from_draws(&draws.sigma(m));
            VCRow {
                label: b.label.clone(),
                j: b.j(),
                df: b.df,
                s: IntervalEstimate::new(qs.median, &qs),
                sigma: Some(IntervalEstimate::new(qg.median, &qg)),
            }
        })
        .collect();
    VCSummary { rows, source: EstimateSource::PosteriorMedian }
}
