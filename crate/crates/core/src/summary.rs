//! Per-batch variance-component summaries and run warnings.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::numerics::QuantileSummary;

/// Where a displayed point estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    /// Truncated method-of-moments estimate.
    Moments,
    /// Posterior median.
    PosteriorMedian,
}

impl EstimateSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateSource::Moments => "moments",
            EstimateSource::PosteriorMedian => "posterior_median",
        }
    }
}

/// Point estimate with 50% and 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub est: f64,
    pub q025: f64,
    pub q25: f64,
    pub q75: f64,
    pub q975: f64,
}

impl IntervalEstimate {
    pub fn new(est: f64, q: &QuantileSummary) -> Self {
        Self { est, q025: q.q025, q25: q.q25, q75: q.q75, q975: q.q975 }
    }

    pub fn width95(&self) -> f64 {
        self.q975 - self.q025
    }

    pub fn is_nested(&self) -> bool {
        self.q025 <= self.q25 && self.q25 <= self.q75 && self.q75 <= self.q975
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VCRow {
    pub label: String,
    pub j: usize,
    pub df: usize,
    /// Finite-population standard deviation.
    pub s: IntervalEstimate,
    /// Superpopulation standard deviation.
    pub sigma: Option<IntervalEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VCSummary {
    pub rows: Vec<VCRow>,
    pub source: EstimateSource,
}

impl VCSummary {
    /// Axis maximum: covers every point and 97.5% endpoint shown.
    pub fn scale_max(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| {
                let s = [r.s.est, r.s.q975];
                let sigma = r.sigma.map_or([0.0, 0.0], |g| [g.est, g.q975]);
                s.into_iter().chain(sigma)
            })
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The batch has no degrees of freedom and was left out of estimation.
    NoDegreesOfFreedom { batch: String },
    /// Under the uniform prior on σ a batch with one degree of freedom has an
    /// improper posterior for σ; draws are truncated at `sigma_max`.
    ImproperPosterior { batch: String, sigma_max: f64 },
    /// Split-chain potential scale reduction above the threshold.
    NotConverged { quantity: String, rhat: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NoDegreesOfFreedom { batch } => {
                write!(f, "batch `{batch}` has no degrees of freedom; its variance is fixed at 0")
            }
            Warning::ImproperPosterior { batch, sigma_max } => write!(
                f,
                "batch `{batch}` has 1 degree of freedom: the posterior for its sd is improper \
                 under the uniform prior; draws truncated at {sigma_max}"
            ),
            Warning::NotConverged { quantity, rhat } => {
                write!(f, "{quantity}: R-hat {rhat:.3} indicates the chains have not mixed")
            }
        }
    }
}
