use alloc::vec::Vec;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Empirical quantile of ascending `sorted` data: inverse CDF with linear
/// interpolation between order statistics at position (n - 1)·p.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = libm::floor(h) as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = h - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median plus 50% and 95% central intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSummary {
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
}

impl QuantileSummary {
    pub fn from_draws(draws: &[f64]) -> Self {
        let mut sorted: Vec<f64> = draws.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Self::from_sorted(&sorted)
    }

    pub fn from_sorted(sorted: &[f64]) -> Self {
        Self {
            q025: quantile_sorted(sorted, 0.025),
            q25: quantile_sorted(sorted, 0.25),
            median: quantile_sorted(sorted, 0.5),
            q75: quantile_sorted(sorted, 0.75),
            q975: quantile_sorted(sorted, 0.975),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self { q025: value, q25: value, median: value, q75: value, q975: value }
    }

    pub fn width95(&self) -> f64 {
        self.q975 - self.q025
    }

    /// 50% interval inside the 95% interval.
    pub fn is_nested(&self) -> bool {
        self.q025 <= self.q25 && self.q25 <= self.q75 && self.q75 <= self.q975
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            q025: f(self.q025),
            q25: f(self.q25),
            median: f(self.median),
            q75: f(self.q75),
            q975: f(self.q975),
        }
    }
}
