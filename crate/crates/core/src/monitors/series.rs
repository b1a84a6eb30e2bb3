use serde::{Deserialize, Serialize};

use super::quantities::Trend;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Verdict {
    MonotoneNonincreasing,
    MonotoneNondecreasing,
    /// First sample interval ending at `t` where the series moved against its
    /// trend by `delta` beyond the accumulated slack.
    Violated { t: f64, delta: f64 },
    /// Free series carry no verdict.
    Unchecked,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

/// Time-stamped scalar diagnostic with a recomputable monotonicity verdict.
///
/// `slack[k]` is the tolerance accumulated from the start up to sample `k`;
/// the allowance between two samples is the difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSeries {
    pub name: String,
    pub trend: Trend,
    pub samples: Vec<(f64, f64)>,
    pub slack: Vec<f64>,
}

impl MonitorSeries {
    pub fn new(name: impl Into<String>, trend: Trend) -> Self {
        Self { name: name.into(), trend, samples: vec![], slack: vec![] }
    }

    /// Appends a sample; times must be non-decreasing.
    pub fn push(&mut self, t: f64, value: f64, accumulated_slack: f64) {
        if let Some(&(last, _)) = self.samples.last() {
            assert!(t >= last, "monitor samples must be time-ordered");
        }
        self.samples.push((t, value));
        self.slack.push(accumulated_slack);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn last(&self) -> Option<f64> {
        self.samples.last().map(|s| s.1)
    }

    pub fn verdict(&self) -> Verdict {
        let sign = match self.trend {
            Trend::NonIncreasing => 1.0,
            Trend::NonDecreasing => -1.0,
            Trend::Free => return Verdict::Unchecked,
        };
        for k in 1..self.samples.len() {
            let rise = sign * (self.samples[k].1 - self.samples[k - 1].1);
            let allowed = self.slack[k] - self.slack[k - 1];
            if rise.is_nan() || rise > allowed {
                return Verdict::Violated { t: self.samples[k].0, delta: rise - allowed };
            }
        }
        match self.trend {
            Trend::NonIncreasing => Verdict::MonotoneNonincreasing,
            _ => Verdict::MonotoneNondecreasing,
        }
    }

    /// Largest single-interval move against the trend, ignoring slack.
    pub fn worst_regression(&self) -> f64 {
        let sign = match self.trend {
            Trend::NonIncreasing => 1.0,
            Trend::NonDecreasing => -1.0,
            Trend::Free => return 0.0,
        };
        self.samples.windows(2).map(|w| sign * (w[1].1 - w[0].1)).fold(0.0, f64::max)
    }

    /// Least-squares slope of `log(value)` against `t` over the last half of
    /// the samples (positive values only). `None` with fewer than two points.
    pub fn fitted_log_slope(&self) -> Option<f64> {
        let start = self.samples.len() / 2;
        let pts: Vec<(f64, f64)> =
            self.samples[start..].iter().filter(|s| s.1 > 0.0 && s.1.is_finite()).map(|&(t, v)| (t, v.ln())).collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let tb = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let yb = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - tb).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        Some(pts.iter().map(|p| (p.0 - tb) * (p.1 - yb)).sum::<f64>() / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_absorbs_small_rises() {
        let mut s = MonitorSeries::new("x", Trend::NonIncreasing);
        s.push(0.0, 1.0, 0.0);
        s.push(0.1, 1.0 + 5e-8, 1e-7);
        assert_eq!(s.verdict(), Verdict::MonotoneNonincreasing);
        s.push(0.2, 1.0 + 5e-7, 2e-7);
        match s.verdict() {
            Verdict::Violated { t, delta } => {
                assert_eq!(t, 0.2);
                assert!((delta - (4.5e-7 - 1e-7)).abs() < 1e-15);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn exponential_decay_slope() {
        let mut s = MonitorSeries::new("T", Trend::Free);
        for k in 0..20 {
            let t = k as f64 * 0.1;
            s.push(t, 3.0 * (-2.5 * t).exp(), 0.0);
        }
        assert!((s.fitted_log_slope().unwrap() + 2.5).abs() < 1e-12);
        assert_eq!(s.verdict(), Verdict::Unchecked);
    }
}
