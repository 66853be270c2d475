/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Binomial proportion with a 95% score interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    /// Wilson score interval.
    pub fn wilson(hits: u64, trials: u64) -> Self {
        assert!(trials > 0 && hits <= trials);
        let n = trials as f64;
        let phat = hits as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let centre = (phat + z2 / (2.0 * n)) / denom;
        let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            hits,
            trials,
            fraction: phat,
            ci_low: (centre - half).max(0.0).min(phat),
            ci_high: (centre + half).min(1.0).max(phat),
        }
    }

    /// A proportion known without sampling error.
    pub fn exact(hits: u64, trials: u64) -> Self {
        let f = hits as f64 / trials as f64;
        Proportion {
            hits,
            trials,
            fraction: f,
            ci_low: f,
            ci_high: f,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.ci_low + self.ci_high)
    }

    pub fn straddles(&self, level: f64) -> bool {
        self.ci_low < level && level < self.ci_high
    }

    pub fn disjoint_above(&self, other: &Proportion) -> bool {
        self.ci_low > other.ci_high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_fraction() {
        for n in [1u64, 5, 40, 400] {
            for k in 0..=n {
                let p = Proportion::wilson(k, n);
                assert!(p.ci_low <= p.fraction && p.fraction <= p.ci_high);
                assert!(p.ci_low >= 0.0 && p.ci_high <= 1.0);
            }
        }
    }

    #[test]
    fn wilson_known_value() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let p = Proportion::wilson(50, 100);
        assert!((p.midpoint() - 0.5).abs() < 1e-12);
        assert!((p.ci_high - 0.596_168_469_634).abs() < 1e-9, "{}", p.ci_high);
        assert!((p.ci_low - 0.403_831_530_366).abs() < 1e-9);
    }
}
