use serde::Serialize;

/// Residual statistics of one check over a point set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Point where the largest residual occurred.
    pub worst_point: Option<Vec<f64>>,
    pub passed: bool,
}

impl Report {
    /// Builds a report from per-point residuals; passes iff every residual is
    /// finite and at most `tolerance`.
    pub fn from_residuals(check: impl Into<String>, residuals: &[f64], points: &[Vec<f64>], tolerance: f64) -> Report {
        let mut max = 0.0f64;
        let mut worst: Option<usize> = None;
        let mut total = 0.0;
        let mut finite = true;
        for (k, r) in residuals.iter().enumerate() {
            if !r.is_finite() {
                if finite {
                    worst = Some(k);
                }
                finite = false;
                max = f64::INFINITY;
                continue;
            }
            total += r;
            if finite && (worst.is_none() || *r > max) {
                max = *r;
                worst = Some(k);
            }
        }
        let worst = worst.and_then(|k| points.get(k).cloned());
        let mean = if residuals.is_empty() {
            0.0
        } else {
            total / residuals.len() as f64
        };
        Report {
            check: check.into(),
            samples: residuals.len(),
            tolerance,
            max_residual: max,
            mean_residual: mean,
            worst_point: worst,
            passed: finite && max <= tolerance,
        }
    }
}

/// Largest absolute entry.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn variance(values: &[f64]) -> f64 {
    std_dev(values).powi(2)
}
