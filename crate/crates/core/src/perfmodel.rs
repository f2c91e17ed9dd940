//! Runtime models: the logarithmic core-scaling law and the linear column law.
//!
//! The log law maps a core count `c` to `L(c) = -slope * ln(c) + intercept`,
//! where `L` is the base-10 logarithm of the elapsed seconds for a full run.
//! The split law maps a column count `gamma` to seconds as
//! `t = slope_a * gamma + intercept_b`.

use crate::math::{ceil_to_u32, ceil_tolerant, exp, ln, log10, pow10};
use crate::Environment;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("core count must be at least 1")]
    ZeroCores,
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("need at least two distinct {0} values to fit a line")]
    InsufficientData(&'static str),
    #[error("cluster law evaluates to zero at {cores} cores; correction factor is singular")]
    Singular { cores: u32 },
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("deadline of {0} s needs more cores than can be represented")]
    Unattainable(f64),
}

/// Coefficients of the log performance law for one environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLawModel {
    slope: f64,
    intercept: f64,
    label: Environment,
}

impl LogLawModel {
    /// Cluster law `-0.65 ln c + 6.5`.
    pub const REFERENCE_CLUSTER: LogLawModel = LogLawModel {
        slope: 0.65,
        intercept: 6.5,
        label: Environment::Cluster,
    };

    /// Cloud law `-0.77 ln c + 7.1`.
    pub const REFERENCE_CLOUD: LogLawModel = LogLawModel {
        slope: 0.77,
        intercept: 7.1,
        label: Environment::Cloud,
    };

    pub fn new(slope: f64, intercept: f64, label: Environment) -> Result<Self, ModelError> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(ModelError::InvalidModel(
                "log-law slope must be positive and finite",
            ));
        }
        if !intercept.is_finite() {
            return Err(ModelError::InvalidModel("log-law intercept must be finite"));
        }
        Ok(Self {
            slope,
            intercept,
            label,
        })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn label(&self) -> Environment {
        self.label
    }

    pub fn with_label(self, label: Environment) -> Self {
        Self { label, ..self }
    }

    /// Law value in log10-seconds.
    pub fn eval(&self, cores: u32) -> Result<f64, ModelError> {
        if cores == 0 {
            return Err(ModelError::ZeroCores);
        }
        Ok(-self.slope * ln(cores as f64) + self.intercept)
    }

    /// Predicted full-run seconds, `10^eval(cores)`.
    pub fn predicted_seconds(&self, cores: u32) -> Result<f64, ModelError> {
        self.eval(cores).map(pow10)
    }
}

/// Linear relation between migrated column count and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitModel {
    slope_a: f64,
    intercept_b: f64,
}

impl SplitModel {
    /// `t = 7.46 gamma + 231.18`.
    pub const REFERENCE: SplitModel = SplitModel {
        slope_a: 7.46,
        intercept_b: 231.18,
    };

    pub fn new(slope_a: f64, intercept_b: f64) -> Result<Self, ModelError> {
        if !(slope_a.is_finite() && slope_a > 0.0) {
            return Err(ModelError::InvalidModel(
                "split slope must be positive and finite",
            ));
        }
        if !intercept_b.is_finite() {
            return Err(ModelError::InvalidModel("split intercept must be finite"));
        }
        Ok(Self {
            slope_a,
            intercept_b,
        })
    }

    pub fn slope_a(&self) -> f64 {
        self.slope_a
    }

    pub fn intercept_b(&self) -> f64 {
        self.intercept_b
    }

    pub fn time_for(&self, gamma: u32) -> f64 {
        self.slope_a * gamma as f64 + self.intercept_b
    }
}

/// One timing observation from a calibration job. `count` is a core count for
/// the log law and a column count for the split law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub count: u32,
    pub elapsed_seconds: f64,
}

impl CalibrationSample {
    pub fn new(count: u32, elapsed_seconds: f64) -> Self {
        Self {
            count,
            elapsed_seconds,
        }
    }
}

/// A fitted model together with its goodness of fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport<M> {
    pub model: M,
    /// Residual sum of squares in the coordinates the line was fitted in
    /// (log10 seconds for the log law, seconds for the split law).
    pub residual_sum_squares: f64,
    pub samples: usize,
}

struct Line {
    gradient: f64,
    offset: f64,
    rss: f64,
}

/// Ordinary least squares on centred data.
fn fit_line(points: &[(f64, f64)], what: &'static str) -> Result<Line, ModelError> {
    let n = points.len();
    let distinct = points.iter().skip(1).any(|&(x, _)| x != points[0].0);
    if n < 2 || !distinct {
        return Err(ModelError::InsufficientData(what));
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    let gradient = sxy / sxx;
    let offset = mean_y - gradient * mean_x;
    let rss = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (gradient * x + offset);
            r * r
        })
        .sum();
    Ok(Line {
        gradient,
        offset,
        rss,
    })
}

fn check_sample(s: &CalibrationSample, what: &'static str) -> Result<(), ModelError> {
    if s.count == 0 {
        return Err(ModelError::NonPositive { what, value: 0.0 });
    }
    if !(s.elapsed_seconds.is_finite() && s.elapsed_seconds > 0.0) {
        return Err(ModelError::NonPositive {
            what: "elapsed seconds",
            value: s.elapsed_seconds,
        });
    }
    Ok(())
}

/// Fits the log law by regressing log10(elapsed) on ln(cores).
pub fn calibrate_log_law(
    samples: &[CalibrationSample],
    label: Environment,
) -> Result<FitReport<LogLawModel>, ModelError> {
    let mut points = alloc::vec::Vec::with_capacity(samples.len());
    for s in samples {
        check_sample(s, "core count")?;
        points.push((ln(s.count as f64), log10(s.elapsed_seconds)));
    }
    let line = fit_line(&points, "core count")?;
    let model = LogLawModel::new(-line.gradient, line.offset, label)?;
    Ok(FitReport {
        model,
        residual_sum_squares: line.rss,
        samples: samples.len(),
    })
}

pub fn fit_log_law(
    samples: &[CalibrationSample],
    label: Environment,
) -> Result<LogLawModel, ModelError> {
    calibrate_log_law(samples, label).map(|r| r.model)
}

/// Fits `t = a * gamma + b` by ordinary least squares.
pub fn calibrate_split_model(
    samples: &[CalibrationSample],
) -> Result<FitReport<SplitModel>, ModelError> {
    let mut points = alloc::vec::Vec::with_capacity(samples.len());
    for s in samples {
        if !(s.elapsed_seconds.is_finite() && s.elapsed_seconds > 0.0) {
            return Err(ModelError::NonPositive {
                what: "elapsed seconds",
                value: s.elapsed_seconds,
            });
        }
        points.push((s.count as f64, s.elapsed_seconds));
    }
    let line = fit_line(&points, "gamma")?;
    let model = SplitModel::new(line.gradient, line.offset)?;
    Ok(FitReport {
        model,
        residual_sum_squares: line.rss,
        samples: samples.len(),
    })
}

pub fn fit_split_model(samples: &[CalibrationSample]) -> Result<SplitModel, ModelError> {
    calibrate_split_model(samples).map(|r| r.model)
}

pub fn eval_log_law(model: &LogLawModel, cores: u32) -> Result<f64, ModelError> {
    model.eval(cores)
}

pub fn predicted_seconds(model: &LogLawModel, cores: u32) -> Result<f64, ModelError> {
    model.predicted_seconds(cores)
}

/// `K = L_cloud(c) / L_cluster(c)`, a ratio of log-times.
pub fn correction_factor(
    cloud: &LogLawModel,
    cluster: &LogLawModel,
    cores: u32,
) -> Result<f64, ModelError> {
    let denominator = cluster.eval(cores)?;
    if denominator == 0.0 {
        return Err(ModelError::Singular { cores });
    }
    Ok(cloud.eval(cores)? / denominator)
}

/// Smallest core count whose predicted runtime fits within the deadline.
pub fn required_cores(cluster: &LogLawModel, deadline_seconds: f64) -> Result<u32, ModelError> {
    if !(deadline_seconds.is_finite() && deadline_seconds > 0.0) {
        return Err(ModelError::NonPositive {
            what: "deadline",
            value: deadline_seconds,
        });
    }
    let ln_cores = (cluster.intercept - log10(deadline_seconds)) / cluster.slope;
    let estimate = ceil_tolerant(exp(ln_cores));
    if estimate >= u32::MAX as f64 {
        return Err(ModelError::Unattainable(deadline_seconds));
    }
    let mut cores = (estimate as u32).max(1);
    // Settle rounding at the boundary against the forward law.
    while cores > 1 && cluster.predicted_seconds(cores - 1)? <= deadline_seconds {
        cores -= 1;
    }
    while cluster.predicted_seconds(cores)? > deadline_seconds {
        cores = cores
            .checked_add(1)
            .ok_or(ModelError::Unattainable(deadline_seconds))?;
    }
    Ok(cores)
}

/// Cloud cores for the cluster core deficit, `ceil((c - c_cluster) * K)`,
/// clamped at zero.
pub fn cloud_cores(c_required: u32, c_cluster: u32, k: f64) -> Result<u32, ModelError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(ModelError::NonPositive {
            what: "correction factor",
            value: k,
        });
    }
    let deficit = c_required as f64 - c_cluster as f64;
    Ok(ceil_to_u32(deficit * k))
}

/// Columns to migrate for a time surplus, `ceil((t - b) / a)` clamped at zero.
pub fn gamma_for_time(model: &SplitModel, time_surplus_seconds: f64) -> u32 {
    ceil_to_u32((time_surplus_seconds - model.intercept_b) / model.slope_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn cluster() -> LogLawModel {
        LogLawModel::REFERENCE_CLUSTER
    }

    fn cloud() -> LogLawModel {
        LogLawModel::REFERENCE_CLOUD
    }

    #[test]
    fn eval_examples() {
        assert!((cluster().eval(10).unwrap() - 5.003_319_689_553_87).abs() < 1e-12);
        assert_eq!(cluster().eval(1).unwrap(), 6.5);
        assert!((cloud().eval(40).unwrap() - 4.259_562_820_332_269).abs() < 1e-12);
        assert_eq!(cloud().eval(0), Err(ModelError::ZeroCores));
    }

    #[test]
    fn predicted_seconds_examples() {
        let t = cluster().predicted_seconds(10).unwrap();
        assert!((t - 100_767.315_661_602).abs() < 1e-6);
        let unit = LogLawModel::new(1.0, 0.0, Environment::Cluster).unwrap();
        assert_eq!(unit.predicted_seconds(1).unwrap(), 1.0);
        let t = cloud().predicted_seconds(40).unwrap();
        assert!((t - 18_178.699_904_466_56).abs() < 1e-6);
    }

    #[test]
    fn model_invariants_are_checked() {
        assert!(LogLawModel::new(0.0, 1.0, Environment::Cloud).is_err());
        assert!(LogLawModel::new(-1.0, 1.0, Environment::Cloud).is_err());
        assert!(LogLawModel::new(1.0, f64::INFINITY, Environment::Cloud).is_err());
        assert!(SplitModel::new(0.0, 1.0).is_err());
    }

    #[test]
    fn fit_log_law_recovers_noiseless_coefficients() {
        let samples: Vec<_> = [5u32, 10, 20, 40]
            .iter()
            .map(|&c| CalibrationSample::new(c, cluster().predicted_seconds(c).unwrap()))
            .collect();
        let m = fit_log_law(&samples, Environment::Cluster).unwrap();
        assert!((m.slope() - 0.65).abs() / 0.65 < 1e-9);
        assert!((m.intercept() - 6.5).abs() / 6.5 < 1e-9);
    }

    #[test]
    fn fit_log_law_two_points() {
        let samples = [
            CalibrationSample::new(1, pow10(6.5)),
            // core counts are integers, so c = 7 stands in for c = e
            CalibrationSample::new(7, pow10(6.5 - 0.65 * ln(7.0))),
        ];
        let m = fit_log_law(&samples, Environment::Cluster).unwrap();
        assert!((m.slope() - 0.65).abs() < 1e-12);
        assert!((m.intercept() - 6.5).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let one = [
            CalibrationSample::new(4, 10.0),
            CalibrationSample::new(4, 12.0),
        ];
        assert_eq!(
            fit_log_law(&one, Environment::Cluster),
            Err(ModelError::InsufficientData("core count"))
        );
        let bad = [
            CalibrationSample::new(4, 10.0),
            CalibrationSample::new(8, 0.0),
        ];
        assert!(matches!(
            fit_log_law(&bad, Environment::Cluster),
            Err(ModelError::NonPositive { .. })
        ));
        assert!(matches!(
            fit_split_model(&[CalibrationSample::new(3, 1.0)]),
            Err(ModelError::InsufficientData("gamma"))
        ));
    }

    #[test]
    fn correction_factor_examples() {
        assert_eq!(correction_factor(&cluster(), &cluster(), 17).unwrap(), 1.0);
        let k40 = correction_factor(&cloud(), &cluster(), 40).unwrap();
        assert!((k40 - 1.038_353_414_753_529).abs() < 1e-12);
        let k10 = correction_factor(&cloud(), &cluster(), 10).unwrap();
        assert!((k10 - 1.064_695_004_302_149).abs() < 1e-12);
    }

    #[test]
    fn correction_factor_singularity() {
        // L(c) = -1 ln c + ln 5 vanishes at c = 5.
        let zero_at_5 = LogLawModel::new(1.0, ln(5.0), Environment::Cluster).unwrap();
        assert_eq!(
            correction_factor(&cloud(), &zero_at_5, 5),
            Err(ModelError::Singular { cores: 5 })
        );
    }

    #[test]
    fn required_cores_examples() {
        assert_eq!(required_cores(&cluster(), pow10(4.1)).unwrap(), 41);
        assert_eq!(required_cores(&cluster(), pow10(6.5)).unwrap(), 1);
        assert_eq!(required_cores(&cluster(), 1e12).unwrap(), 1);
        assert!(required_cores(&cluster(), 0.0).is_err());
        assert!(required_cores(&cluster(), -5.0).is_err());
    }

    #[test]
    fn cloud_cores_examples() {
        assert_eq!(cloud_cores(40, 40, 1.3).unwrap(), 0);
        assert_eq!(cloud_cores(40, 20, 1.038_35).unwrap(), 21);
        assert_eq!(cloud_cores(30, 40, 1.05).unwrap(), 0);
        assert!(cloud_cores(40, 20, 0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let m = SplitModel::REFERENCE;
        assert_eq!(gamma_for_time(&m, 231.18), 0);
        assert_eq!(gamma_for_time(&m, 305.78), 10);
        assert_eq!(gamma_for_time(&m, 100.0), 0);
        assert_eq!(gamma_for_time(&m, 305.79), 11);
    }

    #[test]
    fn split_fit_recovers_reference_coefficients() {
        let samples: Vec<_> = (0..8)
            .map(|g| CalibrationSample::new(g * 25, SplitModel::REFERENCE.time_for(g * 25)))
            .collect();
        let m = fit_split_model(&samples).unwrap();
        assert!((m.slope_a() - 7.46).abs() / 7.46 < 1e-9);
        assert!((m.intercept_b() - 231.18).abs() / 231.18 < 1e-9);
        let two = [
            CalibrationSample::new(0, 231.18),
            CalibrationSample::new(10, 305.78),
        ];
        let m = fit_split_model(&two).unwrap();
        assert!((m.slope_a() - 7.46).abs() < 1e-12);
        assert!((m.intercept_b() - 231.18).abs() < 1e-12);
    }
}
