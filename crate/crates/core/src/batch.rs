//! Adaptive batch sizing.
//!
//! The informed set shrinks as the solution improves. The ratio of its
//! current hypervolume to the hypervolume at the first solution drives a
//! decay factor `psi` in `[0, 1]`, and the batch size interpolates between
//! `m_min` and `m_max` with it. Before any solution is found the controller
//! samples at `m_max`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};

/// Default batch budget for the iteration-count decay.
pub const DEFAULT_ITERATION_BUDGET: u64 = 100;

/// Steepness and midpoint of the logistic smoothing of the raw ratio.
const SIGMOID_GAIN: f64 = 10.0;
const SIGMOID_MIDPOINT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecayStrategy {
    #[serde(rename = "fit-sl")]
    SigmoidLog,
    #[serde(rename = "fit-l")]
    Linear,
    #[serde(rename = "fit-p")]
    Parabola,
    #[serde(rename = "fit-b")]
    Brachistochrone,
    #[serde(rename = "fit-i")]
    IterationCount,
    #[serde(rename = "fixed")]
    Fixed,
}

impl DecayStrategy {
    pub const ALL: [DecayStrategy; 6] = [
        DecayStrategy::SigmoidLog,
        DecayStrategy::Linear,
        DecayStrategy::Parabola,
        DecayStrategy::Brachistochrone,
        DecayStrategy::IterationCount,
        DecayStrategy::Fixed,
    ];

    /// Strategies with a decay curve (everything but `Fixed`).
    pub const DECAYING: [DecayStrategy; 5] = [
        DecayStrategy::SigmoidLog,
        DecayStrategy::Linear,
        DecayStrategy::Parabola,
        DecayStrategy::Brachistochrone,
        DecayStrategy::IterationCount,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DecayStrategy::SigmoidLog => "fit-sl",
            DecayStrategy::Linear => "fit-l",
            DecayStrategy::Parabola => "fit-p",
            DecayStrategy::Brachistochrone => "fit-b",
            DecayStrategy::IterationCount => "fit-i",
            DecayStrategy::Fixed => "fixed",
        }
    }
}

impl fmt::Display for DecayStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecayStrategy {
    type Err = PlanError;
    fn from_str(s: &str) -> Result<Self> {
        DecayStrategy::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| PlanError::Config(format!("unknown decay strategy '{s}'")))
    }
}

/// Everything a decay curve may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayInputs {
    /// Raw ratio in `[0, 1]`.
    pub xi: f64,
    /// Logarithmic tuning parameter, used by sigmoid-log.
    pub lambda: f64,
    /// Batches since the first solution, used by iteration-count.
    pub iteration: u64,
    pub iteration_budget: u64,
}

/// `v_current / v_initial`.
pub fn raw_ratio(v_current: f64, v_initial: f64) -> Result<f64> {
    if !(v_current > 0.0) || !(v_initial > 0.0) {
        return Err(PlanError::Contract(format!(
            "raw ratio needs positive volumes (got {v_current}, {v_initial})"
        )));
    }
    if v_current > v_initial {
        return Err(PlanError::Contract(format!(
            "informed volume grew from {v_initial} to {v_current}"
        )));
    }
    Ok(v_current / v_initial)
}

/// Logistic smoothing `1 / (1 + exp(-10 (xi - 0.5)))`.
pub fn sigmoid_smooth(xi: f64) -> f64 {
    1.0 / (1.0 + (-SIGMOID_GAIN * (xi - SIGMOID_MIDPOINT)).exp())
}

/// `ln(1 + lambda * o_smooth) / ln(1 + lambda)`.
pub fn decay_factor(o_smooth: f64, lambda: f64) -> f64 {
    (lambda * o_smooth).ln_1p() / lambda.ln_1p()
}

/// `(m_max + m_min) / n`.
pub fn tuning_parameter(m_max: usize, m_min: usize, n: usize) -> Result<f64> {
    if m_min < 1 || m_max <= m_min || n < 2 {
        return Err(PlanError::Contract(format!(
            "tuning parameter needs m_max > m_min >= 1 and n >= 2 (got {m_max}, {m_min}, {n})"
        )));
    }
    Ok((m_max + m_min) as f64 / n as f64)
}

/// `m_min + psi (m_max - m_min)`, rounded half up and clamped.
pub fn batch_size(psi: f64, m_min: usize, m_max: usize) -> usize {
    let raw = m_min as f64 + psi * (m_max as f64 - m_min as f64);
    let rounded = (raw + 0.5).floor();
    if rounded.is_nan() {
        return m_min;
    }
    (rounded.max(m_min as f64) as usize).min(m_max)
}

/// Height of the cycloid through (0, 0) and (1, 1) at abscissa `x`.
///
/// The arc is `x = (t - sin t) / pi`, `y = (1 - cos t) / 2` for `t` in `[0, pi]`.
fn cycloid(x: f64) -> f64 {
    let target = x.clamp(0.0, 1.0) * std::f64::consts::PI;
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.sin() < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    (1.0 - t.cos()) / 2.0
}

/// Decay factor of a strategy.
pub fn decay_variant(strategy: DecayStrategy, inputs: DecayInputs) -> Result<f64> {
    let xi = inputs.xi;
    if !(0.0..=1.0).contains(&xi) {
        return Err(PlanError::Contract(format!("raw ratio {xi} outside [0, 1]")));
    }
    let psi = match strategy {
        DecayStrategy::SigmoidLog => {
            if !(inputs.lambda > 0.0) {
                return Err(PlanError::Contract("lambda must be positive".into()));
            }
            decay_factor(sigmoid_smooth(xi), inputs.lambda)
        }
        DecayStrategy::Linear => xi,
        DecayStrategy::Parabola => xi * xi,
        DecayStrategy::Brachistochrone => {
            if xi == 0.0 || xi == 1.0 {
                xi
            } else {
                cycloid(xi)
            }
        }
        DecayStrategy::IterationCount => {
            if inputs.iteration_budget == 0 {
                0.0
            } else {
                (1.0 - inputs.iteration as f64 / inputs.iteration_budget as f64).max(0.0)
            }
        }
        DecayStrategy::Fixed => {
            return Err(PlanError::Config(
                "the fixed strategy has no decay curve".into(),
            ))
        }
    };
    Ok(psi)
}

/// Batch-size state machine for one planner run.
#[derive(Debug, Clone)]
pub struct BatchController {
    pub strategy: DecayStrategy,
    pub m_min: usize,
    pub m_initial: usize,
    pub m_max: usize,
    pub c_last: f64,
    pub v_initial: Option<f64>,
    pub v_current: Option<f64>,
    pub lambda: f64,
    pub current_batch: usize,
    pub psi: Option<f64>,
    /// Batches started since the first solution.
    pub iteration: u64,
    pub iteration_budget: u64,
    v_initial_writes: u32,
}

impl BatchController {
    pub fn new(strategy: DecayStrategy, m_initial: usize, dimension: usize) -> Result<Self> {
        if m_initial < 1 {
            return Err(PlanError::Config("batch size must be at least 1".into()));
        }
        if dimension < 2 {
            return Err(PlanError::Config("dimension must be at least 2".into()));
        }
        let m_min = 1;
        let m_max = 2 * m_initial - m_min;
        let lambda = if m_max > m_min {
            tuning_parameter(m_max, m_min, dimension)?
        } else {
            (m_max + m_min) as f64 / dimension as f64
        };
        let current_batch = match strategy {
            DecayStrategy::Fixed => m_initial,
            _ => m_max,
        };
        Ok(BatchController {
            strategy,
            m_min,
            m_initial,
            m_max,
            c_last: f64::INFINITY,
            v_initial: None,
            v_current: None,
            lambda,
            current_batch,
            psi: None,
            iteration: 0,
            iteration_budget: DEFAULT_ITERATION_BUDGET,
            v_initial_writes: 0,
        })
    }

    pub fn with_iteration_budget(mut self, budget: u64) -> Self {
        self.iteration_budget = budget;
        self
    }

    /// How many times the initial hypervolume has been recorded (at most once).
    pub fn v_initial_writes(&self) -> u32 {
        self.v_initial_writes
    }

    fn inputs(&self, xi: f64) -> DecayInputs {
        DecayInputs {
            xi,
            lambda: self.lambda,
            iteration: self.iteration,
            iteration_budget: self.iteration_budget,
        }
    }

    fn current_xi(&self) -> Result<f64> {
        match (self.v_current, self.v_initial) {
            (Some(vc), Some(vi)) if vi > 0.0 && vc > 0.0 => raw_ratio(vc, vi),
            (Some(_), Some(vi)) if vi > 0.0 => Ok(0.0),
            _ => Ok(1.0),
        }
    }

    fn refresh(&mut self) -> Result<usize> {
        let xi = self.current_xi()?;
        let psi = decay_variant(self.strategy, self.inputs(xi))?;
        self.psi = Some(psi);
        self.current_batch = batch_size(psi, self.m_min, self.m_max);
        Ok(self.current_batch)
    }

    /// Reacts to the current solution cost. `volume` maps a cost to the
    /// hypervolume of its informed set. Returns the new batch size, or `None`
    /// when nothing changed.
    pub fn on_cost_update<F>(&mut self, c_current: f64, volume: F) -> Result<Option<usize>>
    where
        F: Fn(f64) -> f64,
    {
        if !c_current.is_finite() {
            return Ok(None);
        }
        if c_current == self.c_last {
            return Ok(None);
        }
        if c_current > self.c_last {
            return Err(PlanError::Contract(format!(
                "solution cost increased from {} to {c_current}",
                self.c_last
            )));
        }
        self.c_last = c_current;
        if self.v_initial.is_none() {
            self.v_initial = Some(volume(c_current));
            self.v_initial_writes += 1;
        }
        self.v_current = Some(volume(c_current));
        if self.strategy == DecayStrategy::Fixed {
            return Ok(None);
        }
        self.refresh().map(Some)
    }

    /// Called at the start of every batch; only the iteration-count decay
    /// reacts to it.
    pub fn begin_batch(&mut self) -> Result<Option<usize>> {
        if self.v_initial.is_none() {
            return Ok(None);
        }
        self.iteration += 1;
        if self.strategy == DecayStrategy::IterationCount {
            return self.refresh().map(Some);
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(xi: f64) -> DecayInputs {
        DecayInputs {
            xi,
            lambda: 100.0,
            iteration: 0,
            iteration_budget: 100,
        }
    }

    #[test]
    fn raw_ratio_examples() {
        assert_eq!(raw_ratio(2.0, 2.0).unwrap(), 1.0);
        assert!((raw_ratio(0.7363108, 1.4726216).unwrap() - 0.5).abs() < 1e-15);
        assert!(raw_ratio(0.0, 1.0).is_err());
        assert!(raw_ratio(1.5, 1.0).is_err());
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_smooth(0.5), 0.5);
        assert!((sigmoid_smooth(1.0) - 0.9933071).abs() < 1e-7);
        assert!((sigmoid_smooth(0.0) - 0.0066929).abs() < 1e-7);
    }

    #[test]
    fn decay_factor_examples() {
        assert_eq!(decay_factor(0.0, 100.0), 0.0);
        assert!((decay_factor(1.0, 100.0) - 1.0).abs() < 1e-15);
        assert!((decay_factor(0.9933071, 100.0) - 0.9985593).abs() < 1e-7);
    }

    #[test]
    fn tuning_parameter_examples() {
        assert_eq!(tuning_parameter(199, 1, 2).unwrap(), 100.0);
        assert_eq!(tuning_parameter(199, 1, 8).unwrap(), 25.0);
        assert_eq!(tuning_parameter(2, 1, 2).unwrap(), 1.5);
        assert!(tuning_parameter(1, 1, 2).is_err());
    }

    #[test]
    fn batch_size_examples() {
        assert_eq!(batch_size(0.0, 1, 199), 1);
        assert_eq!(batch_size(1.0, 1, 199), 199);
        assert_eq!(batch_size(0.9985593, 1, 199), 199);
        // half-up rounding
        assert_eq!(batch_size(0.5, 1, 4), 3);
        assert_eq!(batch_size(1.7, 1, 199), 199);
        assert_eq!(batch_size(-0.2, 1, 199), 1);
    }

    #[test]
    fn variant_endpoints_and_identity() {
        for s in [
            DecayStrategy::Linear,
            DecayStrategy::Parabola,
            DecayStrategy::Brachistochrone,
        ] {
            assert_eq!(decay_variant(s, inputs(0.0)).unwrap(), 0.0, "{s}");
            assert_eq!(decay_variant(s, inputs(1.0)).unwrap(), 1.0, "{s}");
        }
        let it = DecayStrategy::IterationCount;
        assert_eq!(decay_variant(it, inputs(0.3)).unwrap(), 1.0);
        let spent = DecayInputs { iteration: 100, ..inputs(0.3) };
        assert_eq!(decay_variant(it, spent).unwrap(), 0.0);
        assert_eq!(decay_variant(DecayStrategy::Linear, inputs(0.25)).unwrap(), 0.25);
        let sl = decay_variant(DecayStrategy::SigmoidLog, inputs(0.5)).unwrap();
        assert!((sl - 51f64.ln() / 101f64.ln()).abs() < 1e-15);
        assert!((sl - 0.8519443).abs() < 1e-7);
        assert!(decay_variant(DecayStrategy::Fixed, inputs(0.5)).is_err());
        assert!(decay_variant(DecayStrategy::Linear, inputs(1.5)).is_err());
    }

    #[test]
    fn sigmoid_log_range_is_bounded_away_from_the_extremes() {
        // the logistic never reaches 0 or 1, so neither does the decay factor
        let lo = decay_variant(DecayStrategy::SigmoidLog, inputs(0.0)).unwrap();
        let hi = decay_variant(DecayStrategy::SigmoidLog, inputs(1.0)).unwrap();
        assert!((lo - 1.6692851f64.ln() / 101f64.ln()).abs() < 1e-7);
        assert!((hi - 0.9985593).abs() < 1e-7);
        assert_eq!(batch_size(lo, 1, 199), 23);
        assert_eq!(batch_size(hi, 1, 199), 199);
    }

    #[test]
    fn brachistochrone_is_monotone() {
        let mut prev = 0.0;
        for k in 1..=1000 {
            let psi = decay_variant(DecayStrategy::Brachistochrone, inputs(k as f64 / 1000.0)).unwrap();
            assert!(psi >= prev);
            prev = psi;
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in DecayStrategy::ALL {
            assert_eq!(s.as_str().parse::<DecayStrategy>().unwrap(), s);
        }
        assert!("fit-x".parse::<DecayStrategy>().is_err());
    }

    #[test]
    fn controller_lifecycle() {
        let mut c = BatchController::new(DecayStrategy::SigmoidLog, 100, 2).unwrap();
        assert_eq!((c.m_min, c.m_max, c.lambda), (1, 199, 100.0));
        assert_eq!(c.current_batch, 199);

        // no solution yet
        assert_eq!(c.on_cost_update(f64::INFINITY, |x| x).unwrap(), None);
        assert_eq!(c.current_batch, 199);

        let volume = |cost: f64| cost * cost - 1.0;
        assert_eq!(c.on_cost_update(2.0, volume).unwrap(), Some(199));
        assert_eq!(c.v_initial, Some(3.0));
        // unchanged cost is a no-op
        assert_eq!(c.on_cost_update(2.0, volume).unwrap(), None);

        // informed volume collapsing toward zero
        let got = c.on_cost_update(1.0 + 1e-12, volume).unwrap();
        assert_eq!(got, Some(23));
        assert_eq!(c.v_initial, Some(3.0));
        assert_eq!(c.v_initial_writes(), 1);

        assert!(c.on_cost_update(1.5, volume).is_err());
    }

    #[test]
    fn fixed_controller_never_moves() {
        let mut c = BatchController::new(DecayStrategy::Fixed, 100, 4).unwrap();
        assert_eq!(c.current_batch, 100);
        c.on_cost_update(3.0, |x| x).unwrap();
        c.on_cost_update(2.0, |x| x).unwrap();
        c.begin_batch().unwrap();
        assert_eq!(c.current_batch, 100);
    }

    #[test]
    fn iteration_count_decays_per_batch() {
        let mut c = BatchController::new(DecayStrategy::IterationCount, 100, 2)
            .unwrap()
            .with_iteration_budget(10);
        assert_eq!(c.begin_batch().unwrap(), None);
        c.on_cost_update(2.0, |x| x).unwrap();
        assert_eq!(c.current_batch, 199);
        for _ in 0..5 {
            c.begin_batch().unwrap();
        }
        assert_eq!(c.current_batch, batch_size(0.5, 1, 199));
        for _ in 0..10 {
            c.begin_batch().unwrap();
        }
        assert_eq!(c.current_batch, 1);
    }
}
