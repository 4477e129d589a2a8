use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SignalError, SimulationError};
use crate::network::Network;

/// One piece of a periodic schedule: `u` applies from `start` until the next
/// segment starts (or the period ends).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub u: Vec<f64>,
}

/// Schedule document: `{"period": T, "segments": [{"start": s, "u": [..]}, ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub period: f64,
    pub segments: Vec<Segment>,
}

/// Exogenous input at the entry links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeteringSignal {
    Constant {
        u: Vec<f64>,
    },
    #[serde(rename = "PERIODIC_PIECEWISE_CONSTANT")]
    Periodic(Schedule),
}

impl MeteringSignal {
    pub fn constant(u: Vec<f64>) -> Self {
        MeteringSignal::Constant { u }
    }

    pub fn periodic(schedule: Schedule) -> Result<Self, SignalError> {
        let Schedule { period, segments } = &schedule;
        if !(period.is_finite() && *period > 0.0) {
            return Err(SignalError::BadPeriod(*period));
        }
        let first = segments.first().ok_or(SignalError::NoSegments)?;
        if first.start != 0.0 {
            return Err(SignalError::FirstStart(first.start));
        }
        let dim = first.u.len();
        for (k, seg) in segments.iter().enumerate() {
            if seg.u.len() != dim {
                return Err(SignalError::SegmentDimension {
                    index: k,
                    expected: dim,
                    got: seg.u.len(),
                });
            }
            if seg.u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(SignalError::BadInput(k));
            }
            let next = segments.get(k + 1).map_or(*period, |s| s.start);
            if !(seg.start.is_finite() && next > seg.start) {
                return Err(SignalError::SegmentOrder(k));
            }
        }
        Ok(MeteringSignal::Periodic(schedule))
    }

    pub fn from_schedule_json(text: &str) -> Result<Self, SignalError> {
        let schedule: Schedule = serde_json::from_str(text).map_err(|e| SignalError::Parse(e.to_string()))?;
        Self::periodic(schedule)
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            MeteringSignal::Constant { .. } => None,
            MeteringSignal::Periodic(s) => Some(s.period),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeteringSignal::Constant { u } => u.len(),
            MeteringSignal::Periodic(s) => s.segments[0].u.len(),
        }
    }

    /// Componentwise maximum of the input over time.
    pub fn upper_bound(&self) -> Vec<f64> {
        match self {
            MeteringSignal::Constant { u } => u.clone(),
            MeteringSignal::Periodic(s) => {
                let mut ub = vec![0.0_f64; self.dim()];
                for seg in &s.segments {
                    for (b, &v) in ub.iter_mut().zip(&seg.u) {
                        *b = b.max(v);
                    }
                }
                ub
            }
        }
    }

    /// Input at time `t >= 0`.
    pub fn at(&self, t: f64) -> &[f64] {
        match self {
            MeteringSignal::Constant { u } => u,
            MeteringSignal::Periodic(s) => {
                let phase = t.rem_euclid(s.period);
                let k = s.segments.partition_point(|seg| seg.start <= phase);
                &s.segments[k.saturating_sub(1)].u
            }
        }
    }

    /// Checks the input dimension and every input value against `net`.
    pub fn check(&self, net: &Network) -> Result<(), ModelError> {
        match self {
            MeteringSignal::Constant { u } => net.check_input(u),
            MeteringSignal::Periodic(s) => s.segments.iter().try_for_each(|seg| net.check_input(&seg.u)),
        }
    }

    /// Fixes a step size no larger than `dt` whose grid contains every
    /// segment boundary, so each step sees a single input value.
    pub fn align(&self, dt: f64) -> Result<AlignedSchedule, SimulationError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimulationError::BadStep(dt));
        }
        let s = match self {
            MeteringSignal::Constant { u } => {
                return Ok(AlignedSchedule {
                    dt,
                    steps_per_period: None,
                    boundaries: vec![0],
                    inputs: vec![u.clone()],
                })
            }
            MeteringSignal::Periodic(s) => s,
        };
        let first = (s.period / dt - 1e-9).ceil().max(1.0) as usize;
        let limit = first.saturating_mul(64).min(100_000_000);
        let on_grid = |n: usize| {
            s.segments.iter().all(|seg| {
                let pos = seg.start * n as f64 / s.period;
                (pos - pos.round()).abs() <= 1e-9 * pos.max(1.0)
            })
        };
        let n = (first..=limit)
            .find(|&n| on_grid(n))
            .ok_or(SimulationError::GridAlignment { dt })?;
        Ok(AlignedSchedule {
            dt: s.period / n as f64,
            steps_per_period: Some(n),
            boundaries: s
                .segments
                .iter()
                .map(|seg| (seg.start * n as f64 / s.period).round() as usize)
                .collect(),
            inputs: s.segments.iter().map(|seg| seg.u.clone()).collect(),
        })
    }
}

/// A signal resolved onto a fixed step grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSchedule {
    pub dt: f64,
    /// `None` for constant signals.
    pub steps_per_period: Option<usize>,
    boundaries: Vec<usize>,
    inputs: Vec<Vec<f64>>,
}

impl AlignedSchedule {
    /// Input held during step `step`, i.e. on `[step * dt, (step + 1) * dt)`.
    pub fn input(&self, step: usize) -> &[f64] {
        let Some(n) = self.steps_per_period else {
            return &self.inputs[0];
        };
        let j = step % n;
        let k = self.boundaries.partition_point(|&b| b <= j);
        &self.inputs[k - 1]
    }
}
