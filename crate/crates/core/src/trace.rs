//! Time series exchanged between the terrain simulator, the calibration metrics and the IO layer.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("trace needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("sample times must be strictly increasing (index {index})")]
    NonMonotoneTime { index: usize },
    #[error("sample {index} is not a finite value in range")]
    InvalidValue { index: usize },
}

fn check_times(times: impl Iterator<Item = f64>) -> Result<(), TraceError> {
    let mut prev = f64::NEG_INFINITY;
    let mut n = 0;
    for (index, t) in times.enumerate() {
        if !t.is_finite() {
            return Err(TraceError::InvalidValue { index });
        }
        if t <= prev {
            return Err(TraceError::NonMonotoneTime { index });
        }
        prev = t;
        n += 1;
    }
    if n < 2 {
        return Err(TraceError::TooShort(n));
    }
    Ok(())
}

/// Bucket-force magnitude over time, `(t [s], f [N])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    label: String,
    samples: Vec<(f64, f64)>,
}

impl ForceTrace {
    pub fn new(label: impl Into<String>, samples: Vec<(f64, f64)>) -> Result<Self, TraceError> {
        check_times(samples.iter().map(|s| s.0))?;
        if let Some(index) = samples.iter().position(|s| !(s.1.is_finite() && s.1 >= 0.0)) {
            return Err(TraceError::InvalidValue { index });
        }
        Ok(Self {
            label: label.into(),
            samples,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Linear interpolation, clamped at the ends.
    pub fn value_at(&self, t: f64) -> f64 {
        interpolate(&self.samples, t, |s| s.0, |s| s.1)
    }
}

/// One pose sample: blade height in mm and bucket orientation θ₄ in rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub t: f64,
    pub y_p8: f64,
    pub theta4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrace {
    samples: Vec<PoseSample>,
}

impl PoseTrace {
    pub fn new(samples: Vec<PoseSample>) -> Result<Self, TraceError> {
        check_times(samples.iter().map(|s| s.t))?;
        if let Some(index) = samples
            .iter()
            .position(|s| !(s.y_p8.is_finite() && s.theta4.is_finite()))
        {
            return Err(TraceError::InvalidValue { index });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[PoseSample] {
        &self.samples
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    pub fn height_at(&self, t: f64) -> f64 {
        interpolate(&self.samples, t, |s| s.t, |s| s.y_p8)
    }

    pub fn theta4_at(&self, t: f64) -> f64 {
        interpolate(&self.samples, t, |s| s.t, |s| s.theta4)
    }
}

pub(crate) fn interpolate<S>(samples: &[S], t: f64, time: impl Fn(&S) -> f64, value: impl Fn(&S) -> f64) -> f64 {
    let n = samples.len();
    if t <= time(&samples[0]) {
        return value(&samples[0]);
    }
    if t >= time(&samples[n - 1]) {
        return value(&samples[n - 1]);
    }
    // First index with time > t; at least 1 here.
    let hi = samples.partition_point(|s| time(s) <= t);
    let (a, b) = (&samples[hi - 1], &samples[hi]);
    let (ta, tb) = (time(a), time(b));
    let w = (t - ta) / (tb - ta);
    value(a) + w * (value(b) - value(a))
}
