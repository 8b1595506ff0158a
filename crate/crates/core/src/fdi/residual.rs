use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::goertzel::{amplitude, goertzel};
use crate::error::{Error, Result};
use crate::real::Real;

/// Closed pulsation interval sampled every `step` rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsationGrid {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

impl PulsationGrid {
    pub fn new(low: f64, high: f64, step: f64) -> Self {
        Self { low, high, step }
    }

    pub fn pulsations(&self) -> Vec<f64> {
        let count = ((self.high - self.low) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.low + k as f64 * self.step).collect()
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.low && w <= self.high
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.low <= other.high && other.low <= self.high
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.low > 0.0 && self.high >= self.low && self.step > 0.0) {
            return Err(Error::InvalidParams(format!(
                "pulsation grid [{}, {}] step {} is malformed",
                self.low, self.high, self.step
            )));
        }
        let nyquist = std::f64::consts::PI * sample_rate;
        if self.high >= nyquist {
            return Err(Error::AboveNyquist {
                pulsation: self.high,
                nyquist,
            });
        }
        Ok(())
    }
}

/// Sliding window over the x and y body acceleration channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualWindow<T: Real> {
    x: VecDeque<T>,
    y: VecDeque<T>,
    capacity: usize,
    sample_rate: T,
    scratch: Vec<T>,
}

impl<T: Real> ResidualWindow<T> {
    /// Window of `window` seconds at `sample_rate` Hz.
    pub fn new(window: f64, sample_rate: f64) -> Self {
        let capacity = (window * sample_rate).round() as usize;
        Self {
            x: VecDeque::with_capacity(capacity + 1),
            y: VecDeque::with_capacity(capacity + 1),
            capacity,
            sample_rate: T::lit(sample_rate),
            scratch: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.x.len() == self.capacity
    }

    pub fn clear(&mut self) {
        self.x.clear();
        self.y.clear();
    }

    /// Appends one acceleration sample; only the x and y components are kept.
    pub fn push(&mut self, accel: &Vector3<T>) {
        if self.x.len() == self.capacity {
            self.x.pop_front();
            self.y.pop_front();
        }
        self.x.push_back(accel.x);
        self.y.push_back(accel.y);
    }

    /// Largest `2|X(w)|/N` over the pulsations and over both channels.
    pub fn peak(&mut self, pulsations: &[T]) -> Result<T> {
        if !self.is_full() {
            return Err(Error::WindowNotFull {
                have: self.len(),
                need: self.capacity,
            });
        }
        let fs = self.sample_rate;
        let n = self.capacity;
        let mut best = T::zero();
        for channel in 0..2 {
            let buf = if channel == 0 { &self.x } else { &self.y };
            self.scratch.clear();
            self.scratch.extend(buf.iter().copied());
            for w in pulsations {
                best = best.max(amplitude(goertzel(&self.scratch, *w, fs).norm_sqr().sqrt(), n));
            }
        }
        Ok(best)
    }

    /// Amplitude on each channel at each pulsation, `(w, |X_x|, |X_y|)`.
    pub fn spectrum(&mut self, pulsations: &[T]) -> Result<Vec<(T, T, T)>> {
        if !self.is_full() {
            return Err(Error::WindowNotFull {
                have: self.len(),
                need: self.capacity,
            });
        }
        let fs = self.sample_rate;
        let n = self.capacity;
        let xs: Vec<T> = self.x.iter().copied().collect();
        let ys: Vec<T> = self.y.iter().copied().collect();
        Ok(pulsations
            .iter()
            .map(|w| {
                (
                    *w,
                    amplitude(goertzel(&xs, *w, fs).norm_sqr().sqrt(), n),
                    amplitude(goertzel(&ys, *w, fs).norm_sqr().sqrt(), n),
                )
            })
            .collect())
    }

    pub fn samples(&self) -> (Vec<T>, Vec<T>) {
        (self.x.iter().copied().collect(), self.y.iter().copied().collect())
    }
}
