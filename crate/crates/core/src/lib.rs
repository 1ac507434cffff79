//! Parametric down-conversion pumped by a Laguerre-Gaussian beam.
//!
//! The crate simulates the split-spot coincidence image produced when the
//! pump carries orbital angular momentum, infers the pump charge from fitted
//! coincidence maps, and contrasts the quantum and semiclassical predictions
//! for triple coincidences.
//!
//! Lengths are in cm, wavevectors in cm⁻¹, times in s, rates in events/s.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod biphoton;
pub mod cli;
pub mod counting;
pub mod lgbeam;
pub mod map;
pub mod phasematch;

pub use analysis::{RateSummary, TwoSpotFit};
pub use biphoton::{Scene, SceneParams};
pub use counting::{CountRecord, Detector, GateConfig, ScanGrid};
pub use lgbeam::LaguerreGaussianMode;
pub use map::GridMap;
pub use phasematch::{Crystal, WaveVector};

/// A point in the detection plane [cm].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}
