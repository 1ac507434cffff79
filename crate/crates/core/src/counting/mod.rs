//! Monte Carlo photon-counting electronics: detectors, gates, scanned
//! coincidence maps and the triple-coincidence experiment.

mod coincidence;
mod density;
mod events;
mod sampler;
mod scan;
mod triple;

pub use coincidence::{gate_hits, window_coincidence};
pub use density::{PairDensity, DISK_STENCIL};
pub use sampler::PairSampler;
pub use scan::{simulate_scan, simulate_scan_point, ScanResult, ScanSetup};
pub use triple::{
    calibrate_triple, geometric_partner_fractions, simulate_triple, simulate_triple_detailed,
    MeasuredRates, TripleDetectors, TripleModel, TripleOutcome, TripleRates, DEFAULT_GRIN_APERTURE,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::biphoton::SceneError;
use crate::map::snap_sig6;
use crate::Point;

pub const DEFAULT_APERTURE: f64 = 175e-4;
pub const DEFAULT_TRIGGER_GATE: f64 = 5e-9;
pub const DEFAULT_PULSE_WIDTH: f64 = 38e-9;
pub const MIN_STAGE_STEP: f64 = 10e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountingError {
    #[error("event times not sorted ascending at index {index}")]
    SortOrderViolation { index: usize },
    #[error("rejection envelope acceptance ratio {ratio:e} is below 1e-4")]
    EnvelopeTooLoose { ratio: f64 },
    #[error("detector apertures overlap: {first} and {second}")]
    DetectorOverlap { first: &'static str, second: &'static str },
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64, CountingError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CountingError::InvalidParameter { name, value })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64, CountingError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CountingError::InvalidParameter { name, value })
    }
}

/// Random stream for sub-task `stream` of a run seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Photon-counting module behind a circular aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub center: Point,
    pub aperture_diameter: f64,
    pub quantum_efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
}

impl Detector {
    pub fn new(
        center: Point,
        aperture_diameter: f64,
        quantum_efficiency: f64,
        dark_rate: f64,
    ) -> Result<Self, CountingError> {
        check_positive("aperture diameter", aperture_diameter)?;
        if !(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0) {
            return Err(CountingError::InvalidParameter {
                name: "quantum efficiency",
                value: quantum_efficiency,
            });
        }
        check_nonnegative("dark rate", dark_rate)?;
        if !(center.x.is_finite() && center.y.is_finite()) {
            return Err(CountingError::InvalidParameter { name: "detector centre", value: f64::NAN });
        }
        Ok(Self { center, aperture_diameter, quantum_efficiency, dark_rate })
    }

    /// 175 μm module with unit efficiency and no dark counts.
    pub fn pcm(center: Point) -> Self {
        Self { center, aperture_diameter: DEFAULT_APERTURE, quantum_efficiency: 1.0, dark_rate: 0.0 }
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.aperture_diameter
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius().powi(2)
    }

    pub fn contains(&self, point: Point) -> bool {
        self.center.distance(point) <= self.radius()
    }

    pub fn overlaps(&self, other: &Detector) -> bool {
        self.center.distance(other.center) < self.radius() + other.radius()
    }

    pub fn moved_to(&self, center: Point) -> Self {
        Self { center, ..*self }
    }
}

/// Timing of the counting electronics [s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    /// Gate opened by the scanning detector in the coincidence-map counter.
    pub trigger_gate: f64,
    /// Width Δt of the trigger pulse in the AND-gate circuit.
    pub pulse_width: f64,
    /// Accidental window τ used in the accidental-rate estimate.
    pub effective_window: f64,
}

impl GateConfig {
    pub fn new(
        trigger_gate: f64,
        pulse_width: f64,
        effective_window: Option<f64>,
    ) -> Result<Self, CountingError> {
        check_positive("trigger gate", trigger_gate)?;
        check_positive("pulse width", pulse_width)?;
        let effective_window = effective_window.unwrap_or(2.0 * pulse_width);
        check_positive("effective window", effective_window)?;
        Ok(Self { trigger_gate, pulse_width, effective_window })
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            trigger_gate: DEFAULT_TRIGGER_GATE,
            pulse_width: DEFAULT_PULSE_WIDTH,
            effective_window: 2.0 * DEFAULT_PULSE_WIDTH,
        }
    }
}

/// Counts accumulated over `duration` seconds.
///
/// In the triple experiment `trig` is the fixed detector and `top`/`bot` the
/// two split-spot detectors. In a scan record `trig` holds the scanning
/// detector's triggers, `top` the fixed detector's singles and `ctop` the
/// gated coincidences; the bottom channels stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CountRecord {
    pub duration: f64,
    pub trig: u64,
    pub top: u64,
    pub bot: u64,
    pub ctop: u64,
    pub cbot: u64,
    pub triple: u64,
}

impl CountRecord {
    fn rate(&self, count: u64) -> f64 {
        if self.duration > 0.0 {
            count as f64 / self.duration
        } else {
            0.0
        }
    }

    pub fn r_trig(&self) -> f64 {
        self.rate(self.trig)
    }

    pub fn r_top(&self) -> f64 {
        self.rate(self.top)
    }

    pub fn r_bot(&self) -> f64 {
        self.rate(self.bot)
    }

    pub fn r_ctop(&self) -> f64 {
        self.rate(self.ctop)
    }

    pub fn r_cbot(&self) -> f64 {
        self.rate(self.cbot)
    }

    pub fn r_triple(&self) -> f64 {
        self.rate(self.triple)
    }

    /// Checks the counting invariants; returns a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        if self.triple > self.ctop.min(self.cbot) {
            return Err(format!("triple {} exceeds coincidences", self.triple));
        }
        if self.ctop > self.trig.min(self.top) {
            return Err(format!("ctop {} exceeds singles", self.ctop));
        }
        if self.cbot > self.trig.min(self.bot) {
            return Err(format!("cbot {} exceeds singles", self.cbot));
        }
        Ok(())
    }
}

/// Raster of scanning-detector positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
    /// Dwell time per position [s].
    pub dwell: f64,
}

impl ScanGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        step: f64,
        dwell: f64,
    ) -> Result<Self, CountingError> {
        check_positive("grid step", step)?;
        check_nonnegative("dwell", dwell)?;
        for (name, v) in [("x_min", x_min), ("x_max", x_max), ("y_min", y_min), ("y_max", y_max)] {
            if !v.is_finite() {
                return Err(CountingError::InvalidParameter { name, value: v });
            }
        }
        if x_max < x_min {
            return Err(CountingError::InvalidParameter { name: "x_max", value: x_max });
        }
        if y_max < y_min {
            return Err(CountingError::InvalidParameter { name: "y_max", value: y_max });
        }
        if step < MIN_STAGE_STEP {
            log::warn!("grid step {step} cm is below the 10 um stage resolution");
        }
        Ok(Self { x_min, x_max, y_min, y_max, step, dwell })
    }

    fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
        let n = ((max - min) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| snap_sig6(min + k as f64 * step)).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.step)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis(self.y_min, self.y_max, self.step)
    }

    pub fn len(&self) -> usize {
        self.xs().len() * self.ys().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positions in row-major order (y outer).
    pub fn points(&self) -> Vec<Point> {
        let xs = self.xs();
        self.ys()
            .into_iter()
            .flat_map(|y| xs.iter().map(move |&x| Point::new(x, y)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_axes_are_snapped() {
        let g = ScanGrid::new(3.2, 4.2, -1.0, 1.0, 0.025, 1.0).unwrap();
        assert_eq!(g.xs().len(), 41);
        assert_eq!(g.ys().len(), 81);
        assert_eq!(g.xs()[3], 3.275);
        assert_eq!(g.points()[41], Point::new(3.2, -0.975));
        assert!(ScanGrid::new(0.0, 1.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(ScanGrid::new(1.0, 0.0, 0.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn detector_geometry() {
        let d = Detector::pcm(Point::new(-3.7, 0.0));
        assert!(d.contains(Point::new(-3.7 + 0.8 * d.radius(), 0.0)));
        assert!(!d.contains(Point::new(-3.7 + 1.2 * d.radius(), 0.0)));
        assert!(d.overlaps(&d.moved_to(Point::new(-3.7, d.radius()))));
        assert!(Detector::new(Point::default(), 0.1, 1.5, 0.0).is_err());
        assert!(Detector::new(Point::default(), -0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn record_rates_are_exact() {
        let r = CountRecord { duration: 4.0, trig: 10, top: 6, bot: 2, ctop: 3, cbot: 1, triple: 1 };
        assert_eq!(r.r_trig(), 2.5);
        assert_eq!(r.r_ctop(), 0.75);
        assert!(r.check().is_ok());
        let zero = CountRecord::default();
        assert_eq!(zero.r_trig(), 0.0);
    }

    #[test]
    fn default_gates() {
        let g = GateConfig::default();
        assert_eq!(g.effective_window, 76e-9);
        assert_eq!(GateConfig::new(5e-9, 38e-9, None).unwrap(), g);
        assert!(GateConfig::new(0.0, 38e-9, None).is_err());
    }
}
