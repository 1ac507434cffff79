//! Rejection sampler for photon-pair landing points.
//!
//! Envelope: the signal is drawn uniformly over its region (the fixed
//! detector aperture when one is given, otherwise an annulus around the
//! phase-matched ring) and the idler uniformly over a square box centred on
//! the signal's back-to-back point. A proposal is accepted with probability
//! |F|² / max|F|², where max|F|² is the peak of the pump's Fourier intensity
//! (the sinc² factor never exceeds 1).

use std::f64::consts::PI;

use rand::Rng;

use crate::Point;

use super::{CountingError, Detector, PairDensity};

pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
enum SignalRegion {
    Disk { center: Point, radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl SignalRegion {
    fn area(&self) -> f64 {
        match *self {
            SignalRegion::Disk { radius, .. } => PI * radius * radius,
            SignalRegion::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> Point {
        match *self {
            SignalRegion::Disk { center, radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                Point::new(center.x + r * phi.cos(), center.y + r * phi.sin())
            }
            SignalRegion::Annulus { inner, outer } => {
                let r = (inner * inner + (outer * outer - inner * inner) * rng.random::<f64>()).sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                Point::new(r * phi.cos(), r * phi.sin())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    density: &'a PairDensity,
    region: SignalRegion,
    half_width: f64,
    peak: f64,
    acceptance: f64,
}

impl<'a> PairSampler<'a> {
    /// Sampler over the full pair distribution, or conditioned on the signal
    /// landing inside `fixed_region`.
    pub fn new(density: &'a PairDensity, fixed_region: Option<&Detector>) -> Result<Self, CountingError> {
        let half_width = density.half_width();
        let peak = density.scene().pump().fourier_peak_intensity();
        let (region, mass) = match fixed_region {
            Some(det) => {
                let region = SignalRegion::Disk { center: det.center, radius: det.radius() };
                (region, density.single_probability(det))
            }
            None => {
                let (inner, outer) = density.radial_range();
                (SignalRegion::Annulus { inner, outer }, 1.0)
            }
        };
        // accepted fraction = ∫ envelope-covered |F|² / (peak · envelope volume)
        let volume = region.area() * (2.0 * half_width).powi(2);
        let acceptance = mass * density.normalisation() / (peak * volume);
        if !(acceptance >= MIN_ACCEPTANCE) {
            return Err(CountingError::EnvelopeTooLoose { ratio: acceptance });
        }
        Ok(Self { density, region, half_width, peak, acceptance })
    }

    /// Expected fraction of proposals that are accepted.
    pub fn acceptance_ratio(&self) -> f64 {
        self.acceptance
    }

    /// Draws one (signal, idler) landing-point pair.
    pub fn sample_pair(&self, rng: &mut impl Rng) -> Result<(Point, Point), CountingError> {
        let max_attempts = (1000.0 / self.acceptance).ceil() as u64;
        for _ in 0..max_attempts {
            let signal = self.region.draw(rng);
            let idler = Point::new(
                -signal.x + self.half_width * (2.0 * rng.random::<f64>() - 1.0),
                -signal.y + self.half_width * (2.0 * rng.random::<f64>() - 1.0),
            );
            let value = self.density.raw(signal, idler)?;
            if rng.random::<f64>() * self.peak < value {
                return Ok((signal, idler));
            }
        }
        Err(CountingError::EnvelopeTooLoose { ratio: 1.0 / max_attempts as f64 })
    }

    pub fn sample_pairs(&self, count: usize, rng: &mut impl Rng) -> Result<Vec<(Point, Point)>, CountingError> {
        (0..count).map(|_| self.sample_pair(rng)).collect()
    }
}
