//! Normalised pair density |F|² over the detection plane, with the single
//! photon marginal and aperture-integrated landing probabilities.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::biphoton::{self, Scene};
use crate::Point;

use super::{CountingError, Detector};

/// Seven-point disk rule, exact for polynomials up to degree 5.
/// Entries are (x, y, weight) for the unit disk, weights summing to 1.
pub const DISK_STENCIL: [(f64, f64, f64); 7] = {
    const R: f64 = 0.816_496_580_927_726; // √(2/3)
    const C: f64 = 0.5; // cos 60°
    const S: f64 = 0.866_025_403_784_438_6; // sin 60°
    [
        (0.0, 0.0, 0.25),
        (R, 0.0, 0.125),
        (R * C, R * S, 0.125),
        (-R * C, R * S, 0.125),
        (-R, 0.0, 0.125),
        (-R * C, -R * S, 0.125),
        (R * C, -R * S, 0.125),
    ]
};

/// Grid spacing per sinc lobe used by the normalisation quadrature.
const SAMPLES_PER_LOBE: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct PairDensity {
    scene: Scene,
    half_width: f64,
    radii: Vec<f64>,
    /// Unnormalised single-photon marginal ∫|F(s, i)|² d²s at each radius.
    marginal: Vec<f64>,
    norm: f64,
}

impl PairDensity {
    pub fn new(scene: &Scene) -> Result<Self, CountingError> {
        let half_width = scene.partner_half_width();
        let ring = scene.ring_radius();
        // radial width of one sinc lobe in the detection plane
        let lobe = 2.0 * PI / scene.crystal().length() / scene.cone_angle().tan() * scene.plane_scale();
        let step = (lobe / SAMPLES_PER_LOBE).min(half_width / 40.0);
        let n = (2.0 * half_width / step).ceil() as usize;
        let step = 2.0 * half_width / n as f64;

        let r_min = (ring - half_width).max(0.5 * step);
        let n_r = ((ring + half_width - r_min) / step).ceil() as usize + 1;
        let radii: Vec<f64> = (0..n_r).map(|k| r_min + k as f64 * step).collect();

        let marginal = radii
            .par_iter()
            .map(|&r| {
                let idler = Point::new(r, 0.0);
                let mut acc = 0.0;
                for a in 0..n {
                    let sx = -r - half_width + (a as f64 + 0.5) * step;
                    for b in 0..n {
                        let sy = -half_width + (b as f64 + 0.5) * step;
                        acc += biphoton::pair_density(scene, Point::new(sx, sy), idler)?;
                    }
                }
                Ok(acc * step * step)
            })
            .collect::<Result<Vec<f64>, CountingError>>()?;

        // trapezoid over 2πr m(r) dr
        let norm = radii
            .windows(2)
            .zip(marginal.windows(2))
            .map(|(r, m)| 0.5 * (r[1] - r[0]) * 2.0 * PI * (r[0] * m[0] + r[1] * m[1]))
            .sum::<f64>();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(CountingError::InvalidParameter { name: "pair density normalisation", value: norm });
        }
        Ok(Self { scene: scene.clone(), half_width, radii, marginal, norm })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Half-width of the box around a photon's back-to-back point that holds
    /// its partner.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// ∫∫|F|² over both photons' landing points.
    pub fn normalisation(&self) -> f64 {
        self.norm
    }

    /// Radial range covered by the marginal table.
    pub fn radial_range(&self) -> (f64, f64) {
        (self.radii[0], self.radii[self.radii.len() - 1])
    }

    /// Normalised joint density [cm⁻⁴].
    pub fn joint(&self, signal: Point, idler: Point) -> Result<f64, CountingError> {
        Ok(biphoton::pair_density(&self.scene, signal, idler)? / self.norm)
    }

    /// Unnormalised |F|² (the scale the rejection sampler works in).
    pub fn raw(&self, signal: Point, idler: Point) -> Result<f64, CountingError> {
        Ok(biphoton::pair_density(&self.scene, signal, idler)?)
    }

    /// Normalised single-photon density at radius `r` [cm⁻²].
    pub fn marginal(&self, r: f64) -> f64 {
        let (lo, hi) = self.radial_range();
        if r < lo || r > hi {
            return 0.0;
        }
        let step = self.radii[1] - self.radii[0];
        let pos = (r - lo) / step;
        let k = (pos.floor() as usize).min(self.radii.len() - 2);
        let frac = pos - k as f64;
        ((1.0 - frac) * self.marginal[k] + frac * self.marginal[k + 1]) / self.norm
    }

    /// Probability that one photon of a pair lands inside `detector`.
    pub fn single_probability(&self, detector: &Detector) -> f64 {
        let r = detector.radius();
        detector.area()
            * DISK_STENCIL
                .iter()
                .map(|&(u, v, w)| {
                    w * self.marginal(Point::new(detector.center.x + r * u, detector.center.y + r * v).radius())
                })
                .sum::<f64>()
    }

    /// Probability that the signal lands in `signal` and the idler in `idler`.
    pub fn joint_probability(&self, signal: &Detector, idler: &Detector) -> Result<f64, CountingError> {
        let (rs, ri) = (signal.radius(), idler.radius());
        let mut acc = 0.0;
        for &(us, vs, ws) in &DISK_STENCIL {
            let s = Point::new(signal.center.x + rs * us, signal.center.y + rs * vs);
            for &(ui, vi, wi) in &DISK_STENCIL {
                let i = Point::new(idler.center.x + ri * ui, idler.center.y + ri * vi);
                acc += ws * wi * biphoton::pair_density(&self.scene, s, i)?;
            }
        }
        Ok(acc * signal.area() * idler.area() / self.norm)
    }
}
