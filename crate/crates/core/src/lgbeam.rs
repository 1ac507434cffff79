//! Laguerre-Gaussian pump modes at the waist plane.
//!
//! The field of mode (l, p) with waist `w0` is
//!
//! ```text
//! u(r, φ) = C · (√2 r / w0)^|l| · L_p^|l|(2r²/w0²) · exp(-r²/w0²) · exp(i l φ)
//! C       = √(2 p! / (π (p+|l|)!)) / w0
//! ```
//!
//! normalised so that ∫|u|² dx dy = 1. Its transverse Fourier transform,
//! taken with the kernel `exp(-i (qx·x + qy·y))`, is again a Laguerre-Gaussian
//! mode of the same charge with waist `2/w0` in q-space:
//!
//! ```text
//! ũ(q, φ_q) = π w0² C · (-i)^|l| · (-1)^p · κ^|l| · L_p^|l|(κ²) · exp(-κ²/2) · exp(i l φ_q),
//! κ = q w0 / √2
//! ```
//!
//! so that ∫|ũ|² dqx dqy / (2π)² = 1 (Parseval).

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("beam waist must be positive and finite, got {0}")]
    InvalidWaist(f64),
    #[error("wavelength must be positive and finite, got {0}")]
    InvalidWavelength(f64),
    #[error("Rayleigh range must be positive and finite, got {0}")]
    InvalidRayleighRange(f64),
    #[error("mode has no donut: topological charge is 0")]
    NoDonut,
    #[error("donut radius is only defined for p = 0, got p = {0}")]
    RadialIndexUnsupported(u32),
}

/// Transverse Laguerre-Gaussian mode, evaluated at its waist.
///
/// Lengths are in cm. `wavelength` is the wavelength in the medium the mode
/// propagates in, so `rayleigh_range = π·w0²/wavelength`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreGaussianMode {
    l: i32,
    p: u32,
    waist: f64,
    wavelength: f64,
    rayleigh_range: f64,
}

impl LaguerreGaussianMode {
    pub fn from_waist(l: i32, p: u32, waist: f64, wavelength: f64) -> Result<Self, BeamError> {
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(BeamError::InvalidWaist(waist));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(BeamError::InvalidWavelength(wavelength));
        }
        Ok(Self {
            l,
            p,
            waist,
            wavelength,
            rayleigh_range: PI * waist * waist / wavelength,
        })
    }

    pub fn from_rayleigh_range(
        l: i32,
        p: u32,
        rayleigh_range: f64,
        wavelength: f64,
    ) -> Result<Self, BeamError> {
        if !(rayleigh_range > 0.0 && rayleigh_range.is_finite()) {
            return Err(BeamError::InvalidRayleighRange(rayleigh_range));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(BeamError::InvalidWavelength(wavelength));
        }
        Ok(Self {
            l,
            p,
            waist: (rayleigh_range * wavelength / PI).sqrt(),
            wavelength,
            rayleigh_range,
        })
    }

    pub fn l(&self) -> i32 {
        self.l
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        self.rayleigh_range
    }

    fn abs_l(&self) -> u32 {
        self.l.unsigned_abs()
    }

    /// Analytic normalisation constant C.
    pub fn norm_constant(&self) -> f64 {
        let l = self.abs_l();
        // p! / (p+|l|)! = 1 / ((p+1)(p+2)...(p+|l|))
        let ratio: f64 = (1..=l).map(|k| 1.0 / f64::from(self.p + k)).product();
        (2.0 * ratio / PI).sqrt() / self.waist
    }

    /// `(a + i·sgn(l)·b)^|l|`, the azimuthal factor times the radial power.
    fn vortex(&self, a: f64, b: f64) -> Complex64 {
        let sign = if self.l < 0 { -1.0 } else { 1.0 };
        Complex64::new(a, sign * b).powu(self.abs_l())
    }

    /// Normalised waist-plane field at (x, y).
    pub fn field(&self, x: f64, y: f64) -> Complex64 {
        let w0 = self.waist;
        let r2 = x * x + y * y;
        let s = 2.0 * r2 / (w0 * w0);
        let scale = std::f64::consts::SQRT_2 / w0;
        let radial = self.norm_constant()
            * laguerre(self.p, f64::from(self.abs_l()), s)
            * (-r2 / (w0 * w0)).exp();
        self.vortex(scale * x, scale * y) * radial
    }

    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        self.field(x, y).norm_sqr()
    }

    /// Closed-form 2-d Fourier transform of [`field`](Self::field) at (qx, qy).
    pub fn fourier(&self, qx: f64, qy: f64) -> Complex64 {
        let w0 = self.waist;
        let scale = w0 / std::f64::consts::SQRT_2;
        let kappa2 = (qx * qx + qy * qy) * scale * scale;
        let l = self.abs_l();
        let mut prefactor = Complex64::new(PI * w0 * w0 * self.norm_constant(), 0.0)
            * Complex64::new(0.0, -1.0).powu(l);
        if self.p % 2 == 1 {
            prefactor = -prefactor;
        }
        let radial = laguerre(self.p, f64::from(l), kappa2) * (-0.5 * kappa2).exp();
        prefactor * self.vortex(scale * qx, scale * qy) * radial
    }

    /// Radius of maximum |ũ|² in q-space: `(2/w0)·√(|l|/2)`.
    pub fn donut_radius_q(&self) -> Result<f64, BeamError> {
        if self.l == 0 {
            return Err(BeamError::NoDonut);
        }
        if self.p != 0 {
            return Err(BeamError::RadialIndexUnsupported(self.p));
        }
        Ok((2.0 / self.waist) * (f64::from(self.abs_l()) / 2.0).sqrt())
    }

    /// Radius beyond which |ũ|² has dropped below ~1e-6 of its peak.
    pub fn q_extent(&self) -> f64 {
        let core = (f64::from(self.abs_l()) / 2.0 + f64::from(self.p)).sqrt();
        (2.0 / self.waist) * (core + 2.7)
    }

    /// Upper bound of |ũ|² over the whole q-plane.
    pub fn fourier_peak_intensity(&self) -> f64 {
        if self.p == 0 {
            let q = (2.0 * f64::from(self.abs_l())).sqrt() / self.waist;
            return self.fourier(q, 0.0).norm_sqr();
        }
        let steps = 20_000;
        let q_max = self.q_extent();
        let peak = (0..=steps)
            .map(|k| self.fourier(q_max * k as f64 / steps as f64, 0.0).norm_sqr())
            .fold(0.0, f64::max);
        peak * 1.02
    }
}

/// Generalised Laguerre polynomial L_p^α(x) by the three-term recurrence.
pub fn laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..p {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
