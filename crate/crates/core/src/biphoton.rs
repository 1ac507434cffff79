//! Two-photon amplitude over detection-plane coordinates and the discrete
//! OAM decomposition of the pair state.
//!
//! For a crystal much thinner than the pump Rayleigh range the pair
//! amplitude factorises into a longitudinal phase-matching term and the 2-d
//! Fourier transform of the pump mode evaluated at the transverse mismatch:
//!
//! ```text
//! F(s, i) = |sinc(Δk_z l_c / 2)| · ũ_pump(Δk_x, Δk_y)
//! ```
//!
//! Both photons are taken at the degenerate wavelength, so `k_s = k_i`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::lgbeam::{BeamError, LaguerreGaussianMode};
use crate::phasematch::{
    self, Crystal, PhaseMatchError, WaveVector, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL,
    DEFAULT_RING_RADIUS,
};
use crate::Point;

/// Vacuum pump wavelength, 351.1 nm, in cm.
pub const DEFAULT_PUMP_WAVELENGTH: f64 = 351.1e-7;
pub const DEFAULT_RAYLEIGH_RANGE: f64 = 0.5;
/// Tolerance on `k_s` versus the degenerate value 2π n_s / (2 λ_P).
pub const WAVEVECTOR_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("crystal length {length} cm is not below the Rayleigh range {rayleigh_range} cm")]
    ThinCrystalViolation { length: f64, rayleigh_range: f64 },
    #[error("{name} = {given} cm⁻¹ is inconsistent with the degenerate value {expected} cm⁻¹")]
    WavevectorMismatch { name: &'static str, given: f64, expected: f64 },
    #[error("detection point ({x}, {y}) cannot be mapped back into the crystal")]
    InvalidDetectionPoint { x: f64, y: f64 },
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
    #[error(transparent)]
    Beam(#[from] BeamError),
}

/// How the pump focus is specified; the other quantity is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamSize {
    /// Rayleigh range inside the crystal [cm].
    RayleighRange(f64),
    /// Waist inside the crystal [cm].
    Waist(f64),
}

/// Inputs from which a [`Scene`] is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub l: i32,
    pub p: u32,
    /// Vacuum pump wavelength [cm].
    pub pump_wavelength: f64,
    pub beam: BeamSize,
    pub crystal: Crystal,
    pub k_pump: f64,
    pub k_signal: f64,
    /// Crystal-to-detection-plane distance [cm]. `None` derives it from the
    /// cone angle and a 3.7 cm ring.
    pub detector_distance: Option<f64>,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            l: 0,
            p: 0,
            pump_wavelength: DEFAULT_PUMP_WAVELENGTH,
            beam: BeamSize::RayleighRange(DEFAULT_RAYLEIGH_RANGE),
            crystal: Crystal::default(),
            k_pump: DEFAULT_K_PUMP,
            k_signal: DEFAULT_K_SIGNAL,
            detector_distance: None,
        }
    }
}

impl SceneParams {
    pub fn with_charge(l: i32) -> Self {
        Self { l, ..Self::default() }
    }
}

/// A validated down-conversion geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pump: LaguerreGaussianMode,
    pump_wavelength: f64,
    crystal: Crystal,
    k_pump: f64,
    k_signal: f64,
    detector_distance: f64,
    cone_angle: f64,
}

/// Transverse and longitudinal wavevector mismatch. `dkz` is measured from
/// the longitudinal phase-matching condition `k_s cosθ_s + k_i cosθ_i − k_P = 2π/l_c`,
/// so it vanishes on the phase-matched cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaK {
    pub dkx: f64,
    pub dky: f64,
    pub dkz: f64,
}

impl DeltaK {
    pub fn transverse_norm(&self) -> f64 {
        self.dkx.hypot(self.dky)
    }
}

impl Scene {
    pub fn new(params: SceneParams) -> Result<Self, SceneError> {
        let crystal = params.crystal;
        let medium_wavelength = params.pump_wavelength / crystal.n_pump();
        let pump = match params.beam {
            BeamSize::RayleighRange(z_r) => {
                LaguerreGaussianMode::from_rayleigh_range(params.l, params.p, z_r, medium_wavelength)?
            }
            BeamSize::Waist(w0) => {
                LaguerreGaussianMode::from_waist(params.l, params.p, w0, medium_wavelength)?
            }
        };
        if crystal.length() >= pump.rayleigh_range() {
            return Err(SceneError::ThinCrystalViolation {
                length: crystal.length(),
                rayleigh_range: pump.rayleigh_range(),
            });
        }
        let expected_kp = 2.0 * PI * crystal.n_pump() / params.pump_wavelength;
        check_wavevector("k_P", params.k_pump, expected_kp)?;
        let expected_ks = 2.0 * PI * crystal.n_signal() / (2.0 * params.pump_wavelength);
        check_wavevector("k_s", params.k_signal, expected_ks)?;

        let cone_angle =
            phasematch::degenerate_polar_angle(params.k_pump, params.k_signal, crystal.length())?;
        let detector_distance = match params.detector_distance {
            Some(d) => d,
            None => phasematch::distance_for_ring(cone_angle, crystal.n_signal(), DEFAULT_RING_RADIUS)?,
        };
        if !(detector_distance > 0.0 && detector_distance.is_finite()) {
            return Err(PhaseMatchError::InvalidParameter {
                name: "detector distance",
                value: detector_distance,
            }
            .into());
        }
        Ok(Self {
            pump,
            pump_wavelength: params.pump_wavelength,
            crystal,
            k_pump: params.k_pump,
            k_signal: params.k_signal,
            detector_distance,
            cone_angle,
        })
    }

    pub fn pump(&self) -> &LaguerreGaussianMode {
        &self.pump
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump_wavelength
    }

    pub fn crystal(&self) -> &Crystal {
        &self.crystal
    }

    pub fn k_pump(&self) -> f64 {
        self.k_pump
    }

    pub fn k_signal(&self) -> f64 {
        self.k_signal
    }

    pub fn detector_distance(&self) -> f64 {
        self.detector_distance
    }

    pub fn rayleigh_range(&self) -> f64 {
        self.pump.rayleigh_range()
    }

    /// Phase-matched internal cone angle θ.
    pub fn cone_angle(&self) -> f64 {
        self.cone_angle
    }

    /// Radius of the phase-matched ring in the detection plane.
    pub fn ring_radius(&self) -> f64 {
        let (x, _) = phasematch::internal_to_detection(
            self.cone_angle,
            0.0,
            self.crystal.n_signal(),
            self.detector_distance,
        )
        .expect("cone angle validated at construction");
        x
    }

    /// Split-spot aperture Δφ for the pump charge.
    pub fn split_aperture(&self) -> Result<f64, PhaseMatchError> {
        phasematch::split_spot_aperture(
            self.pump.l(),
            self.cone_angle,
            self.k_pump,
            self.k_signal,
            self.rayleigh_range(),
        )
    }

    /// Detection-plane position of a ring point at azimuth `phi`.
    pub fn ring_point(&self, phi: f64) -> Point {
        let r = self.ring_radius();
        Point::new(r * phi.cos(), r * phi.sin())
    }

    /// Internal wavevector of a photon landing at `point`.
    pub fn wavevector_at(&self, point: Point) -> Result<WaveVector, SceneError> {
        let (theta, phi) = phasematch::detection_to_internal(
            point.x,
            point.y,
            self.crystal.n_signal(),
            self.detector_distance,
        )
        .map_err(|_| SceneError::InvalidDetectionPoint { x: point.x, y: point.y })?;
        WaveVector::new(self.k_signal, theta, phi)
            .map_err(|_| SceneError::InvalidDetectionPoint { x: point.x, y: point.y })
    }

    /// Linear scale from transverse wavevector [cm⁻¹] to detection-plane
    /// distance [cm] near the ring.
    pub fn plane_scale(&self) -> f64 {
        let n = self.crystal.n_signal();
        let sin_ext = n * self.cone_angle.sin();
        let cos_ext = (1.0 - sin_ext * sin_ext).sqrt();
        let radial = self.detector_distance * n / (self.k_signal * cos_ext.powi(3));
        let tangential = self.ring_radius() / (self.k_signal * self.cone_angle.sin());
        radial.max(tangential)
    }

    /// Half-width of the detection-plane box around the back-to-back point
    /// of a photon that holds essentially all of its partner's density.
    pub fn partner_half_width(&self) -> f64 {
        1.1 * self.pump.q_extent() * self.plane_scale()
    }
}

fn check_wavevector(name: &'static str, given: f64, expected: f64) -> Result<(), SceneError> {
    if !(given > 0.0 && given.is_finite()) || ((given - expected) / expected).abs() > WAVEVECTOR_TOLERANCE {
        return Err(SceneError::WavevectorMismatch { name, given, expected });
    }
    Ok(())
}

/// Wavevector mismatch of a pair landing at `signal` and `idler`.
pub fn delta_k(scene: &Scene, signal: Point, idler: Point) -> Result<DeltaK, SceneError> {
    let ks = scene.wavevector_at(signal)?;
    let ki = scene.wavevector_at(idler)?;
    let (sx, sy) = ks.transverse();
    let (ix, iy) = ki.transverse();
    let longitudinal = 2.0 * PI / scene.crystal.length();
    Ok(DeltaK {
        dkx: sx + ix,
        dky: sy + iy,
        dkz: ks.kz() + ki.kz() - scene.k_pump - longitudinal,
    })
}

/// Pair amplitude F(s, i); `|F|²` is the coincidence density.
pub fn amplitude_f(scene: &Scene, signal: Point, idler: Point) -> Result<Complex64, SceneError> {
    let dk = delta_k(scene, signal, idler)?;
    Ok(amplitude_from_mismatch(scene, &dk))
}

pub(crate) fn amplitude_from_mismatch(scene: &Scene, dk: &DeltaK) -> Complex64 {
    let longitudinal = phasematch::sinc(0.5 * dk.dkz * scene.crystal.length()).abs();
    scene.pump.fourier(dk.dkx, dk.dky) * longitudinal
}

/// |F(s, i)|².
pub fn pair_density(scene: &Scene, signal: Point, idler: Point) -> Result<f64, SceneError> {
    amplitude_f(scene, signal, idler).map(|a| a.norm_sqr())
}

/// One term `weight · |j_z = signal⟩_s |j_z = idler⟩_i` of the OAM expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OamTerm {
    pub signal_jz: i64,
    pub idler_jz: i64,
    pub weight: f64,
}

/// Binomially weighted OAM decomposition, in units of the overall constant G.
#[derive(Debug, Clone, PartialEq)]
pub struct OamState {
    pub l: u32,
    pub terms: Vec<OamTerm>,
}

impl OamState {
    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    pub fn total_amplitude(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }
}

/// C(l, m) as a float; exact for the charges used here.
pub fn binomial(l: u32, m: u32) -> f64 {
    if m > l {
        return 0.0;
    }
    let m = m.min(l - m);
    (0..m).fold(1.0, |acc, k| acc * f64::from(l - k) / f64::from(k + 1))
        .round()
}

/// Pair state Σ_m C(l, m) |m⟩_s |l−m⟩_i.
pub fn oam_amplitudes(l: u32) -> OamState {
    let terms = (0..=l)
        .map(|m| OamTerm {
            signal_jz: i64::from(m),
            idler_jz: i64::from(l) - i64::from(m),
            weight: binomial(l, m),
        })
        .collect();
    OamState { l, terms }
}

/// Idler state after tracing out the signal without a mask:
/// Σ_m C(l, m) |l−m⟩_i. Signal j_z entries are set to zero.
pub fn idler_projection_no_mask(l: u32) -> OamState {
    let terms = oam_amplitudes(l)
        .terms
        .into_iter()
        .map(|t| OamTerm { signal_jz: 0, ..t })
        .collect();
    OamState { l, terms }
}

/// Amplitude behind a q phase mask in the idler arm: C(l, q), zero outside 0..=l.
pub fn mask_amplitude(l: u32, q: i64) -> f64 {
    match u32::try_from(q) {
        Ok(q) if q <= l => binomial(l, q),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(l: i32) -> Scene {
        Scene::new(SceneParams::with_charge(l)).unwrap()
    }

    #[test]
    fn default_scene_geometry() {
        let s = scene(4);
        assert!((s.ring_radius() - 3.7).abs() < 1e-12);
        assert!((s.pump().waist() - 18.3435e-4).abs() < 1e-8);
        assert!((s.rayleigh_range() - 0.5).abs() < 1e-12);
        assert!((s.cone_angle() - 0.069_466_706_81).abs() < 1e-10);
    }

    #[test]
    fn thin_crystal_enforced() {
        let mut p = SceneParams::with_charge(4);
        p.crystal = Crystal::new(200.0, 1.6648, 1.66068, 0.0, 0.0).unwrap();
        assert!(matches!(Scene::new(p), Err(SceneError::ThinCrystalViolation { .. })));
    }

    #[test]
    fn wavevector_consistency_enforced() {
        let mut p = SceneParams::with_charge(0);
        p.k_signal = 1.6e5;
        assert!(matches!(Scene::new(p), Err(SceneError::WavevectorMismatch { name: "k_s", .. })));
    }

    #[test]
    fn back_to_back_pair_is_matched() {
        let s = scene(4);
        let dk = delta_k(&s, s.ring_point(PI), s.ring_point(0.0)).unwrap();
        assert!(dk.dkx.abs() < 1e-9);
        assert!(dk.dky.abs() < 1e-9);
        assert!(dk.dkz.abs() < 1e-6);
    }

    #[test]
    fn split_spot_mismatch_matches_constant_of_motion() {
        let s = scene(4);
        let dk = delta_k(&s, Point::new(-3.7, 0.0), Point::new(3.7, 0.55)).unwrap();
        let expected = (s.k_pump() * 4.0 / 0.5).sqrt();
        assert!((dk.transverse_norm() - expected).abs() / expected < 0.02, "{}", dk.transverse_norm());
    }

    #[test]
    fn swap_symmetry() {
        let s = scene(3);
        let a = Point::new(-3.62, 0.11);
        let b = Point::new(3.81, 0.43);
        assert_eq!(delta_k(&s, a, b).unwrap(), delta_k(&s, b, a).unwrap());
        assert_eq!(pair_density(&s, a, b).unwrap(), pair_density(&s, b, a).unwrap());
    }

    fn ring_scan(s: &Scene, step: f64) -> Vec<(f64, f64)> {
        let signal = s.ring_point(PI);
        (-2500..=2500)
            .map(|k| {
                let dev = k as f64 * step;
                (dev, pair_density(s, signal, s.ring_point(dev)).unwrap())
            })
            .collect()
    }

    #[test]
    fn gaussian_pump_peaks_back_to_back() {
        let s = scene(0);
        let scan = ring_scan(&s, 1e-3);
        let (dev, _) = scan.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn donut_pump_splits_at_aperture() {
        for l in [1, 2, 4] {
            let s = scene(l);
            let step = 1e-4;
            let scan = ring_scan(&s, step);
            let centre = scan.iter().find(|(d, _)| *d == 0.0).unwrap().1;
            assert!(centre < 1e-20);
            let (dev, _) = scan
                .iter()
                .filter(|(d, _)| *d > 0.0)
                .cloned()
                .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let delta = PI - s.split_aperture().unwrap();
            assert!((dev - delta).abs() <= step, "l={l} dev={dev} delta={delta}");
            // mirror partner
            let left = scan.iter().find(|(d, _)| (*d + dev).abs() < 1e-12).unwrap().1;
            let right = scan.iter().find(|(d, _)| (*d - dev).abs() < 1e-12).unwrap().1;
            assert!((left - right).abs() / right < 1e-9);
        }
    }

    #[test]
    fn off_ring_sinc_null() {
        let s = scene(0);
        // signal on the ring; idler radius chosen so that Δk_z = 2π/l_c exactly
        let signal = s.ring_point(PI);
        let ks = s.k_signal();
        let theta = s.cone_angle();
        let target_cos = theta.cos() + (2.0 * PI / s.crystal().length()) / ks;
        let theta_i = target_cos.acos();
        let (x, y) = phasematch::internal_to_detection(theta_i, 0.0, s.crystal().n_signal(), s.detector_distance()).unwrap();
        let dk = delta_k(&s, signal, Point::new(x, y)).unwrap();
        assert!((dk.dkz - 2.0 * PI / 0.2).abs() < 1e-6);
        let a = amplitude_f(&s, signal, Point::new(x, y)).unwrap();
        assert!(a.norm() < 1e-9 * s.pump().fourier(0.0, 0.0).norm());
    }

    #[test]
    fn binomial_tables() {
        assert_eq!(oam_amplitudes(4).weights(), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        assert_eq!(oam_amplitudes(0).weights(), vec![1.0]);
        let s7 = oam_amplitudes(7).weights();
        let rev: Vec<f64> = s7.iter().rev().cloned().collect();
        assert_eq!(s7, rev);
        let idler = idler_projection_no_mask(4);
        let jz: Vec<i64> = idler.terms.iter().map(|t| t.idler_jz).collect();
        assert_eq!(jz, vec![4, 3, 2, 1, 0]);
        assert_eq!(idler.total_amplitude(), 16.0);
        assert_eq!(idler_projection_no_mask(0).terms.len(), 1);
        assert_eq!(mask_amplitude(4, 2), 6.0);
        assert_eq!(mask_amplitude(4, 5), 0.0);
        assert_eq!(mask_amplitude(4, -1), 0.0);
        assert_eq!((0..=4).map(|q| mask_amplitude(4, q)).sum::<f64>(), 16.0);
        for l in 0..=10u32 {
            assert_eq!(oam_amplitudes(l).total_amplitude(), f64::from(2u32.pow(l)));
        }
    }
}
