//! Type-I degenerate phase matching: cone angle, longitudinal bandwidth,
//! split-spot aperture and the crystal-to-detector mapping.
//!
//! Wavevector magnitudes are crystal-internal, in cm⁻¹. Angles in radians.

use std::f64::consts::PI;

use thiserror::Error;

/// Internal pump wavevector magnitude for 351.1 nm in BBO.
pub const DEFAULT_K_PUMP: f64 = 2.9719e5;
/// Internal signal/idler wavevector magnitude at 702.2 nm.
pub const DEFAULT_K_SIGNAL: f64 = 1.4897e5;
pub const DEFAULT_N_SIGNAL: f64 = 1.6648;
/// Pump index implied by `DEFAULT_K_PUMP` at 351.1 nm.
pub const DEFAULT_N_PUMP: f64 = 1.66068;
pub const DEFAULT_CRYSTAL_LENGTH: f64 = 0.2;
pub const DEFAULT_CUT_POLAR_DEG: f64 = 35.2;
pub const DEFAULT_CUT_AZIMUTH_DEG: f64 = 90.0;
/// Ring radius measured in the detection plane.
pub const DEFAULT_RING_RADIUS: f64 = 3.7;
/// Cone angle quoted alongside the wavevectors above; evaluating the cone
/// formula with those wavevectors gives 0.069467 instead.
pub const QUOTED_CONE_ANGLE: f64 = 0.0698;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseMatchError {
    #[error("no degenerate phase matching: arccos argument {0} outside [-1, 1]")]
    NoPhaseMatch(f64),
    #[error("no split-spot solution: arccos argument {0} outside [-1, 1]")]
    NoSplitSolution(f64),
    #[error("cone angle has zero sine; split aperture undefined")]
    DegenerateCone,
    #[error("total internal reflection at the exit face (n·sinθ = {0})")]
    TotalInternalReflection(f64),
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, PhaseMatchError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PhaseMatchError::InvalidParameter { name, value })
    }
}

/// Type-I nonlinear crystal. Cut angles are carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crystal {
    length: f64,
    n_signal: f64,
    n_pump: f64,
    cut_polar: f64,
    cut_azimuth: f64,
}

impl Crystal {
    pub fn new(
        length: f64,
        n_signal: f64,
        n_pump: f64,
        cut_polar: f64,
        cut_azimuth: f64,
    ) -> Result<Self, PhaseMatchError> {
        positive("crystal length", length)?;
        if !(n_signal >= 1.0 && n_signal.is_finite()) {
            return Err(PhaseMatchError::InvalidParameter { name: "n_s", value: n_signal });
        }
        if !(n_pump >= 1.0 && n_pump.is_finite()) {
            return Err(PhaseMatchError::InvalidParameter { name: "n_P", value: n_pump });
        }
        Ok(Self { length, n_signal, n_pump, cut_polar, cut_azimuth })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_signal(&self) -> f64 {
        self.n_signal
    }

    pub fn n_pump(&self) -> f64 {
        self.n_pump
    }

    pub fn cut_polar(&self) -> f64 {
        self.cut_polar
    }

    pub fn cut_azimuth(&self) -> f64 {
        self.cut_azimuth
    }
}

impl Default for Crystal {
    /// 2 mm BBO, θ = 35.2°, φ = 90°.
    fn default() -> Self {
        Self {
            length: DEFAULT_CRYSTAL_LENGTH,
            n_signal: DEFAULT_N_SIGNAL,
            n_pump: DEFAULT_N_PUMP,
            cut_polar: DEFAULT_CUT_POLAR_DEG.to_radians(),
            cut_azimuth: DEFAULT_CUT_AZIMUTH_DEG.to_radians(),
        }
    }
}

/// Maps any angle into [-π, π).
pub fn normalize_azimuth(phi: f64) -> f64 {
    let wrapped = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Wavevector in polar form, polar angle measured from the pump axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    magnitude: f64,
    polar: f64,
    azimuth: f64,
}

impl WaveVector {
    pub fn new(magnitude: f64, polar: f64, azimuth: f64) -> Result<Self, PhaseMatchError> {
        positive("wavevector magnitude", magnitude)?;
        if !(0.0..=PI).contains(&polar) {
            return Err(PhaseMatchError::InvalidParameter { name: "polar angle", value: polar });
        }
        if !azimuth.is_finite() {
            return Err(PhaseMatchError::InvalidParameter { name: "azimuth", value: azimuth });
        }
        Ok(Self { magnitude, polar, azimuth: normalize_azimuth(azimuth) })
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn kx(&self) -> f64 {
        self.magnitude * self.polar.sin() * self.azimuth.cos()
    }

    pub fn ky(&self) -> f64 {
        self.magnitude * self.polar.sin() * self.azimuth.sin()
    }

    pub fn kz(&self) -> f64 {
        self.magnitude * self.polar.cos()
    }

    pub fn transverse(&self) -> (f64, f64) {
        (self.kx(), self.ky())
    }
}

/// Degenerate cone angle θ = arccos((k_P + 2π/l_c) / (2 k_s)).
///
/// An infinite `crystal_length` gives the collinear-limit form
/// arccos(k_P / 2k_s).
pub fn degenerate_polar_angle(
    k_pump: f64,
    k_signal: f64,
    crystal_length: f64,
) -> Result<f64, PhaseMatchError> {
    positive("k_P", k_pump)?;
    positive("k_s", k_signal)?;
    if !(crystal_length > 0.0) {
        return Err(PhaseMatchError::InvalidParameter {
            name: "crystal length",
            value: crystal_length,
        });
    }
    let arg = (k_pump + 2.0 * PI / crystal_length) / (2.0 * k_signal);
    if !(-1.0..=1.0).contains(&arg) {
        return Err(PhaseMatchError::NoPhaseMatch(arg));
    }
    Ok(arg.acos())
}

/// Normalised sinc² phase-matching weight for a longitudinal mismatch `dkz`.
pub fn longitudinal_weight(dkz: f64, crystal_length: f64) -> f64 {
    sinc(0.5 * dkz * crystal_length).powi(2)
}

/// sin(x)/x, exactly 1 at the origin.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// cos Δφ from the transversal phase-matching condition; Δφ is its arccos.
fn split_cosine(
    l: i32,
    theta: f64,
    k_pump: f64,
    k_signal: f64,
    rayleigh_range: f64,
) -> Result<f64, PhaseMatchError> {
    positive("k_P", k_pump)?;
    positive("k_s", k_signal)?;
    positive("Rayleigh range", rayleigh_range)?;
    let s = theta.sin();
    if s == 0.0 || !s.is_finite() {
        return Err(PhaseMatchError::DegenerateCone);
    }
    let l = f64::from(l.unsigned_abs());
    Ok(k_pump * l / (2.0 * k_signal * k_signal * rayleigh_range * s * s) - 1.0)
}

/// Split-spot aperture Δφ = |φ_s − φ_i|; π for an unsplit (l = 0) spot.
pub fn split_spot_aperture(
    l: i32,
    theta: f64,
    k_pump: f64,
    k_signal: f64,
    rayleigh_range: f64,
) -> Result<f64, PhaseMatchError> {
    let arg = split_cosine(l, theta, k_pump, k_signal, rayleigh_range)?;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(PhaseMatchError::NoSplitSolution(arg));
    }
    Ok(arg.acos())
}

/// Refracts a crystal-internal direction through the exit face and projects it
/// onto a detection plane at distance `distance`.
pub fn internal_to_detection(
    theta_int: f64,
    phi: f64,
    n_signal: f64,
    distance: f64,
) -> Result<(f64, f64), PhaseMatchError> {
    positive("detector distance", distance)?;
    if !(0.0..PI / 2.0).contains(&theta_int) {
        return Err(PhaseMatchError::InvalidParameter { name: "internal angle", value: theta_int });
    }
    let sin_ext = n_signal * theta_int.sin();
    if sin_ext >= 1.0 {
        return Err(PhaseMatchError::TotalInternalReflection(sin_ext));
    }
    let radius = distance * sin_ext / (1.0 - sin_ext * sin_ext).sqrt();
    Ok((radius * phi.cos(), radius * phi.sin()))
}

/// Inverse of [`internal_to_detection`]: detection-plane point to (θ_int, φ).
pub fn detection_to_internal(
    x: f64,
    y: f64,
    n_signal: f64,
    distance: f64,
) -> Result<(f64, f64), PhaseMatchError> {
    positive("detector distance", distance)?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(PhaseMatchError::InvalidParameter { name: "detection point", value: f64::NAN });
    }
    let radius = x.hypot(y);
    let sin_ext = radius / radius.hypot(distance);
    let theta_int = (sin_ext / n_signal).asin();
    let phi = if radius == 0.0 { 0.0 } else { normalize_azimuth(y.atan2(x)) };
    Ok((theta_int, phi))
}

/// Crystal-to-detector distance that puts a cone of internal angle
/// `theta_int` on a ring of `ring_radius`.
pub fn distance_for_ring(
    theta_int: f64,
    n_signal: f64,
    ring_radius: f64,
) -> Result<f64, PhaseMatchError> {
    let (r, _) = internal_to_detection(theta_int, 0.0, n_signal, 1.0)?;
    positive("ring radius", ring_radius)?;
    if r == 0.0 {
        return Err(PhaseMatchError::DegenerateCone);
    }
    Ok(ring_radius / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cone_angle_at_default_wavevectors() {
        let theta = degenerate_polar_angle(DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.2).unwrap();
        // independent scalar evaluation
        assert!((theta - 0.069_466_706_810).abs() < 1e-10);
        assert!((theta - QUOTED_CONE_ANGLE).abs() < 5e-4);
    }

    #[test]
    fn collinear_limit_and_domain() {
        let theta = degenerate_polar_angle(2.0e5, 1.0e5, f64::INFINITY).unwrap();
        assert_eq!(theta, 0.0);
        assert!(matches!(
            degenerate_polar_angle(3.0e5, 1.4e5, 0.2),
            Err(PhaseMatchError::NoPhaseMatch(a)) if a > 1.0
        ));
    }

    #[test]
    fn cone_opens_with_signal_momentum() {
        let mut prev = 0.0;
        for k in 0..50 {
            let ks = 1.4863e5 + 10.0 * k as f64;
            let theta = degenerate_polar_angle(DEFAULT_K_PUMP, ks, 0.2).unwrap();
            assert!(theta > prev);
            prev = theta;
        }
    }

    #[test]
    fn sinc_weight_values() {
        assert_eq!(longitudinal_weight(0.0, 0.2), 1.0);
        assert!(longitudinal_weight(2.0 * PI / 0.2, 0.2) < 1e-30);
        let w = longitudinal_weight(PI / 0.2, 0.2);
        assert!((w - 0.405_284_734_569).abs() < 1e-12);
    }

    #[test]
    fn split_aperture_values() {
        let theta = degenerate_polar_angle(DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.2).unwrap();
        assert_eq!(split_spot_aperture(0, theta, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5), Ok(PI));
        let dphi = split_spot_aperture(4, theta, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5).unwrap();
        assert!((PI - dphi - 0.149_258_515_5).abs() < 1e-8);
        assert_eq!(
            split_spot_aperture(4, 0.0, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5),
            Err(PhaseMatchError::DegenerateCone)
        );
    }

    #[test]
    fn split_aperture_insoluble_for_large_charge() {
        let theta = degenerate_polar_angle(DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.2).unwrap();
        // transversal equation: |q_s + q_i|² = 2q²(1 + cos Δφ) ≤ 4q²
        let q = DEFAULT_K_SIGNAL * theta.sin();
        let l_max = (4.0 * q * q * 0.5 / DEFAULT_K_PUMP).floor() as i32;
        assert!(split_spot_aperture(l_max, theta, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5).is_ok());
        assert!(matches!(
            split_spot_aperture(l_max + 1, theta, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5),
            Err(PhaseMatchError::NoSplitSolution(_))
        ));
    }

    #[test]
    fn split_aperture_matches_constant_of_motion() {
        let theta = degenerate_polar_angle(DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.2).unwrap();
        let q = DEFAULT_K_SIGNAL * theta.sin();
        for l in 1..=6 {
            let dphi = split_spot_aperture(l, theta, DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.5).unwrap();
            let (sx, sy) = (q, 0.0);
            let (ix, iy) = (q * dphi.cos(), q * dphi.sin());
            let com = (sx + ix).powi(2) + (sy + iy).powi(2);
            let target = DEFAULT_K_PUMP * f64::from(l) / 0.5;
            assert!((com - target).abs() / target < 1e-6, "l={l}");
        }
    }

    #[test]
    fn detection_mapping() {
        assert_eq!(internal_to_detection(0.0, 1.0, 1.6648, 30.0), Ok((0.0, 0.0)));
        let theta = degenerate_polar_angle(DEFAULT_K_PUMP, DEFAULT_K_SIGNAL, 0.2).unwrap();
        let d = distance_for_ring(theta, DEFAULT_N_SIGNAL, DEFAULT_RING_RADIUS).unwrap();
        assert!((d - 31.804_838_3).abs() < 1e-6);
        let (x, y) = internal_to_detection(theta, 0.83, DEFAULT_N_SIGNAL, d).unwrap();
        assert!((x.hypot(y) - 3.7).abs() < 1e-12);
        assert_eq!(y.atan2(x), 0.83);
        assert!(matches!(
            internal_to_detection(0.7, 0.0, 1.6648, d),
            Err(PhaseMatchError::TotalInternalReflection(_))
        ));
    }

    #[test]
    fn wavevector_components() {
        let k = WaveVector::new(1.4897e5, 0.0695, 3.5 * PI).unwrap();
        assert!((k.azimuth() - (-0.5 * PI)).abs() < 1e-12);
        let sum = k.kx().powi(2) + k.ky().powi(2) + k.kz().powi(2);
        assert!((sum - k.magnitude().powi(2)).abs() / k.magnitude().powi(2) < 1e-12);
        assert!(WaveVector::new(-1.0, 0.1, 0.0).is_err());
        assert!(WaveVector::new(1.0, 4.0, 0.0).is_err());
        assert_eq!(normalize_azimuth(PI), -PI);
    }

    proptest! {
        #[test]
        fn sinc_weight_even_and_bounded(dkz in -1e4f64..1e4, lc in 1e-3f64..1.0) {
            let w = longitudinal_weight(dkz, lc);
            prop_assert!(w <= 1.0);
            prop_assert!(w >= 0.0);
            prop_assert_eq!(w, longitudinal_weight(-dkz, lc));
        }

        #[test]
        fn detection_mapping_round_trip(theta in 0.0f64..0.6, phi in -3.0f64..3.0, d in 1.0f64..100.0) {
            let (x, y) = internal_to_detection(theta, phi, 1.6648, d).unwrap();
            let (t2, p2) = detection_to_internal(x, y, 1.6648, d).unwrap();
            prop_assert!((t2 - theta).abs() < 1e-10);
            if theta > 1e-6 {
                prop_assert!((normalize_azimuth(p2 - phi)).abs() < 1e-10);
            }
        }
    }
}
