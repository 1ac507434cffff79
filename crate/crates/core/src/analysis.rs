//! Two-spot fitting of coincidence maps, charge inference from the split
//! geometry, and triple-coincidence rate algebra.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::biphoton::Scene;
use crate::counting::CountRecord;
use crate::map::GridMap;

pub const MAX_FIT_ITERATIONS: usize = 200;
pub const FIT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("map has no local maximum above the noise floor")]
    NoSignal,
    #[error("two-spot fit did not converge after {} iterations", .last.iterations)]
    FitDiverged { last: Box<TwoSpotFit> },
    #[error("spot offset {delta_y0} cm is outside [0, {ring_radius}) cm")]
    GeometryViolation { delta_y0: f64, ring_radius: f64 },
    #[error("trigger rate is zero")]
    DivisionByZeroRate,
}

/// One elliptical Gaussian spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpot {
    pub amplitude: f64,
    pub x: f64,
    pub y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaussianSpot {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.x) / self.sigma_x;
        let v = (y - self.y) / self.sigma_y;
        self.amplitude * (-0.5 * (u * u + v * v)).exp()
    }
}

/// Result of fitting two Gaussians plus a flat offset. `spots[0]` is the
/// spot with the larger `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSpotFit {
    pub spots: [GaussianSpot; 2],
    pub offset: f64,
    /// Residual sum of squares [counts²].
    pub rss: f64,
    /// Offset of one spot from the symmetry axis, half the |y| separation [cm].
    pub delta_y0: f64,
    pub iterations: usize,
}

impl TwoSpotFit {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.offset + self.spots[0].value(x, y) + self.spots[1].value(x, y)
    }

    fn from_params(p: &[f64], rss: f64, iterations: usize) -> Self {
        let spot = |k: usize| GaussianSpot {
            amplitude: p[k],
            x: p[k + 1],
            y: p[k + 2],
            sigma_x: p[k + 3],
            sigma_y: p[k + 4],
        };
        let mut spots = [spot(1), spot(6)];
        if spots[1].y > spots[0].y {
            spots.swap(0, 1);
        }
        let delta_y0 = 0.5 * (spots[0].y - spots[1].y).abs();
        Self { spots, offset: p[0], rss, delta_y0, iterations }
    }
}

/// 3×3 box average; edge cells average over their in-grid neighbours.
pub fn smooth_map(map: &GridMap) -> GridMap {
    GridMap::new(map.xs().to_vec(), map.ys().to_vec(), box_smooth(map)).expect("same shape")
}

fn box_smooth(map: &GridMap) -> Vec<f64> {
    let (nx, ny) = (map.nx(), map.ny());
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let (mut sum, mut n) = (0.0, 0.0);
            for jy in iy.saturating_sub(1)..(iy + 2).min(ny) {
                for jx in ix.saturating_sub(1)..(ix + 2).min(nx) {
                    sum += map.get(jx, jy);
                    n += 1.0;
                }
            }
            out[iy * nx + ix] = sum / n;
        }
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Local maxima of the 3×3-smoothed map above the noise floor, strongest
/// first, as (ix, iy, smoothed value). Also returns the background level.
fn smoothed_peaks(map: &GridMap) -> (Vec<(usize, usize, f64)>, f64, Vec<f64>) {
    let (nx, ny) = (map.nx(), map.ny());
    let s = box_smooth(map);
    let base = median(&s);
    let top = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // counts are Poisson: require a 5σ excess over the background level
    let floor = base + (0.1 * (top - base)).max(5.0 * (base.max(0.0) + 1.0).sqrt());
    let mut peaks = Vec::new();
    if !(top > base) {
        return (peaks, base, s);
    }
    for iy in 0..ny {
        for ix in 0..nx {
            let v = s[iy * nx + ix];
            if v <= floor {
                continue;
            }
            let mut is_max = true;
            for jy in iy.saturating_sub(1)..(iy + 2).min(ny) {
                for jx in ix.saturating_sub(1)..(ix + 2).min(nx) {
                    let k = jy * nx + jx;
                    let w = s[k];
                    // ties go to the earlier cell
                    if w > v || (w == v && k < iy * nx + ix) {
                        is_max = false;
                    }
                }
            }
            if is_max {
                peaks.push((ix, iy, v));
            }
        }
    }
    peaks.sort_by(|a, b| b.2.total_cmp(&a.2));
    (peaks, base, s)
}

/// Half-max half-widths around a smoothed peak, converted to Gaussian σ.
fn initial_widths(map: &GridMap, s: &[f64], ix: usize, iy: usize, base: f64) -> (f64, f64) {
    let (nx, ny) = (map.nx(), map.ny());
    let (dx, dy) = map.steps();
    let peak = s[iy * nx + ix];
    let half = base + 0.5 * (peak - base);
    let walk = |mut j: isize, step: isize, n: usize, idx: &dyn Fn(usize) -> usize| {
        let mut count = 0;
        while j >= 0 && (j as usize) < n && s[idx(j as usize)] > half {
            j += step;
            count += 1;
        }
        count as f64
    };
    let wx = 0.5 * (walk(ix as isize, 1, nx, &|j| iy * nx + j) + walk(ix as isize, -1, nx, &|j| iy * nx + j));
    let wy = 0.5 * (walk(iy as isize, 1, ny, &|j| j * nx + ix) + walk(iy as isize, -1, ny, &|j| j * nx + ix));
    let fwhm_to_sigma = 1.0 / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    (
        (2.0 * wx * dx * fwhm_to_sigma).max(dx),
        (2.0 * wy * dy * fwhm_to_sigma).max(dy),
    )
}

/// Starting parameters. Two separated maxima give the 11 two-spot
/// parameters; a single maximum gives the 6 parameters of one spot.
fn initial_params(map: &GridMap) -> Result<Vec<f64>, AnalysisError> {
    let (peaks, base, s) = smoothed_peaks(map);
    let Some(&(ix, iy, v)) = peaks.first() else {
        return Err(AnalysisError::NoSignal);
    };
    let (sx, sy) = initial_widths(map, &s, ix, iy, base);
    let (x0, y0) = (map.xs()[ix], map.ys()[iy]);
    let nx = map.nx();
    // a second spot must be separated from the first by a dip below half
    // of the weaker peak
    let separated = |jx: usize, jy: usize, w: f64| {
        let steps = ix.abs_diff(jx).max(iy.abs_diff(jy));
        let dip = (0..=steps)
            .map(|t| {
                let f = t as f64 / steps as f64;
                let cx = (ix as f64 + f * (jx as f64 - ix as f64)).round() as usize;
                let cy = (iy as f64 + f * (jy as f64 - iy as f64)).round() as usize;
                s[cy * nx + cx]
            })
            .fold(f64::INFINITY, f64::min);
        steps > 1 && dip - base < 0.5 * (w - base)
    };
    let second = peaks[1..]
        .iter()
        .find(|p| p.2 - base >= 0.25 * (v - base) && separated(p.0, p.1, p.2));
    let mut p = vec![base.max(0.0), v - base, x0, y0, sx, sy];
    if let Some(&(jx, jy, w)) = second {
        let (tx, ty) = initial_widths(map, &s, jx, jy, base);
        p.extend([w - base, map.xs()[jx], map.ys()[jy], tx, ty]);
    }
    Ok(p)
}

/// Expands a 6-parameter single-spot vector into two coincident halves.
fn expand(p: &[f64]) -> Vec<f64> {
    if p.len() == 11 {
        return p.to_vec();
    }
    let half = 0.5 * p[1];
    vec![p[0], half, p[2], p[3], p[4], p[5], half, p[2], p[3], p[4], p[5]]
}

fn valid(p: &[f64]) -> bool {
    p.iter().all(|v| v.is_finite())
        && (1..p.len()).step_by(5).all(|k| p[k] >= 0.0 && p[k + 3] > 0.0 && p[k + 4] > 0.0)
}

fn residual_sum(map: &GridMap, p: &[f64]) -> f64 {
    let mut rss = 0.0;
    for (iy, &y) in map.ys().iter().enumerate() {
        for (ix, &x) in map.xs().iter().enumerate() {
            let mut m = p[0];
            for k in (1..p.len()).step_by(5) {
                let u = (x - p[k + 1]) / p[k + 3];
                let v = (y - p[k + 2]) / p[k + 4];
                m += p[k] * (-0.5 * (u * u + v * v)).exp();
            }
            let r = m - map.get(ix, iy);
            rss += r * r;
        }
    }
    rss
}

fn normal_equations(map: &GridMap, p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = p.len();
    let mut jtj = DMatrix::<f64>::zeros(n, n);
    let mut jtr = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; n];
    for (iy, &y) in map.ys().iter().enumerate() {
        for (ix, &x) in map.xs().iter().enumerate() {
            row[0] = 1.0;
            let mut m = p[0];
            for k in (1..n).step_by(5) {
                let (dx, dy) = (x - p[k + 1], y - p[k + 2]);
                let (sx, sy) = (p[k + 3], p[k + 4]);
                let e = (-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy))).exp();
                let g = p[k] * e;
                m += g;
                row[k] = e;
                row[k + 1] = g * dx / (sx * sx);
                row[k + 2] = g * dy / (sy * sy);
                row[k + 3] = g * dx * dx / (sx * sx * sx);
                row[k + 4] = g * dy * dy / (sy * sy * sy);
            }
            let r = m - map.get(ix, iy);
            for a in 0..n {
                jtr[a] += row[a] * r;
                for b in a..n {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    (jtj, jtr)
}

/// Fits two elliptical Gaussians plus a flat offset by damped least squares.
///
/// Starting values come from the two strongest separated local maxima of the
/// 3×3-smoothed map. When the map has a single maximum one Gaussian is
/// fitted and reported as two coincident halves.
pub fn fit_two_spots(map: &GridMap) -> Result<TwoSpotFit, AnalysisError> {
    let mut p = initial_params(map)?;
    let n = p.len();
    let scale: f64 = map.values().iter().map(|v| v * v).sum();
    let mut rss = residual_sum(map, &p);
    let mut lambda = 1e-3;
    let done = |p: &[f64], rss: f64, it: usize| TwoSpotFit::from_params(&expand(p), rss, it);
    for it in 1..=MAX_FIT_ITERATIONS {
        let (jtj, jtr) = normal_equations(map, &p);
        let max_diag = (0..n).map(|a| jtj[(a, a)]).fold(0.0, f64::max);
        loop {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * max_diag);
            }
            let candidate: Option<Vec<f64>> = a
                .cholesky()
                .map(|c| c.solve(&(-&jtr)))
                .map(|d| p.iter().zip(d.iter()).map(|(x, dx)| x + dx).collect());
            if let Some(q) = candidate.filter(|q| valid(q)) {
                let new_rss = residual_sum(map, &q);
                if new_rss < rss {
                    let change = (rss - new_rss) / rss;
                    p = q;
                    rss = new_rss;
                    lambda = (lambda * 0.1).max(1e-12);
                    if change < FIT_TOLERANCE || rss <= 1e-28 * scale {
                        return Ok(done(&p, rss, it));
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left: p is a minimum to working precision
                return Ok(done(&p, rss, it));
            }
        }
    }
    Err(AnalysisError::FitDiverged { last: Box::new(done(&p, rss, MAX_FIT_ITERATIONS)) })
}

/// Pump charge implied by a spot offset `delta_y0` from the symmetry axis on
/// a ring of radius `ring_radius`, via the conserved transverse momentum
/// `k_P·l/z_R` of the pair.
pub fn infer_l(
    delta_y0: f64,
    ring_radius: f64,
    theta0: f64,
    k_s: f64,
    k_p: f64,
    z_r: f64,
) -> Result<f64, AnalysisError> {
    if !(delta_y0 >= 0.0 && delta_y0 < ring_radius) {
        return Err(AnalysisError::GeometryViolation { delta_y0, ring_radius });
    }
    let s = delta_y0 / ring_radius;
    let radial = 1.0 - (1.0 - s * s).sqrt();
    let lateral = s / theta0.cos();
    Ok(z_r / k_p * (k_s * theta0.sin()).powi(2) * (radial * radial + lateral * lateral))
}

/// [`infer_l`] with the geometry of `scene`.
pub fn infer_l_for_scene(scene: &Scene, delta_y0: f64) -> Result<f64, AnalysisError> {
    infer_l(
        delta_y0,
        scene.ring_radius(),
        scene.cone_angle(),
        scene.k_signal(),
        scene.k_pump(),
        scene.rayleigh_range(),
    )
}

/// Spot offset predicted by the split-spot aperture: R·sin(π − Δφ).
pub fn predicted_delta_y0(scene: &Scene) -> Result<f64, crate::phasematch::PhaseMatchError> {
    Ok(scene.ring_radius() * scene.split_aperture()?.sin())
}

/// Squared norm of the pair's transverse-momentum sum [cm⁻²].
pub fn constant_of_motion(q_s: (f64, f64), q_i: (f64, f64)) -> f64 {
    (q_s.0 + q_i.0).powi(2) + (q_s.1 + q_i.1).powi(2)
}

/// Accidental triple rate for an accidental window `tau`.
pub fn accidental_rate(r_ctop: f64, r_bot: f64, r_cbot: f64, r_top: f64, tau: f64) -> f64 {
    (r_ctop * r_bot + r_cbot * r_top) * tau / 2.0
}

/// Triple rate expected if the two arms fire independently given a trigger.
pub fn semiclassical_triple_rate(r_ctop: f64, r_cbot: f64, r_trig: f64) -> Result<f64, AnalysisError> {
    if r_trig == 0.0 {
        return Err(AnalysisError::DivisionByZeroRate);
    }
    Ok(r_ctop * r_cbot / r_trig)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrueRateFlag {
    /// More than 3σ above zero.
    Significant,
    ConsistentWithZero,
    /// Negative by more than 3σ.
    Negative,
    NoData,
}

impl std::fmt::Display for TrueRateFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrueRateFlag::Significant => "significant",
            TrueRateFlag::ConsistentWithZero => "consistent_with_zero",
            TrueRateFlag::Negative => "negative",
            TrueRateFlag::NoData => "no_data",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    pub r_trig: f64,
    pub r_ctop: f64,
    pub r_cbot: f64,
    pub r_top: f64,
    pub r_bot: f64,
    pub r_triple_measured: f64,
    pub r_acc: f64,
    /// Measured minus accidental triples; may be negative.
    pub r_triple_true: f64,
    /// Poisson standard error of the measured triple rate.
    pub r_triple_sigma: f64,
    pub true_rate_flag: TrueRateFlag,
    pub r_triple_semiclassical: f64,
    /// `None` when the true rate is not positive.
    pub ratio_semiclassical_to_true: Option<f64>,
}

impl RateSummary {
    /// `key = value` lines in a fixed order.
    pub fn to_report(&self) -> String {
        let ratio = match self.ratio_semiclassical_to_true {
            Some(r) => format!("{r:.6e}"),
            None => "undefined".to_string(),
        };
        let rows: [(&str, String); 12] = [
            ("R_trig", format!("{:.6e}", self.r_trig)),
            ("R_ctop", format!("{:.6e}", self.r_ctop)),
            ("R_cbot", format!("{:.6e}", self.r_cbot)),
            ("R_top", format!("{:.6e}", self.r_top)),
            ("R_bot", format!("{:.6e}", self.r_bot)),
            ("R_triple_measured", format!("{:.6e}", self.r_triple_measured)),
            ("R_acc", format!("{:.6e}", self.r_acc)),
            ("R_triple_true", format!("{:.6e}", self.r_triple_true)),
            ("R_triple_sigma", format!("{:.6e}", self.r_triple_sigma)),
            ("R_triple_true_flag", self.true_rate_flag.to_string()),
            ("R_triple_semiclassical", format!("{:.6e}", self.r_triple_semiclassical)),
            ("ratio_semiclassical_to_true", ratio),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn summarize_rates(record: &CountRecord, tau: f64) -> RateSummary {
    let r_acc = accidental_rate(record.r_ctop(), record.r_bot(), record.r_cbot(), record.r_top(), tau);
    let r_triple_measured = record.r_triple();
    let r_triple_true = r_triple_measured - r_acc;
    let sigma = if record.duration > 0.0 { (record.triple as f64).sqrt() / record.duration } else { 0.0 };
    let flag = if record.duration <= 0.0 || record.trig == 0 {
        TrueRateFlag::NoData
    } else if r_triple_true > 3.0 * sigma {
        TrueRateFlag::Significant
    } else if r_triple_true < -3.0 * sigma {
        TrueRateFlag::Negative
    } else {
        TrueRateFlag::ConsistentWithZero
    };
    let semi = semiclassical_triple_rate(record.r_ctop(), record.r_cbot(), record.r_trig()).unwrap_or(0.0);
    RateSummary {
        r_trig: record.r_trig(),
        r_ctop: record.r_ctop(),
        r_cbot: record.r_cbot(),
        r_top: record.r_top(),
        r_bot: record.r_bot(),
        r_triple_measured,
        r_acc,
        r_triple_true,
        r_triple_sigma: sigma,
        true_rate_flag: flag,
        r_triple_semiclassical: semi,
        ratio_semiclassical_to_true: (r_triple_true > 0.0).then(|| semi / r_triple_true),
    }
}

/// A connected set of cells at or above half the map maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub cells: usize,
    /// Value-weighted centroid [cm].
    pub centroid: (f64, f64),
}

/// 8-connected regions of cells whose value is at least half the map maximum.
pub fn half_max_regions(map: &GridMap) -> Vec<Region> {
    let (nx, ny) = (map.nx(), map.ny());
    let top = map.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Vec::new();
    }
    let above: Vec<bool> = map.values().iter().map(|&v| v >= 0.5 * top).collect();
    let mut seen = vec![false; nx * ny];
    let mut regions = Vec::new();
    for start in 0..nx * ny {
        if !above[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let (mut cells, mut w, mut sx, mut sy) = (0, 0.0, 0.0, 0.0);
        while let Some(k) = stack.pop() {
            let (ix, iy) = (k % nx, k / nx);
            let v = map.get(ix, iy);
            cells += 1;
            w += v;
            sx += v * map.xs()[ix];
            sy += v * map.ys()[iy];
            for jy in iy.saturating_sub(1)..(iy + 2).min(ny) {
                for jx in ix.saturating_sub(1)..(ix + 2).min(nx) {
                    let j = jy * nx + jx;
                    if above[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        regions.push(Region { cells, centroid: (sx / w, sy / w) });
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::SceneParams;
    use proptest::prelude::*;

    fn axis(min: f64, n: usize, step: f64) -> Vec<f64> {
        (0..n).map(|k| min + k as f64 * step).collect()
    }

    fn synthetic(spots: [GaussianSpot; 2], offset: f64) -> GridMap {
        GridMap::from_fn(axis(3.2, 41, 0.025), axis(-1.0, 81, 0.025), |x, y| {
            offset + spots[0].value(x, y) + spots[1].value(x, y)
        })
    }

    fn truth() -> [GaussianSpot; 2] {
        [
            GaussianSpot { amplitude: 120.0, x: 3.66, y: 0.55, sigma_x: 0.09, sigma_y: 0.15 },
            GaussianSpot { amplitude: 95.0, x: 3.68, y: -0.53, sigma_x: 0.11, sigma_y: 0.13 },
        ]
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let map = synthetic(truth(), 3.0);
        let fit = fit_two_spots(&map).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        for (got, want) in fit.spots.iter().zip(truth().iter()) {
            assert!(rel(got.amplitude, want.amplitude) < 1e-6);
            assert!(rel(got.x, want.x) < 1e-6);
            assert!(rel(got.y, want.y) < 1e-6);
            assert!(rel(got.sigma_x, want.sigma_x) < 1e-6);
            assert!(rel(got.sigma_y, want.sigma_y) < 1e-6);
        }
        assert!(rel(fit.offset, 3.0) < 1e-6);
        assert!(rel(fit.delta_y0, 0.54) < 1e-6);
    }

    #[test]
    fn fit_is_reflection_invariant() {
        let map = synthetic(truth(), 1.0);
        let a = fit_two_spots(&map).unwrap();
        let b = fit_two_spots(&map.reflect_y()).unwrap();
        assert!((a.delta_y0 - b.delta_y0).abs() < 1e-9);
        assert!((a.spots[0].y + b.spots[1].y).abs() < 1e-9);
        assert!((a.spots[0].amplitude - b.spots[1].amplitude).abs() < 1e-6);
    }

    #[test]
    fn single_spot_gives_coincident_centres() {
        let one = GaussianSpot { amplitude: 200.0, x: 3.7, y: 0.0, sigma_x: 0.1, sigma_y: 0.15 };
        let zero = GaussianSpot { amplitude: 0.0, ..one };
        let map = synthetic([one, zero], 0.5);
        let fit = fit_two_spots(&map).unwrap();
        assert!(fit.delta_y0 < 0.025, "{}", fit.delta_y0);
    }

    #[test]
    fn flat_map_has_no_signal() {
        let map = GridMap::from_fn(axis(0.0, 10, 0.1), axis(0.0, 10, 0.1), |_, _| 4.0);
        assert_eq!(fit_two_spots(&map), Err(AnalysisError::NoSignal));
    }

    #[test]
    fn infer_l_scalar_checks() {
        assert_eq!(infer_l(0.0, 3.7, 0.0698, 1.4897e5, 2.9719e5, 0.5), Ok(0.0));
        let l = infer_l(0.55, 3.7, 0.0698, 1.4897e5, 2.9719e5, 0.5).unwrap();
        assert!((l - 4.0).abs() < 0.1, "{l}");
        assert!(matches!(
            infer_l(3.7, 3.7, 0.0698, 1.4897e5, 2.9719e5, 0.5),
            Err(AnalysisError::GeometryViolation { .. })
        ));
    }

    #[test]
    fn forward_offsets_invert_to_the_charge() {
        for l in 1..=7 {
            let scene = Scene::new(SceneParams::with_charge(l)).unwrap();
            let dy = predicted_delta_y0(&scene).unwrap();
            let back = infer_l_for_scene(&scene, dy).unwrap();
            assert!((back - l as f64).abs() < 0.02 * l as f64, "l={l} back={back}");
        }
    }

    #[test]
    fn constant_of_motion_cases() {
        assert_eq!(constant_of_motion((1200.0, -300.0), (-1200.0, 300.0)), 0.0);
        let (a, b) = ((1000.0, 200.0), (-700.0, 500.0));
        let c = 0.3f64;
        let rot = |q: (f64, f64)| (q.0 * c.cos() - q.1 * c.sin(), q.0 * c.sin() + q.1 * c.cos());
        let r = constant_of_motion(rot(a), rot(b));
        assert!((r - constant_of_motion(a, b)).abs() < 1e-9 * r);
    }

    #[test]
    fn rate_algebra_edge_cases() {
        assert_eq!(accidental_rate(0.0, 0.0, 0.0, 0.0, 76e-9), 0.0);
        assert_eq!(semiclassical_triple_rate(0.0, 2.7, 564.0), Ok(0.0));
        assert_eq!(semiclassical_triple_rate(4.1, 2.7, 0.0), Err(AnalysisError::DivisionByZeroRate));
        let s = summarize_rates(&CountRecord::default(), 76e-9);
        assert_eq!(s.r_triple_true, 0.0);
        assert_eq!(s.ratio_semiclassical_to_true, None);
        assert_eq!(s.true_rate_flag, TrueRateFlag::NoData);
        assert!(s.to_report().contains("ratio_semiclassical_to_true = undefined"));
    }

    #[test]
    fn regions_are_connected_components() {
        let map = synthetic(truth(), 0.0);
        let regions = half_max_regions(&map);
        assert_eq!(regions.len(), 2);
        let one = GaussianSpot { amplitude: 0.0, ..truth()[1] };
        assert_eq!(half_max_regions(&synthetic([truth()[0], one], 0.0)).len(), 1);
    }

    proptest! {
        #[test]
        fn accidental_rate_is_linear(a in 0.0..10.0f64, b in 0.0..3e4f64, c in 0.0..10.0f64, d in 0.0..3e4f64, tau in 1e-9..1e-6f64, k in 0.1..10.0f64) {
            let base = accidental_rate(a, b, c, d, tau);
            let scaled = accidental_rate(a, b, c, d, k * tau);
            prop_assert!((scaled - k * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
            let sum = accidental_rate(a, b, 0.0, 0.0, tau) + accidental_rate(0.0, 0.0, c, d, tau);
            prop_assert!((sum - base).abs() <= 1e-12 * base.abs().max(1e-300));
        }

        #[test]
        fn semiclassical_rate_is_homogeneous(a in 0.0..10.0f64, b in 0.0..10.0f64, t in 1.0..1e4f64, k in 0.1..10.0f64) {
            let base = semiclassical_triple_rate(a, b, t).unwrap();
            let scaled = semiclassical_triple_rate(k * a, k * b, k * t).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
        }
    }
}
