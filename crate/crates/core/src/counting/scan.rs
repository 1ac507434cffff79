//! Scanned-detector coincidence maps.
//!
//! One detector stays at a fixed ring point while the other is stepped over
//! a grid. At each position the scanning detector's clicks trigger a gate of
//! `GateConfig::trigger_gate`; a fixed-detector click inside the gate counts
//! as a coincidence.
//!
//! Pair emission is a Poisson process at `pair_rate` pairs/s into the whole
//! cone. Thinning by the landing probabilities and quantum efficiencies splits
//! it into independent Poisson streams: pairs detected by both detectors,
//! signal-only and idler-only detections. Uncorrelated background and dark
//! counts are added per detector.

use rayon::prelude::*;

use crate::biphoton::Scene;
use crate::map::GridMap;
use crate::Point;

use super::coincidence::gate_hits;
use super::events::{background_in_gates, merge_sorted, poisson_count, uniform_times};
use super::{
    check_nonnegative, stream_rng, CountRecord, CountingError, Detector, GateConfig, PairDensity,
    ScanGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSetup {
    pub fixed: Detector,
    /// Scanning detector; its centre is replaced by each grid position.
    pub scanning: Detector,
    /// Uncorrelated singles per detector, in addition to dark counts.
    pub background_rate: f64,
}

impl ScanSetup {
    /// Two 175 μm modules, the fixed one at (−3.7, 0) cm.
    pub fn standard() -> Self {
        Self {
            fixed: Detector::pcm(Point::new(-3.7, 0.0)),
            scanning: Detector::pcm(Point::default()),
            background_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major (y outer) per-position records.
    pub records: Vec<CountRecord>,
}

impl ScanResult {
    pub fn coincidence_map(&self) -> GridMap {
        let values = self.records.iter().map(|r| r.ctop as f64).collect();
        GridMap::new(self.xs.clone(), self.ys.clone(), values).expect("grid shape")
    }

    /// Scanning-detector singles (the trigger counts).
    pub fn singles_map(&self) -> GridMap {
        let values = self.records.iter().map(|r| r.trig as f64).collect();
        GridMap::new(self.xs.clone(), self.ys.clone(), values).expect("grid shape")
    }

    pub fn total_coincidences(&self) -> u64 {
        self.records.iter().map(|r| r.ctop).sum()
    }
}

/// Counts at one scanning position, using random stream `stream` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scan_point(
    density: &PairDensity,
    setup: &ScanSetup,
    position: Point,
    pair_rate: f64,
    gates: &GateConfig,
    dwell: f64,
    seed: u64,
    stream: u64,
) -> Result<CountRecord, CountingError> {
    let fixed = &setup.fixed;
    let scanning = setup.scanning.moved_to(position);
    let eta_s = fixed.quantum_efficiency;
    let eta_i = scanning.quantum_efficiency;

    let p_joint = density.joint_probability(fixed, &scanning)?;
    let p_signal = density.single_probability(fixed);
    let p_idler = density.single_probability(&scanning);

    let r_joint = pair_rate * eta_s * eta_i * p_joint;
    let r_signal_only =
        (pair_rate * eta_s * p_signal - r_joint).max(0.0) + setup.background_rate + fixed.dark_rate;
    let r_idler_only =
        (pair_rate * eta_i * p_idler - r_joint).max(0.0) + setup.background_rate + scanning.dark_rate;

    let mut rng = stream_rng(seed, stream);
    let n_joint = poisson_count(&mut rng, r_joint * dwell);
    let joint = uniform_times(&mut rng, n_joint, 0.0, dwell);
    let n_idler = poisson_count(&mut rng, r_idler_only * dwell);
    let idler_only = uniform_times(&mut rng, n_idler, 0.0, dwell);
    let triggers = merge_sorted(&joint, &idler_only);

    let (background, n_background) =
        background_in_gates(&mut rng, &triggers, gates.trigger_gate, r_signal_only, dwell);
    let fixed_clicks = merge_sorted(&joint, &background);
    let coincidences = gate_hits(&triggers, &fixed_clicks, gates.trigger_gate)?
        .into_iter()
        .filter(|h| *h)
        .count() as u64;

    Ok(CountRecord {
        duration: dwell,
        trig: triggers.len() as u64,
        top: n_joint + n_background,
        ctop: coincidences,
        ..CountRecord::default()
    })
}

/// Simulates a full raster. Positions are evaluated in parallel; each uses
/// its own random stream derived from `(seed, position index)`, so the
/// result does not depend on the number of worker threads.
pub fn simulate_scan(
    scene: &Scene,
    setup: &ScanSetup,
    grid: &ScanGrid,
    pair_rate: f64,
    gates: &GateConfig,
    seed: u64,
) -> Result<ScanResult, CountingError> {
    check_nonnegative("pair rate", pair_rate)?;
    let density = PairDensity::new(scene)?;
    scan_with_density(&density, setup, grid, pair_rate, gates, seed)
}

pub(crate) fn scan_with_density(
    density: &PairDensity,
    setup: &ScanSetup,
    grid: &ScanGrid,
    pair_rate: f64,
    gates: &GateConfig,
    seed: u64,
) -> Result<ScanResult, CountingError> {
    let points = grid.points();
    if points.is_empty() {
        return Err(CountingError::InvalidParameter { name: "grid size", value: 0.0 });
    }
    let records = points
        .par_iter()
        .enumerate()
        .map(|(k, &p)| simulate_scan_point(density, setup, p, pair_rate, gates, grid.dwell, seed, k as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanResult { xs: grid.xs(), ys: grid.ys(), records })
}
