//! Triple coincidences between a trigger detector on the fixed spot and two
//! detectors on the split spots.
//!
//! Pairs whose signal photon reaches the trigger aperture are emitted as a
//! Poisson process at `pair_rate`. Each trigger click opens the gate
//! `[t, t + pulse_width]`; an arm registers a coincidence when one of its
//! clicks falls inside, and a triple when both arms do.
//!
//! In the quantum model the partner photon of an emission goes to the top
//! spot, the bottom spot or neither, exclusively. In the semiclassical model
//! the top and bottom partnerings are independent, so both arms can fire
//! from the same emission.

use rand::Rng;

use crate::biphoton::Scene;
use crate::Point;

use super::coincidence::gate_hits;
use super::events::{background_in_gates, merge_sorted, poisson_count, poisson_times, uniform_times};
use super::{
    check_nonnegative, stream_rng, CountRecord, CountingError, Detector, GateConfig, PairDensity,
    PairSampler,
};

/// GRIN-lens collection aperture [cm].
pub const DEFAULT_GRIN_APERTURE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TripleModel {
    Quantum,
    Semiclassical,
}

impl std::str::FromStr for TripleModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantum" => Ok(TripleModel::Quantum),
            "semiclassical" => Ok(TripleModel::Semiclassical),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

impl std::fmt::Display for TripleModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TripleModel::Quantum => "quantum",
            TripleModel::Semiclassical => "semiclassical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleDetectors {
    pub trig: Detector,
    pub top: Detector,
    pub bot: Detector,
}

impl TripleDetectors {
    pub fn new(trig: Detector, top: Detector, bot: Detector) -> Result<Self, CountingError> {
        let named = [("trig", &trig), ("top", &top), ("bot", &bot)];
        for a in 0..3 {
            for b in a + 1..3 {
                if named[a].1.overlaps(named[b].1) {
                    return Err(CountingError::DetectorOverlap { first: named[a].0, second: named[b].0 });
                }
            }
        }
        Ok(Self { trig, top, bot })
    }

    /// Trigger on the fixed spot at (−R, 0) and the arms on the two split
    /// spots of `scene`, all with `aperture`-diameter unit-efficiency lenses.
    pub fn on_split_spots(scene: &Scene, aperture: f64) -> Result<Self, CountingError> {
        let delta = std::f64::consts::PI - scene.split_aperture().map_err(crate::biphoton::SceneError::from)?;
        let r = scene.ring_radius();
        let lens = |c: Point| Detector::new(c, aperture, 1.0, 0.0);
        Self::new(
            lens(Point::new(-r, 0.0))?,
            lens(Point::new(r * delta.cos(), r * delta.sin()))?,
            lens(Point::new(r * delta.cos(), -r * delta.sin()))?,
        )
    }
}

/// Source and background rates driving the triple simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleRates {
    /// Pairs per second whose signal photon reaches the trigger aperture.
    pub pair_rate: f64,
    /// Probability that the partner photon reaches the top aperture.
    pub partner_top: f64,
    pub partner_bot: f64,
    /// Uncorrelated singles per second, on top of each detector's dark rate.
    pub background_trig: f64,
    pub background_top: f64,
    pub background_bot: f64,
}

impl TripleRates {
    fn validate(&self, model: TripleModel) -> Result<(), CountingError> {
        check_nonnegative("pair rate", self.pair_rate)?;
        check_nonnegative("trigger background", self.background_trig)?;
        check_nonnegative("top background", self.background_top)?;
        check_nonnegative("bottom background", self.background_bot)?;
        for (name, p) in [("top partner probability", self.partner_top), ("bottom partner probability", self.partner_bot)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CountingError::InvalidParameter { name, value: p });
            }
        }
        let both = self.partner_top + self.partner_bot;
        if model == TripleModel::Quantum && both > 1.0 {
            return Err(CountingError::InvalidParameter { name: "total partner probability", value: both });
        }
        Ok(())
    }
}

/// Observed singles and coincidence rates [1/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRates {
    pub r_trig: f64,
    pub r_ctop: f64,
    pub r_cbot: f64,
    pub r_top: f64,
    pub r_bot: f64,
    pub r_triple: f64,
}

impl MeasuredRates {
    /// Rates recorded with GRIN lenses on the split spots.
    pub const fn grin_experiment() -> Self {
        Self { r_trig: 564.0, r_ctop: 4.1, r_cbot: 2.7, r_top: 21479.0, r_bot: 22486.0, r_triple: 0.0076 }
    }
}

impl Default for MeasuredRates {
    fn default() -> Self {
        Self::grin_experiment()
    }
}

/// Chooses source rates so that a simulation reproduces `targets` on average.
///
/// The trigger carries no uncorrelated background. For each arm the click
/// probability `c` of a partner photon solves
/// `1 − x = (1 − c)·exp(−b·Δt)`, where `x = R_c/R_trig` is the observed
/// coincidence fraction and `b = R_single − R_pair·c` the arm's uncorrelated
/// rate; the pair is iterated to its fixed point.
pub fn calibrate_triple(
    targets: &MeasuredRates,
    detectors: &TripleDetectors,
    gates: &GateConfig,
) -> Result<TripleRates, CountingError> {
    let trig = &detectors.trig;
    let r_trig = check_nonnegative("trigger rate", targets.r_trig)?;
    let pair_rate = (r_trig - trig.dark_rate).max(0.0) / trig.quantum_efficiency;
    let dt = gates.pulse_width;

    let arm = |r_c: f64, r_single: f64, det: &Detector| -> Result<(f64, f64), CountingError> {
        check_nonnegative("coincidence rate", r_c)?;
        check_nonnegative("singles rate", r_single)?;
        if r_trig == 0.0 {
            return Ok((0.0, (r_single - det.dark_rate).max(0.0)));
        }
        let x = r_c / r_trig;
        if x >= 1.0 {
            return Err(CountingError::InvalidParameter { name: "coincidence fraction", value: x });
        }
        let mut c = x;
        for _ in 0..200 {
            let b = (r_single - pair_rate * c).max(0.0);
            let next = (1.0 - (1.0 - x) * (b * dt).exp()).max(0.0);
            if (next - c).abs() <= 1e-15 {
                c = next;
                break;
            }
            c = next;
        }
        let background = (r_single - pair_rate * c - det.dark_rate).max(0.0);
        Ok(((c / det.quantum_efficiency).min(1.0), background))
    };
    let (partner_top, background_top) = arm(targets.r_ctop, targets.r_top, &detectors.top)?;
    let (partner_bot, background_bot) = arm(targets.r_cbot, targets.r_bot, &detectors.bot)?;
    Ok(TripleRates { pair_rate, partner_top, partner_bot, background_trig: 0.0, background_top, background_bot })
}

/// Fractions of trigger-conditioned partner photons that land in the top and
/// bottom apertures, estimated from `samples` sampled pairs.
pub fn geometric_partner_fractions(
    scene: &Scene,
    detectors: &TripleDetectors,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), CountingError> {
    if samples == 0 {
        return Ok((0.0, 0.0));
    }
    let density = PairDensity::new(scene)?;
    let sampler = PairSampler::new(&density, Some(&detectors.trig))?;
    let mut rng = stream_rng(seed, 0);
    let (mut top, mut bot) = (0usize, 0usize);
    for _ in 0..samples {
        let (_, idler) = sampler.sample_pair(&mut rng)?;
        top += detectors.top.contains(idler) as usize;
        bot += detectors.bot.contains(idler) as usize;
    }
    Ok((top as f64 / samples as f64, bot as f64 / samples as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleOutcome {
    pub record: CountRecord,
    /// Emissions whose partner produced a click in both arms.
    pub double_partner_emissions: u64,
}

pub fn simulate_triple(
    model: TripleModel,
    rates: &TripleRates,
    detectors: &TripleDetectors,
    gates: &GateConfig,
    duration: f64,
    seed: u64,
) -> Result<CountRecord, CountingError> {
    simulate_triple_detailed(model, rates, detectors, gates, duration, seed).map(|o| o.record)
}

pub fn simulate_triple_detailed(
    model: TripleModel,
    rates: &TripleRates,
    detectors: &TripleDetectors,
    gates: &GateConfig,
    duration: f64,
    seed: u64,
) -> Result<TripleOutcome, CountingError> {
    rates.validate(model)?;
    check_nonnegative("duration", duration)?;
    let TripleDetectors { trig, top, bot } = detectors;
    let mut rng = stream_rng(seed, 0);

    let n = poisson_count(&mut rng, rates.pair_rate * duration);
    let emissions = uniform_times(&mut rng, n, 0.0, duration);
    let mut trig_pairs = Vec::new();
    let mut top_pairs = Vec::new();
    let mut bot_pairs = Vec::new();
    let mut doubles = 0u64;
    for &t in &emissions {
        // fixed number of draws per emission
        let u: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
        if u[0] < trig.quantum_efficiency {
            trig_pairs.push(t);
        }
        let (to_top, to_bot) = match model {
            TripleModel::Quantum => {
                let v = u[1] - rates.partner_top;
                (v < 0.0, v >= 0.0 && v < rates.partner_bot)
            }
            TripleModel::Semiclassical => (u[1] < rates.partner_top, u[2] < rates.partner_bot),
        };
        let top_click = to_top && u[3] < top.quantum_efficiency;
        let bot_click = to_bot && u[4] < bot.quantum_efficiency;
        if top_click {
            top_pairs.push(t);
        }
        if bot_click {
            bot_pairs.push(t);
        }
        doubles += (top_click && bot_click) as u64;
    }

    let trig_noise = poisson_times(&mut rng, rates.background_trig + trig.dark_rate, duration);
    let triggers = merge_sorted(&trig_pairs, &trig_noise);

    let dt = gates.pulse_width;
    let (top_noise, n_top_noise) =
        background_in_gates(&mut rng, &triggers, dt, rates.background_top + top.dark_rate, duration);
    let (bot_noise, n_bot_noise) =
        background_in_gates(&mut rng, &triggers, dt, rates.background_bot + bot.dark_rate, duration);
    let top_clicks = merge_sorted(&top_pairs, &top_noise);
    let bot_clicks = merge_sorted(&bot_pairs, &bot_noise);

    let hit_top = gate_hits(&triggers, &top_clicks, dt)?;
    let hit_bot = gate_hits(&triggers, &bot_clicks, dt)?;
    let count = |v: &[bool]| v.iter().filter(|h| **h).count() as u64;
    let triple = hit_top.iter().zip(&hit_bot).filter(|(a, b)| **a && **b).count() as u64;

    Ok(TripleOutcome {
        record: CountRecord {
            duration,
            trig: triggers.len() as u64,
            top: top_pairs.len() as u64 + n_top_noise,
            bot: bot_pairs.len() as u64 + n_bot_noise,
            ctop: count(&hit_top),
            cbot: count(&hit_bot),
            triple,
        },
        double_partner_emissions: doubles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::SceneParams;

    fn detectors() -> TripleDetectors {
        let scene = Scene::new(SceneParams::with_charge(4)).unwrap();
        TripleDetectors::on_split_spots(&scene, DEFAULT_GRIN_APERTURE).unwrap()
    }

    #[test]
    fn overlapping_apertures_rejected() {
        let a = Detector::pcm(Point::new(0.0, 0.0));
        let b = Detector::pcm(Point::new(0.01, 0.0));
        let c = Detector::pcm(Point::new(1.0, 0.0));
        assert_eq!(
            TripleDetectors::new(a, c, b),
            Err(CountingError::DetectorOverlap { first: "trig", second: "bot" })
        );
    }

    #[test]
    fn zero_duration_gives_empty_record() {
        let rates = calibrate_triple(&MeasuredRates::default(), &detectors(), &GateConfig::default()).unwrap();
        let rec = simulate_triple(TripleModel::Quantum, &rates, &detectors(), &GateConfig::default(), 0.0, 1).unwrap();
        assert_eq!(rec, CountRecord::default());
    }

    #[test]
    fn calibration_reproduces_expected_fractions() {
        let gates = GateConfig::default();
        let m = MeasuredRates::default();
        let r = calibrate_triple(&m, &detectors(), &gates).unwrap();
        assert_eq!(r.pair_rate, 564.0);
        for (c, b, single, target) in [
            (r.partner_top, r.background_top, m.r_top, m.r_ctop),
            (r.partner_bot, r.background_bot, m.r_bot, m.r_cbot),
        ] {
            let x = 1.0 - (1.0 - c) * (-b * gates.pulse_width).exp();
            assert!((x * m.r_trig - target).abs() < 1e-9);
            assert!((b + r.pair_rate * c - single).abs() < 1e-6);
        }
    }

    #[test]
    fn quantum_partners_are_exclusive() {
        let rates = TripleRates {
            pair_rate: 5e4,
            partner_top: 0.5,
            partner_bot: 0.5,
            background_trig: 0.0,
            background_top: 0.0,
            background_bot: 0.0,
        };
        let out =
            simulate_triple_detailed(TripleModel::Quantum, &rates, &detectors(), &GateConfig::new(5e-9, 1e-9, None).unwrap(), 1.0, 3)
                .unwrap();
        assert_eq!(out.double_partner_emissions, 0);
        assert!(out.record.ctop + out.record.cbot > 0);
        let semi = simulate_triple_detailed(
            TripleModel::Semiclassical,
            &rates,
            &detectors(),
            &GateConfig::new(5e-9, 1e-9, None).unwrap(),
            1.0,
            3,
        )
        .unwrap();
        assert!(semi.double_partner_emissions > 0);
    }

    #[test]
    fn records_satisfy_invariants() {
        let gates = GateConfig::default();
        let rates = calibrate_triple(&MeasuredRates::default(), &detectors(), &gates).unwrap();
        for model in [TripleModel::Quantum, TripleModel::Semiclassical] {
            let rec = simulate_triple(model, &rates, &detectors(), &gates, 20.0, 9).unwrap();
            rec.check().unwrap();
            let again = simulate_triple(model, &rates, &detectors(), &gates, 20.0, 9).unwrap();
            assert_eq!(rec, again);
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in [TripleModel::Quantum, TripleModel::Semiclassical] {
            assert_eq!(m.to_string().parse::<TripleModel>(), Ok(m));
        }
        assert!("classical".parse::<TripleModel>().is_err());
    }
}
