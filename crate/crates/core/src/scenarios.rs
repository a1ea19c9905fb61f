//! Synthetic coupling scenarios: an amplitude-modulated carrier, periodic
//! spike complexes, and periodic high-frequency bursts, each over unit
//! variance white noise.
//!
//! `strength` scales a template whose peak is 1, so A = 1 puts the event
//! peak at one noise standard deviation. For AM it is the modulation depth.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mi::mi_pipeline;
use crate::nullmodel::NullModelParams;
use crate::sigproc::{gaussian_samples, BandSpec, TimeSeries};

/// Time between consecutive spike or HFO events, in seconds.
pub const EVENT_PERIOD: f64 = 2.0 / 3.0;
/// Gumbel component durations of a spike complex, in seconds.
pub const SPIKE_DURATIONS: [f64; 3] = [0.06, 0.12, 0.2];
pub const HFO_DURATION: f64 = 0.2;
pub const HFO_FREQ: f64 = 120.0;
pub const AM_MOD_FREQ: f64 = 1.0;
pub const AM_CARRIER_FREQ: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Am,
    Spikes,
    Hfo,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Am => "am",
            ScenarioKind::Spikes => "spikes",
            ScenarioKind::Hfo => "hfo",
        }
    }

    /// (phase band, amplitude band) used for this scenario.
    pub fn default_bands(self) -> (BandSpec, BandSpec) {
        match self {
            ScenarioKind::Am => (BandSpec::new(0.1, 5.0), BandSpec::new(10.0, 75.0)),
            ScenarioKind::Spikes => (BandSpec::new(0.1, 8.0), BandSpec::new(12.0, 40.0)),
            ScenarioKind::Hfo => (BandSpec::new(0.1, 12.0), BandSpec::new(90.0, 147.0)),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "am" => Ok(ScenarioKind::Am),
            "spikes" | "spike" => Ok(ScenarioKind::Spikes),
            "hfo" => Ok(ScenarioKind::Hfo),
            _ => Err(Error::invalid(format!("unknown scenario kind '{s}' (expected am, spikes or hfo)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub strength: f64,
    pub fs: f64,
    pub duration: f64,
    pub seed: u64,
    pub low_band: BandSpec,
    pub high_band: BandSpec,
    pub bins: usize,
    /// Shift each event by a uniform offset in ±1/6 s.
    pub jitter: bool,
}

impl ScenarioConfig {
    /// 300 Hz, 2 s, 18 bins, the kind's own bands, no jitter.
    pub fn new(kind: ScenarioKind, strength: f64, seed: u64) -> Self {
        let (low_band, high_band) = kind.default_bands();
        ScenarioConfig {
            kind,
            strength,
            fs: 300.0,
            duration: 2.0,
            seed,
            low_band,
            high_band,
            bins: 18,
            jitter: false,
        }
    }

    pub fn len(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::invalid(format!("strength must be finite and >= 0, got {}", self.strength)));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::invalid(format!("fs must be positive, got {}", self.fs)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be positive, got {}", self.duration)));
        }
        if self.len() < 2 {
            return Err(Error::invalid("fs·duration must give at least 2 samples"));
        }
        if self.bins < 2 {
            return Err(Error::invalid(format!("bin count must be >= 2, got {}", self.bins)));
        }
        self.low_band.validate(self.fs)?;
        self.high_band.validate(self.fs)?;
        Ok(())
    }

    fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 / self.fs).collect()
    }
}

/// Gumbel scale whose central 95% spans `duration`.
pub fn gumbel_scale(duration: f64) -> f64 {
    -duration / ((-(0.975f64).ln()).ln() - (-(0.025f64).ln()).ln())
}

/// Gaussian envelope σ for a burst of the given duration.
pub fn hfo_sigma(duration: f64) -> f64 {
    duration / 2.4
}

fn gumbel_pdf(t: f64, loc: f64, scale: f64) -> f64 {
    let z = (t - loc) / scale;
    (-(z + (-z).exp())).exp() / scale
}

/// Event centres at 1/3 s + k·2/3 s inside the record, optionally jittered.
/// The jitter draws from its own ChaCha stream so the noise is unchanged.
pub fn event_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let mut times = Vec::new();
    let mut t = EVENT_PERIOD / 2.0;
    while t < cfg.duration {
        times.push(t);
        t += EVENT_PERIOD;
    }
    if cfg.jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        for t in &mut times {
            *t += rng.random_range(-1.0 / 6.0..=1.0 / 6.0);
        }
    }
    times
}

fn peak_normalize(mut y: Vec<f64>) -> Vec<f64> {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        y.iter_mut().for_each(|v| *v /= peak);
    }
    y
}

/// Noiseless part of the signal, already scaled by the strength.
pub fn template(cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let t = cfg.times();
    let a = cfg.strength;
    let y = match cfg.kind {
        ScenarioKind::Am => t
            .iter()
            .map(|&t| (1.0 + a * (TAU * AM_MOD_FREQ * t).sin()) * (TAU * AM_CARRIER_FREQ * t).sin())
            .collect(),
        ScenarioKind::Spikes => {
            let centres = event_times(cfg);
            let scales = SPIKE_DURATIONS.map(gumbel_scale);
            let raw = t
                .iter()
                .map(|&t| {
                    centres
                        .iter()
                        .flat_map(|&c| scales.iter().map(move |&s| gumbel_pdf(t, c, s)))
                        .sum()
                })
                .collect();
            peak_normalize(raw).into_iter().map(|v| a * v).collect()
        }
        ScenarioKind::Hfo => {
            let centres = event_times(cfg);
            let sigma = hfo_sigma(HFO_DURATION);
            let raw = t
                .iter()
                .map(|&t| {
                    centres
                        .iter()
                        .map(|&c| {
                            let u = t - c;
                            (-u * u / (2.0 * sigma * sigma)).exp() * (TAU * HFO_FREQ * u).cos()
                        })
                        .sum()
                })
                .collect();
            peak_normalize(raw).into_iter().map(|v| a * v).collect()
        }
    };
    Ok(y)
}

/// Template plus unit-variance white noise drawn from `cfg.seed`.
pub fn simulate(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    let y = template(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = gaussian_samples(y.len(), 1.0, &mut rng)?;
    TimeSeries::new(y.iter().zip(&w).map(|(a, b)| a + b).collect(), cfg.fs)
}

fn simulate_kind(cfg: &ScenarioConfig, kind: ScenarioKind) -> Result<TimeSeries> {
    if cfg.kind != kind {
        return Err(Error::invalid(format!("config is for '{}', not '{}'", cfg.kind, kind)));
    }
    simulate(cfg)
}

pub fn simulate_am(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    simulate_kind(cfg, ScenarioKind::Am)
}

pub fn simulate_spikes(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    simulate_kind(cfg, ScenarioKind::Spikes)
}

pub fn simulate_hfo(cfg: &ScenarioConfig) -> Result<TimeSeries> {
    simulate_kind(cfg, ScenarioKind::Hfo)
}

/// One row of a sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: ScenarioKind,
    pub strength: f64,
    pub bins: usize,
    pub seed: u64,
    pub mi: f64,
    pub p_value: f64,
    pub critical_99: f64,
}

/// Sweep with the kind's default configuration.
pub fn sweep(kind: ScenarioKind, strengths: &[f64], bins_list: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    sweep_with(&ScenarioConfig::new(kind, 0.0, 0), strengths, bins_list, seeds)
}

/// Rows come out ordered by strength, then bins, then seed, whatever the
/// thread schedule.
pub fn sweep_with(base: &ScenarioConfig, strengths: &[f64], bins_list: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if strengths.is_empty() || bins_list.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("strengths, bins and seeds must all be nonempty"));
    }
    base.validate()?;
    let n = base.len();
    let nulls = bins_list
        .iter()
        .map(|&b| {
            let p = NullModelParams::new(n, b)?;
            let c = p.critical_value(0.01)?;
            Ok((p, c))
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(f64, usize, u64)> = strengths
        .iter()
        .flat_map(|&a| (0..bins_list.len()).flat_map(move |bi| seeds.iter().map(move |&s| (a, bi, s))))
        .collect();

    cells
        .par_iter()
        .map(|&(strength, bi, seed)| {
            let cfg = ScenarioConfig {
                strength,
                seed,
                bins: bins_list[bi],
                ..base.clone()
            };
            let x = simulate(&cfg)?;
            let mi = mi_pipeline(&x, cfg.low_band, cfg.high_band, cfg.bins)?.mi;
            let (params, critical_99) = &nulls[bi];
            Ok(SweepRow {
                kind: cfg.kind,
                strength,
                bins: cfg.bins,
                seed,
                mi,
                p_value: params.p_value(mi)?,
                critical_99: *critical_99,
            })
        })
        .collect()
}

/// Mean MI per (strength, bins), in first-seen order.
pub fn mean_mi(rows: &[SweepRow]) -> Vec<(f64, usize, f64)> {
    let mut out: Vec<(f64, usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|e| e.0 == r.strength && e.1 == r.bins) {
            Some(e) => {
                e.2 += r.mi;
                e.3 += 1;
            }
            None => out.push((r.strength, r.bins, r.mi, 1)),
        }
    }
    out.into_iter().map(|(a, b, s, k)| (a, b, s / k as f64)).collect()
}
