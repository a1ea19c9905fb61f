//! Phase-amplitude histogram, its entropy, and the modulation index.
//!
//! Entropies are in nats. The modulation index divides by ln B, so the log
//! base never shows up in the result.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::{BandSpec, SpectralPlan, TimeSeries};

/// Mean amplitude per phase bin, normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAmpHistogram {
    pub probs: Vec<f64>,
    pub bin_count: usize,
    /// Bins that received no samples (their mean is taken as 0).
    pub empty_bins: usize,
}

impl PhaseAmpHistogram {
    /// Wraps an already-normalized distribution.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid("a histogram needs at least 2 bins"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("bin probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("bin probabilities sum to {total}, not 1")));
        }
        let empty_bins = probs.iter().filter(|&&p| p == 0.0).count();
        Ok(PhaseAmpHistogram {
            bin_count: probs.len(),
            probs,
            empty_bins,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiValue {
    pub mi: f64,
    pub entropy_nats: f64,
    pub bin_count: usize,
}

/// Bin index of a phase in [0, 2π]; 2π wraps to bin 0.
#[inline]
fn bin_of(phase: f64, bins: usize) -> usize {
    let x = phase / TAU * bins as f64;
    // A phase built as k·2π/B can land an ulp short of the edge; snap it.
    let r = x.round();
    let x = if (x - r).abs() <= 8.0 * f64::EPSILON * r.max(1.0) { r } else { x };
    let b = x as usize;
    if b >= bins {
        0
    } else {
        b
    }
}

/// Builds the B-bin phase-amplitude histogram: bin b collects the samples
/// whose phase falls in [b·2π/B, (b+1)·2π/B) and reports their mean
/// amplitude, normalized over bins.
pub fn phase_amp_histogram(phase: &[f64], amp: &[f64], bins: usize) -> Result<PhaseAmpHistogram> {
    if phase.len() != amp.len() {
        return Err(Error::invalid(format!(
            "phase has {} samples but amplitude has {}",
            phase.len(),
            amp.len()
        )));
    }
    if phase.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    if bins < 2 {
        return Err(Error::invalid(format!("bin count must be >= 2, got {bins}")));
    }

    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (&p, &a) in phase.iter().zip(amp) {
        if !(0.0..=TAU).contains(&p) {
            return Err(Error::invalid(format!("phase {p} outside [0, 2π]")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("amplitude {a} is not a finite nonnegative value")));
        }
        let b = bin_of(p, bins);
        sums[b] += a;
        counts[b] += 1;
    }

    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let total: f64 = means.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput("all amplitudes are zero".into()));
    }
    Ok(PhaseAmpHistogram {
        probs: means.iter().map(|m| m / total).collect(),
        bin_count: bins,
        empty_bins: counts.iter().filter(|&&c| c == 0).count(),
    })
}

/// Shannon entropy in nats, with 0·ln 0 = 0.
pub fn entropy(hist: &PhaseAmpHistogram) -> f64 {
    let h: f64 = hist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.clamp(0.0, (hist.bin_count as f64).ln())
}

/// ρ = 1 − H/ln B.
pub fn modulation_index(hist: &PhaseAmpHistogram) -> MiValue {
    let entropy_nats = entropy(hist);
    let mi = 1.0 - entropy_nats / (hist.bin_count as f64).ln();
    MiValue {
        mi: mi.clamp(0.0, 1.0),
        entropy_nats,
        bin_count: hist.bin_count,
    }
}

/// MI straight from paired phase and amplitude samples.
pub fn mi_from_phase_amp(phase: &[f64], amp: &[f64], bins: usize) -> Result<MiValue> {
    Ok(modulation_index(&phase_amp_histogram(phase, amp, bins)?))
}

/// Phase of the `low` band of one series against the amplitude envelope of
/// the `high` band of the same series.
pub fn mi_pipeline(x: &TimeSeries, low: BandSpec, high: BandSpec, bins: usize) -> Result<MiValue> {
    mi_pipeline_two(x, x, low, high, bins)
}

/// Two-channel variant: phase from `phase_src`, amplitude from `amp_src`.
pub fn mi_pipeline_two(
    phase_src: &TimeSeries,
    amp_src: &TimeSeries,
    low: BandSpec,
    high: BandSpec,
    bins: usize,
) -> Result<MiValue> {
    if phase_src.len() != amp_src.len() {
        return Err(Error::invalid("phase and amplitude channels differ in length"));
    }
    if phase_src.fs() != amp_src.fs() {
        return Err(Error::invalid("phase and amplitude channels differ in sampling rate"));
    }
    if bins < 2 {
        return Err(Error::invalid(format!("bin count must be >= 2, got {bins}")));
    }
    low.validate(phase_src.fs())?;
    high.validate(phase_src.fs())?;

    let plan = SpectralPlan::new(phase_src.len())?;
    let low_part = plan.bandpass(phase_src.samples(), phase_src.fs(), low)?;
    let high_part = plan.bandpass(amp_src.samples(), amp_src.fs(), high)?;
    let (_, phase) = plan.amplitude_phase(&low_part)?;
    let (amp, _) = plan.amplitude_phase(&high_part)?;
    // A band with nothing in it still leaves FFT round-off behind.
    let scale = amp_src.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let peak = amp.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak <= 1e-12 * scale {
        return Err(Error::DegenerateInput("high band carries no amplitude".into()));
    }
    mi_from_phase_amp(&phase, &amp, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_phases(n: usize) -> Vec<f64> {
        (0..n).map(|i| TAU * i as f64 / n as f64).collect()
    }

    #[test]
    fn uniform_grid_gives_uniform_histogram() {
        let phases = grid_phases(100);
        let h = phase_amp_histogram(&phases, &[1.0; 100], 10).unwrap();
        for p in &h.probs {
            assert!((p - 0.1).abs() < 1e-15);
        }
        assert_eq!(h.empty_bins, 0);
        let m = modulation_index(&h);
        assert!(m.mi.abs() < 1e-15);
        assert!((entropy(&h) - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn concentrated_phases_give_point_mass() {
        let phases = [0.1, 0.5, 1.0, 1.5];
        let h = phase_amp_histogram(&phases, &[2.0, 1.0, 4.0, 3.0], 4).unwrap();
        assert_eq!(h.probs, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.empty_bins, 3);
        assert_eq!(entropy(&h), 0.0);
        assert_eq!(modulation_index(&h).mi, 1.0);
    }

    #[test]
    fn two_bin_hand_example() {
        let h = phase_amp_histogram(&[0.1, 0.2, 3.3, 3.4], &[1.0, 3.0, 2.0, 2.0], 2).unwrap();
        assert!((h.probs[0] - 0.5).abs() < 1e-15);
        assert!((h.probs[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_bin_entropy_and_mi() {
        let h = PhaseAmpHistogram::from_probs(vec![0.5, 0.3, 0.2]).unwrap();
        // -(0.5 ln 0.5 + 0.3 ln 0.3 + 0.2 ln 0.2)
        let expected = 0.5 * 2f64.ln() + 0.3 * (1.0 / 0.3f64).ln() + 0.2 * 5f64.ln();
        assert!((entropy(&h) - expected).abs() < 1e-15);
        assert!((entropy(&h) - 1.02965).abs() < 1e-4);
        let m = modulation_index(&h);
        assert!((m.mi - (1.0 - 1.02965 / 3f64.ln())).abs() < 1e-3);
        assert!((m.mi - 0.0628).abs() < 1e-3);
    }

    #[test]
    fn phase_two_pi_wraps_to_first_bin() {
        let h = phase_amp_histogram(&[TAU, 4.0], &[1.0, 1.0], 2).unwrap();
        assert_eq!(h.probs, vec![0.5, 0.5]);
        assert_eq!(bin_of(TAU, 18), 0);
        assert_eq!(bin_of(TAU - 1e-9, 18), 17);
        assert_eq!(bin_of(TAU / 18.0, 18), 1);
        assert_eq!(bin_of(5.0 * TAU / 18.0, 18), 5);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            phase_amp_histogram(&[0.1, 0.2], &[1.0], 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            phase_amp_histogram(&[0.1, 0.2], &[0.0, 0.0], 4),
            Err(Error::DegenerateInput(_))
        ));
        assert!(phase_amp_histogram(&[0.1], &[1.0], 1).is_err());
        assert!(phase_amp_histogram(&[-0.1], &[1.0], 4).is_err());
        assert!(phase_amp_histogram(&[7.0], &[1.0], 4).is_err());
        assert!(phase_amp_histogram(&[0.1], &[-1.0], 4).is_err());
        assert!(PhaseAmpHistogram::from_probs(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn bin_refinement_keeps_mi_zero() {
        let n = 360;
        let phases = grid_phases(n);
        let amps = vec![0.7; n];
        for b in (2..=n).filter(|b| n % b == 0) {
            let m = mi_from_phase_amp(&phases, &amps, b).unwrap();
            assert!(m.mi < 1e-12, "B = {b}: {}", m.mi);
        }
    }

    #[test]
    fn constant_input_is_degenerate() {
        let x = TimeSeries::new(vec![3.0; 600], 300.0).unwrap();
        let r = mi_pipeline(&x, BandSpec::new(0.1, 5.0), BandSpec::new(10.0, 75.0), 18);
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn pipeline_rejects_bad_bands() {
        let x = TimeSeries::new((0..600).map(|i| (i as f64).sin()).collect(), 300.0).unwrap();
        assert!(mi_pipeline(&x, BandSpec::new(5.0, 0.1), BandSpec::new(10.0, 75.0), 18).is_err());
        assert!(mi_pipeline(&x, BandSpec::new(0.1, 5.0), BandSpec::new(10.0, 175.0), 18).is_err());
    }

    #[test]
    fn two_channel_requires_matching_shapes() {
        let a = TimeSeries::new(vec![1.0; 100], 300.0).unwrap();
        let b = TimeSeries::new(vec![1.0; 101], 300.0).unwrap();
        assert!(mi_pipeline_two(&a, &b, BandSpec::new(1.0, 5.0), BandSpec::new(10.0, 75.0), 18).is_err());
    }

    #[test]
    fn locked_amplitude_gives_large_mi() {
        // amplitude peaks at phase π/2
        let fs = 300.0;
        let n = 600;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let slow = (TAU * 2.0 * t).cos();
                slow + (1.0 + (TAU * 2.0 * t).sin()) * (TAU * 40.0 * t).sin()
            })
            .collect();
        let x = TimeSeries::new(samples, fs).unwrap();
        let m = mi_pipeline(&x, BandSpec::new(1.0, 5.0), BandSpec::new(30.0, 50.0), 18).unwrap();
        assert!(m.mi > 0.05, "mi = {}", m.mi);
    }

    fn phase_amp_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (8usize..200).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0..TAU, n),
                prop::collection::vec(0.01f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn histogram_is_a_distribution((phase, amp) in phase_amp_strategy(), bins in 2usize..40) {
            let h = phase_amp_histogram(&phase, &amp, bins).unwrap();
            let total: f64 = h.probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(h.probs.iter().all(|p| (0.0..=1.0).contains(p)));
            let m = modulation_index(&h);
            prop_assert!((0.0..=1.0).contains(&m.mi));
            prop_assert!(m.entropy_nats >= 0.0 && m.entropy_nats <= (bins as f64).ln());
            prop_assert!((m.mi - (1.0 - m.entropy_nats / (bins as f64).ln())).abs() < 1e-12);
        }

        #[test]
        fn amplitude_scale_invariance((phase, amp) in phase_amp_strategy(), bins in 2usize..40, c in 0.01f64..100.0) {
            let a = phase_amp_histogram(&phase, &amp, bins).unwrap();
            let scaled: Vec<f64> = amp.iter().map(|v| v * c).collect();
            let b = phase_amp_histogram(&phase, &scaled, bins).unwrap();
            for (p, q) in a.probs.iter().zip(&b.probs) {
                prop_assert!((p - q).abs() < 1e-12);
            }
            prop_assert!((modulation_index(&a).mi - modulation_index(&b).mi).abs() < 1e-12);
        }

        #[test]
        fn rotation_by_whole_bins_permutes((phase, amp) in phase_amp_strategy(), bins in 2usize..40, k in 0usize..40) {
            let k = k % bins;
            // keep phases away from bin edges so the shifted value cannot round across one
            let width = TAU / bins as f64;
            let centred: Vec<f64> = phase.iter().map(|p| (bin_of(*p, bins) as f64 + 0.5) * width).collect();
            let rotated: Vec<f64> = centred.iter().map(|p| (p + k as f64 * width) % TAU).collect();
            let a = phase_amp_histogram(&centred, &amp, bins).unwrap();
            let b = phase_amp_histogram(&rotated, &amp, bins).unwrap();
            for i in 0..bins {
                prop_assert!((a.probs[i] - b.probs[(i + k) % bins]).abs() < 1e-12);
            }
            prop_assert!((entropy(&a) - entropy(&b)).abs() < 1e-12);
            prop_assert!((modulation_index(&a).mi - modulation_index(&b).mi).abs() < 1e-12);
        }
    }
}
