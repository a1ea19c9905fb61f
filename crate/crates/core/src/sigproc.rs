//! Signals, ideal band-pass filtering and the analytic signal.
//!
//! The analytic signal is built in the frequency domain: positive-frequency
//! coefficients are doubled, negative ones zeroed, and DC (plus Nyquist for
//! even lengths) kept as is. Its imaginary part is the discrete Hilbert
//! transform.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{digamma, trigamma};

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Vec<f64>,
    fs: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time series must contain at least one sample"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs}")));
        }
        Ok(TimeSeries { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Instantaneous amplitude and phase (in [0, 2π)) of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSeries {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub fs: f64,
}

/// Closed frequency interval [f_lo, f_hi] in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl BandSpec {
    pub const fn new(f_lo: f64, f_hi: f64) -> Self {
        BandSpec { f_lo, f_hi }
    }

    /// Checks 0 ≤ f_lo < f_hi ≤ fs/2.
    pub fn validate(&self, fs: f64) -> Result<()> {
        let ok = self.f_lo.is_finite()
            && self.f_hi.is_finite()
            && self.f_lo >= 0.0
            && self.f_lo < self.f_hi
            && self.f_hi <= fs / 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "band [{}, {}] Hz is not valid for fs = {fs} Hz",
                self.f_lo, self.f_hi
            )))
        }
    }
}

/// `n` i.i.d. N(0, sigma²) samples from a ChaCha8 stream seeded with `seed`.
pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Result<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = gaussian_samples(n, sigma, &mut rng)?;
    TimeSeries::new(samples, 1.0)
}

/// Draws `n` Gaussian samples from an existing generator.
pub fn gaussian_samples<R: rand::Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("white noise needs n >= 1"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((0..n).map(|_| normal.sample(rng)).collect())
}

/// Forward/inverse FFT pair for one signal length.
///
/// Planning dominates for short signals, so Monte Carlo loops keep one of
/// these around instead of going through the free functions.
#[derive(Clone)]
pub struct SpectralPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid(format!("need at least 2 samples, got {len}")));
        }
        let mut planner = FftPlanner::new();
        Ok(SpectralPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::invalid(format!(
                "plan built for {} samples, got {}",
                self.len,
                x.len()
            )));
        }
        Ok(())
    }

    fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Complex analytic signal x + j·x̂.
    pub fn analytic_signal(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        self.check(x)?;
        let n = self.len;
        let mut buf = self.spectrum(x);
        // k = 0 (and n/2 for even n) keep weight 1
        let positive_end = n.div_ceil(2);
        for c in &mut buf[1..positive_end] {
            *c *= 2.0;
        }
        let negative_start = n / 2 + 1;
        for c in &mut buf[negative_start..] {
            *c = Complex64::new(0.0, 0.0);
        }
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// Amplitude and phase of the analytic signal.
    pub fn amplitude_phase(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.analytic_signal(x)?;
        let amplitude = z.iter().map(|c| c.norm()).collect();
        let phase = z.iter().map(|c| wrap_phase(c.im.atan2(c.re))).collect();
        Ok((amplitude, phase))
    }

    /// Zeroes every Fourier coefficient whose frequency lies outside `band`.
    pub fn bandpass(&self, x: &[f64], fs: f64, band: BandSpec) -> Result<Vec<f64>> {
        self.check(x)?;
        band.validate(fs)?;
        let n = self.len;
        let mut buf = self.spectrum(x);
        for (k, c) in buf.iter_mut().enumerate() {
            let bin = k.min(n - k);
            let f = bin as f64 * fs / n as f64;
            if f < band.f_lo || f > band.f_hi {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse_in_place(&mut buf);
        Ok(buf.iter().map(|c| c.re).collect())
    }
}

/// Maps an angle in (−π, π] onto [0, 2π).
pub fn wrap_phase(angle: f64) -> f64 {
    let p = if angle < 0.0 { angle + TAU } else { angle };
    // tiny negative angles round up to exactly 2π
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Discrete Hilbert transform x̂, the imaginary part of the analytic signal.
pub fn hilbert(x: &TimeSeries) -> Result<TimeSeries> {
    let plan = SpectralPlan::new(x.len())?;
    let z = plan.analytic_signal(x.samples())?;
    TimeSeries::new(z.iter().map(|c| c.im).collect(), x.fs())
}

/// Instantaneous amplitude and phase.
pub fn analytic(x: &TimeSeries) -> Result<AnalyticSeries> {
    let plan = SpectralPlan::new(x.len())?;
    let (amplitude, phase) = plan.amplitude_phase(x.samples())?;
    Ok(AnalyticSeries {
        amplitude,
        phase,
        fs: x.fs(),
    })
}

/// Ideal (brick-wall) band-pass filter; band edges are included.
pub fn bandpass(x: &TimeSeries, band: BandSpec) -> Result<TimeSeries> {
    band.validate(x.fs())?;
    if x.len() < 2 {
        return Err(Error::invalid("band-pass needs at least 2 samples"));
    }
    let plan = SpectralPlan::new(x.len())?;
    TimeSeries::new(plan.bandpass(x.samples(), x.fs(), band)?, x.fs())
}

/// Closed forms for the sums of the Hilbert kernel h(ℓ) = 2/(πℓ), ℓ odd, and
/// of its square over 1 ≤ ℓ ≤ N. Exact for even N; `(0, 0)` at N = 0.
pub fn kernel_sums(n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let arg = n as f64 / 2.0 + 0.5;
    let psi = digamma(arg).expect("positive argument");
    let psi_half = digamma(0.5).expect("positive argument");
    let tri = trigamma(arg).expect("positive argument");
    let h1 = (psi - psi_half) / PI;
    let h2 = 0.5 * (1.0 - 2.0 / (PI * PI) * tri);
    (h1, h2)
}
