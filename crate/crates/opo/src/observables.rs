//! Orientation, quadratures and ensemble estimators.
//!
//! Every estimator keeps plain sums per trajectory block. Blocks merge by
//! addition in block order, and standard errors come from delete-one-block
//! jackknife, so results do not depend on how blocks were scheduled.

use crate::error::{OpoError, Result};
use crate::sde::Signal;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

type C = Complex64;

/// Principal orientation `theta = arg(beta_- beta_+^+)/2` in `(-pi/2, pi/2]`.
pub fn extract_theta(s: &Signal) -> Result<f64> {
    let z = s.bm * s.bp_plus;
    if s.bm.norm() == 0.0 || s.bp_plus.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(OpoError::ZeroAmplitude);
    }
    Ok(principal_half_angle(z))
}

#[inline(always)]
fn principal_half_angle(z: C) -> f64 {
    // atan2 returns (-pi, pi]; y == -0.0 with x < 0 would give -pi
    let y = if z.im == 0.0 { 0.0 } else { z.im };
    0.5 * y.atan2(z.re)
}

/// Incremental unwrapping of the pi-periodic orientation.
#[derive(Debug, Clone, Default)]
pub struct ThetaUnwrapper {
    last: Option<f64>,
    suspect: u64,
}

impl ThetaUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shift `raw` by the multiple of pi closest to the previous value.
    pub fn push(&mut self, raw: f64) -> f64 {
        let out = match self.last {
            None => raw,
            Some(prev) => {
                let k = ((prev - raw) / PI).round();
                let v = raw + k * PI;
                if (v - prev).abs() > FRAC_PI_4 {
                    self.suspect += 1;
                }
                v
            }
        };
        self.last = Some(out);
        out
    }

    /// Number of steps whose unwrapped change exceeded pi/4.
    pub fn suspect_jumps(&self) -> u64 {
        self.suspect
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSeries {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub raw: Vec<f64>,
    /// Indices whose step exceeded pi/4 after unwrapping.
    pub suspect: Vec<usize>,
}

pub fn unwrap_theta(times: &[f64], raw: &[f64]) -> ThetaSeries {
    let mut u = ThetaUnwrapper::new();
    let mut suspect = Vec::new();
    let theta = raw
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let before = u.suspect_jumps();
            let v = u.push(r);
            if u.suspect_jumps() > before {
                suspect.push(i);
            }
            v
        })
        .collect();
    ThetaSeries { times: times.to_vec(), theta, raw: raw.to_vec(), suspect }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// Orientation taken from the state itself.
    Rotating,
    /// Orientation frozen at the given angle.
    Fixed(f64),
}

/// Dark quadrature at an explicit orientation `theta`.
#[inline(always)]
pub fn dark_quadrature_at(s: &Signal, phi: f64, theta: f64) -> C {
    let i = C::i();
    let et = C::from_polar(1.0, theta);
    let ep = C::from_polar(1.0, phi);
    let a = ep.conj() * (et * s.bp - et.conj() * s.bm);
    let b = ep * (et.conj() * s.bp_plus - et * s.bm_plus);
    i / SQRT_2 * (a - b)
}

/// Quadrature `X^phi` of the TEM01 mode orthogonal to orientation `theta` (rotating) or `theta0` (fixed).
pub fn dark_quadrature(s: &Signal, phi: f64, frame: Frame) -> Result<C> {
    let theta = match frame {
        Frame::Rotating => extract_theta(s)?,
        Frame::Fixed(t0) => t0,
    };
    Ok(dark_quadrature_at(s, phi, theta))
}

/// Standard error of each component from delete-one-block estimates.
pub fn jackknife_stderr(leave_out: &[Vec<f64>]) -> Vec<f64> {
    let g = leave_out.len();
    if g < 2 {
        return vec![f64::NAN; leave_out.first().map_or(0, |v| v.len())];
    }
    let m = leave_out[0].len();
    (0..m)
        .map(|j| {
            let mean = leave_out.iter().map(|v| v[j]).sum::<f64>() / g as f64;
            let ss: f64 = leave_out.iter().map(|v| (v[j] - mean).powi(2)).sum();
            ((g as f64 - 1.0) / g as f64 * ss).sqrt()
        })
        .collect()
}

/// Per-time sums of a real observable over trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MomentSums {
    pub n: u64,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl MomentSums {
    pub fn new(len: usize) -> Self {
        MomentSums { n: 0, s1: vec![0.0; len], s2: vec![0.0; len] }
    }

    pub fn push(&mut self, series: &[f64]) {
        debug_assert_eq!(series.len(), self.s1.len());
        self.n += 1;
        for (i, &x) in series.iter().enumerate() {
            self.s1[i] += x;
            self.s2[i] += x * x;
        }
    }

    pub fn merge(&mut self, other: &MomentSums) {
        self.n += other.n;
        for i in 0..self.s1.len() {
            self.s1[i] += other.s1[i];
            self.s2[i] += other.s2[i];
        }
    }

    pub fn minus(&self, other: &MomentSums) -> MomentSums {
        MomentSums {
            n: self.n - other.n,
            s1: self.s1.iter().zip(&other.s1).map(|(a, b)| a - b).collect(),
            s2: self.s2.iter().zip(&other.s2).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.s1.iter().map(|s| s / n).collect()
    }

    /// Unbiased sample variance per time.
    pub fn variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.s1
            .iter()
            .zip(&self.s2)
            .map(|(s1, s2)| ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trajectories: u64,
    pub diverged: u64,
}

/// Variance per time with jackknife errors from per-block sums.
pub fn ensemble_variance(times: &[f64], blocks: &[MomentSums], diverged: u64) -> Result<EnsembleStats> {
    let mut total = MomentSums::new(times.len());
    for b in blocks {
        total.merge(b);
    }
    if total.n < 2 {
        return Err(OpoError::InsufficientSamples(format!("need at least 2 trajectories, got {}", total.n)));
    }
    let leave: Vec<Vec<f64>> = blocks.iter().filter(|b| b.n > 0).map(|b| total.minus(b).variance()).collect();
    let stderr = if leave.len() >= 2 {
        jackknife_stderr(&leave)
    } else {
        // single block: normal-theory error of a variance
        total.variance().iter().map(|v| v * (2.0 / (total.n as f64 - 1.0)).sqrt()).collect()
    };
    Ok(EnsembleStats {
        times: times.to_vec(),
        mean: total.mean(),
        variance: total.variance(),
        stderr,
        trajectories: total.n,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least-squares straight line.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(OpoError::InsufficientSamples("regression needs two or more paired points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(OpoError::InsufficientSamples("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept, r2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub fit: LineFit,
    #[serde(with = "nullable_f64")]
    pub slope_stderr: f64,
}

/// Serialize non-finite values as JSON `null` and read `null` back as NaN.
pub mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Slope of `V_theta / D` versus time with a jackknife error over blocks.
pub fn diffusion_slope(times: &[f64], blocks: &[MomentSums], diffusion: f64) -> Result<SlopeEstimate> {
    let mut total = MomentSums::new(times.len());
    for b in blocks {
        total.merge(b);
    }
    let scaled = |m: &MomentSums| -> Vec<f64> { m.variance().iter().map(|v| v / diffusion).collect() };
    let fit = linear_regression(times, &scaled(&total))?;
    let leave: Vec<Vec<f64>> = blocks
        .iter()
        .filter(|b| b.n > 0)
        .map(|b| linear_regression(times, &scaled(&total.minus(b))).map(|f| vec![f.slope]))
        .collect::<Result<_>>()?;
    let slope_stderr = jackknife_stderr(&leave).first().copied().unwrap_or(f64::NAN);
    Ok(SlopeEstimate { fit, slope_stderr })
}

/// Lag-product and mean sums for the stationary autocovariance of a complex series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySums {
    pub n: u64,
    /// Samples per trajectory.
    pub len: usize,
    /// Summed `X(f) X(-f)` over trajectories (zero-padded FFT length `2 len` rounded up).
    pub pair_spectrum: Vec<C>,
    /// Summed series, for the mean correction.
    pub series: Vec<C>,
}

fn fft_len(m: usize) -> usize {
    (2 * m).next_power_of_two()
}

impl StationarySums {
    pub fn new(len: usize) -> Self {
        StationarySums { n: 0, len, pair_spectrum: vec![C::new(0.0, 0.0); fft_len(len)], series: vec![C::new(0.0, 0.0); len] }
    }

    pub fn push(&mut self, x: &[C], planner: &mut FftPlanner<f64>) {
        assert_eq!(x.len(), self.len, "series length mismatch");
        let l = self.pair_spectrum.len();
        let mut buf = vec![C::new(0.0, 0.0); l];
        buf[..x.len()].copy_from_slice(x);
        planner.plan_fft_forward(l).process(&mut buf);
        for f in 0..l {
            self.pair_spectrum[f] += buf[f] * buf[(l - f) % l];
        }
        for (s, v) in self.series.iter_mut().zip(x) {
            *s += v;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, o: &StationarySums) {
        self.n += o.n;
        for (a, b) in self.pair_spectrum.iter_mut().zip(&o.pair_spectrum) {
            *a += b;
        }
        for (a, b) in self.series.iter_mut().zip(&o.series) {
            *a += b;
        }
    }

    pub fn minus(&self, o: &StationarySums) -> StationarySums {
        StationarySums {
            n: self.n - o.n,
            len: self.len,
            pair_spectrum: self.pair_spectrum.iter().zip(&o.pair_spectrum).map(|(a, b)| a - b).collect(),
            series: self.series.iter().zip(&o.series).map(|(a, b)| a - b).collect(),
        }
    }

    /// Autocovariance `R(k) = <x_n x_{n+k}> - <x_n><x_{n+k}>`, averaged over time origins, for `k <= max_lag`.
    pub fn autocovariance(&self, max_lag: usize, planner: &mut FftPlanner<f64>) -> Vec<C> {
        let l = self.pair_spectrum.len();
        let n = self.n as f64;
        let inv = planner.plan_fft_inverse(l);
        let mut lag = self.pair_spectrum.clone();
        inv.process(&mut lag);
        let mut mean: Vec<C> = vec![C::new(0.0, 0.0); l];
        for (i, s) in self.series.iter().enumerate() {
            mean[i] = s / n;
        }
        planner.plan_fft_forward(l).process(&mut mean);
        let mut mm: Vec<C> = (0..l).map(|f| mean[f] * mean[(l - f) % l]).collect();
        inv.process(&mut mm);
        // inverse FFT is unnormalized; the forward/inverse pair picks up a factor l
        let scale = 1.0 / l as f64;
        (0..=max_lag.min(self.len - 1))
            .map(|k| {
                let denom = (self.len - k) as f64;
                // lag sums land at index l - k for X(f)X(-f) with this sign convention
                let idx = (l - k) % l;
                (lag[idx] * scale / n - mm[idx] * scale) / denom
            })
            .collect()
    }
}

/// Spectrum `1 + (2/g^2) h Re[R(0) + 2 sum_k R(k) cos(omega k h)]` from an autocovariance.
pub fn spectrum_from_autocovariance(r: &[C], h: f64, g: f64, omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .map(|&w| {
            let mut acc = r[0].re;
            for (k, rk) in r.iter().enumerate().skip(1) {
                acc += 2.0 * rk.re * (w * k as f64 * h).cos();
            }
            1.0 + 2.0 / (g * g) * h * acc
        })
        .collect()
}

/// Stationary noise spectrum with jackknife errors from per-block sums.
pub fn stationary_spectrum(blocks: &[StationarySums], h: f64, g: f64, max_lag_time: f64, omega: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = blocks.first().ok_or_else(|| OpoError::InsufficientSamples("no blocks".into()))?;
    let mut total = StationarySums::new(first.len);
    for b in blocks {
        total.merge(b);
    }
    let max_lag = (max_lag_time / h).round() as usize;
    if total.len < 2 || max_lag >= total.len {
        return Err(OpoError::InsufficientSamples(format!(
            "{} post-cutoff samples cannot resolve lags up to {max_lag}",
            total.len
        )));
    }
    if total.n < 1 {
        return Err(OpoError::InsufficientSamples("no completed trajectories".into()));
    }
    let mut planner = FftPlanner::new();
    let est = |s: &StationarySums, p: &mut FftPlanner<f64>| {
        spectrum_from_autocovariance(&s.autocovariance(max_lag, p), h, g, omega)
    };
    let v = est(&total, &mut planner);
    let leave: Vec<Vec<f64>> = blocks.iter().filter(|b| b.n > 0).map(|b| est(&total.minus(b), &mut planner)).collect();
    Ok((v, jackknife_stderr(&leave)))
}

/// Sums of windowed Fourier amplitudes `A(+-omega) = sum_n w_n x_n e^{-+i omega t_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSums {
    pub n: u64,
    pub product: Vec<C>,
    pub pos: Vec<C>,
    pub neg: Vec<C>,
}

impl WindowSums {
    pub fn new(n_omega: usize) -> Self {
        let z = vec![C::new(0.0, 0.0); n_omega];
        WindowSums { n: 0, product: z.clone(), pos: z.clone(), neg: z }
    }

    pub fn merge(&mut self, o: &WindowSums) {
        self.n += o.n;
        for i in 0..self.product.len() {
            self.product[i] += o.product[i];
            self.pos[i] += o.pos[i];
            self.neg[i] += o.neg[i];
        }
    }

    pub fn minus(&self, o: &WindowSums) -> WindowSums {
        let sub = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        WindowSums { n: self.n - o.n, product: sub(&self.product, &o.product), pos: sub(&self.pos, &o.pos), neg: sub(&self.neg, &o.neg) }
    }
}

/// Trapezoid weights and phase factors for the windowed double-sum estimator.
#[derive(Debug, Clone)]
pub struct WindowTable {
    pub omega: Vec<f64>,
    pub h: f64,
    pub t: f64,
    /// `phases[j][n] = w_n e^{-i omega_j t_n}`.
    phases: Vec<Vec<C>>,
}

impl WindowTable {
    /// Window of length `t` sampled every `h` (`t/h` must be an integer).
    pub fn new(omega: &[f64], h: f64, t: f64) -> Result<Self> {
        let m = (t / h).round();
        if !(m >= 1.0) || (m * h - t).abs() > 1e-9 * t {
            return Err(OpoError::Config(format!("window T = {t} is not a multiple of the sample spacing {h}")));
        }
        let m = m as usize;
        let weights: Vec<f64> = (0..=m).map(|n| if n == 0 || n == m { 0.5 * h } else { h }).collect();
        let phases = omega
            .iter()
            .map(|&w| (0..=m).map(|n| weights[n] * C::from_polar(1.0, -w * n as f64 * h)).collect())
            .collect();
        Ok(WindowTable { omega: omega.to_vec(), h, t, phases })
    }

    pub fn samples(&self) -> usize {
        self.phases.first().map_or(0, |p| p.len())
    }

    pub fn push(&self, sums: &mut WindowSums, x: &[C]) {
        assert_eq!(x.len(), self.samples(), "window length mismatch");
        for (j, ph) in self.phases.iter().enumerate() {
            let mut a = C::new(0.0, 0.0);
            let mut b = C::new(0.0, 0.0);
            for (p, v) in ph.iter().zip(x) {
                a += p * v;
                // weights are real, so w_n e^{+i omega t_n} = conj(phase)
                b += p.conj() * v;
            }
            sums.product[j] += a * b;
            sums.pos[j] += a;
            sums.neg[j] += b;
        }
        sums.n += 1;
    }

    fn estimate(&self, s: &WindowSums, g: f64) -> Vec<f64> {
        let n = s.n as f64;
        (0..self.omega.len())
            .map(|j| {
                let cov = s.product[j] / n - (s.pos[j] / n) * (s.neg[j] / n);
                1.0 + 2.0 / (g * g * self.t) * cov.re
            })
            .collect()
    }
}

/// Windowed noise spectrum with jackknife errors.
pub fn windowed_spectrum(table: &WindowTable, blocks: &[WindowSums], g: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut total = WindowSums::new(table.omega.len());
    for b in blocks {
        total.merge(b);
    }
    if total.n < 2 {
        return Err(OpoError::InsufficientSamples("windowed spectrum needs two or more trajectories".into()));
    }
    let v = table.estimate(&total, g);
    let leave: Vec<Vec<f64>> = blocks.iter().filter(|b| b.n > 0).map(|b| table.estimate(&total.minus(b), g)).collect();
    Ok((v, jackknife_stderr(&leave)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingFit {
    /// High-frequency level.
    pub a: f64,
    /// Corner, in units of `(omega/2)^2`.
    pub b: f64,
    pub chi2: f64,
}

/// Weighted least-squares fit of `a x / (b + x)`, `x = (omega/2)^2`.
pub fn fit_squeezing(omega: &[f64], v: &[f64], err: &[f64]) -> Result<SqueezingFit> {
    let pts: Vec<(f64, f64, f64)> = omega
        .iter()
        .zip(v)
        .zip(err)
        .filter(|((w, _), e)| **w > 0.0 && **e > 0.0 && e.is_finite())
        .map(|((w, y), e)| ((w / 2.0).powi(2), *y, 1.0 / (e * e)))
        .collect();
    if pts.len() < 2 {
        return Err(OpoError::InsufficientSamples("fit needs two or more points with positive errors".into()));
    }
    // for fixed b the model is linear in a
    let best_a = |b: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &(x, y, w) in &pts {
            let f = x / (b + x);
            num += w * f * y;
            den += w * f * f;
        }
        num / den
    };
    let chi2 = |b: f64| {
        let a = best_a(b);
        pts.iter().map(|&(x, y, w)| w * (y - a * x / (b + x)).powi(2)).sum::<f64>()
    };
    let grid: Vec<f64> = (0..=400).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 400.0)).collect();
    let lb = crate::analytics::bracketed_min(|u| chi2(10f64.powf(u)), &grid.iter().map(|b| b.log10()).collect::<Vec<_>>(), 1e-10)?;
    let b = 10f64.powf(lb);
    Ok(SqueezingFit { a: best_a(b), b, chi2: chi2(b) })
}

/// Fit to each delete-one-block spectrum and return jackknife errors of `(a, b)`.
pub fn fit_squeezing_jackknife(omega: &[f64], leave_out: &[Vec<f64>], err: &[f64]) -> Result<(f64, f64)> {
    let fits: Vec<Vec<f64>> = leave_out
        .iter()
        .map(|v| fit_squeezing(omega, v, err).map(|f| vec![f.a, f.b]))
        .collect::<Result<_>>()?;
    let e = jackknife_stderr(&fits);
    Ok((e[0], e[1]))
}

/// Leave-one-block-out stationary spectra, for jackknifing derived quantities.
pub fn stationary_leave_out(blocks: &[StationarySums], h: f64, g: f64, max_lag_time: f64, omega: &[f64]) -> Vec<Vec<f64>> {
    let Some(first) = blocks.first() else { return Vec::new() };
    let mut total = StationarySums::new(first.len);
    for b in blocks {
        total.merge(b);
    }
    let max_lag = (max_lag_time / h).round() as usize;
    let mut planner = FftPlanner::new();
    blocks
        .iter()
        .filter(|b| b.n > 0)
        .map(|b| spectrum_from_autocovariance(&total.minus(b).autocovariance(max_lag, &mut planner), h, g, omega))
        .collect()
}

/// Largest `|theta|` representable without ambiguity.
pub const THETA_RANGE: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::steady_state;
    use crate::sde::FieldState;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn signal_of(f: &FieldState) -> Signal {
        Signal { bp: f.beta_p1, bp_plus: f.beta_p1_plus, bm: f.beta_m1, bm_plus: f.beta_m1_plus }
    }

    #[test]
    fn theta_of_steady_states() {
        for th in [0.0, 0.3, -1.2] {
            let s = signal_of(&FieldState::from_steady_state(&steady_state(2.0, th).unwrap()));
            assert!((extract_theta(&s).unwrap() - th).abs() < 1e-15);
        }
        let mut s = signal_of(&FieldState::from_steady_state(&steady_state(2.0, 0.4).unwrap()));
        let e = C::from_polar(1.0, 0.9);
        s.bp *= e;
        s.bm *= e;
        s.bp_plus *= e.conj();
        s.bm_plus *= e.conj();
        assert!((extract_theta(&s).unwrap() - 0.4).abs() < 1e-15);
        s.bm = C::new(0.0, 0.0);
        assert!(extract_theta(&s).is_err());
    }

    #[test]
    fn theta_principal_range() {
        let s = Signal { bp: C::new(1.0, 0.0), bp_plus: C::new(1.0, 0.0), bm: C::new(-1.0, -0.0), bm_plus: C::new(1.0, 0.0) };
        assert_eq!(extract_theta(&s).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn unwrap_examples() {
        let u = unwrap_theta(&[0.0, 1.0], &[1.5, -1.55]);
        assert!((u.theta[1] - (PI - 1.55)).abs() < 1e-15);
        assert!((u.theta[1] - 1.5916).abs() < 1e-4);
        let c = unwrap_theta(&[0.0, 1.0, 2.0], &[0.2, 0.2, 0.2]);
        assert_eq!(c.theta, vec![0.2, 0.2, 0.2]);
        let j = unwrap_theta(&[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(j.suspect, vec![1]);
    }

    #[test]
    fn unwrap_round_trip_of_wiener_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut th = 0.0;
        let mut truth = Vec::new();
        for _ in 0..20_000 {
            th += 0.05 * normal(&mut rng);
            truth.push(th);
        }
        let raw: Vec<f64> = truth.iter().map(|t| principal_half_angle(C::from_polar(1.0, 2.0 * t))).collect();
        let times: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
        let u = unwrap_theta(&times, &raw);
        let offset = u.theta[0] - truth[0];
        for (a, b) in u.theta.iter().zip(&truth) {
            assert!((a - b - offset).abs() < 1e-12);
        }
        assert!(truth.iter().any(|t| t.abs() > PI), "path should wander past the principal range");
    }

    #[test]
    fn quadratures_vanish_on_steady_state() {
        let s = signal_of(&FieldState::from_steady_state(&steady_state(1.7, 0.6).unwrap()));
        for phi in [0.0, 0.5, FRAC_PI_2, 2.0] {
            assert!(dark_quadrature(&s, phi, Frame::Rotating).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn fixed_frame_small_angle() {
        let sigma = 2f64.sqrt();
        let rho = (sigma - 1.0).sqrt();
        for th in [1e-4, 1e-3, 0.02] {
            let s = signal_of(&FieldState::from_steady_state(&steady_state(sigma, th).unwrap()));
            let x = dark_quadrature(&s, 0.0, Frame::Fixed(0.0)).unwrap();
            assert!((x.re - 2.0 * SQRT_2 * rho * th.sin()).abs() < 1e-14);
            assert!(((x.re - 2.0 * SQRT_2 * rho * th) / x.re).abs() < th * th);
            assert!(x.im.abs() < 1e-15);
        }
    }

    #[test]
    fn phase_quadrature_is_dark_phase_projection() {
        // b = (b+, b+^+, b-, b-^+) around the theta = 0 state, c1 = w1 . b
        let rho = (2f64.sqrt() - 1.0).sqrt();
        let base = [C::new(1.0, 2.0), C::new(-0.4, 1.0), C::new(0.7, -0.3), C::new(0.2, 0.5)];
        let err = |eps: f64| {
            let b: Vec<C> = base.iter().map(|x| x * eps).collect();
            let c1 = 0.5 * (b[0] + b[1] - b[2] - b[3]);
            let s = Signal { bp: rho + b[0], bp_plus: rho + b[1], bm: rho + b[2], bm_plus: rho + b[3] };
            (dark_quadrature(&s, FRAC_PI_2, Frame::Rotating).unwrap() - SQRT_2 * c1).norm()
        };
        let (e1, e2) = (err(1e-3), err(1e-4));
        assert!(e1 < 1e-5, "{e1}");
        // residual is second order
        assert!(e1 / e2 > 80.0, "{e1} {e2}");
    }

    #[test]
    fn variance_accumulator_and_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let dd: f64 = 0.3;
        let mut blocks = Vec::new();
        for _ in 0..40 {
            let mut b = MomentSums::new(times.len());
            for _ in 0..250 {
                let mut w = 0.0;
                let mut path = vec![0.0];
                for _ in 1..times.len() {
                    w += (dd * 0.5).sqrt() * normal(&mut rng);
                    path.push(w);
                }
                b.push(&path);
            }
            blocks.push(b);
        }
        let stats = ensemble_variance(&times, &blocks, 0).unwrap();
        assert_eq!(stats.variance[0], 0.0);
        let s = diffusion_slope(&times, &blocks, dd).unwrap();
        assert!((s.fit.slope - 1.0).abs() < 3.0 * s.slope_stderr, "{s:?}");
        assert!(s.slope_stderr > 0.005 && s.slope_stderr < 0.03);
        assert!(s.fit.r2 > 0.99);
    }

    #[test]
    fn stderr_scales_with_ensemble_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let run = |per_block: usize, rng: &mut ChaCha8Rng| {
            let blocks: Vec<MomentSums> = (0..32)
                .map(|_| {
                    let mut b = MomentSums::new(1);
                    for _ in 0..per_block {
                        b.push(&[normal(rng)]);
                    }
                    b
                })
                .collect();
            ensemble_variance(&[0.0], &blocks, 0).unwrap().stderr[0]
        };
        let small = run(100, &mut rng);
        let large = run(1600, &mut rng);
        let ratio = small / large;
        assert!(ratio > 2.5 && ratio < 6.0, "ratio {ratio}");
    }

    #[allow(clippy::too_many_arguments)]
    fn ou_blocks(lambda: f64, gamma: f64, h: f64, m: usize, per_block: usize, nblocks: usize, seed: u64, complex_noise: bool) -> Vec<StationarySums> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (-lambda * h).exp();
        let var = gamma * gamma / (2.0 * lambda);
        let kick = (var * (1.0 - a * a)).sqrt();
        let mut planner = FftPlanner::new();
        (0..nblocks)
            .map(|_| {
                let mut s = StationarySums::new(m);
                for _ in 0..per_block {
                    let mut x = if complex_noise {
                        C::new(0.0, var.sqrt() * normal(&mut rng))
                    } else {
                        C::new(var.sqrt() * normal(&mut rng), 0.0)
                    };
                    let mut series = Vec::with_capacity(m);
                    for _ in 0..m {
                        series.push(x + C::new(0.7, 0.0));
                        let xi = kick * normal(&mut rng);
                        x = a * x + if complex_noise { C::new(0.0, xi) } else { C::new(xi, 0.0) };
                    }
                    s.push(&series, &mut planner);
                }
                s
            })
            .collect()
    }

    fn discrete_ou_spectrum(lambda: f64, gamma: f64, h: f64, g: f64, k_max: usize, w: f64, sign: f64) -> f64 {
        let var = gamma * gamma / (2.0 * lambda);
        let a = (-lambda * h).exp();
        let mut acc = 1.0;
        for k in 1..=k_max {
            acc += 2.0 * a.powi(k as i32) * (w * k as f64 * h).cos();
        }
        1.0 + sign * 2.0 / (g * g) * h * var * acc
    }

    #[test]
    fn stationary_estimator_on_ou() {
        let (lambda, gamma, h, g) = (2.0, 0.05, 0.05, 0.05);
        let omega = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
        for complex_noise in [false, true] {
            let blocks = ou_blocks(lambda, gamma, h, 400, 60, 32, 17 + complex_noise as u64, complex_noise);
            let (v, e) = stationary_spectrum(&blocks, h, g, 5.0, &omega).unwrap();
            let sign = if complex_noise { -1.0 } else { 1.0 };
            for (j, &w) in omega.iter().enumerate() {
                let exact = discrete_ou_spectrum(lambda, gamma, h, g, 100, w, sign);
                assert!((v[j] - exact).abs() < 3.5 * e[j], "w={w}: {} vs {exact} +- {}", v[j], e[j]);
                let continuum = 1.0 + sign * 2.0 / (g * g) * gamma * gamma / (lambda * lambda + w * w);
                assert!((exact - continuum).abs() < 0.01);
            }
        }
    }

    #[test]
    fn vacuum_like_signal_gives_unit_spectrum() {
        // x = u + i v with independent equal-variance parts has <x x> = 0 at every lag
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut planner = FftPlanner::new();
        let m = 256;
        let blocks: Vec<StationarySums> = (0..32)
            .map(|_| {
                let mut s = StationarySums::new(m);
                for _ in 0..40 {
                    let x: Vec<C> = (0..m).map(|_| C::new(1e-3 * normal(&mut rng), 1e-3 * normal(&mut rng))).collect();
                    s.push(&x, &mut planner);
                }
                s
            })
            .collect();
        let omega: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let (v, e) = stationary_spectrum(&blocks, 0.03, 1e-3, 3.0, &omega).unwrap();
        for j in 0..omega.len() {
            assert!((v[j] - 1.0).abs() < 3.5 * e[j], "{} +- {}", v[j], e[j]);
        }
    }

    #[test]
    fn autocovariance_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut planner = FftPlanner::new();
        let m = 37;
        let series: Vec<Vec<C>> = (0..5).map(|_| (0..m).map(|_| C::new(rng.gen(), rng.gen())).collect()).collect();
        let mut s = StationarySums::new(m);
        for x in &series {
            s.push(x, &mut planner);
        }
        let r = s.autocovariance(10, &mut planner);
        let n = series.len() as f64;
        for k in 0..=10 {
            let mut prod = C::new(0.0, 0.0);
            let mut mm = C::new(0.0, 0.0);
            for t in 0..m - k {
                let mu_a: C = series.iter().map(|x| x[t]).sum::<C>() / n;
                let mu_b: C = series.iter().map(|x| x[t + k]).sum::<C>() / n;
                prod += series.iter().map(|x| x[t] * x[t + k]).sum::<C>() / n;
                mm += mu_a * mu_b;
            }
            let direct = (prod - mm) / (m - k) as f64;
            assert!((r[k] - direct).norm() < 1e-12, "k={k}");
        }
        let too_short = stationary_spectrum(&[StationarySums::new(4)], 0.1, 1.0, 5.0, &[0.0]);
        assert!(matches!(too_short, Err(OpoError::InsufficientSamples(_))));
    }

    #[test]
    fn windowed_matches_stationary_for_stationary_input() {
        // long window on a stationary OU: the windowed estimator approaches the stationary one
        let (lambda, gamma, h, g) = (2.0, 0.05, 0.05, 0.05);
        let t = 40.0;
        let m = (t / h) as usize + 1;
        let omega = [0.0, 1.0, 3.0];
        let table = WindowTable::new(&omega, h, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = (-lambda * h).exp();
        let var = gamma * gamma / (2.0 * lambda);
        let blocks: Vec<WindowSums> = (0..32)
            .map(|_| {
                let mut s = WindowSums::new(omega.len());
                for _ in 0..100 {
                    let mut x = var.sqrt() * normal(&mut rng);
                    let mut series = Vec::with_capacity(m);
                    for _ in 0..m {
                        series.push(C::new(x, 0.0));
                        x = a * x + (var * (1.0 - a * a)).sqrt() * normal(&mut rng);
                    }
                    table.push(&mut s, &series);
                }
                s
            })
            .collect();
        let (v, e) = windowed_spectrum(&table, &blocks, g).unwrap();
        for (j, &w) in omega.iter().enumerate() {
            let stationary = discrete_ou_spectrum(lambda, gamma, h, g, 400, w, 1.0);
            // finite-window bias is O(1/(lambda T))
            let bias = 2.0 / (g * g) * var * 2.0 / (lambda * lambda * t);
            assert!((v[j] - stationary).abs() < 3.5 * e[j] + bias, "w={w}: {} vs {stationary}", v[j]);
        }
    }

    #[test]
    fn window_table_validates() {
        assert!(WindowTable::new(&[0.0], 0.3, 1.0).is_err());
        assert_eq!(WindowTable::new(&[0.0], 0.25, 1.0).unwrap().samples(), 5);
    }

    #[test]
    fn regression_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_regression(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15 && (f.r2 - 1.0).abs() < 1e-15);
        assert!(linear_regression(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn squeezing_fit_recovers_parameters() {
        let omega: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let v: Vec<f64> = omega.iter().map(|w| {
            let x = (w / 2.0) * (w / 2.0);
            0.97 * x / (1.08 + x)
        }).collect();
        let err = vec![1e-3; omega.len()];
        let f = fit_squeezing(&omega, &v, &err).unwrap();
        assert!((f.a - 0.97).abs() < 1e-6 && (f.b - 1.08).abs() < 1e-6, "{f:?}");
        // unit parameters reproduce the dark phase-quadrature spectrum
        for &w in &omega {
            let x = (w / 2.0) * (w / 2.0);
            let model = x / (1.0 + x);
            assert!((model - crate::analytics::dark_quadrature_spectrum(w, FRAC_PI_2)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn unwrap_keeps_steps_small(raw in proptest::collection::vec(-FRAC_PI_2..FRAC_PI_2, 2..200)) {
            let times: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
            let u = unwrap_theta(&times, &raw);
            for w in u.theta.windows(2) {
                prop_assert!((w[1] - w[0]).abs() <= FRAC_PI_2 + 1e-12);
            }
            for (t, r) in u.theta.iter().zip(&raw) {
                let k = (t - r) / PI;
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }

        #[test]
        fn theta_is_phase_difference_only(th in -1.5f64..1.5, psi in -PI..PI, sigma in 1.1f64..4.0) {
            let f = FieldState::from_steady_state(&steady_state(sigma, th).unwrap());
            let mut s = signal_of(&f);
            let e = C::from_polar(1.0, psi);
            s.bp *= e; s.bm *= e; s.bp_plus *= e.conj(); s.bm_plus *= e.conj();
            prop_assert!((extract_theta(&s).unwrap() - th).abs() < 1e-12);
        }
    }
}
