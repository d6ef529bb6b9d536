//! Observables extracted from simulated states and time series.

use crate::model::ModelParams;
use crate::solver::{Grid, SeriesSample, State};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Amplitudes at or below this are treated as zero.
pub const HOMOGENEOUS_TOL: f64 = 1e-12;
pub const MASS_BOUND_TOL: f64 = 1e-6;
pub const SPIKE_PROMINENCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("kcut = {kcut} must be below n/2 = {half}")]
    AboveNyquist { kcut: usize, half: usize },
    #[error("field has {got} values but the grid has {want} cells")]
    LengthMismatch { got: usize, want: usize },
}

/// Cosine-projection coefficients: `(1/L)∫f` at `k = 0` and
/// `(2/L)∫f cos(kπx/L)` for `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub amplitudes: Vec<f64>,
    pub kcut: usize,
}

pub fn mode_amplitudes(field: &[f64], grid: &Grid, kcut: usize) -> Result<ModeSpectrum, DiagnosticsError> {
    if field.len() != grid.n {
        return Err(DiagnosticsError::LengthMismatch {
            got: field.len(),
            want: grid.n,
        });
    }
    if 2 * kcut >= grid.n {
        return Err(DiagnosticsError::AboveNyquist {
            kcut,
            half: grid.n / 2,
        });
    }
    let amplitudes = (0..=kcut)
        .map(|k| {
            let weight = if k == 0 { 1.0 } else { 2.0 } / grid.length;
            let wn = k as f64 * PI / grid.length;
            let sum: f64 = field
                .iter()
                .zip(&grid.x)
                .map(|(f, x)| f * (wn * x).cos())
                .sum();
            weight * sum * grid.dx
        })
        .collect();
    Ok(ModeSpectrum { amplitudes, kcut })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominantMode {
    pub k: usize,
    pub amplitude: f64,
    /// Every `k ≥ 1` amplitude is at most [`HOMOGENEOUS_TOL`]; `k` is then 0.
    pub homogeneous: bool,
}

/// Largest `|amplitude|` over `k ≥ 1`, ties going to the smaller `k`.
pub fn dominant_mode(spec: &ModeSpectrum) -> DominantMode {
    let mut best = (0, 0.0f64);
    for (k, a) in spec.amplitudes.iter().enumerate().skip(1) {
        if a.abs() > best.1.abs() {
            best = (k, *a);
        }
    }
    if best.1.abs() <= HOMOGENEOUS_TOL {
        return DominantMode {
            k: 0,
            amplitude: 0.0,
            homogeneous: true,
        };
    }
    DominantMode {
        k: best.0,
        amplitude: best.1,
        homogeneous: false,
    }
}

/// Root-mean-square of each mode amplitude over several snapshots, for
/// patterns that oscillate in time.
pub fn rms_spectrum(fields: &[&[f64]], grid: &Grid, kcut: usize) -> Result<ModeSpectrum, DiagnosticsError> {
    let mut acc = vec![0.0; kcut + 1];
    for f in fields {
        let s = mode_amplitudes(f, grid, kcut)?;
        for (a, x) in acc.iter_mut().zip(&s.amplitudes) {
            *a += x * x;
        }
    }
    let count = fields.len().max(1) as f64;
    Ok(ModeSpectrum {
        amplitudes: acc.into_iter().map(|a| (a / count).sqrt()).collect(),
        kcut,
    })
}

/// Streaming steady-state test: true once `window` consecutive rates have
/// been below `tol`.
#[derive(Debug, Clone)]
pub struct SteadyDetector {
    tol: f64,
    window: usize,
    quiet: usize,
}

impl SteadyDetector {
    pub fn new(tol: f64, window: usize) -> Self {
        Self { tol, window, quiet: 0 }
    }

    pub fn push(&mut self, max_rate: f64) -> bool {
        if max_rate < self.tol {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.is_steady()
    }

    pub fn is_steady(&self) -> bool {
        self.quiet >= self.window
    }
}

/// True when the last `window` steps of `history` (consecutive states `dt`
/// apart) all move slower than `tol`.
pub fn detect_steady_state(history: &[State], dt: f64, tol: f64, window: usize) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let tail = &history[history.len() - window - 1..];
    let mut det = SteadyDetector::new(tol, window);
    tail.windows(2)
        .map(|w| w[1].max_abs_diff(&w[0]) / dt)
        .fold(false, |_, r| det.push(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodEstimate {
    pub period: f64,
    pub n_peaks: usize,
    /// `(max - min) / mean` of the peak-to-peak intervals.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PeriodVerdict {
    Periodic(PeriodEstimate),
    NotPeriodic { n_peaks: usize, spread: f64 },
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    pub transient_fraction: f64,
    /// Minimum peak prominence as a fraction of the post-transient range.
    pub prominence: f64,
    pub max_spread: f64,
    pub min_peaks: usize,
    pub steady_rtol: f64,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self {
            transient_fraction: 0.5,
            prominence: 0.1,
            max_spread: 0.2,
            min_peaks: 3,
            steady_rtol: 1e-8,
        }
    }
}

/// Topographic prominence of the sample at `i`: height above the higher of
/// the two lowest points reached before meeting a higher sample on each
/// side. A side that runs into the array end uses the minimum up to it;
/// a peak at an end uses its single side.
fn prominence(values: &[f64], i: usize) -> f64 {
    let peak = values[i];
    let side_min = |iter: &mut dyn Iterator<Item = &f64>| -> Option<f64> {
        let mut lo = None::<f64>;
        for &v in iter {
            if v > peak {
                break;
            }
            lo = Some(lo.map_or(v, |m| m.min(v)));
        }
        lo
    };
    let left = side_min(&mut values[..i].iter().rev());
    let right = side_min(&mut values[i + 1..].iter());
    let base = match (left, right) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => peak,
    };
    peak - base
}

/// Indices of interior strict local maxima (plateaus count once, at their
/// first sample) with prominence at least `threshold`.
fn prominent_peaks(values: &[f64], threshold: f64) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] && prominence(values, i) >= threshold {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in samples from the middle one.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }
}

/// Period of a uniformly sampled series from its prominent peaks.
pub fn detect_period(times: &[f64], values: &[f64], opts: &PeriodOptions) -> PeriodVerdict {
    let n = times.len().min(values.len());
    let start = ((n as f64) * opts.transient_fraction.clamp(0.0, 0.9)).floor() as usize;
    let (t, v) = (&times[start..n], &values[start..n]);
    if v.len() < 3 {
        return PeriodVerdict::NotPeriodic {
            n_peaks: 0,
            spread: f64::NAN,
        };
    }
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if hi - lo <= opts.steady_rtol * scale {
        return PeriodVerdict::Steady;
    }
    let peaks = prominent_peaks(v, opts.prominence * (hi - lo));
    let h = t[1] - t[0];
    let peak_times: Vec<f64> = peaks
        .iter()
        .map(|&i| t[i] + h * parabolic_offset(v[i - 1], v[i], v[i + 1]))
        .collect();
    let intervals: Vec<f64> = peak_times.windows(2).map(|w| w[1] - w[0]).collect();
    if peaks.len() < opts.min_peaks {
        return PeriodVerdict::NotPeriodic {
            n_peaks: peaks.len(),
            spread: f64::NAN,
        };
    }
    let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
    let (imin, imax) = intervals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (imax - imin) / mean;
    if spread > opts.max_spread {
        return PeriodVerdict::NotPeriodic {
            n_peaks: peaks.len(),
            spread,
        };
    }
    PeriodVerdict::Periodic(PeriodEstimate {
        period: mean,
        n_peaks: peaks.len(),
        confidence: spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldBound {
    /// `min over samples of e^{-mu t} mass_0 + L - mass`.
    pub min_residual: f64,
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBoundReport {
    pub u: FieldBound,
    pub v: FieldBound,
}

impl MassBoundReport {
    pub fn ok(&self) -> bool {
        self.u.first_violation.is_none() && self.v.first_violation.is_none()
    }
}

/// Checks `mass(t) <= e^{-mu t} mass(0) + L` for both species along a
/// recorded series, with time measured from the first sample.
pub fn check_mass_bound(series: &[SeriesSample], p: &ModelParams) -> MassBoundReport {
    let field = |mass: fn(&SeriesSample) -> f64, mu: f64| {
        let mut out = FieldBound {
            min_residual: f64::INFINITY,
            first_violation: None,
        };
        let Some(first) = series.first() else {
            return out;
        };
        let m0 = mass(first);
        for s in series {
            let r = (-mu * (s.t - first.t)).exp() * m0 + p.length - mass(s);
            out.min_residual = out.min_residual.min(r);
            if r < -MASS_BOUND_TOL && out.first_violation.is_none() {
                out.first_violation = Some(s.t);
            }
        }
        out
    };
    MassBoundReport {
        u: field(|s| s.mass_u, p.mu1),
        v: field(|s| s.mass_v, p.mu2),
    }
}

/// Number of spikes: prominent interior maxima plus prominent maxima at
/// either wall, with prominence at least 20% of the field's range.
pub fn count_spikes(field: &[f64]) -> usize {
    let n = field.len();
    if n < 2 {
        return 0;
    }
    let (lo, hi) = field.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let scale = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if hi - lo <= HOMOGENEOUS_TOL * scale.max(1.0) {
        return 0;
    }
    let threshold = SPIKE_PROMINENCE * (hi - lo);
    let mut count = prominent_peaks(field, threshold).len();
    if field[0] > field[1] && prominence(field, 0) >= threshold {
        count += 1;
    }
    if field[n - 1] > field[n - 2] && prominence(field, n - 1) >= threshold {
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2.0, 200).unwrap()
    }

    #[test]
    fn constant_field_has_only_mean() {
        let g = grid();
        let s = mode_amplitudes(&vec![1.5; g.n], &g, 20).unwrap();
        assert!((s.amplitudes[0] - 1.5).abs() < 1e-12);
        assert!(s.amplitudes[1..].iter().all(|a| a.abs() <= 1e-12));
        assert!(dominant_mode(&s).homogeneous);
    }

    #[test]
    fn single_cosine_is_recovered() {
        let g = grid();
        let f: Vec<f64> = g.x.iter().map(|x| 3.0 + 0.7 * (2.0 * PI * x / g.length).cos()).collect();
        let s = mode_amplitudes(&f, &g, 20).unwrap();
        assert!((s.amplitudes[2] - 0.7).abs() < 1e-10);
        for (k, a) in s.amplitudes.iter().enumerate().skip(1) {
            if k != 2 {
                assert!(a.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nyquist_is_rejected() {
        let g = grid();
        assert!(matches!(
            mode_amplitudes(&vec![0.0; g.n], &g, 100),
            Err(DiagnosticsError::AboveNyquist { .. })
        ));
    }

    #[test]
    fn dominant_mode_prefers_larger_then_smaller_k() {
        let spec = ModeSpectrum {
            amplitudes: vec![1.0, 0.0, 0.5, 0.4],
            kcut: 3,
        };
        assert_eq!(dominant_mode(&spec).k, 2);
        let tie = ModeSpectrum {
            amplitudes: vec![1.0, 0.0, 0.5, -0.5],
            kcut: 3,
        };
        assert_eq!(dominant_mode(&tie).k, 2);
    }

    #[test]
    fn sinusoid_period() {
        let t: Vec<f64> = (0..20_000).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|t| (2.0 * PI * t / 5.0).sin()).collect();
        match detect_period(&t, &v, &PeriodOptions::default()) {
            PeriodVerdict::Periodic(e) => assert!((e.period - 5.0).abs() < 0.02, "{e:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_series_is_steady() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(detect_period(&t, &[2.0; 100], &PeriodOptions::default()), PeriodVerdict::Steady);
    }

    #[test]
    fn decaying_series_is_not_periodic() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert!(matches!(
            detect_period(&t, &v, &PeriodOptions::default()),
            PeriodVerdict::NotPeriodic { .. }
        ));
    }

    #[test]
    fn spike_counts() {
        let g = grid();
        let decreasing: Vec<f64> = g.x.iter().map(|x| 2.0 - x).collect();
        assert_eq!(count_spikes(&decreasing), 1);
        let three: Vec<f64> = g.x.iter().map(|x| 1.0 + 0.5 * (3.0 * PI * x / g.length).cos()).collect();
        assert_eq!(count_spikes(&three), 2);
        assert_eq!(count_spikes(&vec![1.0; g.n]), 0);
    }

    #[test]
    fn small_ripples_are_not_spikes() {
        let g = grid();
        let f: Vec<f64> = g
            .x
            .iter()
            .map(|x| (PI * x / g.length).cos() + 0.01 * (40.0 * PI * x / g.length).cos())
            .collect();
        assert_eq!(count_spikes(&f), 1);
    }

    #[test]
    fn steady_detection_on_histories() {
        let s = State {
            u: vec![1.0; 10],
            v: vec![1.0; 10],
            w: vec![1.0; 10],
            t: 0.0,
        };
        let frozen = vec![s.clone(); 101];
        assert!(detect_steady_state(&frozen, 0.01, 1e-8, 100));
        assert!(!detect_steady_state(&frozen[..100], 0.01, 1e-8, 100));
        let moving: Vec<State> = (0..101)
            .map(|i| State {
                u: vec![1.0 + 0.1 * (i as f64).sin(); 10],
                ..s.clone()
            })
            .collect();
        assert!(!detect_steady_state(&moving, 0.01, 1e-8, 100));
    }

    #[test]
    fn mass_bound_at_equilibrium_has_slack() {
        let p = ModelParams::default();
        let m = 2.0 / 3.0 * p.length;
        let series: Vec<SeriesSample> = (0..10)
            .map(|i| SeriesSample {
                t: i as f64,
                u_at_x0: 2.0 / 3.0,
                u_at_midpoint: 2.0 / 3.0,
                mass_u: m,
                mass_v: m,
                linf_u: 2.0 / 3.0,
            })
            .collect();
        let r = check_mass_bound(&series, &p);
        assert!(r.ok());
        assert!(r.u.min_residual >= p.length * (1.0 - 2.0 / 3.0) - 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn band_limited_round_trip(coeffs in proptest::collection::vec(-2.0..2.0f64, 1..12)) {
                let g = Grid::new(3.0, 128).unwrap();
                let f: Vec<f64> = g.x.iter().map(|x| {
                    coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * PI * x / g.length).cos()).sum()
                }).collect();
                let s = mode_amplitudes(&f, &g, 20).unwrap();
                for (k, c) in coeffs.iter().enumerate() {
                    prop_assert!((s.amplitudes[k] - c).abs() < 1e-9);
                }
                // Parseval with the k = 0 weight convention
                let energy = 2.0 / g.length * g.integrate(&f.iter().map(|x| x * x).collect::<Vec<_>>());
                let parseval = 2.0 * s.amplitudes[0].powi(2) + s.amplitudes[1..].iter().map(|a| a * a).sum::<f64>();
                prop_assert!((energy - parseval).abs() < 1e-9 * energy.max(1.0));
            }

            #[test]
            fn steady_and_periodic_are_exclusive(amp in 0.0..1.0f64, period in 1.0..10.0f64) {
                let t: Vec<f64> = (0..5000).map(|i| i as f64 * 0.02).collect();
                let v: Vec<f64> = t.iter().map(|t| 1.0 + amp * (2.0 * PI * t / period).sin()).collect();
                let verdict = detect_period(&t, &v, &PeriodOptions::default());
                if amp == 0.0 {
                    prop_assert_eq!(verdict, PeriodVerdict::Steady);
                } else {
                    prop_assert!(!matches!(verdict, PeriodVerdict::Steady) || amp < 1e-8);
                }
            }
        }
    }
}
