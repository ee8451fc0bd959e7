//! Trajectory analysis: velocity envelopes with a bounded/growth verdict,
//! the `s ↦ s + τ(s)` iteration, and phase-portrait rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermi_ulam::validate_scale;
use crate::forcing::PlatePair;
use crate::record::{EventKind, TrajectoryRecord};

pub const MIN_WINDOW: usize = 8;
/// Second-half sup may exceed first-half sup by this factor and still count
/// as bounded.
pub const BOUNDED_RATIO: f64 = 1.05;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Lower quantile of the bootstrap slope distribution that must be positive.
pub const GROWTH_QUANTILE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BoundedEvidence,
    GrowthEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::BoundedEvidence => "bounded_evidence",
            Verdict::GrowthEvidence => "growth_evidence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub window_size: usize,
    pub window_sup: Vec<f64>,
    pub window_inf: Vec<f64>,
    pub global_sup: f64,
    pub first_half_sup: f64,
    pub second_half_sup: f64,
    /// Least-squares slope of window sups, per event.
    pub trend_slope: f64,
    /// 1st percentile of the bootstrap slope distribution, per event.
    pub slope_lower_bound: f64,
    pub verdict: Verdict,
}

/// Envelope of a record's post-collision speeds.
pub fn envelope(record: &TrajectoryRecord, window: usize, seed: u64) -> Result<EnvelopeReport> {
    envelope_of(&record.speeds(), window, seed)
}

/// Envelope of a bare speed sequence, for runs that keep only section points.
pub fn envelope_of(speeds: &[f64], window: usize, seed: u64) -> Result<EnvelopeReport> {
    if window < MIN_WINDOW || speeds.len() < 2 * window {
        return Err(Error::TooShort { events: speeds.len(), window });
    }
    let speeds: Vec<f64> = speeds.iter().map(|v| v.abs()).collect();
    let (window_sup, window_inf): (Vec<f64>, Vec<f64>) = speeds
        .chunks_exact(window)
        .map(|c| (c.iter().copied().fold(f64::MIN, f64::max), c.iter().copied().fold(f64::MAX, f64::min)))
        .unzip();
    let sup = |s: &[f64]| s.iter().copied().fold(f64::MIN, f64::max);
    let half = speeds.len() / 2;
    let first_half_sup = sup(&speeds[..half]);
    let second_half_sup = sup(&speeds[half..]);

    let idx: Vec<f64> = (0..window_sup.len()).map(|i| i as f64).collect();
    let trend_slope = ols_slope(&idx, &window_sup) / window as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = window_sup.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let (mut xs, mut ys) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for k in 0..n {
            let j = rng.random_range(0..n);
            xs[k] = idx[j];
            ys[k] = window_sup[j];
        }
        let s = ols_slope(&xs, &ys);
        slopes.push(if s.is_finite() { s } else { 0.0 });
    }
    slopes.sort_by(f64::total_cmp);
    let q = ((GROWTH_QUANTILE * BOOTSTRAP_RESAMPLES as f64).floor() as usize).min(slopes.len() - 1);
    let slope_lower_bound = slopes[q] / window as f64;

    let verdict = if second_half_sup <= BOUNDED_RATIO * first_half_sup {
        Verdict::BoundedEvidence
    } else if slope_lower_bound > 0.0 {
        Verdict::GrowthEvidence
    } else {
        Verdict::Inconclusive
    };
    Ok(EnvelopeReport {
        window_size: window,
        global_sup: first_half_sup.max(second_half_sup),
        window_sup,
        window_inf,
        first_half_sup,
        second_half_sup,
        trend_slope,
        slope_lower_bound,
        verdict,
    })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 { f64::NAN } else { sxy / sxx }
}

/// The increment function `τ` of the iteration `s ↦ s + τ(s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    /// `τ(s) = s²`
    Square,
    /// `τ(s) = s² + s³`
    CubicMix,
    /// `τ(s) = Σ c_j s^(j+2)`, so `τ(0) = τ′(0) = 0` by construction.
    Custom(Vec<f64>),
}

impl TauKind {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            TauKind::Square => s * s,
            TauKind::CubicMix => s * s + s * s * s,
            TauKind::Custom(c) => s * s * c.iter().rev().fold(0.0, |acc, cj| acc * s + cj),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRun {
    pub sequence: Vec<f64>,
    /// `partial_sums[k] = Σ_{j≤k} (−s_j)`
    pub partial_sums: Vec<f64>,
    /// Slope of partial sums against `ln k`; near 1 for harmonic growth.
    pub log_slope: f64,
    /// Exponent of a power-law fit of partial sums against `k`.
    pub growth_exponent: f64,
    pub diverged: bool,
}

/// Iterates `s_{k+1} = s_k + τ(s_k)` for `n` steps from `s0 < 0`. Divergence
/// means the partial sums passed `bound` while growing sub-linearly, with a
/// positive trend in `ln k`.
pub fn harmonic_iterate(tau: &TauKind, s0: f64, n: usize, bound: f64) -> Result<IterationRun> {
    if !(s0 < 0.0) {
        return Err(Error::LeftDomain { step: 0, s: s0 });
    }
    for i in 0..1024 {
        let s = s0 * (1.0 - i as f64 / 1024.0);
        if !(tau.eval(s) > 0.0) {
            return Err(Error::InvalidProfile(format!("τ({s}) is not positive on [s0, 0)")));
        }
    }
    let mut sequence = Vec::with_capacity(n + 1);
    let mut partial_sums = Vec::with_capacity(n + 1);
    let mut s = s0;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            s += tau.eval(s);
            if !(s < 0.0) || s < s0 {
                return Err(Error::LeftDomain { step: k, s });
            }
        }
        total += -s;
        sequence.push(s);
        partial_sums.push(total);
    }

    // Fit on log-spaced indices over the last decade-and-a-bit of the run.
    let lo = (n / 10).max(1);
    let picks: Vec<usize> = (0..=100)
        .map(|i| {
            let f = i as f64 / 100.0;
            ((lo as f64).ln() * (1.0 - f) + (n.max(lo) as f64).ln() * f).exp().round() as usize
        })
        .map(|k| k.clamp(lo, n.max(lo)))
        .collect();
    let lnk: Vec<f64> = picks.iter().map(|&k| (k as f64).ln()).collect();
    let sums: Vec<f64> = picks.iter().map(|&k| partial_sums[k.min(n)]).collect();
    let log_sums: Vec<f64> = sums.iter().map(|v| v.ln()).collect();
    let log_slope = ols_slope(&lnk, &sums);
    let growth_exponent = ols_slope(&lnk, &log_sums);
    let diverged = total > bound && log_slope > 0.0 && growth_exponent < 1.0;
    Ok(IterationRun { sequence, partial_sums, log_slope, growth_exponent, diverged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coordinates {
    Tv,
    Ty { l: f64 },
}

impl Coordinates {
    /// `(t, y = 2l/v)` coordinates with `l` checked against the plates.
    pub fn ty(l: f64, plates: &PlatePair) -> Result<Self> {
        validate_scale(l, plates).map(|l| Coordinates::Ty { l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortraitRow {
    pub trajectory_id: usize,
    pub event_index: usize,
    pub t_mod: f64,
    pub value: f64,
}

/// Section points of each record, one row per lower-plate impact.
pub fn phase_portrait(records: &[TrajectoryRecord], coords: Coordinates) -> Result<Vec<PortraitRow>> {
    let Some(first) = records.first() else { return Ok(Vec::new()) };
    if records.iter().any(|r| r.meta != first.meta) {
        return Err(Error::MixedScenario);
    }
    let period = first.meta.period;
    let mut rows = Vec::new();
    for (id, record) in records.iter().enumerate() {
        for (index, e) in record.events.iter().enumerate() {
            if e.kind != EventKind::PlateHit {
                continue;
            }
            for imp in &e.impacts {
                let Some(v) = imp.v_post else { continue };
                let value = match coords {
                    Coordinates::Tv => v,
                    Coordinates::Ty { l } => 2.0 * l / v,
                };
                rows.push(PortraitRow { trajectory_id: id, event_index: index, t_mod: e.time.rem_euclid(period), value });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::RecordMeta;

    #[test]
    fn constant_speeds_are_bounded() {
        let r = envelope_of(&vec![3.0; 400], 20, 0).unwrap();
        assert_eq!(r.verdict, Verdict::BoundedEvidence);
        assert_eq!(r.trend_slope, 0.0);
    }

    #[test]
    fn arithmetic_growth_is_detected() {
        let speeds: Vec<f64> = (0..400).map(|n| 3.0 + 2.0 * n as f64).collect();
        let r = envelope_of(&speeds, 20, 0).unwrap();
        assert_eq!(r.verdict, Verdict::GrowthEvidence);
        assert!((r.trend_slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_flat_sequence_is_not_growth() {
        let speeds: Vec<f64> = (0..400).map(|n| 5.0 + ((n * 7919) % 13) as f64 * 0.01 * (n as f64 / 400.0)).collect();
        let r = envelope_of(&speeds, 20, 1).unwrap();
        assert_ne!(r.verdict, Verdict::GrowthEvidence);
    }

    #[test]
    fn short_records_are_rejected() {
        assert!(matches!(envelope_of(&[1.0; 15], 8, 0), Err(Error::TooShort { .. })));
        assert!(matches!(envelope_of(&[1.0; 100], 4, 0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn verdicts_are_seed_stable() {
        let speeds: Vec<f64> = (0..300).map(|n| 1.0 + (n as f64).sqrt()).collect();
        assert_eq!(envelope_of(&speeds, 10, 42).unwrap(), envelope_of(&speeds, 10, 42).unwrap());
    }

    #[test]
    fn square_iteration_first_steps() {
        let run = harmonic_iterate(&TauKind::Square, -0.5, 2, 1.0).unwrap();
        assert_eq!(run.sequence, vec![-0.5, -0.25, -0.1875]);
        assert_eq!(run.partial_sums[1], 0.75);
    }

    #[test]
    fn square_iteration_product_identity() {
        let run = harmonic_iterate(&TauKind::Square, -0.3, 1000, 1.0).unwrap();
        let mut prod = -0.3;
        for (k, s) in run.sequence.iter().enumerate().skip(1) {
            prod *= 1.0 + run.sequence[k - 1];
            assert!((s - prod).abs() <= 1e-12 * s.abs());
        }
    }

    #[test]
    fn square_iteration_diverges_past_eight() {
        let run = harmonic_iterate(&TauKind::Square, -0.5, 10_000, 8.0).unwrap();
        assert!(*run.partial_sums.last().unwrap() > 8.0);
        assert!(run.diverged);
        assert!((run.log_slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn cubic_mix_and_custom_kinds() {
        assert_eq!(TauKind::CubicMix.eval(-0.5), 0.125);
        assert_eq!(TauKind::Custom(vec![1.0, 1.0]).eval(-0.5), 0.125);
        let err = harmonic_iterate(&TauKind::Custom(vec![-1.0]), -0.5, 10, 1.0);
        assert!(matches!(err, Err(Error::InvalidProfile(_))));
        assert!(matches!(harmonic_iterate(&TauKind::Square, 0.5, 10, 1.0), Err(Error::LeftDomain { .. })));
        // s² + s³ stays positive only above −1; starting at −1.5 fails validation.
        assert!(harmonic_iterate(&TauKind::CubicMix, -1.5, 10, 1.0).is_err());
    }

    #[test]
    fn mixed_records_are_refused() {
        let a = TrajectoryRecord::new(RecordMeta { model: "one_ball".into(), period: 1.0, g: 2.0 });
        let b = TrajectoryRecord::new(RecordMeta { model: "one_ball".into(), period: 2.0, g: 2.0 });
        assert_eq!(phase_portrait(&[a, b], Coordinates::Tv), Err(Error::MixedScenario));
    }
}
