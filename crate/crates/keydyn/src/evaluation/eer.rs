//! Equal error rate over a threshold sweep with linear interpolation.
//!
//! Scores follow the dissimilarity convention: genuine queries score lower.
//! At a threshold `t`, `FMR(t)` is the fraction of impostor scores `<= t`
//! and `FNMR(t)` the fraction of genuine scores `> t`. Both are step
//! functions of `t`; the EER is their crossing, interpolated linearly
//! between the two adjacent empirical thresholds when they do not meet
//! exactly on one.

use crate::error::{Error, Result};

/// EER value together with the (interpolated) threshold it occurs at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub rate: f64,
    pub threshold: f64,
}

/// Interpolated equal error rate; see [`eer_point`].
pub fn eer(genuine_scores: &[f64], impostor_scores: &[f64]) -> Result<f64> {
    eer_point(genuine_scores, impostor_scores).map(|p| p.rate)
}

/// Sweep all distinct pooled scores as candidate thresholds and locate the
/// FMR/FNMR crossing.
pub fn eer_point(genuine_scores: &[f64], impostor_scores: &[f64]) -> Result<EerPoint> {
    if genuine_scores.is_empty() || impostor_scores.is_empty() {
        return Err(Error::Contract(
            "EER needs at least one genuine and one impostor score".into(),
        ));
    }
    let mut genuine = genuine_scores.to_vec();
    let mut impostor = impostor_scores.to_vec();
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = genuine.iter().chain(impostor.iter()).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let n_g = genuine.len() as f64;
    let n_i = impostor.len() as f64;

    // Below every score: FMR 0, FNMR 1. The virtual start point lets the
    // crossing be interpolated even when it happens before the first
    // empirical threshold (e.g. identical score sets).
    let mut prev_fmr = 0.0;
    let mut prev_fnmr = 1.0;
    let mut prev_t = f64::NEG_INFINITY;
    let mut gen_leq = 0usize; // genuine scores <= current threshold
    let mut imp_leq = 0usize;

    for &t in &thresholds {
        while gen_leq < genuine.len() && genuine[gen_leq] <= t {
            gen_leq += 1;
        }
        while imp_leq < impostor.len() && impostor[imp_leq] <= t {
            imp_leq += 1;
        }
        let fmr = imp_leq as f64 / n_i;
        let fnmr = (genuine.len() - gen_leq) as f64 / n_g;
        let diff = fmr - fnmr;
        if diff >= 0.0 {
            if diff == 0.0 {
                return Ok(EerPoint { rate: fmr, threshold: t });
            }
            let prev_diff = prev_fmr - prev_fnmr; // < 0 here
            let w = -prev_diff / (diff - prev_diff);
            let rate = prev_fmr + w * (fmr - prev_fmr);
            let threshold = if prev_t.is_finite() {
                prev_t + w * (t - prev_t)
            } else {
                t
            };
            return Ok(EerPoint { rate, threshold });
        }
        prev_fmr = fmr;
        prev_fnmr = fnmr;
        prev_t = t;
    }
    // At the maximum pooled score FMR = 1 and FNMR = 0, so the sweep always
    // crosses.
    unreachable!("FMR(t_max) - FNMR(t_max) = 1");
}
