//! Statistical references, dissimilarity scoring and score fusion.
//!
//! A reference holds per-feature mean/deviation statistics of a gallery plus
//! a calibration pair (theta, lambda) obtained by leave-one-out scoring of
//! the gallery against itself. Centered scores `(d - theta) / lambda` are
//! dimensionless dissimilarities where 0 marks the edge of the enrollment
//! distribution, which is what makes fixed thresholds such as 0.0 (accept)
//! and -0.1 (update) meaningful across users.

use crate::corpus::KeystrokeSample;
use crate::error::{Error, Result};

/// Additive guard on per-feature deviations (constant features).
pub const SIGMA_EPSILON: f64 = 1e-6;
/// Lower bound on the calibration scale (degenerate galleries).
pub const LAMBDA_FLOOR: f64 = 1e-6;
/// Half-width, in deviations, of the tolerance-interval scorer.
pub const TOLERANCE_WIDTH: f64 = 1.96;

/// Pluggable dissimilarity formula. Both scorers share the reference
/// statistics and the calibration contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMethod {
    /// Mean per-feature absolute deviation scaled by per-feature std.
    #[default]
    ScaledDeviation,
    /// Fraction of features outside `mu ± 1.96 sigma`.
    ToleranceInterval,
}

/// How scores from several sub-references collapse into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionRule {
    Mean,
    Min,
}

impl FusionRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionRule::Mean => "mean",
            FusionRule::Min => "min",
        }
    }
}

/// Ordered multiset of samples backing one sub-reference, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    samples: Vec<KeystrokeSample>,
    capacity_at_enrollment: usize,
}

impl Gallery {
    /// Wrap the enrollment samples; the initial size becomes the fixed
    /// capacity used by sliding-window updates.
    pub fn new(samples: Vec<KeystrokeSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty gallery".into()));
        }
        let dim = samples[0].features.len();
        for sample in &samples {
            if sample.features.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: sample.features.len(),
                });
            }
        }
        let capacity = samples.len();
        Ok(Self {
            samples,
            capacity_at_enrollment: capacity,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.samples[0].features.len()
    }

    pub fn capacity_at_enrollment(&self) -> usize {
        self.capacity_at_enrollment
    }

    pub fn samples(&self) -> &[KeystrokeSample] {
        &self.samples
    }

    pub(crate) fn append(&mut self, sample: KeystrokeSample) -> Result<()> {
        if sample.features.len() != self.dimension() {
            return Err(Error::Shape {
                expected: self.dimension(),
                got: sample.features.len(),
            });
        }
        self.samples.push(sample);
        Ok(())
    }

    pub(crate) fn evict_oldest(&mut self) {
        self.samples.remove(0);
    }
}

/// Per-feature statistics plus the leave-one-out calibration of a gallery.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    theta: f64,
    lambda: f64,
    method: ScoreMethod,
}

impl Reference {
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn method(&self) -> ScoreMethod {
        self.method
    }

    pub fn dimension(&self) -> usize {
        self.mu.len()
    }
}

// Running sums in anchor-shifted coordinates. The shift keeps the
// sum-of-squares variance stable under arbitrary feature translations.
struct ShiftedSums {
    anchor: Vec<f64>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: usize,
}

impl ShiftedSums {
    fn from_gallery(gallery: &Gallery) -> Self {
        let dim = gallery.dimension();
        let anchor = gallery.samples()[0].features.clone();
        let mut sum = vec![0.0; dim];
        let mut sumsq = vec![0.0; dim];
        for sample in gallery.samples() {
            for i in 0..dim {
                let d = sample.features[i] - anchor[i];
                sum[i] += d;
                sumsq[i] += d * d;
            }
        }
        Self {
            anchor,
            sum,
            sumsq,
            count: gallery.len(),
        }
    }

    // Population mean/std over all samples, in original coordinates.
    fn stats(&self) -> (Vec<f64>, Vec<f64>) {
        self.stats_without(None)
    }

    // Same, with one sample (shifted features) removed.
    fn stats_without(&self, left_out: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let dim = self.anchor.len();
        let k = match left_out {
            Some(_) => (self.count - 1) as f64,
            None => self.count as f64,
        };
        let mut mu = Vec::with_capacity(dim);
        let mut sigma = Vec::with_capacity(dim);
        for i in 0..dim {
            let (s, sq) = match left_out {
                Some(features) => {
                    let d = features[i] - self.anchor[i];
                    (self.sum[i] - d, self.sumsq[i] - d * d)
                }
                None => (self.sum[i], self.sumsq[i]),
            };
            let m = s / k;
            let var = (sq / k - m * m).max(0.0);
            mu.push(self.anchor[i] + m);
            sigma.push(var.sqrt());
        }
        (mu, sigma)
    }
}

fn raw_distance_to_stats(query: &[f64], mu: &[f64], sigma: &[f64], method: ScoreMethod) -> f64 {
    let n = mu.len() as f64;
    match method {
        ScoreMethod::ScaledDeviation => {
            let mut acc = 0.0;
            for i in 0..mu.len() {
                acc += (query[i] - mu[i]).abs() / (sigma[i] + SIGMA_EPSILON);
            }
            acc / n
        }
        ScoreMethod::ToleranceInterval => {
            let mut outside = 0usize;
            for i in 0..mu.len() {
                if (query[i] - mu[i]).abs() > TOLERANCE_WIDTH * sigma[i] {
                    outside += 1;
                }
            }
            outside as f64 / n
        }
    }
}

/// Build a reference from a gallery with the default scorer.
///
/// Statistics are the per-feature mean and population standard deviation.
/// Calibration scores every gallery sample against the reference built on
/// the remaining samples; theta is `mean + 2 std` of those leave-one-out
/// distances and lambda their standard deviation (floored at 1e-6).
pub fn build_reference(gallery: &Gallery) -> Result<Reference> {
    build_reference_with(gallery, ScoreMethod::default())
}

pub fn build_reference_with(gallery: &Gallery, method: ScoreMethod) -> Result<Reference> {
    if gallery.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "gallery of {} sample(s); need at least 2",
            gallery.len()
        )));
    }
    let sums = ShiftedSums::from_gallery(gallery);
    let (mu, sigma) = sums.stats();

    let mut loo = Vec::with_capacity(gallery.len());
    for sample in gallery.samples() {
        let (loo_mu, loo_sigma) = sums.stats_without(Some(&sample.features));
        loo.push(raw_distance_to_stats(
            &sample.features,
            &loo_mu,
            &loo_sigma,
            method,
        ));
    }
    let mean = loo.iter().sum::<f64>() / loo.len() as f64;
    let var = loo.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / loo.len() as f64;
    let std = var.max(0.0).sqrt();

    Ok(Reference {
        mu,
        sigma,
        theta: mean + 2.0 * std,
        lambda: std.max(LAMBDA_FLOOR),
        method,
    })
}

/// Raw dissimilarity between a query and a reference; 0 iff the query sits
/// exactly on the reference mean.
pub fn raw_distance(query: &KeystrokeSample, reference: &Reference) -> Result<f64> {
    if query.features.len() != reference.dimension() {
        return Err(Error::Shape {
            expected: reference.dimension(),
            got: query.features.len(),
        });
    }
    Ok(raw_distance_to_stats(
        &query.features,
        &reference.mu,
        &reference.sigma,
        reference.method,
    ))
}

/// Center a raw distance on the reference calibration: negative scores are
/// well inside the enrollment distribution, 0 is its calibrated edge.
pub fn centered_score(distance: f64, reference: &Reference) -> f64 {
    (distance - reference.theta) / reference.lambda
}

/// Raw distance and centering in one step.
pub fn score(query: &KeystrokeSample, reference: &Reference) -> Result<f64> {
    Ok(centered_score(raw_distance(query, reference)?, reference))
}

/// Collapse the per-sub-reference scores into one aggregated score.
pub fn fuse(scores: &[f64], rule: FusionRule) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Contract("cannot fuse an empty score set".into()));
    }
    Ok(match rule {
        FusionRule::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        FusionRule::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
    })
}
