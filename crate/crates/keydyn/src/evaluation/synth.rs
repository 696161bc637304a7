//! Synthetic corpus with controlled intra-class drift.
//!
//! Verification oracle for the adaptation machinery: when the drift
//! accumulated over sessions dwarfs the per-sample noise, a static reference
//! must start rejecting its own user while updating references keep up.

use crate::corpus::{Corpus, FeatureSchema, KeystrokeSample};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Generate `users` users over `sessions` sessions of `reps` samples each.
///
/// Every user gets a base timing vector (uniform in [0.8, 1.2] per feature)
/// and a random unit drift direction; session k samples are normal around
/// `base + (k-1) * drift_per_session * direction` with per-feature standard
/// deviation `noise_scale`, clamped at zero. Deterministic under `seed`.
pub fn generate_drift_corpus(
    users: usize,
    sessions: u32,
    reps: usize,
    dimension: usize,
    drift_per_session: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<Corpus> {
    if users == 0 || sessions == 0 || reps == 0 || dimension == 0 {
        return Err(Error::Config(
            "users, sessions, reps and dimension must all be at least 1".into(),
        ));
    }
    let schema = FeatureSchema::new((1..=dimension).map(|i| format!("f{i}")).collect())?;
    let mut rng = SplitMix64::new(seed);
    let mut samples = Vec::with_capacity(users * sessions as usize * reps);

    for user in 1..=users {
        let user_id = format!("u{user:03}");
        let base: Vec<f64> = (0..dimension).map(|_| rng.next_range(0.8, 1.2)).collect();
        let mut direction: Vec<f64> = (0..dimension).map(|_| rng.next_gaussian()).collect();
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm > 0.0 {
            for d in &mut direction {
                *d /= norm;
            }
        } else {
            direction[0] = 1.0;
        }

        for session in 1..=sessions {
            let offset = (session - 1) as f64 * drift_per_session;
            for rep in 1..=reps {
                let features: Vec<f64> = (0..dimension)
                    .map(|i| {
                        let center = base[i] + offset * direction[i];
                        (center + noise_scale * rng.next_gaussian()).max(0.0)
                    })
                    .collect();
                samples.push(KeystrokeSample {
                    user_id: user_id.clone(),
                    session_index: session,
                    rep_index: rep as u32,
                    features,
                });
            }
        }
    }
    Corpus::from_samples(schema, samples, false)
}
